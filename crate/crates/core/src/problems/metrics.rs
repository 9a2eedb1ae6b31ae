use super::ProblemError;
use crate::grid::GridSpec;

/// `max |U - u| / max |u|` over the nodes not in `exclude`.
pub fn rel_linf_error(values: &[f64], exact: &[f64], exclude: &[usize]) -> Result<f64, ProblemError> {
    if values.len() != exact.len() {
        return Err(ProblemError::Input(format!("field sizes differ: {} vs {}", values.len(), exact.len())));
    }
    let mut skip = vec![false; values.len()];
    for &i in exclude {
        if let Some(s) = skip.get_mut(i) {
            *s = true;
        }
    }
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (i, (u, e)) in values.iter().zip(exact).enumerate() {
        if skip[i] {
            continue;
        }
        num = num.max((u - e).abs());
        den = den.max(e.abs());
    }
    if den == 0.0 {
        return Err(ProblemError::Input("exact field is zero on every included node".into()));
    }
    Ok(num / den)
}

/// Least-squares fit of `y = C x^p` in log-log space; returns `(C, p)`.
pub fn power_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), ProblemError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(ProblemError::Input("power fit needs at least two (x, y) pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(ProblemError::Input("power fit needs positive finite data".into()));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ProblemError::Input("power fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    Ok(((my - p * mx).exp(), p))
}

/// Restricts a fine-grid field to the nodes of a coarser grid over the same
/// box. `(N_fine - 1)` must be a multiple of `(N_coarse - 1)` on every axis.
pub fn downsample(fine: &GridSpec, values: &[f64], coarse_n: &[usize]) -> Result<(GridSpec, Vec<f64>), ProblemError> {
    if coarse_n.len() != fine.dim || values.len() != fine.num_nodes() {
        return Err(ProblemError::Input("downsample: shape mismatch".into()));
    }
    let mut stride = [1usize; 3];
    for k in 0..fine.dim {
        let (nf, nc) = (fine.shape[k], coarse_n[k]);
        if nc < 2 || (nf - 1) % (nc - 1) != 0 {
            return Err(ProblemError::Input(format!("cannot downsample {nf} nodes to {nc} along axis {k}")));
        }
        stride[k] = (nf - 1) / (nc - 1);
    }
    if (0..fine.dim).any(|k| stride[k] != stride[0]) {
        return Err(ProblemError::Input("downsample needs the same ratio on every axis".into()));
    }
    let coarse = GridSpec::new(fine.dim, coarse_n.to_vec(), fine.h * stride[0] as f64, fine.origin.clone())?;
    let out = (0..coarse.num_nodes())
        .map(|i| {
            let c = coarse.unravel3(i);
            values[fine.linear3([c[0] * stride[0], c[1] * stride[1], c[2] * stride[2]])]
        })
        .collect();
    Ok((coarse, out))
}
