//! Uniform rectilinear grids, cached slowness fields and node states.
//!
//! Two-dimensional grids are stored as three-dimensional grids with a single
//! node along the last axis, so every update works with 3-vectors. The public
//! shape and coordinates still report the declared dimension.

pub mod io;
pub mod stencil;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use stencil::{
    bottom_up_candidates, enumerate_top_down_simplexes, GroupSelection, Offset, Simplex, Stencil, StencilKind,
    UpdateGroup,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("index {index:?} out of bounds for shape {shape:?}")]
    OutOfBounds { index: Vec<usize>, shape: Vec<usize> },
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("slowness at node {index} is {value}, must be finite and positive")]
    NonPositiveSlowness { index: usize, value: f64 },
    #[error("expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Geometry of a uniform grid: `dim` axes, `shape[k]` nodes per axis,
/// spacing `h` and the physical coordinate of node zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
}

impl GridSpec {
    pub fn new(dim: usize, shape: Vec<usize>, h: f64, origin: Vec<f64>) -> Result<Self, GridError> {
        let spec = GridSpec { dim, shape, h, origin };
        spec.validate()?;
        Ok(spec)
    }

    /// Cube `[lo, hi]^dim` discretized into `n` nodes per axis.
    pub fn cube(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Self, GridError> {
        if n < 2 {
            return Err(GridError::InvalidSpec(format!("need at least 2 nodes per axis, got {n}")));
        }
        if !(hi > lo) {
            return Err(GridError::InvalidSpec(format!("empty interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (n - 1) as f64;
        GridSpec::new(dim, vec![n; dim], h, vec![lo; dim])
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(GridError::InvalidSpec(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if self.shape.len() != self.dim || self.origin.len() != self.dim {
            return Err(GridError::InvalidSpec("shape/origin length must equal dim".into()));
        }
        if self.shape.iter().any(|&n| n < 2) {
            return Err(GridError::InvalidSpec(format!("all axes need >= 2 nodes, got {:?}", self.shape)));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(GridError::InvalidSpec(format!("spacing must be positive, got {}", self.h)));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(GridError::InvalidSpec("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.shape.iter().product()
    }

    /// Shape padded to three axes.
    pub fn shape3(&self) -> [usize; 3] {
        let mut s = [1; 3];
        s[..self.dim].copy_from_slice(&self.shape);
        s
    }

    pub fn origin3(&self) -> [f64; 3] {
        let mut o = [0.0; 3];
        o[..self.dim].copy_from_slice(&self.origin);
        o
    }

    /// Row-major linear index (last axis fastest).
    #[inline]
    pub fn linear3(&self, idx: [usize; 3]) -> usize {
        let s = self.shape3();
        (idx[0] * s[1] + idx[1]) * s[2] + idx[2]
    }

    pub fn linear(&self, index: &[usize]) -> Result<usize, GridError> {
        self.check_index(index)?;
        let mut idx = [0; 3];
        idx[..self.dim].copy_from_slice(index);
        Ok(self.linear3(idx))
    }

    #[inline]
    pub fn unravel3(&self, linear: usize) -> [usize; 3] {
        let s = self.shape3();
        [linear / (s[1] * s[2]), (linear / s[2]) % s[1], linear % s[2]]
    }

    pub fn unravel(&self, linear: usize) -> Vec<usize> {
        self.unravel3(linear)[..self.dim].to_vec()
    }

    fn check_index(&self, index: &[usize]) -> Result<(), GridError> {
        if index.len() != self.dim || index.iter().zip(&self.shape).any(|(&i, &n)| i >= n) {
            return Err(GridError::OutOfBounds { index: index.to_vec(), shape: self.shape.clone() });
        }
        Ok(())
    }

    /// Physical coordinate `origin + h * index`.
    pub fn node_coord(&self, index: &[usize]) -> Result<Vec<f64>, GridError> {
        self.check_index(index)?;
        Ok(index.iter().zip(&self.origin).map(|(&i, &o)| o + self.h * i as f64).collect())
    }

    #[inline]
    pub fn coord3(&self, linear: usize) -> [f64; 3] {
        let idx = self.unravel3(linear);
        let o = self.origin3();
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = o[k] + self.h * idx[k] as f64;
        }
        x
    }

    /// Inverse of [`GridSpec::node_coord`] for coordinates that lie on nodes.
    pub fn node_index(&self, coord: &[f64]) -> Result<Vec<usize>, GridError> {
        let (idx, _) = self.nearest_node(coord)?;
        Ok(self.unravel(idx))
    }

    /// Nearest node to a physical point and the distance to it.
    pub fn nearest_node(&self, coord: &[f64]) -> Result<(usize, f64), GridError> {
        if coord.len() != self.dim {
            return Err(GridError::InvalidSpec(format!("point has {} components, grid is {}D", coord.len(), self.dim)));
        }
        let mut index = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let t = ((coord[k] - self.origin[k]) / self.h).round();
            if t < 0.0 || t >= self.shape[k] as f64 || !t.is_finite() {
                return Err(GridError::OutOfBounds { index: vec![t.max(0.0) as usize], shape: self.shape.clone() });
            }
            index.push(t as usize);
        }
        let x = self.node_coord(&index)?;
        let dist = x.iter().zip(coord).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Ok((self.linear(&index)?, dist))
    }

    /// Neighbor of `linear` at integer offset, or `None` when out of bounds.
    #[inline]
    pub fn offset_node(&self, idx: [usize; 3], off: Offset) -> Option<usize> {
        let s = self.shape3();
        let mut out = [0usize; 3];
        for k in 0..3 {
            let v = idx[k] as isize + off[k] as isize;
            if v < 0 || v >= s[k] as isize {
                return None;
            }
            out[k] = v as usize;
        }
        Some(self.linear3(out))
    }

    /// Length of the bounding-box diagonal.
    pub fn diameter(&self) -> f64 {
        self.shape.iter().map(|&n| (self.h * (n - 1) as f64).powi(2)).sum::<f64>().sqrt()
    }
}

/// Per-node slowness sampled once on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SlownessGrid {
    spec: GridSpec,
    s: Vec<f64>,
}

impl SlownessGrid {
    pub fn new(spec: GridSpec, s: Vec<f64>) -> Result<Self, GridError> {
        spec.validate()?;
        if s.len() != spec.num_nodes() {
            return Err(GridError::SizeMismatch { expected: spec.num_nodes(), got: s.len() });
        }
        if let Some((index, &value)) = s.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(GridError::NonPositiveSlowness { index, value });
        }
        Ok(SlownessGrid { spec, s })
    }

    /// Samples `f` at every node coordinate.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self, GridError> {
        let s = (0..spec.num_nodes())
            .map(|i| {
                let x = spec.coord3(i);
                f(&x[..spec.dim])
            })
            .collect();
        SlownessGrid::new(spec, s)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Result<Self, GridError> {
        let n = spec.num_nodes();
        SlownessGrid::new(spec, vec![value; n])
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    #[inline]
    pub fn at(&self, linear: usize) -> f64 {
        self.s[linear]
    }

    /// Repeats a 2D model `ny` times along a new middle axis: `(nx, nz)` becomes
    /// `(nx, ny, nz)` with `s(x, y, z) = s(x, z)`.
    pub fn extrude(&self, ny: usize) -> Result<SlownessGrid, GridError> {
        if self.spec.dim != 2 {
            return Err(GridError::InvalidSpec("only 2D grids can be extruded".into()));
        }
        let [nx, nz] = [self.spec.shape[0], self.spec.shape[1]];
        let spec =
            GridSpec::new(3, vec![nx, ny, nz], self.spec.h, vec![self.spec.origin[0], 0.0, self.spec.origin[1]])?;
        let mut s = Vec::with_capacity(nx * ny * nz);
        for i in 0..nx {
            for _ in 0..ny {
                s.extend_from_slice(&self.s[i * nz..(i + 1) * nz]);
            }
        }
        SlownessGrid::new(spec, s)
    }
}

/// Marching state of a node. Transitions only go `Far -> Trial -> Valid`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[repr(u8)]
pub enum NodeState {
    #[default]
    Far = 0,
    Trial = 1,
    Valid = 2,
}
