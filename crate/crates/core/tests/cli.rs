use std::path::Path;
use std::process::{Command, Output};

use olim::grid::io::{read_grid, write_grid};
use olim::grid::{GridSpec, SlownessGrid};

fn olim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_olim")).args(args).env_remove("EIK_JOBS").output().expect("run olim")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_constant_distance_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.f64");
    let o = olim(&[
        "solve",
        "--problem",
        "const",
        "--dim",
        "3",
        "--n",
        "33",
        "--stencil",
        "olim6",
        "--quad",
        "rhr",
        "--source",
        "0,0,0",
        "--factor-radius",
        "1.0",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (spec, u) = read_grid(&out).unwrap();
    assert_eq!(u.len(), 33 * 33 * 33);
    let (node, _) = spec.nearest_node(&[1.0, 0.0, 0.0]).unwrap();
    assert!((u[node] - 1.0).abs() <= 1e-3, "{}", u[node]);
    let stats = json(&dir.path().join("u.f64.stats.json"));
    assert_eq!(stats["stats"]["accepted"], 33 * 33 * 33);
    assert!(stats["error"].as_f64().unwrap() < 0.05);
    assert_eq!(stats["sources"][0]["node"], spec.nearest_node(&[0.0, 0.0, 0.0]).unwrap().0);
}

#[test]
fn solve_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = olim(&["solve", "--problem", "s1", "--dim", "2", "--n", "65", "--stencil", "olim8", "--out", s(&out)]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.f64"), run("b.f64"));
}

#[test]
fn missing_sidecar_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.f64");
    std::fs::write(&file, [0u8; 32]).unwrap();
    let o = olim(&["solve", "--slowness-file", s(&file), "--source", "0,0", "--out", s(&dir.path().join("u"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sidecar not found"));
}

#[test]
fn bad_flags_exit_2() {
    for args in [
        &["solve", "--problem", "s9", "--out", "x"][..],
        &["solve", "--problem", "s1", "--slowness-file", "f", "--out", "x"],
        &["converge", "--problem", "s1", "--ns", "0", "--config", "olim6_rhr"],
        &["converge", "--problem", "s1", "--ns", "17", "--config", "fmm"],
        &["compare", "--problem", "s1", "--a", "olim6_rhr"],
    ] {
        assert_eq!(olim(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn slowness_file_and_extrusion() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.f64");
    let spec = GridSpec::new(2, vec![21, 11], 0.1, vec![0.0, 0.0]).unwrap();
    let layered = SlownessGrid::from_fn(spec.clone(), |x| if x[1] < 0.5 { 1.0 } else { 2.0 }).unwrap();
    write_grid(&model, &spec, layered.values()).unwrap();
    let model3 = dir.path().join("model3.f64");
    let o = olim(&["extrude", "--input", s(&model), "--ny", "7", "--out", s(&model3)]);
    assert!(o.status.success());
    let (spec3, s3) = read_grid(&model3).unwrap();
    assert_eq!(spec3.shape, vec![21, 7, 11]);
    assert_eq!(s3.len(), 21 * 7 * 11);

    let out = dir.path().join("u3.f64");
    let o = olim(&[
        "solve",
        "--slowness-file",
        s(&model3),
        "--source",
        "1,0.3,0",
        "--stencil",
        "olim3d",
        "--no-factor",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, u) = read_grid(&out).unwrap();
    assert!(u.iter().all(|v| v.is_finite() && *v >= 0.0));
    // Straight down the fast layer: travel time equals distance.
    let node = spec3.nearest_node(&[1.0, 0.3, 0.4]).unwrap().0;
    assert!((u[node] - 0.4).abs() < 1e-12, "{}", u[node]);
    assert!(stats_exists(&out));

    // 2D sources do not fit the extruded 3D grid.
    let o = olim(&["solve", "--slowness-file", s(&model3), "--source", "1,0", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = olim(&["extrude", "--input", s(&model3), "--ny", "3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

fn stats_exists(out: &Path) -> bool {
    let mut p = out.as_os_str().to_owned();
    p.push(".stats.json");
    Path::new(&p).exists()
}

#[test]
fn snapping_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.f64");
    let o = olim(&["solve", "--problem", "constant", "--dim", "2", "--n", "9", "--source", "0.1,0", "--out", s(&out)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: source"));
    let o = olim(&["solve", "--problem", "constant", "--dim", "2", "--n", "9", "--source", "0.25,0", "--out", s(&out)]);
    assert!(o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn converge_writes_csv_with_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let o = olim(&[
        "converge",
        "--problem",
        "s1",
        "--dim",
        "3",
        "--ns",
        "17,33,65",
        "--config",
        "olim26_mp0",
        "--jobs",
        "2",
        "--out",
        s(&csv),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "config,N,h,error,seconds,updates_attempted,updates_skipped,heap_ops");
    let rows: Vec<Vec<&str>> =
        lines[1..].iter().filter(|l| !l.starts_with('#')).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().map(|r| r[1]).collect::<Vec<_>>(), ["17", "33", "65"]);
    let errs: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    // 17 significant digits.
    assert!(rows[0][3].split('e').next().unwrap().len() >= 18);
    let fit = lines.iter().find(|l| l.starts_with("# fit")).unwrap();
    assert!(fit.contains("C_E,beta"));

    // EIK_JOBS supplies the default worker count.
    let o = Command::new(env!("CARGO_BIN_EXE_olim"))
        .args(["converge", "--problem", "s2", "--dim", "2", "--ns", "9,17", "--config", "olim8_rhr"])
        .env("EIK_JOBS", "0x")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_against_fmm_and_skipping() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.json");
    let o = olim(&[
        "compare",
        "--problem",
        "constant",
        "--dim",
        "3",
        "--n",
        "33",
        "--no-factor",
        "--a",
        "olim6_rhr",
        "--b",
        "fmm",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert!(r["max_rel_diff"].as_f64().unwrap() <= 1e-12);
    assert!(r["a"]["stats"]["heap_ops"].as_u64().unwrap() > 0);

    let o = olim(&[
        "compare",
        "--problem",
        "s1",
        "--dim",
        "3",
        "--n",
        "17",
        "--a",
        "olim3d_mp0",
        "--b",
        "olim3d_mp0_nokkt",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let r = json(&out);
    assert!(r["max_rel_diff"].as_f64().unwrap() <= 1e-12);
    assert!(r["a"]["stats"]["skipped_kkt"].as_u64().unwrap() > 0);
    assert_eq!(r["b"]["stats"]["skipped_kkt"].as_u64().unwrap(), 0);

    let o = olim(&[
        "compare",
        "--problem",
        "s2",
        "--dim",
        "3",
        "--n",
        "65",
        "--no-factor",
        "--a",
        "olim26_mp0",
        "--b",
        "olim6_rhr",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let r = json(&out);
    assert!(r["a"]["error"].as_f64().unwrap() < r["b"]["error"].as_f64().unwrap());
}

#[test]
fn compare_files_shape_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.f64");
    let b = dir.path().join("b.f64");
    write_grid(&a, &GridSpec::cube(2, 3, 0.0, 1.0).unwrap(), &[1.0; 9]).unwrap();
    write_grid(&b, &GridSpec::cube(2, 4, 0.0, 1.0).unwrap(), &[1.0; 16]).unwrap();
    let fa = format!("file:{}", s(&a));
    let fb = format!("file:{}", s(&b));
    assert_eq!(olim(&["compare", "--a", &fa, "--b", &fb]).status.code(), Some(2));
    let o = olim(&["compare", "--a", &fa, "--b", &fa]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["max_rel_diff"].as_f64().unwrap(), 0.0);
}
