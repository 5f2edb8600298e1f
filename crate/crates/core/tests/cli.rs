use std::fs;
use std::process::Command;

fn wgqed() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wgqed"))
}

const CONFIG: &str = r#"
model = "spectrum-me"
[layout]
gamma_m = 10.0
omega = 0.5
[grid]
lo = -3.0
hi = 3.0
points = 301
units = "g"
[me]
t_max = 20.0
"#;

#[test]
fn invalid_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, CONFIG.replace("omega = 0.5", "omega = 0.5\ngamma_x = 2.0")).unwrap();
    for sub in ["validate", "run"] {
        let out = wgqed().arg(sub).arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{sub}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("gamma_x"));
    }
}

#[test]
fn physics_error_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dark.toml");
    // undriven in-phase register: dark states make the steady state non-unique
    fs::write(&path, "model = \"spectrum-me\"\n[layout]\ngamma_m = 2.0\nphi_m1_p = 0.0\nphi_m2_p = 0.0\nphi_m1_m2 = 0.0\n").unwrap();
    let out = wgqed().arg("run").arg(&path).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_is_byte_identical_on_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("me.toml");
    fs::write(&path, CONFIG).unwrap();
    for k in 0..2 {
        let out = wgqed().arg("run").arg(&path).arg("--out").arg(dir.path().join(format!("o{k}"))).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["spectrum.csv", "peaks.csv", "populations.csv", "manifest.json"] {
        let a = fs::read(dir.path().join("o0").join(f)).unwrap();
        let b = fs::read(dir.path().join("o1").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let peaks = fs::read_to_string(dir.path().join("o0/peaks.csv")).unwrap();
    assert_eq!(peaks.lines().count(), 6, "{peaks}");
}

#[test]
fn sweep_writes_points_and_combined_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("me.toml");
    fs::write(&path, CONFIG).unwrap();
    let out = wgqed()
        .env("WGQED_WORKERS", "2")
        .args(["sweep", path.to_str().unwrap(), "--axis", "layout.omega", "--values", "0.1,0.2,0.3,0.4,0.5", "--out"])
        .arg(dir.path().join("s"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let combined = fs::read_to_string(dir.path().join("s/combined_spectrum.csv")).unwrap();
    assert!(combined.starts_with("layout.omega,omega_over_gp,omega_over_g,S_total,"));
    assert_eq!(combined.lines().count(), 1 + 5 * 301);
    let dirs = fs::read_dir(dir.path().join("s")).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count();
    assert_eq!(dirs, 5);

    let bad = wgqed().args(["sweep", path.to_str().unwrap(), "--axis", "grid.units", "--values", "1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn presets_list_and_poles_preset() {
    let out = wgqed().args(["presets", "list"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["fig2", "fig3a", "gamma-ratio", "fig7b", "fig8", "fig9"] {
        assert!(text.contains(name), "{name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let out = wgqed().args(["run", "--preset", "fig2", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let poles = fs::read_to_string(dir.path().join("poles.csv")).unwrap();
    assert!(poles.starts_with("tau_gamma_p,re_pole_over_g,im_pole_over_g,branch_id"));
    assert_eq!(poles.lines().count(), 1 + 2 * 101);
}

#[test]
fn mps_run_checkpoints_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = |steps: usize, ck: bool| {
        format!(
            "model = \"spectrum-mps\"\n[layout]\ngamma_m = 2.0\nomega = 0.5\n[mps]\ntau_m = 0.05\nn_steps = {steps}\nt_cor = 0.5\n[grid]\npoints = 101\n[output]\ncheckpoint = {ck}\n"
        )
    };
    fs::write(dir.path().join("a.toml"), cfg(60, true)).unwrap();
    fs::write(dir.path().join("b.toml"), cfg(120, false)).unwrap();
    let a = wgqed().arg("run").arg(dir.path().join("a.toml")).arg("--out").arg(dir.path().join("a")).output().unwrap();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = wgqed()
        .arg("run")
        .arg(dir.path().join("b.toml"))
        .arg("--out")
        .arg(dir.path().join("b"))
        .arg("--resume")
        .arg(dir.path().join("a/state.mps"))
        .output()
        .unwrap();
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let probs = fs::read_to_string(dir.path().join("b/probabilities.csv")).unwrap();
    assert!(probs.starts_with("tau_gamma_p,P0,P1,P2"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["diagnostics"]["steps"], 120);
}
