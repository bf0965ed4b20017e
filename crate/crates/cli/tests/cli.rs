use std::fs;
use std::process::{Command, Output};

fn wavelab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wavelab"));
    cmd.args(args).env_remove("WAVELAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn malformed_config_exits_2_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(
        &cfg,
        "run.experiment = coupled\ngrid.dim = 2\nspeed.profile = constant\nsource.recipe = zero\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = wavelab(
        &["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.h"));
    assert!(!out.exists());

    let o = wavelab(&["validate", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unstable_time_step_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("fast.cfg");
    fs::write(
        &cfg,
        "run.experiment = coupled\ngrid.dim = 2\ngrid.h = 0.0625\ngrid.stability_factor = 1.2\nspeed.profile = constant\nsource.recipe = zero\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = wavelab(
        &["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn parametrix_sweep_writes_one_row_per_epsilon() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "run.experiment = parametrix-sweep\ngrid.dim = 2\ngrid.h = 0.0625\nspeed.profile = herglotz-bump\nsource.recipe = gaussian-pulse\n",
    )
    .unwrap();
    assert_eq!(
        wavelab(&["validate", cfg.to_str().unwrap()], &[])
            .status
            .code(),
        Some(0)
    );
    let out = tmp.path().join("out");
    let o = wavelab(
        &["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[("WAVELAB_THREADS", "2")],
    );
    let csv = fs::read_to_string(out.join("parametrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(csv.starts_with("epsilon,err_norm,ratio,slope_window\n"));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout), summary);
    assert!(out.join("config.txt").exists());
    assert!(matches!(o.status.code(), Some(0) | Some(5)));
}

#[test]
fn blow_up_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("blow.cfg");
    fs::write(
        &cfg,
        "run.experiment = coupled\nrun.epsilon = 0.5\ngrid.dim = 1\ngrid.h = 0.03125\ngrid.t_final = 4\nspeed.profile = constant\nsource.recipe = standing-mode\nsource.amplitude = 1e6\nsource.normalize = false\n",
    )
    .unwrap();
    let o = wavelab(
        &[
            "run",
            cfg.to_str().unwrap(),
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
