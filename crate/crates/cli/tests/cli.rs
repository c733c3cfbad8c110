use std::process::{Command, Output};

fn piqsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piqsim"))
        .args(args)
        .env_remove("PIQSIM_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parse a CSV with a header into (header, rows of cells).
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = table(text);
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn evolve_two_atom_superradiance() {
    let text = stdout(&piqsim(&[
        "evolve",
        "--n",
        "2",
        "--dgamma",
        "0",
        "--initial",
        "fully_excited",
    ]));
    let (header, _) = table(&text);
    assert_eq!(header, ["t", "intensity", "jz", "trace"]);
    let t = column(&text, "t");
    let i = column(&text, "intensity");
    assert_eq!(t.len(), 201);
    for (t, i) in t.iter().zip(&i) {
        let exact = 2.0 * (-2.0 * t).exp() * (1.0 + 2.0 * t);
        assert!((i - exact).abs() < 1e-6, "t={t}: {i} vs {exact}");
    }
}

#[test]
fn evolve_independent_emission() {
    let text = stdout(&piqsim(&[
        "evolve",
        "--n",
        "30",
        "--dgamma",
        "1",
        "--initial",
        "fully_excited",
    ]));
    for (t, i) in column(&text, "t").iter().zip(column(&text, "intensity")) {
        assert!((i - 30.0 * (-t).exp()).abs() < 1e-6, "t={t}");
    }
}

#[test]
fn evolve_subradiant_start_and_populations() {
    let text = stdout(&piqsim(&[
        "evolve",
        "--n",
        "4",
        "--dgamma",
        "0.3",
        "--initial",
        "dicke:2,-2",
        "--populations",
    ]));
    let i = column(&text, "intensity");
    assert!((i[0] - 0.3).abs() < 1e-12);
    let (header, rows) = table(&text);
    assert_eq!(header.len(), 4 + 9);
    assert!(header.contains(&"p_J2_M-2".to_string()));
    let p = column(&text, "p_J2_M-2");
    // the J = 1 block has multiplicity 3
    assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(rows.len(), 201);
}

#[test]
fn sweep_rows_are_ordered_and_monotone() {
    let text = stdout(&piqsim(&["sweep", "--n", "5,10", "--dgamma", "0:1:0.1"]));
    let (header, rows) = table(&text);
    assert_eq!(
        header,
        ["N", "gamma", "dgamma", "ddd", "A_I", "t_I", "emitted"]
    );
    assert_eq!(rows.len(), 22);
    let ns = column(&text, "N");
    let dg = column(&text, "dgamma");
    let a = column(&text, "A_I");
    for k in 0..22 {
        assert_eq!(ns[k], if k < 11 { 5.0 } else { 10.0 });
        assert!((dg[k] - (k % 11) as f64 / 10.0).abs() < 1e-12);
        if k % 11 != 0 {
            assert!(a[k] <= a[k - 1], "row {k}");
        }
        if ns[k] == 5.0 && dg[k] >= 0.5 {
            assert_eq!(a[k], 0.0, "dgamma = {}", dg[k]);
        }
    }
    assert!(a[0] > 0.0 && a[11] > 0.0);
}

#[test]
fn sweep_dicke_pulse_height() {
    let text = stdout(&piqsim(&["sweep", "--n", "30", "--dgamma", "0"]));
    let a = column(&text, "A_I")[0];
    let t = column(&text, "t_I")[0];
    assert!((a - 153.103_060_4).abs() < 1e-4, "{a}");
    assert!((t - 0.117_192_787).abs() < 1e-5, "{t}");
    let ratio = a / 225.0;
    assert!((ratio - 0.68).abs() < 0.01, "{ratio}");
}

#[test]
fn outputs_are_reproducible() {
    let args = ["sweep", "--n", "3:8:1", "--dgamma", "0:0.6:0.2"];
    let first = piqsim(&args).stdout;
    assert_eq!(first, piqsim(&args).stdout);
    let threaded = Command::new(env!("CARGO_BIN_EXE_piqsim"))
        .args(args)
        .env("PIQSIM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(first, threaded.stdout);
}

#[test]
fn rates_closed_form_curves() {
    let text = stdout(&piqsim(&["rates", "gaussian", "--eta", "0:2:0.1"]));
    let (header, rows) = table(&text);
    assert_eq!(header, ["model", "parameters", "gamma", "delta_dd"]);
    assert_eq!(rows.len(), 21);
    for (k, g) in column(&text, "gamma").iter().enumerate() {
        let eta = k as f64 / 10.0;
        assert!((g - (-eta * eta).exp()).abs() < 1e-15);
    }
    assert_eq!(rows[0][3], "");
    assert!(rows[10][3].parse::<f64>().unwrap() > 0.0);

    let text = stdout(&piqsim(&[
        "rates",
        "thomas-fermi",
        "--x",
        "0:15:0.05",
        "--delta",
        "off",
    ]));
    let g = column(&text, "gamma");
    assert_eq!(g.len(), 301);
    assert_eq!(g[0], 1.0);
    let pi_row = (std::f64::consts::PI / 0.05).round() as usize;
    assert!(g.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(g[pi_row] < 0.3 && g[pi_row] > 0.1);

    let text = stdout(&piqsim(&[
        "rates",
        "thermal-bose",
        "--eta",
        "0:6:0.1",
        "--beta-omega",
        "0.1",
        "--z",
        "0,0.5,0.9,1",
    ]));
    let (_, rows) = table(&text);
    assert_eq!(rows.len(), 4 * 61);
    assert!(rows.iter().all(|r| r[3].is_empty()));
    let g = column(&text, "gamma");
    for k in 0..61 {
        for family in 1..4 {
            assert!(g[family * 61 + k] >= g[(family - 1) * 61 + k] - 1e-15);
        }
    }
}

#[test]
fn rates_custom_density() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tf.csv");
    let rows: String = (0..=2000)
        .map(|k| {
            let r = k as f64 / 2000.0;
            format!(
                "{r},{}\n",
                15.0 / (8.0 * std::f64::consts::PI) * (1.0 - r * r)
            )
        })
        .collect();
    std::fs::write(&path, format!("r,rho1\n{rows}")).unwrap();
    let text = stdout(&piqsim(&[
        "rates",
        "custom",
        "--density",
        path.to_str().unwrap(),
        "--k0",
        "1,4",
    ]));
    let tf = stdout(&piqsim(&[
        "rates",
        "thomas-fermi",
        "--x",
        "1,4",
        "--delta",
        "off",
    ]));
    for (a, b) in column(&text, "gamma").iter().zip(column(&tf, "gamma")) {
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }
}

#[test]
fn rates_errors() {
    let out = piqsim(&[
        "rates",
        "thermal-bose",
        "--eta",
        "1",
        "--beta-omega",
        "1",
        "--z",
        "0.5",
        "--delta",
        "on",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported"));
    let out = piqsim(&[
        "rates",
        "thermal-bose",
        "--eta",
        "1",
        "--beta-omega",
        "1",
        "--z",
        "0.9999999999999",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = piqsim(&["rates", "gaussian", "--eta", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = piqsim(&["rates", "gaussian"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_small_n_passes() {
    let text = stdout(&piqsim(&["oracle", "--n", "2", "--seeds", "10"]));
    let (header, rows) = table(&text);
    assert_eq!(
        header,
        [
            "N",
            "seed",
            "gamma",
            "dgamma",
            "ddd",
            "max_abs_err_I",
            "max_abs_err_Jz",
            "pass"
        ]
    );
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[7] == "true"));
}

#[test]
fn oracle_failures_and_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = piqsim(&["oracle", "--n", "7", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
    let out = piqsim(&[
        "oracle",
        "--n",
        "3",
        "--seeds",
        "2",
        "--threshold",
        "1e-300",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(std::fs::read_to_string(&path).unwrap().contains("false"));
}

#[test]
fn validation_failures_create_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let p = path.to_str().unwrap();
    for args in [
        vec!["evolve", "--n", "3", "--dgamma", "2", "-o", p],
        vec!["evolve", "--n", "4", "--initial", "dicke:3,1", "-o", p],
        vec![
            "evolve", "--n", "4", "--gamma", "0.5", "--dgamma", "0.5", "-o", p,
        ],
        vec!["evolve", "-o", p],
        vec!["sweep", "--n", "2.5", "--dgamma", "0", "-o", p],
        vec!["sweep", "--n", "4", "--dgamma", "0:1", "-o", p],
        vec!["evolve", "--n", "2", "--unknown", "-o", p],
    ] {
        let out = piqsim(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!path.exists(), "{args:?}");
    }
    let missing = dir.path().join("no/such/dir/out.csv");
    let out = piqsim(&["evolve", "--n", "2", "-o", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_piqsim"))
        .args(["evolve", "--n", "2"])
        .env("PIQSIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"n": 2, "dgamma": 1.0, "t-end": 2.0, "samples": 5, "initial": "fully_excited"}"#,
    )
    .unwrap();
    let out_path = dir.path().join("traj.csv");
    let c = cfg.to_str().unwrap();
    let o = out_path.to_str().unwrap();
    let out = piqsim(&["evolve", "--config", c, "-o", o]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let t = column(&text, "t");
    assert_eq!(t, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    for (t, i) in t.iter().zip(column(&text, "intensity")) {
        assert!((i - 2.0 * (-t).exp()).abs() < 1e-8);
    }
    // a flag replaces the file's gamma choice
    let out = piqsim(&["evolve", "--config", c, "--gamma", "1"]);
    let text = stdout(&out);
    for (t, i) in column(&text, "t").iter().zip(column(&text, "intensity")) {
        assert!((i - 2.0 * (-2.0 * t).exp() * (1.0 + 2.0 * t)).abs() < 1e-6);
    }
    std::fs::write(&cfg, r#"{"n": 2, "colour": "blue"}"#).unwrap();
    assert_eq!(piqsim(&["evolve", "--config", c]).status.code(), Some(1));
    let sweep_cfg = dir.path().join("sweep.json");
    std::fs::write(&sweep_cfg, r#"{"n": "5,6", "dgamma": [0.0, 0.5]}"#).unwrap();
    let text = stdout(&piqsim(&["sweep", "--config", sweep_cfg.to_str().unwrap()]));
    assert_eq!(column(&text, "N"), vec![5.0, 5.0, 6.0, 6.0]);
}

#[test]
fn meanfield_pulse() {
    let text = stdout(&piqsim(&[
        "meanfield",
        "--n",
        "20",
        "--t-i",
        "0.2",
        "--t-end",
        "0.4",
        "--samples",
        "3",
    ]));
    let i = column(&text, "intensity");
    assert!((i[1] - 100.0).abs() < 1e-12);
    let p = column(&text, "p");
    assert!((p[1] - 0.5).abs() < 1e-15);
}
