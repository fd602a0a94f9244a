use std::process::{Command, Output};

fn km(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_km-rotation"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn exit_code_contract() {
    let ok = km(&[
        "simulate", "--theta", "1/1", "--alpha", "0.5", "--norm", "l2", "--x1", "10,30", "--steps",
        "3",
    ]);
    assert_eq!(ok.status.code(), Some(0));

    for bad in [
        &["simulate", "--theta", "1/4", "--alpha", "nope"][..],
        &["simulate", "--theta", "0/4"],
        &["simulate"],
        &["bound", "--theta", "1/4", "--steps", "0"],
        &["mc", "--theta", "1/4", "--replicas", "0"],
        &["search-beta", "--theta", "1/4", "--grid-step", "0.01"],
    ] {
        assert_eq!(km(bad).status.code(), Some(2), "{bad:?}");
    }

    let linf = km(&[
        "simulate", "--theta", "1/4", "--alpha", "0.3", "--norm", "linf",
    ]);
    assert_eq!(linf.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&linf.stderr).contains("alpha = 0.5"));

    for domain in [
        &["search-beta", "--theta", "3/4"][..],
        &["bound", "--theta", "1/5", "--norm", "linf"],
        &[
            "simulate", "--theta", "1/2", "--alpha", "0.2", "--norm", "linf",
        ],
    ] {
        assert_eq!(km(domain).status.code(), Some(3), "{domain:?}");
    }
}

#[test]
fn simulate_csv_layout() {
    let out = km(&[
        "simulate", "--theta", "1/2", "--alpha", "0.5", "--norm", "linf", "--x1", "10,30",
        "--steps", "5",
    ]);
    let text = stdout(&out);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["k", "x1", "x2", "norm_value", "bound_value"]);
    assert_eq!(rows.len(), 5);
    let bounds: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(bounds, [30.0, 30.0, 15.0, 15.0, 7.5]);
    assert_eq!(rows[0][3], "3.0000000000000000e1");
}

#[test]
fn search_beta_csv() {
    let out = km(&["search-beta", "--theta", "1/6"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(header, ["theta", "T", "beta_u", "argmax_t", "grid_step"]);
    assert_eq!(rows[0][0], "1/6");
    assert_eq!(rows[0][1], "6");
    let beta: f64 = rows[0][2].parse().unwrap();
    assert!((beta - 0.8211).abs() < 5e-4);
}

#[test]
fn bound_half_turn() {
    let out = km(&[
        "bound", "--theta", "1/1", "--alpha", "0.3", "--x1", "3,4", "--steps", "4",
    ]);
    let (_, rows) = parse_csv(&stdout(&out));
    let v: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(v[0], 5.0);
    for (i, x) in v.iter().enumerate() {
        assert!((x - 5.0 * 0.4f64.powi(i as i32)).abs() < 1e-14);
    }
}

#[test]
fn mc_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |path: &std::path::Path, workers: &str| {
        let p = path.to_str().unwrap().to_string();
        km(&[
            "mc",
            "--theta",
            "1/4",
            "--alpha",
            "0.5",
            "--x1",
            "1,3",
            "--a",
            "2",
            "--b",
            "0",
            "--replicas",
            "2000",
            "--steps",
            "50",
            "--seed",
            "17",
            "--workers",
            workers,
            "--out",
            &p,
        ])
    };
    assert_eq!(args(&a, "1").status.code(), Some(0));
    assert_eq!(args(&b, "5").status.code(), Some(0));
    let ta = std::fs::read(&a).unwrap();
    let tb = std::fs::read(&b).unwrap();
    assert_eq!(ta, tb);

    let (header, rows) = parse_csv(std::str::from_utf8(&ta).unwrap());
    assert_eq!(
        header,
        ["k", "mean_sq_norm", "std_err", "bound_sq", "bound_stable"]
    );
    assert_eq!(rows.len(), 50);
    assert_eq!(rows[0][1], "1.0000000000000000e1");
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn csv_reals_round_trip() {
    let out = km(&[
        "simulate",
        "--theta",
        "2/7",
        "--alpha",
        "0.37",
        "--norm",
        "l2",
        "--x1",
        "-1.25,3.5",
        "--steps",
        "30",
    ]);
    let (_, rows) = parse_csv(&stdout(&out));
    let theta = km_rotation::Angle::new(2, 7).unwrap();
    let sched = km_rotation::km::Schedule::constant(0.37).unwrap();
    let traj = km_rotation::km::run_km(
        theta,
        km_rotation::NormKind::L2,
        sched,
        km_rotation::Vec2::new(-1.25, 3.5),
        30,
    )
    .unwrap();
    for (k, row) in rows.iter().enumerate() {
        let x1: f64 = row[1].parse().unwrap();
        let x2: f64 = row[2].parse().unwrap();
        assert_eq!(x1.to_bits(), traj.points[k].x1.to_bits());
        assert_eq!(x2.to_bits(), traj.points[k].x2.to_bits());
    }
}
