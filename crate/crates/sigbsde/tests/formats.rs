use sigbsde::config::RunConfig;
use sigbsde::io::{self, ReportRow};
use sigbsde::{runner, Error};
use sigbsde_core::metrics::{self, ErrorReport, ExperimentConfig};
use sigbsde_core::mlp::{Mlp, AIR_LAYERS};
use sigbsde_core::risk::Benchmark;
use sigbsde_core::simulate::{sample_brownian, TimeGrid};

#[test]
fn config_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.txt");
    let cfg = RunConfig {
        benchmark: "cir".into(),
        samples: 300,
        lambda: 0.125,
        sigma: 0.7,
        big_r: 0.9,
        out: dir.path().join("out"),
        ..RunConfig::default()
    };
    std::fs::write(&path, cfg.to_text()).unwrap();
    assert_eq!(RunConfig::from_file(&path).unwrap(), cfg);

    std::fs::write(&path, "samples = 10\nsteps = many\n").unwrap();
    let err = RunConfig::from_file(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    assert!(matches!(
        RunConfig::from_file(&dir.path().join("missing.txt")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn paths_roundtrip_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let bm = sample_brownian(7, TimeGrid::new(0.3, 9).unwrap(), 4).unwrap();
    let path = dir.path().join("paths.csv");
    io::write_paths(&path, &bm, 100).unwrap();
    let (times, values) = io::read_paths(&path).unwrap();
    assert_eq!(values, bm.values);
    for (k, t) in times.iter().enumerate() {
        assert_eq!(*t, bm.grid.time(k));
    }
    let head = std::fs::read_to_string(&path).unwrap();
    assert!(head.starts_with("sample,k,t,value\n0,0,0,0\n"));

    io::write_paths(&path, &bm, 3).unwrap();
    assert_eq!(io::read_paths(&path).unwrap().1.samples(), 3);
}

#[test]
fn solution_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Benchmark::entropic(0.3).unwrap());
    cfg.samples = 64;
    cfg.steps = 5;
    let sol = metrics::run_iteration(&cfg, 0).unwrap().solution;
    let path = dir.path().join("solution.csv");
    io::write_solution(&path, &sol, 2).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sample,k,t,X,Y,Z");
    assert_eq!(lines.len(), 1 + 2 * 6);
    // No Z at the terminal index.
    assert!(lines[6].ends_with(','));
    let fields: Vec<&str> = lines[6].split(',').collect();
    assert_eq!(fields[4].parse::<f64>().unwrap(), sol.y.get(0, 5));
    assert_eq!(fields[4].parse::<f64>().unwrap(), -sol.forward.values.get(0, 5));
}

#[test]
fn report_roundtrip_keeps_failures_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Benchmark::cir(Default::default()).unwrap());
    cfg.samples = 128;
    cfg.steps = 10;
    let mut report = ErrorReport::default();
    report.push(&metrics::run_iteration(&cfg, 0).unwrap());
    report.push_failure(1, &sigbsde_core::Error::NonFinite { step: 3, samples: 128, component: "Y" });
    report.push(&metrics::run_iteration(&cfg, 2).unwrap());
    let path = dir.path().join("report.csv");
    io::write_report(&path, &report).unwrap();
    let rows = io::read_report(&path).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].erl2_y, report.erl2_y[0]);
    assert_eq!(rows[0].status, "ok");
    assert_eq!(
        rows[1],
        ReportRow {
            iteration: 1,
            erl2_y: None,
            erl2_z: None,
            status: rows[1].status.clone(),
        }
    );
    assert!(rows[1].status.contains("non-finite"), "{}", rows[1].status);
    assert_eq!(rows[2].iteration, 2);
    assert_eq!(rows[2].erl2_z, report.erl2_z[1]);
}

#[test]
fn ambiguous_report_is_oracle_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        benchmark: "ambiguous".into(),
        samples: 128,
        steps: 8,
        iterations: 2,
        out: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    runner::run_experiment(&cfg).unwrap();
    let rows = io::read_report(&runner::output_dir(&cfg).join("report.csv")).unwrap();
    assert!(rows.iter().all(|r| r.status == "oracle-only" && r.erl2_y.is_none()));
}

#[test]
fn checkpoint_and_losses_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let net = Mlp::init(&AIR_LAYERS, 17).unwrap();
    let path = dir.path().join("ckpt.csv");
    io::write_checkpoint(&path, &net).unwrap();
    let back = io::read_checkpoint(&path).unwrap();
    assert_eq!(back, net);

    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("layers,3,11,11,11,1\nparam,value\n0,"));
    let broken = text.replacen("\n5,", "\n6,", 1);
    std::fs::write(&path, broken).unwrap();
    assert!(matches!(io::read_checkpoint(&path), Err(Error::Parse { line: 8, .. })));

    let losses = vec![0.5, -0.25, 1.0 / 3.0, f64::MIN_POSITIVE];
    let lpath = dir.path().join("losses.csv");
    io::write_losses(&lpath, &losses).unwrap();
    assert_eq!(io::read_losses(&lpath).unwrap(), losses);
}

#[test]
fn scaling_study_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        benchmark: "cir".into(),
        steps: 10,
        iterations: 2,
        out: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let table = runner::scaling_study(&cfg, &[128, 256, 512]).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert!(table.fit.slope.is_some());
    let csv = std::fs::read_to_string(runner::output_dir(&cfg).join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("samples,mean_erl2_y,std_erl2_y\n128,"));
    assert!(runner::scaling_study(&cfg, &[256, 128]).is_err());

    let amb = RunConfig {
        benchmark: "ambiguous".into(),
        ..cfg
    };
    assert!(matches!(runner::scaling_table(&amb, &[128, 256]), Err(Error::Usage(_))));
}
