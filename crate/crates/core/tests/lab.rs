use hlab::lab::*;
use hlab::Error;

fn csv_of(report: &ExperimentReport) -> String {
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn quick_experiments_pass() {
    for e in [
        Experiment::HeatEquiv,
        Experiment::Mehler,
        Experiment::Concentrate,
        Experiment::RestrictedSweep,
        Experiment::Mkappa,
    ] {
        let report = run(&ExperimentConfig::new(e)).unwrap();
        assert!(report.passed(), "{}", report.summary());
    }
}

#[test]
fn reports_are_reproducible_for_a_fixed_seed() {
    let mut cfg = ExperimentConfig::new(Experiment::Mehler);
    cfg.seed = 42;
    let a = csv_of(&run(&cfg).unwrap());
    assert_eq!(a, csv_of(&run(&cfg).unwrap()));
    cfg.seed = 43;
    assert_ne!(a, csv_of(&run(&cfg).unwrap()));
}

#[test]
fn report_csv_has_a_schema_line_and_fixed_columns() {
    let text = csv_of(&run(&ExperimentConfig::new(Experiment::Mkappa)).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(
        lines.next(),
        Some("experiment,case,measured,reference,abs_error,rel_error,check,tolerance,pass")
    );
    assert!(lines.all(|l| l.starts_with("mkappa,") && l.split(',').count() >= 9));
}

#[test]
fn invalid_configurations_are_config_errors() {
    assert!(matches!("warp-drive".parse::<Experiment>(), Err(Error::Config(_))));
    let mut cfg = ExperimentConfig::new(Experiment::Dispersion);
    cfg.kappa = 2.0;
    assert!(matches!(run(&cfg), Err(Error::Config(_))));
    let mut cfg = ExperimentConfig::new(Experiment::KernelConsistency);
    cfg.d = 2;
    assert!(matches!(run(&cfg), Err(Error::Config(_))));
    let mut cfg = ExperimentConfig::new(Experiment::Dispersion);
    cfg.times = Some(vec![0.5, 4.0]);
    assert!(matches!(run(&cfg), Err(Error::Config(_))));
    let mut cfg = ExperimentConfig::new(Experiment::Mkappa);
    assert!(matches!(cfg.set("speed", "1"), Err(Error::Config(_))));
    assert!(matches!(cfg.set("d", "two"), Err(Error::Config(_))));
    assert!(matches!(cfg.apply_file("kappa 1.0"), Err(Error::Config(_))));
}

#[test]
fn config_files_accept_comments_and_every_key() {
    let mut cfg = ExperimentConfig::new(Experiment::Mkappa);
    cfg.apply_file(
        "# restricted run\nexperiment = restricted-sweep\n\nd = 2\nkappa = 1.5 # inside the band\n\
         ell = 1\nR0 = 2\nt = 1, 2, -4\ntol = 0.1\ngrid = 16\nout = r.csv\nfast = yes\nseed = 9\n",
    )
    .unwrap();
    assert_eq!(cfg.experiment, Experiment::RestrictedSweep);
    assert_eq!((cfg.d, cfg.kappa, cfg.ell, cfg.r0), (2, 1.5, Some(1), 2.0));
    assert_eq!(cfg.times, Some(vec![1.0, 2.0, -4.0]));
    assert_eq!((cfg.tol, cfg.grid, cfg.fast, cfg.seed), (Some(0.1), Some(16), true, 9));
    assert_eq!(cfg.out.as_deref(), Some(std::path::Path::new("r.csv")));
    cfg.validate().unwrap();
}

#[test]
fn admissible_exponents() {
    assert_eq!(admissible_q(f64::INFINITY, 4).unwrap(), 1.0);
    assert_eq!(admissible_q(4.0, 4).unwrap(), 2.0);
    assert!(admissible_q(2.0, 4).is_err());
    for name in Experiment::ALL.map(Experiment::name) {
        assert_eq!(name.parse::<Experiment>().unwrap().name(), name);
    }
}
