use gte_core::bench::{
    read_table_csv, run_experiment, summarize, trace_figure, trace_singular_example, BatchResult, ExperimentSpec,
    Scenario, Shape,
};
use gte_core::generators::GenKind;
use gte_core::Status;

fn small_table1() -> ExperimentSpec {
    ExperimentSpec::new(Scenario::Table1)
        .with_shapes(vec!["(3,8)".parse().unwrap(), "(4,5)".parse().unwrap()])
        .with_trials(6)
        .with_seed(40)
}

#[test]
fn rows_aggregate_their_trials() {
    let res = run_experiment(&small_table1()).unwrap();
    assert_eq!(res.rows.len(), 2 * 4);
    assert_eq!(res.trials.len(), 2 * 6 * 4);
    for row in &res.rows {
        let group: Vec<_> = res
            .trials
            .iter()
            .filter(|t| t.shape == row.shape && t.epsilon == row.epsilon)
            .collect();
        assert_eq!(group.len(), 6);
        let ok: Vec<_> = group.iter().filter(|t| t.success).collect();
        assert_eq!(row.sr, Some(ok.len() as f64 / 6.0));
        if !ok.is_empty() {
            let itr = ok.iter().map(|t| t.iterations as f64).sum::<f64>() / ok.len() as f64;
            assert!((row.itr_mean.unwrap() - itr).abs() < 1e-12);
        }
        for t in &group {
            assert_eq!(t.success, t.status == Status::Converged.as_str() && t.residual <= 1e-12);
        }
    }
}

#[test]
fn reruns_are_bit_identical_regardless_of_thread_count() {
    let spec = small_table1();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| run_experiment(&spec)).unwrap().without_timing();
    let b = wide.install(|| run_experiment(&spec)).unwrap().without_timing();
    assert_eq!(a, b);
    let sa = serde_json::to_string(&a).unwrap();
    let sb = serde_json::to_string(&b).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn summarize_writes_reloadable_outputs() {
    let res = run_experiment(&small_table1().with_trials(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let text = summarize(&res, dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("table.txt")).unwrap(), text);
    let rows = read_table_csv(std::fs::File::open(dir.path().join("table.csv")).unwrap()).unwrap();
    assert_eq!(rows, res.rows);
    let json = std::fs::read_to_string(dir.path().join("trials.json")).unwrap();
    let back: BatchResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, res);
}

#[test]
fn gte_scenario_uses_per_kind_epsilon() {
    let spec = ExperimentSpec::new(Scenario::Table5)
        .with_shapes(vec!["(4,3,2,4)".parse().unwrap()])
        .with_trials(3);
    let res = run_experiment(&spec).unwrap();
    assert_eq!(res.rows.len(), 2);
    let eps: Vec<(String, f64)> = res.rows.iter().map(|r| (r.kind.clone(), r.epsilon)).collect();
    assert_eq!(eps, vec![("m-tensor".into(), 2.0), ("general-random".into(), 1.0)]);
    assert!(res.trials.iter().all(|t| t.residual.is_finite()));
}

#[test]
fn traces_write_both_solvers() {
    let shape: Shape = "(3,10)".parse().unwrap();
    let tr = trace_figure(&shape, GenKind::MTensor, 1, 2.0, 1e-12, 100).unwrap();
    assert!(tr.lm.converged());
    let dir = tempfile::tempdir().unwrap();
    let paths = tr.write(dir.path()).unwrap();
    assert_eq!(paths.len(), 2);
    for p in &paths {
        let name = p.file_name().unwrap().to_str().unwrap();
        assert!(name.starts_with("trace_") && name.ends_with(".csv"), "{name}");
    }
    let s = trace_singular_example(1e-12, 100).unwrap();
    assert_eq!(s.newton.status, Status::LinearSolveFailure);
    assert!(s.lm.converged());
}
