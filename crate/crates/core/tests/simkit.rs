use ris_handover::simkit::{
    run_paired_trial, run_sweep, run_sweep_with, run_trial, Format, MetricsTable, ScenarioConfig, SweepAxis,
    SweepPlan,
};
use ris_handover::simkit::trial::build_strategy;

fn short() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.sim.duration = 2.0;
    cfg.sim.trials = 4;
    cfg
}

#[test]
fn trials_do_not_depend_on_evaluation_order() {
    let cfg = short();
    let forward: Vec<_> = (0..4).map(|t| run_trial(&cfg, t).unwrap()).collect();
    let backward: Vec<_> = (0..4).rev().map(|t| run_trial(&cfg, t).unwrap()).collect();
    for (t, m) in backward.iter().rev().enumerate() {
        assert_eq!(&forward[t], m);
    }
}

#[test]
fn sweeps_are_pure_and_thread_count_free() {
    let mut cfg = short();
    cfg.sim.threads = 1;
    let one = run_sweep(&cfg, SweepAxis::ApCount, &[2.0, 3.0]).unwrap();
    cfg.sim.threads = 3;
    let three = run_sweep(&cfg, SweepAxis::ApCount, &[2.0, 3.0]).unwrap();
    assert_eq!(one, three);
    assert_eq!(one.to_csv_string(), run_sweep(&cfg, SweepAxis::ApCount, &[2.0, 3.0]).unwrap().to_csv_string());
}

#[test]
fn paired_runs_match_the_standalone_modes() {
    let cfg = short();
    let paired = run_paired_trial(&cfg, 1, &build_strategy(&cfg).unwrap()).unwrap();
    let mut off = cfg.clone();
    off.ris.enabled = false;
    assert_eq!(paired.ris, run_trial(&cfg, 1).unwrap());
    assert_eq!(paired.baseline, run_trial(&off, 1).unwrap());
    assert_eq!(paired.dominance_violations, 0);
}

#[test]
fn ris_never_adds_holes() {
    let mut cfg = short();
    cfg.mobility.blockers = 6;
    let out = run_sweep_with(&cfg, SweepAxis::ApCount, &[2.0, 4.0], &SweepPlan::standard(&cfg)).unwrap();
    for with in out.cells.iter().filter(|c| c.ris) {
        let without = out
            .cells
            .iter()
            .find(|c| !c.ris && c.value == with.value && c.mobility == with.mobility)
            .unwrap();
        for (a, b) in with.trials.iter().zip(&without.trials) {
            assert!(a.hole_frac <= b.hole_frac);
            assert_eq!(a.steps, b.steps);
        }
    }
}

#[test]
fn tables_round_trip_through_both_formats() {
    let cfg = short();
    let table = run_sweep(&cfg, SweepAxis::Blockers, &[0.0, 2.0]).unwrap().rounded();
    assert_eq!(MetricsTable::from_csv_str(&table.to_csv_string()).unwrap(), table);
    assert_eq!(MetricsTable::from_json_str(&table.to_json_string()).unwrap(), table);

    let dir = tempfile::tempdir().unwrap();
    for name in ["t.csv", "t.json"] {
        let path = dir.path().join(name);
        let format = Format::from_path(&path);
        table.export(format, &path).unwrap();
        assert_eq!(MetricsTable::import(format, &path).unwrap(), table);
    }
}

#[test]
fn no_blockers_means_no_holes_or_bridges() {
    let mut cfg = short();
    cfg.mobility.blockers = 0;
    for t in 0..3 {
        let m = run_trial(&cfg, t).unwrap();
        assert_eq!(m.hole_steps, 0);
        assert_eq!(m.bridge_events, 0);
    }
}
