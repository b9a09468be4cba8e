use haznav::config::ExperimentConfig;
use haznav::eval::{case_rows, comparison_windows, experiment_dataset, CaseId};
use haznav::vision::Split;
use haznav::world::{rollout, ExpertPolicy};

#[test]
fn windows_surround_each_hazard_pass() {
    let cfg = ExperimentConfig::default();
    let (_, _, eval) = cfg.worlds();
    let world = eval.build().unwrap();
    let ground = rollout(&world, &mut ExpertPolicy::default(), cfg.eval.rollout_ms, eval.dt_ms).unwrap();
    let windows = comparison_windows(&world, &ground, 5000, 5000);
    assert!(!windows.is_empty());
    let end = ground.trajectory.end_ms().unwrap();
    for w in windows.windows(2) {
        assert!(w[0][1] < w[1][0], "windows overlap: {w:?}");
    }
    for &[a, b] in &windows {
        assert!(a <= b && b <= end);
        assert!(b - a <= 10_000 * world.hazards.len() as u64);
    }
    // The widest lateral excursion of the expert happens inside a window.
    let peak = ground
        .trajectory
        .samples
        .iter()
        .max_by(|x, y| x.lateral_m.total_cmp(&y.lateral_m))
        .unwrap();
    assert!(peak.lateral_m > 3.0);
    assert!(windows.iter().any(|&[a, b]| a <= peak.t_ms && peak.t_ms <= b));
}

#[test]
fn side_rows_triple_training_rows_only() {
    let mut cfg = ExperimentConfig::default().with_frames(64, 96);
    cfg.dataset.collect = 10;
    cfg.dataset.test_collect = 2;
    let ds = experiment_dataset(&cfg).unwrap();
    let c = ds.counts();
    let train = case_rows(&cfg, &ds, CaseId::Case2, Split::Train).unwrap();
    let test = case_rows(&cfg, &ds, CaseId::Case2, Split::Test).unwrap();
    assert_eq!(train.len(), 3 * c.train);
    assert_eq!(test.len(), c.test);
    // Left rows steer further right than the center row, right rows further left.
    for k in 0..c.train {
        let (y_c, y_l, y_r) = (train[3 * k].1, train[3 * k + 1].1, train[3 * k + 2].1);
        assert!(y_l >= y_c && y_r <= y_c);
    }
    cfg.side_rows = false;
    assert_eq!(case_rows(&cfg, &ds, CaseId::Case1, Split::Train).unwrap().len(), c.train);
}
