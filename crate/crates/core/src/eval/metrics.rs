use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::world::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("empty sequence")]
    Empty,
    #[error("sequence lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 pairs, got {0}")]
    TooFew(usize),
    #[error("baseline RMSE is zero")]
    ZeroBaseline,
    #[error("trajectories do not overlap in time")]
    NoOverlap,
    #[error("differences have zero variance")]
    ZeroVariance,
    #[error("non-finite input")]
    NonFinite,
}

fn check_pairs(g: &[f64], p: &[f64]) -> Result<(), MetricError> {
    if g.len() != p.len() {
        return Err(MetricError::LengthMismatch {
            left: g.len(),
            right: p.len(),
        });
    }
    if g.is_empty() {
        return Err(MetricError::Empty);
    }
    if g.iter().chain(p).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(ground: &[f64], pred: &[f64]) -> Result<f64, MetricError> {
    check_pairs(ground, pred)?;
    let ss: f64 = ground.iter().zip(pred).map(|(g, p)| (g - p) * (g - p)).sum();
    Ok((ss / ground.len() as f64).sqrt())
}

/// Mean absolute error.
pub fn mae(ground: &[f64], pred: &[f64]) -> Result<f64, MetricError> {
    check_pairs(ground, pred)?;
    let s: f64 = ground.iter().zip(pred).map(|(g, p)| (g - p).abs()).sum();
    Ok(s / ground.len() as f64)
}

/// `|rmse - baseline| / baseline * 100`. The sign of the change is not part
/// of the value; compare the two RMSEs for the direction.
pub fn improvement(rmse_case: f64, rmse_baseline: f64) -> Result<f64, MetricError> {
    if !rmse_case.is_finite() || !rmse_baseline.is_finite() {
        return Err(MetricError::NonFinite);
    }
    if rmse_baseline <= 0.0 {
        return Err(MetricError::ZeroBaseline);
    }
    Ok((rmse_case - rmse_baseline).abs() / rmse_baseline * 100.0)
}

/// Linear interpolation of `traj`'s lateral offset at `t_ms`, or `None`
/// outside its time range.
pub fn lateral_at(traj: &Trajectory, t_ms: f64) -> Option<f64> {
    let s = &traj.samples;
    let first = s.first()?;
    let last = s.last()?;
    if t_ms < first.t_ms as f64 || t_ms > last.t_ms as f64 {
        return None;
    }
    let k = s.partition_point(|x| (x.t_ms as f64) < t_ms);
    if k < s.len() && s[k].t_ms as f64 == t_ms {
        return Some(s[k].lateral_m);
    }
    let (a, b) = (&s[k - 1], &s[k]);
    let u = (t_ms - a.t_ms as f64) / (b.t_ms - a.t_ms) as f64;
    Some(a.lateral_m + u * (b.lateral_m - a.lateral_m))
}

/// RMSE of lateral offsets over the ground-truth timesteps covered by `test`,
/// with `test` linearly interpolated onto the ground grid.
pub fn trajectory_rmse(ground: &Trajectory, test: &Trajectory) -> Result<f64, MetricError> {
    let (g, p): (Vec<f64>, Vec<f64>) = ground
        .samples
        .iter()
        .filter_map(|s| lateral_at(test, s.t_ms as f64).map(|v| (s.lateral_m, v)))
        .unzip();
    if g.is_empty() {
        return Err(MetricError::NoOverlap);
    }
    rmse(&g, &p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub p: f64,
    pub reject: bool,
    pub mean_difference: f64,
}

/// Two-sided p value of Student's t with `df` degrees of freedom:
/// `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn t_two_sided_p(t: f64, df: usize) -> f64 {
    let v = df as f64;
    let x = v / (v + t * t);
    if x >= 1.0 {
        return 1.0;
    }
    beta_reg(v / 2.0, 0.5, x)
}

/// Paired t-test on `d_i = case_i - ground_i`.
pub fn paired_t_test(ground: &[f64], case: &[f64], alpha: f64) -> Result<TTest, MetricError> {
    check_pairs(ground, case)?;
    let n = ground.len();
    if n < 2 {
        return Err(MetricError::TooFew(n));
    }
    let d: Vec<f64> = case.iter().zip(ground).map(|(c, g)| c - g).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(MetricError::ZeroVariance);
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let df = n - 1;
    let p = t_two_sided_p(t, df);
    Ok(TTest {
        t,
        df,
        p,
        reject: p < alpha,
        mean_difference: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::TrajectorySample;
    use proptest::prelude::*;

    fn traj(dt: u64, lat: &[f64]) -> Trajectory {
        Trajectory {
            dt_ms: dt,
            samples: lat
                .iter()
                .enumerate()
                .map(|(i, &l)| TrajectorySample {
                    t_ms: i as u64 * dt,
                    lateral_m: l,
                    station_m: i as f64,
                    direction_deg: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn error_examples() {
        assert_eq!(rmse(&[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);
        assert!((rmse(&[0.2], &[0.1]).unwrap() - 0.1).abs() < 1e-15);
        assert!((mae(&[0.2], &[0.1]).unwrap() - 0.1).abs() < 1e-15);
        assert!((mae(&[0.0, 0.0], &[0.3, -0.1]).unwrap() - 0.2).abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[0.3, -0.1]).unwrap() - 0.05f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse(&[], &[]), Err(MetricError::Empty));
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(MetricError::LengthMismatch { .. })));
    }

    #[test]
    fn improvement_examples() {
        assert_eq!(improvement(0.3, 0.3).unwrap(), 0.0);
        assert!((improvement(0.079, 0.100).unwrap() - 21.0).abs() < 1e-9);
        assert!((improvement(0.25, 0.2).unwrap() - 25.0).abs() < 1e-9);
        assert_eq!(improvement(0.1, 0.0), Err(MetricError::ZeroBaseline));
    }

    #[test]
    fn trajectory_examples() {
        let g = traj(50, &[0.0, 0.5, 1.0, 0.2, -0.3]);
        assert_eq!(trajectory_rmse(&g, &g).unwrap(), 0.0);
        let shifted = traj(50, &[0.1, 0.6, 1.1, 0.3, -0.2]);
        assert!((trajectory_rmse(&g, &shifted).unwrap() - 0.1).abs() < 1e-12);
        // A coarser test trace is interpolated onto the ground grid.
        let ramp = traj(10, &(0..21).map(|i| i as f64 * 0.01).collect::<Vec<_>>());
        let coarse = traj(50, &[0.1, 0.15, 0.2, 0.25, 0.3]);
        assert!((trajectory_rmse(&ramp, &coarse).unwrap() - 0.1).abs() < 1e-12);
        let mut late = g.clone();
        for s in &mut late.samples {
            s.t_ms += 10_000;
        }
        assert_eq!(trajectory_rmse(&g, &late), Err(MetricError::NoOverlap));
    }

    #[test]
    fn t_test_examples() {
        let g = [0.0; 4];
        let r = paired_t_test(&g, &[1.0, -1.0, 1.0, -1.0], 0.05).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(!r.reject);
        assert_eq!(paired_t_test(&[1.0, 2.0], &[1.0, 2.0], 0.05), Err(MetricError::ZeroVariance));
        assert_eq!(paired_t_test(&[1.0], &[2.0], 0.05), Err(MetricError::TooFew(1)));
        // d = [0.5, 0.6, 0.4, 0.5, 0.5]: mean 0.5, sd = sqrt(0.005), t = 0.5 / sqrt(0.001).
        let r = paired_t_test(&[0.0; 5], &[0.5, 0.6, 0.4, 0.5, 0.5], 0.05).unwrap();
        assert!((r.t - 0.5 / 0.001f64.sqrt()).abs() < 1e-9);
        assert_eq!(r.df, 4);
        assert!(r.p < 1e-4 && r.reject);
    }

    /// Two-sided critical values at the 0.05 level from a standard t table.
    #[test]
    fn t_table_cross_check() {
        for (df, t) in [(1, 12.706), (4, 2.776), (10, 2.228), (30, 2.042)] {
            let p = t_two_sided_p(t, df);
            assert!((p - 0.05).abs() < 5e-4, "df {df}: p {p}");
        }
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..50)) {
            let (g, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = rmse(&g, &p).unwrap();
            let m = mae(&g, &p).unwrap();
            prop_assert!(r >= 0.0 && m >= 0.0);
            prop_assert!(r >= m * (1.0 - 1e-12));
        }

        #[test]
        fn swapping_t_test_arguments_negates_t(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..40)) {
            let (g, c): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let (Ok(a), Ok(b)) = (paired_t_test(&g, &c, 0.05), paired_t_test(&c, &g, 0.05)) {
                prop_assert!((a.t + b.t).abs() <= 1e-9 * a.t.abs().max(1.0));
                prop_assert!((a.p - b.p).abs() <= 1e-12);
            }
        }

        #[test]
        fn improvement_is_scale_invariant(x in 0.01f64..10.0, y in 0.01f64..10.0, k in 0.01f64..100.0) {
            let a = improvement(x, y).unwrap();
            let b = improvement(k * x, k * y).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            prop_assert_eq!(improvement(x, x).unwrap(), 0.0);
        }

        #[test]
        fn constant_offset_is_detected(lat in prop::collection::vec(-3.0f64..3.0, 1..40), c in -2.0f64..2.0) {
            let g = traj(50, &lat);
            let moved = traj(50, &lat.iter().map(|v| v + c).collect::<Vec<_>>());
            prop_assert!((trajectory_rmse(&g, &moved).unwrap() - c.abs()).abs() < 1e-9);
        }
    }
}
