//! Learning-curve smoothing and the across-seed summary statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::run::EvalRecord;
use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING_WINDOW: usize = 20;

/// Trailing mean over `window` elements. The first `window - 1` outputs
/// average only the elements seen so far.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            series[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Mean of the last `n_f` values (all of them if there are fewer).
pub fn target_score(mean_curve: &[f64], n_f: usize) -> Result<f64> {
    if mean_curve.is_empty() || n_f == 0 {
        return Err(Error::Config(
            "target score needs a non-empty curve and n_f > 0".into(),
        ));
    }
    let tail = &mean_curve[mean_curve.len().saturating_sub(n_f)..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Environment steps at the first point where `series` reaches `target`.
pub fn steps_to_target(series: &[f64], env_steps: &[u64], target: f64) -> Option<u64> {
    series
        .iter()
        .zip(env_steps)
        .find(|(r, _)| **r >= target)
        .map(|(_, s)| *s)
}

/// Eval returns grouped by seed, each a complete series over one unit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedCurves {
    pub seeds: Vec<u64>,
    /// Grid of the longest series.
    pub env_steps: Vec<u64>,
    /// `returns[w][n]`, seed-major; lengths differ when seeds stopped early.
    pub returns: Vec<Vec<f64>>,
    /// Units covered by every seed.
    pub common_units: usize,
    pub partial: bool,
}

impl SeedCurves {
    /// Groups records by seed. Seeds that stopped early shorten the common
    /// prefix and mark the result partial; conflicting grids are an error.
    pub fn from_records(records: &[EvalRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Config("no evaluation records to aggregate".into()));
        }
        let mut by_seed: BTreeMap<u64, Vec<&EvalRecord>> = BTreeMap::new();
        for r in records {
            by_seed.entry(r.seed).or_default().push(r);
        }
        for rs in by_seed.values_mut() {
            rs.sort_by_key(|r| r.unit);
            if rs.windows(2).any(|w| w[0].unit == w[1].unit) {
                return Err(Error::Config(format!(
                    "duplicate unit for seed {}",
                    rs[0].seed
                )));
            }
        }
        let longest = by_seed.values().map(Vec::len).max().unwrap_or(0);
        let shortest = by_seed.values().map(Vec::len).min().unwrap_or(0);
        let reference = by_seed.values().find(|v| v.len() == longest).unwrap();
        for rs in by_seed.values() {
            for (a, b) in rs.iter().zip(reference.iter()) {
                if a.unit != b.unit || a.env_steps != b.env_steps {
                    return Err(Error::Config(format!(
                        "seed {} has a different unit grid (unit {} at {} steps vs unit {} at {})",
                        a.seed, a.unit, a.env_steps, b.unit, b.env_steps
                    )));
                }
            }
        }
        if shortest == 0 {
            return Err(Error::Config("a seed has no records".into()));
        }
        Ok(Self {
            seeds: by_seed.keys().copied().collect(),
            env_steps: reference.iter().map(|r| r.env_steps).collect(),
            returns: by_seed
                .values()
                .map(|rs| rs.iter().map(|r| r.eval_return).collect())
                .collect(),
            common_units: shortest,
            partial: shortest != longest,
        })
    }

    /// Across-seed mean and population std per common unit.
    pub fn mean_std(&self) -> (Vec<f64>, Vec<f64>) {
        (0..self.common_units)
            .map(|n| {
                let col: Vec<f64> = self.returns.iter().map(|s| s[n]).collect();
                mean_std(&col)
            })
            .unzip()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub seeds: Vec<u64>,
    pub env_steps: Vec<u64>,
    /// R̄_n.
    pub mean_return: Vec<f64>,
    /// σ_n, population std across seeds.
    pub std_return: Vec<f64>,
    pub max_mean_return: f64,
    pub mean_std: f64,
    pub target_score: f64,
    /// First env step at which each seed's smoothed return reached the
    /// target; `None` if it never did.
    pub steps_to_target: Vec<Option<u64>>,
    /// Statistics over seeds that reached the target.
    pub steps_to_target_mean: Option<f64>,
    pub steps_to_target_std: Option<f64>,
    /// Median over all seeds, treating "never" as +∞.
    pub steps_to_target_median: Option<f64>,
    pub reached_target: usize,
    pub smoothing_window: usize,
    pub partial: bool,
}

/// Summary statistics. `target` is the target score, normally computed from
/// the SAC baseline with [`target_score`]; `None` uses this run's own final
/// `n_f` units.
pub fn aggregate(
    records: &[EvalRecord],
    target: Option<f64>,
    n_f: usize,
    smoothing_window: usize,
) -> Result<SummaryStats> {
    let curves = SeedCurves::from_records(records)?;
    let (mean, std) = curves.mean_std();
    let target = match target {
        Some(t) => t,
        None => target_score(&mean, n_f)?,
    };
    let steps: Vec<Option<u64>> = curves
        .returns
        .iter()
        .map(|s| {
            steps_to_target(
                &moving_average(s, smoothing_window),
                &curves.env_steps,
                target,
            )
        })
        .collect();
    let reached: Vec<f64> = steps.iter().flatten().map(|&s| s as f64).collect();
    let (t_mean, t_std) = if reached.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&reached);
        (Some(m), Some(s))
    };
    let with_never: Vec<f64> = steps
        .iter()
        .map(|s| s.map_or(f64::INFINITY, |v| v as f64))
        .collect();
    let med = median(&with_never);
    Ok(SummaryStats {
        seeds: curves.seeds.clone(),
        env_steps: curves.env_steps[..curves.common_units].to_vec(),
        max_mean_return: mean.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_std: std.iter().sum::<f64>() / std.len() as f64,
        mean_return: mean,
        std_return: std,
        target_score: target,
        reached_target: reached.len(),
        steps_to_target: steps,
        steps_to_target_mean: t_mean,
        steps_to_target_std: t_std,
        steps_to_target_median: med.is_finite().then_some(med),
        smoothing_window,
        partial: curves.partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(series: &[&[f64]]) -> Vec<EvalRecord> {
        series
            .iter()
            .enumerate()
            .flat_map(|(w, s)| {
                s.iter().enumerate().map(move |(n, &r)| EvalRecord {
                    seed: w as u64,
                    unit: n as u64 + 1,
                    env_steps: (n as u64 + 1) * 1000,
                    eval_return: r,
                })
            })
            .collect()
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[3.0; 30], 20), vec![3.0; 30]);
        let s: Vec<f64> = (1..=40).map(f64::from).collect();
        assert_eq!(moving_average(&s, 1), s);
        let m = moving_average(&s, 20);
        assert_eq!(m[39], 30.5);
        assert_eq!(m[0], 1.0);
        assert_eq!(m[1], 1.5);
        let long: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin() * 1e3).collect();
        let ma = moving_average(&long, 20);
        let direct = long[300..320].iter().sum::<f64>() / 20.0;
        assert_eq!(ma[319], direct);
    }

    #[test]
    fn two_seed_hand_example() {
        let s = aggregate(&recs(&[&[1.0, 5.0], &[3.0, 7.0]]), Some(100.0), 1, 1).unwrap();
        assert_eq!(s.mean_return, vec![2.0, 6.0]);
        assert_eq!(s.std_return, vec![1.0, 1.0]);
        assert_eq!(s.max_mean_return, 6.0);
        assert_eq!(s.mean_std, 1.0);
        assert_eq!(s.steps_to_target, vec![None, None]);
        assert_eq!(s.steps_to_target_median, None);
    }

    #[test]
    fn single_seed_has_zero_spread() {
        let s = aggregate(&recs(&[&[1.0, 4.0, 2.0]]), None, 2, 1).unwrap();
        assert_eq!(s.std_return, vec![0.0; 3]);
        assert_eq!(s.target_score, 3.0);
        assert_eq!(s.steps_to_target, vec![Some(2000)]);
    }

    #[test]
    fn identical_seeds() {
        let s = aggregate(&recs(&[&[1.0, 9.0, 4.0], &[1.0, 9.0, 4.0]]), None, 1, 1).unwrap();
        assert_eq!(s.mean_std, 0.0);
        assert_eq!(s.max_mean_return, 9.0);
    }

    #[test]
    fn steps_to_target_uses_smoothed_series() {
        // Raw series hits 10 at unit 2, but the 2-unit average only at unit 3.
        let s = aggregate(&recs(&[&[0.0, 10.0, 10.0]]), Some(10.0), 1, 2).unwrap();
        assert_eq!(s.steps_to_target, vec![Some(3000)]);
    }

    #[test]
    fn median_treats_never_as_infinite() {
        let s = aggregate(&recs(&[&[5.0], &[0.0], &[0.0]]), Some(5.0), 1, 1).unwrap();
        assert_eq!(s.steps_to_target_median, None);
        assert_eq!(s.steps_to_target_mean, Some(1000.0));
        let s = aggregate(&recs(&[&[5.0], &[5.0], &[0.0]]), Some(5.0), 1, 1).unwrap();
        assert_eq!(s.steps_to_target_median, Some(1000.0));
    }

    #[test]
    fn truncated_seed_marks_partial() {
        let s = aggregate(&recs(&[&[1.0, 2.0, 3.0], &[1.0, 2.0]]), None, 1, 1).unwrap();
        assert!(s.partial);
        assert_eq!(s.env_steps, vec![1000, 2000]);
    }

    #[test]
    fn early_stopped_seed_keeps_its_own_target_step() {
        let s = aggregate(&recs(&[&[0.0, 0.0, 0.0, 9.0], &[9.0]]), Some(9.0), 1, 1).unwrap();
        assert_eq!(s.mean_return, vec![4.5]);
        assert_eq!(s.steps_to_target, vec![Some(4000), Some(1000)]);
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let mut r = recs(&[&[1.0, 2.0], &[1.0, 2.0]]);
        r[3].env_steps = 2500;
        assert!(aggregate(&r, None, 1, 1).is_err());
        assert!(aggregate(&[], None, 1, 1).is_err());
    }

    #[test]
    fn median_of_even_count() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[2.0, f64::INFINITY, 1.0]), 2.0);
    }
}
