//! Parameter sweeps: for every axis value, RIS mode and mobility class, run
//! `trials` seeded trials and aggregate mean ± sample standard deviation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::trial::{build_strategy, run_paired_trial, run_trial_with, TrialMetrics};
use crate::error::{Error, Result};
use crate::handover::AssignStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Number of APs.
    #[serde(rename = "N")]
    ApCount,
    /// User speed (m/s).
    #[serde(rename = "speed")]
    UserSpeed,
    /// Number of blockers.
    #[serde(rename = "N_B")]
    Blockers,
    /// RIS on (1) or off (0).
    #[serde(rename = "ris")]
    Ris,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::ApCount => "N",
            SweepAxis::UserSpeed => "speed",
            SweepAxis::Blockers => "N_B",
            SweepAxis::Ris => "ris",
        }
    }

    /// `base` with the axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let count = |what: &str, min: f64| {
            if value.fract() == 0.0 && value >= min && value < 1e6 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{what} sweep value {value} is not a valid count")))
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepAxis::ApCount => cfg.aps.count = count("N", 1.0)?,
            SweepAxis::Blockers => cfg.mobility.blockers = count("N_B", 0.0)?,
            SweepAxis::UserSpeed => cfg.mobility.user_speed = value,
            SweepAxis::Ris => {
                if value != 0.0 && value != 1.0 {
                    return Err(Error::Config(format!("ris sweep value {value} is not 0 or 1")));
                }
                cfg.ris.enabled = value == 1.0;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "aps" => Ok(SweepAxis::ApCount),
            "speed" | "user-speed" => Ok(SweepAxis::UserSpeed),
            "N_B" | "blockers" => Ok(SweepAxis::Blockers),
            "ris" | "ris-enabled" => Ok(SweepAxis::Ris),
            _ => Err(Error::Config(format!(
                "unknown sweep axis `{s}` (expected N, speed, N_B or ris)"
            ))),
        }
    }
}

/// Named user speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityClass {
    pub name: String,
    pub speed: f64,
}

/// Which RIS modes and mobility classes each axis value is run under.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub ris_modes: Vec<bool>,
    pub mobility: Vec<MobilityClass>,
}

impl SweepPlan {
    /// Both RIS modes; low and high mobility from the config.
    pub fn standard(cfg: &ScenarioConfig) -> Self {
        SweepPlan {
            ris_modes: vec![true, false],
            mobility: vec![
                MobilityClass {
                    name: "low".into(),
                    speed: cfg.mobility.low_speed,
                },
                MobilityClass {
                    name: "high".into(),
                    speed: cfg.mobility.high_speed,
                },
            ],
        }
    }
}

/// Mean and sample standard deviation over the trials where the metric is
/// defined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Stat {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return Stat::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.len() > 1)
            .then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Stat {
            mean: Some(mean),
            std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub ris: bool,
    pub mobility: String,
    #[serde(rename = "R_h")]
    pub r_h: Stat,
    #[serde(rename = "R_s")]
    pub r_s: Stat,
    pub delta_h: Stat,
    pub delta_s: Stat,
    #[serde(rename = "N_h")]
    pub n_h: Stat,
    #[serde(rename = "N_s")]
    pub n_s: Stat,
    pub bridge_events: Stat,
    pub hole_frac: Stat,
    #[serde(rename = "R_mean")]
    pub r_mean: Stat,
    pub delta_mean: Stat,
    pub trials: usize,
}

impl SweepRow {
    pub fn aggregate(
        axis: SweepAxis,
        value: f64,
        ris: bool,
        mobility: &str,
        trials: &[TrialMetrics],
    ) -> Self {
        let s = |f: fn(&TrialMetrics) -> Option<f64>| Stat::of(trials.iter().map(f));
        SweepRow {
            axis,
            value,
            ris,
            mobility: mobility.to_string(),
            r_h: s(|t| t.r_h),
            r_s: s(|t| t.r_s),
            delta_h: s(|t| t.delta_h),
            delta_s: s(|t| t.delta_s),
            n_h: s(|t| Some(t.n_h as f64)),
            n_s: s(|t| Some(t.n_s as f64)),
            bridge_events: s(|t| Some(t.bridge_events as f64)),
            hole_frac: s(|t| Some(t.hole_frac)),
            r_mean: s(|t| Some(t.mean_rate)),
            delta_mean: s(|t| t.delta_mean),
            trials: trials.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<SweepRow>,
}

impl MetricsTable {
    pub fn find(&self, value: f64, ris: bool, mobility: &str) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.ris == ris && r.mobility == mobility)
    }
}

/// Per-trial results behind one table row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub value: f64,
    pub ris: bool,
    pub mobility: String,
    pub trials: Vec<TrialMetrics>,
    /// Steps where RIS lost to the paired no-RIS run (paired cells only).
    pub dominance_violations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub table: MetricsTable,
    pub cells: Vec<SweepCell>,
}

fn worker_count(cfg: &ScenarioConfig, jobs: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let wanted = if cfg.sim.threads == 0 { available } else { cfg.sim.threads };
    wanted.clamp(1, jobs.max(1))
}

/// `f(trial)` for every trial index, spread over scoped worker threads;
/// results come back in trial order.
fn for_each_trial<T: Send>(
    cfg: &ScenarioConfig,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let n = cfg.sim.trials;
    let workers = worker_count(cfg, n);
    if workers == 1 {
        return (0..n as u64).map(&f).collect();
    }
    let f = &f;
    let chunks: Vec<Result<Vec<T>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..n)
                        .step_by(workers)
                        .map(|t| f(t as u64))
                        .collect::<Result<Vec<T>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial worker panicked"))
            .collect()
    });
    let mut per_worker = chunks.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(n);
    let mut iters: Vec<_> = per_worker.iter_mut().map(|v| v.drain(..)).collect();
    for t in 0..n {
        out.push(iters[t % workers].next().expect("every trial produced a result"));
    }
    Ok(out)
}

/// Sweep with the standard plan (both RIS modes, low/high mobility).
pub fn run_sweep(cfg: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<MetricsTable> {
    run_sweep_with(cfg, axis, values, &SweepPlan::standard(cfg)).map(|o| o.table)
}

/// Full sweep. When both RIS modes are requested they are simulated as
/// paired runs on identical trajectories. On the `ris` axis the value
/// decides the mode; on the `speed` axis the value replaces the mobility
/// classes with a single `custom` class.
pub fn run_sweep_with(
    cfg: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    plan: &SweepPlan,
) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if plan.ris_modes.is_empty() || plan.mobility.is_empty() {
        return Err(Error::Config("sweep plan needs a RIS mode and a mobility class".into()));
    }
    cfg.validate()?;
    let mut cells = Vec::new();
    for &value in values {
        let at_value = axis.apply(cfg, value)?;
        let classes = if axis == SweepAxis::UserSpeed {
            vec![MobilityClass {
                name: "custom".into(),
                speed: value,
            }]
        } else {
            plan.mobility.clone()
        };
        let modes = if axis == SweepAxis::Ris {
            vec![at_value.ris.enabled]
        } else {
            plan.ris_modes.clone()
        };
        let mut value_cells = Vec::new();
        for class in &classes {
            let mut c = at_value.clone();
            c.mobility.user_speed = class.speed;
            c.validate()?;
            let strategy = build_strategy(&c)?;
            let paired = modes.contains(&true) && modes.contains(&false);
            if paired {
                let results = for_each_trial(&c, |t| run_paired_trial(&c, t, &strategy))?;
                let violations = results.iter().map(|p| p.dominance_violations).sum();
                for ris in [true, false] {
                    value_cells.push(SweepCell {
                        value,
                        ris,
                        mobility: class.name.clone(),
                        trials: results
                            .iter()
                            .map(|p| if ris { p.ris.clone() } else { p.baseline.clone() })
                            .collect(),
                        dominance_violations: violations,
                    });
                }
            } else {
                for &ris in &modes {
                    value_cells.push(single_cell(&c, value, ris, &class.name, &strategy)?);
                }
            }
        }
        // Row order within a value: RIS modes as requested, then mobility.
        for &ris in &modes {
            for class in &classes {
                if let Some(i) = value_cells
                    .iter()
                    .position(|cell| cell.ris == ris && cell.mobility == class.name)
                {
                    cells.push(value_cells.remove(i));
                }
            }
        }
    }
    let table = MetricsTable {
        rows: cells
            .iter()
            .map(|c| SweepRow::aggregate(axis, c.value, c.ris, &c.mobility, &c.trials))
            .collect(),
    };
    Ok(SweepOutcome { table, cells })
}

fn single_cell(
    cfg: &ScenarioConfig,
    value: f64,
    ris: bool,
    mobility: &str,
    strategy: &AssignStrategy,
) -> Result<SweepCell> {
    let mut c = cfg.clone();
    c.ris.enabled = ris;
    let trials = for_each_trial(&c, |t| run_trial_with(&c, t, strategy))?;
    Ok(SweepCell {
        value,
        ris,
        mobility: mobility.to_string(),
        trials,
        dominance_violations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::run_trial;

    fn small() -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.sim.duration = 1.0;
        c.sim.trials = 2;
        c
    }

    #[test]
    fn axis_names_parse() {
        for axis in [SweepAxis::ApCount, SweepAxis::UserSpeed, SweepAxis::Blockers, SweepAxis::Ris] {
            assert_eq!(axis.name().parse::<SweepAxis>().unwrap(), axis);
        }
        assert!("colour".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn bad_axis_values_are_rejected() {
        let c = small();
        assert!(SweepAxis::ApCount.apply(&c, 2.5).is_err());
        assert!(SweepAxis::ApCount.apply(&c, 0.0).is_err());
        assert!(SweepAxis::Ris.apply(&c, 0.5).is_err());
        assert!(SweepAxis::UserSpeed.apply(&c, -1.0).is_err());
        assert_eq!(SweepAxis::Blockers.apply(&c, 0.0).unwrap().mobility.blockers, 0);
    }

    #[test]
    fn cardinality_over_ap_counts() {
        let t = run_sweep(&small(), SweepAxis::ApCount, &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(t.rows.len(), 3 * 2 * 2);
        for ris in [true, false] {
            for mob in ["low", "high"] {
                assert_eq!(t.rows.iter().filter(|r| r.ris == ris && r.mobility == mob).count(), 3);
            }
        }
        assert!(t.rows.iter().all(|r| r.trials == 2));
    }

    #[test]
    fn single_trial_sweep_equals_run_trial() {
        let mut c = small();
        c.sim.trials = 1;
        let plan = SweepPlan {
            ris_modes: vec![true],
            mobility: vec![MobilityClass { name: "low".into(), speed: 0.5 }],
        };
        let out = run_sweep_with(&c, SweepAxis::ApCount, &[4.0], &plan).unwrap();
        let m = run_trial(&c, 0).unwrap();
        assert_eq!(out.cells[0].trials, vec![m.clone()]);
        let row = &out.table.rows[0];
        assert_eq!(row.r_mean.mean, Some(m.mean_rate));
        assert_eq!(row.r_mean.std, None);
        assert_eq!(row.n_h.mean, Some(m.n_h as f64));
    }

    #[test]
    fn threads_do_not_change_results() {
        let mut c = small();
        c.sim.trials = 3;
        c.sim.threads = 1;
        let a = run_sweep(&c, SweepAxis::ApCount, &[3.0]).unwrap();
        c.sim.threads = 3;
        let b = run_sweep(&c, SweepAxis::ApCount, &[3.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stat_uses_sample_deviation() {
        let s = Stat::of([Some(1.0), None, Some(3.0)]);
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.std, Some(2f64.sqrt()));
        assert_eq!(Stat::of([None, None]), Stat::default());
    }

    #[test]
    fn speed_axis_uses_one_custom_class() {
        let t = run_sweep(&small(), SweepAxis::UserSpeed, &[1.0]).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r.mobility == "custom"));
        let t = run_sweep(&small(), SweepAxis::Ris, &[0.0, 1.0]).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows.iter().all(|r| r.ris == (r.value == 1.0)));
    }
}
