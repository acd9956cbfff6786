//! One seeded trial: walkers move, the world is observed every `Δt`, and the
//! handover state machine runs on each observation.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{AssignerKind, ScenarioConfig};
use super::export::round_sig;
use super::rng::{derive_seed, STREAM_BLOCKER_BASE, STREAM_USER};
use super::world::World;
use crate::error::{Error, Result};
use crate::handover::{step, AssignStrategy, HandoverConfig, HandoverState};
use crate::mobility::{bodies_at, Blocker, WaypointTrack};
use crate::ris_assign::AnnModel;

/// Per-trial outputs. Rate and latency means are over executed handovers
/// of the given kind and are `None` when there were none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    #[serde(rename = "R_h")]
    pub r_h: Option<f64>,
    #[serde(rename = "R_s")]
    pub r_s: Option<f64>,
    pub delta_h: Option<f64>,
    pub delta_s: Option<f64>,
    #[serde(rename = "N_h")]
    pub n_h: u64,
    #[serde(rename = "N_s")]
    pub n_s: u64,
    pub bridge_events: u64,
    pub hole_frac: f64,
    /// Mean rate over all steps, holes included.
    #[serde(rename = "R_mean")]
    pub mean_rate: f64,
    /// Mean latency over all executed handovers.
    pub delta_mean: Option<f64>,
    pub steps: u64,
    pub hole_steps: u64,
    /// Hole steps during which some element could still reach the receiver.
    pub reachable_hole_steps: u64,
}

fn ratio(sum: f64, count: u64) -> Option<f64> {
    (count > 0).then(|| sum / count as f64)
}

impl TrialMetrics {
    pub fn from_state(s: &HandoverState) -> Self {
        let steps = s.steps.max(1) as f64;
        TrialMetrics {
            r_h: ratio(s.hard_rate_sum, s.n_hard),
            r_s: ratio(s.soft_rate_sum, s.n_soft),
            delta_h: ratio(s.hard_latency_sum, s.n_hard),
            delta_s: ratio(s.soft_latency_sum, s.n_soft),
            n_h: s.n_hard,
            n_s: s.n_soft,
            bridge_events: s.bridge_events,
            hole_frac: s.hole_steps as f64 / steps,
            mean_rate: s.rate_sum / steps,
            delta_mean: ratio(s.hard_latency_sum + s.soft_latency_sum, s.n_hard + s.n_soft),
            steps: s.steps,
            hole_steps: s.hole_steps,
            reachable_hole_steps: s.reachable_hole_steps,
        }
    }

    /// Copy with every float rounded to 9 significant digits.
    pub fn rounded(&self) -> Self {
        let r = |v: Option<f64>| v.map(round_sig);
        TrialMetrics {
            r_h: r(self.r_h),
            r_s: r(self.r_s),
            delta_h: r(self.delta_h),
            delta_s: r(self.delta_s),
            hole_frac: round_sig(self.hole_frac),
            mean_rate: round_sig(self.mean_rate),
            delta_mean: r(self.delta_mean),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("metrics serialize")
    }
}

/// Metrics of one trial plus the achieved rate of every step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub metrics: TrialMetrics,
    pub rates: Vec<f64>,
}

/// The same trajectories simulated with and without RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedTrial {
    pub ris: TrialMetrics,
    pub baseline: TrialMetrics,
    /// Steps where the RIS rate fell below the baseline rate.
    pub dominance_violations: u64,
}

/// Builds the soft-handover assigner named in the config.
pub fn build_strategy(cfg: &ScenarioConfig) -> Result<AssignStrategy> {
    let rounds = cfg.handover.max_rounds;
    Ok(match cfg.handover.assigner {
        AssignerKind::BruteForce => AssignStrategy::BruteForce,
        AssignerKind::CoordinateAscent => AssignStrategy::CoordinateAscent { max_rounds: rounds },
        AssignerKind::Oracle => AssignStrategy::Oracle { max_rounds: rounds },
        AssignerKind::Ann => {
            let path = cfg
                .handover
                .ann_model
                .as_ref()
                .ok_or_else(|| Error::Config("assigner \"ann\" needs handover.ann_model".into()))?;
            let model = AnnModel::load(path)?;
            let (n, m) = (cfg.aps.count, cfg.ris.element_count());
            if model.n_aps() != n || model.n_elements() != m {
                return Err(Error::Config(format!(
                    "ANN model is for N={}, M={} but the scenario has N={n}, M={m}",
                    model.n_aps(),
                    model.n_elements()
                )));
            }
            AssignStrategy::Ann(Arc::new(model))
        }
    })
}

struct Walkers {
    user: WaypointTrack,
    blockers: Vec<Blocker>,
}

fn walkers(cfg: &ScenarioConfig, world: &World, trial: u64) -> Result<Walkers> {
    let mob = &cfg.mobility;
    let user = WaypointTrack::new(
        world.user_area,
        mob.user_speed,
        derive_seed(cfg.seed, trial, STREAM_USER),
    )?;
    let blockers = (0..mob.blockers as u64)
        .map(|k| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, trial, STREAM_BLOCKER_BASE + k));
            let speed = rng.gen_range(mob.blocker_speed_min..=mob.blocker_speed_max);
            let track = WaypointTrack::new(world.blocker_area, speed, rng.gen())?;
            Blocker::new(track, mob.blocker_radius, mob.blocker_height)
        })
        .collect::<Result<_>>()?;
    Ok(Walkers { user, blockers })
}

/// Runs the step loop once, feeding every observation to one handover
/// process per entry of `ris_modes`.
fn simulate(
    cfg: &ScenarioConfig,
    trial: u64,
    strategy: &AssignStrategy,
    ris_modes: &[bool],
    mut on_step: impl FnMut(&[f64]),
) -> Result<Vec<HandoverState>> {
    let world = World::build(cfg, trial)?;
    let mut w = walkers(cfg, &world, trial)?;
    let base = cfg.handover_config();
    base.validate()?;
    let cfgs: Vec<HandoverConfig> = ris_modes
        .iter()
        .map(|&ris| HandoverConfig {
            ris_enabled: ris,
            ..base.clone()
        })
        .collect();
    let need_ris = ris_modes.iter().any(|&r| r) && !world.elements.is_empty();
    let mut states = vec![HandoverState::new(); ris_modes.len()];
    let mut rates = vec![0.0; ris_modes.len()];
    for k in 0..cfg.sim.steps() {
        let t = k as f64 * cfg.sim.dt;
        let p = w.user.position_at(t);
        let bodies = bodies_at(&mut w.blockers, t);
        let obs = world.observe(p.x, p.y, &bodies, need_ris)?;
        for ((state, hcfg), rate) in states.iter_mut().zip(&cfgs).zip(rates.iter_mut()) {
            *rate = step(state, &obs, hcfg, strategy)?.rate;
        }
        on_step(&rates);
    }
    Ok(states)
}

/// Trial `trial` of `cfg` with the configured assigner and RIS setting.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64) -> Result<TrialMetrics> {
    let strategy = build_strategy(cfg)?;
    run_trial_with(cfg, trial, &strategy)
}

pub fn run_trial_with(
    cfg: &ScenarioConfig,
    trial: u64,
    strategy: &AssignStrategy,
) -> Result<TrialMetrics> {
    let states = simulate(cfg, trial, strategy, &[cfg.ris.enabled], |_| {})?;
    Ok(TrialMetrics::from_state(&states[0]))
}

/// Like [`run_trial`], also returning the per-step rates.
pub fn run_trial_traced(cfg: &ScenarioConfig, trial: u64) -> Result<TrialTrace> {
    let strategy = build_strategy(cfg)?;
    let mut rates = Vec::with_capacity(cfg.sim.steps());
    let states = simulate(cfg, trial, &strategy, &[cfg.ris.enabled], |r| rates.push(r[0]))?;
    Ok(TrialTrace {
        metrics: TrialMetrics::from_state(&states[0]),
        rates,
    })
}

/// RIS and no-RIS handover processes driven by identical observations.
pub fn run_paired_trial(
    cfg: &ScenarioConfig,
    trial: u64,
    strategy: &AssignStrategy,
) -> Result<PairedTrial> {
    let mut violations = 0;
    let states = simulate(cfg, trial, strategy, &[true, false], |r| {
        if r[0] < r[1] {
            violations += 1;
        }
    })?;
    Ok(PairedTrial {
        ris: TrialMetrics::from_state(&states[0]),
        baseline: TrialMetrics::from_state(&states[1]),
        dominance_violations: violations,
    })
}
