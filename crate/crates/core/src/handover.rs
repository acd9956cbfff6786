//! Proactive hard/soft handover with RIS support.
//!
//! Each call to [`step`] classifies the APs by blockage, picks the serving
//! set (one AP: hard, several: soft, none: RIS bridge or connectivity hole),
//! distributes the mirror elements, and updates the handover counters.
//! Counters move only when the serving set actually changes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::achievable_rate;
use crate::ris_assign::{
    brute_force_assign, coordinate_ascent_assign, oracle_assign, AnnModel, Assignment,
    ChannelContext,
};

/// How an AP is declared blocked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BlockageRule {
    /// Blocked iff `ξ ≥ 0.5`.
    #[default]
    BinaryApprox,
    /// Blocked iff the photocurrent falls below the configured threshold.
    Threshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandoverConfig {
    /// Photocurrent threshold (A) for [`BlockageRule::Threshold`].
    pub current_threshold: f64,
    /// Handover signaling payload (bits).
    pub signaling_bits: f64,
    pub ris_enabled: bool,
    pub rule: BlockageRule,
}

impl HandoverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.current_threshold > 0.0) {
            return Err(Error::Config("current threshold must be > 0".into()));
        }
        if !(self.signaling_bits > 0.0) {
            return Err(Error::Config("handover signaling size must be > 0".into()));
        }
        Ok(())
    }
}

/// Photocurrent `(1 − ξ)·r·h^LoS·P` (A).
pub fn electrical_current(degree: f64, responsivity: f64, los_gain: f64, power: f64) -> f64 {
    (1.0 - degree) * responsivity * los_gain * power
}

/// Blockage probability from the blockage degree: 1 if `ξ ≥ 0.5`, else 0.
pub fn blockage_probability(degree: f64) -> u8 {
    u8::from(degree >= 0.5)
}

/// Blockage probability for a realized photocurrent: 1 if `I < 𝓘`, else 0.
pub fn blockage_probability_threshold(current: f64, threshold: f64) -> u8 {
    u8::from(current < threshold)
}

/// Handover latency `S_HO / R`; `None` when the rate is zero.
pub fn handover_latency(rate: f64, signaling_bits: f64) -> Option<f64> {
    (rate > 0.0).then(|| signaling_bits / rate)
}

/// How soft-handover elements are distributed.
#[derive(Debug, Clone)]
pub enum AssignStrategy {
    BruteForce,
    CoordinateAscent { max_rounds: usize },
    /// Brute force within the enumeration limit, else coordinate ascent.
    Oracle { max_rounds: usize },
    Ann(std::sync::Arc<AnnModel>),
}

impl AssignStrategy {
    pub fn assign(
        &self,
        obs: &StepObservation,
        candidates: &[usize],
    ) -> Result<Assignment> {
        match self {
            AssignStrategy::BruteForce => brute_force_assign(&obs.ctx, candidates),
            AssignStrategy::CoordinateAscent { max_rounds } => {
                coordinate_ascent_assign(&obs.ctx, candidates, *max_rounds)
            }
            AssignStrategy::Oracle { max_rounds } => {
                oracle_assign(&obs.ctx, candidates, *max_rounds).map(|(a, _)| a)
            }
            AssignStrategy::Ann(model) => model.predict(
                &obs.degrees,
                obs.rx_xy.0,
                obs.rx_xy.1,
                Some(candidates),
            ),
        }
    }
}

/// Everything the decision logic sees at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StepObservation {
    /// Blockage degree `ξ_i` per AP.
    pub degrees: Vec<f64>,
    /// Unblocked LoS gain `h_i^LoS` per AP.
    pub los_gain: Vec<f64>,
    /// Optical power `P_i` per AP.
    pub power: Vec<f64>,
    pub responsivity: f64,
    /// Receiver floor position, the ANN's position input.
    pub rx_xy: (f64, f64),
    /// Gated LoS gains, steered RIS gains, SNR scaling, distances.
    pub ctx: ChannelContext,
}

/// Outcome class of a step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    NoChange,
    Hard(usize),
    Soft(Vec<usize>),
    RisBridge(usize),
    Hole,
}

/// Branch that produced the step's rate, independent of whether the
/// serving set changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Hard,
    Soft,
    Bridge,
    Hole,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HandoverRecord {
    pub decision: Decision,
    pub mode: Mode,
    pub serving: Vec<usize>,
    /// Achieved rate (bit/s).
    pub rate: f64,
    /// Latency of the executed handover (s); 0 without a handover.
    pub latency: f64,
    pub assignment: Assignment,
    /// Whether any AP could reach the receiver through some element.
    pub ris_reachable: bool,
}

impl HandoverRecord {
    pub fn is_execution(&self) -> bool {
        !matches!(self.decision, Decision::NoChange | Decision::Hole)
    }
}

/// Running state of one user's handover process.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HandoverState {
    pub serving: Vec<usize>,
    /// Hard handover executions, RIS bridges included.
    pub n_hard: u64,
    pub n_soft: u64,
    pub bridge_events: u64,
    pub hole_steps: u64,
    /// Holes that happened although some element reached the receiver.
    pub reachable_hole_steps: u64,
    pub steps: u64,
    pub rate_sum: f64,
    pub hard_rate_sum: f64,
    pub soft_rate_sum: f64,
    pub hard_latency_sum: f64,
    pub soft_latency_sum: f64,
}

impl HandoverState {
    pub fn new() -> Self {
        Self::default()
    }
}

fn blocked(obs: &StepObservation, cfg: &HandoverConfig, i: usize) -> bool {
    match cfg.rule {
        BlockageRule::BinaryApprox => blockage_probability(obs.degrees[i]) == 1,
        BlockageRule::Threshold => {
            let current = electrical_current(
                obs.degrees[i],
                obs.responsivity,
                obs.los_gain[i],
                obs.power[i],
            );
            blockage_probability_threshold(current, cfg.current_threshold) == 1
        }
    }
}

/// APs not declared blocked under `cfg.rule`, as ascending ids.
pub fn clear_set(obs: &StepObservation, cfg: &HandoverConfig) -> Vec<usize> {
    (0..obs.degrees.len())
        .filter(|&i| !blocked(obs, cfg, i))
        .map(|i| i + 1)
        .collect()
}

/// RIS-only fallback: all elements focus the closest AP that some element
/// can actually reach; `None` when no element reaches the receiver.
fn bridge(obs: &StepObservation) -> Option<(usize, Assignment, f64)> {
    let ctx = &obs.ctx;
    let m = ctx.element_count();
    let mut order: Vec<usize> = (1..=ctx.ap_count()).collect();
    order.sort_by(|&a, &b| {
        ctx.distance[a - 1]
            .total_cmp(&ctx.distance[b - 1])
            .then(a.cmp(&b))
    });
    order.into_iter().find_map(|id| {
        let h: f64 = ctx.ris[id - 1].iter().sum();
        let snr = ctx.snr_per_gain_sq[id - 1] * h * h;
        let rate = achievable_rate(ctx.bandwidth, snr);
        (rate > 0.0).then(|| (id, vec![id; m], rate))
    })
}

/// One decision step.
///
/// With RIS disabled the element gains are ignored and an all-blocked
/// instant becomes a connectivity hole (serving set emptied).
pub fn step(
    state: &mut HandoverState,
    obs: &StepObservation,
    cfg: &HandoverConfig,
    strategy: &AssignStrategy,
) -> Result<HandoverRecord> {
    let n = obs.degrees.len();
    if n == 0 {
        return Err(Error::Config("handover step needs at least one AP".into()));
    }
    if obs.ctx.ap_count() != n || obs.los_gain.len() != n || obs.power.len() != n {
        return Err(Error::Config("inconsistent per-AP observation lengths".into()));
    }

    let ris = cfg.ris_enabled && obs.ctx.element_count() > 0;
    let ris_reachable = ris && obs.ctx.ris.iter().flatten().any(|&g| g > 0.0);
    // An empty assignment leaves only the gated LoS terms in the score.
    let ctx = &obs.ctx;
    let m = if ris { ctx.element_count() } else { 0 };

    let clear = clear_set(obs, cfg);

    let mut outcome = match clear.len() {
        0 => None,
        1 => {
            let a = clear[0];
            let assignment = vec![a; m];
            let rate = ctx.rate(&clear, &assignment);
            Some((Mode::Hard, clear.clone(), assignment, rate))
        }
        _ => {
            let assignment = if ris {
                strategy.assign(obs, &clear)?
            } else {
                Vec::new()
            };
            let rate = ctx.rate(&clear, &assignment);
            Some((Mode::Soft, clear.clone(), assignment, rate))
        }
    };
    // A zero-rate link is no link; fall back as if everything were blocked.
    if outcome.as_ref().is_some_and(|o| o.3 <= 0.0) {
        outcome = None;
    }
    let (mode, serving, assignment, rate) = match outcome {
        Some(o) => o,
        None => match ris.then(|| bridge(obs)).flatten() {
            Some((id, assignment, rate)) => (Mode::Bridge, vec![id], assignment, rate),
            None => (Mode::Hole, Vec::new(), Vec::new(), 0.0),
        },
    };

    let changed = serving != state.serving;
    let decision = match mode {
        Mode::Hole => Decision::Hole,
        _ if !changed => Decision::NoChange,
        Mode::Hard => Decision::Hard(serving[0]),
        Mode::Soft => Decision::Soft(serving.clone()),
        Mode::Bridge => Decision::RisBridge(serving[0]),
    };
    let latency = match decision {
        Decision::NoChange | Decision::Hole => 0.0,
        _ => handover_latency(rate, cfg.signaling_bits).expect("executed handovers have rate > 0"),
    };

    state.steps += 1;
    state.rate_sum += rate;
    match &decision {
        Decision::Hard(_) | Decision::RisBridge(_) => {
            state.n_hard += 1;
            state.hard_rate_sum += rate;
            state.hard_latency_sum += latency;
            if mode == Mode::Bridge {
                state.bridge_events += 1;
            }
        }
        Decision::Soft(_) => {
            state.n_soft += 1;
            state.soft_rate_sum += rate;
            state.soft_latency_sum += latency;
        }
        Decision::Hole => {
            state.hole_steps += 1;
            if ris_reachable {
                state.reachable_hole_steps += 1;
            }
        }
        Decision::NoChange => {}
    }
    state.serving.clone_from(&serving);

    Ok(HandoverRecord {
        decision,
        mode,
        serving,
        rate,
        latency,
        assignment,
        ris_reachable,
    })
}
