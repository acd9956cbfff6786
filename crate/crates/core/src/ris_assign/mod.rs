//! RIS element → AP assignment.
//!
//! Three strategies share one objective, the combined rate `R₀` over the
//! candidate APs: exhaustive search (the labelling oracle), coordinate
//! ascent (scales to large `|𝓛|^M`), and a small neural network trained to
//! imitate the oracle.

pub mod ann;
pub mod dataset;

pub use ann::{AnnModel, Hyperparams, Optimizer, TrainReport};
pub use dataset::{
    evaluate_agreement, generate_dataset, AgreementReport, Oracle, TrainingRow, TrainingSet,
};

use crate::error::{Error, Result};
use crate::optics::achievable_rate;

/// `X_j` for every element, as 1-based AP ids.
pub type Assignment = Vec<usize>;

/// Largest `|𝓛|^M` that [`brute_force_assign`] will enumerate.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Per-instant channel terms needed to score an assignment.
///
/// Index `i` refers to AP id `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelContext {
    /// Blockage-gated LoS gain `I_i·h_i^LoS`.
    pub los: Vec<f64>,
    /// `ris[i][j]`: gain of element `j` when steered to serve AP `i`.
    pub ris: Vec<Vec<f64>>,
    /// SNR per squared gain, `(r·P_i)² / (N₀B)`.
    pub snr_per_gain_sq: Vec<f64>,
    /// AP–receiver distance, used to pick the closest AP.
    pub distance: Vec<f64>,
    pub bandwidth: f64,
}

impl ChannelContext {
    pub fn ap_count(&self) -> usize {
        self.los.len()
    }

    pub fn element_count(&self) -> usize {
        self.ris.first().map_or(0, Vec::len)
    }

    /// Channel gain of AP `id` under `assignment`.
    pub fn gain(&self, id: usize, assignment: &[usize]) -> f64 {
        let i = id - 1;
        let ris: f64 = assignment
            .iter()
            .zip(&self.ris[i])
            .filter(|(&x, _)| x == id)
            .map(|(_, g)| g)
            .sum();
        self.los[i] + ris
    }

    /// `Σ_{i∈𝓛} η_i` under `assignment`.
    pub fn snr_sum(&self, candidates: &[usize], assignment: &[usize]) -> f64 {
        candidates
            .iter()
            .map(|&id| {
                let h = self.gain(id, assignment);
                self.snr_per_gain_sq[id - 1] * h * h
            })
            .sum()
    }

    /// Combined rate `R₀` over `candidates`.
    pub fn rate(&self, candidates: &[usize], assignment: &[usize]) -> f64 {
        achievable_rate(self.bandwidth, self.snr_sum(candidates, assignment))
    }

    /// Candidate closest to the receiver; ties go to the lowest id.
    pub fn closest(&self, candidates: &[usize]) -> Option<usize> {
        candidates.iter().copied().min_by(|&a, &b| {
            self.distance[a - 1]
                .total_cmp(&self.distance[b - 1])
                .then(a.cmp(&b))
        })
    }

    fn check_candidates(&self, candidates: &[usize]) -> Result<()> {
        if candidates.is_empty() {
            return Err(Error::Domain("candidate AP set is empty".into()));
        }
        if let Some(&bad) = candidates.iter().find(|&&c| c == 0 || c > self.ap_count()) {
            return Err(Error::Domain(format!("candidate AP id {bad} out of range")));
        }
        Ok(())
    }
}

/// Exhaustive search over all `|𝓛|^M` assignments for the one maximizing
/// `R₀`; ties resolve to the lexicographically smallest assignment.
pub fn brute_force_assign(ctx: &ChannelContext, candidates: &[usize]) -> Result<Assignment> {
    ctx.check_candidates(candidates)?;
    let m = ctx.element_count();
    let needed = (candidates.len() as f64).powi(m as i32);
    if needed > ENUMERATION_LIMIT as f64 {
        return Err(Error::EnumerationGuard {
            needed,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();

    // Odometer over candidate indices; the last element varies fastest, so
    // assignments are visited in lexicographic order.
    let mut digits = vec![0usize; m];
    let mut current: Assignment = vec![sorted[0]; m];
    let mut best = current.clone();
    let mut best_score = ctx.snr_sum(candidates, &current);
    loop {
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < sorted.len() {
                current[pos] = sorted[digits[pos]];
                break;
            }
            digits[pos] = 0;
            current[pos] = sorted[0];
        }
        let score = ctx.snr_sum(candidates, &current);
        if score > best_score {
            best_score = score;
            best.clone_from(&current);
        }
    }
}

/// Result of [`coordinate_ascent`], with the objective after every accepted move.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentOutcome {
    pub assignment: Assignment,
    /// `Σ η` at the start and after each improving move.
    pub history: Vec<f64>,
    pub rounds: usize,
}

/// Coordinate ascent from the all-to-closest start.
///
/// Each round revisits every element and moves it to the candidate that
/// most improves `Σ η` with the others held fixed. Stops after a round with
/// no move or after `max_rounds`.
pub fn coordinate_ascent(
    ctx: &ChannelContext,
    candidates: &[usize],
    max_rounds: usize,
) -> Result<AscentOutcome> {
    ctx.check_candidates(candidates)?;
    if max_rounds == 0 {
        return Err(Error::Config("coordinate ascent needs max_rounds >= 1".into()));
    }
    let start = ctx.closest(candidates).expect("candidates checked nonempty");
    coordinate_ascent_from(ctx, candidates, vec![start; ctx.element_count()], max_rounds)
}

/// Coordinate ascent from an explicit starting assignment.
pub fn coordinate_ascent_from(
    ctx: &ChannelContext,
    candidates: &[usize],
    mut assignment: Assignment,
    max_rounds: usize,
) -> Result<AscentOutcome> {
    ctx.check_candidates(candidates)?;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    let mut score = ctx.snr_sum(candidates, &assignment);
    let mut history = vec![score];
    let mut rounds = 0;
    while rounds < max_rounds {
        rounds += 1;
        let mut moved = false;
        for j in 0..assignment.len() {
            let keep = assignment[j];
            let mut best = (score, keep);
            for &c in &sorted {
                if c == keep {
                    continue;
                }
                assignment[j] = c;
                let s = ctx.snr_sum(candidates, &assignment);
                if s > best.0 {
                    best = (s, c);
                }
            }
            assignment[j] = best.1;
            if best.1 != keep {
                score = best.0;
                history.push(score);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(AscentOutcome {
        assignment,
        history,
        rounds,
    })
}

/// Coordinate-ascent assignment (see [`coordinate_ascent`]).
pub fn coordinate_ascent_assign(
    ctx: &ChannelContext,
    candidates: &[usize],
    max_rounds: usize,
) -> Result<Assignment> {
    coordinate_ascent(ctx, candidates, max_rounds).map(|o| o.assignment)
}

/// Oracle used for labels: brute force within the enumeration limit,
/// coordinate ascent beyond it.
pub fn oracle_assign(
    ctx: &ChannelContext,
    candidates: &[usize],
    max_rounds: usize,
) -> Result<(Assignment, Oracle)> {
    match brute_force_assign(ctx, candidates) {
        Ok(a) => Ok((a, Oracle::BruteForce)),
        Err(Error::EnumerationGuard { .. }) => {
            coordinate_ascent_assign(ctx, candidates, max_rounds).map(|a| (a, Oracle::CoordinateAscent))
        }
        Err(e) => Err(e),
    }
}
