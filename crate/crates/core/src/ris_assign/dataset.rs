//! Oracle-labelled training data for the assignment network.
//!
//! An instance is a random receiver position plus `N_B` blockers dropped
//! uniformly on the floor, in the AP layout of trial 0 of the scenario.
//! Only instances with at least two clear APs are kept, since those are
//! the soft-handover cases the network is asked to solve.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{oracle_assign, AnnModel, Assignment};
use crate::error::{Error, Result};
use crate::geometry::VerticalCylinder;
use crate::handover::{clear_set, StepObservation};
use crate::simkit::{ScenarioConfig, World};

/// Instances drawn per accepted row before giving up.
const MAX_DRAWS_PER_ROW: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oracle {
    BruteForce,
    CoordinateAscent,
}

impl Oracle {
    fn as_str(self) -> &'static str {
        match self {
            Oracle::BruteForce => "brute-force",
            Oracle::CoordinateAscent => "coordinate-ascent",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "brute-force" => Ok(Oracle::BruteForce),
            "coordinate-ascent" => Ok(Oracle::CoordinateAscent),
            _ => Err(Error::parse("dataset CSV", format!("unknown oracle `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    /// Blockage degree per AP.
    pub xi: Vec<f64>,
    pub x: f64,
    pub y: f64,
    pub label: Assignment,
    pub oracle: Oracle,
    /// Clear APs `𝓛` of the instance.
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub n_aps: usize,
    pub n_elements: usize,
    pub rows: Vec<TrainingRow>,
}

/// Draws one instance: receiver position, blockers, observation, `𝓛`.
pub fn sample_instance(
    world: &World,
    cfg: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(StepObservation, Vec<usize>)> {
    let p = world.user_area.sample(rng);
    let bodies = (0..cfg.mobility.blockers)
        .map(|_| {
            let c = world.blocker_area.sample(rng);
            VerticalCylinder::new(c.x, c.y, cfg.mobility.blocker_radius, cfg.mobility.blocker_height)
        })
        .collect::<Result<Vec<_>>>()?;
    let obs = world.observe(p.x, p.y, &bodies, true)?;
    let clear = clear_set(&obs, &cfg.handover_config());
    Ok((obs, clear))
}

/// `count` labelled soft-handover instances, deterministic in `seed`.
pub fn generate_dataset(cfg: &ScenarioConfig, count: usize, seed: u64) -> Result<TrainingSet> {
    if count == 0 {
        return Err(Error::Config("dataset count must be >= 1".into()));
    }
    let world = World::build(cfg, 0)?;
    let (n, m) = (world.aps.len(), world.elements.len());
    if n < 2 || m == 0 {
        return Err(Error::Config(format!(
            "datasets need N >= 2 and M >= 1 (scenario has N={n}, M={m})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(count);
    let mut draws = 0;
    while rows.len() < count {
        draws += 1;
        if draws > MAX_DRAWS_PER_ROW * count {
            return Err(Error::Config(
                "blockage is too dense: almost no instance has two clear APs".into(),
            ));
        }
        let (obs, clear) = sample_instance(&world, cfg, &mut rng)?;
        if clear.len() < 2 {
            continue;
        }
        let (label, oracle) = oracle_assign(&obs.ctx, &clear, cfg.handover.max_rounds)?;
        rows.push(TrainingRow {
            xi: obs.degrees,
            x: obs.rx_xy.0,
            y: obs.rx_xy.1,
            label,
            oracle,
            candidates: clear,
        });
    }
    Ok(TrainingSet {
        n_aps: n,
        n_elements: m,
        rows,
    })
}

impl TrainingSet {
    /// Column names: `xi_1..xi_N, x, y, X_1..X_M, oracle, candidates`.
    pub fn header(n_aps: usize, n_elements: usize) -> Vec<String> {
        let mut h: Vec<String> = (1..=n_aps).map(|i| format!("xi_{i}")).collect();
        h.push("x".into());
        h.push("y".into());
        h.extend((1..=n_elements).map(|j| format!("X_{j}")));
        h.push("oracle".into());
        h.push("candidates".into());
        h
    }

    /// CSV with floats in shortest round-trip form; `candidates` lists the
    /// clear AP ids separated by `;`.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::header(self.n_aps, self.n_elements))
            .expect("in-memory write");
        for r in &self.rows {
            let mut rec: Vec<String> = r.xi.iter().map(f64::to_string).collect();
            rec.push(r.x.to_string());
            rec.push(r.y.to_string());
            rec.extend(r.label.iter().map(usize::to_string));
            rec.push(r.oracle.as_str().into());
            rec.push(r.candidates.iter().map(usize::to_string).collect::<Vec<_>>().join(";"));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let ctx = "dataset CSV";
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| Error::parse(ctx, e))?.clone();
        let n = header.iter().filter(|h| h.starts_with("xi_")).count();
        let m = header.iter().filter(|h| h.starts_with("X_")).count();
        if header.iter().ne(Self::header(n, m).iter().map(String::as_str)) {
            return Err(Error::parse(ctx, "unexpected header row"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(ctx, format!("`{s}`: {e}")));
        let id = |s: &str| -> Result<usize> {
            let v = s.parse::<usize>().map_err(|e| Error::parse(ctx, format!("`{s}`: {e}")))?;
            if v == 0 || v > n {
                return Err(Error::parse(ctx, format!("AP id {v} out of range")));
            }
            Ok(v)
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::parse(ctx, e))?;
            let xi = (0..n).map(|i| num(&rec[i])).collect::<Result<Vec<_>>>()?;
            if xi.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::parse(ctx, "blockage degree outside [0, 1]"));
            }
            let candidates = rec[n + m + 3]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(id)
                .collect::<Result<Vec<_>>>()?;
            let label = (0..m).map(|j| id(&rec[n + 2 + j])).collect::<Result<Vec<_>>>()?;
            if label.iter().any(|l| !candidates.contains(l)) {
                return Err(Error::parse(ctx, "label outside the candidate set"));
            }
            rows.push(TrainingRow {
                xi,
                x: num(&rec[n])?,
                y: num(&rec[n + 1])?,
                label,
                oracle: Oracle::parse(&rec[n + m + 2])?,
                candidates,
            });
        }
        Ok(TrainingSet {
            n_aps: n,
            n_elements: m,
            rows,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    /// Mean over instances of `1/|𝓛|`, the hit rate of a uniform guess.
    pub fn uniform_baseline(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| 1.0 / r.candidates.len() as f64).sum::<f64>()
            / self.rows.len() as f64
    }
}

/// Held-out comparison of a model against the oracle labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub instances: usize,
    /// Fraction of elements whose predicted AP equals the oracle's.
    pub agreement: f64,
    /// Fraction of instances predicted exactly.
    pub exact_match: f64,
    pub uniform_baseline: f64,
    /// Twice the uniform baseline.
    pub bound: f64,
    pub exceeds_bound: bool,
}

/// Top-1 agreement with predictions restricted to each instance's `𝓛`.
pub fn evaluate_agreement(model: &AnnModel, set: &TrainingSet) -> Result<AgreementReport> {
    if set.rows.is_empty() {
        return Err(Error::Domain("evaluation set is empty".into()));
    }
    let (mut hits, mut exact) = (0usize, 0usize);
    for r in &set.rows {
        let pred = model.predict(&r.xi, r.x, r.y, Some(&r.candidates))?;
        let h = pred.iter().zip(&r.label).filter(|(a, b)| a == b).count();
        hits += h;
        exact += usize::from(h == r.label.len());
    }
    let baseline = set.uniform_baseline();
    let agreement = hits as f64 / (set.rows.len() * set.n_elements) as f64;
    Ok(AgreementReport {
        instances: set.rows.len(),
        agreement,
        exact_match: exact as f64 / set.rows.len() as f64,
        uniform_baseline: baseline,
        bound: 2.0 * baseline,
        exceeds_bound: agreement > 2.0 * baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ris_assign::brute_force_assign;

    #[test]
    fn single_row_is_rederivable() {
        let cfg = ScenarioConfig::default();
        let a = generate_dataset(&cfg, 1, 99).unwrap();
        assert_eq!(a, generate_dataset(&cfg, 1, 99).unwrap());
        assert_eq!(a.rows.len(), 1);

        // Replay the draws by hand.
        let world = World::build(&cfg, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (obs, clear) = loop {
            let (o, c) = sample_instance(&world, &cfg, &mut rng).unwrap();
            if c.len() >= 2 {
                break (o, c);
            }
        };
        let r = &a.rows[0];
        assert_eq!((r.x, r.y), obs.rx_xy);
        assert_eq!(r.xi, obs.degrees);
        assert_eq!(r.candidates, clear);
        assert_eq!(r.label, brute_force_assign(&obs.ctx, &clear).unwrap());
        assert_eq!(r.oracle, Oracle::BruteForce);
    }

    #[test]
    fn labels_stay_inside_candidates() {
        let mut cfg = ScenarioConfig::default();
        cfg.mobility.blockers = 6;
        let set = generate_dataset(&cfg, 200, 5).unwrap();
        for r in &set.rows {
            assert!(r.candidates.len() >= 2);
            assert!(r.label.iter().all(|l| r.candidates.contains(l)));
            assert!(r.xi.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn csv_round_trip() {
        let set = generate_dataset(&ScenarioConfig::default(), 25, 1).unwrap();
        let csv = set.to_csv_string();
        assert!(csv.starts_with("xi_1,xi_2,xi_3,xi_4,x,y,X_1,X_2,X_3,X_4,oracle,candidates\n"));
        assert_eq!(TrainingSet::from_csv_str(&csv).unwrap(), set);
    }

    #[test]
    fn corrupt_csv_is_rejected() {
        let bad_label = "xi_1,xi_2,x,y,X_1,oracle,candidates\n0,0,1,1,3,brute-force,1;2\n";
        assert!(TrainingSet::from_csv_str(bad_label).is_err());
        let bad_xi = "xi_1,xi_2,x,y,X_1,oracle,candidates\n2,0,1,1,1,brute-force,1;2\n";
        assert!(TrainingSet::from_csv_str(bad_xi).is_err());
    }

    #[test]
    fn single_ap_scenarios_cannot_make_datasets() {
        let mut cfg = ScenarioConfig::default();
        cfg.aps.count = 1;
        assert!(generate_dataset(&cfg, 3, 0).is_err());
        assert!(generate_dataset(&ScenarioConfig::default(), 0, 0).is_err());
    }
}
