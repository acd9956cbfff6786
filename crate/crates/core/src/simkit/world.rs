//! Static scene of one trial (APs, RIS grid, receiver template) and the
//! per-instant observation the handover logic consumes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Placement, ScenarioConfig};
use super::rng::{derive_seed, STREAM_PLACEMENT};
use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3, VerticalCylinder};
use crate::handover::StepObservation;
use crate::mobility::{blockage_degree, blockage_indicator, Footprint, SampleDisc};
use crate::ocdma::{estimate_ap_powers, hadamard_codebook, spread, spreading_factor_for, Codebook};
use crate::optics::{
    compute_mirror_angles, lambertian_gain, lambertian_order, mirror_element_gain, AccessPoint,
    NoiseModel, Receiver, RisElement, Wall,
};
use crate::ris_assign::ChannelContext;

const PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct World {
    pub aps: Vec<AccessPoint>,
    pub elements: Vec<RisElement>,
    /// Receiver parameters; the position is set per observation.
    pub receiver: Receiver,
    pub noise: NoiseModel,
    pub disc: SampleDisc,
    pub ris_blocking: bool,
    pub codebook: Codebook,
    pub dc_offset: f64,
    pub pilot_bits: usize,
    /// Floor area reachable by the user.
    pub user_area: Footprint,
    /// Floor area reachable by blockers.
    pub blocker_area: Footprint,
}

/// Ceiling AP positions for trial `trial`.
///
/// Random placement draws APs one at a time, so the layout for `N` APs is
/// the first `N` positions of the layout for any larger count.
pub fn place_aps(cfg: &ScenarioConfig, trial: u64) -> Result<Vec<Point3>> {
    let room = &cfg.room;
    let n = cfg.aps.count;
    match cfg.aps.placement {
        Placement::Grid => {
            let cols = (n as f64).sqrt().ceil() as usize;
            let rows = n.div_ceil(cols);
            Ok((0..n)
                .map(|k| {
                    let (r, c) = (k / cols, k % cols);
                    Vec3::new(
                        (c as f64 + 0.5) * room.width / cols as f64,
                        (r as f64 + 0.5) * room.depth / rows as f64,
                        room.height,
                    )
                })
                .collect())
        }
        Placement::RandomCeiling => {
            let area = Footprint::inset(room.width, room.depth, cfg.aps.margin)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, trial, STREAM_PLACEMENT));
            let mut placed: Vec<Point3> = Vec::with_capacity(n);
            while placed.len() < n {
                let mut attempts = 0;
                let p = loop {
                    attempts += 1;
                    if attempts > PLACEMENT_ATTEMPTS {
                        return Err(Error::Config(format!(
                            "cannot place {n} APs at least {} m apart",
                            cfg.aps.min_spacing
                        )));
                    }
                    let p = Vec3::new(
                        rng.gen_range(area.x_min..=area.x_max),
                        rng.gen_range(area.y_min..=area.y_max),
                        room.height,
                    );
                    if placed.iter().all(|q| q.distance(p) >= cfg.aps.min_spacing) {
                        break p;
                    }
                };
                placed.push(p);
            }
            Ok(placed)
        }
    }
}

/// RIS grid on the configured wall, row 0 on top, ids row-major from 1.
pub fn ris_elements(cfg: &ScenarioConfig) -> Vec<RisElement> {
    let s = &cfg.ris;
    let room = &cfg.room;
    let wall = s.wall;
    let corner = match wall {
        Wall::West => Vec3::new(0.0, 0.0, 0.0),
        Wall::East => Vec3::new(room.width, room.depth, 0.0),
        Wall::South => Vec3::new(room.width, 0.0, 0.0),
        Wall::North => Vec3::new(0.0, room.depth, 0.0),
    };
    let mut out = Vec::with_capacity(s.element_count());
    for r in 0..s.rows {
        for c in 0..s.cols {
            let along = s.center_along + (c as f64 - (s.cols - 1) as f64 / 2.0) * s.pitch;
            let up = s.center_height + ((s.rows - 1) as f64 / 2.0 - r as f64) * s.pitch;
            out.push(RisElement {
                id: out.len() + 1,
                wall,
                midpoint: corner + wall.along() * along + Vec3::UP * up,
                width: s.element_width,
                height: s.element_height,
                yaw: 0.0,
                roll: 0.0,
                reflectance: s.reflectance,
                max_yaw: s.max_yaw_deg.to_radians(),
                max_roll: s.max_roll_deg.to_radians(),
            });
        }
    }
    out
}

/// Gain of `elem` after steering it from `ap` toward the receiver; zero if
/// the steering is infeasible or the reflected ray misses the PD.
pub fn steered_gain(
    ap: &AccessPoint,
    elem: &RisElement,
    rx: &Receiver,
    bodies: &[VerticalCylinder],
    ris_blocking: bool,
) -> f64 {
    match compute_mirror_angles(ap.position, elem, rx.position) {
        Ok(s) => mirror_element_gain(ap, &elem.with_angles(s.yaw, s.roll), rx, bodies, ris_blocking),
        Err(_) => 0.0,
    }
}

impl World {
    pub fn build(cfg: &ScenarioConfig, trial: u64) -> Result<World> {
        cfg.validate()?;
        let m = lambertian_order(cfg.aps.half_power_angle_deg.to_radians());
        let aps: Vec<AccessPoint> = place_aps(cfg, trial)?
            .into_iter()
            .enumerate()
            .map(|(i, position)| AccessPoint {
                id: i + 1,
                position,
                power: cfg.aps.power,
                lambertian_order: m,
                code_index: i + 1,
            })
            .collect();
        for ap in &aps {
            ap.validate()?;
        }
        let elements = ris_elements(cfg);
        for e in &elements {
            e.validate()?;
        }
        let rc = &cfg.receiver;
        let receiver = Receiver {
            position: Vec3::new(0.0, 0.0, rc.height),
            area: rc.area,
            fov: rc.fov_deg.to_radians(),
            responsivity: rc.responsivity,
            filter_gain: rc.filter_gain,
            concentrator_gain: rc.concentrator_gain,
        };
        receiver.validate()?;
        let noise = cfg.channel.noise();
        noise.validate()?;
        let room = &cfg.room;
        let walk = Footprint::inset(room.width, room.depth, cfg.mobility.margin)?;
        Ok(World {
            codebook: hadamard_codebook(spreading_factor_for(aps.len()))?,
            aps,
            elements,
            receiver,
            noise,
            disc: SampleDisc::new(cfg.blockage.samples, cfg.blockage.disc_radius)?,
            ris_blocking: cfg.ris.blocking,
            dc_offset: cfg.ocdma.dc_offset,
            pilot_bits: cfg.ocdma.pilot_bits,
            user_area: walk,
            blocker_area: walk,
        })
    }

    pub fn receiver_at(&self, x: f64, y: f64) -> Receiver {
        self.receiver.at(Vec3::new(x, y, self.receiver.position.z))
    }

    /// Channel state for a receiver at floor position `(x, y)`. RIS gains
    /// are only computed when `with_ris` is set; otherwise they are zero.
    pub fn observe(
        &self,
        x: f64,
        y: f64,
        bodies: &[VerticalCylinder],
        with_ris: bool,
    ) -> Result<StepObservation> {
        let rx = self.receiver_at(x, y);
        // Walkers pass through each other; a body enclosing the PD is an
        // overlap, not a blockage.
        let bodies: Vec<VerticalCylinder> = bodies
            .iter()
            .filter(|b| (b.center_x - x).hypot(b.center_y - y) >= b.radius)
            .copied()
            .collect();
        let bodies = bodies.as_slice();
        let n = self.aps.len();
        let m = self.elements.len();
        let mut degrees = Vec::with_capacity(n);
        let mut los_gain = Vec::with_capacity(n);
        let mut los = Vec::with_capacity(n);
        let mut ris = Vec::with_capacity(n);
        let mut snr_per_gain_sq = Vec::with_capacity(n);
        let mut distance = Vec::with_capacity(n);
        let noise = self.noise.power();
        for ap in &self.aps {
            let h = lambertian_gain(ap, &rx)?;
            let clear = blockage_indicator(ap.position, rx.position, bodies);
            degrees.push(blockage_degree(ap.position, rx.position, bodies, &self.disc));
            los_gain.push(h);
            los.push(if clear { h } else { 0.0 });
            ris.push(if with_ris {
                self.elements
                    .iter()
                    .map(|e| steered_gain(ap, e, &rx, bodies, self.ris_blocking))
                    .collect()
            } else {
                vec![0.0; m]
            });
            let a = rx.responsivity * ap.power;
            snr_per_gain_sq.push(a * a / noise);
            distance.push(ap.position.distance(rx.position));
        }
        Ok(StepObservation {
            degrees,
            los_gain,
            power: self.aps.iter().map(|a| a.power).collect(),
            responsivity: rx.responsivity,
            rx_xy: (x, y),
            ctx: ChannelContext {
                los,
                ris,
                snr_per_gain_sq,
                distance,
                bandwidth: self.noise.bandwidth,
            },
        })
    }

    /// Per-AP LoS photocurrent recovered from a synchronous pilot
    /// superposition: every AP spreads the same pilot bits with its own
    /// code row and reaches the PD with amplitude `r·I_i·h_i·P_i`.
    pub fn pilot_currents(&self, obs: &StepObservation) -> Result<Vec<f64>> {
        let sf = self.codebook.spreading_factor();
        let bits: Vec<bool> = (0..self.pilot_bits).map(|k| k % 2 == 0).collect();
        let mut received = vec![0.0; sf * bits.len()];
        for ap in &self.aps {
            let amplitude = obs.responsivity * obs.ctx.los[ap.id - 1] * ap.power;
            let code = self
                .codebook
                .row(ap.code_index)
                .ok_or_else(|| Error::Config(format!("AP {} has no code row", ap.id)))?;
            let frame = spread(&bits, code, self.dc_offset)?;
            for (r, c) in received.iter_mut().zip(&frame.chips) {
                *r += amplitude * c;
            }
        }
        let estimates = estimate_ap_powers(&received, &self.codebook)?;
        Ok(self.aps.iter().map(|ap| estimates[ap.code_index]).collect())
    }
}
