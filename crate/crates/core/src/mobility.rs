//! Random-waypoint motion for the user and the human blockers, and the
//! geometric LoS blockage indicators derived from it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{segment_intersects_cylinder, Point3, Segment3, Vec3, VerticalCylinder};

/// Rectangle of the floor that walkers may reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Footprint {
    /// Room floor shrunk by `margin` on every side.
    pub fn inset(width: f64, depth: f64, margin: f64) -> Result<Self> {
        let f = Footprint {
            x_min: margin,
            x_max: width - margin,
            y_min: margin,
            y_max: depth - margin,
        };
        if !(f.x_max > f.x_min && f.y_max > f.y_min) {
            return Err(Error::Config(format!(
                "margin {margin} leaves no walkable area in a {width}×{depth} room"
            )));
        }
        Ok(f)
    }

    pub fn contains(&self, p: Point3) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point3 {
        Vec3::new(
            rng.gen_range(self.x_min..=self.x_max),
            rng.gen_range(self.y_min..=self.y_max),
            0.0,
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Leg {
    start: Point3,
    end: Point3,
    t_start: f64,
    t_end: f64,
}

/// Floor-level random-waypoint track with constant speed.
///
/// Legs are drawn lazily from the track's own RNG stream, so the trajectory
/// is a pure function of the seed regardless of query order.
#[derive(Debug, Clone)]
pub struct WaypointTrack {
    area: Footprint,
    speed: f64,
    rng: ChaCha8Rng,
    legs: Vec<Leg>,
}

impl WaypointTrack {
    /// Start point and first endpoint are drawn uniformly from `area`.
    pub fn new(area: Footprint, speed: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = area.sample(&mut rng);
        Self::starting_at(area, speed, start, rng)
    }

    /// Track that begins at a fixed point; waypoints come from `seed`.
    pub fn from_start(area: Footprint, speed: f64, start: Point3, seed: u64) -> Result<Self> {
        Self::starting_at(area, speed, start, ChaCha8Rng::seed_from_u64(seed))
    }

    fn starting_at(area: Footprint, speed: f64, start: Point3, rng: ChaCha8Rng) -> Result<Self> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::Config(format!("walking speed must be > 0, got {speed}")));
        }
        let mut track = WaypointTrack {
            area,
            speed,
            rng,
            legs: Vec::new(),
        };
        track.push_leg(Vec3::new(start.x, start.y, 0.0), 0.0);
        Ok(track)
    }

    fn push_leg(&mut self, start: Point3, t_start: f64) {
        let end = self.area.sample(&mut self.rng);
        let t_end = t_start + start.distance(end) / self.speed;
        self.legs.push(Leg {
            start,
            end,
            t_start,
            t_end,
        });
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn current_start(&self) -> Point3 {
        self.legs[0].start
    }

    pub fn current_end(&self) -> Point3 {
        self.legs[0].end
    }

    /// Floor position at time `t` (negative times clamp to the start).
    pub fn position_at(&mut self, t: f64) -> Point3 {
        let t = t.max(0.0);
        while self.legs.last().is_none_or(|l| l.t_end < t) {
            let last = *self.legs.last().expect("track has a first leg");
            self.push_leg(last.end, last.t_end);
        }
        let idx = self.legs.partition_point(|l| l.t_end < t);
        let leg = self.legs[idx];
        let span = leg.t_end - leg.t_start;
        if span <= 0.0 || t >= leg.t_end {
            return leg.end;
        }
        let f = (t - leg.t_start) / span;
        leg.start + (leg.end - leg.start) * f
    }
}

/// A walking human: a vertical cylinder carried along a waypoint track.
#[derive(Debug, Clone)]
pub struct Blocker {
    pub track: WaypointTrack,
    pub radius: f64,
    pub height: f64,
}

impl Blocker {
    pub fn new(track: WaypointTrack, radius: f64, height: f64) -> Result<Self> {
        VerticalCylinder::new(0.0, 0.0, radius, height)?;
        Ok(Blocker {
            track,
            radius,
            height,
        })
    }

    pub fn body_at(&mut self, t: f64) -> VerticalCylinder {
        let p = self.track.position_at(t);
        VerticalCylinder {
            center_x: p.x,
            center_y: p.y,
            radius: self.radius,
            height: self.height,
        }
    }
}

/// Bodies of every blocker at time `t`.
pub fn bodies_at(blockers: &mut [Blocker], t: f64) -> Vec<VerticalCylinder> {
    blockers.iter_mut().map(|b| b.body_at(t)).collect()
}

/// Per-blocker LoS indicator `I_{i,b}`: true when blocker `b` leaves the
/// AP→PD segment clear.
pub fn link_clear_of(ap_pos: Point3, rx_pos: Point3, body: &VerticalCylinder) -> bool {
    match Segment3::new(ap_pos, rx_pos) {
        Ok(seg) => !segment_intersects_cylinder(&seg, body),
        Err(_) => true,
    }
}

/// LoS indicator `I_i = Π_b I_{i,b}`: true (1) when no blocker cuts the
/// AP→PD segment, false (0) otherwise.
pub fn blockage_indicator(ap_pos: Point3, rx_pos: Point3, bodies: &[VerticalCylinder]) -> bool {
    bodies.iter().all(|b| link_clear_of(ap_pos, rx_pos, b))
}

/// Fixed sample points in a horizontal disc around the PD. Point 0 is the
/// PD itself; the rest follow a golden-angle spiral.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDisc {
    offsets: Vec<(f64, f64)>,
}

impl SampleDisc {
    pub fn new(samples: usize, radius: f64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Config("blockage sample count must be >= 1".into()));
        }
        if !(radius >= 0.0) {
            return Err(Error::Config("blockage sample radius must be >= 0".into()));
        }
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let offsets = (0..samples)
            .map(|k| {
                if k == 0 {
                    return (0.0, 0.0);
                }
                let r = radius * (k as f64 / (samples - 1) as f64).sqrt();
                let a = golden * k as f64;
                (r * a.cos(), r * a.sin())
            })
            .collect();
        Ok(SampleDisc { offsets })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn points(&self, center: Point3) -> impl Iterator<Item = Point3> + '_ {
        self.offsets
            .iter()
            .map(move |&(dx, dy)| Vec3::new(center.x + dx, center.y + dy, center.z))
    }
}

/// Blockage degree `ξ ∈ [0, 1]`: fraction of sample rays from the AP to the
/// disc around the PD that hit a blocker.
pub fn blockage_degree(
    ap_pos: Point3,
    rx_pos: Point3,
    bodies: &[VerticalCylinder],
    disc: &SampleDisc,
) -> f64 {
    if bodies.is_empty() {
        return 0.0;
    }
    let blocked = disc
        .points(rx_pos)
        .filter(|&p| !blockage_indicator(ap_pos, p, bodies))
        .count();
    blocked as f64 / disc.len() as f64
}
