//! Optical channel: Lambertian LoS gain, steerable mirror elements (image
//! source method), SNR and achievable rate.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    angle_between, reflect_point_across_plane, segment_intersects_cylinder,
    segment_plane_parameter, OrientedPlane, Point3, Segment3, Vec3, VerticalCylinder,
};

/// `e / 2π`, the SNR scaling inside the achievable-rate expression.
pub const RATE_SNR_SCALE: f64 = E / (2.0 * PI);

/// Lambertian order for a given half-power semi-angle (radians).
pub fn lambertian_order(half_power_angle: f64) -> f64 {
    -(2.0_f64.ln()) / half_power_angle.cos().ln()
}

/// Ceiling LED luminaire. Radiates downward.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessPoint {
    /// 1-based identifier.
    pub id: usize,
    pub position: Point3,
    /// Transmitted optical power (W).
    pub power: f64,
    pub lambertian_order: f64,
    /// Row of the Walsh-Hadamard codebook assigned to this AP.
    pub code_index: usize,
}

impl AccessPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0) {
            return Err(Error::Config(format!("AP {}: optical power must be > 0", self.id)));
        }
        if !(self.lambertian_order >= 1.0) {
            return Err(Error::Config(format!("AP {}: Lambertian order must be >= 1", self.id)));
        }
        if !self.position.is_finite() {
            return Err(Error::Config(format!("AP {}: non-finite position", self.id)));
        }
        Ok(())
    }
}

/// Upward-facing photodiode front end.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    pub position: Point3,
    /// Detector area (m²).
    pub area: f64,
    /// Field of view semi-angle (rad).
    pub fov: f64,
    /// Responsivity (A/W).
    pub responsivity: f64,
    pub filter_gain: f64,
    pub concentrator_gain: f64,
}

impl Receiver {
    pub fn validate(&self) -> Result<()> {
        if !(self.area > 0.0) {
            return Err(Error::Config("receiver area must be > 0".into()));
        }
        if !(self.fov > 0.0 && self.fov <= PI / 2.0) {
            return Err(Error::Config("receiver FOV must lie in (0, π/2]".into()));
        }
        if !(self.responsivity > 0.0) {
            return Err(Error::Config("receiver responsivity must be > 0".into()));
        }
        if !(self.filter_gain > 0.0 && self.concentrator_gain > 0.0) {
            return Err(Error::Config("filter and concentrator gains must be > 0".into()));
        }
        Ok(())
    }

    pub fn at(&self, position: Point3) -> Receiver {
        Receiver {
            position,
            ..self.clone()
        }
    }
}

/// Core Lambertian expression shared by LoS and image-source paths.
fn lambertian_term(m: f64, rx: &Receiver, distance: f64, irradiance: f64, incidence: f64) -> f64 {
    if incidence > rx.fov || irradiance >= PI / 2.0 || incidence >= PI / 2.0 {
        return 0.0;
    }
    (m + 1.0) * rx.area / (2.0 * PI * distance * distance)
        * irradiance.cos().powf(m)
        * rx.filter_gain
        * rx.concentrator_gain
        * incidence.cos()
}

/// Unblocked line-of-sight DC gain from a downward AP to an upward PD.
pub fn lambertian_gain(ap: &AccessPoint, rx: &Receiver) -> Result<f64> {
    let d = rx.position - ap.position;
    let dist = d.norm();
    if !(dist > 0.0) {
        return Err(Error::Domain("AP and receiver coincide".into()));
    }
    let irradiance = angle_between(Vec3::DOWN, d)?;
    let incidence = angle_between(Vec3::UP, -d)?;
    Ok(lambertian_term(ap.lambertian_order, rx, dist, irradiance, incidence))
}

/// Wall carrying the RIS; the room spans `[0, width] × [0, depth]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wall {
    /// `x = 0`
    West,
    /// `x = width`
    East,
    /// `y = 0`
    South,
    /// `y = depth`
    North,
}

impl Wall {
    /// Unit normal pointing into the room.
    pub fn inward(self) -> Vec3 {
        match self {
            Wall::West => Vec3::new(1.0, 0.0, 0.0),
            Wall::East => Vec3::new(-1.0, 0.0, 0.0),
            Wall::South => Vec3::new(0.0, 1.0, 0.0),
            Wall::North => Vec3::new(0.0, -1.0, 0.0),
        }
    }

    /// Horizontal in-wall axis; `(inward, along, up)` is right-handed.
    pub fn along(self) -> Vec3 {
        Vec3::UP.cross(self.inward())
    }
}

/// One steerable mirror of the RIS.
///
/// Orientation: in the `(inward, along, up)` wall frame the element normal
/// is `(cos β cos α, cos β sin α, sin β)`, i.e. yaw `α` about the vertical,
/// then roll `β` tilting the normal out of the horizontal plane.
#[derive(Debug, Clone, PartialEq)]
pub struct RisElement {
    /// 1-based identifier.
    pub id: usize,
    pub wall: Wall,
    /// Element center, on the wall plane.
    pub midpoint: Point3,
    pub width: f64,
    pub height: f64,
    pub yaw: f64,
    pub roll: f64,
    pub reflectance: f64,
    pub max_yaw: f64,
    pub max_roll: f64,
}

impl RisElement {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::Config(format!("RIS element {}: size must be > 0", self.id)));
        }
        if !(self.reflectance > 0.0 && self.reflectance <= 1.0) {
            return Err(Error::Config(format!(
                "RIS element {}: reflectance must lie in (0, 1]",
                self.id
            )));
        }
        if !(self.max_yaw > 0.0 && self.max_roll > 0.0) {
            return Err(Error::Config("mirror mechanical limits must be > 0".into()));
        }
        if self.yaw.abs() > self.max_yaw || self.roll.abs() > self.max_roll {
            return Err(Error::Config(format!(
                "RIS element {}: orientation outside mechanical limits",
                self.id
            )));
        }
        Ok(())
    }

    pub fn normal(&self) -> Vec3 {
        let (sa, ca) = self.yaw.sin_cos();
        let (sb, cb) = self.roll.sin_cos();
        self.wall.inward() * (cb * ca) + self.wall.along() * (cb * sa) + Vec3::UP * sb
    }

    /// In-plane axis spanning the element width (stays horizontal).
    pub fn width_axis(&self) -> Vec3 {
        let (sa, ca) = self.yaw.sin_cos();
        self.wall.inward() * (-sa) + self.wall.along() * ca
    }

    /// In-plane axis spanning the element height.
    pub fn height_axis(&self) -> Vec3 {
        self.normal().cross(self.width_axis())
    }

    pub fn plane(&self) -> OrientedPlane {
        OrientedPlane::new(self.midpoint, self.normal()).expect("element normal is a unit vector")
    }

    pub fn with_angles(&self, yaw: f64, roll: f64) -> RisElement {
        RisElement {
            yaw,
            roll,
            ..self.clone()
        }
    }

    /// True if `p` is strictly on the room side of the wall plane.
    fn faces(&self, p: Point3) -> bool {
        (p - self.midpoint).dot(self.wall.inward()) > 0.0
    }
}

/// Result of steering one mirror toward a receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorSteering {
    pub yaw: f64,
    pub roll: f64,
    /// True when the ideal angles exceeded the mechanical limits and were clamped.
    pub saturated: bool,
}

/// Yaw/roll that make the element normal bisect the directions toward the
/// AP and the receiver, clamped to the element's mechanical limits.
pub fn compute_mirror_angles(
    ap_pos: Point3,
    elem: &RisElement,
    rx_pos: Point3,
) -> Result<MirrorSteering> {
    if !elem.faces(ap_pos) || !elem.faces(rx_pos) {
        return Err(Error::InfeasibleSteering(format!(
            "AP or receiver behind the wall of RIS element {}",
            elem.id
        )));
    }
    let to_ap = (ap_pos - elem.midpoint).normalized().expect("AP is off the wall plane");
    let to_rx = (rx_pos - elem.midpoint).normalized().expect("receiver is off the wall plane");
    // Both unit vectors point into the room, so their sum cannot vanish.
    let n = (to_ap + to_rx).normalized().expect("bisector of two in-room directions");
    let ni = n.dot(elem.wall.inward());
    let na = n.dot(elem.wall.along());
    let nu = n.dot(Vec3::UP).clamp(-1.0, 1.0);
    let yaw = na.atan2(ni);
    let roll = nu.asin();
    let yaw_c = yaw.clamp(-elem.max_yaw, elem.max_yaw);
    let roll_c = roll.clamp(-elem.max_roll, elem.max_roll);
    Ok(MirrorSteering {
        yaw: yaw_c,
        roll: roll_c,
        saturated: yaw_c != yaw || roll_c != roll,
    })
}

/// Geometry of a specular AP → mirror → PD path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecularPath {
    /// Image of the AP across the element plane.
    pub virtual_source: Point3,
    /// Reflection point on the element.
    pub hit: Point3,
    /// Unfolded path length.
    pub length: f64,
}

/// Specular path through the element's finite aperture, if any.
pub fn specular_path(ap_pos: Point3, elem: &RisElement, rx_pos: Point3) -> Option<SpecularPath> {
    let plane = elem.plane();
    if plane.signed_distance(ap_pos) <= 0.0 || plane.signed_distance(rx_pos) <= 0.0 {
        return None;
    }
    if !elem.faces(ap_pos) || !elem.faces(rx_pos) {
        return None;
    }
    let vs = reflect_point_across_plane(ap_pos, &plane);
    let seg = Segment3::new(vs, rx_pos).ok()?;
    let s = segment_plane_parameter(&seg, &plane)?;
    let hit = vs + (rx_pos - vs) * s;
    let offset = hit - elem.midpoint;
    if offset.dot(elem.width_axis()).abs() > 0.5 * elem.width
        || offset.dot(elem.height_axis()).abs() > 0.5 * elem.height
    {
        return None;
    }
    Some(SpecularPath {
        virtual_source: vs,
        hit,
        length: seg.length(),
    })
}

/// DC gain of the AP → element → PD path at the element's current angles.
///
/// Zero when the specular ray misses the aperture, when either endpoint is
/// behind the mirror, or (with `ris_blocking`) when a blocker cuts either hop.
pub fn mirror_element_gain(
    ap: &AccessPoint,
    elem: &RisElement,
    rx: &Receiver,
    blockers: &[VerticalCylinder],
    ris_blocking: bool,
) -> f64 {
    let Some(path) = specular_path(ap.position, elem, rx.position) else {
        return 0.0;
    };
    let (Ok(irradiance), Ok(incidence)) = (
        angle_between(Vec3::DOWN, path.hit - ap.position),
        angle_between(Vec3::UP, path.hit - rx.position),
    ) else {
        return 0.0;
    };
    let gain = elem.reflectance
        * lambertian_term(ap.lambertian_order, rx, path.length, irradiance, incidence);
    if gain == 0.0 {
        return 0.0;
    }
    if ris_blocking {
        let hops = [(ap.position, path.hit), (path.hit, rx.position)];
        for (a, b) in hops {
            let Ok(seg) = Segment3::new(a, b) else { continue };
            if blockers.iter().any(|c| segment_intersects_cylinder(&seg, c)) {
                return 0.0;
            }
        }
    }
    gain
}

/// Eq. (1)-style total channel gain: blockage-gated LoS plus assigned RIS paths.
pub fn total_gain(indicator: bool, los_gain: f64, ris_gains: &[f64]) -> f64 {
    let los = if indicator { los_gain } else { 0.0 };
    los + ris_gains.iter().sum::<f64>()
}

/// Receiver noise: one-sided PSD (A²/Hz) over the signal bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub psd: f64,
    pub bandwidth: f64,
}

impl NoiseModel {
    pub fn power(&self) -> f64 {
        self.psd * self.bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) {
            return Err(Error::Config("bandwidth must be > 0".into()));
        }
        if !(self.power() > 0.0) {
            return Err(Error::Config("noise power must be > 0".into()));
        }
        Ok(())
    }
}

/// Electrical SNR `(r·h·P)² / (N₀·B)`.
pub fn snr(h: f64, ap: &AccessPoint, rx: &Receiver, noise: &NoiseModel) -> Result<f64> {
    if !(noise.power() > 0.0) {
        return Err(Error::Config("noise power must be > 0".into()));
    }
    if !(h >= 0.0) {
        return Err(Error::Domain(format!("channel gain must be >= 0, got {h}")));
    }
    let current = rx.responsivity * h * ap.power;
    Ok(current * current / noise.power())
}

/// `B·log₂(1 + (e/2π)·η)` in bit/s.
pub fn achievable_rate(bandwidth: f64, snr: f64) -> f64 {
    bandwidth * (RATE_SNR_SCALE * snr).ln_1p() / std::f64::consts::LN_2
}

/// Rate when combining several APs carrying the same data: SNRs add.
pub fn combined_rate(bandwidth: f64, snrs: &[f64]) -> Result<f64> {
    if snrs.is_empty() {
        return Err(Error::Domain("combined rate needs at least one AP".into()));
    }
    Ok(achievable_rate(bandwidth, snrs.iter().sum()))
}

/// Per-AP channel state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSnapshot {
    pub ap_id: usize,
    pub los_gain: f64,
    pub indicator: bool,
    pub degree: f64,
    pub ris_gains: Vec<f64>,
    pub total_gain: f64,
    pub snr: f64,
}

impl LinkSnapshot {
    pub fn new(
        ap: &AccessPoint,
        rx: &Receiver,
        noise: &NoiseModel,
        los_gain: f64,
        indicator: bool,
        degree: f64,
        ris_gains: Vec<f64>,
    ) -> Result<Self> {
        let total = total_gain(indicator, los_gain, &ris_gains);
        let snr = snr(total, ap, rx, noise)?;
        Ok(LinkSnapshot {
            ap_id: ap.id,
            los_gain,
            indicator,
            degree: degree.clamp(0.0, 1.0),
            ris_gains,
            total_gain: total,
            snr,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ap_at(p: Point3) -> AccessPoint {
        AccessPoint {
            id: 1,
            position: p,
            power: 3.0,
            lambertian_order: 1.0,
            code_index: 1,
        }
    }

    fn pd_at(p: Point3) -> Receiver {
        Receiver {
            position: p,
            area: 1e-4,
            fov: 85f64.to_radians(),
            responsivity: 0.5,
            filter_gain: 1.0,
            concentrator_gain: 1.0,
        }
    }

    fn element() -> RisElement {
        RisElement {
            id: 1,
            wall: Wall::West,
            midpoint: Vec3::new(0.0, 2.5, 1.8),
            width: 0.1,
            height: 0.1,
            yaw: 0.0,
            roll: 0.0,
            reflectance: 1.0,
            max_yaw: PI / 4.0,
            max_roll: PI / 4.0,
        }
    }

    #[test]
    fn sixty_degree_half_power_gives_order_one() {
        assert_relative_eq!(lambertian_order(60f64.to_radians()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nadir_gain_matches_closed_form() {
        let g = lambertian_gain(&ap_at(Vec3::new(1., 1., 3.)), &pd_at(Vec3::new(1., 1., 0.))).unwrap();
        let expected = 2.0 * 1e-4 / (2.0 * PI * 9.0);
        assert_relative_eq!(g, expected, max_relative = 1e-14);
        assert_relative_eq!(g, 3.5368e-6, max_relative = 1e-4);
    }

    #[test]
    fn inverse_square_at_nadir() {
        let ap = ap_at(Vec3::new(0., 0., 6.));
        let near = lambertian_gain(&ap, &pd_at(Vec3::new(0., 0., 3.))).unwrap();
        let far = lambertian_gain(&ap, &pd_at(Vec3::new(0., 0., 0.))).unwrap();
        assert_relative_eq!(far, near / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn outside_fov_is_zero() {
        let mut rx = pd_at(Vec3::new(3., 0., 0.));
        rx.fov = 30f64.to_radians();
        assert_eq!(lambertian_gain(&ap_at(Vec3::new(0., 0., 3.)), &rx).unwrap(), 0.0);
    }

    #[test]
    fn coincident_positions_rejected() {
        let p = Vec3::new(1., 1., 3.);
        assert!(matches!(lambertian_gain(&ap_at(p), &pd_at(p)), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetric_pair_needs_no_steering() {
        let e = element();
        // Mirror-symmetric about the untilted normal through (0, 2.5, 1.8).
        let ap = Vec3::new(2.0, 3.5, 2.8);
        let rx = Vec3::new(2.0, 1.5, 0.8);
        let s = compute_mirror_angles(ap, &e, rx).unwrap();
        assert!(s.yaw.abs() < 1e-12 && s.roll.abs() < 1e-12);
        assert!(!s.saturated);
    }

    #[test]
    fn endpoints_on_the_normal_need_no_steering() {
        let e = element();
        let s = compute_mirror_angles(Vec3::new(2.0, 2.5, 1.8), &e, Vec3::new(1.0, 2.5, 1.8)).unwrap();
        assert!(s.yaw.abs() < 1e-12 && s.roll.abs() < 1e-12);
    }

    #[test]
    fn behind_wall_is_infeasible() {
        let e = element();
        let r = compute_mirror_angles(Vec3::new(-1.0, 2.0, 3.0), &e, Vec3::new(2.0, 2.0, 0.8));
        assert!(matches!(r, Err(Error::InfeasibleSteering(_))));
    }

    #[test]
    fn generic_steering_is_self_consistent() {
        let e = element();
        let ap = Vec3::new(1.7, 3.9, 3.0);
        let rx = Vec3::new(3.2, 1.1, 0.85);
        let s = compute_mirror_angles(ap, &e, rx).unwrap();
        assert!(!s.saturated);
        let steered = e.with_angles(s.yaw, s.roll);
        let vs = reflect_point_across_plane(ap, &steered.plane());
        let u = (e.midpoint - vs).normalized().unwrap();
        let v = (rx - e.midpoint).normalized().unwrap();
        assert!(u.cross(v).norm() < 1e-9);
        assert!(u.dot(v) > 0.0);
    }

    #[test]
    fn steered_gain_equals_image_source_lambertian() {
        let e = element();
        let ap = ap_at(Vec3::new(1.7, 3.9, 3.0));
        let rx = pd_at(Vec3::new(3.2, 1.1, 0.85));
        let s = compute_mirror_angles(ap.position, &e, rx.position).unwrap();
        let steered = e.with_angles(s.yaw, s.roll);
        let g = mirror_element_gain(&ap, &steered, &rx, &[], true);

        // Manual unfolding: distances via the element midpoint, angles at
        // the real AP and the PD.
        let d1 = ap.position.distance(e.midpoint);
        let d2 = rx.position.distance(e.midpoint);
        let d = d1 + d2;
        let cos_phi = (ap.position.z - e.midpoint.z) / d1;
        let cos_psi = (e.midpoint.z - rx.position.z) / d2;
        let expected = 2.0 * 1e-4 / (2.0 * PI * d * d) * cos_phi * cos_psi;
        assert_relative_eq!(g, expected, max_relative = 1e-9);
    }

    #[test]
    fn unsteered_mirror_misses_aperture() {
        let e = element();
        let ap = ap_at(Vec3::new(1.7, 3.9, 3.0));
        let rx = pd_at(Vec3::new(3.2, 1.1, 0.85));
        assert_eq!(mirror_element_gain(&ap, &e, &rx, &[], true), 0.0);
    }

    #[test]
    fn blocker_on_second_hop_kills_ris_path() {
        let e = element();
        let ap = ap_at(Vec3::new(1.7, 3.9, 3.0));
        let rx = pd_at(Vec3::new(3.2, 1.1, 0.85));
        let s = compute_mirror_angles(ap.position, &e, rx.position).unwrap();
        let steered = e.with_angles(s.yaw, s.roll);
        let mid = (e.midpoint + rx.position) * 0.5;
        let body = VerticalCylinder::new(mid.x, mid.y, 0.3, 1.8).unwrap();
        assert_eq!(mirror_element_gain(&ap, &steered, &rx, &[body], true), 0.0);
        assert!(mirror_element_gain(&ap, &steered, &rx, &[body], false) > 0.0);
    }

    #[test]
    fn total_gain_cases() {
        assert_eq!(total_gain(true, 3e-6, &[]), 3e-6);
        assert_eq!(total_gain(false, 3e-6, &[]), 0.0);
        assert_eq!(total_gain(false, 3e-6, &[2e-7]), 2e-7);
    }

    #[test]
    fn snr_cases() {
        let ap = ap_at(Vec3::new(0., 0., 3.));
        let rx = pd_at(Vec3::new(0., 0., 0.));
        let noise = NoiseModel { psd: 1e-12 / 20e6, bandwidth: 20e6 };
        assert_eq!(snr(0.0, &ap, &rx, &noise).unwrap(), 0.0);
        let a = snr(1e-6, &ap, &rx, &noise).unwrap();
        let b = snr(2e-6, &ap, &rx, &noise).unwrap();
        assert_relative_eq!(b, 4.0 * a, max_relative = 1e-14);
        // (0.5 · 3.5368e-6 · 3)² / 1e-12
        assert_relative_eq!(snr(3.5368e-6, &ap, &rx, &noise).unwrap(), 28.145, max_relative = 1e-4);
        let bad = NoiseModel { psd: 0.0, bandwidth: 20e6 };
        assert!(matches!(snr(1e-6, &ap, &rx, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn rate_cases() {
        assert_eq!(achievable_rate(20e6, 0.0), 0.0);
        assert!((achievable_rate(1.0, 2.0 * PI / E) - 1.0).abs() < 1e-12);
        assert!(achievable_rate(1.0, 1.0) < achievable_rate(1.0, 1.0001));
        let eta = 1.0 / RATE_SNR_SCALE;
        assert_relative_eq!(combined_rate(1.0, &[eta, eta]).unwrap(), 3f64.log2(), max_relative = 1e-12);
        assert_eq!(combined_rate(5.0, &[7.0]).unwrap(), achievable_rate(5.0, 7.0));
        assert!(combined_rate(1.0, &[]).is_err());
    }
}
