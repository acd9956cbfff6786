//! Scenario configuration (TOML). Every key has a default, so an empty file
//! is the reference scenario.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handover::{BlockageRule, HandoverConfig};
use crate::optics::{NoiseModel, Wall};
use crate::ris_assign::{Hyperparams, Optimizer};

/// Environment variable naming the directory searched for relative config paths.
pub const CONFIG_DIR_ENV: &str = "RIS_HANDOVER_CONFIG_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub room: RoomConfig,
    pub aps: ApConfig,
    pub receiver: ReceiverConfig,
    pub ris: RisConfig,
    pub channel: ChannelConfig,
    pub ocdma: OcdmaConfig,
    pub mobility: MobilityConfig,
    pub blockage: BlockageConfig,
    pub handover: HandoverSection,
    pub sim: SimConfig,
    pub ann: AnnConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 2024,
            room: RoomConfig::default(),
            aps: ApConfig::default(),
            receiver: ReceiverConfig::default(),
            ris: RisConfig::default(),
            channel: ChannelConfig::default(),
            ocdma: OcdmaConfig::default(),
            mobility: MobilityConfig::default(),
            blockage: BlockageConfig::default(),
            handover: HandoverSection::default(),
            sim: SimConfig::default(),
            ann: AnnConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomConfig {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

impl Default for RoomConfig {
    fn default() -> Self {
        RoomConfig {
            width: 5.0,
            depth: 5.0,
            height: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    #[default]
    RandomCeiling,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApConfig {
    pub count: usize,
    pub placement: Placement,
    /// Optical power per AP (W).
    pub power: f64,
    /// LED half-power semi-angle (degrees).
    pub half_power_angle_deg: f64,
    /// Minimum distance between randomly placed APs (m).
    pub min_spacing: f64,
    /// Keep-out band along the walls for AP centers (m).
    pub margin: f64,
}

impl Default for ApConfig {
    fn default() -> Self {
        ApConfig {
            count: 4,
            placement: Placement::RandomCeiling,
            power: 3.0,
            half_power_angle_deg: 60.0,
            min_spacing: 0.5,
            margin: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverConfig {
    /// PD height above the floor (m).
    pub height: f64,
    /// PD area (m²).
    pub area: f64,
    pub fov_deg: f64,
    /// A/W.
    pub responsivity: f64,
    pub filter_gain: f64,
    pub concentrator_gain: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            height: 0.85,
            area: 1e-4,
            fov_deg: 85.0,
            responsivity: 0.5,
            filter_gain: 1.0,
            concentrator_gain: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisConfig {
    pub enabled: bool,
    pub wall: Wall,
    /// Element grid: `rows × cols` elements, `M = rows·cols`.
    pub rows: usize,
    pub cols: usize,
    pub element_width: f64,
    pub element_height: f64,
    /// Center-to-center spacing of the grid (m).
    pub pitch: f64,
    /// Grid center, measured along the wall from its start corner (m).
    pub center_along: f64,
    /// Grid center height (m).
    pub center_height: f64,
    pub reflectance: f64,
    pub max_yaw_deg: f64,
    pub max_roll_deg: f64,
    /// Whether blockers can cut the AP→mirror and mirror→PD hops.
    pub blocking: bool,
}

impl Default for RisConfig {
    fn default() -> Self {
        RisConfig {
            enabled: true,
            wall: Wall::West,
            rows: 2,
            cols: 2,
            element_width: 0.1,
            element_height: 0.1,
            pitch: 0.12,
            center_along: 2.5,
            center_height: 1.8,
            reflectance: 0.95,
            max_yaw_deg: 45.0,
            max_roll_deg: 45.0,
            blocking: true,
        }
    }
}

impl RisConfig {
    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Signal bandwidth (Hz).
    pub bandwidth: f64,
    /// Noise PSD (A²/Hz).
    pub noise_psd: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            bandwidth: 20e6,
            noise_psd: 5e-23,
        }
    }
}

impl ChannelConfig {
    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            psd: self.noise_psd,
            bandwidth: self.bandwidth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcdmaConfig {
    pub dc_offset: f64,
    /// Pilot bits per identification frame.
    pub pilot_bits: usize,
}

impl Default for OcdmaConfig {
    fn default() -> Self {
        OcdmaConfig {
            dc_offset: 1.0,
            pilot_bits: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    /// Speed used by single runs (m/s).
    pub user_speed: f64,
    /// Speeds of the "low" and "high" mobility classes in sweeps (m/s).
    pub low_speed: f64,
    pub high_speed: f64,
    pub blockers: usize,
    pub blocker_speed_min: f64,
    pub blocker_speed_max: f64,
    pub blocker_radius: f64,
    pub blocker_height: f64,
    /// Keep-out band along the walls for walkers (m).
    pub margin: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            user_speed: 0.5,
            low_speed: 0.5,
            high_speed: 2.0,
            blockers: 3,
            blocker_speed_min: 0.5,
            blocker_speed_max: 1.5,
            blocker_radius: 0.3,
            blocker_height: 1.8,
            margin: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockageConfig {
    /// Rays per AP used for the blockage degree.
    pub samples: usize,
    /// Radius of the sample disc around the PD (m).
    pub disc_radius: f64,
}

impl Default for BlockageConfig {
    fn default() -> Self {
        BlockageConfig {
            samples: 16,
            disc_radius: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AssignerKind {
    BruteForce,
    #[default]
    CoordinateAscent,
    Oracle,
    Ann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandoverSection {
    pub rule: BlockageRule,
    /// A.
    pub current_threshold: f64,
    pub signaling_bits: f64,
    pub assigner: AssignerKind,
    pub max_rounds: usize,
    /// Trained model used when `assigner = "ann"`.
    pub ann_model: Option<PathBuf>,
}

impl Default for HandoverSection {
    fn default() -> Self {
        HandoverSection {
            rule: BlockageRule::BinaryApprox,
            current_threshold: 1e-7,
            signaling_bits: 1000.0,
            assigner: AssignerKind::CoordinateAscent,
            max_rounds: 20,
            ann_model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// s.
    pub dt: f64,
    /// s.
    pub duration: f64,
    pub trials: usize,
    /// Worker threads for trials; 0 uses the available parallelism.
    pub threads: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            duration: 60.0,
            trials: 50,
            threads: 0,
        }
    }
}

impl SimConfig {
    /// Number of steps in `duration`.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Weight initialization and shuffling seed.
    pub seed: u64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        AnnConfig {
            hidden: vec![64, 64, 32],
            epochs: 40,
            batch_size: 64,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            seed: 7,
        }
    }
}

impl AnnConfig {
    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed: self.seed,
            optimizer: self.optimizer,
        }
    }
}

fn positive(value: f64, what: &str, problems: &mut Vec<String>) {
    if !(value > 0.0 && value.is_finite()) {
        problems.push(format!("{what} must be a positive finite number, got {value}"));
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative paths that do not exist
    /// are retried under `$RIS_HANDOVER_CONFIG_DIR`.
    pub fn load(path: &Path) -> Result<Self> {
        let resolved = resolve_config_path(path);
        let text = std::fs::read_to_string(&resolved).map_err(|e| Error::io(&resolved, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn handover_config(&self) -> HandoverConfig {
        HandoverConfig {
            current_threshold: self.handover.current_threshold,
            signaling_bits: self.handover.signaling_bits,
            ris_enabled: self.ris.enabled,
            rule: self.handover.rule,
        }
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        let r = &self.room;
        positive(r.width, "room.width", &mut p);
        positive(r.depth, "room.depth", &mut p);
        positive(r.height, "room.height", &mut p);

        let a = &self.aps;
        if a.count == 0 {
            p.push("aps.count must be >= 1".into());
        }
        positive(a.power, "aps.power", &mut p);
        if !(a.half_power_angle_deg > 0.0 && a.half_power_angle_deg < 90.0) {
            p.push("aps.half_power_angle_deg must lie in (0, 90)".into());
        }
        if !(a.min_spacing >= 0.0) {
            p.push("aps.min_spacing must be >= 0".into());
        }
        if !(a.margin >= 0.0 && 2.0 * a.margin < r.width.min(r.depth)) {
            p.push("aps.margin must be >= 0 and leave ceiling area".into());
        }

        let rx = &self.receiver;
        if !(rx.height >= 0.0 && rx.height < r.height) {
            p.push("receiver.height must lie in [0, room.height)".into());
        }
        positive(rx.area, "receiver.area", &mut p);
        if !(rx.fov_deg > 0.0 && rx.fov_deg <= 90.0) {
            p.push("receiver.fov_deg must lie in (0, 90]".into());
        }
        positive(rx.responsivity, "receiver.responsivity", &mut p);
        positive(rx.filter_gain, "receiver.filter_gain", &mut p);
        positive(rx.concentrator_gain, "receiver.concentrator_gain", &mut p);

        let s = &self.ris;
        positive(s.element_width, "ris.element_width", &mut p);
        positive(s.element_height, "ris.element_height", &mut p);
        if !(s.reflectance > 0.0 && s.reflectance <= 1.0) {
            p.push("ris.reflectance must lie in (0, 1]".into());
        }
        if !(s.max_yaw_deg > 0.0 && s.max_yaw_deg < 90.0)
            || !(s.max_roll_deg > 0.0 && s.max_roll_deg < 90.0)
        {
            p.push("ris.max_yaw_deg and ris.max_roll_deg must lie in (0, 90)".into());
        }
        if s.element_count() > 0 {
            if !(s.pitch >= s.element_width.max(s.element_height)) {
                p.push("ris.pitch must be at least the element size".into());
            }
            let wall_len = match s.wall {
                Wall::West | Wall::East => r.depth,
                Wall::South | Wall::North => r.width,
            };
            let half_along = 0.5 * ((s.cols.max(1) - 1) as f64 * s.pitch + s.element_width);
            let half_up = 0.5 * ((s.rows.max(1) - 1) as f64 * s.pitch + s.element_height);
            if s.center_along - half_along < 0.0 || s.center_along + half_along > wall_len {
                p.push("ris grid does not fit along the wall".into());
            }
            if s.center_height - half_up < 0.0 || s.center_height + half_up > r.height {
                p.push("ris grid does not fit between floor and ceiling".into());
            }
        }

        positive(self.channel.bandwidth, "channel.bandwidth", &mut p);
        positive(self.channel.noise_psd, "channel.noise_psd", &mut p);
        if !(self.ocdma.dc_offset >= 1.0) {
            p.push("ocdma.dc_offset must be >= 1".into());
        }
        if self.ocdma.pilot_bits == 0 {
            p.push("ocdma.pilot_bits must be >= 1".into());
        }

        let m = &self.mobility;
        positive(m.user_speed, "mobility.user_speed", &mut p);
        positive(m.low_speed, "mobility.low_speed", &mut p);
        positive(m.high_speed, "mobility.high_speed", &mut p);
        positive(m.blocker_speed_min, "mobility.blocker_speed_min", &mut p);
        if !(m.blocker_speed_max >= m.blocker_speed_min) {
            p.push("mobility.blocker_speed_max must be >= blocker_speed_min".into());
        }
        positive(m.blocker_radius, "mobility.blocker_radius", &mut p);
        positive(m.blocker_height, "mobility.blocker_height", &mut p);
        if !(m.margin >= 0.0 && 2.0 * m.margin < r.width.min(r.depth)) {
            p.push("mobility.margin must be >= 0 and leave floor area".into());
        }

        if self.blockage.samples == 0 {
            p.push("blockage.samples must be >= 1".into());
        }
        if !(self.blockage.disc_radius >= 0.0) {
            p.push("blockage.disc_radius must be >= 0".into());
        }

        let h = &self.handover;
        positive(h.current_threshold, "handover.current_threshold", &mut p);
        positive(h.signaling_bits, "handover.signaling_bits", &mut p);
        if h.max_rounds == 0 {
            p.push("handover.max_rounds must be >= 1".into());
        }
        if h.assigner == AssignerKind::Ann && h.ann_model.is_none() {
            p.push("handover.assigner = \"ann\" needs handover.ann_model".into());
        }

        positive(self.sim.dt, "sim.dt", &mut p);
        positive(self.sim.duration, "sim.duration", &mut p);
        if self.sim.trials == 0 {
            p.push("sim.trials must be >= 1".into());
        }
        if self.sim.duration.is_finite() && self.sim.dt > 0.0 && self.sim.steps() == 0 {
            p.push("sim.duration is shorter than one time step".into());
        }

        let n = &self.ann;
        if n.hidden.contains(&0) {
            p.push("ann.hidden widths must be >= 1".into());
        }
        if n.batch_size == 0 {
            p.push("ann.batch_size must be >= 1".into());
        }
        positive(n.learning_rate, "ann.learning_rate", &mut p);

        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p.join("; ")))
        }
    }
}

/// `path` itself if it exists or is absolute, else the same relative path
/// under `$RIS_HANDOVER_CONFIG_DIR` when that is set.
pub fn resolve_config_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(CONFIG_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}
