//! Run configuration and its on-disk form.
//!
//! Files are TOML with SI unit suffixes on dimensional keys
//! (`t_max_s`, `k_eff_per_m`, `g_true_m_s2`). Phase-noise values may be given
//! in microgal (`*_ugal`) and are converted on load.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::physics::{InterferometerConfig, NoiseModel, MICRO_GAL};
use crate::schedule::{Schedule, ScheduleKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[default]
    Bge,
    Frequentist,
    Both,
}

impl Protocol {
    pub fn runs_bge(self) -> bool {
        matches!(self, Protocol::Bge | Protocol::Both)
    }

    pub fn runs_frequentist(self) -> bool {
        matches!(self, Protocol::Frequentist | Protocol::Both)
    }
}

/// A parameter that a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Depolarization,
    PhaseSigmaG,
    Atoms,
    BraggOrder,
    Contrast,
    KEff,
    TMax,
    Steps,
    GTrue,
}

impl Axis {
    pub const ALL: [Axis; 9] = [
        Axis::Depolarization,
        Axis::PhaseSigmaG,
        Axis::Atoms,
        Axis::BraggOrder,
        Axis::Contrast,
        Axis::KEff,
        Axis::TMax,
        Axis::Steps,
        Axis::GTrue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Depolarization => "depolarization",
            Axis::PhaseSigmaG => "phase_sigma_g",
            Axis::Atoms => "atoms",
            Axis::BraggOrder => "bragg_order",
            Axis::Contrast => "contrast",
            Axis::KEff => "k_eff",
            Axis::TMax => "t_max",
            Axis::Steps => "steps",
            Axis::GTrue => "g_true",
        }
    }

    /// Accepts the canonical name and the usual symbols (`p_d`, `sigma_g`, `R`, `n_B`, ...).
    pub fn parse(s: &str) -> Result<Axis> {
        let axis = match s {
            "depolarization" | "p_d" => Axis::Depolarization,
            "phase_sigma_g" | "sigma_g" => Axis::PhaseSigmaG,
            "atoms" | "R" => Axis::Atoms,
            "bragg_order" | "n_B" => Axis::BraggOrder,
            "contrast" | "C" => Axis::Contrast,
            "k_eff" => Axis::KEff,
            "t_max" | "T_max" => Axis::TMax,
            "steps" | "M" => Axis::Steps,
            "g_true" => Axis::GTrue,
            other => return Err(Error::UnknownAxis(other.to_string())),
        };
        Ok(axis)
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    /// SI values.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareSpec {
    /// Conventional shots at `T_max`; the shared budget is this many `T_max`.
    pub frequentist_shots: usize,
    /// Phase-noise grid, m/s².
    pub sigma_g: Vec<f64>,
    /// Charge the fringe scans to the conventional side and give BGE their time.
    pub include_pre_estimation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    /// First step (1-based) of the ramp fit.
    pub fit_from_step: usize,
    /// Steps at `T_max` skipped before the plateau fit.
    pub post_cap_skip: usize,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        ScalingSpec {
            fit_from_step: 3,
            post_cap_skip: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub interferometer: InterferometerConfig,
    pub noise: NoiseModel,
    pub schedule: Schedule,
    pub g_true: f64,
    pub prior_center: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub protocol: Protocol,
    pub sweep: Option<SweepSpec>,
    pub compare: Option<CompareSpec>,
    pub scaling: ScalingSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.interferometer.validate()?;
        self.noise.validate()?;
        self.schedule.validate_for(&self.interferometer)?;
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        if !self.g_true.is_finite() || !self.prior_center.is_finite() {
            return Err(Error::InvalidConfig(
                "g_true and prior_center must be finite".into(),
            ));
        }
        Ok(())
    }

    /// First interrogation time of the schedule.
    pub fn t_first(&self) -> Result<f64> {
        Ok(self.schedule.build_sequence()?[0])
    }

    /// Half-width of the initial interval around `prior_center`.
    pub fn initial_half_width(&self) -> Result<f64> {
        Ok(0.5 * self.interferometer.fringe_period(self.t_first()?))
    }

    /// True when `g_true` lies in the initial interval.
    pub fn prior_covers_truth(&self) -> Result<bool> {
        Ok((self.g_true - self.prior_center).abs() < self.initial_half_width()?)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn axis_value(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Depolarization => self.noise.depolarization,
            Axis::PhaseSigmaG => self.noise.phase_sigma_g,
            Axis::Atoms => self.interferometer.atoms,
            Axis::BraggOrder => f64::from(self.interferometer.bragg_order),
            Axis::Contrast => self.interferometer.contrast,
            Axis::KEff => self.interferometer.k_eff,
            Axis::TMax => self.schedule.t_max,
            Axis::Steps => self.schedule.steps as f64,
            Axis::GTrue => self.g_true,
        }
    }

    /// Copy with `axis` set to `value`.
    ///
    /// The prior centre keeps its offset from `g_true` as a fraction of the
    /// initial fringe period, so axes that rescale the fringe do not push
    /// the truth out of the initial interval.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<RunConfig> {
        let mut cfg = self.clone();
        let period_before = 2.0 * self.initial_half_width()?;
        let fraction = (self.prior_center - self.g_true) / period_before;
        let as_count = |v: f64| -> Result<u64> {
            if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as u64)
            } else {
                Err(Error::InvalidConfig(format!(
                    "{axis} needs a positive integer, got {v}"
                )))
            }
        };
        match axis {
            Axis::Depolarization => cfg.noise.depolarization = value,
            Axis::PhaseSigmaG => cfg.noise.phase_sigma_g = value,
            Axis::Atoms => cfg.interferometer.atoms = value,
            Axis::BraggOrder => cfg.interferometer.bragg_order = as_count(value)? as u32,
            Axis::Contrast => cfg.interferometer.contrast = value,
            Axis::KEff => cfg.interferometer.k_eff = value,
            Axis::TMax => {
                cfg.interferometer.t_max = value;
                cfg.schedule.t_max = value;
                if cfg.schedule.kind == ScheduleKind::Fixed {
                    cfg.schedule.t_min = value;
                }
            }
            Axis::Steps => cfg.schedule.steps = as_count(value)? as usize,
            Axis::GTrue => cfg.g_true = value,
        }
        cfg.validate()?;
        cfg.prior_center = cfg.g_true + fraction * 2.0 * cfg.initial_half_width()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.resolve()
    }

    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

// ---- file schema -------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "one")]
    repetitions: usize,
    #[serde(default)]
    protocol: Protocol,
    g_true_m_s2: f64,
    prior_center_m_s2: Option<f64>,
    /// Offset of the prior centre from `g_true`, in initial fringe periods.
    prior_offset_periods: Option<f64>,
    interferometer: InterferometerFile,
    #[serde(default)]
    noise: NoiseFile,
    schedule: ScheduleFile,
    #[serde(default)]
    scaling: Option<ScalingFile>,
    sweep: Option<SweepFile>,
    compare: Option<CompareFile>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterferometerFile {
    k_eff_per_m: f64,
    contrast: f64,
    atoms: f64,
    #[serde(default = "one_u32")]
    bragg_order: u32,
    t_min_s: f64,
    t_max_s: f64,
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    #[serde(default)]
    depolarization: f64,
    phase_sigma_m_s2: Option<f64>,
    phase_sigma_ugal: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    kind: String,
    a: Option<f64>,
    b_s: Option<f64>,
    a0: Option<f64>,
    d: Option<f64>,
    steps: usize,
    point_identification: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingFile {
    fit_from_step: Option<usize>,
    post_cap_skip: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    axis: String,
    values: Option<Vec<f64>>,
    values_ugal: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareFile {
    #[serde(default = "forty")]
    frequentist_shots: usize,
    sigma_g_m_s2: Option<Vec<f64>>,
    sigma_g_ugal: Option<Vec<f64>>,
    #[serde(default)]
    include_pre_estimation: bool,
}

fn forty() -> usize {
    40
}

fn exactly_one<T>(a: Option<T>, b: Option<T>, what: &str) -> Result<Option<(T, bool)>> {
    match (a, b) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!(
            "give {what} in one unit only"
        ))),
        (Some(x), None) => Ok(Some((x, false))),
        (None, Some(x)) => Ok(Some((x, true))),
        (None, None) => Ok(None),
    }
}

fn required(v: Option<f64>, kind: &str, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidConfig(format!("{kind} schedule needs `{key}`")))
}

impl ConfigFile {
    fn resolve(self) -> Result<RunConfig> {
        let i = &self.interferometer;
        let interferometer = InterferometerConfig {
            k_eff: i.k_eff_per_m,
            contrast: i.contrast,
            atoms: i.atoms,
            bragg_order: i.bragg_order,
            t_min: i.t_min_s,
            t_max: i.t_max_s,
        };
        let phase_sigma_g = match exactly_one(
            self.noise.phase_sigma_m_s2,
            self.noise.phase_sigma_ugal,
            "phase sigma",
        )? {
            Some((v, true)) => v * MICRO_GAL,
            Some((v, false)) => v,
            None => 0.0,
        };
        let noise = NoiseModel {
            depolarization: self.noise.depolarization,
            phase_sigma_g,
        };

        let s = &self.schedule;
        let kind = match s.kind.as_str() {
            "fixed" => ScheduleKind::Fixed,
            "linear" => ScheduleKind::Linear {
                b: required(s.b_s, "linear", "b_s")?,
            },
            "exponential" => ScheduleKind::Exponential {
                a: required(s.a, "exponential", "a")?,
            },
            "var_ratio" => ScheduleKind::VarRatio {
                a0: s.a0.unwrap_or(1.25),
                d: required(s.d, "var_ratio", "d")?,
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown schedule kind `{other}`"
                )))
            }
        };
        let t_min = if kind == ScheduleKind::Fixed {
            i.t_max_s
        } else {
            i.t_min_s
        };
        let mut schedule = Schedule::new(kind, t_min, i.t_max_s, s.steps);
        if let Some(pi) = s.point_identification {
            schedule.point_identification = pi;
        }

        let sweep = match self.sweep {
            None => None,
            Some(sw) => {
                let axis = Axis::parse(&sw.axis)?;
                let values = match exactly_one(sw.values, sw.values_ugal, "sweep values")? {
                    Some((v, true)) => {
                        if axis != Axis::PhaseSigmaG {
                            return Err(Error::InvalidConfig(
                                "values_ugal only applies to the phase_sigma_g axis".into(),
                            ));
                        }
                        v.into_iter().map(|x| x * MICRO_GAL).collect()
                    }
                    Some((v, false)) => v,
                    None => Vec::new(),
                };
                Some(SweepSpec { axis, values })
            }
        };

        let compare = match self.compare {
            None => None,
            Some(c) => {
                let sigma_g = match exactly_one(c.sigma_g_m_s2, c.sigma_g_ugal, "compare sigma_g")?
                {
                    Some((v, true)) => v.into_iter().map(|x| x * MICRO_GAL).collect(),
                    Some((v, false)) => v,
                    None => vec![noise.phase_sigma_g],
                };
                Some(CompareSpec {
                    frequentist_shots: c.frequentist_shots,
                    sigma_g,
                    include_pre_estimation: c.include_pre_estimation,
                })
            }
        };

        let defaults = ScalingSpec::default();
        let scaling = match self.scaling {
            None => defaults,
            Some(f) => ScalingSpec {
                fit_from_step: f.fit_from_step.unwrap_or(defaults.fit_from_step),
                post_cap_skip: f.post_cap_skip.unwrap_or(defaults.post_cap_skip),
            },
        };

        let mut cfg = RunConfig {
            name: self.name,
            interferometer,
            noise,
            schedule,
            g_true: self.g_true_m_s2,
            prior_center: self.g_true_m_s2,
            repetitions: self.repetitions,
            seed: self.seed,
            protocol: self.protocol,
            sweep,
            compare,
            scaling,
        };
        cfg.validate()?;
        cfg.prior_center = match (self.prior_center_m_s2, self.prior_offset_periods) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "give prior_center_m_s2 or prior_offset_periods, not both".into(),
                ))
            }
            (Some(c), None) => c,
            (None, Some(f)) => cfg.g_true + f * 2.0 * cfg.initial_half_width()?,
            (None, None) => cfg.g_true,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
