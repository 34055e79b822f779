//! Interferometer fringe model and shot simulation.
//!
//! All gravity-like quantities are accelerations in m/s². The phase of a
//! single shot is `n_B (g - g_c) k_eff T²`, where `g_c` is the control value
//! set by the chirp of the Raman lasers.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// One microgal in m/s².
pub const MICRO_GAL: f64 = 1e-8;

/// Static parameters of the gravimeter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    /// Effective wave number `k_eff` in 1/m.
    pub k_eff: f64,
    /// Fringe contrast `C` in (0, 1].
    pub contrast: f64,
    /// Atoms per shot `R`.
    pub atoms: f64,
    /// Momentum-transfer order `n_B` (1 = plain Raman transition).
    pub bragg_order: u32,
    /// Shortest interrogation time in s.
    pub t_min: f64,
    /// Longest interrogation time in s.
    pub t_max: f64,
}

impl InterferometerConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("k_eff", self.k_eff, self.k_eff > 0.0, "k_eff > 0")?;
        check_range(
            "contrast",
            self.contrast,
            self.contrast > 0.0 && self.contrast <= 1.0,
            "0 < C <= 1",
        )?;
        check_range("atoms", self.atoms, self.atoms >= 1.0, "R >= 1")?;
        if self.bragg_order == 0 {
            return Err(Error::Domain {
                name: "bragg_order",
                value: 0.0,
                expected: "n_B >= 1",
            });
        }
        check_range("t_min", self.t_min, self.t_min > 0.0, "T_min > 0")?;
        check_range(
            "t_max",
            self.t_max,
            self.t_max >= self.t_min,
            "T_max >= T_min",
        )?;
        Ok(())
    }

    /// `n_B k_eff T²`: phase per unit of `g - g_c`.
    pub fn phase_scale(&self, t: f64) -> f64 {
        f64::from(self.bragg_order) * self.k_eff * t * t
    }

    /// Fringe period in g units at interrogation time `t`.
    pub fn fringe_period(&self, t: f64) -> f64 {
        std::f64::consts::TAU / self.phase_scale(t)
    }
}

/// Technical noise applied per shot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Scale `p_d` of the half-normal depolarization draw.
    pub depolarization: f64,
    /// Standard deviation `σ_g` of the phase jitter, in m/s².
    pub phase_sigma_g: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        depolarization: 0.0,
        phase_sigma_g: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        check_range(
            "depolarization",
            self.depolarization,
            (0.0..=1.0).contains(&self.depolarization),
            "0 <= p_d <= 1",
        )?;
        check_range(
            "phase_sigma_g",
            self.phase_sigma_g,
            self.phase_sigma_g >= 0.0,
            "sigma_g >= 0",
        )
    }

    pub fn is_none(&self) -> bool {
        self.depolarization == 0.0 && self.phase_sigma_g == 0.0
    }
}

/// Output port of the interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Port {
    Ground,
    Excited,
}

impl Port {
    fn sign(self) -> f64 {
        match self {
            Port::Ground => 1.0,
            Port::Excited => -1.0,
        }
    }
}

/// Per-shot realisation of the technical noise.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseDraw {
    pub depolarization: f64,
    pub phase_offset_g: f64,
}

impl NoiseDraw {
    /// Depolarization first, then phase; both from standard normals.
    pub fn sample<R: Rng + ?Sized>(noise: &NoiseModel, rng: &mut R) -> Self {
        let z_d: f64 = rng.sample(StandardNormal);
        let z_g: f64 = rng.sample(StandardNormal);
        NoiseDraw {
            depolarization: (z_d * noise.depolarization).abs().min(1.0),
            phase_offset_g: z_g * noise.phase_sigma_g,
        }
    }
}

/// Largest atom number sampled exactly; above it a Gaussian is used.
pub const BINOMIAL_MAX_ATOMS: f64 = 1e4;

fn check_time(cfg: &InterferometerConfig, t: f64) -> Result<()> {
    let tol = 1e-12 * cfg.t_max;
    check_range(
        "T",
        t,
        t >= cfg.t_min - tol && t <= cfg.t_max + tol,
        "T_min <= T <= T_max",
    )
}

/// `½[1 + s C' cos(n_B (g − g_c + δ) k_eff T²)]` without range checks.
#[inline]
pub fn fringe(
    cfg: &InterferometerConfig,
    port: Port,
    g: f64,
    g_c: f64,
    t: f64,
    draw: &NoiseDraw,
) -> f64 {
    let phase = cfg.phase_scale(t) * (g - g_c + draw.phase_offset_g);
    let contrast = (1.0 - draw.depolarization) * cfg.contrast;
    0.5 * (1.0 + port.sign() * contrast * phase.cos())
}

/// Noise-free probability of detecting `port`.
pub fn ideal_probability(
    cfg: &InterferometerConfig,
    port: Port,
    g: f64,
    g_c: f64,
    t: f64,
) -> Result<f64> {
    check_time(cfg, t)?;
    Ok(fringe(cfg, port, g, g_c, t, &NoiseDraw::default()))
}

/// Draw one noise realisation and evaluate the fringe with it.
///
/// With a zero noise model this equals [`ideal_probability`] bit for bit.
pub fn noisy_probability<R: Rng + ?Sized>(
    cfg: &InterferometerConfig,
    port: Port,
    g: f64,
    g_c: f64,
    t: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<f64> {
    check_time(cfg, t)?;
    let draw = NoiseDraw::sample(noise, rng);
    Ok(fringe(cfg, port, g, g_c, t, &draw))
}

/// Result of one simulated shot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotOutcome {
    /// Excited-state probability the shot was sampled from, after noise.
    pub p_true: f64,
    /// Measured excited fraction, inside `[1/(2R), 1 − 1/(2R)]`.
    pub p_e: f64,
    pub draw: NoiseDraw,
}

/// Draw the noise, then the finite-atom-number fraction.
///
/// Exact binomial sampling up to [`BINOMIAL_MAX_ATOMS`], Gaussian above.
/// The result is kept half an atom away from 0 and 1 so that the
/// likelihood variance `P_e (1 − P_e) / R` never vanishes. The range of `t`
/// is the caller's responsibility.
pub fn simulate_shot<R: Rng + ?Sized>(
    cfg: &InterferometerConfig,
    g_true: f64,
    g_c: f64,
    t: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> ShotOutcome {
    let draw = NoiseDraw::sample(noise, rng);
    let p_true = fringe(cfg, Port::Excited, g_true, g_c, t, &draw).clamp(0.0, 1.0);
    let r = cfg.atoms;
    let raw = if r <= BINOMIAL_MAX_ATOMS {
        let n = r.round().max(1.0);
        let k = Binomial::new(n as u64, p_true)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        k as f64 / n
    } else {
        let z: f64 = rng.sample(StandardNormal);
        p_true + z * (p_true * (1.0 - p_true) / r).sqrt()
    };
    let edge = 0.5 / r;
    ShotOutcome {
        p_true,
        p_e: raw.clamp(edge, 1.0 - edge),
        draw,
    }
}
