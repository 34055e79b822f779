//! Conventional protocol: chirp-rate fringe scans for a coarse estimate,
//! then repeated shots at `T_max` inverted one by one at mid-fringe.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{simulate_shot, InterferometerConfig, NoiseModel};
use crate::rng::step_rng;
use crate::schedule::{chirp_rate, g_from_chirp};

/// Observed excited fractions against chirp rate at one `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub t: f64,
    /// Chirp rates in Hz/s, sorted.
    pub alpha_values: Vec<f64>,
    pub p_e_values: Vec<f64>,
}

impl FringeScan {
    /// Width of one fringe in chirp rate: `1 / (n_B T²)`.
    pub fn period(&self, cfg: &InterferometerConfig) -> f64 {
        1.0 / (f64::from(cfg.bragg_order) * self.t * self.t)
    }
}

/// One shot per chirp rate, with `g_c = 2π α / k_eff`.
pub fn scan_fringe<R: Rng + ?Sized>(
    cfg: &InterferometerConfig,
    g_true: f64,
    t: f64,
    alpha_grid: &[f64],
    noise: &NoiseModel,
    rng: &mut R,
) -> FringeScan {
    debug_assert!(alpha_grid.windows(2).all(|w| w[0] <= w[1]));
    let p_e_values = alpha_grid
        .iter()
        .map(|&alpha| simulate_shot(cfg, g_true, g_from_chirp(alpha, cfg), t, noise, rng).p_e)
        .collect();
    FringeScan {
        t,
        alpha_values: alpha_grid.to_vec(),
        p_e_values,
    }
}

/// Least-squares cosine fit of a fringe scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub t: f64,
    pub contrast: f64,
    /// Fringe phase at `alpha_ref`.
    pub phase: f64,
    pub alpha_ref: f64,
    /// Chirp-rate period of the fringe.
    pub period: f64,
    /// Fringe minima inside the scanned range.
    pub minima: Vec<f64>,
    pub rms_residual: f64,
}

impl FringeFit {
    /// Minima in `[lo, hi]`.
    pub fn minima_between(&self, lo: f64, hi: f64) -> Vec<f64> {
        // minima sit where the phase (theta - omega u) is a multiple of 2π
        let first = ((lo - self.alpha_ref) / self.period - self.phase / TAU).ceil() as i64;
        let last = ((hi - self.alpha_ref) / self.period - self.phase / TAU).floor() as i64;
        (first..=last)
            .map(|m| self.alpha_ref + (self.phase / TAU + m as f64) * self.period)
            .collect()
    }

    /// Gravity value of a fringe minimum.
    pub fn g_at(&self, alpha: f64, cfg: &InterferometerConfig) -> f64 {
        g_from_chirp(alpha, cfg)
    }
}

/// Fit `P_e(α) = ½[1 − C' cos((k_eff g' − 2πα) n_B T²)]`.
///
/// The fringe frequency in α is known from `T`, so the fit is linear in
/// `(C' cos θ, C' sin θ)` with θ the phase at the scan centre.
pub fn fit_fringe(scan: &FringeScan, cfg: &InterferometerConfig) -> Result<FringeFit> {
    let n = scan.alpha_values.len();
    if n < 3 || scan.p_e_values.len() != n {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let period = scan.period(cfg);
    let omega = TAU / period;
    let lo = scan.alpha_values[0];
    let hi = scan.alpha_values[n - 1];
    let alpha_ref = 0.5 * (lo + hi);

    // y = P - 1/2 = -1/2 [A cos(ωu) + B sin(ωu)],  u = α - α_ref
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&alpha, &p) in scan.alpha_values.iter().zip(&scan.p_e_values) {
        let u = alpha - alpha_ref;
        let c = -0.5 * (omega * u).cos();
        let s = -0.5 * (omega * u).sin();
        let y = p - 0.5;
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += y * c;
        sys += y * s;
    }
    let det = scc * sss - scs * scs;
    let a = (syc * sss - sys * scs) / det;
    let b = (sys * scc - syc * scs) / det;
    let residual = |a: f64, b: f64| {
        let ss: f64 = scan
            .alpha_values
            .iter()
            .zip(&scan.p_e_values)
            .map(|(&alpha, &p)| {
                let u = alpha - alpha_ref;
                let model = 0.5 - 0.5 * (a * (omega * u).cos() + b * (omega * u).sin());
                (p - model).powi(2)
            })
            .sum();
        (ss / n as f64).sqrt()
    };
    let contrast = a.hypot(b);
    if !(det > 1e-12 * scc * sss) || !contrast.is_finite() || contrast == 0.0 {
        let rms = if a.is_finite() && b.is_finite() {
            residual(a, b)
        } else {
            f64::NAN
        };
        return Err(Error::FitFailed { residual: rms });
    }
    let mut fit = FringeFit {
        t: scan.t,
        contrast,
        phase: b.atan2(a),
        alpha_ref,
        period,
        minima: Vec::new(),
        rms_residual: residual(a, b),
    };
    fit.minima = fit.minima_between(lo, hi);
    Ok(fit)
}

/// How the coarse pre-estimate is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreEstimationPlan {
    /// Shortest scan time; the others are 2x and 4x.
    pub t_base: f64,
    pub points_per_fringe: usize,
    /// Common-minimum tolerance as a fraction of the narrowest period.
    pub tolerance: f64,
}

impl PreEstimationPlan {
    pub const RATIOS: [f64; 3] = [1.0, 2.0, 4.0];

    pub fn new(t_base: f64) -> Self {
        PreEstimationPlan {
            t_base,
            points_per_fringe: 16,
            tolerance: 0.1,
        }
    }

    pub fn times(&self) -> [f64; 3] {
        Self::RATIOS.map(|r| r * self.t_base)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreEstimate {
    pub g_pre: f64,
    pub alpha_0: f64,
    pub scans: Vec<FringeScan>,
    pub fits: Vec<FringeFit>,
    pub shots: usize,
    /// Summed interrogation time of all scan shots, s.
    pub total_time: f64,
}

/// Minimum shared by every fit, if there is exactly one.
///
/// Candidates come from the shortest-`T` fit inside `[lo, hi)`; the returned
/// value is the matching minimum of the longest-`T` fit.
pub fn common_minimum(fits: &[FringeFit], lo: f64, hi: f64, tolerance: f64) -> Result<f64> {
    let (first, rest) = fits
        .split_first()
        .ok_or(Error::TooFewPoints { needed: 1, got: 0 })?;
    let candidates: Vec<f64> = first
        .minima_between(lo, hi)
        .into_iter()
        .filter(|&a| a < hi)
        .collect();
    let mut common = Vec::new();
    'candidate: for c in candidates {
        let mut refined = c;
        for fit in rest {
            let near = fit.minima_between(c - fit.period, c + fit.period);
            match near
                .into_iter()
                .min_by(|x, y| (x - c).abs().total_cmp(&(y - c).abs()))
            {
                Some(m) if (m - c).abs() <= tolerance => refined = m,
                _ => continue 'candidate,
            }
        }
        common.push(refined);
    }
    match common.as_slice() {
        [only] => Ok(*only),
        other => Err(Error::AmbiguousMinimum(other.len())),
    }
}

impl PreEstimationPlan {
    /// Chirp-rate window: one fringe of the shortest scan, centred on `guess`.
    pub fn window(&self, cfg: &InterferometerConfig, guess: f64) -> (f64, f64) {
        let width = 1.0 / (f64::from(cfg.bragg_order) * self.t_base * self.t_base);
        let centre = chirp_rate(guess, cfg);
        (centre - 0.5 * width, centre + 0.5 * width)
    }

    /// `(T, chirp grid)` of each scan.
    pub fn layout(&self, cfg: &InterferometerConfig, guess: f64) -> Vec<(f64, Vec<f64>)> {
        let (lo, hi) = self.window(cfg, guess);
        let n_b = f64::from(cfg.bragg_order);
        self.times()
            .iter()
            .map(|&t| {
                let fringes = (hi - lo) * n_b * t * t;
                let points = (self.points_per_fringe as f64 * fringes).round().max(8.0) as usize;
                let step = (hi - lo) / points as f64;
                (
                    t,
                    (0..points).map(|j| lo + (j as f64 + 0.5) * step).collect(),
                )
            })
            .collect()
    }

    /// Shot count and summed interrogation time of all scans.
    pub fn cost(&self, cfg: &InterferometerConfig) -> (usize, f64) {
        self.layout(cfg, 0.0)
            .iter()
            .fold((0, 0.0), |(n, time), (t, grid)| {
                (n + grid.len(), time + t * grid.len() as f64)
            })
    }
}

/// Three fringe scans at `T : 2T : 4T` across one shortest-`T` fringe around `guess`.
pub fn pre_estimate(
    cfg: &InterferometerConfig,
    g_true: f64,
    guess: f64,
    noise: &NoiseModel,
    plan: &PreEstimationPlan,
    seed: u64,
) -> Result<PreEstimate> {
    let (lo, hi) = plan.window(cfg, guess);
    let mut scans = Vec::with_capacity(3);
    let mut fits = Vec::with_capacity(3);
    for (s, (t, grid)) in plan.layout(cfg, guess).into_iter().enumerate() {
        let mut rng = step_rng(seed, s as u64);
        let scan = scan_fringe(cfg, g_true, t, &grid, noise, &mut rng);
        fits.push(fit_fringe(&scan, cfg)?);
        scans.push(scan);
    }
    let narrowest = fits.iter().map(|f| f.period).fold(f64::INFINITY, f64::min);
    let alpha_0 = common_minimum(&fits, lo, hi, plan.tolerance * narrowest)?;
    let shots = scans.iter().map(|s| s.alpha_values.len()).sum();
    let total_time = scans
        .iter()
        .map(|s| s.t * s.alpha_values.len() as f64)
        .sum();
    Ok(PreEstimate {
        g_pre: g_from_chirp(alpha_0, cfg),
        alpha_0,
        scans,
        fits,
        shots,
        total_time,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionalShot {
    pub p_e: f64,
    pub g_hat: f64,
    /// `|1 − 2P_e| > C`: inversion clipped to the fringe edge.
    pub clipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionalResult {
    pub g_est: f64,
    pub dg_est: f64,
    pub g_c: f64,
    pub shots: Vec<ConventionalShot>,
}

impl ConventionalResult {
    pub fn clipped_count(&self) -> usize {
        self.shots.iter().filter(|s| s.clipped).count()
    }
}

/// `m_shots` shots at `T_max` with the control held at the mid-fringe point of `g_pre`.
pub fn conventional_estimate(
    cfg: &InterferometerConfig,
    g_true: f64,
    g_pre: f64,
    noise: &NoiseModel,
    m_shots: usize,
    seed: u64,
) -> Result<ConventionalResult> {
    if m_shots < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: m_shots,
        });
    }
    let t = cfg.t_max;
    let scale = cfg.phase_scale(t);
    let g_c = g_pre - FRAC_PI_2 / scale;
    let shots: Vec<ConventionalShot> = (0..m_shots)
        .map(|i| {
            let mut rng = step_rng(seed, i as u64);
            let p_e = simulate_shot(cfg, g_true, g_c, t, noise, &mut rng).p_e;
            let x = (1.0 - 2.0 * p_e) / cfg.contrast;
            ConventionalShot {
                p_e,
                g_hat: g_c + x.clamp(-1.0, 1.0).acos() / scale,
                clipped: x.abs() > 1.0,
            }
        })
        .collect();
    let m = m_shots as f64;
    // offsets from g_c keep the variance free of cancellation
    let mean_off = shots.iter().map(|s| s.g_hat - g_c).sum::<f64>() / m;
    let var = shots
        .iter()
        .map(|s| (s.g_hat - g_c - mean_off).powi(2))
        .sum::<f64>()
        / (m - 1.0);
    Ok(ConventionalResult {
        g_est: g_c + mean_off,
        dg_est: (var / m).sqrt(),
        g_c,
        shots,
    })
}
