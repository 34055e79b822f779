//! Grid posterior over `g` and the Bayesian update.
//!
//! The support is one fringe period at the current interrogation time. The
//! posterior keeps its base prior and the shots recorded since the last
//! reset, so its density can be recomputed exactly on any sub-window.
//! Values are stored on a uniform grid covering a window of the support;
//! the window follows the bulk of the mass and the spacing follows the
//! narrowest likelihood seen, which lets a few thousand points resolve
//! peaks far below the fringe period. Grid abscissae are offsets from an
//! origin near the estimate, so moments do not lose digits against
//! `g ≈ 9.8 m/s²`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::physics::InterferometerConfig;
use crate::quadrature::{trapezoid, trapezoid_weighted};

/// Smallest number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 2048;
/// Refinement stops here; beyond it peaks are left under-resolved.
pub const MAX_GRID_POINTS: usize = 1 << 21;
/// Evidence integrals below this are treated as a collapsed posterior.
pub const COLLAPSE_THRESHOLD: f64 = 1e-300;

const POINTS_PER_WIDTH: f64 = 8.0;
const WINDOW_SIGMAS: f64 = 45.0;

/// Posterior mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub g_est: f64,
    pub dg_est: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasePrior {
    Uniform,
    Gaussian { mean: f64, std: f64 },
}

/// One recorded shot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub p_e: f64,
    pub g_c: f64,
    pub t: f64,
}

#[derive(Clone, Debug)]
pub struct GridPosterior {
    cfg: InterferometerConfig,
    origin: f64,
    half_support: f64,
    /// Window `[x0, x1]` as offsets from `origin`.
    x0: f64,
    x1: f64,
    values: Vec<f64>,
    base: BasePrior,
    record: Vec<Observation>,
    t: f64,
    step: usize,
}

/// Peak width in g units of a shot's likelihood.
///
/// Linear slope of the fringe away from extrema, quadratic curvature near them.
fn likelihood_width(obs: &Observation, cfg: &InterferometerConfig) -> f64 {
    let sigma_p = (obs.p_e * (1.0 - obs.p_e) / cfg.atoms).sqrt();
    let c = cfg.contrast;
    let cos_star = ((1.0 - 2.0 * obs.p_e) / c).clamp(-1.0, 1.0);
    let sin_star = (1.0 - cos_star * cos_star).sqrt();
    let linear = 2.0 * sigma_p / (c * sin_star);
    let quadratic = 2.0 * (sigma_p / c).sqrt();
    linear.min(quadratic) / cfg.phase_scale(obs.t)
}

fn gaussian_ln_pdf(residual: f64, variance: f64) -> f64 {
    -0.5 * residual * residual / variance - 0.5 * (TAU * variance).ln()
}

/// Precomputed pieces of one shot's log-likelihood on an offset grid.
struct Term {
    shift: f64,
    scale: f64,
    p_e: f64,
    variance: f64,
    contrast: f64,
}

impl Term {
    fn new(obs: &Observation, origin: f64, cfg: &InterferometerConfig) -> Self {
        Term {
            shift: origin - obs.g_c,
            scale: cfg.phase_scale(obs.t),
            p_e: obs.p_e,
            variance: obs.p_e * (1.0 - obs.p_e) / cfg.atoms,
            contrast: cfg.contrast,
        }
    }

    #[inline]
    fn ln_at(&self, x: f64) -> f64 {
        let model = 0.5 * (1.0 - self.contrast * (self.scale * (self.shift + x)).cos());
        gaussian_ln_pdf(self.p_e - model, self.variance)
    }
}

fn check_p_e(p_e: f64) -> Result<()> {
    check_range("p_e", p_e, p_e > 0.0 && p_e < 1.0, "0 < P_e < 1")
}

/// Likelihood of measuring `p_e` if gravity were `g`.
///
/// Gaussian approximation of the binomial shot noise; `p_e` must lie in (0, 1).
pub fn ensemble_likelihood(
    p_e: f64,
    g: f64,
    g_c: f64,
    t: f64,
    cfg: &InterferometerConfig,
) -> Result<f64> {
    check_p_e(p_e)?;
    let obs = Observation { p_e, g_c, t };
    Ok(Term::new(&obs, g, cfg).ln_at(0.0).exp())
}

impl GridPosterior {
    /// Uniform prior on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, t: f64, cfg: &InterferometerConfig) -> Result<Self> {
        check_range("t", t, t > 0.0, "T > 0")?;
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "empty support [{lo:e}, {hi:e}]"
            )));
        }
        let origin = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        Self::build(*cfg, origin, half, (-half, half), BasePrior::Uniform, t, 0)
    }

    /// Gaussian prior truncated to one fringe period at `t`, centred on `mean`.
    pub fn gaussian(mean: f64, std: f64, t: f64, cfg: &InterferometerConfig) -> Result<Self> {
        check_range("t", t, t > 0.0, "T > 0")?;
        if !(std > 0.0) || !std.is_finite() {
            return Err(Error::DegeneratePrior(std));
        }
        let half = PI / cfg.phase_scale(t);
        let w = (WINDOW_SIGMAS * std).min(half);
        Self::build(
            *cfg,
            mean,
            half,
            (-w, w),
            BasePrior::Gaussian { mean, std },
            t,
            0,
        )
    }

    fn build(
        cfg: InterferometerConfig,
        origin: f64,
        half_support: f64,
        window: (f64, f64),
        base: BasePrior,
        t: f64,
        step: usize,
    ) -> Result<Self> {
        let mut post = GridPosterior {
            cfg,
            origin,
            half_support,
            x0: window.0,
            x1: window.1,
            values: Vec::new(),
            base,
            record: Vec::new(),
            t,
            step,
        };
        let feature = post.info_sigma();
        let n = post.points_for(window.1 - window.0, feature);
        post.evaluate(n, window)?;
        Ok(post)
    }

    fn points_for(&self, width: f64, feature: f64) -> usize {
        let n = if feature > 0.0 && feature.is_finite() {
            (width / feature * POINTS_PER_WIDTH).ceil() + 1.0
        } else {
            0.0
        };
        (n.min(MAX_GRID_POINTS as f64) as usize).max(DEFAULT_GRID_POINTS)
    }

    /// Combined width of the base prior and all recorded likelihoods.
    fn info_sigma(&self) -> f64 {
        let mut precision: f64 = self
            .record
            .iter()
            .map(|o| likelihood_width(o, &self.cfg).powi(-2))
            .sum();
        if let BasePrior::Gaussian { std, .. } = self.base {
            precision += std.powi(-2);
        }
        if precision > 0.0 {
            precision.sqrt().recip()
        } else {
            f64::INFINITY
        }
    }

    /// Recompute the exact normalised density on `n` points over `window`.
    fn evaluate(&mut self, n: usize, window: (f64, f64)) -> Result<()> {
        let (x0, x1) = window;
        let h = (x1 - x0) / (n - 1) as f64;
        let terms: Vec<Term> = self
            .record
            .iter()
            .map(|o| Term::new(o, self.origin, &self.cfg))
            .collect();
        let base_shift = match self.base {
            BasePrior::Uniform => None,
            BasePrior::Gaussian { mean, std } => Some((self.origin - mean, std)),
        };
        let mut logs: Vec<f64> = (0..n)
            .map(|j| {
                let x = x0 + j as f64 * h;
                let mut l = match base_shift {
                    None => 0.0,
                    Some((s, std)) => -0.5 * ((s + x) / std).powi(2),
                };
                for term in &terms {
                    l += term.ln_at(x);
                }
                l
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::PosteriorCollapse {
                step: self.step,
                integral: 0.0,
            });
        }
        logs.iter_mut().for_each(|l| *l = (*l - max).exp());
        let z = trapezoid(&logs, h);
        logs.iter_mut().for_each(|v| *v /= z);
        self.values = logs;
        self.x0 = x0;
        self.x1 = x1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.x1 - self.x0) / (self.values.len() - 1) as f64
    }

    /// Prior support `[lo, hi]` in m/s².
    pub fn support(&self) -> (f64, f64) {
        (
            self.origin - self.half_support,
            self.origin + self.half_support,
        )
    }

    /// Grid window `[lo, hi]` in m/s².
    pub fn window(&self) -> (f64, f64) {
        (self.origin + self.x0, self.origin + self.x1)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Grid abscissae as offsets from [`origin`](Self::origin).
    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.values.len()).map(move |j| self.x0 + j as f64 * h)
    }

    /// Normalised density values, one per grid point.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ p(g) dg` over the window; 1 up to rounding.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.spacing())
    }

    /// Number of local maxima above `fraction` of the global maximum.
    pub fn peak_count(&self, fraction: f64) -> usize {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        let v = &self.values;
        (0..v.len())
            .filter(|&j| {
                let left = if j == 0 { f64::NEG_INFINITY } else { v[j - 1] };
                let right = v.get(j + 1).copied().unwrap_or(f64::NEG_INFINITY);
                v[j] > fraction * max && v[j] > left && v[j] >= right
            })
            .count()
    }

    pub fn interrogation_time(&self) -> f64 {
        self.t
    }

    /// Number of updates applied since the run started.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn record(&self) -> &[Observation] {
        &self.record
    }

    pub fn base_prior(&self) -> BasePrior {
        self.base
    }

    /// Posterior mean and standard deviation.
    pub fn estimate(&self) -> Estimate {
        let (mean, sigma) = self.moments();
        Estimate {
            g_est: self.origin + mean,
            dg_est: sigma,
        }
    }

    /// Mean offset and standard deviation.
    fn moments(&self) -> (f64, f64) {
        let h = self.spacing();
        let z = trapezoid(&self.values, h);
        let mean = trapezoid_weighted(&self.values, self.x0, h, |x| x) / z;
        let var = trapezoid_weighted(&self.values, self.x0, h, |x| (x - mean).powi(2)) / z;
        (mean, var.max(0.0).sqrt())
    }

    fn update(mut self, obs: Observation) -> Result<Self> {
        let step = self.step + 1;
        let width = likelihood_width(&obs, &self.cfg);
        if self.spacing() > width / POINTS_PER_WIDTH && self.len() < MAX_GRID_POINTS {
            let n = self.points_for(self.x1 - self.x0, width);
            self.evaluate(n, (self.x0, self.x1))?;
        }

        let term = Term::new(&obs, self.origin, &self.cfg);
        let h = self.spacing();
        let x0 = self.x0;
        let product: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v * term.ln_at(x0 + j as f64 * h).exp())
            .collect();
        let z = trapezoid(&product, h);
        if !(z >= COLLAPSE_THRESHOLD) || !z.is_finite() {
            return Err(Error::PosteriorCollapse { step, integral: z });
        }
        self.values = product.into_iter().map(|v| v / z).collect();
        self.record.push(obs);
        self.step = step;
        self.refit()?;
        Ok(self)
    }

    /// Shrink the window onto the mass and restore the target resolution.
    fn refit(&mut self) -> Result<()> {
        let (mean, sigma) = self.moments();
        let feature = sigma.min(self.info_sigma());
        if !(feature > 0.0) || !feature.is_finite() {
            return Ok(());
        }
        let lo = (mean - WINDOW_SIGMAS * sigma).max(-self.half_support);
        let hi = (mean + WINDOW_SIGMAS * sigma).min(self.half_support);
        let too_wide = hi - lo < 0.5 * (self.x1 - self.x0);
        let too_coarse = self.spacing() > 2.0 * feature / POINTS_PER_WIDTH;
        if (too_wide || too_coarse) && hi > lo {
            let n = self.points_for(hi - lo, feature);
            self.evaluate(n, (lo, hi))?;
        }
        Ok(())
    }
}

/// Uniform prior over one fringe period at `t1` centred on `center`.
pub fn init_uniform(center: f64, t1: f64, cfg: &InterferometerConfig) -> Result<GridPosterior> {
    check_range("t1", t1, t1 > 0.0, "T_1 > 0")?;
    let half = PI / cfg.phase_scale(t1);
    GridPosterior::uniform(center - half, center + half, t1, cfg)
}

/// Multiply by the likelihood of `p_e` and renormalise.
///
/// `cfg` must be the configuration the posterior was created with.
pub fn bayes_update(
    post: GridPosterior,
    p_e: f64,
    g_c: f64,
    t: f64,
    cfg: &InterferometerConfig,
) -> Result<GridPosterior> {
    check_p_e(p_e)?;
    check_range("t", t, t > 0.0, "T > 0")?;
    debug_assert_eq!(&post.cfg, cfg);
    post.update(Observation { p_e, g_c, t })
}

pub fn estimate(post: &GridPosterior) -> Estimate {
    post.estimate()
}

/// Trapezoid mean and standard deviation of density samples on a uniform grid over `[lo, hi]`.
pub fn tabulated_estimate(lo: f64, hi: f64, values: &[f64]) -> Estimate {
    let origin = 0.5 * (lo + hi);
    let x0 = lo - origin;
    let h = (hi - lo) / (values.len().max(2) - 1) as f64;
    let z = trapezoid(values, h);
    let mean = trapezoid_weighted(values, x0, h, |x| x) / z;
    let var = trapezoid_weighted(values, x0, h, |x| (x - mean).powi(2)) / z;
    Estimate {
        g_est: origin + mean,
        dg_est: var.max(0.0).sqrt(),
    }
}

/// Reset to a Gaussian prior on one fringe period at `t_new`.
///
/// Returns the posterior untouched when `t_new` equals the current time.
pub fn regrid(
    post: GridPosterior,
    est: &Estimate,
    t_new: f64,
    cfg: &InterferometerConfig,
) -> Result<GridPosterior> {
    if t_new == post.t {
        return Ok(post);
    }
    if !(t_new > post.t) {
        return Err(Error::Domain {
            name: "t_new",
            value: t_new,
            expected: "T_new >= current T",
        });
    }
    let mut next = GridPosterior::gaussian(est.g_est, est.dg_est, t_new, cfg)?;
    next.step = post.step;
    Ok(next)
}
