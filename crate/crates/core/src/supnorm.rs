//! Coordinate-wise alpha-posteriors for a Haar series prior
//! `f = sum_{l >= 0} sum_k sigma_l zeta_lk psi_lk` in white noise, and Monte
//! Carlo estimation of the expected sup-norm posterior loss.
//!
//! Each coordinate posterior has density proportional to
//! `exp(-n alpha (u - y)^2 / 2) phi(u / sigma) / sigma`, where `phi` is the
//! coordinate prior density.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_alpha, check_positive, Error, Result};
use crate::numerics::quadrature::{integrate, integrate_real_line, Quadrature};
use crate::numerics::{norm_cdf, norm_pdf, norm_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoordPrior {
    /// Uniform on `[-bound, bound]`.
    Uniform { bound: f64 },
    /// `c exp(-b |x|^(1 + delta))` with `c` fixed by normalization.
    TailDensity { delta: f64, b: f64 },
    /// Standard normal.
    Gaussian,
}

impl CoordPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoordPrior::Uniform { bound } => check_positive("bound", bound),
            CoordPrior::TailDensity { delta, b } => {
                check_positive("delta", delta)?;
                check_positive("b", b)
            }
            CoordPrior::Gaussian => Ok(()),
        }
    }

    /// Unnormalized log prior density of the standardized coordinate.
    fn log_phi(&self, x: f64) -> f64 {
        match *self {
            CoordPrior::Uniform { bound } => {
                if x.abs() <= bound {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            CoordPrior::TailDensity { delta, b } => -b * x.abs().powf(1.0 + delta),
            CoordPrior::Gaussian => -0.5 * x * x,
        }
    }

    /// Normalized prior density of the standardized coordinate.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            CoordPrior::Uniform { bound } => {
                if x.abs() <= bound {
                    0.5 / bound
                } else {
                    0.0
                }
            }
            CoordPrior::TailDensity { delta, b } => {
                let q = 1.0 + delta;
                // int exp(-b |x|^q) dx = 2 Gamma(1 + 1/q) b^(-1/q).
                let log_norm = std::f64::consts::LN_2 + ln_gamma(1.0 + 1.0 / q) - b.ln() / q;
                (self.log_phi(x) - log_norm).exp()
            }
            CoordPrior::Gaussian => norm_pdf(x),
        }
    }

    /// Level scale `sigma_l`: `2^(-l(beta+1/2))`, times `(l+1)^(-1/(1+delta))` for the tail density.
    pub fn level_scale(&self, beta: f64, level: u32) -> f64 {
        let base = 2f64.powf(-(level as f64) * (beta + 0.5));
        match *self {
            CoordPrior::TailDensity { delta, .. } => {
                base * ((level + 1) as f64).powf(-1.0 / (1.0 + delta))
            }
            _ => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Moment {
    Mean,
    Var,
    MeanAbsDev { center: f64 },
}

/// One coordinate's posterior: prior scale `sigma`, observation `y`, precision `n alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordPosterior {
    pub prior: CoordPrior,
    pub sigma: f64,
    pub y: f64,
    pub precision: f64,
}

impl CoordPosterior {
    pub fn new(prior: CoordPrior, sigma: f64, y: f64, n: u64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        prior.validate()?;
        check_positive("sigma", sigma)?;
        Ok(CoordPosterior {
            prior,
            sigma,
            y,
            precision: n as f64 * alpha,
        })
    }

    /// Unnormalized log posterior density.
    pub fn log_density(&self, u: f64) -> f64 {
        -0.5 * self.precision * (u - self.y).powi(2) + self.prior.log_phi(u / self.sigma)
    }

    fn slope(&self, u: f64) -> f64 {
        let lik = -self.precision * (u - self.y);
        match self.prior {
            CoordPrior::TailDensity { delta, b } => {
                let q = 1.0 + delta;
                let z = u / self.sigma;
                lik - b * q * z.signum() * z.abs().powf(q - 1.0) / self.sigma
            }
            CoordPrior::Gaussian => lik - u / (self.sigma * self.sigma),
            CoordPrior::Uniform { .. } => lik,
        }
    }

    /// Posterior mode of the (log-concave) density.
    pub fn mode(&self) -> f64 {
        match self.prior {
            CoordPrior::Uniform { bound } => self.y.clamp(-bound * self.sigma, bound * self.sigma),
            CoordPrior::Gaussian => {
                self.precision * self.y / (self.precision + self.sigma.powi(-2))
            }
            CoordPrior::TailDensity { .. } => {
                // slope(0) and slope(y) bracket the root since the prior pulls toward 0.
                let (mut lo, mut hi) = if self.y >= 0.0 {
                    (0.0, self.y)
                } else {
                    (self.y, 0.0)
                };
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    if self.slope(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Rough posterior spread used to place quadrature and envelopes.
    fn spread(&self) -> f64 {
        let lik = 1.0 / self.precision.sqrt();
        match self.prior {
            CoordPrior::Uniform { bound } => lik.min(bound * self.sigma),
            _ => lik.min(self.sigma),
        }
    }

    /// Moment of the coordinate posterior by adaptive quadrature.
    pub fn moment(&self, moment: Moment) -> Result<f64> {
        let mode = self.mode();
        let shift = self.log_density(mode);
        let opts = Quadrature::with_rel_tol(1e-11);
        let weight = |u: f64| (self.log_density(u) - shift).exp();
        let integral = |g: &dyn Fn(f64) -> f64| -> Result<f64> {
            match self.prior {
                CoordPrior::Uniform { bound } => {
                    let edge = bound * self.sigma;
                    // Split at the mode so a sharp peak is not missed.
                    let mid = mode.clamp(-edge, edge);
                    Ok(integrate(|u| g(u) * weight(u), -edge, mid, opts)?.value
                        + integrate(|u| g(u) * weight(u), mid, edge, opts)?.value)
                }
                _ => {
                    Ok(integrate_real_line(|u| g(u) * weight(u), mode, self.spread(), opts)?.value)
                }
            }
        };
        let context = |e: Error| {
            Error::numeric(
                format!(
                    "coordinate posterior (sigma={}, y={}, n alpha={})",
                    self.sigma, self.y, self.precision
                ),
                e.to_string(),
            )
        };
        let z = integral(&|_| 1.0).map_err(context)?;
        let mean = integral(&|u| u).map_err(context)? / z;
        match moment {
            Moment::Mean => Ok(mean),
            Moment::Var => Ok(integral(&|u| (u - mean).powi(2)).map_err(context)? / z),
            Moment::MeanAbsDev { center } => {
                Ok(integral(&|u| (u - center).abs()).map_err(context)? / z)
            }
        }
    }

    /// Exact draw from the coordinate posterior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sd = 1.0 / self.precision.sqrt();
        match self.prior {
            CoordPrior::Uniform { bound } => {
                let edge = bound * self.sigma;
                self.y + sd * truncated_std_normal((-edge - self.y) / sd, (edge - self.y) / sd, rng)
            }
            CoordPrior::Gaussian => {
                let prec = self.precision + self.sigma.powi(-2);
                let z: f64 = rng.sample(StandardNormal);
                self.precision * self.y / prec + z / prec.sqrt()
            }
            CoordPrior::TailDensity { .. } => self.sample_log_concave(rng),
        }
    }

    /// Rejection from a three-piece exponential hull: tangents at the two
    /// points where the log density has dropped by one unit from its mode,
    /// joined by the flat tangent at the mode.
    fn sample_log_concave<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.mode();
        let hm = self.log_density(m);
        let step = self.spread();
        let drop_point = |dir: f64| {
            let mut inner = 0.0;
            let mut outer = step;
            while hm - self.log_density(m + dir * outer) < 1.0 {
                inner = outer;
                outer *= 2.0;
            }
            for _ in 0..40 {
                let mid = 0.5 * (inner + outer);
                if hm - self.log_density(m + dir * mid) < 1.0 {
                    inner = mid;
                } else {
                    outer = mid;
                }
            }
            m + dir * outer
        };
        let (x1, x3) = (drop_point(-1.0), drop_point(1.0));
        let (s1, s3) = (self.slope(x1), self.slope(x3));
        let (h1, h3) = (self.log_density(x1), self.log_density(x3));
        // Where each tangent meets the flat line at height hm.
        let z1 = x1 + (hm - h1) / s1;
        let z3 = x3 + (hm - h3) / s3;
        let (left, mid, right) = (1.0 / s1, z3 - z1, -1.0 / s3);
        let total = left + mid + right;
        loop {
            let pick = rng.random::<f64>() * total;
            let e: f64 = Exp1.sample(rng);
            let (x, hull) = if pick < left {
                let x = z1 - e / s1;
                (x, hm + s1 * (x - z1))
            } else if pick < left + mid {
                (z1 + rng.random::<f64>() * mid, hm)
            } else {
                let x = z3 + e / (-s3);
                (x, hm + s3 * (x - z3))
            };
            let u: f64 = rng.random();
            if u.ln() <= self.log_density(x) - hull {
                return x;
            }
        }
    }
}

/// Conjugate closed form for the Gaussian coordinate prior: (mean, variance).
pub fn gaussian_coord_closed_form(sigma: f64, y: f64, precision: f64) -> (f64, f64) {
    let prec = precision + sigma.powi(-2);
    (precision * y / prec, 1.0 / prec)
}

/// Mean and variance of `N(mu, s^2)` truncated to `[a, b]`.
pub fn truncated_normal_moments(mu: f64, s: f64, a: f64, b: f64) -> (f64, f64) {
    let (za, zb) = ((a - mu) / s, (b - mu) / s);
    let z = if za > 0.0 {
        norm_cdf(-za) - norm_cdf(-zb)
    } else {
        norm_cdf(zb) - norm_cdf(za)
    };
    let (pa, pb) = (norm_pdf(za), norm_pdf(zb));
    let r = (pa - pb) / z;
    let mean = mu + s * r;
    let var = s * s * (1.0 + (za * pa - zb * pb) / z - r * r);
    (mean, var)
}

/// Exact draw of a standard normal restricted to `[a, b]`.
pub fn truncated_std_normal<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    debug_assert!(a < b);
    if a >= 0.0 {
        upper_tail_draw(a, b, rng)
    } else if b <= 0.0 {
        -upper_tail_draw(-b, -a, rng)
    } else {
        let (pa, pb) = (norm_cdf(a), norm_cdf(b));
        let p = pa + rng.random::<f64>() * (pb - pa);
        norm_quantile(p).clamp(a, b)
    }
}

/// `0 <= a < b`: inverse CDF on the upper tail, or exponential rejection far out.
fn upper_tail_draw<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a < 5.0 {
        let (qa, qb) = (norm_cdf(-a), norm_cdf(-b));
        let p = qa - rng.random::<f64>() * (qa - qb);
        (-norm_quantile(p)).clamp(a, b)
    } else {
        loop {
            let e: f64 = Exp1.sample(rng);
            let x = a + e / a;
            if x > b {
                continue;
            }
            let u: f64 = rng.random();
            if u <= (-0.5 * (x - a) * (x - a)).exp() {
                return x;
            }
        }
    }
}

/// Inverse Haar transform: level coefficients (flat index `2^l + k`, index 0
/// the scaling coefficient) to values on `2^(L+1)` equal cells.
pub fn haar_synthesis(coefs: &[f64]) -> Vec<f64> {
    let mut values = vec![coefs.first().copied().unwrap_or(0.0)];
    let mut level = 0u32;
    while (1usize << (level + 1)) <= coefs.len() {
        let count = 1usize << level;
        let amp = (count as f64).sqrt();
        let mut next = Vec::with_capacity(2 * count);
        for (k, v) in values.iter().enumerate() {
            let d = amp * coefs[count + k];
            next.push(v + d);
            next.push(v - d);
        }
        values = next;
        level += 1;
    }
    values
}

/// Sup-norm loss study setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupnormSetup {
    pub prior: CoordPrior,
    pub beta: f64,
    /// Truth coefficients are `radius * 2^(-l(beta+1/2))`.
    pub radius: f64,
    /// Deepest simulated level.
    pub levels: u32,
    /// Posterior draws per data set.
    pub draws: usize,
}

impl SupnormSetup {
    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        check_positive("beta", self.beta)?;
        if self.draws == 0 {
            return Err(Error::param("draws", "must be at least 1"));
        }
        if self.levels > 24 {
            return Err(Error::param("levels", "at most 24 levels are supported"));
        }
        if let CoordPrior::Uniform { bound } = self.prior {
            if bound <= self.radius {
                return Err(Error::param(
                    "bound",
                    "uniform prior bound must exceed the truth radius",
                ));
            }
        }
        Ok(())
    }

    pub fn truth_coef(&self, level: u32) -> f64 {
        self.radius * 2f64.powf(-(level as f64) * (self.beta + 0.5))
    }

    /// Number of dyadic evaluation cells, `2^(levels+2)`.
    pub fn grid_cells(&self) -> usize {
        1usize << (self.levels + 2)
    }
}

/// One replication: simulate data, draw from the coordinate posteriors and
/// average the sup-norm distance to the truth over the draws.
pub fn supnorm_replication<R: Rng + ?Sized>(
    setup: &SupnormSetup,
    n: u64,
    alpha: f64,
    rng: &mut R,
) -> Result<f64> {
    setup.validate()?;
    let len = 1usize << (setup.levels + 1);
    let noise_sd = 1.0 / (n as f64).sqrt();
    let mut posts = Vec::with_capacity(len - 1);
    for level in 0..=setup.levels {
        let sigma = setup.prior.level_scale(setup.beta, level);
        let f0 = setup.truth_coef(level);
        for _ in 0..(1usize << level) {
            let e: f64 = rng.sample(StandardNormal);
            posts.push((
                f0,
                CoordPosterior::new(setup.prior, sigma, f0 + noise_sd * e, n, alpha)?,
            ));
        }
    }
    let mut total = 0.0;
    let mut diff = vec![0.0; len];
    for _ in 0..setup.draws {
        for (slot, (f0, post)) in diff[1..].iter_mut().zip(&posts) {
            *slot = post.sample(rng) - f0;
        }
        // The difference is constant on each finest cell, so the cell values
        // give the sup exactly (any finer dyadic grid repeats them).
        total += haar_synthesis(&diff)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
    }
    Ok(total / setup.draws as f64)
}

/// Monte Carlo estimate of `E_0 int ||f - f0||_inf dPi_alpha(f | Y)`.
pub fn supnorm_posterior_risk<R: Rng + ?Sized>(
    setup: &SupnormSetup,
    n: u64,
    alpha: f64,
    rng: &mut R,
    reps: usize,
) -> Result<f64> {
    if reps == 0 {
        return Err(Error::param("reps", "must be at least 1"));
    }
    let mut acc = 0.0;
    for _ in 0..reps {
        acc += supnorm_replication(setup, n, alpha, rng)?;
    }
    Ok(acc / reps as f64)
}
