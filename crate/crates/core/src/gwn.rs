//! Exact fractional posteriors in the Gaussian white noise sequence model
//! `Y_k = f0_k + eps_k / sqrt(n)` with independent priors `f_k ~ N(0, lambda_k)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bases::{CoefSeq, SequenceModelSpec};
use crate::error::{check_alpha, check_positive, Error, Result};
use crate::numerics::norm_quantile;

/// Rule `n -> alpha_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSchedule {
    Constant {
        alpha: f64,
    },
    /// `c * n^(-x)`
    Power {
        c: f64,
        x: f64,
    },
    /// `c * n^(-x) * (log n)^s`
    PowerLog {
        c: f64,
        x: f64,
        s: f64,
    },
}

impl AlphaSchedule {
    /// Evaluates the schedule; values outside (0, 1] are an error, never clamped.
    pub fn eval(&self, n: u64) -> Result<f64> {
        let nf = n as f64;
        let alpha = match *self {
            AlphaSchedule::Constant { alpha } => alpha,
            AlphaSchedule::Power { c, x } => c * nf.powf(-x),
            AlphaSchedule::PowerLog { c, x, s } => c * nf.powf(-x) * nf.ln().powf(s),
        };
        check_alpha(alpha).map_err(|_| {
            Error::param(
                "alpha",
                format!("schedule {self:?} gives {alpha} at n = {n}, outside (0, 1]"),
            )
        })?;
        Ok(alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GwnObservation {
    pub n: u64,
    pub y: CoefSeq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianLaw {
    pub fn new(mean: f64, sd: f64) -> Self {
        debug_assert!(sd >= 0.0);
        GaussianLaw { mean, sd }
    }

    pub fn from_var(mean: f64, var: f64) -> Self {
        GaussianLaw::new(mean, var.max(0.0).sqrt())
    }

    pub fn var(&self) -> f64 {
        self.sd * self.sd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalKind {
    Quantile,
    ShiftRescale,
}

/// Half-open credible interval `(low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub kind: IntervalKind,
    pub center: f64,
}

impl CredibleInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.low < x && x <= self.high
    }

    pub fn length(&self) -> f64 {
        self.high - self.low
    }
}

/// Partial sum of an infinite series with an analytic bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Fractional posterior in the normal location model with `N(mu0, sigma2)` prior.
pub fn conjugate_param_posterior(
    n: u64,
    alpha: f64,
    mu0: f64,
    sigma2: f64,
    ybar: f64,
) -> Result<GaussianLaw> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::param("sigma2", "prior variance must be positive"));
    }
    let na = n as f64 * alpha;
    let prec = na + 1.0 / sigma2;
    Ok(GaussianLaw::from_var(
        (na * ybar + mu0 / sigma2) / prec,
        1.0 / prec,
    ))
}

/// Observation from explicit standardized noise values.
pub fn gwn_from_noise(f0: &CoefSeq, n: u64, noise: &[f64]) -> Result<GwnObservation> {
    if noise.len() != f0.len() {
        return Err(Error::param("noise", "length must match the truth"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let y = f0
        .coefs
        .iter()
        .zip(noise)
        .map(|(f, e)| f + e * scale)
        .collect();
    Ok(GwnObservation {
        n,
        y: CoefSeq {
            coefs: y,
            basis: f0.basis,
        },
    })
}

pub fn simulate_gwn<R: Rng + ?Sized>(f0: &CoefSeq, n: u64, rng: &mut R) -> GwnObservation {
    let scale = 1.0 / (n as f64).sqrt();
    let y = f0
        .coefs
        .iter()
        .map(|f| {
            let e: f64 = rng.sample(StandardNormal);
            f + e * scale
        })
        .collect();
    GwnObservation {
        n,
        y: CoefSeq {
            coefs: y,
            basis: f0.basis,
        },
    }
}

/// Marginal alpha-posterior law of `psi(f) = sum a_k f_k`.
pub fn functional_marginal(
    obs: &GwnObservation,
    a: &CoefSeq,
    lambda: &CoefSeq,
    alpha: f64,
) -> Result<GaussianLaw> {
    check_alpha(alpha)?;
    if a.len() != obs.y.len() || lambda.len() != obs.y.len() {
        return Err(Error::param(
            "a",
            "representer, prior variances and data must have equal length",
        ));
    }
    let na = obs.n as f64 * alpha;
    let mut mean = 0.0;
    let mut var = 0.0;
    for ((&y, &ak), &lk) in obs.y.coefs.iter().zip(&a.coefs).zip(&lambda.coefs) {
        let denom = 1.0 + na * lk;
        mean += na * lk / denom * ak * y;
        var += lk / denom * ak * ak;
    }
    Ok(GaussianLaw::from_var(mean, var))
}

/// `psi_hat = sum a_k Y_k`.
pub fn efficient_estimator(obs: &GwnObservation, a: &CoefSeq) -> f64 {
    a.coefs.iter().zip(&obs.y.coefs).map(|(a, y)| a * y).sum()
}

/// `sqrt(n) sum_k k^(-1-(beta+mu)) / (1 + n alpha k^(-1-2gamma))` up to `k_max`.
pub fn bias_tn1(spec: &SequenceModelSpec, n: u64, alpha: f64) -> Result<SeriesValue> {
    check_alpha(alpha)?;
    let na = n as f64 * alpha;
    let s = spec.beta + spec.mu;
    let mut value = 0.0;
    // Sum smallest terms first.
    for k in (1..=spec.k_max).rev() {
        let kf = k as f64;
        value += kf.powf(-1.0 - s) / (1.0 + na * spec.prior_var(k));
    }
    let root_n = (n as f64).sqrt();
    Ok(SeriesValue {
        value: root_n * value,
        tail_bound: root_n * (spec.k_max as f64).powf(-s) / s,
    })
}

pub fn quantile_interval(law: &GaussianLaw, level: f64) -> Result<CredibleInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", "must lie in (0, 1)"));
    }
    let delta = 1.0 - level;
    let (low, high) = if law.sd == 0.0 {
        (law.mean, law.mean)
    } else {
        (
            law.mean + norm_quantile(delta / 2.0) * law.sd,
            law.mean + norm_quantile(1.0 - delta / 2.0) * law.sd,
        )
    };
    Ok(CredibleInterval {
        low,
        high,
        level,
        kind: IntervalKind::Quantile,
        center: law.mean,
    })
}

/// Maps each endpoint to `sqrt(alpha) (endpoint - center) + center`.
pub fn shift_rescale(
    interval: &CredibleInterval,
    center_est: f64,
    alpha: f64,
) -> Result<CredibleInterval> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Ok(CredibleInterval {
            kind: IntervalKind::ShiftRescale,
            center: center_est,
            ..*interval
        });
    }
    let r = alpha.sqrt();
    Ok(CredibleInterval {
        low: r * (interval.low - center_est) + center_est,
        high: r * (interval.high - center_est) + center_est,
        level: interval.level,
        kind: IntervalKind::ShiftRescale,
        center: center_est,
    })
}

/// Expected alpha-posterior squared L2 risk in closed form.
pub fn posterior_l2_risk(spec: &SequenceModelSpec, n: u64, alpha: f64) -> Result<SeriesValue> {
    check_alpha(alpha)?;
    let nf = n as f64;
    let na = nf * alpha;
    let mut value = 0.0;
    for k in (1..=spec.k_max).rev() {
        let l = spec.prior_var(k);
        let f = spec.truth_coef(k);
        let d = 1.0 + na * l;
        let w = na * l / d;
        value += l / d + f * f / (d * d) + w * w / nf;
    }
    let kf = spec.k_max as f64;
    let g = spec.gamma;
    let tail = kf.powf(-2.0 * g) / (2.0 * g)
        + kf.powf(-2.0 * spec.beta) / (2.0 * spec.beta)
        + nf * alpha * alpha * kf.powf(-1.0 - 4.0 * g) / (1.0 + 4.0 * g);
    Ok(SeriesValue {
        value,
        tail_bound: tail,
    })
}

/// Three-term driver of the functional risk when the representer may be rough (`mu >= -beta`).
pub fn low_regularity_functional_risk(spec: &SequenceModelSpec, n: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if spec.mu < -spec.beta {
        return Err(Error::param("mu", "must satisfy mu >= -beta"));
    }
    let nf = n as f64;
    let na = nf * alpha;
    let (mut bias, mut noise, mut spread) = (0.0, 0.0, 0.0);
    for k in (1..=spec.k_max).rev() {
        let l = spec.prior_var(k);
        let a = spec.representer_coef(k);
        let d = 1.0 + na * l;
        bias += a * spec.truth_coef(k) / d;
        noise += (na * l * a / d).powi(2);
        spread += l * a * a / d;
    }
    Ok(bias * bias + noise / nf + spread)
}

/// Position of `beta + mu` relative to `1 + 2 gamma`, which decides how fast
/// `alpha_n` may shrink before the centering bias of the functional posterior
/// stops being negligible at the `sqrt(n)` scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeCase {
    /// `beta + mu > 1 + 2 gamma`; threshold `sqrt(n) alpha_n -> infinity`.
    Smooth,
    /// `beta + mu = 1 + 2 gamma`; threshold `sqrt(n) alpha_n / log n -> infinity`.
    Critical,
    /// `1/2 + gamma < beta + mu < 1 + 2 gamma`; threshold `n^(1 - (1+2 gamma)/(2(beta+mu))) alpha_n -> infinity`.
    Rough,
}

impl RegimeCase {
    pub fn classify(beta: f64, mu: f64, gamma: f64) -> Result<RegimeCase> {
        check_positive("beta", beta)?;
        check_positive("mu", mu)?;
        check_positive("gamma", gamma)?;
        let s = beta + mu;
        let edge = 1.0 + 2.0 * gamma;
        if (s - edge).abs() <= 1e-12 * edge {
            Ok(RegimeCase::Critical)
        } else if s > edge {
            Ok(RegimeCase::Smooth)
        } else if s > 0.5 + gamma {
            Ok(RegimeCase::Rough)
        } else {
            Err(Error::param(
                "beta",
                format!("beta + mu = {s} must exceed 1/2 + gamma = {}", 0.5 + gamma),
            ))
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            RegimeCase::Smooth => 1,
            RegimeCase::Critical => 2,
            RegimeCase::Rough => 3,
        }
    }
}

/// Schedules a `log n` factor below (`breach`) and above (`respect`) the regime threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySchedules {
    pub case: RegimeCase,
    pub breach: AlphaSchedule,
    pub respect: AlphaSchedule,
}

pub fn boundary_schedules(beta: f64, mu: f64, gamma: f64) -> Result<BoundarySchedules> {
    let case = RegimeCase::classify(beta, mu, gamma)?;
    let (x, s_breach, s_respect) = match case {
        RegimeCase::Smooth => (0.5, -1.0, 1.0),
        RegimeCase::Critical => (0.5, 0.0, 2.0),
        RegimeCase::Rough => (1.0 - (1.0 + 2.0 * gamma) / (2.0 * (beta + mu)), -1.0, 1.0),
    };
    Ok(BoundarySchedules {
        case,
        breach: AlphaSchedule::PowerLog {
            c: 1.0,
            x,
            s: s_breach,
        },
        respect: AlphaSchedule::PowerLog {
            c: 1.0,
            x,
            s: s_respect,
        },
    })
}
