//! Exponentiated Gaussian-process priors on densities over a fixed midpoint
//! grid, and a preconditioned Crank–Nicolson sampler for the alpha-posterior.
//!
//! A field `w` on the grid `x_i = (i - 1/2)/m` induces the piecewise constant
//! density `f_i = exp(w_i) / (m^-1 sum_j exp(w_j))`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bases::{bin_index, fourier_basis};
use crate::error::{check_positive, Error, Result};
use crate::hist::HistogramDensity;
use crate::numerics::quadrature::{integrate, Quadrature};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `sum_{k <= k_max} k^(-1-2 gamma) phi_k(s) phi_k(t)` in the Fourier basis.
    Series { gamma: f64, k_max: usize },
    /// Spectral density `(1 + lambda^2)^(-gamma - 1/2)`, normalized to unit variance.
    Matern { gamma: f64 },
    /// `exp(-(s - t)^2 / lengthscale^2)`.
    RescaledSe { gamma: f64, lengthscale: f64 },
    /// Riemann–Liouville process released at zero.
    RiemannLiouville { gamma: f64 },
}

impl Kernel {
    /// Squared exponential with `k_n = (n' / log^2 n')^(-1/(1+2 gamma))`.
    pub fn rescaled_se(gamma: f64, n_eff: f64) -> Result<Kernel> {
        Ok(Kernel::RescaledSe {
            gamma,
            lengthscale: se_lengthscale(gamma, n_eff)?,
        })
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            Kernel::Series { gamma, .. }
            | Kernel::Matern { gamma }
            | Kernel::RescaledSe { gamma, .. }
            | Kernel::RiemannLiouville { gamma } => gamma,
        }
    }

    fn validate(&self) -> Result<()> {
        check_positive("gamma", self.gamma())?;
        match *self {
            Kernel::Series { k_max: 0, .. } => Err(Error::param("k_max", "must be at least 1")),
            Kernel::RescaledSe { lengthscale, .. } => check_positive("lengthscale", lengthscale),
            _ => Ok(()),
        }
    }

    /// Covariance `E[W(s) W(t)]`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        match *self {
            Kernel::Series { gamma, k_max } => Ok((1..=k_max)
                .map(|k| {
                    (k as f64).powf(-1.0 - 2.0 * gamma) * fourier_basis(k, s) * fourier_basis(k, t)
                })
                .sum()),
            Kernel::Matern { gamma } => matern(gamma, (s - t).abs()),
            Kernel::RescaledSe { lengthscale, .. } => Ok((-((s - t) / lengthscale).powi(2)).exp()),
            Kernel::RiemannLiouville { gamma } => riemann_liouville(gamma, s, t),
        }
    }
}

pub fn se_lengthscale(gamma: f64, n_eff: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    if !(n_eff > std::f64::consts::E) {
        return Err(Error::param("n_eff", "effective sample size must exceed e"));
    }
    Ok((n_eff / n_eff.ln().powi(2)).powf(-1.0 / (1.0 + 2.0 * gamma)))
}

/// Matérn covariance at lag `h` from its spectral representation
/// `int cos(lambda h) (1 + lambda^2)^(-gamma - 1/2) d lambda`, divided by its value at zero.
pub fn matern(gamma: f64, h: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    let h = h.abs();
    if h == 0.0 {
        return Ok(1.0);
    }
    let p = gamma + 0.5;
    let total = matern_spectral_mass(gamma);
    let g = |l: f64| (1.0 + l * l).powf(-p) * (l * h).cos();
    let opts = Quadrature::with_rel_tol(1e-12);
    // Integrate over half periods; the tail is an alternating series with
    // decreasing terms, summed with repeated averaging of partial sums.
    let half = PI / h;
    let mut partial = Vec::new();
    let mut acc = 0.0;
    let mut j = 0usize;
    loop {
        let a = j as f64 * half;
        let piece = integrate(g, a, a + half, opts)?.value;
        acc += piece;
        partial.push(acc);
        j += 1;
        let envelope = (1.0 + (j as f64 * half).powi(2)).powf(-p) * half;
        if (j >= 8 && envelope < 1e-13) || j >= 4000 {
            break;
        }
    }
    let mut level: Vec<f64> = partial[partial.len().saturating_sub(24)..].to_vec();
    while level.len() > 1 {
        level = level.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    Ok(2.0 * level[0] / total)
}

/// `sum_{k=0}^{floor(gamma)+1} s^k t^k + int_0^{s^t} (s-u)^(gamma-1/2) (t-u)^(gamma-1/2) du`.
pub fn riemann_liouville(gamma: f64, s: f64, t: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    if s < 0.0 || t < 0.0 {
        return Err(Error::param(
            "s",
            "Riemann–Liouville covariance is defined on [0, inf)",
        ));
    }
    let poly: f64 = (0..=(gamma.floor() as i32 + 1))
        .map(|k| (s * t).powi(k))
        .sum();
    let c = s.min(t);
    let d = (s - t).abs();
    let p = gamma - 0.5;
    let integral = if c == 0.0 {
        0.0
    } else if d == 0.0 {
        c.powf(2.0 * p + 1.0) / (2.0 * p + 1.0)
    } else if p >= 0.0 {
        integrate(
            |v| (v * (v + d)).powf(p),
            0.0,
            c,
            Quadrature::with_rel_tol(1e-10),
        )?
        .value
    } else {
        // v = w^(1/(p+1)) absorbs the v^p singularity.
        let q = 1.0 / (p + 1.0);
        q * integrate(
            |w| (w.powf(q) + d).powf(p),
            0.0,
            c.powf(p + 1.0),
            Quadrature::with_rel_tol(1e-10),
        )?
        .value
    };
    Ok(poly + integral)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factorization {
    /// Cholesky with escalating diagonal jitter.
    Cholesky,
    /// Eigendecomposition keeping eigenvalues above `1e-10` of the largest.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpPriorSpec {
    pub kernel: Kernel,
    pub grid_size: usize,
    pub jitter: f64,
    pub factorization: Factorization,
}

impl GpPriorSpec {
    pub fn new(kernel: Kernel, grid_size: usize) -> Self {
        GpPriorSpec {
            kernel,
            grid_size,
            jitter: 1e-10,
            factorization: Factorization::Spectral,
        }
    }
}

pub fn grid_points(m: usize) -> Vec<f64> {
    (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect()
}

/// Prior covariance on the grid with a factor `L` (`m x r`, `L L^T ~ K`).
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub cov: DMatrix<f64>,
    pub factor: DMatrix<f64>,
    /// Diagonal jitter actually added (Cholesky only).
    pub jitter_used: f64,
}

impl KernelMatrix {
    pub fn grid_size(&self) -> usize {
        self.cov.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Prior draw `L z`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GridField {
        let z = DVector::from_fn(self.rank(), |_, _| rng.sample::<f64, _>(StandardNormal));
        GridField {
            values: (&self.factor * z).as_slice().to_vec(),
        }
    }
}

pub fn build_kernel_matrix(spec: &GpPriorSpec) -> Result<KernelMatrix> {
    spec.kernel.validate()?;
    let m = spec.grid_size;
    if m < 2 {
        return Err(Error::param("grid_size", "must be at least 2"));
    }
    let xs = grid_points(m);
    let cov = match spec.kernel {
        Kernel::Series { gamma, k_max } => {
            let phi = DMatrix::from_fn(m, k_max, |i, k| {
                fourier_basis(k + 1, xs[i]) * ((k + 1) as f64).powf(-0.5 - gamma)
            });
            &phi * phi.transpose()
        }
        Kernel::Matern { gamma } => {
            // Stationary: one evaluation per lag.
            let lags = (0..m)
                .map(|d| matern(gamma, d as f64 / m as f64))
                .collect::<Result<Vec<_>>>()?;
            DMatrix::from_fn(m, m, |i, j| lags[i.abs_diff(j)])
        }
        kernel => {
            let mut cov = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..=i {
                    let v = kernel.eval(xs[i], xs[j])?;
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
            }
            cov
        }
    };
    let (factor, jitter_used) = match spec.factorization {
        Factorization::Cholesky => cholesky_with_jitter(&cov, spec.jitter)?,
        Factorization::Spectral => (spectral_factor(&cov)?, 0.0),
    };
    Ok(KernelMatrix {
        cov,
        factor,
        jitter_used,
    })
}

fn cholesky_with_jitter(cov: &DMatrix<f64>, start: f64) -> Result<(DMatrix<f64>, f64)> {
    let scale = cov.diagonal().mean().max(f64::MIN_POSITIVE);
    let mut jitter = start.max(0.0) * scale;
    for _ in 0..12 {
        let mut c = cov.clone();
        for i in 0..c.nrows() {
            c[(i, i)] += jitter;
        }
        if let Some(ch) = c.cholesky() {
            return Ok((ch.l(), jitter));
        }
        jitter = if jitter == 0.0 {
            1e-12 * scale
        } else {
            jitter * 10.0
        };
    }
    Err(Error::numeric(
        "kernel factorization",
        format!("not positive definite after jitter {jitter:e}"),
    ))
}

fn spectral_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(cov.clone());
    let top = eig.eigenvalues.max();
    if !(top > 0.0) {
        return Err(Error::numeric(
            "kernel factorization",
            "covariance has no positive eigenvalue",
        ));
    }
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-10 * top)
        .collect();
    let m = cov.nrows();
    Ok(DMatrix::from_fn(m, keep.len(), |i, c| {
        let k = keep[c];
        eig.eigenvectors[(i, k)] * eig.eigenvalues[k].sqrt()
    }))
}

/// Field values at the grid midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(m: usize) -> Self {
        GridField {
            values: vec![0.0; m],
        }
    }
}

/// `f_i ∝ exp(w_i)` with max-subtraction.
pub fn exponentiate_to_density(w: &GridField) -> HistogramDensity {
    let top = w.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = w.values.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = e.iter().sum();
    HistogramDensity {
        omega: e.into_iter().map(|v| v / total).collect(),
    }
}

/// Observations binned to the grid cells; the likelihood of a piecewise constant
/// density depends on the data only through these counts.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub counts: Vec<f64>,
    pub n: f64,
}

impl GridData {
    pub fn from_samples(samples: &[f64], m: usize) -> Self {
        let mut counts = vec![0.0; m];
        for &y in samples {
            counts[bin_index(y, m)] += 1.0;
        }
        GridData {
            counts,
            n: samples.len() as f64,
        }
    }
}

/// `sum_i log f_w(Y_i)`.
pub fn log_likelihood(w: &GridField, data: &GridData) -> f64 {
    let m = w.values.len() as f64;
    let top = w.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + w.values.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
    let dot: f64 = w.values.iter().zip(&data.counts).map(|(w, c)| w * c).sum();
    dot - data.n * (lse - m.ln())
}

#[derive(Debug, Clone)]
pub struct PcnState {
    pub current: GridField,
    pub beta_pcn: f64,
    /// Tempering exponent; zero turns the likelihood off and the chain samples the prior.
    pub alpha: f64,
    pub log_lik: f64,
    pub proposals: u64,
    pub accepted: u64,
}

impl PcnState {
    pub fn new(start: GridField, data: &GridData, alpha: f64, beta_pcn: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&beta_pcn) {
            return Err(Error::param("beta_pcn", "must lie in [0, 1]"));
        }
        let log_lik = log_likelihood(&start, data);
        Ok(PcnState {
            current: start,
            beta_pcn,
            alpha,
            log_lik,
            proposals: 0,
            accepted: 0,
        })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Outcome of one pCN transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub accepted: bool,
    pub accept_prob: f64,
}

/// One pCN transition: `w' = sqrt(1 - b^2) w + b xi`, accepted with
/// probability `min(1, exp(alpha (l(w') - l(w))))`.
pub fn pcn_step<R: Rng + ?Sized>(
    state: &mut PcnState,
    data: &GridData,
    prior: &KernelMatrix,
    rng: &mut R,
) -> StepInfo {
    let b = state.beta_pcn;
    let xi = prior.draw(rng);
    let keep = (1.0 - b * b).sqrt();
    let proposal = GridField {
        values: state
            .current
            .values
            .iter()
            .zip(&xi.values)
            .map(|(w, x)| keep * w + b * x)
            .collect(),
    };
    let ll = log_likelihood(&proposal, data);
    let log_ratio = state.alpha * (ll - state.log_lik);
    let accept_prob = if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    };
    let u: f64 = rng.random();
    state.proposals += 1;
    let accepted = u < accept_prob;
    if accepted {
        state.current = proposal;
        state.log_lik = ll;
        state.accepted += 1;
    }
    StepInfo {
        accepted,
        accept_prob,
    }
}

pub const TARGET_ACCEPTANCE: f64 = 0.30;
pub const MIN_STEP: f64 = 1e-4;

/// Robbins–Monro update of the step on the log scale toward the target acceptance.
pub fn adapt_step_size(beta_pcn: f64, accept_prob: f64, iteration: u64) -> f64 {
    let gain = 1.0 / ((iteration + 1) as f64).powf(0.6);
    let next = (beta_pcn.ln() + gain * (accept_prob - TARGET_ACCEPTANCE)).exp();
    next.clamp(MIN_STEP, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcnConfig {
    pub steps: usize,
    pub burn_in_frac: f64,
    pub max_retained: usize,
    pub initial_step: f64,
}

impl Default for PcnConfig {
    fn default() -> Self {
        PcnConfig {
            steps: 100_000,
            burn_in_frac: 0.2,
            max_retained: 5000,
            initial_step: 0.1,
        }
    }
}

/// Row of an exported chain trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub psi_value: f64,
    pub acceptance_flag: bool,
}

#[derive(Debug, Clone)]
pub struct PcnRun {
    /// Thinned post-burn-in states.
    pub retained: Vec<GridField>,
    /// Step index of each retained state.
    pub retained_steps: Vec<usize>,
    pub accepted_flags: Vec<bool>,
    pub post_burn_acceptance: f64,
    pub final_step: f64,
}

/// Adapts the step during burn-in, then freezes it and keeps every `thin`-th state.
pub fn run_pcn<R: Rng + ?Sized>(
    start: GridField,
    data: &GridData,
    prior: &KernelMatrix,
    alpha: f64,
    cfg: &PcnConfig,
    rng: &mut R,
) -> Result<PcnRun> {
    if cfg.steps == 0 || cfg.max_retained == 0 {
        return Err(Error::param(
            "steps",
            "chain length and retained count must be positive",
        ));
    }
    if !(0.0..1.0).contains(&cfg.burn_in_frac) {
        return Err(Error::param("burn_in_frac", "must lie in [0, 1)"));
    }
    let mut state = PcnState::new(start, data, alpha, cfg.initial_step)?;
    let burn = (cfg.steps as f64 * cfg.burn_in_frac).round() as usize;
    let collect = cfg.steps - burn;
    let thin = collect.div_ceil(cfg.max_retained).max(1);
    let mut run = PcnRun {
        retained: Vec::with_capacity(collect / thin + 1),
        retained_steps: Vec::new(),
        accepted_flags: Vec::with_capacity(cfg.steps),
        post_burn_acceptance: 0.0,
        final_step: 0.0,
    };
    let mut post_accepts = 0usize;
    for step in 0..cfg.steps {
        let info = pcn_step(&mut state, data, prior, rng);
        run.accepted_flags.push(info.accepted);
        if step < burn {
            state.beta_pcn = adapt_step_size(state.beta_pcn, info.accept_prob, step as u64);
        } else {
            post_accepts += usize::from(info.accepted);
            if (step - burn + 1).is_multiple_of(thin) {
                run.retained.push(state.current.clone());
                run.retained_steps.push(step);
            }
        }
    }
    run.post_burn_acceptance = post_accepts as f64 / collect.max(1) as f64;
    run.final_step = state.beta_pcn;
    Ok(run)
}

/// `psi(f_w)` as the grid Riemann sum `m^-1 sum_i a(x_i) f_i`.
pub fn functional_trace<A: Fn(f64) -> f64>(chain: &[GridField], a: A) -> Vec<f64> {
    let Some(first) = chain.first() else {
        return Vec::new();
    };
    let weights: Vec<f64> = grid_points(first.values.len()).into_iter().map(a).collect();
    functional_trace_with_means(chain, &weights)
}

/// `psi(f_w) = sum_i omega_i abar_i` with per-cell representer values `abar`.
pub fn functional_trace_with_means(chain: &[GridField], cell_values: &[f64]) -> Vec<f64> {
    chain
        .iter()
        .map(|w| exponentiate_to_density(w).functional(cell_values))
        .collect()
}

/// Exact cell averages `m int_{cell} a` of a Fourier series on `m` equal cells.
pub fn fourier_cell_means(coefs: &[f64], m: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    (0..m)
        .map(|i| {
            let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
            let mut v = coefs.first().copied().unwrap_or(0.0);
            for (idx, c) in coefs.iter().enumerate().skip(1) {
                let k = idx + 1;
                let w = 2.0 * PI * (k / 2) as f64;
                let integral = if k % 2 == 0 {
                    ((w * hi).sin() - (w * lo).sin()) / w
                } else {
                    ((w * lo).cos() - (w * hi).cos()) / w
                };
                v += c * std::f64::consts::SQRT_2 * integral / h;
            }
            v
        })
        .collect()
}

/// Matérn spectral normalization `sqrt(pi) Gamma(gamma) / Gamma(gamma + 1/2)`.
pub fn matern_spectral_mass(gamma: f64) -> f64 {
    PI.sqrt() * (ln_gamma(gamma) - ln_gamma(gamma + 0.5)).exp()
}
