//! Random histogram priors on densities over [0, 1] with exact fractional
//! Dirichlet conjugacy, projected estimators and the bias construction in
//! which the full posterior fails to be centred efficiently.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::bases::{
    bin_edges, bin_index, haar_representer, l2_project_histogram, CoefSeq, PiecewiseConstantFn,
};
use crate::divergences::kl_and_v_histogram;
use crate::error::{check_alpha, Error, Result};
use crate::numerics::quadrature::{integrate_pieces, Quadrature};

/// Dirichlet hyperparameters `delta_1..delta_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    pub delta: Vec<f64>,
}

impl DirichletParams {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        if delta.is_empty() {
            return Err(Error::param("delta", "at least one bin is required"));
        }
        if let Some(j) = delta.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::param(
                "delta",
                format!("entry {} is not a positive finite number", j + 1),
            ));
        }
        Ok(DirichletParams { delta })
    }

    pub fn symmetric(k: usize, value: f64) -> Result<Self> {
        DirichletParams::new(vec![value; k])
    }

    pub fn k(&self) -> usize {
        self.delta.len()
    }

    pub fn total(&self) -> f64 {
        self.delta.iter().sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let t = self.total();
        self.delta.iter().map(|d| d / t).collect()
    }

    /// Finite-n reading of the weight-sum condition: `sum delta <= slack * sqrt(n alpha)`.
    pub fn weight_sum_ok(&self, n: u64, alpha: f64, slack: f64) -> bool {
        self.total() <= slack * (n as f64 * alpha).sqrt()
    }
}

/// Histogram density with simplex weights; the density on bin j is `k * omega_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDensity {
    pub omega: Vec<f64>,
}

impl HistogramDensity {
    /// Normalizes nonnegative weights onto the simplex.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param(
                "omega",
                "weights must be finite and nonnegative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("omega", "weights sum to zero"));
        }
        Ok(HistogramDensity {
            omega: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(k: usize) -> Self {
        HistogramDensity {
            omega: vec![1.0 / k as f64; k],
        }
    }

    pub fn k(&self) -> usize {
        self.omega.len()
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.k() as f64 * self.omega[bin_index(x, self.k())]
    }

    pub fn to_fn(&self) -> PiecewiseConstantFn {
        let k = self.k() as f64;
        PiecewiseConstantFn::new(self.omega.iter().map(|w| k * w).collect())
    }

    /// `int a f = sum_j omega_j abar_j` given bin averages of `a`.
    pub fn functional(&self, bin_means: &[f64]) -> f64 {
        self.omega.iter().zip(bin_means).map(|(w, a)| w * a).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCounts {
    pub counts: Vec<u64>,
}

impl BinCounts {
    pub fn from_samples(samples: &[f64], k: usize) -> Self {
        let mut counts = vec![0u64; k];
        for &y in samples {
            counts[bin_index(y, k)] += 1;
        }
        BinCounts { counts }
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

/// True densities that can be sampled exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum TruthDensity {
    /// `f0(x) = x + 1/2`.
    Linear,
    /// Piecewise constant density on a fine equal-width grid (sampled by inverse CDF).
    Tabulated {
        density: PiecewiseConstantFn,
        cdf: Vec<f64>,
    },
}

impl TruthDensity {
    /// Tabulates a density by its bin averages on `bins` cells; errors unless it integrates to one.
    pub fn tabulate<F: Fn(f64) -> f64>(f: F, bins: usize) -> Result<Self> {
        let h = l2_project_histogram(f, bins)?;
        TruthDensity::from_histogram(h)
    }

    pub fn from_histogram(density: PiecewiseConstantFn) -> Result<Self> {
        let k = density.bins() as f64;
        if density.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Model(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(density.bins() + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for v in &density.values {
            acc += v / k;
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > 1e-8 {
            return Err(Error::Model(format!("truth integrates to {acc}, not 1")));
        }
        Ok(TruthDensity::Tabulated { density, cdf })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            TruthDensity::Linear => {
                if (0.0..=1.0).contains(&x) {
                    x + 0.5
                } else {
                    0.0
                }
            }
            TruthDensity::Tabulated { density, .. } => density.eval(x),
        }
    }

    /// Breakpoints at which the density may be non-smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TruthDensity::Linear => vec![0.0, 1.0],
            TruthDensity::Tabulated { density, .. } => density.edges(),
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            // F(x) = x^2/2 + x/2.
            TruthDensity::Linear => 0.5 * ((1.0 + 8.0 * u).sqrt() - 1.0),
            TruthDensity::Tabulated { density, cdf } => {
                let k = density.bins();
                let j = cdf.partition_point(|&c| c <= u).clamp(1, k) - 1;
                let mass = cdf[j + 1] - cdf[j];
                let frac = if mass > 0.0 {
                    ((u - cdf[j]) / mass).clamp(0.0, 1.0)
                } else {
                    0.5
                };
                (j as f64 + frac) / k as f64
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| self.inverse_cdf(rng.random::<f64>()))
            .collect()
    }

    /// Probability of each of `k` equal bins.
    pub fn bin_probs(&self, k: usize) -> Vec<f64> {
        match self {
            TruthDensity::Linear => bin_edges(k)
                .windows(2)
                .map(|w| {
                    let cdf = |x: f64| 0.5 * x * x + 0.5 * x;
                    cdf(w[1]) - cdf(w[0])
                })
                .collect(),
            TruthDensity::Tabulated { cdf, density } => {
                let fine = density.bins();
                if fine % k == 0 {
                    let r = fine / k;
                    (0..k).map(|j| cdf[(j + 1) * r] - cdf[j * r]).collect()
                } else {
                    let u = |x: f64| {
                        let pos = x * fine as f64;
                        let j = (pos.floor() as usize).min(fine - 1);
                        cdf[j] + (pos - j as f64) * (cdf[j + 1] - cdf[j])
                    };
                    bin_edges(k).windows(2).map(|w| u(w[1]) - u(w[0])).collect()
                }
            }
        }
    }
}

pub fn sample_truth_counts<R: Rng + ?Sized>(
    f0: &TruthDensity,
    n: usize,
    k: usize,
    rng: &mut R,
) -> BinCounts {
    BinCounts::from_samples(&f0.sample(n, rng), k)
}

/// Multinomial bin counts drawn directly by sequential binomial splitting;
/// equal in law to binning `n` samples with bin probabilities `probs`.
pub fn sample_multinomial_counts<R: Rng + ?Sized>(probs: &[f64], n: u64, rng: &mut R) -> BinCounts {
    let mut counts = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (c, &p) in counts.iter_mut().zip(probs) {
        if left == 0 {
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let draw = Binomial::new(left, q)
            .expect("probability in [0, 1]")
            .sample(rng);
        *c = draw;
        left -= draw;
        mass -= p;
    }
    if let Some(last) = counts.last_mut() {
        *last += left;
    }
    BinCounts { counts }
}

/// Exact alpha-posterior: `Dirichlet(delta + alpha N)`.
pub fn fractional_dirichlet_update(
    prior: &DirichletParams,
    counts: &BinCounts,
    alpha: f64,
) -> Result<DirichletParams> {
    check_alpha(alpha)?;
    if prior.k() != counts.k() {
        return Err(Error::param("counts", "bin count differs from the prior"));
    }
    Ok(DirichletParams {
        delta: prior
            .delta
            .iter()
            .zip(&counts.counts)
            .map(|(d, &c)| d + alpha * c as f64)
            .collect(),
    })
}

/// One Dirichlet draw via normalized Gamma variables.
pub fn draw_dirichlet<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = params
        .delta
        .iter()
        .map(|&d| Gamma::new(d, 1.0).expect("validated shape").sample(rng))
        .collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        // Every shape tiny enough to underflow: put the mass on the largest shape.
        let j = (0..w.len())
            .max_by(|&a, &b| params.delta[a].total_cmp(&params.delta[b]))
            .unwrap_or(0);
        w[j] = 1.0;
    }
    w
}

pub fn draw_posterior_histograms<R: Rng + ?Sized>(
    post: &DirichletParams,
    m: usize,
    rng: &mut R,
) -> Vec<HistogramDensity> {
    (0..m)
        .map(|_| HistogramDensity {
            omega: draw_dirichlet(post, rng),
        })
        .collect()
}

/// Draws of `psi(f) = sum_j omega_j abar_j` under a Dirichlet law.
pub fn draw_functional<R: Rng + ?Sized>(
    post: &DirichletParams,
    bin_means: &[f64],
    m: usize,
    rng: &mut R,
) -> Vec<f64> {
    (0..m)
        .map(|_| {
            draw_dirichlet(post, rng)
                .iter()
                .zip(bin_means)
                .map(|(w, a)| w * a)
                .sum()
        })
        .collect()
}

/// Exact mean and variance of `sum_j omega_j abar_j` under a Dirichlet law.
pub fn functional_moments(post: &DirichletParams, bin_means: &[f64]) -> (f64, f64) {
    let p = post.mean();
    let m: f64 = p.iter().zip(bin_means).map(|(p, a)| p * a).sum();
    let second: f64 = p.iter().zip(bin_means).map(|(p, a)| p * a * a).sum();
    (m, (second - m * m) / (post.total() + 1.0))
}

/// Quantities of a linear functional `psi(f) = int a f` at the truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalAtTruth {
    /// `psi(f0)`.
    pub psi0: f64,
    /// Efficient variance `int f0 (a - psi0)^2`.
    pub v0: f64,
}

pub fn functional_at_truth<F: Fn(f64) -> f64>(
    a: &F,
    f0: &TruthDensity,
    extra_breaks: &[f64],
) -> Result<FunctionalAtTruth> {
    let opts = Quadrature::with_rel_tol(1e-10);
    let mut pts = f0.breakpoints();
    pts.extend_from_slice(extra_breaks);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let psi0 = integrate_pieces(|x| a(x) * f0.pdf(x), &pts, opts)?.value;
    let v0 = integrate_pieces(|x| (a(x) - psi0).powi(2) * f0.pdf(x), &pts, opts)?.value;
    Ok(FunctionalAtTruth { psi0, v0 })
}

/// Bin averages `k int_{I_j} a` of the representer.
pub fn bin_means<F: Fn(f64) -> f64>(a: F, k: usize) -> Result<Vec<f64>> {
    Ok(l2_project_histogram(a, k)?.values)
}

/// `psi_hat_[K] = psi(f0) + n^-1 sum_i psi_tilde_[K](Y_i)`, where `psi_tilde = a - psi(f0)`.
pub fn projected_estimator(bin_means: &[f64], psi0: f64, samples: &[f64]) -> f64 {
    let k = bin_means.len();
    let centred: f64 = samples
        .iter()
        .map(|&y| bin_means[bin_index(y, k)] - psi0)
        .sum();
    psi0 + centred / samples.len() as f64
}

/// `psi_hat = psi(f0) + n^-1 sum_i (a(Y_i) - psi(f0))`.
pub fn efficient_estimator<F: Fn(f64) -> f64>(a: F, psi0: f64, samples: &[f64]) -> f64 {
    let centred: f64 = samples.iter().map(|&y| a(y) - psi0).sum();
    psi0 + centred / samples.len() as f64
}

/// `F0(psi_tilde_[K]) = int (f0_[K] - f0)(a_[K] - a)` by quadrature.
pub fn projected_bias<A, F>(a: A, f0: F, k: usize) -> Result<f64>
where
    A: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
{
    let a_k = l2_project_histogram(&a, k)?;
    let f_k = l2_project_histogram(&f0, k)?;
    let r = integrate_pieces(
        |x| (f_k.eval(x) - f0(x)) * (a_k.eval(x) - a(x)),
        &bin_edges(k),
        Quadrature::with_rel_tol(1e-10),
    )?;
    Ok(r.value)
}

/// Same bias for Haar series: with `K = 2^p`, the projection keeps the first `K`
/// flat coefficients, so the bias is `sum_{i >= K} a_i f0_i`.
pub fn projected_bias_haar(a: &CoefSeq, f0: &CoefSeq, k: usize) -> Result<f64> {
    if !k.is_power_of_two() {
        return Err(Error::param(
            "k",
            "must be a power of two for Haar projections",
        ));
    }
    Ok(a.coefs
        .iter()
        .zip(&f0.coefs)
        .skip(k)
        .map(|(x, y)| x * y)
        .sum())
}

/// Haar coefficients of `f0(x) = x + 1/2` up to `max_level`:
/// scaling coefficient 1 and `<x, psi_lk> = -2^(-3l/2) / 4`.
pub fn linear_truth_haar(max_level: u32) -> CoefSeq {
    let len = 1usize << (max_level + 1);
    let mut coefs = vec![0.0; len];
    coefs[0] = 1.0;
    for level in 0..=max_level {
        let start = 1usize << level;
        coefs[start..2 * start].fill(-2f64.powf(-1.5 * level as f64) / 4.0);
    }
    CoefSeq {
        coefs,
        basis: crate::bases::BasisKind::Haar { max_level },
    }
}

/// Detail levels kept beyond the histogram resolution when truncating the representer.
pub const COUNTEREXAMPLE_EXTRA_LEVELS: u32 = 14;

#[derive(Debug, Clone)]
pub struct CounterexampleSetup {
    pub k: usize,
    pub prior: DirichletParams,
    /// Haar representer truncated `COUNTEREXAMPLE_EXTRA_LEVELS` levels past `log2 K`.
    pub a: CoefSeq,
    pub f0: TruthDensity,
}

impl CounterexampleSetup {
    /// Bin averages of the representer at the histogram resolution.
    pub fn bin_means(&self) -> Vec<f64> {
        let coarse = CoefSeq {
            coefs: self.a.coefs[..self.k].to_vec(),
            basis: self.a.basis,
        };
        (0..self.k)
            .map(|j| coarse.eval((j as f64 + 0.5) / self.k as f64))
            .collect()
    }

    pub fn psi0(&self) -> f64 {
        let f0 = linear_truth_haar(self.max_level());
        self.a.coefs.iter().zip(&f0.coefs).map(|(x, y)| x * y).sum()
    }

    pub fn bias(&self) -> f64 {
        let f0 = linear_truth_haar(self.max_level());
        projected_bias_haar(&self.a, &f0, self.k).expect("k is a power of two")
    }

    fn max_level(&self) -> u32 {
        match self.a.basis {
            crate::bases::BasisKind::Haar { max_level } => max_level,
            crate::bases::BasisKind::Fourier => unreachable!("counterexample representer is Haar"),
        }
    }
}

/// `K = 2^floor(log2 n^(1/3))`.
pub fn counterexample_bins(n: u64) -> usize {
    let cube = (n as f64).cbrt();
    // Guard against n^(1/3) landing just below an exact power of two.
    let p = (cube * (1.0 + 1e-12)).log2().floor().max(0.0) as u32;
    1usize << p
}

pub fn counterexample_setup(n: u64, gamma: f64, b: f64) -> Result<CounterexampleSetup> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(Error::param("gamma", "must lie in (0, 1/2]"));
    }
    if !(b > 1.0 / 6.0) {
        return Err(Error::param("b", "must exceed 1/6"));
    }
    let k = counterexample_bins(n);
    let p = k.trailing_zeros();
    Ok(CounterexampleSetup {
        k,
        prior: DirichletParams::symmetric(k, (n as f64).powf(-b))?,
        a: haar_representer(gamma, p + COUNTEREXAMPLE_EXTRA_LEVELS)?,
        f0: TruthDensity::Linear,
    })
}

/// True iff `K(f0, f) <= n eps^2` and `V(f0, f) <= n eps^2`.
pub fn kl_neighborhood_check(
    f0: &HistogramDensity,
    f: &HistogramDensity,
    n: u64,
    eps: f64,
) -> Result<bool> {
    let kv = kl_and_v_histogram(f0, f)?;
    let r = n as f64 * eps * eps;
    Ok(kv.kl <= r && kv.v <= r)
}
