//! Orthonormal bases on [0, 1], power-law coefficient sequences, linear
//! functionals and histogram projections.
//!
//! Fourier indexing starts at k = 1: `phi_1 = 1`, `phi_{2j} = sqrt(2) cos(2 pi j x)`,
//! `phi_{2j+1} = sqrt(2) sin(2 pi j x)`.
//!
//! Haar sequences are stored flat: index 0 holds the scaling coefficient
//! (level -1), and level `l >= 0`, shift `k` lives at index `2^l + k`, so a
//! sequence up to level `L` has length `2^(L+1)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::numerics::quadrature::{integrate, integrate_pieces, Quadrature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    Fourier,
    Haar { max_level: u32 },
}

/// k-th Fourier basis function, k >= 1.
pub fn fourier_basis(k: usize, x: f64) -> f64 {
    debug_assert!(k >= 1);
    if k == 1 {
        return 1.0;
    }
    let j = (k / 2) as f64;
    if k.is_multiple_of(2) {
        SQRT_2 * (2.0 * PI * j * x).cos()
    } else {
        SQRT_2 * (2.0 * PI * j * x).sin()
    }
}

/// Haar mother wavelet `psi_{lk}`; `x = 1` is folded into the last cell.
pub fn haar_wavelet(level: u32, shift: usize, x: f64) -> f64 {
    let scale = (1u64 << level) as f64;
    let t = x * scale - shift as f64;
    let in_last = x == 1.0 && shift + 1 == 1usize << level;
    if !(0.0..1.0).contains(&t) && !in_last {
        return 0.0;
    }
    let amp = scale.sqrt();
    if t < 0.5 {
        amp
    } else {
        -amp
    }
}

/// Finite coefficient sequence in a given basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefSeq {
    pub coefs: Vec<f64>,
    pub basis: BasisKind,
}

impl CoefSeq {
    pub fn fourier(coefs: Vec<f64>) -> Self {
        CoefSeq {
            coefs,
            basis: BasisKind::Fourier,
        }
    }

    pub fn len(&self) -> usize {
        self.coefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.is_empty()
    }

    /// Squared L2 norm by Parseval.
    pub fn norm2_sq(&self) -> f64 {
        self.coefs.iter().map(|c| c * c).sum()
    }

    /// Evaluates `sum_k c_k phi_k(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.basis {
            BasisKind::Fourier => eval_fourier(&self.coefs, x),
            BasisKind::Haar { .. } => eval_haar(&self.coefs, x),
        }
    }

    /// Evaluates the series on many points at once.
    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }
}

/// Fourier series by rotating the unit phasor, O(K) per point.
fn eval_fourier(coefs: &[f64], x: f64) -> f64 {
    let mut total = coefs.first().copied().unwrap_or(0.0);
    let (s1, c1) = (2.0 * PI * x).sin_cos();
    let (mut s, mut c) = (0.0_f64, 1.0_f64);
    let mut k = 2;
    while k <= coefs.len() {
        // Re-anchor every 64 steps to stop rounding drift.
        let j = k / 2;
        if j % 64 == 0 {
            let (sj, cj) = (2.0 * PI * j as f64 * x).sin_cos();
            s = sj;
            c = cj;
        } else {
            let ns = s * c1 + c * s1;
            let nc = c * c1 - s * s1;
            s = ns;
            c = nc;
        }
        total += SQRT_2 * coefs[k - 1] * c;
        if k < coefs.len() {
            total += SQRT_2 * coefs[k] * s;
        }
        k += 2;
    }
    total
}

fn eval_haar(coefs: &[f64], x: f64) -> f64 {
    if coefs.is_empty() || !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    let mut total = coefs[0];
    let mut level = 0u32;
    while (1usize << (level + 1)) <= coefs.len() {
        let cells = 1usize << level;
        let shift = ((x * cells as f64) as usize).min(cells - 1);
        total += coefs[cells + shift] * haar_wavelet(level, shift, x);
        level += 1;
    }
    total
}

/// Smoothness triple generating truth, representer and prior variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceModelSpec {
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub k_max: usize,
}

impl SequenceModelSpec {
    pub const DEFAULT_K_MAX: usize = 10_000;

    pub fn new(beta: f64, mu: f64, gamma: f64) -> Self {
        SequenceModelSpec {
            beta,
            mu,
            gamma,
            k_max: Self::DEFAULT_K_MAX,
        }
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    /// `f0_k = k^(-1/2 - beta)`.
    pub fn truth_coef(&self, k: usize) -> f64 {
        (k as f64).powf(-0.5 - self.beta)
    }

    /// `a_k = k^(-1/2 - mu)`.
    pub fn representer_coef(&self, k: usize) -> f64 {
        (k as f64).powf(-0.5 - self.mu)
    }

    /// `lambda_k = k^(-1 - 2 gamma)`.
    pub fn prior_var(&self, k: usize) -> f64 {
        (k as f64).powf(-1.0 - 2.0 * self.gamma)
    }
}

/// The three power-law sequences of the sequence model.
#[derive(Debug, Clone)]
pub struct ModelSequences {
    pub f0: CoefSeq,
    pub a: CoefSeq,
    pub lambda: CoefSeq,
}

pub fn build_model_sequences(spec: &SequenceModelSpec) -> Result<ModelSequences> {
    check_positive("beta", spec.beta)?;
    check_positive("mu", spec.mu)?;
    check_positive("gamma", spec.gamma)?;
    if spec.k_max == 0 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    let ks = 1..=spec.k_max;
    Ok(ModelSequences {
        f0: CoefSeq::fourier(ks.clone().map(|k| spec.truth_coef(k)).collect()),
        a: CoefSeq::fourier(ks.clone().map(|k| spec.representer_coef(k)).collect()),
        lambda: CoefSeq::fourier(ks.map(|k| spec.prior_var(k)).collect()),
    })
}

/// Piecewise-constant function on k equal bins `[(j-1)/k, j/k)`, last bin closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantFn {
    pub values: Vec<f64>,
}

impl PiecewiseConstantFn {
    pub fn new(values: Vec<f64>) -> Self {
        PiecewiseConstantFn { values }
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn bin_of(&self, x: f64) -> usize {
        bin_index(x, self.values.len())
    }

    /// Value at `x`; zero outside [0, 1].
    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.values[self.bin_of(x)]
    }

    /// Bin edges `0, 1/k, ..., 1`.
    pub fn edges(&self) -> Vec<f64> {
        bin_edges(self.values.len())
    }
}

/// Index of the equal-width bin containing `x in [0, 1]`, with `x = 1` in the last bin.
pub fn bin_index(x: f64, k: usize) -> usize {
    ((x * k as f64).floor().max(0.0) as usize).min(k - 1)
}

pub fn bin_edges(k: usize) -> Vec<f64> {
    (0..=k).map(|j| j as f64 / k as f64).collect()
}

/// L2 projection onto histograms with k bins: `v_j = k * int_{I_j} f`.
pub fn l2_project_histogram<F: Fn(f64) -> f64>(f: F, k: usize) -> Result<PiecewiseConstantFn> {
    if k == 0 {
        return Err(Error::param("k", "bin count must be at least 1"));
    }
    let opts = Quadrature::with_rel_tol(1e-10);
    let values = (0..k)
        .map(|j| {
            let a = j as f64 / k as f64;
            let b = (j + 1) as f64 / k as f64;
            integrate(&f, a, b, opts)
                .map(|r| r.value * k as f64)
                .map_err(|e| {
                    Error::numeric(
                        format!("histogram projection, bin {}", j + 1),
                        e.to_string(),
                    )
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PiecewiseConstantFn { values })
}

/// Haar coefficients of the counterexample representer:
/// `c_{lk} = 2^{-l(1/2 + gamma)}` for `-1 <= l <= max_level`.
pub fn haar_representer(gamma: f64, max_level: u32) -> Result<CoefSeq> {
    check_positive("gamma", gamma)?;
    if max_level > 30 {
        return Err(Error::param("max_level", "at most 30 levels are supported"));
    }
    let len = 1usize << (max_level + 1);
    let mut coefs = vec![0.0; len];
    coefs[0] = 2f64.powf(0.5 + gamma);
    for level in 0..=max_level {
        let c = 2f64.powf(-(level as f64) * (0.5 + gamma));
        let start = 1usize << level;
        coefs[start..2 * start].fill(c);
    }
    Ok(CoefSeq {
        coefs,
        basis: BasisKind::Haar { max_level },
    })
}

/// Haar coefficients `<f, phi>`, `<f, psi_{lk}>` up to `max_level`, by
/// quadrature on each half cell.
pub fn haar_coefficients<F: Fn(f64) -> f64>(f: F, max_level: u32) -> Result<CoefSeq> {
    let opts = Quadrature::with_rel_tol(1e-12);
    let finest = 1usize << (max_level + 1);
    // Integrals over the finest half cells; everything else is a signed sum of these.
    let cells = (0..finest)
        .map(|j| {
            let a = j as f64 / finest as f64;
            let b = (j + 1) as f64 / finest as f64;
            integrate(&f, a, b, opts).map(|r| r.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut coefs = vec![0.0; finest];
    coefs[0] = cells.iter().sum();
    for level in 0..=max_level {
        let count = 1usize << level;
        let width = finest / count;
        let amp = (count as f64).sqrt();
        for shift in 0..count {
            let block = &cells[shift * width..(shift + 1) * width];
            let (left, right) = block.split_at(width / 2);
            coefs[count + shift] = amp * (left.iter().sum::<f64>() - right.iter().sum::<f64>());
        }
    }
    Ok(CoefSeq {
        coefs,
        basis: BasisKind::Haar { max_level },
    })
}

/// `psi(f) = sum_k a_k f_k`, padding the shorter sequence with zeros.
pub fn linear_functional_value(a: &CoefSeq, f: &CoefSeq) -> Result<f64> {
    let same = matches!(
        (a.basis, f.basis),
        (BasisKind::Fourier, BasisKind::Fourier) | (BasisKind::Haar { .. }, BasisKind::Haar { .. })
    );
    if !same {
        return Err(Error::BasisMismatch {
            left: a.basis,
            right: f.basis,
        });
    }
    Ok(a.coefs.iter().zip(&f.coefs).map(|(x, y)| x * y).sum())
}

/// `||f - g||_2` for a callable against a piecewise constant function, by quadrature per bin.
pub fn l2_distance_to_histogram<F: Fn(f64) -> f64>(f: F, h: &PiecewiseConstantFn) -> Result<f64> {
    let r = integrate_pieces(
        |x| {
            let d = f(x) - h.eval(x);
            d * d
        },
        &h.edges(),
        Quadrature::with_rel_tol(1e-10),
    )?;
    Ok(r.value.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic_points(level: u32) -> Vec<f64> {
        bin_edges(1usize << level)
    }

    #[test]
    fn model_sequences_match_power_laws() {
        let s =
            build_model_sequences(&SequenceModelSpec::new(1.0, 1.0, 1.0).with_k_max(1)).unwrap();
        assert_eq!(s.f0.coefs, vec![1.0]);
        assert_eq!(s.a.coefs, vec![1.0]);
        assert_eq!(s.lambda.coefs, vec![1.0]);

        let s =
            build_model_sequences(&SequenceModelSpec::new(1.0, 2.0, 0.5).with_k_max(2)).unwrap();
        assert!((s.f0.coefs[1] - 0.353_553_390_593_273_8).abs() < 1e-15);
        assert!((s.a.coefs[1] - 0.176_776_695_296_636_9).abs() < 1e-15);
        assert_eq!(s.lambda.coefs[1], 0.25);

        let s =
            build_model_sequences(&SequenceModelSpec::new(2.0, 1.0, 1.0).with_k_max(3)).unwrap();
        assert!((s.f0.coefs[2] - 3f64.powf(-2.5)).abs() < 1e-15);
        assert!((s.f0.coefs[2] - 0.064_150).abs() < 1e-5);
    }

    #[test]
    fn non_positive_smoothness_rejected() {
        for (b, m, g) in [(0.0, 1.0, 1.0), (1.0, -0.5, 1.0), (1.0, 1.0, -1.0)] {
            let err = build_model_sequences(&SequenceModelSpec::new(b, m, g)).unwrap_err();
            assert!(matches!(err, Error::Parameter { .. }));
        }
        assert!(
            build_model_sequences(&SequenceModelSpec::new(1.0, 1.0, 1.0).with_k_max(0)).is_err()
        );
    }

    #[test]
    fn projection_examples() {
        let h = l2_project_histogram(|_| 2.5, 4).unwrap();
        for v in &h.values {
            assert!((v - 2.5).abs() < 1e-14);
        }
        let h = l2_project_histogram(|x| x, 2).unwrap();
        assert!((h.values[0] - 0.25).abs() < 1e-14);
        assert!((h.values[1] - 0.75).abs() < 1e-14);
        let h = l2_project_histogram(|x| x + 0.5, 2).unwrap();
        assert!((h.values[0] - 0.75).abs() < 1e-14);
        assert!((h.values[1] - 1.25).abs() < 1e-14);
        assert!(l2_project_histogram(|x| x, 0).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let h = l2_project_histogram(|x: f64| (3.0 * x).sin() + x * x, 8).unwrap();
        let again = l2_project_histogram(|x| h.eval(x), 8).unwrap();
        for (a, b) in h.values.iter().zip(&again.values) {
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(1.0));
        }
    }

    #[test]
    fn projection_error_non_increasing_under_refinement() {
        let mut last = f64::INFINITY;
        for k in [1, 2, 4, 8] {
            let h = l2_project_histogram(|x| x, k).unwrap();
            let err = l2_distance_to_histogram(|x| x, &h).unwrap();
            // Exact value for the identity is 1 / (k sqrt(12)).
            assert!((err - 1.0 / (k as f64 * 12f64.sqrt())).abs() < 1e-9);
            assert!(err <= last);
            last = err;
        }
    }

    #[test]
    fn bin_convention() {
        let h = PiecewiseConstantFn::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(h.eval(0.0), 1.0);
        assert_eq!(h.eval(0.25), 2.0);
        assert_eq!(h.eval(0.999), 4.0);
        assert_eq!(h.eval(1.0), 4.0);
        assert_eq!(h.eval(1.5), 0.0);
    }

    #[test]
    fn haar_representer_values() {
        let c = haar_representer(0.5, 0).unwrap();
        assert_eq!(c.coefs.len(), 2);
        assert_eq!(c.coefs[1], 1.0);
        assert_eq!(c.coefs[0], 2.0);
        let c = haar_representer(0.25, 1).unwrap();
        assert!((c.coefs[2] - 0.594_603_557_501_360_5).abs() < 1e-12);
        assert_eq!(c.coefs[2], c.coefs[3]);
        let c = haar_representer(0.37, 2).unwrap();
        assert!(c.coefs[4..8].iter().all(|&v| v == c.coefs[4]));
    }

    #[test]
    fn haar_orthonormal_up_to_level_six() {
        let mut funcs: Vec<Box<dyn Fn(f64) -> f64>> = vec![Box::new(|_| 1.0)];
        for l in 0..=6u32 {
            for k in 0..(1usize << l) {
                funcs.push(Box::new(move |x| haar_wavelet(l, k, x)));
            }
        }
        let pts = dyadic_points(7);
        let opts = Quadrature::default();
        for (i, f) in funcs.iter().enumerate() {
            for (j, g) in funcs.iter().enumerate().skip(i) {
                let ip = integrate_pieces(|x| f(x) * g(x), &pts, opts).unwrap().value;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-10, "({i},{j}) -> {ip}");
            }
        }
    }

    #[test]
    fn fourier_orthonormal() {
        let opts = Quadrature::with_rel_tol(1e-12);
        for i in 1..=7 {
            for j in i..=7 {
                let ip = integrate(
                    |x| fourier_basis(i, x) * fourier_basis(j, x),
                    0.0,
                    1.0,
                    opts,
                )
                .unwrap()
                .value;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn parseval_by_quadrature() {
        let f = CoefSeq::fourier(vec![0.3, -1.2, 0.5, 0.25, -0.1, 0.7]);
        let sq = integrate(
            |x| f.eval(x).powi(2),
            0.0,
            1.0,
            Quadrature::with_rel_tol(1e-12),
        )
        .unwrap()
        .value;
        assert!((sq - f.norm2_sq()).abs() < 1e-8);

        let h = haar_representer(0.3, 4).unwrap();
        let sq = integrate_pieces(
            |x| h.eval(x).powi(2),
            &dyadic_points(6),
            Quadrature::default(),
        )
        .unwrap()
        .value;
        assert!((sq - h.norm2_sq()).abs() < 1e-8);
    }

    #[test]
    fn fourier_recurrence_matches_direct_sum() {
        let coefs: Vec<f64> = (1..=500).map(|k| (k as f64).powf(-1.5)).collect();
        let f = CoefSeq::fourier(coefs.clone());
        for &x in &[0.0, 0.1234, 0.5, 0.77, 1.0] {
            let direct: f64 = coefs
                .iter()
                .enumerate()
                .map(|(i, c)| c * fourier_basis(i + 1, x))
                .sum();
            assert!((f.eval(x) - direct).abs() < 1e-11);
        }
    }

    #[test]
    fn haar_coefficients_recover_series() {
        let h = haar_representer(0.3, 3).unwrap();
        let back = haar_coefficients(|x| h.eval(x), 3).unwrap();
        for (a, b) in h.coefs.iter().zip(&back.coefs) {
            assert!((a - b).abs() < 1e-10);
        }
        // <x, psi_lk> = -2^{-3l/2} / 4
        let c = haar_coefficients(|x| x, 3).unwrap();
        assert!((c.coefs[0] - 0.5).abs() < 1e-13);
        for l in 0..=3u32 {
            let expected = -2f64.powf(-1.5 * l as f64) / 4.0;
            assert!((c.coefs[1 << l] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn functional_value_examples() {
        let v = linear_functional_value(
            &CoefSeq::fourier(vec![1.0, 0.0]),
            &CoefSeq::fourier(vec![0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(v, 0.0);
        let v = linear_functional_value(
            &CoefSeq::fourier(vec![1.0, 0.5]),
            &CoefSeq::fourier(vec![2.0, 2.0]),
        )
        .unwrap();
        assert_eq!(v, 3.0);
        let s =
            build_model_sequences(&SequenceModelSpec::new(1.0, 1.0, 1.0).with_k_max(2)).unwrap();
        assert_eq!(linear_functional_value(&s.f0, &s.f0).unwrap(), 1.125);
        let h = haar_representer(0.5, 1).unwrap();
        assert!(matches!(
            linear_functional_value(&s.f0, &h),
            Err(Error::BasisMismatch { .. })
        ));
    }
}
