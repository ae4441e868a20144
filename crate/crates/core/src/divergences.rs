//! Rényi, Kullback–Leibler and second-variation divergences, L^p distances
//! and the Kolmogorov–Smirnov distance used for Gaussian-limit checks.

use serde::{Deserialize, Serialize};

use crate::bases::{BasisKind, CoefSeq, PiecewiseConstantFn};
use crate::error::{Error, Result};
use crate::gwn::GaussianLaw;
use crate::hist::HistogramDensity;
use crate::numerics::quadrature::{integrate_real_line, Quadrature};
use crate::numerics::{norm_cdf, norm_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivergenceMethod {
    ClosedForm,
    Quadrature,
}

/// A divergence value, possibly `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub value: f64,
    pub method: DivergenceMethod,
    pub est_error: f64,
}

impl DivergenceReport {
    fn closed(value: f64) -> Self {
        DivergenceReport {
            value,
            method: DivergenceMethod::ClosedForm,
            est_error: 0.0,
        }
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", "Rényi order must lie in (0, 1)"))
    }
}

fn check_aligned(f: &CoefSeq, g: &CoefSeq) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::param("f", "sequences must have equal length"));
    }
    Ok(())
}

/// `D_alpha` between the laws of `n` white-noise observations under `f` and `f0`: `n alpha / 2 ||f - f0||^2`.
pub fn renyi_gaussian_product(
    f: &CoefSeq,
    f0: &CoefSeq,
    n: u64,
    alpha: f64,
) -> Result<DivergenceReport> {
    check_order(alpha)?;
    check_aligned(f, f0)?;
    let d2: f64 = f
        .coefs
        .iter()
        .zip(&f0.coefs)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(DivergenceReport::closed(n as f64 * alpha / 2.0 * d2))
}

/// Same divergence from its definition `-(1-alpha)^-1 log int p^alpha q^(1-alpha)`,
/// one real-line quadrature per coordinate `N(f_k, 1/n)` vs `N(f0_k, 1/n)`.
pub fn renyi_gaussian_product_quadrature(
    f: &CoefSeq,
    f0: &CoefSeq,
    n: u64,
    alpha: f64,
) -> Result<DivergenceReport> {
    check_order(alpha)?;
    check_aligned(f, f0)?;
    let sd = 1.0 / (n as f64).sqrt();
    let log_pdf = |x: f64, m: f64| {
        let z = (x - m) / sd;
        -0.5 * z * z - (sd * (2.0 * std::f64::consts::PI).sqrt()).ln()
    };
    let opts = Quadrature::with_rel_tol(1e-13);
    let mut log_affinity = 0.0;
    let mut err = 0.0;
    for (&a, &b) in f.coefs.iter().zip(&f0.coefs) {
        let r = integrate_real_line(
            |x| (alpha * log_pdf(x, a) + (1.0 - alpha) * log_pdf(x, b)).exp(),
            alpha * a + (1.0 - alpha) * b,
            sd,
            opts,
        )?;
        log_affinity += r.value.ln();
        err += r.error / r.value;
    }
    Ok(DivergenceReport {
        value: (-log_affinity / (1.0 - alpha)).max(0.0),
        method: DivergenceMethod::Quadrature,
        est_error: err / (1.0 - alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlV {
    pub kl: f64,
    pub v: f64,
}

fn check_bins(f0: &HistogramDensity, f: &HistogramDensity) -> Result<()> {
    if f0.k() != f.k() {
        return Err(Error::Incompatible(format!(
            "histograms with {} and {} bins",
            f0.k(),
            f.k()
        )));
    }
    Ok(())
}

/// `K(f0, f)` and the second variation `V(f0, f)` from bin weights.
pub fn kl_and_v_histogram(f0: &HistogramDensity, f: &HistogramDensity) -> Result<KlV> {
    check_bins(f0, f)?;
    let mut logs = Vec::with_capacity(f0.k());
    for (&p, &q) in f0.omega.iter().zip(&f.omega) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Ok(KlV {
                kl: f64::INFINITY,
                v: f64::INFINITY,
            });
        }
        logs.push((p, (p / q).ln()));
    }
    let kl: f64 = logs.iter().map(|(p, l)| p * l).sum();
    let v: f64 = logs.iter().map(|(p, l)| p * (l - kl).powi(2)).sum();
    Ok(KlV { kl: kl.max(0.0), v })
}

/// `D_alpha(f, f0) = -(1-alpha)^-1 log sum omega_j^alpha omega0_j^(1-alpha)`.
pub fn renyi_histogram(
    f0: &HistogramDensity,
    f: &HistogramDensity,
    alpha: f64,
) -> Result<DivergenceReport> {
    check_order(alpha)?;
    check_bins(f0, f)?;
    // affinity - 1 = sum p ((q/p)^alpha - 1); exact zero when f = f0.
    let mut excess = 0.0;
    for (&p, &q) in f0.omega.iter().zip(&f.omega) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            excess -= p;
        } else {
            excess += p * (alpha * (q / p).ln()).exp_m1();
        }
    }
    let value = if excess <= -1.0 {
        f64::INFINITY
    } else {
        (-excess.ln_1p() / (1.0 - alpha)).max(0.0)
    };
    Ok(DivergenceReport::closed(value))
}

/// Divergence between the n-fold products, `n D_alpha(f, f0)`.
pub fn renyi_histogram_product(
    f0: &HistogramDensity,
    f: &HistogramDensity,
    alpha: f64,
    n: u64,
) -> Result<DivergenceReport> {
    let single = renyi_histogram(f0, f, alpha)?;
    Ok(DivergenceReport::closed(single.value * n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KsReference {
    StdNormal,
    Gaussian { mean: f64, sd: f64 },
}

impl KsReference {
    fn cdf(&self, x: f64) -> f64 {
        match *self {
            KsReference::StdNormal => norm_cdf(x),
            KsReference::Gaussian { mean, sd } => norm_cdf((x - mean) / sd),
        }
    }
}

/// Sup distance between the empirical CDF of `samples` and the reference CDF.
pub fn ks_distance(samples: &[f64], reference: KsReference) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = reference.cdf(x);
            (((i + 1) as f64 / m) - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// Exact KS distance between `N(mean, sd^2)` and `N(0, 1)`.
pub fn ks_gaussian_vs_standard(law: &GaussianLaw) -> f64 {
    let (m, s) = (law.mean, law.sd);
    let gap = |x: f64| (norm_cdf((x - m) / s) - norm_cdf(x)).abs();
    // Stationary points solve phi((x-m)/s)/s = phi(x), a quadratic in x.
    let mut candidates = Vec::new();
    if (s - 1.0).abs() < 1e-12 {
        candidates.push(m / 2.0);
    } else {
        let qa = 1.0 - 1.0 / (s * s);
        let qb = 2.0 * m / (s * s);
        let qc = -m * m / (s * s) - 2.0 * s.ln();
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let r = disc.sqrt();
            candidates.push((-qb + r) / (2.0 * qa));
            candidates.push((-qb - r) / (2.0 * qa));
        }
    }
    candidates.into_iter().map(gap).fold(0.0, f64::max)
}

/// Standard-normal quantile grid `Phi^-1(i/(m+1))`, used to calibrate KS checks.
pub fn normal_quantile_grid(m: usize) -> Vec<f64> {
    (1..=m)
        .map(|i| norm_quantile(i as f64 / (m + 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpNorm {
    One,
    Two,
    Sup,
}

/// Exact L^p distance between piecewise constant functions on equal-width bins
/// (bin counts may differ; the common refinement is used).
pub fn lp_distance_histograms(f: &PiecewiseConstantFn, g: &PiecewiseConstantFn, p: LpNorm) -> f64 {
    let mut edges = f.edges();
    edges.extend(g.edges());
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut acc = 0.0_f64;
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let d = (f.eval(mid) - g.eval(mid)).abs();
        let len = w[1] - w[0];
        match p {
            LpNorm::One => acc += d * len,
            LpNorm::Two => acc += d * d * len,
            LpNorm::Sup => acc = acc.max(d),
        }
    }
    if p == LpNorm::Two {
        acc.sqrt()
    } else {
        acc
    }
}

/// L^p distance between two series with a bound on the grid error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpValue {
    pub value: f64,
    pub grid_error: f64,
}

/// L^p distance between coefficient sequences in the same basis. L2 is exact by
/// Parseval; Haar series are piecewise constant on their finest cells, so L1 and
/// sup are exact too; Fourier L1/sup use a `grid`-point midpoint grid with a
/// derivative-based error bound.
pub fn lp_distance_coefs(f: &CoefSeq, g: &CoefSeq, p: LpNorm, grid: usize) -> Result<LpValue> {
    let diff = match (f.basis, g.basis) {
        (BasisKind::Fourier, BasisKind::Fourier) => BasisKind::Fourier,
        (BasisKind::Haar { max_level: a }, BasisKind::Haar { max_level: b }) => BasisKind::Haar {
            max_level: a.max(b),
        },
        _ => {
            return Err(Error::BasisMismatch {
                left: f.basis,
                right: g.basis,
            })
        }
    };
    let len = f.len().max(g.len());
    let coefs: Vec<f64> = (0..len)
        .map(|i| f.coefs.get(i).copied().unwrap_or(0.0) - g.coefs.get(i).copied().unwrap_or(0.0))
        .collect();
    if p == LpNorm::Two {
        return Ok(LpValue {
            value: coefs.iter().map(|c| c * c).sum::<f64>().sqrt(),
            grid_error: 0.0,
        });
    }
    let d = CoefSeq { coefs, basis: diff };
    match diff {
        BasisKind::Haar { .. } => {
            let cells = d.len().next_power_of_two().max(1);
            let vals = PiecewiseConstantFn::new(
                (0..cells)
                    .map(|j| d.eval((j as f64 + 0.5) / cells as f64))
                    .collect(),
            );
            let zero = PiecewiseConstantFn::new(vec![0.0]);
            Ok(LpValue {
                value: lp_distance_histograms(&vals, &zero, p),
                grid_error: 0.0,
            })
        }
        BasisKind::Fourier => {
            if grid == 0 {
                return Err(Error::param("grid", "must be at least 1"));
            }
            let h = 1.0 / grid as f64;
            let vals: Vec<f64> = (0..grid)
                .map(|j| d.eval((j as f64 + 0.5) * h).abs())
                .collect();
            // |d'| <= sum_k |c_k| sqrt(2) 2 pi floor(k/2).
            let lip: f64 = d
                .coefs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    c.abs()
                        * std::f64::consts::SQRT_2
                        * 2.0
                        * std::f64::consts::PI
                        * i.div_ceil(2) as f64
                })
                .sum();
            let value = match p {
                LpNorm::One => vals.iter().sum::<f64>() * h,
                _ => vals.iter().copied().fold(0.0, f64::max),
            };
            Ok(LpValue {
                value,
                grid_error: lip * h / 2.0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn hist(w: &[f64]) -> HistogramDensity {
        HistogramDensity::new(w.to_vec()).unwrap()
    }

    #[test]
    fn gaussian_product_examples() {
        let f = CoefSeq::fourier(vec![0.3, 0.1]);
        assert_eq!(renyi_gaussian_product(&f, &f, 10, 0.5).unwrap().value, 0.0);
        let g = CoefSeq::fourier(vec![2.0, 0.0]);
        let z = CoefSeq::fourier(vec![0.0, 0.0]);
        assert_eq!(renyi_gaussian_product(&g, &z, 1, 0.5).unwrap().value, 1.0);
        assert!(renyi_gaussian_product(&g, &z, 1, 1.0).is_err());
    }

    #[test]
    fn gaussian_product_matches_quadrature() {
        let f = CoefSeq::fourier(vec![0.4, -0.2, 0.15]);
        let f0 = CoefSeq::fourier(vec![0.1, 0.1, -0.05]);
        for alpha in [0.2, 0.5, 0.8] {
            let c = renyi_gaussian_product(&f, &f0, 50, alpha).unwrap().value;
            let q = renyi_gaussian_product_quadrature(&f, &f0, 50, alpha)
                .unwrap()
                .value;
            assert!(((c - q) / c).abs() < 1e-8, "{c} vs {q}");
        }
    }

    #[test]
    fn histogram_kl_examples() {
        let f0 = hist(&[0.5, 0.5]);
        let f = hist(&[0.6, 0.4]);
        let kv = kl_and_v_histogram(&f0, &f0).unwrap();
        assert_eq!((kv.kl, kv.v), (0.0, 0.0));
        let kv = kl_and_v_histogram(&f0, &f).unwrap();
        assert!((kv.kl - 0.020_411).abs() < 1e-6);
        let l1 = (5.0f64 / 6.0).ln();
        let l2 = (5.0f64 / 4.0).ln();
        let expected = 0.5 * (l1 - kv.kl).powi(2) + 0.5 * (l2 - kv.kl).powi(2);
        assert!((kv.v - expected).abs() < 1e-15);
        assert!((kv.v - 0.041).abs() < 5e-4);
        let kv = kl_and_v_histogram(&f0, &hist(&[1.0, 0.0])).unwrap();
        assert!(kv.kl.is_infinite());
    }

    #[test]
    fn histogram_renyi_examples() {
        let f0 = hist(&[0.5, 0.5]);
        let f = hist(&[0.6, 0.4]);
        assert_eq!(renyi_histogram(&f0, &f0, 0.3).unwrap().value, 0.0);
        let expected = -2.0 * (0.3f64.sqrt() + 0.2f64.sqrt()).ln();
        assert!((renyi_histogram(&f0, &f, 0.5).unwrap().value - expected).abs() < 1e-14);
        assert!((expected - 0.010_153_423_432_868).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn renyi_nonnegative_monotone_and_bounded(
            a in prop::collection::vec(0.05f64..1.0, 4),
            b in prop::collection::vec(0.05f64..1.0, 4),
            n in 1u64..1000,
        ) {
            let f0 = hist(&a);
            let f = hist(&b);
            let l1: f64 = f0.omega.iter().zip(&f.omega).map(|(p, q)| (p - q).abs()).sum();
            let mut last = 0.0;
            for i in 1..=20 {
                let alpha = i as f64 / 21.0;
                let d = renyi_histogram(&f0, &f, alpha).unwrap().value;
                prop_assert!(d >= 0.0);
                prop_assert!(d + 1e-12 >= last);
                last = d;
                let prod = renyi_histogram_product(&f0, &f, alpha, n).unwrap().value;
                prop_assert!(prod + 1e-12 >= n as f64 * alpha * l1 * l1 / 2.0);
            }
            prop_assert_eq!(renyi_histogram(&f0, &f0, 0.5).unwrap().value, 0.0);
        }
    }

    #[test]
    fn ks_examples() {
        let m = 999;
        let grid = normal_quantile_grid(m);
        assert!(ks_distance(&grid, KsReference::StdNormal) <= 1.0 / (m + 1) as f64 + 1e-12);

        let mut rng = stream_rng(17, 0, 0);
        let draws: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(ks_distance(&draws, KsReference::StdNormal) < 0.01);
        let shifted: Vec<f64> = draws.iter().map(|x| x + 1.0).collect();
        let exact = ks_gaussian_vs_standard(&GaussianLaw::new(1.0, 1.0));
        assert!((exact - (2.0 * norm_cdf(0.5) - 1.0)).abs() < 1e-15);
        assert!(ks_distance(&shifted, KsReference::StdNormal) > 0.3);
        let recentred = ks_distance(&shifted, KsReference::Gaussian { mean: 1.0, sd: 1.0 });
        assert!(recentred < 0.01);
    }

    #[test]
    fn ks_gaussian_matches_brute_force() {
        for &(m, s) in &[(0.0, 1.3), (0.2, 0.8), (-0.05, 1.02), (0.0, 1.0)] {
            let exact = ks_gaussian_vs_standard(&GaussianLaw::new(m, s));
            let brute = (0..200_001)
                .map(|i| {
                    let x = -10.0 + 20.0 * i as f64 / 200_000.0;
                    (norm_cdf((x - m) / s) - norm_cdf(x)).abs()
                })
                .fold(0.0, f64::max);
            assert!(exact >= brute - 1e-12 && exact - brute < 1e-8, "({m},{s})");
        }
    }

    #[test]
    fn lp_examples() {
        let f = PiecewiseConstantFn::new(vec![1.2, 0.8]);
        let u = PiecewiseConstantFn::new(vec![1.0]);
        assert_eq!(lp_distance_histograms(&f, &f, LpNorm::One), 0.0);
        assert!((lp_distance_histograms(&f, &u, LpNorm::One) - 0.2).abs() < 1e-15);
        assert!((lp_distance_histograms(&f, &u, LpNorm::Sup) - 0.2).abs() < 1e-15);
        assert!((lp_distance_histograms(&f, &u, LpNorm::Two) - 0.2).abs() < 1e-15);

        let a = CoefSeq::fourier(vec![1.0, 0.3]);
        let b = CoefSeq::fourier(vec![1.0, 0.0]);
        assert!((lp_distance_coefs(&a, &b, LpNorm::Two, 0).unwrap().value - 0.3).abs() < 1e-15);
        let sup = lp_distance_coefs(&a, &b, LpNorm::Sup, 4096).unwrap();
        assert!((sup.value - 0.3 * std::f64::consts::SQRT_2).abs() <= sup.grid_error + 1e-12);
        let h = crate::bases::haar_representer(0.5, 2).unwrap();
        let zero = CoefSeq {
            coefs: vec![0.0],
            basis: BasisKind::Haar { max_level: 0 },
        };
        let l2 = lp_distance_coefs(&h, &zero, LpNorm::Two, 0).unwrap().value;
        let l2_grid = {
            let cells = 8;
            ((0..cells)
                .map(|j| h.eval((j as f64 + 0.5) / 8.0).powi(2))
                .sum::<f64>()
                / 8.0)
                .sqrt()
        };
        assert!((l2 - l2_grid).abs() < 1e-12);
        assert!(matches!(
            lp_distance_coefs(&a, &h, LpNorm::One, 8),
            Err(Error::BasisMismatch { .. })
        ));
    }
}
