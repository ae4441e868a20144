use serde::Serialize;

use super::config::{
    ContractionBackend, ContractionSlopeConfig, Prop31BoundaryConfig, StudyKind, SupnormSlopeConfig,
};
use super::output::{StudyOutput, Table};
use super::par_reps;
use crate::bases::SequenceModelSpec;
use crate::error::Result;
use crate::gwn::{bias_tn1, boundary_schedules, posterior_l2_risk, AlphaSchedule, RegimeCase};
use crate::hist::{
    draw_dirichlet, fractional_dirichlet_update, sample_multinomial_counts, DirichletParams,
    TruthDensity,
};
use crate::numerics::{linear_fit, mean, stream_rng};
use crate::supnorm::{supnorm_replication, CoordPrior, SupnormSetup};

/// Least-squares slope of log risk against a log sample-size axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub label: String,
    pub slope: f64,
    pub slope_se: f64,
    pub slope_ci: (f64, f64),
    /// Rate exponent predicted by theory.
    pub expected: f64,
}

impl SlopeFit {
    fn fit(label: String, x: &[f64], risk: &[f64], expected: f64) -> SlopeFit {
        let y: Vec<f64> = risk.iter().map(|r| r.ln()).collect();
        let f = linear_fit(x, &y);
        SlopeFit {
            label,
            slope: f.slope,
            slope_se: f.slope_se,
            slope_ci: f.slope_ci,
            expected,
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        (self.slope - self.expected).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskPoint {
    pub n: u64,
    pub alpha: f64,
    pub n_eff: f64,
    /// Histogram bins (histogram backend only).
    pub bins: usize,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeReport {
    pub kind: StudyKind,
    pub fits: Vec<SlopeFit>,
    /// Risk curve per fit, aligned with `fits`.
    pub points: Vec<Vec<RiskPoint>>,
    /// Fixed-`n alpha` risks, one vector per fit (sup-norm study only).
    pub invariance: Vec<Vec<(u64, f64, f64)>>,
}

pub type SupnormReport = SlopeReport;

impl SlopeReport {
    pub fn fit(&self, label: &str) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.label == label)
    }

    /// Relative spread `(max - min) / mean` of the fixed-`n alpha` risks of fit `i`.
    pub fn invariance_spread(&self, i: usize) -> Option<f64> {
        let v: Vec<f64> = self.invariance.get(i)?.iter().map(|p| p.2).collect();
        if v.is_empty() {
            return None;
        }
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        Some((hi - lo) / mean(&v))
    }

    /// Risk nonincreasing along the grid up to a relative slack.
    pub fn monotone(&self, i: usize, slack: f64) -> bool {
        self.points[i]
            .windows(2)
            .all(|w| w[1].risk <= w[0].risk * (1.0 + slack))
    }

    pub fn to_output(&self) -> StudyOutput {
        let mut out = StudyOutput::new(self.kind);
        let mut risk = Table::new("risk", &["label", "n", "alpha", "n_eff", "bins", "risk"]);
        let mut fits = Table::new(
            "fits",
            &[
                "label", "slope", "slope_se", "ci_low", "ci_high", "expected",
            ],
        );
        for (i, (f, pts)) in self.fits.iter().zip(&self.points).enumerate() {
            out.metric(format!("slope_{}", f.label), f.slope);
            out.metric(format!("expected_{}", f.label), f.expected);
            if let Some(s) = self.invariance_spread(i) {
                out.metric(format!("invariance_spread_{}", f.label), s);
            }
            if self.kind == StudyKind::SupnormSlope {
                out.metric(format!("monotone_{}", f.label), self.monotone(i, 0.02));
            }
            fits.push(vec![
                f.label.clone().into(),
                f.slope.into(),
                f.slope_se.into(),
                f.slope_ci.0.into(),
                f.slope_ci.1.into(),
                f.expected.into(),
            ]);
            for p in pts {
                risk.push(vec![
                    f.label.clone().into(),
                    p.n.into(),
                    p.alpha.into(),
                    p.n_eff.into(),
                    p.bins.into(),
                    p.risk.into(),
                ]);
            }
        }
        out.tables = vec![risk, fits];
        if self.invariance.iter().any(|v| !v.is_empty()) {
            let mut inv = Table::new("invariance", &["label", "n", "alpha", "risk"]);
            for (f, v) in self.fits.iter().zip(&self.invariance) {
                for &(n, a, r) in v {
                    inv.push(vec![f.label.clone().into(), n.into(), a.into(), r.into()]);
                }
            }
            out.tables.push(inv);
        }
        out
    }
}

/// `int_0^1 |h(x) - (x + 1/2)| dx` for a histogram density `h` with bin weights `omega`.
pub fn l1_to_linear_truth(omega: &[f64]) -> f64 {
    let k = omega.len() as f64;
    // Antiderivative of |t|.
    let g = |t: f64| 0.5 * t * t.abs();
    omega
        .iter()
        .enumerate()
        .map(|(j, &w)| {
            let (l, r) = (j as f64 / k, (j + 1) as f64 / k);
            // |k w - 1/2 - x| vanishes at x* = k w - 1/2.
            let xs = k * w - 0.5;
            g(r - xs) - g(l - xs)
        })
        .sum()
}

/// Slope of log posterior risk against `log(n alpha)`.
pub fn run_contraction_slope(cfg: &ContractionSlopeConfig) -> Result<SlopeReport> {
    let grid: Vec<(u64, f64)> = cfg
        .n_eff_grid
        .iter()
        .map(|&ne| {
            let n = (ne / cfg.alpha).round().max(1.0) as u64;
            (n, n as f64 * cfg.alpha)
        })
        .collect();
    let x: Vec<f64> = grid.iter().map(|g| g.1.ln()).collect();
    let mut fits = Vec::new();
    let mut points = Vec::new();
    match cfg.backend {
        ContractionBackend::Gwn => {
            for p in &cfg.pairs {
                let (beta, gamma) = (p[0], p[1]);
                let spec = SequenceModelSpec::new(beta, 1.0, gamma).with_k_max(cfg.k_max);
                let pts = grid
                    .iter()
                    .map(|&(n, ne)| {
                        Ok(RiskPoint {
                            n,
                            alpha: cfg.alpha,
                            n_eff: ne,
                            bins: 0,
                            risk: posterior_l2_risk(&spec, n, cfg.alpha)?.value,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let risk: Vec<f64> = pts.iter().map(|p| p.risk).collect();
                let expected = -2.0 * beta.min(gamma) / (1.0 + 2.0 * gamma);
                fits.push(SlopeFit::fit(
                    format!("beta{beta}_gamma{gamma}"),
                    &x,
                    &risk,
                    expected,
                ));
                points.push(pts);
            }
        }
        ContractionBackend::Histogram => {
            let stream = StudyKind::ContractionSlope.stream_id();
            let truth = TruthDensity::Linear;
            let pts = grid
                .iter()
                .enumerate()
                .map(|(gi, &(n, ne))| {
                    let bins = (cfg.bins_scale * (ne / ne.ln()).cbrt()).round().max(1.0) as usize;
                    let probs = truth.bin_probs(bins);
                    let prior = DirichletParams::symmetric(bins, 1.0)?;
                    let per_rep = par_reps(cfg.reps, |rep| {
                        let mut rng =
                            stream_rng(cfg.seed, stream, ((gi as u64) << 32) | rep as u64);
                        let counts = sample_multinomial_counts(&probs, n, &mut rng);
                        let post = fractional_dirichlet_update(&prior, &counts, cfg.alpha)?;
                        let total: f64 = (0..cfg.draws)
                            .map(|_| l1_to_linear_truth(&draw_dirichlet(&post, &mut rng)))
                            .sum();
                        Ok(total / cfg.draws as f64)
                    })?;
                    Ok(RiskPoint {
                        n,
                        alpha: cfg.alpha,
                        n_eff: ne,
                        bins,
                        risk: mean(&per_rep),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let risk: Vec<f64> = pts.iter().map(|p| p.risk).collect();
            fits.push(SlopeFit::fit("histogram_l1".into(), &x, &risk, -1.0 / 3.0));
            points.push(pts);
        }
    }
    Ok(SlopeReport {
        kind: StudyKind::ContractionSlope,
        invariance: vec![Vec::new(); fits.len()],
        fits,
        points,
    })
}

fn prior_label(p: &CoordPrior) -> &'static str {
    match p {
        CoordPrior::Uniform { .. } => "uniform",
        CoordPrior::TailDensity { .. } => "tail_density",
        CoordPrior::Gaussian => "gaussian",
    }
}

/// Slope of log sup-norm risk against `log(n alpha / log(n alpha))`, per prior.
pub fn run_supnorm_slope(cfg: &SupnormSlopeConfig) -> Result<SupnormReport> {
    let stream = StudyKind::SupnormSlope.stream_id();
    let x: Vec<f64> = cfg
        .n_eff_grid
        .iter()
        .map(|&ne| {
            let v = ne as f64;
            (v / v.ln()).ln()
        })
        .collect();
    let mut fits = Vec::new();
    let mut points = Vec::new();
    let mut invariance = Vec::new();
    for (pi, prior) in cfg.priors.iter().enumerate() {
        let setup = SupnormSetup {
            prior: *prior,
            beta: cfg.beta,
            radius: cfg.radius,
            levels: cfg.levels,
            draws: cfg.draws,
        };
        // Stream layout: prior index, grid slot, replication.
        let risk_at = |slot: u64, n: u64, alpha: f64| -> Result<f64> {
            let r = par_reps(cfg.reps, |rep| {
                let mut rng = stream_rng(
                    cfg.seed,
                    stream,
                    ((pi as u64) << 40) | (slot << 20) | rep as u64,
                );
                supnorm_replication(&setup, n, alpha, &mut rng)
            })?;
            Ok(mean(&r))
        };
        let mut pts = Vec::new();
        for (gi, &ne) in cfg.n_eff_grid.iter().enumerate() {
            let n = (ne as f64 / cfg.alpha).round() as u64;
            pts.push(RiskPoint {
                n,
                alpha: cfg.alpha,
                n_eff: ne as f64,
                bins: setup.grid_cells(),
                risk: risk_at(gi as u64, n, cfg.alpha)?,
            });
        }
        let mut inv = Vec::new();
        if cfg.invariance_check {
            for (j, (n, alpha)) in [(1u64 << 14, 1.0), (1 << 15, 0.5), (1 << 16, 0.25)]
                .into_iter()
                .enumerate()
            {
                inv.push((n, alpha, risk_at(1000 + j as u64, n, alpha)?));
            }
        }
        let risk: Vec<f64> = pts.iter().map(|p| p.risk).collect();
        let expected = -cfg.beta / (2.0 * cfg.beta + 1.0);
        fits.push(SlopeFit::fit(
            prior_label(prior).into(),
            &x,
            &risk,
            expected,
        ));
        points.push(pts);
        invariance.push(inv);
    }
    Ok(SlopeReport {
        kind: StudyKind::SupnormSlope,
        fits,
        points,
        invariance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryVerdict {
    /// Strictly decreasing along the grid.
    Decreasing,
    /// Last value at least the first: bounded away from zero or growing.
    NotDecreasing,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub case: RegimeCase,
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub schedule: &'static str,
    pub n: u64,
    pub alpha: f64,
    pub sqrt_n_tn1: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop31Report {
    pub rows: Vec<BoundaryRow>,
    /// `(case, schedule, verdict)`.
    pub verdicts: Vec<(RegimeCase, &'static str, BoundaryVerdict)>,
    /// Grid points where the schedule leaves (0, 1] and is therefore skipped.
    pub skipped: Vec<(RegimeCase, &'static str, u64)>,
}

impl Prop31Report {
    pub fn verdict(&self, case: RegimeCase, schedule: &str) -> Option<BoundaryVerdict> {
        self.verdicts
            .iter()
            .find(|v| v.0 == case && v.1 == schedule)
            .map(|v| v.2)
    }

    pub fn to_output(&self) -> StudyOutput {
        let mut out = StudyOutput::new(StudyKind::Prop31Boundary);
        for (case, sched, v) in &self.verdicts {
            out.metric(format!("case{}_{sched}", case.number()), v);
        }
        out.metric("skipped_points", self.skipped.len());
        let mut t = Table::new(
            "boundary",
            &[
                "case",
                "beta",
                "mu",
                "gamma",
                "schedule",
                "n",
                "alpha",
                "sqrt_n_tn1",
                "tail_bound",
            ],
        );
        for r in &self.rows {
            t.push(vec![
                (r.case.number() as u32).into(),
                r.beta.into(),
                r.mu.into(),
                r.gamma.into(),
                r.schedule.into(),
                r.n.into(),
                r.alpha.into(),
                r.sqrt_n_tn1.into(),
                r.tail_bound.into(),
            ]);
        }
        out.tables.push(t);
        out
    }
}

fn classify_sequence(v: &[f64]) -> BoundaryVerdict {
    if v.len() >= 2 && v.windows(2).all(|w| w[1] < w[0]) {
        BoundaryVerdict::Decreasing
    } else if v.len() >= 2 && v[v.len() - 1] >= v[0] {
        BoundaryVerdict::NotDecreasing
    } else {
        BoundaryVerdict::Mixed
    }
}

/// `sqrt(n) t_n1` along `n_grid` for schedules breaching and respecting the regime threshold.
pub fn run_prop31_boundary(cfg: &Prop31BoundaryConfig) -> Result<Prop31Report> {
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut skipped = Vec::new();
    for t in &cfg.triples {
        let (beta, mu, gamma) = (t[0], t[1], t[2]);
        let schedules = boundary_schedules(beta, mu, gamma)?;
        let spec = SequenceModelSpec::new(beta, mu, gamma).with_k_max(cfg.k_max);
        for (name, sched) in [("breach", schedules.breach), ("respect", schedules.respect)] {
            let mut values = Vec::new();
            for &n in &cfg.n_grid {
                let Ok(alpha) = AlphaSchedule::eval(&sched, n) else {
                    skipped.push((schedules.case, name, n));
                    continue;
                };
                let v = bias_tn1(&spec, n, alpha)?;
                values.push(v.value.abs());
                rows.push(BoundaryRow {
                    case: schedules.case,
                    beta,
                    mu,
                    gamma,
                    schedule: name,
                    n,
                    alpha,
                    sqrt_n_tn1: v.value,
                    tail_bound: v.tail_bound,
                });
            }
            verdicts.push((schedules.case, name, classify_sequence(&values)));
        }
    }
    Ok(Prop31Report {
        rows,
        verdicts,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::{integrate_pieces, Quadrature};

    #[test]
    fn l1_matches_quadrature() {
        let omega = [0.1, 0.3, 0.05, 0.55];
        let k = omega.len();
        let h = |x: f64| {
            let j = ((x * k as f64) as usize).min(k - 1);
            (k as f64 * omega[j] - x - 0.5).abs()
        };
        let mut pts: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
        pts.extend(
            omega
                .iter()
                .map(|w| k as f64 * w - 0.5)
                .filter(|x| *x > 0.0 && *x < 1.0),
        );
        pts.sort_by(f64::total_cmp);
        let q = integrate_pieces(h, &pts, Quadrature::default())
            .unwrap()
            .value;
        assert!((l1_to_linear_truth(&omega) - q).abs() < 1e-12);
        // Exact histogram projection of the truth: 1/(4K).
        let proj: Vec<f64> = (0..k)
            .map(|j| (j as f64 + 0.5) / k as f64 / k as f64 + 0.5 / k as f64)
            .collect();
        assert!((l1_to_linear_truth(&proj) - 0.25 / k as f64).abs() < 1e-14);
    }

    #[test]
    fn gwn_slopes() {
        let rep = run_contraction_slope(&ContractionSlopeConfig::default()).unwrap();
        for f in &rep.fits {
            assert!(f.within(0.05), "{f:?}");
        }
    }

    #[test]
    fn boundary_verdicts() {
        let rep = run_prop31_boundary(&Prop31BoundaryConfig {
            k_max: 100_000,
            ..Default::default()
        })
        .unwrap();
        for case in [RegimeCase::Smooth, RegimeCase::Critical, RegimeCase::Rough] {
            assert_eq!(
                rep.verdict(case, "respect"),
                Some(BoundaryVerdict::Decreasing),
                "{case:?}"
            );
            assert_eq!(
                rep.verdict(case, "breach"),
                Some(BoundaryVerdict::NotDecreasing),
                "{case:?}"
            );
        }
    }
}
