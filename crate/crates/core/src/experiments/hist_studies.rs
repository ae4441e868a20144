use serde::Serialize;

use super::config::{CounterexampleConfig, HistBvmConfig, StudyKind};
use super::gwn_studies::{BvmReplication, BvmReport};
use super::output::{StudyOutput, Table};
use super::par_reps;
use crate::divergences::{ks_distance, KsReference};
use crate::error::Result;
use crate::hist::{
    bin_means, counterexample_setup, draw_functional, efficient_estimator,
    fractional_dirichlet_update, functional_at_truth, sample_truth_counts, BinCounts,
    DirichletParams, TruthDensity,
};
use crate::numerics::stats::quantile_sorted;
use crate::numerics::{mean, sample_variance, stream_rng};

fn sqrt_abs_representer(x: f64) -> f64 {
    (x - 0.5).abs().sqrt()
}

/// Standardized functional draws `sqrt(n alpha) (psi(f) - psi_hat) / sqrt(V0)`
/// under the Dirichlet alpha-posterior, compared with `N(0, 1)` by KS.
pub fn run_hist_bvm(cfg: &HistBvmConfig) -> Result<BvmReport> {
    let stream = StudyKind::HistBvm.stream_id();
    let truth = TruthDensity::Linear;
    let at_truth = functional_at_truth(&sqrt_abs_representer, &truth, &[0.5])?;
    let means = bin_means(sqrt_abs_representer, cfg.bins)?;
    let prior =
        DirichletParams::symmetric(cfg.bins, cfg.prior_weight.unwrap_or(1.0 / cfg.bins as f64))?;
    let scale = (cfg.n as f64 * cfg.alpha / at_truth.v0).sqrt();
    let reps = par_reps(cfg.reps, |rep| {
        let mut rng = stream_rng(cfg.seed, stream, rep as u64);
        let samples = truth.sample(cfg.n as usize, &mut rng);
        let psi_hat = efficient_estimator(sqrt_abs_representer, at_truth.psi0, &samples);
        let post = fractional_dirichlet_update(
            &prior,
            &BinCounts::from_samples(&samples, cfg.bins),
            cfg.alpha,
        )?;
        let z: Vec<f64> = draw_functional(&post, &means, cfg.draws, &mut rng)
            .into_iter()
            .map(|psi| (psi - psi_hat) * scale)
            .collect();
        Ok(BvmReplication {
            rep,
            ks_exact: f64::NAN,
            ks_draws: ks_distance(&z, KsReference::StdNormal),
            std_mean: mean(&z),
            std_sd: sample_variance(&z).sqrt(),
        })
    })?;
    Ok(BvmReport::new(cfg.ks_threshold, reps))
}

/// Analytic bias of the projected centering at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleBiasRow {
    pub n: u64,
    pub k: usize,
    pub alpha: f64,
    /// `F0(psi_tilde_[K])`.
    pub bias: f64,
    pub sqrt_n_bias: f64,
    pub sqrt_n_alpha_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub x: f64,
    pub alpha: f64,
    pub k: usize,
    pub psi0: f64,
    pub bias_rows: Vec<CounterexampleBiasRow>,
    /// Per replication: whether the full and the alpha-posterior quantile sets cover `psi0`.
    pub covered: Vec<(bool, bool)>,
    pub coverage_full: f64,
    pub coverage_alpha: f64,
}

impl CounterexampleReport {
    /// `|sqrt(n) F0|` strictly increasing along the grid.
    pub fn full_bias_grows(&self) -> bool {
        self.bias_rows
            .windows(2)
            .all(|w| w[1].sqrt_n_bias.abs() > w[0].sqrt_n_bias.abs())
    }

    /// `|sqrt(n alpha_n) F0|` strictly decreasing along the grid.
    pub fn alpha_bias_shrinks(&self) -> bool {
        self.bias_rows
            .windows(2)
            .all(|w| w[1].sqrt_n_alpha_bias.abs() < w[0].sqrt_n_alpha_bias.abs())
    }

    pub fn to_output(&self) -> StudyOutput {
        let mut out = StudyOutput::new(StudyKind::HistCounterexample);
        out.metric("x", self.x);
        out.metric("alpha", self.alpha);
        out.metric("k", self.k);
        out.metric("psi0", self.psi0);
        out.metric("coverage_full", self.coverage_full);
        out.metric("coverage_alpha", self.coverage_alpha);
        out.metric("coverage_gap", self.coverage_alpha - self.coverage_full);
        out.metric("full_bias_grows", self.full_bias_grows());
        out.metric("alpha_bias_shrinks", self.alpha_bias_shrinks());
        let mut bias = Table::new(
            "bias",
            &[
                "n",
                "k",
                "alpha",
                "bias",
                "sqrt_n_bias",
                "sqrt_n_alpha_bias",
            ],
        );
        for r in &self.bias_rows {
            bias.push(vec![
                r.n.into(),
                r.k.into(),
                r.alpha.into(),
                r.bias.into(),
                r.sqrt_n_bias.into(),
                r.sqrt_n_alpha_bias.into(),
            ]);
        }
        let mut cov = Table::new("coverage", &["rep", "covered_full", "covered_alpha"]);
        for (i, &(f, a)) in self.covered.iter().enumerate() {
            cov.push(vec![i.into(), f.into(), a.into()]);
        }
        out.tables = vec![bias, cov];
        out
    }
}

/// Analytic bias table along `bias_grid` and Monte Carlo coverage of the
/// equal-tailed quantile sets of the full and the alpha-posterior at `n`.
pub fn run_counterexample(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    let x = cfg.x_value();
    let bias_rows = cfg
        .bias_grid
        .iter()
        .map(|&n| {
            let setup = counterexample_setup(n, cfg.gamma, cfg.b)?;
            let alpha = (n as f64).powf(-x);
            let bias = setup.bias();
            Ok(CounterexampleBiasRow {
                n,
                k: setup.k,
                alpha,
                bias,
                sqrt_n_bias: (n as f64).sqrt() * bias,
                sqrt_n_alpha_bias: (n as f64 * alpha).sqrt() * bias,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let setup = counterexample_setup(cfg.n, cfg.gamma, cfg.b)?;
    let alpha = (cfg.n as f64).powf(-x);
    let means = setup.bin_means();
    let psi0 = setup.psi0();
    let (lo_p, hi_p) = ((1.0 - cfg.level) / 2.0, (1.0 + cfg.level) / 2.0);
    let stream = StudyKind::HistCounterexample.stream_id();
    let covered = par_reps(cfg.reps, |rep| {
        let mut rng = stream_rng(cfg.seed, stream, rep as u64);
        let counts = sample_truth_counts(&setup.f0, cfg.n as usize, setup.k, &mut rng);
        let mut cover = |a: f64| -> Result<bool> {
            let post = fractional_dirichlet_update(&setup.prior, &counts, a)?;
            let mut draws = draw_functional(&post, &means, cfg.draws, &mut rng);
            draws.sort_by(f64::total_cmp);
            let (lo, hi) = (quantile_sorted(&draws, lo_p), quantile_sorted(&draws, hi_p));
            Ok(lo < psi0 && psi0 <= hi)
        };
        Ok((cover(1.0)?, cover(alpha)?))
    })?;
    let reps = covered.len() as f64;
    Ok(CounterexampleReport {
        x,
        alpha,
        k: setup.k,
        psi0,
        bias_rows,
        coverage_full: covered.iter().filter(|c| c.0).count() as f64 / reps,
        coverage_alpha: covered.iter().filter(|c| c.1).count() as f64 / reps,
        covered,
    })
}
