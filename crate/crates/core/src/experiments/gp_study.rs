use serde::Serialize;

use super::config::{DensityGpBvmConfig, GpTriple, LengthscaleRule, StudyKind};
use super::output::{StudyOutput, Table};
use super::par_reps;
use crate::bases::{CoefSeq, PiecewiseConstantFn};
use crate::divergences::{ks_distance, KsReference};
use crate::error::Result;
use crate::gp::{
    build_kernel_matrix, fourier_cell_means, functional_trace_with_means, grid_points, run_pcn,
    se_lengthscale, GpPriorSpec, GridData, GridField, Kernel, PcnConfig, TraceRow,
};
use crate::hist::TruthDensity;
use crate::numerics::{mean, sample_variance, stream_rng};

/// Resolution of the tabulated true density.
const TRUTH_BINS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpTripleResult {
    pub label: &'static str,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
    /// `min(gamma, beta) > 1/2 + gamma - mu`.
    pub condition_met: bool,
    pub lengthscale: f64,
    pub prior_rank: usize,
    pub psi0: f64,
    pub psi_hat: f64,
    pub v0: f64,
    pub ks: f64,
    pub std_mean: f64,
    pub std_sd: f64,
    pub acceptance: f64,
    pub final_step: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpBvmReport {
    pub satisfied: GpTripleResult,
    pub violated: GpTripleResult,
}

impl GpBvmReport {
    /// KS of the violating prior exceeds that of the regular one.
    pub fn ordering_holds(&self) -> bool {
        self.violated.ks > self.satisfied.ks
    }

    pub fn to_output(&self) -> StudyOutput {
        let mut out = StudyOutput::new(StudyKind::DensityGpBvm);
        out.metric("ks_satisfied", self.satisfied.ks);
        out.metric("ks_violated", self.violated.ks);
        out.metric("ordering_holds", self.ordering_holds());
        out.metric("acceptance_satisfied", self.satisfied.acceptance);
        out.metric("acceptance_violated", self.violated.acceptance);
        let mut main = Table::new(
            "summary",
            &[
                "label",
                "beta",
                "gamma",
                "mu",
                "condition_met",
                "lengthscale",
                "prior_rank",
                "psi0",
                "psi_hat",
                "v0",
                "ks",
                "std_mean",
                "std_sd",
                "acceptance",
                "final_step",
            ],
        );
        let mut tables = Vec::new();
        for r in [&self.satisfied, &self.violated] {
            main.push(vec![
                r.label.into(),
                r.beta.into(),
                r.gamma.into(),
                r.mu.into(),
                r.condition_met.into(),
                r.lengthscale.into(),
                r.prior_rank.into(),
                r.psi0.into(),
                r.psi_hat.into(),
                r.v0.into(),
                r.ks.into(),
                r.std_mean.into(),
                r.std_sd.into(),
                r.acceptance.into(),
                r.final_step.into(),
            ]);
            let mut t = Table::new(
                format!("trace_{}", r.label),
                &["step", "psi_value", "acceptance_flag"],
            );
            for row in &r.trace {
                t.push(vec![
                    row.step.into(),
                    row.psi_value.into(),
                    row.acceptance_flag.into(),
                ]);
            }
            tables.push(t);
        }
        out.tables.push(main);
        out.tables.extend(tables);
        out
    }
}

fn power_coefs(terms: usize, smoothness: f64) -> CoefSeq {
    CoefSeq::fourier(
        (1..=terms)
            .map(|k| (k as f64).powf(-0.5 - smoothness))
            .collect(),
    )
}

/// Truth `f0 ∝ exp(g)` with `g_k = k^(-1/2-beta)`, tabulated at cell midpoints.
fn gp_truth(beta: f64, terms: usize) -> Result<TruthDensity> {
    let g = power_coefs(terms, beta);
    let e: Vec<f64> = g
        .eval_many(&grid_points(TRUTH_BINS))
        .into_iter()
        .map(f64::exp)
        .collect();
    let norm = e.iter().sum::<f64>() / TRUTH_BINS as f64;
    TruthDensity::from_histogram(PiecewiseConstantFn::new(
        e.into_iter().map(|v| v / norm).collect(),
    ))
}

fn run_triple(
    cfg: &DensityGpBvmConfig,
    label: &'static str,
    index: usize,
    triple: GpTriple,
) -> Result<GpTripleResult> {
    let mut rng = stream_rng(cfg.seed, StudyKind::DensityGpBvm.stream_id(), index as u64);
    let truth = gp_truth(triple.beta, cfg.terms)?;
    let a = power_coefs(cfg.terms, cfg.mu);

    let fine_a = fourier_cell_means(&a.coefs, TRUTH_BINS);
    let TruthDensity::Tabulated { density, .. } = &truth else {
        unreachable!("gp truth is tabulated")
    };
    let w = 1.0 / TRUTH_BINS as f64;
    let psi0: f64 = density
        .values
        .iter()
        .zip(&fine_a)
        .map(|(f, a)| f * a * w)
        .sum();
    let v0: f64 = density
        .values
        .iter()
        .zip(&fine_a)
        .map(|(f, a)| f * (a - psi0).powi(2) * w)
        .sum();

    let samples = truth.sample(cfg.n as usize, &mut rng);
    let psi_hat = mean(&a.eval_many(&samples));
    let data = GridData::from_samples(&samples, cfg.grid);
    let cell_a = fourier_cell_means(&a.coefs, cfg.grid);

    let n_eff = cfg.n as f64 * cfg.alpha;
    let lengthscale = match cfg.lengthscale_rule {
        LengthscaleRule::EffectiveSample => se_lengthscale(triple.gamma, n_eff)?,
        LengthscaleRule::SampleSize => (cfg.n as f64).powf(-1.0 / (1.0 + 2.0 * triple.gamma)),
    };
    let prior = build_kernel_matrix(&GpPriorSpec::new(
        Kernel::RescaledSe {
            gamma: triple.gamma,
            lengthscale,
        },
        cfg.grid,
    ))?;
    let pcn = PcnConfig {
        steps: cfg.steps,
        burn_in_frac: cfg.burn_in_frac,
        max_retained: cfg.max_retained,
        initial_step: cfg.initial_step,
    };
    let run = run_pcn(
        GridField::zeros(cfg.grid),
        &data,
        &prior,
        cfg.alpha,
        &pcn,
        &mut rng,
    )?;
    let psi = functional_trace_with_means(&run.retained, &cell_a);
    let scale = (n_eff / v0).sqrt();
    let z: Vec<f64> = psi.iter().map(|p| (p - psi_hat) * scale).collect();
    let trace = run
        .retained_steps
        .iter()
        .zip(&psi)
        .map(|(&step, &psi_value)| TraceRow {
            step,
            psi_value,
            acceptance_flag: run.accepted_flags[step],
        })
        .collect();
    Ok(GpTripleResult {
        label,
        beta: triple.beta,
        gamma: triple.gamma,
        mu: cfg.mu,
        condition_met: triple.gamma.min(triple.beta) > 0.5 + triple.gamma - cfg.mu,
        lengthscale,
        prior_rank: prior.rank(),
        psi0,
        psi_hat,
        v0,
        ks: ks_distance(&z, KsReference::StdNormal),
        std_mean: mean(&z),
        std_sd: sample_variance(&z).sqrt(),
        acceptance: run.post_burn_acceptance,
        final_step: run.final_step,
        trace,
    })
}

/// pCN chains for a prior meeting the functional BvM regularity condition and
/// one violating it; KS of the standardized functional draws for each.
pub fn run_density_gp_bvm(cfg: &DensityGpBvmConfig) -> Result<GpBvmReport> {
    let mut results = par_reps(2, |i| {
        if i == 0 {
            run_triple(cfg, "satisfied", 0, cfg.satisfied)
        } else {
            run_triple(cfg, "violated", 1, cfg.violated)
        }
    })?;
    let violated = results.pop().expect("two results");
    let satisfied = results.pop().expect("two results");
    Ok(GpBvmReport {
        satisfied,
        violated,
    })
}
