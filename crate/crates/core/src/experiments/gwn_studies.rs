use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{GwnBvmConfig, GwnBvmModel, GwnCoverageConfig, StudyKind};
use super::output::{Cell, StudyOutput, Table};
use super::par_reps;
use crate::bases::{build_model_sequences, linear_functional_value, SequenceModelSpec};
use crate::divergences::{ks_distance, ks_gaussian_vs_standard, KsReference};
use crate::error::Result;
use crate::gwn::{
    boundary_schedules, conjugate_param_posterior, efficient_estimator, functional_marginal,
    quantile_interval, shift_rescale, simulate_gwn, GaussianLaw, RegimeCase,
};
use crate::numerics::{mean, sample_variance, stream_rng};

/// The five credible sets compared in the coverage study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    AlphaBreach,
    AlphaRespect,
    CorrectedBreach,
    CorrectedRespect,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::AlphaBreach,
        Variant::AlphaRespect,
        Variant::CorrectedBreach,
        Variant::CorrectedRespect,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::AlphaBreach => "alpha_breach",
            Variant::AlphaRespect => "alpha_respect",
            Variant::CorrectedBreach => "corrected_breach",
            Variant::CorrectedRespect => "corrected_respect",
        }
    }
}

/// One replication of one credible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub center: f64,
    pub low: f64,
    pub high: f64,
    /// `center - psi_hat`.
    pub bias: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub variant: Variant,
    pub alpha: f64,
    pub covered: usize,
    pub reps: usize,
    /// `covered / reps`.
    pub coverage: f64,
    pub mean_length: f64,
    pub mean_bias: f64,
    pub sd_bias: f64,
    pub records: Vec<ReplicationRecord>,
}

impl ExperimentResult {
    fn from_records(variant: Variant, alpha: f64, records: Vec<ReplicationRecord>) -> Self {
        let reps = records.len();
        let covered = records.iter().filter(|r| r.covered).count();
        let lengths: Vec<f64> = records.iter().map(|r| r.high - r.low).collect();
        let biases: Vec<f64> = records.iter().map(|r| r.bias).collect();
        ExperimentResult {
            variant,
            alpha,
            covered,
            reps,
            coverage: covered as f64 / reps as f64,
            mean_length: mean(&lengths),
            mean_bias: mean(&biases),
            sd_bias: sample_variance(&biases).sqrt(),
            records,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwnCoverageReport {
    pub case: RegimeCase,
    pub psi0: f64,
    pub results: Vec<ExperimentResult>,
}

impl GwnCoverageReport {
    pub fn result(&self, variant: Variant) -> &ExperimentResult {
        self.results
            .iter()
            .find(|r| r.variant == variant)
            .expect("every variant is present")
    }

    pub fn to_output(&self) -> StudyOutput {
        let mut out = StudyOutput::new(StudyKind::GwnCoverage);
        out.metric("case", self.case.number());
        out.metric("psi0", self.psi0);
        let mut summary = Table::new(
            "coverage",
            &[
                "variant",
                "alpha",
                "covered",
                "reps",
                "coverage",
                "mean_length",
                "mean_bias",
                "sd_bias",
            ],
        );
        let mut reps = Table::new(
            "replications",
            &["rep", "variant", "center", "low", "high", "bias", "covered"],
        );
        for r in &self.results {
            let v = r.variant.name();
            out.metric(format!("coverage_{v}"), r.coverage);
            out.metric(format!("length_{v}"), r.mean_length);
            out.metric(format!("alpha_{v}"), r.alpha);
            summary.push(vec![
                v.into(),
                r.alpha.into(),
                r.covered.into(),
                r.reps.into(),
                r.coverage.into(),
                r.mean_length.into(),
                r.mean_bias.into(),
                r.sd_bias.into(),
            ]);
        }
        for i in 0..self.results[0].records.len() {
            for r in &self.results {
                let rec = &r.records[i];
                reps.push(vec![
                    rec.rep.into(),
                    r.variant.name().into(),
                    rec.center.into(),
                    rec.low.into(),
                    rec.high.into(),
                    rec.bias.into(),
                    rec.covered.into(),
                ]);
            }
        }
        out.tables = vec![summary, reps];
        out
    }
}

/// Coverage, length and centering of the full posterior, the alpha-posterior
/// and the shift-and-rescale set, with alpha a `log n` factor on either side
/// of the regime threshold.
pub fn run_gwn_coverage(cfg: &GwnCoverageConfig) -> Result<GwnCoverageReport> {
    let spec = SequenceModelSpec::new(cfg.beta, cfg.mu, cfg.gamma).with_k_max(cfg.k_max);
    let seq = build_model_sequences(&spec)?;
    let schedules = boundary_schedules(cfg.beta, cfg.mu, cfg.gamma)?;
    let alphas = [
        1.0,
        schedules.breach.eval(cfg.n)?,
        schedules.respect.eval(cfg.n)?,
    ];
    let psi0 = linear_functional_value(&seq.a, &seq.f0)?;
    let stream = StudyKind::GwnCoverage.stream_id();

    let per_rep = par_reps(cfg.reps, |rep| {
        let mut rng = stream_rng(cfg.seed, stream, rep as u64);
        let obs = simulate_gwn(&seq.f0, cfg.n, &mut rng);
        let psi_hat = efficient_estimator(&obs, &seq.a);
        let mut row = Vec::with_capacity(5);
        let record = |iv: crate::gwn::CredibleInterval| ReplicationRecord {
            rep,
            center: iv.center,
            low: iv.low,
            high: iv.high,
            bias: iv.center - psi_hat,
            covered: iv.contains(psi0),
        };
        let full = quantile_interval(
            &functional_marginal(&obs, &seq.a, &seq.lambda, alphas[0])?,
            cfg.level,
        )?;
        row.push(record(full));
        let mut corrected = Vec::with_capacity(2);
        for &alpha in &alphas[1..] {
            let law = functional_marginal(&obs, &seq.a, &seq.lambda, alpha)?;
            let iv = quantile_interval(&law, cfg.level)?;
            row.push(record(iv));
            corrected.push(record(shift_rescale(&iv, law.mean, alpha)?));
        }
        row.extend(corrected);
        Ok(row)
    })?;

    let results = Variant::ALL
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let alpha = match v {
                Variant::Full => alphas[0],
                Variant::AlphaBreach | Variant::CorrectedBreach => alphas[1],
                Variant::AlphaRespect | Variant::CorrectedRespect => alphas[2],
            };
            ExperimentResult::from_records(v, alpha, per_rep.iter().map(|row| row[j]).collect())
        })
        .collect();
    Ok(GwnCoverageReport {
        case: schedules.case,
        psi0,
        results,
    })
}

/// One data set of a BvM check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BvmReplication {
    pub rep: usize,
    /// KS distance of the exact standardized law (`NaN` when only draws are available).
    pub ks_exact: f64,
    /// KS distance of the standardized draws.
    pub ks_draws: f64,
    /// Mean and SD of the standardized law or draws.
    pub std_mean: f64,
    pub std_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvmReport {
    pub threshold: f64,
    pub replications: Vec<BvmReplication>,
    /// Largest KS distance used for the verdict (exact when available).
    pub ks_max: f64,
    pub ks_mean: f64,
    pub pass: bool,
}

impl BvmReport {
    pub(crate) fn new(threshold: f64, replications: Vec<BvmReplication>) -> Self {
        let ks: Vec<f64> = replications
            .iter()
            .map(|r| {
                if r.ks_exact.is_nan() {
                    r.ks_draws
                } else {
                    r.ks_exact
                }
            })
            .collect();
        let ks_max = ks.iter().copied().fold(0.0, f64::max);
        BvmReport {
            threshold,
            ks_mean: mean(&ks),
            ks_max,
            pass: ks_max < threshold,
            replications,
        }
    }

    pub fn to_output(&self, kind: StudyKind) -> StudyOutput {
        let mut out = StudyOutput::new(kind);
        out.metric("ks_max", self.ks_max);
        out.metric("ks_mean", self.ks_mean);
        out.metric("ks_threshold", self.threshold);
        out.metric("pass", self.pass);
        let mut t = Table::new(
            "bvm",
            &["rep", "ks_exact", "ks_draws", "std_mean", "std_sd"],
        );
        for r in &self.replications {
            t.push(vec![
                r.rep.into(),
                Cell::Float(r.ks_exact),
                r.ks_draws.into(),
                r.std_mean.into(),
                r.std_sd.into(),
            ]);
        }
        out.tables.push(t);
        out
    }
}

fn standardized_draws<R: Rng + ?Sized>(law: &GaussianLaw, draws: usize, rng: &mut R) -> Vec<f64> {
    (0..draws)
        .map(|_| law.mean + law.sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// KS distance between `sqrt(n alpha) (psi - psi_hat) / sqrt(V0)` under the
/// alpha-posterior and `N(0, 1)`, exactly and from draws.
pub fn run_gwn_bvm(cfg: &GwnBvmConfig) -> Result<BvmReport> {
    let stream = StudyKind::GwnBvm.stream_id();
    let na = cfg.n as f64 * cfg.alpha;
    let seq = match cfg.model {
        GwnBvmModel::Sequence => Some(build_model_sequences(
            &SequenceModelSpec::new(cfg.beta, cfg.mu, cfg.gamma).with_k_max(cfg.k_max),
        )?),
        GwnBvmModel::Conjugate => None,
    };
    let reps = par_reps(cfg.reps, |rep| {
        let mut rng = stream_rng(cfg.seed, stream, rep as u64);
        let std_law = match &seq {
            None => {
                let z: f64 = rng.sample(StandardNormal);
                let ybar = cfg.theta0 + z / (cfg.n as f64).sqrt();
                let law = conjugate_param_posterior(
                    cfg.n,
                    cfg.alpha,
                    cfg.prior_mean,
                    cfg.prior_var,
                    ybar,
                )?;
                GaussianLaw::new((law.mean - ybar) * na.sqrt(), law.sd * na.sqrt())
            }
            Some(seq) => {
                let obs = simulate_gwn(&seq.f0, cfg.n, &mut rng);
                let psi_hat = efficient_estimator(&obs, &seq.a);
                let law = functional_marginal(&obs, &seq.a, &seq.lambda, cfg.alpha)?;
                let scale = (na / seq.a.norm2_sq()).sqrt();
                GaussianLaw::new((law.mean - psi_hat) * scale, law.sd * scale)
            }
        };
        let draws = standardized_draws(&std_law, cfg.draws, &mut rng);
        Ok(BvmReplication {
            rep,
            ks_exact: ks_gaussian_vs_standard(&std_law),
            ks_draws: ks_distance(&draws, KsReference::StdNormal),
            std_mean: std_law.mean,
            std_sd: std_law.sd,
        })
    })?;
    Ok(BvmReport::new(cfg.ks_threshold, reps))
}
