use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gwn::RegimeCase;
use crate::supnorm::CoordPrior;

/// The named studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    GwnCoverage,
    GwnBvm,
    HistBvm,
    HistCounterexample,
    DensityGpBvm,
    ContractionSlope,
    SupnormSlope,
    Prop31Boundary,
}

impl StudyKind {
    pub const ALL: [StudyKind; 8] = [
        StudyKind::GwnCoverage,
        StudyKind::GwnBvm,
        StudyKind::HistBvm,
        StudyKind::HistCounterexample,
        StudyKind::DensityGpBvm,
        StudyKind::ContractionSlope,
        StudyKind::SupnormSlope,
        StudyKind::Prop31Boundary,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::GwnCoverage => "gwn-coverage",
            StudyKind::GwnBvm => "gwn-bvm",
            StudyKind::HistBvm => "hist-bvm",
            StudyKind::HistCounterexample => "hist-counterexample",
            StudyKind::DensityGpBvm => "density-gp-bvm",
            StudyKind::ContractionSlope => "contraction-slope",
            StudyKind::SupnormSlope => "supnorm-slope",
            StudyKind::Prop31Boundary => "prop31-boundary",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            StudyKind::GwnCoverage => "credible-interval coverage in the white noise model: full, alpha and shift-and-rescale sets",
            StudyKind::GwnBvm => "KS distance of the standardized alpha-posterior of a linear functional (white noise / conjugate normal)",
            StudyKind::HistBvm => "KS distance of standardized functional draws under a Dirichlet histogram alpha-posterior",
            StudyKind::HistCounterexample => "histogram prior whose full posterior is biased: analytic bias table and coverage contrast",
            StudyKind::DensityGpBvm => "pCN sampling of exponentiated GP alpha-posteriors; KS for a regular and a violating prior",
            StudyKind::ContractionSlope => "log-log slope of posterior risk against the effective sample size n alpha",
            StudyKind::SupnormSlope => "sup-norm posterior risk slope for Haar series priors with uniform or light-tailed coordinates",
            StudyKind::Prop31Boundary => "centering bias sqrt(n) t_n1 along n for alpha schedules on both sides of the threshold",
        }
    }

    /// Stream identifier used to derive the random streams of this study.
    pub fn stream_id(&self) -> u32 {
        match self {
            StudyKind::GwnCoverage => 1,
            StudyKind::GwnBvm => 2,
            StudyKind::HistBvm => 3,
            StudyKind::HistCounterexample => 4,
            StudyKind::DensityGpBvm => 5,
            StudyKind::ContractionSlope => 6,
            StudyKind::SupnormSlope => 7,
            StudyKind::Prop31Boundary => 8,
        }
    }
}

impl std::fmt::Display for StudyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("kind", format!("unknown study `{s}`")))
    }
}

/// Coverage of the five credible sets in the white noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GwnCoverageConfig {
    pub seed: u64,
    pub reps: usize,
    pub n: u64,
    pub level: f64,
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub k_max: usize,
}

impl Default for GwnCoverageConfig {
    fn default() -> Self {
        GwnCoverageConfig {
            seed: 1,
            reps: 10_000,
            n: 10_000,
            level: 0.95,
            beta: 2.0,
            mu: 2.0,
            gamma: 1.0,
            k_max: 10_000,
        }
    }
}

impl GwnCoverageConfig {
    /// Representative triple for one of the three bias regimes.
    pub fn for_case(case: RegimeCase) -> Self {
        let (beta, mu, gamma) = match case {
            RegimeCase::Smooth => (2.0, 2.0, 1.0),
            RegimeCase::Critical => (0.75, 0.75, 0.25),
            RegimeCase::Rough => (1.25, 1.25, 1.0),
        };
        GwnCoverageConfig {
            beta,
            mu,
            gamma,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GwnBvmModel {
    /// Normal location model with a normal prior.
    Conjugate,
    /// Linear functional in the white noise sequence model.
    Sequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GwnBvmConfig {
    pub seed: u64,
    pub reps: usize,
    pub n: u64,
    pub alpha: f64,
    pub model: GwnBvmModel,
    pub theta0: f64,
    pub prior_mean: f64,
    pub prior_var: f64,
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub k_max: usize,
    pub draws: usize,
    pub ks_threshold: f64,
}

impl Default for GwnBvmConfig {
    fn default() -> Self {
        GwnBvmConfig {
            seed: 1,
            reps: 200,
            n: 10_000,
            alpha: 0.25,
            model: GwnBvmModel::Conjugate,
            theta0: 1.0,
            prior_mean: 0.0,
            prior_var: 1.0,
            beta: 2.0,
            mu: 2.0,
            gamma: 1.0,
            k_max: 10_000,
            draws: 5000,
            ks_threshold: 0.02,
        }
    }
}

/// Functional `int |x - 1/2|^(1/2) f(x) dx` under a Dirichlet histogram prior; truth `x + 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistBvmConfig {
    pub seed: u64,
    pub reps: usize,
    pub n: u64,
    pub alpha: f64,
    pub bins: usize,
    /// Symmetric Dirichlet weight per bin; defaults to `1 / bins`.
    pub prior_weight: Option<f64>,
    pub draws: usize,
    pub ks_threshold: f64,
}

impl Default for HistBvmConfig {
    fn default() -> Self {
        HistBvmConfig {
            seed: 1,
            reps: 1,
            n: 10_000,
            alpha: 0.5,
            bins: 128,
            prior_weight: None,
            draws: 5000,
            ks_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub seed: u64,
    pub reps: usize,
    pub n: u64,
    pub gamma: f64,
    /// Dirichlet weights are `n^-b`.
    pub b: f64,
    /// `alpha_n = n^-x`; defaults to `(1 - 2 gamma)/3 + 0.1`.
    pub x: Option<f64>,
    pub draws: usize,
    pub level: f64,
    pub bias_grid: Vec<u64>,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            seed: 1,
            reps: 500,
            n: 10_000,
            gamma: 0.3,
            b: 0.25,
            x: None,
            draws: 2000,
            level: 0.95,
            bias_grid: vec![1_000, 10_000, 100_000, 1_000_000],
        }
    }
}

impl CounterexampleConfig {
    pub fn x_value(&self) -> f64 {
        self.x.unwrap_or((1.0 - 2.0 * self.gamma) / 3.0 + 0.1)
    }
}

/// Regularity pair for the GP study: truth smoothness `beta`, prior smoothness `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpTriple {
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthscaleRule {
    /// `(n' / log^2 n')^(-1/(1+2 gamma))` with `n' = n alpha`.
    EffectiveSample,
    /// `n^(-1/(1+2 gamma))`.
    SampleSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityGpBvmConfig {
    pub seed: u64,
    pub n: u64,
    pub alpha: f64,
    pub mu: f64,
    pub satisfied: GpTriple,
    pub violated: GpTriple,
    pub grid: usize,
    pub steps: usize,
    pub burn_in_frac: f64,
    pub max_retained: usize,
    pub initial_step: f64,
    /// Fourier terms of the log-density of the truth and of the representer.
    pub terms: usize,
    pub lengthscale_rule: LengthscaleRule,
    pub ks_threshold: f64,
}

impl Default for DensityGpBvmConfig {
    fn default() -> Self {
        DensityGpBvmConfig {
            seed: 1,
            n: 10_000,
            alpha: 0.25,
            mu: 1.0,
            satisfied: GpTriple {
                beta: 1.0,
                gamma: 1.0,
            },
            violated: GpTriple {
                beta: 1.0,
                gamma: 3.0,
            },
            grid: 256,
            steps: 200_000,
            burn_in_frac: 0.2,
            max_retained: 5000,
            initial_step: 0.1,
            terms: 256,
            lengthscale_rule: LengthscaleRule::SampleSize,
            ks_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContractionBackend {
    /// Closed-form squared L2 risk in the white noise model.
    Gwn,
    /// Monte Carlo L1 risk of the Dirichlet histogram posterior, truth `x + 1/2`.
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionSlopeConfig {
    pub seed: u64,
    pub backend: ContractionBackend,
    pub alpha: f64,
    /// Effective sample sizes `n alpha`.
    pub n_eff_grid: Vec<f64>,
    /// `(beta, gamma)` pairs for the white noise backend.
    pub pairs: Vec<[f64; 2]>,
    pub k_max: usize,
    pub reps: usize,
    pub draws: usize,
    /// `K = round(bins_scale (n'/log n')^(1/3))`.
    pub bins_scale: f64,
}

impl Default for ContractionSlopeConfig {
    fn default() -> Self {
        ContractionSlopeConfig {
            seed: 1,
            backend: ContractionBackend::Gwn,
            alpha: 0.5,
            n_eff_grid: (0..=12)
                .map(|j| 10f64.powf(3.0 + j as f64 / 4.0).round())
                .collect(),
            pairs: vec![[1.0, 1.0], [3.0, 1.0], [1.0, 3.0]],
            k_max: 10_000,
            reps: 20,
            draws: 200,
            bins_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupnormSlopeConfig {
    pub seed: u64,
    pub reps: usize,
    pub draws: usize,
    pub beta: f64,
    pub radius: f64,
    pub levels: u32,
    pub alpha: f64,
    pub priors: Vec<CoordPrior>,
    /// Effective sample sizes `n alpha`; `n = n_eff / alpha` must be an integer.
    pub n_eff_grid: Vec<u64>,
    /// Run the fixed-`n alpha` comparison at `2^14` with `alpha in {1, 1/2, 1/4}`.
    pub invariance_check: bool,
}

impl Default for SupnormSlopeConfig {
    fn default() -> Self {
        SupnormSlopeConfig {
            seed: 1,
            reps: 8,
            draws: 4,
            beta: 1.0,
            radius: 1.0,
            levels: 12,
            alpha: 1.0,
            priors: vec![
                CoordPrior::Uniform { bound: 2.0 },
                CoordPrior::TailDensity { delta: 0.5, b: 1.0 },
            ],
            n_eff_grid: (10..=18).map(|e| 1u64 << e).collect(),
            invariance_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop31BoundaryConfig {
    pub seed: u64,
    /// `(beta, mu, gamma)` triples, one per regime.
    pub triples: Vec<[f64; 3]>,
    pub n_grid: Vec<u64>,
    pub k_max: usize,
}

impl Default for Prop31BoundaryConfig {
    fn default() -> Self {
        Prop31BoundaryConfig {
            seed: 1,
            triples: vec![[2.0, 2.0, 1.0], [0.75, 0.75, 0.25], [1.25, 1.25, 1.0]],
            n_grid: (0..=8)
                .map(|j| 10f64.powf(3.0 + j as f64 / 2.0).round() as u64)
                .collect(),
            k_max: 1_000_000,
        }
    }
}

/// One study with its parameters, as stored in the `[study]` table of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StudyConfig {
    GwnCoverage(GwnCoverageConfig),
    GwnBvm(GwnBvmConfig),
    HistBvm(HistBvmConfig),
    HistCounterexample(CounterexampleConfig),
    DensityGpBvm(DensityGpBvmConfig),
    ContractionSlope(ContractionSlopeConfig),
    SupnormSlope(SupnormSlopeConfig),
    Prop31Boundary(Prop31BoundaryConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    study: StudyConfig,
}

fn unit_open(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must lie in (0, 1)")))
    }
}

fn alpha_ok(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must lie in (0, 1]")))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("{v} must be positive and finite"),
        ))
    }
}

fn at_least(field: &str, v: u64, min: u64) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must be at least {min}")))
    }
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::config(field, "must not be empty"))
    } else {
        Ok(())
    }
}

impl StudyConfig {
    pub fn default_for(kind: StudyKind) -> StudyConfig {
        match kind {
            StudyKind::GwnCoverage => StudyConfig::GwnCoverage(Default::default()),
            StudyKind::GwnBvm => StudyConfig::GwnBvm(Default::default()),
            StudyKind::HistBvm => StudyConfig::HistBvm(Default::default()),
            StudyKind::HistCounterexample => StudyConfig::HistCounterexample(Default::default()),
            StudyKind::DensityGpBvm => StudyConfig::DensityGpBvm(Default::default()),
            StudyKind::ContractionSlope => StudyConfig::ContractionSlope(Default::default()),
            StudyKind::SupnormSlope => StudyConfig::SupnormSlope(Default::default()),
            StudyKind::Prop31Boundary => StudyConfig::Prop31Boundary(Default::default()),
        }
    }

    pub fn kind(&self) -> StudyKind {
        match self {
            StudyConfig::GwnCoverage(_) => StudyKind::GwnCoverage,
            StudyConfig::GwnBvm(_) => StudyKind::GwnBvm,
            StudyConfig::HistBvm(_) => StudyKind::HistBvm,
            StudyConfig::HistCounterexample(_) => StudyKind::HistCounterexample,
            StudyConfig::DensityGpBvm(_) => StudyKind::DensityGpBvm,
            StudyConfig::ContractionSlope(_) => StudyKind::ContractionSlope,
            StudyConfig::SupnormSlope(_) => StudyKind::SupnormSlope,
            StudyConfig::Prop31Boundary(_) => StudyKind::Prop31Boundary,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            StudyConfig::GwnCoverage(c) => c.seed,
            StudyConfig::GwnBvm(c) => c.seed,
            StudyConfig::HistBvm(c) => c.seed,
            StudyConfig::HistCounterexample(c) => c.seed,
            StudyConfig::DensityGpBvm(c) => c.seed,
            StudyConfig::ContractionSlope(c) => c.seed,
            StudyConfig::SupnormSlope(c) => c.seed,
            StudyConfig::Prop31Boundary(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            StudyConfig::GwnCoverage(c) => c.seed = seed,
            StudyConfig::GwnBvm(c) => c.seed = seed,
            StudyConfig::HistBvm(c) => c.seed = seed,
            StudyConfig::HistCounterexample(c) => c.seed = seed,
            StudyConfig::DensityGpBvm(c) => c.seed = seed,
            StudyConfig::ContractionSlope(c) => c.seed = seed,
            StudyConfig::SupnormSlope(c) => c.seed = seed,
            StudyConfig::Prop31Boundary(c) => c.seed = seed,
        }
    }

    /// Overrides the replication count; studies without replications reject it.
    pub fn set_reps(&mut self, reps: usize) -> Result<()> {
        match self {
            StudyConfig::GwnCoverage(c) => c.reps = reps,
            StudyConfig::GwnBvm(c) => c.reps = reps,
            StudyConfig::HistBvm(c) => c.reps = reps,
            StudyConfig::HistCounterexample(c) => c.reps = reps,
            StudyConfig::ContractionSlope(c) => c.reps = reps,
            StudyConfig::SupnormSlope(c) => c.reps = reps,
            StudyConfig::DensityGpBvm(_) | StudyConfig::Prop31Boundary(_) => {
                return Err(Error::config(
                    "reps",
                    format!("study `{}` has no replications", self.kind()),
                ))
            }
        }
        Ok(())
    }

    /// Checks every parameter; errors are `Error::Config` naming the field.
    pub fn validate(&self) -> Result<()> {
        match self {
            StudyConfig::GwnCoverage(c) => {
                at_least("reps", c.reps as u64, 1)?;
                at_least("n", c.n, 3)?;
                unit_open("level", c.level)?;
                at_least("k_max", c.k_max as u64, 1)?;
                positive("beta", c.beta)?;
                positive("mu", c.mu)?;
                positive("gamma", c.gamma)?;
                let schedules = crate::gwn::boundary_schedules(c.beta, c.mu, c.gamma)
                    .map_err(|e| Error::config("beta", e.to_string()))?;
                for (name, s) in [("breach", schedules.breach), ("respect", schedules.respect)] {
                    s.eval(c.n)
                        .map_err(|e| Error::config("n", format!("{name} schedule: {e}")))?;
                }
            }
            StudyConfig::GwnBvm(c) => {
                at_least("reps", c.reps as u64, 1)?;
                at_least("n", c.n, 1)?;
                alpha_ok("alpha", c.alpha)?;
                positive("prior_var", c.prior_var)?;
                positive("beta", c.beta)?;
                positive("mu", c.mu)?;
                positive("gamma", c.gamma)?;
                at_least("k_max", c.k_max as u64, 1)?;
                at_least("draws", c.draws as u64, 100)?;
                positive("ks_threshold", c.ks_threshold)?;
            }
            StudyConfig::HistBvm(c) => {
                at_least("reps", c.reps as u64, 1)?;
                at_least("n", c.n, 1)?;
                alpha_ok("alpha", c.alpha)?;
                at_least("bins", c.bins as u64, 2)?;
                if c.bins % 2 != 0 {
                    return Err(Error::config(
                        "bins",
                        "must be even so that 1/2 is a bin edge",
                    ));
                }
                if let Some(w) = c.prior_weight {
                    positive("prior_weight", w)?;
                }
                at_least("draws", c.draws as u64, 100)?;
                positive("ks_threshold", c.ks_threshold)?;
            }
            StudyConfig::HistCounterexample(c) => {
                at_least("reps", c.reps as u64, 1)?;
                at_least("n", c.n, 8)?;
                if !(c.gamma > 0.0 && c.gamma <= 0.5) {
                    return Err(Error::config(
                        "gamma",
                        format!("{} must lie in (0, 1/2]", c.gamma),
                    ));
                }
                if !(c.b > 1.0 / 6.0) {
                    return Err(Error::config("b", format!("{} must exceed 1/6", c.b)));
                }
                let x = c.x_value();
                let lo = (1.0 - 2.0 * c.gamma) / 3.0;
                if !(x > lo && x < 2.0 / 3.0) {
                    return Err(Error::config("x", format!("{x} must lie in ({lo}, 2/3)")));
                }
                at_least("draws", c.draws as u64, 100)?;
                unit_open("level", c.level)?;
                nonempty("bias_grid", &c.bias_grid)?;
                for &n in &c.bias_grid {
                    at_least("bias_grid", n, 8)?;
                }
            }
            StudyConfig::DensityGpBvm(c) => {
                at_least("n", c.n, 16)?;
                alpha_ok("alpha", c.alpha)?;
                positive("mu", c.mu)?;
                for (name, t) in [("satisfied", c.satisfied), ("violated", c.violated)] {
                    positive(&format!("{name}.beta"), t.beta)?;
                    positive(&format!("{name}.gamma"), t.gamma)?;
                }
                at_least("grid", c.grid as u64, 2)?;
                at_least("steps", c.steps as u64, 10)?;
                if !(0.0..1.0).contains(&c.burn_in_frac) {
                    return Err(Error::config("burn_in_frac", "must lie in [0, 1)"));
                }
                at_least("max_retained", c.max_retained as u64, 100)?;
                if !(c.initial_step > 0.0 && c.initial_step <= 1.0) {
                    return Err(Error::config("initial_step", "must lie in (0, 1]"));
                }
                at_least("terms", c.terms as u64, 1)?;
                if (c.n as f64 * c.alpha) <= std::f64::consts::E {
                    return Err(Error::config("n", "n alpha must exceed e"));
                }
                positive("ks_threshold", c.ks_threshold)?;
            }
            StudyConfig::ContractionSlope(c) => {
                alpha_ok("alpha", c.alpha)?;
                if c.n_eff_grid.len() < 3 {
                    return Err(Error::config("n_eff_grid", "needs at least three points"));
                }
                for &v in &c.n_eff_grid {
                    if !(v > 3.0 && v.is_finite()) {
                        return Err(Error::config("n_eff_grid", format!("{v} must exceed 3")));
                    }
                }
                match c.backend {
                    ContractionBackend::Gwn => {
                        nonempty("pairs", &c.pairs)?;
                        for p in &c.pairs {
                            positive("pairs", p[0])?;
                            positive("pairs", p[1])?;
                        }
                        at_least("k_max", c.k_max as u64, 1)?;
                    }
                    ContractionBackend::Histogram => {
                        at_least("reps", c.reps as u64, 1)?;
                        at_least("draws", c.draws as u64, 1)?;
                        positive("bins_scale", c.bins_scale)?;
                    }
                }
            }
            StudyConfig::SupnormSlope(c) => {
                at_least("reps", c.reps as u64, 1)?;
                at_least("draws", c.draws as u64, 1)?;
                positive("beta", c.beta)?;
                positive("radius", c.radius)?;
                if c.levels > 20 {
                    return Err(Error::config("levels", "at most 20 levels"));
                }
                alpha_ok("alpha", c.alpha)?;
                nonempty("priors", &c.priors)?;
                for p in &c.priors {
                    p.validate()
                        .map_err(|e| Error::config("priors", e.to_string()))?;
                    if let CoordPrior::Uniform { bound } = p {
                        if *bound <= c.radius {
                            return Err(Error::config(
                                "priors",
                                "uniform bound must exceed radius",
                            ));
                        }
                    }
                }
                if c.n_eff_grid.len() < 3 {
                    return Err(Error::config("n_eff_grid", "needs at least three points"));
                }
                for &v in &c.n_eff_grid {
                    at_least("n_eff_grid", v, 3)?;
                    let n = v as f64 / c.alpha;
                    if (n - n.round()).abs() > 1e-9 {
                        return Err(Error::config(
                            "n_eff_grid",
                            format!("{v} / alpha is not an integer"),
                        ));
                    }
                }
            }
            StudyConfig::Prop31Boundary(c) => {
                nonempty("triples", &c.triples)?;
                for t in &c.triples {
                    crate::gwn::RegimeCase::classify(t[0], t[1], t[2])
                        .map_err(|e| Error::config("triples", e.to_string()))?;
                }
                nonempty("n_grid", &c.n_grid)?;
                for &n in &c.n_grid {
                    at_least("n_grid", n, 3)?;
                }
                at_least("k_max", c.k_max as u64, 1)?;
            }
        }
        Ok(())
    }

    /// Parses a config file with a single `[study]` table and validates it.
    pub fn from_toml(text: &str) -> Result<StudyConfig> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field") || msg.contains("variant"))
                .unwrap_or("study")
                .to_string();
            Error::config(field, e.to_string().trim().to_string())
        })?;
        file.study.validate()?;
        Ok(file.study)
    }

    /// Normalized config text with every parameter spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(&ConfigFile {
            study: self.clone(),
        })
        .expect("config serializes to TOML")
    }

    /// Parameters as JSON, including the study kind.
    pub fn params_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes to JSON")
    }

    /// SHA-256 of the canonical JSON form of the parameters.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(&self.params_json()).expect("JSON value serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
