//! JSON experiment configuration: a versioned schema validated fully before
//! any computation runs, with every failure naming the offending field.

use serde::{Deserialize, Serialize};
use sgld_core::{
    BoundFn, ChainConfig, LinearModel, MlpSpec, NoiseModel, RegressionModel, StreamModel, TamedMlp,
    UntamedMlp, UpdateModel,
};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A model the runner can drive; boxed because the config picks it at
/// runtime.
pub type BoxedModel = Box<dyn UpdateModel + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    pub model: ModelSpec,
    pub stream: StreamSpec,
    pub noise: NoiseSpec,
    pub chain: ChainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minorize: Option<MinorizeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv: Option<TvSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Linear {
        d: usize,
    },
    Regression {
        d0: usize,
        d1: usize,
        kappa: f64,
    },
    TamedMlp {
        dims: Vec<usize>,
        eta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
    },
    UntamedMlp {
        dims: Vec<usize>,
        eta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamSpec {
    IidGaussian {
        m: usize,
    },
    Ar1 {
        m: usize,
        rho: f64,
    },
    Bounded {
        inner: Box<StreamSpec>,
        bound: f64,
    },
    Regression {
        d0: usize,
        d1: usize,
        weights: Vec<f64>,
        label_noise_sd: f64,
        rho: f64,
    },
    Constant {
        value: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian { d: usize },
    GaussianVar2 { d: usize },
    Laplace { d: usize, scale: f64 },
    Zero { d: usize },
}

/// Initial state: either explicit coordinates or a constant fill.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta0Spec {
    Coords(Vec<f64>),
    Fill { value: f64, dim: usize },
}

impl Theta0Spec {
    pub fn materialize(&self) -> Vec<f64> {
        match self {
            Theta0Spec::Coords(c) => c.clone(),
            Theta0Spec::Fill { value, dim } => vec![*value; *dim],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub lambda: f64,
    pub horizon: usize,
    pub theta0: Theta0Spec,
    pub checkpoints: Vec<usize>,
    pub n_chains: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundFnSpec {
    Quadratic { c0: f64, c2: f64 },
    Quartic { c0: f64, c4: f64 },
}

impl BoundFnSpec {
    pub fn build(&self) -> BoundFn {
        match *self {
            BoundFnSpec::Quadratic { c0, c2 } => BoundFn::Quadratic { c0, c2 },
            BoundFnSpec::Quartic { c0, c4 } => BoundFn::Quartic { c0, c4 },
        }
    }
}

/// Constants for `sgld check`: dissipativity (delta, b) and growth
/// (k1, k2, k3, beta), tested on the standard sampling plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub delta: f64,
    pub b: BoundFnSpec,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub beta: f64,
    /// Also run the constant fitter and include its output in the report.
    #[serde(default)]
    pub fit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub delta: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub beta: f64,
    pub b: BoundFnSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<GridVerifySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridVerifySpec {
    pub theta_grid: Vec<Vec<f64>>,
    pub y_grid: Vec<Vec<f64>>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinorizeSpec {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub beta: f64,
    /// Ball index n.
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<MinorizeVerifySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinorizeVerifySpec {
    pub theta_grid: Vec<Vec<f64>>,
    pub y_grid: Vec<Vec<f64>>,
    pub subsets: Vec<SubsetSpec>,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubsetSpec {
    Full,
    UpperHalf,
    SubBall { radius: f64 },
    Empty,
}

impl SubsetSpec {
    pub fn build(&self) -> sgld_core::diagnostics::BallSubset {
        use sgld_core::diagnostics::BallSubset;
        match *self {
            SubsetSpec::Full => BallSubset::Full,
            SubsetSpec::UpperHalf => BallSubset::UpperHalf,
            SubsetSpec::SubBall { radius } => BallSubset::SubBall { radius },
            SubsetSpec::Empty => BallSubset::Empty,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvSpec {
    pub theta0_b: Theta0Spec,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// When set, the command exits 1 unless the final-checkpoint TV is below
    /// this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_threshold: Option<f64>,
}

fn default_bins() -> usize {
    sgld_core::convergence::DEFAULT_TV_BINS
}

impl ExperimentConfig {
    /// Parses and validates a config, reporting the JSON path of any failure.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let deserializer = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(deserializer)
            .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Semantic validation beyond the schema; every failure names its field.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.version != SCHEMA_VERSION {
            return fail(format!(
                "version: expected {SCHEMA_VERSION}, got {}",
                self.version
            ));
        }
        if !(self.chain.lambda > 0.0 && self.chain.lambda <= 1.0) {
            return fail(format!(
                "chain.lambda: must satisfy 0 < lambda <= 1, got {}",
                self.chain.lambda
            ));
        }
        if self.chain.n_chains == 0 {
            return fail("chain.n_chains: must be at least 1".into());
        }
        if !self.chain.checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return fail("chain.checkpoints: must be strictly increasing".into());
        }
        if let Some(&last) = self.chain.checkpoints.last() {
            if last > self.chain.horizon {
                return fail(format!(
                    "chain.checkpoints: {} exceeds chain.horizon {}",
                    last, self.chain.horizon
                ));
            }
        }
        let theta0 = self.chain.theta0.materialize();
        if theta0.is_empty() {
            return fail("chain.theta0: must have dimension at least 1".into());
        }
        if theta0.iter().any(|x| !x.is_finite()) {
            return fail("chain.theta0: coordinates must be finite".into());
        }
        let (d, m) = self.model_dims()?;
        if theta0.len() != d {
            return fail(format!(
                "chain.theta0: dimension {} does not match model dimension {d}",
                theta0.len()
            ));
        }
        let noise_d = match self.noise {
            NoiseSpec::Gaussian { d } | NoiseSpec::GaussianVar2 { d } | NoiseSpec::Zero { d } => d,
            NoiseSpec::Laplace { d, scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return fail(format!(
                        "noise.scale: must be positive and finite, got {scale}"
                    ));
                }
                d
            }
        };
        if noise_d != d {
            return fail(format!(
                "noise.d: {noise_d} does not match model dimension {d}"
            ));
        }
        let stream_m = self.build_stream()?.dim();
        if stream_m != m {
            return fail(format!(
                "stream: dimension {stream_m} does not match model data dimension {m}"
            ));
        }
        if let Some(check) = &self.check {
            if !check.delta.is_finite() || check.delta <= 0.0 {
                return fail(format!(
                    "check.delta: must be positive, got {}",
                    check.delta
                ));
            }
            validate_growth("check", check.k1, check.k2, check.k3, check.beta)?;
            validate_bound_fn("check.b", &check.b)?;
        }
        if let Some(drift) = &self.drift {
            if !drift.delta.is_finite() || drift.delta <= 0.0 {
                return fail(format!(
                    "drift.delta: must be positive, got {}",
                    drift.delta
                ));
            }
            validate_growth("drift", drift.k1, drift.k2, drift.k3, drift.beta)?;
            validate_bound_fn("drift.b", &drift.b)?;
            if let Some(v) = &drift.verify {
                validate_grid("drift.verify", &v.theta_grid, d, &v.y_grid, m)?;
                if v.samples < 1000 {
                    return fail("drift.verify.samples: must be at least 1000".into());
                }
            }
        }
        if let Some(minorize) = &self.minorize {
            validate_growth(
                "minorize",
                minorize.k1,
                minorize.k2,
                minorize.k3,
                minorize.beta,
            )?;
            if minorize.n == 0 {
                return fail("minorize.n: ball index must be at least 1".into());
            }
            if let Some(v) = &minorize.verify {
                validate_grid("minorize.verify", &v.theta_grid, d, &v.y_grid, m)?;
                if v.samples < 1000 {
                    return fail("minorize.verify.samples: must be at least 1000".into());
                }
                for s in &v.subsets {
                    if let SubsetSpec::SubBall { radius } = s {
                        if !(*radius >= 0.0 && *radius <= minorize.n as f64) {
                            return fail(format!(
                                "minorize.verify.subsets: sub-ball radius {radius} not in [0, n]"
                            ));
                        }
                    }
                }
            }
        }
        if let Some(tv) = &self.tv {
            let b0 = tv.theta0_b.materialize();
            if b0.len() != d {
                return fail(format!(
                    "tv.theta0_b: dimension {} does not match model dimension {d}",
                    b0.len()
                ));
            }
            if b0.iter().any(|x| !x.is_finite()) {
                return fail("tv.theta0_b: coordinates must be finite".into());
            }
            if tv.bins == 0 {
                return fail("tv.bins: must be at least 1".into());
            }
        }
        Ok(())
    }

    /// `(d, m)` of the configured model.
    pub fn model_dims(&self) -> Result<(usize, usize), CliError> {
        let model = self.build_model()?;
        Ok((model.param_dim(), model.data_dim()))
    }

    pub fn build_model(&self) -> Result<BoxedModel, CliError> {
        let model: BoxedModel = match &self.model {
            ModelSpec::Linear { d } => {
                if *d == 0 {
                    return Err(CliError::Config("model.d: must be at least 1".into()));
                }
                Box::new(LinearModel::new(*d))
            }
            ModelSpec::Regression { d0, d1, kappa } => {
                if *d0 == 0 || *d1 == 0 {
                    return Err(CliError::Config(
                        "model.d0/model.d1: must be at least 1".into(),
                    ));
                }
                Box::new(
                    RegressionModel::new(*d0, *d1, *kappa)
                        .map_err(|e| CliError::Config(format!("model: {e}")))?,
                )
            }
            ModelSpec::TamedMlp { dims, eta, r } => {
                let spec = build_mlp_spec(dims, *eta, *r)?;
                Box::new(
                    TamedMlp::new(spec, self.chain.lambda)
                        .map_err(|e| CliError::Config(format!("model: {e}")))?,
                )
            }
            ModelSpec::UntamedMlp { dims, eta, r } => {
                let spec = build_mlp_spec(dims, *eta, *r)?;
                Box::new(UntamedMlp::new(spec))
            }
        };
        Ok(model)
    }

    pub fn build_stream(&self) -> Result<StreamModel, CliError> {
        build_stream_spec(&self.stream)
    }

    pub fn build_noise(&self) -> Result<NoiseModel, CliError> {
        Ok(match self.noise {
            NoiseSpec::Gaussian { d } => NoiseModel::gaussian(d),
            NoiseSpec::GaussianVar2 { d } => NoiseModel::gaussian_var2(d),
            NoiseSpec::Laplace { d, scale } => NoiseModel::laplace(d, scale)
                .map_err(|e| CliError::Config(format!("noise: {e}")))?,
            NoiseSpec::Zero { d } => NoiseModel::zero(d),
        })
    }

    pub fn build_chain_config(&self, seed_override: Option<u64>) -> Result<ChainConfig, CliError> {
        ChainConfig::new(
            self.chain.lambda,
            self.chain.horizon,
            self.chain.theta0.materialize(),
            seed_override.unwrap_or(self.seed),
            self.chain.checkpoints.clone(),
        )
        .map_err(|e| CliError::Config(format!("chain: {e}")))
    }
}

fn build_mlp_spec(dims: &[usize], eta: f64, r: Option<f64>) -> Result<MlpSpec, CliError> {
    let spec =
        MlpSpec::new(dims.to_vec(), eta).map_err(|e| CliError::Config(format!("model: {e}")))?;
    match r {
        Some(r) => spec
            .with_exponent(r)
            .map_err(|e| CliError::Config(format!("model.r: {e}"))),
        None => Ok(spec),
    }
}

fn build_stream_spec(spec: &StreamSpec) -> Result<StreamModel, CliError> {
    let wrap = |e: sgld_core::Error| CliError::Config(format!("stream: {e}"));
    Ok(match spec {
        StreamSpec::IidGaussian { m } => {
            if *m == 0 {
                return Err(CliError::Config("stream.m: must be at least 1".into()));
            }
            StreamModel::iid_gaussian(*m)
        }
        StreamSpec::Ar1 { m, rho } => {
            if *m == 0 {
                return Err(CliError::Config("stream.m: must be at least 1".into()));
            }
            StreamModel::ar1(*m, *rho).map_err(wrap)?
        }
        StreamSpec::Bounded { inner, bound } => {
            let inner = build_stream_spec(inner)?;
            StreamModel::bounded(inner, *bound).map_err(wrap)?
        }
        StreamSpec::Regression {
            d0,
            d1,
            weights,
            label_noise_sd,
            rho,
        } => {
            if *d0 == 0 || *d1 == 0 {
                return Err(CliError::Config(
                    "stream.d0/stream.d1: must be at least 1".into(),
                ));
            }
            StreamModel::regression(*d0, *d1, weights.clone(), *label_noise_sd, *rho)
                .map_err(wrap)?
        }
        StreamSpec::Constant { value } => {
            if value.is_empty() {
                return Err(CliError::Config("stream.value: must be non-empty".into()));
            }
            StreamModel::constant(value.clone()).map_err(wrap)?
        }
    })
}

fn validate_growth(section: &str, k1: f64, k2: f64, k3: f64, beta: f64) -> Result<(), CliError> {
    if !(k1 >= 0.0 && k2 >= 0.0 && k3 >= 0.0) {
        return Err(CliError::Config(format!(
            "{section}.k1/k2/k3: must be nonnegative"
        )));
    }
    if !beta.is_finite() || beta < 1.0 {
        return Err(CliError::Config(format!(
            "{section}.beta: must be at least 1, got {beta}"
        )));
    }
    Ok(())
}

fn validate_bound_fn(field: &str, spec: &BoundFnSpec) -> Result<(), CliError> {
    if !spec.build().is_valid() {
        return Err(CliError::Config(format!(
            "{field}: coefficients must be nonnegative"
        )));
    }
    Ok(())
}

fn validate_grid(
    section: &str,
    thetas: &[Vec<f64>],
    d: usize,
    ys: &[Vec<f64>],
    m: usize,
) -> Result<(), CliError> {
    if thetas.is_empty() || ys.is_empty() {
        return Err(CliError::Config(format!(
            "{section}.theta_grid/y_grid: must be non-empty"
        )));
    }
    if let Some(bad) = thetas.iter().find(|t| t.len() != d) {
        return Err(CliError::Config(format!(
            "{section}.theta_grid: point {bad:?} does not have model dimension {d}"
        )));
    }
    if let Some(bad) = ys.iter().find(|y| y.len() != m) {
        return Err(CliError::Config(format!(
            "{section}.y_grid: point {bad:?} does not have data dimension {m}"
        )));
    }
    Ok(())
}
