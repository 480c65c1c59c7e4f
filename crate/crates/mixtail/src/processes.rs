//! Simulators for the stationary, geometrically mixing sequences used in the
//! experiments: AR(1) paths, independent bivariate pairs, and the
//! partially-linear-model data generator. Every sample is bit-exactly
//! reproducible from (config, n, seed).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng_for};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    Gaussian { sigma: f64 },
    StudentT { df: f64 },
    Uniform { a: f64, b: f64 },
}

impl Innovation {
    fn validate(&self) -> Result<()> {
        match *self {
            Innovation::Gaussian { sigma } if sigma > 0.0 => Ok(()),
            Innovation::Gaussian { .. } => Err(Error::invalid("sigma must be positive")),
            Innovation::StudentT { df } if df > 0.0 => Ok(()),
            Innovation::StudentT { .. } => Err(Error::invalid("df must be positive")),
            Innovation::Uniform { a, b } if a < b => Ok(()),
            Innovation::Uniform { .. } => Err(Error::invalid("need a < b")),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Innovation::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
            Innovation::StudentT { df } => StudentT::new(df).unwrap().sample(rng),
            Innovation::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Draw X₀ from the exact stationary law. Gaussian innovations only.
    ExactStationary,
    /// Start at 0 and discard this many steps.
    BurnIn(usize),
}

pub const DEFAULT_BURN_IN: usize = 1000;

/// Coordinate-wise AR(1): X_{i+1,j} = α_j X_{i,j} + ε_{i+1,j} with
/// independent innovation streams per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AR1Config {
    pub coeffs: Vec<f64>,
    #[serde(default = "default_innovation")]
    pub innovation: Innovation,
    #[serde(default = "default_init")]
    pub init: Init,
}

fn default_innovation() -> Innovation {
    Innovation::Gaussian { sigma: 1.0 }
}

fn default_init() -> Init {
    Init::ExactStationary
}

impl AR1Config {
    pub fn gaussian(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            innovation: Innovation::Gaussian { sigma: 1.0 },
            init: Init::ExactStationary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(Error::Config("need at least one coordinate".into()));
        }
        if self.coeffs.iter().any(|a| a.abs() >= 1.0) {
            return Err(Error::Config("AR(1) requires |alpha| < 1".into()));
        }
        self.innovation.validate()?;
        if matches!(self.init, Init::ExactStationary)
            && !matches!(self.innovation, Innovation::Gaussian { .. })
        {
            return Err(Error::Config(
                "exact stationary initialization is only available for gaussian innovations"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// A simulated path plus everything needed to regenerate it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessSample {
    pub data: Vec<Vec<f64>>,
    pub config: AR1Config,
    pub seed: u64,
}

impl ProcessSample {
    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn d(&self) -> usize {
        self.data.first().map_or(0, |r| r.len())
    }

    /// Column-ℓ pairs (x, y) view for bivariate statistics.
    pub fn as_pairs(&self) -> Result<Vec<(f64, f64)>> {
        if self.d() != 2 {
            return Err(Error::invalid("as_pairs requires a 2-column sample"));
        }
        Ok(self.data.iter().map(|r| (r[0], r[1])).collect())
    }
}

/// Simulates n steps of the stationary AR(1); each coordinate owns a derived
/// stream so adding coordinates never perturbs existing ones.
pub fn simulate_ar1(config: &AR1Config, n: usize, seed: u64) -> Result<ProcessSample> {
    config.validate()?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let d = config.coeffs.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for (j, &alpha) in config.coeffs.iter().enumerate() {
        let mut rng = rng_for(seed, 0x6172_3100 + j as u64, 0);
        let mut x = match config.init {
            Init::ExactStationary => {
                let sigma = match config.innovation {
                    Innovation::Gaussian { sigma } => sigma,
                    _ => unreachable!(),
                };
                let z: f64 = rng.sample(StandardNormal);
                z * sigma / (1.0 - alpha * alpha).sqrt()
            }
            Init::BurnIn(len) => {
                let mut x = 0.0;
                for _ in 0..len {
                    x = alpha * x + config.innovation.sample(&mut rng);
                }
                x
            }
        };
        let mut col = Vec::with_capacity(n);
        for _ in 0..n {
            x = alpha * x + config.innovation.sample(&mut rng);
            col.push(x);
        }
        cols.push(col);
    }
    let data: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Ok(ProcessSample { data, config: config.clone(), seed })
}

/// One bivariate pair: Gaussian AR(1) coordinates with the given
/// autoregressive coefficients, whose innovation streams share correlation
/// `innovation_correlation` (0 under the independence null).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub alpha: (f64, f64),
    pub innovation_correlation: f64,
}

impl PairConfig {
    pub fn null_hypothesis(alpha1: f64, alpha2: f64) -> Self {
        Self { alpha: (alpha1, alpha2), innovation_correlation: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.0.abs() >= 1.0 || self.alpha.1.abs() >= 1.0 {
            return Err(Error::Config("AR(1) requires |alpha| < 1".into()));
        }
        if self.innovation_correlation.abs() > 1.0 {
            return Err(Error::Config("correlation must lie in [-1, 1]".into()));
        }
        Ok(())
    }
}

/// Simulates one pair with exact stationary start. Coordinate 2's driving
/// noise is c·(coordinate 1's noise) + √(1−c²)·(own noise), at every step
/// including the initial state, so c = 1 with equal α yields identical
/// coordinates and c = 0 yields independent ones.
pub fn simulate_pair(config: &PairConfig, n: usize, seed: u64) -> Result<ProcessSample> {
    config.validate()?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let c = config.innovation_correlation;
    let root = (1.0 - c * c).sqrt();
    let (a1, a2) = config.alpha;
    let mut rng = rng_for(seed, 0x7061_6972, 0);
    let draw = |rng: &mut ChaCha8Rng| -> (f64, f64) {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        (z1, c * z1 + root * z2)
    };
    let (z1, z2) = draw(&mut rng);
    let mut x1 = z1 / (1.0 - a1 * a1).sqrt();
    let mut x2 = z2 / (1.0 - a2 * a2).sqrt();
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let (e1, e2) = draw(&mut rng);
        x1 = a1 * x1 + e1;
        x2 = a2 * x2 + e2;
        data.push(vec![x1, x2]);
    }
    Ok(ProcessSample {
        data,
        config: AR1Config::gaussian(vec![a1, a2]),
        seed,
    })
}

/// p mutually independent bivariate pairs; pair ℓ's stream is derived from
/// (seed, ℓ), so existing pairs are unchanged when p grows.
pub fn simulate_bivariate_pairs(
    p: usize,
    config: &PairConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<ProcessSample>> {
    if p == 0 {
        return Err(Error::invalid("p must be at least 1"));
    }
    (0..p)
        .map(|l| simulate_pair(config, n, derive_seed(seed, 0x6269_7661, l as u64)))
        .collect()
}

/// The nonparametric component of the partially linear model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GFn {
    /// g(w) = 2·sin(w), the Lipschitz default.
    TwoSin,
    Zero,
}

impl GFn {
    pub fn eval(&self, w: f64) -> f64 {
        match self {
            GFn::TwoSin => 2.0 * w.sin(),
            GFn::Zero => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLRSimConfig {
    pub beta_star: Vec<f64>,
    pub g_fn: GFn,
    /// AR(1) coefficient shared by the p design coordinates.
    pub design_alpha: f64,
    /// AR(1) coefficient of the scalar W sequence.
    pub w_alpha: f64,
    pub noise_sigma: f64,
}

impl PLRSimConfig {
    /// Default experiment design: s nonzeros alternating ±2, AR(0.5) design.
    pub fn standard(p: usize, s: usize) -> Result<Self> {
        if s > p {
            return Err(Error::invalid("need s <= p"));
        }
        let mut beta = vec![0.0; p];
        for (k, b) in beta.iter_mut().take(s).enumerate() {
            *b = if k % 2 == 0 { 2.0 } else { -2.0 };
        }
        Ok(Self {
            beta_star: beta,
            g_fn: GFn::TwoSin,
            design_alpha: 0.5,
            w_alpha: 0.5,
            noise_sigma: 1.0,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PLRData {
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub config: PLRSimConfig,
    pub seed: u64,
}

/// Simulates Y_i = X_iᵀβ* + g(W_i) + ε_i with AR(1) design and W, and i.i.d.
/// Gaussian noise independent of (X, W).
pub fn simulate_plr(config: &PLRSimConfig, n: usize, seed: u64) -> Result<PLRData> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if config.noise_sigma < 0.0 {
        return Err(Error::invalid("noise_sigma must be nonnegative"));
    }
    let p = config.beta_star.len();
    let design = AR1Config::gaussian(vec![config.design_alpha; p]);
    let x = simulate_ar1(&design, n, derive_seed(seed, 0x706c_7258, 0))?.data;
    let w_path = simulate_ar1(
        &AR1Config::gaussian(vec![config.w_alpha]),
        n,
        derive_seed(seed, 0x706c_7257, 0),
    )?;
    let w: Vec<f64> = w_path.data.into_iter().map(|r| r[0]).collect();
    let mut noise_rng = rng_for(seed, 0x706c_7245, 0);
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let lin: f64 = crate::numeric::ksum(
                x[i].iter().zip(config.beta_star.iter()).map(|(a, b)| a * b),
            );
            let eps: f64 = noise_rng.sample::<f64, _>(StandardNormal) * config.noise_sigma;
            lin + config.g_fn.eval(w[i]) + eps
        })
        .collect();
    Ok(PLRData { y, x, w, config: config.clone(), seed })
}
