//! Finite, uniformly bounded separable kernel approximations:
//! random Fourier features for smooth kernels, Gaussian mollification for
//! Lipschitz/discontinuous kernels, sum/product combinators, and a
//! grid-based sup-error certifier.

use std::f64::consts::PI;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    eval_kernel, ApproxDomain, EvalFn, KernelSpec, KernelTag, PartSamplerFn, SignPart,
    SpectralDensity, SpectralValueFn, SIGN_PARTS,
};
use crate::numeric::{double_factorial, normal_cdf, simpson, KahanSum};
use crate::seeding::rng_for;

const TWO_PI: f64 = 2.0 * PI;

/// Default calibration constant of the frequency-count heuristic, frozen
/// after tuning against the grid certifier.
pub const DEFAULT_C0: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trig {
    Cos,
    Sin,
}

/// One base function x ↦ cos(2π uᵀx) or sin(2π uᵀx).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub freq: Vec<f64>,
    pub trig: Trig,
}

impl Feature {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let phase: f64 = TWO_PI
            * self
                .freq
                .iter()
                .zip(x.iter())
                .map(|(u, v)| u * v)
                .sum::<f64>();
        match self.trig {
            Trig::Cos => phase.cos(),
            Trig::Sin => phase.sin(),
        }
    }
}

/// One coefficient of the separable form: weight on e_{j₁}⊗…⊗e_{j_m}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub idx: Vec<usize>,
    pub coeff: f64,
}

/// Shift-invariant fast path: contribution c·cos(2πuᵀ(x−y)) + s·sin(2πuᵀ(x−y)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTerm {
    pub freq: Vec<f64>,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumPart {
    pub weight: f64,
    pub kernel: ExpandedKernel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductPart {
    /// Which output argument each part argument binds to (length part.m).
    pub arg_map: Vec<usize>,
    /// Which output coordinate each part coordinate reads (length part.d).
    pub coord_map: Vec<usize>,
    pub sup_bound: f64,
    pub kernel: ExpandedKernel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionBody {
    Separable {
        features: Vec<Feature>,
        terms: Vec<Term>,
        /// Present for m = 2 shift-invariant constructions; must agree with
        /// the separable form by the angle-difference identities.
        radial: Option<Vec<RadialTerm>>,
    },
    Sum {
        parts: Vec<SumPart>,
    },
    Product {
        parts: Vec<ProductPart>,
    },
}

/// A finite separable approximation with certified Condition (A) constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandedKernel {
    pub m: usize,
    pub d: usize,
    pub body: ExpansionBody,
    #[serde(rename = "F")]
    pub f_const: f64,
    #[serde(rename = "B")]
    pub b_const: f64,
    pub mu_a: f64,
    #[serde(rename = "t")]
    pub target_t: f64,
    pub domain: ApproxDomain,
    pub lip_l: Option<f64>,
    pub seed: u64,
}

impl ExpandedKernel {
    /// Direct evaluation of the defining linear combination (separable form
    /// feature-by-feature; parts recursively for combinators).
    pub fn eval_separable(&self, args: &[&[f64]]) -> f64 {
        match &self.body {
            ExpansionBody::Separable { features, terms, .. } => {
                // feature value table: per argument, per feature
                let table: Vec<Vec<f64>> = args
                    .iter()
                    .map(|x| features.iter().map(|f| f.eval(x)).collect())
                    .collect();
                let mut acc = KahanSum::new();
                for term in terms {
                    let mut prod = term.coeff;
                    for (k, &j) in term.idx.iter().enumerate() {
                        prod *= table[k][j];
                    }
                    acc.add(prod);
                }
                acc.value()
            }
            ExpansionBody::Sum { parts } => {
                let mut acc = KahanSum::new();
                for p in parts {
                    acc.add(p.weight * p.kernel.eval_separable(args));
                }
                acc.value()
            }
            ExpansionBody::Product { parts } => {
                let mut prod = 1.0;
                for p in parts {
                    let sub = map_args(p, args);
                    let refs: Vec<&[f64]> = sub.iter().map(|a| a.as_slice()).collect();
                    prod *= p.kernel.eval_separable(&refs);
                }
                prod
            }
        }
    }

    /// Evaluation through the radial fast path where available.
    pub fn eval(&self, args: &[&[f64]]) -> f64 {
        match &self.body {
            ExpansionBody::Separable { radial: Some(r), .. } if self.m == 2 => {
                let delta: Vec<f64> = (0..self.d).map(|l| args[0][l] - args[1][l]).collect();
                eval_radial(r, &delta)
            }
            ExpansionBody::Sum { parts } => {
                let mut acc = KahanSum::new();
                for p in parts {
                    acc.add(p.weight * p.kernel.eval(args));
                }
                acc.value()
            }
            ExpansionBody::Product { parts } => {
                let mut prod = 1.0;
                for p in parts {
                    let sub = map_args(p, args);
                    let refs: Vec<&[f64]> = sub.iter().map(|a| a.as_slice()).collect();
                    prod *= p.kernel.eval(&refs);
                }
                prod
            }
            _ => self.eval_separable(args),
        }
    }

    /// Σ |f_{j₁..j_m}| over the flattened expansion.
    pub fn coeff_abs_sum(&self) -> f64 {
        match &self.body {
            ExpansionBody::Separable { terms, .. } => {
                terms.iter().map(|t| t.coeff.abs()).sum()
            }
            ExpansionBody::Sum { parts } => parts
                .iter()
                .map(|p| p.weight.abs() * p.kernel.coeff_abs_sum())
                .sum(),
            ExpansionBody::Product { parts } => {
                parts.iter().map(|p| p.kernel.coeff_abs_sum()).product()
            }
        }
    }

    /// Number of base functions used (recursively summed over parts).
    pub fn k_features(&self) -> usize {
        match &self.body {
            ExpansionBody::Separable { features, .. } => features.len(),
            ExpansionBody::Sum { parts } => {
                parts.iter().map(|p| p.kernel.k_features()).sum()
            }
            ExpansionBody::Product { parts } => {
                parts.iter().map(|p| p.kernel.k_features()).sum()
            }
        }
    }

    pub fn with_target(mut self, t: f64) -> Self {
        self.target_t = t;
        self
    }

    pub fn with_domain(mut self, dom: ApproxDomain) -> Self {
        self.domain = dom;
        self
    }
}

fn map_args(part: &ProductPart, args: &[&[f64]]) -> Vec<Vec<f64>> {
    part.arg_map
        .iter()
        .map(|&ai| part.coord_map.iter().map(|&ci| args[ai][ci]).collect())
        .collect()
}

fn eval_radial(terms: &[RadialTerm], delta: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for t in terms {
        let phase: f64 = TWO_PI
            * t.freq
                .iter()
                .zip(delta.iter())
                .map(|(u, v)| u * v)
                .sum::<f64>();
        acc.add(t.cos_coeff * phase.cos() + t.sin_coeff * phase.sin());
    }
    acc.value()
}

/// Empirical certificate of the sup-error over the approximation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub grid_sup_error: f64,
    pub grid_resolution: usize,
    pub k_used: usize,
    pub seed: u64,
    pub target_t: f64,
    pub pass: bool,
}

/// (Γ₁(n), Γ₂(n)): the polar-coordinate surface constant and the mean norm
/// of an n-dimensional standard normal, via double factorials.
pub fn gamma_constants(n: usize) -> (f64, f64) {
    assert!(n >= 1);
    let n_i = n as i64;
    let g1 = if n % 2 == 0 {
        TWO_PI.powi(n_i as i32 / 2) / double_factorial(n_i - 2)
    } else {
        2.0 * TWO_PI.powi((n_i as i32 - 1) / 2) / double_factorial(n_i - 2)
    };
    let ratio = double_factorial(n_i - 1) / double_factorial(n_i - 2);
    let g2 = if n % 2 == 0 {
        ratio * TWO_PI.sqrt() / 2.0
    } else {
        ratio * 2.0 / TWO_PI.sqrt()
    };
    (g1, g2)
}

fn require_spectral(spec: &KernelSpec) -> Result<&SpectralDensity> {
    spec.spectral.as_ref().ok_or_else(|| {
        Error::Unsupported(format!("kernel {} has no spectral density", spec.id))
    })
}

/// Positive-definite path: K frequencies from f̂₀/f₀(0), 2K trig bases,
/// coefficients f₀(0)/K on the matched cos–cos and sin–sin pairs.
pub fn rff_expand_pd(
    spec: &KernelSpec,
    m_box: f64,
    t: f64,
    k: usize,
    seed: u64,
) -> Result<ExpandedKernel> {
    if !spec.has_tag(KernelTag::PositiveDefinite) || !spec.has_tag(KernelTag::ShiftInvariant) {
        return Err(Error::Unsupported(format!(
            "kernel {} is not a positive-definite shift-invariant kernel",
            spec.id
        )));
    }
    if t <= 0.0 || k == 0 {
        return Err(Error::invalid("need t > 0 and K >= 1"));
    }
    let sd = require_spectral(spec)?;
    if sd.mass(SignPart::RealNeg) > 0.0
        || sd.mass(SignPart::ImagPos) > 0.0
        || sd.mass(SignPart::ImagNeg) > 0.0
    {
        return Err(Error::Unsupported(
            "transform has nontrivial sign parts; use the general path".into(),
        ));
    }
    let f00 = sd.mass(SignPart::RealPos);
    let mut rng = rng_for(seed, 0x7066_7265, 0);
    let mut features = Vec::with_capacity(2 * k);
    let mut terms = Vec::with_capacity(2 * k);
    let mut radial = Vec::with_capacity(k);
    let coeff = f00 / k as f64;
    let mut max_norm: f64 = 0.0;
    for j in 0..k {
        let u = sd.sample(SignPart::RealPos, &mut rng)?;
        max_norm = max_norm.max(u.iter().map(|x| x * x).sum::<f64>().sqrt());
        features.push(Feature { freq: u.clone(), trig: Trig::Cos });
        features.push(Feature { freq: u.clone(), trig: Trig::Sin });
        terms.push(Term { idx: vec![2 * j, 2 * j], coeff });
        terms.push(Term { idx: vec![2 * j + 1, 2 * j + 1], coeff });
        radial.push(RadialTerm { freq: u, cos_coeff: coeff, sin_coeff: 0.0 });
    }
    Ok(ExpandedKernel {
        m: 2,
        d: spec.d,
        body: ExpansionBody::Separable { features, terms, radial: Some(radial) },
        f_const: 2.0 * f00,
        b_const: 1.0,
        mu_a: 1.0,
        target_t: t,
        domain: ApproxDomain::boxed(2, spec.d, m_box),
        lip_l: Some(TWO_PI * max_norm),
        seed,
    })
}

/// General four-sign-part path for order-2 shift-invariant kernels with an
/// absolutely integrable transform: per-part Monte Carlo averages
/// A_g⁺·cos − A_g⁻·cos − A_h⁺·sin + A_h⁻·sin, expanded into per-argument
/// trig bases by the angle-difference identities.
pub fn rff_expand_general(
    spec: &KernelSpec,
    m_box: f64,
    t: f64,
    d_parts: [usize; 4],
    seed: u64,
) -> Result<ExpandedKernel> {
    if spec.m != 2 || !spec.has_tag(KernelTag::ShiftInvariant) {
        return Err(Error::Unsupported(
            "the general sampler covers order-2 shift-invariant kernels".into(),
        ));
    }
    if t <= 0.0 {
        return Err(Error::invalid("need t > 0"));
    }
    let sd = require_spectral(spec)?;
    if !sd.is_integrable() {
        return Err(Error::Unsupported(format!(
            "transform of {} is not absolutely integrable; mollify first",
            spec.id
        )));
    }
    let mut features = Vec::new();
    let mut terms = Vec::new();
    let mut radial = Vec::new();
    let mut max_norm: f64 = 0.0;
    for (pi, &part) in SIGN_PARTS.iter().enumerate() {
        let mass = sd.mass(part);
        let count = d_parts[pi];
        if mass <= 1e-14 || count == 0 {
            if mass > 1e-14 && count == 0 {
                return Err(Error::invalid(format!(
                    "sign part {part:?} has mass {mass} but zero sample budget"
                )));
            }
            continue;
        }
        let mut rng = rng_for(seed, 0x6672_6571 + pi as u64, 0);
        // Contribution sign of the part in the inversion formula.
        let (is_cos, sign) = match part {
            SignPart::RealPos => (true, 1.0),
            SignPart::RealNeg => (true, -1.0),
            SignPart::ImagPos => (false, -1.0),
            SignPart::ImagNeg => (false, 1.0),
        };
        let coeff = sign * mass / count as f64;
        for _ in 0..count {
            let u = sd.sample(part, &mut rng)?;
            max_norm = max_norm.max(u.iter().map(|x| x * x).sum::<f64>().sqrt());
            let base = features.len();
            features.push(Feature { freq: u.clone(), trig: Trig::Cos });
            features.push(Feature { freq: u.clone(), trig: Trig::Sin });
            if is_cos {
                // cos(a-b) = cos a cos b + sin a sin b
                terms.push(Term { idx: vec![base, base], coeff });
                terms.push(Term { idx: vec![base + 1, base + 1], coeff });
                radial.push(RadialTerm { freq: u, cos_coeff: coeff, sin_coeff: 0.0 });
            } else {
                // sin(a-b) = sin a cos b - cos a sin b
                terms.push(Term { idx: vec![base + 1, base], coeff });
                terms.push(Term { idx: vec![base, base + 1], coeff: -coeff });
                radial.push(RadialTerm { freq: u, cos_coeff: 0.0, sin_coeff: coeff });
            }
        }
    }
    if features.is_empty() {
        return Err(Error::invalid("no sign part received a sample budget"));
    }
    Ok(ExpandedKernel {
        m: 2,
        d: spec.d,
        body: ExpansionBody::Separable { features, terms, radial: Some(radial) },
        f_const: 4.0 * sd.l1_norm,
        b_const: 1.0,
        mu_a: 1.0,
        target_t: t,
        domain: ApproxDomain::boxed(2, spec.d, m_box),
        lip_l: Some(TWO_PI * max_norm),
        seed,
    })
}

/// Frequency-count heuristic
/// K = ⌈c₀·(md·‖f̂‖²/t²)·log(8π·c·diam·‖f̂‖^{1−1/q}·μ_q/t)⌉
/// with diam = 2M√(md) and c = 3√(md/π).
#[allow(clippy::too_many_arguments)]
pub fn sample_size_heuristic(
    t: f64,
    m_box: f64,
    m: usize,
    d: usize,
    q: f64,
    mu_q: f64,
    l1_norm: f64,
    c0: f64,
) -> usize {
    assert!(t > 0.0 && m_box > 0.0 && mu_q > 0.0 && l1_norm > 0.0 && q >= 1.0);
    let md = (m * d) as f64;
    let diam = 2.0 * m_box * md.sqrt();
    let c = 3.0 * (md / PI).sqrt();
    let logarg = 8.0 * PI * c * diam * l1_norm.powf(1.0 - 1.0 / q) * mu_q / t;
    let k = c0 * (md * l1_norm * l1_norm / (t * t)) * logarg.max(2.0).ln();
    k.ceil().max(1.0) as usize
}

/// Mollification bandwidth for Lipschitz kernels: h = t/(2Γ₂(md)L).
pub fn choose_h_lipschitz(l: f64, t: f64, md: usize) -> f64 {
    assert!(l > 0.0 && t > 0.0);
    t / (2.0 * gamma_constants(md).1 * l)
}

/// Mollification bandwidth for piecewise-constant kernels:
/// h = M₂·log^{−1/2}(2dΔ^d/t ∨ 2)/√2.
pub fn choose_h_discontinuous(m2: f64, d: usize, delta: f64, t: f64) -> f64 {
    assert!(m2 > 0.0 && delta > 0.0 && t > 0.0);
    let arg = (2.0 * d as f64 * delta.powi(d as i32) / t).max(2.0);
    m2 / (std::f64::consts::SQRT_2 * arg.ln().sqrt())
}

/// Inputs for the closed-form F of each expansion regime.
#[derive(Clone, Copy, Debug)]
pub enum ExpansionRegime {
    /// Smooth kernels: F = 2^m‖f̂‖_{L¹}.
    B1 { m: usize, l1_norm: f64 },
    /// Lipschitz kernels, fixed ε: F = (1+ε⁻¹)·2^m·Γ₁(md)·L_F.
    B2 { m: usize, md: usize, epsilon: f64, l_f: f64 },
    /// Lipschitz kernels, tuned: F = 2^{m+1}·Γ₁(md)·L_F·log(2Γ₂(md)L/t ∨ 2).
    B3 { m: usize, md: usize, l_f: f64, lip: f64, t: f64 },
    /// Piecewise-constant d = 1 factor: F = 4·(w + 4C·log(1/h ∨ 2)) where
    /// w = ∫_{−1}^1|ĥ|.
    B4 { window_l1: f64, c: f64, h: f64 },
}

/// Closed-form Condition (A) constant F for the requested regime.
pub fn expansion_f(regime: ExpansionRegime) -> Result<f64> {
    let f = match regime {
        ExpansionRegime::B1 { m, l1_norm } => {
            if l1_norm <= 0.0 {
                return Err(Error::invalid("need l1_norm > 0"));
            }
            2f64.powi(m as i32) * l1_norm
        }
        ExpansionRegime::B2 { m, md, epsilon, l_f } => {
            if epsilon <= 0.0 || l_f <= 0.0 {
                return Err(Error::invalid("need epsilon > 0 and L_F > 0"));
            }
            (1.0 + 1.0 / epsilon) * 2f64.powi(m as i32) * gamma_constants(md).0 * l_f
        }
        ExpansionRegime::B3 { m, md, l_f, lip, t } => {
            if l_f <= 0.0 || lip <= 0.0 || t <= 0.0 {
                return Err(Error::invalid("need L_F, L, t > 0"));
            }
            let (g1, g2) = gamma_constants(md);
            2f64.powi(m as i32 + 1) * g1 * l_f * (2.0 * g2 * lip / t).max(2.0).ln()
        }
        ExpansionRegime::B4 { window_l1, c, h } => {
            if window_l1 <= 0.0 || c <= 0.0 || h <= 0.0 {
                return Err(Error::invalid("need window, C, h > 0"));
            }
            4.0 * (window_l1 + 4.0 * c * (1.0 / h).max(2.0).ln())
        }
    };
    Ok(f)
}

/// Lipschitz constant for Condition (A′) under τ-mixing:
/// L = [μ_q^q·md·‖f̂‖²/t² · log(48πM·md·‖f̂‖^{1−1/q}·μ_q/t)]^{1/q}.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_constant_tau(
    t: f64,
    m_box: f64,
    m: usize,
    d: usize,
    q: f64,
    mu_q: f64,
    l1_norm: f64,
) -> f64 {
    assert!(t > 0.0 && m_box > 0.0 && mu_q > 0.0 && l1_norm > 0.0 && q >= 1.0);
    let md = (m * d) as f64;
    let logarg = 48.0 * PI * m_box * md * l1_norm.powf(1.0 - 1.0 / q) * mu_q / t;
    (mu_q.powf(q) * md * l1_norm * l1_norm / (t * t) * logarg.max(2.0).ln()).powf(1.0 / q)
}

// ---------------------------------------------------------------------------
// Mollification.

fn damp(h: f64, u: &[f64]) -> f64 {
    (-2.0 * PI * PI * h * h * u.iter().map(|x| x * x).sum::<f64>()).exp()
}

/// Gaussian mollification: convolves the kernel's shift part with a
/// N(0, h²I) density; the transform picks up the factor exp(−2π²h²‖u‖²).
pub fn mollify(spec: &KernelSpec, h: f64) -> Result<KernelSpec> {
    if h <= 0.0 {
        return Err(Error::invalid("need h > 0"));
    }
    if !spec.has_tag(KernelTag::ShiftInvariant) {
        return Err(Error::Unsupported(
            "mollification is implemented for shift-invariant kernels".into(),
        ));
    }
    let sd = require_spectral(spec)?;
    let inner_value = sd.value.clone();
    let hh = h;
    let value: SpectralValueFn = Arc::new(move |u: &[f64]| {
        let (re, im) = inner_value(u);
        let w = damp(hh, u);
        (re * w, im * w)
    });

    let d = spec.d;
    let (eval, masses, sampler): (EvalFn, [f64; 4], Option<PartSamplerFn>) =
        match spec.id.as_str() {
            "gaussian" => {
                let s2 = 1.0 + h * h;
                let eval: EvalFn = Arc::new(move |args: &[&[f64]]| {
                    let q: f64 = (0..d)
                        .map(|l| (args[0][l] - args[1][l]).powi(2))
                        .sum();
                    s2.powf(-(d as f64) / 2.0) * (-q / (2.0 * s2)).exp()
                });
                let mass = s2.powf(-(d as f64) / 2.0);
                let scale = 1.0 / (TWO_PI * s2.sqrt());
                let sampler: PartSamplerFn = Arc::new(move |_p, rng: &mut ChaCha8Rng| {
                    (0..d)
                        .map(|_| {
                            let z: f64 = rand::Rng::sample(rng, rand_distr::StandardNormal);
                            z * scale
                        })
                        .collect()
                });
                (eval, [mass, 0.0, 0.0, 0.0], Some(sampler))
            }
            "laplacian" | "cauchy" => {
                let base_eval = spec.eval.clone();
                let eval: EvalFn = mollified_eval_quadrature(base_eval, d, h)?;
                let axis_mass = match spec.id.as_str() {
                    "laplacian" => simpson(
                        |u| 2.0 / (1.0 + 4.0 * PI * PI * u * u) * damp(h, &[u]),
                        -600.0,
                        600.0,
                        400_000,
                    ),
                    _ => simpson(
                        |u| TWO_PI * (-TWO_PI * u.abs()).exp() * damp(h, &[u]),
                        -60.0,
                        60.0,
                        200_000,
                    ),
                };
                let mass = axis_mass.powi(d as i32);
                let base_sampler = sd
                    .sampler
                    .clone()
                    .ok_or_else(|| Error::Unsupported("no base sampler".into()))?;
                let sampler = rejection_sampler(base_sampler, h);
                (eval, [mass, 0.0, 0.0, 0.0], Some(sampler))
            }
            "box1" => {
                let eval: EvalFn = Arc::new(move |args: &[&[f64]]| {
                    let x = args[0][0] - args[1][0];
                    normal_cdf((1.0 - x) / hh) + normal_cdf((1.0 + x) / hh) - 1.0
                });
                let value2 = value.clone();
                let cut = grid_cut(h);
                let (masses, sampler) = crate::kernel::signed_parts_1d(
                    move |u| value2(&[u]),
                    -cut,
                    cut,
                    1 << 17,
                );
                (eval, masses, Some(sampler))
            }
            "truncated_sign" => {
                // Read the truncation radius back off the registered jumps.
                let m1 = spec
                    .jump_points
                    .as_ref()
                    .and_then(|j| j[0].iter().cloned().fold(None, |a: Option<f64>, b| {
                        Some(a.map_or(b.abs(), |x| x.max(b.abs())))
                    }))
                    .unwrap_or(0.0)
                    / 2.0;
                let eval: EvalFn = Arc::new(move |args: &[&[f64]]| {
                    let x = args[0][0] - args[1][0];
                    2.0 * normal_cdf(x / hh)
                        - normal_cdf((x - 2.0 * m1) / hh)
                        - normal_cdf((x + 2.0 * m1) / hh)
                });
                let value2 = value.clone();
                let cut = grid_cut(h);
                let (masses, sampler) = crate::kernel::signed_parts_1d(
                    move |u| value2(&[u]),
                    -cut,
                    cut,
                    1 << 17,
                );
                (eval, masses, Some(sampler))
            }
            _ if d == 1 => {
                let base_eval = spec.eval.clone();
                let eval: EvalFn = mollified_eval_quadrature(base_eval, 1, h)?;
                let value2 = value.clone();
                let cut = grid_cut(h).max(250.0);
                let (masses, sampler) = crate::kernel::signed_parts_1d(
                    move |u| value2(&[u]),
                    -cut,
                    cut,
                    1 << 17,
                );
                (eval, masses, Some(sampler))
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "no mollification rule for kernel {other} in dimension {d}"
                )));
            }
        };

    let l1 = masses.iter().sum();
    let mut tags = spec.tags.clone();
    tags.remove(&KernelTag::PiecewiseConstantFactors);
    Ok(KernelSpec {
        id: format!("{}_mollified", spec.id),
        m: 2,
        d,
        eval,
        tags,
        spectral: Some(SpectralDensity { dim: d, value, masses, l1_norm: l1, sampler }),
        jump_points: None,
        sup_bound: spec.sup_bound,
    })
}

/// Frequency window beyond which the mollifier factor is below ~1e-16.
fn grid_cut(h: f64) -> f64 {
    (37.0 / (2.0 * PI * PI * h * h)).sqrt() + 5.0
}

/// E f(x − hZ, y) by 1-d Gauss quadrature per coordinate (only d = 1 and the
/// shared-shift structure are needed here).
fn mollified_eval_quadrature(base: EvalFn, d: usize, h: f64) -> Result<EvalFn> {
    if d != 1 {
        return Err(Error::Unsupported(
            "quadrature mollification of a multi-dimensional kernel".into(),
        ));
    }
    Ok(Arc::new(move |args: &[&[f64]]| {
        let delta = args[0][0] - args[1][0];
        simpson(
            |z| {
                let shifted = [delta - h * z];
                let zero = [0.0];
                let a: [&[f64]; 2] = [&shifted, &zero];
                base(&a) * crate::numeric::normal_pdf(z)
            },
            -8.0,
            8.0,
            400,
        )
    }))
}

/// Rejection against the mollifier factor, with a fallback error if the
/// acceptance rate collapses.
fn rejection_sampler(base: PartSamplerFn, h: f64) -> PartSamplerFn {
    Arc::new(move |part: SignPart, rng: &mut ChaCha8Rng| {
        for _ in 0..100_000 {
            let u = base(part, rng);
            let accept: f64 = rand::Rng::random(rng);
            if accept < damp(h, &u) {
                return u;
            }
        }
        panic!("rejection sampling against the mollifier stalled (acceptance < 1e-3); use a grid sampler");
    })
}

// ---------------------------------------------------------------------------
// Combinators.

/// Weighted sum Σ λ_i f̃_i of expansions sharing the same arguments.
pub fn combine_add(parts: &[(f64, ExpandedKernel)], t: f64) -> Result<ExpandedKernel> {
    if parts.is_empty() {
        return Err(Error::invalid("need at least one part"));
    }
    let (m, d) = (parts[0].1.m, parts[0].1.d);
    if parts.iter().any(|(_, p)| p.m != m || p.d != d) {
        return Err(Error::invalid("additive parts must share order and dimension"));
    }
    let lam_sum: f64 = parts.iter().map(|(l, _)| l.abs()).sum();
    let budget = t / lam_sum;
    for (l, p) in parts {
        if p.target_t > budget * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "part with weight {l} has budget t_i = {} > t/Σ|λ| = {budget}",
                p.target_t
            )));
        }
    }
    let f_const: f64 = parts.iter().map(|(l, p)| l.abs() * p.f_const).sum();
    let b_const = parts.iter().map(|(_, p)| p.b_const).fold(0.0, f64::max);
    let mu_a = parts.iter().map(|(_, p)| p.mu_a).fold(0.0, f64::max);
    let lip = parts
        .iter()
        .map(|(_, p)| p.lip_l)
        .try_fold(0.0f64, |a, l| l.map(|v| a.max(v)));
    let halfwidth = parts
        .iter()
        .map(|(_, p)| p.domain.halfwidth)
        .fold(f64::INFINITY, f64::min);
    let margin = parts
        .iter()
        .map(|(_, p)| p.domain.exclusion_margin)
        .fold(0.0, f64::max);
    let mut jumps = vec![Vec::new(); d];
    for (_, p) in parts {
        for (l, js) in p.domain.jumps.iter().enumerate() {
            for &j in js {
                if !jumps[l].iter().any(|&x: &f64| (x - j).abs() < 1e-12) {
                    jumps[l].push(j);
                }
            }
        }
    }
    let seed = parts[0].1.seed;
    Ok(ExpandedKernel {
        m,
        d,
        body: ExpansionBody::Sum {
            parts: parts
                .iter()
                .map(|(l, p)| SumPart { weight: *l, kernel: p.clone() })
                .collect(),
        },
        f_const,
        b_const,
        mu_a,
        target_t: t,
        domain: ApproxDomain { m, d, halfwidth, exclusion_margin: margin, jumps },
        lip_l: lip,
        seed,
    })
}

/// Product ∏ f̃_i of expansions over (possibly overlapping) output arguments
/// and disjoint output coordinates. `sup_bound` of each part must dominate
/// its sup norm and be ≥ 1.
pub fn combine_mul(parts: &[ProductPart], t: f64) -> Result<ExpandedKernel> {
    if parts.is_empty() {
        return Err(Error::invalid("need at least one part"));
    }
    let n = parts.len() as f64;
    let prod_mt: f64 = parts.iter().map(|p| p.sup_bound + t).product();
    for p in parts {
        if p.sup_bound < 1.0 {
            return Err(Error::invalid("part sup bounds must be >= 1"));
        }
        if p.arg_map.len() != p.kernel.m || p.coord_map.len() != p.kernel.d {
            return Err(Error::invalid("arg/coord map lengths must match part shape"));
        }
        let budget = t * (p.sup_bound + t) / (n * prod_mt);
        if p.kernel.target_t > budget * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "part budget t_i = {} exceeds allowance {budget}",
                p.kernel.target_t
            )));
        }
    }
    let m = parts
        .iter()
        .flat_map(|p| p.arg_map.iter())
        .max()
        .map_or(0, |&x| x + 1);
    let d = parts
        .iter()
        .flat_map(|p| p.coord_map.iter())
        .max()
        .map_or(0, |&x| x + 1);
    // Coordinates must be disjoint across parts for the product form.
    let mut seen = vec![false; d];
    for p in parts {
        for &c in &p.coord_map {
            if seen[c] {
                return Err(Error::invalid(
                    "product parts must read disjoint output coordinates",
                ));
            }
            seen[c] = true;
        }
    }
    let f_const: f64 = parts.iter().map(|p| p.kernel.f_const).product();
    let b_const = parts.iter().map(|p| p.kernel.b_const).fold(0.0, f64::max);
    let mu_a = parts.iter().map(|p| p.kernel.mu_a).fold(0.0, f64::max);
    let lip = parts
        .iter()
        .map(|p| p.kernel.lip_l)
        .try_fold(0.0f64, |a, l| l.map(|v| a + v));
    let halfwidth = parts
        .iter()
        .map(|p| p.kernel.domain.halfwidth)
        .fold(f64::INFINITY, f64::min);
    let margin = parts
        .iter()
        .map(|p| p.kernel.domain.exclusion_margin)
        .fold(0.0, f64::max);
    let mut jumps = vec![Vec::new(); d];
    for p in parts {
        for (lc, js) in p.kernel.domain.jumps.iter().enumerate() {
            let out = p.coord_map[lc];
            for &j in js {
                if !jumps[out].iter().any(|&x: &f64| (x - j).abs() < 1e-12) {
                    jumps[out].push(j);
                }
            }
        }
    }
    let seed = parts[0].kernel.seed;
    Ok(ExpandedKernel {
        m,
        d,
        body: ExpansionBody::Product { parts: parts.to_vec() },
        f_const,
        b_const,
        mu_a,
        target_t: t,
        domain: ApproxDomain { m, d, halfwidth, exclusion_margin: margin, jumps },
        lip_l: lip,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Certification.

/// Evaluates max |f − f̃| over the tensor grid intersected with the domain,
/// plus 10·grid_res uniform random in-domain points.
pub fn verify_sup_error(
    spec: &KernelSpec,
    expanded: &ExpandedKernel,
    grid_res: usize,
    seed: u64,
) -> Result<ExpansionReport> {
    if grid_res < 16 {
        return Err(Error::invalid("grid resolution must be at least 16"));
    }
    let m = expanded.m;
    let d = expanded.d;
    if spec.m != m || spec.d != d {
        return Err(Error::invalid("kernel and expansion shapes differ"));
    }
    let md = m * d;
    if md > 4 {
        return Err(Error::Unsupported(
            "grid certification refuses md > 4 (curse of dimension)".into(),
        ));
    }
    let dom = &expanded.domain;
    let mw = dom.halfwidth;
    let axis: Vec<f64> = (0..grid_res)
        .map(|i| -mw + 2.0 * mw * i as f64 / (grid_res - 1) as f64)
        .collect();

    let mut sup: f64 = 0.0;
    let mut any = false;

    let radial = match &expanded.body {
        ExpansionBody::Separable { radial: Some(r), .. } if m == 2 && d == 1 => Some(r),
        _ => None,
    };
    if let Some(r) = radial {
        // Difference grid dedup: x_i − y_j hits 2·res−1 values.
        let step = 2.0 * mw / (grid_res - 1) as f64;
        let table: Vec<f64> = (0..(2 * grid_res - 1))
            .map(|k| eval_radial(r, &[(k as i64 - (grid_res as i64 - 1)) as f64 * step]))
            .collect();
        for (i, &x) in axis.iter().enumerate() {
            for (j, &y) in axis.iter().enumerate() {
                let xa = [x];
                let ya = [y];
                let args: [&[f64]; 2] = [&xa, &ya];
                if !dom.contains(&args) {
                    continue;
                }
                any = true;
                let approx = table[i + grid_res - 1 - j];
                let exact = eval_kernel(spec, &args)?;
                sup = sup.max((exact - approx).abs());
            }
        }
    } else {
        // Generic tensor grid over all md axes.
        let total = grid_res.pow(md as u32);
        let mut idx = vec![0usize; md];
        for flat in 0..total {
            let mut rem = flat;
            for slot in idx.iter_mut() {
                *slot = rem % grid_res;
                rem /= grid_res;
            }
            let args_v: Vec<Vec<f64>> = (0..m)
                .map(|k| (0..d).map(|l| axis[idx[k * d + l]]).collect())
                .collect();
            let args: Vec<&[f64]> = args_v.iter().map(|a| a.as_slice()).collect();
            if !dom.contains(&args) {
                continue;
            }
            any = true;
            let err = (eval_kernel(spec, &args)? - expanded.eval(&args)).abs();
            sup = sup.max(err);
        }
    }

    // Random in-domain probes.
    let mut rng = rng_for(seed, 0x6365_7274, 0);
    for _ in 0..(10 * grid_res) {
        let args_v = dom.sample_point(&mut rng)?;
        let args: Vec<&[f64]> = args_v.iter().map(|a| a.as_slice()).collect();
        any = true;
        let err = (eval_kernel(spec, &args)? - expanded.eval(&args)).abs();
        sup = sup.max(err);
    }

    if !any {
        return Err(Error::Domain("domain intersection is empty".into()));
    }
    Ok(ExpansionReport {
        grid_sup_error: sup,
        grid_resolution: grid_res,
        k_used: expanded.k_features(),
        seed,
        target_t: expanded.target_t,
        pass: sup <= expanded.target_t,
    })
}
