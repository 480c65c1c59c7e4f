//! Kernel definitions: closed-form evaluators, structural tags, spectral
//! densities (Fourier transforms of the shift part), and approximation
//! domains with jump exclusions.
//!
//! Fourier convention throughout: f̂(u) = ∫ f(x) e^{-2πi u·x} dx.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_sampler::GridSampler1d;

/// Sign function with sign(0) = 0 (the convention used by the rank kernels).
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelTag {
    ShiftInvariant,
    ProductForm,
    PositiveDefinite,
    PiecewiseConstantFactors,
    Symmetric,
}

pub type EvalFn = Arc<dyn Fn(&[&[f64]]) -> f64 + Send + Sync>;

/// A kernel of order `m` on (ℝ^d)^m.
#[derive(Clone)]
pub struct KernelSpec {
    pub id: String,
    pub m: usize,
    pub d: usize,
    pub eval: EvalFn,
    pub tags: HashSet<KernelTag>,
    /// Transform of the shift part f0 (shift-invariant kernels only).
    pub spectral: Option<SpectralDensity>,
    /// Per-coordinate jump locations of the piecewise-constant factors.
    pub jump_points: Option<Vec<Vec<f64>>>,
    pub sup_bound: Option<f64>,
}

impl KernelSpec {
    pub fn has_tag(&self, tag: KernelTag) -> bool {
        self.tags.contains(&tag)
    }
}

/// Sign part of a complex transform: f̂ = (g⁺ − g⁻) + i(h⁺ − h⁻).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SignPart {
    RealPos,
    RealNeg,
    ImagPos,
    ImagNeg,
}

pub const SIGN_PARTS: [SignPart; 4] = [
    SignPart::RealPos,
    SignPart::RealNeg,
    SignPart::ImagPos,
    SignPart::ImagNeg,
];

pub type SpectralValueFn = Arc<dyn Fn(&[f64]) -> (f64, f64) + Send + Sync>;
pub type PartSamplerFn = Arc<dyn Fn(SignPart, &mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;

/// Fourier transform of the shift part f0 of a shift-invariant order-2
/// kernel, living on frequencies u ∈ ℝ^d. Masses may be infinite for
/// non-integrable transforms (box, sign); such kernels must be mollified
/// before frequencies can be sampled.
#[derive(Clone)]
pub struct SpectralDensity {
    pub dim: usize,
    pub value: SpectralValueFn,
    /// L¹ masses of (RealPos, RealNeg, ImagPos, ImagNeg).
    pub masses: [f64; 4],
    pub l1_norm: f64,
    pub sampler: Option<PartSamplerFn>,
}

impl SpectralDensity {
    pub fn value_at(&self, u: &[f64]) -> (f64, f64) {
        (self.value)(u)
    }

    pub fn mass(&self, part: SignPart) -> f64 {
        match part {
            SignPart::RealPos => self.masses[0],
            SignPart::RealNeg => self.masses[1],
            SignPart::ImagPos => self.masses[2],
            SignPart::ImagNeg => self.masses[3],
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn is_integrable(&self) -> bool {
        self.l1_norm.is_finite()
    }

    /// Draws one frequency from the normalized |part| density.
    pub fn sample(&self, part: SignPart, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let sampler = self.sampler.as_ref().ok_or_else(|| {
            Error::Unsupported("spectral density has no frequency sampler".into())
        })?;
        if self.mass(part) <= 0.0 {
            return Err(Error::invalid("requested sign part has zero mass"));
        }
        Ok(sampler(part, rng))
    }
}

/// The approximation set C: a box [−M, M]^{md}, minus (optionally) bands of
/// half-width M₂ around registered jump locations of pairwise coordinate
/// differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxDomain {
    pub m: usize,
    pub d: usize,
    pub halfwidth: f64,
    pub exclusion_margin: f64,
    /// jumps[l] lists the difference jump locations for coordinate l.
    pub jumps: Vec<Vec<f64>>,
}

impl ApproxDomain {
    pub fn boxed(m: usize, d: usize, halfwidth: f64) -> Self {
        Self {
            m,
            d,
            halfwidth,
            exclusion_margin: 0.0,
            jumps: vec![Vec::new(); d],
        }
    }

    pub fn with_jumps(m: usize, d: usize, m1: f64, m2: f64, jumps: Vec<Vec<f64>>) -> Self {
        assert_eq!(jumps.len(), d);
        Self {
            m,
            d,
            halfwidth: m1,
            exclusion_margin: m2,
            jumps,
        }
    }

    /// Membership test. Symmetric under permutations of the arguments by
    /// construction (every ordered pair of distinct arguments is checked).
    pub fn contains(&self, args: &[&[f64]]) -> bool {
        if args.len() != self.m || args.iter().any(|a| a.len() != self.d) {
            return false;
        }
        for a in args {
            for &c in a.iter() {
                if c.abs() > self.halfwidth {
                    return false;
                }
            }
        }
        if self.exclusion_margin > 0.0 {
            for i in 0..self.m {
                for j in 0..self.m {
                    if i == j {
                        continue;
                    }
                    for l in 0..self.d {
                        let diff = args[i][l] - args[j][l];
                        for &y in &self.jumps[l] {
                            if (diff - y).abs() < self.exclusion_margin {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Draws a uniform point of the box and retries until it lies in C.
    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        for _ in 0..10_000 {
            let args: Vec<Vec<f64>> = (0..self.m)
                .map(|_| {
                    (0..self.d)
                        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * self.halfwidth)
                        .collect()
                })
                .collect();
            let refs: Vec<&[f64]> = args.iter().map(|a| a.as_slice()).collect();
            if self.contains(&refs) {
                return Ok(args);
            }
        }
        Err(Error::Domain(
            "rejection sampling of the approximation set failed; the exclusion \
             bands leave almost no volume"
                .into(),
        ))
    }
}

/// Evaluates a kernel after validating argument shape.
pub fn eval_kernel(spec: &KernelSpec, args: &[&[f64]]) -> Result<f64> {
    if args.len() != spec.m {
        return Err(Error::invalid(format!(
            "kernel {} has order {}, got {} arguments",
            spec.id,
            spec.m,
            args.len()
        )));
    }
    for a in args {
        if a.len() != spec.d {
            return Err(Error::invalid(format!(
                "kernel {} expects points in R^{}, got dimension {}",
                spec.id,
                spec.d,
                a.len()
            )));
        }
    }
    Ok((spec.eval)(args))
}

/// Membership in the approximation set (free-function form of
/// `ApproxDomain::contains`).
pub fn in_domain(dom: &ApproxDomain, args: &[&[f64]]) -> bool {
    dom.contains(args)
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..m).collect(), &mut out);
    out
}

/// Symmetrized kernel f∘ = (1/m!) Σ_π f(x_{π(1)}, …, x_{π(m)}).
pub fn symmetrize(spec: &KernelSpec) -> KernelSpec {
    if spec.has_tag(KernelTag::Symmetric) {
        return spec.clone();
    }
    let perms = permutations(spec.m);
    let inner = spec.eval.clone();
    let count = perms.len() as f64;
    let eval: EvalFn = Arc::new(move |args: &[&[f64]]| {
        let mut acc = 0.0;
        for p in &perms {
            let permuted: Vec<&[f64]> = p.iter().map(|&i| args[i]).collect();
            acc += inner(&permuted);
        }
        acc / count
    });
    let mut tags = spec.tags.clone();
    tags.insert(KernelTag::Symmetric);
    KernelSpec {
        id: format!("{}_symmetrized", spec.id),
        m: spec.m,
        d: spec.d,
        eval,
        tags,
        spectral: spec.spectral.clone(),
        jump_points: spec.jump_points.clone(),
        sup_bound: spec.sup_bound,
    }
}

/// Returns the closed-form transform of the kernel's shift part.
pub fn spectral_density(spec: &KernelSpec) -> Result<SpectralDensity> {
    spec.spectral.clone().ok_or_else(|| {
        Error::Unsupported(format!(
            "kernel {} carries no closed-form spectral density",
            spec.id
        ))
    })
}

// ---------------------------------------------------------------------------
// Catalog.

/// A Condition (A) constant: either a number or a formula left symbolic
/// because it depends on the target accuracy or the data distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ConstantValue {
    Value(f64),
    Formula(&'static str),
}

impl ConstantValue {
    pub fn as_value(&self) -> Option<f64> {
        match self {
            ConstantValue::Value(v) => Some(*v),
            ConstantValue::Formula(_) => None,
        }
    }
}

impl std::fmt::Display for ConstantValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstantValue::Value(v) => write!(f, "{v}"),
            ConstantValue::Formula(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TableConstants {
    pub f: ConstantValue,
    pub b: ConstantValue,
    pub mu_a: ConstantValue,
}

/// One catalog row: the kernel, a domain template (at reference halfwidth
/// M = 1, margin from the row), and its expansion constants.
#[derive(Clone)]
pub struct CatalogEntry {
    pub spec: KernelSpec,
    pub domain: ApproxDomain,
    pub constants: TableConstants,
}

impl CatalogEntry {
    /// The row's domain rescaled to halfwidth `m1` and margin `m2`.
    pub fn domain_with(&self, m1: f64, m2: f64) -> ApproxDomain {
        ApproxDomain {
            halfwidth: m1,
            exclusion_margin: m2,
            ..self.domain.clone()
        }
    }
}

pub const CATALOG_IDS: [&str; 9] = [
    "linear",
    "gaussian",
    "laplacian",
    "cauchy",
    "hat",
    "cosine",
    "box1",
    "kendall",
    "spearman",
];

fn tags(list: &[KernelTag]) -> HashSet<KernelTag> {
    list.iter().copied().collect()
}

const TWO_PI: f64 = 2.0 * PI;

fn laplace_sample(scale: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * sgn(u) * (1.0 - 2.0 * u.abs()).max(1e-300).ln()
}

fn cauchy_sample(scale: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>();
    scale * (PI * (u - 0.5)).tan()
}

fn shift_eval(d: usize, f0: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> EvalFn {
    Arc::new(move |args: &[&[f64]]| {
        let delta: Vec<f64> = (0..d).map(|l| args[0][l] - args[1][l]).collect();
        f0(&delta)
    })
}

fn gaussian_kernel(d: usize) -> KernelSpec {
    let value: SpectralValueFn = Arc::new(|u: &[f64]| {
        let re = u
            .iter()
            .map(|&ul| TWO_PI.sqrt() * (-2.0 * PI * PI * ul * ul).exp())
            .product();
        (re, 0.0)
    });
    let sampler: PartSamplerFn = {
        let d = d;
        Arc::new(move |_part, rng: &mut ChaCha8Rng| {
            (0..d)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z / TWO_PI
                })
                .collect()
        })
    };
    KernelSpec {
        id: "gaussian".into(),
        m: 2,
        d,
        eval: shift_eval(d, |delta| {
            (-0.5 * delta.iter().map(|x| x * x).sum::<f64>()).exp()
        }),
        tags: tags(&[
            KernelTag::Symmetric,
            KernelTag::ShiftInvariant,
            KernelTag::PositiveDefinite,
            KernelTag::ProductForm,
        ]),
        spectral: Some(SpectralDensity {
            dim: d,
            value,
            masses: [1.0, 0.0, 0.0, 0.0],
            l1_norm: 1.0,
            sampler: Some(sampler),
        }),
        jump_points: None,
        sup_bound: Some(1.0),
    }
}

fn laplacian_kernel(d: usize) -> KernelSpec {
    let value: SpectralValueFn = Arc::new(|u: &[f64]| {
        let re = u
            .iter()
            .map(|&ul| 2.0 / (1.0 + 4.0 * PI * PI * ul * ul))
            .product();
        (re, 0.0)
    });
    let sampler: PartSamplerFn = Arc::new(move |_part, rng: &mut ChaCha8Rng| {
        (0..d).map(|_| cauchy_sample(1.0 / TWO_PI, rng)).collect()
    });
    KernelSpec {
        id: "laplacian".into(),
        m: 2,
        d,
        eval: shift_eval(d, |delta| {
            (-delta.iter().map(|x| x.abs()).sum::<f64>()).exp()
        }),
        tags: tags(&[
            KernelTag::Symmetric,
            KernelTag::ShiftInvariant,
            KernelTag::PositiveDefinite,
            KernelTag::ProductForm,
        ]),
        spectral: Some(SpectralDensity {
            dim: d,
            value,
            masses: [1.0, 0.0, 0.0, 0.0],
            l1_norm: 1.0,
            sampler: Some(sampler),
        }),
        jump_points: None,
        sup_bound: Some(1.0),
    }
}

fn cauchy_kernel(d: usize) -> KernelSpec {
    let value: SpectralValueFn = Arc::new(|u: &[f64]| {
        let re = u
            .iter()
            .map(|&ul| TWO_PI * (-TWO_PI * ul.abs()).exp())
            .product();
        (re, 0.0)
    });
    let sampler: PartSamplerFn = Arc::new(move |_part, rng: &mut ChaCha8Rng| {
        (0..d).map(|_| laplace_sample(1.0 / TWO_PI, rng)).collect()
    });
    let mass = 2f64.powi(d as i32);
    KernelSpec {
        id: "cauchy".into(),
        m: 2,
        d,
        eval: shift_eval(d, |delta| {
            delta.iter().map(|&x| 2.0 / (1.0 + x * x)).product()
        }),
        tags: tags(&[
            KernelTag::Symmetric,
            KernelTag::ShiftInvariant,
            KernelTag::PositiveDefinite,
            KernelTag::ProductForm,
        ]),
        spectral: Some(SpectralDensity {
            dim: d,
            value,
            masses: [mass, 0.0, 0.0, 0.0],
            l1_norm: mass,
            sampler: Some(sampler),
        }),
        jump_points: None,
        sup_bound: Some(mass),
    }
}

fn hat_transform(u: f64) -> f64 {
    if u.abs() < 1e-6 {
        // Series of {1 - cos(2πu)}/(2π²u²) around 0.
        let x = TWO_PI * u;
        1.0 - x * x / 12.0
    } else {
        (1.0 - (TWO_PI * u).cos()) / (2.0 * PI * PI * u * u)
    }
}

fn hat_kernel() -> KernelSpec {
    let value: SpectralValueFn = Arc::new(|u: &[f64]| (hat_transform(u[0]), 0.0));
    let grid = Arc::new(GridSampler1d::from_density(hat_transform, -200.0, 200.0, 1 << 17));
    let sampler: PartSamplerFn = Arc::new(move |_part, rng: &mut ChaCha8Rng| vec![grid.sample(rng)]);
    KernelSpec {
        id: "hat".into(),
        m: 2,
        d: 1,
        eval: shift_eval(1, |delta| {
            let a = delta[0].abs();
            if a <= 1.0 {
                1.0 - a
            } else {
                0.0
            }
        }),
        tags: tags(&[
            KernelTag::Symmetric,
            KernelTag::ShiftInvariant,
            KernelTag::PositiveDefinite,
        ]),
        spectral: Some(SpectralDensity {
            dim: 1,
            value,
            masses: [1.0, 0.0, 0.0, 0.0],
            l1_norm: 1.0,
            sampler: Some(sampler),
        }),
        jump_points: None,
        sup_bound: Some(1.0),
    }
}

fn cosine_transform(u: f64) -> f64 {
    let den = 1.0 - 4.0 * PI * PI * u * u;
    if den.abs() < 1e-8 {
        // Removable singularity at |u| = 1/(2π): ratio of derivatives.
        (PI * PI * u).sin() / (4.0 * u)
    } else {
        2.0 * (PI * PI * u).cos() / den
    }
}

/// Builds the four sign parts of a 1-d transform on a truncated grid,
/// returning masses and a sampler. Parts with negligible mass are dropped.
pub(crate) fn signed_parts_1d(
    f: impl Fn(f64) -> (f64, f64),
    lo: f64,
    hi: f64,
    knots: usize,
) -> ([f64; 4], PartSamplerFn) {
    let tables = [
        GridSampler1d::from_density(|u| f(u).0.max(0.0), lo, hi, knots),
        GridSampler1d::from_density(|u| (-f(u).0).max(0.0), lo, hi, knots),
        GridSampler1d::from_density(|u| f(u).1.max(0.0), lo, hi, knots),
        GridSampler1d::from_density(|u| (-f(u).1).max(0.0), lo, hi, knots),
    ];
    let mut masses = [0.0; 4];
    let mut grids: Vec<Option<Arc<GridSampler1d>>> = Vec::with_capacity(4);
    for (i, g) in tables.into_iter().enumerate() {
        let mass = g.total_mass();
        if mass > 1e-12 {
            masses[i] = mass;
            grids.push(Some(Arc::new(g)));
        } else {
            grids.push(None);
        }
    }
    let sampler: PartSamplerFn = Arc::new(move |part: SignPart, rng: &mut ChaCha8Rng| {
        let idx = match part {
            SignPart::RealPos => 0,
            SignPart::RealNeg => 1,
            SignPart::ImagPos => 2,
            SignPart::ImagNeg => 3,
        };
        let g = grids[idx]
            .as_ref()
            .expect("sampling a sign part of zero mass");
        vec![g.sample(rng)]
    });
    (masses, sampler)
}

fn cosine_kernel() -> KernelSpec {
    let value: SpectralValueFn = Arc::new(|u: &[f64]| (cosine_transform(u[0]), 0.0));
    let (masses, sampler) = signed_parts_1d(|u| (cosine_transform(u), 0.0), -200.0, 200.0, 1 << 17);
    let l1 = masses.iter().sum();
    KernelSpec {
        id: "cosine".into(),
        m: 2,
        d: 1,
        eval: shift_eval(1, |delta| {
            let a = delta[0];
            if a.abs() <= PI / 2.0 {
                a.cos()
            } else {
                0.0
            }
        }),
        tags: tags(&[KernelTag::Symmetric, KernelTag::ShiftInvariant]),
        spectral: Some(SpectralDensity {
            dim: 1,
            value,
            masses,
            l1_norm: l1,
            sampler: Some(sampler),
        }),
        jump_points: None,
        sup_bound: Some(1.0),
    }
}

fn box1_transform(u: f64) -> f64 {
    if u.abs() < 1e-9 {
        2.0 - (TWO_PI * u).powi(2) / 3.0
    } else {
        (TWO_PI * u).sin() / (PI * u)
    }
}

fn box1_kernel() -> KernelSpec {
    let value: SpectralValueFn = Arc::new(|u: &[f64]| (box1_transform(u[0]), 0.0));
    KernelSpec {
        id: "box1".into(),
        m: 2,
        d: 1,
        eval: shift_eval(1, |delta| {
            if delta[0].abs() <= 1.0 {
                1.0
            } else {
                0.0
            }
        }),
        tags: tags(&[
            KernelTag::Symmetric,
            KernelTag::ShiftInvariant,
            KernelTag::PiecewiseConstantFactors,
        ]),
        spectral: Some(SpectralDensity {
            dim: 1,
            value,
            // sin(2πu)/(πu) is not absolutely integrable; mollify first.
            masses: [f64::INFINITY, f64::INFINITY, 0.0, 0.0],
            l1_norm: f64::INFINITY,
            sampler: None,
        }),
        jump_points: Some(vec![vec![-1.0, 1.0]]),
        sup_bound: Some(1.0),
    }
}

/// sign(x - y) truncated to |x - y| ≤ 2 M₁; the per-coordinate factor of the
/// rank kernels. Transform i{cos(4πuM₁) − 1}/(πu), pure imaginary and odd.
pub fn truncated_sign(m1: f64) -> KernelSpec {
    let value: SpectralValueFn = Arc::new(move |u: &[f64]| {
        let u = u[0];
        let im = if u.abs() < 1e-9 {
            // {cos(4πuM₁) − 1}/(πu) → 0 linearly.
            -8.0 * PI * m1 * m1 * u
        } else {
            ((4.0 * PI * u * m1).cos() - 1.0) / (PI * u)
        };
        (0.0, im)
    });
    KernelSpec {
        id: "truncated_sign".into(),
        m: 2,
        d: 1,
        eval: shift_eval(1, move |delta| {
            let x = delta[0];
            if x.abs() <= 2.0 * m1 {
                sgn(x)
            } else {
                0.0
            }
        }),
        tags: tags(&[
            KernelTag::ShiftInvariant,
            KernelTag::PiecewiseConstantFactors,
        ]),
        spectral: Some(SpectralDensity {
            dim: 1,
            value,
            masses: [0.0, 0.0, f64::INFINITY, f64::INFINITY],
            l1_norm: f64::INFINITY,
            sampler: None,
        }),
        jump_points: Some(vec![vec![-2.0 * m1, 0.0, 2.0 * m1]]),
        sup_bound: Some(1.0),
    }
}

fn kendall_kernel() -> KernelSpec {
    KernelSpec {
        id: "kendall".into(),
        m: 2,
        d: 2,
        eval: Arc::new(|args: &[&[f64]]| {
            sgn(args[0][0] - args[1][0]) * sgn(args[0][1] - args[1][1])
        }),
        tags: tags(&[
            KernelTag::Symmetric,
            KernelTag::ShiftInvariant,
            KernelTag::ProductForm,
            KernelTag::PiecewiseConstantFactors,
        ]),
        spectral: None,
        jump_points: Some(vec![vec![0.0], vec![0.0]]),
        sup_bound: Some(1.0),
    }
}

fn spearman_kernel() -> KernelSpec {
    KernelSpec {
        id: "spearman".into(),
        m: 3,
        d: 2,
        eval: Arc::new(|args: &[&[f64]]| {
            sgn(args[0][0] - args[1][0]) * sgn(args[0][1] - args[2][1])
        }),
        tags: tags(&[
            KernelTag::ProductForm,
            KernelTag::PiecewiseConstantFactors,
        ]),
        spectral: None,
        jump_points: Some(vec![vec![0.0], vec![0.0]]),
        sup_bound: Some(1.0),
    }
}

fn linear_kernel(d: usize) -> KernelSpec {
    KernelSpec {
        id: "linear".into(),
        m: 2,
        d,
        eval: Arc::new(|args: &[&[f64]]| {
            args[0].iter().zip(args[1].iter()).map(|(a, b)| a * b).sum()
        }),
        tags: tags(&[KernelTag::Symmetric, KernelTag::PositiveDefinite]),
        spectral: None,
        jump_points: None,
        sup_bound: None,
    }
}

/// Catalog lookup by string id with explicit point dimension. Kernels with a
/// fixed dimension (hat, cosine, box1 at d = 1; kendall, spearman at d = 2)
/// reject any other request.
pub fn catalog_entry(id: &str, d: usize) -> Result<CatalogEntry> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let fixed = |want: usize| -> Result<()> {
        if d != want {
            Err(Error::invalid(format!(
                "kernel {id} is defined for d = {want}, got d = {d}"
            )))
        } else {
            Ok(())
        }
    };
    let entry = match id {
        "linear" => CatalogEntry {
            spec: linear_kernel(d),
            domain: ApproxDomain::boxed(2, d, 1.0),
            constants: TableConstants {
                f: ConstantValue::Value(d as f64),
                b: ConstantValue::Formula("M"),
                mu_a: ConstantValue::Formula("a-th moment norm of a data coordinate"),
            },
        },
        "gaussian" => CatalogEntry {
            spec: gaussian_kernel(d),
            domain: ApproxDomain::boxed(2, d, 1.0),
            constants: TableConstants {
                f: ConstantValue::Value(2.0),
                b: ConstantValue::Value(1.0),
                mu_a: ConstantValue::Value(1.0),
            },
        },
        "laplacian" => CatalogEntry {
            spec: laplacian_kernel(d),
            domain: ApproxDomain::boxed(2, d, 1.0),
            constants: TableConstants {
                f: ConstantValue::Value(2.0),
                b: ConstantValue::Value(1.0),
                mu_a: ConstantValue::Value(1.0),
            },
        },
        "cauchy" => CatalogEntry {
            spec: cauchy_kernel(d),
            domain: ApproxDomain::boxed(2, d, 1.0),
            constants: TableConstants {
                f: ConstantValue::Value(2f64.powi(d as i32 + 1)),
                b: ConstantValue::Value(1.0),
                mu_a: ConstantValue::Value(1.0),
            },
        },
        "hat" => {
            fixed(1)?;
            CatalogEntry {
                spec: hat_kernel(),
                domain: ApproxDomain::boxed(2, 1, 1.0),
                constants: TableConstants {
                    f: ConstantValue::Value(2.0),
                    b: ConstantValue::Value(1.0),
                    mu_a: ConstantValue::Value(1.0),
                },
            }
        }
        "cosine" => {
            fixed(1)?;
            CatalogEntry {
                spec: cosine_kernel(),
                domain: ApproxDomain::boxed(2, 1, 1.0),
                constants: TableConstants {
                    f: ConstantValue::Value(32.0),
                    b: ConstantValue::Value(1.0),
                    mu_a: ConstantValue::Value(1.0),
                },
            }
        }
        "box1" => {
            fixed(1)?;
            let spec = box1_kernel();
            let jumps = spec.jump_points.clone().unwrap();
            CatalogEntry {
                spec,
                domain: ApproxDomain::with_jumps(2, 1, 1.0, 0.0, jumps),
                constants: TableConstants {
                    f: ConstantValue::Formula("C log(1/M2) + C log log(1/t)"),
                    b: ConstantValue::Value(1.0),
                    mu_a: ConstantValue::Value(1.0),
                },
            }
        }
        "kendall" => {
            fixed(2)?;
            let spec = kendall_kernel();
            let jumps = spec.jump_points.clone().unwrap();
            CatalogEntry {
                spec,
                domain: ApproxDomain::with_jumps(2, 2, 1.0, 0.0, jumps),
                constants: TableConstants {
                    f: ConstantValue::Formula("C log^2(M1/M2) + C log^2 log(1/t)"),
                    b: ConstantValue::Value(1.0),
                    mu_a: ConstantValue::Value(1.0),
                },
            }
        }
        "spearman" => {
            fixed(2)?;
            let spec = spearman_kernel();
            let jumps = spec.jump_points.clone().unwrap();
            CatalogEntry {
                spec,
                domain: ApproxDomain::with_jumps(3, 2, 1.0, 0.0, jumps),
                constants: TableConstants {
                    f: ConstantValue::Formula("C log^2(M1/M2) + C log^2 log(1/t)"),
                    b: ConstantValue::Value(1.0),
                    mu_a: ConstantValue::Value(1.0),
                },
            }
        }
        other => {
            return Err(Error::Unsupported(format!("unknown kernel id {other:?}")));
        }
    };
    Ok(entry)
}

/// The full catalog at each kernel's reference dimension.
pub fn builtin_catalog() -> Vec<CatalogEntry> {
    CATALOG_IDS
        .iter()
        .map(|id| {
            let d = match *id {
                "kendall" | "spearman" => 2,
                _ => 1,
            };
            catalog_entry(id, d).expect("catalog entry")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::simpson;
    use crate::seeding::rng_for;
    use approx::assert_relative_eq;

    /// Quadrature oracle for ∫ f(x) e^{-2πiux} dx on [a, b].
    fn fourier_oracle_1d(f: impl Fn(f64) -> f64 + Copy, u: f64, a: f64, b: f64) -> (f64, f64) {
        let re = simpson(|x| f(x) * (TWO_PI * u * x).cos(), a, b, 200_000);
        let im = simpson(|x| -f(x) * (TWO_PI * u * x).sin(), a, b, 200_000);
        (re, im)
    }

    fn probe_freqs() -> Vec<f64> {
        vec![0.0, 0.05, -0.05, 0.1, 0.2, -0.2, 0.35, 0.5, -0.5, 0.8, 1.3, -1.3]
    }

    #[test]
    fn eval_kernel_trivial_values() {
        let g = catalog_entry("gaussian", 2).unwrap().spec;
        let x = [0.3, -1.2];
        assert_eq!(eval_kernel(&g, &[&x, &x]).unwrap(), 1.0);

        let c = catalog_entry("cauchy", 2).unwrap().spec;
        assert_eq!(eval_kernel(&c, &[&x, &x]).unwrap(), 4.0);

        let k = catalog_entry("kendall", 2).unwrap().spec;
        assert_eq!(
            eval_kernel(&k, &[&[1.0, 1.0], &[2.0, 2.0]]).unwrap(),
            1.0
        );
    }

    #[test]
    fn eval_kernel_dimension_mismatch() {
        let g = catalog_entry("gaussian", 2).unwrap().spec;
        assert!(eval_kernel(&g, &[&[0.0, 0.0][..], &[0.0][..]]).is_err());
        assert!(eval_kernel(&g, &[&[0.0, 0.0][..]]).is_err());
    }

    #[test]
    fn catalog_constant_rows() {
        let g = catalog_entry("gaussian", 1).unwrap();
        assert_eq!(g.constants.f, ConstantValue::Value(2.0));
        assert_eq!(g.constants.b, ConstantValue::Value(1.0));
        assert_eq!(g.constants.mu_a, ConstantValue::Value(1.0));

        let cos = catalog_entry("cosine", 1).unwrap();
        assert_eq!(cos.constants.f, ConstantValue::Value(32.0));

        let cauchy3 = catalog_entry("cauchy", 3).unwrap();
        assert_eq!(cauchy3.constants.f, ConstantValue::Value(16.0));

        assert_eq!(builtin_catalog().len(), CATALOG_IDS.len());
    }

    #[test]
    fn symmetrize_antisymmetric_cancels() {
        let f = KernelSpec {
            id: "diff".into(),
            m: 2,
            d: 1,
            eval: Arc::new(|a: &[&[f64]]| a[0][0] - a[1][0]),
            tags: HashSet::new(),
            spectral: None,
            jump_points: None,
            sup_bound: None,
        };
        let s = symmetrize(&f);
        let mut rng = rng_for(11, 0, 0);
        for _ in 0..50 {
            let x = [rng.random::<f64>() * 4.0 - 2.0];
            let y = [rng.random::<f64>() * 4.0 - 2.0];
            assert_eq!(eval_kernel(&s, &[&x, &y]).unwrap(), 0.0);
        }
    }

    #[test]
    fn symmetrize_idempotent_on_symmetric() {
        let g = catalog_entry("gaussian", 2).unwrap().spec;
        let s = symmetrize(&g);
        let x = [0.4, -0.9];
        let y = [1.1, 0.2];
        assert_eq!(
            eval_kernel(&s, &[&x, &y]).unwrap(),
            eval_kernel(&g, &[&x, &y]).unwrap()
        );
    }

    #[test]
    fn symmetrize_spearman_matches_enumeration() {
        let sp = catalog_entry("spearman", 2).unwrap().spec;
        let s = symmetrize(&sp);
        let pts: [&[f64]; 3] = [&[1.0, 1.0], &[2.0, 2.0], &[0.0, 0.0]];
        // Hand enumeration of sign(a1-b1)sign(a2-c2) over all 3! orderings
        // (x,y,z),(x,z,y),(y,x,z),(y,z,x),(z,x,y),(z,y,x) of ((1,1),(2,2),(0,0)):
        // (-1)(+1), (+1)(-1), (+1)(+1), (+1)(+1), (-1)(-1), (-1)(-1)
        let hand = (-1.0 + -1.0 + 1.0 + 1.0 + 1.0 + 1.0) / 6.0;
        assert_relative_eq!(eval_kernel(&s, &pts).unwrap(), hand, max_relative = 1e-15);
    }

    #[test]
    fn symmetric_kernels_permutation_invariant() {
        let mut rng = rng_for(12, 0, 0);
        for entry in builtin_catalog() {
            let spec = &entry.spec;
            if !spec.has_tag(KernelTag::Symmetric) {
                continue;
            }
            let perms = permutations(spec.m);
            for _ in 0..200 {
                let args: Vec<Vec<f64>> = (0..spec.m)
                    .map(|_| (0..spec.d).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect())
                    .collect();
                let refs: Vec<&[f64]> = args.iter().map(|a| a.as_slice()).collect();
                let base = eval_kernel(spec, &refs).unwrap();
                for p in &perms {
                    let permuted: Vec<&[f64]> = p.iter().map(|&i| refs[i]).collect();
                    assert_eq!(eval_kernel(spec, &permuted).unwrap(), base, "{}", spec.id);
                }
            }
        }
    }

    #[test]
    fn shift_invariant_kernels_are_shift_invariant() {
        let mut rng = rng_for(13, 0, 0);
        for entry in builtin_catalog() {
            let spec = &entry.spec;
            if !spec.has_tag(KernelTag::ShiftInvariant) {
                continue;
            }
            assert_eq!(spec.m, 2);
            for _ in 0..50 {
                let x: Vec<f64> = (0..spec.d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                let y: Vec<f64> = (0..spec.d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                let c: Vec<f64> = (0..spec.d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let xs: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a + b).collect();
                let ys: Vec<f64> = y.iter().zip(&c).map(|(a, b)| a + b).collect();
                let v0 = eval_kernel(spec, &[&x, &y]).unwrap();
                let v1 = eval_kernel(spec, &[&xs, &ys]).unwrap();
                assert_relative_eq!(v0, v1, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pd_kernels_have_psd_gram() {
        let mut rng = rng_for(14, 0, 0);
        for entry in builtin_catalog() {
            let spec = &entry.spec;
            if !spec.has_tag(KernelTag::PositiveDefinite) {
                continue;
            }
            let pts: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..spec.d).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect())
                .collect();
            let gram: Vec<Vec<f64>> = (0..8)
                .map(|i| {
                    (0..8)
                        .map(|j| eval_kernel(spec, &[&pts[i], &pts[j]]).unwrap())
                        .collect()
                })
                .collect();
            let eig = crate::numeric::sym_eigenvalues(&gram);
            assert!(eig[0] >= -1e-9, "{}: min eigenvalue {}", spec.id, eig[0]);
        }
    }

    #[test]
    fn gaussian_transform_matches_oracle() {
        let sd = catalog_entry("gaussian", 1).unwrap().spec.spectral.unwrap();
        for &u in &probe_freqs() {
            let (re, im) = sd.value_at(&[u]);
            let (ore, oim) = fourier_oracle_1d(|x| (-0.5 * x * x).exp(), u, -40.0, 40.0);
            assert_relative_eq!(re, ore, max_relative = 1e-3, epsilon = 1e-9);
            assert!(im.abs() < 1e-9 && oim.abs() < 1e-6);
            assert_relative_eq!(re, TWO_PI.sqrt() * (-2.0 * PI * PI * u * u).exp(), max_relative = 1e-12);
        }
        // Mass equals f0(0) = 1 (Fourier inversion at zero shift).
        assert_eq!(sd.total_mass(), 1.0);
    }

    #[test]
    fn laplacian_transform_matches_oracle() {
        let sd = catalog_entry("laplacian", 1).unwrap().spec.spectral.unwrap();
        for &u in &probe_freqs() {
            let (re, _) = sd.value_at(&[u]);
            let (ore, _) = fourier_oracle_1d(|x| (-x.abs()).exp(), u, -60.0, 60.0);
            assert_relative_eq!(re, ore, max_relative = 1e-3, epsilon = 1e-6);
        }
    }

    #[test]
    fn cauchy_transform_matches_oracle() {
        let sd = catalog_entry("cauchy", 1).unwrap().spec.spectral.unwrap();
        for &u in &probe_freqs() {
            if u == 0.0 {
                continue; // slow 1/x² tail; quadrature window bias dominates at u = 0
            }
            let (re, _) = sd.value_at(&[u]);
            let (ore, _) = fourier_oracle_1d(|x| 2.0 / (1.0 + x * x), u, -4000.0, 4000.0);
            assert_relative_eq!(re, ore, max_relative = 2e-3, epsilon = 1e-6);
        }
    }

    #[test]
    fn hat_transform_matches_oracle() {
        let sd = catalog_entry("hat", 1).unwrap().spec.spectral.unwrap();
        for &u in &probe_freqs() {
            let (re, _) = sd.value_at(&[u]);
            let (ore, _) =
                fourier_oracle_1d(|x| if x.abs() <= 1.0 { 1.0 - x.abs() } else { 0.0 }, u, -1.0, 1.0);
            assert_relative_eq!(re, ore, max_relative = 1e-3, epsilon = 1e-9);
        }
    }

    #[test]
    fn cosine_transform_matches_oracle() {
        let sd = catalog_entry("cosine", 1).unwrap().spec.spectral.unwrap();
        for &u in &probe_freqs() {
            let (re, _) = sd.value_at(&[u]);
            let (ore, _) = fourier_oracle_1d(
                |x| if x.abs() <= PI / 2.0 { x.cos() } else { 0.0 },
                u,
                -PI / 2.0,
                PI / 2.0,
            );
            assert_relative_eq!(re, ore, max_relative = 1e-3, epsilon = 1e-9);
        }
        // Near the removable singularity.
        let u0 = 1.0 / TWO_PI;
        let (ore, _) = fourier_oracle_1d(
            |x| if x.abs() <= PI / 2.0 { x.cos() } else { 0.0 },
            u0,
            -PI / 2.0,
            PI / 2.0,
        );
        assert_relative_eq!(cosine_transform(u0), ore, max_relative = 1e-6);
        assert_relative_eq!(cosine_transform(u0), PI / 2.0, max_relative = 1e-6);
    }

    #[test]
    fn box_transform_matches_oracle_and_window_bound() {
        let sd = catalog_entry("box1", 1).unwrap().spec.spectral.unwrap();
        for &u in &probe_freqs() {
            let (re, _) = sd.value_at(&[u]);
            let (ore, _) = fourier_oracle_1d(|x| if x.abs() <= 1.0 { 1.0 } else { 0.0 }, u, -1.0, 1.0);
            assert_relative_eq!(re, ore, max_relative = 1e-3, epsilon = 1e-9);
        }
        // ∫_{-1}^{1} |sin(2πu)/(πu)| du ≤ 4.
        let window = simpson(|u| box1_transform(u).abs(), -1.0, 1.0, 20_000);
        assert!(window <= 4.0, "window L1 = {window}");
        assert!(window > 1.0);
    }

    #[test]
    fn truncated_sign_transform_matches_oracle() {
        let m1 = 5.0;
        let spec = truncated_sign(m1);
        let sd = spec.spectral.unwrap();
        for &u in &probe_freqs() {
            let (re, im) = sd.value_at(&[u]);
            let (ore, oim) =
                fourier_oracle_1d(|x| if x.abs() <= 2.0 * m1 { sgn(x) } else { 0.0 }, u, -10.0, 10.0);
            assert!(re.abs() < 1e-12 && ore.abs() < 1e-6);
            assert_relative_eq!(im, oim, max_relative = 1e-3, epsilon = 1e-6);
        }
    }

    #[test]
    fn spectral_mass_bochner_and_sandwich() {
        // For PD shift-invariant kernels the transform is nonnegative real
        // with total mass f0(0); for every catalog transform the four-part
        // mass sum lies in [l1, √2·l1].
        for id in ["gaussian", "laplacian", "cauchy", "hat", "cosine"] {
            let spec = catalog_entry(id, 1).unwrap().spec;
            let sd = spec.spectral.clone().unwrap();
            let total = sd.total_mass();
            assert!(total >= sd.l1_norm * (1.0 - 1e-9), "{id}");
            assert!(total <= sd.l1_norm * std::f64::consts::SQRT_2 * (1.0 + 1e-9), "{id}");
            if spec.has_tag(KernelTag::PositiveDefinite) {
                let f00 = eval_kernel(&spec, &[&[0.0], &[0.0]]).unwrap();
                assert_eq!(sd.mass(SignPart::RealNeg), 0.0);
                assert_eq!(sd.mass(SignPart::ImagPos), 0.0);
                assert_eq!(sd.mass(SignPart::ImagNeg), 0.0);
                assert_relative_eq!(sd.mass(SignPart::RealPos), f00, max_relative = 1e-9);
                // Numerical check of the same identity by quadrature.
                let quad = simpson(|u| sd.value_at(&[u]).0, -300.0, 300.0, 400_000);
                assert_relative_eq!(quad, f00, max_relative = 2e-2);
            }
        }
    }

    #[test]
    fn in_domain_examples() {
        let boxdom = ApproxDomain::boxed(2, 1, 1.0);
        assert!(in_domain(&boxdom, &[&[0.5], &[-0.5]]));
        assert!(!in_domain(&boxdom, &[&[1.5], &[0.0]]));

        let boxker = ApproxDomain::with_jumps(2, 1, 5.0, 0.1, vec![vec![-1.0, 1.0]]);
        assert!(!in_domain(&boxker, &[&[0.95], &[0.0]])); // |x-y-1| = 0.05 < 0.1
        assert!(in_domain(&boxker, &[&[0.5], &[0.0]]));

        // Spearman-type domain: differences must avoid {−10, 0, 10} in both
        // coordinates by 0.1.
        let sp = ApproxDomain::with_jumps(3, 2, 5.0, 0.1, vec![vec![-10.0, 0.0, 10.0]; 2]);
        let good: [&[f64]; 3] = [&[0.0, 0.0], &[0.5, 1.0], &[-1.5, 2.2]];
        assert!(in_domain(&sp, &good));
        let bad: [&[f64]; 3] = [&[0.0, 0.0], &[0.05, 1.0], &[-1.5, 2.2]];
        assert!(!in_domain(&sp, &bad));
    }

    #[test]
    fn in_domain_permutation_symmetric() {
        let mut rng = rng_for(15, 0, 0);
        let dom = ApproxDomain::with_jumps(3, 2, 2.0, 0.15, vec![vec![0.0, 1.0]; 2]);
        let perms = permutations(3);
        for _ in 0..500 {
            let args: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..2).map(|_| rng.random::<f64>() * 5.0 - 2.5).collect())
                .collect();
            let refs: Vec<&[f64]> = args.iter().map(|a| a.as_slice()).collect();
            let base = dom.contains(&refs);
            for p in &perms {
                let permuted: Vec<&[f64]> = p.iter().map(|&i| refs[i]).collect();
                assert_eq!(dom.contains(&permuted), base);
            }
        }
    }

    #[test]
    fn grid_samplers_reproduce_target_density() {
        // Empirical CDF of sampled hat frequencies vs the analytic CDF.
        let sd = catalog_entry("hat", 1).unwrap().spec.spectral.unwrap();
        let mut rng = rng_for(16, 0, 0);
        let n = 20_000;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| sd.sample(SignPart::RealPos, &mut rng).unwrap()[0])
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &q in &[-0.5, -0.2, 0.0, 0.2, 0.5] {
            let emp = xs.iter().filter(|&&x| x <= q).count() as f64 / n as f64;
            let ana = simpson(hat_transform, -200.0, q, 100_000);
            assert!((emp - ana).abs() < 0.02, "q={q}: emp {emp} vs {ana}");
        }
    }

    #[test]
    fn unknown_kernel_is_unsupported() {
        assert!(catalog_entry("epanechnikov", 1).is_err());
        assert!(catalog_entry("hat", 2).is_err());
    }
}
