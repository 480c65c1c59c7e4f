//! Penalized pairwise-difference estimator for the partially linear model:
//! the objective is an exact quadratic in β plus an ℓ₁ penalty, so fitting is
//! coordinate descent with exact soft-threshold updates (columns of the
//! quadratic form are materialized lazily) or proximal gradient with
//! backtracking.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ksum, normal_pdf, simpson, KahanSum};
use crate::processes::PLRData;
use crate::seeding::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelK {
    /// Standard Gaussian density.
    GaussianDensity,
}

impl KernelK {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            KernelK::GaussianDensity => normal_pdf(u),
        }
    }

    /// Quadrature check that the kernel is a density (∫K = 1, K ≥ 0).
    pub fn validate(&self) -> Result<()> {
        let mass = simpson(|u| self.eval(u), -12.0, 12.0, 4000);
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Config(format!("kernel mass {mass} != 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    CoordinateDescent,
    ProximalGradient,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PLRConfig {
    pub kernel_k: KernelK,
    pub h: f64,
    pub lambda: f64,
    pub optimizer: Optimizer,
    pub tol: f64,
    pub max_iter: usize,
}

impl PLRConfig {
    pub fn new(h: f64, lambda: f64) -> Self {
        Self {
            kernel_k: KernelK::GaussianDensity,
            h,
            lambda,
            optimizer: Optimizer::CoordinateDescent,
            tol: 1e-8,
            max_iter: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel_k.validate()?;
        if self.h < 1e-8 {
            return Err(Error::Config("bandwidth below 1e-8 rejected".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config("lambda must be nonnegative".into()));
        }
        if self.tol <= 0.0 || self.max_iter == 0 {
            return Err(Error::Config("tol and max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Direct double-loop evaluation of
/// (n choose 2)^{−1} Σ_{i<j} (1/h)K(W̃_ij/h)(Ỹ_ij − X̃_ijᵀβ)² + λ‖β‖₁.
pub fn plr_objective(beta: &[f64], data: &PLRData, h: f64, lambda: f64) -> Result<f64> {
    let n = data.y.len();
    if n < 2 {
        return Err(Error::invalid("need n >= 2"));
    }
    if data.x.iter().any(|r| r.len() != beta.len()) {
        return Err(Error::invalid("beta length does not match the design"));
    }
    if h <= 0.0 {
        return Err(Error::invalid("h must be positive"));
    }
    let k = KernelK::GaussianDensity;
    let norm = 2.0 / (n as f64 * (n as f64 - 1.0));
    let mut acc = KahanSum::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = k.eval((data.w[i] - data.w[j]) / h) / h;
            let resid = data.y[i]
                - data.y[j]
                - ksum(
                    data.x[i]
                        .iter()
                        .zip(data.x[j].iter())
                        .zip(beta.iter())
                        .map(|((a, b), bk)| (a - b) * bk),
                );
            acc.add(w * resid * resid);
        }
    }
    Ok(norm * acc.value() + lambda * beta.iter().map(|b| b.abs()).sum::<f64>())
}

/// The quadratic part of the objective, βᵀTβ − 2bᵀβ + c, with
/// T = Σ_pairs w·X̃X̃ᵀ held either fully materialized or as lazily computed
/// columns (the memory/flop guard picks the mode; `p ≤ 500` instances below
/// the flop guard are materialized eagerly).
pub struct Quadratic {
    pub n: usize,
    pub p: usize,
    pub b: Vec<f64>,
    pub c: f64,
    pub diag: Vec<f64>,
    pub materialized: bool,
    pairs: Vec<(u32, u32, f64)>,
    x: Vec<Vec<f64>>,
    cols: RefCell<HashMap<usize, Vec<f64>>>,
}

const MATERIALIZE_FLOP_GUARD: f64 = 1e9;

pub fn precompute_quadratic(data: &PLRData, h: f64) -> Result<Quadratic> {
    let n = data.y.len();
    if n < 2 {
        return Err(Error::invalid("need n >= 2"));
    }
    if h < 1e-8 {
        return Err(Error::Config("bandwidth below 1e-8 rejected".into()));
    }
    let p = data.x[0].len();
    if data.x.iter().any(|r| r.len() != p) {
        return Err(Error::invalid("ragged design matrix"));
    }
    let k = KernelK::GaussianDensity;
    let norm = 2.0 / (n as f64 * (n as f64 - 1.0));
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    let mut c_acc = KahanSum::new();
    let mut b = vec![KahanSum::new(); p];
    let mut diag = vec![KahanSum::new(); p];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = norm * k.eval((data.w[i] - data.w[j]) / h) / h;
            let ydiff = data.y[i] - data.y[j];
            c_acc.add(w * ydiff * ydiff);
            for kk in 0..p {
                let d = data.x[i][kk] - data.x[j][kk];
                b[kk].add(w * ydiff * d);
                diag[kk].add(w * d * d);
            }
            pairs.push((i as u32, j as u32, w));
        }
    }
    let q = Quadratic {
        n,
        p,
        b: b.iter().map(|a| a.value()).collect(),
        c: c_acc.value(),
        diag: diag.iter().map(|a| a.value()).collect(),
        materialized: p <= 500
            && (pairs.len() as f64) * (p as f64) * (p as f64) <= MATERIALIZE_FLOP_GUARD,
        pairs,
        x: data.x.clone(),
        cols: RefCell::new(HashMap::new()),
    };
    if q.materialized {
        for kk in 0..p {
            q.column(kk);
        }
    }
    Ok(q)
}

impl Quadratic {
    /// Column k of T, computed on first use and cached.
    fn column(&self, k: usize) -> Vec<f64> {
        if let Some(col) = self.cols.borrow().get(&k) {
            return col.clone();
        }
        let mut col = vec![KahanSum::new(); self.p];
        for &(i, j, w) in &self.pairs {
            let (xi, xj) = (&self.x[i as usize], &self.x[j as usize]);
            let dk = xi[k] - xj[k];
            if dk == 0.0 {
                continue;
            }
            let scale = w * dk;
            for (kk, acc) in col.iter_mut().enumerate() {
                acc.add(scale * (xi[kk] - xj[kk]));
            }
        }
        let col: Vec<f64> = col.iter().map(|a| a.value()).collect();
        self.cols.borrow_mut().insert(k, col.clone());
        col
    }

    /// The full matrix (materialized instances only, used by tests/reports).
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|k| self.column(k)).collect()
    }

    /// T·v for sparse-support v, in O(|support|·p).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for (k, &vk) in v.iter().enumerate() {
            if vk != 0.0 {
                for (o, ck) in out.iter_mut().zip(self.column(k).iter()) {
                    *o += vk * ck;
                }
            }
        }
        out
    }

    /// βᵀTβ − 2bᵀβ + c + λ‖β‖₁ given T·β.
    fn objective_from(&self, beta: &[f64], tbeta: &[f64], lambda: f64) -> f64 {
        let quad = ksum(beta.iter().zip(tbeta.iter()).map(|(b, t)| b * t));
        let lin = ksum(beta.iter().zip(self.b.iter()).map(|(b, t)| b * t));
        quad - 2.0 * lin + self.c + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        self.objective_from(beta, &self.apply(beta), lambda)
    }

    /// Max KKT residual: |2(Tβ−b)_k| − λ (capped at 0) on zero coordinates,
    /// |2(Tβ−b)_k + λ·sign(β_k)| on active ones.
    fn kkt_from(&self, beta: &[f64], tbeta: &[f64], lambda: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.p {
            let g = 2.0 * (tbeta[k] - self.b[k]);
            let viol = if beta[k] == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g + lambda * beta[k].signum()).abs()
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PLRFit {
    pub beta_hat: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub active_set: Vec<usize>,
    pub kkt_violation: f64,
    pub converged: bool,
}

fn soft(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

pub fn fit_plr(data: &PLRData, config: &PLRConfig) -> Result<PLRFit> {
    config.validate()?;
    let q = precompute_quadratic(data, config.h)?;
    fit_quadratic(&q, config)
}

/// Fits from a precomputed quadratic (exposed so experiments can reuse it).
pub fn fit_quadratic(q: &Quadratic, config: &PLRConfig) -> Result<PLRFit> {
    match config.optimizer {
        Optimizer::CoordinateDescent => fit_cd(q, config),
        Optimizer::ProximalGradient => fit_pg(q, config),
    }
}

fn finish_fit(
    q: &Quadratic,
    beta: Vec<f64>,
    tbeta: &[f64],
    trace: Vec<f64>,
    iterations: usize,
    lambda: f64,
    tol: f64,
) -> PLRFit {
    let kkt = q.kkt_from(&beta, tbeta, lambda);
    let active = beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(k, _)| k)
        .collect();
    PLRFit {
        beta_hat: beta,
        objective_trace: trace,
        iterations,
        active_set: active,
        kkt_violation: kkt,
        converged: kkt <= tol.max(1e-7),
    }
}

fn fit_cd(q: &Quadratic, config: &PLRConfig) -> Result<PLRFit> {
    let lambda = config.lambda;
    let mut beta = vec![0.0; q.p];
    let mut tbeta = vec![0.0; q.p];
    let mut trace = vec![q.objective_from(&beta, &tbeta, lambda)];
    let mut sweeps = 0;
    while sweeps < config.max_iter {
        sweeps += 1;
        for k in 0..q.p {
            if q.diag[k] <= 1e-14 {
                continue;
            }
            // Minimize in β_k holding the rest: exact soft-threshold update.
            let z = q.b[k] - (tbeta[k] - q.diag[k] * beta[k]);
            let new = soft(z, lambda / 2.0) / q.diag[k];
            let delta = new - beta[k];
            if delta != 0.0 {
                let col = q.column(k);
                for (t, c) in tbeta.iter_mut().zip(col.iter()) {
                    *t += delta * c;
                }
                beta[k] = new;
            }
        }
        let obj = q.objective_from(&beta, &tbeta, lambda);
        let prev = *trace.last().unwrap();
        trace.push(obj);
        let kkt = q.kkt_from(&beta, &tbeta, lambda);
        if kkt <= config.tol || (prev - obj).abs() <= config.tol * (1.0 + obj.abs()) && kkt <= 1e-7
        {
            break;
        }
    }
    Ok(finish_fit(q, beta, &tbeta, trace, sweeps, lambda, config.tol))
}

fn fit_pg(q: &Quadratic, config: &PLRConfig) -> Result<PLRFit> {
    let lambda = config.lambda;
    let mut beta = vec![0.0; q.p];
    let mut tbeta = vec![0.0; q.p];
    let mut trace = vec![q.objective_from(&beta, &tbeta, lambda)];
    let mut step = 1.0 / (2.0 * q.diag.iter().cloned().fold(1e-12, f64::max));
    let mut iters = 0;
    while iters < config.max_iter {
        iters += 1;
        let quad_here = {
            let lin = ksum(beta.iter().zip(q.b.iter()).map(|(b, t)| b * t));
            ksum(beta.iter().zip(tbeta.iter()).map(|(b, t)| b * t)) - 2.0 * lin + q.c
        };
        let grad: Vec<f64> = (0..q.p).map(|k| 2.0 * (tbeta[k] - q.b[k])).collect();
        // Backtracking on the smooth part's majorizer; the prox of the
        // ℓ₁ penalty under step s is soft-thresholding at s·λ.
        let (next, next_t) = loop {
            let cand: Vec<f64> = (0..q.p)
                .map(|k| soft(beta[k] - step * grad[k], step * lambda))
                .collect();
            let cand_t = q.apply(&cand);
            let lin = ksum(cand.iter().zip(q.b.iter()).map(|(b, t)| b * t));
            let quad_cand =
                ksum(cand.iter().zip(cand_t.iter()).map(|(b, t)| b * t)) - 2.0 * lin + q.c;
            let diff: Vec<f64> = cand.iter().zip(beta.iter()).map(|(a, b)| a - b).collect();
            let gdot = ksum(grad.iter().zip(diff.iter()).map(|(g, d)| g * d));
            let dist2 = ksum(diff.iter().map(|d| d * d));
            if quad_cand <= quad_here + gdot + dist2 / (2.0 * step) + 1e-15 {
                break (cand, cand_t);
            }
            step /= 2.0;
            if step < 1e-18 {
                break (cand, cand_t);
            }
        };
        beta = next;
        tbeta = next_t;
        let obj = q.objective_from(&beta, &tbeta, lambda);
        let prev = *trace.last().unwrap();
        trace.push(obj);
        let kkt = q.kkt_from(&beta, &tbeta, lambda);
        if kkt <= config.tol || (prev - obj).abs() <= config.tol * (1.0 + obj.abs()) * 1e-4 {
            break;
        }
    }
    Ok(finish_fit(q, beta, &tbeta, trace, iters, lambda, config.tol))
}

pub const DEFAULT_C_H: f64 = 1.0;
pub const DEFAULT_C_LAMBDA: f64 = 2.0;
pub const H_CLIP_UPPER: f64 = 1.0;

/// (h_n, λ_n): h_n = c_h·√(log p/n) clipped into [√(log p/n), 1];
/// λ_n = c_λ·(h_n + √(log p/n)).
pub fn default_tuning(n: usize, p: usize, c_h: f64, c_lambda: f64) -> Result<(f64, f64)> {
    if n < 2 || p < 2 {
        return Err(Error::invalid("need n >= 2 and p >= 2"));
    }
    let base = ((p as f64).ln() / n as f64).sqrt();
    let h = (c_h * base).clamp(base, H_CLIP_UPPER);
    if h < 1e-8 {
        return Err(Error::Config("bandwidth below 1e-8 rejected".into()));
    }
    Ok((h, c_lambda * (h + base)))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub mse_mean: f64,
    pub mse_se: f64,
    /// Theoretical rate proxy s·log p/n.
    pub rate_proxy: f64,
}

/// Repeated simulate-and-fit over a grid of sample sizes; reports the mean
/// squared error ‖β̂ − β*‖² against the s·log p/n proxy.
pub fn rate_experiment(
    ns: &[usize],
    p: usize,
    s: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<RateRow>> {
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns.is_empty() {
        return Err(Error::invalid("ns must be strictly increasing"));
    }
    if reps == 0 {
        return Err(Error::invalid("reps must be positive"));
    }
    let sim = crate::processes::PLRSimConfig::standard(p, s)?;
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let (h, lambda) = default_tuning(n, p, DEFAULT_C_H, DEFAULT_C_LAMBDA)?;
        let config = PLRConfig::new(h, lambda);
        let mut errs = Vec::with_capacity(reps);
        for rep in 0..reps {
            let data =
                crate::processes::simulate_plr(&sim, n, derive_seed(seed, n as u64, rep as u64))?;
            let fit = fit_plr(&data, &config)?;
            errs.push(ksum(
                fit.beta_hat
                    .iter()
                    .zip(sim.beta_star.iter())
                    .map(|(a, b)| (a - b) * (a - b)),
            ));
        }
        let rf = reps as f64;
        let mean = ksum(errs.iter().copied()) / rf;
        let var = ksum(errs.iter().map(|e| (e - mean) * (e - mean))) / (rf - 1.0).max(1.0);
        out.push(RateRow {
            n,
            mse_mean: mean,
            mse_se: (var / rf).sqrt(),
            rate_proxy: s as f64 * (p as f64).ln() / n as f64,
        });
    }
    Ok(out)
}
