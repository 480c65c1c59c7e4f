//! V- and U-statistics, fast rank statistics, Monte Carlo Hoeffding
//! projections, and the auxiliary constants feeding the tail bounds.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{eval_kernel, ApproxDomain, KernelSpec};
use crate::numeric::KahanSum;
use crate::seeding::rng_for;

/// Draws one point of the reference i.i.d. law X̃.
pub type PointSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;

/// Standard Gaussian product law on ℝ^d.
pub fn gaussian_iid(d: usize) -> PointSampler {
    Arc::new(move |rng: &mut ChaCha8Rng| {
        (0..d)
            .map(|_| rand::Rng::sample(rng, StandardNormal))
            .collect()
    })
}

fn check_sample(spec: &KernelSpec, sample: &[Vec<f64>]) -> Result<()> {
    if spec.m > 3 {
        return Err(Error::Unsupported(
            "statistics of order above 3 are not supported".into(),
        ));
    }
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    if sample.iter().any(|r| r.len() != spec.d) {
        return Err(Error::invalid("sample row dimension mismatch"));
    }
    Ok(())
}

/// V-statistic: n^{−m} Σ over all m-tuples with repetition.
pub fn v_statistic(spec: &KernelSpec, sample: &[Vec<f64>]) -> Result<f64> {
    check_sample(spec, sample)?;
    let n = sample.len();
    let mut acc = KahanSum::new();
    match spec.m {
        1 => {
            for xi in sample {
                acc.add(eval_kernel(spec, &[xi])?);
            }
        }
        2 => {
            for xi in sample {
                for xj in sample {
                    acc.add(eval_kernel(spec, &[xi, xj])?);
                }
            }
        }
        3 => {
            for xi in sample {
                for xj in sample {
                    for xk in sample {
                        acc.add(eval_kernel(spec, &[xi, xj, xk])?);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(acc.value() / (n as f64).powi(spec.m as i32))
}

/// U-statistic: average over ordered m-tuples of distinct indices.
pub fn u_statistic(spec: &KernelSpec, sample: &[Vec<f64>]) -> Result<f64> {
    check_sample(spec, sample)?;
    let n = sample.len();
    if n < spec.m {
        return Err(Error::invalid("sample smaller than the kernel order"));
    }
    let mut acc = KahanSum::new();
    let norm;
    match spec.m {
        1 => {
            for xi in sample {
                acc.add(eval_kernel(spec, &[xi])?);
            }
            norm = n as f64;
        }
        2 => {
            for (i, xi) in sample.iter().enumerate() {
                for (j, xj) in sample.iter().enumerate() {
                    if i != j {
                        acc.add(eval_kernel(spec, &[xi, xj])?);
                    }
                }
            }
            norm = (n * (n - 1)) as f64;
        }
        3 => {
            for (i, xi) in sample.iter().enumerate() {
                for (j, xj) in sample.iter().enumerate() {
                    for (k, xk) in sample.iter().enumerate() {
                        if i != j && j != k && i != k {
                            acc.add(eval_kernel(spec, &[xi, xj, xk])?);
                        }
                    }
                }
            }
            norm = (n * (n - 1) * (n - 2)) as f64;
        }
        _ => unreachable!(),
    }
    Ok(acc.value() / norm)
}

/// Kendall's tau U-statistic in O(n log n): sort by (x, y), count exchanges
/// by merge sort, and correct for ties (concordant − discordant pairs over
/// all n(n−1)/2 pairs; tied pairs contribute 0).
pub fn kendall_tau_fast(sample: &[(f64, f64)]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    let mut pts: Vec<(f64, f64)> = sample.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let pair_count = |t: u64| t * (t.saturating_sub(1)) / 2;
    let n0 = pair_count(n as u64);

    // Ties in x and joint ties.
    let mut n1 = 0u64; // pairs tied in x
    let mut n3 = 0u64; // pairs tied in both
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && pts[j].0 == pts[i].0 {
            j += 1;
        }
        n1 += pair_count((j - i) as u64);
        let mut a = i;
        while a < j {
            let mut b = a;
            while b < j && pts[b].1 == pts[a].1 {
                b += 1;
            }
            n3 += pair_count((b - a) as u64);
            a = b;
        }
        i = j;
    }

    // Exchanges: pairs (i < j in the x-sort) with y_i > y_j, by merge sort.
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf, 0, n);

    // Ties in y.
    let mut n2 = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        n2 += pair_count((j - i) as u64);
        i = j;
    }

    let concordant_minus_discordant =
        n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    Ok(concordant_minus_discordant as f64 / n0 as f64)
}

fn merge_count(v: &mut [f64], buf: &mut [f64], lo: usize, hi: usize) -> u64 {
    if hi - lo <= 1 {
        return 0;
    }
    let mid = (lo + hi) / 2;
    let mut inv = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    let (mut i, mut j, mut k) = (lo, mid, lo);
    while i < mid && j < hi {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            j += 1;
            inv += (mid - i) as u64;
        }
        k += 1;
    }
    while i < mid {
        buf[k] = v[i];
        i += 1;
        k += 1;
    }
    while j < hi {
        buf[k] = v[j];
        j += 1;
        k += 1;
    }
    v[lo..hi].copy_from_slice(&buf[lo..hi]);
    inv
}

/// Raw Spearman V-statistic n^{−3} Σ_{i,j,k} sign(x_i−x_j)·sign(y_i−y_k)
/// in O(n log n) via per-coordinate below-minus-above counts.
pub fn spearman_rho(sample: &[(f64, f64)]) -> Result<f64> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::invalid("empty sample"));
    }
    let below_minus_above = |vals: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        let mut out = vec![0.0; vals.len()];
        let mut i = 0;
        while i < vals.len() {
            let mut j = i;
            while j < vals.len() && vals[order[j]] == vals[order[i]] {
                j += 1;
            }
            // i elements strictly below, n − j strictly above
            let score = i as f64 - (vals.len() - j) as f64;
            for &idx in &order[i..j] {
                out[idx] = score;
            }
            i = j;
        }
        out
    };
    let xs: Vec<f64> = sample.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = sample.iter().map(|p| p.1).collect();
    let a = below_minus_above(&xs);
    let b = below_minus_above(&ys);
    let total: f64 = crate::numeric::ksum(a.iter().zip(b.iter()).map(|(x, y)| x * y));
    Ok(total / (n as f64).powi(3))
}

/// Monte Carlo estimate with standard error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
}

fn mc_mean(vals: &[f64]) -> McEstimate {
    let n = vals.len() as f64;
    let mean = crate::numeric::ksum(vals.iter().copied()) / n;
    let var = crate::numeric::ksum(vals.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    McEstimate { value: mean, se: (var / n).sqrt() }
}

/// Monte Carlo Hoeffding machinery for a kernel under an i.i.d. law.
pub struct HoeffdingComponents {
    pub spec: KernelSpec,
    pub sampler: PointSampler,
    pub mc_budget: usize,
    pub theta: f64,
    pub se_theta: f64,
    seed: u64,
}

impl HoeffdingComponents {
    pub fn estimate(
        spec: &KernelSpec,
        sampler: PointSampler,
        mc_budget: usize,
        seed: u64,
    ) -> Result<Self> {
        if mc_budget < 100 {
            return Err(Error::invalid("mc_budget must be at least 100"));
        }
        if spec.m > 3 {
            return Err(Error::Unsupported("order above 3".into()));
        }
        let mut rng = rng_for(seed, 0x7468_6574, 0);
        let vals: Result<Vec<f64>> = (0..mc_budget)
            .map(|_| {
                let pts: Vec<Vec<f64>> = (0..spec.m).map(|_| sampler(&mut rng)).collect();
                let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
                eval_kernel(spec, &refs)
            })
            .collect();
        let est = mc_mean(&vals?);
        Ok(Self {
            spec: spec.clone(),
            sampler,
            mc_budget,
            theta: est.value,
            se_theta: est.se,
            seed,
        })
    }

    /// g_p(x₁..x_p) = E f(x₁..x_p, X̃_{p+1}, …, X̃_m), Monte Carlo.
    pub fn g_p(&self, args: &[Vec<f64>], stream: u64) -> Result<McEstimate> {
        let p = args.len();
        let m = self.spec.m;
        if p == 0 || p > m {
            return Err(Error::invalid("need 1 <= p <= m anchor points"));
        }
        if p == m {
            let refs: Vec<&[f64]> = args.iter().map(|a| a.as_slice()).collect();
            let v = eval_kernel(&self.spec, &refs)?;
            return Ok(McEstimate { value: v, se: 0.0 });
        }
        let mut rng = rng_for(self.seed, 0x6770 ^ stream, 0);
        let vals: Result<Vec<f64>> = (0..self.mc_budget)
            .map(|_| {
                let mut pts: Vec<Vec<f64>> = args.to_vec();
                for _ in p..m {
                    pts.push((self.sampler)(&mut rng));
                }
                let refs: Vec<&[f64]> = pts.iter().map(|q| q.as_slice()).collect();
                eval_kernel(&self.spec, &refs)
            })
            .collect();
        Ok(mc_mean(&vals?))
    }

    /// f_p at the anchor: the recursively centered Hoeffding component
    /// f₁ = g₁ − θ, f_p = g_p − θ − Σ_{q<p} Σ_{|S|=q} f_q(x_S).
    pub fn f_p(&self, args: &[Vec<f64>], stream: u64) -> Result<McEstimate> {
        let p = args.len();
        let g = self.g_p(args, stream)?;
        let mut value = g.value - self.theta;
        let mut var = g.se * g.se + self.se_theta * self.se_theta;
        for q in 1..p {
            for subset in subsets_of_size(p, q) {
                let sub: Vec<Vec<f64>> = subset.iter().map(|&i| args[i].clone()).collect();
                let fq = self.f_p(&sub, stream ^ (0x100 << q))?;
                value -= fq.value;
                var += fq.se * fq.se;
            }
        }
        Ok(McEstimate { value, se: var.sqrt() })
    }
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Free-function form: estimates (g_p, f_p) at one anchor.
pub fn hoeffding_project(
    spec: &KernelSpec,
    sampler: PointSampler,
    points: &[Vec<f64>],
    mc_budget: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    let comp = HoeffdingComponents::estimate(spec, sampler, mc_budget, seed)?;
    let g = comp.g_p(points, 1)?;
    let f = comp.f_p(points, 1)?;
    Ok((g, f))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    /// The level r − 1: the number of leading projections that vanish.
    pub level: usize,
    /// True when estimates sit inside the noise band and the decision could
    /// not be made at the requested tolerance.
    pub inconclusive: bool,
}

/// Determines the degeneracy level by probing |g_p − θ| at Monte Carlo
/// anchors, smallest p first.
pub fn degeneracy_level(
    spec: &KernelSpec,
    sampler: PointSampler,
    tol: f64,
    mc_budget: usize,
    seed: u64,
) -> Result<DegeneracyReport> {
    if tol <= 0.0 {
        return Err(Error::invalid("tol must be positive"));
    }
    let comp = HoeffdingComponents::estimate(spec, sampler.clone(), mc_budget, seed)?;
    let mut anchor_rng = rng_for(seed, 0x616e_6368, 0);
    for p in 1..spec.m {
        let mut max_dev: f64 = 0.0;
        let mut max_se: f64 = 0.0;
        for probe in 0..20u64 {
            let args: Vec<Vec<f64>> = (0..p).map(|_| sampler(&mut anchor_rng)).collect();
            let g = comp.g_p(&args, 0x1000 + probe)?;
            let dev = (g.value - comp.theta).abs();
            if dev > max_dev {
                max_dev = dev;
                max_se = (g.se * g.se + comp.se_theta * comp.se_theta).sqrt();
            }
        }
        if max_dev > tol {
            if max_dev < 3.0 * max_se {
                return Ok(DegeneracyReport { level: p - 1, inconclusive: true });
            }
            return Ok(DegeneracyReport { level: p - 1, inconclusive: false });
        }
    }
    Ok(DegeneracyReport { level: spec.m - 1, inconclusive: false })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NuSquared {
    pub value: f64,
    pub se: f64,
    /// Set when a negative plug-in estimate was clamped to zero.
    pub clamped: bool,
}

/// Plug-in long-run variance ν² = Var f₁(X₁) + 2Σ_{k≤lag_cap} Cov(f₁(X₁),
/// f₁(X_{1+k})) estimated over independent replicate paths.
pub fn nu_squared(
    f1: &dyn Fn(&[f64]) -> f64,
    path_sampler: &dyn Fn(usize, u64) -> Vec<Vec<f64>>,
    lag_cap: usize,
    mc_budget: usize,
    seed: u64,
) -> Result<NuSquared> {
    if lag_cap < 1 {
        return Err(Error::invalid("lag_cap must be at least 1"));
    }
    let reps = 16usize;
    let len = (mc_budget / reps).max(lag_cap * 4 + 16);
    let mut estimates = Vec::with_capacity(reps);
    for r in 0..reps {
        let path = path_sampler(len, crate::seeding::derive_seed(seed, 0x6e75, r as u64));
        let vals: Vec<f64> = path.iter().map(|x| f1(x)).collect();
        let nn = vals.len() as f64;
        let mean = crate::numeric::ksum(vals.iter().copied()) / nn;
        let centered: Vec<f64> = vals.iter().map(|v| v - mean).collect();
        let mut est = crate::numeric::ksum(centered.iter().map(|c| c * c)) / nn;
        for k in 1..=lag_cap {
            let cov = crate::numeric::ksum(
                centered[..centered.len() - k]
                    .iter()
                    .zip(centered[k..].iter())
                    .map(|(a, b)| a * b),
            ) / nn;
            est += 2.0 * cov;
        }
        estimates.push(est);
    }
    let agg = mc_mean(&estimates);
    let clamped = agg.value < 0.0;
    Ok(NuSquared {
        value: agg.value.max(0.0),
        se: agg.se,
        clamped,
    })
}

/// Out-of-domain bias constants of the truncation argument.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiasConstants {
    /// s_i: conditional second-moment bounds, anchors in C_i (i = 0..m−1).
    pub s: Vec<f64>,
    /// v_i: √(escape probability of the remaining coordinates).
    pub v: Vec<f64>,
    pub t_prime: f64,
    pub c_const: f64,
    /// The anchor maxima are a best-effort lower bound on the true suprema.
    pub approximate: bool,
}

/// Estimates (s_i, v_i) by a 50-anchor max and assembles
/// t′ = C·(t + Σ s_i v_i + F·B^m·Σ v_i).
pub fn bias_constants(
    spec: &KernelSpec,
    expanded_f: f64,
    expanded_b: f64,
    target_t: f64,
    sampler: PointSampler,
    domain: &ApproxDomain,
    mc_budget: usize,
    c_const: f64,
    seed: u64,
) -> Result<BiasConstants> {
    let m = spec.m;
    let anchors = 50usize;
    let per_anchor = (mc_budget / anchors).max(50);
    let mut s = Vec::with_capacity(m);
    let mut v = Vec::with_capacity(m);
    let mut rng = rng_for(seed, 0x6269_6173, 0);
    for i in 0..m {
        let mut s_i: f64 = 0.0;
        let mut v_i: f64 = 0.0;
        let n_anchors = if i == 0 { 1 } else { anchors };
        for _ in 0..n_anchors {
            // anchor: i in-domain coordinates (drawn from the law, projected
            // into the box by rejection)
            let mut anchor: Vec<Vec<f64>> = Vec::with_capacity(i);
            while anchor.len() < i {
                let x = sampler(&mut rng);
                if x.iter().all(|&c| c.abs() <= domain.halfwidth) {
                    anchor.push(x);
                }
            }
            let mut sq = KahanSum::new();
            let mut out_count = 0usize;
            for _ in 0..per_anchor {
                let mut pts = anchor.clone();
                for _ in i..m {
                    pts.push(sampler(&mut rng));
                }
                let refs: Vec<&[f64]> = pts.iter().map(|q| q.as_slice()).collect();
                if !domain.contains(&refs) {
                    out_count += 1;
                }
                let f = eval_kernel(spec, &refs)?;
                sq.add(f * f);
            }
            let mut second = (sq.value() / per_anchor as f64).sqrt();
            if let Some(cap) = spec.sup_bound {
                second = second.min(cap);
            }
            s_i = s_i.max(second);
            v_i = v_i.max((out_count as f64 / per_anchor as f64).sqrt());
        }
        s.push(s_i);
        v.push(v_i);
    }
    let sv: f64 = s.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    let vsum: f64 = v.iter().sum();
    let t_prime = c_const
        * (target_t + sv + expanded_f * expanded_b.powi(m as i32) * vsum);
    Ok(BiasConstants { s, v, t_prime, c_const, approximate: true })
}

/// Union-bound surrogate for the residual probability:
/// n·Σ_ℓ P(|X_{1,ℓ}| ≥ M) + n²·(Σ_ℓ J_ℓ)·M₂·D for jump domains.
pub fn residual_probability(
    n: usize,
    coordinate_tails: &[f64],
    jump_band: Option<(usize, f64, f64)>,
) -> f64 {
    let tail: f64 = coordinate_tails.iter().sum();
    let mut out = n as f64 * tail;
    if let Some((j_total, m2, density_bound)) = jump_band {
        out += (n as f64).powi(2) * j_total as f64 * m2 * density_bound;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{catalog_entry, KernelTag};
    use approx::assert_relative_eq;
    use rand::Rng;
    use std::collections::HashSet;

    fn custom(m: usize, d: usize, f: impl Fn(&[&[f64]]) -> f64 + Send + Sync + 'static) -> KernelSpec {
        KernelSpec {
            id: "custom".into(),
            m,
            d,
            eval: Arc::new(f),
            tags: HashSet::new(),
            spectral: None,
            jump_points: None,
            sup_bound: None,
        }
    }

    fn brute_kendall(sample: &[(f64, f64)]) -> f64 {
        let n = sample.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += crate::kernel::sgn(sample[i].0 - sample[j].0)
                        * crate::kernel::sgn(sample[i].1 - sample[j].1);
                }
            }
        }
        acc / (n * (n - 1)) as f64
    }

    #[test]
    fn v_statistic_constant_kernel() {
        let c = custom(2, 1, |_| 2.5);
        let sample: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64]).collect();
        assert_eq!(v_statistic(&c, &sample).unwrap(), 2.5);
    }

    #[test]
    fn v_statistic_kendall_increasing() {
        let k = catalog_entry("kendall", 2).unwrap().spec;
        let sample: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        assert_relative_eq!(v_statistic(&k, &sample).unwrap(), 0.9, max_relative = 1e-14);
    }

    #[test]
    fn v_u_identity_m2() {
        let g = catalog_entry("gaussian", 1).unwrap().spec;
        let mut rng = rng_for(31, 0, 0);
        let sample: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random::<f64>() * 4.0 - 2.0]).collect();
        let n = sample.len() as f64;
        let v = v_statistic(&g, &sample).unwrap();
        let u = u_statistic(&g, &sample).unwrap();
        let diag: f64 = sample
            .iter()
            .map(|x| eval_kernel(&g, &[x, x]).unwrap())
            .sum();
        assert_relative_eq!(n * n * v, n * (n - 1.0) * u + diag, max_relative = 1e-12);
    }

    #[test]
    fn u_statistic_kendall_monotone_data() {
        let k = catalog_entry("kendall", 2).unwrap().spec;
        let inc: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, i as f64 * 2.0]).collect();
        assert_eq!(u_statistic(&k, &inc).unwrap(), 1.0);
        let dec: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, -(i as f64)]).collect();
        assert_eq!(u_statistic(&k, &dec).unwrap(), -1.0);
    }

    #[test]
    fn kendall_fast_trivial_and_ties() {
        let inc: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, i as f64)).collect();
        assert_eq!(kendall_tau_fast(&inc).unwrap(), 1.0);
        let dec: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, -(i as f64))).collect();
        assert_eq!(kendall_tau_fast(&dec).unwrap(), -1.0);
        let tied = vec![(1.0, 1.0), (1.0, 2.0), (2.0, 3.0)];
        assert_eq!(kendall_tau_fast(&tied).unwrap(), brute_kendall(&tied));
    }

    #[test]
    fn kendall_fast_matches_brute_force() {
        let mut rng = rng_for(32, 0, 0);
        for rep in 0..1000u32 {
            let n = 2 + (rng.random::<u64>() % 499) as usize;
            // Discretized values force plenty of ties.
            let levels = 1 + (rng.random::<u64>() % 12) as i64;
            let sample: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (
                        (rng.random::<u64>() % levels as u64) as f64,
                        (rng.random::<u64>() % levels as u64) as f64,
                    )
                })
                .collect();
            let fast = kendall_tau_fast(&sample).unwrap();
            let brute = brute_kendall(&sample);
            assert!(
                (fast - brute).abs() < 1e-12,
                "rep {rep}, n {n}: {fast} vs {brute}"
            );
        }
    }

    fn brute_spearman(sample: &[(f64, f64)]) -> f64 {
        let n = sample.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    acc += crate::kernel::sgn(sample[i].0 - sample[j].0)
                        * crate::kernel::sgn(sample[i].1 - sample[k].1);
                }
            }
        }
        acc / (n as f64).powi(3)
    }

    #[test]
    fn spearman_matches_triple_sum() {
        assert_eq!(spearman_rho(&[(3.0, 1.0)]).unwrap(), 0.0);
        let conc: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, i as f64)).collect();
        assert_relative_eq!(
            spearman_rho(&conc).unwrap(),
            brute_spearman(&conc),
            max_relative = 1e-13
        );
        let mut rng = rng_for(33, 0, 0);
        for _ in 0..40 {
            let n = 2 + (rng.random::<u64>() % 59) as usize;
            let levels = 1 + (rng.random::<u64>() % 8) as u64;
            let sample: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (
                        (rng.random::<u64>() % levels) as f64,
                        (rng.random::<u64>() % levels) as f64,
                    )
                })
                .collect();
            let fast = spearman_rho(&sample).unwrap();
            let brute = brute_spearman(&sample);
            assert!((fast - brute).abs() < 1e-12, "{fast} vs {brute}");
            // Swapping coordinates leaves the statistic unchanged.
            let swapped: Vec<(f64, f64)> = sample.iter().map(|&(a, b)| (b, a)).collect();
            assert!((spearman_rho(&swapped).unwrap() - fast).abs() < 1e-12);
        }
    }

    #[test]
    fn hoeffding_product_kernel_degenerate() {
        // f(x, y) = x·y with centered marginal: f₁ ≡ 0.
        let spec = custom(2, 1, |a| a[0][0] * a[1][0]);
        let (g, f) = hoeffding_project(&spec, gaussian_iid(1), &[vec![1.3]], 20_000, 41).unwrap();
        assert!(f.value.abs() <= 3.0 * f.se.max(1e-12), "{} vs se {}", f.value, f.se);
        assert!(g.value.abs() <= 3.0 * g.se);
    }

    #[test]
    fn hoeffding_additive_kernel() {
        // f(x, y) = x + y: f₁(x) = x − E X̃, f₂ ≈ 0.
        let spec = custom(2, 1, |a| a[0][0] + a[1][0]);
        let comp = HoeffdingComponents::estimate(&spec, gaussian_iid(1), 20_000, 42).unwrap();
        let x = vec![0.8];
        let f1 = comp.f_p(&[x.clone()], 1).unwrap();
        assert!((f1.value - 0.8).abs() <= 3.0 * f1.se.max(1e-3), "{}", f1.value);
        let f2 = comp.f_p(&[x, vec![-0.4]], 2).unwrap();
        assert!(f2.value.abs() <= 3.0 * f2.se.max(1e-3), "{}", f2.value);
    }

    #[test]
    fn hoeffding_kendall_first_projection() {
        // Under an independent bivariate standard normal law,
        // f₁(x) = (2Φ(x₁) − 1)(2Φ(x₂) − 1).
        let k = catalog_entry("kendall", 2).unwrap().spec;
        let comp = HoeffdingComponents::estimate(&k, gaussian_iid(2), 20_000, 43).unwrap();
        let mut rng = rng_for(43, 9, 0);
        for probe in 0..10u64 {
            let x: Vec<f64> = vec![rng.random::<f64>() * 3.0 - 1.5, rng.random::<f64>() * 3.0 - 1.5];
            let f1 = comp.f_p(&[x.clone()], 10 + probe).unwrap();
            let want = (2.0 * crate::numeric::normal_cdf(x[0]) - 1.0)
                * (2.0 * crate::numeric::normal_cdf(x[1]) - 1.0);
            assert!(
                (f1.value - want).abs() <= 3.0 * f1.se.max(1e-3),
                "probe {probe}: {} vs {want} (se {})",
                f1.value,
                f1.se
            );
        }
    }

    #[test]
    fn hoeffding_reconstruction_catalog_m2() {
        // f − θ = f₁(x) + f₁(y) + f₂(x,y) within combined Monte Carlo error.
        let mut rng = rng_for(44, 0, 0);
        for entry in crate::kernel::builtin_catalog() {
            let spec = &entry.spec;
            if spec.m != 2 || !spec.has_tag(KernelTag::Symmetric) {
                continue;
            }
            let comp =
                HoeffdingComponents::estimate(spec, gaussian_iid(spec.d), 20_000, 45).unwrap();
            for probe in 0..20u64 {
                let x: Vec<f64> = (0..spec.d).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect();
                let y: Vec<f64> = (0..spec.d).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect();
                let f1x = comp.f_p(&[x.clone()], 20 + probe).unwrap();
                let f1y = comp.f_p(&[y.clone()], 60 + probe).unwrap();
                let f2 = comp.f_p(&[x.clone(), y.clone()], 100 + probe).unwrap();
                let lhs = eval_kernel(spec, &[&x, &y]).unwrap() - comp.theta;
                let rhs = f1x.value + f1y.value + f2.value;
                let se = (f1x.se.powi(2) + f1y.se.powi(2) + f2.se.powi(2)
                    + comp.se_theta.powi(2))
                .sqrt();
                assert!(
                    (lhs - rhs).abs() <= 3.0 * se.max(1e-9),
                    "{}: {lhs} vs {rhs} (se {se})",
                    spec.id
                );
            }
        }
    }

    #[test]
    fn component_centering() {
        // E f_p(x₁, .., X̃) ≈ 0: check the p = 1 components integrate to 0.
        let g = catalog_entry("gaussian", 1).unwrap().spec;
        let comp = HoeffdingComponents::estimate(&g, gaussian_iid(1), 20_000, 46).unwrap();
        let mut rng = rng_for(46, 5, 0);
        let vals: Vec<f64> = (0..400)
            .map(|i| {
                let x = vec![rand::Rng::sample(&mut rng, StandardNormal)];
                comp.f_p(&[x], 200 + i).unwrap().value
            })
            .collect();
        let est = mc_mean(&vals);
        assert!(est.value.abs() <= 3.0 * est.se, "{} vs se {}", est.value, est.se);
    }

    #[test]
    fn degeneracy_levels() {
        let prod = custom(2, 1, |a| a[0][0] * a[1][0]);
        let rep = degeneracy_level(&prod, gaussian_iid(1), 0.05, 20_000, 47).unwrap();
        assert_eq!(rep.level, 1);

        let add = custom(2, 1, |a| a[0][0] + a[1][0]);
        let rep = degeneracy_level(&add, gaussian_iid(1), 0.05, 20_000, 48).unwrap();
        assert_eq!(rep.level, 0);
        assert!(!rep.inconclusive);

        let k = catalog_entry("kendall", 2).unwrap().spec;
        let rep = degeneracy_level(&k, gaussian_iid(2), 0.05, 20_000, 49).unwrap();
        assert_eq!(rep.level, 0);
    }

    #[test]
    fn nu_squared_iid_process() {
        // i.i.d. path: ν² = Var f₁ = Var X = 1.
        let f1 = |x: &[f64]| x[0];
        let path = |len: usize, seed: u64| -> Vec<Vec<f64>> {
            let mut rng = crate::seeding::rng_for(seed, 0, 0);
            (0..len)
                .map(|_| vec![rand::Rng::sample(&mut rng, StandardNormal)])
                .collect()
        };
        let nu = nu_squared(&f1, &path, 10, 400_000, 51).unwrap();
        assert!(
            (nu.value - 1.0).abs() <= 3.0 * nu.se.max(0.01),
            "{} (se {})",
            nu.value,
            nu.se
        );
        assert!(!nu.clamped);
    }

    #[test]
    fn bias_constants_compact_support() {
        // Uniform data inside the box: every v_i = 0 and t′ = C·t.
        let g = catalog_entry("gaussian", 1).unwrap().spec;
        let dom = ApproxDomain::boxed(2, 1, 2.0);
        let unif: PointSampler =
            Arc::new(|rng: &mut ChaCha8Rng| vec![rng.random::<f64>() * 2.0 - 1.0]);
        let bc = bias_constants(&g, 2.0, 1.0, 0.05, unif, &dom, 10_000, 1.0, 52).unwrap();
        assert!(bc.v.iter().all(|&v| v == 0.0));
        assert_relative_eq!(bc.t_prime, 0.05, max_relative = 1e-12);
        assert!(bc.s.iter().all(|&s| s <= 1.0 + 1e-12)); // |f| ≤ 1 cap
    }

    #[test]
    fn bias_constants_gaussian_tail() {
        let g = catalog_entry("gaussian", 1).unwrap().spec;
        let m_box = 2.0;
        let dom = ApproxDomain::boxed(2, 1, m_box);
        let bc =
            bias_constants(&g, 2.0, 1.0, 0.05, gaussian_iid(1), &dom, 40_000, 1.0, 53).unwrap();
        // v₀ estimates √P(either of two N(0,1) draws leaves [−M, M]).
        let p_escape = 1.0 - (1.0 - 2.0 * crate::numeric::normal_sf(m_box)).powi(2);
        assert!(bc.v[0] <= (p_escape.sqrt() * 1.5).max(0.05), "{} vs {}", bc.v[0], p_escape.sqrt());
        assert!(bc.v[0] > 0.0);
        assert!(bc.t_prime >= 0.05);
    }

    #[test]
    fn residual_probability_examples() {
        assert_eq!(residual_probability(100, &[0.0], None), 0.0);
        assert_relative_eq!(
            residual_probability(100, &[1e-6], None),
            1e-4,
            max_relative = 1e-12
        );
        // Vacuous bounds are reported raw.
        assert_relative_eq!(
            residual_probability(100, &[], Some((2, 1e-4, 1.0))),
            2.0,
            max_relative = 1e-12
        );
    }
}
