//! Closed-form concentration machinery: long-run variance proxies under
//! geometric mixing, Bernstein coefficient sequences, the exponential tail
//! bounds in their degenerate / general / discontinuous forms, and the
//! moderate-deviation diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::numeric::normal_sf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingKind {
    Alpha,
    Tau,
}

/// Geometric mixing model: coefficients decay like γ₁·exp(−γ₂·k), with a
/// moment slack δ (so μ_{2+δ} is finite) and, for τ-mixing, the kernel
/// Lipschitz constant.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MixingModel {
    pub kind: MixingKind,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta: f64,
    pub lip_l: Option<f64>,
}

impl MixingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0 && self.delta > 0.0) {
            return Err(Error::invalid("gamma1, gamma2, delta must be positive"));
        }
        match (self.kind, self.lip_l) {
            (MixingKind::Tau, Some(l)) if l > 0.0 => Ok(()),
            (MixingKind::Tau, _) => Err(Error::invalid("tau mixing requires a positive lip_l")),
            (MixingKind::Alpha, None) => Ok(()),
            (MixingKind::Alpha, Some(_)) => {
                Err(Error::invalid("lip_l is only meaningful for tau mixing"))
            }
        }
    }

    /// The long-run variance proxy for this model.
    pub fn sigma_sq(&self, mu_2_delta: f64) -> Result<f64> {
        self.validate()?;
        Ok(match self.kind {
            MixingKind::Alpha => sigma_sq_alpha(self.gamma1, self.gamma2, self.delta, mu_2_delta),
            MixingKind::Tau => sigma_sq_tau(
                self.gamma1,
                self.gamma2,
                self.delta,
                self.lip_l.unwrap(),
                mu_2_delta,
            ),
        })
    }
}

/// σ² under geometric α-mixing:
/// 64·γ₁^{δ/(2+δ)} / (1 − e^{−γ₂δ/(2+δ)}) · μ²_{2+δ}.
pub fn sigma_sq_alpha(gamma1: f64, gamma2: f64, delta: f64, mu_2_delta: f64) -> f64 {
    let e = delta / (2.0 + delta);
    64.0 * gamma1.powf(e) / (1.0 - (-gamma2 * e).exp()) * mu_2_delta * mu_2_delta
}

/// σ² under geometric τ-mixing with kernel Lipschitz constant L:
/// 12·(γ₁L)^{δ/(1+δ)} / (1 − e^{−γ₂δ/(1+δ)}) · μ_{2+δ}^{(2+δ)/(1+δ)}.
/// Diverges to +∞ as δ → 0⁺ (the denominator vanishes); the limit is
/// returned as `f64::INFINITY` rather than an error.
pub fn sigma_sq_tau(gamma1: f64, gamma2: f64, delta: f64, lip_l: f64, mu_2_delta: f64) -> f64 {
    let e = delta / (1.0 + delta);
    12.0 * (gamma1 * lip_l).powf(e) / (1.0 - (-gamma2 * e).exp())
        * mu_2_delta.powf((2.0 + delta) / (1.0 + delta))
}

/// Bernstein coefficient sequences, indexed p = 1..=m (`a[p-1]`, `m_seq[p-1]`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BernSeq {
    pub a: Vec<f64>,
    pub m_seq: Vec<f64>,
}

/// A_p = μ₁^{2(m−p)}·F²·{σ² + B²(log n)⁴/n}^p and
/// M_p = μ₁^{m−p}·F·B^p·(log n)^{2p}.
pub fn bern_seq(f: f64, b: f64, mu1: f64, sigma2: f64, n: usize, m: usize) -> Result<BernSeq> {
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    if m < 1 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let ln = (n as f64).ln();
    let base = sigma2 + b * b * ln.powi(4) / n as f64;
    let mut a = Vec::with_capacity(m);
    let mut m_seq = Vec::with_capacity(m);
    for p in 1..=m {
        a.push(mu1.powi(2 * (m - p) as i32) * f * f * base.powi(p as i32));
        m_seq.push(mu1.powi((m - p) as i32) * f * b.powi(p as i32) * ln.powi(2 * p as i32));
    }
    Ok(BernSeq { a, m_seq })
}

/// Common configuration for the exponential tail bounds.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailBoundInputs {
    pub f: f64,
    pub b: f64,
    pub mu1: f64,
    pub mu_2_delta: f64,
    pub sigma2: f64,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub c1: f64,
    pub c2: f64,
    pub t: f64,
    pub t_prime: f64,
    pub residual: f64,
}

impl TailBoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n must be at least 2"));
        }
        if self.r < 1 || self.r > self.m {
            return Err(Error::invalid("need 1 <= r <= m"));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::invalid("C1, C2 must be positive"));
        }
        Ok(())
    }

    fn exp_sum(&self, x: f64) -> Result<f64> {
        let seq = bern_seq(self.f, self.b, self.mu1, self.sigma2, self.n, self.m)?;
        let mut sum = 0.0;
        for p in self.r..=self.m {
            let pf = p as f64;
            let a_p = seq.a[p - 1];
            let m_p = seq.m_seq[p - 1];
            let denom = a_p.powf(1.0 / pf) + x.powf(1.0 / pf) * m_p.powf(1.0 / pf);
            sum += (-self.c2 * self.n as f64 * x.powf(2.0 / pf) / denom).exp();
        }
        Ok(sum)
    }
}

/// A tail bound evaluation: the probability bound at deviation `shift`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailBound {
    pub value: f64,
    /// The deviation level the bound applies to (x plus the bias shift).
    pub shift: f64,
    /// Set when value ≥ 1; the raw value is reported, never clipped.
    pub vacuous: bool,
}

fn finish(value: f64, shift: f64) -> TailBound {
    TailBound { value, shift, vacuous: value >= 1.0 }
}

/// Compact-support bound for kernels degenerate of level r − 1:
/// 6·Σ_{p=r}^m exp(−C₂·n·x^{2/p} / (A_p^{1/p} + x^{1/p}M_p^{1/p})),
/// applying at deviation x + C₁·t.
pub fn tail_bound_degenerate(inputs: &TailBoundInputs, x: f64) -> Result<TailBound> {
    inputs.validate()?;
    if x <= 0.0 {
        return Err(Error::invalid("x must be positive"));
    }
    Ok(finish(6.0 * inputs.exp_sum(x)?, x + inputs.c1 * inputs.t))
}

/// General-support bound: 2·Σ exp-terms + residual, at deviation x + C₁·t′.
pub fn tail_bound_general(inputs: &TailBoundInputs, x: f64) -> Result<TailBound> {
    inputs.validate()?;
    if x <= 0.0 {
        return Err(Error::invalid("x must be positive"));
    }
    Ok(finish(
        2.0 * inputs.exp_sum(x)? + inputs.residual,
        x + inputs.c1 * inputs.t_prime,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscontinuousVariant {
    /// Shifted evaluation at y = x − (|f₀(0)| + F)/n; required when a jump
    /// sits at the origin (Kendall, Spearman).
    A,
    /// Direct evaluation at x; valid when the exclusion width M₂ is at most
    /// the smallest |jump location| (box kernel).
    B,
}

/// Tail bound for kernels with jump discontinuities: exponential terms plus
/// the jump-band mass n²·J_total·M₂·D plus the escape term n·Σ tails.
#[allow(clippy::too_many_arguments)]
pub fn tail_bound_discontinuous(
    inputs: &TailBoundInputs,
    x: f64,
    f0_at_0: f64,
    j_total: usize,
    m2: f64,
    density_bound: f64,
    tail_at_m1: &[f64],
    variant: DiscontinuousVariant,
) -> Result<TailBound> {
    inputs.validate()?;
    if x <= 0.0 {
        return Err(Error::invalid("x must be positive"));
    }
    let n = inputs.n as f64;
    let y = match variant {
        DiscontinuousVariant::A => {
            let shift = (f0_at_0.abs() + inputs.f) / n;
            if x <= shift {
                return Err(Error::invalid(format!(
                    "variant (a) requires x > (|f0(0)| + F)/n = {shift}"
                )));
            }
            x - shift
        }
        DiscontinuousVariant::B => x,
    };
    let jump_band = n * n * j_total as f64 * m2 * density_bound;
    let escape = n * tail_at_m1.iter().sum::<f64>();
    Ok(finish(
        2.0 * inputs.exp_sum(y)? + jump_band + escape,
        x + inputs.c1 * inputs.t_prime,
    ))
}

/// Finite-n proxies for the two moderate-deviation growth conditions:
/// ratio1 = μ₁^{m−2}Fσ² / (n^{1/2}(log n)^{−3}) and
/// ratio2 = μ₁^{m−2}B²F / (n^{3/2}(log n)^{−8}).
/// Both must tend to 0 along n → ∞; no pass/fail at a single n.
pub fn mdp_condition_check(
    f: f64,
    b: f64,
    mu1: f64,
    sigma2: f64,
    n: usize,
    m: usize,
) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::invalid("n must be at least 3"));
    }
    let nf = n as f64;
    let ln = nf.ln();
    let scale = mu1.powi(m as i32 - 2);
    let ratio1 = scale * f * sigma2 / (nf.sqrt() * ln.powi(-3));
    let ratio2 = scale * b * b * f / (nf.powf(1.5) * ln.powi(-8));
    Ok((ratio1, ratio2))
}

/// Upper α-quantile of the limiting Gumbel law with CDF
/// exp{−π^{−1/2}·e^{−y/2}}: q_α = −log π − 2·log log (1−α)^{−1}.
pub fn gumbel_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    Ok(-std::f64::consts::PI.ln() - 2.0 * (1.0 - alpha).recip().ln().ln())
}

/// CDF of the same Gumbel law, for inverse checks and p-values.
pub fn gumbel_cdf(y: f64) -> f64 {
    (-(std::f64::consts::PI.sqrt().recip()) * (-y / 2.0).exp()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Independent re-coding of the formulas, kept deliberately verbatim from
    // their displayed form, to catch transcription slips in the main path.
    mod oracle {
        pub fn sigma_alpha(g1: f64, g2: f64, d: f64, mu: f64) -> f64 {
            let frac = d / (2.0 + d);
            (64.0 * g1.powf(frac)) * mu.powi(2) / (1.0 - f64::exp(-(g2 * d) / (2.0 + d)))
        }
        pub fn sigma_tau(g1: f64, g2: f64, d: f64, l: f64, mu: f64) -> f64 {
            let frac = d / (1.0 + d);
            (12.0 * (g1 * l).powf(frac)) * mu.powf((2.0 + d) / (1.0 + d))
                / (1.0 - f64::exp(-(g2 * d) / (1.0 + d)))
        }
        pub fn a_p(f: f64, b: f64, mu1: f64, s2: f64, n: usize, m: usize, p: usize) -> f64 {
            let ln4 = (n as f64).ln().powi(4);
            mu1.powf(2.0 * (m - p) as f64)
                * f.powi(2)
                * (s2 + b.powi(2) * ln4 / (n as f64)).powf(p as f64)
        }
        pub fn m_p(f: f64, b: f64, mu1: f64, n: usize, m: usize, p: usize) -> f64 {
            mu1.powf((m - p) as f64) * f * b.powf(p as f64) * (n as f64).ln().powf(2.0 * p as f64)
        }
    }

    fn base_inputs() -> TailBoundInputs {
        TailBoundInputs {
            f: 2.0,
            b: 1.0,
            mu1: 1.0,
            mu_2_delta: 1.0,
            sigma2: 1.0,
            n: 1000,
            m: 2,
            r: 1,
            c1: 1.0,
            c2: 1.0,
            t: 0.05,
            t_prime: 0.05,
            residual: 0.0,
        }
    }

    #[test]
    fn sigma_alpha_reference() {
        let v = sigma_sq_alpha(1.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(v, 64.0 / (1.0 - (-1.0f64 / 3.0).exp()), max_relative = 1e-15);
        assert!((v - 225.77).abs() < 0.05);
        // μ doubled → quadruples
        assert_relative_eq!(sigma_sq_alpha(1.0, 1.0, 1.0, 2.0), 4.0 * v, max_relative = 1e-14);
        // γ₂ → ∞ → denominator → 1
        assert_relative_eq!(sigma_sq_alpha(1.0, 1e6, 1.0, 1.0), 64.0, max_relative = 1e-12);
    }

    #[test]
    fn sigma_tau_reference_and_blowup() {
        let v = sigma_sq_tau(1.0, 1.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(v, 12.0 / (1.0 - (-0.5f64).exp()), max_relative = 1e-15);
        assert!((v - 30.49).abs() < 0.01);
        assert!(sigma_sq_tau(1.0, 1.0, 1.0, 3.0, 1.0) > v);
        // δ → 0⁺ diverges; the exact limit is +∞.
        assert!(sigma_sq_tau(1.0, 1.0, 1e-14, 1.0, 1.0) > 1e12);
        assert_eq!(sigma_sq_tau(1.0, 1.0, 0.0, 1.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn sigma_duplicate_implementation() {
        let grids = [0.3, 0.7, 1.0, 2.5];
        for &g1 in &grids {
            for &g2 in &grids {
                for &d in &grids {
                    for &mu in &grids {
                        assert_relative_eq!(
                            sigma_sq_alpha(g1, g2, d, mu),
                            oracle::sigma_alpha(g1, g2, d, mu),
                            max_relative = 1e-12
                        );
                        assert_relative_eq!(
                            sigma_sq_tau(g1, g2, d, 1.7, mu),
                            oracle::sigma_tau(g1, g2, d, 1.7, mu),
                            max_relative = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bern_seq_reference() {
        let s = bern_seq(2.0, 1.0, 1.0, 1.0, 100, 2).unwrap();
        let ln4 = (100f64).ln().powi(4);
        assert_relative_eq!(s.a[1], 4.0 * (1.0 + ln4 / 100.0).powi(2), max_relative = 1e-14);
        assert!((s.a[1] - 120.8952926221614).abs() < 1e-10);
        assert_relative_eq!(s.m_seq[1], 2.0 * ln4, max_relative = 1e-14);
        assert!((s.m_seq[1] - 899.5239543646213).abs() < 1e-10);
    }

    #[test]
    fn bern_seq_edge_cases() {
        // B = 0: M_p = 0 and A_p = μ₁^{2(m−p)}F²σ^{2p}
        let s = bern_seq(3.0, 0.0, 2.0, 1.5, 50, 3).unwrap();
        assert!(s.m_seq.iter().all(|&v| v == 0.0));
        for p in 1..=3usize {
            assert_relative_eq!(
                s.a[p - 1],
                2.0f64.powi(2 * (3 - p) as i32) * 9.0 * 1.5f64.powi(p as i32),
                max_relative = 1e-14
            );
        }
        // p = m: μ₁ drops out of A_m
        let s1 = bern_seq(3.0, 1.0, 10.0, 1.5, 50, 2).unwrap();
        let s2 = bern_seq(3.0, 1.0, 0.1, 1.5, 50, 2).unwrap();
        assert_relative_eq!(s1.a[1], s2.a[1], max_relative = 1e-14);
    }

    #[test]
    fn bern_seq_duplicate_implementation() {
        for &n in &[10usize, 100, 5000] {
            for m in 1..=3usize {
                let s = bern_seq(2.5, 0.8, 1.3, 4.0, n, m).unwrap();
                for p in 1..=m {
                    assert_relative_eq!(
                        s.a[p - 1],
                        oracle::a_p(2.5, 0.8, 1.3, 4.0, n, m, p),
                        max_relative = 1e-12
                    );
                    assert_relative_eq!(
                        s.m_seq[p - 1],
                        oracle::m_p(2.5, 0.8, 1.3, n, m, p),
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_bound_shape() {
        let inp = base_inputs();
        // nonincreasing in x and → 0
        let mut last = f64::INFINITY;
        for &x in &[0.01, 0.1, 0.5, 2.0, 10.0, 100.0] {
            let b = tail_bound_degenerate(&inp, x).unwrap();
            assert!(b.value <= last + 1e-15);
            last = b.value;
            assert_relative_eq!(b.shift, x + inp.c1 * inp.t, max_relative = 1e-15);
        }
        assert!(tail_bound_degenerate(&inp, 1e6).unwrap().value < 1e-300);

        // fully degenerate r = m: single term
        let mut full = inp;
        full.r = 2;
        let seq = bern_seq(inp.f, inp.b, inp.mu1, inp.sigma2, inp.n, inp.m).unwrap();
        let x = 0.5f64;
        let denom = seq.a[1].sqrt() + x.sqrt() * seq.m_seq[1].sqrt();
        let want = 6.0 * (-(inp.n as f64) * x / denom).exp();
        assert_relative_eq!(tail_bound_degenerate(&full, x).unwrap().value, want, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_bound_regression_constant() {
        // Independent term-by-term evaluation of the r=1, m=2 sum at x=0.5.
        let inp = base_inputs();
        let x = 0.5f64;
        let mut want = 0.0;
        for p in 1..=2usize {
            let a_p = oracle::a_p(2.0, 1.0, 1.0, 1.0, 1000, 2, p);
            let m_p = oracle::m_p(2.0, 1.0, 1.0, 1000, 2, p);
            let pf = p as f64;
            want += (-1000.0 * x.powf(2.0 / pf)
                / (a_p.powf(1.0 / pf) + x.powf(1.0 / pf) * m_p.powf(1.0 / pf)))
            .exp();
        }
        want *= 6.0;
        assert_relative_eq!(tail_bound_degenerate(&inp, x).unwrap().value, want, max_relative = 1e-12);
    }

    #[test]
    fn general_bound_vs_degenerate() {
        let inp = base_inputs();
        for &x in &[0.1, 0.5, 2.0] {
            let d = tail_bound_degenerate(&inp, x).unwrap();
            let g = tail_bound_general(&inp, x).unwrap();
            // residual 0: same sum with prefactor 2 instead of 6
            assert_relative_eq!(g.value, d.value / 3.0, max_relative = 1e-13);
        }
        let mut v = inp;
        v.residual = 1.2;
        let g = tail_bound_general(&v, 5.0).unwrap();
        assert!(g.value >= 1.0);
        assert!(g.vacuous);
    }

    #[test]
    fn bound_monotone_in_constants() {
        let x = 0.5;
        let base = tail_bound_degenerate(&base_inputs(), x).unwrap().value;
        for (f, b, s2) in [(3.0, 1.0, 1.0), (2.0, 2.0, 1.0), (2.0, 1.0, 2.5)] {
            let mut inp = base_inputs();
            inp.f = f;
            inp.b = b;
            inp.sigma2 = s2;
            assert!(
                tail_bound_degenerate(&inp, x).unwrap().value >= base - 1e-15,
                "not monotone at F={f}, B={b}, σ²={s2}"
            );
        }
    }

    #[test]
    fn discontinuous_variants() {
        let inp = base_inputs();
        // M₂ → 0 kills the jump-band term.
        let b0 = tail_bound_discontinuous(&inp, 0.5, 0.0, 2, 0.0, 1.0, &[], DiscontinuousVariant::B)
            .unwrap();
        let g = tail_bound_general(&inp, 0.5).unwrap();
        assert_relative_eq!(b0.value, g.value, max_relative = 1e-13);

        // Variant (a) shifts by (|f₀(0)| + F)/n and rejects x below the shift.
        let f0 = 1.0;
        let shift = (f0 + inp.f) / inp.n as f64;
        assert!(tail_bound_discontinuous(
            &inp, shift * 0.5, f0, 1, 1e-4, 1.0, &[], DiscontinuousVariant::A
        )
        .is_err());
        let a = tail_bound_discontinuous(
            &inp, 0.5, f0, 1, 1e-4, 1.0, &[1e-7], DiscontinuousVariant::A,
        )
        .unwrap();
        let expect = 2.0
            * {
                let mut inner = inp;
                inner.residual = 0.0;
                tail_bound_general(&inner, 0.5 - shift).unwrap().value / 2.0
            }
            + 1e6 * 1.0 * 1e-4 * 1.0
            + 1000.0 * 1e-7;
        assert_relative_eq!(a.value, expect, max_relative = 1e-12);
        // n²JM₂D = 100 here: vacuous and reported raw.
        assert!(a.vacuous && a.value > 1.0);
    }

    #[test]
    fn mdp_condition_values() {
        let n = (10f64).exp().ceil() as usize; // n = ⌈e¹⁰⌉
        let (r1, _r2) = mdp_condition_check(1.0, 1.0, 1.0, 1.0, n, 2).unwrap();
        let nf = n as f64;
        assert_relative_eq!(r1, nf.ln().powi(3) / nf.sqrt(), max_relative = 1e-14);
        assert!((r1 - 1000.0 / (5f64).exp()).abs() / r1 < 0.01);

        // strictly decreasing beyond n ≥ e⁶
        let mut last = f64::INFINITY;
        for &n in &[500usize, 2000, 10_000, 100_000] {
            let (r1, _) = mdp_condition_check(1.0, 1.0, 1.0, 1.0, n, 2).unwrap();
            assert!(r1 < last);
            last = r1;
        }

        let (a1, a2) = mdp_condition_check(1.0, 1.0, 1.0, 1.0, 100, 2).unwrap();
        let (b1, b2) = mdp_condition_check(2.0, 1.0, 1.0, 1.0, 100, 2).unwrap();
        assert_relative_eq!(b1, 2.0 * a1, max_relative = 1e-14);
        assert_relative_eq!(b2, 2.0 * a2, max_relative = 1e-14);
    }

    #[test]
    fn gumbel_quantile_properties() {
        let q = gumbel_quantile(0.05).unwrap();
        assert!((q - 4.795660612234931).abs() < 1e-12);
        for &alpha in &[0.01, 0.05, 0.1, 0.5] {
            let q = gumbel_quantile(alpha).unwrap();
            assert_relative_eq!(gumbel_cdf(q), 1.0 - alpha, max_relative = 1e-12);
        }
        // q = 0 at α = 1 − exp(−π^{−1/2})
        let alpha0 = 1.0 - (-(std::f64::consts::PI.sqrt().recip())).exp();
        assert!(gumbel_quantile(alpha0).unwrap().abs() < 1e-12);
        // Strictly monotone: the upper quantile falls as α grows.
        let mut last = f64::INFINITY;
        for &a in &[0.01, 0.05, 0.2, 0.5, 0.9] {
            let q = gumbel_quantile(a).unwrap();
            assert!(q < last);
            last = q;
        }
        assert!(gumbel_quantile(0.0).is_err());
        assert!(gumbel_quantile(1.0).is_err());
    }

    #[test]
    fn mixing_model_validation() {
        let ok_alpha = MixingModel {
            kind: MixingKind::Alpha,
            gamma1: 1.0,
            gamma2: 1.0,
            delta: 1.0,
            lip_l: None,
        };
        assert!(ok_alpha.validate().is_ok());
        assert_relative_eq!(
            ok_alpha.sigma_sq(1.0).unwrap(),
            sigma_sq_alpha(1.0, 1.0, 1.0, 1.0),
            max_relative = 1e-15
        );
        let bad_tau = MixingModel { kind: MixingKind::Tau, lip_l: None, ..ok_alpha };
        assert!(bad_tau.validate().is_err());
        let ok_tau = MixingModel { kind: MixingKind::Tau, lip_l: Some(2.0), ..ok_alpha };
        assert_relative_eq!(
            ok_tau.sigma_sq(1.0).unwrap(),
            sigma_sq_tau(1.0, 1.0, 1.0, 2.0, 1.0),
            max_relative = 1e-15
        );
    }
}
