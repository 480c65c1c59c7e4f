//! Subcommand implementations. Every run writes a JSON manifest plus CSV
//! artifacts into the output directory; outputs are byte-identical for
//! identical (config, seed) regardless of the thread count.

use std::fs::File;
use std::path::{Path, PathBuf};

use mixtail::bounds::{
    tail_bound_degenerate, tail_bound_general, MixingKind, MixingModel, TailBoundInputs,
};
use mixtail::expansion::{
    choose_h_discontinuous, mollify, rff_expand_general, rff_expand_pd, verify_sup_error,
};
use mixtail::kernel::{catalog_entry, ApproxDomain, KernelTag, SignPart};
use mixtail::mdp::{
    max_test, mdp_ratio_probe, pair_statistics, sigma2_kendall_ar1, Sigma2Method, Sigma2Source,
};
use mixtail::plr::{
    default_tuning, fit_plr, rate_experiment, Optimizer, PLRConfig, DEFAULT_C_H, DEFAULT_C_LAMBDA,
};
use mixtail::processes::{simulate_ar1, simulate_bivariate_pairs, simulate_plr, AR1Config, Init,
    Innovation, PairConfig, PLRSimConfig};
use mixtail::seeding::derive_seed;
use mixtail::{Error, Result};
use serde::{Deserialize, Serialize};

/// What the process should report after a successful run.
pub enum Outcome {
    Success,
    /// Valid run whose statistical result did not resolve (exit code 3).
    Inconclusive(String),
}

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Manifest<'a, C: Serialize, S: Serialize> {
    command: &'a str,
    version: &'a str,
    master_seed: u64,
    config: C,
    summary: S,
    artifacts: Vec<String>,
}

fn write_manifest<C: Serialize, S: Serialize>(
    out: &Path,
    command: &str,
    master_seed: u64,
    config: &C,
    summary: &S,
    artifacts: &[String],
) -> Result<PathBuf> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))?;
    let manifest = Manifest {
        command,
        version: VERSION,
        master_seed,
        config,
        summary,
        artifacts: artifacts.to_vec(),
    };
    let path = out.join(format!("{command}_manifest.json"));
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn csv_writer(out: &Path, name: &str) -> Result<(csv::Writer<File>, String)> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))?;
    let path = out.join(name);
    let file = File::create(&path)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    let w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    Ok((w, name.to_string()))
}

fn finish_csv(mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| Error::Config(format!("csv flush failed: {e}")))
}

fn default_seed() -> u64 {
    1234
}

// ---------------------------------------------------------------- constants

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub master_seed: u64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { master_seed: default_seed() }
    }
}

pub fn constants(cfg: ConstantsConfig, out: &Path) -> Result<Outcome> {
    #[derive(Serialize)]
    struct Row {
        id: String,
        m: usize,
        d: usize,
        f: String,
        b: String,
        mu_a: String,
    }
    let rows: Vec<Row> = mixtail::kernel::builtin_catalog()
        .into_iter()
        .map(|e| Row {
            id: e.spec.id.clone(),
            m: e.spec.m,
            d: e.spec.d,
            f: e.constants.f.to_string(),
            b: e.constants.b.to_string(),
            mu_a: e.constants.mu_a.to_string(),
        })
        .collect();
    println!("{:<10} {:>2} {:>2}  {:<28} {:<4} {:<4}", "kernel", "m", "d", "F", "B", "mu_a");
    for r in &rows {
        println!("{:<10} {:>2} {:>2}  {:<28} {:<4} {:<4}", r.id, r.m, r.d, r.f, r.b, r.mu_a);
    }
    let (mut w, csv_name) = csv_writer(out, "constants_results.csv")?;
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    finish_csv(w)?;
    #[derive(Serialize)]
    struct Summary {
        kernels: usize,
    }
    write_manifest(out, "constants", cfg.master_seed, &cfg, &Summary { kernels: rows.len() }, &[csv_name])?;
    Ok(Outcome::Success)
}

// ------------------------------------------------------------ expand-verify

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpandVerifyConfig {
    pub kernel: String,
    pub d: usize,
    #[serde(alias = "M")]
    pub halfwidth: f64,
    pub t: f64,
    #[serde(alias = "K")]
    pub k: usize,
    pub seeds: usize,
    pub grid: usize,
    /// Exclusion margin for jump kernels (mollified pipeline).
    pub m2: f64,
    /// Density bound used when choosing the mollifier width.
    pub density_bound: f64,
    pub master_seed: u64,
}

impl Default for ExpandVerifyConfig {
    fn default() -> Self {
        Self {
            kernel: "gaussian".into(),
            d: 1,
            halfwidth: 3.0,
            t: 0.05,
            k: 2000,
            seeds: 20,
            grid: 200,
            m2: 0.1,
            density_bound: 1.0,
            master_seed: default_seed(),
        }
    }
}

pub fn expand_verify(cfg: ExpandVerifyConfig, out: &Path) -> Result<Outcome> {
    if cfg.seeds == 0 {
        return Err(Error::invalid("seeds must be at least 1"));
    }
    let entry = catalog_entry(&cfg.kernel, cfg.d)?;
    let spec = entry.spec.clone();

    #[derive(Serialize)]
    struct Row {
        seed_index: usize,
        seed: u64,
        k_features: usize,
        grid_sup_error: f64,
        pass: bool,
    }
    let mut rows = Vec::with_capacity(cfg.seeds);
    for s in 0..cfg.seeds {
        let seed = derive_seed(cfg.master_seed, 0x6578_7076, s as u64);
        let expanded = if spec.jump_points.is_some() {
            // Jump kernels: mollify, expand the smooth surrogate, and verify
            // on the domain that excludes an m2-band around each jump.
            let h = choose_h_discontinuous(cfg.m2, cfg.d, cfg.density_bound, cfg.t);
            let mol = mollify(&spec, h)?;
            let budget = cfg.k;
            let density = mixtail::kernel::spectral_density(&mol)?;
            let mut parts = [0usize; 4];
            for (i, part) in [SignPart::RealPos, SignPart::RealNeg, SignPart::ImagPos, SignPart::ImagNeg]
                .into_iter()
                .enumerate()
            {
                if density.mass(part) > 0.0 {
                    parts[i] = budget;
                }
            }
            rff_expand_general(&mol, cfg.halfwidth, cfg.t, parts, seed)?.with_domain(
                ApproxDomain::with_jumps(
                    spec.m,
                    cfg.d,
                    cfg.halfwidth,
                    cfg.m2,
                    spec.jump_points.clone().unwrap(),
                ),
            )
        } else if spec.has_tag(KernelTag::PositiveDefinite) {
            rff_expand_pd(&spec, cfg.halfwidth, cfg.t, cfg.k, seed)?
        } else {
            let density = mixtail::kernel::spectral_density(&spec)?;
            let mut parts = [0usize; 4];
            for (i, part) in [SignPart::RealPos, SignPart::RealNeg, SignPart::ImagPos, SignPart::ImagNeg]
                .into_iter()
                .enumerate()
            {
                if density.mass(part) > 0.0 {
                    parts[i] = cfg.k;
                }
            }
            rff_expand_general(&spec, cfg.halfwidth, cfg.t, parts, seed)?
        };
        let report = verify_sup_error(&spec, &expanded, cfg.grid, seed)?;
        rows.push(Row {
            seed_index: s,
            seed,
            k_features: report.k_used,
            grid_sup_error: report.grid_sup_error,
            pass: report.pass,
        });
    }

    let (mut w, csv_name) = csv_writer(out, "expand_verify_results.csv")?;
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    finish_csv(w)?;

    let pass_count = rows.iter().filter(|r| r.pass).count();
    let pass_rate = pass_count as f64 / cfg.seeds as f64;
    #[derive(Serialize)]
    struct Summary {
        pass_count: usize,
        seeds: usize,
        pass_rate: f64,
        certified: bool,
    }
    let certified = pass_rate >= 0.95;
    write_manifest(
        out,
        "expand_verify",
        cfg.master_seed,
        &cfg,
        &Summary { pass_count, seeds: cfg.seeds, pass_rate, certified },
        &[csv_name],
    )?;
    println!("expand-verify {}: {pass_count}/{} seeds within t = {}", cfg.kernel, cfg.seeds, cfg.t);
    if certified {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::Inconclusive(format!(
            "certification pass rate {pass_rate} below 0.95"
        )))
    }
}

// --------------------------------------------------------------- tail-bound

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailBoundConfig {
    pub f: f64,
    pub b: f64,
    pub mu1: f64,
    pub mu_2_delta: f64,
    /// Long-run variance proxy; computed from the mixing block when absent.
    pub sigma2: Option<f64>,
    pub mixing: String,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta: f64,
    pub lip_l: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub c1: f64,
    pub c2: f64,
    pub t: f64,
    pub t_prime: f64,
    pub residual: f64,
    pub x_grid: Vec<f64>,
    pub master_seed: u64,
}

impl Default for TailBoundConfig {
    fn default() -> Self {
        Self {
            f: 2.0,
            b: 1.0,
            mu1: 1.0,
            mu_2_delta: 1.0,
            sigma2: None,
            mixing: "alpha".into(),
            gamma1: 1.0,
            gamma2: 1.0,
            delta: 1.0,
            lip_l: None,
            n: 500,
            m: 2,
            r: 1,
            c1: 1.0,
            c2: 1.0,
            t: 0.0,
            t_prime: 0.0,
            residual: 0.0,
            x_grid: vec![0.1, 0.2, 0.5, 1.0, 2.0],
            master_seed: default_seed(),
        }
    }
}

pub fn tail_bound(cfg: TailBoundConfig, out: &Path) -> Result<Outcome> {
    let sigma2 = match cfg.sigma2 {
        Some(v) => v,
        None => {
            let kind = match cfg.mixing.as_str() {
                "alpha" => MixingKind::Alpha,
                "tau" => MixingKind::Tau,
                other => return Err(Error::invalid(format!("unknown mixing kind {other}"))),
            };
            MixingModel {
                kind,
                gamma1: cfg.gamma1,
                gamma2: cfg.gamma2,
                delta: cfg.delta,
                lip_l: cfg.lip_l,
            }
            .sigma_sq(cfg.mu_2_delta)?
        }
    };
    let inputs = TailBoundInputs {
        f: cfg.f,
        b: cfg.b,
        mu1: cfg.mu1,
        mu_2_delta: cfg.mu_2_delta,
        sigma2,
        n: cfg.n,
        m: cfg.m,
        r: cfg.r,
        c1: cfg.c1,
        c2: cfg.c2,
        t: cfg.t,
        t_prime: cfg.t_prime,
        residual: cfg.residual,
    };
    #[derive(Serialize)]
    struct Row {
        x: f64,
        degenerate_value: f64,
        degenerate_shift: f64,
        general_value: f64,
        general_shift: f64,
        general_vacuous: bool,
    }
    let (mut w, csv_name) = csv_writer(out, "tail_bound_results.csv")?;
    for &x in &cfg.x_grid {
        let d = tail_bound_degenerate(&inputs, x)?;
        let g = tail_bound_general(&inputs, x)?;
        w.serialize(Row {
            x,
            degenerate_value: d.value,
            degenerate_shift: d.shift,
            general_value: g.value,
            general_shift: g.shift,
            general_vacuous: g.vacuous,
        })
        .map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    finish_csv(w)?;
    #[derive(Serialize)]
    struct Summary {
        sigma2: f64,
        points: usize,
    }
    write_manifest(
        out,
        "tail_bound",
        cfg.master_seed,
        &cfg,
        &Summary { sigma2, points: cfg.x_grid.len() },
        &[csv_name],
    )?;
    Ok(Outcome::Success)
}

// ----------------------------------------------------------------- simulate

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub process: AR1Config,
    pub n: usize,
    pub master_seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            process: AR1Config {
                coeffs: vec![0.5],
                innovation: Innovation::Gaussian { sigma: 1.0 },
                init: Init::ExactStationary,
            },
            n: 1000,
            master_seed: default_seed(),
        }
    }
}

pub fn simulate(cfg: SimulateConfig, out: &Path) -> Result<Outcome> {
    let sample = simulate_ar1(&cfg.process, cfg.n, cfg.master_seed)?;
    let (mut w, csv_name) = csv_writer(out, "simulate_results.csv")?;
    let d = sample.d();
    let header: Vec<String> = (0..d).map(|j| format!("c{j}")).collect();
    w.write_record(&header).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    for row in &sample.data {
        let rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        w.write_record(&rec).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    finish_csv(w)?;
    #[derive(Serialize)]
    struct Summary {
        n: usize,
        d: usize,
    }
    write_manifest(out, "simulate", cfg.master_seed, &cfg, &Summary { n: cfg.n, d }, &[csv_name])?;
    Ok(Outcome::Success)
}

// --------------------------------------------------------------- indep-test

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndepTestConfig {
    pub p: usize,
    pub n: usize,
    pub alpha: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub alt_correlation: f64,
    pub lag_cap: usize,
    pub master_seed: u64,
}

impl Default for IndepTestConfig {
    fn default() -> Self {
        Self {
            p: 50,
            n: 1000,
            alpha: 0.05,
            rho1: 0.3,
            rho2: 0.5,
            alt_correlation: 0.0,
            lag_cap: 10_000,
            master_seed: default_seed(),
        }
    }
}

pub fn indep_test(cfg: IndepTestConfig, out: &Path) -> Result<Outcome> {
    let sigma2 =
        sigma2_kendall_ar1(cfg.rho1, cfg.rho2, Sigma2Method::ClosedFormGaussian, cfg.lag_cap)?;
    let pair_cfg = PairConfig {
        alpha: (cfg.rho1, cfg.rho2),
        innovation_correlation: cfg.alt_correlation,
    };
    let samples = simulate_bivariate_pairs(cfg.p, &pair_cfg, cfg.n, cfg.master_seed)?;
    let stats = pair_statistics(
        &samples,
        &vec![sigma2; cfg.p],
        &vec![0.0; cfg.p],
        Sigma2Source::ClosedFormGaussian,
    )?;
    let result = max_test(&stats, cfg.alpha)?;

    #[derive(Serialize)]
    struct Row {
        pair_id: usize,
        u_stat: f64,
        sigma2: f64,
        u_tilde: f64,
    }
    let (mut w, csv_name) = csv_writer(out, "indep_test_results.csv")?;
    for s in &result.per_pair {
        w.serialize(Row { pair_id: s.pair_id, u_stat: s.u_stat, sigma2: s.sigma2, u_tilde: s.u_tilde })
            .map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    finish_csv(w)?;

    #[derive(Serialize)]
    struct Summary {
        s_n: f64,
        statistic: f64,
        q_alpha: f64,
        reject: bool,
        sigma2: f64,
    }
    write_manifest(
        out,
        "indep_test",
        cfg.master_seed,
        &cfg,
        &Summary {
            s_n: result.s_n,
            statistic: result.statistic,
            q_alpha: result.q_alpha,
            reject: result.reject,
            sigma2,
        },
        &[csv_name],
    )?;
    println!(
        "indep-test: S_n = {:.4}, statistic = {:.4}, q_alpha = {:.4} -> {}",
        result.s_n,
        result.statistic,
        result.q_alpha,
        if result.reject { "reject" } else { "accept" }
    );
    Ok(Outcome::Success)
}

// ---------------------------------------------------------------- mdp-probe

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MdpProbeConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub n: usize,
    pub reps: usize,
    pub x_grid: Vec<f64>,
    pub lag_cap: usize,
    pub master_seed: u64,
}

impl Default for MdpProbeConfig {
    fn default() -> Self {
        Self {
            rho1: 0.3,
            rho2: 0.5,
            n: 2000,
            reps: 100_000,
            x_grid: vec![0.0, 0.5, 1.0, 2.0],
            lag_cap: 10_000,
            master_seed: default_seed(),
        }
    }
}

pub fn mdp_probe(cfg: MdpProbeConfig, out: &Path) -> Result<Outcome> {
    let sigma2 =
        sigma2_kendall_ar1(cfg.rho1, cfg.rho2, Sigma2Method::ClosedFormGaussian, cfg.lag_cap)?;
    let pair_cfg = PairConfig::null_hypothesis(cfg.rho1, cfg.rho2);
    let rows = mdp_ratio_probe(&pair_cfg, sigma2, &cfg.x_grid, cfg.reps, cfg.n, cfg.master_seed)?;
    let (mut w, csv_name) = csv_writer(out, "mdp_probe_results.csv")?;
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    finish_csv(w)?;
    #[derive(Serialize)]
    struct Summary {
        sigma2: f64,
        worst_ratio_deviation: f64,
    }
    let worst = rows
        .iter()
        .map(|r| (r.ratio - 1.0).abs())
        .fold(0.0f64, f64::max);
    write_manifest(
        out,
        "mdp_probe",
        cfg.master_seed,
        &cfg,
        &Summary { sigma2, worst_ratio_deviation: worst },
        &[csv_name],
    )?;
    for r in &rows {
        println!(
            "x = {:>5}: empirical {:.6}, normal {:.6}, ratio {:.4}",
            r.x, r.empirical_tail, r.normal_tail, r.ratio
        );
    }
    Ok(Outcome::Success)
}

// ------------------------------------------------------------------ plr-fit

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlrFitConfig {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub c_h: f64,
    pub c_lambda: f64,
    /// Explicit tuning; defaults to default_tuning(n, p, c_h, c_lambda).
    pub h: Option<f64>,
    pub lambda: Option<f64>,
    pub optimizer: String,
    pub tol: f64,
    pub max_iter: usize,
    pub master_seed: u64,
}

impl Default for PlrFitConfig {
    fn default() -> Self {
        Self {
            n: 400,
            p: 100,
            s: 3,
            c_h: DEFAULT_C_H,
            c_lambda: DEFAULT_C_LAMBDA,
            h: None,
            lambda: None,
            optimizer: "coordinate_descent".into(),
            tol: 1e-8,
            max_iter: 2000,
            master_seed: default_seed(),
        }
    }
}

pub fn plr_fit(cfg: PlrFitConfig, out: &Path) -> Result<Outcome> {
    let (h0, l0) = default_tuning(cfg.n, cfg.p, cfg.c_h, cfg.c_lambda)?;
    let h = cfg.h.unwrap_or(h0);
    let lambda = cfg.lambda.unwrap_or(l0);
    let optimizer = match cfg.optimizer.as_str() {
        "coordinate_descent" => Optimizer::CoordinateDescent,
        "proximal_gradient" => Optimizer::ProximalGradient,
        other => return Err(Error::invalid(format!("unknown optimizer {other}"))),
    };
    let mut fit_cfg = PLRConfig::new(h, lambda);
    fit_cfg.optimizer = optimizer;
    fit_cfg.tol = cfg.tol;
    fit_cfg.max_iter = cfg.max_iter;

    let sim = PLRSimConfig::standard(cfg.p, cfg.s)?;
    let data = simulate_plr(&sim, cfg.n, cfg.master_seed)?;
    let fit = fit_plr(&data, &fit_cfg)?;

    #[derive(Serialize)]
    struct Row {
        k: usize,
        beta_hat: f64,
        beta_star: f64,
    }
    let (mut w, csv_name) = csv_writer(out, "plr_fit_results.csv")?;
    for k in 0..cfg.p {
        w.serialize(Row { k, beta_hat: fit.beta_hat[k], beta_star: sim.beta_star[k] })
            .map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    finish_csv(w)?;

    let sq_err: f64 = fit
        .beta_hat
        .iter()
        .zip(sim.beta_star.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    #[derive(Serialize)]
    struct Summary {
        h: f64,
        lambda: f64,
        iterations: usize,
        active_set_size: usize,
        kkt_violation: f64,
        converged: bool,
        squared_error: f64,
        final_objective: f64,
    }
    write_manifest(
        out,
        "plr_fit",
        cfg.master_seed,
        &cfg,
        &Summary {
            h,
            lambda,
            iterations: fit.iterations,
            active_set_size: fit.active_set.len(),
            kkt_violation: fit.kkt_violation,
            converged: fit.converged,
            squared_error: sq_err,
            final_objective: *fit.objective_trace.last().unwrap(),
        },
        &[csv_name],
    )?;
    println!(
        "plr-fit: |active| = {}, KKT = {:.3e}, squared error = {:.4}",
        fit.active_set.len(),
        fit.kkt_violation,
        sq_err
    );
    if fit.converged {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::Inconclusive(format!(
            "optimizer did not converge within {} iterations (KKT {})",
            fit.iterations, fit.kkt_violation
        )))
    }
}

// --------------------------------------------------------------- rate-study

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateStudyConfig {
    pub ns: Vec<usize>,
    pub p: usize,
    pub s: usize,
    pub reps: usize,
    pub master_seed: u64,
}

impl Default for RateStudyConfig {
    fn default() -> Self {
        Self { ns: vec![200, 400, 800], p: 100, s: 3, reps: 50, master_seed: default_seed() }
    }
}

pub fn rate_study(cfg: RateStudyConfig, out: &Path) -> Result<Outcome> {
    let rows = rate_experiment(&cfg.ns, cfg.p, cfg.s, cfg.reps, cfg.master_seed)?;
    let (mut w, csv_name) = csv_writer(out, "rate_study_results.csv")?;
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    finish_csv(w)?;
    #[derive(Serialize)]
    struct Summary {
        first_mse: f64,
        last_mse: f64,
        mse_ratio_last_over_first: f64,
    }
    let first = rows.first().unwrap().mse_mean;
    let last = rows.last().unwrap().mse_mean;
    write_manifest(
        out,
        "rate_study",
        cfg.master_seed,
        &cfg,
        &Summary { first_mse: first, last_mse: last, mse_ratio_last_over_first: last / first },
        &[csv_name],
    )?;
    for r in &rows {
        println!(
            "n = {:>5}: MSE = {:.5} (se {:.5}), s log p / n = {:.5}",
            r.n, r.mse_mean, r.mse_se, r.rate_proxy
        );
    }
    Ok(Outcome::Success)
}
