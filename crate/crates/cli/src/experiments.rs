//! One function per subcommand. Each reads its keys from the config, calls
//! `cfg.finish()` before any sampling, and returns its tables.

use polylab::elpp::{elpp_exact, elpp_tail_experiment, entropy_ball_volume, CloudKind, PointCloud};
use polylab::entropy::{ent, ent_n, hat_ent, hat_ent_n, OrderedPointSet};
use polylab::env::{sample_poisson_field, LatticeEnvironment, OrderStatistics};
use polylab::limits::{chi_estimate, w_sample, w_stability, CompensatedIntegralSpec};
use polylab::model::{classify_regime, coupling, thresholds, wandering_exponent, ModelParams, Region};
use polylab::polymer::{
    fluctuation_exponent, free_walk_exponent, partition_exact, partition_mc, region_a_statistic, region_b_statistic,
    region_c_statistic, CVariant, FluctCondition, FluctMethod, PartitionEstimate, RegionStat, Restriction,
};
use polylab::rng::derive_seed;
use polylab::stats::ks_two_sample;
use polylab::varprob::{beta_c_estimate, scaling_samples, solve_field, tail_experiment_t, ContinuumKind, ScalingForm};
use polylab::walk::{exact_overlap_feasible, f_profile_radial, green_many, overlap_sum, visit_probability_sweep, OverlapMode};
use polylab::{Error, Result};
use polylab_verify::{run as run_check, Suite};

use crate::config::Config;
use crate::record::{num, Outcome, Table};

// sub-streams of the master seed
const ENV: u64 = 0;
const REPLICAS: u64 = 1;

/// Gibbs estimates with fewer effective samples are reported as diagnostic failures.
const MIN_ESS: f64 = 100.0;

fn flag_ess(mut out: Outcome, min_ess: f64) -> Outcome {
    if min_ess < MIN_ESS {
        out.diagnostic_failure = Some(format!("effective sample size {min_ess:.1} below {MIN_ESS}"));
    }
    out
}

pub fn dispatch(experiment: &str, cfg: &Config, seed: u64) -> Result<Outcome> {
    match experiment {
        "model.classify" => model_classify(cfg),
        "env.sample" => env_sample(cfg, seed),
        "walk.f" => walk_f(cfg),
        "walk.green" => walk_green(cfg),
        "walk.jn" => walk_jn(cfg, seed),
        "walk.visit" => walk_visit(cfg, seed),
        "entropy.eval" => entropy_eval(cfg),
        "elpp.solve" => elpp_solve(cfg, seed),
        "elpp.tail" => elpp_tail(cfg, seed),
        "elpp.volume" => elpp_volume(cfg, seed),
        "varprob.solve" => varprob_solve(cfg, seed),
        "varprob.tail" => varprob_tail(cfg, seed),
        "varprob.betac" => varprob_betac(cfg, seed),
        "varprob.scaling" => varprob_scaling(cfg, seed),
        "polymer.exact" => polymer_partition(cfg, seed, false),
        "polymer.mc" => polymer_partition(cfg, seed, true),
        "polymer.region-stat" => polymer_region_stat(cfg, seed),
        "polymer.fluct" => polymer_fluct(cfg, seed),
        "limits.chi" => limits_chi(cfg, seed),
        "limits.w" => limits_w(cfg, seed),
        "verify.fast" => verify(cfg, Suite::Fast),
        "verify.full" => verify(cfg, Suite::Full),
        _ => Err(Error::Invalid(format!("unknown experiment `{experiment}`"))),
    }
}

fn model_params(cfg: &Config) -> Result<ModelParams> {
    let alpha: f64 = cfg.req("alpha")?;
    let h = match cfg.get::<String>("h")?.as_deref() {
        None | Some("mu") => polylab::model::pareto_mean(alpha).unwrap_or(0.0),
        Some(v) => v.parse().map_err(|_| Error::Invalid(format!("key `h`: cannot parse `{v}`")))?,
    };
    let beta_hat = match cfg.get::<String>("beta_hat")?.as_deref() {
        None => 1.0,
        Some("inf") => f64::INFINITY,
        Some(v) => v.parse().map_err(|_| Error::Invalid(format!("key `beta_hat`: cannot parse `{v}`")))?,
    };
    ModelParams::new(cfg.req("d")?, alpha, cfg.or("gamma", 0.0)?, beta_hat, h)
}

fn region_tag(r: Region) -> &'static str {
    match r {
        Region::A => "A",
        Region::B => "B",
        Region::C => "C",
        Region::BoundaryAB => "AB",
        Region::BoundaryBC => "BC",
    }
}

fn n_grid(cfg: &Config) -> Result<Vec<u64>> {
    match cfg.list::<u64>("n_grid")? {
        Some(g) => Ok(g),
        None => Ok(vec![cfg.req("n")?]),
    }
}

fn coords(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}

fn cloud_kind(cfg: &Config) -> Result<CloudKind> {
    match cfg.str_or("kind", "continuum").as_str() {
        "continuum" => Ok(CloudKind::Continuum),
        "lattice" => Ok(CloudKind::Lattice),
        other => Err(Error::Invalid(format!("kind must be continuum or lattice, got `{other}`"))),
    }
}

fn model_classify(cfg: &Config) -> Result<Outcome> {
    let p = model_params(cfg)?;
    let n: Option<u64> = cfg.get("n")?;
    cfg.finish()?;
    let region = classify_regime(&p)?;
    let xi = wandering_exponent(&p)?;
    let (g_ab, g_bc) = thresholds(p.d, p.alpha);
    let mut t = Table::new(&["d", "alpha", "gamma", "region", "xi", "gamma_ab", "gamma_bc", "n", "beta_n"]);
    let beta_n = n.map(|n| coupling(&p, n)).transpose()?;
    t.push(vec![
        p.d.to_string(),
        num(p.alpha),
        num(p.gamma),
        region_tag(region).into(),
        num(xi),
        num(g_ab),
        num(g_bc),
        n.map(|n| n.to_string()).unwrap_or_default(),
        beta_n.map(num).unwrap_or_default(),
    ]);
    Ok(Outcome::single(t))
}

fn stats_table(s: &OrderStatistics) -> Table {
    let mut t = Table::new(&["rank", "weight", "site"]);
    for (i, (w, x)) in s.weights.iter().zip(&s.sites).enumerate() {
        t.push(vec![(i + 1).to_string(), num(*w), coords(x)]);
    }
    t
}

fn env_sample(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let alpha: f64 = cfg.req("alpha")?;
    let ell: usize = cfg.or("ell", 16)?;
    let kind = cfg.str_or("kind", "lattice");
    let radius: f64 = cfg.or("radius", 8.0)?;
    cfg.finish()?;
    let s = match kind.as_str() {
        "lattice" => LatticeEnvironment::pareto(d, radius, alpha, derive_seed(seed, ENV))?.top_k(ell),
        "poisson" => sample_poisson_field(radius, alpha, ell, d, derive_seed(seed, ENV))?,
        other => return Err(Error::Invalid(format!("kind must be lattice or poisson, got `{other}`"))),
    };
    Ok(Outcome::single(stats_table(&s)))
}

fn walk_f(cfg: &Config) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let radii: Vec<f64> = cfg.list_req("r")?;
    cfg.finish()?;
    let mut t = Table::new(&["r", "f"]);
    for r in radii {
        t.push(vec![num(r), num(f_profile_radial(r, d)?)]);
    }
    Ok(Outcome::single(t))
}

fn walk_green(cfg: &Config) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let pts = cfg.points("x")?.ok_or_else(|| Error::Invalid("missing required key `x`".into()))?;
    cfg.finish()?;
    let sites: Vec<Vec<i64>> = pts.iter().map(|p| p.iter().map(|v| *v as i64).collect()).collect();
    if pts.iter().flatten().any(|v| v.fract() != 0.0) {
        return Err(Error::Invalid("x must be lattice sites".into()));
    }
    let vals = green_many(&sites, d)?;
    let mut t = Table::new(&["x", "green", "tolerance"]);
    let mut worst: f64 = 0.0;
    for (s, g) in sites.iter().zip(vals) {
        worst = worst.max(g.tolerance);
        t.push(vec![s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "), num(g.value), num(g.tolerance)]);
    }
    Ok(Outcome::single(t).diag("quadrature_tolerance", worst))
}

fn walk_jn(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let grid = n_grid(cfg)?;
    let replicas: u64 = cfg.or("replicas", 10_000)?;
    let exact = cfg.str_or("method", "auto");
    cfg.finish()?;
    let mut t = Table::new(&["n", "j_n", "stderr", "method"]);
    for n in grid {
        let use_exact = match exact.as_str() {
            "exact" => true,
            "mc" => false,
            "auto" => exact_overlap_feasible(n, d),
            other => return Err(Error::Invalid(format!("method must be auto, exact or mc, got `{other}`"))),
        };
        let mode = if use_exact { OverlapMode::Exact } else { OverlapMode::Mc { replicas, seed: derive_seed(seed, REPLICAS) } };
        let e = overlap_sum(n, d, mode)?;
        t.push(vec![n.to_string(), num(e.mean), num(e.stderr), if use_exact { "exact" } else { "mc" }.into()]);
    }
    Ok(Outcome::single(t))
}

fn walk_visit(cfg: &Config, seed: u64) -> Result<Outcome> {
    let pts = cfg.points("points")?.ok_or_else(|| Error::Invalid("missing required key `points`".into()))?;
    let grid: Vec<usize> = n_grid(cfg)?.into_iter().map(|n| n as usize).collect();
    let replicas: u64 = cfg.or("replicas", 10_000)?;
    cfg.finish()?;
    let delta: Vec<Vec<i64>> = pts.iter().map(|p| p.iter().map(|v| *v as i64).collect()).collect();
    let rows = visit_probability_sweep(&delta, &grid, replicas, derive_seed(seed, REPLICAS))?;
    let mut t = Table::new(&["n", "probability", "stderr", "zero_hit"]);
    let mut zero = false;
    for (n, r) in grid.iter().zip(rows) {
        zero |= r.zero_hit;
        t.push(vec![n.to_string(), num(r.estimate.mean), num(r.estimate.stderr), r.zero_hit.to_string()]);
    }
    Ok(Outcome::single(t).diag("zero_hit", zero))
}

fn entropy_eval(cfg: &Config) -> Result<Outcome> {
    let pts = cfg.points("points")?.ok_or_else(|| Error::Invalid("missing required key `points`".into()))?;
    let n: f64 = cfg.req("n")?;
    cfg.finish()?;
    let d = pts.first().map(Vec::len).unwrap_or(0);
    let delta = OrderedPointSet::new(pts)?;
    let e = ent(&delta, d);
    let (en, _) = ent_n(&delta, d, n);
    let hat = hat_ent_n(&delta, n);
    let mut t = Table::new(&["ent", "ent_n", "hat_ent_n", "hat_ent", "allocation"]);
    t.push(vec![num(e), num(en), num(hat.value), num(hat_ent(&delta)), coords(&hat.allocation)]);
    Ok(Outcome::single(t).diag("allocation_tolerance", hat.tolerance))
}

fn elpp_solve(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let b: f64 = cfg.req("b")?;
    let kind = cloud_kind(cfg)?;
    let pts = cfg.points("points")?;
    let m: usize = cfg.or("m", 8)?;
    let r: f64 = cfg.or("r", 1.0)?;
    cfg.finish()?;
    let cloud = match pts {
        Some(p) => PointCloud::new(p, r, kind)?,
        None => {
            let mut rng = polylab::rng::Stream::new(derive_seed(seed, ENV), "cli-cloud").rng(0);
            match kind {
                CloudKind::Continuum => PointCloud::continuum(&mut rng, m, r, d),
                CloudKind::Lattice => PointCloud::lattice(&mut rng, m, r, d)?,
            }
        }
    };
    let res = elpp_exact(&cloud, b, d)?;
    let mut t = Table::new(&["step", "index", "point"]);
    for (i, (&j, x)) in res.order.iter().zip(&res.witness.points).enumerate() {
        t.push(vec![(i + 1).to_string(), j.to_string(), coords(x)]);
    }
    Ok(Outcome::single(t).diag("k_max", res.k_max).diag("entropy_used", res.entropy_used))
}

fn elpp_tail(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let m: usize = cfg.req("m")?;
    let r: f64 = cfg.req("r")?;
    let b: f64 = cfg.req("b")?;
    let c: f64 = cfg.req("c")?;
    let kind = cloud_kind(cfg)?;
    let replicas: u64 = cfg.or("replicas", 10_000)?;
    let k_grid: Vec<usize> = cfg.list("k_grid")?.unwrap_or_else(|| (1..=m).collect());
    cfg.finish()?;
    let rows = elpp_tail_experiment(kind, m, r, b, d, &k_grid, replicas, derive_seed(seed, REPLICAS), c)?;
    let mut t = Table::new(&["k", "hits", "replicas", "p_hat", "ci_low", "ci_high", "bound", "zero_hit"]);
    let mut above = 0;
    for row in &rows {
        if row.p_hat > row.bound {
            above += 1;
        }
        t.push(vec![
            row.k.to_string(),
            row.hits.to_string(),
            row.replicas.to_string(),
            num(row.p_hat),
            num(row.ci_low),
            num(row.ci_high),
            num(row.bound),
            row.zero_hit.to_string(),
        ]);
    }
    Ok(Outcome::single(t).diag("points_above_bound", above))
}

fn elpp_volume(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let k: usize = cfg.req("k")?;
    let b: f64 = cfg.req("b")?;
    let replicas: u64 = cfg.or("replicas", 100_000)?;
    cfg.finish()?;
    let v = entropy_ball_volume(k, b, d, replicas, derive_seed(seed, REPLICAS))?;
    let mut t = Table::new(&["mc", "stderr", "display", "geometric", "zero_hit"]);
    t.push(vec![num(v.mc.mean), num(v.mc.stderr), num(v.display), num(v.geometric), v.zero_hit.to_string()]);
    Ok(Outcome::single(t))
}

fn continuum_kind(cfg: &Config) -> Result<ContinuumKind> {
    match cfg.str_or("kind", "quadratic").as_str() {
        "quadratic" => Ok(ContinuumKind::Quadratic),
        "hat" => Ok(ContinuumKind::Hat),
        other => Err(Error::Invalid(format!("kind must be quadratic or hat, got `{other}`"))),
    }
}

fn varprob_solve(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let alpha: f64 = cfg.req("alpha")?;
    let beta: f64 = cfg.req("beta")?;
    let q: f64 = cfg.or("q", 8.0)?;
    let ell: usize = cfg.or("ell", 12)?;
    let kind = continuum_kind(cfg)?;
    cfg.finish()?;
    let field = sample_poisson_field(q, alpha, ell, d, derive_seed(seed, ENV))?;
    let sol = solve_field(&field, beta, d, kind)?;
    let mut t = Table::new(&["step", "index", "weight", "point"]);
    for (i, (&j, x)) in sol.indices.iter().zip(&sol.witness.points).enumerate() {
        t.push(vec![(i + 1).to_string(), j.to_string(), num(field.weights[j]), coords(x)]);
    }
    Ok(Outcome::single(t)
        .diag("value", sol.value)
        .diag("energy", sol.energy)
        .diag("entropy", sol.entropy)
        .diag("method", format!("{:?}", sol.method)))
}

fn varprob_tail(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let alpha: f64 = cfg.req("alpha")?;
    let n: f64 = cfg.req("n")?;
    let r: f64 = cfg.req("r")?;
    let beta: f64 = cfg.or("beta", 1.0)?;
    let ell: usize = cfg.or("ell", 8)?;
    let t_grid: Vec<f64> = cfg.list_req("t_grid")?;
    let replicas: u64 = cfg.or("replicas", 10_000)?;
    cfg.finish()?;
    let rows = tail_experiment_t(alpha, n, r, beta, ell, d, &t_grid, replicas, derive_seed(seed, REPLICAS))?;
    let mut t = Table::new(&["t", "hits", "replicas", "p_hat", "ci_high", "zero_hit"]);
    for row in rows {
        t.push(vec![num(row.t), row.hits.to_string(), row.replicas.to_string(), num(row.p_hat), num(row.ci_high), row.zero_hit.to_string()]);
    }
    Ok(Outcome::single(t))
}

fn varprob_betac(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let alpha: f64 = cfg.req("alpha")?;
    let q: f64 = cfg.or("q", 8.0)?;
    let ell: usize = cfg.or("ell", 16)?;
    let grid: Vec<f64> = cfg.list("beta_grid")?.unwrap_or_else(|| (-10..=2).map(|k| 2f64.powi(k)).collect());
    let samples: u64 = cfg.or("samples", 100)?;
    let scales: usize = cfg.or("scales", 30)?;
    cfg.finish()?;
    let rows = beta_c_estimate(alpha, d, q, ell, &grid, samples, derive_seed(seed, ENV), scales)?;
    let mut t = Table::new(&["sample", "ratio", "beta_c", "exhaustive"]);
    let lowest = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut at_lowest = 0;
    for row in &rows {
        if row.beta_c.is_some_and(|b| b <= lowest) {
            at_lowest += 1;
        }
        t.push(vec![row.sample.to_string(), num(row.ratio), row.beta_c.map(num).unwrap_or_default(), row.exhaustive.to_string()]);
    }
    Ok(Outcome::single(t).diag("fraction_at_lowest_beta", at_lowest as f64 / rows.len().max(1) as f64))
}

fn varprob_scaling(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let alpha: f64 = cfg.req("alpha")?;
    let beta: f64 = cfg.req("beta")?;
    let q: f64 = cfg.or("q", 8.0)?;
    let ell: usize = cfg.or("ell", 12)?;
    let samples: u64 = cfg.or("samples", 1000)?;
    let form = match cfg.str_or("form", "finite-domain").as_str() {
        "finite-domain" => ScalingForm::FiniteDomain,
        "literal" => ScalingForm::Literal,
        other => return Err(Error::Invalid(format!("form must be finite-domain or literal, got `{other}`"))),
    };
    cfg.finish()?;
    let (lhs, rhs) = scaling_samples(q, beta, ell, alpha, d, samples, derive_seed(seed, ENV), form)?;
    let mut t = Table::new(&["sample", "t_beta", "scaled_t_1"]);
    for (i, (a, b)) in lhs.iter().zip(&rhs).enumerate() {
        t.push(vec![i.to_string(), num(*a), num(*b)]);
    }
    Ok(Outcome::single(t).diag("ks", ks_two_sample(&lhs, &rhs)))
}

fn partition_row(t: &mut Table, e: &PartitionEstimate, beta: f64) {
    t.push(vec![
        e.n.to_string(),
        num(beta),
        num(e.log_z),
        num(e.stderr),
        e.replicas.to_string(),
        num(e.ess),
        num(e.top_weight_fraction),
        e.heavy_weight_warning.to_string(),
    ]);
}

fn polymer_partition(cfg: &Config, seed: u64, mc: bool) -> Result<Outcome> {
    let p = model_params(cfg)?;
    let grid = n_grid(cfg)?;
    let beta_fixed: Option<f64> = cfg.get("beta")?;
    let replicas: u64 = if mc { cfg.or("replicas", 100_000)? } else { 0 };
    cfg.finish()?;
    let env = LatticeEnvironment::pareto(p.d, 0.0, p.alpha, derive_seed(seed, ENV))?;
    let mut t = Table::new(&["n", "beta", "log_z", "stderr", "replicas", "ess", "top_weight_fraction", "heavy_weight_warning"]);
    let mut min_ess = f64::INFINITY;
    let mut warn = false;
    for n in grid {
        let beta = match beta_fixed {
            Some(b) => b,
            None => coupling(&p, n)?,
        };
        // shared replica seed across the grid
        let e = if mc {
            partition_mc(&env, n, beta, p.h, p.d, replicas, derive_seed(seed, REPLICAS), Restriction::None)?
        } else {
            partition_exact(&env, n, beta, p.h, p.d)?
        };
        if mc {
            min_ess = min_ess.min(e.ess);
            warn |= e.heavy_weight_warning;
        }
        partition_row(&mut t, &e, beta);
    }
    let mut out = Outcome::single(t);
    if mc {
        out = flag_ess(out.diag("min_ess", min_ess).diag("heavy_weight_warning", warn), min_ess);
    }
    Ok(out)
}

fn polymer_region_stat(cfg: &Config, seed: u64) -> Result<Outcome> {
    let p = model_params(cfg)?;
    let grid = n_grid(cfg)?;
    let replicas: u64 = cfg.or("replicas", 10_000)?;
    let variant = match cfg.str_or("variant", "gaussian").as_str() {
        "gaussian" => CVariant::Gaussian,
        "chi" => CVariant::Chi,
        "w" => CVariant::W,
        other => return Err(Error::Invalid(format!("variant must be gaussian, chi or w, got `{other}`"))),
    };
    let region = classify_regime(&p)?;
    let range_replicas: u64 = if region == Region::C { cfg.or("range_replicas", 2000)? } else { 0 };
    cfg.finish()?;
    let env = LatticeEnvironment::pareto(p.d, 0.0, p.alpha, derive_seed(seed, ENV))?;
    let rs = derive_seed(seed, REPLICAS);
    let mut t = Table::new(&["n", "region", "value", "stderr", "beta_n", "normalization", "centering", "log_z", "ess"]);
    let mut min_ess = f64::INFINITY;
    for n in grid {
        let s: RegionStat = match region {
            Region::A => region_a_statistic(&p, n, &env, replicas, rs)?,
            Region::B => region_b_statistic(&p, n, &env, replicas, rs)?,
            Region::C => region_c_statistic(&p, n, &env, replicas, rs, variant, range_replicas)?,
            r => {
                return Err(Error::Window(format!(
                    "region statistics are defined inside regions A, B and C; (d, alpha, gamma) lies on boundary {}",
                    region_tag(r)
                )))
            }
        };
        min_ess = min_ess.min(s.partition.ess);
        t.push(vec![
            n.to_string(),
            region_tag(region).into(),
            num(s.value),
            num(s.stderr),
            num(s.beta_n),
            num(s.normalization),
            num(s.centering),
            num(s.partition.log_z),
            num(s.partition.ess),
        ]);
    }
    Ok(flag_ess(Outcome::single(t).diag("min_ess", min_ess), min_ess))
}

fn polymer_fluct(cfg: &Config, seed: u64) -> Result<Outcome> {
    let grid: Vec<u64> = cfg.list_req("n_grid")?;
    let level: f64 = cfg.or("level", 0.95)?;
    let method = cfg.str_or("method", "plain");
    let rec = if method == "free" {
        let d: usize = cfg.req("d")?;
        let replicas: u64 = cfg.or("replicas", 2000)?;
        let batches: usize = cfg.or("batches", 20)?;
        cfg.finish()?;
        free_walk_exponent(d, &grid, replicas, batches, level, seed)?
    } else {
        let p = model_params(cfg)?;
        let environments: u64 = cfg.or("environments", 8)?;
        let m = match method.as_str() {
            "plain" => FluctMethod::Plain { replicas: cfg.or("replicas", 2000)? },
            "mcmc" => FluctMethod::WitnessMcmc { moves: cfg.or("moves", 20_000)?, q: cfg.or("q", 2.0)?, ell: cfg.or("ell", 12)? },
            other => return Err(Error::Invalid(format!("method must be free, plain or mcmc, got `{other}`"))),
        };
        let cond_ell: usize = cfg.or("condition_ell", 16)?;
        let condition = match cfg.str_or("condition", "none").as_str() {
            "none" => FluctCondition::None,
            "hat-positive" => FluctCondition::HatPositive { ell: cond_ell },
            "hat-zero" => FluctCondition::HatZero { ell: cond_ell },
            other => return Err(Error::Invalid(format!("condition must be none, hat-positive or hat-zero, got `{other}`"))),
        };
        cfg.finish()?;
        fluctuation_exponent(&p, &grid, environments, m, condition, level, seed)?
    };
    let mut t = Table::new(&["n", "median_max_displacement"]);
    for (n, m) in rec.n_grid.iter().zip(&rec.medians) {
        t.push(vec![n.to_string(), num(*m)]);
    }
    let mut out = Outcome::single(t)
        .diag("slope", rec.slope)
        .diag("ci_low", rec.ci.0)
        .diag("ci_high", rec.ci.1)
        .diag("min_ess", rec.min_ess)
        .diag("ess_flag", rec.ess_flag)
        .diag("environments_kept", rec.environments_kept)
        .diag("condition", format!("{:?}", rec.condition));
    if rec.ess_flag {
        out.diagnostic_failure = Some(format!("effective sample size collapsed (min {})", rec.min_ess));
    }
    Ok(out)
}

fn limits_chi(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let alpha: f64 = cfg.req("alpha")?;
    let r: f64 = cfg.or("r", 10.0)?;
    let samples: usize = cfg.or("samples", 1000)?;
    cfg.finish()?;
    let s = chi_estimate(alpha, d, r, samples, derive_seed(seed, REPLICAS))?;
    let mut t = Table::new(&["sample", "chi"]);
    for (i, v) in s.values.iter().enumerate() {
        t.push(vec![i.to_string(), num(*v)]);
    }
    Ok(Outcome::single(t).diag("tail_bound", s.tail_bound).diag("delta", s.delta).diag("sites", s.sites))
}

fn limits_w(cfg: &Config, seed: u64) -> Result<Outcome> {
    let d: usize = cfg.req("d")?;
    let alpha: f64 = cfg.req("alpha")?;
    let beta: f64 = cfg.or("beta", 0.0)?;
    let mut spec = CompensatedIntegralSpec::with_defaults(alpha, d, beta);
    if let Some(k) = cfg.get("k")? {
        spec.k = k;
        spec.eps = polylab::limits::median_top_weight(alpha, d, k) * 1e-2;
    }
    if let Some(e) = cfg.get("eps")? {
        spec.eps = e;
    }
    let samples: usize = cfg.or("samples", 1000)?;
    let stability: bool = cfg.or("stability", false)?;
    cfg.finish()?;
    let mut t = Table::new(&["sample", "w", "eps_channel", "k_level", "overflow"]);
    let base = derive_seed(seed, REPLICAS);
    for i in 0..samples {
        let w = w_sample(&spec, derive_seed(base, i as u64))?;
        t.push(vec![i.to_string(), num(w.value), num(w.budget.eps_channel), num(w.budget.term5_level), w.budget.overflow.to_string()]);
    }
    let mut out = Outcome::single(t).diag("k", spec.k).diag("eps", spec.eps);
    if stability {
        let s = w_stability(&spec, samples, derive_seed(seed, 2))?;
        out = out
            .diag("k_doubling_median", s.k_doubling_median)
            .diag("k_bound", s.k_bound)
            .diag("eps_halving_median", s.eps_halving_median)
            .diag("eps_bound", s.eps_bound);
        if !s.within() {
            out.diagnostic_failure = Some("stability channel exceeded its bound".into());
        }
    }
    Ok(out)
}

fn verify(cfg: &Config, suite: Suite) -> Result<Outcome> {
    let only: Option<Vec<u8>> = cfg.list("only")?;
    cfg.finish()?;
    let ids = only.unwrap_or_else(|| (1..=12).collect());
    let mut t = Table::new(&["criterion", "name", "pass", "seconds", "detail"]);
    let mut failed = Vec::new();
    for id in ids {
        if !(1..=12).contains(&id) {
            return Err(Error::Invalid(format!("criteria are numbered 1..=12, got {id}")));
        }
        let c = run_check(id, suite);
        eprintln!("{c}");
        if !c.pass {
            failed.push(id.to_string());
        }
        t.push(vec![id.to_string(), c.name.into(), c.pass.to_string(), format!("{:.1}", c.seconds), c.detail]);
    }
    let mut out = Outcome::single(t);
    if !failed.is_empty() {
        out.diagnostic_failure = Some(format!("criteria failed: {}", failed.join(", ")));
    }
    Ok(out)
}
