//! Energy–entropy variational problems over ordered point sets.
//!
//! The discrete problem maximizes β·Ω(Δ) − cost(Δ) over ordered subsets Δ of
//! the top-ℓ sites, where the cost is Ent_N (quadratic) or ĴEnt_N (rate).
//! The empty set is always feasible with value 0.

use crate::entropy::{dist2, hat_ent_n, norm1, norm2, rate_jd, OrderedPointSet, SubsetDp};
use crate::env::{sample_poisson_field, FieldKind, LatticeEnvironment, OrderStatistics};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, Stream};
use crate::special::unit_ball_volume;
use crate::stats::wilson;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

pub const EXACT_ELL_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyKind {
    Quadratic,
    Rate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    /// Euclidean-optimal order with 2-swap refinement, exact time allocation.
    OrderHeuristic,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarProbSolution {
    pub value: f64,
    pub witness: OrderedPointSet,
    /// Indices into the order statistics, in visit order.
    pub indices: Vec<usize>,
    pub energy: f64,
    pub entropy: f64,
    pub ell_used: usize,
    pub method: Method,
}

impl VarProbSolution {
    fn empty(ell: usize, method: Method) -> Self {
        VarProbSolution {
            value: 0.0,
            witness: OrderedPointSet::empty(),
            indices: vec![],
            energy: 0.0,
            entropy: 0.0,
            ell_used: ell,
            method,
        }
    }

    fn scaled(mut self, a: f64) -> Self {
        self.value *= a;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyMode {
    TopEll,
    BeyondEll,
    All,
}

pub struct EnergySpec<'a> {
    pub stats: &'a OrderStatistics,
    pub ell: usize,
    pub mode: EnergyMode,
}

/// Ω(Δ): total weight of the selected order statistics whose site lies in Δ.
pub fn omega_energy(delta: &OrderedPointSet, spec: &EnergySpec) -> f64 {
    let ell = spec.ell.min(spec.stats.len());
    let range = match spec.mode {
        EnergyMode::TopEll => 0..ell,
        EnergyMode::BeyondEll => ell..spec.stats.len(),
        EnergyMode::All => 0..spec.stats.len(),
    };
    range
        .filter(|&i| delta.points.contains(&spec.stats.sites[i]))
        .map(|i| spec.stats.weights[i])
        .sum()
}

/// Cost of an ordered tuple of points.
fn cost_of(points: &[Vec<f64>], n: f64, d: usize, kind: EntropyKind) -> f64 {
    match kind {
        EntropyKind::Quadratic => {
            let mut cur = vec![0.0; d];
            let mut l = 0.0;
            for p in points {
                l += dist2(&cur, p);
                cur.clone_from(p);
            }
            d as f64 / 2.0 * l * l / n
        }
        EntropyKind::Rate => match OrderedPointSet::new(points.to_vec()) {
            Ok(s) => hat_ent_n(&s, n).value,
            Err(_) => f64::INFINITY,
        },
    }
}

fn build_solution(
    weights: &[f64],
    sites: &[Vec<f64>],
    order: Vec<usize>,
    offset: usize,
    beta: f64,
    n: f64,
    d: usize,
    kind: EntropyKind,
    ell: usize,
    method: Method,
) -> Result<VarProbSolution> {
    if order.is_empty() {
        return Ok(VarProbSolution::empty(ell, method));
    }
    let pts: Vec<Vec<f64>> = order.iter().map(|&i| sites[i].clone()).collect();
    let energy: f64 = order.iter().map(|&i| weights[i]).sum();
    let entropy = cost_of(&pts, n, d, kind);
    let value = beta * energy - entropy;
    if !(value > 0.0) {
        return Ok(VarProbSolution::empty(ell, method));
    }
    Ok(VarProbSolution {
        value,
        witness: OrderedPointSet::new(pts)?,
        indices: order.iter().map(|i| i + offset).collect(),
        energy,
        entropy,
        ell_used: ell,
        method,
    })
}

/// Refine an order by pairwise swaps while the cost decreases.
fn two_swap(sites: &[Vec<f64>], order: &mut [usize], n: f64, d: usize, kind: EntropyKind) -> f64 {
    let pts = |o: &[usize]| o.iter().map(|&i| sites[i].clone()).collect::<Vec<_>>();
    let mut best = cost_of(&pts(order), n, d, kind);
    loop {
        let mut improved = false;
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                order.swap(i, j);
                let c = cost_of(&pts(order), n, d, kind);
                if c < best * (1.0 - 1e-12) {
                    best = c;
                    improved = true;
                } else {
                    order.swap(i, j);
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Exact solver over a family of at most [`EXACT_ELL_CAP`] weighted sites.
#[allow(clippy::too_many_arguments)]
fn solve_exact(
    weights: &[f64],
    sites: &[Vec<f64>],
    offset: usize,
    n: f64,
    beta: f64,
    d: usize,
    kind: EntropyKind,
    ell: usize,
) -> Result<VarProbSolution> {
    let m = weights.len();
    if m == 0 || beta == 0.0 {
        return Ok(VarProbSolution::empty(ell, Method::Exact));
    }
    let dp = SubsetDp::build(sites)?;
    let full = 1usize << m;
    let mut wsum = vec![0.0; full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        wsum[mask] = wsum[mask & (mask - 1)] + weights[low];
    }
    let half_d = d as f64 / 2.0;
    match kind {
        EntropyKind::Quadratic => {
            let (mut best, mut arg) = (0.0, 0usize);
            for mask in 1..full {
                let (l, _) = dp.best(mask);
                let v = beta * wsum[mask] - half_d * l * l / n;
                if v > best {
                    best = v;
                    arg = mask;
                }
            }
            if arg == 0 {
                return Ok(VarProbSolution::empty(ell, Method::Exact));
            }
            let (_, end) = dp.best(arg);
            let order = dp.order(sites, arg, end);
            let mut sol = build_solution(weights, sites, order, offset, beta, n, d, kind, ell, Method::Exact)?;
            // Report the DP value; the recomputed one differs only by rounding.
            sol.value = best;
            Ok(sol)
        }
        EntropyKind::Rate => {
            // ĴEnt_N ≥ L²/(2N), so βW − L²/(2N) bounds each subset from above.
            let mut cands: Vec<(f64, usize)> = (1..full)
                .map(|mask| {
                    let (l, _) = dp.best(mask);
                    (beta * wsum[mask] - l * l / (2.0 * n), mask)
                })
                .filter(|c| c.0 > 0.0)
                .collect();
            cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let (mut best, mut arg): (f64, Vec<usize>) = (0.0, vec![]);
            for (ub, mask) in cands {
                if ub <= best {
                    break;
                }
                let (_, end) = dp.best(mask);
                let mut order = dp.order(sites, mask, end);
                let c = two_swap(sites, &mut order, n, d, kind);
                let v = beta * wsum[mask] - c;
                if v > best {
                    best = v;
                    arg = order;
                }
            }
            build_solution(weights, sites, arg, offset, beta, n, d, kind, ell, Method::OrderHeuristic)
        }
    }
}

/// Greedy cheapest insertion of the remaining sites into an exact core.
#[allow(clippy::too_many_arguments)]
fn solve_heuristic(
    weights: &[f64],
    sites: &[Vec<f64>],
    offset: usize,
    n: f64,
    beta: f64,
    d: usize,
    kind: EntropyKind,
    ell: usize,
) -> Result<VarProbSolution> {
    let core = solve_exact(&weights[..EXACT_ELL_CAP], &sites[..EXACT_ELL_CAP], 0, n, beta, d, kind, ell)?;
    let mut order = core.indices.clone();
    let value_of = |o: &[usize]| -> f64 {
        let pts: Vec<Vec<f64>> = o.iter().map(|&i| sites[i].clone()).collect();
        beta * o.iter().map(|&i| weights[i]).sum::<f64>() - cost_of(&pts, n, d, kind)
    };
    let mut best = if order.is_empty() { 0.0 } else { value_of(&order) };
    loop {
        let mut step: Option<(f64, Vec<usize>)> = None;
        for j in 0..weights.len() {
            if order.contains(&j) {
                continue;
            }
            for pos in 0..=order.len() {
                let mut o = order.clone();
                o.insert(pos, j);
                let v = value_of(&o);
                if v > best && step.as_ref().is_none_or(|s| v > s.0) {
                    step = Some((v, o));
                }
            }
        }
        match step {
            Some((v, o)) => {
                best = v;
                order = o;
            }
            None => break,
        }
    }
    build_solution(weights, sites, order, offset, beta, n, d, kind, ell, Method::Heuristic)
}

fn solve_family(
    weights: &[f64],
    sites: &[Vec<f64>],
    offset: usize,
    n: f64,
    beta: f64,
    d: usize,
    kind: EntropyKind,
    allow_heuristic: bool,
) -> Result<VarProbSolution> {
    if !(beta >= 0.0) || !(n > 0.0) {
        return invalid("beta must be non-negative and N positive");
    }
    let ell = weights.len();
    if ell <= EXACT_ELL_CAP {
        solve_exact(weights, sites, offset, n, beta, d, kind, ell)
    } else if allow_heuristic {
        solve_heuristic(weights, sites, offset, n, beta, d, kind, ell)
    } else {
        Err(Error::TooLarge(format!("exact mode handles at most {EXACT_ELL_CAP} sites, got {ell}")))
    }
}

/// 𝒯_{N}^{β,(ℓ)} over the top-ℓ order statistics.
pub fn discrete_t(
    stats: &OrderStatistics,
    n: f64,
    beta: f64,
    ell: usize,
    d: usize,
    kind: EntropyKind,
) -> Result<VarProbSolution> {
    if ell > stats.len() {
        return invalid(format!("ell = {ell} exceeds the {} available sites", stats.len()));
    }
    solve_family(&stats.weights[..ell], &stats.sites[..ell], 0, n, beta, d, kind, false)
}

/// As [`discrete_t`], falling back to a labelled heuristic above the cap.
pub fn discrete_t_any(
    stats: &OrderStatistics,
    n: f64,
    beta: f64,
    ell: usize,
    d: usize,
    kind: EntropyKind,
) -> Result<VarProbSolution> {
    if ell > stats.len() {
        return invalid(format!("ell = {ell} exceeds the {} available sites", stats.len()));
    }
    solve_family(&stats.weights[..ell], &stats.sites[..ell], 0, n, beta, d, kind, true)
}

/// 𝒯_{N}^{β,(>ℓ)}: the same problem over the weights beyond the top ℓ.
pub fn discrete_t_beyond(stats: &OrderStatistics, n: f64, beta: f64, ell: usize, d: usize) -> Result<VarProbSolution> {
    if ell > stats.len() {
        return invalid(format!("ell = {ell} exceeds the {} available sites", stats.len()));
    }
    let mut sol = solve_family(
        &stats.weights[ell..],
        &stats.sites[ell..],
        ell,
        n,
        beta,
        d,
        EntropyKind::Quadratic,
        true,
    )?;
    sol.ell_used = ell;
    Ok(sol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContinuumKind {
    /// β·π^{(ℓ)} − Ent.
    Quadratic,
    /// π^{(ℓ)} − ĴEnt/β.
    Hat,
}

/// Solve a continuum problem on an already sampled field.
pub fn solve_field(field: &OrderStatistics, beta: f64, d: usize, kind: ContinuumKind) -> Result<VarProbSolution> {
    match kind {
        ContinuumKind::Quadratic => discrete_t(field, 1.0, beta, field.len(), d, EntropyKind::Quadratic),
        ContinuumKind::Hat => {
            if !(beta > 0.0) {
                return invalid("the hat problem needs beta > 0");
            }
            let sol = discrete_t(field, 1.0, beta, field.len(), d, EntropyKind::Rate)?;
            Ok(sol.scaled(1.0 / beta))
        }
    }
}

/// 𝒯_{β,q}^{(ℓ)} (or its hat version) on a fresh Poisson field.
pub fn continuum_t_trunc(
    q: f64,
    beta: f64,
    ell: usize,
    alpha: f64,
    d: usize,
    seed: u64,
    kind: ContinuumKind,
) -> Result<VarProbSolution> {
    if ell > EXACT_ELL_CAP {
        return Err(Error::TooLarge(format!("ell must be at most {EXACT_ELL_CAP}")));
    }
    let field = sample_poisson_field(q, alpha, ell, d, seed)?;
    solve_field(&field, beta, d, kind)
}

/// min over ordered Δ of ĴEnt(Δ)/π(Δ): the hat value is positive exactly
/// for β above this ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalRatio {
    pub ratio: f64,
    pub indices: Vec<usize>,
    /// False when the search hit its node budget; the ratio is then an upper bound.
    pub exhaustive: bool,
}

/// Branch and bound over origin-anchored ordered subsets, using
/// ĴEnt ≥ (ℓ¹ length)²/2 and ĴEnt = ∞ beyond ℓ¹ length 1.
pub fn critical_ratio(field: &OrderStatistics, node_budget: usize) -> CriticalRatio {
    critical_ratio_below(field, node_budget, f64::INFINITY)
}

/// Best single-point ratio J_d(Y_i)/M_i with its index.
pub fn singleton_ratio(field: &OrderStatistics) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, y) in field.sites.iter().enumerate() {
        if norm1(y) <= 1.0 {
            let r = rate_jd(y) / field.weights[i];
            if best.is_none_or(|b| r < b.0) {
                best = Some((r, i));
            }
        }
    }
    best
}

/// As [`critical_ratio`], searching only for ratios below `bound`; returns
/// `bound` with no indices when none exists.
pub fn critical_ratio_below(field: &OrderStatistics, node_budget: usize, bound: f64) -> CriticalRatio {
    let m = field.len();
    let sites = &field.sites;
    let w = &field.weights;
    let mut best = CriticalRatio { ratio: bound, indices: vec![], exhaustive: true };
    if let Some((r, i)) = singleton_ratio(field) {
        if r < best.ratio {
            best.ratio = r;
            best.indices = vec![i];
        }
    }
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    struct Frame {
        path: Vec<usize>,
        len1: f64,
        weight: f64,
    }
    let mut stack: Vec<Frame> = Vec::new();
    for i in 0..m {
        let len1 = norm1(&sites[i]);
        if len1 <= 1.0 {
            stack.push(Frame { path: vec![i], len1, weight: w[i] });
        }
    }
    let mut nodes = 0usize;
    while let Some(f) = stack.pop() {
        nodes += 1;
        if nodes > node_budget {
            best.exhaustive = false;
            break;
        }
        let last = &sites[*f.path.last().unwrap()];
        if f.path.len() > 1 && f.len1 * f.len1 / (2.0 * f.weight) < best.ratio {
            let pts: Vec<Vec<f64>> = f.path.iter().map(|&i| sites[i].clone()).collect();
            let s = OrderedPointSet { points: pts };
            let r = hat_ent_n(&s, 1.0).value / f.weight;
            if r < best.ratio {
                best.ratio = r;
                best.indices = f.path.clone();
            }
        }
        let reach: Vec<usize> = (0..m)
            .filter(|j| !f.path.contains(j) && f.len1 + l1(last, &sites[*j]) <= 1.0)
            .collect();
        let w_reach: f64 = reach.iter().map(|&j| w[j]).sum();
        if reach.is_empty() || f.len1 * f.len1 / (2.0 * (f.weight + w_reach)) >= best.ratio {
            continue;
        }
        for &j in reach.iter().rev() {
            let len1 = f.len1 + l1(last, &sites[j]);
            let mut path = f.path.clone();
            path.push(j);
            stack.push(Frame { path, len1, weight: f.weight + w[j] });
        }
    }
    best
}

/// Top-ℓ fields of the nested balls B(0, q 2^{-j}), j = 0..scales, all
/// cut from one Poisson realization: each annulus contributes its own top ℓ,
/// merged from the inside out.
pub fn nested_poisson_fields(q: f64, alpha: f64, ell: usize, d: usize, scales: usize, seed: u64) -> Result<Vec<OrderStatistics>> {
    if ell == 0 || scales == 0 || !(q > 0.0) || !(alpha > 0.0) {
        return invalid("need ell, scales, q and alpha positive");
    }
    let stream = Stream::new(seed, "nested-field");
    let vd = unit_ball_volume(d);
    let radius = |j: usize| q * 0.5f64.powi(j as i32);
    let region = |rng: &mut rand_chacha::ChaCha8Rng, r_in: f64, r_out: f64| -> Vec<(f64, Vec<f64>)> {
        let df = d as f64;
        let vol = vd * (r_out.powf(df) - r_in.powf(df));
        let mut g = 0.0;
        (0..ell)
            .map(|_| {
                let e: f64 = rng.sample(Exp1);
                g += e;
                let w = (vol / g).powf(1.0 / alpha);
                let u: f64 = rng.random();
                let rad = (r_in.powf(df) + u * (r_out.powf(df) - r_in.powf(df))).powf(1.0 / df);
                let z: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let nz = norm2(&z);
                (w, z.into_iter().map(|c| c / nz * rad).collect())
            })
            .collect()
    };
    let mut rng = stream.rng(scales as u64);
    let mut cur = region(&mut rng, 0.0, radius(scales - 1));
    let mut out = vec![cur.clone()];
    for j in (0..scales - 1).rev() {
        let mut rng = stream.rng(j as u64);
        cur.extend(region(&mut rng, radius(j + 1), radius(j)));
        cur.sort_by(|a, b| b.0.total_cmp(&a.0));
        cur.truncate(ell);
        out.push(cur.clone());
    }
    out.reverse();
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(j, v)| OrderStatistics {
            weights: v.iter().map(|p| p.0).collect(),
            sites: v.into_iter().map(|p| p.1).collect(),
            domain_radius: radius(j),
            kind: FieldKind::Continuum,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaCRow {
    pub sample: u64,
    /// Critical ratio (an upper bound on β_c of the full field).
    pub ratio: f64,
    /// Smallest grid β with a positive hat value; `None` when censored.
    pub beta_c: Option<f64>,
    pub exhaustive: bool,
}

/// Per-field β_c on a β grid, from the critical ratio of the top-ℓ fields of
/// `scales` nested dyadic balls (one ball when `scales` = 1).
#[allow(clippy::too_many_arguments)]
pub fn beta_c_estimate(
    alpha: f64,
    d: usize,
    q: f64,
    ell: usize,
    beta_grid: &[f64],
    samples: u64,
    seed: u64,
    scales: usize,
) -> Result<Vec<BetaCRow>> {
    if ell > EXACT_ELL_CAP {
        return Err(Error::TooLarge(format!("ell must be at most {EXACT_ELL_CAP}")));
    }
    let mut grid = beta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(samples as usize);
    for s in 0..samples {
        let fields = nested_poisson_fields(q, alpha, ell, d, scales, derive_seed(seed, s))?;
        let mut ratio = fields.iter().filter_map(singleton_ratio).map(|r| r.0).fold(f64::INFINITY, f64::min);
        let mut exhaustive = true;
        // Innermost balls first; stop once the grid value is settled.
        for f in fields.iter().rev() {
            let c = critical_ratio_below(f, 200_000, ratio);
            ratio = ratio.min(c.ratio);
            exhaustive &= c.exhaustive;
            if grid.first().is_some_and(|&b| ratio < b) {
                break;
            }
        }
        let beta_c = grid.iter().copied().find(|&b| b > ratio);
        rows.push(BetaCRow { sample: s, ratio, beta_c, exhaustive });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTailRow {
    pub t: f64,
    pub hits: u64,
    pub replicas: u64,
    pub p_hat: f64,
    pub ci_high: f64,
    pub zero_hit: bool,
}

/// Normalized samples 𝒯^{(ℓ)}_{N,r}/(N (β r^{d/α−1})²) over Pareto environments on Λ_r.
#[allow(clippy::too_many_arguments)]
pub fn t_samples(alpha: f64, n: f64, r: f64, beta: f64, ell: usize, d: usize, replicas: u64, seed: u64) -> Result<Vec<f64>> {
    let norm = n * (beta * r.powf(d as f64 / alpha - 1.0)).powi(2);
    (0..replicas)
        .map(|i| {
            let env = LatticeEnvironment::pareto(d, r, alpha, derive_seed(seed, i))?;
            let stats = env.top_k(ell);
            Ok(discrete_t(&stats, n, beta, ell.min(stats.len()), d, EntropyKind::Quadratic)?.value / norm)
        })
        .collect()
}

/// Empirical P(𝒯^{(ℓ)} ≥ t N (β r^{d/α−1})²) on a t grid.
#[allow(clippy::too_many_arguments)]
pub fn tail_experiment_t(
    alpha: f64,
    n: f64,
    r: f64,
    beta: f64,
    ell: usize,
    d: usize,
    t_grid: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Vec<TTailRow>> {
    let xs = t_samples(alpha, n, r, beta, ell, d, replicas, seed)?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let hits = xs.iter().filter(|&&x| x >= t).count() as u64;
            TTailRow {
                t,
                hits,
                replicas,
                p_hat: hits as f64 / replicas as f64,
                ci_high: wilson(hits, replicas, 3.0).1,
                zero_hit: hits == 0,
            }
        })
        .collect())
}

/// The tail exponent αd/(2(α+d)).
pub fn tail_exponent(alpha: f64, d: usize) -> f64 {
    alpha * d as f64 / (2.0 * (alpha + d as f64))
}

/// Exponent 2α/(2α−d) of the scaling relation in β.
pub fn scaling_exponent(alpha: f64, d: usize) -> Result<f64> {
    if !(2.0 * alpha > d as f64) {
        return Err(Error::Window("the scaling relation needs alpha > d/2".into()));
    }
    Ok(2.0 * alpha / (2.0 * alpha - d as f64))
}

/// Domain used for the 𝒯_1 side of a scaling comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingForm {
    /// Both sides on the ball of radius q.
    Literal,
    /// 𝒯_1 on the ball of radius q·β^{−α/(2α−d)}, the image of B(0, q)
    /// under the scaling map; equality in law holds exactly for fixed ℓ.
    FiniteDomain,
}

/// Paired samples (𝒯_β, β^{2α/(2α−d)}·𝒯_1) on independent fields.
#[allow(clippy::too_many_arguments)]
pub fn scaling_samples(
    q: f64,
    beta: f64,
    ell: usize,
    alpha: f64,
    d: usize,
    samples: u64,
    seed: u64,
    form: ScalingForm,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let e = scaling_exponent(alpha, d)?;
    if !(beta > 0.0) {
        return invalid("beta must be positive");
    }
    let q1 = match form {
        ScalingForm::Literal => q,
        ScalingForm::FiniteDomain => q * beta.powf(-alpha / (2.0 * alpha - d as f64)),
    };
    let mut a = Vec::with_capacity(samples as usize);
    let mut b = Vec::with_capacity(samples as usize);
    for s in 0..samples {
        let fa = sample_poisson_field(q, alpha, ell, d, derive_seed(seed, 2 * s))?;
        let fb = sample_poisson_field(q1, alpha, ell, d, derive_seed(seed, 2 * s + 1))?;
        a.push(solve_field(&fa, beta, d, ContinuumKind::Quadratic)?.value);
        b.push(beta.powf(e) * solve_field(&fb, 1.0, d, ContinuumKind::Quadratic)?.value);
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(w: &[f64], s: &[&[f64]]) -> OrderStatistics {
        OrderStatistics {
            weights: w.to_vec(),
            sites: s.iter().map(|x| x.to_vec()).collect(),
            domain_radius: 10.0,
            kind: FieldKind::Continuum,
        }
    }

    #[test]
    fn beta_zero_is_empty() {
        let st = stats(&[3.0, 1.0], &[&[1.0, 0.0], &[0.0, 2.0]]);
        let s = discrete_t(&st, 4.0, 0.0, 2, 2, EntropyKind::Quadratic).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.witness.is_empty());
    }

    #[test]
    fn single_weight_closed_form() {
        let st = stats(&[3.0], &[&[1.0, 2.0]]);
        for beta in [0.1, 0.5, 2.0] {
            let s = discrete_t(&st, 4.0, beta, 1, 2, EntropyKind::Quadratic).unwrap();
            let want: f64 = (beta * 3.0 - 5.0 / 4.0).max(0.0);
            assert!((s.value - want).abs() < 1e-14);
        }
    }

    #[test]
    fn beyond_edges() {
        let st = stats(&[3.0, 2.0, 1.0], &[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let all = discrete_t(&st, 2.0, 1.0, 3, 2, EntropyKind::Quadratic).unwrap();
        let b0 = discrete_t_beyond(&st, 2.0, 1.0, 0, 2).unwrap();
        assert_eq!(all.value, b0.value);
        assert_eq!(discrete_t_beyond(&st, 2.0, 1.0, 3, 2).unwrap().value, 0.0);
    }

    #[test]
    fn partition_identity() {
        let st = stats(&[3.0, 2.0, 1.0], &[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let delta = OrderedPointSet::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let spec = |mode| EnergySpec { stats: &st, ell: 1, mode };
        let top = omega_energy(&delta, &spec(EnergyMode::TopEll));
        let rest = omega_energy(&delta, &spec(EnergyMode::BeyondEll));
        assert_eq!(top, 3.0);
        assert_eq!(top + rest, omega_energy(&delta, &spec(EnergyMode::All)));
    }

    #[test]
    fn nested_fields_are_top_ell_of_each_ball() {
        let f = nested_poisson_fields(8.0, 1.5, 6, 2, 5, 9).unwrap();
        assert_eq!(f.len(), 5);
        for (j, fj) in f.iter().enumerate() {
            let r = 8.0 * 0.5f64.powi(j as i32);
            assert!(fj.sites.iter().all(|s| norm2(s) <= r + 1e-12));
            assert!(fj.weights.windows(2).all(|w| w[0] >= w[1]));
        }
        // Points of an inner ball beat every other point of the outer top list only if heavier.
        for j in 1..5 {
            let outer = &f[j - 1];
            let inner = &f[j];
            let min_outer = *outer.weights.last().unwrap();
            for (w, s) in inner.weights.iter().zip(&inner.sites) {
                assert_eq!(outer.sites.contains(s), *w >= min_outer);
            }
        }
    }

    #[test]
    fn critical_ratio_matches_positivity() {
        let st = stats(&[3.0, 2.0], &[&[0.3, 0.1], &[-0.2, 0.2]]);
        let c = critical_ratio(&st, 10_000);
        assert!(c.exhaustive);
        let above = solve_field(&st, c.ratio * 1.01, 2, ContinuumKind::Hat).unwrap();
        let below = solve_field(&st, c.ratio * 0.99, 2, ContinuumKind::Hat).unwrap();
        assert!(above.value > 0.0);
        assert_eq!(below.value, 0.0);
        assert!(below.witness.is_empty());
    }
}
