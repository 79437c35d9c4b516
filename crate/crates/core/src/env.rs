//! Heavy-tailed environments, Poisson weight fields and truncation.
//!
//! The environment law is the pure Pareto law on [1, ∞):
//! P(ω > t) = t^{-α}, sampled as ω = u^{-1/α}.

use crate::error::{invalid, Error, Result};
use crate::quad::GaussRule;
use crate::rng::Stream;
use crate::special::unit_ball_volume;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rustc_hash::FxHashMap;

/// Pareto survival function.
pub fn pareto_survival(alpha: f64, t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else {
        t.powf(-alpha)
    }
}

/// E[ω^j] = α/(α − j) for j < α.
pub fn pareto_raw_moment(alpha: f64, j: f64) -> f64 {
    assert!(j < alpha);
    alpha / (alpha - j)
}

/// Var(ω) for α > 2.
pub fn pareto_variance(alpha: f64) -> f64 {
    assert!(alpha > 2.0);
    alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0))
}

#[inline]
pub fn pareto_from_uniform(alpha: f64, u: f64) -> f64 {
    u.powf(-1.0 / alpha)
}

/// n i.i.d. Pareto(α) draws.
pub fn sample_pareto(alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let mut rng = Stream::new(seed, "pareto").rng(0);
    Ok((0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            pareto_from_uniform(alpha, u)
        })
        .collect())
}

/// Lattice sites of the Euclidean ball of radius r, in lexicographic order.
pub fn lattice_ball(d: usize, r: f64) -> Vec<Vec<i64>> {
    let ri = r.floor() as i64;
    let mut out = Vec::new();
    let mut cur = vec![-ri; d];
    let r2 = r * r;
    loop {
        let n2: i64 = cur.iter().map(|c| c * c).sum();
        if (n2 as f64) <= r2 + 1e-9 {
            out.push(cur.clone());
        }
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < ri {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -ri;
                }
                break;
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Source {
    Lazy { alpha: f64, stream: Stream },
    Table { values: FxHashMap<Vec<i64>, f64>, default: f64 },
}

/// Site values ω_x on ℤ^d, with a designated ball Λ_r.
///
/// Lazy environments compute ω_x from `(seed, x)` on demand, so values
/// outside Λ_r are also defined and never depend on evaluation order.
#[derive(Clone, Debug)]
pub struct LatticeEnvironment {
    pub d: usize,
    pub radius: f64,
    pub seed: u64,
    source: Source,
}

/// Balls up to this radius may be materialized.
pub const DENSE_RADIUS_CAP: f64 = 64.0;

impl LatticeEnvironment {
    pub fn pareto(d: usize, radius: f64, alpha: f64, seed: u64) -> Result<Self> {
        if d < 1 {
            return invalid("d must be positive");
        }
        if !(alpha > 0.0) {
            return invalid(format!("alpha must be positive, got {alpha}"));
        }
        Ok(LatticeEnvironment { d, radius, seed, source: Source::Lazy { alpha, stream: Stream::new(seed, "site") } })
    }

    /// Environment with explicit values; sites not listed take `default`.
    pub fn from_table(d: usize, radius: f64, values: Vec<(Vec<i64>, f64)>, default: f64) -> Result<Self> {
        if values.iter().any(|(s, v)| s.len() != d || !(*v >= 0.0)) {
            return invalid("table entries need dimension d and non-negative values");
        }
        Ok(LatticeEnvironment {
            d,
            radius,
            seed: 0,
            source: Source::Table { values: values.into_iter().collect(), default },
        })
    }

    pub fn alpha(&self) -> Option<f64> {
        match &self.source {
            Source::Lazy { alpha, .. } => Some(*alpha),
            Source::Table { .. } => None,
        }
    }

    #[inline]
    pub fn value(&self, site: &[i64]) -> f64 {
        match &self.source {
            Source::Lazy { alpha, stream } => pareto_from_uniform(*alpha, stream.site_uniform(site)),
            Source::Table { values, default } => *values.get(site).unwrap_or(default),
        }
    }

    /// All (site, value) pairs of Λ_r.
    pub fn materialize(&self) -> Result<Vec<(Vec<i64>, f64)>> {
        if self.radius > DENSE_RADIUS_CAP && matches!(self.source, Source::Lazy { .. }) {
            return Err(Error::TooLarge(format!(
                "dense storage is limited to radius {DENSE_RADIUS_CAP}, got {}",
                self.radius
            )));
        }
        Ok(lattice_ball(self.d, self.radius).into_iter().map(|s| {
            let v = self.value(&s);
            (s, v)
        }).collect())
    }

    /// The k largest values of Λ_r by a streaming scan; works for any radius.
    pub fn top_k(&self, k: usize) -> OrderStatistics {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        #[derive(PartialEq)]
        struct Key(f64, Reverse<Vec<i64>>);
        impl Eq for Key {}
        impl PartialOrd for Key {
            fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Key {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                self.0.total_cmp(&o.0).then_with(|| self.1.cmp(&o.1))
            }
        }
        let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::with_capacity(k + 1);
        let d = self.d;
        let ri = self.radius.floor() as i64;
        let r2 = self.radius * self.radius + 1e-9;
        let mut cur = vec![-ri; d];
        'outer: loop {
            let n2: i64 = cur.iter().map(|c| c * c).sum();
            if (n2 as f64) <= r2 {
                let v = self.value(&cur);
                if heap.len() < k || v > heap.peek().unwrap().0 .0 {
                    heap.push(Reverse(Key(v, Reverse(cur.clone()))));
                    if heap.len() > k {
                        heap.pop();
                    }
                }
            }
            let mut i = d;
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                if cur[i] < ri {
                    cur[i] += 1;
                    for c in cur.iter_mut().skip(i + 1) {
                        *c = -ri;
                    }
                    break;
                }
            }
        }
        let pairs: Vec<(f64, Vec<i64>)> = heap.into_iter().map(|Reverse(Key(v, Reverse(s)))| (v, s)).collect();
        OrderStatistics::from_lattice(pairs, self.radius)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Discrete,
    Continuum,
}

/// Descending (weight, site) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderStatistics {
    pub weights: Vec<f64>,
    pub sites: Vec<Vec<f64>>,
    pub domain_radius: f64,
    pub kind: FieldKind,
}

impl OrderStatistics {
    /// Sort lattice pairs: weight descending, ties by lexicographic site.
    pub fn from_lattice(mut pairs: Vec<(f64, Vec<i64>)>, radius: f64) -> Self {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        OrderStatistics {
            weights: pairs.iter().map(|p| p.0).collect(),
            sites: pairs.iter().map(|p| p.1.iter().map(|&c| c as f64).collect()).collect(),
            domain_radius: radius,
            kind: FieldKind::Discrete,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn truncated(&self, ell: usize) -> Self {
        let l = ell.min(self.len());
        OrderStatistics {
            weights: self.weights[..l].to_vec(),
            sites: self.sites[..l].to_vec(),
            domain_radius: self.domain_radius,
            kind: self.kind,
        }
    }
}

/// Full order statistics of Λ_r.
pub fn order_statistics_discrete(env: &LatticeEnvironment) -> Result<OrderStatistics> {
    let pairs = env.materialize()?.into_iter().map(|(s, v)| (v, s)).collect();
    Ok(OrderStatistics::from_lattice(pairs, env.radius))
}

/// c_d = Vol_d^{1/d}.
pub fn c_d(d: usize) -> f64 {
    unit_ball_volume(d).powf(1.0 / d as f64)
}

/// Uniform point in the Euclidean ball of radius q.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, d: usize, q: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: f64 = rng.random();
    let rad = q * u.powf(1.0 / d as f64);
    g.into_iter().map(|x| x / n * rad).collect()
}

/// Top-ℓ points of the Poisson process with intensity α w^{-α-1} dx dw on B(0, q).
///
/// Point i uses element i of the `poisson-exp` and `poisson-pos` streams, so
/// fields with the same seed are nested in ℓ.
pub fn sample_poisson_field(q: f64, alpha: f64, ell: usize, d: usize, seed: u64) -> Result<OrderStatistics> {
    if ell == 0 {
        return invalid("ell must be at least 1");
    }
    if !(q > 0.0) || !(alpha > 0.0) {
        return invalid("q and alpha must be positive");
    }
    let exp_stream = Stream::new(seed, "poisson-exp").rng(0);
    let pos_stream = Stream::new(seed, "poisson-pos").rng(0);
    Ok(poisson_field_from(q, alpha, ell, d, exp_stream, pos_stream))
}

/// Same construction from caller-supplied generators.
pub fn poisson_field_from<R1: Rng, R2: Rng>(
    q: f64,
    alpha: f64,
    ell: usize,
    d: usize,
    mut exp_rng: R1,
    mut pos_rng: R2,
) -> OrderStatistics {
    let scale = (c_d(d) * q).powf(d as f64 / alpha);
    let mut gamma = 0.0;
    let mut weights = Vec::with_capacity(ell);
    let mut sites = Vec::with_capacity(ell);
    for _ in 0..ell {
        let e: f64 = exp_rng.sample(Exp1);
        gamma += e;
        weights.push(scale * gamma.powf(-1.0 / alpha));
        sites.push(uniform_in_ball(&mut pos_rng, d, q));
    }
    OrderStatistics { weights, sites, domain_radius: q, kind: FieldKind::Continuum }
}

/// k_N: (log N)^η N^{d/2α} for d ≥ 3 and (log log N)^η N^{d/2α} for d = 2.
pub fn truncation_level(d: usize, alpha: f64, eta: f64, n: f64) -> Result<f64> {
    let lo = d as f64 / (2.0 * alpha);
    if !(eta > lo && eta < 1.0) {
        return Err(Error::Window(format!("eta must lie in (d/(2 alpha), 1) = ({lo}, 1), got {eta}")));
    }
    if n < 3.0 {
        return invalid("N must be at least 3");
    }
    let slow = if d == 2 { n.ln().ln() } else { n.ln() };
    Ok(slow.powf(eta) * n.powf(lo))
}

/// ω̃_x = (ω_x − μ)·1{ω_x ≤ k_N}.
#[derive(Clone, Debug)]
pub struct TruncatedEnvironment {
    pub base: LatticeEnvironment,
    pub level: f64,
    pub center: f64,
}

impl TruncatedEnvironment {
    #[inline]
    pub fn value(&self, site: &[i64]) -> f64 {
        let w = self.base.value(site);
        if w <= self.level {
            w - self.center
        } else {
            0.0
        }
    }
}

/// Truncate at level k_N and center at `center` (μ, or h when α ≤ 1).
pub fn truncate_environment(env: &LatticeEnvironment, n: f64, eta: f64, center: f64) -> Result<TruncatedEnvironment> {
    let alpha = env.alpha().ok_or_else(|| Error::Invalid("truncation needs a Pareto environment".into()))?;
    let level = truncation_level(env.d, alpha, eta, n)?;
    Ok(TruncatedEnvironment { base: env.clone(), level, center })
}

/// Output of [`truncated_log_mgf`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedMgf {
    /// λ_N = log E[exp(β ω̃)].
    pub lambda: f64,
    /// |E[e^{βω̃}] − 1 − Σ_{i≤p} β^i E[(ω−μ)^i]/i!|.
    pub remainder: f64,
    /// C · shape, with the frozen constant [`MOMENT_BOUND_CONSTANT`].
    pub bound: f64,
    /// The bound without its constant.
    pub shape: f64,
    /// Relative change between the last two quadrature refinements.
    pub tolerance: f64,
}

/// Constant in the truncated-moment bound. Fitted on 24000 random
/// (α, β, k, p) configurations (worst ratio 2.67) and frozen.
pub const MOMENT_BOUND_CONSTANT: f64 = 4.0;

/// e^x − Σ_{i≤p} x^i/i!.
fn exp_remainder(x: f64, p: usize) -> f64 {
    if x.abs() < 1.0 {
        let mut term = 1.0;
        for i in 1..=p {
            term *= x / i as f64;
        }
        let mut s = 0.0;
        let mut i = p;
        loop {
            i += 1;
            term *= x / i as f64;
            s += term;
            if term.abs() <= 1e-17 * s.abs() || i > p + 60 {
                break;
            }
        }
        s
    } else {
        let mut poly = 0.0;
        let mut term = 1.0;
        for i in 0..=p {
            if i > 0 {
                term *= x / i as f64;
            }
            poly += term;
        }
        x.exp() - poly
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// E[(ω − μ)^i] from raw moments.
pub fn pareto_central_moment(alpha: f64, i: usize) -> f64 {
    let mu = alpha / (alpha - 1.0);
    (0..=i).map(|j| binom(i, j) * (-mu).powi((i - j) as i32) * pareto_raw_moment(alpha, j as f64)).sum()
}

/// E[(ω − μ)^i 1{ω > k}].
fn pareto_central_tail_moment(alpha: f64, i: usize, k: f64) -> f64 {
    let mu = alpha / (alpha - 1.0);
    (0..=i)
        .map(|j| binom(i, j) * (-mu).powi((i - j) as i32) * alpha * k.powf(j as f64 - alpha) / (alpha - j as f64))
        .sum()
}

/// Composite Gauss–Legendre of ∫_1^k g(w) α w^{-α-1} dw in v = log w,
/// refined until two successive panel counts agree.
fn pareto_integral<F: Fn(f64) -> f64>(alpha: f64, k: f64, g: F) -> (f64, f64) {
    let rule = GaussRule::new(16);
    let top = k.ln();
    let integrand = |v: f64| {
        let w = v.exp();
        g(w) * alpha * (-alpha * v).exp()
    };
    let run = |panels: usize| {
        let edges: Vec<f64> = (0..=panels).map(|i| top * i as f64 / panels as f64).collect();
        rule.integrate_panels(integrand, &edges)
    };
    let mut panels = 8;
    let mut prev = run(panels);
    let mut tol = f64::INFINITY;
    while panels < 1 << 15 {
        panels *= 2;
        let cur = run(panels);
        tol = if cur == 0.0 { (cur - prev).abs() } else { ((cur - prev) / cur).abs() };
        prev = cur;
        if tol < 1e-12 {
            break;
        }
    }
    (prev, tol)
}

/// (α, p)-dependence of the bound's constant: the tail moments of order
/// i ≤ p carry 1/(α − i), and the truncated moment of order p + 1 carries
/// 1/|α − p − 1|, capped by log k.
pub fn moment_bound_factor(alpha: f64, k: f64, p: usize) -> f64 {
    let lo = (alpha - p as f64).min(1.0);
    let hi = (alpha - p as f64 - 1.0).abs().min(1.0).max(1.0 / (1.0 + k.ln()));
    1.0 / (lo * hi)
}

/// Shape of the truncated-moment bound without its constant, including
/// [`moment_bound_factor`].
///
/// For βk < 1 and p + 1 < α the two-term estimate
/// (e^{βk} − 1)k^{-α} + e^{βk} β^{p+1} is used.
pub fn moment_bound_shape(alpha: f64, beta: f64, k: f64, p: usize) -> f64 {
    moment_bound_factor(alpha, k, p) * moment_bound_rate(alpha, beta, k, p)
}

fn moment_bound_rate(alpha: f64, beta: f64, k: f64, p: usize) -> f64 {
    let q = (p + 1) as f64;
    let eq = (alpha - q).abs() < 1e-12;
    let bk = beta * k;
    if bk >= 1.0 {
        let base = if eq {
            beta.powf(alpha) * k.ln()
        } else if q > alpha {
            beta.powf(alpha)
        } else {
            beta.powf(q)
        };
        bk.exp() * base
    } else if q > alpha {
        beta * k.powf(1.0 - alpha)
    } else if eq {
        beta * k.powf(1.0 - alpha) * k.ln()
    } else {
        bk.exp_m1() * k.powf(-alpha) + bk.exp() * beta.powf(q)
    }
}

/// λ_N = log E[exp(β ω̃)] for the Pareto law centered at μ and truncated at k,
/// with the remainder of the order-p expansion and its bound.
pub fn truncated_log_mgf(alpha: f64, beta: f64, k: f64, p: usize) -> Result<TruncatedMgf> {
    if !(alpha > 1.0) {
        return Err(Error::Window(format!("centering needs alpha > 1 so that mu is finite, got {alpha}")));
    }
    if (p as f64) >= alpha {
        return Err(Error::Window(format!("p must be below alpha (p = {p}, alpha = {alpha})")));
    }
    if !(beta >= 0.0) || !(k >= 1.0) {
        return invalid("beta must be non-negative and k at least 1");
    }
    if beta == 0.0 {
        return Ok(TruncatedMgf { lambda: 0.0, remainder: 0.0, bound: 0.0, shape: 0.0, tolerance: 0.0 });
    }
    if beta * k > 700.0 {
        return Err(Error::Numerical(format!("beta*k = {} overflows the exponential", beta * k)));
    }
    let mu = alpha / (alpha - 1.0);
    // E[e^{βω̃}] − 1 = E[(e^{β(ω−μ)} − 1 − β(ω−μ)) 1{ω≤k}] + β E[(ω−μ) 1{ω≤k}]
    let (quad1, tol1) = pareto_integral(alpha, k, |w| exp_remainder(beta * (w - mu), 1));
    let linear = -beta * mu * k.powf(-alpha) * (k - 1.0);
    let lambda = (quad1 + linear).ln_1p();
    // Remainder: E[R_p(β(ω−μ)) 1{ω≤k}] − Σ_{i≤p} β^i/i! E[(ω−μ)^i 1{ω>k}].
    let (quadp, tolp) = pareto_integral(alpha, k, |w| exp_remainder(beta * (w - mu), p));
    let mut tail = 0.0;
    let mut fact = 1.0;
    for i in 1..=p {
        fact *= i as f64;
        tail += beta.powi(i as i32) / fact * pareto_central_tail_moment(alpha, i, k);
    }
    let remainder = (quadp - tail).abs();
    let shape = moment_bound_shape(alpha, beta, k, p);
    let tolerance = tol1.max(tolp);
    if tolerance > 1e-6 {
        return Err(Error::Numerical(format!("quadrature reached only relative tolerance {tolerance:e}")));
    }
    Ok(TruncatedMgf { lambda, remainder, bound: MOMENT_BOUND_CONSTANT * shape, shape, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pareto_support_and_median() {
        let xs = sample_pareto(2.0, 10_000, 3).unwrap();
        assert!(xs.iter().all(|&x| x >= 1.0));
        assert_eq!(pareto_from_uniform(2.0, 1.0), 1.0);
        assert!((pareto_from_uniform(2.0, 0.5) - 2f64.sqrt()).abs() < 1e-15);
        assert!(sample_pareto(0.0, 3, 1).is_err());
    }

    #[test]
    fn order_statistics_sort_and_ties() {
        let env = LatticeEnvironment::from_table(
            1,
            1.0,
            vec![(vec![-1], 2.0), (vec![0], 5.0), (vec![1], 1.0)],
            1.0,
        )
        .unwrap();
        let os = order_statistics_discrete(&env).unwrap();
        assert_eq!(os.weights, vec![5.0, 2.0, 1.0]);
        let env = LatticeEnvironment::from_table(2, 1.0, vec![], 3.0).unwrap();
        let os = order_statistics_discrete(&env).unwrap();
        assert_eq!(os.sites[0], vec![-1.0, 0.0]);
        assert_eq!(os.sites[1], vec![0.0, -1.0]);
    }

    #[test]
    fn top_k_matches_full_sort() {
        let env = LatticeEnvironment::pareto(2, 12.0, 1.5, 9).unwrap();
        let full = order_statistics_discrete(&env).unwrap();
        let top = env.top_k(10);
        assert_eq!(top.weights, full.weights[..10].to_vec());
        assert_eq!(top.sites, full.sites[..10].to_vec());
    }

    #[test]
    fn poisson_field_first_weight() {
        // With E_1 = 1, d = 2, q = 1, α = 1 the top weight is c_2² = π.
        let scale = (c_d(2) * 1.0).powf(2.0);
        assert!((scale - std::f64::consts::PI).abs() < 1e-14);
        let f = sample_poisson_field(1.0, 1.5, 20, 2, 4).unwrap();
        assert!(f.weights.windows(2).all(|w| w[0] > w[1]));
        assert!(f.sites.iter().all(|s| s[0].hypot(s[1]) <= 1.0));
    }

    #[test]
    fn truncation_level_plug_in() {
        let n = 10f64.exp();
        let k = truncation_level(3, 2.0, 0.9, n).unwrap();
        assert!((k - 10f64.powf(0.9) * 7.5f64.exp()).abs() / k < 1e-13);
        assert!(truncation_level(3, 2.0, 0.7, n).is_err());
    }

    #[test]
    fn truncated_values() {
        let env = LatticeEnvironment::from_table(1, 2.0, vec![(vec![0], 2.0), (vec![1], 50.0)], 1.0).unwrap();
        let t = TruncatedEnvironment { base: env, level: 10.0, center: 1.5 };
        assert_eq!(t.value(&[0]), 0.5);
        assert_eq!(t.value(&[1]), 0.0);
    }

    #[test]
    fn mgf_zero_beta() {
        let r = truncated_log_mgf(3.0, 0.0, 100.0, 2).unwrap();
        assert_eq!(r.lambda, 0.0);
    }

    #[test]
    fn central_moments() {
        assert!(pareto_central_moment(3.0, 1).abs() < 1e-14);
        assert!((pareto_central_moment(3.0, 2) - pareto_variance(3.0)).abs() < 1e-13);
    }
}
