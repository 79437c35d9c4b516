//! Simple random walk kernels on ℤ^d.

use crate::error::{invalid, Error, Result};
use crate::quad::GaussRule;
use crate::rng::{derive_seed, Stream};
use crate::special::{bessel_i_asym_coeffs, bessel_i_scaled, expint_e1, ln_gamma};
use crate::stats::{McEstimate, Welford};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use statrs::function::erf::erfc;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

pub const MAX_DIM: usize = 5;

/// Pack a site with |coordinates| < 2^24 into one integer key.
#[inline]
pub fn pack(site: &[i64]) -> u128 {
    let mut k: u128 = 0;
    for &c in site {
        k = (k << 25) | ((c + (1 << 24)) as u128 & 0x1ff_ffff);
    }
    k
}

/// A walker that advances one uniform nearest-neighbour step at a time.
pub struct Walker {
    pub d: usize,
    pub pos: [i64; MAX_DIM],
    rng: ChaCha8Rng,
}

impl Walker {
    pub fn new(d: usize, rng: ChaCha8Rng) -> Self {
        assert!((1..=MAX_DIM).contains(&d), "dimension must be in 1..=5");
        Walker { d, pos: [0; MAX_DIM], rng }
    }

    #[inline]
    pub fn step(&mut self) {
        let k = self.rng.random_range(0..2 * self.d);
        let axis = k >> 1;
        self.pos[axis] += if k & 1 == 0 { 1 } else { -1 };
    }

    #[inline]
    pub fn site(&self) -> &[i64] {
        &self.pos[..self.d]
    }

    #[inline]
    pub fn key(&self) -> u128 {
        pack(self.site())
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Sites S_0 = 0, …, S_N, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkPath {
    pub d: usize,
    pub coords: Vec<i64>,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.coords.len() / self.d - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn site(&self, n: usize) -> &[i64] {
        &self.coords[n * self.d..(n + 1) * self.d]
    }
}

/// A uniform nearest-neighbour path of length N.
pub fn simulate_walk(n: usize, d: usize, seed: u64) -> WalkPath {
    let mut w = Walker::new(d, Stream::new(seed, "walk").rng(0));
    let mut coords = Vec::with_capacity((n + 1) * d);
    coords.extend_from_slice(w.site());
    for _ in 0..n {
        w.step();
        coords.extend_from_slice(w.site());
    }
    WalkPath { d, coords }
}

#[derive(Clone, Debug)]
pub struct RangeSummary {
    pub range: FxHashSet<u128>,
    pub size: usize,
    /// M_N = max_n ‖S_n‖_∞.
    pub max_disp: i64,
}

pub fn range_summary(path: &WalkPath) -> RangeSummary {
    let mut range = FxHashSet::default();
    let mut max_disp = 0;
    for n in 0..=path.len() {
        let s = path.site(n);
        range.insert(pack(s));
        max_disp = max_disp.max(s.iter().map(|c| c.abs()).max().unwrap_or(0));
    }
    let size = range.len();
    RangeSummary { range, size, max_disp }
}

/// Result of a visit-probability estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisitEstimate {
    pub estimate: McEstimate,
    /// No replica achieved the ordered visit.
    pub zero_hit: bool,
}

fn check_targets(delta: &[Vec<i64>], d: usize) -> Result<()> {
    if delta.is_empty() {
        return invalid("the point set must be non-empty");
    }
    for (i, p) in delta.iter().enumerate() {
        if p.len() != d {
            return invalid("points must have dimension d");
        }
        if p.iter().all(|&c| c == 0) {
            return invalid(format!("point {i} is the origin; points must be nonzero"));
        }
        if delta[..i].contains(p) {
            return invalid(format!("point {i} repeats an earlier point"));
        }
    }
    Ok(())
}

/// Time at which the walk has visited x_1, …, x_k in order, if within `n`.
fn ordered_hit_time(w: &mut Walker, delta: &[u128], n: usize) -> Option<usize> {
    let mut next = 0;
    for t in 1..=n {
        w.step();
        if w.key() == delta[next] {
            next += 1;
            if next == delta.len() {
                return Some(t);
            }
        }
    }
    None
}

/// P(Δ ⊂ R_N in the ordered sense) for each N of a grid, with common random
/// numbers across the grid. Estimates are non-decreasing in N.
pub fn visit_probability_sweep(
    delta: &[Vec<i64>],
    n_grid: &[usize],
    replicas: u64,
    seed: u64,
) -> Result<Vec<VisitEstimate>> {
    let d = delta.first().map_or(0, |p| p.len());
    check_targets(delta, d)?;
    if replicas == 0 {
        return invalid("replicas must be positive");
    }
    let keys: Vec<u128> = delta.iter().map(|p| pack(p)).collect();
    let n_max = *n_grid.iter().max().unwrap_or(&0);
    let stream = Stream::new(seed, "visit");
    let mut hits = vec![0u64; n_grid.len()];
    for r in 0..replicas {
        let mut w = Walker::new(d, stream.rng(r));
        if let Some(t) = ordered_hit_time(&mut w, &keys, n_max) {
            for (h, &n) in hits.iter_mut().zip(n_grid) {
                if t <= n {
                    *h += 1;
                }
            }
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| {
            let p = h as f64 / replicas as f64;
            VisitEstimate {
                estimate: McEstimate {
                    mean: p,
                    stderr: (p * (1.0 - p) / replicas as f64).sqrt(),
                    replicas,
                    seed,
                },
                zero_hit: h == 0,
            }
        })
        .collect())
}

pub fn visit_probability_mc(delta: &[Vec<i64>], n: usize, replicas: u64, seed: u64) -> Result<VisitEstimate> {
    Ok(visit_probability_sweep(delta, &[n], replicas, seed)?[0])
}

/// log P(S_n = y) for d = 2 via the rotation to two independent 1-D walks;
/// for d ≥ 3 via the multinomial split over direction counts.
pub fn log_transition(n: u64, y: &[i64]) -> f64 {
    let d = y.len();
    let l1: i64 = y.iter().map(|c| c.abs()).sum();
    if l1 as u64 > n || (l1 as u64 + n) % 2 == 1 {
        return f64::NEG_INFINITY;
    }
    let lbin = |m: u64, k: i64| -> f64 {
        // log [C(m, k) 2^{-m}]
        if k < 0 || k as u64 > m {
            return f64::NEG_INFINITY;
        }
        ln_gamma(m as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((m - k as u64) as f64 + 1.0)
            - m as f64 * std::f64::consts::LN_2
    };
    match d {
        1 => lbin(n, (n as i64 + y[0]) / 2),
        2 => {
            let u = y[0] + y[1];
            let v = y[0] - y[1];
            lbin(n, (n as i64 + u) / 2) + lbin(n, (n as i64 + v) / 2)
        }
        _ => {
            // Split the steps between the first axis and the rest.
            let mut terms = Vec::new();
            let df = d as f64;
            for m in 0..=n {
                if (m as i64 + y[0]).rem_euclid(2) != 0 || (y[0].unsigned_abs()) > m {
                    continue;
                }
                let rest = log_transition(n - m, &y[1..]);
                if rest == f64::NEG_INFINITY {
                    continue;
                }
                // choose which m of the n steps are first-axis steps
                let lc = ln_gamma(n as f64 + 1.0) - ln_gamma(m as f64 + 1.0) - ln_gamma((n - m) as f64 + 1.0);
                let lp = m as f64 * (1.0 / df).ln() + (n - m) as f64 * ((df - 1.0) / df).ln();
                terms.push(lc + lp + lbin(m, (m as i64 + y[0]) / 2) + rest);
            }
            log_sum_exp(&terms)
        }
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Row of [`ld_rate_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    pub n: u64,
    /// −log P(S_n = y)/N^{2ξ−1} with n ∈ {N, N−1} of the right parity.
    pub rate_upper: f64,
    /// Same with log N added to P, bracketing −log P(y ∈ R_N)/N^{2ξ−1} from below.
    pub rate_lower: f64,
}

/// Large-deviation rate for reaching y = ⌊x N^ξ⌉ within N steps.
///
/// Uses P(S_N = y) ≤ P(y ∈ R_N) ≤ Σ_{n≤N} P(S_n = y) ≤ N·max_n P(S_n = y);
/// the maximum is attained at the last parity-compatible time once
/// ‖y‖² > N.
pub fn ld_rate_check(x: &[f64], xi: f64, n_grid: &[u64]) -> Result<Vec<RateRow>> {
    if !(xi > 0.5 && xi <= 1.0) {
        return Err(Error::Window(format!("xi must lie in (1/2, 1], got {xi}")));
    }
    if xi == 1.0 && x.iter().map(|c| c.abs()).sum::<f64>() >= 1.0 {
        return Err(Error::Window("at xi = 1 the point needs l1 norm below 1".into()));
    }
    let mut rows = Vec::new();
    for &n in n_grid {
        let scale = (n as f64).powf(xi);
        let y: Vec<i64> = x.iter().map(|c| (c * scale).round() as i64).collect();
        let norm = (n as f64).powf(2.0 * xi - 1.0);
        if y.iter().all(|&c| c == 0) {
            rows.push(RateRow { n, rate_upper: 0.0, rate_lower: 0.0 });
            continue;
        }
        let l1: i64 = y.iter().map(|c| c.abs()).sum();
        let t = if (l1 as u64 + n) % 2 == 0 { n } else { n - 1 };
        let lp = log_transition(t, &y);
        rows.push(RateRow { n, rate_upper: -lp / norm, rate_lower: (-lp - (n as f64).ln()) / norm });
    }
    Ok(rows)
}

/// Lattice Green function value with its estimated quadrature error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenValue {
    pub value: f64,
    pub tolerance: f64,
}

fn green_integral(x: &[i64], nodes: usize, s_tail: f64) -> f64 {
    let d = x.len();
    let df = d as f64;
    let ns: Vec<u32> = x.iter().map(|c| c.unsigned_abs() as u32).collect();
    let t_end = df * s_tail;
    let mut edges = vec![0.0, 0.5];
    while *edges.last().unwrap() < t_end {
        let nx = (edges.last().unwrap() * 1.5).min(t_end);
        edges.push(nx);
    }
    let rule = GaussRule::new(nodes);
    let body = rule.integrate_panels(
        |t| ns.iter().map(|&n| bessel_i_scaled(n, t / df)).product::<f64>(),
        &edges,
    );
    body + green_tail(x, s_tail)
}

/// ∫_{d·s}^∞ of the integrand: Π_i (2πs)^{-1/2} Σ_k c_{ik} s^{-k}, term by term.
fn green_tail(x: &[i64], s_tail: f64) -> f64 {
    let df = x.len() as f64;
    let terms = 10;
    let mut poly = vec![1.0];
    for &c in x {
        let c = bessel_i_asym_coeffs(c.unsigned_abs() as u32, terms);
        let mut next = vec![0.0; terms];
        for (i, a) in poly.iter().enumerate() {
            for (j, b) in c.iter().enumerate() {
                if i + j < terms {
                    next[i + j] += a * b;
                }
            }
        }
        poly = next;
    }
    let mut tail = 0.0;
    for (k, pk) in poly.iter().enumerate() {
        let e = df / 2.0 + k as f64 - 1.0;
        tail += pk * s_tail.powf(-e) / e;
    }
    tail * df * (2.0 * PI).powf(-df / 2.0)
}

/// G(x) = Σ_n P(S_n = x) for d ≥ 3.
///
/// Evaluated as G(x) = ∫_0^∞ Π_i e^{-t/d} I_{x_i}(t/d) dt: Gauss–Legendre on
/// geometric panels up to t = d·s, plus the large-s expansion beyond.
pub fn green(x: &[i64], d: usize) -> Result<GreenValue> {
    if d < 3 {
        return Err(Error::Window("the Green function is finite only for d >= 3".into()));
    }
    if x.len() != d {
        return invalid("x must have dimension d");
    }
    let nmax = x.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as f64;
    let s_tail = (800.0f64).max(40.0 * nmax * nmax);
    let a = green_integral(x, 32, s_tail);
    let b = green_integral(x, 24, 1.5 * s_tail);
    Ok(GreenValue { value: a, tolerance: ((a - b) / a).abs() })
}

/// e^{-s} I_n(s) for n = 0..=nmax.
fn bessel_row(nmax: u32, s: f64, out: &mut Vec<f64>) {
    out.clear();
    if s > 2.0 * nmax as f64 + 2.0 {
        // Upward recurrence is stable while n ≪ s.
        out.push(bessel_i_scaled(0, s));
        if nmax >= 1 {
            out.push(bessel_i_scaled(1, s));
        }
        for n in 1..nmax {
            let v = out[n as usize - 1] - 2.0 * n as f64 / s * out[n as usize];
            out.push(v);
        }
    } else {
        out.extend((0..=nmax).map(|n| bessel_i_scaled(n, s)));
    }
}

fn green_integral_many(keys: &[Vec<u32>], d: usize, nodes: usize, s_tail: f64) -> Vec<f64> {
    let df = d as f64;
    let nmax = keys.iter().flatten().copied().max().unwrap_or(0);
    let t_end = df * s_tail;
    let mut edges = vec![0.0, 0.5];
    while *edges.last().unwrap() < t_end {
        let nx = (edges.last().unwrap() * 1.5).min(t_end);
        edges.push(nx);
    }
    let (xg, wg) = crate::quad::gauss_legendre(nodes);
    let mut body = vec![0.0; keys.len()];
    let mut row = Vec::new();
    for e in edges.windows(2) {
        let h = 0.5 * (e[1] - e[0]);
        let c = 0.5 * (e[0] + e[1]);
        for (xi, wi) in xg.iter().zip(&wg) {
            let t = c + h * xi;
            bessel_row(nmax, t / df, &mut row);
            for (b, k) in body.iter_mut().zip(keys) {
                *b += wi * h * k.iter().map(|&n| row[n as usize]).product::<f64>();
            }
        }
    }
    keys.iter()
        .zip(body)
        .map(|(k, b)| {
            let x: Vec<i64> = k.iter().map(|&n| n as i64).collect();
            b + green_tail(&x, s_tail)
        })
        .collect()
}

/// G at many points sharing one set of quadrature nodes.
pub fn green_many(xs: &[Vec<i64>], d: usize) -> Result<Vec<GreenValue>> {
    if d < 3 {
        return Err(Error::Window("the Green function is finite only for d >= 3".into()));
    }
    if xs.iter().any(|x| x.len() != d) {
        return invalid("x must have dimension d");
    }
    let keys: Vec<Vec<u32>> = xs.iter().map(|x| x.iter().map(|c| c.unsigned_abs() as u32).collect()).collect();
    let nmax = keys.iter().flatten().copied().max().unwrap_or(0) as f64;
    let s_tail = (800.0f64).max(40.0 * nmax * nmax);
    let a = green_integral_many(&keys, d, 32, s_tail);
    let b = green_integral_many(&keys, d, 24, 1.5 * s_tail);
    Ok(a.into_iter().zip(b).map(|(a, b)| GreenValue { value: a, tolerance: ((a - b) / a).abs() }).collect())
}

/// λ_d = P(S_n ≠ 0 for all n ≥ 1) = 1/G(0), computed once per dimension.
pub fn escape_probability(d: usize) -> Result<f64> {
    static CACHE: OnceLock<Mutex<[Option<f64>; MAX_DIM + 1]>> = OnceLock::new();
    if d < 3 {
        return Err(Error::Window("the walk is recurrent for d <= 2".into()));
    }
    let cache = CACHE.get_or_init(|| Mutex::new([None; MAX_DIM + 1]));
    if d <= MAX_DIM {
        if let Some(v) = cache.lock().unwrap()[d] {
            return Ok(v);
        }
    }
    let g = green(&vec![0; d], d)?;
    if g.tolerance > 1e-6 {
        return Err(Error::Numerical(format!("Green quadrature tolerance {:e}", g.tolerance)));
    }
    let v = 1.0 / g.value;
    if d <= MAX_DIM {
        cache.lock().unwrap()[d] = Some(v);
    }
    Ok(v)
}

/// P(x ∈ R_∞) = G(x)/G(0); equals 1 at the origin.
pub fn hitting_probability_inf(x: &[i64], d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::Window("hitting probabilities are all 1 for d <= 2".into()));
    }
    if x.iter().all(|&c| c == 0) {
        return Ok(1.0);
    }
    let g0 = green(&vec![0; d], d)?;
    let gx = green(x, d)?;
    Ok(gx.value / g0.value)
}

/// Profile f(x) = lim v_N P(x√N ∈ R_N).
pub fn f_profile(x: &[f64], d: usize) -> Result<f64> {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    if x.len() != d {
        return invalid("x must have dimension d");
    }
    if r2 == 0.0 {
        return invalid("f is singular at the origin");
    }
    f_profile_radial(r2.sqrt(), d)
}

/// f as a function of ‖x‖.
pub fn f_profile_radial(r: f64, d: usize) -> Result<f64> {
    if !(r > 0.0) {
        return invalid("f is singular at the origin");
    }
    match d {
        0 | 1 => invalid("d must be at least 2"),
        2 => Ok(expint_e1(r * r / 2.0)),
        _ => {
            let lambda = escape_probability(d)?;
            Ok(2.0 * lambda * heat_time_integral(r, d))
        }
    }
}

/// ∫_0^1 (2πu/d)^{-d/2} exp(−d r²/(2u)) du = (πr²)^{-d/2} (d r²/2) Γ(d/2 − 1, d r²/2).
fn heat_time_integral(r: f64, d: usize) -> f64 {
    let a = d as f64 * r * r / 2.0;
    (PI * r * r).powf(-(d as f64) / 2.0) * a * upper_gamma_half_integer(d, a)
}

/// Γ(d/2 − 1, a) for d ≥ 3, by upward recurrence from Γ(1/2, a) or Γ(1, a).
fn upper_gamma_half_integer(d: usize, a: f64) -> f64 {
    let (mut s, mut g) = if d % 2 == 1 { (0.5, PI.sqrt() * erfc(a.sqrt())) } else { (1.0, (-a).exp()) };
    let target = d as f64 / 2.0 - 1.0;
    while s < target {
        g = s * g + a.powf(s) * (-a).exp();
        s += 1.0;
    }
    g
}

/// v_N: log N for d = 2 and N^{d/2−1} for d ≥ 3.
pub fn v_n(n: f64, d: usize) -> f64 {
    if d == 2 {
        n.ln()
    } else {
        n.powf(d as f64 / 2.0 - 1.0)
    }
}

/// Nearest lattice site to `x` whose coordinate sum has the parity of `n`.
pub fn nearest_site_with_parity(x: &[f64], n: u64) -> Vec<i64> {
    let mut y: Vec<i64> = x.iter().map(|c| c.round() as i64).collect();
    let s: i64 = y.iter().sum();
    if (s - n as i64).rem_euclid(2) != 0 {
        // Move the coordinate whose rounding was least certain.
        let (i, _) = x
            .iter()
            .zip(&y)
            .map(|(a, b)| 0.5 - (a - *b as f64).abs())
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        y[i] += if x[i] >= y[i] as f64 { 1 } else { -1 };
    }
    y
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalLimitRow {
    pub n: u64,
    pub scaled: McEstimate,
    pub f: f64,
    pub ratio: f64,
    pub zero_hit: bool,
}

/// MC of v_N P(y_N ∈ R_N) with y_N the parity-matched site nearest to x√N.
pub fn local_limit_check(x: &[f64], d: usize, n_grid: &[u64], replicas: u64, seed: u64) -> Result<Vec<LocalLimitRow>> {
    let f = f_profile(x, d)?;
    let mut rows = Vec::new();
    for (gi, &n) in n_grid.iter().enumerate() {
        let target: Vec<f64> = x.iter().map(|c| c * (n as f64).sqrt()).collect();
        let y = nearest_site_with_parity(&target, n);
        let est = visit_probability_mc(&[y], n as usize, replicas, derive_seed(seed, gi as u64))?;
        let v = v_n(n as f64, d);
        let scaled = McEstimate { mean: v * est.estimate.mean, stderr: v * est.estimate.stderr, replicas, seed };
        rows.push(LocalLimitRow { n, scaled, f, ratio: scaled.mean / f, zero_hit: est.zero_hit });
    }
    Ok(rows)
}

/// Largest N accepted by exact overlap sums.
pub fn exact_overlap_feasible(n: u64, d: usize) -> bool {
    let sites = (2.0 * n as f64 + 1.0).powi(d as i32);
    sites * (n as f64 + 1.0) <= 4e7 && sites * (n as f64).powi(2) / 2.0 <= 2e9
}

/// P(x ∈ R_N) for every site, exactly: transition probabilities by a
/// time-stepping sweep, then first-passage probabilities by the renewal
/// identity p_n(x) = Σ_k f_k(x) p_{n−k}(0).
pub fn range_probabilities_exact(n: u64, d: usize) -> Result<Vec<(Vec<i64>, f64)>> {
    if !exact_overlap_feasible(n, d) {
        return Err(Error::TooLarge(format!("exact range probabilities are capped; N = {n} in d = {d} is too large")));
    }
    let n = n as usize;
    let side = 2 * n + 1;
    let total: usize = side.pow(d as u32);
    let stride: Vec<usize> = (0..d).map(|i| side.pow(i as u32)).collect();
    let index = |site: &[i64]| -> usize { site.iter().zip(&stride).map(|(c, s)| (c + n as i64) as usize * s).sum() };
    // p[t][idx]
    let mut p = vec![0.0f64; total * (n + 1)];
    let origin = index(&vec![0; d]);
    p[origin] = 1.0;
    let q = 1.0 / (2 * d) as f64;
    for t in 0..n {
        let (cur, next) = p.split_at_mut((t + 1) * total);
        let cur = &cur[t * total..];
        let next = &mut next[..total];
        for idx in 0..total {
            let v = cur[idx];
            if v == 0.0 {
                continue;
            }
            for s in &stride {
                next[idx + s] += v * q;
                next[idx - s] += v * q;
            }
        }
    }
    let p0: Vec<f64> = (0..=n).map(|t| p[t * total + origin]).collect();
    let mut out = Vec::new();
    let mut site = vec![-(n as i64); d];
    let mut f = vec![0.0; n + 1];
    loop {
        let l1: i64 = site.iter().map(|c| c.abs()).sum();
        if l1 as usize <= n {
            let idx = index(&site);
            let prob = if l1 == 0 {
                1.0
            } else {
                let mut acc = 0.0;
                for m in 1..=n {
                    let mut s = p[m * total + idx];
                    for k in 1..m {
                        s -= f[k] * p0[m - k];
                    }
                    f[m] = s;
                    acc += s;
                }
                acc
            };
            out.push((site.clone(), prob));
        }
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if site[i] < n as i64 {
                site[i] += 1;
                for c in site.iter_mut().skip(i + 1) {
                    *c = -(n as i64);
                }
                break;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlapMode {
    Exact,
    Mc { replicas: u64, seed: u64 },
}

/// J_N = Σ_x P(x ∈ R_N)² = E|R_N ∩ R'_N|.
pub fn overlap_sum(n: u64, d: usize, mode: OverlapMode) -> Result<McEstimate> {
    match mode {
        OverlapMode::Exact => {
            let probs = range_probabilities_exact(n, d)?;
            let j = probs.iter().map(|(_, p)| p * p).sum();
            Ok(McEstimate { mean: j, stderr: 0.0, replicas: 0, seed: 0 })
        }
        OverlapMode::Mc { replicas, seed } => {
            if replicas < 2 {
                return invalid("need at least 2 replicas");
            }
            let stream = Stream::new(seed, "overlap");
            let mut acc = Welford::new();
            let mut set = FxHashSet::default();
            let mut seen = FxHashSet::default();
            for r in 0..replicas {
                set.clear();
                seen.clear();
                let mut w = Walker::new(d, stream.rng(2 * r));
                set.insert(w.key());
                for _ in 0..n {
                    w.step();
                    set.insert(w.key());
                }
                let mut w2 = Walker::new(d, stream.rng(2 * r + 1));
                let mut count = 1u64; // the origin
                seen.insert(w2.key());
                for _ in 0..n {
                    w2.step();
                    let k = w2.key();
                    if seen.insert(k) && set.contains(&k) {
                        count += 1;
                    }
                }
                acc.push(count as f64);
            }
            Ok(acc.estimate(seed))
        }
    }
}

/// MC estimate of E|R_N|.
pub fn mean_range(n: u64, d: usize, replicas: u64, seed: u64) -> McEstimate {
    let stream = Stream::new(seed, "range");
    let mut acc = Welford::new();
    let mut set = FxHashSet::default();
    for r in 0..replicas {
        set.clear();
        let mut w = Walker::new(d, stream.rng(r));
        set.insert(w.key());
        for _ in 0..n {
            w.step();
            set.insert(w.key());
        }
        acc.push(set.len() as f64);
    }
    acc.estimate(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_length_walk() {
        let p = simulate_walk(0, 2, 1);
        assert_eq!(p.coords, vec![0, 0]);
    }

    #[test]
    fn walk_is_nearest_neighbour() {
        let p = simulate_walk(200, 3, 5);
        for n in 0..200 {
            let a = p.site(n);
            let b = p.site(n + 1);
            let l1: i64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
            assert_eq!(l1, 1);
        }
        let r = range_summary(&p);
        assert!(r.size <= 201 && r.range.contains(&pack(&[0, 0, 0])));
    }

    #[test]
    fn one_step_visit() {
        assert!(visit_probability_mc(&[vec![0, 0]], 3, 10, 1).is_err());
        assert!(visit_probability_mc(&[vec![1, 0], vec![1, 0]], 3, 10, 1).is_err());
        let e = visit_probability_mc(&[vec![1, 0]], 1, 40_000, 2).unwrap();
        assert!((e.estimate.mean - 0.25).abs() < 3.0 * e.estimate.stderr);
    }

    #[test]
    fn transition_probabilities_sum_to_one() {
        for d in 2..=3 {
            let n = 6u64;
            let mut total = 0.0;
            let r = n as i64;
            let mut stack = vec![vec![]];
            while let Some(v) = stack.pop() {
                if v.len() == d {
                    total += log_transition(n, &v).exp();
                    continue;
                }
                for c in -r..=r {
                    let mut w: Vec<i64> = v.clone();
                    w.push(c);
                    stack.push(w);
                }
            }
            assert!((total - 1.0).abs() < 1e-12, "d={d}");
        }
        assert!((log_transition(1, &[1, 0]).exp() - 0.25).abs() < 1e-15);
        assert!((log_transition(2, &[0, 0, 0]).exp() - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn exact_j1() {
        let j = overlap_sum(1, 2, OverlapMode::Exact).unwrap();
        assert!((j.mean - 1.25).abs() < 1e-15);
    }

    #[test]
    fn green_symmetry() {
        let a = green(&[1, 2, 0], 3).unwrap().value;
        let b = green(&[0, -1, 2], 3).unwrap().value;
        assert!((a - b).abs() < 1e-14 * a);
        assert!(escape_probability(2).is_err());
    }

    #[test]
    fn parity_rounding() {
        let y = nearest_site_with_parity(&[2.2, 0.9], 4);
        assert_eq!((y[0] + y[1]).rem_euclid(2), 0);
    }
}

#[cfg(test)]
mod green_tests {
    use super::*;

    fn heat_quadrature(r: f64, d: usize) -> f64 {
        let df = d as f64;
        let g = |v: f64| {
            let u = v.exp();
            (2.0 * PI * u / df).powf(-df / 2.0) * (-df * r * r / (2.0 * u)).exp() * u
        };
        let lo = (df * r * r / (2.0 * 745.0)).ln().min(-1.0);
        let edges: Vec<f64> = (0..=400).map(|i| lo * (1.0 - i as f64 / 400.0)).collect();
        GaussRule::new(40).integrate_panels(g, &edges)
    }

    #[test]
    fn heat_integral_closed_form() {
        for d in 3..=5 {
            for r in [0.05, 0.3, 1.0, 2.2, 4.0] {
                let a = heat_time_integral(r, d);
                let b = heat_quadrature(r, d);
                assert!((a - b).abs() < 1e-9 * b, "d={d} r={r}: {a} vs {b}");
            }
        }
    }
    use crate::special::gamma;

    #[test]
    fn escape_d3_closed_form() {
        let g0 = 6f64.sqrt() / (32.0 * PI.powi(3))
            * gamma(1.0 / 24.0)
            * gamma(5.0 / 24.0)
            * gamma(7.0 / 24.0)
            * gamma(11.0 / 24.0);
        let lam = escape_probability(3).unwrap();
        assert!((lam - 1.0 / g0).abs() < 1e-9, "{lam} vs {}", 1.0 / g0);
    }

    #[test]
    fn green_harmonic_off_origin() {
        // G(x) = (1/2d) Σ_e G(x+e) for x ≠ 0, and G(0) = 1 + mean of neighbours.
        let x = [2i64, 1, 0];
        let g = |y: [i64; 3]| green(&y, 3).unwrap().value;
        let mut s = 0.0;
        for a in 0..3 {
            for sgn in [-1, 1] {
                let mut y = x;
                y[a] += sgn;
                s += g(y);
            }
        }
        assert!((g(x) - s / 6.0).abs() < 1e-10);
        let g0 = g([0, 0, 0]);
        assert!((g0 - 1.0 - g([1, 0, 0])).abs() < 1e-10);
    }
}
