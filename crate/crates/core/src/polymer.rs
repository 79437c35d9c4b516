//! Partition functions and path observables of the range-reweighted walk.
//!
//! Z = E[exp(β Σ_{x∈R_N} (ω_x − h))], each visited site counted once.

use crate::env::{LatticeEnvironment, TruncatedEnvironment};
use crate::error::{invalid, Error, Result};
use crate::model::{classify_regime, coupling, wandering_exponent, ModelParams, Region};
use crate::rng::{derive_seed, Stream};
use crate::stats::{batch_means_stderr, bootstrap_ci, ols, Welford};
use crate::varprob::{discrete_t, EntropyKind};
use crate::walk::{mean_range, pack, v_n, Walker, MAX_DIM};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};

/// Anything that assigns a value to each lattice site.
pub trait SiteField {
    fn value(&self, site: &[i64]) -> f64;
}

impl SiteField for LatticeEnvironment {
    #[inline]
    fn value(&self, site: &[i64]) -> f64 {
        LatticeEnvironment::value(self, site)
    }
}

impl SiteField for TruncatedEnvironment {
    #[inline]
    fn value(&self, site: &[i64]) -> f64 {
        TruncatedEnvironment::value(self, site)
    }
}

/// ω + c.
pub struct Shifted<'a, F: SiteField> {
    pub inner: &'a F,
    pub shift: f64,
}

impl<F: SiteField> SiteField for Shifted<'_, F> {
    #[inline]
    fn value(&self, site: &[i64]) -> f64 {
        self.inner.value(site) + self.shift
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMethod {
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionEstimate {
    pub log_z: f64,
    pub method: PartitionMethod,
    pub replicas: u64,
    /// Standard error of Z (0 for exact).
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    /// Kish effective sample size of the replica weights.
    pub ess: f64,
    /// Largest single replica weight over the total.
    pub top_weight_fraction: f64,
    pub heavy_weight_warning: bool,
}

impl PartitionEstimate {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// Standard error of log Z by the delta method.
    pub fn log_stderr(&self) -> f64 {
        self.stderr / self.z()
    }
}

/// Running log-sum-exp.
#[derive(Clone, Copy, Debug)]
struct Lse {
    m: f64,
    s: f64,
}

impl Lse {
    fn new() -> Self {
        Lse { m: f64::NEG_INFINITY, s: 0.0 }
    }

    #[inline]
    fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.m {
            self.s += (x - self.m).exp();
        } else {
            self.s = self.s * (self.m - x).exp() + 1.0;
            self.m = x;
        }
    }

    fn log(&self) -> f64 {
        self.m + self.s.ln()
    }
}

pub const EXACT_PATH_CAP: f64 = 1e8;

/// Exact Z by depth-first enumeration of all (2d)^N paths.
pub fn partition_exact<F: SiteField>(env: &F, n: u64, beta: f64, h: f64, d: usize) -> Result<PartitionEstimate> {
    if !(1..=MAX_DIM).contains(&d) {
        return invalid("d must be in 1..=5");
    }
    let paths = ((2 * d) as f64).powi(n as i32);
    if paths > EXACT_PATH_CAP {
        return Err(Error::TooLarge(format!("(2d)^N = {paths:e} exceeds the exact cap {EXACT_PATH_CAP:e}")));
    }
    if !beta.is_finite() {
        return invalid("beta must be finite");
    }
    struct Dfs<'a, F: SiteField> {
        env: &'a F,
        d: usize,
        n: u64,
        beta: f64,
        h: f64,
        counts: FxHashMap<u128, u32>,
        pos: [i64; MAX_DIM],
        energy: f64,
        acc: Lse,
    }
    impl<F: SiteField> Dfs<'_, F> {
        fn enter(&mut self) -> f64 {
            let k = pack(&self.pos[..self.d]);
            let c = self.counts.entry(k).or_insert(0);
            *c += 1;
            if *c == 1 {
                let v = self.env.value(&self.pos[..self.d]) - self.h;
                self.energy += v;
                v
            } else {
                0.0
            }
        }

        fn leave(&mut self, added: f64) {
            let k = pack(&self.pos[..self.d]);
            let c = self.counts.get_mut(&k).unwrap();
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&k);
            }
            self.energy -= added;
        }

        fn go(&mut self, depth: u64) {
            if depth == self.n {
                self.acc.push(self.beta * self.energy);
                return;
            }
            for axis in 0..self.d {
                for s in [1i64, -1] {
                    self.pos[axis] += s;
                    let added = self.enter();
                    self.go(depth + 1);
                    self.leave(added);
                    self.pos[axis] -= s;
                }
            }
        }
    }
    let mut dfs = Dfs {
        env,
        d,
        n,
        beta,
        h,
        counts: FxHashMap::default(),
        pos: [0; MAX_DIM],
        energy: 0.0,
        acc: Lse::new(),
    };
    dfs.enter();
    dfs.go(0);
    // Exact running sums drift slightly; the energy of each leaf is recomputed
    // incrementally, so only the final normalization remains.
    let log_z = dfs.acc.log() - n as f64 * ((2 * d) as f64).ln();
    Ok(PartitionEstimate {
        log_z,
        method: PartitionMethod::Exact,
        replicas: 0,
        stderr: 0.0,
        n,
        seed: 0,
        ess: f64::NAN,
        top_weight_fraction: f64::NAN,
        heavy_weight_warning: false,
    })
}

/// Path restriction on M_N = max_{n≤N} ‖S_n‖.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Restriction {
    None,
    MaxAtMost(f64),
    MaxIn(f64, f64),
}

impl Restriction {
    fn admits(&self, m: f64) -> bool {
        match *self {
            Restriction::None => true,
            Restriction::MaxAtMost(b) => m <= b,
            Restriction::MaxIn(a, b) => a <= m && m < b,
        }
    }
}

/// Range energy Σ_{x∈R_N}(ω_x − h) and M_N of one walk, sampled at the
/// requested times (sorted ascending).
fn walk_observables<F: SiteField>(
    env: &F,
    w: &mut Walker,
    h: f64,
    times: &[u64],
    set: &mut FxHashSet<u128>,
) -> Vec<(f64, f64)> {
    set.clear();
    set.insert(w.key());
    let mut energy = env.value(w.site()) - h;
    let mut m2 = 0i64;
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0u64;
    for &target in times {
        while t < target {
            w.step();
            t += 1;
            if set.insert(w.key()) {
                energy += env.value(w.site()) - h;
            }
            let r2: i64 = w.site().iter().map(|c| c * c).sum();
            m2 = m2.max(r2);
        }
        out.push((energy, (m2 as f64).sqrt()));
    }
    out
}

fn summarize(log_w: &[f64], n: u64, seed: u64) -> PartitionEstimate {
    let replicas = log_w.len() as u64;
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return PartitionEstimate {
            log_z: f64::NEG_INFINITY,
            method: PartitionMethod::Mc,
            replicas,
            stderr: 0.0,
            n,
            seed,
            ess: 0.0,
            top_weight_fraction: f64::NAN,
            heavy_weight_warning: true,
        };
    }
    let scaled: Vec<f64> = log_w.iter().map(|x| (x - m).exp()).collect();
    let sum: f64 = scaled.iter().sum();
    let sum2: f64 = scaled.iter().map(|x| x * x).sum();
    let mean = sum / replicas as f64;
    let se = batch_means_stderr(&scaled, 100);
    let top = 1.0 / sum;
    PartitionEstimate {
        log_z: m + mean.ln(),
        method: PartitionMethod::Mc,
        replicas,
        stderr: se * m.exp(),
        n,
        seed,
        ess: sum * sum / sum2,
        top_weight_fraction: top,
        heavy_weight_warning: top > 0.5,
    }
}

/// Plain Monte Carlo estimate of Z, optionally restricted in M_N.
pub fn partition_mc<F: SiteField>(
    env: &F,
    n: u64,
    beta: f64,
    h: f64,
    d: usize,
    replicas: u64,
    seed: u64,
    restriction: Restriction,
) -> Result<PartitionEstimate> {
    Ok(partition_mc_multi(env, n, beta, h, d, replicas, seed, &[restriction])?.remove(0))
}

/// Several restrictions evaluated on the same replicas.
#[allow(clippy::too_many_arguments)]
pub fn partition_mc_multi<F: SiteField>(
    env: &F,
    n: u64,
    beta: f64,
    h: f64,
    d: usize,
    replicas: u64,
    seed: u64,
    restrictions: &[Restriction],
) -> Result<Vec<PartitionEstimate>> {
    if replicas < 1000 {
        return invalid("partition_mc needs at least 1000 replicas");
    }
    if !beta.is_finite() || beta < 0.0 {
        return invalid("beta must be finite and non-negative");
    }
    let stream = Stream::new(seed, "polymer-mc");
    let mut set = FxHashSet::default();
    let mut log_w = vec![Vec::with_capacity(replicas as usize); restrictions.len()];
    for r in 0..replicas {
        let mut w = Walker::new(d, stream.rng(r));
        let (e, m) = walk_observables(env, &mut w, h, &[n], &mut set)[0];
        for (k, res) in restrictions.iter().enumerate() {
            log_w[k].push(if res.admits(m) { beta * e } else { f64::NEG_INFINITY });
        }
    }
    Ok(log_w.iter().map(|lw| summarize(lw, n, seed)).collect())
}

/// A rescaled log-partition statistic with its error budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionStat {
    pub value: f64,
    /// Standard error of `value` from the MC error of log Z (and of E|R_N|).
    pub stderr: f64,
    pub partition: PartitionEstimate,
    pub beta_n: f64,
    pub normalization: f64,
    pub centering: f64,
    /// Bound on the neglected field term (region A only).
    pub h_bound: f64,
}

fn finite_coupling(p: &ModelParams, n: u64) -> Result<f64> {
    let b = coupling(p, n)?;
    if !b.is_finite() {
        return invalid("an infinite amplitude cannot be simulated");
    }
    Ok(b)
}

/// (β_N N^{d/α})^{-1} log Z at h = 0.
pub fn region_a_statistic<F: SiteField>(p: &ModelParams, n: u64, env: &F, replicas: u64, seed: u64) -> Result<RegionStat> {
    let region = classify_regime(p)?;
    if !matches!(region, Region::A | Region::BoundaryAB) {
        return Err(Error::Window(format!("region A statistic needs region A, got {region}")));
    }
    let beta_n = finite_coupling(p, n)?;
    let pe = partition_mc(env, n, beta_n, 0.0, p.d, replicas, seed, Restriction::None)?;
    let norm = beta_n * (n as f64).powf(p.d as f64 / p.alpha);
    Ok(RegionStat {
        value: pe.log_z / norm,
        stderr: pe.log_stderr() / norm,
        partition: pe,
        beta_n,
        normalization: norm,
        centering: 0.0,
        h_bound: p.h.abs() * (n as f64).powf((p.alpha - p.d as f64) / p.alpha),
    })
}

/// N^{-(2ξ−1)} log Z at h = μ.
pub fn region_b_statistic<F: SiteField>(p: &ModelParams, n: u64, env: &F, replicas: u64, seed: u64) -> Result<RegionStat> {
    let region = classify_regime(p)?;
    if region != Region::B {
        return Err(Error::Window(format!("region B statistic needs region B, got {region}")));
    }
    let mu = p.mu().ok_or_else(|| Error::Window("region B needs alpha > 1 so that mu exists".into()))?;
    let xi = wandering_exponent(p)?;
    let beta_n = finite_coupling(p, n)?;
    let pe = partition_mc(env, n, beta_n, mu, p.d, replicas, seed, Restriction::None)?;
    let norm = (n as f64).powf(2.0 * xi - 1.0);
    Ok(RegionStat {
        value: pe.log_z / norm,
        stderr: pe.log_stderr() / norm,
        partition: pe,
        beta_n,
        normalization: norm,
        centering: 0.0,
        h_bound: 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CVariant {
    Gaussian,
    Chi,
    W,
}

/// Check the (α, d) window of a region-C variant.
pub fn region_c_window(alpha: f64, d: usize, variant: CVariant) -> Result<()> {
    let df = d as f64;
    let ok = match variant {
        CVariant::Gaussian => (d == 3 || d == 4) && alpha > 2f64.max(df / 2.0) && alpha < df,
        CVariant::Chi => d >= 5 && alpha > df / (df - 2.0) && alpha < df && alpha != df / 2.0,
        CVariant::W => {
            let c1 = (d == 2 || d == 3) && alpha > df / 2.0 && alpha < 2.0;
            let cap = if d == 2 { f64::INFINITY } else { df / (df - 2.0) };
            let c2 = alpha < (df / 2.0).min(cap) && alpha != 1.0;
            c1 || c2
        }
    };
    if ok {
        Ok(())
    } else {
        let need = match variant {
            CVariant::Gaussian => "d in {3, 4} and alpha in (max(2, d/2), d)",
            CVariant::Chi => "d >= 5 and alpha in (d/(d-2), d) with alpha != d/2",
            CVariant::W => "alpha in (d/2, 2) with d in {2, 3}, or alpha < min(d/2, d/(d-2)) with alpha != 1",
        };
        Err(Error::Window(format!("{variant:?} variant needs {need}; got alpha = {alpha}, d = {d}")))
    }
}

/// Region-C statistics with the normalizations of the three limit laws.
#[allow(clippy::too_many_arguments)]
pub fn region_c_statistic<F: SiteField>(
    p: &ModelParams,
    n: u64,
    env: &F,
    replicas: u64,
    seed: u64,
    variant: CVariant,
    range_replicas: u64,
) -> Result<RegionStat> {
    let region = classify_regime(p)?;
    if region != Region::C {
        return Err(Error::Window(format!("region C statistic needs region C, got {region}")));
    }
    region_c_window(p.alpha, p.d, variant)?;
    let beta_n = finite_coupling(p, n)?;
    let df = p.d as f64;
    let nf = n as f64;
    // h = μ when the mean exists; for α < 1 the field is taken from p.h.
    let h = p.mu().unwrap_or(p.h);
    let pe = partition_mc(env, n, beta_n, h, p.d, replicas, seed, Restriction::None)?;
    let centered = |norm: f64| -> Result<RegionStat> {
        let var = crate::env::pareto_variance(p.alpha);
        let range = mean_range(n, p.d, range_replicas, derive_seed(seed, 1));
        let centering = 0.5 * var * beta_n * beta_n * range.mean;
        let se_c = 0.5 * var * beta_n * beta_n * range.stderr;
        Ok(RegionStat {
            value: (pe.log_z - centering) / norm,
            stderr: (pe.log_stderr().powi(2) + se_c * se_c).sqrt() / norm,
            partition: pe,
            beta_n,
            normalization: norm,
            centering,
            h_bound: 0.0,
        })
    };
    match variant {
        CVariant::Gaussian => {
            let a_n = if p.d == 3 { nf.powf(0.25) } else { nf.ln().sqrt() };
            centered(a_n * beta_n)
        }
        CVariant::Chi => {
            if p.alpha > df / 2.0 {
                centered(beta_n)
            } else {
                Ok(RegionStat {
                    value: pe.log_z / beta_n,
                    stderr: pe.log_stderr() / beta_n,
                    partition: pe,
                    beta_n,
                    normalization: beta_n,
                    centering: 0.0,
                    h_bound: 0.0,
                })
            }
        }
        CVariant::W => {
            let norm = beta_n * nf.powf(df / (2.0 * p.alpha)) / v_n(nf, p.d);
            Ok(RegionStat {
                value: pe.log_z / norm,
                stderr: pe.log_stderr() / norm,
                partition: pe,
                beta_n,
                normalization: norm,
                centering: 0.0,
                h_bound: 0.0,
            })
        }
    }
}

/// Weighted median of (value, log-weight) pairs.
pub fn weighted_median(pairs: &[(f64, f64)]) -> f64 {
    let m = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut v: Vec<(f64, f64)> = pairs.iter().map(|&(x, lw)| (x, (lw - m).exp())).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = v.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for (x, w) in &v {
        acc += w;
        if acc >= 0.5 * total {
            return *x;
        }
    }
    v.last().map_or(f64::NAN, |p| p.0)
}

/// Metropolis chain on step sequences targeting the polymer measure.
///
/// Proposals (swap two steps, redraw one step, regrow the end) are
/// symmetric for the uniform law of step sequences, so the acceptance ratio
/// is exp(β ΔE) with E the range energy.
pub struct PathChain<'a, F: SiteField> {
    env: &'a F,
    d: usize,
    beta: f64,
    h: f64,
    steps: Vec<u8>,
    pos: Vec<[i64; MAX_DIM]>,
    counts: FxHashMap<u128, u32>,
    pub energy: f64,
    rng: ChaCha8Rng,
    pub proposed: u64,
    pub accepted: u64,
}

fn unit(d: usize, s: u8) -> [i64; MAX_DIM] {
    let mut e = [0; MAX_DIM];
    let _ = d;
    e[(s >> 1) as usize] = if s & 1 == 0 { 1 } else { -1 };
    e
}

impl<'a, F: SiteField> PathChain<'a, F> {
    pub fn new(env: &'a F, d: usize, beta: f64, h: f64, steps: Vec<u8>, rng: ChaCha8Rng) -> Self {
        let mut pos = Vec::with_capacity(steps.len() + 1);
        let mut cur = [0i64; MAX_DIM];
        pos.push(cur);
        for &s in &steps {
            let e = unit(d, s);
            for a in 0..d {
                cur[a] += e[a];
            }
            pos.push(cur);
        }
        let mut chain = PathChain {
            env,
            d,
            beta,
            h,
            steps,
            pos: Vec::new(),
            counts: FxHashMap::default(),
            energy: 0.0,
            rng,
            proposed: 0,
            accepted: 0,
        };
        for p in &pos {
            chain.energy += chain.inc(p);
        }
        chain.pos = pos;
        chain
    }

    #[inline]
    fn inc(&mut self, p: &[i64; MAX_DIM]) -> f64 {
        let c = self.counts.entry(pack(&p[..self.d])).or_insert(0);
        *c += 1;
        if *c == 1 {
            self.env.value(&p[..self.d]) - self.h
        } else {
            0.0
        }
    }

    #[inline]
    fn dec(&mut self, p: &[i64; MAX_DIM]) -> f64 {
        let k = pack(&p[..self.d]);
        let c = self.counts.get_mut(&k).unwrap();
        *c -= 1;
        if *c == 0 {
            self.counts.remove(&k);
            -(self.env.value(&p[..self.d]) - self.h)
        } else {
            0.0
        }
    }

    /// Replace positions a+1..=b by `new`, returning the energy change.
    fn replace(&mut self, a: usize, new: &[[i64; MAX_DIM]]) -> f64 {
        let mut de = 0.0;
        for k in 0..new.len() {
            let old = self.pos[a + 1 + k];
            de += self.dec(&old);
        }
        for (k, p) in new.iter().enumerate() {
            de += self.inc(p);
            self.pos[a + 1 + k] = *p;
        }
        de
    }

    fn rebuild(&self, a: usize, steps: &[u8]) -> Vec<[i64; MAX_DIM]> {
        let mut cur = self.pos[a];
        steps
            .iter()
            .map(|&s| {
                let e = unit(self.d, s);
                for i in 0..self.d {
                    cur[i] += e[i];
                }
                cur
            })
            .collect()
    }

    fn try_move(&mut self, a: usize, new_steps: Vec<u8>) {
        self.proposed += 1;
        let old_pos: Vec<[i64; MAX_DIM]> = self.pos[a + 1..a + 1 + new_steps.len()].to_vec();
        let new_pos = self.rebuild(a, &new_steps);
        let de = self.replace(a, &new_pos);
        let u: f64 = self.rng.random();
        if de >= 0.0 || u < (self.beta * de).exp() {
            self.accepted += 1;
            self.energy += de;
            self.steps[a..a + new_steps.len()].copy_from_slice(&new_steps);
        } else {
            self.replace(a, &old_pos);
        }
    }

    /// A uniformly random lattice symmetry acting on step codes.
    fn random_symmetry(&mut self) -> [u8; 2 * MAX_DIM] {
        let d = self.d;
        let mut perm: [usize; MAX_DIM] = [0, 1, 2, 3, 4];
        for i in (1..d).rev() {
            let j = self.rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let mut map = [0u8; 2 * MAX_DIM];
        for a in 0..d {
            let flip: bool = self.rng.random();
            for s in 0..2u8 {
                map[2 * a + s as usize] = (2 * perm[a]) as u8 + (s ^ flip as u8);
            }
        }
        map
    }

    pub fn step(&mut self) {
        let n = self.steps.len();
        if n == 0 {
            return;
        }
        let window = (n / 16).max(2);
        let kind: f64 = self.rng.random();
        let two_d = (2 * self.d) as u8;
        if kind < 0.4 && n >= 2 {
            let i = self.rng.random_range(0..n - 1);
            let j = (i + 1 + self.rng.random_range(0..window)).min(n - 1);
            let mut seg = self.steps[i..=j].to_vec();
            let last = seg.len() - 1;
            seg.swap(0, last);
            self.try_move(i, seg);
        } else if kind < 0.55 {
            let i = self.rng.random_range(0..n);
            let mut seg = self.steps[i..].to_vec();
            seg[0] = self.rng.random_range(0..two_d);
            self.try_move(i, seg);
        } else if kind < 0.65 {
            let i = n - 1 - self.rng.random_range(0..window.min(n));
            let seg: Vec<u8> = (i..n).map(|_| self.rng.random_range(0..two_d)).collect();
            self.try_move(i, seg);
        } else if kind < 0.85 {
            // Pivot of the tail.
            let g = self.random_symmetry();
            let i = self.rng.random_range(0..n);
            let seg: Vec<u8> = self.steps[i..].iter().map(|&s| g[s as usize]).collect();
            self.try_move(i, seg);
        } else {
            // Symmetry applied to an inner segment; the rest is translated.
            let g = self.random_symmetry();
            let i = self.rng.random_range(0..n);
            let j = (i + 1 + self.rng.random_range(0..window)).min(n);
            let mut seg = self.steps[i..].to_vec();
            for s in &mut seg[..j - i] {
                *s = g[*s as usize];
            }
            self.try_move(i, seg);
        }
    }

    /// max_n ‖S_n‖.
    pub fn max_displacement(&self) -> f64 {
        self.pos
            .iter()
            .map(|p| p[..self.d].iter().map(|c| (c * c) as f64).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn steps(&self) -> &[u8] {
        &self.steps
    }
}

/// Steps of a lattice path that follows the straight segments through
/// `points` and then continues with uniform steps up to length n.
pub fn path_through<R: Rng>(points: &[Vec<i64>], d: usize, n: usize, rng: &mut R) -> Vec<u8> {
    let mut steps = Vec::with_capacity(n);
    let mut cur = vec![0i64; d];
    'outer: for p in points {
        let start = cur.clone();
        let total: Vec<i64> = p.iter().zip(&start).map(|(a, b)| a - b).collect();
        let l1: i64 = total.iter().map(|c| c.abs()).sum();
        for t in 1..=l1 {
            if steps.len() == n {
                break 'outer;
            }
            // Move along the axis lagging most behind the straight line.
            let frac = t as f64 / l1 as f64;
            let (axis, _) = (0..d)
                .map(|a| {
                    let want = start[a] as f64 + frac * total[a] as f64;
                    (a, (want - cur[a] as f64) * total[a].signum() as f64)
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            let s = if total[axis] > 0 { 0 } else { 1 };
            cur[axis] += if s == 0 { 1 } else { -1 };
            steps.push((2 * axis + s) as u8);
        }
    }
    while steps.len() < n {
        steps.push(rng.random_range(0..(2 * d) as u8));
    }
    steps
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FluctMethod {
    /// Independent walks reweighted by their Gibbs weight.
    Plain { replicas: u64 },
    /// Path Metropolis started from a lattice path through the variational
    /// witness on the top-ℓ sites of the ball of radius q N^ξ.
    WitnessMcmc { moves: u64, q: f64, ell: usize },
}

/// Environment filter applied before measuring fluctuations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluctCondition {
    None,
    /// Keep environments whose coupled truncated 𝒯̂ estimate at the largest
    /// N is positive.
    HatPositive { ell: usize },
    /// Keep those where it vanishes (a conservative proxy for 𝒯̂_β = 0).
    HatZero { ell: usize },
}

/// Coupled truncated estimate of 𝒯̂: the rate-entropy problem on the top-ℓ
/// sites of Λ_N, rescaled by β_N N^{d/α}.
pub fn hat_t_estimate(p: &ModelParams, n: u64, env_seed: u64, ell: usize) -> Result<f64> {
    let beta = finite_coupling(p, n)?;
    let mut ball = LatticeEnvironment::pareto(p.d, n as f64, p.alpha, env_seed)?;
    ball.radius = n as f64;
    let stats = ball.top_k(ell);
    let sol = discrete_t(&stats, n as f64, beta, stats.len(), p.d, EntropyKind::Rate)?;
    Ok(sol.value / (beta * (n as f64).powf(p.d as f64 / p.alpha)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationRecord {
    pub n_grid: Vec<u64>,
    /// Median over environments of the Gibbs median of M_N.
    pub medians: Vec<f64>,
    pub slope: f64,
    pub ci: (f64, f64),
    /// Smallest effective sample size seen (plain) or acceptance rate (MCMC).
    pub min_ess: f64,
    pub ess_flag: bool,
    pub method: FluctMethod,
    pub environments_kept: u64,
    pub condition: FluctCondition,
}

/// Gibbs medians of M_N per environment, then a log-log fit against N with
/// a bootstrap interval over environments.
pub fn fluctuation_exponent(
    p: &ModelParams,
    n_grid: &[u64],
    environments: u64,
    method: FluctMethod,
    condition: FluctCondition,
    level: f64,
    seed: u64,
) -> Result<FluctuationRecord> {
    if n_grid.len() < 4 {
        return invalid("the N grid needs at least 4 points");
    }
    if environments == 0 {
        return invalid("need at least one environment");
    }
    let h = p.mu().unwrap_or(p.h);
    let mut per_env: Vec<Vec<f64>> = Vec::new();
    let mut min_ess = f64::INFINITY;
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    let n_top = *grid.last().unwrap();
    for e in 0..environments {
        let keep = match condition {
            FluctCondition::None => true,
            FluctCondition::HatPositive { ell } => hat_t_estimate(p, n_top, derive_seed(seed, e), ell)? > 0.0,
            FluctCondition::HatZero { ell } => hat_t_estimate(p, n_top, derive_seed(seed, e), ell)? == 0.0,
        };
        if !keep {
            continue;
        }
        let env = LatticeEnvironment::pareto(p.d, 0.0, p.alpha, derive_seed(seed, e))?;
        let mut row = Vec::with_capacity(grid.len());
        match method {
            FluctMethod::Plain { replicas } => {
                let stream = Stream::new(derive_seed(seed, e), "fluct-walk");
                let mut set = FxHashSet::default();
                let betas: Vec<f64> = grid.iter().map(|&n| coupling(p, n)).collect::<Result<_>>()?;
                let mut samples = vec![Vec::with_capacity(replicas as usize); grid.len()];
                for r in 0..replicas {
                    let mut w = Walker::new(p.d, stream.rng(r));
                    let obs = walk_observables(&env, &mut w, h, &grid, &mut set);
                    for (k, (en, m)) in obs.into_iter().enumerate() {
                        let lw = if betas[k] == 0.0 { 0.0 } else { betas[k] * en };
                        samples[k].push((m, lw));
                    }
                }
                for s in &samples {
                    let mx = s.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
                    let (a, b) = s.iter().fold((0.0, 0.0), |acc, x| {
                        let w = (x.1 - mx).exp();
                        (acc.0 + w, acc.1 + w * w)
                    });
                    min_ess = min_ess.min(a * a / b);
                    row.push(weighted_median(s));
                }
            }
            FluctMethod::WitnessMcmc { moves, q, ell } => {
                let xi = wandering_exponent(p)?;
                for (k, &n) in grid.iter().enumerate() {
                    let beta = finite_coupling(p, n)?;
                    let radius = q * (n as f64).powf(xi);
                    let mut ball = LatticeEnvironment::pareto(p.d, radius, p.alpha, derive_seed(seed, e))?;
                    ball.radius = radius;
                    let stats = ball.top_k(ell);
                    let sol = discrete_t(&stats, n as f64, beta, stats.len(), p.d, EntropyKind::Quadratic)?;
                    let pts: Vec<Vec<i64>> =
                        sol.witness.points.iter().map(|x| x.iter().map(|c| c.round() as i64).collect()).collect();
                    let mut rng = Stream::new(derive_seed(seed, e), "fluct-mcmc").rng(k as u64);
                    let steps = path_through(&pts, p.d, n as usize, &mut rng);
                    let mut chain = PathChain::new(&env, p.d, beta, h, steps, rng);
                    let burn = moves / 2;
                    for _ in 0..burn {
                        chain.step();
                    }
                    let records = 200u64;
                    let thin = ((moves - burn) / records).max(1);
                    let mut ms = Vec::with_capacity(records as usize);
                    for _ in 0..records {
                        for _ in 0..thin {
                            chain.step();
                        }
                        ms.push(chain.max_displacement());
                    }
                    min_ess = min_ess.min(chain.accepted as f64 / chain.proposed.max(1) as f64);
                    row.push(crate::stats::median(&ms));
                }
            }
        }
        per_env.push(row);
    }
    if per_env.is_empty() {
        return Err(Error::Numerical("no environment passed the conditioning filter".into()));
    }
    let lx: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let fit = |idx: &[usize]| -> f64 {
        let ly: Vec<f64> = (0..grid.len())
            .map(|k| {
                let v: Vec<f64> = idx.iter().map(|&e| per_env[e][k]).collect();
                crate::stats::median(&v).ln()
            })
            .collect();
        ols(&lx, &ly).1
    };
    let all: Vec<usize> = (0..per_env.len()).collect();
    let slope = fit(&all);
    let medians: Vec<f64> = (0..grid.len())
        .map(|k| crate::stats::median(&per_env.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect();
    let mut rng = Stream::new(seed, "fluct-bootstrap").rng(0);
    let ci = if per_env.len() > 1 {
        bootstrap_ci(per_env.len(), 1000, level, &mut rng, fit)
    } else {
        (f64::NAN, f64::NAN)
    };
    let ess_flag = match method {
        FluctMethod::Plain { .. } => min_ess < 100.0,
        FluctMethod::WitnessMcmc { .. } => min_ess < 0.01,
    };
    let environments_kept = per_env.len() as u64;
    Ok(FluctuationRecord { n_grid: grid, medians, slope, ci, min_ess, ess_flag, method, environments_kept, condition })
}

/// Fluctuation exponent of the free walk with a bootstrap over walks.
pub fn free_walk_exponent(d: usize, n_grid: &[u64], replicas: u64, batches: usize, level: f64, seed: u64) -> Result<FluctuationRecord> {
    if n_grid.len() < 4 || batches < 2 {
        return invalid("need at least 4 grid points and 2 batches");
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    let per = replicas / batches as u64;
    let stream = Stream::new(seed, "free-walk");
    let zero = crate::env::LatticeEnvironment::from_table(d, 0.0, vec![], 0.0)?;
    let mut set = FxHashSet::default();
    // Each batch is a bootstrap unit holding its walks' M_N per grid point.
    let mut units: Vec<Vec<Vec<f64>>> = Vec::with_capacity(batches);
    for b in 0..batches {
        let mut unit = vec![Vec::with_capacity(per as usize); grid.len()];
        for r in 0..per {
            let mut w = Walker::new(d, stream.rng(b as u64 * per + r));
            for (k, (_, m)) in walk_observables(&zero, &mut w, 0.0, &grid, &mut set).into_iter().enumerate() {
                unit[k].push(m);
            }
        }
        units.push(unit);
    }
    let lx: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let pooled = |idx: &[usize], k: usize| -> f64 {
        let v: Vec<f64> = idx.iter().flat_map(|&u| units[u][k].iter().copied()).collect();
        crate::stats::median(&v)
    };
    let fit = |idx: &[usize]| -> f64 {
        let ly: Vec<f64> = (0..grid.len()).map(|k| pooled(idx, k).ln()).collect();
        ols(&lx, &ly).1
    };
    let all: Vec<usize> = (0..batches).collect();
    let slope = fit(&all);
    let medians = (0..grid.len()).map(|k| pooled(&all, k)).collect();
    let mut rng = Stream::new(seed, "free-walk-bootstrap").rng(0);
    let ci = bootstrap_ci(batches, 400, level, &mut rng, fit);
    Ok(FluctuationRecord {
        n_grid: grid,
        medians,
        slope,
        ci,
        min_ess: replicas as f64,
        ess_flag: false,
        method: FluctMethod::Plain { replicas },
        environments_kept: 0,
        condition: FluctCondition::None,
    })
}

/// Mean and standard error of a list (helper for run records).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let mut w = Welford::new();
    xs.iter().for_each(|&x| w.push(x));
    (w.mean(), w.stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_env() -> LatticeEnvironment {
        let vals = vec![
            (vec![0, 0], 2.0),
            (vec![1, 0], 1.5),
            (vec![-1, 0], 3.0),
            (vec![0, 1], 1.0),
            (vec![0, -1], 4.0),
            (vec![1, 1], 2.5),
        ];
        LatticeEnvironment::from_table(2, 3.0, vals, 1.2).unwrap()
    }

    #[test]
    fn conditioning_splits_environments() {
        let p = ModelParams { d: 2, alpha: 1.5, gamma: 0.1, beta_hat: 1.0, h: 0.0 };
        let grid = [16, 32, 64, 128];
        let m = FluctMethod::Plain { replicas: 200 };
        let run = |c| fluctuation_exponent(&p, &grid, 6, m, c, 0.9, 2).map(|r| r.environments_kept);
        let pos = run(FluctCondition::HatPositive { ell: 8 }).unwrap_or(0);
        let zero = run(FluctCondition::HatZero { ell: 8 }).unwrap_or(0);
        assert_eq!(pos + zero, 6);
    }

    #[test]
    fn beta_zero_gives_one() {
        let env = table_env();
        let z = partition_exact(&env, 5, 0.0, 0.3, 2).unwrap();
        assert!(z.log_z.abs() < 1e-14);
    }

    #[test]
    fn one_step_hand_formula() {
        let env = table_env();
        let (beta, h) = (0.7, 0.4);
        let z = partition_exact(&env, 1, beta, h, 2).unwrap().z();
        let e0 = (beta * (2.0 - h)).exp();
        let nb: f64 = [1.5, 3.0, 1.0, 4.0].iter().map(|w: &f64| (beta * (w - h)).exp()).sum::<f64>() / 4.0;
        assert!((z - e0 * nb).abs() < 1e-13 * z);
    }

    #[test]
    fn field_shift_invariance() {
        let env = table_env();
        let shifted = Shifted { inner: &env, shift: 1.7 };
        let a = partition_exact(&env, 6, 0.3, 0.2, 2).unwrap().log_z;
        let b = partition_exact(&shifted, 6, 0.3, 1.9, 2).unwrap().log_z;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn restrictions_partition_paths() {
        let env = table_env();
        let res = [Restriction::None, Restriction::MaxAtMost(2.5), Restriction::MaxIn(2.5, f64::INFINITY)];
        let v = partition_mc_multi(&env, 10, 0.2, 0.0, 2, 2000, 4, &res).unwrap();
        let z: Vec<f64> = v.iter().map(|e| e.z()).collect();
        assert!((z[0] - z[1] - z[2]).abs() < 1e-12 * z[0]);
    }

    #[test]
    fn size_guard() {
        let env = table_env();
        assert!(partition_exact(&env, 14, 0.1, 0.0, 2).is_err());
    }

    #[test]
    fn straight_path_hits_points() {
        let mut rng = Stream::new(1, "t").rng(0);
        let pts = vec![vec![3, -2], vec![-1, 4]];
        let steps = path_through(&pts, 2, 30, &mut rng);
        let env = table_env();
        let chain = PathChain::new(&env, 2, 0.0, 0.0, steps, rng);
        assert!(chain.pos.iter().any(|p| p[0] == 3 && p[1] == -2));
        assert!(chain.pos.iter().any(|p| p[0] == -1 && p[1] == 4));
    }

    #[test]
    fn chain_energy_is_consistent() {
        let env = LatticeEnvironment::pareto(2, 0.0, 1.5, 3).unwrap();
        let mut rng = Stream::new(2, "t").rng(0);
        let steps: Vec<u8> = (0..200).map(|_| rng.random_range(0..4u8)).collect();
        let mut chain = PathChain::new(&env, 2, 0.3, 1.0, steps, rng);
        for _ in 0..2000 {
            chain.step();
        }
        let fresh = PathChain::new(&env, 2, 0.3, 1.0, chain.steps().to_vec(), Stream::new(0, "x").rng(0));
        assert!((chain.energy - fresh.energy).abs() < 1e-8 * fresh.energy.abs().max(1.0));
        assert!(chain.accepted > 0);
    }
}
