//! Entropy-controlled last-passage percolation.
//!
//! L_m^{(B)}(r) is the largest number of cloud points an origin-anchored
//! ordered visit can collect with Ent = (d/2)L² ≤ B, i.e. with Euclidean
//! length at most √(2B/d).

use crate::entropy::{dist2, ent, norm2, OrderedPointSet, EXACT_ORDER_CAP};
use crate::env::uniform_in_ball;
use crate::error::{invalid, Error, Result};
use crate::rng::Stream;
use crate::special::{ln_gamma, unit_ball_volume};
use crate::stats::{wilson, McEstimate, Welford};
use rand::Rng;
use rustc_hash::FxHashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudKind {
    Continuum,
    Lattice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub radius: f64,
    pub kind: CloudKind,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, radius: f64, kind: CloudKind) -> Result<Self> {
        if kind == CloudKind::Lattice {
            for (i, p) in points.iter().enumerate() {
                if points[..i].contains(p) {
                    return invalid("lattice cloud points must be distinct");
                }
            }
        }
        Ok(PointCloud { points, radius, kind })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// m i.i.d. uniform points of the ball of radius r.
    pub fn continuum<R: Rng>(rng: &mut R, m: usize, r: f64, d: usize) -> Self {
        let points = (0..m).map(|_| uniform_in_ball(rng, d, r)).collect();
        PointCloud { points, radius: r, kind: CloudKind::Continuum }
    }

    /// m distinct uniform sites of Λ_r, by rejection.
    pub fn lattice<R: Rng>(rng: &mut R, m: usize, r: f64, d: usize) -> Result<Self> {
        let ri = r.floor() as i64;
        let ball = crate::env::lattice_ball(d, r);
        if m > ball.len() {
            return invalid(format!("Λ_r has only {} sites, {m} requested", ball.len()));
        }
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(m);
        while points.len() < m {
            let s: Vec<i64> = (0..d).map(|_| rng.random_range(-ri..=ri)).collect();
            if s.iter().map(|c| (c * c) as f64).sum::<f64>() > r * r {
                continue;
            }
            let p: Vec<f64> = s.iter().map(|&c| c as f64).collect();
            if !points.contains(&p) {
                points.push(p);
            }
        }
        Ok(PointCloud { points, radius: r, kind: CloudKind::Lattice })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElppResult {
    pub k_max: usize,
    pub witness: OrderedPointSet,
    /// Indices into the cloud, in visit order.
    pub order: Vec<usize>,
    pub entropy_used: f64,
}

fn length_budget(b: f64, d: usize) -> f64 {
    (2.0 * b / d as f64).sqrt()
}

fn finish(cloud: &PointCloud, order: Vec<usize>, b: f64, d: usize) -> Result<ElppResult> {
    let witness = OrderedPointSet::new(order.iter().map(|&i| cloud.points[i].clone()).collect())?;
    let used = ent(&witness, d);
    if used > b * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::Numerical(format!("witness entropy {used} exceeds budget {b}")));
    }
    Ok(ElppResult { k_max: order.len(), witness, order, entropy_used: used })
}

/// Exact L via a layered (subset, endpoint) DP restricted to states within
/// the length budget. Ties resolve to the smallest endpoint, then the
/// smallest predecessor state.
pub fn elpp_exact(cloud: &PointCloud, b: f64, d: usize) -> Result<ElppResult> {
    let m = cloud.len();
    if m > EXACT_ORDER_CAP {
        return Err(Error::TooLarge(format!("exact E-LPP handles at most {EXACT_ORDER_CAP} points, got {m}")));
    }
    if !(b >= 0.0) {
        return invalid("B must be non-negative");
    }
    if cloud.points.iter().any(|p| p.len() != d) {
        return invalid("cloud points must have dimension d");
    }
    let budget = length_budget(b, d) * (1.0 + 1e-12);
    let pts = &cloud.points;
    let mut dmat = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            dmat[i * m + j] = dist2(&pts[i], &pts[j]);
        }
    }
    let key = |mask: u64, last: usize| (mask << 5) | last as u64;
    // layer[k-1]: state key -> (length, predecessor key)
    let mut layers: Vec<FxHashMap<u64, (f64, u64)>> = Vec::new();
    let mut first = FxHashMap::default();
    for (j, p) in pts.iter().enumerate() {
        let l = norm2(p);
        if l <= budget {
            first.insert(key(1 << j, j), (l, u64::MAX));
        }
    }
    if first.is_empty() {
        return finish(cloud, vec![], b, d);
    }
    layers.push(first);
    loop {
        let prev = layers.last().unwrap();
        let mut next: FxHashMap<u64, (f64, u64)> = FxHashMap::default();
        for (&k, &(len, _)) in prev {
            let mask = k >> 5;
            let last = (k & 31) as usize;
            let row = &dmat[last * m..(last + 1) * m];
            for j in 0..m {
                if mask >> j & 1 == 1 {
                    continue;
                }
                let cand = len + row[j];
                if cand > budget {
                    continue;
                }
                let nk = key(mask | 1 << j, j);
                next.entry(nk)
                    .and_modify(|e| {
                        if cand < e.0 || (cand == e.0 && k < e.1) {
                            *e = (cand, k);
                        }
                    })
                    .or_insert((cand, k));
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
    }
    let top = layers.last().unwrap();
    let (&end, _) = top
        .iter()
        .min_by(|a, b| {
            a.1 .0
                .total_cmp(&b.1 .0)
                .then_with(|| (a.0 & 31).cmp(&(b.0 & 31)))
                .then_with(|| a.0.cmp(b.0))
        })
        .unwrap();
    let mut order = Vec::with_capacity(layers.len());
    let mut k = end;
    for layer in layers.iter().rev() {
        order.push((k & 31) as usize);
        k = layer[&k].1;
    }
    order.reverse();
    finish(cloud, order, b, d)
}

/// Nearest feasible neighbour, repeated while the budget allows.
pub fn elpp_greedy(cloud: &PointCloud, b: f64, d: usize) -> Result<ElppResult> {
    let budget = length_budget(b, d) * (1.0 + 1e-12);
    let m = cloud.len();
    let mut used = vec![false; m];
    let mut cur = vec![0.0; d];
    let mut spent = 0.0;
    let mut order = Vec::new();
    loop {
        let pick = (0..m)
            .filter(|&j| !used[j])
            .map(|j| (j, dist2(&cur, &cloud.points[j])))
            .filter(|&(_, dj)| spent + dj <= budget)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match pick {
            Some((j, dj)) => {
                used[j] = true;
                spent += dj;
                cur = cloud.points[j].clone();
                order.push(j);
            }
            None => break,
        }
    }
    finish(cloud, order, b, d)
}

/// The bound (c B^{1/2} m^{1/d}/(r k))^{dk}, capped at 1.
pub fn elpp_tail_bound(c: f64, m: usize, r: f64, b: f64, d: usize, k: usize) -> f64 {
    let x = c * b.sqrt() * (m as f64).powf(1.0 / d as f64) / (r * k as f64);
    x.powf((d * k) as f64).min(1.0)
}

/// Counts of {L > k} for k = 0..=m over independent clouds.
pub fn elpp_tail_counts(kind: CloudKind, m: usize, r: f64, b: f64, d: usize, replicas: u64, seed: u64) -> Result<Vec<u64>> {
    let stream = Stream::new(seed, "elpp-cloud");
    let mut counts = vec![0u64; m + 1];
    for i in 0..replicas {
        let mut rng = stream.rng(i);
        let cloud = match kind {
            CloudKind::Continuum => PointCloud::continuum(&mut rng, m, r, d),
            CloudKind::Lattice => PointCloud::lattice(&mut rng, m, r, d)?,
        };
        let l = elpp_exact(&cloud, b, d)?.k_max;
        for c in counts.iter_mut().take(l) {
            *c += 1;
        }
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailRow {
    pub k: usize,
    pub hits: u64,
    pub replicas: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub zero_hit: bool,
}

/// Smallest c for which the bound dominates the z-level Wilson upper limit at
/// every k ≥ 1 of a pilot run, up to and including the first k without hits.
/// Later zero-hit entries would only inflate c.
pub fn calibrate_tail_constant(counts: &[u64], replicas: u64, m: usize, r: f64, b: f64, d: usize, z: f64) -> f64 {
    let scale = b.sqrt() * (m as f64).powf(1.0 / d as f64);
    let mut c: f64 = 0.0;
    for (k, &h) in counts.iter().enumerate().skip(1) {
        let (_, hi) = wilson(h, replicas, z);
        c = c.max(hi.powf(1.0 / (d * k) as f64) * r * k as f64 / scale);
        if h == 0 {
            break;
        }
    }
    c
}

/// Empirical P(L > k) with 95% Wilson intervals next to the bound.
#[allow(clippy::too_many_arguments)]
pub fn elpp_tail_experiment(
    kind: CloudKind,
    m: usize,
    r: f64,
    b: f64,
    d: usize,
    k_grid: &[usize],
    replicas: u64,
    seed: u64,
    c: f64,
) -> Result<Vec<TailRow>> {
    let counts = elpp_tail_counts(kind, m, r, b, d, replicas, seed)?;
    Ok(k_grid
        .iter()
        .map(|&k| {
            let hits = counts.get(k).copied().unwrap_or(0);
            let (lo, hi) = wilson(hits, replicas, 1.96);
            TailRow {
                k,
                hits,
                replicas,
                p_hat: hits as f64 / replicas as f64,
                ci_low: lo,
                ci_high: hi,
                bound: elpp_tail_bound(c, m, r, b, d, k),
                zero_hit: hits == 0,
            }
        })
        .collect())
}

/// Closed form as displayed: V_d^k Γ(d)^k/Γ(dk+1) B^{dk/2}.
pub fn ball_volume_display(k: usize, b: f64, d: usize) -> f64 {
    let (kf, df) = (k as f64, d as f64);
    (kf * unit_ball_volume(d).ln() + kf * ln_gamma(df) - ln_gamma(df * kf + 1.0) + df * kf / 2.0 * b.ln()).exp()
}

/// Direct geometry: (d V_d)^k Γ(d)^k/Γ(dk+1) (2B/d)^{dk/2}.
pub fn ball_volume_geometric(k: usize, b: f64, d: usize) -> f64 {
    let (kf, df) = (k as f64, d as f64);
    let l = length_budget(b, d);
    (kf * (df * unit_ball_volume(d)).ln() + kf * ln_gamma(df) - ln_gamma(df * kf + 1.0) + df * kf * l.ln()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeReport {
    pub mc: McEstimate,
    pub display: f64,
    pub geometric: f64,
    pub zero_hit: bool,
}

/// MC volume of {(x_1, …, x_k) : Ent ≤ B} ⊂ ℝ^{dk}, sampling increments
/// uniformly from balls of radius √(2B/d).
pub fn entropy_ball_volume(k: usize, b: f64, d: usize, replicas: u64, seed: u64) -> Result<VolumeReport> {
    if k == 0 || k > 6 || !(2..=4).contains(&d) {
        return invalid("volume MC needs 1 ≤ k ≤ 6 and 2 ≤ d ≤ 4");
    }
    if !(b > 0.0) || replicas < 2 {
        return invalid("B must be positive and replicas at least 2");
    }
    let l = length_budget(b, d);
    let box_vol = (unit_ball_volume(d) * l.powi(d as i32)).powi(k as i32);
    let mut rng = Stream::new(seed, "elpp-volume").rng(0);
    let mut acc = Welford::new();
    let mut hits = 0u64;
    for _ in 0..replicas {
        let total: f64 = (0..k).map(|_| norm2(&uniform_in_ball(&mut rng, d, l))).sum();
        let inside = total <= l;
        hits += inside as u64;
        acc.push(if inside { box_vol } else { 0.0 });
    }
    Ok(VolumeReport {
        mc: acc.estimate(seed),
        display: ball_volume_display(k, b, d),
        geometric: ball_volume_geometric(k, b, d),
        zero_hit: hits == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(p: &[&[f64]]) -> PointCloud {
        PointCloud::new(p.iter().map(|x| x.to_vec()).collect(), 2.0, CloudKind::Continuum).unwrap()
    }

    #[test]
    fn small_examples() {
        assert_eq!(elpp_exact(&cloud(&[&[1.0, 0.0]]), 1.0, 2).unwrap().k_max, 1);
        assert_eq!(elpp_exact(&cloud(&[&[1.0, 0.0], &[2.0, 0.0]]), 1.0, 2).unwrap().k_max, 1);
        assert_eq!(elpp_exact(&cloud(&[&[1.0, 0.0], &[2.0, 0.0]]), 4.0, 2).unwrap().k_max, 2);
        assert_eq!(elpp_greedy(&cloud(&[&[1.0, 0.0]]), 0.5, 2).unwrap().k_max, 0);
    }

    #[test]
    fn geometric_volumes() {
        assert!((ball_volume_geometric(1, 1.0, 2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((ball_volume_display(1, 1.0, 2) - std::f64::consts::PI / 2.0).abs() < 1e-12);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((ball_volume_geometric(2, 1.3, 2) - pi2 * 1.69 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_cloud_distinct() {
        let mut rng = Stream::new(3, "t").rng(0);
        let c = PointCloud::lattice(&mut rng, 20, 3.0, 2).unwrap();
        assert_eq!(c.len(), 20);
        assert!(PointCloud::lattice(&mut rng, 100, 2.0, 2).is_err());
    }
}
