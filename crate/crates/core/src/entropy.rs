//! Entropy functionals on ordered point sets and the rate functions J, J_d.
//!
//! Two facts make the convex programs here one-dimensional. For a
//! displacement z with ‖z‖₁ < 1 the minimizing direction fractions in J_d are
//! u_i = √(z_i² + s²), where s > 0 solves Σ_i √(z_i² + s²) = 1. The
//! derivative in τ of the perspective τ·J_d(y/τ) equals log(d·s(y/τ)), so an
//! optimal time allocation equalizes s across all legs.

use crate::error::{invalid, Result};

/// An ordered tuple of distinct points of ℝ^d, implicitly preceded by 0.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OrderedPointSet {
    pub points: Vec<Vec<f64>>,
}

impl OrderedPointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.len();
            if points.iter().any(|p| p.len() != d) {
                return invalid("all points must share one dimension");
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return invalid(format!("points {j} and {i} coincide"));
                }
            }
        }
        Ok(OrderedPointSet { points })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Increments x_i − x_{i−1} with x_0 = 0.
    pub fn increments(&self) -> Vec<Vec<f64>> {
        let mut prev: Option<&Vec<f64>> = None;
        self.points
            .iter()
            .map(|p| {
                let inc = match prev {
                    None => p.clone(),
                    Some(q) => p.iter().zip(q).map(|(a, b)| a - b).collect(),
                };
                prev = Some(p);
                inc
            })
            .collect()
    }

    pub fn scaled(&self, a: f64) -> Self {
        OrderedPointSet {
            points: self.points.iter().map(|p| p.iter().map(|x| a * x).collect()).collect(),
        }
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One-dimensional rate function of the simple random walk.
pub fn rate_j(t: f64) -> f64 {
    let a = t.abs();
    if a > 1.0 {
        return f64::INFINITY;
    }
    if a == 1.0 {
        return std::f64::consts::LN_2;
    }
    if a < 1e-3 {
        // Σ_k t^{2k} / ((2k−1) 2k)
        let t2 = a * a;
        return t2 * (0.5 + t2 * (1.0 / 12.0 + t2 * (1.0 / 30.0 + t2 / 56.0)));
    }
    0.5 * (1.0 + a) * a.ln_1p() + 0.5 * (1.0 - a) * (-a).ln_1p()
}

/// Solve Σ_i √(z_i² + s²) = 1 for s ≥ 0, assuming ‖z‖₁ ≤ 1.
fn simplex_shift(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    let phi = |s: f64| z.iter().map(|c| c.hypot(s)).sum::<f64>() - 1.0;
    if phi(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0 / d);
    // Newton from the right is monotone for this convex increasing φ.
    let mut s = hi;
    for _ in 0..100 {
        let f = phi(s);
        if f <= 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let df: f64 = z.iter().map(|c| s / c.hypot(s)).sum();
        let next = s - f / df;
        let prev = s;
        s = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if (s - prev).abs() <= 1e-17 * s.max(1e-300) {
            break;
        }
    }
    s
}

/// J_d together with the optimal direction fractions u.
pub fn rate_jd_with_fractions(x: &[f64]) -> (f64, Vec<f64>) {
    let d = x.len();
    let l1 = norm1(x);
    if l1 > 1.0 {
        return (f64::INFINITY, vec![f64::NAN; d]);
    }
    let s = simplex_shift(x);
    let df = d as f64;
    let mut u: Vec<f64> = x.iter().map(|c| c.hypot(s)).collect();
    let total: f64 = u.iter().sum();
    u.iter_mut().for_each(|v| *v /= total);
    let mut val = 0.0;
    for (c, ui) in x.iter().zip(&u) {
        if *ui == 0.0 {
            continue;
        }
        let t = (c / ui).clamp(-1.0, 1.0);
        val += ui * (rate_j(t) + (df * ui).ln());
    }
    (val.max(0.0), u)
}

/// Rate function of the d-dimensional simple random walk.
pub fn rate_jd(x: &[f64]) -> f64 {
    rate_jd_with_fractions(x).0
}

/// Objective of the J_d simplex problem at fractions u (for oracles and tests).
pub fn rate_jd_objective(x: &[f64], u: &[f64]) -> f64 {
    let df = x.len() as f64;
    x.iter()
        .zip(u)
        .map(|(c, ui)| {
            if *ui <= 0.0 {
                if *c == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                ui * (rate_j(c / ui) + (df * ui).ln())
            }
        })
        .sum()
}

/// Total Euclidean length of the anchored path 0 → x_1 → … → x_k.
pub fn path_length(delta: &OrderedPointSet) -> f64 {
    delta.increments().iter().map(|y| norm2(y)).sum()
}

/// Ent(Δ) = (d/2)(Σ‖x_i − x_{i−1}‖)².
pub fn ent(delta: &OrderedPointSet, d: usize) -> f64 {
    let l = path_length(delta);
    d as f64 / 2.0 * l * l
}

/// Ent_N(Δ) = Ent(Δ)/N with the optimal increments t_i − t_{i−1}.
pub fn ent_n(delta: &OrderedPointSet, d: usize, n: f64) -> (f64, Vec<f64>) {
    let legs: Vec<f64> = delta.increments().iter().map(|y| norm2(y)).collect();
    let l: f64 = legs.iter().sum();
    let alloc = if l > 0.0 { legs.iter().map(|v| n * v / l).collect() } else { vec![n / legs.len().max(1) as f64; legs.len()] };
    (ent(delta, d) / n, alloc)
}

/// Σ (d/2)‖Δx_i‖²/Δt_i for a given allocation.
pub fn quadratic_cost(delta: &OrderedPointSet, d: usize, dt: &[f64]) -> f64 {
    delta
        .increments()
        .iter()
        .zip(dt)
        .map(|(y, t)| {
            let v = norm2(y);
            if v == 0.0 {
                0.0
            } else {
                d as f64 / 2.0 * v * v / t
            }
        })
        .sum()
}

/// Outcome of the time-allocation problem for ĴEnt_N.
#[derive(Clone, Debug, PartialEq)]
pub struct HatEntropy {
    pub value: f64,
    pub allocation: Vec<f64>,
    /// Relative mismatch |Σ Δt_i − N|/N at termination.
    pub tolerance: f64,
}

/// Smallest τ with Σ_j √(y_j² + σ²τ²) ≤ τ, for dσ < 1.
fn leg_time(y: &[f64], sigma: f64) -> f64 {
    let l1 = norm1(y);
    if l1 == 0.0 {
        return 0.0;
    }
    let d = y.len() as f64;
    let psi = |t: f64| t - y.iter().map(|c| c.hypot(sigma * t)).sum::<f64>();
    let (mut lo, mut hi) = (l1, l1 / (1.0 - d * sigma).max(1e-300));
    if hi.is_infinite() {
        hi = f64::MAX;
    }
    for _ in 0..400 {
        let mid = if hi > 2.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid == lo || mid == hi {
            break;
        }
        if psi(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// ĴEnt_N(Δ): optimal time allocation of the rate-function cost.
pub fn hat_ent_n(delta: &OrderedPointSet, n: f64) -> HatEntropy {
    let incs = delta.increments();
    let k = incs.len();
    if k == 0 {
        return HatEntropy { value: 0.0, allocation: vec![], tolerance: 0.0 };
    }
    let d = incs[0].len() as f64;
    let total_l1: f64 = incs.iter().map(|y| norm1(y)).sum();
    if total_l1 > n {
        return HatEntropy { value: f64::INFINITY, allocation: vec![f64::NAN; k], tolerance: 0.0 };
    }
    let eval = |alloc: &[f64]| -> f64 {
        incs.iter()
            .zip(alloc)
            .map(|(y, t)| {
                if *t == 0.0 {
                    0.0
                } else {
                    let z: Vec<f64> = y.iter().map(|c| c / t).collect();
                    t * rate_jd(&z)
                }
            })
            .sum()
    };
    if total_l1 == n {
        let alloc: Vec<f64> = incs.iter().map(|y| norm1(y)).collect();
        let value = eval(&alloc);
        return HatEntropy { value, allocation: alloc, tolerance: 0.0 };
    }
    // Parametrize σ = (1 − ρ)/d and bisect on log ρ; total time is decreasing in ρ.
    let times = |log_rho: f64| -> Vec<f64> {
        let sigma = (1.0 - log_rho.exp()) / d;
        incs.iter().map(|y| leg_time(y, sigma)).collect()
    };
    let (mut lo, mut hi) = (-700.0_f64, 0.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let t: f64 = times(mid).iter().sum();
        if t > n {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let mut alloc = times(hi);
    let sum: f64 = alloc.iter().sum();
    let tolerance = ((sum - n) / n).abs();
    // Distribute any residual time proportionally; the cost is decreasing in time.
    if sum > 0.0 && sum < n {
        let scale = n / sum;
        alloc.iter_mut().for_each(|t| *t *= scale);
    }
    let value = eval(&alloc);
    HatEntropy { value, allocation: alloc, tolerance }
}

/// ĴEnt(Δ) = ĴEnt_1(Δ).
pub fn hat_ent(delta: &OrderedPointSet) -> f64 {
    hat_ent_n(delta, 1.0).value
}

/// Σ Δt_i J_d(Δx_i/Δt_i) for a given allocation (oracle helper).
pub fn rate_cost(delta: &OrderedPointSet, dt: &[f64]) -> f64 {
    delta
        .increments()
        .iter()
        .zip(dt)
        .map(|(y, t)| {
            if norm1(y) == 0.0 {
                0.0
            } else if *t <= 0.0 {
                f64::INFINITY
            } else {
                let z: Vec<f64> = y.iter().map(|c| c / t).collect();
                t * rate_jd(&z)
            }
        })
        .sum()
}

pub const EXACT_ORDER_CAP: usize = 22;

/// Subset dynamic program over (bitmask, endpoint) states.
///
/// `len[mask * m + j]` is the minimal length of an origin-anchored path that
/// visits exactly the points of `mask` and ends at point j.
pub struct SubsetDp {
    pub m: usize,
    pub len: Vec<f64>,
}

impl SubsetDp {
    pub fn build(points: &[Vec<f64>]) -> Result<Self> {
        let m = points.len();
        if m > EXACT_ORDER_CAP {
            return Err(crate::error::Error::TooLarge(format!(
                "exact order search handles at most {EXACT_ORDER_CAP} points, got {m}"
            )));
        }
        let from0: Vec<f64> = points.iter().map(|p| norm2(p)).collect();
        let mut dmat = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                dmat[i * m + j] = dist2(&points[i], &points[j]);
            }
        }
        let full = 1usize << m;
        let mut len = vec![f64::INFINITY; full * m];
        for j in 0..m {
            len[(1 << j) * m + j] = from0[j];
        }
        for mask in 1..full {
            let base = mask * m;
            for j in 0..m {
                let cur = len[base + j];
                if !cur.is_finite() {
                    continue;
                }
                let row = &dmat[j * m..(j + 1) * m];
                let mut rest = !mask & (full - 1);
                while rest != 0 {
                    let nx = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    let slot = (mask | (1 << nx)) * m + nx;
                    let cand = cur + row[nx];
                    if cand < len[slot] {
                        len[slot] = cand;
                    }
                }
            }
        }
        Ok(SubsetDp { m, len })
    }

    /// Minimal length over endpoints for a subset, with the smallest minimizing endpoint.
    pub fn best(&self, mask: usize) -> (f64, usize) {
        let base = mask * self.m;
        let mut best = (f64::INFINITY, 0);
        for j in 0..self.m {
            if mask >> j & 1 == 1 && self.len[base + j] < best.0 {
                best = (self.len[base + j], j);
            }
        }
        best
    }

    /// Reconstruct a visit order for `mask` ending at `end`. Among equal
    /// predecessors the smallest index wins.
    pub fn order(&self, points: &[Vec<f64>], mask: usize, end: usize) -> Vec<usize> {
        let m = self.m;
        let mut order = vec![end];
        let mut mask = mask;
        let mut j = end;
        while mask.count_ones() > 1 {
            let prev_mask = mask & !(1 << j);
            let target = self.len[mask * m + j];
            let mut pick = None;
            let mut best_gap = f64::INFINITY;
            for i in 0..m {
                if prev_mask >> i & 1 == 0 {
                    continue;
                }
                let cand = self.len[prev_mask * m + i] + dist2(&points[i], &points[j]);
                let gap = (cand - target).abs();
                if gap <= 1e-12 * target.max(1.0) {
                    pick = Some(i);
                    break;
                }
                if gap < best_gap {
                    best_gap = gap;
                    pick = Some(i);
                }
            }
            let i = pick.expect("non-empty predecessor set");
            order.push(i);
            mask = prev_mask;
            j = i;
        }
        order.reverse();
        order
    }
}

/// Exact shortest anchored open path through all points.
pub fn shortest_visit_length(points: &[Vec<f64>]) -> Result<(f64, Vec<usize>)> {
    if points.is_empty() {
        return Ok((0.0, vec![]));
    }
    let dp = SubsetDp::build(points)?;
    let full = (1usize << points.len()) - 1;
    let (l, end) = dp.best(full);
    Ok((l, dp.order(points, full, end)))
}

/// Nearest-neighbour order; a heuristic with no optimality guarantee.
pub fn greedy_visit_order(points: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let m = points.len();
    let mut used = vec![false; m];
    let mut cur = vec![0.0; points.first().map_or(0, |p| p.len())];
    let mut order = Vec::with_capacity(m);
    let mut total = 0.0;
    for _ in 0..m {
        let (j, dj) = (0..m)
            .filter(|&j| !used[j])
            .map(|j| (j, dist2(&cur, &points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[j] = true;
        total += dj;
        cur = points[j].clone();
        order.push(j);
    }
    (total, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(v: Vec<Vec<f64>>) -> OrderedPointSet {
        OrderedPointSet::new(v).unwrap()
    }

    #[test]
    fn rate_j_values() {
        assert_eq!(rate_j(0.0), 0.0);
        assert_eq!(rate_j(1.0), std::f64::consts::LN_2);
        assert_eq!(rate_j(1.5), f64::INFINITY);
        let t = 1e-3;
        assert!((rate_j(t) / (t * t / 2.0) - 1.0).abs() < 1e-5);
        // both branches agree near the switch
        let a: f64 = 1.0001e-3;
        let direct = 0.5 * (1.0 + a) * a.ln_1p() + 0.5 * (1.0 - a) * (-a).ln_1p();
        assert!((rate_j(a) - direct).abs() < 1e-15);
    }

    #[test]
    fn jd_at_origin_is_uniform() {
        let (v, u) = rate_jd_with_fractions(&[0.0, 0.0, 0.0]);
        assert!(v.abs() < 1e-15);
        for ui in u {
            assert!((ui - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn jd_one_dim_reduces_to_j() {
        for &t in &[0.1, 0.5, 0.9] {
            assert!((rate_jd(&[t]) - rate_j(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn ent_examples() {
        assert_eq!(ent(&ops(vec![vec![1.0, 0.0]]), 2), 1.0);
        assert_eq!(ent(&ops(vec![vec![1.0, 0.0], vec![1.0, 1.0]]), 2), 4.0);
        let v = ent(&ops(vec![vec![1.0, 1.0], vec![1.0, 0.0]]), 2);
        assert!((v - (2f64.sqrt() + 1.0).powi(2)).abs() < 1e-14);
        let (e, alloc) = ent_n(&ops(vec![vec![1.0, 0.0]]), 2, 4.0);
        assert_eq!(e, 0.25);
        assert_eq!(alloc, vec![4.0]);
    }

    #[test]
    fn ent_n_allocation_attains_value() {
        let delta = ops(vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 3.0]]);
        let (e, alloc) = ent_n(&delta, 2, 10.0);
        assert!((quadratic_cost(&delta, 2, &alloc) - e).abs() < 1e-12);
    }

    #[test]
    fn hat_single_point_beyond_reach_is_infinite() {
        assert!(hat_ent_n(&ops(vec![vec![3.0, 2.0]]), 4.0).value.is_infinite());
    }

    #[test]
    fn hat_single_point_equals_perspective() {
        // For one leg, all time is used: value = N J_d(x/N).
        let x = vec![0.3, -0.2];
        let h = hat_ent_n(&ops(vec![x.clone()]), 1.0);
        assert!((h.value - rate_jd(&x)).abs() < 1e-12);
    }

    #[test]
    fn visit_length_examples() {
        let (l, o) = shortest_visit_length(&[vec![2.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(o, vec![1, 0]);
        let (l, _) = shortest_visit_length(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(l, 5.0);
        let many = vec![vec![0.0]; 23];
        assert!(shortest_visit_length(&many).is_err());
    }
}
