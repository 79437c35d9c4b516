//! Reference computations that share no code with the library routines they
//! check. Slow on purpose.

use rand::Rng;
use statrs::function::gamma::gamma;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Calls `visit` on every ordered subset (as index sequences), including the
/// empty one, together with the anchored path length.
pub fn for_each_ordered_subset<F: FnMut(&[usize], f64)>(points: &[Vec<f64>], mut visit: F) {
    fn rec<F: FnMut(&[usize], f64)>(pts: &[Vec<f64>], used: &mut Vec<bool>, seq: &mut Vec<usize>, len: f64, visit: &mut F) {
        visit(seq, len);
        for i in 0..pts.len() {
            if used[i] {
                continue;
            }
            let from = seq.last().map_or_else(|| vec![0.0; pts[i].len()], |&j| pts[j].clone());
            used[i] = true;
            seq.push(i);
            rec(pts, used, seq, len + euclid(&from, &pts[i]), visit);
            seq.pop();
            used[i] = false;
        }
    }
    let mut used = vec![false; points.len()];
    rec(points, &mut used, &mut Vec::new(), 0.0, &mut visit);
}

/// max |Δ| over ordered subsets with (d/2) L(Δ)² ≤ b.
pub fn elpp_brute(points: &[Vec<f64>], b: f64, d: usize) -> usize {
    let mut best = 0;
    for_each_ordered_subset(points, |seq, len| {
        if 0.5 * d as f64 * len * len <= b && seq.len() > best {
            best = seq.len();
        }
    });
    best
}

/// max over ordered subsets of β Σ w − (d/2) L(Δ)²/N.
pub fn discrete_t_brute(weights: &[f64], sites: &[Vec<f64>], n: f64, beta: f64, d: usize) -> f64 {
    let mut best: f64 = 0.0;
    for_each_ordered_subset(sites, |seq, len| {
        let e: f64 = seq.iter().map(|&i| weights[i]).sum();
        best = best.max(beta * e - 0.5 * d as f64 * len * len / n);
    });
    best
}

/// Region tag and ξ from the three-region list, written out directly.
pub fn phase_oracle(d: usize, alpha: f64, gamma: f64) -> (&'static str, f64) {
    let d = d as f64;
    let g_ab = (d - alpha) / alpha;
    let g_bc = d / (2.0 * alpha);
    let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    if alpha > d / 2.0 && !eq(alpha, d / 2.0) {
        if eq(gamma, g_ab) {
            ("AB", 1.0)
        } else if eq(gamma, g_bc) {
            ("BC", 0.5)
        } else if gamma < g_ab {
            ("A", 1.0)
        } else if gamma < g_bc {
            ("B", alpha * (1.0 - gamma) / (2.0 * alpha - d))
        } else {
            ("C", 0.5)
        }
    } else if eq(gamma, g_ab) {
        ("AB", 1.0)
    } else if gamma < g_ab {
        ("A", 1.0)
    } else {
        ("C", 0.5)
    }
}

fn j1(t: f64) -> f64 {
    let a = t.abs();
    if a >= 1.0 {
        return if a == 1.0 { std::f64::consts::LN_2 } else { f64::INFINITY };
    }
    let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    0.5 * (xlogx(1.0 + a) + xlogx(1.0 - a))
}

/// J_2 by a dense grid over u_1 followed by golden-section refinement.
pub fn jd2_grid(x: [f64; 2]) -> f64 {
    let obj = |u: f64| {
        let v = 1.0 - u;
        let part = |c: f64, w: f64| if w <= 0.0 { if c == 0.0 { 0.0 } else { f64::INFINITY } } else { w * (j1(c / w) + (2.0 * w).ln()) };
        part(x[0], u) + part(x[1], v)
    };
    let m = 200_000;
    let mut best = (f64::INFINITY, 0.5);
    for i in 1..m {
        let u = i as f64 / m as f64;
        let v = obj(u);
        if v < best.0 {
            best = (v, u);
        }
    }
    let (mut a, mut b) = ((best.1 - 1.0 / m as f64).max(0.0), (best.1 + 1.0 / m as f64).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if obj(c) < obj(e) {
            b = e;
        } else {
            a = c;
        }
    }
    obj(0.5 * (a + b)).min(best.0)
}

/// E_1(x) from its power series; accurate to ~1e-12 relative for x ≤ 6.
pub fn e1_series(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    -EULER - x.ln() - sum
}

/// Escape probability of the simple random walk on Z³ from the closed form
/// of G(0) in terms of Γ(1/24), Γ(5/24), Γ(7/24), Γ(11/24).
pub fn watson_lambda3() -> f64 {
    let pi = std::f64::consts::PI;
    let g0 = 6f64.sqrt() / (32.0 * pi.powi(3)) * gamma(1.0 / 24.0) * gamma(5.0 / 24.0) * gamma(7.0 / 24.0) * gamma(11.0 / 24.0);
    1.0 / g0
}

/// MC estimate of P(no return to 0) on Z³ from walks of length `n`, with the
/// far-field correction P_x(hit 0) ≈ (3/(2π|x|))·λ for walks alive at time n.
/// Returns (estimate, standard error).
pub fn lambda3_mc<R: Rng>(rng: &mut R, walks: u64, n: u64) -> (f64, f64) {
    let mut alive = 0u64;
    let mut inv_r = Vec::new();
    for _ in 0..walks {
        let mut p = [0i64; 3];
        let mut back = false;
        for _ in 0..n {
            let s: u32 = rng.random_range(0..6);
            p[(s / 2) as usize] += if s % 2 == 0 { 1 } else { -1 };
            if p == [0, 0, 0] {
                back = true;
                break;
            }
        }
        if !back {
            alive += 1;
            let r = ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64).sqrt();
            inv_r.push(1.0 / r);
        }
    }
    let m = walks as f64;
    let c = 3.0 / (2.0 * std::f64::consts::PI);
    // λ = E[1{alive}(1 − cλ/|S_n|)] solved for λ.
    let a = alive as f64 / m;
    let s: f64 = inv_r.iter().sum::<f64>() / m;
    let lambda = a / (1.0 + c * s);
    let var = a * (1.0 - a) / m;
    (lambda, var.sqrt() / (1.0 + c * s))
}

/// log Z by enumerating all (2d)^n paths.
pub fn log_partition_brute<F: Fn(&[i64]) -> f64>(omega: F, n: usize, beta: f64, h: f64, d: usize) -> f64 {
    let mut total = 0.0;
    let count = (2 * d).pow(n as u32);
    for code in 0..count {
        let mut c = code;
        let mut p = vec![0i64; d];
        let mut seen = vec![p.clone()];
        for _ in 0..n {
            let s = c % (2 * d);
            c /= 2 * d;
            p[s / 2] += if s % 2 == 0 { 1 } else { -1 };
            if !seen.contains(&p) {
                seen.push(p.clone());
            }
        }
        let e: f64 = seen.iter().map(|x| omega(x) - h).sum();
        total += (beta * e).exp();
    }
    (total / count as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn watson_value() {
        assert!((watson_lambda3() - 0.659_462_670).abs() < 1e-8);
    }

    #[test]
    fn e1_known_values() {
        assert!((e1_series(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
        assert!((e1_series(0.1) - 1.822_923_958_419_389_9).abs() < 1e-13);
    }

    #[test]
    fn subsets_counted() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]];
        let mut n = 0;
        for_each_ordered_subset(&pts, |_, _| n += 1);
        assert_eq!(n, 1 + 3 + 6 + 6);
    }
}
