//! Special functions not covered by `statrs`.

pub use statrs::function::gamma::{gamma, ln_gamma};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E_1(x) = ∫_x^∞ e^{-u}/u du for x > 0.
///
/// Power series below 1, modified Lentz continued fraction above.
pub fn expint_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E_1 needs x > 0");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Volume of the unit Euclidean ball in dimension d.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// Exponentially scaled modified Bessel function e^{-x} I_n(x), x ≥ 0.
pub fn bessel_i_scaled(n: u32, x: f64) -> f64 {
    assert!(x >= 0.0);
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if x > 600.0 && x > 30.0 * nf * nf {
        return bessel_i_scaled_asym(n, x);
    }
    // All terms positive, so the sum is stable.
    let log_t0 = -x + nf * (x / 2.0).ln() - ln_gamma(nf + 1.0);
    let q = x * x / 4.0;
    if log_t0 < -700.0 {
        return bessel_series_log(nf, q, log_t0, x);
    }
    let mut term = log_t0.exp();
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nf));
        sum += term;
        if term < 1e-17 * sum && k > x / 2.0 {
            break;
        }
    }
    sum
}

/// Same series with terms kept in log space, for large x where e^{-x} underflows.
fn bessel_series_log(nf: f64, q: f64, log_t0: f64, x: f64) -> f64 {
    let lq = q.ln();
    // The largest term sits near k = x/2; sum around it in two sweeps.
    let mut terms = Vec::new();
    let mut lt = log_t0;
    let mut k = 0.0;
    let mut best = lt;
    loop {
        terms.push(lt);
        k += 1.0;
        lt += lq - (k * (k + nf)).ln();
        if lt > best {
            best = lt;
        }
        if k > x / 2.0 && lt < best - 45.0 {
            break;
        }
    }
    let s: f64 = terms.iter().map(|t| (t - best).exp()).sum();
    (best + s.ln()).exp()
}

/// Large-argument expansion, valid when x ≫ n².
fn bessel_i_scaled_asym(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let j = (2 * k - 1) as f64;
        let next = -term * (mu - j * j) / (k as f64 * 8.0 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Coefficients c_k of the expansion e^{-s} I_n(s) √(2πs) ≈ Σ_k c_k s^{-k}.
pub fn bessel_i_asym_coeffs(n: u32, terms: usize) -> Vec<f64> {
    let mu = 4.0 * (n as f64).powi(2);
    let mut out = Vec::with_capacity(terms);
    let mut c = 1.0;
    out.push(c);
    for k in 1..terms {
        let j = (2 * k - 1) as f64;
        c *= -(mu - j * j) / (k as f64 * 8.0);
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_reference_points() {
        // E_1(1) and E_1(0.5) from standard tables.
        assert!((expint_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
        assert!((expint_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-14);
        assert!((expint_e1(2.0) - 0.048_900_510_708_061_12).abs() < 1e-15);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn bessel_branches_agree() {
        for n in 0..4 {
            for &x in &[610.0, 650.0, 700.0] {
                let a = bessel_i_scaled_asym(n, x);
                // Force the series branch.
                let nf = n as f64;
                let log_t0 = -x + nf * (x / 2.0).ln() - ln_gamma(nf + 1.0);
                let q = x * x / 4.0;
                let mut term = log_t0.exp();
                let mut s = term;
                let mut k = 0.0;
                while k < 4.0 * x {
                    k += 1.0;
                    term *= q / (k * (k + nf));
                    s += term;
                }
                assert!((a - s).abs() / s < 1e-12, "n={n} x={x}");
            }
        }
        assert!((bessel_i_scaled(0, 1.0) - 1.266_065_877_752_008_4 * (-1f64).exp()).abs() < 1e-15);
    }
}
