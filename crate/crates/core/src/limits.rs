//! Limit random variables 𝒳, 𝒲_β and 𝒲_0 with truncation error budgets.

use crate::env::{pareto_from_uniform, pareto_variance, uniform_in_ball};
use crate::error::{invalid, Error, Result};
use crate::model::pareto_mean;
use crate::quad::GaussRule;
use crate::rng::Stream;
use crate::special::unit_ball_volume;
use crate::stats::median;
use crate::walk::{escape_probability, f_profile_radial, green_many};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rustc_hash::FxHashMap;
use statrs::function::gamma::gamma;

/// Confidence level behind the attached truncation bounds of 𝒳.
pub const CHI_TAIL_DELTA: f64 = 0.1;

/// Window check for the centered Green sum: d ≥ 5 and α > d/(d − 2).
pub fn chi_window(alpha: f64, d: usize) -> Result<()> {
    if d < 5 {
        return Err(Error::Window(format!("the centered Green sum needs d >= 5, got d = {d}")));
    }
    let lo = d as f64 / (d as f64 - 2.0);
    if !(alpha > lo) {
        return Err(Error::Window(format!("the centered Green sum needs alpha > d/(d-2) = {lo:.4}, got {alpha}")));
    }
    Ok(())
}

/// Samples of the truncated sum Σ_{‖x‖≤R}(ω_x − μ) P(x ∈ R_∞).
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSamples {
    pub values: Vec<f64>,
    pub r_cut: f64,
    /// Bound on |tail beyond R_cut| holding with probability ≥ 1 − δ.
    pub tail_bound: f64,
    pub delta: f64,
    pub sites: usize,
    pub seed: u64,
}

/// P(x ∈ R_∞) for the sites with r_in < ‖x‖ ≤ r_out, in lexicographic
/// order, one Green evaluation per symmetry class.
pub fn hitting_weights(d: usize, r_in: f64, r_out: f64) -> Result<Vec<f64>> {
    let mut classes: FxHashMap<Vec<i64>, u32> = FxHashMap::default();
    let mut keys: Vec<Vec<i64>> = Vec::new();
    let mut index: Vec<u32> = Vec::new();
    let ri = r_out.floor() as i64;
    let (lo2, hi2) = (if r_in < 0.0 { -1 } else { (r_in * r_in).floor() as i64 }, (r_out * r_out).floor() as i64);
    let mut x = vec![-ri; d];
    'outer: loop {
        let n2: i64 = x.iter().map(|c| c * c).sum();
        if n2 > lo2 && n2 <= hi2 {
            let mut key: Vec<i64> = x.iter().map(|c| c.abs()).collect();
            key.sort_unstable();
            let next = keys.len() as u32;
            let id = *classes.entry(key.clone()).or_insert_with(|| {
                keys.push(key);
                next
            });
            index.push(id);
        }
        let mut i = d;
        while i > 0 {
            i -= 1;
            if x[i] < ri {
                x[i] += 1;
                continue 'outer;
            }
            x[i] = -ri;
        }
        break;
    }
    let mut all = keys.clone();
    all.push(vec![0; d]);
    let g = green_many(&all, d)?;
    let g0 = g.last().unwrap().value;
    if let Some(bad) = g.iter().find(|v| v.tolerance > 1e-8) {
        return Err(Error::Numerical(format!("Green quadrature tolerance {:e}", bad.tolerance)));
    }
    Ok(index.into_iter().map(|i| g[i as usize].value / g0).collect())
}

/// Σ_{‖x‖>R} P(x ∈ R_∞)^κ from the asymptotic G(x) ≈ a_d ‖x‖^{2−d}.
pub fn hitting_tail_sum(d: usize, r: f64, kappa: f64) -> f64 {
    let df = d as f64;
    let a_d = df * gamma(df / 2.0 - 1.0) / (2.0 * std::f64::consts::PI.powf(df / 2.0));
    let lambda = escape_probability(d).unwrap_or(f64::NAN);
    let c = lambda * a_d;
    let expo = kappa * (df - 2.0) - df;
    c.powf(kappa) * df * unit_ball_volume(d) * r.powf(-expo) / expo
}

/// Truncation bound: Chebyshev for α > 2, the heavy-tail quantile scale
/// (Σ p^α / δ)^{1/α} otherwise.
pub fn chi_tail_bound(alpha: f64, d: usize, r: f64, delta: f64) -> f64 {
    if alpha > 2.0 {
        (pareto_variance(alpha) * hitting_tail_sum(d, r, 2.0) / delta).sqrt()
    } else {
        (hitting_tail_sum(d, r, alpha) / delta).powf(1.0 / alpha)
    }
}

/// i.i.d. samples of the Green-weighted centered environment sum.
pub fn chi_estimate(alpha: f64, d: usize, r_cut: f64, samples: usize, seed: u64) -> Result<ChiSamples> {
    chi_window(alpha, d)?;
    if !(r_cut >= 10.0) {
        return invalid("R_cut must be at least 10");
    }
    let table = hitting_weights(d, -1.0, r_cut)?;
    let values = chi_values(&table, alpha, samples, seed)?;
    Ok(ChiSamples {
        values,
        r_cut,
        tail_bound: chi_tail_bound(alpha, d, r_cut, CHI_TAIL_DELTA),
        delta: CHI_TAIL_DELTA,
        sites: table.len(),
        seed,
    })
}

/// Σ_i (ω_i − μ) p_i over a weight table, one stream per sample.
pub fn chi_values(table: &[f64], alpha: f64, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let mu = pareto_mean(alpha).ok_or_else(|| Error::Window("the environment mean is infinite".into()))?;
    let stream = Stream::new(seed, "chi");
    Ok((0..samples)
        .map(|s| {
            let mut rng = stream.rng(s as u64);
            table.iter().map(|p| (pareto_from_uniform(alpha, rng.random()) - mu) * p).sum()
        })
        .collect())
}

/// Table of log f on a log-radius grid.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub d: usize,
    log_r0: f64,
    step: f64,
    log_f: Vec<f64>,
    r_max: f64,
}

impl RadialProfile {
    pub fn new(d: usize, r_max: f64) -> Result<Self> {
        let r0: f64 = 1e-6;
        let nodes = 4000;
        let step = (r_max / r0).ln() / (nodes - 1) as f64;
        let log_r0 = r0.ln();
        let log_f = (0..nodes)
            .map(|i| f_profile_radial((log_r0 + i as f64 * step).exp(), d).map(|v| v.max(1e-300).ln()))
            .collect::<Result<Vec<_>>>()?;
        Ok(RadialProfile { d, log_r0, step, log_f, r_max })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let t = (r.ln() - self.log_r0) / self.step;
        if t <= 1.0 || r > self.r_max {
            return f_profile_radial(r, self.d).unwrap_or(0.0);
        }
        // Cubic Lagrange on the four surrounding nodes.
        let i = (t.floor() as usize).clamp(1, self.log_f.len() - 3);
        let u = t - i as f64;
        let y = &self.log_f[i - 1..i + 3];
        let (a, b, c, e) = (u + 1.0, u, u - 1.0, u - 2.0);
        let v = -y[0] * b * c * e / 6.0 + y[1] * a * c * e / 2.0 - y[2] * a * b * e / 2.0 + y[3] * a * b * c / 6.0;
        v.exp()
    }
}

/// ∫_{B_K} g(f(x)) dx in the variable s = log r, Gauss–Legendre on panels
/// of width 1/4 with an extra edge where f crosses `kink` (if any).
fn radial_integral<G: Fn(f64) -> f64>(d: usize, k: f64, kink: Option<f64>, g: G) -> Result<f64> {
    let df = d as f64;
    let surface = df * unit_ball_volume(d);
    let (lo, hi) = ((1e-12f64).ln(), k.ln());
    let panels = ((hi - lo) / 0.25).ceil() as usize;
    let mut edges: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
    if let Some(level) = kink {
        if let Some(r) = radius_where_f_equals(d, level, k)? {
            edges.push(r.ln());
            edges.sort_by(f64::total_cmp);
        }
    }
    let rule = GaussRule::new(20);
    let mut bad = false;
    let v = rule.integrate_panels(
        |s| {
            let r = s.exp();
            match f_profile_radial(r, d) {
                Ok(f) => r.powf(df) * g(f),
                Err(_) => {
                    bad = true;
                    0.0
                }
            }
        },
        &edges,
    );
    if bad || !v.is_finite() {
        return Err(Error::Numerical("radial quadrature of f failed".into()));
    }
    Ok(surface * v)
}

/// The radius in (0, K) where the decreasing profile f equals `level`.
fn radius_where_f_equals(d: usize, level: f64, k: f64) -> Result<Option<f64>> {
    let (mut a, mut b) = (1e-12f64, k);
    if f_profile_radial(b, d)? >= level || f_profile_radial(a, d)? <= level {
        return Ok(None);
    }
    for _ in 0..200 {
        let m = (a * b).sqrt();
        if f_profile_radial(m, d)? > level {
            a = m;
        } else {
            b = m;
        }
        if b / a < 1.0 + 1e-14 {
            break;
        }
    }
    Ok(Some((a * b).sqrt()))
}

/// ∫_{B_K} f(x) dx.
pub fn f_ball_integral(d: usize, k: f64) -> Result<f64> {
    radial_integral(d, k, None, |f| f)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompensatedIntegralSpec {
    pub k: f64,
    pub eps: f64,
    pub alpha: f64,
    pub d: usize,
    pub beta: f64,
    pub tol: f64,
}

impl CompensatedIntegralSpec {
    /// Defaults: K = 6 and ε = 10^{-2} times the median top weight in B_K.
    pub fn with_defaults(alpha: f64, d: usize, beta: f64) -> Self {
        let k = 6.0;
        CompensatedIntegralSpec { k, eps: 1e-2 * median_top_weight(alpha, d, k), alpha, d, beta, tol: 1e-10 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !(self.eps >= 0.0) || !(self.beta >= 0.0) || !(self.alpha > 0.0) {
            return invalid("need K > 0, eps >= 0, beta >= 0 and alpha > 0");
        }
        if self.d < 2 {
            return invalid("d must be at least 2");
        }
        Ok(())
    }
}

/// Median of the largest weight of the Poisson process on B_K.
pub fn median_top_weight(alpha: f64, d: usize, k: f64) -> f64 {
    let vol = unit_ball_volume(d) * k.powi(d as i32);
    (vol / std::f64::consts::LN_2).powf(1.0 / alpha)
}

/// ∫_{B_K×(ε,∞)} w f(x) η(dx, dw) for α > 1. For α < 1 the process is not
/// compensated and the value returned is the mass below the cutoff,
/// ∫_{B_K×(0,ε]} w f η, which vanishes as ε → 0.
pub fn compensator_integral(spec: &CompensatedIntegralSpec) -> Result<f64> {
    spec.validate()?;
    let a = spec.alpha;
    if a == 1.0 {
        return Err(Error::Window("alpha = 1 is not covered".into()));
    }
    let i = f_ball_integral(spec.d, spec.k)?;
    if a > 1.0 {
        if spec.eps == 0.0 {
            return Err(Error::Window("the compensator diverges at eps = 0 when alpha > 1".into()));
        }
        Ok(a / (a - 1.0) * spec.eps.powf(1.0 - a) * i)
    } else {
        Ok(a / (1.0 - a) * spec.eps.powf(1.0 - a) * i)
    }
}

/// Window check for the 𝒲 samplers.
pub fn w_window(alpha: f64, d: usize, beta: f64) -> Result<()> {
    let df = d as f64;
    if beta > 0.0 {
        if !(d == 2 || d == 3) || !(alpha > df / 2.0 && alpha < 2.0) {
            return Err(Error::Window(format!(
                "beta > 0 needs d in {{2, 3}} and alpha in (d/2, 2); got alpha = {alpha}, d = {d}"
            )));
        }
        return Ok(());
    }
    if alpha > 0.0 && alpha < 1.0 {
        return Ok(());
    }
    let cap = if d <= 2 { f64::INFINITY } else { df / (df - 2.0) };
    if alpha > 1.0 && alpha < 2.0 && alpha < cap {
        return Ok(());
    }
    Err(Error::Window(format!(
        "beta = 0 needs alpha in (0, 1), or alpha in (1, 2) with alpha < d/(d-2); got alpha = {alpha}, d = {d}"
    )))
}

/// Points of the Poisson process on B_K × (ε, ∞).
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonCloud {
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
    pub k: f64,
    pub eps: f64,
}

pub fn sample_cloud<R: Rng>(rng: &mut R, alpha: f64, d: usize, k: f64, eps: f64) -> Result<PoissonCloud> {
    if !(eps > 0.0) {
        return invalid("sampling needs eps > 0");
    }
    let mean = unit_ball_volume(d) * k.powi(d as i32) * eps.powf(-alpha);
    if mean > 5e7 {
        return Err(Error::TooLarge(format!("expected {mean:e} Poisson points")));
    }
    let count = Poisson::new(mean).map_err(|e| Error::Numerical(e.to_string()))?.sample(rng) as usize;
    let mut radii = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        let x = uniform_in_ball(rng, d, k);
        radii.push(x.iter().map(|c| c * c).sum::<f64>().sqrt());
        let u: f64 = rng.random();
        weights.push(eps * u.powf(-1.0 / alpha));
    }
    Ok(PoissonCloud { radii, weights, k, eps })
}

/// Truncation channels attached to each 𝒲 sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBudget {
    pub k: f64,
    pub eps: f64,
    /// Computed bound on E|contribution of weights below ε|.
    pub eps_channel: f64,
    /// ε^{(2−α)/2}: L² scale of the centered small-weight term.
    pub term3: f64,
    /// ε^{2−α}: the convexity correction of small weights.
    pub term4: f64,
    /// e^{−K}: level of the outer tail.
    pub term5_level: f64,
    /// K^{d−2α}: probability scale of exceeding that level (β > 0).
    pub term5_prob: f64,
    pub overflow: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WSample {
    pub value: f64,
    pub budget: ErrorBudget,
}

/// Σ_k β^{k−1} α ε^{k−α}/(k!(k−α)) = ∫_0^ε (e^{βw}−1−βw)/β α w^{−α−1} dw.
fn convex_small_mass(alpha: f64, beta: f64, eps: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 2..60 {
        fact *= k as f64;
        let t = beta.powi(k - 1) * alpha * eps.powf(k as f64 - alpha) / (fact * (k as f64 - alpha));
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Bound on E|∫_{B_K×(0,ε]} ...| for the dropped small weights.
pub fn eps_channel(alpha: f64, d: usize, beta: f64, k: f64, eps: f64) -> Result<f64> {
    let a = alpha;
    let convex = convex_small_mass(a, beta, eps) * f_ball_integral(d, k)?;
    if a < 1.0 {
        // Uncompensated: the dropped mass has this mean.
        return Ok(convex + a / (1.0 - a) * eps.powf(1.0 - a) * f_ball_integral(d, k)?);
    }
    // Compensated: split at w f = 1; L² on the small part, L¹ on the rest.
    let small = radial_integral(d, k, Some(1.0 / eps), |f| f * f * a * eps.min(1.0 / f).powf(2.0 - a) / (2.0 - a))?;
    let large = radial_integral(d, k, Some(1.0 / eps), |f| {
        if f * eps > 1.0 {
            f * a / (a - 1.0) * ((1.0 / f).powf(1.0 - a) - eps.powf(1.0 - a))
        } else {
            0.0
        }
    })?;
    Ok(convex + small.sqrt() + 2.0 * large)
}

/// 𝒲 evaluated on the part of a cloud inside B_K × (ε, ∞).
pub fn w_functional(
    cloud: &PoissonCloud,
    spec: &CompensatedIntegralSpec,
    profile: &RadialProfile,
    compensator: f64,
    eps_bound: f64,
) -> WSample {
    let (b, a) = (spec.beta, spec.alpha);
    let mut value = 0.0;
    for (&r, &w) in cloud.radii.iter().zip(&cloud.weights) {
        if r > spec.k || w <= spec.eps {
            continue;
        }
        let f = profile.eval(r);
        value += if b == 0.0 { w * f } else { (b * w).exp_m1() / b * f };
    }
    if a > 1.0 {
        value -= compensator;
    }
    let df = spec.d as f64;
    WSample {
        value,
        budget: ErrorBudget {
            k: spec.k,
            eps: spec.eps,
            eps_channel: eps_bound,
            term3: spec.eps.powf((2.0 - a).max(0.0) / 2.0),
            term4: spec.eps.powf((2.0 - a).max(0.0)),
            term5_level: (-spec.k).exp(),
            term5_prob: if b > 0.0 { spec.k.powf(df - 2.0 * a).min(1.0) } else { f64::NAN },
            overflow: !value.is_finite(),
        },
    }
}

/// Shared state for repeated sampling at one specification.
pub struct WSampler {
    pub spec: CompensatedIntegralSpec,
    profile: RadialProfile,
    compensator: f64,
    eps_bound: f64,
}

impl WSampler {
    pub fn new(spec: CompensatedIntegralSpec) -> Result<Self> {
        spec.validate()?;
        w_window(spec.alpha, spec.d, spec.beta)?;
        if spec.alpha == 1.0 {
            return Err(Error::Window("alpha = 1 is not covered".into()));
        }
        if !(spec.eps > 0.0) {
            return invalid("sampling needs eps > 0");
        }
        let profile = RadialProfile::new(spec.d, spec.k)?;
        let compensator = if spec.alpha > 1.0 { compensator_integral(&spec)? } else { 0.0 };
        let eps_bound = eps_channel(spec.alpha, spec.d, spec.beta, spec.k, spec.eps)?;
        Ok(WSampler { spec, profile, compensator, eps_bound })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<WSample> {
        let s = &self.spec;
        let cloud = sample_cloud(rng, s.alpha, s.d, s.k, s.eps)?;
        Ok(self.evaluate(&cloud))
    }

    pub fn evaluate(&self, cloud: &PoissonCloud) -> WSample {
        w_functional(cloud, &self.spec, &self.profile, self.compensator, self.eps_bound)
    }
}

/// One sample of the truncated-compensated functional.
pub fn w_sample(spec: &CompensatedIntegralSpec, seed: u64) -> Result<WSample> {
    let sampler = WSampler::new(*spec)?;
    sampler.sample(&mut Stream::new(seed, "w-sample").rng(0))
}

/// Median absolute changes under K → 2K and ε → ε/2 on coupled clouds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityReport {
    pub samples: usize,
    pub k_doubling_median: f64,
    pub k_bound: f64,
    pub eps_halving_median: f64,
    pub eps_bound: f64,
}

impl StabilityReport {
    pub fn within(&self) -> bool {
        self.k_doubling_median < self.k_bound && self.eps_halving_median < self.eps_bound
    }
}

pub fn w_stability(spec: &CompensatedIntegralSpec, samples: usize, seed: u64) -> Result<StabilityReport> {
    let base = WSampler::new(*spec)?;
    let wide = WSampler::new(CompensatedIntegralSpec { k: 2.0 * spec.k, ..*spec })?;
    let fine = WSampler::new(CompensatedIntegralSpec { eps: spec.eps / 2.0, ..*spec })?;
    let stream = Stream::new(seed, "w-stability");
    let mut dk = Vec::with_capacity(samples);
    let mut de = Vec::with_capacity(samples);
    for s in 0..samples {
        let cloud = sample_cloud(&mut stream.rng(s as u64), spec.alpha, spec.d, 2.0 * spec.k, spec.eps / 2.0)?;
        let v0 = base.evaluate(&cloud).value;
        dk.push((wide.evaluate(&cloud).value - v0).abs());
        de.push((fine.evaluate(&cloud).value - v0).abs());
    }
    Ok(StabilityReport {
        samples,
        k_doubling_median: median(&dk),
        k_bound: (-spec.k).exp(),
        eps_halving_median: median(&de),
        eps_bound: base.eps_bound,
    })
}

/// R_cut → 2 R_cut on nested sums: fraction of samples whose change stays
/// below the attached bound at R_cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiDoubling {
    pub samples: usize,
    pub fraction_within: f64,
    pub median_change: f64,
    pub tail_bound: f64,
    pub delta: f64,
}

pub fn chi_doubling(alpha: f64, d: usize, r_cut: f64, samples: usize, seed: u64) -> Result<ChiDoubling> {
    chi_window(alpha, d)?;
    if !(r_cut >= 10.0) {
        return invalid("R_cut must be at least 10");
    }
    // Annulus sites alone: the change of a nested sum.
    let annulus = hitting_weights(d, r_cut, 2.0 * r_cut)?;
    let changes: Vec<f64> = chi_values(&annulus, alpha, samples, seed)?.into_iter().map(f64::abs).collect();
    let bound = chi_tail_bound(alpha, d, r_cut, CHI_TAIL_DELTA);
    let within = changes.iter().filter(|&&c| c < bound).count() as f64 / samples as f64;
    Ok(ChiDoubling { samples, fraction_within: within, median_change: median(&changes), tail_bound: bound, delta: CHI_TAIL_DELTA })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        assert!(chi_window(2.2, 5).is_ok());
        assert!(matches!(chi_window(1.6, 5), Err(Error::Window(_))));
        assert!(matches!(chi_window(3.0, 4), Err(Error::Window(_))));
        assert!(w_window(1.5, 2, 1.0).is_ok());
        assert!(w_window(1.6, 3, 0.5).is_ok());
        assert!(matches!(w_window(1.9, 5, 1.0), Err(Error::Window(_))));
        assert!(w_window(0.5, 7, 0.0).is_ok());
        assert!(w_window(1.6, 5, 0.0).is_ok());
        assert!(matches!(w_window(1.7, 5, 0.0), Err(Error::Window(_))));
        assert!(w_window(1.9, 2, 0.0).is_ok());
    }

    #[test]
    fn hitting_weights_match_pointwise() {
        let w = hitting_weights(5, -1.0, 2.0).unwrap();
        let sites = crate::env::lattice_ball(5, 2.0);
        assert_eq!(w.len(), sites.len());
        for (x, p) in sites.iter().zip(&w).step_by(7) {
            let q = crate::walk::hitting_probability_inf(x, 5).unwrap();
            assert!((p - q).abs() < 1e-10, "{x:?}: {p} vs {q}");
        }
    }

    #[test]
    fn compensator_alpha_two() {
        let spec = CompensatedIntegralSpec { k: 3.0, eps: 1.0, alpha: 2.0, d: 2, beta: 0.0, tol: 1e-10 };
        let i = f_ball_integral(2, 3.0).unwrap();
        assert!((compensator_integral(&spec).unwrap() - 2.0 * i).abs() < 1e-12 * i);
    }

    #[test]
    fn f_integral_d2_closed_form() {
        // ∫_{B_K} E_1(|x|²/2) dx = 2π[(K²/2) E_1(K²/2) + 1 − e^{−K²/2}].
        let k: f64 = 2.5;
        let u = k * k / 2.0;
        let exact = 2.0 * std::f64::consts::PI * (u * crate::special::expint_e1(u) + 1.0 - (-u).exp());
        let got = f_ball_integral(2, k).unwrap();
        assert!((got - exact).abs() < 1e-8 * exact, "{got} vs {exact}");
    }

    #[test]
    fn profile_table_matches_direct() {
        let p = RadialProfile::new(2, 6.0).unwrap();
        for r in [1e-3, 0.1, 0.77, 2.0, 5.5] {
            let want = f_profile_radial(r, 2).unwrap();
            assert!((p.eval(r) - want).abs() < 1e-6 * want);
        }
    }

    #[test]
    fn w_monotone_in_beta() {
        let mut rng = Stream::new(1, "t").rng(0);
        let lo = WSampler::new(CompensatedIntegralSpec { k: 3.0, eps: 0.5, alpha: 1.5, d: 2, beta: 0.2, tol: 1e-10 }).unwrap();
        let hi = WSampler::new(CompensatedIntegralSpec { beta: 0.4, ..lo.spec }).unwrap();
        for _ in 0..20 {
            let c = sample_cloud(&mut rng, 1.5, 2, 3.0, 0.5).unwrap();
            assert!(hi.evaluate(&c).value >= lo.evaluate(&c).value);
        }
    }
}
