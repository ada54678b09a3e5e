//! Almgren frequency, Weiss energy and boundary-point classification.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::geometry::{composite_gauss, mat_vec, transformed_region, BoundaryChart, Point};
use crate::moduli::{dini_integral, Modulus};
use crate::par;

/// Where a profile is centered.
#[derive(Clone, Debug)]
pub enum Center {
    /// Plain balls `B_r(x₀)`; points outside the domain contribute zero.
    Interior(Point),
    /// Transformed balls `Ψ_{x₀}(B_r)` of a boundary chart.
    Boundary(BoundaryChart),
}

impl Center {
    pub fn x0(&self) -> Point {
        match self {
            Center::Interior(p) => *p,
            Center::Boundary(c) => c.x0,
        }
    }

    /// Modulus driving the Dini corrections (zero for plain balls).
    pub fn sigma(&self) -> Modulus {
        match self {
            Center::Interior(_) => Modulus::zero(1e300),
            Center::Boundary(c) => c.sigma.clone(),
        }
    }
}

/// `R₀ = min(R/2, √((d−1)/(6Λ)))` for chart radius `R` and largest eigenvalue `Λ`.
pub fn r0(chart_radius: f64, lambda_max: f64, d: u32) -> f64 {
    let spectral = if lambda_max > 0.0 { ((d as f64 - 1.0) / (6.0 * lambda_max)).sqrt() } else { f64::INFINITY };
    (0.5 * chart_radius).min(spectral)
}

/// Radial and angular node counts at radius `r`.
pub fn sampling(r: f64, h: Option<f64>) -> (usize, usize) {
    match h {
        // 48 angular panels put the kinks of 2-, 3-, 4- and 6-sector profiles on panel edges
        None => (32, 192),
        Some(h) => ((r / h).ceil().max(32.0) as usize, (4.0 * PI * r / h).ceil().max(64.0) as usize),
    }
}

/// Integrals at one radius; `E` and `H` are sums of the per-component parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantities {
    pub r: f64,
    pub energy: f64,
    pub height: f64,
    /// Per-component `E_i`, `H_i` and Dirichlet part `r^{2−d}∫A∇v·∇v`.
    pub energy_i: Vec<f64>,
    pub height_i: Vec<f64>,
    pub dirichlet_i: Vec<f64>,
}

impl Quantities {
    /// `𝒩 = E/H`; errors when `H = 0`.
    pub fn frequency(&self) -> Result<f64> {
        if !(self.height > 0.0) {
            return Err(Error::Hypothesis(format!("H vanishes at r = {}", self.r)));
        }
        Ok(self.energy / self.height)
    }

    /// `W_γ = H/r^{2γ}(𝒩 − γ)`.
    pub fn weiss(&self, gamma: f64) -> Result<f64> {
        let n = self.frequency()?;
        Ok(self.height / self.r.powf(2.0 * gamma) * (n - gamma))
    }
}

/// Angular Gauss rule on `[0, 2π)` with panel edges where `inside(θ)` changes value, so no
/// panel straddles the domain boundary. With `inside_only`, the outside arcs are dropped.
pub fn angular_rule(inside: impl Fn(f64) -> bool, n_t: usize, inside_only: bool) -> Vec<(f64, f64)> {
    let m = n_t.max(64);
    let step = 2.0 * PI / m as f64;
    let flags: Vec<bool> = (0..m).map(|k| inside(k as f64 * step)).collect();
    let mut rule = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        let count = ((n_t as f64 * (hi - lo) / (2.0 * PI)).ceil() as usize).max(8);
        let (x, w) = composite_gauss(count, lo, hi);
        rule.extend(x.into_iter().zip(w));
    };
    let cuts: Vec<f64> = (0..m)
        .filter(|&k| flags[k] != flags[(k + 1) % m])
        .map(|k| {
            let (mut a, mut b) = (k as f64 * step, (k + 1) as f64 * step);
            for _ in 0..50 {
                let c = 0.5 * (a + b);
                if inside(c) == flags[k] {
                    a = c;
                } else {
                    b = c;
                }
            }
            0.5 * (a + b)
        })
        .collect();
    if cuts.is_empty() {
        if flags[0] || !inside_only {
            push(0.0, 2.0 * PI);
        }
        return rule;
    }
    for (k, &lo) in cuts.iter().enumerate() {
        let hi = if k + 1 < cuts.len() { cuts[k + 1] } else { cuts[0] + 2.0 * PI };
        if !inside_only || inside(0.5 * (lo + hi)) {
            push(lo, hi);
        }
    }
    rule
}

fn range_error(r: f64) -> Error {
    Error::OutOfRange { what: "sampling radius (leaves the grid)", value: r, lo: 0.0, hi: r }
}

/// `E`, `H` and their component parts at radius `r` (d = 2).
pub fn quantities(field: &dyn Field, center: &Center, r: f64) -> Result<Quantities> {
    if !(r > 0.0) {
        return invalid("radius must be positive");
    }
    let n = field.n();
    let (n_r, n_t) = sampling(r, field.resolution());
    let mut e = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut hh = vec![0.0; n];
    let check = |y: Point| -> Result<()> {
        if field.inside(y) && !field.covers(y, 0.0) {
            return Err(range_error(r));
        }
        Ok(())
    };
    match center {
        Center::Interior(x0) => {
            let (rx, rw) = composite_gauss(n_r, 0.0, r);
            for (rho, wr) in rx.iter().zip(&rw) {
                for (t, wt) in angular_rule(|t| field.inside([x0[0] + rho * t.cos(), x0[1] + rho * t.sin()]), n_t, true) {
                    let y = [x0[0] + rho * t.cos(), x0[1] + rho * t.sin()];
                    check(y)?;
                    let w = wr * wt * rho;
                    for i in 0..n {
                        let v = field.value(i, y);
                        let g = field.gradient(i, y);
                        let g2 = g[0] * g[0] + g[1] * g[1];
                        d[i] += w * g2;
                        e[i] += w * (g2 - field.lambda(i) * v * v);
                    }
                }
            }
            for (t, wt) in angular_rule(|t| field.inside([x0[0] + r * t.cos(), x0[1] + r * t.sin()]), n_t, true) {
                let y = [x0[0] + r * t.cos(), x0[1] + r * t.sin()];
                check(y)?;
                for (i, hi) in hh.iter_mut().enumerate() {
                    let v = field.value(i, y);
                    *hi += wt * v * v;
                }
            }
        }
        Center::Boundary(chart) => {
            let region = transformed_region(chart, r, n_r, n_t)?;
            let coef = chart.coefficients();
            let [tau, nin] = chart.q;
            for (x, w) in &region.volume {
                let y = chart.psi(*x);
                check(y)?;
                let jac = chart.jacobian_local(*x);
                let a = coef.a(*x);
                let p = chart.det(*x);
                for i in 0..n {
                    let v = field.value(i, y);
                    let g = field.gradient(i, y);
                    let gl = [g[0] * tau[0] + g[1] * tau[1], g[0] * nin[0] + g[1] * nin[1]];
                    // ∇v = DΨᵀ ∇u in local coordinates
                    let gv = [jac[0][0] * gl[0] + jac[1][0] * gl[1], jac[0][1] * gl[0] + jac[1][1] * gl[1]];
                    let ag = mat_vec(a, gv);
                    let q = ag[0] * gv[0] + ag[1] * gv[1];
                    d[i] += w * q;
                    e[i] += w * (q - field.lambda(i) * p * v * v);
                }
            }
            for (x, w) in &region.surface {
                let y = chart.psi(*x);
                check(y)?;
                let mu = coef.mu(*x);
                for (i, hi) in hh.iter_mut().enumerate() {
                    let v = field.value(i, y);
                    *hi += w * v * v * mu / r;
                }
            }
        }
    }
    Ok(Quantities {
        r,
        energy: e.iter().sum(),
        height: hh.iter().sum(),
        energy_i: e,
        height_i: hh,
        dirichlet_i: d,
    })
}

pub fn height(field: &dyn Field, center: &Center, r: f64) -> Result<f64> {
    Ok(quantities(field, center, r)?.height)
}

pub fn energy(field: &dyn Field, center: &Center, r: f64) -> Result<f64> {
    Ok(quantities(field, center, r)?.energy)
}

pub fn weiss(field: &dyn Field, center: &Center, r: f64, gamma: f64) -> Result<f64> {
    quantities(field, center, r)?.weiss(gamma)
}

/// Classification of a boundary point by its frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Z1,
    Z2,
    S,
    Unknown,
}

impl PointClass {
    /// Number of components a blow-up of this class sees.
    pub fn active_components(self) -> Option<usize> {
        match self {
            PointClass::Z1 => Some(1),
            PointClass::Z2 => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for PointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PointClass::Z1 => "Z1",
            PointClass::Z2 => "Z2",
            PointClass::S => "S",
            PointClass::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

pub fn classify_boundary_point(gamma: f64, delta: f64, tol: f64) -> PointClass {
    if (gamma - 1.0).abs() <= tol {
        PointClass::Z1
    } else if (gamma - 2.0).abs() <= tol {
        PointClass::Z2
    } else if gamma >= 2.0 + delta - tol {
        PointClass::S
    } else {
        PointClass::Unknown
    }
}

/// One sampled radius of a profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub q: Quantities,
    pub frequency: f64,
    /// `∫₀^r σ(t)/t dt`
    pub dini: f64,
    /// `W_γ` for each requested `γ`, in request order.
    pub weiss: Vec<f64>,
    pub reliable: bool,
}

impl Sample {
    pub fn r(&self) -> f64 {
        self.q.r
    }
}

#[derive(Clone, Debug)]
pub struct FrequencyProfile {
    pub center: Center,
    pub gammas: Vec<f64>,
    pub samples: Vec<Sample>,
    /// Smallest `C ≥ 0` making `e^{C∫σ/t}(𝒩+1)` nondecreasing on reliable samples.
    pub c_a: f64,
    /// Extrapolated limit of the corrected quantity minus one.
    pub gamma_estimate: Option<f64>,
}

/// Minimum reliable radius for grid spacing `h`.
pub fn min_reliable_radius(h: f64) -> f64 {
    8.0 * h
}

pub fn frequency_profile(field: &dyn Field, center: &Center, radii: &[f64], gammas: &[f64]) -> Result<FrequencyProfile> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return invalid("radii must be positive and strictly increasing");
    }
    let sigma = center.sigma();
    let r_min = field.resolution().map(min_reliable_radius).unwrap_or(0.0);
    let results = par::map(radii.len(), |k| -> Result<Sample> {
        let r = radii[k];
        let q = quantities(field, center, r)?;
        let frequency = q.frequency()?;
        let weiss = gammas.iter().map(|&g| q.weiss(g)).collect::<Result<Vec<_>>>()?;
        let dini = if sigma.is_zero() { 0.0 } else { dini_integral(&sigma, r.min(sigma.r_max()), 1, 0.0)?.value };
        Ok(Sample { q, frequency, dini, weiss, reliable: r >= r_min * (1.0 - 1e-12) })
    });
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    let c_a = almgren_constant(&samples);
    let gamma_estimate = extrapolate_gamma(&samples, c_a);
    Ok(FrequencyProfile { center: center.clone(), gammas: gammas.to_vec(), samples, c_a, gamma_estimate })
}

fn reliable(samples: &[Sample]) -> Vec<&Sample> {
    samples.iter().filter(|s| s.reliable).collect()
}

/// Relative changes below this are treated as quadrature roundoff.
const ROUNDOFF: f64 = 1e-10;

fn almgren_constant(samples: &[Sample]) -> f64 {
    let rel = reliable(samples);
    let mut c: f64 = 0.0;
    for w in rel.windows(2) {
        let drop = ((w[0].frequency + 1.0) / (w[1].frequency + 1.0)).ln();
        if drop > ROUNDOFF {
            let dd = w[1].dini - w[0].dini;
            c = c.max(if dd > 0.0 { drop / dd } else { f64::INFINITY });
        }
    }
    c
}

/// Corrected quantity `e^{C∫σ/t}(𝒩+1)`.
pub fn corrected(sample: &Sample, c: f64) -> f64 {
    (c * sample.dini).exp() * (sample.frequency + 1.0)
}

fn extrapolate_gamma(samples: &[Sample], c_a: f64) -> Option<f64> {
    let rel = reliable(samples);
    if rel.len() < 4 {
        return None;
    }
    // the correction only serves to extrapolate; an unbounded constant means no monotone reading
    let c = if c_a.is_finite() { c_a } else { 0.0 };
    let (s1, s2) = (rel[0], rel[1]);
    let (q1, q2) = (corrected(s1, c), corrected(s2, c));
    let q0 = q1 - s1.r() * (q2 - q1) / (s2.r() - s1.r());
    Some(q0 - 1.0)
}

impl FrequencyProfile {
    pub fn classify(&self, delta: f64, tol: f64) -> PointClass {
        match self.gamma_estimate {
            Some(g) => classify_boundary_point(g, delta, tol),
            None => PointClass::Unknown,
        }
    }

    /// Largest relative decrease of the corrected quantity between consecutive reliable samples.
    pub fn monotonicity_violation(&self, c: f64) -> f64 {
        let rel = reliable(&self.samples);
        rel.windows(2)
            .map(|w| {
                let (a, b) = (corrected(w[0], c), corrected(w[1], c));
                ((a - b) / a).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `𝒩` over the samples.
    pub fn c_b(&self) -> f64 {
        self.samples.iter().map(|s| s.frequency).fold(0.0, f64::max)
    }

    /// Smallest `C_W ≥ 0` with `W_γ(r) + C_W H(r_max)∫₀^r σ/t` nondecreasing (γ must be requested).
    pub fn weiss_constant(&self, gamma: f64) -> Result<f64> {
        let idx = self
            .gammas
            .iter()
            .position(|g| (g - gamma).abs() < 1e-12)
            .ok_or_else(|| Error::InvalidInput(format!("γ = {gamma} was not sampled")))?;
        let rel = reliable(&self.samples);
        let h_max = rel.last().map(|s| s.q.height).unwrap_or(0.0);
        let mut c: f64 = 0.0;
        for w in rel.windows(2) {
            let drop = w[0].weiss[idx] - w[1].weiss[idx];
            if drop > ROUNDOFF * (w[0].weiss[idx].abs() + w[0].q.height / w[0].r().powf(2.0 * gamma)) {
                let dd = h_max * (w[1].dini - w[0].dini);
                c = c.max(if dd > 0.0 { drop / dd } else { f64::INFINITY });
            }
        }
        Ok(c)
    }

    /// Smallest `C` with `|H′ − 2E/r| ≤ C H σ(r)/r`, `H′` by centered differences on reliable samples.
    pub fn h_derivative_constant(&self) -> f64 {
        let rel = reliable(&self.samples);
        let sigma = self.center.sigma();
        let mut c: f64 = 0.0;
        for w in rel.windows(3) {
            let (a, m, b) = (w[0], w[1], w[2]);
            let dh = (b.q.height - a.q.height) / (b.r() - a.r());
            let dev = (dh - 2.0 * m.q.energy / m.r()).abs();
            let bound = m.q.height * sigma.value(m.r().min(sigma.r_max())) / m.r();
            c = c.max(if bound > 0.0 { dev / bound } else if dev > 0.0 { f64::INFINITY } else { 0.0 });
        }
        c
    }

    /// Smallest ratio `(E_i + H_i)/(½(D_i + H_i))` over samples and components.
    pub fn coercivity_ratio(&self) -> f64 {
        let mut m = f64::INFINITY;
        for s in &self.samples {
            for i in 0..s.q.energy_i.len() {
                let lower = 0.5 * (s.q.dirichlet_i[i] + s.q.height_i[i]);
                if lower > 0.0 {
                    m = m.min((s.q.energy_i[i] + s.q.height_i[i]) / lower);
                }
            }
        }
        m
    }

    /// CSV with header `r,E,H,N,W2`; `W2` is `W_γ` at `γ = 2` (blank when not requested).
    pub fn to_csv(&self) -> String {
        let idx = self.gammas.iter().position(|g| (g - 2.0).abs() < 1e-12);
        let mut out = String::from("r,E,H,N,W2\n");
        for s in &self.samples {
            let w2 = idx.map(|i| format!("{:.12e}", s.weiss[i])).unwrap_or_default();
            out.push_str(&format!("{:.9},{:.12e},{:.12e},{:.12e},{w2}\n", s.r(), s.q.energy, s.q.height, s.frequency));
        }
        out
    }
}

/// Least-squares growth of `H` over reliable samples.
#[derive(Clone, Debug, PartialEq)]
pub struct HGrowth {
    /// Slope of `log H` against `log r`.
    pub slope: f64,
    /// `max_k H(r_k)/(H(r_max) r_k^{2γ})`
    pub c_h: f64,
    /// Intercept of `H/r^{2γ}` fitted linearly in `r`.
    pub h_limit: f64,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

pub fn check_h_growth(profile: &FrequencyProfile, gamma: f64) -> Result<HGrowth> {
    let rel = reliable(&profile.samples);
    if rel.len() < 6 {
        return invalid("H growth needs at least 6 reliable radii");
    }
    if rel.iter().any(|s| !(s.q.height > 0.0)) {
        return Err(Error::Hypothesis("H vanishes on a reliable radius".into()));
    }
    let lr: Vec<f64> = rel.iter().map(|s| s.r().ln()).collect();
    let lh: Vec<f64> = rel.iter().map(|s| s.q.height.ln()).collect();
    let (slope, _) = linear_fit(&lr, &lh);
    let h_max = rel.last().unwrap().q.height;
    let c_h = rel.iter().map(|s| s.q.height / (h_max * s.r().powf(2.0 * gamma))).fold(0.0, f64::max);
    let r: Vec<f64> = rel.iter().map(|s| s.r()).collect();
    let ratio: Vec<f64> = rel.iter().map(|s| s.q.height / s.r().powf(2.0 * gamma)).collect();
    let (_, h_limit) = linear_fit(&r, &ratio);
    Ok(HGrowth { slope, c_h, h_limit })
}

/// Evenly spaced radii on `[lo, hi]`.
pub fn radii_schedule(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return invalid("radii schedule needs 0 < lo < hi and at least two radii");
    }
    Ok((0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Synthetic;

    fn flat() -> Center {
        Center::Boundary(BoundaryChart::flat(Modulus::zero(2.0), 1.0).unwrap())
    }

    #[test]
    fn half_plane_linear_profile() {
        let f = Synthetic::wedge(1.0, [0.0, -1.0]).unwrap();
        for r in [0.05, 0.2, 0.5] {
            let q = quantities(&f, &flat(), r).unwrap();
            assert!((q.height - r * r * PI / 2.0).abs() < 1e-12);
            assert!((q.energy - r * r * PI / 2.0).abs() < 1e-12);
            assert!((q.weiss(1.0).unwrap()).abs() < 1e-8);
        }
        let zero = Synthetic::wedge(1.0, [0.0, -1.0]).unwrap().scaled(0.0);
        let q = quantities(&zero, &flat(), 0.3).unwrap();
        assert_eq!((q.height, q.energy), (0.0, 0.0));
        assert!(q.frequency().is_err());
    }

    #[test]
    fn height_is_quadratic_in_the_field() {
        let a = height(&Synthetic::half_plane_sectors(2, 1.0, [0.0, -1.0]).unwrap(), &flat(), 0.4).unwrap();
        let b = height(&Synthetic::half_plane_sectors(2, 3.0, [0.0, -1.0]).unwrap(), &flat(), 0.4).unwrap();
        assert!((b - 9.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn homogeneous_profiles_have_constant_frequency() {
        let radii = radii_schedule(0.05, 0.45, 8).unwrap();
        let cases: Vec<(Synthetic, Center, f64)> = vec![
            (Synthetic::boundary_pair(1.0, [0.0, -1.0], [1.0, 0.0]).unwrap(), flat(), 2.0),
            (Synthetic::half_plane_sectors(3, 0.8, [0.0, -1.0]).unwrap(), flat(), 3.0),
            (Synthetic::plane_sectors(1.0, 1.0, 0.0).unwrap(), Center::Interior([0.0, 0.0]), 1.0),
            (Synthetic::plane_sectors(1.5, 1.0, 0.0).unwrap(), Center::Interior([0.0, 0.0]), 1.5),
            (Synthetic::plane_sectors(2.0, 1.0, 0.0).unwrap(), Center::Interior([0.0, 0.0]), 2.0),
        ];
        for (f, c, g) in cases {
            let p = frequency_profile(&f, &c, &radii, &[1.0, 2.0, g]).unwrap();
            for s in &p.samples {
                assert!((s.frequency - g).abs() < 1e-6, "{} vs {g}", s.frequency);
                assert!(s.weiss[2].abs() < 1e-8 * s.q.height / s.r().powf(2.0 * g));
            }
            assert!((p.gamma_estimate.unwrap() - g).abs() < 1e-6);
            assert_eq!(p.c_a, 0.0);
            assert!(p.monotonicity_violation(0.0) < 1e-9);
        }
    }

    #[test]
    fn weiss_signs() {
        let f = Synthetic::boundary_pair(1.0, [0.0, -1.0], [1.0, 0.0]).unwrap();
        let r = 0.3;
        let q = quantities(&f, &flat(), r).unwrap();
        assert!(q.weiss(2.0).unwrap().abs() < 1e-8);
        let w1 = q.weiss(1.0).unwrap();
        assert!((w1 - q.height / (r * r)).abs() < 1e-6 * w1);
    }

    #[test]
    fn growth_of_h() {
        let radii = radii_schedule(0.05, 0.45, 8).unwrap();
        let f = Synthetic::wedge(1.0, [0.0, -1.0]).unwrap();
        let p = frequency_profile(&f, &flat(), &radii, &[1.0]).unwrap();
        let g = check_h_growth(&p, 1.0).unwrap();
        assert!((g.slope - 2.0).abs() < 1e-9);
        assert!((g.h_limit - PI / 2.0).abs() < 1e-9);
        let f = Synthetic::boundary_pair(1.0, [0.0, -1.0], [1.0, 0.0]).unwrap();
        let g = check_h_growth(&frequency_profile(&f, &flat(), &radii, &[2.0]).unwrap(), 2.0).unwrap();
        assert!((g.slope - 4.0).abs() < 1e-9);
        let f = Synthetic::half_plane_sectors(3, 1.0, [0.0, -1.0]).unwrap();
        let g = check_h_growth(&frequency_profile(&f, &flat(), &radii, &[3.0]).unwrap(), 3.0).unwrap();
        assert!((g.slope - 6.0).abs() < 1e-9);
        let short = frequency_profile(&f, &flat(), &radii[..5], &[3.0]).unwrap();
        assert!(check_h_growth(&short, 3.0).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify_boundary_point(1.02, 0.0708, 0.05), PointClass::Z1);
        assert_eq!(classify_boundary_point(2.03, 0.0708, 0.05), PointClass::Z2);
        assert_eq!(classify_boundary_point(2.5, 0.0708, 0.05), PointClass::S);
        assert_eq!(classify_boundary_point(1.5, 0.0708, 0.05), PointClass::Unknown);
        assert_eq!(classify_boundary_point(2.06, 0.0708, 0.05), PointClass::S);
        assert_eq!(classify_boundary_point(0.5, 0.0708, 0.05), PointClass::Unknown);
    }

    #[test]
    fn few_radii_are_unknown() {
        let f = Synthetic::wedge(1.0, [0.0, -1.0]).unwrap();
        let p = frequency_profile(&f, &flat(), &[0.1, 0.2, 0.3], &[]).unwrap();
        assert!(p.gamma_estimate.is_none());
        assert_eq!(p.classify(0.07, 0.05), PointClass::Unknown);
        assert!(frequency_profile(&f, &flat(), &[0.2, 0.1], &[]).is_err());
    }

    #[test]
    fn csv_format() {
        let f = Synthetic::wedge(1.0, [0.0, -1.0]).unwrap();
        let p = frequency_profile(&f, &flat(), &[0.1, 0.2, 0.3], &[2.0]).unwrap();
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "r,E,H,N,W2");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.1"));
    }

    #[test]
    fn r0_formula() {
        assert!((r0(0.2, 14.68, 2) - 0.1).abs() < 1e-12);
        assert!((r0(1.0, 20.19, 2) - (1.0 / (6.0 * 20.19f64)).sqrt()).abs() < 1e-12);
    }
}
