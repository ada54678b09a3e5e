//! Moduli of continuity, Dini integrals and the derived radial functions.

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;

/// Absolute tolerance used for every Dini-type integral.
pub const DINI_TOL: f64 = 1e-10;

/// Quadrature values above this are treated as divergent.
const DIVERGENCE_CAP: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub enum ModulusKind {
    Zero,
    /// `coef * r^exponent`
    Power { coef: f64, exponent: f64 },
    /// `coef * |log r|^(-beta)`, defined for `r < 1`
    LogPower { coef: f64, beta: f64 },
    Tabulated(Table),
}

/// Samples on a log grid, interpolated log-linearly. Optional derivative tables
/// (used by smoothed moduli) are interpolated linearly in `log r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    log_r: Vec<f64>,
    log_v: Vec<f64>,
    d1: Option<Vec<f64>>,
    d2: Option<Vec<f64>>,
}

impl Table {
    fn locate(&self, lt: f64) -> (usize, f64) {
        let n = self.log_r.len();
        let k = match self.log_r.binary_search_by(|v| v.total_cmp(&lt)) {
            Ok(k) => k.min(n - 2),
            Err(k) => k.clamp(1, n - 1) - 1,
        };
        let t = (lt - self.log_r[k]) / (self.log_r[k + 1] - self.log_r[k]);
        (k, t)
    }

    fn slope(&self, k: usize) -> f64 {
        (self.log_v[k + 1] - self.log_v[k]) / (self.log_r[k + 1] - self.log_r[k])
    }

    fn inside(&self, lt: f64) -> bool {
        lt >= self.log_r[0] && lt <= *self.log_r.last().unwrap()
    }

    fn log_value(&self, lt: f64) -> f64 {
        let (k, t) = self.locate(lt);
        self.log_v[k] + t * (self.log_v[k + 1] - self.log_v[k])
    }

    fn derivative(&self, r: f64, which: u8) -> f64 {
        let lt = r.ln();
        let v = self.log_value(lt).exp();
        let (k, t) = self.locate(lt);
        let table = if which == 1 { &self.d1 } else { &self.d2 };
        match table {
            Some(d) if self.inside(lt) => d[k] + t * (d[k + 1] - d[k]),
            _ => {
                let s = self.slope(k);
                if which == 1 {
                    v * s / r
                } else {
                    v * s * (s - 1.0) / (r * r)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Modulus {
    kind: ModulusKind,
    r_max: f64,
    smoothed: bool,
}

impl Modulus {
    pub fn zero(r_max: f64) -> Self {
        Modulus { kind: ModulusKind::Zero, r_max, smoothed: true }
    }

    pub fn power(coef: f64, exponent: f64, r_max: f64) -> Result<Self> {
        if !(coef >= 0.0 && exponent > 0.0 && r_max > 0.0) {
            return invalid(format!("power modulus needs coef >= 0, exponent > 0, r_max > 0 (got {coef}, {exponent}, {r_max})"));
        }
        let smoothed = exponent <= 1.0;
        Ok(Modulus { kind: ModulusKind::Power { coef, exponent }, r_max, smoothed })
    }

    pub fn log_power(coef: f64, beta: f64, r_max: f64) -> Result<Self> {
        if !(coef > 0.0 && beta > 0.0 && r_max > 0.0 && r_max < 1.0) {
            return invalid("log-power modulus needs coef > 0, beta > 0 and 0 < r_max < 1");
        }
        let mut m = Modulus { kind: ModulusKind::LogPower { coef, beta }, r_max, smoothed: false };
        m.smoothed = m.satisfies_regularity(400);
        Ok(m)
    }

    /// Samples `(r_k, v_k)` with increasing positive radii and positive nondecreasing values.
    pub fn tabulated(r: &[f64], v: &[f64], r_max: f64) -> Result<Self> {
        if r.len() < 2 || r.len() != v.len() {
            return invalid("tabulated modulus needs at least two (r, value) pairs");
        }
        if r.windows(2).any(|w| w[1] <= w[0]) || r[0] <= 0.0 {
            return invalid("tabulated radii must be positive and strictly increasing");
        }
        if v.iter().any(|x| *x <= 0.0) || v.windows(2).any(|w| w[1] < w[0]) {
            return invalid("tabulated values must be positive and nondecreasing");
        }
        let table = Table {
            log_r: r.iter().map(|x| x.ln()).collect(),
            log_v: v.iter().map(|x| x.ln()).collect(),
            d1: None,
            d2: None,
        };
        Ok(Modulus { kind: ModulusKind::Tabulated(table), r_max, smoothed: false })
    }

    pub fn kind(&self) -> &ModulusKind {
        &self.kind
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ModulusKind::Zero)
    }

    /// Whether the regularity bounds needed by `alpha_of_sigma` are known to hold.
    pub fn is_smoothed(&self) -> bool {
        self.smoothed
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        if matches!(self.kind, ModulusKind::LogPower { .. }) {
            self.smoothed = self.satisfies_regularity(400);
        }
        self
    }

    /// Value at `r = exp(lt)`; stays finite for arbitrarily negative `lt`.
    pub fn value_log(&self, lt: f64) -> f64 {
        match &self.kind {
            ModulusKind::Zero => 0.0,
            ModulusKind::Power { coef, exponent } => coef * (exponent * lt).exp(),
            ModulusKind::LogPower { coef, beta } => {
                if lt >= 0.0 {
                    f64::INFINITY
                } else {
                    coef * (-lt).powf(-beta)
                }
            }
            ModulusKind::Tabulated(t) => t.log_value(lt).exp(),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            self.value_log(r.ln())
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            ModulusKind::Zero => 0.0,
            ModulusKind::Power { coef, exponent } => coef * exponent * r.powf(exponent - 1.0),
            ModulusKind::LogPower { coef, beta } => {
                let l = -r.ln();
                coef * beta * l.powf(-beta - 1.0) / r
            }
            ModulusKind::Tabulated(t) => t.derivative(r, 1),
        }
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            ModulusKind::Zero => 0.0,
            ModulusKind::Power { coef, exponent } => {
                coef * exponent * (exponent - 1.0) * r.powf(exponent - 2.0)
            }
            ModulusKind::LogPower { coef, beta } => {
                let l = -r.ln();
                coef * beta * l.powf(-beta - 2.0) * (beta + 1.0 - l) / (r * r)
            }
            ModulusKind::Tabulated(t) => t.derivative(r, 2),
        }
    }

    fn satisfies_regularity(&self, n: usize) -> bool {
        let r = regularity_report_grid(self, None, n, self.r_max * 1e-12);
        r.ratio_nonincreasing && r.d1_bound && r.d2_bound
    }
}

/// Result of a Dini-type quadrature on `(0, r]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiniValue {
    pub value: f64,
    pub error: f64,
    pub divergent: bool,
}

impl DiniValue {
    pub fn finite(&self) -> bool {
        !self.divergent
    }

    fn divergent() -> Self {
        DiniValue { value: f64::INFINITY, error: f64::INFINITY, divergent: true }
    }
}

/// `∫_0^∞ g(s) ds` for a nonnegative integrand, integrated over dyadic chunks.
/// A geometric tail is extrapolated from the last chunk ratios; ratios that do not
/// fall below one flag divergence.
fn half_line_integral(g: impl Fn(f64) -> f64, tol: f64, scale: f64) -> DiniValue {
    const MAX_CHUNKS: usize = 62;
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut chunks: Vec<f64> = Vec::with_capacity(MAX_CHUNKS);
    let mut a = 0.0;
    let mut b = scale.max(1.0);
    for k in 0..MAX_CHUNKS {
        let r = integrate(&g, a, b, tol / 256.0, 1e-13);
        if !r.value.is_finite() {
            return DiniValue::divergent();
        }
        sum += r.value;
        err += r.error;
        chunks.push(r.value.abs());
        if sum > DIVERGENCE_CAP {
            return DiniValue::divergent();
        }
        if k >= 3 {
            let c = chunks[k];
            let q = if chunks[k - 1] > 0.0 { c / chunks[k - 1] } else { 0.0 };
            let q_prev = if chunks[k - 2] > 0.0 { chunks[k - 1] / chunks[k - 2] } else { 0.0 };
            if c == 0.0 || (c < tol * 1e-3 && q < 0.9) {
                let tail = if q < 1.0 { c * q / (1.0 - q) } else { 0.0 };
                return DiniValue { value: sum + tail, error: err + tail.abs(), divergent: false };
            }
            if k >= 12 && (0.999..1.05).contains(&q) && (0.999..1.05).contains(&q_prev) {
                return DiniValue::divergent();
            }
            if k == MAX_CHUNKS - 1 {
                if q < 0.999 {
                    let tail = c * q / (1.0 - q);
                    let drift = (q - q_prev).abs() / (1.0 - q).powi(2) * c;
                    return DiniValue { value: sum + tail, error: err + drift, divergent: false };
                }
                return DiniValue::divergent();
            }
        }
        a = b;
        b *= 2.0;
    }
    DiniValue::divergent()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn check_radius(sigma: &Modulus, r: f64) -> Result<()> {
    if !(r >= 0.0) || r > sigma.r_max * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { what: "r", value: r, lo: 0.0, hi: sigma.r_max });
    }
    Ok(())
}

/// `𝒟^j` evaluated at `r = exp(lt)` through the single-integral form
/// `∫_0^∞ σ(r e^{-s}) s^{j-1}/(j-1)! ds`.
fn iterated_at_log(sigma: &Modulus, lt: f64, j: u32, tol: f64) -> DiniValue {
    if j == 0 {
        let v = sigma.value_log(lt);
        return DiniValue { value: v, error: 0.0, divergent: !v.is_finite() };
    }
    let norm = factorial(j - 1);
    let p = (j - 1) as i32;
    half_line_integral(|s| sigma.value_log(lt - s) * s.powi(p) / norm, tol, lt.abs())
}

/// Iterated Dini integral `𝒟_σ^j(r)`; `j = 0` returns `σ(r)`.
pub fn iterated_dini(sigma: &Modulus, r: f64, j: u32) -> Result<DiniValue> {
    check_radius(sigma, r)?;
    if r == 0.0 {
        return Ok(DiniValue { value: 0.0, error: 0.0, divergent: false });
    }
    Ok(iterated_at_log(sigma, r.ln(), j, DINI_TOL))
}

/// `∫_0^r 𝒟_σ^j(t) |log t|^eps / t dt`.
pub fn log_weighted_dini(sigma: &Modulus, r: f64, j: u32, eps: f64) -> Result<DiniValue> {
    check_radius(sigma, r)?;
    if eps < 0.0 {
        return invalid("log weight must be nonnegative");
    }
    if r == 0.0 {
        return Ok(DiniValue { value: 0.0, error: 0.0, divergent: false });
    }
    let lr = r.ln();
    let inner_failed = std::cell::Cell::new(false);
    let v = half_line_integral(
        |s| {
            let lt = lr - s;
            let d = iterated_at_log(sigma, lt, j, DINI_TOL * 1e-2);
            if d.divergent {
                inner_failed.set(true);
                return 0.0;
            }
            let w = if eps == 0.0 { 1.0 } else { lt.abs().powf(eps) };
            d.value * w
        },
        DINI_TOL,
        1.0,
    );
    if inner_failed.get() {
        return Ok(DiniValue::divergent());
    }
    Ok(v)
}

/// Depth `j >= 1` with zero weight gives `𝒟^j(r)`; a positive weight is applied to the
/// outermost integration, so `(j, eps)` returns `∫_0^r 𝒟^{j-1}(t)|log t|^eps/t dt`.
/// Depth 0 returns the weighted integral of `σ` itself.
pub fn dini_integral(sigma: &Modulus, r: f64, depth: u32, log_weight: f64) -> Result<DiniValue> {
    if depth == 0 {
        log_weighted_dini(sigma, r, 0, log_weight)
    } else if log_weight == 0.0 {
        iterated_dini(sigma, r, depth)
    } else {
        log_weighted_dini(sigma, r, depth - 1, log_weight)
    }
}

/// Finiteness of `∫_0^R f|log r|^{n+eps}/r` and of `∫_0^R 𝒟_f^n |log r|^eps/r`.
pub fn check_alpha_dini_equivalence(f: &Modulus, n: u32, eps: f64, r: f64) -> Result<(bool, bool)> {
    if n < 1 {
        return invalid("n must be at least 1");
    }
    let a = log_weighted_dini(f, r, 0, n as f64 + eps)?;
    let b = log_weighted_dini(f, r, n, eps)?;
    Ok((a.finite(), b.finite()))
}

/// Outcome of checking the regularity bounds on a log grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityReport {
    pub dominates: bool,
    pub ratio_nonincreasing: bool,
    pub d1_bound: bool,
    pub d2_bound: bool,
    pub min_ratio_to_input: f64,
    pub max_ratio_to_input: f64,
}

impl RegularityReport {
    pub fn all(&self) -> bool {
        self.dominates && self.ratio_nonincreasing && self.d1_bound && self.d2_bound
    }
}

fn regularity_report_grid(h: &Modulus, f: Option<&Modulus>, n: usize, r_lo: f64) -> RegularityReport {
    let tol = 1e-9;
    let (la, lb) = (r_lo.ln(), h.r_max.ln());
    let mut rep = RegularityReport {
        dominates: true,
        ratio_nonincreasing: true,
        d1_bound: true,
        d2_bound: true,
        min_ratio_to_input: f64::INFINITY,
        max_ratio_to_input: 0.0,
    };
    let mut prev_ratio = f64::INFINITY;
    for k in 0..n {
        let r = (la + (lb - la) * k as f64 / (n - 1) as f64).exp();
        let v = h.value(r);
        if let Some(f) = f {
            let fv = f.value(r);
            if v < fv * (1.0 - tol) {
                rep.dominates = false;
            }
            if fv > 0.0 {
                rep.min_ratio_to_input = rep.min_ratio_to_input.min(v / fv);
                rep.max_ratio_to_input = rep.max_ratio_to_input.max(v / fv);
            }
        }
        let ratio = v / r;
        if ratio > prev_ratio * (1.0 + tol) {
            rep.ratio_nonincreasing = false;
        }
        prev_ratio = ratio;
        if h.derivative(r).abs() > 2.0 * v / r * (1.0 + tol) {
            rep.d1_bound = false;
        }
        if h.second_derivative(r).abs() > 4.0 * v / (r * r) * (1.0 + tol) {
            rep.d2_bound = false;
        }
    }
    rep
}

/// Checks `h ≥ f`, `h/r` nonincreasing and the two derivative bounds on a
/// 1000-point log grid spanning twelve decades below `r_max`.
pub fn regularity_report(h: &Modulus, f: &Modulus) -> RegularityReport {
    regularity_report_grid(h, Some(f), 1000, h.r_max * 1e-12)
}

const SMOOTH_PER_OCTAVE: usize = 64;
const SMOOTH_OCTAVES: usize = 42;

/// Regularized modulus: `h1(r) = r sup_{[r,R]} f(t)/t`, followed by two passes of
/// `h ↦ 2∫_{r/2}^r h(t)/t dt`. Derivatives are tabulated from the closed forms of
/// the averaging passes.
pub fn smooth_modulus(f: &Modulus) -> Result<Modulus> {
    if f.is_zero() {
        return Ok(Modulus::zero(f.r_max));
    }
    let k = SMOOTH_PER_OCTAVE;
    let n = (SMOOTH_OCTAVES + 2) * k + 1;
    let big_r = f.r_max;
    let lr: Vec<f64> = (0..n)
        .map(|i| big_r.ln() + (i as f64 - (n - 1) as f64) / k as f64 * std::f64::consts::LN_2)
        .collect();
    let r: Vec<f64> = lr.iter().map(|x| x.exp()).collect();
    let g: Vec<f64> = (0..n).map(|i| f.value_log(lr[i]) / r[i]).collect();
    if g.iter().any(|x| !x.is_finite()) {
        return invalid("modulus is not finite on its domain");
    }
    let mut sup = vec![0.0; n];
    let mut run = 0.0f64;
    for i in (0..n).rev() {
        run = run.max(g[i]);
        sup[i] = run;
    }
    let h1: Vec<f64> = (0..n).map(|i| r[i] * sup[i]).collect();
    // h1(t)/t equals sup[m+1] on (r_m, r_{m+1}], so each cell integrates exactly
    let mut p = vec![0.0; n];
    for m in 0..n - 1 {
        p[m + 1] = p[m] + sup[m + 1] * (r[m + 1] - r[m]);
    }
    let mut h2 = vec![f64::NAN; n];
    for i in k..n {
        h2[i] = 2.0 * (p[i] - p[i - k]);
    }
    let delta = std::f64::consts::LN_2 / k as f64;
    let mut h = vec![f64::NAN; n];
    let mut d1 = vec![f64::NAN; n];
    let mut d2 = vec![f64::NAN; n];
    for i in 2 * k..n {
        // Simpson over one octave in log r
        let mut s = h2[i - k] + h2[i];
        for (j, v) in h2[i - k + 1..i].iter().enumerate() {
            s += if j % 2 == 0 { 4.0 * v } else { 2.0 * v };
        }
        h[i] = 2.0 * s * delta / 3.0;
        d1[i] = 2.0 / r[i] * (h2[i] - h2[i - k]);
        d2[i] = 2.0 / (r[i] * r[i])
            * (h2[i - k] - h2[i] + 2.0 * h1[i] - 4.0 * h1[i - k] + 2.0 * h1[i - 2 * k]);
    }
    let keep = 2 * k..n;
    let table = Table {
        log_r: lr[keep.clone()].to_vec(),
        log_v: h[keep.clone()].iter().map(|v| v.ln()).collect(),
        d1: Some(d1[keep.clone()].to_vec()),
        d2: Some(d2[keep].to_vec()),
    };
    Ok(Modulus { kind: ModulusKind::Tabulated(table), r_max: big_r, smoothed: true })
}

/// `α(r) = 3(rσ(r))' = 3(σ + rσ')`.
pub fn alpha_of_sigma(sigma: &Modulus, r: f64) -> Result<f64> {
    if !sigma.is_smoothed() {
        return Err(Error::NotSmoothed);
    }
    let s = sigma.value(r);
    let a = 3.0 * (s + r * sigma.derivative(r));
    let slack = 1e-9 * s + 1e-300;
    if a < 3.0 * s - slack || a > 6.0 * s + slack {
        return Err(Error::Hypothesis(format!("alpha({r}) = {a} leaves [3σ, 6σ] with σ = {s}")));
    }
    Ok(a)
}

/// `α'(r) = 3(2σ' + rσ'')`, checked against `|α'| ≤ 24σ/r`.
pub fn alpha_derivative(sigma: &Modulus, r: f64) -> Result<f64> {
    if !sigma.is_smoothed() {
        return Err(Error::NotSmoothed);
    }
    let d = 3.0 * (2.0 * sigma.derivative(r) + r * sigma.second_derivative(r));
    let bound = 24.0 * sigma.value(r) / r;
    if d.abs() > bound * (1.0 + 1e-9) + 1e-300 {
        return Err(Error::Hypothesis(format!("|alpha'({r})| = {} exceeds 24σ/r = {bound}", d.abs())));
    }
    Ok(d)
}

/// `Υ(r) = r² (∫_0^r σ0/t)^{1/2}`.
pub fn upsilon(sigma0: &Modulus, r: f64) -> Result<f64> {
    let d = iterated_dini(sigma0, r, 1)?;
    if d.divergent {
        return Err(Error::Hypothesis("σ0 is not Dini".into()));
    }
    Ok(r * r * d.value.sqrt())
}

/// Inverse of `Υ` by bisection to 1e-12 relative tolerance.
pub fn upsilon_inverse(sigma0: &Modulus, s: f64) -> Result<f64> {
    let top = upsilon(sigma0, sigma0.r_max)?;
    if !(s >= 0.0) || s > top * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { what: "s", value: s, lo: 0.0, hi: top });
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, sigma0.r_max);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if upsilon(sigma0, mid)? < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `θ(s) = (∫_0^{Υ^{-1}(s)} σ0/t)^{1/2}`.
pub fn theta(sigma0: &Modulus, s: f64) -> Result<f64> {
    let r = upsilon_inverse(sigma0, s)?;
    Ok(iterated_dini(sigma0, r, 1)?.value.sqrt())
}

/// `(Υ(r), θ(r))`.
pub fn upsilon_theta(sigma0: &Modulus, r: f64) -> Result<(f64, f64)> {
    Ok((upsilon(sigma0, r)?, theta(sigma0, r)?))
}

/// Admissibility of the pair `(σ, σ0)` on `(0, two_r]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiniReport {
    /// `∫_0^{2R} σ/t`
    pub dini_integral: DiniValue,
    /// `∫_0^{2R} σ0/t`
    pub sigma0_dini: DiniValue,
    /// `∫_0^{2R} (1/(rσ0(r))) ∫_0^r σ(t)/t dt dr`
    pub double_dini: DiniValue,
    /// `(r^{-m_d} σ0)' ≤ 0` on the sample grid
    pub growth_ok: bool,
    pub admissible: bool,
}

pub fn dini_report(sigma: &Modulus, sigma0: &Modulus, two_r: f64, m_d: f64) -> Result<DiniReport> {
    let dini = iterated_dini(sigma, two_r, 1)?;
    let s0 = iterated_dini(sigma0, two_r, 1)?;
    let lr = two_r.ln();
    let failed = std::cell::Cell::new(false);
    let double = half_line_integral(
        |s| {
            let lt = lr - s;
            let d = iterated_at_log(sigma, lt, 1, DINI_TOL * 1e-2);
            let den = sigma0.value_log(lt);
            if d.divergent || den <= 0.0 {
                failed.set(true);
                return 0.0;
            }
            d.value / den
        },
        DINI_TOL,
        1.0,
    );
    let double = if failed.get() { DiniValue::divergent() } else { double };
    let growth_ok = (0..400).all(|k| {
        let r = (lr - 28.0 * k as f64 / 399.0).exp();
        r * sigma0.derivative(r) <= m_d * sigma0.value(r) * (1.0 + 1e-12) + 1e-300
    });
    Ok(DiniReport {
        dini_integral: dini,
        sigma0_dini: s0,
        double_dini: double,
        growth_ok,
        admissible: s0.finite() && double.finite() && growth_ok,
    })
}

/// Constants relating `σ` and `σ0` and the checks they are meant to satisfy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NondegeneracyReport {
    /// `min σ(r)/r` over the sample grid
    pub c_sigma: f64,
    /// `σ(r)/r ≤ r^{-1}∫_0^r σ/t` on the grid
    pub ratio_below_average: bool,
    /// `(1/4)∫_0^{2R} σ/(tσ0)`
    pub c_sigma0: f64,
    /// `σ ≤ C_{σ0} ∫_0^r σ0/t` on the grid
    pub upper_ok: bool,
    /// `σ0(2R) / (m_d (2R)^{m_d})`
    pub c_tilde: f64,
    /// `∫_0^r σ0/t ≥ C̃ r^{m_d}` on the grid
    pub lower_ok: bool,
}

pub fn nondegeneracy_report(sigma: &Modulus, sigma0: &Modulus, two_r: f64, m_d: f64) -> Result<NondegeneracyReport> {
    let lr = two_r.ln();
    let c_sigma0 = 0.25
        * half_line_integral(
            |s| {
                let den = sigma0.value_log(lr - s);
                if den > 0.0 {
                    sigma.value_log(lr - s) / den
                } else {
                    0.0
                }
            },
            DINI_TOL,
            1.0,
        )
        .value;
    let c_tilde = sigma0.value(two_r) / (m_d * two_r.powf(m_d));
    let mut rep = NondegeneracyReport {
        c_sigma: f64::INFINITY,
        ratio_below_average: true,
        c_sigma0,
        upper_ok: true,
        c_tilde,
        lower_ok: true,
    };
    for k in 0..60 {
        let r = two_r * (1e-6f64).powf(k as f64 / 59.0);
        let s = sigma.value(r);
        rep.c_sigma = rep.c_sigma.min(s / r);
        let avg = iterated_dini(sigma, r, 1)?.value;
        if s > avg * (1.0 + 1e-8) {
            rep.ratio_below_average = false;
        }
        let d0 = iterated_dini(sigma0, r, 1)?.value;
        if s > c_sigma0 * d0 * (1.0 + 1e-8) {
            rep.upper_ok = false;
        }
        if d0 < c_tilde * r.powf(m_d) * (1.0 - 1e-8) {
            rep.lower_ok = false;
        }
    }
    Ok(rep)
}
