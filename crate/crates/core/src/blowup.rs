//! Homogeneous rescalings, blow-up profile fits and convergence rates.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::frequency::{angular_rule, min_reliable_radius, sampling};
use crate::geometry::{composite_gauss, Point};
use crate::moduli::{dini_integral, Modulus};
use crate::par;

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Uniform angular nodes for traces on `∂B₁`.
const TRACE_NODES: usize = 720;

/// A rescaling `u_i(x₀ + r x)/r^γ` sampled on the unit ball and on `∂B₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallSamples {
    pub r: f64,
    pub gamma: f64,
    /// Quadrature nodes and weights on `B₁`.
    pub nodes: Vec<(Point, f64)>,
    /// `values[i][k]` is component `i` at node `k`.
    pub values: Vec<Vec<f64>>,
    /// Uniform nodes on `∂B₁` (weights `2π/M`) and the traces there.
    pub trace_nodes: Vec<Point>,
    pub traces: Vec<Vec<f64>>,
}

impl BallSamples {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.nodes.iter().zip(f.iter().zip(g)).map(|((_, w), (a, b))| w * a * b).sum()
    }

    /// `Σ_i ‖u_i‖²_{L²(B₁)}`
    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| self.inner(v, v)).sum()
    }

    /// `Σ_i ‖V_i‖²_{L²(∂B₁)}`
    pub fn trace_norm2(&self) -> f64 {
        let w = 2.0 * PI / self.trace_nodes.len() as f64;
        self.traces.iter().flatten().map(|v| w * v * v).sum()
    }

    /// Scale every value by `c` (linearity of the rescaling).
    pub fn scaled(mut self, c: f64) -> Self {
        self.values.iter_mut().flatten().for_each(|v| *v *= c);
        self.traces.iter_mut().flatten().for_each(|v| *v *= c);
        self
    }
}

/// Sample `u_i(x₀ + r x)/r^γ` on `B₁` with the polar rule used for frequencies.
pub fn rescale(field: &dyn Field, x0: Point, r: f64, gamma: f64) -> Result<BallSamples> {
    if !(r > 0.0) {
        return invalid("rescaling radius must be positive");
    }
    if let Some(h) = field.resolution() {
        if r < min_reliable_radius(h) * (1.0 - 1e-12) {
            return Err(Error::OutOfRange { what: "rescaling radius", value: r, lo: min_reliable_radius(h), hi: f64::INFINITY });
        }
    }
    let to_global = |x: Point| [x0[0] + r * x[0], x0[1] + r * x[1]];
    let (n_r, n_t) = sampling(1.0, field.resolution().map(|h| h / r));
    let (rx, rw) = composite_gauss(n_r, 0.0, 1.0);
    let mut nodes = Vec::new();
    for (rho, wr) in rx.iter().zip(&rw) {
        let inside = |t: f64| field.inside(to_global([rho * t.cos(), rho * t.sin()]));
        for (t, wt) in angular_rule(inside, n_t, false) {
            nodes.push(([rho * t.cos(), rho * t.sin()], wr * wt * rho));
        }
    }
    let trace_nodes: Vec<Point> = (0..TRACE_NODES)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.5) / TRACE_NODES as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let scale = r.powf(-gamma);
    let eval = |pts: &mut dyn Iterator<Item = Point>| -> Result<Vec<Vec<f64>>> {
        let mut out = vec![Vec::new(); field.n()];
        for x in pts {
            let y = to_global(x);
            if field.inside(y) && !field.covers(y, 0.0) {
                return Err(Error::OutOfRange { what: "rescaling radius (leaves the grid)", value: r, lo: 0.0, hi: r });
            }
            for (i, o) in out.iter_mut().enumerate() {
                o.push(field.value(i, y) * scale);
            }
        }
        Ok(out)
    };
    let values = eval(&mut nodes.iter().map(|n| n.0))?;
    let traces = eval(&mut trace_nodes.iter().copied())?;
    Ok(BallSamples { r, gamma, nodes, values, trace_nodes, traces })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileKind {
    /// `a(−x·ν)⁺` on one component.
    Deg1,
    /// `a(x·e)^±(−x·ν)⁺` on two components with `e·ν = 0`.
    Deg2,
    /// `a(x·e)^±` on two components.
    InteriorDeg1,
}

impl ProfileKind {
    pub fn gamma(self) -> f64 {
        match self {
            ProfileKind::Deg2 => 2.0,
            _ => 1.0,
        }
    }
}

/// Homogeneous blow-up model.
#[derive(Clone, Debug, PartialEq)]
pub struct BlowupProfile {
    pub kind: ProfileKind,
    pub a: f64,
    /// Outward normal `ν(x₀)` (ignored for interior profiles).
    pub normal: Point,
    pub e: Option<Point>,
    /// `(j)` for degree one, `(j, k)` with `j` on the side `x·e < 0` otherwise.
    pub active: Vec<usize>,
}

impl BlowupProfile {
    /// Unit-amplitude shape of the parts on the sides `x·e < 0` and `x·e > 0`.
    fn shape(kind: ProfileKind, normal: Point, e: Point, x: Point) -> (f64, f64) {
        let g = match kind {
            ProfileKind::InteriorDeg1 => 1.0,
            _ => (-dot(x, normal)).max(0.0),
        };
        match kind {
            ProfileKind::Deg1 => (g, 0.0),
            _ => {
                let t = dot(x, e);
                ((-t).max(0.0) * g, t.max(0.0) * g)
            }
        }
    }

    pub fn value(&self, i: usize, x: Point) -> f64 {
        let e = self.e.unwrap_or([1.0, 0.0]);
        let (minus, plus) = Self::shape(self.kind, self.normal, e, x);
        if self.active.first() == Some(&i) {
            self.a * minus
        } else if self.active.get(1) == Some(&i) {
            self.a * plus
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileFit {
    pub profile: BlowupProfile,
    /// `Σ_i ‖u_i − P_i‖²_{L²(B₁)}`
    pub residual: f64,
    /// Residual relative to `Σ_i ‖u_i‖²`.
    pub relative: f64,
    /// Amplitude below `1e-8`.
    pub degenerate: bool,
    /// Best direction without the constraint `e·ν = 0` (degree two only).
    pub e_free: Option<Point>,
}

/// Best amplitude and residual for a fixed direction and assignment.
struct Trial {
    a: f64,
    residual: f64,
}

fn trial(s: &BallSamples, kind: ProfileKind, normal: Point, e: Point, active: &[usize], total: f64) -> Trial {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, (x, w)) in s.nodes.iter().enumerate() {
        let (m, p) = BlowupProfile::shape(kind, normal, e, *x);
        num += w * m * s.values[active[0]][k];
        den += w * m * m;
        if let Some(&j) = active.get(1) {
            num += w * p * s.values[j][k];
            den += w * p * p;
        }
    }
    if den <= 0.0 || num <= 0.0 {
        return Trial { a: 0.0, residual: total };
    }
    Trial { a: num / den, residual: total - num * num / den }
}

fn assignments(n: usize, kind: ProfileKind) -> Vec<Vec<usize>> {
    match kind {
        ProfileKind::Deg1 => (0..n).map(|j| vec![j]).collect(),
        _ => (0..n).flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| vec![j, k])).collect(),
    }
}

fn direction(t: f64) -> Point {
    [t.cos(), t.sin()]
}

/// Minimize `f` over the angle: coarse scan, then golden-section refinement around the best node.
fn minimize_angle(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let m = 72;
    let step = 2.0 * PI / m as f64;
    let (mut best, mut best_v) = (0.0, f64::INFINITY);
    for k in 0..m {
        let v = f(k as f64 * step);
        if v < best_v {
            best = k as f64 * step;
            best_v = v;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best - step, best + step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t);
    if v < best_v {
        (t, v)
    } else {
        (best, best_v)
    }
}

/// Least-squares fit of a blow-up model to a rescaled field.
pub fn fit_profile(s: &BallSamples, normal: Point, kind: ProfileKind) -> Result<ProfileFit> {
    let nn = normal[0].hypot(normal[1]);
    if !(nn > 0.0) {
        return invalid("normal must be nonzero");
    }
    let normal = [normal[0] / nn, normal[1] / nn];
    let need = if kind == ProfileKind::Deg1 { 1 } else { 2 };
    if s.n() < need {
        return invalid("not enough components for this profile kind");
    }
    let total = s.norm2();
    let candidates = assignments(s.n(), kind);
    let best_for = |e: Point| -> (Trial, usize) {
        let mut best = (Trial { a: 0.0, residual: f64::INFINITY }, 0);
        for (c, act) in candidates.iter().enumerate() {
            let t = trial(s, kind, normal, e, act, total);
            if t.residual < best.0.residual {
                best = (t, c);
            }
        }
        best
    };
    let tangent = [-normal[1], normal[0]];
    let (e, e_free) = match kind {
        ProfileKind::Deg1 => (None, None),
        ProfileKind::Deg2 => {
            let (t, _) = minimize_angle(|t| best_for(direction(t)).0.residual);
            (Some(tangent), Some(direction(t)))
        }
        ProfileKind::InteriorDeg1 => {
            let (t, _) = minimize_angle(|t| best_for(direction(t)).0.residual);
            (Some(direction(t)), None)
        }
    };
    let (t, c) = best_for(e.unwrap_or(tangent));
    let profile = BlowupProfile { kind, a: t.a, normal, e, active: candidates[c].clone() };
    Ok(ProfileFit {
        profile,
        residual: t.residual.max(0.0),
        relative: if total > 0.0 { t.residual.max(0.0) / total } else { 0.0 },
        degenerate: t.a < 1e-8,
        e_free,
    })
}

/// `Σ_i ‖u_i − P_i‖²_{L²(B₁)}`
pub fn l2_gap(s: &BallSamples, p: &BlowupProfile) -> f64 {
    let mut sum = 0.0;
    for i in 0..s.n() {
        for (k, (x, w)) in s.nodes.iter().enumerate() {
            let d = s.values[i][k] - p.value(i, *x);
            sum += w * d * d;
        }
    }
    sum
}

/// `max_i sup_{B₁} |u_i − P_i|` over the sample nodes and `∂B₁`.
pub fn linf_gap(s: &BallSamples, p: &BlowupProfile) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..s.n() {
        for (k, (x, _)) in s.nodes.iter().enumerate() {
            m = m.max((s.values[i][k] - p.value(i, *x)).abs());
        }
        for (k, x) in s.trace_nodes.iter().enumerate() {
            m = m.max((s.traces[i][k] - p.value(i, *x)).abs());
        }
    }
    m
}

/// Sup-norm gap between `u^{r,x₀,1}` and the degree-one profile fitted at that radius.
pub fn linfty_gap(field: &dyn Field, x0: Point, normal: Point, r: f64) -> Result<f64> {
    let s = rescale(field, x0, r, 1.0)?;
    let fit = fit_profile(&s, normal, ProfileKind::Deg1)?;
    Ok(linf_gap(&s, &fit.profile))
}

/// `‖f‖_∞^{d+2} / (Lip^d ‖f‖²_{L²})` in `d = 2`; bounded for Lipschitz `f` by interpolation.
pub fn interpolation_ratio(linf: f64, l2_sq: f64, lip: f64) -> f64 {
    linf.powi(4) / (lip * lip * l2_sq)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateSample {
    pub r: f64,
    pub a: f64,
    pub l2_gap: f64,
    pub linf_gap: f64,
    /// `∫₀^r σ₀(t)/t dt`
    pub dini: f64,
    pub fit_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CauchyStep {
    pub r1: f64,
    pub r2: f64,
    /// `‖V^{r₂} − V^{r₁}‖²_{L²(∂B₁)}`
    pub difference: f64,
    /// `∫_{r₁}^{r₂} σ₀(t)/t dt`
    pub dini: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub kind: ProfileKind,
    pub gamma: f64,
    /// Profile with amplitude extrapolated to `r → 0`.
    pub terminal: BlowupProfile,
    pub samples: Vec<RateSample>,
    /// Slope of `log L2_gap` against `log r`.
    pub exponent: f64,
    /// Slope of `log L2_gap` against `log ∫₀^r σ₀/t`.
    pub dini_exponent: f64,
    /// Slope of `log Linf_gap` against `log r`, and the interpolation prediction `dini_exponent/(d+2)` times the Dini decay.
    pub linf_exponent: f64,
    pub linf_predicted: f64,
    /// `‖V^{r_max}‖²_{L²(∂B₁)}`, the normalization standing in for `H(R₀)`.
    pub normalization: f64,
    /// Smallest `C` with `L2_gap ≤ C·norm·∫₀^r σ₀/t` on all samples.
    pub c_rate: f64,
    pub cauchy: Vec<CauchyStep>,
    /// Smallest `C` with each Cauchy difference `≤ C·norm·∫_{r₁}^{r₂} σ₀/t`.
    pub c_cauchy: f64,
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pairs.len() < 2 {
        return f64::INFINITY;
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    slope(&lx, &ly)
}

/// Convergence of the rescalings at `x₀` to their terminal blow-up profile.
pub fn blowup_rate(
    field: &dyn Field,
    x0: Point,
    normal: Point,
    radii: &[f64],
    gamma: f64,
    kind: ProfileKind,
    sigma0: &Modulus,
) -> Result<RateReport> {
    if (gamma - kind.gamma()).abs() > 1e-12 {
        return invalid("γ does not match the profile kind");
    }
    if radii.len() < 3 || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("blow-up rates need at least three increasing radii");
    }
    let samples = par::map(radii.len(), |k| rescale(field, x0, radii[k], gamma)).into_iter().collect::<Result<Vec<_>>>()?;
    let fits = par::map(samples.len(), |k| fit_profile(&samples[k], normal, kind)).into_iter().collect::<Result<Vec<_>>>()?;
    // amplitude extrapolated linearly in r; direction and assignment from the smallest radius
    let r: Vec<f64> = radii.to_vec();
    let a: Vec<f64> = fits.iter().map(|f| f.profile.a).collect();
    let s = slope(&r, &a);
    let mean_r = r.iter().sum::<f64>() / r.len() as f64;
    let mean_a = a.iter().sum::<f64>() / a.len() as f64;
    let mut terminal = fits[0].profile.clone();
    terminal.a = (mean_a - s * mean_r).max(0.0);
    let mut out = Vec::with_capacity(radii.len());
    for (k, smp) in samples.iter().enumerate() {
        let dini = dini_integral(sigma0, radii[k].min(sigma0.r_max()), 1, 0.0)?.value;
        out.push(RateSample {
            r: radii[k],
            a: a[k],
            l2_gap: l2_gap(smp, &terminal),
            linf_gap: linf_gap(smp, &terminal),
            dini,
            fit_residual: fits[k].residual,
        });
    }
    let normalization = samples.last().unwrap().trace_norm2();
    let gaps: Vec<f64> = out.iter().map(|s| s.l2_gap).collect();
    let dinis: Vec<f64> = out.iter().map(|s| s.dini).collect();
    let linf: Vec<f64> = out.iter().map(|s| s.linf_gap).collect();
    let exponent = log_slope(&r, &gaps);
    let dini_exponent = log_slope(&dinis, &gaps);
    let linf_exponent = log_slope(&r, &linf);
    let linf_predicted = log_slope(&r, &dinis) / 4.0;
    let c_rate = out
        .iter()
        .map(|s| if s.dini > 0.0 { s.l2_gap / (normalization * s.dini) } else if s.l2_gap > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    let w = 2.0 * PI / TRACE_NODES as f64;
    let mut cauchy = Vec::new();
    for k in 0..samples.len() - 1 {
        let (s1, s2) = (&samples[k], &samples[k + 1]);
        let difference: f64 = s1.traces.iter().zip(&s2.traces).flat_map(|(u, v)| u.iter().zip(v)).map(|(p, q)| w * (p - q) * (p - q)).sum();
        cauchy.push(CauchyStep { r1: radii[k], r2: radii[k + 1], difference, dini: out[k + 1].dini - out[k].dini });
    }
    let c_cauchy = cauchy
        .iter()
        .map(|c| if c.dini > 0.0 { c.difference / (normalization * c.dini) } else if c.difference > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(RateReport {
        kind,
        gamma,
        terminal,
        samples: out,
        exponent,
        dini_exponent,
        linf_exponent,
        linf_predicted,
        normalization,
        c_rate,
        cauchy,
        c_cauchy,
    })
}

impl RateReport {
    /// CSV with header `r,L2_gap,Linf_gap,dini_integral`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,L2_gap,Linf_gap,dini_integral\n");
        for s in &self.samples {
            out.push_str(&format!("{:.9},{:.12e},{:.12e},{:.12e}\n", s.r, s.l2_gap, s.linf_gap, s.dini));
        }
        out
    }
}

/// Profile normalizations in `d = 2`, from quadrature on `∂B₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaConstants {
    /// `(∫ x₂⁺ ds)^{−1/2}`
    pub printed_1: f64,
    /// `(∫ (x₂⁺)² ds)^{−1/2}`
    pub l2_1: f64,
    /// `2(∫ x₁⁺x₂⁺ ds)^{−1/2}`
    pub printed_2: f64,
    /// `(∫ (x₁ x₂⁺)² ds)^{−1/2}`
    pub l2_2: f64,
}

pub fn kappa_constants() -> KappaConstants {
    let (t, w) = composite_gauss(400, 0.0, PI);
    let int = |f: &dyn Fn(f64) -> f64| t.iter().zip(&w).map(|(t, w)| w * f(*t)).sum::<f64>();
    KappaConstants {
        printed_1: int(&|t| t.sin()).powf(-0.5),
        l2_1: int(&|t| t.sin().powi(2)).powf(-0.5),
        printed_2: 2.0 * int(&|t| t.cos().max(0.0) * t.sin()).powf(-0.5),
        l2_2: int(&|t| (t.cos() * t.sin()).powi(2)).powf(-0.5),
    }
}

/// Ratios `a / (κ√H_{x₀})` for the printed and the L²-normalized constants of a fitted profile.
pub fn normalization_ratios(a: f64, h_limit: f64, kind: ProfileKind) -> Result<(f64, f64)> {
    if !(h_limit > 0.0) {
        return Err(Error::Hypothesis("nondegeneracy: H_x0 must be positive".into()));
    }
    let k = kappa_constants();
    let (p, l) = match kind {
        ProfileKind::Deg1 => (k.printed_1, k.l2_1),
        ProfileKind::Deg2 => (k.printed_2, k.l2_2),
        ProfileKind::InteriorDeg1 => return invalid("normalization constants are defined for boundary profiles"),
    };
    let s = h_limit.sqrt();
    Ok((a / (p * s), a / (l * s)))
}
