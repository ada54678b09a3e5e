//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fblab::config::RunConfig;
use fblab::epiperimetric::*;
use fblab::frequency::{frequency_profile, radii_schedule, Center};
use fblab::field::Synthetic;
use fblab::geometry::BoundaryChart;
use fblab::moduli::Modulus;
use fblab::reference::bessel_zero;
use fblab::run::{run, Check, RunReport};

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

fn random_trace(rng: &mut ChaCha8Rng, d: u32, setting: Setting, modes: usize) -> SphericalTrace {
    let ms = (0..modes)
        .map(|k| {
            let a = rng.random_range(-2.0..2.0);
            match setting {
                Setting::Half => Mode::half(k as u32 + 1, a),
                Setting::Full if k % 2 == 0 => Mode::cos(k as u32 / 2, a),
                Setting::Full => Mode::sin(k as u32 / 2 + 1, a),
            }
        })
        .collect();
    SphericalTrace::new(d, setting, ms)
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(2..=6u32);
        let gamma = rng.random_range(1.0..=2.0);
        let eps = rng.random_range(0.0..0.5);
        let rho = rng.random_range(0.05..1.0);
        let tr = random_trace(&mut rng, d, Setting::Half, 16);
        let n2 = tr.norm2();
        let g = gain_harmonic_check(d, gamma, &tr, eps).unwrap();
        worst = worst.max(rel(g.lhs, g.rhs_corrected));
        let wz = weiss_homogeneous(d, gamma, &tr).unwrap();
        let wh = weiss_harmonic_extension(d, gamma, &tr).unwrap();
        worst = worst.max(rel(harmonic_gain(d, gamma, &tr).unwrap(), wh - wz));
        let lhs = weiss_rescaled_harmonic(d, gamma, rho, &tr).unwrap() - wz;
        let rhs = rho.powf(d as f64 + 2.0 * gamma - 2.0) * (wh - wz);
        worst = worst.max((lhs - rhs).abs() / (1.0 + n2));
        // a homogeneous function has no radial part: W̃ equals the slice functional over d+2γ-2
        worst = worst.max(rel(slice_functional(d, gamma, &tr) / (d as f64 + 2.0 * gamma - 2.0), wz));
    }
    Outcome { pass: worst <= 1e-12, detail: format!("100 instances, worst relative error {worst:.2e}") }
}

fn quadrature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = PolarQuadrature::default();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let setting = if k % 2 == 0 { Setting::Half } else { Setting::Full };
        let tr = random_trace(&mut rng, 2, setting, 8);
        let gamma = rng.random_range(1.0..=2.0);
        let rho = rng.random_range(0.2..1.0);
        let z = Homogeneous { trace: &tr, gamma };
        let h = Harmonic { trace: &tr };
        let r = Rescaled { inner: &h, gamma, rho };
        worst = worst.max(rel(weiss_direct(&z, gamma, setting, &q), weiss_homogeneous(2, gamma, &tr).unwrap()));
        worst = worst.max(rel(weiss_direct(&h, gamma, setting, &q), weiss_harmonic_extension(2, gamma, &tr).unwrap()));
        worst = worst.max(rel(weiss_direct(&r, gamma, setting, &q), weiss_rescaled_harmonic(2, gamma, rho, &tr).unwrap()));
        for w in [&z as &dyn PolarFn, &h, &r] {
            let s = slicing_decomposition(w, gamma, setting, &q);
            worst = worst.max(rel(s.total, s.direct));
        }
    }
    Outcome { pass: worst <= 1e-6, detail: format!("20 traces, worst relative error {worst:.2e}") }
}

fn epiperimetric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for (setting, gamma) in [(Setting::Half, 1.0), (Setting::Half, 2.0), (Setting::Full, 1.0)] {
        let (mut ok, mut trivial) = (0, 0);
        for k in 0..100 {
            let n = rng.random_range(1..=4);
            let z = random_segregated_trace(&mut rng, setting, n, 2048);
            match build_epi_competitor(&z, gamma) {
                Ok(c) if c.trivial => trivial += 1,
                Ok(c) if c.weiss_w <= (1.0 - c.eps_target) * c.weiss_z + 1e-9 * c.eps_target * c.weiss_z.abs() => ok += 1,
                Ok(c) => failures.push(format!("{setting:?} γ={gamma} #{k}: W(w)={} W(z)={}", c.weiss_w, c.weiss_z)),
                Err(e) => failures.push(format!("{setting:?} γ={gamma} #{k}: {e}")),
            }
        }
        counts.push(format!("{setting:?}/γ={gamma}: {ok} strict, {trivial} with W(z) <= 0"));
    }
    let c = epi_constants(2).unwrap();
    let mut detail = format!("{}; eps_bd {:.3e}, eps_int {:.3e}", counts.join(", "), c.eps_bd, c.eps_int);
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; {} failures, first: {f}", failures.len()));
    }
    Outcome { pass: failures.is_empty() && c.eps_bd > 0.0 && c.eps_int > 0.0, detail }
}

fn constants() -> Outcome {
    let c = epi_constants(2).unwrap();
    let q2 = 2.0 / 3.0 + 3f64.sqrt() / (2.0 * PI);
    let d0 = delta_d(0.0, 2).unwrap();
    let pass = (c.q * c.q - q2).abs() <= 1e-4 && (c.delta - 0.0708).abs() <= 1e-3 && d0 == 1.0;
    Outcome { pass, detail: format!("q2² {:.6} (closed form {q2:.6}), δ₂ {:.5}, δ(0, 2) {d0}", c.q * c.q, c.delta) }
}

fn disk(n: usize, grid: u32, points: &str) -> RunReport {
    let text = format!("solver.n = {n}\ngrid.n = {grid}\nanalysis.points = {points}\n");
    let cfg = RunConfig::parse(&text).unwrap();
    let t = Instant::now();
    let r = run(&cfg).unwrap_or_else(|e| panic!("disk N={n} h=1/{grid}: {e}")).report;
    eprintln!("  disk N={n} h=1/{grid}: {:.1} s", t.elapsed().as_secs_f64());
    r
}

fn checks<'a>(r: &'a RunReport, pred: impl Fn(&str) -> bool + 'a) -> impl Iterator<Item = &'a Check> + 'a {
    r.checks.iter().filter(move |c| pred(&c.name))
}

fn all_pass<'a>(cs: impl Iterator<Item = &'a Check>) -> (bool, usize, Vec<String>) {
    let (mut pass, mut n, mut bad) = (true, 0, Vec::new());
    for c in cs {
        n += 1;
        if !c.pass {
            pass = false;
            bad.push(c.to_string());
        }
    }
    (pass, n, bad)
}

fn join_failures(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.join(" | "))
    }
}

struct Runs {
    coarse: [RunReport; 2],
    mid: [RunReport; 2],
    fine: [RunReport; 2],
}

fn solver_references(runs: &Runs) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let j11 = bessel_zero(1.0, 1).unwrap();
    let j32 = bessel_zero(1.5, 1).unwrap();
    for (r, oracle) in runs.mid.iter().zip([2.0 * j11 * j11, 3.0 * j32 * j32]) {
        let s = r.solver.as_ref().unwrap();
        let (ok, _, _) = all_pass(checks(r, |n| n.starts_with("solver.")));
        pass &= ok;
        parts.push(format!(
            "N={} Σλ {:.3} vs {oracle:.3} ({:.2}%), residual {:.1e}",
            r.n,
            s.sum,
            100.0 * (s.sum - oracle).abs() / oracle,
            s.residuals.0.max(s.residuals.1)
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn structure(runs: &Runs) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for r in &runs.mid {
        let i = r.interface.as_ref().unwrap();
        let (ok, _, bad) = all_pass(checks(r, |n| n.contains("angle") || n.starts_with("interface.")));
        pass &= ok;
        let junctions: Vec<String> = i.junction_angles.iter().map(|a| a.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/")).collect();
        let contact = i.contact_angles.iter().copied().fold(0.0, f64::max);
        if r.n >= 3 {
            pass &= !i.junction_angles.is_empty();
        }
        pass &= i.contact_angles.len() == r.n;
        parts.push(format!("N={} junctions [{}], {} contacts max {contact:.2}°{}", r.n, junctions.join(", "), i.contact_angles.len(), join_failures(&bad)));
    }
    for (c, m) in runs.coarse.iter().zip(&runs.mid) {
        let (a, b) = (c.interface.as_ref().unwrap().free_boundary_points, m.interface.as_ref().unwrap().free_boundary_points);
        pass &= a == b && b == m.n;
        parts.push(format!("N={} F_∂D count {a} -> {b}", m.n));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn synthetic_frequency() -> f64 {
    let flat = || Center::Boundary(BoundaryChart::flat(Modulus::zero(2.0), 1.0).unwrap());
    let radii = radii_schedule(0.05, 0.45, 8).unwrap();
    let cases = [
        (Synthetic::wedge(1.3, [0.0, -1.0]).unwrap(), flat(), 1.0),
        (Synthetic::boundary_pair(0.7, [0.0, -1.0], [1.0, 0.0]).unwrap(), flat(), 2.0),
        (Synthetic::half_plane_sectors(3, 1.0, [0.0, -1.0]).unwrap(), flat(), 3.0),
        (Synthetic::plane_sectors(1.5, 1.0, 0.3).unwrap(), Center::Interior([0.0, 0.0]), 1.5),
        (Synthetic::plane_sectors(2.0, 2.0, 0.0).unwrap(), Center::Interior([0.0, 0.0]), 2.0),
    ];
    let mut worst: f64 = 0.0;
    for (f, c, g) in cases {
        let p = frequency_profile(&f, &c, &radii, &[g]).unwrap();
        for s in &p.samples {
            worst = worst.max((s.frequency - g).abs());
        }
    }
    worst
}

fn frequency(runs: &Runs) -> Outcome {
    let syn = synthetic_frequency();
    let mut pass = syn <= 1e-6;
    let mut parts = vec![format!("synthetic max |N - γ| {syn:.1e}")];
    for r in &runs.fine {
        let (ok, n, bad) = all_pass(checks(r, |n| n.ends_with(".class") || n.ends_with(".gamma") || n.ends_with("monotonicity_violation") || n == "fitted.c_a"));
        pass &= ok && !r.points.is_empty();
        let gammas: Vec<String> = r
            .points
            .iter()
            .map(|p| format!("{} {:.3}", p.point.kind, p.profile.gamma_estimate.unwrap_or(f64::NAN)))
            .collect();
        let c_a = r.fitted.as_ref().map(|f| f.c_a).unwrap_or(f64::NAN);
        parts.push(format!("N={} h=1/{:.0}: {}; C {c_a:.3}; {n} checks{}", r.n, 1.0 / r.h, gammas.join(", "), join_failures(&bad)));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn rates(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &runs.mid {
        let (ok, n, bad) = all_pass(checks(r, |n| n.ends_with("rate_exponent") || n == "fitted.cauchy_spread"));
        let rated = r.points.iter().filter(|p| p.rate.is_some()).count();
        pass &= ok && n > rated && rated == r.points.len() && rated > 0;
        let exps: Vec<String> = r.points.iter().filter_map(|p| p.rate.as_ref()).map(|x| format!("{:.2}", x.exponent)).collect();
        let f = r.fitted.as_ref().unwrap();
        parts.push(format!(
            "N={}: exponents [{}], Cauchy constant {:.2e}..{:.2e} (spread {:.2}){}",
            r.n,
            exps.join(" "),
            f.c_cauchy.0,
            f.c_cauchy.1,
            f.c_cauchy.1 / f.c_cauchy.0,
            join_failures(&bad)
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn cleanup(runs: &Runs) -> Outcome {
    let mut pass = true;
    let (mut analyzed, mut matched, mut z1, mut linear) = (0, 0, 0, 0);
    let mut worst_ratio = f64::INFINITY;
    let mut bad = Vec::new();
    for r in runs.mid.iter().chain(&runs.fine) {
        for p in &r.points {
            analyzed += 1;
            match &p.cleanup {
                Some(c) if c.matches() => matched += 1,
                _ => bad.push(format!("N={} h=1/{:.0} {} at ({:.3}, {:.3})", r.n, 1.0 / r.h, p.point.kind, p.point.point[0], p.point.point[1])),
            }
            if p.class == fblab::frequency::PointClass::Z1 {
                z1 += 1;
                let lb = p.cleanup.as_ref().and_then(|c| c.linear.as_ref());
                if let (Some(lb), Some(a)) = (lb, p.amplitude()) {
                    worst_ratio = worst_ratio.min(lb.c / a);
                }
                if p.linear_bound_holds() == Some(true) {
                    linear += 1;
                } else {
                    bad.push(format!("N={} h=1/{:.0} linear bound at ({:.3}, {:.3})", r.n, 1.0 / r.h, p.point.point[0], p.point.point[1]));
                }
            }
        }
    }
    pass &= analyzed > 0 && matched == analyzed && z1 > 0 && linear == z1;
    Outcome {
        pass,
        detail: format!("{matched}/{analyzed} counts match, {linear}/{z1} Z1 points with c >= 0.25 a (worst c/a {worst_ratio:.3}){}", join_failures(&bad)),
    }
}

fn report(k: usize, name: &str, t: Instant, o: &Outcome) {
    println!("{} {k} {name}: {} ({:.1} s)", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut record = |k: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(k, name, t, &o);
        failed += !o.pass as usize;
    };
    record(1, "exact identities", &identities);
    record(2, "quadrature consistency", &quadrature);
    record(3, "epiperimetric inequalities", &epiperimetric);
    record(4, "constants", &constants);
    let t = Instant::now();
    let runs = Runs {
        coarse: [disk(2, 64, "none"), disk(3, 64, "none")],
        mid: [disk(2, 128, "auto"), disk(3, 128, "auto")],
        fine: [disk(2, 256, "auto"), disk(3, 256, "auto")],
    };
    eprintln!("  disk runs: {:.1} s", t.elapsed().as_secs_f64());
    record(5, "solver references", &|| solver_references(&runs));
    record(6, "structure", &|| structure(&runs));
    record(7, "frequency", &|| frequency(&runs));
    record(8, "blow-up rates", &|| rates(&runs));
    record(9, "clean-up", &|| cleanup(&runs));
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
