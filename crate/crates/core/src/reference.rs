//! Analytic reference values: Bessel zeros and the Dirichlet eigenvalues they determine.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// `J_ν(x)·Γ(ν+1)·(2/x)^ν`, an entire function of `x` with the same positive zeros as `J_ν`.
fn bessel_reduced(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * (k as f64 + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `k`-th positive zero of `J_ν` (`k ≥ 1`) by sign scan and bisection.
pub fn bessel_zero(nu: f64, k: usize) -> Result<f64> {
    if k == 0 || !(nu > -1.0) {
        return invalid("bessel_zero needs k >= 1 and nu > -1");
    }
    if nu > 20.0 || k > 8 {
        return invalid("bessel_zero is limited to nu <= 20 and k <= 8 (power series range)");
    }
    let step = 0.01;
    let mut found = 0;
    let mut x = step;
    let mut prev = bessel_reduced(nu, x);
    while x < 60.0 {
        let next = bessel_reduced(nu, x + step);
        if prev == 0.0 || prev.signum() != next.signum() {
            found += 1;
            if found == k {
                let (mut a, mut b) = (x, x + step);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if bessel_reduced(nu, m).signum() == bessel_reduced(nu, a).signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-15 * b {
                        break;
                    }
                }
                return Ok(0.5 * (a + b));
            }
        }
        prev = next;
        x += step;
    }
    invalid("zero not found in range")
}

/// First Dirichlet eigenvalue of a circular sector of the given opening angle and radius.
pub fn sector_eigenvalue(opening: f64, radius: f64) -> Result<f64> {
    if !(opening > 0.0 && opening <= 2.0 * PI && radius > 0.0) {
        return invalid("sector needs opening in (0, 2π] and positive radius");
    }
    let j = bessel_zero(PI / opening, 1)?;
    Ok((j / radius).powi(2))
}

/// Reference `Σλ` for the partition of a disk into `n` equal sectors (`n = 1`: the disk).
pub fn disk_partition_sum(n: usize, radius: f64) -> Result<f64> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if n == 1 {
        return Ok((bessel_zero(0.0, 1)? / radius).powi(2));
    }
    Ok(n as f64 * sector_eigenvalue(2.0 * PI / n as f64, radius)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_zeros() {
        assert!((bessel_zero(0.0, 1).unwrap() - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_zero(1.0, 1).unwrap() - 3.831_705_970_207_512).abs() < 1e-12);
        assert!((bessel_zero(0.0, 2).unwrap() - 5.520_078_110_286_311).abs() < 1e-12);
        // J_{3/2} zeros solve tan x = x
        let z = bessel_zero(1.5, 1).unwrap();
        assert!((z.tan() - z).abs() < 1e-9);
        assert!((z - 4.493_409_457_909_064).abs() < 1e-12);
    }

    #[test]
    fn partition_references() {
        assert!((disk_partition_sum(2, 1.0).unwrap() - 29.3640).abs() < 1e-3);
        assert!((disk_partition_sum(3, 1.0).unwrap() - 60.5719).abs() < 1e-3);
        assert!((disk_partition_sum(1, 1.0).unwrap() - crate::solver::J01_SQ).abs() < 1e-10);
        assert!((sector_eigenvalue(PI, 2.0).unwrap() - 3.831_705_970_207_512f64.powi(2) / 4.0).abs() < 1e-10);
        assert!(bessel_zero(1.0, 0).is_err());
    }
}
