//! Polyharmonic spline kernels and the radial derivative quantities needed to
//! apply second-order differential operators to a translated kernel.
//!
//! Two families are supported:
//!
//! * thin-plate splines, `phi(r) = r^k ln r` with even `k >= 4`;
//! * radial powers, `phi(r) = r^k` with odd `k >= 3`.
//!
//! For a center `A` and evaluation point `P` with `r = |P - A|`, the Hessian
//! of `phi_A(P) = phi(|P - A|)` is
//!
//! ```text
//! d2/dx_i dx_j phi_A(P) = delta_ij phi'(r)/r + (x_i - a_i)(x_j - a_j)/r^2 (phi''(r) - phi'(r)/r)
//! ```
//!
//! so every operator application only needs `phi`, `phi'/r` and
//! `phi'' - phi'/r`. All three vanish at `r = 0` for the admissible exponents,
//! and they are defined by that limit there.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{KansaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// Thin-plate spline `r^k ln r`.
    Tps,
    /// Radial power `r^k`.
    Rp,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Tps => f.write_str("TPS"),
            KernelFamily::Rp => f.write_str("RP"),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = KansaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tps" => Ok(KernelFamily::Tps),
            "rp" => Ok(KernelFamily::Rp),
            other => Err(KansaError::InvalidConfig(format!(
                "unknown kernel family {other:?} (expected TPS or RP)"
            ))),
        }
    }
}

/// The three radial quantities of a kernel at a given distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub phi: f64,
    /// `phi'(r) / r`
    pub d1_over_r: f64,
    /// `phi''(r) - phi'(r) / r`
    pub d2_minus_d1_over_r: f64,
}

impl RadialProfile {
    const ZERO: RadialProfile = RadialProfile {
        phi: 0.0,
        d1_over_r: 0.0,
        d2_minus_d1_over_r: 0.0,
    };
}

/// A polyharmonic spline with a validated `(family, k)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RadialKernel {
    family: KernelFamily,
    k: u32,
}

impl fmt::Display for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} k={}", self.family, self.k)
    }
}

impl RadialKernel {
    pub fn new(family: KernelFamily, k: u32) -> Result<Self> {
        let ok = match family {
            KernelFamily::Tps => k >= 4 && k.is_multiple_of(2),
            KernelFamily::Rp => k >= 3 && k % 2 == 1,
        };
        if ok {
            Ok(Self { family, k })
        } else {
            Err(KansaError::InvalidKernel { family, k })
        }
    }

    pub fn tps(k: u32) -> Result<Self> {
        Self::new(KernelFamily::Tps, k)
    }

    pub fn rp(k: u32) -> Result<Self> {
        Self::new(KernelFamily::Rp, k)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Evaluates `phi`, `phi'/r` and `phi'' - phi'/r` at once. Negative or
    /// zero `r` returns the limiting values at the origin.
    #[inline]
    pub fn profile(&self, r: f64) -> RadialProfile {
        if r <= 0.0 {
            return RadialProfile::ZERO;
        }
        let k = self.k as f64;
        // r^(k-2); k >= 3 so the exponent is a nonnegative integer.
        let rk2 = r.powi(self.k as i32 - 2);
        match self.family {
            KernelFamily::Tps => {
                let ln_r = r.ln();
                RadialProfile {
                    phi: rk2 * r * r * ln_r,
                    d1_over_r: rk2 * (k * ln_r + 1.0),
                    d2_minus_d1_over_r: rk2 * (k * (k - 2.0) * ln_r + 2.0 * k - 2.0),
                }
            }
            KernelFamily::Rp => RadialProfile {
                phi: rk2 * r * r,
                d1_over_r: k * rk2,
                d2_minus_d1_over_r: k * (k - 2.0) * rk2,
            },
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.profile(r).phi
    }

    pub fn phi_prime_over_r(&self, r: f64) -> f64 {
        self.profile(r).d1_over_r
    }

    pub fn phi_dd_minus_phi_prime_over_r(&self, r: f64) -> f64 {
        self.profile(r).d2_minus_d1_over_r
    }

    /// `phi_A(P) = phi(|P - A|)`.
    pub fn phi_at(&self, p: &[f64], a: &[f64]) -> f64 {
        self.phi(distance(p, a))
    }

    /// Second partial derivative of `phi_A` in the variables `x_i`, `x_j` of
    /// `P` (zero-based indices).
    pub fn hessian_entry(&self, p: &[f64], a: &[f64], i: usize, j: usize) -> f64 {
        assert_eq!(p.len(), a.len(), "point and center dimensions differ");
        assert!(i < p.len() && j < p.len(), "derivative index out of range");
        let r = distance(p, a);
        if r < 1e-300 {
            return 0.0;
        }
        let prof = self.profile(r);
        let diag = if i == j { prof.d1_over_r } else { 0.0 };
        // Dividing each factor by r separately keeps the product symmetric in (i, j).
        let ei = (p[i] - a[i]) / r;
        let ej = (p[j] - a[j]) / r;
        diag + (ei * ej) * prof.d2_minus_d1_over_r
    }

    /// Gradient of `phi_A` at `P`: `(P - A) phi'(r)/r`.
    pub fn gradient(&self, p: &[f64], a: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), a.len(), "point and center dimensions differ");
        let s = self.phi_prime_over_r(distance(p, a));
        p.iter().zip(a).map(|(x, y)| (x - y) * s).collect()
    }

    /// Normal derivative `<Q - A, nu> phi'(r)/r` of `phi_A` at a boundary point.
    pub fn normal_derivative(&self, q: &[f64], a: &[f64], nu: &[f64]) -> f64 {
        assert_eq!(q.len(), a.len(), "point and center dimensions differ");
        assert_eq!(q.len(), nu.len(), "normal has the wrong dimension");
        let proj: f64 = q.iter().zip(a).zip(nu).map(|((x, y), n)| (x - y) * n).sum();
        proj * self.phi_prime_over_r(distance(q, a))
    }
}

#[inline]
pub(crate) fn distance(p: &[f64], a: &[f64]) -> f64 {
    p.iter()
        .zip(a)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_kernels() -> Vec<RadialKernel> {
        vec![
            RadialKernel::tps(4).unwrap(),
            RadialKernel::tps(6).unwrap(),
            RadialKernel::rp(3).unwrap(),
            RadialKernel::rp(5).unwrap(),
        ]
    }

    // Fourth-order central differences of phi; independent of the closed forms.
    fn fd_first(kernel: &RadialKernel, r: f64, h: f64) -> f64 {
        let f = |x: f64| kernel.phi(x);
        (f(r - 2.0 * h) - 8.0 * f(r - h) + 8.0 * f(r + h) - f(r + 2.0 * h)) / (12.0 * h)
    }

    fn fd_second(kernel: &RadialKernel, r: f64, h: f64) -> f64 {
        let f = |x: f64| kernel.phi(x);
        (-f(r - 2.0 * h) + 16.0 * f(r - h) - 30.0 * f(r) + 16.0 * f(r + h) - f(r + 2.0 * h))
            / (12.0 * h * h)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn rejects_inadmissible_exponents() {
        assert!(RadialKernel::tps(2).is_err());
        assert!(RadialKernel::tps(5).is_err());
        assert!(RadialKernel::rp(1).is_err());
        assert!(RadialKernel::rp(4).is_err());
        assert!(RadialKernel::tps(8).is_ok());
        assert!(RadialKernel::rp(7).is_ok());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(RadialKernel::rp(3).unwrap().phi(2.0), 8.0);
        assert_eq!(RadialKernel::tps(4).unwrap().phi(1.0), 0.0);
        assert_eq!(RadialKernel::tps(4).unwrap().phi(0.0), 0.0);
    }

    #[test]
    fn phi_prime_over_r_examples() {
        assert_eq!(RadialKernel::rp(3).unwrap().phi_prime_over_r(2.0), 6.0);
        assert_eq!(RadialKernel::tps(4).unwrap().phi_prime_over_r(1.0), 1.0);

        let tps6 = RadialKernel::tps(6).unwrap();
        let r = 0.5;
        let fd = fd_first(&tps6, r, 1e-4) / r;
        assert!(rel(tps6.phi_prime_over_r(r), fd) < 1e-8);
    }

    #[test]
    fn second_radial_quantity_examples() {
        assert_eq!(RadialKernel::rp(3).unwrap().phi_dd_minus_phi_prime_over_r(2.0), 6.0);
        assert_eq!(RadialKernel::tps(4).unwrap().phi_dd_minus_phi_prime_over_r(1.0), 6.0);

        let rp5 = RadialKernel::rp(5).unwrap();
        let r = 1.3;
        let fd = fd_second(&rp5, r, 1e-3) - fd_first(&rp5, r, 1e-3) / r;
        assert!(rel(rp5.phi_dd_minus_phi_prime_over_r(r), fd) < 1e-8);
    }

    #[test]
    fn hessian_examples() {
        let rp3 = RadialKernel::rp(3).unwrap();
        let p = [2.0, 0.0];
        let a = [0.0, 0.0];
        assert_eq!(rp3.hessian_entry(&p, &a, 0, 0), 12.0);
        assert_eq!(rp3.hessian_entry(&p, &a, 0, 1), 0.0);

        let tps4 = RadialKernel::tps(4).unwrap();
        let p = [1.0, 0.0];
        let lap = tps4.hessian_entry(&p, &a, 0, 0) + tps4.hessian_entry(&p, &a, 1, 1);
        assert_eq!(lap, 8.0);
    }

    #[test]
    fn gradient_examples() {
        let rp3 = RadialKernel::rp(3).unwrap();
        assert_eq!(rp3.gradient(&[2.0, 0.0], &[0.0, 0.0]), vec![12.0, 0.0]);
        for kernel in all_kernels() {
            assert_eq!(kernel.gradient(&[0.3, 0.7], &[0.3, 0.7]), vec![0.0, 0.0]);
        }

        let tps4 = RadialKernel::tps(4).unwrap();
        let p = [0.7, 0.2];
        let a = [0.1, 0.9];
        let g = tps4.gradient(&p, &a);
        let h = 1e-5;
        for i in 0..2 {
            let mut plus = p;
            let mut minus = p;
            plus[i] += h;
            minus[i] -= h;
            let fd = (tps4.phi_at(&plus, &a) - tps4.phi_at(&minus, &a)) / (2.0 * h);
            assert!(rel(g[i], fd) < 1e-6, "component {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn normal_derivative_examples() {
        let rp3 = RadialKernel::rp(3).unwrap();
        let v = rp3.normal_derivative(&[0.5, 0.0], &[0.5, 0.5], &[0.0, -1.0]);
        assert!((v - 0.75).abs() < 1e-15);

        for kernel in all_kernels() {
            // Q - A = (0.4, 0) is orthogonal to the normal (0, 1).
            assert_eq!(kernel.normal_derivative(&[0.6, 1.0], &[0.2, 1.0], &[0.0, 1.0]), 0.0);
        }

        let tps6 = RadialKernel::tps(6).unwrap();
        let q = [0.83, 0.0];
        let a = [0.61, 0.37];
        let nu = [0.6, -0.8];
        let h = 1e-5;
        let plus = [q[0] + h * nu[0], q[1] + h * nu[1]];
        let minus = [q[0] - h * nu[0], q[1] - h * nu[1]];
        let fd = (tps6.phi_at(&plus, &a) - tps6.phi_at(&minus, &a)) / (2.0 * h);
        assert!(rel(tps6.normal_derivative(&q, &a, &nu), fd) < 1e-6);
    }

    #[test]
    fn radial_quantities_match_finite_differences_on_log_grid() {
        for kernel in all_kernels() {
            for step in 0..=90 {
                let r = 10f64.powf(-8.0 + step as f64 * 9.0 / 90.0);
                let h = r * 1e-3;
                let d1 = fd_first(&kernel, r, h);
                let d2 = fd_second(&kernel, r, h);
                let expected = [d1 / r, d2 - d1 / r];
                let got = [
                    kernel.phi_prime_over_r(r),
                    kernel.phi_dd_minus_phi_prime_over_r(r),
                ];
                // Relative to the natural magnitude r^(k-2) (|ln r| + 1) of
                // both quantities, so sign changes of the TPS logarithm factor
                // do not blow up the ratio.
                let scale = r.powi(kernel.k() as i32 - 2) * (r.ln().abs() + 1.0);
                for (g, e) in got.iter().zip(expected) {
                    let err = (g - e).abs();
                    if r >= 1e-2 {
                        assert!(err <= 1e-6 * scale, "{kernel} r={r}: {g} vs {e}");
                    } else {
                        assert!(err <= 1e-8, "{kernel} r={r}: {g} vs {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn continuous_at_origin() {
        for kernel in all_kernels() {
            let p = kernel.profile(1e-12);
            assert!(p.phi.abs() < 1e-9);
            assert!(p.d1_over_r.abs() < 1e-9);
            assert!(p.d2_minus_d1_over_r.abs() < 1e-9);
            let a = [0.4, 0.4];
            let q = [0.4 + 1e-12, 0.4];
            for i in 0..2 {
                for j in 0..2 {
                    assert!(kernel.hessian_entry(&q, &a, i, j).abs() < 1e-9);
                    assert_eq!(kernel.hessian_entry(&a, &a, i, j), 0.0);
                }
            }
        }
    }

    fn kernel_strategy() -> impl Strategy<Value = RadialKernel> {
        prop_oneof![
            (2u32..5).prop_map(|m| RadialKernel::tps(2 * m).unwrap()),
            (1u32..4).prop_map(|m| RadialKernel::rp(2 * m + 1).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn hessian_symmetric_and_trace_identity(
            kernel in kernel_strategy(),
            px in -1.0..2.0f64, py in -1.0..2.0f64,
            ax in -1.0..2.0f64, ay in -1.0..2.0f64,
        ) {
            let p = [px, py];
            let a = [ax, ay];
            prop_assert_eq!(kernel.hessian_entry(&p, &a, 0, 1), kernel.hessian_entry(&p, &a, 1, 0));
            let r = distance(&p, &a);
            let prof = kernel.profile(r);
            let trace = kernel.hessian_entry(&p, &a, 0, 0) + kernel.hessian_entry(&p, &a, 1, 1);
            let identity = 2.0 * prof.d1_over_r + prof.d2_minus_d1_over_r;
            let scale = prof.d1_over_r.abs() + prof.d2_minus_d1_over_r.abs();
            prop_assert!((trace - identity).abs() <= 4.0 * f64::EPSILON * scale);
        }

        #[test]
        fn invariant_under_rotation(
            kernel in kernel_strategy(),
            px in -1.0..2.0f64, py in -1.0..2.0f64,
            ax in -1.0..2.0f64, ay in -1.0..2.0f64,
            theta in 0.0..std::f64::consts::TAU,
        ) {
            let (s, c) = theta.sin_cos();
            let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
            let p = [px, py];
            let a = [ax, ay];
            let (pr, ar) = (rot(p), rot(a));
            let close = |x: f64, y: f64, scale: f64| (x - y).abs() <= 1e-12 * scale.max(1e-300);

            let phi = kernel.phi_at(&p, &a);
            prop_assert!(close(kernel.phi_at(&pr, &ar), phi, phi.abs().max(1e-3)));

            // The gradient rotates with the points.
            let g = kernel.gradient(&p, &a);
            let gr = kernel.gradient(&pr, &ar);
            let expect = rot([g[0], g[1]]);
            let gs = g[0].abs() + g[1].abs() + 1e-3;
            prop_assert!(close(gr[0], expect[0], gs) && close(gr[1], expect[1], gs));

            // The Laplacian is rotation invariant.
            let lap = |p: &[f64; 2], a: &[f64; 2]| {
                kernel.hessian_entry(p, a, 0, 0) + kernel.hessian_entry(p, a, 1, 1)
            };
            let l = lap(&p, &a);
            prop_assert!(close(lap(&pr, &ar), l, l.abs().max(1e-3)));
        }
    }
}
