//! Finite-difference self-test of the operator applications.
//!
//! `L phi_A` and `B phi_A` are recomputed from fourth-order central
//! differences of `phi(|P - A|)` alone and compared with the closed forms.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{BoundaryTag, Point};
use crate::pde_model::{apply_boundary_to_basis, EllipticOperator};
use crate::polyharmonic::RadialKernel;

pub const CHECK_TOLERANCE: f64 = 1e-6;

const STEP: f64 = 1e-3;
const W1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const W2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const OFFSETS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// Finite-difference value of `L phi_A (P)` together with the sum of the
/// absolute values of its terms, which serves as the error scale.
pub fn fd_apply_operator(op: &EllipticOperator, kernel: &RadialKernel, a: &Point, p: &Point) -> (f64, f64) {
    let phi = |dx: f64, dy: f64| {
        let q = [p[0] + dx * STEP, p[1] + dy * STEP];
        kernel.phi(((q[0] - a[0]).powi(2) + (q[1] - a[1]).powi(2)).sqrt())
    };
    let (mut uxx, mut uyy, mut ux, mut uy, mut uxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in 0..5 {
        uxx += W2[s] * phi(OFFSETS[s], 0.0);
        uyy += W2[s] * phi(0.0, OFFSETS[s]);
        ux += W1[s] * phi(OFFSETS[s], 0.0);
        uy += W1[s] * phi(0.0, OFFSETS[s]);
        for t in 0..5 {
            uxy += W1[s] * W1[t] * phi(OFFSETS[s], OFFSETS[t]);
        }
    }
    uxx /= 12.0 * STEP * STEP;
    uyy /= 12.0 * STEP * STEP;
    ux /= 12.0 * STEP;
    uy /= 12.0 * STEP;
    uxy /= 144.0 * STEP * STEP;
    let k = op.coefficients_at(p);
    let terms = [
        k.c[0][0] * uxx,
        k.c[0][1] * uxy,
        k.c[1][0] * uxy,
        k.c[1][1] * uyy,
        k.b[0] * ux,
        k.b[1] * uy,
        k.rho * kernel.phi_at(p, a),
    ];
    (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
}

/// Finite-difference derivative of `phi_A` along `nu` at `q`.
pub fn fd_normal_derivative(kernel: &RadialKernel, a: &Point, q: &Point, nu: &Point) -> f64 {
    let mut d = 0.0;
    for s in 0..5 {
        let x = [q[0] + OFFSETS[s] * STEP * nu[0], q[1] + OFFSETS[s] * STEP * nu[1]];
        d += W1[s] * kernel.phi_at(&x, a);
    }
    d / (12.0 * STEP)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckCase {
    pub kernel: RadialKernel,
    pub operator: &'static str,
    pub samples: usize,
    pub max_rel_error: f64,
}

impl CheckCase {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= CHECK_TOLERANCE
    }
}

impl fmt::Display for CheckCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<10} {:<22} {} pairs, max rel err {:.2e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.kernel.to_string(),
            self.operator,
            self.samples,
            self.max_rel_error
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub cases: Vec<CheckCase>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(CheckCase::passed)
    }
}

fn variable_coefficient_operator() -> EllipticOperator {
    EllipticOperator::new(
        |p| {
            let cross = 0.3 * p[0] * p[1];
            [[1.0 + p[0] * p[0], cross], [cross, 2.0 + p[1]]]
        },
        |p| [p[0].sin(), p[1].cos()],
        |p| 1.0 + p[0] * p[1],
    )
}

/// Random `(A, P)` pairs with `|P - A| > 0.1`: `P` in the unit square, `A`
/// in a slightly larger box.
fn sample_pairs(rng: &mut ChaCha8Rng, count: usize) -> Vec<(Point, Point)> {
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a: Point = [rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2)];
        let p: Point = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        if ((p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2)).sqrt() > 0.1 {
            pairs.push((a, p));
        }
    }
    pairs
}

/// Compares the closed-form operator applications with finite differences
/// at `pairs` random pairs for every kernel.
pub fn operator_self_test(kernels: &[RadialKernel], pairs: usize, seed: u64) -> CheckReport {
    let operators: [(&'static str, EllipticOperator); 3] = [
        ("L laplacian", EllipticOperator::laplacian()),
        ("L convection-diffusion", EllipticOperator::convection_diffusion([1.0, 1.0])),
        ("L variable", variable_coefficient_operator()),
    ];
    let mut cases = Vec::new();
    for kernel in kernels {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = sample_pairs(&mut rng, pairs);

        for (name, op) in &operators {
            let max_rel_error = samples
                .iter()
                .map(|(a, p)| {
                    let got = op.apply_to_basis(kernel, a, p);
                    let (fd, scale) = fd_apply_operator(op, kernel, a, p);
                    (got - fd).abs() / fd.abs().max(scale).max(f64::MIN_POSITIVE)
                })
                .fold(0.0, f64::max);
            cases.push(CheckCase {
                kernel: *kernel,
                operator: name,
                samples: samples.len(),
                max_rel_error,
            });
        }

        let max_rel_error = samples
            .iter()
            .map(|(a, p)| {
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let nu = [theta.cos(), theta.sin()];
                let got = apply_boundary_to_basis(kernel, a, p, BoundaryTag::Neumann, Some(&nu))
                    .expect("normal supplied");
                let fd = fd_normal_derivative(kernel, a, p, &nu);
                let grad = kernel.phi_prime_over_r(((p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2)).sqrt())
                    * ((p[0] - a[0]).abs() + (p[1] - a[1]).abs());
                (got - fd).abs() / fd.abs().max(grad).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        cases.push(CheckCase {
            kernel: *kernel,
            operator: "B neumann",
            samples: samples.len(),
            max_rel_error,
        });

        let max_rel_error = samples
            .iter()
            .map(|(a, p)| {
                let got = apply_boundary_to_basis(kernel, a, p, BoundaryTag::Dirichlet, None)
                    .expect("dirichlet needs no normal");
                let direct = kernel.phi(((p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2)).sqrt());
                (got - direct).abs() / direct.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        cases.push(CheckCase {
            kernel: *kernel,
            operator: "B dirichlet",
            samples: samples.len(),
            max_rel_error,
        });
    }
    CheckReport { cases }
}

/// The four kernels used throughout the experiments.
pub fn standard_kernels() -> Vec<RadialKernel> {
    vec![
        RadialKernel::tps(4).expect("admissible"),
        RadialKernel::tps(6).expect("admissible"),
        RadialKernel::rp(3).expect("admissible"),
        RadialKernel::rp(5).expect("admissible"),
    ]
}
