//! Random fictitious centers and assembly of the square Kansa system.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{KansaError, Result};
use crate::geometry::{BoundaryTag, CollocationSet, Point};
use crate::pde_model::{apply_boundary_to_basis, EllipticProblem};
use crate::polyharmonic::RadialKernel;
use crate::solver::DenseMatrix;

/// Perturbs collocation points by independent uniform offsets in
/// `(-delta, delta)^2`.
///
/// The random stream is a ChaCha8 generator seeded with `seed` and switched
/// to stream `stream_id`, so every trial is reproducible on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterGenerator {
    delta: f64,
    seed: u64,
    stream_id: u64,
}

impl CenterGenerator {
    pub fn new(delta: f64, seed: u64, stream_id: u64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(KansaError::InvalidConfig(format!(
                "perturbation radius must be finite and nonnegative, got {delta}"
            )));
        }
        Ok(Self {
            delta,
            seed,
            stream_id,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// One center per point, in the same order. Centers are not clamped to
    /// the domain.
    pub fn perturb(&self, points: &[Point]) -> Vec<Point> {
        if self.delta == 0.0 {
            return points.to_vec();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        points
            .iter()
            .map(|p| {
                let ux: f64 = rng.sample(Open01);
                let uy: f64 = rng.sample(Open01);
                [
                    p[0] + (2.0 * ux - 1.0) * self.delta,
                    p[1] + (2.0 * uy - 1.0) * self.delta,
                ]
            })
            .collect()
    }
}

/// Shorthand for [`CenterGenerator::perturb`].
pub fn perturb_centers(set: &CollocationSet, generator: &CenterGenerator) -> Vec<Point> {
    generator.perturb(set.points())
}

/// The square collocation system.
///
/// Rows `0..n_interior` hold `L phi_{A_i}` at interior nodes, the remaining
/// rows hold `B phi_{A_i}` at boundary nodes. Column `i` belongs to center
/// `centers[i]`.
#[derive(Debug, Clone)]
pub struct KansaSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    /// Global collocation node index of each row.
    pub row_map: Vec<usize>,
    pub centers: Vec<Point>,
    pub n_interior: usize,
}

impl KansaSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.dim() - self.n_interior
    }
}

pub fn assemble(
    problem: &EllipticProblem,
    set: &CollocationSet,
    kernel: &RadialKernel,
    centers: &[Point],
) -> Result<KansaSystem> {
    let n = set.len();
    if centers.len() != n {
        return Err(KansaError::SizeMismatch {
            what: "centers",
            expected: n,
            actual: centers.len(),
        });
    }
    let row_map = set.row_order();
    let n_interior = set.n_interior();
    let points = set.points();

    let mut rhs = Vec::with_capacity(n);
    for (row, &node) in row_map.iter().enumerate() {
        let p = &points[node];
        let value = if row < n_interior {
            (problem.f)(p)
        } else {
            (problem.g)(p)
        };
        if !value.is_finite() {
            return Err(KansaError::InvalidCollocationSet(format!(
                "data at node {node} ({}, {}) is not finite",
                p[0], p[1]
            )));
        }
        rhs.push(value);
    }

    let mut matrix = DenseMatrix::zeros(n, n);
    matrix
        .rows_mut()
        .collect::<Vec<_>>()
        .into_par_iter()
        .enumerate()
        .try_for_each(|(row, out)| -> Result<()> {
            let node = row_map[row];
            let p = &points[node];
            if row < n_interior {
                let coeffs = problem.operator.coefficients_at(p);
                for (entry, a) in out.iter_mut().zip(centers) {
                    *entry = coeffs.apply_to_basis(kernel, a, p);
                }
            } else {
                let tag = set.tag(node);
                let normal = set.normal(node);
                match tag {
                    BoundaryTag::Dirichlet => {
                        for (entry, a) in out.iter_mut().zip(centers) {
                            let dx = p[0] - a[0];
                            let dy = p[1] - a[1];
                            *entry = kernel.phi((dx * dx + dy * dy).sqrt());
                        }
                    }
                    _ => {
                        for (entry, a) in out.iter_mut().zip(centers) {
                            *entry = apply_boundary_to_basis(kernel, a, p, tag, normal.as_ref())?;
                        }
                    }
                }
            }
            Ok(())
        })?;

    Ok(KansaSystem {
        matrix,
        rhs,
        row_map,
        centers: centers.to_vec(),
        n_interior,
    })
}
