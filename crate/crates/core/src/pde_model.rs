//! Second-order elliptic boundary value problems
//!
//! ```text
//! L u = sum_ij c_ij d2u/dx_i dx_j + <grad u, b> + rho u = f   in the domain
//! B u = chi_D u + chi_N du/dnu                           = g   on the boundary
//! ```
//!
//! and the application of `L` and `B` to a translated polyharmonic kernel.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{KansaError, Result};
use crate::geometry::{BoundaryPartition, BoundaryTag, Point};
use crate::polyharmonic::RadialKernel;

pub type CoefficientMatrix = [[f64; 2]; 2];

pub type ScalarField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type MatrixField = Arc<dyn Fn(&Point) -> CoefficientMatrix + Send + Sync>;
type VectorField = Arc<dyn Fn(&Point) -> [f64; 2] + Send + Sync>;

/// Coefficients of `L` frozen at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients {
    pub c: CoefficientMatrix,
    pub b: [f64; 2],
    pub rho: f64,
}

impl PointCoefficients {
    /// `L phi_A` at the point these coefficients were taken from.
    #[inline]
    pub fn apply_to_basis(&self, kernel: &RadialKernel, a: &Point, p: &Point) -> f64 {
        let dx = p[0] - a[0];
        let dy = p[1] - a[1];
        let r = (dx * dx + dy * dy).sqrt();
        if r == 0.0 {
            return 0.0;
        }
        let prof = kernel.profile(r);
        let (ex, ey) = (dx / r, dy / r);
        let c = &self.c;
        let second = (c[0][0] + c[1][1]) * prof.d1_over_r
            + (c[0][0] * ex * ex + (c[0][1] + c[1][0]) * ex * ey + c[1][1] * ey * ey)
                * prof.d2_minus_d1_over_r;
        let first = (dx * self.b[0] + dy * self.b[1]) * prof.d1_over_r;
        second + first + self.rho * prof.phi
    }
}

/// Variable-coefficient operator `L`.
#[derive(Clone)]
pub struct EllipticOperator {
    c: MatrixField,
    b: VectorField,
    rho: ScalarField,
}

impl fmt::Debug for EllipticOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticOperator").finish_non_exhaustive()
    }
}

impl EllipticOperator {
    pub fn new<C, B, R>(c: C, b: B, rho: R) -> Self
    where
        C: Fn(&Point) -> CoefficientMatrix + Send + Sync + 'static,
        B: Fn(&Point) -> [f64; 2] + Send + Sync + 'static,
        R: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self {
            c: Arc::new(c),
            b: Arc::new(b),
            rho: Arc::new(rho),
        }
    }

    pub fn laplacian() -> Self {
        Self::convection_diffusion([0.0, 0.0])
    }

    /// `Delta u + <grad u, b>` with a constant field `b`.
    pub fn convection_diffusion(b: [f64; 2]) -> Self {
        Self::new(|_| [[1.0, 0.0], [0.0, 1.0]], move |_| b, |_| 0.0)
    }

    pub fn coefficients_at(&self, p: &Point) -> PointCoefficients {
        PointCoefficients {
            c: (self.c)(p),
            b: (self.b)(p),
            rho: (self.rho)(p),
        }
    }

    /// `L phi_A (P)` with derivatives taken in `P`.
    pub fn apply_to_basis(&self, kernel: &RadialKernel, a: &Point, p: &Point) -> f64 {
        self.coefficients_at(p).apply_to_basis(kernel, a, p)
    }
}

/// `B phi_A (Q)`: the kernel value on Dirichlet points, its outward normal
/// derivative on Neumann points.
pub fn apply_boundary_to_basis(
    kernel: &RadialKernel,
    a: &Point,
    q: &Point,
    tag: BoundaryTag,
    normal: Option<&Point>,
) -> Result<f64> {
    match tag {
        BoundaryTag::Dirichlet => Ok(kernel.phi_at(q, a)),
        BoundaryTag::Neumann => {
            let nu = normal.ok_or(KansaError::MissingNormal { x: q[0], y: q[1] })?;
            Ok(kernel.normal_derivative(q, a, nu))
        }
        BoundaryTag::Interior => Err(KansaError::InvalidCollocationSet(format!(
            "boundary operator applied at interior point ({}, {})",
            q[0], q[1]
        ))),
    }
}

/// Identifies one of the shipped manufactured-solution problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ProblemId {
    /// Poisson equation, Dirichlet boundary.
    Poisson,
    /// Convection-diffusion with mixed Dirichlet/Neumann boundary.
    ConvectionDiffusion,
}

impl TryFrom<u8> for ProblemId {
    type Error = KansaError;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ProblemId::Poisson),
            2 => Ok(ProblemId::ConvectionDiffusion),
            other => Err(KansaError::InvalidConfig(format!(
                "unknown problem {other} (expected 1 or 2)"
            ))),
        }
    }
}

impl From<ProblemId> for u8 {
    fn from(p: ProblemId) -> u8 {
        match p {
            ProblemId::Poisson => 1,
            ProblemId::ConvectionDiffusion => 2,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

impl ProblemId {
    pub fn build(self) -> EllipticProblem {
        match self {
            ProblemId::Poisson => test_problem_1(),
            ProblemId::ConvectionDiffusion => test_problem_2(),
        }
    }
}

#[derive(Clone)]
pub struct EllipticProblem {
    pub id: Option<ProblemId>,
    pub operator: EllipticOperator,
    pub partition: BoundaryPartition,
    pub f: ScalarField,
    pub g: ScalarField,
    pub exact: Option<ScalarField>,
}

impl fmt::Debug for EllipticProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticProblem")
            .field("id", &self.id)
            .field("partition", &self.partition)
            .field("has_exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

fn manufactured_u(p: &Point) -> f64 {
    (2.0 * PI * p[0]).sin() + (2.0 * PI * p[1]).cos()
}

fn manufactured_grad(p: &Point) -> [f64; 2] {
    [
        2.0 * PI * (2.0 * PI * p[0]).cos(),
        -2.0 * PI * (2.0 * PI * p[1]).sin(),
    ]
}

/// Poisson equation on the unit square, Dirichlet data everywhere,
/// exact solution `sin(2 pi x1) + cos(2 pi x2)`.
pub fn test_problem_1() -> EllipticProblem {
    EllipticProblem {
        id: Some(ProblemId::Poisson),
        operator: EllipticOperator::laplacian(),
        partition: BoundaryPartition::unit_square_dirichlet(),
        f: Arc::new(|p| -4.0 * PI * PI * manufactured_u(p)),
        g: Arc::new(manufactured_u),
        exact: Some(Arc::new(manufactured_u)),
    }
}

/// Convection-diffusion `Delta u + <grad u, (1, 1)>` with Dirichlet data on
/// the vertical edges and Neumann data on the open horizontal edges; same
/// exact solution as [`test_problem_1`].
pub fn test_problem_2() -> EllipticProblem {
    let partition = BoundaryPartition::unit_square_mixed();
    let g_partition = partition.clone();
    EllipticProblem {
        id: Some(ProblemId::ConvectionDiffusion),
        operator: EllipticOperator::convection_diffusion([1.0, 1.0]),
        partition,
        f: Arc::new(|p| {
            -4.0 * PI * PI * manufactured_u(p) + 2.0 * PI * (2.0 * PI * p[0]).cos()
                - 2.0 * PI * (2.0 * PI * p[1]).sin()
        }),
        g: Arc::new(move |p| match g_partition.tag(p) {
            Ok((BoundaryTag::Dirichlet, _)) => manufactured_u(p),
            Ok((BoundaryTag::Neumann, Some(nu))) => {
                let grad = manufactured_grad(p);
                grad[0] * nu[0] + grad[1] * nu[1]
            }
            // not a boundary point of this partition
            _ => f64::NAN,
        }),
        exact: Some(Arc::new(manufactured_u)),
    }
}
