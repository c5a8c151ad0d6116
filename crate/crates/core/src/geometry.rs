//! Collocation layouts on the closed unit square.

use std::fmt;
use std::sync::Arc;

use crate::error::{KansaError, Result};
use crate::pde_model::EllipticOperator;

pub type Point = [f64; 2];

/// Tolerance used to decide whether a coordinate sits on an edge of the square.
const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    /// Dirichlet portion of the boundary.
    Dirichlet,
    /// Neumann portion of the boundary.
    Neumann,
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryTag::Interior => "interior",
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
        };
        f.write_str(s)
    }
}

/// Uniform `n x n` grid of the unit square with lexicographic node numbering:
/// node `i * n + j` sits at `(i / (n - 1), j / (n - 1))`.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    n: usize,
    points: Vec<Point>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl TensorGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(KansaError::GridTooSmall(n));
        }
        let h = 1.0 / (n - 1) as f64;
        let mut points = Vec::with_capacity(n * n);
        let mut interior = Vec::with_capacity((n - 2) * (n - 2));
        let mut boundary = Vec::with_capacity(4 * (n - 1));
        for i in 0..n {
            for j in 0..n {
                // Exact 0 and 1 on the edges.
                let x = if i == n - 1 { 1.0 } else { i as f64 * h };
                let y = if j == n - 1 { 1.0 } else { j as f64 * h };
                let idx = points.len();
                points.push([x, y]);
                if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                    boundary.push(idx);
                } else {
                    interior.push(idx);
                }
            }
        }
        Ok(Self {
            n,
            points,
            interior,
            boundary,
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Global indices of the interior nodes, in lexicographic order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Global indices of the boundary nodes, in lexicographic order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }
}

/// Shorthand for [`TensorGrid::new`].
pub fn tensor_grid(n: usize) -> Result<TensorGrid> {
    TensorGrid::new(n)
}

type Membership = Arc<dyn Fn(&Point) -> bool + Send + Sync>;
type NormalField = Arc<dyn Fn(&Point) -> Option<Point> + Send + Sync>;

/// Splits the boundary into a Dirichlet and a Neumann portion.
///
/// Membership is decided by the two predicates; the Dirichlet predicate wins
/// when both accept a point. `normal` must return the outward unit normal at
/// every Neumann point.
#[derive(Clone)]
pub struct BoundaryPartition {
    name: String,
    dirichlet: Membership,
    neumann: Membership,
    normal: NormalField,
}

impl fmt::Debug for BoundaryPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryPartition")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

fn near(x: f64, v: f64) -> bool {
    (x - v).abs() <= EDGE_TOL
}

fn in_closed_unit(x: f64) -> bool {
    (-EDGE_TOL..=1.0 + EDGE_TOL).contains(&x)
}

fn in_open_unit(x: f64) -> bool {
    x > EDGE_TOL && x < 1.0 - EDGE_TOL
}

fn on_unit_square_boundary(p: &Point) -> bool {
    in_closed_unit(p[0])
        && in_closed_unit(p[1])
        && (near(p[0], 0.0) || near(p[0], 1.0) || near(p[1], 0.0) || near(p[1], 1.0))
}

/// Outward normal of the unit square at a point on the relative interior of an edge.
fn unit_square_normal(p: &Point) -> Option<Point> {
    if !on_unit_square_boundary(p) {
        return None;
    }
    let on_vertical = near(p[0], 0.0) || near(p[0], 1.0);
    let on_horizontal = near(p[1], 0.0) || near(p[1], 1.0);
    if on_vertical && on_horizontal {
        // corner
        return None;
    }
    Some(if near(p[1], 0.0) {
        [0.0, -1.0]
    } else if near(p[1], 1.0) {
        [0.0, 1.0]
    } else if near(p[0], 0.0) {
        [-1.0, 0.0]
    } else {
        [1.0, 0.0]
    })
}

impl BoundaryPartition {
    pub fn new<D, N, F>(name: impl Into<String>, dirichlet: D, neumann: N, normal: F) -> Self
    where
        D: Fn(&Point) -> bool + Send + Sync + 'static,
        N: Fn(&Point) -> bool + Send + Sync + 'static,
        F: Fn(&Point) -> Option<Point> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dirichlet: Arc::new(dirichlet),
            neumann: Arc::new(neumann),
            normal: Arc::new(normal),
        }
    }

    /// The whole boundary of the unit square is Dirichlet.
    pub fn unit_square_dirichlet() -> Self {
        Self::new(
            "dirichlet",
            on_unit_square_boundary,
            |_| false,
            unit_square_normal,
        )
    }

    /// Dirichlet on the closed vertical edges `x1 = 0`, `x1 = 1`; Neumann on the
    /// open horizontal edges `x2 = 0`, `x2 = 1`. Corners are Dirichlet.
    pub fn unit_square_mixed() -> Self {
        Self::new(
            "mixed",
            |p| (near(p[0], 0.0) || near(p[0], 1.0)) && in_closed_unit(p[1]),
            |p| (near(p[1], 0.0) || near(p[1], 1.0)) && in_open_unit(p[0]),
            unit_square_normal,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Tags a boundary point and returns its normal when it is a Neumann point.
    pub fn tag(&self, p: &Point) -> Result<(BoundaryTag, Option<Point>)> {
        if (self.dirichlet)(p) {
            Ok((BoundaryTag::Dirichlet, None))
        } else if (self.neumann)(p) {
            let nu = (self.normal)(p).ok_or(KansaError::MissingNormal { x: p[0], y: p[1] })?;
            Ok((BoundaryTag::Neumann, Some(nu)))
        } else {
            Err(KansaError::UncoveredBoundaryPoint { x: p[0], y: p[1] })
        }
    }
}

/// A fully tagged collocation layout.
///
/// Points keep their global (grid) numbering; `interior` and `boundary`
/// list the global indices of each kind in increasing order.
#[derive(Debug, Clone)]
pub struct CollocationSet {
    points: Vec<Point>,
    tags: Vec<BoundaryTag>,
    normals: Vec<Option<Point>>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl CollocationSet {
    /// Builds a set from explicit points, tags and normals, checking the
    /// layout invariants (distinct points, at least one boundary point,
    /// unit normals exactly on the Neumann points).
    pub fn new(points: Vec<Point>, tags: Vec<BoundaryTag>, normals: Vec<Option<Point>>) -> Result<Self> {
        if tags.len() != points.len() {
            return Err(KansaError::SizeMismatch {
                what: "tags",
                expected: points.len(),
                actual: tags.len(),
            });
        }
        if normals.len() != points.len() {
            return Err(KansaError::SizeMismatch {
                what: "normals",
                expected: points.len(),
                actual: normals.len(),
            });
        }
        for (idx, p) in points.iter().enumerate() {
            if !p.iter().all(|x| x.is_finite()) {
                return Err(KansaError::InvalidCollocationSet(format!(
                    "point {idx} has non-finite coordinates"
                )));
            }
            match (tags[idx], normals[idx]) {
                (BoundaryTag::Neumann, Some(nu)) => {
                    let len = (nu[0] * nu[0] + nu[1] * nu[1]).sqrt();
                    if (len - 1.0).abs() > 1e-12 {
                        return Err(KansaError::InvalidCollocationSet(format!(
                            "normal at point {idx} has length {len}"
                        )));
                    }
                }
                (BoundaryTag::Neumann, None) => {
                    return Err(KansaError::MissingNormal { x: p[0], y: p[1] })
                }
                (_, Some(_)) => {
                    return Err(KansaError::InvalidCollocationSet(format!(
                        "point {idx} is not a Neumann point but carries a normal"
                    )))
                }
                (_, None) => {}
            }
        }
        let mut sorted: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(KansaError::InvalidCollocationSet(
                "collocation points are not distinct".into(),
            ));
        }
        let interior: Vec<usize> = (0..points.len())
            .filter(|&i| tags[i] == BoundaryTag::Interior)
            .collect();
        let boundary: Vec<usize> = (0..points.len())
            .filter(|&i| tags[i] != BoundaryTag::Interior)
            .collect();
        if boundary.is_empty() {
            return Err(KansaError::InvalidCollocationSet(
                "at least one boundary collocation point is required".into(),
            ));
        }
        Ok(Self {
            points,
            tags,
            normals,
            interior,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn tag(&self, idx: usize) -> BoundaryTag {
        self.tags[idx]
    }

    pub fn normal(&self, idx: usize) -> Option<Point> {
        self.normals[idx]
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    /// Global node index of every matrix row: interior nodes first, then
    /// boundary nodes.
    pub fn row_order(&self) -> Vec<usize> {
        self.interior.iter().chain(&self.boundary).copied().collect()
    }
}

/// Tags every boundary node of `grid` according to `partition`.
pub fn classify(grid: &TensorGrid, partition: &BoundaryPartition) -> Result<CollocationSet> {
    let mut tags = vec![BoundaryTag::Interior; grid.len()];
    let mut normals = vec![None; grid.len()];
    for &idx in grid.boundary() {
        let (tag, nu) = partition.tag(&grid.points()[idx])?;
        tags[idx] = tag;
        normals[idx] = nu;
    }
    CollocationSet::new(grid.points().to_vec(), tags, normals)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticitySample {
    pub point: Point,
    /// Eigenvalue of the symmetrized coefficient matrix with smallest modulus.
    pub min_abs_eigenvalue: f64,
    pub definite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityReport {
    pub samples: Vec<EllipticitySample>,
}

impl EllipticityReport {
    pub fn passed(&self) -> bool {
        self.samples.iter().all(|s| s.definite)
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.min_abs_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks that the principal part of `op` is definite at each sample point.
///
/// A sample fails when the symmetrized coefficient matrix has eigenvalues of
/// both signs or an eigenvalue below `1e-12` in modulus.
pub fn verify_ellipticity(op: &EllipticOperator, samples: &[Point]) -> EllipticityReport {
    let samples = samples
        .iter()
        .map(|p| {
            let c = op.coefficients_at(p).c;
            let a = c[0][0];
            let d = c[1][1];
            let b = 0.5 * (c[0][1] + c[1][0]);
            let mean = 0.5 * (a + d);
            let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            let (lo, hi) = (mean - radius, mean + radius);
            let min_abs = lo.abs().min(hi.abs());
            let definite = min_abs >= 1e-12 && lo.signum() == hi.signum();
            EllipticitySample {
                point: *p,
                min_abs_eigenvalue: min_abs,
                definite,
            }
        })
        .collect();
    EllipticityReport { samples }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let g = tensor_grid(11).unwrap();
        assert_eq!(g.len(), 121);
        assert_eq!(g.interior().len(), 81);
        assert_eq!(g.boundary().len(), 40);

        let g = tensor_grid(21).unwrap();
        assert_eq!(g.len(), 441);
        assert!(g.points().contains(&[0.0, 0.0]));
        assert!(g.points().contains(&[1.0, 1.0]));
    }

    #[test]
    fn grid_too_small() {
        assert!(matches!(tensor_grid(2), Err(KansaError::GridTooSmall(2))));
        assert!(tensor_grid(0).is_err());
    }

    #[test]
    fn grid_is_lexicographic() {
        let g = tensor_grid(5).unwrap();
        assert_eq!(g.points()[1], [0.0, 0.25]);
        assert_eq!(g.points()[5], [0.25, 0.0]);
        assert_eq!(g.points()[24], [1.0, 1.0]);
    }

    #[test]
    fn grid_distinct_with_expected_spacing() {
        for n in [3, 7, 12] {
            let g = tensor_grid(n).unwrap();
            let pts = g.points();
            let mut min = f64::INFINITY;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let d = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
                    min = min.min(d);
                }
            }
            assert!((min - 1.0 / (n - 1) as f64).abs() < 1e-14);
            assert_eq!(g.interior().len() + g.boundary().len(), n * n);
        }
    }

    #[test]
    fn all_dirichlet_partition() {
        let g = tensor_grid(11).unwrap();
        let set = classify(&g, &BoundaryPartition::unit_square_dirichlet()).unwrap();
        for &b in set.boundary() {
            assert_eq!(set.tag(b), BoundaryTag::Dirichlet);
            assert!(set.normal(b).is_none());
        }
        for &i in set.interior() {
            let p = set.points()[i];
            assert!(p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0);
        }
    }

    #[test]
    fn mixed_partition_tags() {
        let g = tensor_grid(11).unwrap();
        let set = classify(&g, &BoundaryPartition::unit_square_mixed()).unwrap();
        let find = |p: Point| {
            set.points()
                .iter()
                .position(|q| (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12)
                .unwrap()
        };

        for corner in [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] {
            assert_eq!(set.tag(find(corner)), BoundaryTag::Dirichlet);
        }
        let bottom = find([0.5, 0.0]);
        assert_eq!(set.tag(bottom), BoundaryTag::Neumann);
        assert_eq!(set.normal(bottom), Some([0.0, -1.0]));
        let top = find([0.3, 1.0]);
        assert_eq!(set.normal(top), Some([0.0, 1.0]));
        assert_eq!(set.tag(find([0.0, 0.5])), BoundaryTag::Dirichlet);

        let neumann = set
            .boundary()
            .iter()
            .filter(|&&b| set.tag(b) == BoundaryTag::Neumann)
            .count();
        assert_eq!(neumann, 2 * 9);
    }

    #[test]
    fn normals_point_outward() {
        let g = tensor_grid(9).unwrap();
        let set = classify(&g, &BoundaryPartition::unit_square_mixed()).unwrap();
        for &b in set.boundary() {
            if let Some(nu) = set.normal(b) {
                let p = set.points()[b];
                let q = [p[0] + 1e-6 * nu[0], p[1] + 1e-6 * nu[1]];
                assert!(q[0] < 0.0 || q[0] > 1.0 || q[1] < 0.0 || q[1] > 1.0);
            }
        }
    }

    #[test]
    fn classify_is_idempotent() {
        let g = tensor_grid(6).unwrap();
        for part in [
            BoundaryPartition::unit_square_dirichlet(),
            BoundaryPartition::unit_square_mixed(),
        ] {
            let a = classify(&g, &part).unwrap();
            let b = classify(&g, &part).unwrap();
            for i in 0..a.len() {
                assert_eq!(a.tag(i), b.tag(i));
                assert_eq!(a.normal(i), b.normal(i));
            }
        }
    }

    #[test]
    fn uncovered_boundary_point_is_rejected() {
        let only_left = BoundaryPartition::new("left", |p: &Point| p[0] == 0.0, |_| false, |_| None);
        let g = tensor_grid(4).unwrap();
        assert!(matches!(
            classify(&g, &only_left),
            Err(KansaError::UncoveredBoundaryPoint { .. })
        ));
    }

    #[test]
    fn collocation_set_invariants() {
        let p = vec![[0.0, 0.0], [0.0, 0.0]];
        let t = vec![BoundaryTag::Dirichlet; 2];
        assert!(CollocationSet::new(p, t, vec![None; 2]).is_err());

        let interior_only = CollocationSet::new(vec![[0.5, 0.5]], vec![BoundaryTag::Interior], vec![None]);
        assert!(interior_only.is_err());

        let bad_normal = CollocationSet::new(
            vec![[0.5, 0.0]],
            vec![BoundaryTag::Neumann],
            vec![Some([0.0, -2.0])],
        );
        assert!(bad_normal.is_err());

        let single = CollocationSet::new(vec![[0.0, 0.0]], vec![BoundaryTag::Dirichlet], vec![None]).unwrap();
        assert_eq!(single.n_interior(), 0);
        assert_eq!(single.n_boundary(), 1);
    }

    #[test]
    fn ellipticity_examples() {
        let pts = [[0.3, 0.4], [0.9, 0.1]];
        let lap = verify_ellipticity(&EllipticOperator::laplacian(), &pts);
        assert!(lap.passed());
        assert!((lap.min_abs_eigenvalue() - 1.0).abs() < 1e-15);

        let indefinite = EllipticOperator::new(|_| [[1.0, 0.0], [0.0, -1.0]], |_| [0.0, 0.0], |_| 0.0);
        let rep = verify_ellipticity(&indefinite, &pts);
        assert!(!rep.passed());
        assert!((rep.min_abs_eigenvalue() - 1.0).abs() < 1e-15);

        let aniso = EllipticOperator::new(|_| [[2.0, 0.0], [0.0, 3.0]], |_| [0.0, 0.0], |_| 0.0);
        let rep = verify_ellipticity(&aniso, &pts);
        assert!(rep.passed());
        assert!((rep.min_abs_eigenvalue() - 2.0).abs() < 1e-15);
    }
}
