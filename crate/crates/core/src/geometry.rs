//! Geometry of the product manifold (S^{d-1})^N: unit vectors, tangent
//! operations, the projection retraction, geodesic distances, and
//! tangent-space Gaussian noise.
//!
//! All operations are pure functions of their inputs (including the random
//! stream), so independent chains may call them concurrently as long as each
//! owns its own stream.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Norm tolerance maintained by every constructing or mutating operation.
pub const UNIT_TOL: f64 = 1e-12;
/// Tangency tolerance enforced on `TangentVector` components.
pub const TANGENT_TOL: f64 = 1e-10;
/// Tangency tolerance accepted by `retract` on its input step.
pub const RETRACT_TANGENT_TOL: f64 = 1e-8;

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A point on S^{d-1}, kept unit-norm within [`UNIT_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Validates an already-normalized coordinate vector (d >= 2, norm within
    /// [`UNIT_TOL`] of one). Use [`project_to_sphere`] to normalize raw input.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidDimension { dim: coords.len() });
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm: n });
        }
        Ok(Self { coords })
    }

    /// Point on S^1 at the given angle.
    pub fn from_angle(theta: f64) -> Self {
        Self {
            coords: vec![theta.cos(), theta.sin()],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Angle in (-pi, pi]; only meaningful for d = 2.
    pub fn angle(&self) -> f64 {
        debug_assert_eq!(self.coords.len(), 2);
        self.coords[1].atan2(self.coords[0])
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.coords, &other.coords)
    }
}

/// Normalizes an ambient vector onto the sphere: v / ||v||.
///
/// Idempotent on unit input. Fails with `ZeroVector` when the norm
/// underflows (below 1e-300).
pub fn project_to_sphere(v: &[f64]) -> Result<UnitVector> {
    if v.len() < 2 {
        return Err(Error::InvalidDimension { dim: v.len() });
    }
    let n = norm(v);
    if n < 1e-300 {
        return Err(Error::ZeroVector);
    }
    if n == 1.0 {
        return Ok(UnitVector { coords: v.to_vec() });
    }
    Ok(UnitVector {
        coords: v.iter().map(|x| x / n).collect(),
    })
}

/// Orthogonal projection of an ambient vector onto the tangent plane at `z`:
/// g - (g . z) z. This turns Euclidean gradients into Riemannian ones.
pub fn tangent_project(z: &UnitVector, g: &[f64]) -> Vec<f64> {
    debug_assert_eq!(z.dim(), g.len());
    let r = dot(&z.coords, g);
    g.iter()
        .zip(&z.coords)
        .map(|(gi, zi)| gi - r * zi)
        .collect()
}

/// Projection retraction: normalize(z + step) for a tangent step.
///
/// Returns `z` unchanged (bit for bit) for an exactly zero step. Agrees with
/// the exponential map to third order in the step norm. `ZeroVector` signals
/// that z + step vanished, i.e. the step left the locally geodesic regime.
pub fn retract(z: &UnitVector, step: &[f64]) -> Result<UnitVector> {
    debug_assert_eq!(z.dim(), step.len());
    if step.iter().all(|&s| s == 0.0) {
        return Ok(z.clone());
    }
    let moved: Vec<f64> = z.coords.iter().zip(step).map(|(a, b)| a + b).collect();
    if norm(&moved) < 1e-300 {
        return Err(Error::ZeroVector);
    }
    let r = dot(&z.coords, step);
    if r.abs() > RETRACT_TANGENT_TOL * norm(step).max(1.0) {
        return Err(Error::NotTangent { dot: r });
    }
    project_to_sphere(&moved)
}

/// Geodesic (great-circle) distance arccos(clamp(a.b, -1, 1)) in [0, pi].
pub fn geodesic_distance(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(a.dot(b).clamp(-1.0, 1.0).acos())
}

/// Ordered list of N >= 2 unit vectors sharing one ambient dimension: the
/// state Z of the dynamics on the product manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    points: Vec<UnitVector>,
}

impl Configuration {
    pub fn new(points: Vec<UnitVector>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints { n: points.len() });
        }
        let d = points[0].dim();
        for p in &points[1..] {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        Ok(Self { points })
    }

    /// Points on S^1 at the given angles.
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        Self::new(angles.iter().map(|&t| UnitVector::from_angle(t)).collect())
    }

    /// Builds each point by normalizing the corresponding raw row.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let points = rows
            .iter()
            .map(|r| project_to_sphere(r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &UnitVector {
        &self.points[i]
    }

    /// Borrowed coordinate rows, one slice per point.
    pub fn rows(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.coords()).collect()
    }

    /// Angles of all points; only meaningful for d = 2.
    pub fn to_angles(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.angle()).collect()
    }
}

/// Per-point ambient vectors orthogonal to the points of a base
/// configuration. Houses Riemannian gradients and Brownian increments.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    components: Vec<Vec<f64>>,
}

impl TangentVector {
    /// Validates component count, dimensions and tangency (inner product with
    /// the base point within [`TANGENT_TOL`]).
    pub fn new(base: &Configuration, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != base.n() {
            return Err(Error::DimensionMismatch {
                expected: base.n(),
                got: components.len(),
            });
        }
        for (c, p) in components.iter().zip(base.points()) {
            if c.len() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    got: c.len(),
                });
            }
            let r = dot(c, p.coords());
            if r.abs() > TANGENT_TOL {
                return Err(Error::NotTangent { dot: r });
            }
        }
        Ok(Self { components })
    }

    /// Wraps components already produced by tangent projection.
    pub(crate) fn from_projected(components: Vec<Vec<f64>>) -> Self {
        Self { components }
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i]
    }

    /// Largest per-point Euclidean norm.
    pub fn max_point_norm(&self) -> f64 {
        self.components.iter().map(|c| norm(c)).fold(0.0, f64::max)
    }
}

/// Draws N points independently and uniformly on S^{d-1} (isotropic Gaussian,
/// normalized). Deterministic for a fixed random stream.
pub fn sample_uniform_configuration<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<Configuration> {
    if n < 2 {
        return Err(Error::TooFewPoints { n });
    }
    if d < 2 {
        return Err(Error::InvalidDimension { dim: d });
    }
    let points = (0..n).map(|_| sample_uniform_point(d, rng)).collect();
    Configuration::new(points)
}

/// One point uniform on S^{d-1}.
pub fn sample_uniform_point<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitVector {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = project_to_sphere(&v) {
            return u;
        }
    }
}

/// Standard Gaussian in each tangent plane: an ambient N(0, I) draw projected
/// tangentially, independently per point (product-manifold noise is
/// block-diagonal).
pub fn sample_tangent_gaussian<R: Rng + ?Sized>(
    z: &Configuration,
    rng: &mut R,
) -> TangentVector {
    let components = z
        .points()
        .iter()
        .map(|p| {
            let g: Vec<f64> = (0..p.dim()).map(|_| rng.sample(StandardNormal)).collect();
            tangent_project(p, &g)
        })
        .collect();
    TangentVector::from_projected(components)
}
