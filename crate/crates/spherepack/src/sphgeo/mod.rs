//! Spherical geometry on S^{d-1}: unit vectors, geodesic distance, the
//! spherical law of cosines, circumradius functions of regular simplex faces,
//! cap and sphere measures, and volumes of spherical simplices.
//!
//! Volumes of (d-1)-dimensional spherical simplices are exact (Girard) for
//! d = 3 and computed for d = 4 by radial projection onto a tangent
//! hyperplane followed by adaptive simplex quadrature of the projection
//! density (1 + |y|^2)^(-d/2).

use nalgebra::DVector;
use std::f64::consts::PI;
use thiserror::Error;

pub mod quadrature;

/// Construction renormalizes when the norm is within this distance of 1.
pub const RENORM_TOL: f64 = 1e-9;
/// After construction the norm is within this tolerance of 1.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("vector norm {norm} is more than {RENORM_TOL} away from 1")]
    OffSphere { norm: f64 },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("dimension {0} is outside the supported range")]
    UnsupportedDimension(usize),
    #[error("sin r = {0} is not in (0, 1): no spherical circumradius exists")]
    CircumradiusOutOfRange(f64),
    #[error("angle {0} is outside the valid range")]
    AngleOutOfRange(f64),
    #[error("spherical simplex is degenerate (vertex matrix determinant {0:e})")]
    DegenerateSimplex(f64),
    #[error("spherical simplex has no vertex seeing all others within {0} < pi/2")]
    NotInHemisphere(f64),
    #[error("simplex index {0} out of range")]
    BadIndex(usize),
    #[error("quadrature did not converge: last relative change {0:e}")]
    QuadratureDiverged(f64),
}

/// A point of S^{d-1}, kept unit-length to within [`NORM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: DVector<f64>,
}

impl UnitVector {
    /// Wraps `coords`, renormalizing when the norm deviates from 1 by at most
    /// [`RENORM_TOL`] and rejecting anything further off the sphere.
    pub fn new(coords: Vec<f64>) -> Result<Self, GeoError> {
        Self::from_dvector(DVector::from_vec(coords))
    }

    pub fn from_dvector(coords: DVector<f64>) -> Result<Self, GeoError> {
        if coords.len() < 2 {
            return Err(GeoError::UnsupportedDimension(coords.len()));
        }
        let norm = coords.norm();
        if (norm - 1.0).abs() > RENORM_TOL {
            return Err(GeoError::OffSphere { norm });
        }
        Ok(Self { coords: coords / norm })
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn normalize(coords: DVector<f64>) -> Result<Self, GeoError> {
        let norm = coords.norm();
        if norm < 1e-300 {
            return Err(GeoError::ZeroVector);
        }
        Self::from_dvector(coords / norm)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.coords.dot(&other.coords)
    }

    pub fn antipode(&self) -> UnitVector {
        UnitVector { coords: -self.coords.clone() }
    }
}

/// Geodesic distance acos(<u, v>) with the inner product clamped to [-1, 1].
pub fn geodesic_distance(u: &UnitVector, v: &UnitVector) -> f64 {
    debug_assert_eq!(u.dim(), v.dim());
    // acos(dot) loses half its digits near 0 and pi; the chord form
    // 2 asin(|u - v|/2) is exact near 0, and the antipodal chord covers pi.
    if u.dot(v) >= 0.0 {
        let half = 0.5 * (u.coords() - v.coords()).norm();
        2.0 * half.clamp(0.0, 1.0).asin()
    } else {
        let half = 0.5 * (u.coords() + v.coords()).norm();
        PI - 2.0 * half.clamp(0.0, 1.0).asin()
    }
}

/// Spherical law of cosines: the side c of a spherical triangle with sides
/// a, b meeting at angle gamma, via cos c = cos a cos b + sin a sin b cos gamma.
pub fn law_of_cosines_side(a: f64, b: f64, gamma: f64) -> Result<f64, GeoError> {
    for &x in &[a, b] {
        if !(0.0..=std::f64::consts::PI).contains(&x) {
            return Err(GeoError::AngleOutOfRange(x));
        }
    }
    if !(0.0..=std::f64::consts::PI).contains(&gamma) {
        return Err(GeoError::AngleOutOfRange(gamma));
    }
    let c = a.cos() * b.cos() + a.sin() * b.sin() * gamma.cos();
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Circumradius r_j(phi) of a j-dimensional face of a regular spherical
/// simplex of edge length 2 phi: sin r_j = sqrt(2j/(j+1)) sin phi.
pub fn circumradius_rj(j: usize, phi: f64) -> Result<f64, GeoError> {
    if j == 0 {
        return Err(GeoError::UnsupportedDimension(0));
    }
    let s = (2.0 * j as f64 / (j as f64 + 1.0)).sqrt() * phi.sin();
    if s <= 0.0 || s >= 1.0 {
        return Err(GeoError::CircumradiusOutOfRange(s));
    }
    Ok(s.asin())
}

/// Limit of r_j as j grows: sin r_inf = sqrt(2) sin phi.
pub fn circumradius_rinf(phi: f64) -> Result<f64, GeoError> {
    let s = std::f64::consts::SQRT_2 * phi.sin();
    if s <= 0.0 || s >= 1.0 {
        return Err(GeoError::CircumradiusOutOfRange(s));
    }
    Ok(s.asin())
}

/// Surface measure of S^{d-1} for d in {2,3,4,5}.
pub fn sphere_measure(d: usize) -> Result<f64, GeoError> {
    use std::f64::consts::PI;
    match d {
        2 => Ok(2.0 * PI),
        3 => Ok(4.0 * PI),
        4 => Ok(2.0 * PI * PI),
        5 => Ok(8.0 * PI * PI / 3.0),
        _ => Err(GeoError::UnsupportedDimension(d)),
    }
}

/// Measure of a spherical cap of radius theta on S^{d-1}:
/// integral over [0, theta] of H^{d-2}(S^{d-2}) sin^{d-2} t dt,
/// in closed form per dimension. For d = 3 this is 2 pi (1 - cos theta).
pub fn cap_volume(d: usize, theta: f64) -> Result<f64, GeoError> {
    use std::f64::consts::PI;
    if !(0.0..=PI).contains(&theta) {
        return Err(GeoError::AngleOutOfRange(theta));
    }
    match d {
        2 => Ok(2.0 * theta),
        3 => Ok(2.0 * PI * (1.0 - theta.cos())),
        4 => Ok(2.0 * PI * (theta - theta.sin() * theta.cos())),
        5 => {
            let c = theta.cos();
            Ok(2.0 * PI * PI * (2.0 - 3.0 * c + c * c * c) / 3.0)
        }
        _ => Err(GeoError::UnsupportedDimension(d)),
    }
}

/// A (d-1)-dimensional spherical simplex: d linearly independent unit
/// vectors in R^d. Linear independence already places the vertex set in an
/// open hemisphere (the witness solves V^T w = 1, giving <v_i, w> = 1 > 0).
#[derive(Debug, Clone)]
pub struct SphericalSimplex {
    vertices: Vec<UnitVector>,
    dim: usize,
}

impl SphericalSimplex {
    pub fn new(vertices: Vec<UnitVector>) -> Result<Self, GeoError> {
        let dim = vertices.first().map(|v| v.dim()).unwrap_or(0);
        if !(2..=5).contains(&dim) {
            return Err(GeoError::UnsupportedDimension(dim));
        }
        if vertices.len() != dim {
            return Err(GeoError::DimensionMismatch(vertices.len(), dim));
        }
        for v in &vertices {
            if v.dim() != dim {
                return Err(GeoError::DimensionMismatch(v.dim(), dim));
            }
        }
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for (i, v) in vertices.iter().enumerate() {
            m.set_row(i, &nalgebra::RowDVector::from_row_slice(v.as_slice()).row(0));
        }
        let det = m.determinant();
        if det.abs() <= 1e-12 {
            return Err(GeoError::DegenerateSimplex(det));
        }
        Ok(Self { vertices, dim })
    }

    pub fn vertices(&self) -> &[UnitVector] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// A finite point configuration on S^{d-1} together with its nominal cap
/// radius phi and perturbation magnitude eps. The packing property
/// (pairwise distances >= 2(phi - eps)) is checked by
/// `polytopes::validate_packing`, not enforced here.
#[derive(Debug, Clone)]
pub struct Packing {
    pub dim: usize,
    pub points: Vec<UnitVector>,
    pub phi: f64,
    pub eps: f64,
}

impl Packing {
    pub fn new(points: Vec<UnitVector>, phi: f64, eps: f64) -> Result<Self, GeoError> {
        let dim = points.first().map(|p| p.dim()).unwrap_or(0);
        if dim < 2 {
            return Err(GeoError::UnsupportedDimension(dim));
        }
        for p in &points {
            if p.dim() != dim {
                return Err(GeoError::DimensionMismatch(p.dim(), dim));
            }
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&phi) || phi <= 0.0 {
            return Err(GeoError::AngleOutOfRange(phi));
        }
        if eps < 0.0 || eps >= phi {
            return Err(GeoError::AngleOutOfRange(eps));
        }
        Ok(Self { dim, points, phi, eps })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest pairwise geodesic distance, by brute force over all pairs.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                best = best.min(geodesic_distance(&self.points[i], &self.points[j]));
            }
        }
        best
    }
}

/// Unit tangent vector at `base` pointing along the geodesic toward `to`.
pub fn tangent_direction(base: &UnitVector, to: &UnitVector) -> Result<DVector<f64>, GeoError> {
    let c = base.dot(to);
    let t = to.coords() - base.coords() * c;
    let n = t.norm();
    if n < 1e-14 {
        return Err(GeoError::ZeroVector);
    }
    Ok(t / n)
}

/// Area of a spherical triangle on S^2 by Girard's theorem: the sum of the
/// interior angles minus pi. Angles are measured between unit tangents.
pub fn spherical_triangle_area(t: &SphericalSimplex) -> Result<f64, GeoError> {
    if t.dim() != 3 {
        return Err(GeoError::UnsupportedDimension(t.dim()));
    }
    let v = t.vertices();
    let mut sum = 0.0;
    for i in 0..3 {
        let a = tangent_direction(&v[i], &v[(i + 1) % 3])?;
        let b = tangent_direction(&v[i], &v[(i + 2) % 3])?;
        sum += a.dot(&b).clamp(-1.0, 1.0).acos();
    }
    Ok(sum - std::f64::consts::PI)
}

/// Area of a convex spherical polygon on S^2 given by its boundary vertex
/// cycle: sum of interior angles minus (k - 2) pi. Orientation-independent.
pub fn spherical_polygon_area(cycle: &[UnitVector]) -> Result<f64, GeoError> {
    let k = cycle.len();
    if k < 3 {
        return Err(GeoError::DimensionMismatch(k, 3));
    }
    let mut sum = 0.0;
    for i in 0..k {
        let a = tangent_direction(&cycle[i], &cycle[(i + 1) % k])?;
        let b = tangent_direction(&cycle[i], &cycle[(i + k - 1) % k])?;
        sum += a.dot(&b).clamp(-1.0, 1.0).acos();
    }
    Ok(sum - (k as f64 - 2.0) * std::f64::consts::PI)
}

/// Largest violation of the orthoscheme chain condition for an ordered
/// vertex list z_0, ..., z_{m-1}: at every interior z_j the tangents toward
/// the earlier vertices must be orthogonal to the tangents toward the later
/// ones. Returns max |<t_before, t_after>| (0 for a perfect orthoscheme).
pub fn chain_orthogonality_residual(verts: &[UnitVector]) -> Result<f64, GeoError> {
    let m = verts.len();
    let mut worst: f64 = 0.0;
    for j in 1..m.saturating_sub(1) {
        for i in 0..j {
            let a = tangent_direction(&verts[j], &verts[i])?;
            for k in (j + 1)..m {
                let b = tangent_direction(&verts[j], &verts[k])?;
                worst = worst.max(a.dot(&b).abs());
            }
        }
    }
    Ok(worst)
}

/// Orthonormal basis of the tangent space base^perp, via the Householder
/// reflection exchanging base and e_1: columns H e_2, ..., H e_d.
pub fn tangent_basis(base: &UnitVector) -> Vec<DVector<f64>> {
    let d = base.dim();
    let mut u = base.coords().clone();
    u[0] -= 1.0;
    let n = u.norm();
    let mut basis = Vec::with_capacity(d - 1);
    for j in 1..d {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        if n > 1e-12 {
            let coef = 2.0 * u[j] / (n * n);
            e -= &u * coef;
        }
        basis.push(e);
    }
    basis
}

/// Settings for the projected-quadrature volume path.
#[derive(Debug, Clone, Copy)]
pub struct VolumeOptions {
    /// Relative agreement between successive refinements that stops the
    /// adaptive subdivision.
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-7, max_depth: 24 }
    }
}

/// Spherical volume of a simplex by gnomonic projection onto the tangent
/// hyperplane at the equal-angle witness point z (the normalized solution of
/// <v_i, z> = const > 0, which exists for every nondegenerate simplex), then
/// adaptive quadrature of (1 + |y|^2)^(-d/2) over the projected Euclidean
/// simplex. Works for d in {3, 4}; the d = 3 path exists to cross-check
/// Girard's formula.
pub fn spherical_simplex_volume_quadrature(
    t: &SphericalSimplex,
    opts: VolumeOptions,
) -> Result<f64, GeoError> {
    let d = t.dim();
    if !(3..=4).contains(&d) {
        return Err(GeoError::UnsupportedDimension(d));
    }
    let v = t.vertices();
    let mut m = nalgebra::DMatrix::zeros(d, d);
    for (i, vi) in v.iter().enumerate() {
        m.set_row(i, &nalgebra::RowDVector::from_row_slice(vi.as_slice()).row(0));
    }
    let w = m
        .lu()
        .solve(&DVector::from_element(d, 1.0))
        .ok_or(GeoError::DegenerateSimplex(0.0))?;
    let z = UnitVector::normalize(w)?;
    let min_dot = v.iter().map(|vi| vi.dot(&z)).fold(f64::INFINITY, f64::min);
    // All dots equal 1/|w| in exact arithmetic; a tiny value means the
    // simplex hugs a great subsphere and the projection is hopeless.
    if min_dot <= 1e-9 {
        return Err(GeoError::NotInHemisphere(min_dot.max(-1.0).min(1.0).acos()));
    }
    let basis = tangent_basis(&z);
    // Gnomonic image of v_j on {y : <y, z> = 1}, in tangent coordinates.
    let proj: Vec<Vec<f64>> = v
        .iter()
        .map(|vj| {
            let c = vj.dot(&z);
            let p = vj.coords() / c;
            basis.iter().map(|b| p.dot(b)).collect()
        })
        .collect();
    let density_exp = -(d as f64) / 2.0;
    match d {
        3 => {
            let tri = [
                [proj[0][0], proj[0][1]],
                [proj[1][0], proj[1][1]],
                [proj[2][0], proj[2][1]],
            ];
            let f = |x: f64, y: f64| (1.0 + x * x + y * y).powf(density_exp);
            let r = quadrature::adaptive_triangle(tri, &f, opts.rel_tol, opts.max_depth);
            if !r.converged {
                return Err(GeoError::QuadratureDiverged(r.last_change));
            }
            Ok(r.value)
        }
        4 => {
            let tet = [
                [proj[0][0], proj[0][1], proj[0][2]],
                [proj[1][0], proj[1][1], proj[1][2]],
                [proj[2][0], proj[2][1], proj[2][2]],
                [proj[3][0], proj[3][1], proj[3][2]],
            ];
            let f = |x: f64, y: f64, z: f64| (1.0 + x * x + y * y + z * z).powf(density_exp);
            let r = quadrature::adaptive_tetrahedron(tet, &f, opts.rel_tol, opts.max_depth);
            if !r.converged {
                return Err(GeoError::QuadratureDiverged(r.last_change));
            }
            Ok(r.value)
        }
        _ => unreachable!(),
    }
}

/// Spherical volume of a (d-1)-dimensional spherical simplex.
/// d = 3 uses Girard's theorem; d = 4 uses projected adaptive quadrature.
pub fn spherical_simplex_volume(t: &SphericalSimplex) -> Result<f64, GeoError> {
    match t.dim() {
        3 => spherical_triangle_area(t),
        4 => spherical_simplex_volume_quadrature(t, VolumeOptions::default()),
        d => Err(GeoError::UnsupportedDimension(d)),
    }
}
