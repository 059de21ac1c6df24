//! Vertex sets of the simplicial regular polytopes whose vertices form
//! optimal packings of equal spherical caps: the regular d-simplex, the
//! d-crosspolytope, the icosahedron, and the 600-cell. Each comes with its
//! cap radius phi_P, its cardinality f_0(P), and the stability constants
//! (c_P, eps_P) certifying recovery from near-optimal packings.

use crate::sphgeo::{geodesic_distance, Packing, UnitVector};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("dimension {0} is outside the supported range for this kind")]
    BadDimension(usize),
    #[error("construction produced an off-spec vertex set: {0}")]
    Construction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PolytopeKind {
    /// Regular simplex on S^{d-1}, d >= 2: d+1 vertices, cos 2phi = -1/d.
    Simplex(usize),
    /// Crosspolytope on S^{d-1}, d >= 2: 2d vertices +-e_i, phi = pi/4.
    Crosspolytope(usize),
    /// Icosahedron on S^2: 12 vertices, phi = (1/2) acos(1/sqrt 5).
    Icosahedron,
    /// 600-cell on S^3: 120 vertices, phi = pi/10.
    Cell600,
}

impl PolytopeKind {
    pub fn dim(&self) -> usize {
        match self {
            PolytopeKind::Simplex(d) | PolytopeKind::Crosspolytope(d) => *d,
            PolytopeKind::Icosahedron => 3,
            PolytopeKind::Cell600 => 4,
        }
    }

    /// Cap radius phi_P: half the minimal pairwise distance.
    pub fn phi(&self) -> f64 {
        match self {
            PolytopeKind::Simplex(d) => 0.5 * (-1.0 / *d as f64).acos(),
            PolytopeKind::Crosspolytope(_) => std::f64::consts::FRAC_PI_4,
            PolytopeKind::Icosahedron => 0.5 * (1.0 / 5.0f64.sqrt()).acos(),
            PolytopeKind::Cell600 => std::f64::consts::PI / 10.0,
        }
    }

    /// Number of vertices f_0(P).
    pub fn vertex_count(&self) -> usize {
        match self {
            PolytopeKind::Simplex(d) => d + 1,
            PolytopeKind::Crosspolytope(d) => 2 * d,
            PolytopeKind::Icosahedron => 12,
            PolytopeKind::Cell600 => 120,
        }
    }

    pub fn name(&self) -> String {
        match self {
            PolytopeKind::Simplex(d) => format!("simplex-{d}"),
            PolytopeKind::Crosspolytope(d) => format!("crosspolytope-{d}"),
            PolytopeKind::Icosahedron => "icosahedron".to_string(),
            PolytopeKind::Cell600 => "600-cell".to_string(),
        }
    }
}

/// Stability constants (c_P, eps_P): any packing of f_0(P) caps of radius
/// phi_P - eps with eps < eps_P lies within c_P * eps of a rotated copy of P.
pub fn stability_constants(kind: PolytopeKind) -> (f64, f64) {
    match kind {
        PolytopeKind::Simplex(2) => (3.0, std::f64::consts::PI / 12.0),
        PolytopeKind::Simplex(d) => {
            let c = 9.0 * (d as f64).powf(3.5);
            (c, 1.0 / c)
        }
        PolytopeKind::Crosspolytope(d) => {
            let d = d as f64;
            (96.0 * d * d * d, 1.0 / (64.0 * d * d * d * d))
        }
        PolytopeKind::Icosahedron => (44.0f64.powi(9) * 25.0 * 1e7, 1e-9),
        PolytopeKind::Cell600 => (90.0f64.powi(116) * 1e4 * 1e12, 1e-14),
    }
}

/// A generated reference polytope: its vertex set is an optimal packing of
/// f_0(P) caps of radius phi_P.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub kind: PolytopeKind,
    pub dim: usize,
    pub phi: f64,
    pub vertices: Vec<UnitVector>,
}

impl Polytope {
    pub fn packing(&self) -> Packing {
        Packing::new(self.vertices.clone(), self.phi, 0.0).expect("reference vertices are a packing")
    }
}

/// Regular simplex via Cholesky of the exact Gram matrix (1 on the diagonal,
/// -1/d off it) for the first d vertices; the last vertex is minus their sum.
fn simplex_vertices(d: usize) -> Result<Vec<UnitVector>, PolytopeError> {
    if !(2..=8).contains(&d) {
        return Err(PolytopeError::BadDimension(d));
    }
    let g = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { -1.0 / d as f64 });
    let chol = nalgebra::Cholesky::new(g)
        .ok_or_else(|| PolytopeError::Construction("Gram matrix not positive definite".into()))?;
    let l = chol.l();
    let mut verts = Vec::with_capacity(d + 1);
    let mut sum = DVector::zeros(d);
    for i in 0..d {
        let row: DVector<f64> = l.row(i).transpose();
        sum += &row;
        verts.push(
            UnitVector::from_dvector(row)
                .map_err(|e| PolytopeError::Construction(e.to_string()))?,
        );
    }
    verts.push(
        UnitVector::from_dvector(-sum).map_err(|e| PolytopeError::Construction(e.to_string()))?,
    );
    Ok(verts)
}

fn crosspolytope_vertices(d: usize) -> Result<Vec<UnitVector>, PolytopeError> {
    if !(2..=8).contains(&d) {
        return Err(PolytopeError::BadDimension(d));
    }
    let mut verts = Vec::with_capacity(2 * d);
    for sign in [1.0, -1.0] {
        for i in 0..d {
            let mut v = vec![0.0; d];
            v[i] = sign;
            verts.push(UnitVector::new(v).unwrap());
        }
    }
    Ok(verts)
}

fn icosahedron_vertices() -> Vec<UnitVector> {
    let g = (1.0 + 5.0f64.sqrt()) / 2.0;
    let n = (1.0 + g * g).sqrt();
    let mut verts = Vec::with_capacity(12);
    for &s1 in &[1.0, -1.0] {
        for &s2 in &[1.0, -1.0] {
            // Cyclic permutations of (0, +-1, +-g) / |(0, 1, g)|.
            verts.push(UnitVector::new(vec![0.0, s1 / n, s2 * g / n]).unwrap());
            verts.push(UnitVector::new(vec![s2 * g / n, 0.0, s1 / n]).unwrap());
            verts.push(UnitVector::new(vec![s1 / n, s2 * g / n, 0.0]).unwrap());
        }
    }
    verts
}

fn permutation_parity(p: &[usize; 4]) -> usize {
    let mut inv = 0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    inv % 2
}

fn cell600_vertices() -> Vec<UnitVector> {
    let g = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut coords: Vec<[f64; 4]> = Vec::with_capacity(120);
    // 24-cell part: 8 unit-axis vertices and 16 half-integer vertices.
    for i in 0..4 {
        for &s in &[1.0, -1.0] {
            let mut v = [0.0; 4];
            v[i] = s;
            coords.push(v);
        }
    }
    for s0 in [0.5, -0.5] {
        for s1 in [0.5, -0.5] {
            for s2 in [0.5, -0.5] {
                for s3 in [0.5, -0.5] {
                    coords.push([s0, s1, s2, s3]);
                }
            }
        }
    }
    // 96 remaining vertices: even coordinate permutations of
    // (+-g, +-1, +-1/g, 0) / 2 (signs on the three nonzero slots).
    let pattern = [g / 2.0, 0.5, 1.0 / (2.0 * g), 0.0];
    let mut perms: Vec<[usize; 4]> = Vec::new();
    let idx = [0usize, 1, 2, 3];
    let mut p = idx;
    permute_collect(&mut p, 0, &mut perms);
    for p in perms.into_iter().filter(|p| permutation_parity(p) == 0) {
        for s0 in [1.0, -1.0] {
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    let signs = [s0, s1, s2, 0.0];
                    let mut v = [0.0; 4];
                    for (slot, &src) in p.iter().enumerate() {
                        v[slot] = if src == 3 { 0.0 } else { pattern[src] * signs[src] };
                    }
                    coords.push(v);
                }
            }
        }
    }
    // Canonical order: lexicographic by coordinates.
    coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
    coords.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| x == y));
    coords
        .into_iter()
        .map(|c| UnitVector::new(c.to_vec()).unwrap())
        .collect()
}

fn permute_collect(p: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
    if k == 4 {
        out.push(*p);
        return;
    }
    for i in k..4 {
        p.swap(k, i);
        permute_collect(p, k + 1, out);
        p.swap(k, i);
    }
}

/// Generates the exact vertex set of a simplicial regular polytope.
pub fn generate(kind: PolytopeKind) -> Result<Polytope, PolytopeError> {
    let vertices = match kind {
        PolytopeKind::Simplex(d) => simplex_vertices(d)?,
        PolytopeKind::Crosspolytope(d) => crosspolytope_vertices(d)?,
        PolytopeKind::Icosahedron => icosahedron_vertices(),
        PolytopeKind::Cell600 => cell600_vertices(),
    };
    if vertices.len() != kind.vertex_count() {
        return Err(PolytopeError::Construction(format!(
            "expected {} vertices, built {}",
            kind.vertex_count(),
            vertices.len()
        )));
    }
    Ok(Polytope { kind, dim: kind.dim(), phi: kind.phi(), vertices })
}

/// How the origin-interior test was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum InteriorMethod {
    /// d = 2: angular gaps; d in {3,4}: all hull facet offsets positive.
    Exact,
    /// d = 5: 10^5 sampled directions, each must see a point strictly.
    Sampled,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PackingReport {
    pub dim: usize,
    pub n_points: usize,
    pub phi: f64,
    pub eps: f64,
    pub min_separation: f64,
    pub required_separation: f64,
    /// min_separation >= required_separation - 1e-12.
    pub separation_ok: bool,
    pub origin_interior: bool,
    pub interior_method: InteriorMethod,
    /// No sampled point of the sphere is at distance >= 2(phi - eps) from
    /// every packing point (10^5 uniform samples).
    pub saturated: bool,
    pub uncovered_fraction: f64,
    pub valid: bool,
}

fn origin_interior_2d(points: &[UnitVector]) -> bool {
    if points.len() < 3 {
        return false;
    }
    let mut angles: Vec<f64> = points.iter().map(|p| p.as_slice()[1].atan2(p.as_slice()[0])).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut max_gap: f64 = 0.0;
    for i in 0..angles.len() {
        let next = if i + 1 == angles.len() {
            angles[0] + 2.0 * std::f64::consts::PI
        } else {
            angles[i + 1]
        };
        max_gap = max_gap.max(next - angles[i]);
    }
    max_gap < std::f64::consts::PI - 1e-12
}

fn origin_interior_sampled(points: &[UnitVector], dim: usize, rng: &mut ChaCha8Rng) -> bool {
    'outer: for _ in 0..100_000 {
        let w = random_unit(dim, rng);
        for p in points {
            if p.dot(&w) > 1e-9 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

pub(crate) fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> UnitVector {
    loop {
        let v = DVector::from_fn(dim, |_, _| {
            // Box-Muller standard normal from two uniforms.
            let u: f64 = rng.gen_range(1e-12..1.0);
            let t: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
            (-2.0 * u.ln()).sqrt() * t.cos()
        });
        if v.norm() > 1e-6 {
            return UnitVector::normalize(v).unwrap();
        }
    }
}

/// Checks the packing property, saturation (by sampling), and whether the
/// origin lies in the interior of the convex hull of the points.
pub fn validate_packing(packing: &Packing) -> PackingReport {
    let min_separation = packing.min_separation();
    let required_separation = 2.0 * (packing.phi - packing.eps);
    let separation_ok = min_separation >= required_separation - 1e-12;

    let (origin_interior, interior_method) = match packing.dim {
        2 => (origin_interior_2d(&packing.points), InteriorMethod::Exact),
        3 | 4 => {
            let interior = match crate::hulls::convex_hull(&packing.points) {
                Ok(hull) => hull.facets.iter().all(|f| f.offset > 1e-10),
                Err(_) => false,
            };
            (interior, InteriorMethod::Exact)
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x0117_e210);
            (origin_interior_sampled(&packing.points, packing.dim, &mut rng), InteriorMethod::Sampled)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5a7);
    let samples = 100_000usize;
    let mut uncovered = 0usize;
    for _ in 0..samples {
        let x = random_unit(packing.dim, &mut rng);
        let near = packing
            .points
            .iter()
            .map(|p| geodesic_distance(p, &x))
            .fold(f64::INFINITY, f64::min);
        if near >= required_separation {
            uncovered += 1;
        }
    }
    let uncovered_fraction = uncovered as f64 / samples as f64;
    let saturated = uncovered == 0;

    PackingReport {
        dim: packing.dim,
        n_points: packing.len(),
        phi: packing.phi,
        eps: packing.eps,
        min_separation,
        required_separation,
        separation_ok,
        origin_interior,
        interior_method,
        saturated,
        uncovered_fraction,
        valid: separation_ok && origin_interior && saturated,
    }
}
