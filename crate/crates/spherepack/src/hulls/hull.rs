//! Incremental convex hull in R^d (d = 2..4 used here) with exact-sign
//! visibility decisions, so maximally degenerate inputs (regular polytopes,
//! many cospherical and coplanar subsets) still produce a coherent
//! simplicial facet complex.

use super::predicates::{affine_rank, orientation};
use super::HullError;
use crate::sphgeo::UnitVector;
use nalgebra::{DMatrix, DVector};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone)]
pub struct Facet {
    /// Vertex indices in an orientation such that the symbolic-perturbation
    /// predicate is positive exactly for points strictly outside.
    pub vertices: Vec<usize>,
    /// Unit outward normal (f64 geometry, computed after construction).
    pub normal: DVector<f64>,
    /// Signed distance of the facet plane from the origin: <normal, v>.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct HullComplex {
    pub dim: usize,
    pub points: Vec<DVector<f64>>,
    pub facets: Vec<Facet>,
}

impl HullComplex {
    /// Indices of input points that appear in at least one facet.
    pub fn vertex_indices(&self) -> BTreeSet<usize> {
        self.facets.iter().flat_map(|f| f.vertices.iter().copied()).collect()
    }

    /// Map from sorted ridge (facet of a facet) to the facets containing it.
    pub fn ridges(&self) -> HashMap<Vec<usize>, Vec<usize>> {
        let mut map: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for (fid, f) in self.facets.iter().enumerate() {
            for omit in 0..f.vertices.len() {
                let mut ridge: Vec<usize> = f
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != omit)
                    .map(|(_, &v)| v)
                    .collect();
                ridge.sort_unstable();
                map.entry(ridge).or_default().push(fid);
            }
        }
        map
    }

    /// Facet ids adjacent to each facet (sharing a ridge).
    pub fn neighbors(&self, fid: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let ridges = self.ridges();
        let f = &self.facets[fid];
        for omit in 0..f.vertices.len() {
            let mut ridge: Vec<usize> = f
                .vertices
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != omit)
                .map(|(_, &v)| v)
                .collect();
            ridge.sort_unstable();
            if let Some(fs) = ridges.get(&ridge) {
                out.extend(fs.iter().copied().filter(|&g| g != fid));
            }
        }
        out
    }

    /// Structural and geometric sanity: every ridge in exactly two facets,
    /// the Euler relation for the facet complex, and every input point on or
    /// below every facet plane (within 1e-10).
    pub fn validate(&self) -> Result<(), HullError> {
        for (key, fs) in self.ridges() {
            if fs.len() != 2 {
                return Err(HullError::InvalidComplex(format!(
                    "ridge {key:?} lies in {} facets",
                    fs.len()
                )));
            }
        }
        let v = self.vertex_indices().len() as i64;
        let mut pairs: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut triples: BTreeSet<Vec<usize>> = BTreeSet::new();
        for f in &self.facets {
            let mut vs = f.vertices.clone();
            vs.sort_unstable();
            for i in 0..vs.len() {
                for j in (i + 1)..vs.len() {
                    pairs.insert(vec![vs[i], vs[j]]);
                    for k in (j + 1)..vs.len() {
                        triples.insert(vec![vs[i], vs[j], vs[k]]);
                    }
                }
            }
        }
        let e = pairs.len() as i64;
        let f2 = triples.len() as i64;
        let f = self.facets.len() as i64;
        let euler_ok = match self.dim {
            2 => v == f,
            3 => v - e + f == 2,
            4 => v - e + f2 - f == 0,
            _ => true,
        };
        if !euler_ok {
            return Err(HullError::InvalidComplex(format!(
                "Euler check failed: V={v} E={e} F2={f2} facets={f} in dim {}",
                self.dim
            )));
        }
        for (fid, facet) in self.facets.iter().enumerate() {
            for (pid, p) in self.points.iter().enumerate() {
                let side = facet.normal.dot(p) - facet.offset;
                if side > 1e-10 {
                    return Err(HullError::InvalidComplex(format!(
                        "point {pid} lies {side:e} above facet {fid}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Convex hull of unit vectors in R^d. Deterministic: points are inserted in
/// index order and all ties are broken by the index-keyed symbolic
/// perturbation of the predicates.
pub fn convex_hull(points: &[UnitVector]) -> Result<HullComplex, HullError> {
    let d = points.first().map(|p| p.dim()).unwrap_or(0);
    if !(2..=5).contains(&d) {
        return Err(HullError::BadDimension(d));
    }
    if points.len() < d + 1 {
        return Err(HullError::TooFewPoints { needed: d + 1, got: points.len() });
    }
    let coords: Vec<Vec<f64>> = points.iter().map(|p| p.as_slice().to_vec()).collect();
    let orient = |verts: &[usize], q: usize| -> i8 {
        let mut rows: Vec<(usize, &[f64])> =
            verts.iter().map(|&v| (v, coords[v].as_slice())).collect();
        rows.push((q, coords[q].as_slice()));
        orientation(&rows)
    };

    // Initial simplex: greedily take points that increase the exact affine rank.
    let mut chosen: Vec<usize> = Vec::new();
    for idx in 0..points.len() {
        let mut cand = chosen.clone();
        cand.push(idx);
        let refs: Vec<&[f64]> = cand.iter().map(|&i| coords[i].as_slice()).collect();
        if affine_rank(&refs) == cand.len() {
            chosen = cand;
            if chosen.len() == d + 1 {
                break;
            }
        }
    }
    if chosen.len() < d + 1 {
        return Err(HullError::FlatInput);
    }

    // Slab of proto-facets (vertex lists oriented so outside is positive).
    let mut facets: Vec<Vec<usize>> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    let push_facet = |facets: &mut Vec<Vec<usize>>,
                          alive: &mut Vec<bool>,
                          mut verts: Vec<usize>,
                          inside_witness: usize,
                          orient: &dyn Fn(&[usize], usize) -> i8| {
        if orient(&verts, inside_witness) > 0 {
            verts.swap(0, 1);
        }
        facets.push(verts);
        alive.push(true);
    };

    for omit in 0..chosen.len() {
        let verts: Vec<usize> = chosen
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != omit)
            .map(|(_, &v)| v)
            .collect();
        push_facet(&mut facets, &mut alive, verts, chosen[omit], &orient);
    }

    for p in 0..points.len() {
        if chosen.contains(&p) {
            continue;
        }
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&fid| alive[fid] && orient(&facets[fid], p) > 0)
            .collect();
        if visible.is_empty() {
            continue;
        }
        // Ridge -> (facet, opposite vertex) over all alive facets.
        let mut ridge_map: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        for (fid, verts) in facets.iter().enumerate() {
            if !alive[fid] {
                continue;
            }
            for omit in 0..verts.len() {
                let mut ridge: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != omit)
                    .map(|(_, &v)| v)
                    .collect();
                ridge.sort_unstable();
                ridge_map.entry(ridge).or_default().push((fid, verts[omit]));
            }
        }
        let is_visible = |fid: usize| visible.contains(&fid);
        let mut new_facets: Vec<(Vec<usize>, usize)> = Vec::new();
        for (ridge, owners) in &ridge_map {
            if owners.len() != 2 {
                return Err(HullError::InvalidComplex(format!(
                    "ridge {ridge:?} lies in {} facets during insertion of {p}",
                    owners.len()
                )));
            }
            let vis = [is_visible(owners[0].0), is_visible(owners[1].0)];
            if vis[0] == vis[1] {
                continue; // interior or fully hidden ridge
            }
            let hidden = if vis[0] { owners[1] } else { owners[0] };
            let mut verts = ridge.clone();
            verts.push(p);
            // The hidden facet's opposite vertex is a hull vertex not on the
            // new facet's plane, on the inner side.
            new_facets.push((verts, hidden.1));
        }
        for &fid in &visible {
            alive[fid] = false;
        }
        for (verts, witness) in new_facets {
            push_facet(&mut facets, &mut alive, verts, witness, &orient);
        }
    }

    let centroid: DVector<f64> = {
        let mut c = DVector::zeros(d);
        for row in &coords {
            c += DVector::from_row_slice(row);
        }
        c / points.len() as f64
    };

    let mut out_facets = Vec::new();
    for (fid, verts) in facets.iter().enumerate() {
        if !alive[fid] {
            continue;
        }
        let (normal, offset) = facet_plane(&coords, verts, &centroid)?;
        out_facets.push(Facet { vertices: verts.clone(), normal, offset });
    }

    let hull = HullComplex {
        dim: d,
        points: coords.iter().map(|c| DVector::from_row_slice(c)).collect(),
        facets: out_facets,
    };
    hull.validate()?;
    Ok(hull)
}

/// Unit outward normal and plane offset for the facet with the given
/// vertices. The normal is the generalized cross product of the edge
/// difference vectors, oriented away from the hull centroid.
fn facet_plane(
    coords: &[Vec<f64>],
    verts: &[usize],
    centroid: &DVector<f64>,
) -> Result<(DVector<f64>, f64), HullError> {
    let d = coords[verts[0]].len();
    let mut diffs = DMatrix::zeros(d - 1, d);
    for k in 1..d {
        for c in 0..d {
            diffs[(k - 1, c)] = coords[verts[k]][c] - coords[verts[0]][c];
        }
    }
    let mut normal = DVector::zeros(d);
    for j in 0..d {
        let minor = diffs.clone().remove_column(j);
        let det = minor.determinant();
        normal[j] = if j % 2 == 0 { det } else { -det };
    }
    let norm = normal.norm();
    if norm < 1e-14 {
        return Err(HullError::InvalidComplex(format!("degenerate facet {verts:?}")));
    }
    normal /= norm;
    let offset = verts
        .iter()
        .map(|&v| normal.dot(&DVector::from_row_slice(&coords[v])))
        .sum::<f64>()
        / verts.len() as f64;
    let side = offset - normal.dot(centroid);
    if side < 0.0 {
        return Ok((-normal, -offset));
    }
    Ok((normal, offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytopes::{generate, PolytopeKind};
    use crate::sphgeo::{circumradius_rj, UnitVector};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn hull_of(kind: PolytopeKind) -> HullComplex {
        let p = generate(kind).unwrap();
        convex_hull(&p.vertices).unwrap()
    }

    #[test]
    fn simplex_hulls_have_d_plus_1_facets() {
        for d in 3..=4 {
            let h = hull_of(PolytopeKind::Simplex(d));
            assert_eq!(h.facets.len(), d + 1);
            assert_eq!(h.vertex_indices().len(), d + 1);
        }
    }

    #[test]
    fn crosspolytope_hulls() {
        let h3 = hull_of(PolytopeKind::Crosspolytope(3));
        assert_eq!(h3.facets.len(), 8);
        let h4 = hull_of(PolytopeKind::Crosspolytope(4));
        assert_eq!(h4.facets.len(), 16);
    }

    #[test]
    fn icosahedron_hull_combinatorics_and_planes() {
        let h = hull_of(PolytopeKind::Icosahedron);
        assert_eq!(h.facets.len(), 20);
        assert_eq!(h.vertex_indices().len(), 12);
        // All facet planes at distance cos r_2(phi_I) from the origin.
        let phi = PolytopeKind::Icosahedron.phi();
        let rho = circumradius_rj(2, phi).unwrap().cos();
        for f in &h.facets {
            assert_relative_eq!(f.offset, rho, epsilon = 1e-12);
        }
    }

    #[test]
    fn cell600_hull_combinatorics() {
        let h = hull_of(PolytopeKind::Cell600);
        assert_eq!(h.facets.len(), 600);
        assert_eq!(h.vertex_indices().len(), 120);
        let phi = PolytopeKind::Cell600.phi();
        let rho = circumradius_rj(3, phi).unwrap().cos();
        for f in &h.facets {
            assert_relative_eq!(f.offset, rho, epsilon = 1e-12);
        }
    }

    #[test]
    fn cube_degeneracy_is_triangulated_coherently() {
        // All 2^3 sign vectors: six coplanar quads, the classic worst case
        // for visibility ties. The output must be 12 triangles forming a
        // valid 2-sphere complex with each quad split once.
        let s = 1.0 / 3f64.sqrt();
        let mut pts = Vec::new();
        for &x in &[-s, s] {
            for &y in &[-s, s] {
                for &z in &[-s, s] {
                    pts.push(UnitVector::new(vec![x, y, z]).unwrap());
                }
            }
        }
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.facets.len(), 12);
        assert_eq!(h.vertex_indices().len(), 8);
    }

    #[test]
    fn random_points_satisfy_euler_and_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for d in 3..=4usize {
            for _ in 0..5 {
                let pts: Vec<UnitVector> =
                    (0..10 + 2 * d).map(|_| crate::polytopes::random_unit(d, &mut rng)).collect();
                let h = convex_hull(&pts).unwrap();
                // validate() ran inside convex_hull; points on a sphere are in
                // convex position, so every input point is a hull vertex.
                assert_eq!(h.vertex_indices().len(), pts.len());
            }
        }
    }

    #[test]
    fn flat_input_is_rejected() {
        let pts: Vec<UnitVector> = (0..6)
            .map(|k| {
                let t = k as f64 * 0.9;
                UnitVector::new(vec![t.cos(), t.sin(), 0.0]).unwrap()
            })
            .collect();
        assert!(matches!(convex_hull(&pts), Err(HullError::FlatInput)));
    }

    #[test]
    fn too_few_points_is_rejected() {
        let pts: Vec<UnitVector> = vec![
            UnitVector::new(vec![1.0, 0.0, 0.0]).unwrap(),
            UnitVector::new(vec![0.0, 1.0, 0.0]).unwrap(),
            UnitVector::new(vec![0.0, 0.0, 1.0]).unwrap(),
        ];
        assert!(matches!(convex_hull(&pts), Err(HullError::TooFewPoints { .. })));
    }

    #[test]
    fn facet_normals_point_outward() {
        let h = hull_of(PolytopeKind::Icosahedron);
        for f in &h.facets {
            assert!(f.offset > 0.0);
            for v in &f.vertices {
                assert_relative_eq!(f.normal.dot(&h.points[*v]), f.offset, epsilon = 1e-12);
            }
        }
    }
}
