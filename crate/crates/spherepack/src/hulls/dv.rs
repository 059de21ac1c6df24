//! Dirichlet-Voronoi cells on the sphere, built from the Delone complex by
//! duality: DV vertices are circumcenters of the Delone cells around a
//! site, DV faces are rings of Delone cells around shared sub-simplices.
//! Towers of faces expand into quasi-orthoschemes, the simplices behind the
//! density bound.

use super::delone::DeloneComplex;
use super::HullError;
use crate::sphgeo::{
    geodesic_distance, spherical_polygon_area, spherical_simplex_volume, GeoError,
    SphericalSimplex, UnitVector,
};
use nalgebra::{DMatrix, Vector3};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct DvVertex {
    pub point: UnitVector,
    /// Delone cells whose circumcenter this is (several when cospherical
    /// degeneracies were triangulated).
    pub delone_cells: Vec<usize>,
    /// Geodesic distance to the owning site.
    pub dist: f64,
}

#[derive(Debug, Clone)]
pub struct DvFace {
    /// Intrinsic dimension: 0 (vertex), 1 (edge), 2 (polygon, d = 4 only).
    pub dim: usize,
    /// Vertex ids, in cyclic boundary order for dim 2.
    pub vertices: Vec<usize>,
    /// Face ids one dimension down.
    pub children: Vec<usize>,
    /// The other sites whose bisectors support this face.
    pub dual_sites: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DVCell {
    pub site: usize,
    /// Ambient dimension d (the cell is (d-1)-dimensional).
    pub dim: usize,
    /// Delone neighbors of the site; one bisector constraint each.
    pub neighbors: Vec<usize>,
    pub vertices: Vec<DvVertex>,
    /// All proper faces of dimension <= d - 2. The first `vertices.len()`
    /// entries are the dim-0 faces in vertex order.
    pub faces: Vec<DvFace>,
    /// For d = 3: the cell's boundary polygon as a vertex-id cycle.
    pub boundary_cycle: Option<Vec<usize>>,
}

impl DVCell {
    pub fn face_ids_of_dim(&self, dim: usize) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.faces[f].dim == dim).collect()
    }

    /// Spherical area of a d = 3 cell via its boundary cycle.
    pub fn polygon_area(&self) -> Result<f64, GeoError> {
        let cycle = self.boundary_cycle.as_ref().ok_or(GeoError::UnsupportedDimension(self.dim))?;
        let pts: Vec<UnitVector> = cycle.iter().map(|&v| self.vertices[v].point.clone()).collect();
        spherical_polygon_area(&pts)
    }
}

/// Membership in the DV cell of `site` straight from the definition: u is
/// at least as close to the site as to every other point (1e-12 slack).
pub fn dv_membership(points: &[UnitVector], site: usize, u: &UnitVector) -> bool {
    let d0 = geodesic_distance(u, &points[site]);
    points.iter().enumerate().all(|(j, p)| j == site || d0 <= geodesic_distance(u, p) + 1e-12)
}

/// Chord-distance tolerance for identifying coincident circumcenters.
/// (Chord, not geodesic: acos loses half the significand near zero.)
const MERGE_TOL: f64 = 1e-9;

/// Walks the ring of Delone cells around a hinge: `others_of(cell)` yields
/// the two "free" sites of the cell, `by_key[site]` the (exactly two) cells
/// containing the hinge extended by that site. Returns the cell cycle and
/// the connecting site sequence (keys[t] joins cells[t] and cells[t+1]).
fn ring_walk(
    start: usize,
    others_of: &dyn Fn(usize) -> (usize, usize),
    by_key: &HashMap<usize, Vec<usize>>,
) -> Result<(Vec<usize>, Vec<usize>), HullError> {
    let mut cells = vec![start];
    let mut keys = Vec::new();
    let (_, mut exit) = others_of(start);
    let mut current = start;
    for _ in 0..(2 * by_key.len() + 2) {
        keys.push(exit);
        let pair = by_key
            .get(&exit)
            .ok_or_else(|| HullError::InvalidComplex(format!("open ring at hinge {exit}")))?;
        if pair.len() != 2 {
            return Err(HullError::InvalidComplex(format!(
                "hinge {exit} borders {} cells",
                pair.len()
            )));
        }
        let next = if pair[0] == current { pair[1] } else { pair[0] };
        if next == start {
            return Ok((cells, keys));
        }
        cells.push(next);
        let (x, y) = others_of(next);
        exit = if x == exit { y } else { x };
        current = next;
    }
    Err(HullError::InvalidComplex("ring walk did not close".into()))
}

/// Builds the DV cell of a site, with the face lattice enumerated for
/// d in {3, 4}.
pub fn dv_cell(complex: &DeloneComplex, site: usize) -> Result<DVCell, HullError> {
    let d = complex.dim;
    if site >= complex.points.len() {
        return Err(HullError::BadSite(site));
    }
    let incident = complex.incident_cells(site);
    if incident.is_empty() {
        return Err(HullError::InvalidComplex(format!("site {site} is not a hull vertex")));
    }
    let x = &complex.points[site];

    // Merge coincident circumcenters into DV vertices.
    let mut vertices: Vec<DvVertex> = Vec::new();
    let mut vid_of_cell: HashMap<usize, usize> = HashMap::new();
    for &c in &incident {
        let center = &complex.cells[c].circumcenter;
        let found = vertices
            .iter()
            .position(|v| (v.point.coords() - center.coords()).norm() < MERGE_TOL);
        let vid = match found {
            Some(v) => {
                vertices[v].delone_cells.push(c);
                v
            }
            None => {
                vertices.push(DvVertex {
                    point: center.clone(),
                    delone_cells: vec![c],
                    dist: geodesic_distance(x, center),
                });
                vertices.len() - 1
            }
        };
        vid_of_cell.insert(c, vid);
    }

    let mut faces: Vec<DvFace> = Vec::new();
    for (vid, v) in vertices.iter().enumerate() {
        let mut dual: Vec<usize> = v
            .delone_cells
            .iter()
            .flat_map(|&c| complex.cells[c].vertices.iter().copied())
            .filter(|&s| s != site)
            .collect();
        dual.sort_unstable();
        dual.dedup();
        faces.push(DvFace { dim: 0, vertices: vec![vid], children: Vec::new(), dual_sites: dual });
        debug_assert_eq!(vid, faces.len() - 1);
    }

    let others = |c: usize| -> Vec<usize> {
        complex.cells[c].vertices.iter().copied().filter(|&s| s != site).collect()
    };

    match d {
        3 => {
            // One ring of triangles around the site.
            let mut by_j: HashMap<usize, Vec<usize>> = HashMap::new();
            for &c in &incident {
                for s in others(c) {
                    by_j.entry(s).or_default().push(c);
                }
            }
            let others2 = |c: usize| {
                let o = others(c);
                (o[0], o[1])
            };
            let (ring, js) = ring_walk(incident[0], &others2, &by_j)?;
            let mut cycle: Vec<usize> = Vec::new();
            for &c in &ring {
                let vid = vid_of_cell[&c];
                if cycle.last() != Some(&vid) {
                    cycle.push(vid);
                }
            }
            while cycle.len() > 1 && cycle.first() == cycle.last() {
                cycle.pop();
            }
            for (t, &c) in ring.iter().enumerate() {
                let v1 = vid_of_cell[&c];
                let v2 = vid_of_cell[&ring[(t + 1) % ring.len()]];
                if v1 == v2 {
                    continue;
                }
                faces.push(DvFace {
                    dim: 1,
                    vertices: vec![v1, v2],
                    children: vec![v1, v2],
                    dual_sites: vec![js[t]],
                });
            }
            let mut neighbors: Vec<usize> = js.clone();
            neighbors.sort_unstable();
            neighbors.dedup();
            Ok(DVCell {
                site,
                dim: d,
                neighbors,
                vertices,
                faces,
                boundary_cycle: Some(cycle),
            })
        }
        4 => {
            // Edges: dual to Delone triangles {site, j, k}.
            let mut by_pair: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
            for &c in &incident {
                let o = others(c);
                for a in 0..o.len() {
                    for b in (a + 1)..o.len() {
                        let key = (o[a].min(o[b]), o[a].max(o[b]));
                        by_pair.entry(key).or_default().push(c);
                    }
                }
            }
            let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
            let mut pairs: Vec<(usize, usize)> = by_pair.keys().copied().collect();
            pairs.sort_unstable();
            for key in pairs {
                let cs = &by_pair[&key];
                if cs.len() != 2 {
                    return Err(HullError::InvalidComplex(format!(
                        "Delone triangle {{{site}, {}, {}}} lies in {} cells",
                        key.0,
                        key.1,
                        cs.len()
                    )));
                }
                let (v1, v2) = (vid_of_cell[&cs[0]], vid_of_cell[&cs[1]]);
                if v1 == v2 {
                    continue;
                }
                faces.push(DvFace {
                    dim: 1,
                    vertices: vec![v1, v2],
                    children: vec![v1, v2],
                    dual_sites: vec![key.0, key.1],
                });
                edge_id.insert(key, faces.len() - 1);
            }
            // Polygons: one per neighbor j, the ring of tetrahedra around
            // the Delone edge {site, j}.
            let mut neighbors: Vec<usize> = incident.iter().flat_map(|&c| others(c)).collect();
            neighbors.sort_unstable();
            neighbors.dedup();
            for &j in &neighbors {
                let around: Vec<usize> =
                    incident.iter().copied().filter(|&c| others(c).contains(&j)).collect();
                let mut by_k: HashMap<usize, Vec<usize>> = HashMap::new();
                for &c in &around {
                    for s in others(c) {
                        if s != j {
                            by_k.entry(s).or_default().push(c);
                        }
                    }
                }
                let others2 = |c: usize| {
                    let o: Vec<usize> = others(c).into_iter().filter(|&s| s != j).collect();
                    (o[0], o[1])
                };
                let (ring, ks) = ring_walk(around[0], &others2, &by_k)?;
                let mut cycle: Vec<usize> = Vec::new();
                for &c in &ring {
                    let vid = vid_of_cell[&c];
                    if cycle.last() != Some(&vid) {
                        cycle.push(vid);
                    }
                }
                while cycle.len() > 1 && cycle.first() == cycle.last() {
                    cycle.pop();
                }
                if cycle.len() < 3 {
                    continue; // degenerate polygon collapsed by merging
                }
                let mut children: Vec<usize> = ks
                    .iter()
                    .filter_map(|&k| edge_id.get(&(j.min(k), j.max(k))).copied())
                    .collect();
                children.sort_unstable();
                children.dedup();
                faces.push(DvFace { dim: 2, vertices: cycle, children, dual_sites: vec![j] });
            }
            Ok(DVCell { site, dim: d, neighbors, vertices, faces, boundary_cycle: None })
        }
        other => Err(HullError::BadDimension(other)),
    }
}

/// The point of face F closest to the owning site, and whether it lies in
/// the relative interior of F. Projects the site onto the linear span of
/// the face; if the projection leaves the face, recurses to the children
/// (the minimum over a spherically convex face is then attained on its
/// boundary).
pub fn closest_point_on_face(
    complex: &DeloneComplex,
    cell: &DVCell,
    face: usize,
) -> Result<(UnitVector, bool), HullError> {
    let x = &complex.points[cell.site];
    let f = &cell.faces[face];
    if f.dim == 0 {
        return Ok((cell.vertices[f.vertices[0]].point.clone(), true));
    }
    let d = cell.dim;
    let k = f.vertices.len();
    let mut m = DMatrix::zeros(k, d);
    for (r, &v) in f.vertices.iter().enumerate() {
        for c in 0..d {
            m[(r, c)] = cell.vertices[v].point.coords()[c];
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("svd v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let mut proj = nalgebra::DVector::zeros(d);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-9 * smax.max(1.0) {
            let w = vt.row(i).transpose();
            proj += &w * x.coords().dot(&w);
        }
    }
    let contained_and_relint = if proj.norm() < 1e-12 {
        None
    } else {
        let p = UnitVector::normalize(proj).map_err(HullError::Geo)?;
        match f.dim {
            1 => {
                let a = &cell.vertices[f.vertices[0]].point;
                let b = &cell.vertices[f.vertices[1]].point;
                let c = a.dot(b);
                let den = 1.0 - c * c;
                let (pa, pb) = (a.dot(&p), b.dot(&p));
                let alpha = (pa - c * pb) / den;
                let beta = (pb - c * pa) / den;
                if alpha >= -1e-10 && beta >= -1e-10 {
                    Some((p, alpha > 1e-10 && beta > 1e-10))
                } else {
                    None
                }
            }
            2 => {
                // Work in the 3-dimensional span: coordinates in the kept
                // right-singular basis.
                let basis: Vec<nalgebra::DVector<f64>> = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .filter(|&(_, &s)| s > 1e-9 * smax.max(1.0))
                    .map(|(i, _)| vt.row(i).transpose())
                    .collect();
                if basis.len() != 3 {
                    return Err(HullError::InvalidComplex(format!(
                        "polygon face {face} spans rank {}",
                        basis.len()
                    )));
                }
                let coords3 = |u: &UnitVector| {
                    Vector3::new(
                        u.coords().dot(&basis[0]),
                        u.coords().dot(&basis[1]),
                        u.coords().dot(&basis[2]),
                    )
                };
                let cyc: Vec<Vector3<f64>> =
                    f.vertices.iter().map(|&v| coords3(&cell.vertices[v].point)).collect();
                let centroid = cyc.iter().sum::<Vector3<f64>>() / cyc.len() as f64;
                let p3 = coords3(&p);
                let mut contained = true;
                let mut relint = true;
                for t in 0..cyc.len() {
                    let mut n = cyc[t].cross(&cyc[(t + 1) % cyc.len()]);
                    let nn = n.norm();
                    if nn < 1e-14 {
                        continue;
                    }
                    n /= nn;
                    if n.dot(&centroid) < 0.0 {
                        n = -n;
                    }
                    let s = n.dot(&p3);
                    if s < -1e-10 {
                        contained = false;
                        break;
                    }
                    if s <= 1e-10 {
                        relint = false;
                    }
                }
                if contained {
                    Some((p, relint))
                } else {
                    None
                }
            }
            other => return Err(HullError::BadDimension(other)),
        }
    };
    if let Some((p, relint)) = contained_and_relint {
        return Ok((p, relint));
    }
    // Projection left the face: minimize over the boundary.
    let children: Vec<usize> =
        if f.children.is_empty() { f.vertices.clone() } else { f.children.clone() };
    let mut best: Option<(UnitVector, f64)> = None;
    for &ch in &children {
        let (q, _) = closest_point_on_face(complex, cell, ch)?;
        let dist = geodesic_distance(x, &q);
        if best.as_ref().map_or(true, |(_, bd)| dist < *bd) {
            best = Some((q, dist));
        }
    }
    let (q, _) = best.ok_or_else(|| HullError::InvalidComplex("face with no boundary".into()))?;
    Ok((q, false))
}

#[derive(Debug, Clone)]
pub struct QuasiOrthoscheme {
    /// Ordered vertices: the site, then q(F_{d-2}), ..., q(F_0).
    pub vertices: Vec<UnitVector>,
    /// Face ids of the tower, ordered F_{d-2}, ..., F_0 to match `vertices`.
    pub tower: Vec<usize>,
    /// True when every q(F_j), j = 1..d-2, lies in the relative interior of
    /// its face; the simplex then satisfies the orthoscheme chain condition.
    pub is_orthoscheme: bool,
}

impl QuasiOrthoscheme {
    pub fn volume(&self) -> Result<f64, GeoError> {
        spherical_simplex_volume(&SphericalSimplex::new(self.vertices.clone())?)
    }
}

/// Expands every proper tower of faces of the site's DV cell into a
/// quasi-orthoscheme. Their union triangulates the cell.
pub fn quasi_orthoschemes(
    complex: &DeloneComplex,
    site: usize,
) -> Result<Vec<QuasiOrthoscheme>, HullError> {
    let cell = dv_cell(complex, site)?;
    quasi_orthoschemes_of_cell(complex, &cell)
}

pub fn quasi_orthoschemes_of_cell(
    complex: &DeloneComplex,
    cell: &DVCell,
) -> Result<Vec<QuasiOrthoscheme>, HullError> {
    let x = &complex.points[cell.site];
    let mut memo: HashMap<usize, (UnitVector, bool)> = HashMap::new();
    let q = |cell: &DVCell, f: usize, memo: &mut HashMap<usize, (UnitVector, bool)>| {
        if let Some(v) = memo.get(&f) {
            return Ok::<(UnitVector, bool), HullError>(v.clone());
        }
        let v = closest_point_on_face(complex, cell, f)?;
        memo.insert(f, v.clone());
        Ok(v)
    };
    let mut out = Vec::new();
    let proper = |verts: &[UnitVector]| {
        for i in 0..verts.len() {
            for j in (i + 1)..verts.len() {
                if (verts[i].coords() - verts[j].coords()).norm() < 1e-9 {
                    return false;
                }
            }
        }
        true
    };
    match cell.dim {
        3 => {
            for f1 in cell.face_ids_of_dim(1) {
                let (q1, relint1) = q(cell, f1, &mut memo)?;
                for &f0 in &cell.faces[f1].children.clone() {
                    let (q0, _) = q(cell, f0, &mut memo)?;
                    let verts = vec![x.clone(), q1.clone(), q0];
                    if proper(&verts) {
                        out.push(QuasiOrthoscheme {
                            vertices: verts,
                            tower: vec![f1, f0],
                            is_orthoscheme: relint1,
                        });
                    }
                }
            }
        }
        4 => {
            for f2 in cell.face_ids_of_dim(2) {
                let (q2, relint2) = q(cell, f2, &mut memo)?;
                for &f1 in &cell.faces[f2].children.clone() {
                    let (q1, relint1) = q(cell, f1, &mut memo)?;
                    for &f0 in &cell.faces[f1].children.clone() {
                        let (q0, _) = q(cell, f0, &mut memo)?;
                        let verts = vec![x.clone(), q2.clone(), q1.clone(), q0];
                        if proper(&verts) {
                            out.push(QuasiOrthoscheme {
                                vertices: verts,
                                tower: vec![f2, f1, f0],
                                is_orthoscheme: relint1 && relint2,
                            });
                        }
                    }
                }
            }
        }
        other => return Err(HullError::BadDimension(other)),
    }
    Ok(out)
}
