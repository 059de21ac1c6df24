//! Delone cell decomposition of the sphere: radial projections of the
//! facets of the convex hull of the packing points. The outward facet
//! normal is the spherical circumcenter of the projected cell and
//! arccos(offset) is its circumradius.

use super::hull::{convex_hull, HullComplex};
use super::HullError;
use crate::sphgeo::{
    sphere_measure, spherical_simplex_volume, GeoError, SphericalSimplex, UnitVector,
};

#[derive(Debug, Clone)]
pub struct DeloneCell {
    /// Index of the underlying hull facet.
    pub facet: usize,
    /// Indices of the packing points spanning the cell.
    pub vertices: Vec<usize>,
    pub circumcenter: UnitVector,
    pub circumradius: f64,
}

#[derive(Debug, Clone)]
pub struct DeloneComplex {
    pub dim: usize,
    pub points: Vec<UnitVector>,
    pub hull: HullComplex,
    pub cells: Vec<DeloneCell>,
    pub max_circumradius: f64,
}

/// Builds the Delone decomposition. Errors if the origin is not interior to
/// the hull (equivalently, some open hemisphere is empty of points).
pub fn delone_complex(points: &[UnitVector]) -> Result<DeloneComplex, HullError> {
    let hull = convex_hull(points)?;
    for (fid, f) in hull.facets.iter().enumerate() {
        if f.offset <= 1e-12 {
            return Err(HullError::OriginNotInterior { facet: fid, offset: f.offset });
        }
    }
    let mut cells = Vec::with_capacity(hull.facets.len());
    let mut max_r: f64 = 0.0;
    for (fid, f) in hull.facets.iter().enumerate() {
        let center = UnitVector::normalize(f.normal.clone())?;
        let radius = f.offset.clamp(-1.0, 1.0).acos();
        max_r = max_r.max(radius);
        cells.push(DeloneCell {
            facet: fid,
            vertices: f.vertices.clone(),
            circumcenter: center,
            circumradius: radius,
        });
    }
    Ok(DeloneComplex {
        dim: points.first().map(|p| p.dim()).unwrap_or(0),
        points: points.to_vec(),
        hull,
        cells,
        max_circumradius: max_r,
    })
}

impl DeloneComplex {
    /// Spherical volume of one cell (arc length for d = 2, Girard area for
    /// d = 3, adaptive quadrature for d = 4).
    pub fn cell_volume(&self, cell: usize) -> Result<f64, GeoError> {
        let c = &self.cells[cell];
        let verts: Vec<UnitVector> =
            c.vertices.iter().map(|&i| self.points[i].clone()).collect();
        if self.dim == 2 {
            return Ok(crate::sphgeo::geodesic_distance(&verts[0], &verts[1]));
        }
        spherical_simplex_volume(&SphericalSimplex::new(verts)?)
    }

    /// Sum of all cell volumes; equals sphere_measure(dim) for a valid
    /// decomposition.
    pub fn total_volume(&self) -> Result<f64, GeoError> {
        let mut sum = 0.0;
        for i in 0..self.cells.len() {
            sum += self.cell_volume(i)?;
        }
        Ok(sum)
    }

    /// Ids of cells having the given packing point as a vertex.
    pub fn incident_cells(&self, site: usize) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&c| self.cells[c].vertices.contains(&site))
            .collect()
    }

    /// Relative gap between the summed cell volumes and the measure of the
    /// sphere; a tiling sanity check.
    pub fn tiling_defect(&self) -> Result<f64, GeoError> {
        let total = self.total_volume()?;
        let measure = sphere_measure(self.dim)?;
        Ok((total - measure).abs() / measure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytopes::{generate, PolytopeKind};
    use crate::sphgeo::{circumradius_rj, geodesic_distance};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn complex_of(kind: PolytopeKind) -> DeloneComplex {
        let p = generate(kind).unwrap();
        delone_complex(&p.vertices).unwrap()
    }

    #[test]
    fn icosahedron_cells_and_radii() {
        let dc = complex_of(PolytopeKind::Icosahedron);
        assert_eq!(dc.cells.len(), 20);
        let r2 = circumradius_rj(2, PolytopeKind::Icosahedron.phi()).unwrap();
        for c in &dc.cells {
            assert!((c.circumradius - r2).abs() < 1e-9);
        }
        assert!((dc.max_circumradius - r2).abs() < 1e-9);
        assert!(dc.tiling_defect().unwrap() < 1e-9);
    }

    #[test]
    fn cell600_cells_and_radii() {
        let dc = complex_of(PolytopeKind::Cell600);
        assert_eq!(dc.cells.len(), 600);
        let r3 = circumradius_rj(3, PI / 10.0).unwrap();
        for c in &dc.cells {
            assert!((c.circumradius - r3).abs() < 1e-9);
        }
    }

    #[test]
    fn simplex4_cells_and_radii() {
        let dc = complex_of(PolytopeKind::Simplex(4));
        assert_eq!(dc.cells.len(), 5);
        let r3 = circumradius_rj(3, PolytopeKind::Simplex(4).phi()).unwrap();
        for c in &dc.cells {
            assert!((c.circumradius - r3).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_vertices_are_equidistant_from_circumcenter() {
        for kind in [PolytopeKind::Icosahedron, PolytopeKind::Crosspolytope(3), PolytopeKind::Simplex(3)]
        {
            let dc = complex_of(kind);
            for c in &dc.cells {
                for &v in &c.vertices {
                    let d = geodesic_distance(&c.circumcenter, &dc.points[v]);
                    assert!(
                        (d - c.circumradius).abs() < 1e-9,
                        "{kind:?}: vertex {v} at {d}, radius {}",
                        c.circumradius
                    );
                }
            }
        }
    }

    #[test]
    fn octahedron_tiles_the_sphere() {
        let dc = complex_of(PolytopeKind::Crosspolytope(3));
        assert_eq!(dc.cells.len(), 8);
        // Octant area pi/2 each.
        for i in 0..8 {
            assert_relative_eq!(dc.cell_volume(i).unwrap(), PI / 2.0, epsilon = 1e-10);
        }
        assert!(dc.tiling_defect().unwrap() < 1e-10);
    }

    #[test]
    fn hemispheric_input_is_rejected() {
        // Six points clustered around the north pole: full-dimensional hull
        // but the origin is outside.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<UnitVector> = (0..6)
            .map(|_| {
                let x = rng.gen_range(-0.3..0.3);
                let y = rng.gen_range(-0.3..0.3);
                let z = (1.0f64 - x * x - y * y).sqrt();
                UnitVector::new(vec![x, y, z]).unwrap()
            })
            .collect();
        assert!(matches!(
            delone_complex(&pts),
            Err(HullError::OriginNotInterior { .. })
        ));
    }

    #[test]
    fn perturbed_icosahedron_circumradii_stay_in_step1_band() {
        let p = generate(PolytopeKind::Icosahedron).unwrap();
        let r2 = circumradius_rj(2, PolytopeKind::Icosahedron.phi()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let eps = 1e-7;
        let gamma = 1e7;
        for _ in 0..5 {
            let pts: Vec<UnitVector> = p
                .vertices
                .iter()
                .map(|v| {
                    let mut t = crate::polytopes::random_unit(3, &mut rng).coords().clone();
                    let c = t.dot(v.coords());
                    t -= v.coords() * c;
                    let t = &t / t.norm();
                    let a: f64 = rng.gen_range(0.0..eps);
                    UnitVector::normalize(v.coords() * a.cos() + t * a.sin()).unwrap()
                })
                .collect();
            let dc = delone_complex(&pts).unwrap();
            assert_eq!(dc.cells.len(), 20);
            for c in &dc.cells {
                assert!(c.circumradius <= r2 + gamma * eps);
                assert!(c.circumradius >= r2 - gamma * eps);
            }
        }
    }

    #[test]
    fn random_delone_tiles_the_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for d in 3..=4usize {
            let pts: Vec<UnitVector> =
                (0..12 + 4 * d).map(|_| crate::polytopes::random_unit(d, &mut rng)).collect();
            let dc = delone_complex(&pts).unwrap();
            let tol = if d == 3 { 1e-9 } else { 1e-6 };
            assert!(dc.tiling_defect().unwrap() < tol, "d={d}");
        }
    }
}
