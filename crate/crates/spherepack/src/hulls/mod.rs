//! Convex hulls in R^3/R^4 with exact-sign predicates, and the spherical
//! Delone / Dirichlet-Voronoi machinery built on top of them: cells,
//! circumradii, face lattices, towers, and quasi-orthoschemes.

pub mod delone;
pub mod dv;
pub mod hull;
pub mod predicates;

pub use delone::{delone_complex, DeloneCell, DeloneComplex};
pub use dv::{
    closest_point_on_face, dv_cell, dv_membership, quasi_orthoschemes, DVCell, DvFace, DvVertex,
    QuasiOrthoscheme,
};
pub use hull::{convex_hull, Facet, HullComplex};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HullError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("input points span no full-dimensional hull")]
    FlatInput,
    #[error("unsupported dimension {0}")]
    BadDimension(usize),
    #[error("origin is not interior to the hull (facet {facet} has offset {offset:e})")]
    OriginNotInterior { facet: usize, offset: f64 },
    #[error("hull complex validation failed: {0}")]
    InvalidComplex(String),
    #[error("no such site: {0}")]
    BadSite(usize),
    #[error(transparent)]
    Geo(#[from] crate::sphgeo::GeoError),
}
