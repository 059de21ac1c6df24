//! Numerical toolkit for packings of equal spherical caps on S^{d-1}.
//!
//! The library is organized bottom-up:
//!
//! * [`sphgeo`] - unit vectors, geodesic distance, spherical trigonometry,
//!   circumradius functions, cap and simplex measures, adaptive simplex
//!   quadrature.
//! * [`polytopes`] - generators for the simplicial regular polytopes whose
//!   vertex sets are optimal cap packings (regular simplex, crosspolytope,
//!   icosahedron, 600-cell), plus packing validation.
//! * [`lpbound`] - Gegenbauer polynomials and linear-programming bounds on
//!   packing cardinality, with explicit low-degree certificates.
//! * [`hulls`] - robust incremental convex hull for d in {3,4}, Delone cell
//!   complexes on the sphere, Dirichlet-Voronoi cells by duality, and their
//!   decomposition into quasi-orthoschemes.
//! * [`densities`] - orthoscheme construction, the density functional Delta,
//!   the simplex bound, and numerical verification of the volume-stability
//!   lemmas that drive the recovery error estimates.
//! * [`recovery`] - constructive stability: rebuilding the exact polytope
//!   from a near-optimal packing with certified deviation bounds.
//! * [`experiment`] / [`io`] - reproducible perturbation experiments and the
//!   JSON/CSV interchange formats used by the CLI.

pub mod densities;
pub mod experiment;
pub mod hulls;
pub mod io;
pub mod lpbound;
pub mod polytopes;
pub mod recovery;
pub mod sphgeo;
