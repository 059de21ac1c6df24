//! Orthoschemes, the vertex-density functional, the simplex bound, and
//! numerical verification of the volume and geometry estimates used by the
//! recovery certificates.
//!
//! The density of an orthoscheme with apex z_0 is measured two independent
//! ways: as the measure ratio of a small cap around z_0 intersected with the
//! simplex, and as the solid-angle fraction of the tangent cone at z_0. Both
//! are computed numerically and must agree; the agreement is itself one of
//! the cross-checks this module exists to provide.

use crate::sphgeo::{
    cap_volume, chain_orthogonality_residual, circumradius_rj, geodesic_distance, quadrature,
    sphere_measure, spherical_simplex_volume_quadrature, spherical_triangle_area, tangent_basis,
    tangent_direction, GeoError, SphericalSimplex, UnitVector, VolumeOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("invalid orthoscheme parameters: {0}")]
    BadParameters(String),
    #[error("density routes disagree: cap ratio {cap_ratio}, solid angle {solid_angle}")]
    RouteMismatch { cap_ratio: f64, solid_angle: f64 },
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// An orthoscheme on S^{d-1}: ordered vertices z_0, ..., z_{d-1} with
/// delta(z_0, z_i) = t_i, where the great sphere through z_0..z_i is
/// orthogonal to the one through z_i..z_{d-1} for interior i.
#[derive(Debug, Clone)]
pub struct Orthoscheme {
    /// t_1 < ... < t_{d-1} in (0, pi/2).
    pub params: Vec<f64>,
    /// Realized vertices in canonical coordinates: z_0 = e_1 and z_i in
    /// span(z_{i-1}, e_{i+1}).
    pub vertices: Vec<UnitVector>,
    pub dim: usize,
}

/// Builds the canonical orthoscheme for strictly increasing parameters:
/// z_i = (cos t_i / cos t_{i-1}) z_{i-1} + beta_i e_{i+1}. Each step keeps
/// the first coordinate at cos t_i and adds a fresh orthogonal component,
/// which makes the orthogonality chain hold by construction.
pub fn build_orthoscheme(t: &[f64]) -> Result<Orthoscheme, DensityError> {
    let d = t.len() + 1;
    if t.is_empty() || d > 5 {
        return Err(DensityError::BadParameters(format!("{} parameters", t.len())));
    }
    let mut prev = 0.0f64;
    for (i, &ti) in t.iter().enumerate() {
        if !(0.0..FRAC_PI_2_OPEN).contains(&ti) || ti <= prev {
            return Err(DensityError::BadParameters(format!(
                "t_{} = {ti} violates 0 < t_1 < ... < t_{} < pi/2",
                i + 1,
                t.len()
            )));
        }
        prev = ti;
    }
    let mut vertices = Vec::with_capacity(d);
    let mut z = DVector::zeros(d);
    z[0] = 1.0;
    vertices.push(UnitVector::from_dvector(z.clone())?);
    let mut cos_prev = 1.0;
    for (i, &ti) in t.iter().enumerate() {
        let ratio = ti.cos() / cos_prev;
        let beta = (1.0 - ratio * ratio).sqrt();
        z = &z * ratio;
        z[i + 1] += beta;
        vertices.push(UnitVector::from_dvector(z.clone())?);
        cos_prev = ti.cos();
    }
    let residual = chain_orthogonality_residual(&vertices)?;
    if residual > 1e-10 {
        return Err(DensityError::BadParameters(format!(
            "orthogonality chain residual {residual:e}"
        )));
    }
    Ok(Orthoscheme { params: t.to_vec(), vertices, dim: d })
}

const FRAC_PI_2_OPEN: f64 = std::f64::consts::FRAC_PI_2;

impl Orthoscheme {
    pub fn simplex(&self) -> Result<SphericalSimplex, GeoError> {
        SphericalSimplex::new(self.vertices.clone())
    }

    /// Spherical volume; exact (Girard) for d = 3, adaptive quadrature for
    /// d = 4.
    pub fn volume(&self) -> Result<f64, DensityError> {
        self.volume_with(VolumeOptions::default())
    }

    pub fn volume_with(&self, opts: VolumeOptions) -> Result<f64, DensityError> {
        let s = self.simplex()?;
        match self.dim {
            3 => Ok(spherical_triangle_area(&s)?),
            4 => Ok(spherical_simplex_volume_quadrature(&s, opts)?),
            d => Err(DensityError::Geo(GeoError::UnsupportedDimension(d))),
        }
    }

    /// The spherical diameter, attained by the longest edge from the apex.
    pub fn diameter(&self) -> f64 {
        *self.params.last().expect("nonempty parameters")
    }
}

/// Vector orthogonal to the span of d-1 vectors in R^d (cofactor expansion).
pub(crate) fn generalized_cross(vs: &[DVector<f64>]) -> DVector<f64> {
    let d = vs[0].len();
    debug_assert_eq!(vs.len(), d - 1);
    let mut n = DVector::zeros(d);
    let mut m = DMatrix::zeros(d - 1, d - 1);
    for k in 0..d {
        for (r, v) in vs.iter().enumerate() {
            let mut cc = 0;
            for c in 0..d {
                if c != k {
                    m[(r, cc)] = v[c];
                    cc += 1;
                }
            }
        }
        n[k] = if k % 2 == 0 { m.determinant() } else { -m.determinant() };
    }
    n
}

/// Adaptive Simpson quadrature on [a, b].
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Measure of Theta intersected with the cap B(z_0, probe), by honest
/// integration in polar coordinates around the apex: for each tangent
/// direction inside the cone, the radial extent is the smaller of the probe
/// radius and the exit through the facet opposite z_0.
fn cap_sector_measure(o: &Orthoscheme, probe: f64) -> Result<f64, DensityError> {
    let d = o.dim;
    let z0 = &o.vertices[0];
    // Inward normal of the facet spanned by z_1..z_{d-1}.
    let others: Vec<DVector<f64>> = o.vertices[1..].iter().map(|v| v.coords().clone()).collect();
    let mut n0 = generalized_cross(&others);
    n0 /= n0.norm();
    if n0.dot(z0.coords()) < 0.0 {
        n0 = -n0;
    }
    let c0 = n0.dot(z0.coords());
    let radial_extent = |omega: &DVector<f64>| -> f64 {
        let s0 = omega.dot(&n0);
        if s0 >= 0.0 {
            probe
        } else {
            probe.min((c0 / -s0).atan())
        }
    };
    match d {
        3 => {
            let t1 = tangent_direction(z0, &o.vertices[1])?;
            let t2 = tangent_direction(z0, &o.vertices[2])?;
            let alpha = t1.dot(&t2).clamp(-1.0, 1.0).acos();
            let mut e2 = &t2 - &t1 * t2.dot(&t1);
            e2 /= e2.norm();
            let f = |s: f64| {
                let omega = &t1 * s.cos() + &e2 * s.sin();
                1.0 - radial_extent(&omega).cos()
            };
            Ok(adaptive_simpson(&f, 0.0, alpha, 1e-14))
        }
        4 => {
            let dirs: Vec<DVector<f64>> = (1..d)
                .map(|i| tangent_direction(z0, &o.vertices[i]))
                .collect::<Result<_, _>>()?;
            // Gnomonic chart on the direction 2-sphere, centered at the
            // normalized mean direction.
            let mut zc = dirs.iter().sum::<DVector<f64>>();
            zc /= zc.norm();
            let mut c1 = &dirs[0] - &zc * dirs[0].dot(&zc);
            c1 /= c1.norm();
            let mut c2 = &dirs[1] - &zc * dirs[1].dot(&zc) - &c1 * dirs[1].dot(&c1);
            c2 /= c2.norm();
            let y: Vec<[f64; 2]> = dirs
                .iter()
                .map(|t| {
                    let den = t.dot(&zc);
                    [t.dot(&c1) / den, t.dot(&c2) / den]
                })
                .collect();
            let f = |x: f64, yv: f64| {
                let w = &zc + &c1 * x + &c2 * yv;
                let omega = &w / w.norm();
                let theta = radial_extent(&omega);
                let inner = (theta - theta.sin() * theta.cos()) / 2.0;
                inner * (1.0 + x * x + yv * yv).powf(-1.5)
            };
            let r = quadrature::adaptive_triangle([y[0], y[1], y[2]], &f, 1e-10, 28);
            if !r.converged {
                return Err(DensityError::Geo(GeoError::QuadratureDiverged(r.last_change)));
            }
            Ok(r.value)
        }
        other => Err(DensityError::Geo(GeoError::UnsupportedDimension(other))),
    }
}

/// Solid-angle fraction of the tangent cone at z_0 inside the full tangent
/// sphere S^{d-2}.
fn solid_angle_fraction(o: &Orthoscheme) -> Result<f64, DensityError> {
    let d = o.dim;
    let z0 = &o.vertices[0];
    let basis = tangent_basis(z0);
    let dirs: Vec<DVector<f64>> = (1..d)
        .map(|i| {
            let t = tangent_direction(z0, &o.vertices[i])?;
            Ok(DVector::from_fn(d - 1, |k, _| t.dot(&basis[k])))
        })
        .collect::<Result<_, DensityError>>()?;
    match d {
        3 => {
            let alpha = dirs[0].dot(&dirs[1]).clamp(-1.0, 1.0).acos();
            Ok(alpha / sphere_measure(2)?)
        }
        4 => {
            let verts: Vec<UnitVector> = dirs
                .into_iter()
                .map(UnitVector::from_dvector)
                .collect::<Result<_, _>>()?;
            let tri = SphericalSimplex::new(verts)?;
            Ok(spherical_triangle_area(&tri)? / sphere_measure(3)?)
        }
        other => Err(DensityError::Geo(GeoError::UnsupportedDimension(other))),
    }
}

/// Both density routes at an explicit probe radius (must lie in (0, t_1]).
#[derive(Debug, Clone, Copy)]
pub struct DeltaRoutes {
    pub cap_ratio: f64,
    pub solid_angle: f64,
}

pub fn delta_routes(
    t: &[f64],
    probe: f64,
    opts: VolumeOptions,
) -> Result<DeltaRoutes, DensityError> {
    if !(0.0 < probe && probe <= t[0]) {
        return Err(DensityError::BadParameters(format!("probe {probe} outside (0, t_1]")));
    }
    let o = build_orthoscheme(t)?;
    let vol = o.volume_with(opts)?;
    let sector = cap_sector_measure(&o, probe)?;
    let cap = cap_volume(o.dim, probe)?;
    let fraction = solid_angle_fraction(&o)?;
    Ok(DeltaRoutes { cap_ratio: sector / (vol * cap), solid_angle: fraction / vol })
}

/// The vertex-density functional: cap-ratio and solid-angle routes must
/// agree to 1e-7 relative; the solid-angle value is returned.
pub fn delta(t: &[f64]) -> Result<f64, DensityError> {
    delta_with(t, VolumeOptions::default())
}

pub fn delta_with(t: &[f64], opts: VolumeOptions) -> Result<f64, DensityError> {
    if t.is_empty() {
        return Err(DensityError::BadParameters("no parameters".into()));
    }
    let routes = delta_routes(t, t[0] / 2.0, opts)?;
    let scale = routes.solid_angle.abs().max(1.0);
    if (routes.cap_ratio - routes.solid_angle).abs() > 1e-7 * scale {
        return Err(DensityError::RouteMismatch {
            cap_ratio: routes.cap_ratio,
            solid_angle: routes.solid_angle,
        });
    }
    Ok(routes.solid_angle)
}

/// The simplex bound: the maximal number of non-overlapping caps of radius
/// sigma is at most Delta(r_1(sigma), ..., r_{d-1}(sigma)) * |S^{d-1}|.
pub fn simplex_bound(d: usize, sigma: f64) -> Result<f64, DensityError> {
    if !(0.0..FRAC_PI_2_OPEN).contains(&sigma) || sigma <= 0.0 {
        return Err(DensityError::BadParameters(format!("sigma {sigma}")));
    }
    let params: Vec<f64> =
        (1..d).map(|j| circumradius_rj(j, sigma)).collect::<Result<_, _>>()?;
    Ok(delta(&params)? * sphere_measure(d)?)
}

/// Checks the monotonicity Delta(t) >= Delta(s) for componentwise t <= s.
pub fn check_delta_monotone(t: &[f64], s: &[f64]) -> Result<bool, DensityError> {
    if t.len() != s.len() || t.iter().zip(s).any(|(a, b)| a > b) {
        return Err(DensityError::BadParameters("need componentwise t <= s".into()));
    }
    Ok(delta(t)? >= delta(s)? - 1e-9)
}

/// One verified inequality, normalized to the form lhs <= rhs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs - lhs; nonnegative when the inequality holds.
    pub slack: f64,
    pub pass: bool,
}

impl LemmaCheck {
    fn new(name: &str, params: String, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self { name: name.into(), params, lhs, rhs, slack, pass: slack >= -1e-12 }
    }
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&LemmaCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Shrinkage constant for the regular-orthoscheme volume estimate:
/// d * 2^((d+3)/2) / sin(r_{d-1}(phi)).
pub fn shrink_constant(d: usize, phi: f64) -> Result<f64, DensityError> {
    let r = circumradius_rj(d - 1, phi)?;
    Ok(d as f64 * 2f64.powf((d as f64 + 3.0) / 2.0) / r.sin())
}

/// Small-cap density ceiling on S^2: the reciprocal cap measure
/// 1 / |B(z_0, r_2(phi - 1e-6))| that caps the density of any region
/// disjoint from the inner cap.
pub fn small_cap_ceiling_d3(phi: f64) -> Result<f64, DensityError> {
    let r2 = circumradius_rj(2, phi - 1e-6)?;
    Ok(1.0 / (2.0 * PI * (1.0 - r2.cos())))
}

/// Small-cap density ceiling on S^3: the density of a small cap inside the
/// spherical cone over a disc of radius xi at height phi - eps0 (computed by
/// radial projection to the tangent hyperplane, where the cone is Euclidean).
pub fn small_cap_ceiling_d4(phi: f64, eps0: f64) -> Result<f64, DensityError> {
    let p = phi - eps0;
    let r3 = circumradius_rj(3, p)?;
    let xi = (r3.cos() / p.cos()).clamp(-1.0, 1.0).acos();
    let h = p.tan();
    let rho = xi.tan();
    let cone_vol = adaptive_simpson(
        &|t: f64| {
            let rmax = rho * (1.0 - t / h);
            PI * (1.0 / (1.0 + t * t) - 1.0 / (1.0 + t * t + rmax * rmax))
        },
        0.0,
        h,
        1e-14,
    );
    let alpha = (p.tan() / r3.tan()).clamp(-1.0, 1.0).acos();
    Ok((1.0 - alpha.cos()) / (2.0 * cone_vol))
}

/// Numerically verifies the volume and density estimates for deformed
/// regular orthoschemes at a cap radius phi:
/// - shrunk-volume: |Theta(r(phi-eps))| > |Theta(r(phi))| (1 - aleph eps)
/// - shrunk-density: Delta(r(phi-eps)) <= Delta(r(phi)) (1 + 2 aleph eps)
/// - long-edge-excess: stretching the last parameter to t gains at least
///   (t - r_{d-1}) / 2^d of the volume
/// - density-drop: Delta(phi-eps, ..., r_{d-1}(phi) + gamma eps) falls below
///   the regular density by gamma eps / 200 (d=3) or / 100 (d=4)
/// - published linear bounds and small-cap ceilings at the icosahedral and
///   600-cell radii.
pub fn verify_volume_lemmas(
    phi: f64,
    d: usize,
    eps_grid: &[f64],
    gamma: f64,
) -> Result<LemmaReport, DensityError> {
    if !(3..=4).contains(&d) {
        return Err(DensityError::Geo(GeoError::UnsupportedDimension(d)));
    }
    let hyp = (d as f64 / (4.0 * (d as f64 - 1.0))).sqrt().asin();
    if !(0.0 < phi && phi < hyp) {
        return Err(DensityError::BadParameters(format!(
            "phi {phi} outside (0, {hyp}) hypothesis range"
        )));
    }
    let opts = VolumeOptions { rel_tol: 1e-8, max_depth: 26 };
    let aleph = shrink_constant(d, phi)?;
    let reg: Vec<f64> = (1..d).map(|j| circumradius_rj(j, phi)).collect::<Result<_, _>>()?;
    let vol_reg = build_orthoscheme(&reg)?.volume_with(opts)?;
    let delta_reg = delta_with(&reg, opts)?;
    let r_last = reg[d - 2];
    let mut report = LemmaReport::default();

    let shrunk_params = |eps: f64| -> Result<Vec<f64>, DensityError> {
        Ok((1..d).map(|j| circumradius_rj(j, phi - eps)).collect::<Result<_, _>>()?)
    };

    for &eps in eps_grid.iter().filter(|&&e| 0.0 < e && e < phi) {
        let vol_shrunk = build_orthoscheme(&shrunk_params(eps)?)?.volume_with(opts)?;
        report.checks.push(LemmaCheck::new(
            "shrunk-volume",
            format!("d={d} phi={phi:.6} eps={eps:e} aleph={aleph:.3}"),
            vol_reg * (1.0 - aleph * eps),
            vol_shrunk,
        ));
    }

    for &eps in eps_grid.iter().filter(|&&e| 0.0 < e && e < 1.0 / (2.0 * aleph)) {
        let delta_shrunk = delta_with(&shrunk_params(eps)?, opts)?;
        report.checks.push(LemmaCheck::new(
            "shrunk-density",
            format!("d={d} phi={phi:.6} eps={eps:e} aleph={aleph:.3}"),
            delta_shrunk,
            delta_reg * (1.0 + 2.0 * aleph * eps),
        ));
    }

    for delta_t in [0.01, 0.05] {
        let t = r_last + delta_t;
        if t >= PI / 3.0 {
            continue;
        }
        let mut stretched = reg.clone();
        stretched[d - 2] = t;
        let vol_t = build_orthoscheme(&stretched)?.volume_with(opts)?;
        report.checks.push(LemmaCheck::new(
            "long-edge-excess",
            format!("d={d} phi={phi:.6} t={t:.6}"),
            (t - r_last) / 2f64.powi(d as i32) * vol_reg,
            vol_t - vol_reg,
        ));
    }

    // Density drop for a stretched last edge, at the packing radii where the
    // linear rate is established (gamma >= 1e4 for d = 3, 1e6 for d = 4).
    let phi_i = 0.5 * (1.0 / 5.0f64.sqrt()).acos();
    let at_icosa = d == 3 && (phi - phi_i).abs() < 1e-9;
    let at_600 = d == 4 && (phi - PI / 10.0).abs() < 1e-9;
    let (gamma_floor, drop_denom) = if d == 3 { (1e4, 200.0) } else { (1e6, 100.0) };
    if (at_icosa || at_600) && gamma >= gamma_floor {
        let mut drop_eps: Vec<f64> = eps_grid
            .iter()
            .copied()
            .filter(|&e| 0.0 < e && e < 1.0 / (100.0 * gamma))
            .collect();
        if drop_eps.is_empty() {
            drop_eps = vec![1.0 / (1000.0 * gamma), 1.0 / (10000.0 * gamma)];
        }
        for eps in drop_eps {
            let mut pert: Vec<f64> = shrunk_params(eps)?;
            pert[d - 2] = r_last + gamma * eps;
            let delta_pert = delta_with(&pert, opts)?;
            report.checks.push(LemmaCheck::new(
                "density-drop",
                format!("d={d} phi={phi:.6} gamma={gamma:e} eps={eps:e}"),
                delta_pert,
                delta_reg - gamma * eps / drop_denom,
            ));
        }
    }

    if at_icosa {
        for &eps in eps_grid.iter().filter(|&&e| 0.0 < e && e < 0.01) {
            let delta_shrunk = delta_with(&shrunk_params(eps)?, opts)?;
            report.checks.push(LemmaCheck::new(
                "shrunk-density-linear",
                format!("d=3 phi=phi_icosa eps={eps:e}"),
                delta_shrunk,
                (3.0 / PI) * (1.0 + 80.0 * eps),
            ));
        }
        let ceiling = small_cap_ceiling_d3(phi)?;
        report.checks.push(LemmaCheck::new(
            "small-cap-ceiling",
            format!("d=3 phi=phi_icosa ceiling={ceiling:.6}"),
            ceiling,
            3.0 / PI - 0.175,
        ));
    }
    if at_600 {
        for &eps in eps_grid.iter().filter(|&&e| 0.0 < e && e < 0.004) {
            let delta_shrunk = delta_with(&shrunk_params(eps)?, opts)?;
            report.checks.push(LemmaCheck::new(
                "shrunk-density-linear",
                format!("d=4 phi=pi/10 eps={eps:e}"),
                delta_shrunk,
                (60.0 / (PI * PI)) * (1.0 + 240.0 * eps),
            ));
        }
        let ceiling = small_cap_ceiling_d4(phi, 1e-8)?;
        report.checks.push(LemmaCheck::new(
            "small-cap-ceiling",
            format!("d=4 phi=pi/10 ceiling={ceiling:.6}"),
            ceiling,
            60.0 / (PI * PI) - 0.3,
        ));
    }

    Ok(report)
}

/// Randomized verification of the elementary geometric inequalities used by
/// the recovery arguments: a Euclidean triangle-area floor, the angle bound
/// for two equal arcs, its perturbed form, a tetrahedron-volume floor, and
/// the hemisphere/crowding pair guarantees.
pub fn check_geometric_inequalities(
    samples: usize,
    seed: u64,
) -> Result<LemmaReport, DensityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LemmaReport::default();
    fn push_worst(
        report: &mut LemmaReport,
        name: &str,
        params: String,
        worst: Option<(f64, f64)>,
    ) {
        match worst {
            Some((lhs, rhs)) => report.checks.push(LemmaCheck::new(name, params, lhs, rhs)),
            None => report.checks.push(LemmaCheck {
                name: name.into(),
                params,
                lhs: 0.0,
                rhs: 0.0,
                slack: 0.0,
                pass: false,
            }),
        }
    }

    // Triangle with circumcenter inside and min side a: area >= (sqrt(3)/4) a^2.
    let mut worst: Option<(f64, f64)> = None;
    let mut accepted = 0usize;
    let mut tries = 0usize;
    while accepted < samples && tries < samples * 500 {
        tries += 1;
        let p: Vec<[f64; 2]> =
            (0..3).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if area2.abs() < 1e-3 {
            continue;
        }
        // Circumcenter via perpendicular bisector equations.
        let (ax, ay) = (p[0][0], p[0][1]);
        let (bx, by) = (p[1][0], p[1][1]);
        let (cx, cy) = (p[2][0], p[2][1]);
        let dd = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        let ux = ((ax * ax + ay * ay) * (by - cy)
            + (bx * bx + by * by) * (cy - ay)
            + (cx * cx + cy * cy) * (ay - by))
            / dd;
        let uy = ((ax * ax + ay * ay) * (cx - bx)
            + (bx * bx + by * by) * (ax - cx)
            + (cx * cx + cy * cy) * (bx - ax))
            / dd;
        // Inside test via barycentric signs.
        let sign = |p0: [f64; 2], p1: [f64; 2], q: (f64, f64)| {
            (p1[0] - p0[0]) * (q.1 - p0[1]) - (p1[1] - p0[1]) * (q.0 - p0[0])
        };
        let s0 = sign(p[0], p[1], (ux, uy));
        let s1 = sign(p[1], p[2], (ux, uy));
        let s2 = sign(p[2], p[0], (ux, uy));
        if !(s0.signum() == s1.signum() && s1.signum() == s2.signum()) {
            continue;
        }
        accepted += 1;
        let side = |i: usize, j: usize| {
            ((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)).sqrt()
        };
        let a = side(0, 1).min(side(1, 2)).min(side(2, 0));
        let area = area2.abs() / 2.0;
        let lhs = 3f64.sqrt() / 4.0 * a * a;
        if worst.map_or(true, |(l, r)| area - lhs < r - l) {
            worst = Some((lhs, area));
        }
    }
    push_worst(&mut report, "triangle-area-floor", format!("samples={accepted} seed={seed}"), worst);

    // Two arcs of equal length R from v enclosing angle omega, endpoints at
    // distance >= 2 psi: cos omega <= 1 - 2 sin^2 psi / sin^2 R.
    let mut worst: Option<(f64, f64)> = None;
    for _ in 0..samples {
        let r: f64 = rng.gen_range(0.05..1.5f64.min(FRAC_PI_2_OPEN - 0.01));
        let omega: f64 = rng.gen_range(0.01..PI);
        let x = UnitVector::new(vec![r.sin(), 0.0, r.cos()]).unwrap();
        let y =
            UnitVector::new(vec![r.sin() * omega.cos(), r.sin() * omega.sin(), r.cos()]).unwrap();
        let dxy = geodesic_distance(&x, &y);
        let psi = dxy / 2.0 * rng.gen_range(0.2..1.0);
        if psi <= 0.0 || psi >= r {
            continue;
        }
        let rhs = 1.0 - 2.0 * psi.sin().powi(2) / r.sin().powi(2);
        let lhs = omega.cos();
        if worst.map_or(true, |(l, rr)| rhs - lhs < rr - l) {
            worst = Some((lhs, rhs));
        }
    }
    push_worst(&mut report, "equal-arc-angle-bound", format!("samples={samples} seed={seed}"), worst);

    // Perturbed form: psi = phi - eps, R = r + gamma eps.
    let mut worst: Option<(f64, f64)> = None;
    let phi_i = 0.5 * (1.0 / 5.0f64.sqrt()).acos();
    let cases: Vec<(f64, f64, f64)> = vec![
        (phi_i, circumradius_rj(2, phi_i)?, 1e4),
        (PI / 10.0, circumradius_rj(3, PI / 10.0)?, 1e6),
    ];
    for (phi, r, gamma) in cases {
        for eps in [1e-9, 1e-8, 1e-7] {
            if r + gamma * eps >= FRAC_PI_2_OPEN - gamma * eps {
                continue;
            }
            let psi = phi - eps;
            let rr = r + gamma * eps;
            let lhs = 1.0 - 2.0 * psi.sin().powi(2) / rr.sin().powi(2);
            let rhs = 1.0 - 2.0 * phi.sin().powi(2) / r.sin().powi(2)
                + 4.0 * gamma * eps / r.sin().powi(2);
            if worst.map_or(true, |(l, rg)| rhs - lhs < rg - l) {
                worst = Some((lhs, rhs));
            }
        }
    }
    push_worst(&mut report, "perturbed-angle-bound", "radii grid".into(), worst);

    // Tetrahedra with pairwise inner products <= -theta: volume >= sqrt(theta)/4.
    let mut worst: Option<(f64, f64)> = None;
    let base = regular_tetrahedron();
    for _ in 0..samples {
        let verts: Vec<DVector<f64>> = base
            .iter()
            .map(|v| {
                let mut w = v.clone();
                for k in 0..3 {
                    w[k] += rng.gen_range(-0.08..0.08);
                }
                w /= w.norm();
                w
            })
            .collect();
        let mut max_dot = -1.0f64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                max_dot = max_dot.max(verts[i].dot(&verts[j]));
            }
        }
        let theta = -max_dot;
        if theta <= 1e-3 || theta >= 1.0 / 3.0 {
            continue;
        }
        let vol = tetra_volume(&verts);
        let lhs = theta.sqrt() / 4.0;
        if worst.map_or(true, |(l, r)| vol - lhs < r - l) {
            worst = Some((lhs, vol));
        }
    }
    push_worst(&mut report, "tetra-volume-floor", format!("samples={samples} seed={seed}"), worst);

    // The exact regular tetrahedron against the theta = 0.2 floor.
    let vol = tetra_volume(&base);
    report.checks.push(LemmaCheck::new(
        "tetra-volume-floor-regular",
        "theta=0.2 regular tetrahedron".into(),
        0.2f64.sqrt() / 4.0,
        vol,
    ));

    // d+1 unit vectors in a closed hemisphere always contain a nonnegative pair.
    let mut worst: Option<(f64, f64)> = None;
    for d in 3..=5usize {
        for _ in 0..samples {
            let v = crate::polytopes::random_unit(d, &mut rng);
            let us: Vec<UnitVector> = (0..=d)
                .map(|_| {
                    let w = crate::polytopes::random_unit(d, &mut rng);
                    let c = w.dot(&v);
                    if c >= 0.0 {
                        w
                    } else {
                        UnitVector::from_dvector(w.coords() - v.coords() * (2.0 * c)).unwrap()
                    }
                })
                .collect();
            let mut best = -1.0f64;
            for i in 0..us.len() {
                for j in (i + 1)..us.len() {
                    best = best.max(us[i].dot(&us[j]));
                }
            }
            if worst.map_or(true, |(l, r)| best < r - l) {
                worst = Some((0.0, best));
            }
        }
    }
    push_worst(&mut report, "hemisphere-pair", format!("d=3..5 samples={samples}"), worst);

    // Any d+2 unit vectors contain a nonnegative pair.
    let mut worst: Option<(f64, f64)> = None;
    for d in 3..=4usize {
        for _ in 0..samples {
            let us: Vec<UnitVector> =
                (0..d + 2).map(|_| crate::polytopes::random_unit(d, &mut rng)).collect();
            let mut best = -1.0f64;
            for i in 0..us.len() {
                for j in (i + 1)..us.len() {
                    best = best.max(us[i].dot(&us[j]));
                }
            }
            if worst.map_or(true, |(l, r)| best < r - l) {
                worst = Some((0.0, best));
            }
        }
    }
    push_worst(&mut report, "crowded-pair", format!("d=3..4 samples={samples}"), worst);

    Ok(report)
}

fn regular_tetrahedron() -> Vec<DVector<f64>> {
    let s = 1.0 / 3f64.sqrt();
    [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
        .iter()
        .map(|v| DVector::from_row_slice(v))
        .collect()
}

fn tetra_volume(verts: &[DVector<f64>]) -> f64 {
    let mut m = DMatrix::zeros(3, 3);
    for c in 0..3 {
        m.set_column(c, &(&verts[c + 1] - &verts[0]).column(0));
    }
    m.determinant().abs() / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn phi_icosa() -> f64 {
        0.5 * (1.0 / 5.0f64.sqrt()).acos()
    }

    #[test]
    fn orthoscheme_construction_realizes_parameters() {
        let t = vec![phi_icosa(), circumradius_rj(2, phi_icosa()).unwrap()];
        let o = build_orthoscheme(&t).unwrap();
        for (i, &ti) in t.iter().enumerate() {
            let dist = geodesic_distance(&o.vertices[0], &o.vertices[i + 1]);
            assert_relative_eq!(dist, ti, epsilon = 1e-12);
        }
        assert!(chain_orthogonality_residual(&o.vertices).unwrap() < 1e-12);
        // Diameter is the last parameter.
        let mut maxd = 0.0f64;
        for i in 0..o.vertices.len() {
            for j in (i + 1)..o.vertices.len() {
                maxd = maxd.max(geodesic_distance(&o.vertices[i], &o.vertices[j]));
            }
        }
        assert_relative_eq!(maxd, o.diameter(), epsilon = 1e-12);
    }

    #[test]
    fn orthoscheme_rejects_bad_parameters() {
        assert!(matches!(
            build_orthoscheme(&[0.5, 0.5]),
            Err(DensityError::BadParameters(_))
        ));
        assert!(matches!(
            build_orthoscheme(&[0.6, 0.4]),
            Err(DensityError::BadParameters(_))
        ));
        assert!(matches!(build_orthoscheme(&[]), Err(DensityError::BadParameters(_))));
        assert!(matches!(
            build_orthoscheme(&[0.3, 1.6]),
            Err(DensityError::BadParameters(_))
        ));
    }

    #[test]
    fn icosahedral_orthoscheme_volume() {
        let t = vec![phi_icosa(), circumradius_rj(2, phi_icosa()).unwrap()];
        let o = build_orthoscheme(&t).unwrap();
        assert_relative_eq!(o.volume().unwrap(), PI / 30.0, epsilon = 1e-9);
        // 120 congruent copies tile the 2-sphere.
        assert_relative_eq!(120.0 * (PI / 30.0), sphere_measure(3).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn cell600_orthoscheme_volume() {
        let phi = PI / 10.0;
        let t = vec![
            phi,
            circumradius_rj(2, phi).unwrap(),
            circumradius_rj(3, phi).unwrap(),
        ];
        let o = build_orthoscheme(&t).unwrap();
        let vol = o.volume().unwrap();
        assert_relative_eq!(vol, PI * PI / 7200.0, max_relative = 1e-5);
    }

    #[test]
    fn icosahedral_density_is_three_over_pi() {
        let t = vec![phi_icosa(), circumradius_rj(2, phi_icosa()).unwrap()];
        assert_relative_eq!(delta(&t).unwrap(), 3.0 / PI, epsilon = 1e-9);
    }

    #[test]
    fn cell600_density_is_sixty_over_pi_squared() {
        let phi = PI / 10.0;
        let t = vec![
            phi,
            circumradius_rj(2, phi).unwrap(),
            circumradius_rj(3, phi).unwrap(),
        ];
        assert_relative_eq!(delta(&t).unwrap(), 60.0 / (PI * PI), max_relative = 1e-5);
    }

    #[test]
    fn density_routes_agree_and_probe_independent() {
        let t3 = vec![phi_icosa(), circumradius_rj(2, phi_icosa()).unwrap()];
        let opts = VolumeOptions::default();
        let half = delta_routes(&t3, t3[0] / 2.0, opts).unwrap();
        let quarter = delta_routes(&t3, t3[0] / 4.0, opts).unwrap();
        assert!((half.cap_ratio - half.solid_angle).abs() < 1e-9);
        assert!((half.cap_ratio - quarter.cap_ratio).abs() < 1e-8);

        let phi = PI / 10.0;
        let t4 = vec![
            phi,
            circumradius_rj(2, phi).unwrap(),
            circumradius_rj(3, phi).unwrap(),
        ];
        let half = delta_routes(&t4, t4[0] / 2.0, opts).unwrap();
        let quarter = delta_routes(&t4, t4[0] / 4.0, opts).unwrap();
        let scale = half.solid_angle;
        assert!((half.cap_ratio - half.solid_angle).abs() / scale < 1e-7);
        assert!((half.cap_ratio - quarter.cap_ratio).abs() / scale < 1e-7);
    }

    #[test]
    fn simplex_bound_values() {
        assert_relative_eq!(simplex_bound(3, phi_icosa()).unwrap(), 12.0, epsilon = 1e-7);
        assert_relative_eq!(simplex_bound(4, PI / 10.0).unwrap(), 120.0, max_relative = 1e-5);
        // Monotone decreasing in sigma.
        assert!(simplex_bound(3, phi_icosa() + 1e-3).unwrap() < 12.0);
        assert!(simplex_bound(3, 1.6).is_err());
    }

    #[test]
    fn delta_monotone_under_parameter_growth() {
        let t = vec![phi_icosa(), circumradius_rj(2, phi_icosa()).unwrap()];
        assert!(check_delta_monotone(&t, &t).unwrap());
        let s = vec![t[0] + 0.01, t[1] + 0.01];
        assert!(check_delta_monotone(&t, &s).unwrap());
        assert!(check_delta_monotone(&s, &t).is_err());
    }

    #[test]
    fn delta_monotone_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..60 {
            let t1: f64 = rng.gen_range(0.15..0.5);
            let t2: f64 = rng.gen_range(t1 + 0.05..1.0f64.min(t1 + 0.6));
            let d1: f64 = rng.gen_range(0.0..0.08);
            let d2: f64 = rng.gen_range(0.0..0.08f64.min(FRAC_PI_2_OPEN - 0.01 - t2));
            let t = vec![t1, t2];
            let s = vec![t1 + d1.min(t2 + d2 - t1 - 1e-3), t2 + d2];
            if s[0] >= s[1] {
                continue;
            }
            assert!(
                check_delta_monotone(&t, &s).unwrap(),
                "monotonicity failed at t={t:?} s={s:?}"
            );
        }
    }

    #[test]
    fn volume_lemmas_hold_for_icosahedral_radius() {
        let grid = [1e-8, 1e-7, 1e-6, 1e-5];
        let report = verify_volume_lemmas(phi_icosa(), 3, &grid, 1e4).unwrap();
        assert!(!report.checks.is_empty());
        for c in &report.checks {
            assert!(c.pass, "{} failed ({}): lhs={} rhs={}", c.name, c.params, c.lhs, c.rhs);
        }
        // The shrink constant matches the frozen bound.
        assert!(shrink_constant(3, phi_icosa()).unwrap() < 40.0);
        // The small-cap ceiling lands at the documented value.
        let ceiling = small_cap_ceiling_d3(phi_icosa()).unwrap();
        assert!((ceiling - 0.7751).abs() < 1e-3, "{ceiling}");
    }

    #[test]
    fn volume_lemmas_hold_for_cell600_radius() {
        let grid = [1e-8, 1e-7, 1e-6, 1e-5];
        let report = verify_volume_lemmas(PI / 10.0, 4, &grid, 1e6).unwrap();
        assert!(!report.checks.is_empty());
        for c in &report.checks {
            assert!(c.pass, "{} failed ({}): lhs={} rhs={}", c.name, c.params, c.lhs, c.rhs);
        }
        assert!(shrink_constant(4, PI / 10.0).unwrap() < 120.0);
        let ceiling = small_cap_ceiling_d4(PI / 10.0, 1e-8).unwrap();
        assert!(ceiling < 60.0 / (PI * PI) - 0.3, "{ceiling}");
    }

    #[test]
    fn volume_lemmas_reject_out_of_range_radius() {
        let hyp3 = (3.0f64 / 8.0).sqrt().asin();
        assert!(verify_volume_lemmas(hyp3 + 0.01, 3, &[1e-6], 1e4).is_err());
    }

    #[test]
    fn geometric_inequalities_have_no_violations() {
        let report = check_geometric_inequalities(400, 4242).unwrap();
        assert!(!report.checks.is_empty());
        for c in &report.checks {
            assert!(c.pass, "{} failed ({}): lhs={} rhs={}", c.name, c.params, c.lhs, c.rhs);
        }
        let regular = report
            .checks
            .iter()
            .find(|c| c.name == "tetra-volume-floor-regular")
            .unwrap();
        assert_relative_eq!(regular.lhs, 0.2f64.sqrt() / 4.0, epsilon = 1e-12);
        assert!(regular.rhs > 0.51 && regular.rhs < 0.52);
    }
}
