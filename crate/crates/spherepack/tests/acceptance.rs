//! End-to-end acceptance checks for the toolkit, one test per criterion:
//!
//! 1. closed-form d=3 orthoscheme constants (Girard path)
//! 2. d=4 orthoscheme constants by adaptive quadrature
//! 3. simplex-bound values at the icosahedral and 600-cell radii
//! 4. linear-programming bounds from both certificate families
//! 5. Delone ground truth on the exact icosahedron and 600-cell
//! 6. certified recovery across kinds, radii, and seed batches
//! 7. lemma suites: volume grids, randomized inequalities, basis postconditions
//! 8. cross-validation: constructive recovery vs. Procrustes, density route pair
//!
//! Each test prints a `[PASS]` summary line (visible with `--nocapture`);
//! the per-test ok/FAILED line is the criterion verdict.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use spherepack::densities::{
    build_orthoscheme, check_geometric_inequalities, delta, delta_routes, delta_with,
    simplex_bound, verify_volume_lemmas,
};
use spherepack::experiment::{perturb, run_experiment, ExperimentConfig, PerturbationMode};
use spherepack::hulls::delone_complex;
use spherepack::lpbound::{certificate_t_plus_1_t_minus_s, certificate_t_t_plus_1, lp_bound};
use spherepack::polytopes::{generate, stability_constants, PolytopeKind};
use spherepack::recovery::{almost_orthogonal_basis, procrustes_align, recover};
use spherepack::sphgeo::{
    circumradius_rj, geodesic_distance, spherical_simplex_volume_quadrature,
    spherical_triangle_area, SphericalSimplex, UnitVector, VolumeOptions,
};

fn phi_icosa() -> f64 {
    PolytopeKind::Icosahedron.phi()
}

#[test]
fn criterion_1_exact_constants_d3() {
    let start = Instant::now();
    let phi = phi_icosa();
    let t = [phi, circumradius_rj(2, phi).unwrap()];

    // Girard path: the orthoscheme is a spherical triangle.
    let orthoscheme = build_orthoscheme(&t).unwrap();
    let area = spherical_triangle_area(&orthoscheme.simplex().unwrap()).unwrap();
    let area_err = (area - PI / 30.0).abs();
    assert!(area_err <= 1e-9, "orthoscheme area {area} vs pi/30, err {area_err:e}");

    let density = delta(&t).unwrap();
    let density_err = (density - 3.0 / PI).abs();
    assert!(density_err <= 1e-9, "density {density} vs 3/pi, err {density_err:e}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1s");
    println!(
        "[PASS] criterion 1: |Theta|=pi/30 (err {area_err:.2e}), Delta=3/pi \
         (err {density_err:.2e}) in {elapsed:?}"
    );
}

#[test]
fn criterion_2_quadrature_constants_d4() {
    let start = Instant::now();
    let phi = PI / 10.0;
    let t: Vec<f64> = (1..4).map(|j| circumradius_rj(j, phi).unwrap()).collect();
    let opts = VolumeOptions { rel_tol: 1e-8, max_depth: 26 };

    let volume = build_orthoscheme(&t).unwrap().volume_with(opts).unwrap();
    let volume_target = PI * PI / 7200.0;
    let volume_rel = (volume - volume_target).abs() / volume_target;
    assert!(volume_rel <= 1e-5, "orthoscheme volume {volume} vs pi^2/7200, rel {volume_rel:e}");

    let density = delta_with(&t, opts).unwrap();
    let density_target = 60.0 / (PI * PI);
    let density_rel = (density - density_target).abs() / density_target;
    assert!(density_rel <= 1e-5, "density {density} vs 60/pi^2, rel {density_rel:e}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60s");
    println!(
        "[PASS] criterion 2: |Theta|=pi^2/7200 (rel {volume_rel:.2e}), Delta=60/pi^2 \
         (rel {density_rel:.2e}) in {elapsed:?}"
    );
}

#[test]
fn criterion_3_simplex_bound_values() {
    let b3 = simplex_bound(3, phi_icosa()).unwrap();
    let err3 = (b3 - 12.0).abs();
    assert!(err3 <= 1e-7, "simplex bound at the icosahedral radius: {b3}, err {err3:e}");

    let b4 = simplex_bound(4, PI / 10.0).unwrap();
    let rel4 = (b4 - 120.0).abs() / 120.0;
    assert!(rel4 <= 1e-4, "simplex bound at the 600-cell radius: {b4}, rel {rel4:e}");

    println!("[PASS] criterion 3: bound(3)={b3} (err {err3:.2e}), bound(4)={b4} (rel {rel4:.2e})");
}

#[test]
fn criterion_4_lp_bounds() {
    for d in 2..=8usize {
        let cert = certificate_t_t_plus_1(d).unwrap();
        let bound = lp_bound(&cert).unwrap();
        assert!(
            (bound - 2.0 * d as f64).abs() <= 1e-9,
            "orthogonality certificate at d={d}: bound {bound}, expected {}",
            2 * d
        );
    }
    for n in 2..=8usize {
        let s = 0.9 / (2.0 * (n * n) as f64 - n as f64);
        let cert = certificate_t_plus_1_t_minus_s(n, s).unwrap();
        let bound = lp_bound(&cert).unwrap();
        let ceiling = (2 * n + 1) as f64;
        assert!(
            bound < ceiling,
            "near-orthogonality certificate at n={n}, s={s}: bound {bound} >= {ceiling}"
        );
    }
    println!("[PASS] criterion 4: lp bound = 2d exactly for d=2..8; lemma certificate < 2n+1 for n=2..8");
}

#[test]
fn criterion_5_delone_ground_truth() {
    // Icosahedron: 20 triangular cells at the exact circumradius, total area 4 pi.
    let icosa = generate(PolytopeKind::Icosahedron).unwrap();
    let complex = delone_complex(&icosa.vertices).unwrap();
    assert_eq!(complex.cells.len(), 20, "icosahedron cell count");
    let r2 = circumradius_rj(2, icosa.phi).unwrap();
    let mut worst_r = 0.0f64;
    let mut total_area = 0.0;
    for cell in &complex.cells {
        worst_r = worst_r.max((cell.circumradius - r2).abs());
        let verts: Vec<UnitVector> =
            cell.vertices.iter().map(|&i| icosa.vertices[i].clone()).collect();
        total_area += spherical_triangle_area(&SphericalSimplex::new(verts).unwrap()).unwrap();
    }
    assert!(worst_r <= 1e-9, "icosahedron circumradius deviation {worst_r:e}");
    let area_rel = (total_area - 4.0 * PI).abs() / (4.0 * PI);
    assert!(area_rel <= 1e-6, "icosahedron cell areas sum {total_area}, rel {area_rel:e}");

    // 600-cell: 600 tetrahedral cells, total measure 2 pi^2.
    let cell600 = generate(PolytopeKind::Cell600).unwrap();
    let complex = delone_complex(&cell600.vertices).unwrap();
    assert_eq!(complex.cells.len(), 600, "600-cell cell count");
    let r3 = circumradius_rj(3, cell600.phi).unwrap();
    let mut worst_r4 = 0.0f64;
    let mut total_volume = 0.0;
    let opts = VolumeOptions { rel_tol: 1e-7, max_depth: 24 };
    for cell in &complex.cells {
        worst_r4 = worst_r4.max((cell.circumradius - r3).abs());
        let verts: Vec<UnitVector> =
            cell.vertices.iter().map(|&i| cell600.vertices[i].clone()).collect();
        let simplex = SphericalSimplex::new(verts).unwrap();
        total_volume += spherical_simplex_volume_quadrature(&simplex, opts).unwrap();
    }
    assert!(worst_r4 <= 1e-9, "600-cell circumradius deviation {worst_r4:e}");
    let volume_target = 2.0 * PI * PI;
    let volume_rel = (total_volume - volume_target).abs() / volume_target;
    assert!(volume_rel <= 1e-6, "600-cell volumes sum {total_volume}, rel {volume_rel:e}");

    println!(
        "[PASS] criterion 5: icosahedron 20 cells (radius dev {worst_r:.2e}, area rel \
         {area_rel:.2e}); 600-cell 600 cells (radius dev {worst_r4:.2e}, volume rel {volume_rel:.2e})"
    );
}

#[test]
fn criterion_6_recovery_certification() {
    let start = Instant::now();
    let eps_grid = vec![1e-7, 1e-6, 1e-5];
    let seeds = 50u64;
    let mut lines = Vec::new();

    let run = |kind: PolytopeKind| {
        let config = ExperimentConfig {
            kind,
            eps: eps_grid.clone(),
            seeds,
            seed: 20_260_816,
            mode: PerturbationMode::TangentGaussian,
            output: None,
            jobs: None,
            timing: false,
        };
        run_experiment(&config).unwrap()
    };

    for d in [3usize, 4, 5] {
        let outcome = run(PolytopeKind::Simplex(d));
        let ceiling = 9.0 * (d as f64).powf(3.5);
        for row in &outcome.rows {
            assert!(row.error.is_empty(), "simplex d={d}: {}", row.error);
            assert!(row.pass, "simplex d={d} eps={} seed={} failed", row.eps, row.seed);
            assert!(
                row.max_deviation <= ceiling * row.eps + 1e-10,
                "simplex d={d}: deviation {} above {ceiling}*eps",
                row.max_deviation
            );
        }
        let max_ratio = outcome.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        lines.push(format!("simplex d={d}: 150 rows, max ratio {max_ratio:.3} (ceiling {ceiling:.1})"));
    }

    for d in [3usize, 4, 5] {
        let outcome = run(PolytopeKind::Crosspolytope(d));
        let ceiling = 96.0 * (d as f64).powi(3);
        for row in &outcome.rows {
            assert!(row.error.is_empty(), "crosspolytope d={d}: {}", row.error);
            assert!(row.pass, "crosspolytope d={d} eps={} seed={} failed", row.eps, row.seed);
            assert!(
                row.max_deviation <= ceiling * row.eps + 1e-10,
                "crosspolytope d={d}: deviation {} above {ceiling}*eps",
                row.max_deviation
            );
        }
        let max_ratio = outcome.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        lines.push(format!(
            "crosspolytope d={d}: 150 rows, max ratio {max_ratio:.3} (ceiling {ceiling:.1})"
        ));
    }

    // Global kinds: the cell-complex gate (cell count and circumradius bound)
    // runs inside recovery; an empty error column certifies it. The chained
    // formal ceilings are astronomically non-tight; the empirical deviations
    // stay within 100 eps.
    for (kind, k_expected) in [(PolytopeKind::Icosahedron, 12usize), (PolytopeKind::Cell600, 120)] {
        let outcome = run(kind);
        let (formal_ceiling, _) = stability_constants(kind);
        let mut max_ratio = 0.0f64;
        for row in &outcome.rows {
            assert!(row.error.is_empty(), "{}: {}", row.kind, row.error);
            assert_eq!(row.k, k_expected, "{} vertex count", row.kind);
            assert!(row.pass, "{} eps={} seed={} failed", row.kind, row.eps, row.seed);
            assert!(
                row.max_deviation <= 100.0 * row.eps,
                "{} eps={} seed={}: deviation {} above 100 eps",
                row.kind,
                row.eps,
                row.seed,
                row.max_deviation
            );
            max_ratio = max_ratio.max(row.ratio);
        }
        lines.push(format!(
            "{}: 150 rows, k={k_expected} every row, max ratio {max_ratio:.3} \
             (formal ceiling {formal_ceiling:.2e} vacuously satisfied, non-tight)",
            outcome.rows[0].kind
        ));
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}, budget 10min");
    println!("[PASS] criterion 6: recovery certified on 1200 rows in {elapsed:?}");
    for line in lines {
        println!("       {line}");
    }
}

#[test]
fn criterion_7_lemma_suites_zero_violations() {
    let grid = [1e-8, 1e-7, 1e-6, 1e-5];

    let icosa = verify_volume_lemmas(phi_icosa(), 3, &grid, 1e4).unwrap();
    assert!(icosa.all_pass(), "icosahedral volume lemmas: {:?}", icosa.failures());

    let cell600 = verify_volume_lemmas(PI / 10.0, 4, &grid, 1e6).unwrap();
    assert!(cell600.all_pass(), "600-cell volume lemmas: {:?}", cell600.failures());

    let geometric = check_geometric_inequalities(1000, 0).unwrap();
    assert!(geometric.all_pass(), "geometric inequalities: {:?}", geometric.failures());

    // Near-orthonormal basis postconditions on 1000 random valid inputs per n.
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for n in 2..=6usize {
        for trial in 0..1000 {
            let d = if trial % 2 == 0 { n } else { n + 2 };
            let gauss = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0f64));
            let q = gauss.qr().q();
            let u: Vec<UnitVector> = (0..n)
                .map(|c| {
                    let mut v = q.column(c).into_owned();
                    for k in 0..d {
                        v[k] += rng.gen_range(-1.0..1.0) * 0.02;
                    }
                    UnitVector::normalize(v).unwrap()
                })
                .collect();
            let mut eta = 1e-12f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    eta = eta.max(u[i].dot(&u[j]).abs());
                }
            }
            let v = almost_orthogonal_basis(&u, eta + 1e-15).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (v[i].dot(&v[j]) - target).abs() < 1e-12,
                        "orthonormality failure at n={n} trial={trial}"
                    );
                }
            }
            for i in 0..n {
                let mut proj = DVector::zeros(d);
                for vk in v.iter().take(n).skip(i) {
                    proj += vk.coords() * vk.dot(&u[i]);
                }
                assert!(
                    (u[i].coords() - &proj).norm() < 1e-10,
                    "span failure at n={n} trial={trial}"
                );
                assert!(u[i].dot(&v[i]) > 0.0, "alignment failure at n={n} trial={trial}");
            }
            if eta < 1.0 / (2.0 * n as f64) {
                for i in 0..n {
                    assert!(
                        geodesic_distance(&u[i], &v[i]) <= 2.0 * n as f64 * eta + 1e-12,
                        "deviation bound failure at n={n} trial={trial}"
                    );
                }
            }
        }
    }

    println!(
        "[PASS] criterion 7: volume lemma grids ({} + {} checks), geometric inequalities \
         ({} checks x 1000 samples), basis postconditions (5000 random inputs) - zero violations",
        icosa.checks.len(),
        cell600.checks.len(),
        geometric.checks.len()
    );
}

#[test]
fn criterion_8_cross_validation() {
    // (a) Constructive recovery and the Procrustes oracle agree on the
    //     per-row maximum deviation within a factor of 2.
    let grid: [(PolytopeKind, f64, u64); 4] = [
        (PolytopeKind::Simplex(4), 1e-5, 10),
        (PolytopeKind::Crosspolytope(3), 1e-5, 10),
        (PolytopeKind::Icosahedron, 1e-6, 10),
        (PolytopeKind::Cell600, 1e-6, 5),
    ];
    let mut rows = 0usize;
    for (kind, eps, seeds) in grid {
        let polytope = generate(kind).unwrap();
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(777);
            rng.set_stream(seed + 1);
            let packing =
                perturb(&polytope, eps, PerturbationMode::TangentGaussian, &mut rng).unwrap();
            let constructive = recover(&packing.points, kind, eps).unwrap().max_deviation;
            let oracle = procrustes_align(&packing.points, &polytope.vertices)
                .unwrap()
                .max_deviation;
            assert!(
                constructive <= 2.0 * oracle + 1e-12 && oracle <= 2.0 * constructive + 1e-12,
                "{} eps={eps} seed={seed}: constructive {constructive:e} vs oracle {oracle:e}",
                kind.name()
            );
            rows += 1;
        }
    }

    // (b) The two density routes agree to 1e-7 across the radius grid.
    let opts = VolumeOptions { rel_tol: 1e-8, max_depth: 26 };
    let mut routes_checked = 0usize;
    for phi in [0.3, 0.45, phi_icosa(), 0.55] {
        let t: Vec<f64> = (1..3).map(|j| circumradius_rj(j, phi).unwrap()).collect();
        let r = delta_routes(&t, t[0] / 2.0, opts).unwrap();
        let gap = (r.cap_ratio - r.solid_angle).abs() / r.solid_angle.abs().max(1.0);
        assert!(gap <= 1e-7, "d=3 phi={phi}: route gap {gap:e}");
        routes_checked += 1;
    }
    for phi in [0.25, PI / 10.0, 0.35] {
        let t: Vec<f64> = (1..4).map(|j| circumradius_rj(j, phi).unwrap()).collect();
        let r = delta_routes(&t, t[0] / 2.0, opts).unwrap();
        let gap = (r.cap_ratio - r.solid_angle).abs() / r.solid_angle.abs().max(1.0);
        assert!(gap <= 1e-7, "d=4 phi={phi}: route gap {gap:e}");
        routes_checked += 1;
    }

    println!(
        "[PASS] criterion 8: constructive vs Procrustes within 2x on {rows} rows; \
         density routes within 1e-7 on {routes_checked} towers"
    );
}
