//! Perturbation generator and reproducible recovery-experiment harness.
//!
//! An experiment sweeps a grid of perturbation radii against a batch of
//! seeds: each row perturbs the reference vertices inside their tangent
//! spaces, runs the matching recovery routine, and records the measured
//! deviation against the certified ceiling. Rows draw from independent,
//! counter-addressed RNG streams, so the emitted CSV is byte-identical for
//! a fixed configuration regardless of thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{atomic_write, IoError};
use crate::polytopes::{generate, stability_constants, Polytope, PolytopeError, PolytopeKind};
use crate::recovery::recover;
use crate::sphgeo::{geodesic_distance, GeoError, Packing, UnitVector};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("could not place point {point} within the separation constraint after {tries} tries")]
    Generation { point: usize, tries: usize },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// How the per-vertex tangent displacement is drawn. Both modes respect the
/// hard cap: every vertex moves by an angle of at most `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// Angle `eps * min(|N(0,1)|/3, 1)` along a uniform tangent direction.
    TangentGaussian,
    /// Uniform draw from the tangent ball of radius `eps`.
    TangentUniform,
}

impl PerturbationMode {
    pub fn name(self) -> &'static str {
        match self {
            PerturbationMode::TangentGaussian => "tangent-gaussian",
            PerturbationMode::TangentUniform => "tangent-uniform",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: PolytopeKind,
    pub eps: Vec<f64>,
    pub seeds: u64,
    pub seed: u64,
    pub mode: PerturbationMode,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// When set, rows carry a wall-time column. Timing output is not
    /// byte-reproducible, so it is off by default.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.eps.is_empty() {
            return Err(ExperimentError::BadConfig("eps grid is empty".into()));
        }
        let phi = self.kind.phi();
        for &e in &self.eps {
            if !e.is_finite() || e <= 0.0 {
                return Err(ExperimentError::BadConfig(format!(
                    "eps values must be positive and finite, got {e}"
                )));
            }
            if e >= phi {
                return Err(ExperimentError::BadConfig(format!(
                    "eps {e} must stay below the packing radius {phi}"
                )));
            }
        }
        if self.seeds == 0 {
            return Err(ExperimentError::BadConfig("seed count must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(ExperimentError::BadConfig("jobs must be positive".into()));
        }
        Ok(())
    }
}

/// One perturb-and-recover trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub kind: String,
    pub d: usize,
    pub eps: f64,
    pub seed: u64,
    pub min_separation: f64,
    pub k: usize,
    pub max_deviation: f64,
    /// max_deviation / eps; finite exactly when recovery succeeded.
    pub ratio: f64,
    /// Certified per-point ceiling c_P (deviation bound is c_P * eps).
    pub ceiling: f64,
    pub pass: bool,
    /// True when eps exceeds the formal hypothesis ceiling for this kind;
    /// the certified inequality is then reported but not guaranteed.
    pub exploratory: bool,
    /// Failure message when recovery errored; empty string on success.
    pub error: String,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsSummary {
    pub eps: f64,
    pub rows: usize,
    pub failures: usize,
    /// Largest finite ratio over the rows at this eps (NaN if none finished).
    pub max_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ExperimentRow>,
    pub summaries: Vec<EpsSummary>,
    pub timing: bool,
    header: String,
}

/// Moves `v` by `angle` along the unit tangent direction `dir`.
fn move_along(v: &UnitVector, dir: &DVector<f64>, angle: f64) -> UnitVector {
    let w = v.coords() * angle.cos() + dir * angle.sin();
    UnitVector::normalize(w).expect("rotated unit vector stays unit")
}

/// Uniform unit direction in the tangent space at `v`: a standard Gaussian
/// draw projected orthogonally to `v` and normalized.
fn random_tangent_direction(v: &UnitVector, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(v.dim(), |_, _| {
            // Box-Muller on two uniform draws.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        });
        let t = &g - v.coords() * v.coords().dot(&g);
        let n = t.norm();
        if n > 1e-8 {
            return t / n;
        }
    }
}

fn draw_angle(eps: f64, tangent_dim: usize, mode: PerturbationMode, rng: &mut ChaCha8Rng) -> f64 {
    match mode {
        PerturbationMode::TangentGaussian => {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let g = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            eps * (g.abs() / 3.0).min(1.0)
        }
        PerturbationMode::TangentUniform => {
            // Volume-uniform radius in a ball of the tangent dimension.
            let u: f64 = rng.gen_range(0.0..=1.0);
            eps * u.powf(1.0 / tangent_dim as f64)
        }
    }
}

/// Perturbs each vertex inside its tangent space by an angle of at most
/// `eps`, renormalizing, while enforcing the packing hypothesis: the result
/// keeps all pairwise distances at least `2 (phi - eps)`. A vertex that
/// cannot be placed after 100 draws has its step halved on each further
/// attempt, which always terminates (the zero step is feasible).
pub fn perturb(
    polytope: &Polytope,
    eps: f64,
    mode: PerturbationMode,
    rng: &mut ChaCha8Rng,
) -> Result<Packing, ExperimentError> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(ExperimentError::BadConfig(format!(
            "perturbation radius must be nonnegative, got {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(polytope.packing());
    }
    if eps >= polytope.phi {
        return Err(ExperimentError::BadConfig(format!(
            "eps {eps} must stay below the packing radius {}",
            polytope.phi
        )));
    }
    let floor = 2.0 * (polytope.phi - eps);
    let tangent_dim = polytope.dim - 1;
    let mut current: Vec<UnitVector> = polytope.vertices.clone();
    for i in 0..current.len() {
        let original = polytope.vertices[i].clone();
        let mut placed = false;
        let mut shrink = 1.0f64;
        for attempt in 0..200usize {
            if attempt >= 100 {
                shrink *= 0.5;
            }
            let dir = random_tangent_direction(&original, rng);
            let angle = shrink * draw_angle(eps, tangent_dim, mode, rng);
            let candidate = move_along(&original, &dir, angle);
            let ok = (0..current.len())
                .filter(|&j| j != i)
                .all(|j| geodesic_distance(&candidate, &current[j]) >= floor);
            if ok {
                current[i] = candidate;
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(ExperimentError::Generation { point: i, tries: 200 });
        }
    }
    Ok(Packing::new(current, polytope.phi, eps)?)
}

/// Runs one perturb-and-recover trial. Recovery failures are captured in the
/// row rather than propagated, so a sweep always completes.
fn execute_row(
    polytope: &Polytope,
    kind: PolytopeKind,
    eps: f64,
    seed_index: u64,
    mut rng: ChaCha8Rng,
    mode: PerturbationMode,
    timing: bool,
) -> Result<ExperimentRow, ExperimentError> {
    let (ceiling, eps_ceiling) = stability_constants(kind);
    let start = Instant::now();
    let packing = perturb(polytope, eps, mode, &mut rng)?;
    let min_separation = packing.min_separation();
    let k = packing.len();
    let mut row = ExperimentRow {
        kind: kind.name(),
        d: polytope.dim,
        eps,
        seed: seed_index,
        min_separation,
        k,
        max_deviation: f64::NAN,
        ratio: f64::NAN,
        ceiling,
        pass: false,
        exploratory: eps > eps_ceiling,
        error: String::new(),
        wall_time_ms: None,
    };
    match recover(&packing.points, kind, eps) {
        Ok(result) => {
            row.max_deviation = result.max_deviation;
            row.ratio = result.max_deviation / eps;
            row.pass = result.pass;
        }
        Err(err) => {
            row.error = err.to_string().replace([',', '\n'], ";");
        }
    }
    if timing {
        row.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(row)
}

const CSV_VERSION: &str = "spherepack-experiment-csv v1";

fn csv_header(config: &ExperimentConfig) -> String {
    let eps = config
        .eps
        .iter()
        .map(|e| format!("{e}"))
        .collect::<Vec<_>>()
        .join("|");
    format!(
        "# {CSV_VERSION}\n# kind={} mode={} seeds={} seed={} eps={}\n",
        config.kind.name(),
        config.mode.name(),
        config.seeds,
        config.seed,
        eps
    )
}

/// Sweeps the (eps, seed) grid. Each row draws from stream `row_id + 1` of a
/// ChaCha8 generator keyed by the configuration seed, so results do not
/// depend on the parallelism degree; rows are emitted in grid order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    config.validate()?;
    let polytope = generate(config.kind)?;
    let n_rows = config.eps.len() * config.seeds as usize;
    let worker = |row_id: usize| -> Result<ExperimentRow, ExperimentError> {
        let eps = config.eps[row_id / config.seeds as usize];
        let seed_index = (row_id % config.seeds as usize) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(row_id as u64 + 1);
        execute_row(
            &polytope,
            config.kind,
            eps,
            seed_index,
            rng,
            config.mode,
            config.timing,
        )
    };
    let rows: Result<Vec<ExperimentRow>, ExperimentError> = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| ExperimentError::BadConfig(format!("cannot build thread pool: {e}")))?
            .install(|| (0..n_rows).into_par_iter().map(worker).collect()),
        None => (0..n_rows).into_par_iter().map(worker).collect(),
    };
    let rows = rows?;
    let summaries = config
        .eps
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let chunk = &rows[i * config.seeds as usize..(i + 1) * config.seeds as usize];
            let failures = chunk.iter().filter(|r| !r.error.is_empty()).count();
            let max_ratio = chunk
                .iter()
                .filter(|r| r.ratio.is_finite())
                .map(|r| r.ratio)
                .fold(f64::NAN, f64::max);
            EpsSummary { eps, rows: chunk.len(), failures, max_ratio }
        })
        .collect();
    Ok(ExperimentOutcome {
        rows,
        summaries,
        timing: config.timing,
        header: csv_header(config),
    })
}

impl ExperimentOutcome {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Renders the sweep as CSV: a versioned comment header, one line per
    /// row in grid order, and one trailing summary comment per eps value.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.clone();
        out.push_str(
            "kind,d,eps,seed,min_separation,k,max_deviation,ratio,ceiling,pass,exploratory,error",
        );
        if self.timing {
            out.push_str(",wall_time_ms");
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.kind,
                r.d,
                r.eps,
                r.seed,
                r.min_separation,
                r.k,
                r.max_deviation,
                r.ratio,
                r.ceiling,
                r.pass,
                r.exploratory,
                r.error
            ));
            if self.timing {
                match r.wall_time_ms {
                    Some(ms) => out.push_str(&format!(",{ms}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        for s in &self.summaries {
            out.push_str(&format!(
                "# summary eps={} rows={} failures={} max_ratio={}\n",
                s.eps, s.rows, s.failures, s.max_ratio
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ExperimentError> {
        Ok(atomic_write(path, &self.to_csv())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    #[test]
    fn perturb_with_zero_eps_returns_identical_vertices() {
        let p = generate(PolytopeKind::Icosahedron).unwrap();
        let mut rng = rng_for(7, 0);
        let packing = perturb(&p, 0.0, PerturbationMode::TangentGaussian, &mut rng).unwrap();
        for (a, b) in packing.points.iter().zip(&p.vertices) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn perturb_respects_separation_and_step_bounds() {
        let p = generate(PolytopeKind::Icosahedron).unwrap();
        let eps = 1e-6;
        for mode in [PerturbationMode::TangentGaussian, PerturbationMode::TangentUniform] {
            let mut rng = rng_for(1, 0);
            let packing = perturb(&p, eps, mode, &mut rng).unwrap();
            let sep = packing.min_separation();
            assert!(sep >= 2.0 * (p.phi - eps) - 1e-15, "sep {sep} below floor");
            assert!(sep <= 2.0 * p.phi + 2.0 * eps + 1e-15);
            for (moved, original) in packing.points.iter().zip(&p.vertices) {
                assert!(geodesic_distance(moved, original) <= eps * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn perturbed_simplex_keeps_separation_hypothesis() {
        let p = generate(PolytopeKind::Simplex(4)).unwrap();
        let eps = 1e-5;
        let mut rng = rng_for(3, 0);
        let packing = perturb(&p, eps, PerturbationMode::TangentUniform, &mut rng).unwrap();
        let required = (-0.25f64).acos() - 2.0 * eps;
        assert!(packing.min_separation() >= required);
    }

    #[test]
    fn experiment_csv_is_byte_identical_across_runs_and_thread_counts() {
        let base = ExperimentConfig {
            kind: PolytopeKind::Simplex(3),
            eps: vec![1e-6, 1e-5],
            seeds: 3,
            seed: 42,
            mode: PerturbationMode::TangentGaussian,
            output: None,
            jobs: None,
            timing: false,
        };
        let a = run_experiment(&base).unwrap().to_csv();
        let b = run_experiment(&base).unwrap().to_csv();
        assert_eq!(a, b);

        let mut serial = base.clone();
        serial.jobs = Some(1);
        let mut wide = base.clone();
        wide.jobs = Some(4);
        assert_eq!(run_experiment(&serial).unwrap().to_csv(), a);
        assert_eq!(run_experiment(&wide).unwrap().to_csv(), a);
    }

    #[test]
    fn experiment_rows_pass_and_record_finite_ratios() {
        let config = ExperimentConfig {
            kind: PolytopeKind::Crosspolytope(3),
            eps: vec![1e-6],
            seeds: 4,
            seed: 9,
            mode: PerturbationMode::TangentUniform,
            output: None,
            jobs: None,
            timing: false,
        };
        let outcome = run_experiment(&config).unwrap();
        assert_eq!(outcome.rows.len(), 4);
        assert!(outcome.all_pass());
        for row in &outcome.rows {
            assert!(row.error.is_empty());
            assert!(row.ratio.is_finite());
            assert!(row.ratio <= row.ceiling + 1.0);
            assert_eq!(row.k, 6);
        }
        assert_eq!(outcome.summaries.len(), 1);
        assert_eq!(outcome.summaries[0].failures, 0);
        assert!(outcome.summaries[0].max_ratio.is_finite());
    }

    #[test]
    fn rows_above_the_hypothesis_ceiling_are_tagged_exploratory() {
        let config = ExperimentConfig {
            kind: PolytopeKind::Icosahedron,
            eps: vec![1e-6],
            seeds: 2,
            seed: 5,
            mode: PerturbationMode::TangentGaussian,
            output: None,
            jobs: None,
            timing: false,
        };
        let outcome = run_experiment(&config).unwrap();
        for row in &outcome.rows {
            assert!(row.exploratory, "eps 1e-6 exceeds the formal ceiling 1e-9");
            assert!(row.error.is_empty());
            assert_eq!(row.k, 12);
        }
    }

    #[test]
    fn csv_carries_versioned_header_and_summary_lines() {
        let config = ExperimentConfig {
            kind: PolytopeKind::Simplex(3),
            eps: vec![1e-6],
            seeds: 2,
            seed: 1,
            mode: PerturbationMode::TangentGaussian,
            output: None,
            jobs: None,
            timing: false,
        };
        let csv = run_experiment(&config).unwrap().to_csv();
        assert!(csv.starts_with(&format!("# {CSV_VERSION}\n")));
        assert!(csv.contains("kind,d,eps,seed,min_separation,k,"));
        assert!(csv.contains("# summary eps=0.000001 rows=2 failures=0"));
        assert!(!csv.contains("wall_time_ms"));

        let mut timed = config.clone();
        timed.timing = true;
        let csv_timed = run_experiment(&timed).unwrap().to_csv();
        assert!(csv_timed.contains("wall_time_ms"));
    }

    #[test]
    fn row_failures_are_recorded_without_aborting() {
        // Feed icosahedron points to the simplex recoverer: a count mismatch
        // that must land in the error column, not abort the sweep.
        let p = generate(PolytopeKind::Icosahedron).unwrap();
        let row = execute_row(
            &p,
            PolytopeKind::Simplex(3),
            1e-6,
            0,
            rng_for(2, 1),
            PerturbationMode::TangentGaussian,
            false,
        )
        .unwrap();
        assert!(!row.error.is_empty());
        assert!(!row.pass);
        assert!(row.ratio.is_nan());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut config = ExperimentConfig {
            kind: PolytopeKind::Simplex(3),
            eps: vec![],
            seeds: 1,
            seed: 0,
            mode: PerturbationMode::TangentGaussian,
            output: None,
            jobs: None,
            timing: false,
        };
        assert!(matches!(config.validate(), Err(ExperimentError::BadConfig(_))));
        config.eps = vec![-1.0];
        assert!(matches!(config.validate(), Err(ExperimentError::BadConfig(_))));
        config.eps = vec![10.0];
        assert!(matches!(config.validate(), Err(ExperimentError::BadConfig(_))));
        config.eps = vec![1e-6];
        config.seeds = 0;
        assert!(matches!(config.validate(), Err(ExperimentError::BadConfig(_))));
    }
}
