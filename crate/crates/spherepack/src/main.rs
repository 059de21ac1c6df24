//! Command-line front end: polytope generation, perturbation, recovery,
//! Delone decomposition, cap densities, linear-programming bounds, lemma
//! verification, and the experiment harness.
//!
//! Exit codes: 0 on success with all certifications passing, 2 when the run
//! completed but certification failures are present, 1 on usage or input
//! errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use spherepack::densities::{
    build_orthoscheme, check_geometric_inequalities, delta_with, simplex_bound,
    verify_volume_lemmas,
};
use spherepack::experiment::{run_experiment, perturb, ExperimentConfig, PerturbationMode};
use spherepack::hulls::delone_complex;
use spherepack::io::{
    atomic_write, read_packing, write_packing, DeloneDocument, RecoveryDocument,
};
use spherepack::lpbound::{certificate_t_plus_1_t_minus_s, certificate_t_t_plus_1, lp_bound};
use spherepack::polytopes::{generate, stability_constants, PolytopeKind};
use spherepack::recovery::{recover, step1_report};
use spherepack::sphgeo::{circumradius_rj, VolumeOptions};

#[derive(Parser)]
#[command(
    name = "spherepack",
    about = "Spherical cap packings: regular polytopes, densities, bounds, and recovery",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Simplex,
    Crosspolytope,
    Icosahedron,
    #[value(name = "600-cell", alias = "cell600")]
    Cell600,
}

fn resolve_kind(kind: KindArg, dim: Option<usize>) -> Result<PolytopeKind, String> {
    match kind {
        KindArg::Simplex => {
            let d = dim.ok_or("--dim is required for kind simplex")?;
            Ok(PolytopeKind::Simplex(d))
        }
        KindArg::Crosspolytope => {
            let d = dim.ok_or("--dim is required for kind crosspolytope")?;
            Ok(PolytopeKind::Crosspolytope(d))
        }
        KindArg::Icosahedron => {
            if dim.is_some_and(|d| d != 3) {
                return Err("icosahedron is 3-dimensional; omit --dim or pass 3".into());
            }
            Ok(PolytopeKind::Icosahedron)
        }
        KindArg::Cell600 => {
            if dim.is_some_and(|d| d != 4) {
                return Err("the 600-cell is 4-dimensional; omit --dim or pass 4".into());
            }
            Ok(PolytopeKind::Cell600)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the reference vertex packing of a regular polytope as JSON.
    GenPolytope {
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturb a reference polytope inside vertex tangent spaces.
    Perturb {
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        dim: Option<usize>,
        /// Per-vertex perturbation radius (radians).
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PerturbationMode::TangentGaussian)]
        mode: PerturbationMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the reference configuration from a perturbed packing.
    Recover {
        /// Packing JSON produced by gen-polytope or perturb.
        input: PathBuf,
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        dim: Option<usize>,
        /// Perturbation budget; defaults to the eps recorded in the input.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Delone decomposition of a packing: cells, circumcenters, circumradii.
    Delone {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Orthoscheme volume, cap density, and the simplex bound at a radius.
    Density {
        #[arg(long)]
        kind: Option<KindArg>,
        #[arg(long)]
        dim: Option<usize>,
        /// Packing radius phi (radians); taken from --kind when omitted.
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear-programming bounds from the two polynomial certificate families.
    LpBound {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the volume-lemma grids and randomized geometric inequalities.
    VerifyLemmas {
        /// Restrict to one kind; default runs icosahedron and 600-cell.
        #[arg(long)]
        kind: Option<KindArg>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep perturb-and-recover trials over an eps grid and seed batch.
    Experiment {
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        dim: Option<usize>,
        /// Comma-separated perturbation radii, e.g. 1e-7,1e-6,1e-5.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Number of independent trials per eps value.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Base RNG seed; each row uses its own stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PerturbationMode::TangentGaussian)]
        mode: PerturbationMode,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// Record per-row wall time (breaks byte-reproducibility of output).
        #[arg(long, default_value_t = false)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Box<dyn std::error::Error>> {
    match out {
        Some(path) => {
            atomic_write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    text
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::GenPolytope { kind, dim, out } => {
            let kind = resolve_kind(kind, dim)?;
            let polytope = generate(kind)?;
            let packing = polytope.packing();
            let mut meta = serde_json::Map::new();
            meta.insert("kind".into(), json!(kind.name()));
            match out {
                Some(path) => write_packing(&path, &packing, meta)?,
                None => emit(None, &spherepack::io::packing_to_json(&packing, meta)?)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Perturb { kind, dim, eps, seed, mode, out } => {
            let kind = resolve_kind(kind, dim)?;
            let polytope = generate(kind)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let packing = perturb(&polytope, eps, mode, &mut rng)?;
            let mut meta = serde_json::Map::new();
            meta.insert("kind".into(), json!(kind.name()));
            meta.insert("seed".into(), json!(seed));
            meta.insert("mode".into(), json!(mode.name()));
            match out {
                Some(path) => write_packing(&path, &packing, meta)?,
                None => emit(None, &spherepack::io::packing_to_json(&packing, meta)?)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Recover { input, kind, dim, eps, out } => {
            let kind = resolve_kind(kind, dim)?;
            let packing = read_packing(&input)?;
            let eps = eps.unwrap_or(packing.eps);
            let result = recover(&packing.points, kind, eps)?;
            let mut doc = serde_json::to_value(RecoveryDocument::from_result(
                &kind.name(),
                &result,
            ))?;
            if matches!(kind, PolytopeKind::Icosahedron | PolytopeKind::Cell600) {
                let step1 = step1_report(&packing.points, kind, eps)?;
                doc["step1"] = serde_json::to_value(&step1)?;
            }
            emit(out.as_deref(), &pretty(&doc))?;
            Ok(if result.pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Delone { input, out } => {
            let packing = read_packing(&input)?;
            let complex = delone_complex(&packing.points)?;
            let doc = DeloneDocument::from_complex(&complex);
            emit(out.as_deref(), &doc.to_json()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Density { kind, dim, phi, out } => {
            let (d, phi) = match (kind, dim, phi) {
                (Some(k), d_opt, None) => {
                    let kind = resolve_kind(k, d_opt)?;
                    (kind.dim(), kind.phi())
                }
                (None, Some(d), Some(phi)) => (d, phi),
                _ => {
                    return Err(
                        "pass either --kind (with --dim for families) or both --dim and --phi"
                            .into(),
                    )
                }
            };
            let t: Vec<f64> = (1..d)
                .map(|j| circumradius_rj(j, phi))
                .collect::<Result<_, _>>()?;
            let opts = VolumeOptions { rel_tol: 1e-8, max_depth: 26 };
            let orthoscheme = build_orthoscheme(&t)?;
            let theta_volume = orthoscheme.volume_with(opts)?;
            let delta = delta_with(&t, opts)?;
            let bound = simplex_bound(d, phi)?;
            // The bound is an exact integer at the tight radii but carries
            // quadrature error; snap to a nearby integer before flooring.
            let rounded = bound.round();
            let max_caps = if (bound - rounded).abs() <= 1e-6 * bound.max(1.0) {
                rounded
            } else {
                bound.floor()
            };
            let doc = json!({
                "dim": d,
                "phi": phi,
                "t": t,
                "theta_volume": theta_volume,
                "delta": delta,
                "simplex_bound": bound,
                "max_caps": max_caps,
            });
            emit(out.as_deref(), &pretty(&doc))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::LpBound { dim, out } => {
            let cert = certificate_t_t_plus_1(dim)?;
            let first = lp_bound(&cert)?;
            let s = 0.9 / (2.0 * dim as f64 * dim as f64 - dim as f64);
            let lemma_cert = certificate_t_plus_1_t_minus_s(dim, s)?;
            let second = lp_bound(&lemma_cert)?;
            let doc = json!({
                "dim": dim,
                "orthogonality_bound": first,
                "expected_orthogonality_bound": 2 * dim,
                "near_orthogonality_s": s,
                "near_orthogonality_bound": second,
                "near_orthogonality_ceiling": 2 * dim + 1,
            });
            emit(out.as_deref(), &pretty(&doc))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyLemmas { kind, samples, seed, out } => {
            let mut sections = serde_json::Map::new();
            let grid = [1e-8, 1e-7, 1e-6, 1e-5];
            let run_icosa = matches!(kind, None | Some(KindArg::Icosahedron));
            let run_600 = matches!(kind, None | Some(KindArg::Cell600));
            if matches!(kind, Some(KindArg::Simplex | KindArg::Crosspolytope)) {
                return Err("volume lemmas are specific to icosahedron and 600-cell".into());
            }
            let mut all_pass = true;
            if run_icosa {
                let report =
                    verify_volume_lemmas(PolytopeKind::Icosahedron.phi(), 3, &grid, 1e4)?;
                all_pass &= report.all_pass();
                sections.insert("icosahedron".into(), serde_json::to_value(&report)?);
            }
            if run_600 {
                let report = verify_volume_lemmas(PolytopeKind::Cell600.phi(), 4, &grid, 1e6)?;
                all_pass &= report.all_pass();
                sections.insert("600-cell".into(), serde_json::to_value(&report)?);
            }
            let geometric = check_geometric_inequalities(samples, seed)?;
            all_pass &= geometric.all_pass();
            sections.insert("geometric".into(), serde_json::to_value(&geometric)?);
            sections.insert("all_pass".into(), json!(all_pass));
            emit(out.as_deref(), &pretty(&serde_json::Value::Object(sections)))?;
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Experiment {
            kind,
            dim,
            eps,
            seeds,
            seed,
            mode,
            jobs,
            format,
            timing,
            out,
        } => {
            let kind = resolve_kind(kind, dim)?;
            let (_, eps_ceiling) = stability_constants(kind);
            for &e in &eps {
                if e > eps_ceiling {
                    eprintln!(
                        "warning: eps {e} exceeds the formal hypothesis ceiling {eps_ceiling} \
                         for {}; rows will be tagged exploratory",
                        kind.name()
                    );
                }
            }
            let config = ExperimentConfig {
                kind,
                eps,
                seeds,
                seed,
                mode,
                output: out.clone(),
                jobs,
                timing,
            };
            let outcome = run_experiment(&config)?;
            let text = match format {
                OutputFormat::Csv => outcome.to_csv(),
                OutputFormat::Json => {
                    let doc = json!({
                        "rows": outcome.rows,
                        "summaries": outcome.summaries,
                    });
                    pretty(&doc)
                }
            };
            emit(out.as_deref(), &text)?;
            Ok(if outcome.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
