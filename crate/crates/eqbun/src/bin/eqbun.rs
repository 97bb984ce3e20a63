//! Command-line front end: validation, thresholds, splitting,
//! unstabilization, conjugation, Hamiltonian ingestion and the example
//! gallery.
//!
//! Exit codes: 0 on success, 2 on a structured refusal of an
//! out-of-hypothesis input, 1 on any other failure.  Reports go to stdout
//! as canonical JSON; progress notes go to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use eqbun::bundles::{verify_morphism, BundleMorphism, ProjectionField};
use eqbun::conjugacy::{
    conjugator_from_isomorphisms, restrict_conjugator, unitarize, verify_conjugator,
    AlgebraProjection,
};
use eqbun::error::{Error, Result};
use eqbun::extension::{split_trivial_summand, thresholds, SplitOptions, TrivialEmbedding};
use eqbun::models_io::gallery::{example_gallery, scenario_to_canonical_json};
use eqbun::models_io::ingest_hamiltonian;
use eqbun::models_io::schema;
use eqbun::stabiso::unstabilize;
use eqbun::symmetry::SymmetryKind;
use eqbun::z2complex::DimensionProfile;
use eqbun::Config;

#[derive(Parser)]
#[command(
    name = "eqbun",
    about = "Equivariant vector bundles over involutive complexes: splitting, unstabilization, conjugacy",
    version
)]
struct Cli {
    /// Equivariance / projection tolerance (single knob).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for the randomized direction searches.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Barycentric sample resolution per simplex.
    #[arg(long, global = true)]
    resolution: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a complex description file.
    Validate { complex: PathBuf },
    /// Print the rank thresholds for a dimension profile.
    Thresholds(ThresholdArgs),
    /// Split trivial summands off a bundle.
    Split(SplitArgs),
    /// Turn a stable-isomorphism witness into an isomorphism.
    Unstabilize(UnstabilizeArgs),
    /// Conjugate two algebra projections through image-bundle isomorphisms.
    Conjugate(ConjugateArgs),
    /// Build the Fermi projection of a tight-binding Hamiltonian.
    Ingest(IngestArgs),
    /// Emit a named example scenario.
    Gallery(GalleryArgs),
}

#[derive(Args)]
struct ThresholdArgs {
    /// Symmetry type: `real` or `quat`.
    #[arg(long)]
    kind: String,
    #[arg(long, allow_hyphen_values = true)]
    d0: i64,
    #[arg(long, allow_hyphen_values = true)]
    d1: i64,
}

#[derive(Args)]
struct SplitArgs {
    bundle: PathBuf,
    /// Prescribed splitting on the marked subcomplex (embedding file).
    #[arg(long)]
    rel: Option<PathBuf>,
    /// Attempt the split below the rank threshold.
    #[arg(long)]
    force: bool,
    /// Number of summand peels (defaults to the threshold count).
    #[arg(long)]
    peels: Option<usize>,
    /// Output directory for the complement bundle, certificate and report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UnstabilizeArgs {
    e1: PathBuf,
    e2: PathBuf,
    witness: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConjugateArgs {
    p: PathBuf,
    q: PathBuf,
    /// The isomorphism pair: E ≅ F and E⊥ ≅ F⊥ (two morphism files).
    #[arg(long, num_args = 2, value_names = ["PHI", "PHI_PERP"])]
    via: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    hamiltonian: PathBuf,
    /// Fermi level.
    #[arg(long, allow_hyphen_values = true)]
    fermi: f64,
    /// Torus grid resolution (vertices per circle; even, at least 4).
    #[arg(long, default_value_t = 4)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GalleryArgs {
    name: String,
    /// Write the scenario's files into a directory as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Resolves `base` path references relative to the referencing file.
struct FileResolver {
    root: PathBuf,
}

impl schema::BaseResolver for FileResolver {
    fn resolve(&self, path: &str) -> Result<eqbun::z2complex::InvolutiveComplex> {
        let full = self.root.join(path);
        let text = std::fs::read_to_string(&full)?;
        schema::parse_complex_str(&text)
    }
}

fn resolver_for(file: &Path) -> FileResolver {
    FileResolver { root: file.parent().unwrap_or(Path::new(".")).to_path_buf() }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(Error::from)
}

fn load_bundle(path: &Path, config: &Config) -> Result<ProjectionField> {
    let file: schema::BundleFile = serde_json::from_str(&read(path)?)
        .map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    schema::file_to_bundle(&file, &resolver_for(path), config)
}

fn load_morphism(path: &Path, config: &Config) -> Result<BundleMorphism> {
    let file: schema::MorphismFile = serde_json::from_str(&read(path)?)
        .map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    schema::file_to_morphism(&file, &resolver_for(path), config)
}

fn write_output(dir: &Option<PathBuf>, name: &str, contents: &str) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn emit<T: Serialize>(report: &T) {
    println!("{}", schema::report_to_canonical_json(report));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = Config::default();
    if let Some(tol) = cli.tol {
        config.eqv_tol = tol;
        config.proj_tol = tol;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(resolution) = cli.resolution {
        config.resolution = resolution.max(1);
    }
    match dispatch(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_refusal() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[derive(Serialize)]
struct ValidationReport {
    valid: bool,
    vertices: usize,
    maximal_simplices: usize,
    fixed_vertices: usize,
    d0: i64,
    d1: i64,
    marked_simplices: usize,
}

fn dispatch(command: Command, config: &Config) -> Result<()> {
    match command {
        Command::Validate { complex } => {
            let validated = schema::parse_complex_str(&read(&complex)?)?;
            let profile = validated.dimensions();
            emit(&ValidationReport {
                valid: true,
                vertices: validated.vertex_count(),
                maximal_simplices: validated.maximal_simplices().len(),
                fixed_vertices: (0..validated.vertex_count())
                    .filter(|&v| validated.is_fixed_vertex(v))
                    .count(),
                d0: profile.d0,
                d1: profile.d1,
                marked_simplices: validated.marked_maximal_simplices().len(),
            });
            Ok(())
        }
        Command::Thresholds(args) => {
            let kind = match args.kind.as_str() {
                "real" => SymmetryKind::Real,
                "quat" | "quaternionic" => SymmetryKind::Quaternionic,
                other => {
                    return Err(Error::ParseError(format!(
                        "unknown kind `{other}`; expected `real` or `quat`"
                    )))
                }
            };
            let t = thresholds(kind, DimensionProfile { d0: args.d0, d1: args.d1 });
            emit(&t);
            Ok(())
        }
        Command::Split(args) => run_split(args, config),
        Command::Unstabilize(args) => run_unstabilize(args, config),
        Command::Conjugate(args) => run_conjugate(args, config),
        Command::Ingest(args) => {
            let hamiltonian = schema::parse_hamiltonian_str(&read(&args.hamiltonian)?)?;
            let field = ingest_hamiltonian(&hamiltonian, args.fermi, args.grid, config)?;
            let text = schema::bundle_to_canonical_json(&field);
            write_output(&args.out, "fermi-projection.eqb.json", &text)?;
            if args.out.is_none() {
                println!("{text}");
            } else {
                emit(&serde_json::json!({
                    "rank": field.rank(),
                    "gap": field.gap(),
                    "vertices": field.base().vertex_count(),
                }));
            }
            Ok(())
        }
        Command::Gallery(args) => {
            let scenario = example_gallery(&args.name, config)?;
            let text = scenario_to_canonical_json(&scenario);
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("scenario.eqb.json"), &text)?;
                std::fs::write(
                    dir.join("complex.eqb.json"),
                    schema::complex_to_canonical_json(&scenario.complex),
                )?;
                for (label, field) in &scenario.bundles {
                    std::fs::write(
                        dir.join(format!("{label}.eqb.json")),
                        schema::bundle_to_canonical_json(field),
                    )?;
                }
                if let Some(witness) = &scenario.witness {
                    std::fs::write(
                        dir.join("witness.eqb.json"),
                        schema::witness_to_canonical_json(witness),
                    )?;
                }
                eprintln!("wrote scenario files to {}", dir.display());
            } else {
                println!("{text}");
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SplitSummary {
    m: usize,
    rank_input: usize,
    rank_result: usize,
    gap_result: f64,
    peels: usize,
    min_section_margin: f64,
    min_pair_margin: Option<f64>,
    certificate_intertwining: f64,
    certificate_equivariance: f64,
    certificate_min_singular_value: f64,
    is_isomorphism: bool,
}

fn run_split(args: SplitArgs, config: &Config) -> Result<()> {
    let field = Arc::new(load_bundle(&args.bundle, config)?);
    let embedding = match &args.rel {
        None => None,
        Some(path) => {
            let (base, sections) = schema::parse_embedding_str(&read(path)?)?;
            if &base != field.base().as_ref() {
                return Err(Error::Mismatch {
                    context: "prescribed splitting lives over a different base".into(),
                });
            }
            Some(TrivialEmbedding { sections })
        }
    };
    let options = SplitOptions { force: args.force, peels: args.peels };
    let outcome = split_trivial_summand(&field, embedding.as_ref(), options, config)?;
    let report = &outcome.report;
    let summary = SplitSummary {
        m: outcome.m,
        rank_input: report.rank_input,
        rank_result: report.rank_result,
        gap_result: report.gap_result,
        peels: report.peels.len(),
        min_section_margin: report
            .peels
            .iter()
            .map(|p| p.section_margin)
            .fold(f64::INFINITY, f64::min),
        min_pair_margin: report
            .peels
            .iter()
            .filter_map(|p| p.pair_margin)
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x)))),
        certificate_intertwining: report.certificate.intertwining_residual,
        certificate_equivariance: report.certificate.equivariance_residual,
        certificate_min_singular_value: report.certificate.min_singular_value,
        is_isomorphism: report.certificate.is_isomorphism,
    };
    write_output(
        &args.out,
        "complement.eqb.json",
        &schema::bundle_to_canonical_json(&outcome.e0),
    )?;
    write_output(
        &args.out,
        "certificate.eqb.json",
        &schema::morphism_to_canonical_json(&outcome.certificate),
    )?;
    write_output(&args.out, "report.json", &schema::report_to_canonical_json(report))?;
    emit(&summary);
    Ok(())
}

fn run_unstabilize(args: UnstabilizeArgs, config: &Config) -> Result<()> {
    let e1 = Arc::new(load_bundle(&args.e1, config)?);
    let e2 = Arc::new(load_bundle(&args.e2, config)?);
    let witness_file: schema::WitnessFile = serde_json::from_str(&read(&args.witness)?)
        .map_err(|e| Error::ParseError(format!("{}: {e}", args.witness.display())))?;
    let witness = schema::file_to_witness(&witness_file, &resolver_for(&args.witness), config)?;
    let outcome = unstabilize(&e1, &e2, &witness, config)?;
    write_output(
        &args.out,
        "isomorphism.eqb.json",
        &schema::morphism_to_canonical_json(&outcome.isomorphism),
    )?;
    write_output(&args.out, "report.json", &schema::report_to_canonical_json(&outcome.report))?;
    emit(&outcome.report);
    Ok(())
}

#[derive(Serialize)]
struct ConjugateSummary {
    conjugation_residual: f64,
    unitary_conjugation_residual: f64,
    unitarity_residual: f64,
    equivariance_residual: f64,
    margin: f64,
}

fn run_conjugate(args: ConjugateArgs, config: &Config) -> Result<()> {
    if args.via.len() != 2 {
        return Err(Error::ParseError("--via needs exactly two morphism files".into()));
    }
    let p = AlgebraProjection::new(schema::parse_algebra_element_str(&read(&args.p)?)?, config)?;
    let q = AlgebraProjection::new(schema::parse_algebra_element_str(&read(&args.q)?)?, config)?;
    let phi = load_morphism(&args.via[0], config)?;
    let phi_perp = load_morphism(&args.via[1], config)?;
    let v = conjugator_from_isomorphisms(&p, &q, &phi, &phi_perp, config)?;
    let direct = verify_conjugator(&v, &p, &q);
    let u = unitarize(&v, config)?;
    let unitary_report = verify_conjugator(&u, &p, &q);
    // the dictionary converse: the conjugator restricts to an isomorphism
    // pair again
    let (back, back_perp) = restrict_conjugator(&u, &p, &q, config)?;
    let back_ok = verify_morphism(&back, config).is_isomorphism
        && verify_morphism(&back_perp, config).is_isomorphism;
    if !back_ok {
        eprintln!("warning: unitarized conjugator does not restrict to isomorphisms");
    }
    write_output(&args.out, "conjugator.eqb.json", &schema::conjugator_to_canonical_json(&u))?;
    let summary = ConjugateSummary {
        conjugation_residual: direct.conjugation_residual,
        unitary_conjugation_residual: unitary_report.conjugation_residual,
        unitarity_residual: unitary_report.unitarity_residual,
        equivariance_residual: unitary_report.equivariance_residual,
        margin: unitary_report.margin,
    };
    write_output(&args.out, "report.json", &schema::report_to_canonical_json(&summary))?;
    emit(&summary);
    Ok(())
}
