use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qslant_cli::config::{DEFAULT_SEED, Check};
use qslant_cli::{
    analyze, builtin_corpus, identities, load_dir, load_spec, parse_checks, to_json, verify_corpus,
    AnalysisConfig, CliError, CliResult, Report, StructureSource, EXIT_CHECK_FAILURE,
};
use qslant_core::slantlab::CLUSTER_TOL;

#[derive(Parser)]
#[command(name = "qslant", version, about = "Semi-slant analysis of Riemannian maps from flat hyperkahler space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Number of random sample points (default: the spec's explicit points, else 5).
    #[arg(long)]
    points: Option<usize>,
    /// Seed of the ChaCha8 point sampler.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Eigenvalue clustering tolerance for the semi-slant decomposition.
    #[arg(long, default_value_t = CLUSTER_TOL)]
    tol: f64,
    /// Write the JSON report to PATH (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Hypercomplex structure file (default: the canonical structure).
    #[arg(long, value_name = "FILE")]
    structure: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a map and evaluate the geometric checks.
    Analyze {
        /// Map-spec file, or the name of a built-in corpus entry.
        map: String,
        /// Comma-separated subset of classify,identities,integrability,harmonicity,geodesic,decomposition,umbilical.
        #[arg(long)]
        checks: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Analyze every corpus map and compare against its expectations.
    VerifyCorpus {
        /// Directory of map specs with `expect` blocks (default: the built-in corpus).
        #[arg(long, value_name = "DIR")]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the quaternion axioms, and the identity suite of a map if given.
    Identities {
        map: Option<String>,
        /// Domain dimension for the canonical structure when no map is given.
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn config(common: &Common, checks: Option<&str>) -> CliResult<AnalysisConfig> {
    let mut cfg = AnalysisConfig {
        structure: common
            .structure
            .clone()
            .map_or(StructureSource::Canonical, StructureSource::File),
        points: common.points,
        seed: common.seed,
        tol: common.tol,
        ..AnalysisConfig::default()
    };
    if let Some(list) = checks {
        cfg.checks = parse_checks(list)?;
        cfg.checks.insert(Check::Classify);
        cfg.checks_explicit = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match path {
        None => Ok(()),
        Some(p) if p.as_os_str() == "-" => {
            print!("{text}");
            Ok(())
        }
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
    }
}

fn summary(rep: &Report) -> String {
    let c = &rep.classification;
    let mut s = format!(
        "{}: {} (rank {}, fiber dimension {}, {} points)\n",
        rep.map.name,
        c.verdict,
        c.rank,
        c.vertical_dim,
        rep.points.len()
    );
    for (tag, shown) in &c.angle_display {
        s.push_str(&format!(
            "  {tag}: theta = {shown}, dim D1 = {}, dim D2 = {}\n",
            c.d1_dims.get(tag).copied().unwrap_or(0),
            c.d2_dims.get(tag).copied().unwrap_or(0)
        ));
    }
    for n in &c.notes {
        s.push_str(&format!("  note: {n}\n"));
    }
    s.push_str(&format!("  {} condition residuals evaluated\n", rep.conditions.len()));
    for k in &rep.skipped {
        let tag = k.structure.map(|t| format!(" {t}")).unwrap_or_default();
        s.push_str(&format!("  skipped {}{tag} [{}]: {}\n", k.check, k.code, k.message));
    }
    for f in &rep.failures {
        s.push_str(&format!("  FAIL {f}\n"));
    }
    s.push_str(if rep.passed { "  all checks pass\n" } else { "  some checks FAIL\n" });
    s
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Analyze { map, checks, common } => {
            let cfg = config(&common, checks.as_deref())?;
            let spec = load_spec(&map)?;
            let rep = analyze(&spec, &cfg)?;
            if common.json.as_deref().is_none_or(|p| p.as_os_str() != "-") {
                print!("{}", summary(&rep));
            }
            write_json(&common.json, &to_json(&rep)?)?;
            Ok(rep.passed)
        }
        Command::VerifyCorpus { corpus, common } => {
            let cfg = config(&common, None)?;
            let entries = match &corpus {
                Some(dir) => load_dir(dir)?,
                None => builtin_corpus(),
            };
            let outcome = verify_corpus(&entries, &cfg);
            if common.json.as_deref().is_none_or(|p| p.as_os_str() != "-") {
                print!("{}", outcome.table());
            }
            write_json(&common.json, &to_json(&outcome)?)?;
            Ok(outcome.passed)
        }
        Command::Identities { map, dim, common } => {
            let cfg = config(&common, None)?;
            let spec = map.as_deref().map(load_spec).transpose()?;
            let rep = identities(spec.as_ref(), dim, &cfg)?;
            if common.json.as_deref().is_none_or(|p| p.as_os_str() != "-") {
                println!("structure {} on R^{}", rep.structure, rep.dim);
                for (name, r) in &rep.axioms.residuals {
                    println!("  {name:<12} {r:.3e}");
                }
                if let Some(m) = &rep.map {
                    print!("{}", summary(m));
                }
                println!("{}", if rep.passed { "identities hold" } else { "identities FAIL" });
            }
            write_json(&common.json, &to_json(&rep)?)?;
            Ok(rep.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILURE as u8),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
