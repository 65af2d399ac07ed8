use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use lcp_core::json::{self as js, certificate_to_json, triple_from_json, triple_to_json, TripleJson};
use lcp_core::radon_nikodym::rn_derivative;
use lcp_core::stinespring::verify_dilation;
use lcp_core::workbench::{
    format_text, generate, load_map, report::map_checks, report_dir, DefectKind, DefectSpec, GeneratorKind, InstanceSpec,
    PipelineOptions, Role,
};
use lcp_core::{dilate, DilateOptions, Error};

#[derive(Parser)]
#[command(name = "lcp", version, about = "Local CP multilinear maps: checks, dilations and Radon-Nikodym derivatives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance file.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        blocks: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        flag: Vec<usize>,
        #[arg(long, value_enum, default_value = "dilated")]
        kind: GeneratorKind,
        #[arg(long, value_delimiter = ',')]
        alpha_of: Option<Vec<usize>>,
        #[arg(long, default_value_t = 3)]
        max_leg_dim: usize,
        #[arg(long, default_value_t = 1.0)]
        v_norm: f64,
        #[arg(long)]
        unital: bool,
        #[arg(long, value_enum, default_value = "symmetry")]
        defect: DefectKind,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Basis tuple index for invariance defects.
        #[arg(long)]
        location: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property checks on a map or instance file.
    Check {
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        nmax: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the minimal Stinespring triple.
    Dilate {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol_rank: f64,
    },
    /// Radon-Nikodym derivative of psi with respect to phi.
    Rn {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        psi: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Check that a triple reproduces a map.
    Verify {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        triple: PathBuf,
        /// Tolerance relative to the largest basis value.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run the full pipeline on every instance in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long, default_value_t = 2)]
        nmax: usize,
        #[arg(long, default_value_t = 40)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// 1 for mathematical failures, 2 for input and I/O problems.
fn failure_code(e: &Error) -> u8 {
    match e {
        Error::NotAdmissible { .. }
        | Error::WellDefinedness { .. }
        | Error::InvariantViolation { .. }
        | Error::NotDominated(_)
        | Error::NotInCommutant { .. }
        | Error::Inconsistent { .. } => 1,
        _ => 2,
    }
}

fn fail(e: &Error, code: u8) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn print_json<T: serde::Serialize>(value: &T) -> lcp_core::Result<()> {
    println!("{}", js::to_string(value)?);
    Ok(())
}

fn run(cmd: Command) -> lcp_core::Result<ExitCode> {
    match cmd {
        Command::Gen { seed, k, blocks, flag, kind, alpha_of, max_leg_dim, v_norm, unital, defect, epsilon, location, out } => {
            let mut spec = InstanceSpec::dilated(seed, k, &blocks, &flag);
            spec.kind = kind;
            spec.alpha_of = alpha_of;
            spec.max_leg_dim = max_leg_dim;
            spec.v_norm = v_norm;
            spec.unital = unital;
            if kind == GeneratorKind::Defect {
                spec.defect = Some(DefectSpec { kind: defect, epsilon, location });
            }
            let inst = generate(&spec)?;
            js::write_file(&out, &inst)?;
            println!("{}", inst.name);
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { input, nmax, trials, tol, seed } => {
            let phi = load_map(&input, Role::Phi)?;
            let opts = PipelineOptions { n_max: nmax, trials, seed, tol, ..Default::default() };
            let reports = map_checks(&phi, &opts);
            let ok = reports.iter().all(|r| r.passed());
            print_json(&json!({ "input": input.display().to_string(), "reports": reports }))?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Dilate { input, out, tol, tol_rank } => {
            let phi = load_map(&input, Role::Phi)?;
            let triple = dilate(&phi, DilateOptions { tol, tol_rank })?;
            js::write_file(&out, &triple_to_json(&triple))?;
            println!("rank {} flag {:?}", triple.rank(), triple.space().flag());
            let res = triple.residuals();
            for (name, r) in res.structural() {
                println!("CHECK dilate/{name} {} {r:.3e}", if r <= tol { "pass" } else { "fail" });
            }
            println!("CHECK dilate/well_definedness pass {:.3e}", res.well_definedness);
            println!("CHECK dilate/v_norm_excess info {:.3e}", res.v_norm_excess);
            println!("CHECK dilate/isometry_defect info {:.3e}", res.isometry_defect);
            Ok(ExitCode::SUCCESS)
        }
        Command::Rn { phi, psi, out, tol } => {
            let (phi, psi) = match (load_map(&phi, Role::Phi), load_map(&psi, Role::Psi)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return Ok(fail(&e, 2)),
            };
            match rn_derivative(&phi, &psi, DilateOptions { tol, ..Default::default() }) {
                Ok(cert) => {
                    js::write_file(&out, &certificate_to_json(&cert))?;
                    print_json(&cert.residuals)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ Error::NotDominated(_)) => Ok(fail(&e, 1)),
                Err(e) => Ok(fail(&e, 2)),
            }
        }
        Command::Verify { phi, triple, tol } => {
            let phi = load_map(&phi, Role::Phi)?;
            let tj: TripleJson = js::read_file(&triple)?;
            let triple = triple_from_json(&tj)?;
            let residual = verify_dilation(&phi, &triple)? / phi.max_basis_norm().max(f64::MIN_POSITIVE);
            let ok = residual <= tol;
            println!("CHECK verify {} {residual:.3e}", if ok { "pass" } else { "fail" });
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Report { dir, format, nmax, trials, seed } => {
            let opts = PipelineOptions { n_max: nmax, trials, seed, ..Default::default() };
            let reports = report_dir(Path::new(&dir), &opts)?;
            match format {
                Format::Text => print!("{}", format_text(&reports)),
                Format::Json => print_json(&reports)?,
            }
            Ok(if reports.iter().all(|r| r.passed()) { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let code = failure_code(&e);
            fail(&e, code)
        }
    }
}
