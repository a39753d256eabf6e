use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sarkisov_core::certify::{certificate, emit, to_dot, verify_text};
use sarkisov_core::engine::untwist;
use sarkisov_core::error::{Error, ErrorFamily};
use sarkisov_core::instance::{self, InstanceFile, Problem};
use sarkisov_core::rational::{parse_q, Q};
use sarkisov_core::surface::Mode;

const EXIT_VERIFY_FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "sarkisov", version, about = "Factor birational maps of rational Mori fiber surfaces into Sarkisov links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Factor an instance and write its certificate.
    Factor {
        instance: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Boundary parameter, as `p/q`.
        #[arg(long, value_parser = parse_rational)]
        epsilon: Option<Q>,
        #[arg(long)]
        max_links: Option<usize>,
        #[arg(long)]
        search_bound: Option<u32>,
        /// Also write the link chain as a DOT digraph.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a certificate from its instance data.
    Verify { certificate: PathBuf },
}

#[derive(Subcommand)]
enum GenKind {
    /// The standard quadratic transformation.
    Cremona,
    /// The de Jonquieres map of degree `d`.
    Dejonquieres { d: i64 },
    /// A random chain of links from the plane blown up at `points` points.
    Random { points: usize, seed: u64 },
    /// The identity of the plane.
    Identity,
    /// A switch between the two rulings of the quadric.
    Product,
    /// An elementary transformation with a reduced fiber in the boundary.
    Wklt,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Genuine,
    Klt,
    Wklt,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Genuine => Mode::Genuine,
            ModeArg::Klt => Mode::Klt,
            ModeArg::Wklt => Mode::Wklt,
        }
    }
}

fn parse_rational(s: &str) -> Result<Q, String> {
    parse_q(s).map_err(|e| e.to_string())
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(kind: &GenKind) -> Result<InstanceFile, Error> {
    match kind {
        GenKind::Cremona => Ok(instance::gen_cremona()),
        GenKind::Dejonquieres { d } => instance::gen_dejonquieres(*d),
        GenKind::Random { points, seed } => instance::gen_random(*points, *seed),
        GenKind::Identity => Ok(instance::gen_identity()),
        GenKind::Product => Ok(instance::gen_product_switch()),
        GenKind::Wklt => Ok(instance::gen_wklt_fiber()),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen { kind, out } => {
            let file = generate(&kind)?;
            write_output(out.as_deref(), &(file.to_json() + "\n"))?;
        }
        Command::Factor { instance, mode, epsilon, max_links, search_bound, dot, out } => {
            let text = fs::read_to_string(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let file = InstanceFile::from_json(&text)?.with_overrides(mode.map(Into::into), epsilon, search_bound, max_links);
            let problem = Problem::new(file)?;
            let fac = untwist(&problem)?;
            let cert = certificate(&problem, &fac)?;
            write_output(out.as_deref(), &emit(&cert))?;
            if let Some(path) = dot {
                fs::write(&path, to_dot(&cert)).with_context(|| format!("writing {}", path.display()))?;
            }
            let types: Vec<String> = cert.links.iter().map(|l| l.link_type.to_string()).collect();
            eprintln!(
                "{} links [{}], final degree {}, Noether-Fano passed",
                cert.link_count,
                types.join(", "),
                cert.final_witness.degree
            );
        }
        Command::Verify { certificate } => {
            let text = fs::read_to_string(&certificate).with_context(|| format!("reading {}", certificate.display()))?;
            match verify_text(&text)? {
                Ok(()) => println!("ok"),
                Err(failure) => {
                    println!("verification failed: {failure}");
                    return Ok(EXIT_VERIFY_FAILED);
                }
            }
        }
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::family) {
        Some(ErrorFamily::Instance) | None => 2,
        Some(ErrorFamily::RayNotFound) => 3,
        Some(ErrorFamily::IterationCap) => 4,
        Some(ErrorFamily::Internal) => 5,
        Some(ErrorFamily::Schema) => 6,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
