use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use hsverify::frontend::{emit_convergence, emit_report, parse_poly, JobDocument, OutputFormat, ReportDocument};
use hsverify::hs::{verify, HsJob};
use hsverify::multiindex::enumerate_up_to;
use hsverify::quadrature::{selftest, PolydiskRule};
use hsverify::{Error, SourceSpace, SpaceKind};

const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "hsverify", version, about = "Verify Hilbert-Schmidt characterizations of composition-type operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Structured,
    Table,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Structured => OutputFormat::Structured,
            Format::Table => OutputFormat::Table,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    BergmanBall,
    HardyBall,
    BergmanPolydisk,
    HardyPolydisk,
}

impl From<SpaceArg> for SpaceKind {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::BergmanBall => SpaceKind::BergmanBall,
            SpaceArg::HardyBall => SpaceKind::HardyBall,
            SpaceArg::BergmanPolydisk => SpaceKind::BergmanPolydisk,
            SpaceArg::HardyPolydisk => SpaceKind::HardyPolydisk,
        }
    }
}

#[derive(clap::Args)]
struct JobOverrides {
    /// Override the truncation degree K.
    #[arg(long, value_name = "K")]
    truncation: Option<u32>,
    /// Override the per-axis quadrature resolution.
    #[arg(long, value_name = "R,A", value_parser = parse_quad)]
    quad: Option<(usize, usize)>,
    /// Write output to a file instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full verification for one or more job files, in order.
    Verify {
        #[arg(required = true)]
        jobfiles: Vec<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Leave the wall-clock field out of the report.
        #[arg(long)]
        omit_timing: bool,
        #[command(flatten)]
        overrides: JobOverrides,
    },
    /// Print the (k, S_k, characterization, ratio) table.
    Convergence {
        jobfile: PathBuf,
        #[command(flatten)]
        overrides: JobOverrides,
    },
    /// Dump squared basis constants.
    Bases {
        #[arg(long, value_enum)]
        space: SpaceArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        max_degree: u32,
    },
    /// Check quadrature exactness; exits nonzero on failure.
    QuadSelftest {
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
    /// Echo the parsed coefficient map of an expression.
    Parse {
        #[arg(long)]
        m: usize,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
}

fn parse_quad(s: &str) -> Result<(usize, usize), String> {
    let (r, a) = s.split_once(',').ok_or("expected R,A")?;
    let r = r.trim().parse().map_err(|e| format!("radial: {e}"))?;
    let a = a.trim().parse().map_err(|e| format!("angular: {e}"))?;
    Ok((r, a))
}

fn load(path: &PathBuf, overrides: &JobOverrides) -> Result<(JobDocument, HsJob), Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let doc = JobDocument::from_text(&text)?;
    let mut job = doc.to_job()?;
    if let Some(k) = overrides.truncation {
        job = job.with_truncation(k)?;
    }
    if let Some((r, a)) = overrides.quad {
        job = job.with_rule(PolydiskRule::build(job.rule().m(), job.rule().beta(), r, a)?)?;
    }
    Ok((doc, job))
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Schema(format!("{}: {e}", path.display()))),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Verify {
            jobfiles,
            format,
            omit_timing,
            overrides,
        } => {
            let mut output = String::new();
            let mut code = 0u8;
            for path in &jobfiles {
                let (doc, job) = load(path, &overrides)?;
                let format = format.map(OutputFormat::from).or(doc.format).unwrap_or_default();
                let start = Instant::now();
                let report = verify(&job);
                let elapsed = start.elapsed().as_secs_f64();
                let document = ReportDocument::new(
                    JobDocument::echo(&job, doc.format),
                    report,
                    (!omit_timing).then_some(elapsed),
                );
                output.push_str(&emit_report(&document, format));
                code = code.max(document.result.verdict.exit_code() as u8);
            }
            write_output(&overrides.out, &output)?;
            Ok(code)
        }
        Command::Convergence { jobfile, overrides } => {
            let (_, job) = load(&jobfile, &overrides)?;
            let report = verify(&job);
            write_output(&overrides.out, &emit_convergence(&report))?;
            Ok(report.verdict.exit_code() as u8)
        }
        Command::Bases {
            space,
            n,
            alpha,
            max_degree,
        } => {
            let src = SourceSpace::new(space.into(), n, alpha)?;
            let mut out = String::from("J,basis_constant_sq\n");
            for j in enumerate_up_to(n, max_degree) {
                out.push_str(&format!("\"{j}\",{:.16e}\n", src.basis_constant_sq(&j)));
            }
            write_output(&None, &out)?;
            Ok(0)
        }
        Command::QuadSelftest { beta } => {
            let betas = match beta {
                Some(b) => vec![b],
                None => vec![-0.5, 0.0, 1.0, 3.0],
            };
            let mut ok = true;
            for b in betas {
                let r = selftest(b)?;
                let status = if r.passed() { "ok" } else { "FAIL" };
                println!(
                    "beta={b} mass_error={:.3e} moment_error={:.3e} angular_error={:.3e} {status}",
                    r.mass_error, r.moment_error, r.angular_error
                );
                ok &= r.passed();
            }
            Ok(if ok { 0 } else { 1 })
        }
        Command::Parse { m, expr } => {
            let p = parse_poly(&expr, m)?;
            for (j, c) in p.terms() {
                println!("{j}: {} {:+}i", c.re, c.im);
            }
            println!("= {p}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
