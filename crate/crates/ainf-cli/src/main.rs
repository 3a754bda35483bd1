use std::path::PathBuf;
use std::process::ExitCode;

use ainf_cli::commands::{self, Options, Outcome};
use ainf_cli::document::{parse_field, parse_grading, Document, InputError, Overrides};
use anyhow::Context;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ainf", version, about = "Exact checks and constructions for finite A-infinity (pre-)categories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the truncation N of the document.
    #[arg(long, global = true)]
    max_arity: Option<usize>,
    /// Override the coefficient field: q or f<p>.
    #[arg(long, global = true, value_parser = parse_field)]
    field: Option<ainf::Field>,
    /// Override the grading: z or z2.
    #[arg(long, global = true, value_parser = parse_grading)]
    grading: Option<ainf::Grading>,
    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write the machine-readable JSON report here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the emitted instance document here (minimize, lift, pretr).
    #[arg(long, global = true)]
    emit: Option<PathBuf>,
    /// Largest collection size for the extension property.
    #[arg(long, global = true, default_value_t = 2)]
    bound: usize,
    /// Longest target sequence examined by resolve-q.
    #[arg(long, global = true, default_value_t = 2)]
    t_len: usize,
}

#[derive(clap::Args, Clone)]
struct InputArg {
    /// Instance document (JSON).
    input: PathBuf,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Check the A-infinity relations and every functor block.
    Check(InputArg),
    /// Hochschild cohomology dimension table of the underlying graded pre-category.
    Hh(InputArg),
    /// Homotopy transfer to a minimal model.
    Minimize(InputArg),
    /// Extend a minimal pre-category to a minimal category.
    Lift(InputArg),
    /// Build the pre-triangulated category on the twisted complexes.
    Pretr(InputArg),
    /// Maurer-Cartan and gauge checks for the twisted complexes.
    Mc(InputArg),
    /// Verify acyclicity of the augmented resolution complexes.
    ResolveQ(InputArg),
}

impl Command {
    fn input(&self) -> &PathBuf {
        match self {
            Command::Check(a)
            | Command::Hh(a)
            | Command::Minimize(a)
            | Command::Lift(a)
            | Command::Pretr(a)
            | Command::Mc(a)
            | Command::ResolveQ(a) => &a.input,
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, InputError> {
    let mut doc = Document::load(cli.command.input())?;
    doc.apply_overrides(&Overrides { field: cli.field, grading: cli.grading, max_arity: cli.max_arity });
    let opts = Options { seed: cli.seed, bound: cli.bound, t_len: cli.t_len };
    match cli.command {
        Command::Check(_) => commands::check(&doc),
        Command::Hh(_) => commands::hh(&doc),
        Command::Minimize(_) => commands::minimize(&doc),
        Command::Lift(_) => commands::lift(&doc, &opts),
        Command::Pretr(_) => commands::pretr(&doc),
        Command::Mc(_) => commands::mc(&doc),
        Command::ResolveQ(_) => commands::resolve_q(&doc, &opts),
    }
}

fn write(path: &PathBuf, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(cli: &Cli, o: &Outcome) -> anyhow::Result<()> {
    for w in o.report["warnings"].as_array().into_iter().flatten() {
        eprintln!("warning: {}", w.as_str().unwrap_or_default());
    }
    for l in &o.lines {
        println!("{l}");
    }
    println!("{}", if o.passed { "PASS" } else { "FAIL" });
    if let Some(p) = &cli.out {
        write(p, &(serde_json::to_string_pretty(&o.report)? + "\n"))?;
    }
    if let (Some(p), Some(d)) = (&cli.emit, &o.document) {
        write(p, &d.to_json())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => match emit(&cli, &o) {
            Ok(()) => ExitCode::from(if o.passed { 0 } else { 1 }),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            for m in &e.0 {
                eprintln!("error: {m}");
            }
            if let Some(p) = &cli.out {
                let report = serde_json::json!({ "passed": false, "input_errors": e.0 });
                let _ = write(p, &(report.to_string() + "\n"));
            }
            ExitCode::from(2)
        }
    }
}
