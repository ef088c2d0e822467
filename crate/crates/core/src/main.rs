use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gfem::cli::{load_config, preset, run, BcKind, FamilyName, Overrides, PRESET_NAMES};
use gfem::GfemError;

#[derive(Parser)]
#[command(name = "gfem", version, about = "Enriched finite elements for steady advection-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a preset or a config file and write CSV/VTK outputs.
    Run(RunArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in problem (see `gfem presets`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Diffusivity.
    #[arg(long)]
    kappa: Option<f64>,
    /// Element Peclet number; for continuation runs, the final one.
    #[arg(long)]
    pe_target: Option<f64>,
    /// Penalty weight; implies `--bc weak` unless `--bc` is given.
    #[arg(long)]
    lambda: Option<f64>,
    /// strong | weak
    #[arg(long, value_parser = parse_bc)]
    bc: Option<BcKind>,
    /// none | ha | hb | hc | hb2 | global-local
    #[arg(long, value_parser = parse_family)]
    enrichment: Option<FamilyName>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-element tau.
    #[arg(long)]
    emit_tau: bool,
}

fn parse_bc(s: &str) -> Result<BcKind, String> {
    s.parse().map_err(|e: GfemError| e.to_string())
}

fn parse_family(s: &str) -> Result<FamilyName, String> {
    s.parse().map_err(|e: GfemError| e.to_string())
}

fn execute(args: RunArgs) -> gfem::Result<()> {
    let base = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name)?,
        (None, Some(path)) => load_config(path)?,
        (None, None) => unreachable!("clap requires one of --preset/--config"),
    };
    let overrides = Overrides {
        kappa: args.kappa,
        pe_target: args.pe_target,
        lambda: args.lambda,
        bc: args.bc,
        enrichment: args.enrichment,
        out: args.out,
        emit_tau: args.emit_tau,
    };
    let config = overrides.apply(base)?;
    let outcome = run(&config)?;
    println!(
        "{}: {} nodes, {} enriched, kappa = {:e}",
        config.name,
        outcome.mesh.n_nodes(),
        outcome.field.dofs().n_enriched(),
        outcome.problem.kappa
    );
    if let Some(r) = outcome.report {
        println!(
            "l2_rel = {:.3e}, linf_nodal = {:.3e}, overshoot = {:.3e}, sign_changes = {}",
            r.l2_rel, r.linf_nodal, r.overshoot, r.sign_changes
        );
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                // error messages already embed their causes
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
