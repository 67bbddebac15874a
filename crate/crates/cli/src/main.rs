//! `chimney`: apogee reports, minimal-time and minimal-energy solves,
//! forward simulation and table reproduction.
//!
//! Precedence for every setting: command-line flag, then config document,
//! then (for the seed only) `CHIMNEY_SEED`, then the built-in default.
//!
//! Exit status: 0 on success, 2 on validation failure, 3 when no multistart
//! run converged.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use escape_chimney::config::{parse_raw, Format, RawConfig, RawModel, RunConfig};
use escape_chimney::reference::{self, ReferenceRow};
use escape_chimney::report::{
    write_time_csv, write_trajectory_csv, FixedPointReport, GeometryReport, SimulationDocument,
    SolutionDocument,
};
use escape_chimney::validation::run_suite;
use escape_chimney::variational::{forward_simulate, solve, Objective, Solution};
use escape_chimney::{Error, Result};
use serde::Serialize;

const DEFAULT_OUT: &str = "chimney-out";
const SEED_ENV: &str = "CHIMNEY_SEED";

#[derive(Parser, Debug)]
#[command(name = "chimney", version, about = "Purity steering on the Bloch ball")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Config document (TOML, or JSON by extension).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Multistart seed; overrides the document and `CHIMNEY_SEED`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    objective: Option<ObjectiveArg>,
    /// Ansatz order M.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Multistart count K.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Quadrature panels N.
    #[arg(long, global = true)]
    panels: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    Time,
    Energy,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableArg {
    Planar,
    Spatial,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Locate the apogee and print the geometry report.
    Apogee,
    /// Solve the configured problem; writes solution.json, trajectory.csv
    /// and controls.csv.
    Solve,
    /// Forward-simulate a solution document; writes time.csv and
    /// simulation.json.
    Simulate {
        /// Defaults to `<out>/solution.json`.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run the isomorphism and invariant checks on the configured model.
    Validate,
    /// Solve every row of a reference table and compare.
    ReproduceTables {
        #[arg(long, value_enum, default_value = "planar")]
        table: TableArg,
        /// Restrict to these orders.
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
    },
}

fn load_raw(common: &Common, required: bool) -> Result<RawConfig> {
    let mut raw = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            parse_raw(&text, Format::from_path(path))?
        }
        None if required => {
            return Err(Error::validation("config", "pass --config <file>"));
        }
        None => RawConfig::default(),
    };
    if common.seed.is_some() {
        raw.seed = common.seed;
    } else if raw.seed.is_none() {
        raw.seed = env_seed()?;
    }
    if let Some(o) = common.objective {
        raw.objective = Some(match o {
            ObjectiveArg::Time => Objective::Time,
            ObjectiveArg::Energy => Objective::Energy,
        });
    }
    raw.order = common.order.or(raw.order);
    raw.starts = common.starts.or(raw.starts);
    raw.panels = common.panels.or(raw.panels);
    raw.output_dir = common.out.clone().or(raw.output_dir);
    Ok(raw)
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::validation(SEED_ENV, format!("not an unsigned integer: {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn out_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::Io(e.to_string()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct ApogeeDocument<'a> {
    config: &'a RunConfig,
    geometry: GeometryReport,
}

fn cmd_apogee(config: &RunConfig) -> Result<()> {
    let (geom, bounds) = config.geometry()?;
    let doc = ApogeeDocument {
        config,
        geometry: GeometryReport::new(&geom, &bounds),
    };
    print_json(&doc)?;
    if config.output_dir.is_some() {
        write_json(&out_dir(config)?.join("apogee.json"), &doc)?;
    }
    Ok(())
}

fn write_controls_csv(path: &Path, solution: &Solution) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["x", "u1", "u2", "u3"]).map_err(io)?;
    for s in &solution.control_profile {
        w.serialize([s.x, s.u[0], s.u[1], s.u[2]]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

fn cmd_solve(config: &RunConfig) -> Result<()> {
    let (geom, spec) = config.problem()?;
    let solution = solve(&spec)?;
    let dir = out_dir(config)?;
    let doc = SolutionDocument {
        config: config.clone(),
        geometry: GeometryReport::new(&geom, spec.bounds()),
        fixed_point: FixedPointReport::new(&geom, &solution.terminal_controls()),
        solution,
    };
    write_json(&dir.join("solution.json"), &doc)?;
    write_trajectory_csv(
        create(&dir.join("trajectory.csv"))?,
        spec.dimension(),
        &doc.solution.control_profile,
    )?;
    write_controls_csv(&dir.join("controls.csv"), &doc.solution)?;
    let s = &doc.solution;
    println!(
        "objective={:?} M={} t_f={:.6} E={:.6} nu={:.3e} accepted={}/{} u(x_f)={:?}",
        s.objective,
        s.order,
        s.time,
        s.energy,
        s.residual,
        s.accepted_starts,
        s.starts_used,
        doc.fixed_point.terminal_controls
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_simulate(common: &Common, solution_path: Option<PathBuf>) -> Result<()> {
    let path = match solution_path {
        Some(p) => p,
        None => common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
            .join("solution.json"),
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let doc: SolutionDocument =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut config = doc.config.clone();
    if let Some(out) = &common.out {
        config.output_dir = Some(out.clone());
    }
    let (_, spec) = config.problem()?;
    let sim = forward_simulate(&spec, &doc.solution)?;
    let dir = out_dir(&config)?;
    write_time_csv(create(&dir.join("time.csv"))?, spec.dimension(), &sim)?;
    let report = SimulationDocument::new(&config, &doc.solution, &sim);
    write_json(&dir.join("simulation.json"), &report)?;
    println!(
        "elapsed={:.6} predicted={:.6} mismatch={:.3e} terminal_error={:.3e}",
        report.elapsed, report.predicted_time, report.time_mismatch, report.terminal_error
    );
    Ok(())
}

fn cmd_validate(config: &RunConfig) -> Result<bool> {
    let model = config.build_model()?;
    let (geom, _) = config.geometry()?;
    let ops = config.model.operators()?;
    let checks = run_suite(&model, ops.as_deref(), &geom, config.seed);
    for c in &checks {
        println!(
            "{} {} error={:.3e} tolerance={:.0e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.error,
            c.tolerance
        );
    }
    Ok(checks.iter().all(|c| c.passed))
}

#[derive(Serialize)]
struct TableRow {
    table: &'static str,
    order: usize,
    objective: Objective,
    time: Option<f64>,
    energy: Option<f64>,
    residual: Option<f64>,
    reference_time: f64,
    reference_energy: f64,
    delta_time: Option<f64>,
    delta_energy: Option<f64>,
}

fn table_model(table: TableArg) -> RawModel {
    match table {
        TableArg::Planar => RawModel {
            a: Some(vec![-3.0, -4.0]),
            b: Some(vec![1.0, 2.0]),
            ..RawModel::default()
        },
        TableArg::Spatial => RawModel {
            b_matrix: Some([[-7.0, 0.0, 0.0], [0.0, -6.0, 0.0], [0.0, 0.0, -5.0]]),
            b: Some(vec![1.0, 2.0, 3.0]),
            ..RawModel::default()
        },
    }
}

fn cmd_reproduce(common: &Common, table: TableArg, orders: Option<Vec<usize>>) -> Result<()> {
    let rows: &[ReferenceRow] = match table {
        TableArg::Planar => &reference::PLANAR_ROWS,
        TableArg::Spatial => &reference::SPATIAL_ROWS,
    };
    let mut base = load_raw(common, false)?;
    base.model = Some(table_model(table));
    let mut out = Vec::new();
    println!(
        "{:<8} {:>2} {:<7} {:>9} {:>9} {:>9} {:>10} {:>10} {:>10} {:>9}",
        "table", "M", "obj", "t_f", "ref", "delta", "E", "ref", "delta", "nu"
    );
    for row in rows {
        if orders.as_ref().is_some_and(|o| !o.contains(&row.order)) {
            continue;
        }
        for objective in [Objective::Time, Objective::Energy] {
            let mut raw = base.clone();
            raw.order = Some(row.order);
            if common.objective.is_none() {
                raw.objective = Some(objective);
            } else if raw.objective != Some(objective) {
                continue;
            }
            let config = raw.resolve()?;
            let (ref_t, ref_e) = match objective {
                Objective::Time => row.time_minimal,
                Objective::Energy => row.energy_minimal,
            };
            let (_, spec) = config.problem()?;
            let result = match solve(&spec) {
                Ok(s) => Some(s),
                Err(Error::NoConvergence { .. }) => None,
                Err(e) => return Err(e),
            };
            let r = TableRow {
                table: row.table,
                order: row.order,
                objective,
                time: result.as_ref().map(|s| s.time),
                energy: result.as_ref().map(|s| s.energy),
                residual: result.as_ref().map(|s| s.residual),
                reference_time: ref_t,
                reference_energy: ref_e,
                delta_time: result.as_ref().map(|s| s.time - ref_t),
                delta_energy: result.as_ref().map(|s| s.energy - ref_e),
            };
            let f = |v: Option<f64>, p: usize| v.map_or("-".into(), |v| format!("{v:.p$}"));
            println!(
                "{:<8} {:>2} {:<7} {:>9} {:>9.4} {:>9} {:>10} {:>10.4} {:>10} {:>9}",
                r.table,
                r.order,
                format!("{objective:?}").to_lowercase(),
                f(r.time, 4),
                r.reference_time,
                f(r.delta_time, 4),
                f(r.energy, 4),
                r.reference_energy,
                f(r.delta_energy, 4),
                r.residual.map_or("no conv".into(), |v| format!("{v:.1e}")),
            );
            out.push(r);
        }
    }
    let dir = base.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut w = csv::Writer::from_writer(create(&dir.join("tables.csv"))?);
    for r in &out {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Apogee => cmd_apogee(&load_raw(&cli.common, true)?.resolve()?).map(|_| true),
        Command::Solve => cmd_solve(&load_raw(&cli.common, true)?.resolve()?).map(|_| true),
        Command::Simulate { solution } => cmd_simulate(&cli.common, solution).map(|_| true),
        Command::Validate => cmd_validate(&load_raw(&cli.common, true)?.resolve()?),
        Command::ReproduceTables { table, orders } => {
            cmd_reproduce(&cli.common, table, orders).map(|_| true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NoConvergence { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
