use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eqvol_cli::config::{from_table, merge_tables, parse_table};
use eqvol_cli::report::{to_json, write_file};
use eqvol_cli::verify::summary;
use eqvol_cli::{emit_report, run_verify, CliError, ExperimentConfig};
use eqvol_core::envelope::{default_reference_box, equilibrium_symbol_with, LegendreOptions};
use eqvol_core::monge_ampere::mass_report;
use eqvol_core::rational::format_q;
use eqvol_core::{
    estimate_volume, evaluate_on_grid, is_birational_at, mk_self_intersection, sandwich_report,
};
use serde_json::json;

/// Volumes of monomial graded linear series on projective space.
///
/// Every flag mirrors a config key; when both are given the config file wins.
#[derive(Parser)]
#[command(name = "eqvol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counting volume, birationality and normalized self-intersections.
    Volume(Options),
    /// Equilibrium symbol on the envelope schedule.
    Envelope(Options),
    /// Exact and grid Monge-Ampère mass of the equilibrium symbol.
    MaMass(Options),
    /// Bergman sandwich against the reference equilibrium symbol.
    Bergman(Options),
    /// Full comparison of the three volumes; exit 0 on pass, 1 on fail.
    Verify(Options),
}

#[derive(Args)]
struct Options {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (`output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// complete | generators | ideal | example36 (`series.kind`).
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    d: Option<i64>,
    /// Comma separated generator, repeatable: `degree,α₁,…,αₙ` or `α₁,…,αₙ` for ideals.
    #[arg(long = "generator", value_delimiter = ' ')]
    generators: Vec<String>,
    #[arg(long)]
    truncation: Option<i64>,
    /// fubini-study | weighted-fubini-study (`weight.name`).
    #[arg(long)]
    weight: Option<String>,
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Envelope schedule, e.g. `1,2,4,8`.
    #[arg(long, value_delimiter = ',')]
    schedule: Vec<i64>,
    #[arg(long, value_delimiter = ',')]
    bergman_schedule: Vec<i64>,
    #[arg(long, value_delimiter = ',')]
    reference_schedule: Vec<i64>,
    #[arg(long)]
    k_max: Option<i64>,
    #[arg(long)]
    divisibility: Option<i64>,
    #[arg(long)]
    no_mass_grid: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mass_box: Vec<f64>,
    #[arg(long)]
    mass_resolution: Option<i64>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    max_box_doublings: Option<i64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bergman_box: Vec<f64>,
    #[arg(long)]
    bergman_resolution: Option<i64>,
    /// Joint tolerance of the verdict (`tolerances.joint`).
    #[arg(long)]
    tolerance: Option<f64>,
}

fn int_list(v: &[i64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|&x| toml::Value::Integer(x)).collect())
}

fn float_list(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect())
}

impl Options {
    fn flag_table(&self) -> Result<toml::Table, CliError> {
        let mut root = toml::Table::new();
        let mut section = |name: &str, entries: Vec<(&str, Option<toml::Value>)>| {
            let table: toml::Table = entries
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
                .collect();
            if !table.is_empty() {
                root.insert(name.to_string(), toml::Value::Table(table));
            }
        };
        let mut gens = Vec::new();
        for g in &self.generators {
            let parsed: Result<Vec<i64>, _> =
                g.split(',').map(|x| x.trim().parse::<i64>()).collect();
            let parsed = parsed.map_err(|_| CliError::Validation {
                field: "series.generators".into(),
                message: format!("cannot parse generator `{g}`"),
            })?;
            gens.push(parsed);
        }
        let gens: Vec<toml::Value> = gens.iter().map(|g| int_list(g)).collect();
        let nonempty_ints = |v: &[i64]| (!v.is_empty()).then(|| int_list(v));
        let nonempty_floats = |v: &[f64]| (!v.is_empty()).then(|| float_list(v));
        section(
            "series",
            vec![
                ("kind", self.kind.clone().map(toml::Value::String)),
                ("n", self.n.map(toml::Value::Integer)),
                ("d", self.d.map(toml::Value::Integer)),
                (
                    "generators",
                    (!gens.is_empty()).then_some(toml::Value::Array(gens)),
                ),
                ("truncation", self.truncation.map(toml::Value::Integer)),
            ],
        );
        section(
            "weight",
            vec![
                ("name", self.weight.clone().map(toml::Value::String)),
                ("weights", nonempty_floats(&self.weights)),
            ],
        );
        section(
            "schedules",
            vec![
                ("envelope", nonempty_ints(&self.schedule)),
                ("bergman", nonempty_ints(&self.bergman_schedule)),
                ("reference", nonempty_ints(&self.reference_schedule)),
                ("counting_k_max", self.k_max.map(toml::Value::Integer)),
                ("divisibility", self.divisibility.map(toml::Value::Integer)),
            ],
        );
        section(
            "grids",
            vec![
                (
                    "mass_grid",
                    self.no_mass_grid.then_some(toml::Value::Boolean(false)),
                ),
                ("mass_box", nonempty_floats(&self.mass_box)),
                (
                    "mass_resolution",
                    self.mass_resolution.map(toml::Value::Integer),
                ),
                ("smoothing", self.smoothing.map(toml::Value::Float)),
                (
                    "max_box_doublings",
                    self.max_box_doublings.map(toml::Value::Integer),
                ),
                ("bergman_box", nonempty_floats(&self.bergman_box)),
                (
                    "bergman_resolution",
                    self.bergman_resolution.map(toml::Value::Integer),
                ),
            ],
        );
        section(
            "tolerances",
            vec![("joint", self.tolerance.map(toml::Value::Float))],
        );
        section(
            "output",
            vec![(
                "dir",
                self.out
                    .as_ref()
                    .map(|p| toml::Value::String(p.display().to_string())),
            )],
        );
        Ok(root)
    }

    /// The merged config and whether an output directory was asked for.
    fn load(&self) -> Result<(ExperimentConfig, bool), CliError> {
        let mut table = self.flag_table()?;
        let mut wants_output = self.out.is_some();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file = parse_table(&text)?;
            wants_output |= file.get("output").and_then(|o| o.get("dir")).is_some();
            merge_tables(&mut table, file);
        }
        if !table.contains_key("series") {
            return Err(CliError::Validation {
                field: "series".into(),
                message: "give --config or --kind".into(),
            });
        }
        Ok((from_table(table)?, wants_output))
    }
}

fn volume(cfg: &ExperimentConfig, out: Option<&PathBuf>) -> Result<ExitCode, CliError> {
    let series = cfg.build_series()?;
    let est = estimate_volume(
        &series,
        cfg.schedules.counting_k_max,
        cfg.schedules.divisibility,
    )?;
    let mut levels = Vec::new();
    println!(
        "counting volume {:.6} (fit over k ≤ {})",
        est.extrapolated, cfg.schedules.counting_k_max
    );
    println!(
        "{:>6} {:>14} {:>10} {:>8}",
        "k", "M_k/k^n", "birational", "index"
    );
    for &k in &cfg.schedules.envelope {
        let mk = mk_self_intersection(&series, k)?;
        let b = is_birational_at(&series, k)?;
        println!(
            "{:>6} {:>14} {:>10} {:>8}",
            k,
            format_q(&mk.normalized),
            b.birational,
            b.lattice_index
        );
        levels.push(json!({
            "level": k,
            "normalized": format_q(&mk.normalized),
            "birational": b.birational,
            "lattice_index": b.lattice_index.to_string(),
        }));
    }
    if let Some(dir) = out {
        write_file(
            dir,
            "volume.json",
            &to_json(&json!({"counting": est, "levels": levels})),
        )?;
        let mut csv = String::from("k,dim,normalized\n");
        for ((k, q), dim) in est.samples.iter().zip(&est.dims) {
            csv.push_str(&format!("{k},{dim},{}\n", format_q(q)));
        }
        write_file(dir, "tables/counting.csv", &csv)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn envelope(cfg: &ExperimentConfig, out: Option<&PathBuf>) -> Result<ExitCode, CliError> {
    let series = cfg.build_series()?;
    let phi = cfg.build_weight()?;
    let reference = default_reference_box(cfg.series.n);
    let p = equilibrium_symbol_with(
        &series,
        &phi,
        &cfg.schedules.envelope,
        &reference,
        &LegendreOptions::default(),
    )?;
    let text = p.function.to_text();
    print!("{text}");
    eprintln!(
        "{} pieces; schedule gap {}",
        p.function.pieces().len(),
        p.schedule_gap.map_or("-".into(), |g| format!("{g:.3e}"))
    );
    if let Some(dir) = out {
        write_file(dir, "symbol.txt", &text)?;
        write_file(
            dir,
            "tables/symbol_grid.csv",
            &evaluate_on_grid(&p.function, &reference)?.to_csv(),
        )?;
        write_file(
            dir,
            "envelope.json",
            &to_json(&json!({
                "schedule": p.schedule,
                "pieces": p.function.pieces().len(),
                "schedule_gap": p.schedule_gap,
            })),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn ma_mass(cfg: &ExperimentConfig, out: Option<&PathBuf>) -> Result<ExitCode, CliError> {
    let series = cfg.build_series()?;
    let phi = cfg.build_weight()?;
    let p = eqvol_core::equilibrium_symbol(&series, &phi, &cfg.schedules.envelope)?;
    let grid = cfg.mass_grid()?;
    let report = mass_report(
        &p.function,
        cfg.grids.mass_grid.then_some((&grid, cfg.grids.smoothing)),
        &cfg.mass_options(),
    )?;
    let text = to_json(&report);
    print!("{text}");
    if let Some(dir) = out {
        write_file(dir, "ma_mass.json", &text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn bergman(cfg: &ExperimentConfig, out: Option<&PathBuf>) -> Result<ExitCode, CliError> {
    if cfg.schedules.bergman.is_empty() {
        return Err(CliError::Validation {
            field: "schedules.bergman".into(),
            message: "empty".into(),
        });
    }
    let series = cfg.build_series()?;
    let phi = cfg.build_weight()?;
    let reference = eqvol_core::equilibrium_symbol(&series, &phi, &cfg.schedules.reference)?;
    let report = sandwich_report(
        &series,
        &phi,
        &reference,
        &cfg.bergman_grid()?,
        &cfg.schedules.bergman,
        &cfg.quadrature(),
    )?;
    print!("{}", report.to_csv());
    if let Some(dir) = out {
        write_file(dir, "tables/sandwich.csv", &report.to_csv())?;
        write_file(dir, "sandwich.json", &to_json(&report))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(cfg: &ExperimentConfig) -> Result<ExitCode, CliError> {
    let report = run_verify(cfg)?;
    emit_report(&report, &cfg.output_dir)?;
    print!("{}", summary(&report));
    Ok(if report.verdict_detail.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

type Stage = fn(&ExperimentConfig, Option<&PathBuf>) -> Result<ExitCode, CliError>;

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let (opts, stage): (&Options, Stage) = match &cli.command {
        Command::Volume(o) => (o, volume),
        Command::Envelope(o) => (o, envelope),
        Command::MaMass(o) => (o, ma_mass),
        Command::Bergman(o) => (o, bergman),
        Command::Verify(o) => {
            let (cfg, _) = o.load()?;
            return verify(&cfg);
        }
    };
    let (cfg, wants_output) = opts.load()?;
    stage(&cfg, wants_output.then_some(&cfg.output_dir))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_json() }));
            ExitCode::from(2)
        }
    }
}
