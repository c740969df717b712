//! Command-line frontend: entanglement extraction cost curves, model
//! scans, Haar-random sampling and the oracle verification suite, emitted
//! as machine-readable CSV or JSON tables.
//!
//! Exit status contract: 0 success, 1 usage error, 2 physical
//! precondition violation, 3 invariant violation, 4 oracle
//! non-convergence.

mod table;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use paircost::models::{self, XySpec};
use paircost::verify::{self, VerifyConfig};
use paircost::{boson, fermion, par, Error};
use table::{Cell, Format, Table};

#[derive(Parser)]
#[command(
    name = "paircost",
    about = "Partner-mode entanglement structure and extraction energy costs \
             for quadratic bosonic and fermionic Hamiltonians",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stat {
    Boson,
    Fermion,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Format {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal cost, variance and bounds over a grid of squeezing values.
    CostCurve {
        /// Exchange statistics of the two-mode source system.
        #[arg(long = "stat", value_enum)]
        stat: Stat,
        /// Lower excitation energy grid (value, comma list, or a:b:n).
        #[arg(long)]
        eps1: String,
        /// Upper excitation energy grid.
        #[arg(long)]
        eps2: String,
        /// Squeezing parameter grid.
        #[arg(long)]
        r: String,
        /// Mixing angle; enables the theta-dependent cost column.
        #[arg(long)]
        theta: Option<f64>,
        /// Largest excitation energy for the upper bound; defaults to eps2.
        #[arg(long)]
        omega_max: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Parameter scans of the application models.
    ModelScan {
        #[command(subcommand)]
        model: ModelCommand,
    },
    /// Haar-random partner modes of the XY chain against the cost bounds.
    RandomSample {
        /// Site count of the chain.
        #[arg(long, default_value_t = 10)]
        sites: usize,
        /// Nearest-neighbour coupling.
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Transverse field.
        #[arg(long)]
        field: f64,
        /// Anisotropy.
        #[arg(long)]
        anisotropy: f64,
        /// Number of Haar samples.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// RNG seed; identical seeds give byte-identical output.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Runs every oracle cross-check and reports margins.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Fermionic oracle size in modes (exact diagonalization).
        #[arg(long, default_value_t = 5)]
        fermion_modes: usize,
        /// Bosonic truncation in quanta per mode.
        #[arg(long, default_value_t = 34)]
        boson_cutoff: usize,
    },
}

#[derive(Subcommand, Clone)]
enum ModelCommand {
    /// Dilute-gas opposite-momentum pair analysis over gamma/omega.
    BoseGas {
        /// Grid of gamma/omega ratios in [0, 0.5).
        #[arg(long)]
        gamma_over_omega: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Single-site extraction along constant-gap paths of the XY chain.
    Xy {
        #[arg(long, default_value_t = 10)]
        sites: usize,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Constant-gap values (comma list).
        #[arg(long)]
        eps_min: String,
        /// Anisotropy grid along each path.
        #[arg(long, default_value = "0.3:1.0:36")]
        gamma: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version requests are successful exits.
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
            ExitCode::from(verify::error_exit_code(&err) as u8)
        }
    }
}

/// Parses `v`, `a,b,c` or `start:stop:count` into a grid.
fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty grid".into());
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:count, got '{text}'"));
        }
        let start: f64 = parts[0].parse().map_err(|e| format!("{e}"))?;
        let stop: f64 = parts[1].parse().map_err(|e| format!("{e}"))?;
        let count: usize = parts[2].parse().map_err(|e| format!("{e}"))?;
        if count < 2 {
            return Err("grid count must be at least 2".into());
        }
        return Ok((0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect());
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect()
}

fn write_table(table: &Table, output: &OutputArgs) -> Result<(), Error> {
    let io_err = |e: std::io::Error| Error::InvalidSpec(format!("output failed: {e}"));
    match &output.out {
        Some(path) => {
            let mut file = File::create(path).map_err(io_err)?;
            table.write(output.format.into(), &mut file).map_err(io_err)?;
            file.flush().map_err(io_err)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(output.format.into(), &mut lock).map_err(io_err)
        }
    }
}

fn usage(message: String) -> ExitCode {
    eprintln!("usage error: {message}");
    ExitCode::from(1)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::CostCurve {
            stat,
            eps1,
            eps2,
            r,
            theta,
            omega_max,
            output,
        } => {
            let (eps1, eps2, r) = match (parse_grid(&eps1), parse_grid(&eps2), parse_grid(&r)) {
                (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Ok(usage(e)),
            };
            cost_curve(stat, &eps1, &eps2, &r, theta, omega_max, &output)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ModelScan { model } => match model {
            ModelCommand::BoseGas {
                gamma_over_omega,
                output,
            } => {
                let grid = match parse_grid(&gamma_over_omega) {
                    Ok(g) => g,
                    Err(e) => return Ok(usage(e)),
                };
                bose_gas_scan(&grid, &output)?;
                Ok(ExitCode::SUCCESS)
            }
            ModelCommand::Xy {
                sites,
                coupling,
                eps_min,
                gamma,
                output,
            } => {
                let (eps_list, gamma_grid) = match (parse_grid(&eps_min), parse_grid(&gamma)) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => return Ok(usage(e)),
                };
                xy_scan(sites, coupling, &eps_list, &gamma_grid, &output)?;
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::RandomSample {
            sites,
            coupling,
            field,
            anisotropy,
            samples,
            seed,
            output,
        } => random_sample(sites, coupling, field, anisotropy, samples, seed, &output),
        Command::Verify {
            seed,
            fermion_modes,
            boson_cutoff,
        } => run_verify(VerifyConfig {
            seed,
            fermion_modes,
            boson_cutoff,
        }),
    }
}

fn cost_curve(
    stat: Stat,
    eps1: &[f64],
    eps2: &[f64],
    r_grid: &[f64],
    theta: Option<f64>,
    omega_max: Option<f64>,
    output: &OutputArgs,
) -> Result<(), Error> {
    let mut points = Vec::new();
    for &e1 in eps1 {
        for &e2 in eps2 {
            for &r in r_grid {
                points.push((e1, e2, r));
            }
        }
    }
    let reports = par::try_map_indices(points.len(), |i| {
        let (e1, e2, r) = points[i];
        let bound = Some(omega_max.unwrap_or(e2));
        match stat {
            Stat::Boson => boson::extraction_cost(e1, e2, r, theta, bound),
            Stat::Fermion => fermion::extraction_cost(e1, e2, r, theta, bound),
        }
    })?;
    let mut table = Table::new(vec!["r", "delta_S", "delta_E_min", "sigma_E", "delta_E_max"]);
    for ((_, _, r), rep) in points.iter().zip(reports.iter()) {
        table.push(vec![
            Cell::Float(*r),
            Cell::Float(rep.delta_s),
            Cell::Float(rep.delta_e_min),
            Cell::Float(rep.sigma_e),
            Cell::Float(rep.delta_e_max.unwrap_or(f64::NAN)),
        ]);
    }
    write_table(&table, output)
}

fn bose_gas_scan(grid: &[f64], output: &OutputArgs) -> Result<(), Error> {
    let reports = par::try_map_indices(grid.len(), |i| {
        let x = grid[i];
        models::bose_gas_pair_analysis(1.0, x)
    })?;
    let mut table = Table::new(vec!["gamma_over_omega", "delta_S", "delta_E", "ratio"]);
    for (x, rep) in grid.iter().zip(reports.iter()) {
        let ratio = if rep.delta_s > 0.0 {
            rep.delta_e / rep.delta_s
        } else {
            0.0
        };
        table.push(vec![
            Cell::Float(*x),
            Cell::Float(rep.delta_s),
            Cell::Float(rep.delta_e),
            Cell::Float(ratio),
        ]);
    }
    write_table(&table, output)
}

fn xy_scan(
    sites: usize,
    coupling: f64,
    eps_list: &[f64],
    gamma_grid: &[f64],
    output: &OutputArgs,
) -> Result<(), Error> {
    let mut table = Table::new(vec![
        "h",
        "gamma",
        "eps_min",
        "site_delta_S",
        "site_delta_E",
        "bound_lower",
        "bound_upper",
        "note",
    ]);
    for &eps_min in eps_list {
        let path = models::xy_fixed_gap_path(eps_min, coupling, gamma_grid)?;
        let reports = par::try_map_indices(path.points.len(), |i| {
            let (gamma, h) = path.points[i];
            let spec = XySpec::new(sites, coupling, h, gamma)?;
            if spec.is_gapless(1e-9) {
                return Ok((gamma, h, None));
            }
            let scan = models::xy_single_site_scan(&spec)?;
            Ok((gamma, h, Some(scan[0].clone())))
        })?;
        for (gamma, h, report) in reports {
            match report {
                Some(rep) => table.push(vec![
                    Cell::Float(h),
                    Cell::Float(gamma),
                    Cell::Float(eps_min),
                    Cell::Float(rep.delta_s),
                    Cell::Float(rep.delta_e),
                    Cell::Float(rep.bound_lower),
                    Cell::Float(rep.bound_upper),
                    Cell::Text(String::new()),
                ]),
                None => {
                    eprintln!("warning: gapless point (gamma={gamma}, h={h}) skipped");
                    table.push(vec![
                        Cell::Float(h),
                        Cell::Float(gamma),
                        Cell::Float(eps_min),
                        Cell::Float(f64::NAN),
                        Cell::Float(f64::NAN),
                        Cell::Float(f64::NAN),
                        Cell::Float(f64::NAN),
                        Cell::Text("gapless-skipped".into()),
                    ]);
                }
            }
        }
        for (gamma, reason) in &path.skipped {
            eprintln!("note: gamma={gamma} off the constant-gap branch: {reason}");
        }
    }
    write_table(&table, output)
}

fn random_sample(
    sites: usize,
    coupling: f64,
    field: f64,
    anisotropy: f64,
    samples: usize,
    seed: u64,
    output: &OutputArgs,
) -> Result<ExitCode, Error> {
    if samples == 0 {
        return Err(Error::InvalidSpec("need at least one sample".into()));
    }
    let spec = XySpec::new(sites, coupling, field, anisotropy)?;
    let rows = models::xy_haar_sample(&spec, seed, samples)?;

    let mut table = Table::new(vec![
        "sample_index",
        "delta_S",
        "delta_E",
        "bound_lower",
        "bound_upper",
        "within_bounds",
    ]);
    let mut violations = 0usize;
    for (i, row) in rows.iter().enumerate() {
        if !row.within_bounds {
            violations += 1;
        }
        table.push(vec![
            Cell::Int(i as u64),
            Cell::Float(row.delta_s),
            Cell::Float(row.delta_e),
            Cell::Float(row.bound_lower),
            Cell::Float(row.bound_upper),
            Cell::Bool(row.within_bounds),
        ]);
    }
    write_table(&table, output)?;
    if violations > 0 {
        eprintln!("error: {violations} samples violated the cost bounds");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(cfg: VerifyConfig) -> Result<ExitCode, Error> {
    let checks = verify::run_all(&cfg)?;
    let mut all_passed = true;
    for check in &checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!(
            "{status}  {name:<32} margin {margin:.3e}  tolerance {tol:.3e}",
            name = check.name,
            margin = check.margin,
            tol = check.tolerance
        );
        all_passed &= check.passed;
    }
    if all_passed {
        println!("all {} checks passed", checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: oracle cross-checks failed");
        Ok(ExitCode::from(3))
    }
}
