use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsci_cli::config::RunArgs;
use qsci_cli::pipeline::{self, PecPoint};
use qsci_cli::{io_error, load_fcidump, Checkpoint, HarnessError, Result, RunConfig};
use qsci_core::baselines::{cipsi_run, fci_solve, hci_run};
use qsci_core::BaselineResult;
use qsci_core::determinants::sector_dimension;
use qsci_core::eigensolver::DavidsonOptions;
use qsci_core::pt2::{epstein_nesbet_pt2, extrapolate_pt2};
use qsci_core::qubit_hamiltonian::{jordan_wigner, l1_norm};
use qsci_core::sampler::reference_energy;
use qsci_core::Sector;
use serde_json::json;

const WORKERS_VAR: &str = "QSCI_WORKERS";

#[derive(Parser)]
#[command(name = "qsci", version, about = "Time-evolved quantum-selected configuration interaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Header, Hartree-Fock energy and sector size of an FCIDUMP
    FcidumpInfo {
        #[arg(long)]
        fcidump: PathBuf,
    },
    /// Exact diagonalization over the whole sector
    Fci(BaselineArgs),
    /// Heat-bath CI
    Hci {
        #[command(flatten)]
        common: BaselineArgs,
        #[arg(long, default_value_t = 1e-4)]
        delta: f64,
        #[arg(long, default_value_t = 1e-6)]
        delta_conv: f64,
    },
    /// Perturbative selection
    Cipsi {
        #[command(flatten)]
        common: BaselineArgs,
        #[arg(long, default_value_t = 10)]
        select: usize,
        #[arg(long, default_value_t = 50_000)]
        max_dim: usize,
    },
    /// Simulated measurements only
    Evolve(RunArgs),
    /// Measurements, configuration sampling, PT2 and baselines
    #[command(alias = "run")]
    Qsci(RunArgs),
    /// PT2 of a checkpointed subspace, optionally over nested prefixes
    Pt2 {
        #[arg(long)]
        fcidump: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated prefix sizes for an extrapolation series
        #[arg(long, value_delimiter = ',')]
        prefixes: Vec<usize>,
        /// Write the series here as CSV
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit energy against PT2 from a CSV with `pt2,energy` columns
    Extrapolate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Potential-energy-curve scan
    Pec {
        #[command(flatten)]
        run: RunArgs,
        /// Geometry as tag=path; repeatable
        #[arg(long = "point")]
        points: Vec<String>,
        /// File with one `tag path` pair per line
        #[arg(long)]
        points_file: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct BaselineArgs {
    #[arg(long)]
    fcidump: PathBuf,
    /// Electron counts as `n_alpha,n_beta`
    #[arg(long)]
    sector: Option<String>,
    /// Write the (dim, energy) trace here as CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values always serialize"));
}

fn sector_of(arg: &Option<String>, store: &qsci_core::IntegralStore) -> Result<Sector> {
    match arg {
        None => Ok(store.sector()?),
        Some(s) => {
            let parts: Vec<_> = s.split(',').map(|p| p.trim().parse::<usize>()).collect();
            match parts.as_slice() {
                [Ok(a), Ok(b)] => Ok(Sector::new(*a, *b)),
                _ => Err(HarnessError::Config(format!("sector {s:?} is not n_alpha,n_beta"))),
            }
        }
    }
}

fn baseline(args: &BaselineArgs, run: impl FnOnce(&qsci_core::IntegralStore, Sector) -> Result<BaselineResult>) -> Result<()> {
    let store = load_fcidump(&args.fcidump)?;
    let sector = sector_of(&args.sector, &store)?;
    let r = run(&store, sector)?;
    if let Some(path) = &args.trace {
        let mut csv = String::from("dim,energy\n");
        for (d, e) in &r.trace {
            csv.push_str(&format!("{d},{e}\n"));
        }
        std::fs::write(path, csv).map_err(io_error(path))?;
    }
    print_json(&json!({
        "method": r.method.as_str(),
        "energy": r.energy,
        "dim": r.dets.len(),
        "intruders": r.intruders,
    }));
    Ok(())
}

fn read_points_file(path: &Path) -> Result<Vec<PecPoint>> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(tag), Some(p), None) => out.push(PecPoint { tag: tag.into(), fcidump: base.join(p) }),
            _ => {
                return Err(HarnessError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "expected `tag path`".into(),
                })
            }
        }
    }
    Ok(out)
}

fn read_points_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let err = |line, message: String| HarnessError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = lines.next().map(|(_, h)| h.split(',').map(str::trim).collect()).unwrap_or_default();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or_else(|| err(1, format!("no {name} column")));
    let (xi, yi) = (col("pt2")?, col("energy")?);
    let mut points = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |k: usize| {
            cells.get(k).and_then(|c| c.parse::<f64>().ok()).ok_or_else(|| err(i + 1, format!("bad number in column {}", k + 1)))
        };
        points.push((get(xi)?, get(yi)?));
    }
    Ok(points)
}

fn run(cli: Cli) -> Result<()> {
    let opts = DavidsonOptions::default();
    match cli.command {
        Command::FcidumpInfo { fcidump } => {
            let store = load_fcidump(&fcidump)?;
            let sector = store.sector()?;
            let hf = store.hartree_fock()?;
            let h = jordan_wigner(&store)?;
            print_json(&json!({
                "norb": store.norb(),
                "nelec": store.nelec(),
                "ms2": store.ms2(),
                "n_alpha": sector.n_alpha,
                "n_beta": sector.n_beta,
                "core_energy": store.core_energy(),
                "hartree_fock": hf.to_bitstring(),
                "e_hf": reference_energy(&hf, &store),
                "sector_dimension": sector_dimension(store.norb(), sector).to_string(),
                "qubits": h.n_qubits(),
                "pauli_terms": h.terms().len(),
                "lambda": l1_norm(&h),
            }));
        }
        Command::Fci(args) => baseline(&args, |s, sec| Ok(fci_solve(s, sec, &opts)?))?,
        Command::Hci { common, delta, delta_conv } => {
            baseline(&common, |s, sec| Ok(hci_run(s, sec, delta, delta_conv, &opts)?))?
        }
        Command::Cipsi { common, select, max_dim } => {
            baseline(&common, |s, sec| Ok(cipsi_run(s, sec, select, max_dim, &opts)?))?
        }
        Command::Evolve(args) => {
            let cfg = RunConfig::resolve(&args)?;
            let sets = pipeline::run_evolution(&cfg)?;
            print_json(&json!({
                "output": cfg.output,
                "sets": sets.len(),
                "shots": sets.iter().map(|s| s.len()).sum::<usize>(),
            }));
        }
        Command::Qsci(args) => {
            let cfg = RunConfig::resolve(&args)?;
            let out = qsci_cli::run_pipeline(&cfg)?;
            print_json(&json!({
                "output": out.dir,
                "complete": out.complete,
                "e_hf": out.e_hf,
                "e_qsci": out.e_qsci,
                "dim": out.state.dim(),
                "pt2": out.pt2.map(|p| p.correction),
            }));
        }
        Command::Pt2 { fcidump, checkpoint, prefixes, output } => {
            let store = load_fcidump(&fcidump)?;
            let (state, _) = Checkpoint::read(&checkpoint)?.into_state(&store)?;
            let r = epstein_nesbet_pt2(&state.dets, &state.vector, state.energy, &store)?;
            let mut report = json!({
                "dim": state.dim(),
                "energy": state.energy,
                "pt2": r.correction,
                "energy_plus_pt2": state.energy + r.correction,
                "n_external": r.n_external,
                "intruders": r.intruders,
            });
            if !prefixes.is_empty() {
                let series = qsci_cli::prefix_series(&state.dets, &state.vector, &store, &prefixes, &opts)?;
                let mut csv = String::from("dim,energy,pt2,n_external,intruders\n");
                for p in &series {
                    csv.push_str(&format!("{},{},{},{},{}\n", p.dim, p.energy, p.correction, p.n_external, p.intruders));
                }
                if let Some(path) = &output {
                    std::fs::write(path, &csv).map_err(io_error(path))?;
                }
                let points: Vec<(f64, f64)> = series.iter().map(|p| (p.correction, p.energy)).collect();
                report["series"] = json!(series.iter().map(|p| json!([p.dim, p.energy, p.correction])).collect::<Vec<_>>());
                report["extrapolation"] = match extrapolate_pt2(&points) {
                    Ok(x) => json!({ "intercept": x.intercept, "slope": x.slope, "r_squared": x.r_squared, "points": x.points }),
                    Err(e) => json!({ "error": e.to_string() }),
                };
            }
            print_json(&report);
        }
        Command::Extrapolate { input } => {
            let x = extrapolate_pt2(&read_points_csv(&input)?)?;
            print_json(&json!({ "intercept": x.intercept, "slope": x.slope, "r_squared": x.r_squared, "points": x.points }));
        }
        Command::Pec { mut run, points, points_file } => {
            let mut list = Vec::new();
            if let Some(p) = &points_file {
                list.extend(read_points_file(p)?);
            }
            for p in &points {
                let (tag, path) = p
                    .split_once('=')
                    .ok_or_else(|| HarnessError::Config(format!("point {p:?} is not tag=path")))?;
                list.push(PecPoint { tag: tag.into(), fcidump: path.into() });
            }
            // the template needs some FCIDUMP to validate; points replace it
            if run.fcidump.is_none() {
                run.fcidump = list.first().map(|p| p.fcidump.clone());
            }
            let cfg = RunConfig::resolve(&run)?;
            let rows = pipeline::pec_scan(&cfg, &list)?;
            let failed: Vec<_> = rows.iter().filter(|r| r.result.is_err()).map(|r| r.tag.clone()).collect();
            print_json(&json!({ "output": cfg.output, "points": rows.len(), "failed": failed }));
            if failed.len() == rows.len() {
                return Err(HarnessError::Config("every geometry failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var(WORKERS_VAR) {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            _ => {
                eprintln!("error: {WORKERS_VAR} must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
