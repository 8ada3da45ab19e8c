//! Run configuration from command-line flags and an optional key=value
//! file. Flags win over the file; the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use qsci_core::eigensolver::DavidsonOptions;
use qsci_core::{EvolutionConfig, QDriftDepth, SamplerConfig, Sector};
use serde::Serialize;

use crate::{io_error, HarnessError, Result};

pub const DEFAULT_TAU: f64 = 2.0 * std::f64::consts::PI / 5.0;
pub const DEFAULT_STEPS: usize = 5;
pub const DEFAULT_INSTANCES: usize = 50;
pub const DEFAULT_SHOTS: usize = 1024;
/// Rotations per qDRIFT circuit when no precision is requested.
pub const DEFAULT_QDRIFT_N: usize = 200;
pub const DEFAULT_HCI_DELTA: f64 = 1e-4;
pub const DEFAULT_CIPSI_SELECT: usize = 10;
pub const DEFAULT_OUTPUT: &str = "qsci_out";

/// Keys accepted in a config file, spelled as the long flag names.
pub const FILE_KEYS: &[&str] = &[
    "fcidump",
    "sector",
    "tau",
    "steps",
    "instances",
    "shots",
    "qdrift-n",
    "qdrift-eps",
    "p-dep",
    "dmax",
    "rounds",
    "samples",
    "eps-screen",
    "eps-wf",
    "delta-conv",
    "max-outer",
    "seed",
    "pool-steps",
    "measurements",
    "pt2",
    "baselines",
    "hci-delta",
    "cipsi-select",
    "cipsi-max-dim",
    "output",
    "resume",
    "stop-after",
];

#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// key=value file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub fcidump: Option<PathBuf>,
    /// Electron counts as `n_alpha,n_beta` (default: from the FCIDUMP header)
    #[arg(long)]
    pub sector: Option<String>,
    /// Time step between measurement sets
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// qDRIFT circuits per time step
    #[arg(long)]
    pub instances: Option<usize>,
    /// Shots per circuit
    #[arg(long)]
    pub shots: Option<usize>,
    /// Rotations per qDRIFT circuit
    #[arg(long)]
    pub qdrift_n: Option<usize>,
    /// Channel precision; sets the rotation count from 2 lambda^2 t^2 / eps
    #[arg(long)]
    pub qdrift_eps: Option<f64>,
    /// Depolarizing probability per shot
    #[arg(long)]
    pub p_dep: Option<f64>,
    #[arg(long)]
    pub dmax: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub eps_screen: Option<f64>,
    #[arg(long)]
    pub eps_wf: Option<f64>,
    #[arg(long)]
    pub delta_conv: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Merge all time steps into one measurement set
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pool_steps: Option<bool>,
    /// Directory of measurement files to use instead of simulating
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    /// Compute PT2 snapshots and the final correction
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pt2: Option<bool>,
    /// Comma-separated subset of fci,hci,cipsi
    #[arg(long)]
    pub baselines: Option<String>,
    #[arg(long)]
    pub hci_delta: Option<f64>,
    #[arg(long)]
    pub cipsi_select: Option<usize>,
    #[arg(long)]
    pub cipsi_max_dim: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Continue from a checkpoint file
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop after this many outer iterations (the checkpoint allows resuming)
    #[arg(long)]
    pub stop_after: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BaselineSet {
    pub fci: bool,
    pub hci: bool,
    pub cipsi: bool,
}

impl FromStr for BaselineSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut set = BaselineSet::default();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "fci" => set.fci = true,
                "hci" => set.hci = true,
                "cipsi" => set.cipsi = true,
                "none" => {}
                other => return Err(format!("unknown baseline {other:?}")),
            }
        }
        Ok(set)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub fcidump: PathBuf,
    pub sector: Option<(usize, usize)>,
    pub tau: f64,
    pub steps: usize,
    pub instances: usize,
    pub shots: usize,
    pub qdrift_n: usize,
    pub qdrift_eps: Option<f64>,
    pub p_dep: f64,
    pub dmax: usize,
    pub rounds: usize,
    pub samples: usize,
    pub eps_screen: f64,
    pub eps_wf: f64,
    pub delta_conv: f64,
    pub max_outer: usize,
    pub seed: u64,
    pub pool_steps: bool,
    pub measurements: Option<PathBuf>,
    pub pt2: bool,
    pub baselines: BaselineSet,
    pub hci_delta: f64,
    pub cipsi_select: usize,
    pub cipsi_max_dim: usize,
    pub output: PathBuf,
    pub resume: Option<PathBuf>,
    pub stop_after: Option<usize>,
}

/// Parsed config file: key -> (line, value).
#[derive(Debug, Default)]
struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let err = |line, message: String| HarnessError::Parse { path: path.to_path_buf(), line, message };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(i + 1, "expected key=value".into()))?;
            let key = k.trim().replace('_', "-");
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(err(i + 1, format!("unknown key {key:?}")));
            }
            if entries.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(err(i + 1, format!("duplicate key {key:?}")));
            }
        }
        Ok(Self { path: path.to_path_buf(), entries })
    }

    fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|e: T::Err| HarnessError::Parse {
                path: self.path.clone(),
                line: *line,
                message: format!("{key}: {e}"),
            }),
        }
    }

    /// Relative paths in the file are taken relative to its directory.
    fn get_path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.get::<PathBuf>(key)?.map(|p| {
            if p.is_relative() {
                self.path.parent().map(|d| d.join(&p)).unwrap_or(p)
            } else {
                p
            }
        }))
    }
}

fn parse_sector(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("sector {s:?} is not n_alpha,n_beta"))?;
    let a = a.trim().parse().map_err(|_| format!("bad n_alpha in {s:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad n_beta in {s:?}"))?;
    Ok((a, b))
}

impl RunConfig {
    /// Merge flags, the optional config file and defaults, then validate.
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        macro_rules! pick {
            ($field:ident, $key:literal) => {
                match args.$field.clone() {
                    Some(v) => Some(v),
                    None => file.get($key)?,
                }
            };
        }
        macro_rules! pick_path {
            ($field:ident, $key:literal) => {
                match args.$field.clone() {
                    Some(v) => Some(v),
                    None => file.get_path($key)?,
                }
            };
        }
        let fcidump = pick_path!(fcidump, "fcidump")
            .ok_or_else(|| HarnessError::Config("no FCIDUMP given (--fcidump)".into()))?;
        let sector = match pick!(sector, "sector") {
            Some(s) => Some(parse_sector(&s).map_err(HarnessError::Config)?),
            None => None,
        };
        let baselines = match pick!(baselines, "baselines") {
            Some(s) => s.parse::<BaselineSet>().map_err(HarnessError::Config)?,
            None => BaselineSet::default(),
        };
        let dmax = pick!(dmax, "dmax").unwrap_or(SamplerConfig::default().d_max);
        let defaults = SamplerConfig::default();
        let config = RunConfig {
            fcidump,
            sector,
            tau: pick!(tau, "tau").unwrap_or(DEFAULT_TAU),
            steps: pick!(steps, "steps").unwrap_or(DEFAULT_STEPS),
            instances: pick!(instances, "instances").unwrap_or(DEFAULT_INSTANCES),
            shots: pick!(shots, "shots").unwrap_or(DEFAULT_SHOTS),
            qdrift_n: pick!(qdrift_n, "qdrift-n").unwrap_or(DEFAULT_QDRIFT_N),
            qdrift_eps: pick!(qdrift_eps, "qdrift-eps"),
            p_dep: pick!(p_dep, "p-dep").unwrap_or(0.0),
            dmax,
            rounds: pick!(rounds, "rounds").unwrap_or(defaults.n_rounds),
            samples: pick!(samples, "samples").unwrap_or(defaults.n_samples),
            eps_screen: pick!(eps_screen, "eps-screen").unwrap_or(defaults.eps_screen),
            eps_wf: pick!(eps_wf, "eps-wf").unwrap_or(defaults.eps_wf),
            delta_conv: pick!(delta_conv, "delta-conv").unwrap_or(defaults.delta_conv),
            max_outer: pick!(max_outer, "max-outer").unwrap_or(defaults.max_outer),
            seed: pick!(seed, "seed").unwrap_or(0),
            pool_steps: pick!(pool_steps, "pool-steps").unwrap_or(false),
            measurements: pick_path!(measurements, "measurements"),
            pt2: pick!(pt2, "pt2").unwrap_or(true),
            baselines,
            hci_delta: pick!(hci_delta, "hci-delta").unwrap_or(DEFAULT_HCI_DELTA),
            cipsi_select: pick!(cipsi_select, "cipsi-select").unwrap_or(DEFAULT_CIPSI_SELECT),
            cipsi_max_dim: pick!(cipsi_max_dim, "cipsi-max-dim").unwrap_or(dmax),
            output: pick_path!(output, "output").unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
            resume: pick_path!(resume, "resume"),
            stop_after: pick!(stop_after, "stop-after"),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(0.0..=1.0).contains(&self.p_dep) {
            return bad(format!("p-dep must lie in [0, 1], got {}", self.p_dep));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.hci_delta > 0.0) {
            return bad(format!("hci-delta must be positive, got {}", self.hci_delta));
        }
        if self.cipsi_select == 0 || self.cipsi_max_dim == 0 {
            return bad("cipsi-select and cipsi-max-dim must be at least 1".into());
        }
        if self.stop_after == Some(0) {
            return bad("stop-after must be at least 1".into());
        }
        if self.measurements.is_none() {
            self.evolution_config().validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        self.sampler_config().validate().map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn qdrift_depth(&self) -> QDriftDepth {
        match self.qdrift_eps {
            Some(eps) => QDriftDepth::Precision(eps),
            None => QDriftDepth::Count(self.qdrift_n),
        }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            tau: self.tau,
            steps: self.steps,
            instances: self.instances,
            shots_per_instance: self.shots,
            depth: self.qdrift_depth(),
            depolarizing: self.p_dep,
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            d_max: self.dmax,
            n_rounds: self.rounds,
            n_samples: self.samples,
            eps_screen: self.eps_screen,
            eps_wf: self.eps_wf,
            delta_conv: self.delta_conv,
            seed: self.seed,
            max_outer: self.max_outer,
            davidson: DavidsonOptions::default(),
        }
    }

    pub fn sector_override(&self) -> Option<Sector> {
        self.sector.map(|(a, b)| Sector::new(a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        run: RunArgs,
    }

    fn args(list: &[&str]) -> RunArgs {
        Wrap::parse_from(std::iter::once("qsci").chain(list.iter().copied())).run
    }

    #[test]
    fn defaults_fill_missing_values() {
        let c = RunConfig::resolve(&args(&["--fcidump", "x.fcidump"])).unwrap();
        assert_eq!(c.tau, DEFAULT_TAU);
        assert_eq!((c.steps, c.instances, c.shots), (5, 50, 1024));
        assert_eq!((c.dmax, c.rounds, c.samples), (50_000, 10, 100));
        assert_eq!((c.eps_screen, c.eps_wf), (1e-2, 1e-5));
        assert_eq!(c.qdrift_depth(), QDriftDepth::Count(DEFAULT_QDRIFT_N));
        assert!(c.pt2 && !c.pool_steps);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "fcidump = h2.fcidump\n# comment\nshots=64\nseed = 3\npool_steps = true\n").unwrap();
        let c = RunConfig::resolve(&args(&["--config", path.to_str().unwrap(), "--seed", "9"])).unwrap();
        assert_eq!(c.shots, 64);
        assert_eq!(c.seed, 9);
        assert!(c.pool_steps);
        assert_eq!(c.fcidump, dir.path().join("h2.fcidump"));
        let c = RunConfig::resolve(&args(&["--config", path.to_str().unwrap(), "--pool-steps", "false"])).unwrap();
        assert!(!c.pool_steps);
    }

    #[test]
    fn bad_file_entries_name_their_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "fcidump=a\nshots = many\n").unwrap();
        match RunConfig::resolve(&args(&["--config", path.to_str().unwrap()])) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "fcidump=a\n\nfrobnicate=1\n").unwrap();
        match RunConfig::resolve(&args(&["--config", path.to_str().unwrap()])) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        for bad in [
            &["--fcidump", "a", "--p-dep", "1.5"][..],
            &["--fcidump", "a", "--eps-wf", "0.5"],
            &["--fcidump", "a", "--dmax", "0"],
            &["--fcidump", "a", "--tau=-1"],
            &["--fcidump", "a", "--baselines", "fci,dmrg"],
        ] {
            assert!(matches!(RunConfig::resolve(&args(bad)), Err(HarnessError::Config(_))), "{bad:?}");
        }
        assert!(matches!(RunConfig::resolve(&args(&[])), Err(HarnessError::Config(_))));
    }

    #[test]
    fn sector_and_baselines_parse() {
        let c = RunConfig::resolve(&args(&["--fcidump", "a", "--sector", "2, 1", "--baselines", "fci,cipsi"]))
            .unwrap();
        assert_eq!(c.sector, Some((2, 1)));
        assert_eq!(c.baselines, BaselineSet { fci: true, hci: false, cipsi: true });
    }
}
