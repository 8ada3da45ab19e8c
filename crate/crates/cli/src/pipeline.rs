//! Experiment drivers: the end-to-end run, nested-subspace PT2 series and
//! potential-energy-curve scans.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use qsci_core::baselines::{cipsi_run, dimension_at_accuracy, fci_solve, hci_run};
use qsci_core::determinants::sector_dimension;
use qsci_core::eigensolver::{davidson_lowest, DavidsonOptions};
use qsci_core::evolution::evolve_and_measure;
use qsci_core::pt2::{epstein_nesbet_pt2, extrapolate_pt2};
use qsci_core::qubit_hamiltonian::jordan_wigner;
use qsci_core::sampler::{continue_qsci, reference_energy};
use qsci_core::slater_condon::build_interaction_matrix;
use qsci_core::{
    BaselineResult, Determinant, ExtrapolationResult, IntegralStore, MeasurementSet, Sector, SubspaceState,
};
use serde_json::json;

use crate::checkpoint::{Checkpoint, Pt2Snapshot};
use crate::config::RunConfig;
use crate::measurements::{read_measurement_dir, step_file_name, write_measurement_dir};
use crate::output::*;
use crate::{load_fcidump, HarnessError, Result};

/// Tolerance for the |D|-at-accuracy columns, in Hartree.
pub const ACCURACY_TARGET: f64 = 1e-3;

#[derive(Debug)]
pub struct PipelineOutput {
    pub dir: PathBuf,
    /// False when the run stopped early on `stop_after`.
    pub complete: bool,
    pub e_hf: f64,
    pub e_qsci: f64,
    pub state: SubspaceState,
    pub snapshots: Vec<Pt2Snapshot>,
    pub pt2: Option<Pt2Snapshot>,
    pub extrapolation: Option<ExtrapolationResult>,
    pub fci: Option<BaselineResult>,
    pub hci: Option<BaselineResult>,
    pub cipsi: Option<BaselineResult>,
    /// `(method, |D| at 1 mHa)` rows of compactness.csv.
    pub compactness: Vec<(String, usize, f64, Option<usize>)>,
}

fn resolve_sector(cfg: &RunConfig, store: &IntegralStore) -> Result<Sector> {
    Ok(match cfg.sector_override() {
        Some(s) => s,
        None => store.sector()?,
    })
}

/// Simulate (or read) the measurement sets and write them under
/// `measurements/`.
fn measurement_stage(
    cfg: &RunConfig,
    store: &IntegralStore,
    reference: &Determinant,
    manifest: &mut Manifest,
) -> Result<Vec<MeasurementSet>> {
    let sets = match &cfg.measurements {
        Some(dir) => read_measurement_dir(dir)?,
        None => {
            let h = jordan_wigner(store)?;
            evolve_and_measure(&h, reference, &cfg.evolution_config(), cfg.seed)?
        }
    };
    write_measurement_dir(&manifest.path(MEASUREMENTS_DIR), &sets)?;
    for i in 0..sets.len() {
        manifest.record(&format!("{MEASUREMENTS_DIR}/{}", step_file_name(i + 1)));
    }
    Ok(sets)
}

/// Simulated measurements only.
pub fn run_evolution(cfg: &RunConfig) -> Result<Vec<MeasurementSet>> {
    let store = load_fcidump(&cfg.fcidump)?;
    let mut manifest = Manifest::new(&cfg.output)?;
    let staged = (|| {
        let sector = resolve_sector(cfg, &store)?;
        let reference = Determinant::hartree_fock(store.norb(), sector)?;
        let h = jordan_wigner(&store)?;
        let sets = evolve_and_measure(&h, &reference, &cfg.evolution_config(), cfg.seed)?;
        write_measurement_dir(&manifest.path(MEASUREMENTS_DIR), &sets)?;
        for i in 0..sets.len() {
            manifest.record(&format!("{MEASUREMENTS_DIR}/{}", step_file_name(i + 1)));
        }
        Ok(sets)
    })();
    match staged {
        Ok(sets) => {
            manifest.finish("complete")?;
            Ok(sets)
        }
        Err(e) => {
            manifest.fail(&e);
            Err(e)
        }
    }
}

fn snapshot(state: &SubspaceState, store: &IntegralStore) -> qsci_core::Result<Pt2Snapshot> {
    let r = epstein_nesbet_pt2(&state.dets, &state.vector, state.energy, store)?;
    Ok(Pt2Snapshot {
        outer: state.counter,
        trace_row: state.trace.len() - 1,
        dim: state.dim(),
        energy: state.energy,
        correction: r.correction,
        n_external: r.n_external,
        intruders: r.intruders,
    })
}

/// OLS over the snapshots, or `None` with fewer than two distinct
/// corrections.
fn extrapolate_snapshots(snapshots: &[Pt2Snapshot]) -> Option<ExtrapolationResult> {
    let points: Vec<(f64, f64)> = snapshots.iter().map(|s| (s.correction, s.energy)).collect();
    extrapolate_pt2(&points).ok()
}

/// Run the full pipeline: measurements, sampler, PT2 and toggled baselines.
///
/// The FCIDUMP, measurement directory and checkpoint are checked before the
/// output directory is created, so a missing input leaves nothing behind.
/// Any later failure writes error.json and an incomplete MANIFEST.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let store = load_fcidump(&cfg.fcidump)?;
    if let Some(dir) = &cfg.measurements {
        if !dir.is_dir() {
            return Err(HarnessError::Io {
                path: dir.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "measurement directory not found"),
            });
        }
    }
    let resume = cfg.resume.as_deref().map(Checkpoint::read).transpose()?;
    if let Some(c) = &resume {
        if c.seed != cfg.seed {
            return Err(HarnessError::Checkpoint(format!(
                "checkpoint was written with seed {}, run uses {}",
                c.seed, cfg.seed
            )));
        }
    }
    let mut manifest = Manifest::new(&cfg.output)?;
    match stages(cfg, &store, resume, &mut manifest) {
        Ok(out) => {
            manifest.finish(if out.complete { "complete" } else { "stopped" })?;
            Ok(out)
        }
        Err(e) => {
            manifest.fail(&e);
            Err(e)
        }
    }
}

fn stages(
    cfg: &RunConfig,
    store: &IntegralStore,
    resume: Option<Checkpoint>,
    manifest: &mut Manifest,
) -> Result<PipelineOutput> {
    let mut timings: Vec<(String, f64)> = Vec::new();
    let sector = resolve_sector(cfg, store)?;
    let reference = Determinant::hartree_fock(store.norb(), sector)?;
    let e_hf = reference_energy(&reference, store);

    let clock = Instant::now();
    let sets = measurement_stage(cfg, store, &reference, manifest)?;
    let sets = if cfg.pool_steps { vec![MeasurementSet::pooled(&sets)?] } else { sets };
    timings.push(("measurements".into(), clock.elapsed().as_secs_f64()));

    let sampler = cfg.sampler_config();
    let (mut state, mut snapshots) = match resume {
        Some(c) => c.into_state(store)?,
        None => (SubspaceState::new(reference, store)?, Vec::new()),
    };
    if *state.reference() != reference {
        return Err(HarnessError::Checkpoint("checkpoint reference differs from this run".into()));
    }
    let mut limited = sampler.clone();
    if let Some(n) = cfg.stop_after {
        limited.max_outer = limited.max_outer.min(state.counter + n);
    }
    let ckpt_path = manifest.path(CHECKPOINT_FILE);
    let mut write_error = None;
    let mut clock = Instant::now();
    let looped = continue_qsci(&mut state, &sets, store, &limited, |s| {
        if cfg.pt2 {
            snapshots.push(snapshot(s, store)?);
        }
        timings.push((format!("outer_{}", s.counter), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
        Checkpoint::from_state(s, cfg.seed, &snapshots).write(&ckpt_path).map_err(|e| {
            let msg = e.to_string();
            write_error = Some(e);
            qsci_core::Error::Input(msg)
        })
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    looped?;
    manifest.record(CHECKPOINT_FILE);
    let complete = state.is_finished(&sampler);

    let clock = Instant::now();
    let pt2 = if cfg.pt2 {
        let fresh = snapshots.last().is_some_and(|s| s.outer == state.counter && s.dim == state.dim());
        if !fresh {
            snapshots.push(snapshot(&state, store)?);
        }
        snapshots.last().copied()
    } else {
        None
    };
    timings.push(("pt2_final".into(), clock.elapsed().as_secs_f64()));
    Checkpoint::from_state(&state, cfg.seed, &snapshots).write(&ckpt_path)?;
    let extrapolation = extrapolate_snapshots(&snapshots);
    let e_qsci = state.trace.last().map(|r| r.energy).unwrap_or(state.energy);

    manifest.write_text(TRACE_FILE, &trace_csv(&state.trace))?;
    if cfg.pt2 {
        manifest.write_text(PT2_FILE, &pt2_csv(&snapshots))?;
    }

    let opts = DavidsonOptions::default();
    let mut baseline_notes = serde_json::Map::new();
    let mut timed = |name: &str, f: &mut dyn FnMut() -> Result<Option<BaselineResult>>| {
        let clock = Instant::now();
        let r = f();
        timings.push((name.to_string(), clock.elapsed().as_secs_f64()));
        r
    };
    let fci = if cfg.baselines.fci {
        timed("fci", &mut || match fci_solve(store, sector, &opts) {
            Ok(r) => Ok(Some(r)),
            Err(qsci_core::Error::Capability(m)) => {
                baseline_notes.insert("fci".into(), json!({ "skipped": m }));
                Ok(None)
            }
            Err(e) => Err(e.into()),
        })?
    } else {
        None
    };
    let hci = if cfg.baselines.hci {
        timed("hci", &mut || Ok(Some(hci_run(store, sector, cfg.hci_delta, cfg.delta_conv, &opts)?)))?
    } else {
        None
    };
    let cipsi = if cfg.baselines.cipsi {
        timed("cipsi", &mut || Ok(Some(cipsi_run(store, sector, cfg.cipsi_select, cfg.cipsi_max_dim, &opts)?)))?
    } else {
        None
    };
    for r in [&fci, &hci, &cipsi].into_iter().flatten() {
        let mut csv = String::from("dim,energy\n");
        for (d, e) in &r.trace {
            writeln!(csv, "{d},{e}").unwrap();
        }
        manifest.write_text(&format!("baseline_{}.csv", r.method.as_str()), &csv)?;
    }

    let exact = fci.as_ref().map(|r| r.energy);
    let mut compactness = Vec::new();
    if cfg.baselines != Default::default() {
        let qsci_trace: Vec<(usize, f64)> = state.trace.iter().map(|r| (r.dim, r.energy)).collect();
        let mut rows = vec![("qsci".to_string(), state.dim(), e_qsci, qsci_trace)];
        for r in [&hci, &cipsi, &fci].into_iter().flatten() {
            rows.push((r.method.as_str().to_string(), r.dets.len(), r.energy, r.trace.clone()));
        }
        let mut csv = String::from("method,final_dim,final_energy,dim_at_1mha\n");
        for (name, dim, energy, trace) in rows {
            let at = exact.and_then(|x| dimension_at_accuracy(&trace, x, ACCURACY_TARGET));
            writeln!(csv, "{name},{dim},{energy},{}", at.map(|n| n.to_string()).unwrap_or_default()).unwrap();
            compactness.push((name, dim, energy, at));
        }
        manifest.write_text(COMPACTNESS_FILE, &csv)?;
    }

    let baseline_json = |r: &Option<BaselineResult>| {
        r.as_ref().map(|r| json!({ "energy": r.energy, "dim": r.dets.len(), "intruders": r.intruders }))
    };
    let result = json!({
        "fcidump": cfg.fcidump,
        "norb": store.norb(),
        "sector": { "n_alpha": sector.n_alpha, "n_beta": sector.n_beta },
        "sector_dimension": sector_dimension(store.norb(), sector).to_string(),
        "config": cfg,
        "complete": complete,
        "measurement_sets": sets.len(),
        "e_hf": e_hf,
        "e_hf_trace_row": 0,
        "e_qsci": e_qsci,
        "e_qsci_trace_row": state.trace.len() - 1,
        "dim": state.dim(),
        "outer_iterations": state.counter,
        "pt2": pt2.map(|s| json!({
            "correction": s.correction,
            "e_qsci_plus_pt2": s.energy + s.correction,
            "trace_row": s.trace_row,
            "n_external": s.n_external,
            "intruders": s.intruders,
        })),
        "extrapolation": extrapolation.map(|x| json!({
            "intercept": x.intercept,
            "slope": x.slope,
            "r_squared": x.r_squared,
            "points": x.points,
            "source": PT2_FILE,
        })),
        "baselines": {
            "fci": baseline_json(&fci),
            "hci": baseline_json(&hci),
            "cipsi": baseline_json(&cipsi),
            "notes": baseline_notes,
        },
    });
    manifest.write_json(RESULT_FILE, &result)?;

    let mut csv = String::from("stage,seconds\n");
    for (name, secs) in &timings {
        writeln!(csv, "{name},{secs:.6}").unwrap();
    }
    manifest.write_text(TIMINGS_FILE, &csv)?;

    Ok(PipelineOutput {
        dir: manifest.dir().to_path_buf(),
        complete,
        e_hf,
        e_qsci,
        state,
        snapshots,
        pt2,
        extrapolation,
        fci,
        hci,
        cipsi,
        compactness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPoint {
    pub dim: usize,
    pub energy: f64,
    pub correction: f64,
    pub n_external: usize,
    pub intruders: usize,
}

/// Nested subspaces from one wavefunction: determinants ranked by `|v|`
/// (ties by determinant order), each prefix of `sizes` re-diagonalized and
/// corrected with PT2.
pub fn prefix_series(
    dets: &[Determinant],
    vector: &[f64],
    store: &IntegralStore,
    sizes: &[usize],
    options: &DavidsonOptions,
) -> Result<Vec<SeriesPoint>> {
    if dets.len() != vector.len() {
        return Err(qsci_core::Error::Dimension("determinant list and vector differ in length".into()).into());
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        vector[b].abs().partial_cmp(&vector[a].abs()).unwrap_or(Ordering::Equal).then(dets[a].cmp(&dets[b]))
    });
    let mut out = Vec::with_capacity(sizes.len());
    for &k in sizes {
        if k == 0 || k > dets.len() {
            return Err(HarnessError::Config(format!("prefix size {k} outside 1..={}", dets.len())));
        }
        let sub: Vec<Determinant> = order[..k].iter().map(|&i| dets[i]).collect();
        let guess: Vec<f64> = order[..k].iter().map(|&i| vector[i]).collect();
        let matrix = build_interaction_matrix(&sub, store)?;
        let r = davidson_lowest(&matrix, Some(&guess), options)?;
        let p = epstein_nesbet_pt2(&sub, &r.vector, r.energy, store)?;
        out.push(SeriesPoint {
            dim: k,
            energy: r.energy,
            correction: p.correction,
            n_external: p.n_external,
            intruders: p.intruders,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PecPoint {
    pub tag: String,
    pub fcidump: PathBuf,
}

/// One curve row; `Err` holds the failure kind and message.
#[derive(Debug)]
pub struct PecRow {
    pub tag: String,
    pub result: std::result::Result<PipelineOutput, (String, String)>,
}

fn curve_csv(rows: &[PecRow]) -> String {
    let extrap = rows.len() >= 2;
    let mut out = String::from("geometry,e_hf,e_qsci,e_pt2,e_qsci_pt2,");
    if extrap {
        out.push_str("e_extrap,");
    }
    out.push_str("e_fci,e_hci,e_cipsi,dim,status\n");
    for row in rows {
        out.push_str(&row.tag);
        out.push(',');
        match &row.result {
            Ok(r) => {
                let mut cells = vec![
                    cell(Some(r.e_hf)),
                    cell(Some(r.e_qsci)),
                    cell(r.pt2.map(|p| p.correction)),
                    cell(r.pt2.map(|p| p.energy + p.correction)),
                ];
                if extrap {
                    cells.push(cell(r.extrapolation.map(|x| x.intercept)));
                }
                cells.push(cell(r.fci.as_ref().map(|b| b.energy)));
                cells.push(cell(r.hci.as_ref().map(|b| b.energy)));
                cells.push(cell(r.cipsi.as_ref().map(|b| b.energy)));
                cells.push(r.state.dim().to_string());
                cells.push(if r.complete { "ok" } else { "stopped" }.into());
                out.push_str(&cells.join(","));
            }
            Err((kind, _)) => {
                let blanks = if extrap { 9 } else { 8 };
                out.push_str(&",".repeat(blanks));
                out.push_str("error:");
                out.push_str(kind);
            }
        }
        out.push('\n');
    }
    out
}

/// Run the pipeline once per point into `<output>/<tag>/` and write
/// curve.csv. A failing point becomes a row of blanks and the scan goes on.
pub fn pec_scan(template: &RunConfig, points: &[PecPoint]) -> Result<Vec<PecRow>> {
    if points.is_empty() {
        return Err(HarnessError::Config("no geometries to scan".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if p.tag.is_empty() || p.tag.contains(['/', '\\', ',']) || p.tag.starts_with('.') {
            return Err(HarnessError::Config(format!("bad geometry tag {:?}", p.tag)));
        }
        if points[..i].iter().any(|q| q.tag == p.tag) {
            return Err(HarnessError::Config(format!("duplicate geometry tag {:?}", p.tag)));
        }
    }
    let mut manifest = Manifest::new(&template.output)?;
    let mut rows = Vec::with_capacity(points.len());
    let mut notes = Vec::new();
    for p in points {
        let mut cfg = template.clone();
        cfg.fcidump = p.fcidump.clone();
        cfg.output = template.output.join(&p.tag);
        cfg.resume = None;
        let result = run_pipeline(&cfg).map_err(|e| {
            notes.push(json!({ "geometry": p.tag, "kind": e.kind(), "message": e.to_string() }));
            (e.kind().to_string(), e.to_string())
        });
        if result.is_ok() {
            manifest.record(&format!("{}/", p.tag));
        }
        rows.push(PecRow { tag: p.tag.clone(), result });
    }
    manifest.write_text("curve.csv", &curve_csv(&rows))?;
    if notes.is_empty() {
        manifest.finish("complete")?;
    } else {
        manifest.write_json("failures.json", &notes)?;
        manifest.finish("incomplete")?;
    }
    Ok(rows)
}
