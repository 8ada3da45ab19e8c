//! Occupancy-guided, symmetry-preserving configuration sampling.
//!
//! Measured bitstrings seed the subspace and provide per-orbital occupancy
//! statistics. Those statistics bias random single and double excitations
//! away from the important determinants; candidates are ranked by sampling
//! probability times coupling to their parent, and the best ones are added
//! to the subspace, which is re-diagonalized after every round.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;

use crate::determinants::{Determinant, Sector, Spin};
use crate::eigensolver::{davidson_lowest, DavidsonOptions};
use crate::error::{Error, Result};
use crate::evolution::{shot_in_sector, MeasurementSet};
use crate::integrals::IntegralStore;
use crate::rng::{self, StreamRng};
use crate::scalar::Real;
use crate::slater_condon::{
    build_interaction_matrix, diagonal_element, element_unchecked, extend_interaction_matrix,
    SparseInteractionMatrix,
};

/// Mean occupation of each spatial orbital per spin over a set of shots.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyDistribution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl OccupancyDistribution {
    /// Every orbital half occupied.
    pub fn uniform(norb: usize) -> Self {
        Self { alpha: vec![0.5; norb], beta: vec![0.5; norb] }
    }

    pub fn norb(&self) -> usize {
        self.alpha.len()
    }

    pub fn spin(&self, spin: Spin) -> &[f64] {
        match spin {
            Spin::Alpha => &self.alpha,
            Spin::Beta => &self.beta,
        }
    }
}

fn check_width(ms: &MeasurementSet, norb: usize) -> Result<()> {
    if ms.n_qubits() != 2 * norb {
        return Err(Error::Dimension(format!(
            "measurement set has {} qubits, expected {}",
            ms.n_qubits(),
            2 * norb
        )));
    }
    Ok(())
}

/// Occupancy fractions over all raw shots, in or out of sector.
pub fn occupancy_distribution(ms: &MeasurementSet, norb: usize) -> Result<OccupancyDistribution> {
    check_width(ms, norb)?;
    if ms.is_empty() {
        return Err(Error::Input("empty measurement set".into()));
    }
    let mut counts = vec![0u64; 2 * norb];
    for &s in ms.shots() {
        for (k, c) in counts.iter_mut().enumerate() {
            *c += (s >> k & 1) as u64;
        }
    }
    let n = ms.len() as f64;
    let frac: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(OccupancyDistribution { alpha: frac[..norb].to_vec(), beta: frac[norb..].to_vec() })
}

/// Distinct in-sector determinants with their shot counts, most frequent
/// first (ties by determinant order).
pub fn harvest_counts(
    ms: &MeasurementSet,
    norb: usize,
    sector: Sector,
) -> Result<Vec<(Determinant, usize)>> {
    check_width(ms, norb)?;
    let mask = if norb == 64 { u64::MAX } else { (1u64 << norb) - 1 };
    let mut counts: HashMap<Determinant, usize> = HashMap::new();
    for &s in ms.shots() {
        if shot_in_sector(s, norb, sector) {
            let a = (s as u64) & mask;
            let b = ((s >> norb) as u64) & mask;
            *counts.entry(Determinant::from_masks_unchecked(norb, a, b)).or_insert(0) += 1;
        }
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_unstable_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(out)
}

/// Distinct in-sector determinants, most frequent first.
pub fn harvest_valid(ms: &MeasurementSet, norb: usize, sector: Sector) -> Result<Vec<Determinant>> {
    Ok(harvest_counts(ms, norb, sector)?.into_iter().map(|(d, _)| d).collect())
}

/// Fraction of shots that decode to the given sector.
pub fn acceptance_fraction(ms: &MeasurementSet, norb: usize, sector: Sector) -> Result<f64> {
    check_width(ms, norb)?;
    let hits = ms.shots().iter().filter(|&&s| shot_in_sector(s, norb, sector)).count();
    Ok(hits as f64 / ms.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExcitationKind {
    SingleAlpha,
    SingleBeta,
    DoubleAlphaAlpha,
    DoubleBetaBeta,
    DoubleAlphaBeta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub det: Determinant,
    /// Product of the conditional index probabilities.
    pub probability: f64,
    pub kind: ExcitationKind,
}

/// Draw one index from `items` with probability proportional to `weights`;
/// uniform when every weight is zero. Returns (position, probability).
fn draw<R: Rng>(weights: &[f64], rng: &mut R) -> (usize, f64) {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        let i = rng.gen_range(0..weights.len());
        return (i, 1.0 / weights.len() as f64);
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut pick = weights.len() - 1;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc && w > 0.0 {
            pick = i;
            break;
        }
    }
    // guard against rounding landing on a trailing zero weight
    while weights[pick] == 0.0 {
        pick -= 1;
    }
    (pick, weights[pick] / total)
}

/// Draw `k` distinct entries of `orbitals` without replacement, renormalizing
/// after each draw.
fn draw_distinct<R: Rng>(
    orbitals: &[usize],
    weights: &[f64],
    k: usize,
    rng: &mut R,
) -> (Vec<usize>, f64) {
    let mut orbs = orbitals.to_vec();
    let mut ws = weights.to_vec();
    let mut picked = Vec::with_capacity(k);
    let mut p = 1.0;
    for _ in 0..k {
        let (i, pi) = draw(&ws, rng);
        picked.push(orbs.remove(i));
        ws.remove(i);
        p *= pi;
    }
    (picked, p)
}

struct Channel {
    occupied: Vec<usize>,
    hole_weights: Vec<f64>,
    virtuals: Vec<usize>,
    particle_weights: Vec<f64>,
}

impl Channel {
    fn new(parent: &Determinant, occ: &[f64], spin: Spin) -> Self {
        let occupied = parent.occupied_list(spin);
        let virtuals = parent.virtual_list(spin);
        let hole_weights = occupied.iter().map(|&i| occ[i].clamp(0.0, 1.0)).collect();
        let particle_weights = virtuals.iter().map(|&i| 1.0 - occ[i].clamp(0.0, 1.0)).collect();
        Self { occupied, hole_weights, virtuals, particle_weights }
    }

    fn excite<R: Rng>(&self, k: usize, rng: &mut R) -> Option<(u64, f64)> {
        if self.occupied.len() < k || self.virtuals.len() < k {
            return None;
        }
        let (holes, ph) = draw_distinct(&self.occupied, &self.hole_weights, k, rng);
        let (parts, pp) = draw_distinct(&self.virtuals, &self.particle_weights, k, rng);
        let flip = holes.iter().chain(&parts).fold(0u64, |m, &i| m | 1 << i);
        Some((flip, ph * pp))
    }
}

/// One draw of each excitation type from `parent`: single alpha, single
/// beta, alpha-alpha double, beta-beta double, alpha-beta double. Channels
/// without enough occupied or virtual orbitals are skipped.
pub fn propose_candidates<R: Rng>(
    parent: &Determinant,
    occ: &OccupancyDistribution,
    rng: &mut R,
) -> Vec<Candidate> {
    let ch = [
        Channel::new(parent, &occ.alpha, Spin::Alpha),
        Channel::new(parent, &occ.beta, Spin::Beta),
    ];
    propose_with(parent, &ch, rng)
}

fn propose_with<R: Rng>(parent: &Determinant, ch: &[Channel; 2], rng: &mut R) -> Vec<Candidate> {
    let norb = parent.norb();
    let (a, b) = (parent.alpha(), parent.beta());
    let make = |fa: u64, fb: u64, probability: f64, kind| Candidate {
        det: Determinant::from_masks_unchecked(norb, a ^ fa, b ^ fb),
        probability,
        kind,
    };
    let mut out = Vec::with_capacity(5);
    for (spin, single, double) in [
        (0, ExcitationKind::SingleAlpha, ExcitationKind::DoubleAlphaAlpha),
        (1, ExcitationKind::SingleBeta, ExcitationKind::DoubleBetaBeta),
    ] {
        let place = |f: u64| if spin == 0 { (f, 0) } else { (0, f) };
        if let Some((f, p)) = ch[spin].excite(1, rng) {
            let (fa, fb) = place(f);
            out.push(make(fa, fb, p, single));
        }
        if let Some((f, p)) = ch[spin].excite(2, rng) {
            let (fa, fb) = place(f);
            out.push(make(fa, fb, p, double));
        }
    }
    if let (Some((fa, pa)), Some((fb, pb))) = (ch[0].excite(1, rng), ch[1].excite(1, rng)) {
        out.push(make(fa, fb, pa * pb, ExcitationKind::DoubleAlphaBeta));
    }
    out
}

/// Rank candidates by `d = P * |<parent|H|candidate>|`, merging duplicates
/// by their largest score, and keep the best `n_samples` (ties broken by
/// determinant order).
pub fn screen_candidates<T: Real>(
    candidates: &[Candidate],
    parent: &Determinant,
    store: &IntegralStore<T>,
    n_samples: usize,
) -> Vec<(Determinant, f64)> {
    let mut best: HashMap<Determinant, f64> = HashMap::new();
    for c in candidates {
        if c.det == *parent {
            continue;
        }
        let d = c.probability * element_unchecked(parent, &c.det, store).abs().as_f64();
        let slot = best.entry(c.det).or_insert(d);
        if d > *slot {
            *slot = d;
        }
    }
    let mut ranked: Vec<(Determinant, f64)> = best.into_iter().collect();
    sort_by_score(&mut ranked);
    ranked.truncate(n_samples);
    ranked
}

fn sort_by_score(list: &mut [(Determinant, f64)]) {
    list.sort_unstable_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Subspace cap.
    pub d_max: usize,
    /// Expansion rounds per measurement set.
    pub n_rounds: usize,
    /// Proposal draws per screened parent, and survivors kept per parent.
    pub n_samples: usize,
    /// Parents need `|v_k|` above this to be expanded.
    pub eps_screen: f64,
    /// Determinants with `|v_k|` at or below this are dropped after a round.
    pub eps_wf: f64,
    /// Stop once a round lowers the energy by no more than this.
    pub delta_conv: f64,
    pub seed: u64,
    /// Cap on passes over the measurement sets.
    pub max_outer: usize,
    pub davidson: DavidsonOptions,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            d_max: 50_000,
            n_rounds: 10,
            n_samples: 100,
            eps_screen: 1e-2,
            eps_wf: 1e-5,
            delta_conv: 1e-6,
            seed: 0,
            max_outer: 1000,
            davidson: DavidsonOptions::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_max", self.d_max as f64),
            ("n_rounds", self.n_rounds as f64),
            ("n_samples", self.n_samples as f64),
            ("max_outer", self.max_outer as f64),
            ("eps_screen", self.eps_screen),
            ("eps_wf", self.eps_wf),
            ("delta_conv", self.delta_conv),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.eps_wf >= self.eps_screen {
            return Err(Error::Parameter(format!(
                "eps_wf ({}) must be below eps_screen ({})",
                self.eps_wf, self.eps_screen
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Initial,
    Harvest,
    Expand,
    Filter,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Initial => "initial",
            Stage::Harvest => "harvest",
            Stage::Expand => "expand",
            Stage::Filter => "filter",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "initial" => Stage::Initial,
            "harvest" => Stage::Harvest,
            "expand" => Stage::Expand,
            "filter" => Stage::Filter,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    /// Outer iteration (the counter before it is incremented).
    pub outer: usize,
    /// Index of the measurement set used.
    pub step: usize,
    pub round: usize,
    pub stage: Stage,
    pub dim: usize,
    pub energy: f64,
    /// `E_old - E` for expansion records, zero otherwise.
    pub delta: f64,
}

/// Working subspace, eigenpair and progress counters.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceState<T> {
    pub dets: Vec<Determinant>,
    pub matrix: SparseInteractionMatrix<T>,
    pub energy: T,
    pub vector: Vec<T>,
    /// Completed outer iterations.
    pub counter: usize,
    /// Energy lowering of the latest expansion round.
    pub delta: f64,
    pub trace: Vec<TraceRecord>,
    reference: Determinant,
}

impl<T: Real> SubspaceState<T> {
    /// `{reference}` with its diagonal energy.
    pub fn new(reference: Determinant, store: &IntegralStore<T>) -> Result<Self> {
        let matrix = build_interaction_matrix(&[reference], store)?;
        let energy = matrix.diagonal()[0];
        let trace = vec![TraceRecord {
            outer: 0,
            step: 0,
            round: 0,
            stage: Stage::Initial,
            dim: 1,
            energy: energy.as_f64(),
            delta: 0.0,
        }];
        Ok(Self {
            dets: vec![reference],
            matrix,
            energy,
            vector: vec![T::one()],
            counter: 0,
            delta: 1.0,
            trace,
            reference,
        })
    }

    /// Rebuild a state from saved parts; the matrix is recomputed from `dets`.
    pub fn restore(
        reference: Determinant,
        dets: Vec<Determinant>,
        vector: Vec<T>,
        energy: T,
        counter: usize,
        delta: f64,
        trace: Vec<TraceRecord>,
        store: &IntegralStore<T>,
    ) -> Result<Self> {
        if dets.len() != vector.len() {
            return Err(Error::Dimension("checkpoint vector and subspace differ in size".into()));
        }
        if !dets.contains(&reference) {
            return Err(Error::Input("checkpoint subspace lacks the reference".into()));
        }
        let matrix = build_interaction_matrix(&dets, store)?;
        Ok(Self { dets, matrix, energy, vector, counter, delta, trace, reference })
    }

    pub fn reference(&self) -> &Determinant {
        &self.reference
    }

    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    /// Whether the outer loop would stop here.
    pub fn is_finished(&self, config: &SamplerConfig) -> bool {
        self.dim() >= config.d_max || self.delta <= config.delta_conv || self.counter >= config.max_outer
    }

    fn solve(&mut self, config: &SamplerConfig) -> Result<()> {
        let r = davidson_lowest(&self.matrix, Some(&self.vector), &config.davidson)?;
        self.energy = r.energy;
        self.vector = r.vector;
        Ok(())
    }

    fn extend(
        &mut self,
        new: &[Determinant],
        store: &IntegralStore<T>,
        config: &SamplerConfig,
    ) -> Result<()> {
        if new.is_empty() {
            return Ok(());
        }
        let sector = self.reference.sector();
        if let Some(d) = new.iter().find(|d| d.sector() != sector) {
            return Err(Error::Input(format!("determinant {d} outside sector {sector}")));
        }
        self.matrix = extend_interaction_matrix(&self.matrix, &self.dets, new, store)?;
        self.dets.extend_from_slice(new);
        self.vector.resize(self.dets.len(), T::zero());
        self.solve(config)
    }

    fn record(&mut self, step: usize, round: usize, stage: Stage, delta: f64) {
        self.trace.push(TraceRecord {
            outer: self.counter,
            step,
            round,
            stage,
            dim: self.dim(),
            energy: self.energy.as_f64(),
            delta,
        });
    }

    /// Drop determinants with `|v_k| <= eps_wf` (never the reference) and
    /// re-solve if anything went. Returns whether the subspace shrank.
    fn filter(&mut self, config: &SamplerConfig) -> Result<bool> {
        let eps = T::of(config.eps_wf);
        let keep: Vec<bool> = self
            .dets
            .iter()
            .zip(&self.vector)
            .map(|(d, v)| *d == self.reference || v.abs() > eps)
            .collect();
        if keep.iter().all(|&k| k) {
            return Ok(false);
        }
        self.matrix = self.matrix.retain(&keep);
        let mut k = keep.iter();
        self.dets.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.vector.retain(|_| *k.next().unwrap());
        self.solve(config)?;
        Ok(true)
    }
}

/// Add the measured in-sector determinants (most frequent first, up to the
/// cap) and re-solve.
pub fn harvest_into<T: Real>(
    state: &mut SubspaceState<T>,
    ms: &MeasurementSet,
    store: &IntegralStore<T>,
    config: &SamplerConfig,
) -> Result<usize> {
    let norb = store.norb();
    let present: HashSet<Determinant> = state.dets.iter().copied().collect();
    let room = config.d_max.saturating_sub(state.dim());
    let new: Vec<Determinant> = harvest_valid(ms, norb, state.reference.sector())?
        .into_iter()
        .filter(|d| !present.contains(d))
        .take(room)
        .collect();
    state.extend(&new, store, config)?;
    Ok(new.len())
}

/// Seed for the proposals made from `parent` in a given round.
fn parent_seed(config: &SamplerConfig, outer: usize, round: usize, parent: &Determinant) -> u64 {
    rng::derive_seed(
        config.seed,
        &[
            rng::STREAM_SAMPLER,
            outer as u64,
            round as u64,
            parent.alpha(),
            parent.beta(),
            rng::PURPOSE_PROPOSALS,
        ],
    )
}

/// New determinants proposed in one round, best first, before the cap.
pub fn select_new<T: Real>(
    state: &SubspaceState<T>,
    occ: &OccupancyDistribution,
    store: &IntegralStore<T>,
    config: &SamplerConfig,
    round: usize,
) -> Vec<(Determinant, f64)> {
    let eps = T::of(config.eps_screen);
    let parents: Vec<&Determinant> = state
        .dets
        .iter()
        .zip(&state.vector)
        .filter(|(_, v)| v.abs() > eps)
        .map(|(d, _)| d)
        .collect();
    let per_parent: Vec<Vec<(Determinant, f64)>> = parents
        .par_iter()
        .map(|parent| {
            let mut rng: StreamRng = rand::SeedableRng::seed_from_u64(parent_seed(
                config,
                state.counter,
                round,
                parent,
            ));
            let ch = [
                Channel::new(parent, &occ.alpha, Spin::Alpha),
                Channel::new(parent, &occ.beta, Spin::Beta),
            ];
            let mut pool = Vec::with_capacity(5 * config.n_samples);
            for _ in 0..config.n_samples {
                pool.extend(propose_with(parent, &ch, &mut rng));
            }
            screen_candidates(&pool, parent, store, config.n_samples)
        })
        .collect();
    let present: HashSet<Determinant> = state.dets.iter().copied().collect();
    let mut best: HashMap<Determinant, f64> = HashMap::new();
    for list in per_parent {
        for (d, s) in list {
            if present.contains(&d) {
                continue;
            }
            let slot = best.entry(d).or_insert(s);
            if s > *slot {
                *slot = s;
            }
        }
    }
    let mut out: Vec<(Determinant, f64)> = best.into_iter().collect();
    sort_by_score(&mut out);
    out
}

/// One sampling round: expand from the screened parents, re-solve with the
/// padded previous vector, then filter small coefficients.
pub fn expand_round<T: Real>(
    state: &mut SubspaceState<T>,
    occ: &OccupancyDistribution,
    store: &IntegralStore<T>,
    config: &SamplerConfig,
    step: usize,
    round: usize,
) -> Result<()> {
    let room = config.d_max.saturating_sub(state.dim());
    let new: Vec<Determinant> = select_new(state, occ, store, config, round)
        .into_iter()
        .take(room)
        .map(|(d, _)| d)
        .collect();
    let e_old = state.energy;
    state.extend(&new, store, config)?;
    // a converged solve can land a hair above the old energy; clamp the noise
    state.delta = (e_old - state.energy).as_f64().max(0.0);
    state.record(step, round, Stage::Expand, state.delta);
    if state.filter(config)? {
        state.record(step, round, Stage::Filter, 0.0);
    }
    Ok(())
}

/// One pass of the outer loop over measurement set `counter mod |sets|`.
pub fn outer_iteration<T: Real>(
    state: &mut SubspaceState<T>,
    sets: &[MeasurementSet],
    store: &IntegralStore<T>,
    config: &SamplerConfig,
) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::Input("no measurement sets".into()));
    }
    let step = state.counter % sets.len();
    let ms = &sets[step];
    if harvest_into(state, ms, store, config)? > 0 {
        state.record(step, 0, Stage::Harvest, 0.0);
    }
    let occ = occupancy_distribution(ms, store.norb())?;
    for round in 0..config.n_rounds {
        expand_round(state, &occ, store, config, step, round)?;
    }
    state.counter += 1;
    Ok(())
}

/// Run the sampler from `{reference}` until the subspace reaches `d_max` or
/// a round lowers the energy by no more than `delta_conv`.
pub fn run_qsci<T: Real>(
    sets: &[MeasurementSet],
    store: &IntegralStore<T>,
    reference: Determinant,
    config: &SamplerConfig,
) -> Result<SubspaceState<T>> {
    let mut state = SubspaceState::new(reference, store)?;
    continue_qsci(&mut state, sets, store, config, |_| Ok(()))?;
    Ok(state)
}

/// Drive `state` to completion, calling `after_each` at the end of every
/// outer iteration (for checkpoints and snapshots).
pub fn continue_qsci<T: Real>(
    state: &mut SubspaceState<T>,
    sets: &[MeasurementSet],
    store: &IntegralStore<T>,
    config: &SamplerConfig,
    mut after_each: impl FnMut(&SubspaceState<T>) -> Result<()>,
) -> Result<()> {
    config.validate()?;
    if sets.is_empty() {
        return Err(Error::Input("no measurement sets".into()));
    }
    for ms in sets {
        check_width(ms, store.norb())?;
    }
    if state.reference.norb() != store.norb() {
        return Err(Error::Dimension("reference and integrals differ in orbital count".into()));
    }
    while !state.is_finished(config) {
        outer_iteration(state, sets, store, config)?;
        after_each(state)?;
    }
    Ok(())
}

/// Diagonal energy of `d`, as a plain float.
pub fn reference_energy<T: Real>(d: &Determinant, store: &IntegralStore<T>) -> f64 {
    diagonal_element(d, store).as_f64()
}
