//! Classical comparators: exact FCI, heat-bath CI and a CIPSI-style
//! perturbative selection.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::determinants::{for_each_connected, sector_dimension, sector_determinants, Determinant, Sector};
use crate::eigensolver::{davidson_lowest, DavidsonOptions, EigenResult};
use crate::error::{Error, Result};
use crate::integrals::IntegralStore;
use crate::pt2::external_couplings;
use crate::scalar::Real;
use crate::slater_condon::{
    build_interaction_matrix, diagonal_element, element_unchecked, extend_interaction_matrix,
    SparseInteractionMatrix,
};

/// Largest sector [`fci_solve`] will diagonalize.
pub const FCI_MAX_DIMENSION: u128 = 1_000_000;

/// CIPSI denominators below this make a candidate an intruder.
pub const CIPSI_INTRUDER_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Fci,
    Hci,
    Cipsi,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Fci => "fci",
            Method::Hci => "hci",
            Method::Cipsi => "cipsi",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineResult<T> {
    pub method: Method,
    pub dets: Vec<Determinant>,
    pub energy: T,
    pub vector: Vec<T>,
    /// `(|D|, E)` after every solve.
    pub trace: Vec<(usize, f64)>,
    /// Candidates scored as intruders (CIPSI only).
    pub intruders: usize,
}

/// First subspace size in `trace` within `tolerance` of `exact`.
pub fn dimension_at_accuracy(trace: &[(usize, f64)], exact: f64, tolerance: f64) -> Option<usize> {
    trace.iter().find(|(_, e)| e - exact <= tolerance).map(|(n, _)| *n)
}

fn solve<T: Real>(
    matrix: &SparseInteractionMatrix<T>,
    guess: Option<&[T]>,
    options: &DavidsonOptions,
) -> Result<EigenResult<T>> {
    davidson_lowest(matrix, guess, options)
}

/// Exact ground state over the whole sector.
pub fn fci_solve<T: Real>(
    store: &IntegralStore<T>,
    sector: Sector,
    options: &DavidsonOptions,
) -> Result<BaselineResult<T>> {
    let dim = sector_dimension(store.norb(), sector);
    if dim > FCI_MAX_DIMENSION {
        return Err(Error::Capability(format!(
            "sector {sector} over {} orbitals has {dim} determinants, above the {FCI_MAX_DIMENSION} limit",
            store.norb()
        )));
    }
    let dets = sector_determinants(store.norb(), sector)?;
    let matrix = build_interaction_matrix(&dets, store)?;
    let r = solve(&matrix, None, options)?;
    let trace = vec![(dets.len(), r.energy.as_f64())];
    Ok(BaselineResult {
        method: Method::Fci,
        dets,
        energy: r.energy,
        vector: r.vector,
        trace,
        intruders: 0,
    })
}

fn check_reference<T: Real>(store: &IntegralStore<T>, sector: Sector) -> Result<Determinant> {
    if sector.n_alpha > store.norb() || sector.n_beta > store.norb() {
        return Err(Error::Parameter(format!(
            "sector {sector} does not fit in {} orbitals",
            store.norb()
        )));
    }
    Determinant::hartree_fock(store.norb(), sector)
}

/// Heat-bath CI: starting from the Hartree-Fock determinant, repeatedly add
/// every external determinant `l` with `|H_lk v_k| > threshold` for some
/// `k` in the subspace. Stops when nothing is added or the energy moves by
/// no more than `delta_conv`.
pub fn hci_run<T: Real>(
    store: &IntegralStore<T>,
    sector: Sector,
    threshold: f64,
    delta_conv: f64,
    options: &DavidsonOptions,
) -> Result<BaselineResult<T>> {
    if !(threshold > 0.0) {
        return Err(Error::Parameter(format!("HCI threshold must be positive, got {threshold}")));
    }
    let hf = check_reference(store, sector)?;
    let mut dets = vec![hf];
    let mut matrix = build_interaction_matrix(&dets, store)?;
    let mut energy = matrix.diagonal()[0];
    let mut vector = vec![T::one()];
    let mut trace = vec![(1, energy.as_f64())];
    loop {
        let present: HashSet<Determinant> = dets.iter().copied().collect();
        let eps = T::of(threshold);
        let found: Vec<Vec<Determinant>> = dets
            .par_iter()
            .zip(vector.par_iter())
            .map(|(d, &v)| {
                let mut out = Vec::new();
                for_each_connected(d, |l| {
                    if !present.contains(&l) && (element_unchecked(&l, d, store) * v).abs() > eps {
                        out.push(l);
                    }
                });
                out
            })
            .collect();
        let mut new: Vec<Determinant> = found.into_iter().flatten().collect();
        new.sort_unstable();
        new.dedup();
        if new.is_empty() {
            break;
        }
        matrix = extend_interaction_matrix(&matrix, &dets, &new, store)?;
        dets.extend(new);
        vector.resize(dets.len(), T::zero());
        let r = solve(&matrix, Some(&vector), options)?;
        let change = (r.energy - energy).abs().as_f64();
        energy = r.energy;
        vector = r.vector;
        trace.push((dets.len(), energy.as_f64()));
        if change <= delta_conv {
            break;
        }
    }
    Ok(BaselineResult { method: Method::Hci, dets, energy, vector, trace, intruders: 0 })
}

/// CIPSI-style selection: each iteration scores every external determinant
/// connected to the subspace by `|<l|H|Psi>| / (<l|H|l> - E)` and adds the
/// best `n_select`, until `max_dim` is reached or no candidates remain.
pub fn cipsi_run<T: Real>(
    store: &IntegralStore<T>,
    sector: Sector,
    n_select: usize,
    max_dim: usize,
    options: &DavidsonOptions,
) -> Result<BaselineResult<T>> {
    if n_select == 0 || max_dim == 0 {
        return Err(Error::Parameter("n_select and max_dim must be at least 1".into()));
    }
    let hf = check_reference(store, sector)?;
    let mut dets = vec![hf];
    let mut matrix = build_interaction_matrix(&dets, store)?;
    let mut energy = matrix.diagonal()[0];
    let mut vector = vec![T::one()];
    let mut trace = vec![(1, energy.as_f64())];
    let mut intruders = 0;
    while dets.len() < max_dim {
        let couplings = external_couplings(&dets, &vector, store)?;
        if couplings.is_empty() {
            break;
        }
        let mut scored: Vec<(Determinant, f64, bool)> = couplings
            .par_iter()
            .map(|(l, c)| {
                let denom = (diagonal_element(l, store) - energy).as_f64();
                if denom.abs() < CIPSI_INTRUDER_THRESHOLD {
                    (*l, f64::INFINITY, true)
                } else {
                    (*l, c.abs().as_f64() / denom, false)
                }
            })
            .collect();
        intruders += scored.iter().filter(|s| s.2).count();
        scored.sort_unstable_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let take = n_select.min(max_dim - dets.len());
        let new: Vec<Determinant> = scored.iter().take(take).map(|s| s.0).collect();
        matrix = extend_interaction_matrix(&matrix, &dets, &new, store)?;
        dets.extend(new);
        vector.resize(dets.len(), T::zero());
        let r = solve(&matrix, Some(&vector), options)?;
        energy = r.energy;
        vector = r.vector;
        trace.push((dets.len(), energy.as_f64()));
    }
    Ok(BaselineResult { method: Method::Cipsi, dets, energy, vector, trace, intruders })
}
