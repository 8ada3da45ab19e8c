//! Epstein-Nesbet second-order correction and the PT2 -> 0 extrapolation.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::determinants::{for_each_connected, Determinant};
use crate::error::{Error, Result};
use crate::integrals::IntegralStore;
use crate::scalar::Real;
use crate::slater_condon::{diagonal_element, element_unchecked};

/// Denominators below this are treated as intruders and skipped.
pub const INTRUDER_THRESHOLD: f64 = 1e-8;

/// Parents per accumulation block. Fixed so the reduction order does not
/// depend on the number of workers.
const PARENT_BLOCK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Pt2Result<T> {
    pub correction: T,
    /// External determinants with a nonzero accumulated coupling.
    pub n_external: usize,
    /// Externals skipped because their denominator fell below the threshold.
    pub intruders: usize,
    /// Per-external terms, sorted by determinant, when requested.
    pub contributions: Option<Vec<(Determinant, T)>>,
}

/// `<l|H|Psi> = sum_k H_lk v_k` for every determinant `l` outside `dets`
/// connected to at least one member. Sorted by determinant; each sum runs
/// over parents in list order, so the result is independent of scheduling.
pub fn external_couplings<T: Real>(
    dets: &[Determinant],
    vector: &[T],
    store: &IntegralStore<T>,
) -> Result<Vec<(Determinant, T)>> {
    if dets.len() != vector.len() {
        return Err(Error::Dimension(format!(
            "{} determinants but {} coefficients",
            dets.len(),
            vector.len()
        )));
    }
    if let Some(d) = dets.iter().find(|d| d.norb() != store.norb()) {
        return Err(Error::Dimension(format!(
            "determinant over {} orbitals, integrals over {}",
            d.norb(),
            store.norb()
        )));
    }
    let inside: HashSet<Determinant> = dets.iter().copied().collect();
    let blocks: Vec<HashMap<Determinant, T>> = dets
        .par_chunks(PARENT_BLOCK)
        .zip(vector.par_chunks(PARENT_BLOCK))
        .map(|(ds, vs)| {
            let mut acc: HashMap<Determinant, T> = HashMap::new();
            for (d, &v) in ds.iter().zip(vs) {
                if v == T::zero() {
                    continue;
                }
                for_each_connected(d, |l| {
                    if !inside.contains(&l) {
                        let h = element_unchecked(&l, d, store);
                        *acc.entry(l).or_insert_with(T::zero) += h * v;
                    }
                });
            }
            acc
        })
        .collect();
    let mut total: HashMap<Determinant, T> = HashMap::new();
    for block in blocks {
        for (l, c) in block {
            *total.entry(l).or_insert_with(T::zero) += c;
        }
    }
    let mut out: Vec<(Determinant, T)> = total.into_iter().collect();
    out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn pt2_impl<T: Real>(
    dets: &[Determinant],
    vector: &[T],
    energy: T,
    store: &IntegralStore<T>,
    keep: bool,
) -> Result<Pt2Result<T>> {
    let couplings = external_couplings(dets, vector, store)?;
    let terms: Vec<Option<T>> = couplings
        .par_iter()
        .map(|(l, c)| {
            let denom = diagonal_element(l, store) - energy;
            if denom < T::of(INTRUDER_THRESHOLD) {
                None
            } else {
                Some(-(*c * *c) / denom)
            }
        })
        .collect();
    let mut correction = T::zero();
    let mut intruders = 0;
    let mut n_external = 0;
    let mut contributions = keep.then(Vec::new);
    for ((l, c), t) in couplings.iter().zip(&terms) {
        if *c == T::zero() {
            continue;
        }
        n_external += 1;
        match t {
            Some(t) => {
                correction += *t;
                if let Some(list) = contributions.as_mut() {
                    list.push((*l, *t));
                }
            }
            None => intruders += 1,
        }
    }
    Ok(Pt2Result { correction, n_external, intruders, contributions })
}

/// `E_pt2 = -sum_l |<l|H|Psi>|^2 / (<l|H|l> - E)` over external determinants.
pub fn epstein_nesbet_pt2<T: Real>(
    dets: &[Determinant],
    vector: &[T],
    energy: T,
    store: &IntegralStore<T>,
) -> Result<Pt2Result<T>> {
    pt2_impl(dets, vector, energy, store, false)
}

/// As [`epstein_nesbet_pt2`], also returning each external term.
pub fn epstein_nesbet_pt2_detailed<T: Real>(
    dets: &[Determinant],
    vector: &[T],
    energy: T,
    store: &IntegralStore<T>,
) -> Result<Pt2Result<T>> {
    pt2_impl(dets, vector, energy, store, true)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtrapolationResult {
    /// Variational energy at zero correction.
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares of energy against PT2 correction, from
/// `(pt2, energy)` pairs.
pub fn extrapolate_pt2(points: &[(f64, f64)]) -> Result<ExtrapolationResult> {
    if points.len() < 2 {
        return Err(Error::SingularFit(format!("{} point(s), need at least 2", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Input("non-finite extrapolation point".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::SingularFit("all PT2 values identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(ExtrapolationResult { intercept, slope, r_squared, points: points.len() })
}
