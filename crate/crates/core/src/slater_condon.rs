//! Hamiltonian matrix elements between determinants and sparse assembly of
//! the projected interaction matrix.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::determinants::{excitation_degree, for_each_connected, BitIter, Determinant, Spin};
use crate::error::{Error, Result};
use crate::integrals::IntegralStore;
use crate::scalar::Real;

/// Below this size, connected pairs are found by scanning all pairs.
pub const ALL_PAIRS_THRESHOLD: usize = 2000;

#[inline]
fn sign<T: Real>(phase: bool) -> T {
    if phase {
        -T::one()
    } else {
        T::one()
    }
}

/// Parity of the number of set bits strictly between positions `a` and `b`.
#[inline]
fn between_parity(mask: u64, a: usize, b: usize) -> bool {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if hi - lo <= 1 {
        return false;
    }
    let m = ((1u64 << hi) - 1) & !((2u64 << lo) - 1);
    (mask & m).count_ones() % 2 == 1
}

/// `<d|H|d>`.
pub fn diagonal_element<T: Real>(d: &Determinant, store: &IntegralStore<T>) -> T {
    let mut e = store.core_energy();
    let occ = [d.occupied_list(Spin::Alpha), d.occupied_list(Spin::Beta)];
    for list in &occ {
        for &i in list {
            e += store.h(i, i);
        }
    }
    // same spin: 1/2 sum_{i != j} [(ii|jj) - (ij|ji)]
    for list in &occ {
        for (n, &i) in list.iter().enumerate() {
            for &j in &list[..n] {
                e += store.coulomb(i, j) - store.exchange(i, j);
            }
        }
    }
    let mut opposite = T::zero();
    for &i in &occ[0] {
        for &j in &occ[1] {
            opposite += store.coulomb(i, j);
        }
    }
    e + opposite
}

/// Single excitation `hole -> particle` within `spin`, `d` being the bra.
fn single_element<T: Real>(
    d: &Determinant,
    spin: Spin,
    hole: usize,
    particle: usize,
    store: &IntegralStore<T>,
) -> T {
    let same = d.mask(spin);
    let other = match spin {
        Spin::Alpha => d.beta(),
        Spin::Beta => d.alpha(),
    };
    let mut v = store.h(hole, particle);
    for k in BitIter(same & !(1u64 << hole)) {
        v += store.eri(hole, particle, k, k) - store.eri(hole, k, k, particle);
    }
    for k in BitIter(other) {
        v += store.eri(hole, particle, k, k);
    }
    sign::<T>(between_parity(same, hole, particle)) * v
}

/// `<d1|H|d2>` by the Slater-Condon rules. Determinants in different
/// sectors, or differing by more than a double excitation, give zero.
pub fn matrix_element<T: Real>(
    d1: &Determinant,
    d2: &Determinant,
    store: &IntegralStore<T>,
) -> Result<T> {
    if d1.norb() != d2.norb() || d1.norb() != store.norb() {
        return Err(Error::Dimension(format!(
            "determinants over {} and {} orbitals, integrals over {}",
            d1.norb(),
            d2.norb(),
            store.norb()
        )));
    }
    Ok(element_unchecked(d1, d2, store))
}

pub(crate) fn element_unchecked<T: Real>(
    d1: &Determinant,
    d2: &Determinant,
    store: &IntegralStore<T>,
) -> T {
    let ax = d1.alpha() ^ d2.alpha();
    let bx = d1.beta() ^ d2.beta();
    let na = ax.count_ones();
    let nb = bx.count_ones();
    if na + nb > 4 || d1.alpha().count_ones() != d2.alpha().count_ones() {
        return T::zero();
    }
    match (na, nb) {
        (0, 0) => diagonal_element(d1, store),
        (2, 0) | (0, 2) => {
            let (spin, x) = if na == 2 { (Spin::Alpha, ax) } else { (Spin::Beta, bx) };
            let hole = (d1.mask(spin) & x).trailing_zeros() as usize;
            let particle = (d2.mask(spin) & x).trailing_zeros() as usize;
            single_element(d1, spin, hole, particle, store)
        }
        (4, 0) | (0, 4) => {
            let (spin, x) = if na == 4 { (Spin::Alpha, ax) } else { (Spin::Beta, bx) };
            let m1 = d1.mask(spin);
            let mut holes = BitIter(m1 & x);
            let mut parts = BitIter(d2.mask(spin) & x);
            let (i, j) = (holes.next().unwrap(), holes.next().unwrap());
            let (a, b) = (parts.next().unwrap(), parts.next().unwrap());
            // a†_b a_j a†_a a_i applied to d1; track the sign sequentially
            let mut state = m1;
            let mut odd = between_parity(state, i, a);
            state = state & !(1 << i) | 1 << a;
            odd ^= between_parity(state, j, b);
            let v = store.eri(i, a, j, b) - store.eri(i, b, j, a);
            sign::<T>(odd) * v
        }
        (2, 2) => {
            let i = (d1.alpha() & ax).trailing_zeros() as usize;
            let a = (d2.alpha() & ax).trailing_zeros() as usize;
            let j = (d1.beta() & bx).trailing_zeros() as usize;
            let b = (d2.beta() & bx).trailing_zeros() as usize;
            let odd = between_parity(d1.alpha(), i, a) ^ between_parity(d1.beta(), j, b);
            sign::<T>(odd) * store.eri(i, a, j, b)
        }
        _ => T::zero(),
    }
}

/// Symmetric element computed in a canonical argument order so that
/// `H[k][l]` and `H[l][k]` are bit-identical.
#[inline]
fn symmetric_element<T: Real>(d1: &Determinant, d2: &Determinant, store: &IntegralStore<T>) -> T {
    if d1 <= d2 {
        element_unchecked(d1, d2, store)
    } else {
        element_unchecked(d2, d1, store)
    }
}

/// Sparse symmetric interaction matrix over an ordered determinant list.
///
/// Both triangles are stored so matrix-vector products are row-local; every
/// determinant pair with excitation degree 1 or 2 has an explicit entry
/// (even when the integral happens to vanish), all others are implicit zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseInteractionMatrix<T> {
    diagonal: Vec<T>,
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Real> SparseInteractionMatrix<T> {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diagonal
    }

    /// Off-diagonal entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.diagonal.len() + self.rows.iter().map(Vec::len).sum::<usize>()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            return self.diagonal[i];
        }
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => T::zero(),
        }
    }

    /// `y = H x`, parallel over rows with a fixed per-row summation order.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = self.diagonal[i] * x[i];
            for &(j, h) in &self.rows[i] {
                acc += h * x[j];
            }
            *yi = acc;
        });
    }

    /// Column-major dense copy.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim();
        let mut m = vec![T::zero(); n * n];
        for i in 0..n {
            m[i * n + i] = self.diagonal[i];
            for &(j, h) in &self.rows[i] {
                m[j * n + i] = h;
            }
        }
        m
    }

    /// Keep only the rows/columns flagged in `keep`, preserving order.
    pub fn retain(&self, keep: &[bool]) -> Self {
        assert_eq!(keep.len(), self.dim());
        let mut remap = vec![usize::MAX; keep.len()];
        let mut next = 0;
        for (i, &k) in keep.iter().enumerate() {
            if k {
                remap[i] = next;
                next += 1;
            }
        }
        let mut diagonal = Vec::with_capacity(next);
        let mut rows = Vec::with_capacity(next);
        for i in (0..keep.len()).filter(|&i| keep[i]) {
            diagonal.push(self.diagonal[i]);
            rows.push(
                self.rows[i]
                    .iter()
                    .filter(|(j, _)| keep[*j])
                    .map(|&(j, h)| (remap[j], h))
                    .collect(),
            );
        }
        Self { diagonal, rows }
    }
}

fn index_map(dets: &[Determinant]) -> HashMap<Determinant, usize> {
    dets.iter().enumerate().map(|(i, d)| (*d, i)).collect()
}

fn check_dets<T: Real>(dets: &[Determinant], store: &IntegralStore<T>) -> Result<()> {
    if let Some(first) = dets.first() {
        let sector = first.sector();
        for d in dets {
            if d.norb() != store.norb() {
                return Err(Error::Dimension(format!(
                    "determinant over {} orbitals, integrals over {}",
                    d.norb(),
                    store.norb()
                )));
            }
            if d.sector() != sector {
                return Err(Error::Input(format!(
                    "determinant {d} outside sector {sector}"
                )));
            }
        }
    }
    Ok(())
}

/// Columns `< col_limit` of rows `rows` connected to each row determinant,
/// sorted by column. Exact regardless of strategy.
fn connected_columns(
    dets: &[Determinant],
    lookup: &HashMap<Determinant, usize>,
    rows: std::ops::Range<usize>,
    col_limit: usize,
) -> Vec<Vec<usize>> {
    let use_scan = col_limit <= ALL_PAIRS_THRESHOLD
        || dets.first().is_some_and(|d| col_limit < crate::determinants::connected_count(d));
    rows.into_par_iter()
        .map(|i| {
            let d = &dets[i];
            let mut cols = Vec::new();
            if use_scan {
                for (j, other) in dets[..col_limit].iter().enumerate() {
                    if j != i && excitation_degree(d, other) <= 2 {
                        cols.push(j);
                    }
                }
            } else {
                for_each_connected(d, |c| {
                    if let Some(&j) = lookup.get(&c) {
                        if j < col_limit {
                            cols.push(j);
                        }
                    }
                });
                cols.sort_unstable();
            }
            cols
        })
        .collect()
}

/// Assemble `H[k][l] = <D[k]|H|D[l]>` for a duplicate-free single-sector list.
pub fn build_interaction_matrix<T: Real>(
    dets: &[Determinant],
    store: &IntegralStore<T>,
) -> Result<SparseInteractionMatrix<T>> {
    if dets.is_empty() {
        return Err(Error::Dimension("empty determinant list".into()));
    }
    check_dets(dets, store)?;
    let lookup = index_map(dets);
    if lookup.len() != dets.len() {
        return Err(Error::Input("duplicate determinants in list".into()));
    }
    let cols = connected_columns(dets, &lookup, 0..dets.len(), dets.len());
    let diagonal = dets.par_iter().map(|d| diagonal_element(d, store)).collect();
    let rows = cols
        .into_par_iter()
        .enumerate()
        .map(|(i, cs)| {
            cs.into_iter()
                .map(|j| (j, symmetric_element(&dets[i], &dets[j], store)))
                .collect()
        })
        .collect();
    Ok(SparseInteractionMatrix { diagonal, rows })
}

/// Grow `old` (built over `old_dets`) by appending `new_dets`.
///
/// The result equals `build_interaction_matrix(old_dets ++ new_dets)`
/// bit for bit.
pub fn extend_interaction_matrix<T: Real>(
    old: &SparseInteractionMatrix<T>,
    old_dets: &[Determinant],
    new_dets: &[Determinant],
    store: &IntegralStore<T>,
) -> Result<SparseInteractionMatrix<T>> {
    if old.dim() != old_dets.len() {
        return Err(Error::Dimension(format!(
            "matrix has dimension {} but {} determinants were given",
            old.dim(),
            old_dets.len()
        )));
    }
    if new_dets.is_empty() {
        return Ok(old.clone());
    }
    let mut all = Vec::with_capacity(old_dets.len() + new_dets.len());
    all.extend_from_slice(old_dets);
    all.extend_from_slice(new_dets);
    check_dets(&all, store)?;
    let lookup = index_map(&all);
    if lookup.len() != all.len() {
        return Err(Error::Input(
            "new determinants overlap the existing set or contain duplicates".into(),
        ));
    }
    let k_old = old_dets.len();
    let new_cols = connected_columns(&all, &lookup, k_old..all.len(), all.len());
    let new_rows: Vec<Vec<(usize, T)>> = new_cols
        .into_par_iter()
        .enumerate()
        .map(|(n, cs)| {
            let i = k_old + n;
            cs.into_iter()
                .map(|j| (j, symmetric_element(&all[i], &all[j], store)))
                .collect()
        })
        .collect();

    let mut rows = old.rows.clone();
    // new columns are appended in increasing order, keeping rows sorted
    for (n, row) in new_rows.iter().enumerate() {
        let i = k_old + n;
        for &(j, h) in row.iter().take_while(|(j, _)| *j < k_old) {
            rows[j].push((i, h));
        }
    }
    rows.extend(new_rows);
    let mut diagonal = old.diagonal.clone();
    diagonal.extend(new_dets.par_iter().map(|d| diagonal_element(d, store)).collect::<Vec<_>>());
    Ok(SparseInteractionMatrix { diagonal, rows })
}
