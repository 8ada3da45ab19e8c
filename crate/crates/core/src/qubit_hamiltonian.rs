//! Jordan-Wigner mapping of the molecular Hamiltonian onto weighted Pauli
//! strings, plus the Pauli algebra the simulator needs.
//!
//! Qubit `k` is spin orbital `k` in blocked order, and `|1>` means occupied.
//! `a†_k = Z_0 ... Z_{k-1} (X_k - i Y_k) / 2`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;

use crate::determinants::Determinant;
use crate::error::{Error, Result};
use crate::integrals::IntegralStore;
use crate::scalar::Real;

/// Coefficients with magnitude below this are dropped after merging.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Largest register the mapping supports (one `u64` per Pauli component).
pub const MAX_QUBITS: usize = 64;

/// Hermitian Pauli string `i^{|x & z|} X^x Z^z`: qubit `k` carries `I`, `X`,
/// `Y` or `Z` according to bit `k` of `(x, z)` = `(0,0)`, `(1,0)`, `(1,1)`,
/// `(0,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of `Y` factors.
    #[inline]
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Parse a word over `IXYZ`; character `k` acts on qubit `k`.
    pub fn parse(word: &str) -> Result<Self> {
        if word.len() > MAX_QUBITS {
            return Err(Error::Capability(format!("Pauli word longer than {MAX_QUBITS}")));
        }
        let mut p = PauliString::default();
        for (k, c) in word.chars().enumerate() {
            match c {
                'I' => {}
                'X' => p.x |= 1 << k,
                'Y' => {
                    p.x |= 1 << k;
                    p.z |= 1 << k;
                }
                'Z' => p.z |= 1 << k,
                _ => return Err(Error::Format(format!("invalid Pauli character {c:?}"))),
            }
        }
        Ok(p)
    }

    pub fn to_word(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .map(|k| match (self.x >> k & 1, self.z >> k & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            })
            .collect()
    }

    /// Action on a computational basis state: `P|b> = phase * |b ^ x>`.
    /// The phase is a power of `i`, returned as the exponent mod 4.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (u64, u32) {
        let z_sign = ((self.z & b).count_ones() & 1) * 2;
        (b ^ self.x, (self.y_count() + z_sign) % 4)
    }
}

#[inline]
pub(crate) fn i_power<T: Real>(k: u32) -> Complex<T> {
    match k % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm<T> {
    pub coefficient: T,
    pub string: PauliString,
}

/// `H = sum_j h_j sigma_j` with real coefficients and unique strings.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum<T> {
    n_qubits: usize,
    terms: Vec<PauliTerm<T>>,
}

impl<T: Real> PauliSum<T> {
    /// Merge duplicate strings, drop coefficients below [`PRUNE_THRESHOLD`],
    /// and order terms by string.
    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = PauliTerm<T>>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capability(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        let limit = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        let mut merged: BTreeMap<PauliString, T> = BTreeMap::new();
        for t in terms {
            if (t.string.x | t.string.z) & !limit != 0 {
                return Err(Error::Dimension(format!(
                    "Pauli string acts outside {n_qubits} qubits"
                )));
            }
            *merged.entry(t.string).or_insert(T::zero()) += t.coefficient;
        }
        let cut = T::of(PRUNE_THRESHOLD);
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() >= cut)
            .map(|(string, coefficient)| PauliTerm { coefficient, string })
            .collect();
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm<T>] {
        &self.terms
    }

    pub fn identity_coefficient(&self) -> T {
        self.terms
            .iter()
            .find(|t| t.string.is_identity())
            .map_or(T::zero(), |t| t.coefficient)
    }

    /// Non-identity terms, the ones qDRIFT samples.
    pub fn non_identity_terms(&self) -> impl Iterator<Item = &PauliTerm<T>> {
        self.terms.iter().filter(|t| !t.string.is_identity())
    }

    /// `<b_i| H |b_j>` over an explicit list of basis states (column-major).
    ///
    /// Each Pauli string maps a basis state to exactly one basis state, so
    /// this costs `O(terms * basis)` and never forms the full `2^n` matrix.
    pub fn restricted_matrix(&self, basis: &[u64]) -> Result<Vec<T>> {
        let n = basis.len();
        let index: std::collections::HashMap<u64, usize> =
            basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut re = vec![T::zero(); n * n];
        let mut im = vec![T::zero(); n * n];
        for (col, &b) in basis.iter().enumerate() {
            for t in &self.terms {
                let (out, phase) = t.string.apply_to_basis(b);
                if let Some(&row) = index.get(&out) {
                    let c = i_power::<T>(phase) * t.coefficient;
                    re[col * n + row] += c.re;
                    im[col * n + row] += c.im;
                }
            }
        }
        let worst = im.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if worst > T::of(1e-9) {
            return Err(Error::Input(format!(
                "restricted operator has imaginary entries up to {worst:e}"
            )));
        }
        Ok(re)
    }

    /// One `coefficient word` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            out.push_str(&format!("{:e} {}\n", t.coefficient, t.string.to_word(self.n_qubits)));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut width = None;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Parse { line: no + 1, message: m };
            let (c, w) = line.split_once(char::is_whitespace).ok_or_else(|| err("expected `coeff word`".into()))?;
            let w = w.trim();
            let coefficient: f64 = c.parse().map_err(|_| err(format!("bad coefficient {c:?}")))?;
            if *width.get_or_insert(w.len()) != w.len() {
                return Err(err("inconsistent Pauli word length".into()));
            }
            let string = PauliString::parse(w).map_err(|e| err(e.to_string()))?;
            terms.push(PauliTerm { coefficient: T::of(coefficient), string });
        }
        Self::from_terms(width.unwrap_or(0), terms)
    }
}

impl<T: Real> fmt::Display for PauliSum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `lambda = sum_j |h_j|` over non-identity terms.
pub fn l1_norm<T: Real>(h: &PauliSum<T>) -> T {
    h.non_identity_terms().map(|t| t.coefficient.abs()).sum()
}

/// Operator `X^x Z^z` (no implied `i` factors) with a complex weight.
type RawOperator<T> = BTreeMap<(u64, u64), Complex<T>>;

/// Product `(X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{|z1 & x2|} X^{x1^x2} Z^{z1^z2}`.
#[inline]
fn raw_product(a: (u64, u64), b: (u64, u64)) -> ((u64, u64), bool) {
    let negative = (a.1 & b.0).count_ones() % 2 == 1;
    ((a.0 ^ b.0, a.1 ^ b.1), negative)
}

/// Ladder operator on qubit `k` as two raw terms.
/// Creation: `Z_<k X_k (I + Z_k) / 2`; annihilation: `Z_<k X_k (I - Z_k) / 2`.
fn ladder<T: Real>(k: usize, create: bool) -> [((u64, u64), Complex<T>); 2] {
    let below = (1u64 << k) - 1;
    let half = Complex::new(T::of(0.5), T::zero());
    // Z_<k and X_k act on distinct qubits, so X^x Z^z ordering is harmless
    let base = (1u64 << k, below);
    let with_z = (1u64 << k, below | 1u64 << k);
    let s = if create { half } else { -half };
    [(base, half), (with_z, s)]
}

/// Expand `coefficient * op_1 ... op_n` into raw `X^x Z^z` terms.
fn expand_raw<T: Real>(coefficient: T, ops: &[(usize, bool)]) -> Vec<((u64, u64), Complex<T>)> {
    let mut acc = vec![((0u64, 0u64), Complex::new(coefficient, T::zero()))];
    for &(k, create) in ops {
        let factors = ladder::<T>(k, create);
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (a, ca) in &acc {
            for (b, cb) in &factors {
                let (p, neg) = raw_product(*a, *b);
                let c = *ca * *cb;
                next.push((p, if neg { -c } else { c }));
            }
        }
        acc = next;
    }
    acc
}

/// Pauli expansion of `coefficient * op_1 op_2 ... op_n` where each op is
/// `(qubit, is_creation)`.
pub fn fermion_product_to_pauli<T: Real>(
    n_qubits: usize,
    coefficient: T,
    ops: &[(usize, bool)],
) -> Result<Vec<PauliTerm<T>>> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::Capability(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
    }
    if let Some(&(k, _)) = ops.iter().find(|(k, _)| *k >= n_qubits) {
        return Err(Error::IndexOutOfRange { index: k, limit: n_qubits });
    }
    let acc = expand_raw(coefficient, ops);
    Ok(raw_to_hermitian(acc.into_iter()))
}

/// Convert raw `X^x Z^z` terms to Hermitian Pauli strings, keeping real parts.
/// `X^x Z^z = (-i)^{|x & z|} P(x, z)`.
fn raw_to_hermitian<T: Real>(
    raw: impl Iterator<Item = ((u64, u64), Complex<T>)>,
) -> Vec<PauliTerm<T>> {
    let mut merged: RawOperator<T> = BTreeMap::new();
    for (key, c) in raw {
        let y = (key.0 & key.1).count_ones();
        let c = c * i_power::<T>((4 - y % 4) % 4);
        *merged.entry(key).or_insert(Complex::new(T::zero(), T::zero())) += c;
    }
    merged
        .into_iter()
        .map(|((x, z), c)| PauliTerm { coefficient: c.re, string: PauliString { x, z } })
        .collect()
}

/// Jordan-Wigner transform of
/// `H = E_core + sum h_pq a†_p a_q + 1/2 sum (pq|rs) a†_p a†_r a_s a_q`
/// with spin summed in blocked qubit order.
pub fn jordan_wigner<T: Real>(store: &IntegralStore<T>) -> Result<PauliSum<T>> {
    let m = store.norb();
    if 2 * m > MAX_QUBITS {
        return Err(Error::Capability(format!(
            "{m} spatial orbitals need {} qubits, limit {MAX_QUBITS}",
            2 * m
        )));
    }
    let nq = 2 * m;
    let mut raw: Vec<((u64, u64), Complex<T>)> = Vec::new();
    raw.push(((0, 0), Complex::new(store.core_energy(), T::zero())));

    let mut push_product =
        |coefficient: T, ops: &[(usize, bool)]| raw.extend(expand_raw(coefficient, ops));

    let zero = T::zero();
    for spin in 0..2 {
        for p in 0..m {
            for q in 0..m {
                let h = store.h(p, q);
                if h != zero {
                    push_product(h, &[(p + spin * m, true), (q + spin * m, false)]);
                }
            }
        }
    }
    let half = T::of(0.5);
    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                for s in 0..m {
                    let v = store.eri(p, q, r, s);
                    if v == zero {
                        continue;
                    }
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            let (ps, qs) = (p + sigma * m, q + sigma * m);
                            let (rt, st) = (r + tau * m, s + tau * m);
                            if ps == rt || qs == st {
                                continue; // a†a† or aa on the same mode vanishes
                            }
                            push_product(half * v, &[(ps, true), (rt, true), (st, false), (qs, false)]);
                        }
                    }
                }
            }
        }
    }

    let terms = raw_to_hermitian(raw.into_iter());
    PauliSum::from_terms(nq, terms)
}

/// Computational-basis indices of every determinant in a list, as `u64`.
pub fn basis_states(dets: &[Determinant]) -> Result<Vec<u64>> {
    dets.iter()
        .map(|d| {
            let idx = d.basis_index();
            u64::try_from(idx).map_err(|_| Error::Capability("more than 64 qubits".into()))
        })
        .collect()
}
