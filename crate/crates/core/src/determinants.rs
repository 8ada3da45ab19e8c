//! Bitmask Slater determinants.
//!
//! A determinant is a pair of spatial-orbital occupation masks, one per spin.
//! Spin orbitals are numbered in blocked order: alpha orbitals `0..M` followed
//! by beta orbitals `M..2M`. The same numbering is used for qubits by the
//! Jordan-Wigner mapping and for characters of a measurement bitstring, so
//! character `k` of a bitstring is the occupation of spin orbital `k`.
//!
//! Fermionic signs follow the canonical ordering in which a determinant is
//! `a†_{i1} a†_{i2} ... |vac>` with `i1 < i2 < ...` in spin-orbital index.
//! Annihilating or creating spin orbital `k` then picks up `(-1)^n` where `n`
//! counts occupied spin orbitals below `k`. This matches the Z-strings of the
//! Jordan-Wigner transform, so Slater-Condon and qubit matrix elements agree
//! entrywise, signs included.

use std::fmt;

use crate::error::{Error, Result};

/// Largest number of spatial orbitals a determinant can hold.
pub const MAX_ORBITALS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Alpha,
    Beta,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Alpha, Spin::Beta];
}

/// Fixed electron counts per spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Sector {
    pub n_alpha: usize,
    pub n_beta: usize,
}

impl Sector {
    pub fn new(n_alpha: usize, n_beta: usize) -> Self {
        Self { n_alpha, n_beta }
    }

    pub fn count(&self, spin: Spin) -> usize {
        match spin {
            Spin::Alpha => self.n_alpha,
            Spin::Beta => self.n_beta,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n_alpha, self.n_beta)
    }
}

/// A spatial orbital with a spin label. Ordering is the blocked spin-orbital
/// order (all alpha before all beta).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinOrbital {
    pub spin: Spin,
    pub orbital: usize,
}

impl SpinOrbital {
    pub fn alpha(orbital: usize) -> Self {
        Self { spin: Spin::Alpha, orbital }
    }

    pub fn beta(orbital: usize) -> Self {
        Self { spin: Spin::Beta, orbital }
    }

    /// Index in blocked ordering for `norb` spatial orbitals.
    pub fn index(&self, norb: usize) -> usize {
        match self.spin {
            Spin::Alpha => self.orbital,
            Spin::Beta => norb + self.orbital,
        }
    }
}

/// Occupation-number vector over `norb` spatial orbitals and two spins.
///
/// Ordering (used for deterministic tie-breaking) compares the alpha mask,
/// then the beta mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Determinant {
    alpha: u64,
    beta: u64,
    norb: u8,
}

#[inline]
fn low_mask(norb: usize) -> u64 {
    if norb >= 64 {
        u64::MAX
    } else {
        (1u64 << norb) - 1
    }
}

impl Determinant {
    pub fn new(norb: usize, alpha: u64, beta: u64) -> Result<Self> {
        if norb > MAX_ORBITALS {
            return Err(Error::Capability(format!(
                "{norb} spatial orbitals exceeds the {MAX_ORBITALS}-orbital mask width"
            )));
        }
        let allowed = low_mask(norb);
        if alpha & !allowed != 0 || beta & !allowed != 0 {
            return Err(Error::Format(format!(
                "occupation mask has bits set above orbital {norb}"
            )));
        }
        Ok(Self { alpha, beta, norb: norb as u8 })
    }

    /// Caller guarantees `norb <= 64` and no stray high bits.
    #[inline]
    pub(crate) fn from_masks_unchecked(norb: usize, alpha: u64, beta: u64) -> Self {
        debug_assert!(norb <= MAX_ORBITALS);
        debug_assert_eq!(alpha & !low_mask(norb), 0);
        debug_assert_eq!(beta & !low_mask(norb), 0);
        Self { alpha, beta, norb: norb as u8 }
    }

    pub fn from_occupations(norb: usize, alpha: &[usize], beta: &[usize]) -> Result<Self> {
        let mut masks = [0u64; 2];
        for (mask, list) in masks.iter_mut().zip([alpha, beta]) {
            for &i in list {
                if i >= norb {
                    return Err(Error::IndexOutOfRange { index: i, limit: norb });
                }
                *mask |= 1u64 << i;
            }
        }
        Self::new(norb, masks[0], masks[1])
    }

    /// Aufbau determinant: lowest `n_alpha` / `n_beta` orbitals filled.
    pub fn hartree_fock(norb: usize, sector: Sector) -> Result<Self> {
        if sector.n_alpha > norb || sector.n_beta > norb {
            return Err(Error::Input(format!(
                "sector {sector} does not fit in {norb} orbitals"
            )));
        }
        Self::new(norb, low_mask(sector.n_alpha), low_mask(sector.n_beta))
    }

    /// Decode a measurement bitstring of exactly `2 * norb` characters:
    /// characters `0..norb` are alpha occupations, `norb..2norb` beta.
    pub fn from_bitstring(bits: &str, norb: usize) -> Result<Self> {
        let bytes = bits.as_bytes();
        if bytes.len() != 2 * norb {
            return Err(Error::Format(format!(
                "bitstring has {} characters, expected {}",
                bytes.len(),
                2 * norb
            )));
        }
        let mut masks = [0u64; 2];
        for (k, &c) in bytes.iter().enumerate() {
            match c {
                b'0' => {}
                b'1' => masks[k / norb] |= 1u64 << (k % norb),
                _ => {
                    return Err(Error::Format(format!(
                        "invalid character {:?} at position {k}",
                        c as char
                    )))
                }
            }
        }
        Self::new(norb, masks[0], masks[1])
    }

    pub fn to_bitstring(&self) -> String {
        let norb = self.norb();
        let mut s = String::with_capacity(2 * norb);
        for mask in [self.alpha, self.beta] {
            for i in 0..norb {
                s.push(if mask >> i & 1 == 1 { '1' } else { '0' });
            }
        }
        s
    }

    /// Computational-basis index: bit `k` is spin orbital `k` (blocked order).
    #[inline]
    pub fn basis_index(&self) -> u128 {
        self.alpha as u128 | (self.beta as u128) << self.norb
    }

    pub fn from_basis_index(norb: usize, index: u128) -> Result<Self> {
        if norb > MAX_ORBITALS {
            return Err(Error::Capability(format!("{norb} orbitals exceeds mask width")));
        }
        if 2 * norb < 128 && index >> (2 * norb) != 0 {
            return Err(Error::Format(format!(
                "basis index has bits set above qubit {}",
                2 * norb
            )));
        }
        let m = low_mask(norb) as u128;
        let alpha = (index & m) as u64;
        let beta = ((index >> norb) & m) as u64;
        Self::new(norb, alpha, beta)
    }

    #[inline]
    pub fn norb(&self) -> usize {
        self.norb as usize
    }

    #[inline]
    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> u64 {
        self.beta
    }

    #[inline]
    pub fn mask(&self, spin: Spin) -> u64 {
        match spin {
            Spin::Alpha => self.alpha,
            Spin::Beta => self.beta,
        }
    }

    pub fn sector(&self) -> Sector {
        Sector::new(self.alpha.count_ones() as usize, self.beta.count_ones() as usize)
    }

    #[inline]
    pub fn is_occupied(&self, spin: Spin, orbital: usize) -> bool {
        self.mask(spin) >> orbital & 1 == 1
    }

    pub fn occupied(&self, spin: Spin) -> impl Iterator<Item = usize> {
        BitIter(self.mask(spin))
    }

    pub fn virtuals(&self, spin: Spin) -> impl Iterator<Item = usize> {
        BitIter(!self.mask(spin) & low_mask(self.norb()))
    }

    pub fn occupied_list(&self, spin: Spin) -> Vec<usize> {
        self.occupied(spin).collect()
    }

    pub fn virtual_list(&self, spin: Spin) -> Vec<usize> {
        self.virtuals(spin).collect()
    }
}

impl fmt::Debug for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Det({})", self.to_bitstring())
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// Iterator over set-bit positions, lowest first.
#[derive(Clone, Copy)]
pub(crate) struct BitIter(pub(crate) u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

/// Sign and result of removing spin orbital `k` from a blocked 128-bit state.
#[inline]
fn annihilate(state: u128, k: usize) -> (u128, i8) {
    let below = state & ((1u128 << k) - 1);
    let sign = if below.count_ones() % 2 == 0 { 1 } else { -1 };
    (state & !(1u128 << k), sign)
}

#[inline]
fn create(state: u128, k: usize) -> (u128, i8) {
    let below = state & ((1u128 << k) - 1);
    let sign = if below.count_ones() % 2 == 0 { 1 } else { -1 };
    (state | 1u128 << k, sign)
}

/// Sign of `a†_{p_n} a_{h_n} ... a†_{p_0} a_{h_0} |d>` relative to the
/// canonical ordering of the result. Pairs are applied first to last.
#[inline]
pub(crate) fn excitation_phase(d: &Determinant, pairs: &[(SpinOrbital, SpinOrbital)]) -> i8 {
    let norb = d.norb();
    let mut state = d.basis_index();
    let mut phase = 1i8;
    for (hole, particle) in pairs {
        let (s, a) = annihilate(state, hole.index(norb));
        let (s, c) = create(s, particle.index(norb));
        state = s;
        phase *= a * c;
    }
    phase
}

/// Degree used when two determinants belong to different particle sectors.
pub const DIFFERENT_SECTOR: usize = usize::MAX;

/// Relationship between two determinants.
///
/// Holes are spin orbitals occupied in the first determinant only, particles
/// those occupied in the second only; both lists are sorted in blocked order
/// and paired by position. `phase` is the sign relating the second
/// determinant to the paired excitation applied to the first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExcitationInfo {
    /// 0, 1, 2, a larger count, or [`DIFFERENT_SECTOR`].
    pub degree: usize,
    pub holes: Vec<SpinOrbital>,
    pub particles: Vec<SpinOrbital>,
    pub phase: i8,
}

impl ExcitationInfo {
    pub fn identity() -> Self {
        Self { degree: 0, holes: Vec::new(), particles: Vec::new(), phase: 1 }
    }

    /// True when the Hamiltonian can couple the two determinants.
    pub fn is_connected(&self) -> bool {
        self.degree <= 2
    }
}

/// Excitation degree only, without building hole/particle lists.
#[inline]
pub fn excitation_degree(d1: &Determinant, d2: &Determinant) -> usize {
    let da = (d1.alpha ^ d2.alpha).count_ones();
    let db = (d1.beta ^ d2.beta).count_ones();
    if d1.alpha.count_ones() != d2.alpha.count_ones()
        || d1.beta.count_ones() != d2.beta.count_ones()
    {
        return DIFFERENT_SECTOR;
    }
    ((da + db) / 2) as usize
}

/// Classify the excitation that takes `d1` to `d2`.
pub fn excitation_between(d1: &Determinant, d2: &Determinant) -> ExcitationInfo {
    assert_eq!(d1.norb, d2.norb, "determinants over different orbital counts");
    let degree = excitation_degree(d1, d2);
    if degree == 0 {
        return ExcitationInfo::identity();
    }
    let mut holes = Vec::new();
    let mut particles = Vec::new();
    for spin in Spin::BOTH {
        let (m1, m2) = (d1.mask(spin), d2.mask(spin));
        holes.extend(BitIter(m1 & !m2).map(|orbital| SpinOrbital { spin, orbital }));
        particles.extend(BitIter(m2 & !m1).map(|orbital| SpinOrbital { spin, orbital }));
    }
    if degree == DIFFERENT_SECTOR {
        return ExcitationInfo { degree, holes, particles, phase: 1 };
    }
    let pairs: Vec<_> = holes.iter().copied().zip(particles.iter().copied()).collect();
    let phase = excitation_phase(d1, &pairs);
    ExcitationInfo { degree, holes, particles, phase }
}

/// Apply paired hole -> particle moves to `d`.
///
/// Each hole must be occupied and each particle empty in `d`, and the two
/// members of a pair must share a spin so the sector is preserved.
pub fn apply_excitation(
    d: &Determinant,
    holes: &[SpinOrbital],
    particles: &[SpinOrbital],
) -> Result<(Determinant, i8)> {
    if holes.len() != particles.len() {
        return Err(Error::InvalidExcitation(format!(
            "{} holes but {} particles",
            holes.len(),
            particles.len()
        )));
    }
    let norb = d.norb();
    let mut removed = [0u64; 2];
    let mut added = [0u64; 2];
    for (h, p) in holes.iter().zip(particles) {
        if h.spin != p.spin {
            return Err(Error::InvalidExcitation(format!(
                "hole {h:?} and particle {p:?} have different spins"
            )));
        }
        for so in [h, p] {
            if so.orbital >= norb {
                return Err(Error::IndexOutOfRange { index: so.orbital, limit: norb });
            }
        }
        let s = h.spin as usize;
        let hbit = 1u64 << h.orbital;
        let pbit = 1u64 << p.orbital;
        if !d.is_occupied(h.spin, h.orbital) || removed[s] & hbit != 0 {
            return Err(Error::InvalidExcitation(format!("hole {h:?} is not occupied")));
        }
        if d.is_occupied(p.spin, p.orbital) || added[s] & pbit != 0 {
            return Err(Error::InvalidExcitation(format!("particle {p:?} is already occupied")));
        }
        removed[s] |= hbit;
        added[s] |= pbit;
    }
    let pairs: Vec<_> = holes.iter().copied().zip(particles.iter().copied()).collect();
    let phase = excitation_phase(d, &pairs);
    let alpha = (d.alpha & !removed[0]) | added[0];
    let beta = (d.beta & !removed[1]) | added[1];
    Ok((Determinant::from_masks_unchecked(norb, alpha, beta), phase))
}

/// Call `f` once for every distinct single and double excitation of `d`.
///
/// Order: alpha singles, beta singles, alpha-alpha doubles, beta-beta
/// doubles, alpha-beta doubles; indices ascending within each class.
pub fn for_each_connected(d: &Determinant, mut f: impl FnMut(Determinant)) {
    let norb = d.norb();
    let full = low_mask(norb);
    let occ = [d.alpha, d.beta];
    let vir = [!d.alpha & full, !d.beta & full];
    let with = |spin: usize, mask: u64| {
        if spin == 0 {
            Determinant::from_masks_unchecked(norb, mask, d.beta)
        } else {
            Determinant::from_masks_unchecked(norb, d.alpha, mask)
        }
    };
    for s in 0..2 {
        for h in BitIter(occ[s]) {
            for p in BitIter(vir[s]) {
                f(with(s, occ[s] ^ (1 << h) ^ (1 << p)));
            }
        }
    }
    for s in 0..2 {
        for h1 in BitIter(occ[s]) {
            for h2 in BitIter(occ[s] & !((2u64 << h1).wrapping_sub(1))) {
                for p1 in BitIter(vir[s]) {
                    for p2 in BitIter(vir[s] & !((2u64 << p1).wrapping_sub(1))) {
                        f(with(s, occ[s] ^ (1 << h1) ^ (1 << h2) ^ (1 << p1) ^ (1 << p2)));
                    }
                }
            }
        }
    }
    for ha in BitIter(occ[0]) {
        for pa in BitIter(vir[0]) {
            let alpha = occ[0] ^ (1 << ha) ^ (1 << pa);
            for hb in BitIter(occ[1]) {
                for pb in BitIter(vir[1]) {
                    let beta = occ[1] ^ (1 << hb) ^ (1 << pb);
                    f(Determinant::from_masks_unchecked(norb, alpha, beta));
                }
            }
        }
    }
}

/// Every single and double excitation of `d` together with its excitation
/// record, each exactly once.
pub fn enumerate_connected(
    d: &Determinant,
) -> impl Iterator<Item = (Determinant, ExcitationInfo)> + '_ {
    let mut out = Vec::new();
    for_each_connected(d, |c| out.push(c));
    out.into_iter().map(move |c| {
        let info = excitation_between(d, &c);
        (c, info)
    })
}

/// Number of connected determinants [`for_each_connected`] will produce.
pub fn connected_count(d: &Determinant) -> usize {
    let norb = d.norb();
    let mut singles = [0usize; 2];
    let mut doubles = [0usize; 2];
    for (s, spin) in Spin::BOTH.into_iter().enumerate() {
        let o = d.mask(spin).count_ones() as usize;
        let v = norb - o;
        singles[s] = o * v;
        doubles[s] = o * o.saturating_sub(1) / 2 * (v * v.saturating_sub(1) / 2);
    }
    singles[0] + singles[1] + doubles[0] + doubles[1] + singles[0] * singles[1]
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `C(M, N_alpha) * C(M, N_beta)`.
pub fn sector_dimension(norb: usize, sector: Sector) -> u128 {
    binomial(norb, sector.n_alpha) * binomial(norb, sector.n_beta)
}

/// All `n`-bit subsets of `norb` bits in increasing numeric order.
pub(crate) fn combinations(norb: usize, n: usize) -> Vec<u64> {
    if n > norb {
        return Vec::new();
    }
    if n == 0 {
        return vec![0];
    }
    let limit = low_mask(norb);
    let mut out = Vec::with_capacity(binomial(norb, n) as usize);
    let mut v = low_mask(n);
    loop {
        out.push(v);
        // Gosper's hack
        let c = v & v.wrapping_neg();
        let r = v.wrapping_add(c);
        if r == 0 || r & !limit != 0 {
            break;
        }
        let next = (((r ^ v) >> 2) / c) | r;
        if next & !limit != 0 {
            break;
        }
        v = next;
    }
    out
}

/// Every determinant in a particle sector, sorted ascending.
pub fn sector_determinants(norb: usize, sector: Sector) -> Result<Vec<Determinant>> {
    if norb > MAX_ORBITALS {
        return Err(Error::Capability(format!("{norb} orbitals exceeds mask width")));
    }
    let alphas = combinations(norb, sector.n_alpha);
    let betas = combinations(norb, sector.n_beta);
    let mut out = Vec::with_capacity(alphas.len() * betas.len());
    for &a in &alphas {
        for &b in &betas {
            out.push(Determinant::from_masks_unchecked(norb, a, b));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    /// Sign of the permutation that sorts `list` (distinct entries).
    fn permutation_parity(list: &[usize]) -> i8 {
        let mut v = list.to_vec();
        let mut sign = 1;
        for i in 0..v.len() {
            for j in 0..v.len() - 1 - i {
                if v[j] > v[j + 1] {
                    v.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        sign
    }

    /// Independent phase: write d1's occupied spin orbitals in ascending
    /// order, overwrite each hole in place by its paired particle, and take
    /// the parity of sorting the result.
    fn oracle_phase(d1: &Determinant, d2: &Determinant) -> i8 {
        let norb = d1.norb();
        let occ = |d: &Determinant| -> Vec<usize> {
            (0..2 * norb).filter(|&k| d.basis_index() >> k & 1 == 1).collect()
        };
        let o1 = occ(d1);
        let o2 = occ(d2);
        let holes: Vec<usize> = o1.iter().copied().filter(|k| !o2.contains(k)).collect();
        let parts: Vec<usize> = o2.iter().copied().filter(|k| !o1.contains(k)).collect();
        let replaced: Vec<usize> = o1
            .iter()
            .map(|k| match holes.iter().position(|h| h == k) {
                Some(i) => parts[i],
                None => *k,
            })
            .collect();
        permutation_parity(&replaced)
    }

    #[test]
    fn decode_blocked_bitstring() {
        let d = Determinant::from_bitstring("1100", 2).unwrap();
        assert_eq!(d.alpha(), 0b11);
        assert_eq!(d.beta(), 0);
        let zeros = "0".repeat(42);
        let d = Determinant::from_bitstring(&zeros, 21).unwrap();
        assert_eq!(d.sector(), Sector::new(0, 0));
    }

    #[test]
    fn decode_hf_string_for_21_orbitals() {
        let block = format!("{}{}", "1".repeat(9), "0".repeat(12));
        let d = Determinant::from_bitstring(&format!("{block}{block}"), 21).unwrap();
        assert_eq!(d.sector(), Sector::new(9, 9));
        assert_eq!(d, Determinant::hartree_fock(21, Sector::new(9, 9)).unwrap());
    }

    #[test]
    fn wrong_length_and_bad_chars_rejected() {
        assert!(matches!(Determinant::from_bitstring("110", 2), Err(Error::Format(_))));
        assert!(matches!(Determinant::from_bitstring("11x0", 2), Err(Error::Format(_))));
    }

    #[test]
    fn identity_excitation() {
        let d = Determinant::from_occupations(4, &[0, 1], &[0]).unwrap();
        let e = excitation_between(&d, &d);
        assert_eq!(e, ExcitationInfo::identity());
    }

    #[test]
    fn single_without_intervening_electron() {
        let d1 = Determinant::from_occupations(4, &[0, 1], &[]).unwrap();
        let d2 = Determinant::from_occupations(4, &[0, 2], &[]).unwrap();
        let e = excitation_between(&d1, &d2);
        assert_eq!(e.degree, 1);
        assert_eq!(e.holes, vec![SpinOrbital::alpha(1)]);
        assert_eq!(e.particles, vec![SpinOrbital::alpha(2)]);
        assert_eq!(e.phase, 1);
        assert_eq!(e.phase, oracle_phase(&d1, &d2));
    }

    #[test]
    fn single_across_occupied_orbital_is_negative() {
        let d1 = Determinant::from_occupations(4, &[0, 1, 2], &[]).unwrap();
        let d2 = Determinant::from_occupations(4, &[0, 2, 3], &[]).unwrap();
        let e = excitation_between(&d1, &d2);
        assert_eq!((e.degree, e.phase), (1, -1));
        assert_eq!(oracle_phase(&d1, &d2), -1);
    }

    #[test]
    fn apply_single_homo_lumo() {
        let hf = Determinant::hartree_fock(4, Sector::new(2, 2)).unwrap();
        let (d, phase) =
            apply_excitation(&hf, &[SpinOrbital::alpha(1)], &[SpinOrbital::alpha(2)]).unwrap();
        assert_eq!(d, Determinant::from_occupations(4, &[0, 2], &[0, 1]).unwrap());
        assert_eq!(phase, 1);
        assert_eq!(d.sector(), hf.sector());
    }

    #[test]
    fn apply_rejects_empty_hole() {
        let hf = Determinant::hartree_fock(4, Sector::new(2, 2)).unwrap();
        let r = apply_excitation(&hf, &[SpinOrbital::alpha(3)], &[SpinOrbital::alpha(2)]);
        assert!(matches!(r, Err(Error::InvalidExcitation(_))));
        let r = apply_excitation(&hf, &[SpinOrbital::alpha(0)], &[SpinOrbital::alpha(1)]);
        assert!(matches!(r, Err(Error::InvalidExcitation(_))));
    }

    #[test]
    fn paired_opposite_spin_double() {
        let hf = Determinant::hartree_fock(4, Sector::new(2, 2)).unwrap();
        let (d, _) = apply_excitation(
            &hf,
            &[SpinOrbital::alpha(1), SpinOrbital::beta(1)],
            &[SpinOrbital::alpha(3), SpinOrbital::beta(3)],
        )
        .unwrap();
        assert_eq!(d, Determinant::from_occupations(4, &[0, 3], &[0, 3]).unwrap());
    }

    #[test]
    fn connected_two_orbital_sector() {
        let hf = Determinant::hartree_fock(2, Sector::new(1, 1)).unwrap();
        let got: HashSet<_> = enumerate_connected(&hf).map(|(d, _)| d).collect();
        let sector: HashSet<_> = sector_determinants(2, Sector::new(1, 1))
            .unwrap()
            .into_iter()
            .filter(|d| *d != hf)
            .collect();
        assert_eq!(got.len(), 3);
        assert_eq!(got, sector);
    }

    #[test]
    fn fully_occupied_has_no_excitations() {
        let d = Determinant::hartree_fock(3, Sector::new(3, 3)).unwrap();
        assert_eq!(enumerate_connected(&d).count(), 0);
        assert_eq!(connected_count(&d), 0);
    }

    #[test]
    fn connected_matches_sector_filter() {
        let hf = Determinant::hartree_fock(4, Sector::new(2, 2)).unwrap();
        let all = sector_determinants(4, Sector::new(2, 2)).unwrap();
        assert_eq!(all.len(), 36);
        let expected: HashSet<_> = all
            .into_iter()
            .filter(|d| (1..=2).contains(&excitation_degree(&hf, d)))
            .collect();
        let got: Vec<_> = enumerate_connected(&hf).map(|(d, _)| d).collect();
        let unique: HashSet<_> = got.iter().copied().collect();
        assert_eq!(got.len(), unique.len());
        assert_eq!(unique, expected);
        assert_eq!(connected_count(&hf), got.len());
    }

    #[test]
    fn sector_dimension_matches_large_case() {
        assert_eq!(binomial(21, 9), 293_930);
        assert_eq!(sector_dimension(21, Sector::new(9, 9)), 86_394_844_900);
        assert_eq!(sector_dimension(4, Sector::new(2, 2)), 36);
    }

    #[test]
    fn combinations_cover_full_width() {
        assert_eq!(combinations(64, 64), vec![u64::MAX]);
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![0]);
    }

    fn arb_pair() -> impl Strategy<Value = (Determinant, Determinant)> {
        (1usize..=6).prop_flat_map(|norb| {
            let m = (1u64 << norb) - 1;
            (Just(norb), 0..=m, 0..=m, 0..=m, 0..=m)
        })
        .prop_filter_map("same sector", |(norb, a1, b1, a2, b2)| {
            let d1 = Determinant::new(norb, a1, b1).ok()?;
            let d2 = Determinant::new(norb, a2, b2).ok()?;
            (d1.sector() == d2.sector()).then_some((d1, d2))
        })
    }

    proptest! {
        #[test]
        fn bitstring_round_trip(norb in 1usize..=64, a in any::<u64>(), b in any::<u64>()) {
            let m = low_mask(norb);
            let d = Determinant::new(norb, a & m, b & m).unwrap();
            prop_assert_eq!(Determinant::from_bitstring(&d.to_bitstring(), norb).unwrap(), d);
            prop_assert_eq!(Determinant::from_basis_index(norb, d.basis_index()).unwrap(), d);
        }

        #[test]
        fn phase_matches_permutation_oracle((d1, d2) in arb_pair()) {
            let e = excitation_between(&d1, &d2);
            prop_assert_eq!(e.phase, oracle_phase(&d1, &d2));
            let back = excitation_between(&d2, &d1);
            prop_assert_eq!(e.degree, back.degree);
            prop_assert_eq!(e.phase, back.phase);
            let (applied, phase) = apply_excitation(&d1, &e.holes, &e.particles).unwrap();
            prop_assert_eq!(applied, d2);
            prop_assert_eq!(phase, e.phase);
        }

        #[test]
        fn connected_excitations_reapply(norb in 2usize..=6, a in any::<u64>(), b in any::<u64>()) {
            let m = low_mask(norb);
            let d = Determinant::new(norb, a & m, b & m).unwrap();
            for (c, info) in enumerate_connected(&d) {
                prop_assert!(info.degree == 1 || info.degree == 2);
                let (applied, phase) = apply_excitation(&d, &info.holes, &info.particles).unwrap();
                prop_assert_eq!(applied, c);
                prop_assert_eq!(phase, info.phase);
            }
        }
    }
}
