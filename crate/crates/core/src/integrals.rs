//! FCIDUMP ingestion and restricted molecular integrals.
//!
//! Two-electron integrals are in chemists' notation `(pq|rs)` and stored once
//! per 8-fold permutation class. Indices are 0-based in memory and 1-based in
//! files.

use std::fmt::Write as _;

use crate::determinants::{Determinant, Sector, MAX_ORBITALS};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[inline]
fn pair_index(p: usize, q: usize) -> usize {
    let (a, b) = if p >= q { (p, q) } else { (q, p) };
    a * (a + 1) / 2 + b
}

/// Canonical slot of `(pq|rs)` in the packed two-electron array.
#[inline]
fn eri_index(p: usize, q: usize, r: usize, s: usize) -> usize {
    pair_index(pair_index(p, q), pair_index(r, s))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralStore<T> {
    norb: usize,
    nelec: usize,
    ms2: i64,
    core_energy: T,
    one_body: Vec<T>,
    two_body: Vec<T>,
    // (ii|jj) and (ij|ji), cached for diagonal matrix elements.
    coulomb: Vec<T>,
    exchange: Vec<T>,
}

impl<T: Real> IntegralStore<T> {
    /// All-zero store.
    pub fn new(norb: usize, nelec: usize, ms2: i64) -> Result<Self> {
        if norb == 0 || norb > MAX_ORBITALS {
            return Err(Error::Capability(format!(
                "NORB={norb} outside supported range 1..={MAX_ORBITALS}"
            )));
        }
        let npair = norb * (norb + 1) / 2;
        Ok(Self {
            norb,
            nelec,
            ms2,
            core_energy: T::zero(),
            one_body: vec![T::zero(); norb * norb],
            two_body: vec![T::zero(); npair * (npair + 1) / 2],
            coulomb: vec![T::zero(); norb * norb],
            exchange: vec![T::zero(); norb * norb],
        })
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn nelec(&self) -> usize {
        self.nelec
    }

    pub fn ms2(&self) -> i64 {
        self.ms2
    }

    pub fn core_energy(&self) -> T {
        self.core_energy
    }

    pub fn set_core_energy(&mut self, value: T) {
        self.core_energy = value;
    }

    /// `(N_alpha, N_beta)` implied by NELEC and MS2.
    pub fn sector(&self) -> Result<Sector> {
        let n = self.nelec as i64;
        if (n + self.ms2) % 2 != 0 || self.ms2.abs() > n {
            return Err(Error::Input(format!(
                "NELEC={} and MS2={} do not define a sector",
                self.nelec, self.ms2
            )));
        }
        let sector = Sector::new(((n + self.ms2) / 2) as usize, ((n - self.ms2) / 2) as usize);
        if sector.n_alpha > self.norb || sector.n_beta > self.norb {
            return Err(Error::Input(format!(
                "sector {sector} does not fit in {} orbitals",
                self.norb
            )));
        }
        Ok(sector)
    }

    pub fn hartree_fock(&self) -> Result<Determinant> {
        Determinant::hartree_fock(self.norb, self.sector()?)
    }

    fn check(&self, indices: &[usize]) -> Result<()> {
        match indices.iter().find(|&&i| i >= self.norb) {
            Some(&index) => Err(Error::IndexOutOfRange { index, limit: self.norb }),
            None => Ok(()),
        }
    }

    pub fn set_one_body(&mut self, p: usize, q: usize, value: T) -> Result<()> {
        self.check(&[p, q])?;
        self.one_body[p * self.norb + q] = value;
        self.one_body[q * self.norb + p] = value;
        Ok(())
    }

    pub fn set_two_body(&mut self, p: usize, q: usize, r: usize, s: usize, value: T) -> Result<()> {
        self.check(&[p, q, r, s])?;
        self.two_body[eri_index(p, q, r, s)] = value;
        let n = self.norb;
        // refresh the J/K caches touched by this class
        for (a, b) in [(p, r), (r, p), (p, q), (q, p)] {
            self.coulomb[a * n + b] = self.two_body[eri_index(a, a, b, b)];
            self.exchange[a * n + b] = self.two_body[eri_index(a, b, b, a)];
        }
        Ok(())
    }

    pub fn get_one_body(&self, p: usize, q: usize) -> Result<T> {
        self.check(&[p, q])?;
        Ok(self.h(p, q))
    }

    /// `(pq|rs)` resolved through 8-fold symmetry; unset entries are zero.
    pub fn get_two_body(&self, p: usize, q: usize, r: usize, s: usize) -> Result<T> {
        self.check(&[p, q, r, s])?;
        Ok(self.eri(p, q, r, s))
    }

    #[inline]
    pub(crate) fn h(&self, p: usize, q: usize) -> T {
        self.one_body[p * self.norb + q]
    }

    #[inline]
    pub(crate) fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> T {
        self.two_body[eri_index(p, q, r, s)]
    }

    /// `(ii|jj)`
    #[inline]
    pub(crate) fn coulomb(&self, i: usize, j: usize) -> T {
        self.coulomb[i * self.norb + j]
    }

    /// `(ij|ji)`
    #[inline]
    pub(crate) fn exchange(&self, i: usize, j: usize) -> T {
        self.exchange[i * self.norb + j]
    }

    /// Serialize as FCIDUMP. Only nonzero integrals are written, one
    /// representative per symmetry class, in shortest round-trip form.
    pub fn to_fcidump(&self) -> String {
        let n = self.norb;
        let mut out = String::new();
        let orbsym = vec!["1"; n].join(",");
        let _ = writeln!(
            out,
            " &FCI NORB={n},NELEC={},MS2={},\n  ORBSYM={orbsym},\n  ISYM=1,\n &END",
            self.nelec, self.ms2
        );
        for p in 0..n {
            for q in 0..=p {
                for r in 0..n {
                    for s in 0..=r {
                        if pair_index(p, q) < pair_index(r, s) {
                            continue;
                        }
                        let v = self.eri(p, q, r, s);
                        if v != T::zero() {
                            let _ = writeln!(out, "{v:e} {} {} {} {}", p + 1, q + 1, r + 1, s + 1);
                        }
                    }
                }
            }
        }
        for p in 0..n {
            for q in 0..=p {
                let v = self.h(p, q);
                if v != T::zero() {
                    let _ = writeln!(out, "{v:e} {} {} 0 0", p + 1, q + 1);
                }
            }
        }
        let _ = writeln!(out, "{:e} 0 0 0 0", self.core_energy);
        out
    }
}

fn parse_value<T: Real>(token: &str, line: usize) -> Result<T> {
    let normalized = token.replace(['D', 'd'], "e");
    let v: f64 = normalized.parse().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric value {token:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite value {token:?}") });
    }
    T::from_f64(v).ok_or_else(|| Error::Parse {
        line,
        message: format!("value {token:?} not representable"),
    })
}

/// Parse FCIDUMP text.
///
/// The namelist header must provide NORB, NELEC and MS2 (ORBSYM, ISYM and
/// anything else is accepted and ignored). Body lines are `value p q r s`
/// with 1-based indices: all four nonzero is a two-electron integral,
/// `p q 0 0` a one-electron integral, `0 0 0 0` the core energy. Lines of
/// the form `e i 0 0 0` (orbital energies) are skipped. Later duplicates
/// overwrite earlier ones.
pub fn parse_fcidump<T: Real>(text: &str) -> Result<IntegralStore<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = String::new();
    let mut header_end = None;
    let mut started = false;
    for (no, line) in lines.by_ref() {
        let trimmed = line.trim();
        if !started {
            if trimmed.is_empty() {
                continue;
            }
            if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
                return Err(Error::Parse { line: no, message: "expected &FCI header".into() });
            }
            started = true;
        }
        let upper = trimmed.to_ascii_uppercase();
        let (content, done) = if let Some(pos) = upper.find("&END") {
            (&trimmed[..pos], true)
        } else if upper == "/" || upper.ends_with('/') {
            (trimmed.trim_end_matches('/'), true)
        } else {
            (trimmed, false)
        };
        header.push_str(content);
        header.push(',');
        if done {
            header_end = Some(no);
            break;
        }
    }
    let header_line = header_end.ok_or(Error::Parse {
        line: text.lines().count().max(1),
        message: "unterminated FCIDUMP header".into(),
    })?;

    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = None;
    let body = header.trim_start();
    let body = body.get(4..).unwrap_or(""); // drop "&FCI"
    // "NORB = 2" and "NORB=   2" both occur in the wild
    let body = body.split('=').map(str::trim).collect::<Vec<_>>().join("=");
    for token in body.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
        let Some((key, value)) = token.split_once('=') else { continue };
        let key = key.trim().to_ascii_uppercase();
        let value = value.trim();
        let parsed = || -> Result<i64> {
            value.parse().map_err(|_| Error::Parse {
                line: header_line,
                message: format!("bad header value {key}={value}"),
            })
        };
        match key.as_str() {
            "NORB" => norb = Some(parsed()?),
            "NELEC" => nelec = Some(parsed()?),
            "MS2" => ms2 = Some(parsed()?),
            _ => {}
        }
    }
    let missing = |k: &str| Error::Parse { line: header_line, message: format!("header lacks {k}") };
    let norb = norb.ok_or_else(|| missing("NORB"))?;
    let nelec = nelec.ok_or_else(|| missing("NELEC"))?;
    let ms2 = ms2.unwrap_or(0);
    if norb <= 0 || nelec < 0 {
        return Err(Error::Parse {
            line: header_line,
            message: format!("invalid NORB={norb} or NELEC={nelec}"),
        });
    }
    let mut store = IntegralStore::<T>::new(norb as usize, nelec as usize, ms2)
        .map_err(|e| Error::Parse { line: header_line, message: e.to_string() })?;

    for (no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: no,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let value: T = parse_value(fields[0], no)?;
        let mut idx = [0usize; 4];
        for (slot, f) in idx.iter_mut().zip(&fields[1..]) {
            let i: i64 = f.parse().map_err(|_| Error::Parse {
                line: no,
                message: format!("non-integer index {f:?}"),
            })?;
            if i < 0 || i > norb {
                return Err(Error::Parse {
                    line: no,
                    message: format!("index {i} out of range 0..={norb}"),
                });
            }
            *slot = i as usize;
        }
        let [p, q, r, s] = idx;
        let result = match (p, q, r, s) {
            (0, 0, 0, 0) => {
                store.core_energy = value;
                Ok(())
            }
            (p, q, 0, 0) if p > 0 && q > 0 => store.set_one_body(p - 1, q - 1, value),
            (p, 0, 0, 0) if p > 0 => Ok(()),
            (p, q, r, s) if p > 0 && q > 0 && r > 0 && s > 0 => {
                store.set_two_body(p - 1, q - 1, r - 1, s - 1, value)
            }
            _ => Err(Error::Input(format!("unrecognized index pattern {p} {q} {r} {s}"))),
        };
        result.map_err(|e| Error::Parse { line: no, message: e.to_string() })?;
    }
    Ok(store)
}
