//! Binary checkpoints of the sampler state.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes  "QSCICKPT"
//! version   u32
//! length    u64      byte count of the body
//! body      ...
//! checksum  u64      FNV-1a of the body
//! ```
//!
//! The body holds the orbital count, master seed, reference, counter, delta,
//! energy, then length-prefixed lists of determinants, vector entries, trace
//! records and PT2 snapshots. The sampler draws from streams derived from
//! `(seed, counter, round, parent)`, so the counter is the stream position.

use std::path::Path;

use qsci_core::sampler::{Stage, TraceRecord};
use qsci_core::{Determinant, IntegralStore, SubspaceState};

use crate::{io_error, HarnessError, Result};

pub const MAGIC: &[u8; 8] = b"QSCICKPT";
pub const VERSION: u32 = 1;

/// PT2 evaluated on the subspace at the end of an outer iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pt2Snapshot {
    pub outer: usize,
    /// Row of trace.csv holding `energy`.
    pub trace_row: usize,
    pub dim: usize,
    pub energy: f64,
    pub correction: f64,
    pub n_external: usize,
    pub intruders: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub norb: usize,
    pub seed: u64,
    pub reference: Determinant,
    pub counter: usize,
    pub delta: f64,
    pub energy: f64,
    pub dets: Vec<Determinant>,
    pub vector: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub snapshots: Vec<Pt2Snapshot>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64)
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits())
    }
    fn det(&mut self, d: &Determinant) {
        self.u64(d.alpha());
        self.u64(d.beta());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(HarnessError::Checkpoint("truncated body".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| HarnessError::Checkpoint("length overflow".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    /// A list length, checked against the bytes left.
    fn len(&mut self, item_bytes: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(item_bytes) > self.bytes.len() - self.pos {
            return Err(HarnessError::Checkpoint(format!("list of {n} items exceeds the body")));
        }
        Ok(n)
    }
    fn det(&mut self, norb: usize) -> Result<Determinant> {
        let (a, b) = (self.u64()?, self.u64()?);
        Determinant::new(norb, a, b).map_err(|e| HarnessError::Checkpoint(e.to_string()))
    }
}

fn stage_code(s: Stage) -> u64 {
    match s {
        Stage::Initial => 0,
        Stage::Harvest => 1,
        Stage::Expand => 2,
        Stage::Filter => 3,
    }
}

fn stage_from(code: u64) -> Result<Stage> {
    Ok(match code {
        0 => Stage::Initial,
        1 => Stage::Harvest,
        2 => Stage::Expand,
        3 => Stage::Filter,
        c => return Err(HarnessError::Checkpoint(format!("unknown stage code {c}"))),
    })
}

impl Checkpoint {
    pub fn from_state(state: &SubspaceState, seed: u64, snapshots: &[Pt2Snapshot]) -> Self {
        Self {
            norb: state.reference().norb(),
            seed,
            reference: *state.reference(),
            counter: state.counter,
            delta: state.delta,
            energy: state.energy,
            dets: state.dets.clone(),
            vector: state.vector.clone(),
            trace: state.trace.clone(),
            snapshots: snapshots.to_vec(),
        }
    }

    /// Rebuild the sampler state; the matrix is recomputed from `store`.
    pub fn into_state(self, store: &IntegralStore) -> Result<(SubspaceState, Vec<Pt2Snapshot>)> {
        if self.norb != store.norb() {
            return Err(HarnessError::Checkpoint(format!(
                "checkpoint has {} orbitals, integrals have {}",
                self.norb,
                store.norb()
            )));
        }
        let state = SubspaceState::restore(
            self.reference,
            self.dets,
            self.vector,
            self.energy,
            self.counter,
            self.delta,
            self.trace,
            store,
        )?;
        Ok((state, self.snapshots))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.usize(self.norb);
        w.u64(self.seed);
        w.det(&self.reference);
        w.usize(self.counter);
        w.f64(self.delta);
        w.f64(self.energy);
        w.usize(self.dets.len());
        self.dets.iter().for_each(|d| w.det(d));
        w.usize(self.vector.len());
        self.vector.iter().for_each(|&v| w.f64(v));
        w.usize(self.trace.len());
        for r in &self.trace {
            w.usize(r.outer);
            w.usize(r.step);
            w.usize(r.round);
            w.u64(stage_code(r.stage));
            w.usize(r.dim);
            w.f64(r.energy);
            w.f64(r.delta);
        }
        w.usize(self.snapshots.len());
        for s in &self.snapshots {
            w.usize(s.outer);
            w.usize(s.trace_row);
            w.usize(s.dim);
            w.f64(s.energy);
            w.f64(s.correction);
            w.usize(s.n_external);
            w.usize(s.intruders);
        }
        let body = w.0;
        let mut out = Vec::with_capacity(body.len() + 28);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(&body);
        out.extend_from_slice(&fnv1a(&body).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| HarnessError::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(HarnessError::Checkpoint(format!(
                "unsupported checkpoint version {version} (this build reads {VERSION})"
            )));
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let len = usize::try_from(len).map_err(|_| bad("body length overflow"))?;
        if bytes.len() != 20usize.saturating_add(len).saturating_add(8) {
            return Err(bad("file size does not match the recorded body length"));
        }
        let body = &bytes[20..20 + len];
        let sum = u64::from_le_bytes(bytes[20 + len..].try_into().unwrap());
        if sum != fnv1a(body) {
            return Err(bad("checksum mismatch"));
        }
        let mut r = Reader { bytes: body, pos: 0 };
        let norb = r.usize()?;
        let seed = r.u64()?;
        let reference = r.det(norb)?;
        let counter = r.usize()?;
        let delta = r.f64()?;
        let energy = r.f64()?;
        let n = r.len(16)?;
        let dets = (0..n).map(|_| r.det(norb)).collect::<Result<Vec<_>>>()?;
        let n = r.len(8)?;
        let vector = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let n = r.len(56)?;
        let mut trace = Vec::with_capacity(n);
        for _ in 0..n {
            trace.push(TraceRecord {
                outer: r.usize()?,
                step: r.usize()?,
                round: r.usize()?,
                stage: stage_from(r.u64()?)?,
                dim: r.usize()?,
                energy: r.f64()?,
                delta: r.f64()?,
            });
        }
        let n = r.len(56)?;
        let mut snapshots = Vec::with_capacity(n);
        for _ in 0..n {
            snapshots.push(Pt2Snapshot {
                outer: r.usize()?,
                trace_row: r.usize()?,
                dim: r.usize()?,
                energy: r.f64()?,
                correction: r.f64()?,
                n_external: r.usize()?,
                intruders: r.usize()?,
            });
        }
        if r.pos != body.len() {
            return Err(bad("trailing bytes in body"));
        }
        Ok(Self { norb, seed, reference, counter, delta, energy, dets, vector, trace, snapshots })
    }

    /// Write through a temporary file so a crash never leaves a torn checkpoint.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(io_error(&tmp))?;
        std::fs::rename(&tmp, path).map_err(io_error(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(io_error(path))?;
        Self::from_bytes(&bytes)
    }
}
