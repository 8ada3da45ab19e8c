//! qDRIFT time evolution on a dense statevector, and measurement sampling.
//!
//! This is the stand-in for the quantum device: each instance draws a fresh
//! random product of Pauli rotations, runs it from the reference
//! determinant, and samples computational-basis shots. An optional
//! depolarizing model replaces each shot by a uniformly random bitstring
//! with probability `p`.

use num_complex::Complex;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;

use crate::determinants::{Determinant, Sector};
use crate::error::{Error, Result};
use crate::qubit_hamiltonian::{i_power, l1_norm, PauliString, PauliSum};
use crate::rng::{self, StreamRng};
use crate::scalar::Real;

/// Largest register the dense simulator accepts.
pub const MAX_SIM_QUBITS: usize = 24;

/// Largest register a measurement set can describe (`u128` shots).
pub const MAX_MEASURED_QUBITS: usize = 128;

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector<T> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> Statevector<T> {
    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: u64) -> Result<Self> {
        if n_qubits > MAX_SIM_QUBITS {
            return Err(Error::Capability(format!(
                "{n_qubits} qubits exceeds the {MAX_SIM_QUBITS}-qubit simulator"
            )));
        }
        if index >> n_qubits != 0 {
            return Err(Error::Dimension(format!("basis index {index} outside {n_qubits} qubits")));
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1usize << n_qubits];
        amplitudes[index as usize] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if n_qubits > MAX_SIM_QUBITS || amplitudes.len() != 1usize << n_qubits {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {n_qubits} qubits",
                amplitudes.len()
            )));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr().as_f64()).collect()
    }

    /// In-place `exp(-i theta P) = cos(theta) I - i sin(theta) P`.
    pub fn apply_pauli_rotation(&mut self, p: PauliString, theta: T) {
        if theta == T::zero() || p.is_identity() {
            // identity strings only contribute a global phase
            return;
        }
        let (s, c) = theta.sin_cos();
        let minus_i_sin = Complex::new(T::zero(), -s);
        let y = p.y_count();
        let phase = |b: u64| -> Complex<T> {
            i_power::<T>(y + (((p.z & b).count_ones() & 1) * 2))
        };
        if p.x == 0 {
            for (b, a) in self.amplitudes.iter_mut().enumerate() {
                *a = *a * (Complex::new(c, T::zero()) + minus_i_sin * phase(b as u64));
            }
            return;
        }
        let low = p.x & p.x.wrapping_neg();
        let dim = self.amplitudes.len() as u64;
        for b in 0..dim {
            if b & low != 0 {
                continue;
            }
            let b2 = b ^ p.x;
            let (u, v) = (self.amplitudes[b as usize], self.amplitudes[b2 as usize]);
            // P|b> = phase(b)|b2>, P|b2> = phase(b2)|b>
            self.amplitudes[b2 as usize] = v * c + minus_i_sin * phase(b) * u;
            self.amplitudes[b as usize] = u * c + minus_i_sin * phase(b2) * v;
        }
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, h: &PauliSum<T>) -> T {
        let mut total = T::zero();
        for t in h.terms() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (b, a) in self.amplitudes.iter().enumerate() {
                let (out, ph) = t.string.apply_to_basis(b as u64);
                acc += self.amplitudes[out as usize].conj() * i_power::<T>(ph) * *a;
            }
            total += t.coefficient * acc.re;
        }
        total
    }

    /// Total probability of basis states whose index satisfies `pred`.
    pub fn probability_where(&self, pred: impl Fn(u64) -> bool) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(b, _)| pred(*b as u64))
            .map(|(_, a)| a.norm_sqr().as_f64())
            .sum()
    }

    /// Expected occupation of each qubit.
    pub fn occupations(&self) -> Vec<f64> {
        let mut occ = vec![0.0; self.n_qubits];
        for (b, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr().as_f64();
            for (k, o) in occ.iter_mut().enumerate() {
                if b >> k & 1 == 1 {
                    *o += p;
                }
            }
        }
        occ
    }

    /// Draw `shots` basis states from `|psi|^2` by inverse-CDF lookup.
    pub fn sample<R: Rng>(&self, shots: usize, rng: &mut R) -> Vec<u64> {
        let mut cdf = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0f64;
        for a in &self.amplitudes {
            acc += a.norm_sqr().as_f64();
            cdf.push(acc);
        }
        (0..shots)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                let idx = cdf.partition_point(|&c| c <= u);
                idx.min(cdf.len() - 1) as u64
            })
            .collect()
    }
}

/// Reference state `|b(d)>`: a layer of X gates on the occupied qubits.
pub fn prepare_reference<T: Real>(d: &Determinant) -> Result<Statevector<T>> {
    let nq = 2 * d.norb();
    if nq > MAX_SIM_QUBITS {
        return Err(Error::Capability(format!(
            "{nq} qubits exceeds the {MAX_SIM_QUBITS}-qubit simulator"
        )));
    }
    Statevector::basis(nq, d.basis_index() as u64)
}

/// How many rotations a qDRIFT circuit uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QDriftDepth {
    /// Target channel precision `epsilon`; `N = ceil(2 lambda^2 t^2 / epsilon)`.
    Precision(f64),
    /// Explicit rotation count.
    Count(usize),
}

/// `N = ceil(2 lambda^2 t^2 / epsilon)`.
pub fn qdrift_rotation_count(lambda: f64, time: f64, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!("qDRIFT precision must be positive, got {epsilon}")));
    }
    let n = (2.0 * lambda * lambda * time * time / epsilon).ceil();
    if !n.is_finite() || n > usize::MAX as f64 {
        return Err(Error::Parameter(format!("qDRIFT rotation count {n} not representable")));
    }
    Ok(n as usize)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation<T> {
    /// Index of the sampled term in [`PauliSum::terms`].
    pub term: usize,
    pub string: PauliString,
    /// `lambda t sgn(h_j) / N`; the gate is `exp(-i angle sigma_j)`.
    pub angle: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QDriftCircuit<T> {
    pub rotations: Vec<Rotation<T>>,
    pub time: f64,
    pub seed: u64,
}

impl<T: Real> QDriftCircuit<T> {
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn run(&self, state: &mut Statevector<T>) {
        for r in &self.rotations {
            state.apply_pauli_rotation(r.string, r.angle);
        }
    }
}

/// Draw a qDRIFT circuit for `exp(-i H t)`: `N` terms i.i.d. with
/// `p_j = |h_j| / lambda`, each applied as `exp(-i lambda t sgn(h_j) sigma_j / N)`.
/// The identity term is never sampled.
pub fn sample_qdrift<T: Real>(
    h: &PauliSum<T>,
    time: f64,
    depth: QDriftDepth,
    seed: u64,
) -> Result<QDriftCircuit<T>> {
    let lambda = l1_norm(h).as_f64();
    let empty = QDriftCircuit { rotations: Vec::new(), time, seed };
    let n = match depth {
        QDriftDepth::Precision(eps) => qdrift_rotation_count(lambda, time, eps)?,
        QDriftDepth::Count(0) => {
            return Err(Error::Parameter("qDRIFT rotation count must be at least 1".into()))
        }
        QDriftDepth::Count(n) => n,
    };
    if lambda == 0.0 || n == 0 {
        return Ok(empty);
    }
    let candidates: Vec<(usize, &_)> = h
        .terms()
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.string.is_identity())
        .collect();
    let weights: Vec<f64> = candidates.iter().map(|(_, t)| t.coefficient.abs().as_f64()).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Parameter(format!("qDRIFT weights: {e}")))?;
    let mut rng = <StreamRng as rand::SeedableRng>::seed_from_u64(seed);
    let step = T::of(lambda * time / n as f64);
    let rotations = (0..n)
        .map(|_| {
            let (term, t) = candidates[dist.sample(&mut rng)];
            let angle = if t.coefficient < T::zero() { -step } else { step };
            Rotation { term, string: t.string, angle }
        })
        .collect();
    Ok(QDriftCircuit { rotations, time, seed })
}

/// Shots collected at one evolution time. Bit `k` of a shot is qubit `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub time: f64,
    n_qubits: usize,
    shots: Vec<u128>,
}

impl MeasurementSet {
    pub fn new(time: f64, n_qubits: usize, shots: Vec<u128>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_MEASURED_QUBITS {
            return Err(Error::Dimension(format!("unsupported qubit count {n_qubits}")));
        }
        if shots.is_empty() {
            return Err(Error::Input("measurement set has no shots".into()));
        }
        if n_qubits < 128 && shots.iter().any(|s| s >> n_qubits != 0) {
            return Err(Error::Dimension(format!("shot outside {n_qubits} qubits")));
        }
        Ok(Self { time, n_qubits, shots })
    }

    pub fn from_bitstrings<S: AsRef<str>>(time: f64, n_qubits: usize, lines: &[S]) -> Result<Self> {
        let shots = lines
            .iter()
            .map(|l| parse_shot(l.as_ref(), n_qubits))
            .collect::<Result<Vec<_>>>()?;
        Self::new(time, n_qubits, shots)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> &[u128] {
        &self.shots
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    pub fn bitstring(&self, i: usize) -> String {
        shot_to_bitstring(self.shots[i], self.n_qubits)
    }

    /// Concatenate sets (all must share the qubit count); time of the first.
    pub fn pooled(sets: &[MeasurementSet]) -> Result<Self> {
        let first = sets.first().ok_or_else(|| Error::Input("no measurement sets".into()))?;
        let mut shots = Vec::new();
        for s in sets {
            if s.n_qubits != first.n_qubits {
                return Err(Error::Dimension("measurement sets differ in width".into()));
            }
            shots.extend_from_slice(&s.shots);
        }
        Self::new(first.time, first.n_qubits, shots)
    }
}

pub fn shot_to_bitstring(shot: u128, n_qubits: usize) -> String {
    (0..n_qubits).map(|k| if shot >> k & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_shot(line: &str, n_qubits: usize) -> Result<u128> {
    if line.len() != n_qubits {
        return Err(Error::Format(format!(
            "bitstring has {} characters, expected {n_qubits}",
            line.len()
        )));
    }
    let mut v = 0u128;
    for (k, c) in line.bytes().enumerate() {
        match c {
            b'0' => {}
            b'1' => v |= 1u128 << k,
            _ => return Err(Error::Format(format!("invalid character {:?}", c as char))),
        }
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    /// Time step; set `k` is evolved to `k * tau`.
    pub tau: f64,
    pub steps: usize,
    /// Independent qDRIFT circuits per time step.
    pub instances: usize,
    pub shots_per_instance: usize,
    pub depth: QDriftDepth,
    /// Probability of replacing a shot with a uniformly random bitstring.
    pub depolarizing: f64,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.instances == 0 || self.shots_per_instance == 0 {
            return Err(Error::Parameter(
                "steps, instances and shots must all be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.depolarizing) {
            return Err(Error::Parameter(format!(
                "depolarizing probability {} outside [0, 1]",
                self.depolarizing
            )));
        }
        if !self.tau.is_finite() {
            return Err(Error::Parameter("time step must be finite".into()));
        }
        Ok(())
    }
}

/// Seeds for one (step, instance) task.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceSeeds {
    pub circuit: u64,
    pub shots: u64,
    pub noise: u64,
}

impl InstanceSeeds {
    /// Steps are numbered from 1.
    pub fn derive(master: u64, step: usize, instance: usize) -> Self {
        let path = |purpose| [rng::STREAM_EVOLUTION, step as u64, instance as u64, purpose];
        Self {
            circuit: rng::derive_seed(master, &path(rng::PURPOSE_CIRCUIT)),
            shots: rng::derive_seed(master, &path(rng::PURPOSE_SHOTS)),
            noise: rng::derive_seed(master, &path(rng::PURPOSE_NOISE)),
        }
    }
}

/// Final state of one qDRIFT instance started from `reference`.
pub fn run_instance<T: Real>(
    h: &PauliSum<T>,
    reference: &Determinant,
    time: f64,
    depth: QDriftDepth,
    circuit_seed: u64,
) -> Result<Statevector<T>> {
    if h.n_qubits() != 2 * reference.norb() {
        return Err(Error::Dimension(format!(
            "Hamiltonian on {} qubits, reference over {} orbitals",
            h.n_qubits(),
            reference.norb()
        )));
    }
    let mut state = prepare_reference(reference)?;
    sample_qdrift(h, time, depth, circuit_seed)?.run(&mut state);
    Ok(state)
}

fn depolarize(shots: &mut [u64], p: f64, n_qubits: usize, seed: u64) {
    if p <= 0.0 {
        return;
    }
    let mut rng = <StreamRng as rand::SeedableRng>::seed_from_u64(seed);
    let mask = if n_qubits >= 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
    for s in shots.iter_mut() {
        let u: f64 = rng.gen();
        if u < p {
            *s = rng.gen::<u64>() & mask;
        }
    }
}

/// Simulate the full measurement campaign: for each step `k = 1..=steps`,
/// `instances` fresh qDRIFT circuits for time `k * tau`, each measured
/// `shots_per_instance` times, pooled in instance order.
pub fn evolve_and_measure<T: Real>(
    h: &PauliSum<T>,
    reference: &Determinant,
    config: &EvolutionConfig,
    master_seed: u64,
) -> Result<Vec<MeasurementSet>> {
    config.validate()?;
    let nq = h.n_qubits();
    if nq > MAX_SIM_QUBITS {
        return Err(Error::Capability(format!(
            "{nq} qubits exceeds the {MAX_SIM_QUBITS}-qubit simulator"
        )));
    }
    (1..=config.steps)
        .map(|step| {
            let time = step as f64 * config.tau;
            let per_instance: Vec<Vec<u64>> = (0..config.instances)
                .into_par_iter()
                .map(|instance| -> Result<Vec<u64>> {
                    let seeds = InstanceSeeds::derive(master_seed, step, instance);
                    let state = run_instance(h, reference, time, config.depth, seeds.circuit)?;
                    let mut shot_rng =
                        <StreamRng as rand::SeedableRng>::seed_from_u64(seeds.shots);
                    let mut shots = state.sample(config.shots_per_instance, &mut shot_rng);
                    depolarize(&mut shots, config.depolarizing, nq, seeds.noise);
                    Ok(shots)
                })
                .collect::<Result<_>>()?;
            let shots = per_instance.into_iter().flatten().map(u128::from).collect();
            MeasurementSet::new(time, nq, shots)
        })
        .collect()
}

/// Whether a measured shot decodes to a determinant in `sector`.
pub fn shot_in_sector(shot: u128, norb: usize, sector: Sector) -> bool {
    let m = if norb >= 64 { u64::MAX as u128 } else { (1u128 << norb) - 1 };
    let alpha = (shot & m).count_ones() as usize;
    let beta = ((shot >> norb) & m).count_ones() as usize;
    alpha == sector.n_alpha && beta == sector.n_beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit_hamiltonian::PauliTerm;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn random_state(n: usize, seed: u64) -> Statevector<f64> {
        let mut rng = StreamRng::seed_from_u64(seed);
        let mut amps: Vec<Complex<f64>> = (0..1 << n)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Statevector::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn zero_angle_is_identity() {
        let psi = random_state(4, 1);
        let mut phi = psi.clone();
        phi.apply_pauli_rotation(PauliString::parse("XYZI").unwrap(), 0.0);
        assert_eq!(phi, psi);
    }

    #[test]
    fn diagonal_rotation_on_eigenstate_keeps_probabilities() {
        let mut psi = Statevector::<f64>::basis(3, 0b001).unwrap();
        psi.apply_pauli_rotation(PauliString::parse("ZII").unwrap(), 0.7);
        assert_eq!(psi.probabilities()[1], 1.0);
    }

    #[test]
    fn rotation_inverse_and_norm() {
        let psi = random_state(5, 2);
        let mut phi = psi.clone();
        let p = PauliString::parse("XZYIY").unwrap();
        phi.apply_pauli_rotation(p, 0.37);
        assert_abs_diff_eq!(phi.norm(), 1.0, epsilon = 1e-12);
        phi.apply_pauli_rotation(p, -0.37);
        for (a, b) in phi.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn reference_state_and_noise_free_shots() {
        let d = Determinant::from_occupations(2, &[0], &[1]).unwrap();
        let psi = prepare_reference::<f64>(&d).unwrap();
        assert_eq!(psi.occupations(), vec![1.0, 0.0, 0.0, 1.0]);
        let mut rng = StreamRng::seed_from_u64(0);
        let shots = psi.sample(100, &mut rng);
        assert!(shots.iter().all(|&s| s as u128 == d.basis_index()));
        let vacuum = Determinant::from_occupations(3, &[], &[]).unwrap();
        assert_eq!(prepare_reference::<f64>(&vacuum).unwrap().probabilities()[0], 1.0);
    }

    #[test]
    fn simulator_cap() {
        let d = Determinant::hartree_fock(13, Sector::new(1, 1)).unwrap();
        assert!(matches!(prepare_reference::<f64>(&d), Err(Error::Capability(_))));
    }

    #[test]
    fn rotation_count_formula() {
        assert_eq!(qdrift_rotation_count(2.0, 1.0, 0.08).unwrap(), 100);
        assert!(matches!(qdrift_rotation_count(2.0, 1.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(qdrift_rotation_count(2.0, 1.0, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn single_term_circuit_is_exact() {
        let p = PauliString::parse("XY").unwrap();
        let h = PauliSum::from_terms(2, [PauliTerm { coefficient: -0.8f64, string: p }]).unwrap();
        let circuit = sample_qdrift(&h, 1.5, QDriftDepth::Count(10), 4).unwrap();
        assert_eq!(circuit.len(), 10);
        assert!(circuit.rotations.iter().all(|r| r.string == p));
        let mut a = Statevector::<f64>::basis(2, 0).unwrap();
        circuit.run(&mut a);
        let mut b = Statevector::<f64>::basis(2, 0).unwrap();
        b.apply_pauli_rotation(p, -0.8 * 1.5);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_only_hamiltonian_gives_empty_circuit() {
        let h = PauliSum::from_terms(2, [PauliTerm { coefficient: 1.0f64, string: PauliString::IDENTITY }])
            .unwrap();
        assert!(sample_qdrift(&h, 1.0, QDriftDepth::Precision(0.1), 0).unwrap().is_empty());
        assert!(matches!(
            sample_qdrift(&h, 1.0, QDriftDepth::Count(0), 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn measurement_set_validation() {
        assert!(MeasurementSet::new(0.0, 4, vec![]).is_err());
        assert!(MeasurementSet::new(0.0, 4, vec![1 << 4]).is_err());
        let set = MeasurementSet::from_bitstrings(0.5, 4, &["1100", "0110", "1001"]).unwrap();
        assert_eq!(set.bitstring(0), "1100");
        assert_eq!(set.shots()[0], 0b0011);
        assert!(MeasurementSet::from_bitstrings(0.5, 4, &["110"]).is_err());
    }

    #[test]
    fn fully_depolarized_occupations_are_half() {
        let mut shots = vec![0u64; 100_000];
        depolarize(&mut shots, 1.0, 8, 11);
        for k in 0..8 {
            let f = shots.iter().filter(|&&s| s >> k & 1 == 1).count() as f64 / 1e5;
            let sigma = (0.25f64 / 1e5).sqrt();
            assert!((f - 0.5).abs() < 3.0 * sigma, "qubit {k}: {f}");
        }
    }
}
