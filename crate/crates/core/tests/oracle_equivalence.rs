mod common;

use common::*;
use num_complex::Complex64;
use qsci_core::determinants::sector_determinants;
use qsci_core::qubit_hamiltonian::{basis_states, jordan_wigner};
use qsci_core::slater_condon::{build_interaction_matrix, matrix_element};
use qsci_core::{IntegralStore, PauliSum, Sector};

fn sector_of(store: &IntegralStore) -> Sector {
    store.sector().unwrap()
}

/// Full 2^n matrix of a Pauli sum from explicit Kronecker products.
fn kron_dense(h: &PauliSum) -> Vec<Complex64> {
    let n = h.n_qubits();
    let dim = 1usize << n;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let single = |c: char| -> [[Complex64; 2]; 2] {
        match c {
            'I' => [[one, zero], [zero, one]],
            'X' => [[zero, one], [one, zero]],
            'Y' => [[zero, -i], [i, zero]],
            _ => [[one, zero], [zero, -one]],
        }
    };
    let mut total = vec![zero; dim * dim];
    for t in h.terms() {
        let word: Vec<char> = t.string.to_word(n).chars().collect();
        for row in 0..dim {
            for col in 0..dim {
                let mut v = Complex64::new(t.coefficient, 0.0);
                for (k, &c) in word.iter().enumerate() {
                    v *= single(c)[row >> k & 1][col >> k & 1];
                }
                total[row * dim + col] += v;
            }
        }
    }
    total
}

fn check_system(name: &str, fci: f64) {
    let store = load(name);
    let sector = sector_of(&store);
    let dets = sector_determinants(store.norb(), sector).unwrap();
    let sc = build_interaction_matrix(&dets, &store).unwrap().to_dense();
    let h = jordan_wigner(&store).unwrap();
    let jw = h.restricted_matrix(&basis_states(&dets).unwrap()).unwrap();
    let n = dets.len();
    let worst = sc.iter().zip(&jw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{name}: max entry difference {worst:e}");
    for i in 0..n.min(8) {
        for j in 0..n.min(8) {
            let direct = matrix_element(&dets[i], &dets[j], &store).unwrap();
            assert!((direct - jw[j * n + i]).abs() <= 1e-12);
        }
    }
    let e_sc = jacobi_eigenvalues(n, &sc)[0];
    let e_jw = jacobi_eigenvalues(n, &jw)[0];
    assert!((e_sc - e_jw).abs() <= 1e-10, "{name}: {e_sc} vs {e_jw}");
    assert!((e_sc - fci).abs() <= 1e-8, "{name}: {e_sc} vs reference {fci}");
}

#[test]
fn h2_slater_condon_equals_jordan_wigner() {
    check_system("h2_sto3g", H2_FCI);
}

#[test]
fn h4_slater_condon_equals_jordan_wigner() {
    check_system("h4_chain_sto3g", H4_FCI);
}

#[test]
fn lih_slater_condon_equals_jordan_wigner() {
    check_system("lih_sto3g", LIH_FCI);
}

#[test]
fn h2_restricted_matrix_matches_kronecker_construction() {
    let store = load("h2_sto3g");
    let h = jordan_wigner(&store).unwrap();
    let full = kron_dense(&h);
    let dim = 16;
    for r in 0..dim {
        for c in 0..dim {
            let v = full[r * dim + c];
            assert!((v - full[c * dim + r].conj()).norm() < 1e-14, "not Hermitian");
        }
    }
    let basis: Vec<u64> = (0..16).collect();
    let restricted = h.restricted_matrix(&basis).unwrap();
    for r in 0..dim {
        for c in 0..dim {
            assert!((restricted[c * dim + r] - full[r * dim + c].re).abs() < 1e-14);
        }
    }
}

#[test]
fn hf_energy_is_finite_for_every_corpus_file() {
    let dir = format!("{}/../../data/fcidump", env!("CARGO_MANIFEST_DIR"));
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "fcidump") {
            let name = path.file_stem().unwrap().to_str().unwrap().to_string();
            let store = load(&name);
            let hf = store.hartree_fock().unwrap();
            let e = matrix_element(&hf, &hf, &store).unwrap();
            assert!(e.is_finite(), "{name}");
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
