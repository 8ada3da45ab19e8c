#![allow(dead_code)]

use qsci_core::integrals::parse_fcidump;
use qsci_core::IntegralStore;

pub fn load(name: &str) -> IntegralStore {
    let path = format!("{}/../../data/fcidump/{name}.fcidump", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_fcidump(&text).unwrap()
}

/// Reference FCI energies computed by an external quantum-chemistry code
/// from the same integrals (see data/fcidump/PROVENANCE.md).
pub const H2_FCI: f64 = -1.1372701747;
pub const H4_FCI: f64 = -2.1803166143;
pub const H4_STRETCHED_FCI: f64 = -1.9244306381;
pub const LIH_FCI: f64 = -7.8824034103;

/// Eigenvalues of a dense symmetric matrix (column-major) by cyclic Jacobi
/// rotations, ascending. Deliberately independent of the library's solver.
pub fn jacobi_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let at = |i: usize, j: usize| j * n + i;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[at(i, j)] * m[at(i, j)])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[at(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[at(q, q)] - m[at(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[at(k, p)], m[at(k, q)]);
                    m[at(k, p)] = c * akp - s * akq;
                    m[at(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[at(p, k)], m[at(q, k)]);
                    m[at(p, k)] = c * apk - s * aqk;
                    m[at(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[at(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}
