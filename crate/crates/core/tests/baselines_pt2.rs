mod common;

use common::*;
use proptest::prelude::*;
use qsci_core::baselines::{cipsi_run, dimension_at_accuracy, fci_solve, hci_run};
use qsci_core::determinants::{sector_determinants, Determinant};
use qsci_core::eigensolver::{davidson_lowest, DavidsonOptions};
use qsci_core::pt2::{epstein_nesbet_pt2, epstein_nesbet_pt2_detailed, extrapolate_pt2};
use qsci_core::slater_condon::{build_interaction_matrix, matrix_element};
use qsci_core::IntegralStore;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn opts() -> DavidsonOptions {
    DavidsonOptions::default()
}

fn ground(dets: &[Determinant], store: &IntegralStore) -> (f64, Vec<f64>) {
    let m = build_interaction_matrix(dets, store).unwrap();
    let r = davidson_lowest(&m, None, &opts()).unwrap();
    (r.energy, r.vector)
}

/// HF first, then the rest of the sector in a shuffled order.
fn shuffled_sector(store: &IntegralStore, seed: u64) -> Vec<Determinant> {
    let hf = store.hartree_fock().unwrap();
    let mut rest: Vec<_> = sector_determinants(store.norb(), hf.sector())
        .unwrap()
        .into_iter()
        .filter(|d| *d != hf)
        .collect();
    rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    std::iter::once(hf).chain(rest).collect()
}

/// Direct double sum over the whole sector, independent of the
/// external-coupling enumeration.
fn pt2_oracle(dets: &[Determinant], vector: &[f64], energy: f64, store: &IntegralStore) -> f64 {
    let all = sector_determinants(store.norb(), dets[0].sector()).unwrap();
    let mut total = 0.0;
    for l in all.iter().filter(|l| !dets.contains(l)) {
        let coupling: f64 = dets
            .iter()
            .zip(vector)
            .map(|(k, v)| matrix_element(l, k, store).unwrap() * v)
            .sum();
        let denom = matrix_element(l, l, store).unwrap() - energy;
        total -= coupling * coupling / denom;
    }
    total
}

#[test]
fn every_baseline_is_variational() {
    for (name, fci) in [("h2_sto3g", H2_FCI), ("h4_chain_sto3g", H4_FCI), ("lih_sto3g", LIH_FCI)] {
        let store = load(name);
        let sector = store.sector().unwrap();
        let exact = fci_solve(&store, sector, &opts()).unwrap();
        assert!((exact.energy - fci).abs() < 1e-8, "{name}");
        for delta in [1e-2, 1e-3, 1e-4] {
            let r = hci_run(&store, sector, delta, 1e-8, &opts()).unwrap();
            assert!(r.energy >= exact.energy - 1e-9, "{name} hci {delta}");
        }
        for n_select in [1, 4, 16] {
            let r = cipsi_run(&store, sector, n_select, 30, &opts()).unwrap();
            assert!(r.energy >= exact.energy - 1e-9, "{name} cipsi {n_select}");
            assert!(r.dets.len() <= 30);
        }
    }
}

#[test]
fn hci_tightens_monotonically_on_lih() {
    let store = load("lih_sto3g");
    let sector = store.sector().unwrap();
    let mut last = (0usize, f64::INFINITY);
    for delta in [1e-3, 1e-4, 1e-5] {
        let r = hci_run(&store, sector, delta, 1e-8, &opts()).unwrap();
        assert!(r.energy <= last.1 + 1e-10, "delta {delta}: {} > {}", r.energy, last.1);
        assert!(r.dets.len() >= last.0);
        for w in r.trace.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-10);
            assert!(w[1].0 >= w[0].0);
        }
        last = (r.dets.len(), r.energy);
    }
    assert!(last.1 - LIH_FCI < 1e-4);
}

#[test]
fn tight_selection_reaches_fci_on_h4() {
    let store = load("h4_chain_sto3g");
    let sector = store.sector().unwrap();
    let hci = hci_run(&store, sector, 1e-12, 1e-12, &opts()).unwrap();
    assert!((hci.energy - H4_FCI).abs() < 1e-8);
    let cipsi = cipsi_run(&store, sector, 4, 36, &opts()).unwrap();
    assert!((cipsi.energy - H4_FCI).abs() < 1e-8);
    let n = dimension_at_accuracy(&cipsi.trace, H4_FCI, 1e-3).unwrap();
    assert!(n <= 36);
}

#[test]
fn pt2_matches_direct_double_sum() {
    let store = load("lih_sto3g");
    let dets = &shuffled_sector(&store, 3)[..40];
    let (e, v) = ground(dets, &store);
    let r = epstein_nesbet_pt2_detailed(dets, &v, e, &store).unwrap();
    let oracle = pt2_oracle(dets, &v, e, &store);
    assert!((r.correction - oracle).abs() < 1e-11, "{} vs {oracle}", r.correction);
    assert!(r.correction < 0.0);
    assert_eq!(r.intruders, 0);
    let terms = r.contributions.unwrap();
    assert_eq!(terms.len(), r.n_external);
    assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
    let summed: f64 = terms.iter().map(|t| t.1).sum();
    assert!((summed - r.correction).abs() < 1e-12);
}

#[test]
fn pt2_vanishes_at_completeness() {
    let store = load("h4_chain_sto3g");
    let dets = shuffled_sector(&store, 1);
    let (e, v) = ground(&dets, &store);
    let r = epstein_nesbet_pt2(&dets, &v, e, &store).unwrap();
    assert_eq!(r.correction, 0.0);
    assert_eq!(r.n_external, 0);
}

#[test]
fn pt2_is_identical_across_worker_counts() {
    let store = load("lih_sto3g");
    let dets = &shuffled_sector(&store, 8)[..150];
    let (e, v) = ground(dets, &store);
    let run = |workers| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap()
            .install(|| epstein_nesbet_pt2_detailed(dets, &v, e, &store).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a.correction.to_bits(), run(3).correction.to_bits());
}

#[test]
fn synthetic_line_is_recovered() {
    let (a, b) = (-2.25, 0.87);
    let points: Vec<(f64, f64)> = (1..=6).map(|i| {
        let x = -0.003 * i as f64;
        (x, a + b * x)
    }).collect();
    let fit = extrapolate_pt2(&points).unwrap();
    assert!((fit.intercept - a).abs() < 1e-12);
    assert!((fit.slope - b).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    assert_eq!(fit.points, 6);
}

#[test]
fn point_at_zero_correction_anchors_the_intercept() {
    let points = [(0.0, -1.5), (-0.01, -1.49), (-0.02, -1.4795), (-0.04, -1.461)];
    let fit = extrapolate_pt2(&points).unwrap();
    let max_residual = points
        .iter()
        .map(|(x, y)| (y - (fit.intercept + fit.slope * x)).abs())
        .fold(0.0, f64::max);
    assert!((fit.intercept - points[0].1).abs() <= max_residual + 1e-15);
    assert!(max_residual < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn nested_subspaces_are_variationally_ordered(seed in any::<u64>(), small in 1usize..60, extra in 1usize..80) {
        let store = load("lih_sto3g");
        let order = shuffled_sector(&store, seed);
        let (e_small, _) = ground(&order[..small], &store);
        let (e_big, _) = ground(&order[..small + extra], &store);
        prop_assert!(e_big <= e_small + 1e-9);
        prop_assert!(e_big >= LIH_FCI - 1e-9);
    }

    #[test]
    fn pt2_of_hf_reference_is_nonpositive(seed in any::<u64>(), size in 1usize..20) {
        let store = load("h4_chain_stretched_sto3g");
        let dets = &shuffled_sector(&store, seed)[..size];
        let (e, v) = ground(dets, &store);
        let r = epstein_nesbet_pt2(dets, &v, e, &store).unwrap();
        prop_assert!(r.correction <= 0.0 || r.intruders > 0);
        prop_assert!((r.correction - pt2_oracle(dets, &v, e, &store)).abs() < 1e-10 || r.intruders > 0);
    }
}
