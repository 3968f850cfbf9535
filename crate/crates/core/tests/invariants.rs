//! Cross-module invariants: symmetry, basis equivalences and the
//! variational bound, on small chains where everything is exact.

use cjt_core::config::{coulomb_chain, short_range_chain};
use cjt_core::ed::cartesian::{cartesian_dense, hermitian_spectrum};
use cjt_core::ed::hamiltonian::build_hamiltonian;
use cjt_core::*;
use proptest::prelude::*;

fn dense_spectrum(
    p: &ModelParams,
    c: &CouplingMatrix64,
    cutoff: usize,
    tr: Truncation,
) -> Vec<f64> {
    let h = build_hamiltonian(p, c, cutoff, tr, 1 << 20).unwrap();
    let mut e: Vec<f64> = h
        .to_dense()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn staggering_leaves_the_spectrum_unchanged() {
    // a_j -> (-1)^j a_j together with a pi spin rotation on odd sites
    for (p, cutoff) in [
        (short_range_chain(2).with_g(0.8), 3),
        (coulomb_chain(3).with_g(0.6), 1),
    ] {
        let c: CouplingMatrix64 = build_couplings(&ModelParams {
            staggered: false,
            ..p.clone()
        })
        .unwrap();
        let plain = dense_spectrum(&p, &c, cutoff, Truncation::PerSpecies);
        let stag = dense_spectrum(&p, &c.staggered(), cutoff, Truncation::PerSpecies);
        assert!(max_diff(&plain, &stag) < 1e-10);
    }
}

#[test]
fn staggered_ground_energy_by_lanczos() {
    let p = short_range_chain(3).with_g(1.2);
    let c: CouplingMatrix64 = build_couplings(&p).unwrap();
    let cfg = EdConfig::default().with_cutoff(4);
    let a = exact_ground_state(&p, &c, &cfg)
        .unwrap()
        .result
        .ground_energy;
    let b = exact_ground_state(&p, &c.staggered(), &cfg)
        .unwrap()
        .result
        .ground_energy;
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}

#[test]
fn chiral_and_cartesian_assemblies_agree() {
    for (n, cutoff) in [(1, 5), (2, 3), (3, 1)] {
        let p = short_range_chain(n).with_g(0.9);
        let c: CouplingMatrix64 = build_couplings(&p).unwrap();
        let chiral = dense_spectrum(&p, &c, cutoff, Truncation::Total);
        let cart =
            hermitian_spectrum(cartesian_dense(p.omega_z, p.g, &c, cutoff, 1 << 20).unwrap());
        assert!(max_diff(&chiral, &cart) < 1e-10, "N = {n}");
    }
}

#[test]
fn ground_state_sits_in_the_vacuum_charge_sector_at_small_g() {
    for n in 1..=3 {
        let p = short_range_chain(n).with_g(0.2);
        let c: CouplingMatrix64 = build_couplings(&p).unwrap();
        let r = exact_ground_state(&p, &c, &EdConfig::default().with_cutoff(3))
            .unwrap()
            .result;
        assert!(
            (r.charge + n as f64 / 2.0).abs() < 1e-10,
            "N = {n}: {}",
            r.charge
        );
    }
}

#[test]
fn single_site_matches_second_order_perturbation() {
    // only |down,0> -> |up,1_l> couples at first order: E = -1/2 - g^2 / (Delta + omega_z)
    let p = short_range_chain(1).with_g(0.1);
    let c: CouplingMatrix64 = build_couplings(&p).unwrap();
    let e = exact_ground_state(&p, &c, &EdConfig::default().with_cutoff(6))
        .unwrap()
        .result
        .ground_energy;
    let pt2 = -0.5 - 0.01 / 3.0;
    assert!((e - pt2).abs() < 1e-4, "{e} vs {pt2}");
}

#[test]
fn energy_decreases_with_the_cutoff() {
    let p = short_range_chain(2).with_g(1.0);
    let c: CouplingMatrix64 = build_couplings(&p).unwrap();
    let rep = convergence_scan(&p, &c, &EdConfig::default(), &[1, 2, 3, 4, 5, 6]).unwrap();
    for w in rep.points.windows(2) {
        assert!(w[1].ground_energy <= w[0].ground_energy + 1e-12);
    }
}

fn small_model(n: usize, delta: f64, t: f64, g: f64) -> ModelParams {
    ModelParams {
        n_sites: n,
        omega_z: 1.0,
        delta_bare: delta,
        g,
        coupling_scheme: CouplingScheme::ShortRange { t },
        boundary: Boundary::Open,
        staggered: false,
        include_local_shift: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn charge_commutes_with_h(n in 1usize..=3, delta in 1.0f64..3.0, t in -0.4f64..0.4, g in 0.0f64..1.5) {
        let p = small_model(n, delta, t, g);
        let c: CouplingMatrix64 = build_couplings(&p).unwrap();
        let cutoff = if n == 3 { 1 } else { 2 };
        let h = build_hamiltonian(&p, &c, cutoff, Truncation::PerSpecies, 1 << 20).unwrap();
        prop_assert!(h.commutator_norm() < 1e-12);
    }

    #[test]
    fn mean_field_is_an_upper_bound(n in 1usize..=2, delta in 1.5f64..3.0, t in 0.0f64..0.3, g in 0.0f64..1.6) {
        let p = small_model(n, delta, t, g);
        let c: CouplingMatrix64 = build_couplings(&p).unwrap();
        let s = diagonalize_bath(&c).unwrap();
        let mf = solve_mean_field(&p, &s, &MeanFieldOptions::default(), None).unwrap();
        let ed = exact_ground_state(&p, &c, &EdConfig::default().with_cutoff(8)).unwrap().result;
        prop_assert!(mf.energy >= ed.ground_energy - 1e-9, "{} < {}", mf.energy, ed.ground_energy);
    }

    #[test]
    fn staggering_is_an_involution(n in 1usize..8, seed in 0u64..1000) {
        let mut x = seed as f64 + 0.5;
        let mut next = || { x = (x * 7.31).fract(); x };
        let hop = nalgebra::DMatrix::from_fn(n, n, |j, l| if j == l { 0.0 } else { 0.1 * (j + l) as f64 });
        let delta = nalgebra::DVector::from_fn(n, |_, _| 2.0 + next());
        let c = CouplingMatrix::new(delta, hop).unwrap();
        prop_assert_eq!(c.staggered().staggered(), c);
    }

    #[test]
    fn lab_coupling_is_linear_in_the_gradient(b in 1.0f64..80.0) {
        let mut lab = LabParams::ca40(4);
        lab.gradient = b;
        let one = from_lab_params(&lab).unwrap().g;
        lab.gradient = 2.0 * b;
        let two = from_lab_params(&lab).unwrap().g;
        prop_assert!((two / one - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lab_hop_scales_as_inverse_cube_of_spacing(d in 5e-6f64..40e-6) {
        let mut lab = LabParams::ca40(4);
        lab.axial = cjt_core::lab::AxialScale::CenterSpacing(d);
        let t1 = from_lab_params(&lab).unwrap().hop;
        lab.axial = cjt_core::lab::AxialScale::CenterSpacing(2.0 * d);
        let t2 = from_lab_params(&lab).unwrap().hop;
        prop_assert!((t1 / t2 - 8.0).abs() < 1e-9);
    }
}
