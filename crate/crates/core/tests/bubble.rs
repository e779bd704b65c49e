mod common;

use common::internal_sum;
use num_complex::Complex64;
use proptest::prelude::*;
use readout_core::bare::{density_bubble, dispersion, fermi, site_density_bubble};
use readout_core::ed::{diagonalize, FockSpace};
use readout_core::{Boundary, LatticeSpec, MatsubaraGrid, Spin};

fn chain(sites: usize, mu: f64, spin: Spin) -> LatticeSpec {
    LatticeSpec { sites, hopping: 1.0, mu, spin, probe_site: 1, boundary: Boundary::Periodic }
}

#[test]
fn matches_internal_frequency_sum() {
    let lat = chain(4, 0.0, Spin::Spinless);
    let grid = MatsubaraGrid::bosonic(5.0, 4).unwrap();
    let b = density_bubble(&lat, 2, &grid).unwrap();
    let oracle = internal_sum(&lat, 2, 1, 5.0, 200_000);
    let got = b.at(1).unwrap();
    assert!((got - oracle).norm() <= 1e-6 * oracle.norm(), "{got} vs {oracle}");
}

#[test]
fn static_value_matches_internal_sum() {
    let lat = chain(6, 0.3, Spin::SpinHalf);
    let grid = MatsubaraGrid::bosonic(2.0, 2).unwrap();
    for q in [1, 3] {
        let got = density_bubble(&lat, q, &grid).unwrap().at(0).unwrap();
        let oracle = internal_sum(&lat, q, 0, 2.0, 200_000);
        assert!((got - oracle).norm() <= 1e-6 * oracle.norm(), "q={q}: {got} vs {oracle}");
    }
}

#[test]
fn uniform_mode_vanishes_off_static() {
    let lat = chain(4, 0.0, Spin::Spinless);
    let grid = MatsubaraGrid::bosonic(5.0, 64).unwrap();
    let b = density_bubble(&lat, 0, &grid).unwrap();
    for (n, _, v) in b.iter() {
        if n != 0 {
            assert_eq!(v, Complex64::new(0.0, 0.0));
        }
    }
}

fn decay_constant(lat: &LatticeSpec, q: usize, beta: f64) -> f64 {
    let l = lat.sites;
    (0..l)
        .map(|k| {
            let a = dispersion(lat, k).unwrap();
            let b = dispersion(lat, (k + q) % l).unwrap();
            ((fermi(a, beta) - fermi(b, beta)) * (a - b)).abs()
        })
        .sum::<f64>()
        * lat.spin.degeneracy() as f64
}

#[test]
fn probe_site_bubble_matches_free_lattice_ed() {
    // the single-site density correlator of a free chain is exactly the
    // q-averaged bubble
    let lat = chain(4, 0.2, Spin::Spinless);
    let beta = 5.0;
    let grid = MatsubaraGrid::bosonic(beta, 6).unwrap();
    let space = FockSpace::new(vec![], 4).unwrap();
    let (h, n0) = readout_core::ed::system::lattice_terms(&space, &lat).unwrap();
    let mut data = diagonalize(&h, beta).unwrap();
    data.register("n", &n0).unwrap();
    let ed = data.lehmann_autocorrelator("n", &grid).unwrap();
    let bubble = site_density_bubble(&lat, &grid).unwrap();
    assert!(ed.max_relative_deviation(&bubble).unwrap() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decays_as_inverse_square(sites in 2usize..9, q in 0usize..9, mu in -1.5f64..1.5, beta in 0.5f64..10.0) {
        let lat = chain(sites, mu, Spin::Spinless);
        let grid = MatsubaraGrid::bosonic(beta, 64).unwrap();
        let b = density_bubble(&lat, q, &grid).unwrap();
        let k = decay_constant(&lat, q % sites, beta);
        for (n, w, v) in b.iter() {
            if n.unsigned_abs() as usize > grid.n_max() / 2 {
                prop_assert!(v.norm() <= k / (w * w) * (1.0 + 1e-12) + 1e-300);
            }
        }
    }

    #[test]
    fn bubble_is_hermitian_and_q_symmetric(sites in 2usize..9, q in 0usize..9, mu in -1.5f64..1.5) {
        let lat = chain(sites, mu, Spin::Spinless);
        let grid = MatsubaraGrid::bosonic(3.0, 16).unwrap();
        let b = density_bubble(&lat, q, &grid).unwrap();
        let mirror = density_bubble(&lat, sites - q % sites, &grid).unwrap();
        prop_assert!(b.conjugate_symmetry_defect() <= 1e-14 * (1.0 + b.max_abs()));
        for (x, y) in b.values().iter().zip(mirror.values()) {
            prop_assert!((x - y).norm() <= 1e-13 * (1.0 + x.norm()));
        }
    }
}
