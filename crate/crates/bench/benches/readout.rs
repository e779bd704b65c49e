use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use readout_core::bare::{cavity_bare_tau, site_density_bubble, BathModeSpec, Boundary, LatticeSpec, Spin};
use readout_core::continuation::{pade_fit, real_axis};
use readout_core::dyson::{dress_oscillator, extract};
use readout_core::ed::{readout_experiment, ReadoutOptions, Simulator, Truncation};
use readout_core::grid::{freq_to_tau, tau_to_freq, InverseOptions};
use readout_core::{
    CouplingSpec, DetectorSpec, FlatBathMode, MatsubaraGrid, OscillatorSpec, RetardedSeries, Statistics, SystemSpec,
    TauSeries,
};

fn flat() -> DetectorSpec {
    DetectorSpec::flat(1.0, 0.1, 0.0)
}

fn closed_form(c: &mut Criterion) {
    let grid = MatsubaraGrid::bosonic(5.0, 256).unwrap();
    c.bench_function("dress_and_extract_n256", |b| {
        b.iter(|| {
            let set = dress_oscillator(&flat(), 0.8, black_box(0.1), &grid, FlatBathMode::PaperLiteral).unwrap();
            extract(&set.d_rb, &set.d_r, 0.1).unwrap()
        })
    });
    let lattice = LatticeSpec {
        sites: 8,
        hopping: 1.0,
        mu: 0.0,
        spin: Spin::Spinless,
        probe_site: 1,
        boundary: Boundary::Periodic,
    };
    c.bench_function("site_density_bubble_l8_n256", |b| {
        b.iter(|| site_density_bubble(black_box(&lattice), &grid).unwrap())
    });
}

fn transforms(c: &mut Criterion) {
    let grid = MatsubaraGrid::bosonic(5.0, 256).unwrap();
    let tau = TauSeries::sample_uniform(5.0, Statistics::Bosonic, 2048, |t| {
        Complex64::from(cavity_bare_tau(1.0, 5.0, t.max(1e-300)).unwrap())
    })
    .unwrap();
    c.bench_function("tau_to_freq_mesh2048_n256", |b| b.iter(|| tau_to_freq(black_box(&tau), &grid).unwrap()));
    let freq = tau_to_freq(&tau, &grid).unwrap();
    let points: Vec<f64> = (1..100).map(|j| 0.05 * j as f64).collect();
    c.bench_function("freq_to_tau_99_points", |b| {
        b.iter(|| freq_to_tau(black_box(&freq), &points, InverseOptions::default()).unwrap())
    });
}

fn continuation(c: &mut Criterion) {
    let grid = MatsubaraGrid::bosonic(5.0, 40).unwrap();
    let set = dress_oscillator(&flat(), 0.8, 0.1, &grid, FlatBathMode::Symmetric).unwrap();
    let window = real_axis(0.5, 1.5, 1001).unwrap();
    c.bench_function("pade_fit_order6_and_1001_points", |b| {
        b.iter(|| {
            let approx = pade_fit(black_box(&set.d_rb), 6).unwrap();
            RetardedSeries::from_pade(&approx, &window, 1e-3, "D_RB").unwrap()
        })
    });
}

fn oracle(c: &mut Criterion) {
    let spec = SystemSpec {
        detector: DetectorSpec::discrete(1.0, vec![BathModeSpec { coupling: 0.1, frequency: 0.9 }]),
        simulator: Simulator::Oscillator(OscillatorSpec { omega_s: 0.8 }),
        coupling: CouplingSpec { lambda: 0.1 },
        beta: 5.0,
        truncation: Some(Truncation {
            n_max_cavity: 6,
            n_max_bath_mode: vec![6],
            n_max_oscillator: 6,
        }),
        mean_subtract: true,
        dimension_budget: 20_000,
    };
    let grid = MatsubaraGrid::bosonic(5.0, 4).unwrap();
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("readout_three_modes_cutoff6", |b| {
        b.iter(|| readout_experiment(black_box(&spec), &grid, &ReadoutOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, closed_form, transforms, continuation, oracle);
criterion_main!(benches);
