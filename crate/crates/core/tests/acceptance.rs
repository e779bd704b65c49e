//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

mod common;

use std::time::{Duration, Instant};

use num_complex::Complex64;
use readout_core::bare::{
    cavity_bare, cavity_bare_tau, density_bubble, dispersion, fermi, free_fermion_propagator,
    oscillator_bare, BathModeSpec,
};
use readout_core::continuation::{pade_eval, pade_fit, real_axis};
use readout_core::dyson::{detector_full_oscillator, detector_with_bath, dress_oscillator, extract};
use readout_core::ed::wick::{lattice_density_wick_residual, oscillator_wick_residual};
use readout_core::ed::{readout_experiment, ReadoutOptions, Simulator};
use readout_core::grid::{freq_to_tau, tau_to_freq, InverseOptions};
use readout_core::{
    Boundary, CorrelatorSeries, CouplingSpec, DetectorSpec, FlatBathMode, LatticeSpec, MatsubaraGrid,
    OscillatorSpec, RationalForm, RetardedSeries, Spin, Statistics, SystemSpec, TauSeries,
};

const BETA: f64 = 5.0;
const LAMBDAS: [f64; 3] = [0.05, 0.1, 0.2];

type Outcome = Result<(bool, String), String>;

fn flat() -> DetectorSpec {
    DetectorSpec::flat(1.0, 0.1, 0.0)
}

fn max_rel(a: &CorrelatorSeries, b: &CorrelatorSeries) -> Result<f64, String> {
    a.max_relative_deviation(b).map_err(|e| e.to_string())
}

fn extraction_identity() -> Outcome {
    let grid = MatsubaraGrid::bosonic(BETA, 256).map_err(|e| e.to_string())?;
    let c0 = oscillator_bare(0.8, &grid).map_err(|e| e.to_string())?;
    let d_rb = detector_with_bath(&flat(), &grid, FlatBathMode::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for lambda in LAMBDAS {
        let d_r = detector_full_oscillator(&d_rb, &c0, lambda).map_err(|e| e.to_string())?;
        let back = extract(&d_rb, &d_r, lambda).map_err(|e| e.to_string())?;
        worst = worst.max(max_rel(&back, &c0)?);
    }
    Ok((worst <= 1e-12, format!("max relative error {worst:.2e} (tolerance 1e-12)")))
}

fn oscillator_spec(lambda: f64) -> SystemSpec {
    SystemSpec {
        detector: DetectorSpec::discrete(
            1.0,
            vec![
                BathModeSpec { coupling: 0.1, frequency: 0.9 },
                BathModeSpec { coupling: 0.1, frequency: 1.1 },
            ],
        ),
        simulator: Simulator::Oscillator(OscillatorSpec { omega_s: 0.8 }),
        coupling: CouplingSpec { lambda },
        beta: BETA,
        truncation: None,
        mean_subtract: true,
        dimension_budget: 20_000,
    }
}

fn oscillator_readout() -> Outcome {
    let grid = MatsubaraGrid::bosonic(BETA, 4).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut extracted = Vec::new();
    let mut sizes = Vec::new();
    for lambda in LAMBDAS {
        let (set, report) =
            readout_experiment(&oscillator_spec(lambda), &grid, &ReadoutOptions::default()).map_err(|e| e.to_string())?;
        worst = worst.max(report.max_relative_deviation);
        sizes.push(report.dimension);
        extracted.push(set.c_sl.expect("extraction output"));
    }
    let mut spread = 0.0f64;
    for i in 0..extracted.len() {
        for j in i + 1..extracted.len() {
            spread = spread.max(max_rel(&extracted[i], &extracted[j])?);
        }
    }
    Ok((
        worst <= 1e-6 && spread <= 1e-6,
        format!("max deviation from ED C_S0 {worst:.2e}, spread across lambda {spread:.2e} (tolerance 1e-6; dimensions {sizes:?}, N = 4)"),
    ))
}

const FROZEN_DENSITY_RESIDUAL: f64 = -0.022_514_021_791_173_646;

fn wick_dichotomy() -> Outcome {
    let mut quad = 0.0f64;
    for (w, beta) in [(0.8, 5.0), (1.0, 2.0)] {
        let taus = [0.1 * beta, 0.35 * beta, 0.5 * beta, 0.9 * beta];
        quad = quad.max(oscillator_wick_residual(w, beta, 150, taus).map_err(|e| e.to_string())?.norm());
    }
    let dimer = LatticeSpec {
        sites: 2,
        hopping: 1.0,
        mu: 0.0,
        spin: Spin::Spinless,
        probe_site: 1,
        boundary: Boundary::Open,
    };
    let dens = lattice_density_wick_residual(&dimer, 2.0, [0.2, 0.6, 1.0, 1.4]).map_err(|e| e.to_string())?;
    let pinned = (dens.re - FROZEN_DENSITY_RESIDUAL).abs() <= 1e-12 && dens.im == 0.0;
    Ok((
        quad <= 1e-10 && dens.norm() > 1e-8 && pinned,
        format!("quadrature residual {quad:.2e} (tolerance 1e-10), density residual {:.15} (frozen {FROZEN_DENSITY_RESIDUAL})", dens.re),
    ))
}

fn fermion_backaction() -> Outcome {
    let grid = MatsubaraGrid::bosonic(BETA, 4).map_err(|e| e.to_string())?;
    let lattice = LatticeSpec {
        sites: 4,
        hopping: 1.0,
        mu: 0.0,
        spin: Spin::Spinless,
        probe_site: 1,
        boundary: Boundary::Periodic,
    };
    let mut norms = Vec::new();
    for lambda in [0.1, 0.05] {
        let mut spec = oscillator_spec(lambda);
        spec.simulator = Simulator::Lattice(lattice.clone());
        let (_, report) = readout_experiment(&spec, &grid, &ReadoutOptions::default()).map_err(|e| e.to_string())?;
        norms.push(report.deviation_norm);
    }
    let ratio = norms[0] / norms[1];
    Ok((
        (ratio - 4.0).abs() <= 0.6 && norms[1] > 0.0,
        format!("deviation norms {:.4e} / {:.4e}, ratio {ratio:.4} (target 4 +/- 15%)", norms[0], norms[1]),
    ))
}

fn flat_bath_formula() -> Outcome {
    let grid = MatsubaraGrid::bosonic(BETA, 256).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (kappa, shift) in [(0.1, 0.0), (0.1, 0.05), (0.3, -0.02)] {
        let det = DetectorSpec::flat(1.0, kappa, shift);
        let d = detector_with_bath(&det, &grid, FlatBathMode::PaperLiteral).map_err(|e| e.to_string())?;
        let wt2 = 1.0 + 2.0 * shift;
        for (_, w, v) in d.iter() {
            let expected = 2.0 / Complex64::new(-w * w - wt2, 2.0 * kappa);
            worst = worst.max((v - expected).norm() / expected.norm());
        }
    }
    let d = detector_with_bath(&flat(), &grid, FlatBathMode::PaperLiteral).map_err(|e| e.to_string())?;
    let v0 = d.at(0).expect("n = 0");
    let digits = (v0.re + 1.923_07).abs() < 1e-5 && (v0.im + 0.384_61).abs() < 1e-5;
    Ok((
        worst <= 4.0 * f64::EPSILON && digits,
        format!("max relative error {worst:.2e}, n = 0 value {:.6}{:+.6}i", v0.re, v0.im),
    ))
}

fn continuation() -> Outcome {
    let grid = MatsubaraGrid::bosonic(BETA, 40).map_err(|e| e.to_string())?;
    let window = real_axis(0.5, 1.5, 1001).map_err(|e| e.to_string())?;
    let eta = 1e-3;
    let d_rb = detector_with_bath(&flat(), &grid, FlatBathMode::Symmetric).map_err(|e| e.to_string())?;
    let approx = pade_fit(&d_rb, 6).map_err(|e| e.to_string())?;
    let pade = RetardedSeries::from_pade(&approx, &window, eta, "D_RB").map_err(|e| e.to_string())?;
    let exact = RetardedSeries::from_rational(&RationalForm::DetectorWithBath { detector: flat() }, &window, eta, "D_RB")
        .map_err(|e| e.to_string())?;
    let err = pade.max_relative_deviation(&exact).map_err(|e| e.to_string())?;

    let set = dress_oscillator(&flat(), 0.8, 0.1, &grid, FlatBathMode::Symmetric).map_err(|e| e.to_string())?;
    let c = extract(&set.d_rb, &set.d_r, 0.1).map_err(|e| e.to_string())?;
    let approx = pade_fit(&c, 6).map_err(|e| e.to_string())?;
    let s = RetardedSeries::from_pade(&approx, &window, eta, "C_S0").map_err(|e| e.to_string())?;
    let peak = s.peak(|w| Ok(pade_eval(&approx, w, eta)?.0)).map_err(|e| e.to_string())?;
    let offset = (peak - 0.8).abs() / 0.8;
    Ok((
        err <= 1e-4 && offset <= 0.01,
        format!("D_RB max relative error {err:.2e} (tolerance 1e-4), C_S0 peak at {peak:.6} (offset {offset:.2e}, tolerance 1e-2)"),
    ))
}

fn transforms() -> Outcome {
    let grid = MatsubaraGrid::bosonic(BETA, 256).map_err(|e| e.to_string())?;
    let tau = TauSeries::sample_uniform(BETA, Statistics::Bosonic, 2048, |t| {
        Complex64::from(cavity_bare_tau(1.0, BETA, t.max(1e-300)).expect("tau in range"))
    })
    .map_err(|e| e.to_string())?;
    let freq = tau_to_freq(&tau, &grid).map_err(|e| e.to_string())?;
    let points: Vec<f64> = (1..20).map(|j| BETA * j as f64 / 20.0).collect();
    let back = freq_to_tau(&freq, &points, InverseOptions::default()).map_err(|e| e.to_string())?;
    let mut roundtrip = 0.0f64;
    for (t, v) in points.iter().zip(back.values()) {
        let exact = cavity_bare_tau(1.0, BETA, *t).map_err(|e| e.to_string())?;
        roundtrip = roundtrip.max((v - exact).norm() / exact.abs());
    }

    let opts = InverseOptions { tail_correction: true, kms_extension: true };
    let mut kms = 0.0f64;
    let bare = cavity_bare(1.0, &grid).map_err(|e| e.to_string())?;
    let fgrid = MatsubaraGrid::fermionic(BETA, 256).map_err(|e| e.to_string())?;
    let eps = 0.4;
    let prop = free_fermion_propagator(eps, &fgrid).map_err(|e| e.to_string())?;
    let f = fermi(eps, BETA);
    for t in [0.7, 2.5, 4.1] {
        let b = freq_to_tau(&bare, &[t - BETA], opts).map_err(|e| e.to_string())?;
        let exact = cavity_bare_tau(1.0, BETA, t - BETA).map_err(|e| e.to_string())?;
        kms = kms.max((b.values()[0].re - exact).abs() / exact.abs());
        let g = freq_to_tau(&prop, &[t - BETA], opts).map_err(|e| e.to_string())?;
        let exact = f * (-eps * (t - BETA)).exp();
        kms = kms.max((g.values()[0].re - exact).abs() / exact.abs());
    }

    let mut defect = 0.0f64;
    let set = dress_oscillator(&flat(), 0.8, 0.1, &grid, FlatBathMode::Symmetric).map_err(|e| e.to_string())?;
    let c = extract(&set.d_rb, &set.d_r, 0.1).map_err(|e| e.to_string())?;
    for s in set.series().into_iter().chain([&c, &bare]) {
        defect = defect.max(s.conjugate_symmetry_defect());
    }
    Ok((
        roundtrip <= 1e-6 && kms <= 1e-6 && defect == 0.0,
        format!("roundtrip {roundtrip:.2e}, KMS {kms:.2e} (tolerance 1e-6), conjugate-symmetry defect {defect:e}"),
    ))
}

fn bubble() -> Outcome {
    let lat = LatticeSpec {
        sites: 4,
        hopping: 1.0,
        mu: 0.0,
        spin: Spin::Spinless,
        probe_site: 1,
        boundary: Boundary::Periodic,
    };
    let grid = MatsubaraGrid::bosonic(BETA, 256).map_err(|e| e.to_string())?;
    let uniform = density_bubble(&lat, 0, &grid).map_err(|e| e.to_string())?;
    let zero = uniform.iter().all(|(n, _, v)| n == 0 || v == Complex64::new(0.0, 0.0));

    let mut decay = true;
    for q in 0..lat.sites {
        let b = density_bubble(&lat, q, &grid).map_err(|e| e.to_string())?;
        let k: f64 = (0..lat.sites)
            .map(|k| {
                let a = dispersion(&lat, k).expect("k in range");
                let c = dispersion(&lat, (k + q) % lat.sites).expect("k in range");
                ((fermi(a, BETA) - fermi(c, BETA)) * (a - c)).abs()
            })
            .sum();
        for (n, w, v) in b.iter() {
            if n.unsigned_abs() > 128 && v.norm() > k / (w * w) * (1.0 + 1e-12) {
                decay = false;
            }
        }
    }

    let b = density_bubble(&lat, 2, &grid).map_err(|e| e.to_string())?;
    let got = b.at(1).expect("n = 1");
    let oracle = common::internal_sum(&lat, 2, 1, BETA, 200_000);
    let err = (got - oracle).norm() / oracle.norm();
    Ok((
        zero && decay && err <= 1e-6,
        format!("q = 0 zero off n = 0: {zero}, K/w^2 bound on outer half: {decay}, (q=2, n=1) value {:.9}{:+.9}i vs oracle, relative error {err:.2e}", got.re, got.im),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("extraction identity (closed form)", extraction_identity, Duration::from_secs(1)),
        ("nonperturbative oscillator readout (ED)", oscillator_readout, Duration::from_secs(120)),
        ("Wick dichotomy", wick_dichotomy, Duration::from_secs(10)),
        ("fermion backaction scaling (ED)", fermion_backaction, Duration::from_secs(300)),
        ("flat-bath formula", flat_bath_formula, Duration::from_secs(1)),
        ("continuation", continuation, Duration::from_secs(10)),
        ("transform suite", transforms, Duration::from_secs(10)),
        ("bubble checks", bubble, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {detail}; {:.2}s (budget {}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
