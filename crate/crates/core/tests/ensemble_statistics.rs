//! Statistical properties of the trajectory ensemble in dimensionless
//! units (ħ = E_p = k = 1, so γ = 2 and the coherence between levels split
//! by ΔE decays at rate ΔE²).

use collapse_core::analytic::{decoherence_factor, TwoLevelSpec};
use collapse_core::sde::{born_rule_check, run_ensemble, NoiseStream, PhaseMode, SdeConfig, Stepper};
use collapse_core::{Complex64, Duration, Energy, NLevelState, PhysicalConstants};

fn secs(v: f64) -> Duration {
    Duration::seconds(v).unwrap()
}

fn benchmark(alpha: f64, de: f64, n: usize, dt: f64, t_max: f64, seed: u64) -> SdeConfig {
    let state = NLevelState::two_level(alpha, Energy::ZERO, Energy::mev(de).unwrap()).unwrap();
    SdeConfig::new(state, PhysicalConstants::dimensionless(), secs(dt), secs(t_max), n, seed).unwrap()
}

#[test]
fn populations_and_mean_energy_are_martingales() {
    let cfg = benchmark(0.5, 1.0, 2000, 1e-3, 3.0, 3).with_record_stride(10).unwrap();
    let stats = run_ensemble(&cfg).unwrap();
    let e0 = stats.samples[0].mean_energy;
    for s in &stats.samples {
        let dev = (s.mean_density.population(0) - 0.5).abs();
        assert!(dev <= 3.0 * s.population_stderr[0] + 1e-12, "t={} dev={dev}", s.time);
        let dev = (s.mean_energy - e0).abs();
        assert!(dev <= 3.0 * s.mean_energy_stderr + 1e-12, "t={} dev={dev}", s.time);
    }
}

/// Least-squares slope of `ln|mean ρ₁₂|` against t over `[0, t_fit]`.
fn fitted_rate(stats: &collapse_core::sde::EnsembleStats, t_fit: f64) -> f64 {
    let pts: Vec<(f64, f64)> = stats
        .samples
        .iter()
        .filter(|s| s.time.value() <= t_fit)
        .map(|s| (s.time.value(), s.coherence().norm().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -sxy / sxx
}

#[test]
fn decoherence_rate_matches_closed_form() {
    // stability bound gamma * dE^2 * dt = 0.1 at dt = 0.05; run at a tenth of it
    for (de, k) in [(1.0, 1.0), (1.5, 2.0)] {
        let state = NLevelState::two_level(0.5, Energy::ZERO, Energy::mev(de).unwrap()).unwrap();
        let c = PhysicalConstants::dimensionless().with_k(k).unwrap();
        let dt = 0.1 / (2.0 / k * de * de) / 10.0;
        let expected = de * de / c.collapse_scale();
        let t_c = 1.0 / expected;
        let cfg = SdeConfig::new(state, c, secs(dt), secs(2.0 * t_c), 2000, 17)
            .unwrap()
            .with_record_stride(5)
            .unwrap();
        let stats = run_ensemble(&cfg).unwrap();
        let rate = fitted_rate(&stats, 1.5 * t_c);
        assert!((rate - expected).abs() < 0.05 * expected, "dE={de} k={k}: {rate} vs {expected}");
    }
}

#[test]
fn ensemble_mean_tracks_exponential_oracle() {
    let cfg = benchmark(0.36, 1.0, 2000, 1e-3, 2.0, 8).with_record_stride(20).unwrap();
    let stats = run_ensemble(&cfg).unwrap();
    let spec = TwoLevelSpec::from_alpha(0.36, Energy::mev(1.0).unwrap(), PhysicalConstants::dimensionless()).unwrap();
    for s in &stats.samples {
        let oracle = decoherence_factor(spec.delta_e(), s.time, spec.constants()).unwrap() * spec.initial_coherence();
        let se = s.coherence_stderr.0;
        assert!((s.coherence().re - oracle).abs() <= 4.0 * se + 1e-12, "t={} {} vs {oracle}", s.time, s.coherence().re);
        // rotating frame: the mean coherence of real initial amplitudes stays real
        assert!(s.coherence().im.abs() < 1e-9);
    }
}

#[test]
fn energy_variance_collapses() {
    // t_c = 1; run to 10 t_c
    let cfg = benchmark(0.5, 1.0, 2000, 2e-3, 10.0, 21).with_record_stride(50).unwrap();
    let stats = run_ensemble(&cfg).unwrap();
    let v0 = stats.samples[0].mean_energy_variance;
    assert!((v0 - 0.25).abs() < 1e-15);
    let last = stats.samples.last().unwrap();
    assert!(last.mean_energy_variance < 0.01 * v0, "{}", last.mean_energy_variance);
    // non-increasing up to Monte Carlo noise
    for w in stats.samples.windows(2) {
        assert!(w[1].mean_energy_variance <= w[0].mean_energy_variance + 2e-3);
    }
}

#[test]
fn measured_collapse_time_follows_inverse_square() {
    let t1 = run_ensemble(&benchmark(0.5, 1.0, 2000, 1e-3, 2.0, 31)).unwrap();
    let t2 = run_ensemble(&benchmark(0.5, 2.0, 2000, 1e-3, 0.5, 32)).unwrap();
    let a = t1.measured_collapse_time.unwrap().value();
    let b = t2.measured_collapse_time.unwrap().value();
    assert!((a - 1.0).abs() < 0.1, "{a}");
    assert!((b / (a / 4.0) - 1.0).abs() < 0.1, "{a} {b}");
}

#[test]
fn outcome_frequencies_follow_initial_populations() {
    let state = NLevelState::two_level(0.25, Energy::ZERO, Energy::mev(1.0).unwrap()).unwrap();
    let cfg = SdeConfig::new(state.clone(), PhysicalConstants::dimensionless(), secs(5e-3), secs(20.0), 10_000, 99)
        .unwrap()
        .with_record_stride(4000)
        .unwrap();
    let stats = run_ensemble(&cfg).unwrap();
    let report = born_rule_check(&stats, &state);
    assert_eq!(report.undecided, 0);
    assert!(!report.low_power);
    let f = report.levels[0].frequency;
    assert!((f - 0.25).abs() <= 0.013, "{f}");
    assert!(report.max_abs_z().unwrap() < 3.0);
}

#[test]
fn three_level_populations_stay_martingales() {
    let state = NLevelState::new(
        vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5), Complex64::new(0.5f64.sqrt(), 0.0)],
        vec![Energy::ZERO, Energy::mev(1.0).unwrap(), Energy::mev(2.0).unwrap()],
    )
    .unwrap();
    let cfg = SdeConfig::new(state.clone(), PhysicalConstants::dimensionless(), secs(2e-3), secs(15.0), 3000, 5)
        .unwrap()
        .with_record_stride(500)
        .unwrap();
    let stats = run_ensemble(&cfg).unwrap();
    let p0 = state.populations();
    for s in &stats.samples {
        for (i, p) in p0.iter().enumerate() {
            assert!((s.mean_density.population(i) - p).abs() <= 3.5 * s.population_stderr[i] + 1e-12);
        }
    }
    let report = born_rule_check(&stats, &state);
    assert!(report.max_abs_z().unwrap() < 3.5, "{report:?}");
}

/// Mean coherence at `t_end` for several step sizes, all driven by the same
/// Brownian paths (coarse increments are sums of fine ones).
fn coherence_by_step(dts: &[f64], t_end: f64, n_traj: usize) -> Vec<f64> {
    let c = PhysicalConstants::dimensionless();
    let fine = dts[0];
    let n_fine = (t_end / fine).round() as usize;
    let state = NLevelState::two_level(0.5, Energy::ZERO, Energy::mev(1.0).unwrap()).unwrap();
    let mut sums = vec![0.0; dts.len()];
    for traj in 0..n_traj {
        let mut noise = NoiseStream::new(2024, traj as u64);
        let dws: Vec<f64> = (0..n_fine).map(|_| noise.increment(fine)).collect();
        for (slot, &dt) in dts.iter().enumerate() {
            let ratio = (dt / fine).round() as usize;
            let mut stepper = Stepper::new(&[0.0, 1.0], &c, dt, PhaseMode::Interaction).unwrap();
            let mut amps = state.amplitudes().to_vec();
            for chunk in dws.chunks(ratio) {
                assert!(stepper.advance(&mut amps, chunk.iter().sum()));
            }
            sums[slot] += (amps[0] * amps[1].conj()).re;
        }
    }
    sums.iter().map(|s| s / n_traj as f64).collect()
}

#[test]
fn rate_is_stable_across_a_decade_of_dt() {
    let dts = [0.005, 0.01, 0.025, 0.05];
    let rho = coherence_by_step(&dts, 1.0, 20_000);
    for (dt, r) in dts.iter().zip(&rho) {
        let rate = -(r / 0.5).ln();
        assert!((rate - 1.0).abs() < 0.01, "dt={dt}: rate {rate}");
    }
}

/// Conditional on the current state, the exact process satisfies
/// `E[ρ₁₂(t+dt)] = exp(−ΔE² dt)·ρ₁₂(t)` (the mean obeys a closed linear
/// equation). The one-step defect of the integrator, computed here by
/// quadrature over the Gaussian increment, is therefore the local weak
/// error of the coherence; it must shrink as dt² for the accumulated error,
/// and hence the fitted rate, to be first order in dt.
fn local_weak_defect(alpha: f64, dt: f64) -> f64 {
    let c = PhysicalConstants::dimensionless();
    let state = NLevelState::two_level(alpha, Energy::ZERO, Energy::mev(1.0).unwrap()).unwrap();
    let rho0 = (state.amplitudes()[0] * state.amplitudes()[1].conj()).re;
    let mut stepper = Stepper::new(&[0.0, 1.0], &c, dt, PhaseMode::Interaction).unwrap();
    let nz = 40_000;
    let h = 20.0 / nz as f64;
    let mut mean = 0.0;
    for i in 0..=nz {
        let z = -10.0 + i as f64 * h;
        let w = if i == 0 || i == nz { 0.5 } else { 1.0 } * h * (-0.5 * z * z).exp()
            / (2.0 * std::f64::consts::PI).sqrt();
        let mut a = state.amplitudes().to_vec();
        assert!(stepper.advance(&mut a, z * dt.sqrt()));
        mean += w * (a[0] * a[1].conj()).re;
    }
    mean - (-dt).exp() * rho0
}

#[test]
fn weak_error_is_first_order_in_dt() {
    for alpha in [0.1, 0.3, 0.5] {
        let dts = [0.05, 0.025, 0.0125, 0.00625, 0.003125];
        let defects: Vec<f64> = dts.iter().map(|&dt| local_weak_defect(alpha, dt)).collect();
        for w in defects.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.4..=4.6).contains(&ratio), "alpha={alpha} defects {defects:?}");
        }
    }
}
