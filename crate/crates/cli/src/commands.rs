use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use collapse_core::analytic::{collapse_time, decoherence_factor, CollapseTime};
use collapse_core::sde::{run_ensemble, EnsembleStats, PhaseMode, SdeConfig};
use collapse_core::structure::{
    compare_hypotheses, kaon_superposition, predict_collapse_time, HypothesisReport, MassTable,
};
use collapse_core::{Duration, Energy, NLevelState, PhysicalConstants};
use serde_json::Value;

use crate::error::CliError;
use crate::formats::{emit_structure, fmt_f64, mass_table_to_json, parse_mass_table, parse_structure, report_json};
use crate::manifest::RunManifest;
use crate::{Command, KaonArgs, PhaseArg, PredictArgs, SimulateArgs, SweepArgs};

pub const SIMULATE_HEADER: &str =
    "t,rho11,re_rho12,im_rho12,rho22,mean_energy,energy_variance,decided_1,decided_2,analytic_rho12";

pub const SWEEP_HEADER: &str = "delta_e_mev,tc_seconds";

/// Order of magnitude quoted for the kaon collapse time, seconds.
pub const KAON_QUOTED_SECONDS: f64 = 1e-4;

pub fn dispatch(command: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate(a, stdout),
        Command::Predict(a) => predict(a, stdout),
        Command::Sweep(a) => sweep(a, stdout),
        Command::Kaon(a) => kaon(a, stdout),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(CliError::io(path))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout.write_all(text.as_bytes()).map_err(CliError::io("<stdout>"))
}

fn physical_constants(k: f64) -> Result<PhysicalConstants, CliError> {
    Ok(PhysicalConstants::default().with_k(k)?)
}

fn load_masses(path: Option<&Path>) -> Result<MassTable, CliError> {
    match path {
        Some(p) => parse_mass_table(&read(p)?),
        None => Ok(MassTable::default_quarks()),
    }
}

fn seconds(v: f64, what: &str) -> Result<Duration, CliError> {
    Duration::seconds(v).map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

pub fn simulate_config(args: &SimulateArgs) -> Result<(SdeConfig, PhysicalConstants), CliError> {
    let constants = if args.dimensionless {
        PhysicalConstants::new(1.0, 1.0, args.k)?
    } else {
        physical_constants(args.k)?
    };
    if !args.delta_e.is_finite() || args.delta_e < 0.0 {
        return Err(CliError::Validation(format!("--delta-e {} must be non-negative", args.delta_e)));
    }
    let state = NLevelState::two_level(args.alpha, Energy::ZERO, Energy::mev(args.delta_e)?)?;
    let mut cfg = SdeConfig::new(
        state,
        constants,
        seconds(args.dt, "--dt")?,
        seconds(args.t_max, "--t-max")?,
        args.trajectories,
        args.seed,
    )?
    .with_record_stride(args.record_stride)?;
    if let Some(p) = args.phase {
        cfg = cfg.with_phase(match p {
            PhaseArg::Schrodinger => PhaseMode::Schrodinger,
            PhaseArg::Interaction => PhaseMode::Interaction,
        });
    }
    if let Some(th) = args.collapse_threshold {
        cfg = cfg.with_collapse_threshold(th)?;
    }
    Ok((cfg, constants))
}

/// CSV rows for a two-level ensemble, with the closed-form coherence in
/// the last column.
pub fn simulate_csv(stats: &EnsembleStats, args: &SimulateArgs, constants: &PhysicalConstants) -> Result<String, CliError> {
    let delta_e = Energy::mev(args.delta_e)?;
    let coherence0 = (args.alpha * (1.0 - args.alpha)).sqrt();
    let mut out = String::with_capacity(64 * (stats.samples.len() + 1));
    out.push_str(SIMULATE_HEADER);
    out.push('\n');
    for s in &stats.samples {
        let rho = &s.mean_density;
        let c = s.coherence();
        let analytic = decoherence_factor(delta_e, s.time, constants)? * coherence0;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(s.time.value()),
            fmt_f64(rho.population(0)),
            fmt_f64(c.re),
            fmt_f64(c.im),
            fmt_f64(rho.population(1)),
            fmt_f64(s.mean_energy),
            fmt_f64(s.mean_energy_variance),
            s.decided[0],
            s.decided[1],
            fmt_f64(analytic),
        );
    }
    Ok(out)
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (cfg, constants) = simulate_config(args)?;
    let stats = match args.threads {
        Some(0) => return Err(CliError::Validation("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?
            .install(|| run_ensemble(&cfg))?,
        None => run_ensemble(&cfg)?,
    };
    write_file(&args.out, &simulate_csv(&stats, args, &constants)?)?;

    let mut manifest = RunManifest::new("simulate", constants)
        .param("delta_e", args.delta_e)
        .param("alpha", args.alpha)
        .param("trajectories", args.trajectories)
        .param("dt", args.dt)
        .param("t_max", args.t_max)
        .param("seed", args.seed)
        .param("k", args.k)
        .param("dimensionless", args.dimensionless)
        .param("record_stride", args.record_stride)
        .meta("phase_mode", cfg.phase().as_str())
        .meta("coherence_frame", "rotating")
        .meta("collapse_threshold", cfg.collapse_threshold())
        .meta("gamma", stats.gamma)
        .meta("n_steps", cfg.n_steps())
        .meta("outcome_counts", stats.outcome_counts.clone())
        .meta(
            "measured_collapse_time_seconds",
            stats.measured_collapse_time.map(|t| t.value()),
        )
        .meta("threads", args.threads.unwrap_or_else(rayon::current_num_threads));
    manifest.seed = Some(args.seed);
    let mpath = manifest.write_beside(&args.out)?;
    emit(
        stdout,
        &format!(
            "wrote {} rows to {} ({})\n",
            stats.samples.len(),
            args.out.display(),
            mpath.display()
        ),
    )
}

fn with_measurement(report: HypothesisReport, measured: Option<f64>) -> Result<HypothesisReport, CliError> {
    match measured {
        None => Ok(report),
        Some(m) => {
            if !(m > 0.0) {
                return Err(CliError::Validation(format!("--measured {m} must be positive")));
            }
            let ranked = compare_hypotheses(vec![report], seconds(m, "--measured")?)?;
            Ok(ranked.into_iter().next().expect("one report in, one out"))
        }
    }
}

fn write_report(
    out: Option<&Path>,
    json: &Value,
    manifest: RunManifest,
) -> Result<(), CliError> {
    if let Some(path) = out {
        write_file(path, &(serde_json::to_string_pretty(json).unwrap_or_default() + "\n"))?;
        manifest.write_beside(path)?;
    }
    Ok(())
}

pub fn predict_report(args: &PredictArgs) -> Result<HypothesisReport, CliError> {
    let constants = physical_constants(args.k)?;
    let masses = load_masses(args.masses.as_deref())?;
    let spec = parse_structure(&read(&args.structure)?, &masses)?;
    with_measurement(predict_collapse_time(&spec, &constants)?, args.measured)
}

fn predict(args: &PredictArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let report = predict_report(args)?;
    let json = report_json(&report);
    let manifest = RunManifest::new("predict", physical_constants(args.k)?)
        .param("structure", args.structure.display().to_string())
        .param("k", args.k)
        .param("masses", args.masses.as_ref().map(|p| p.display().to_string()))
        .param("measured", args.measured);
    write_report(args.out.as_deref(), &json, manifest)?;
    emit(stdout, &(serde_json::to_string_pretty(&json).unwrap_or_default() + "\n"))
}

/// `points` energies spaced evenly in log between `min` and `max`; the
/// endpoints are exact.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![min];
    }
    let (lo, hi) = (min.ln(), max.ln());
    (0..points)
        .map(|i| match i {
            0 => min,
            i if i == points - 1 => max,
            i => (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp(),
        })
        .collect()
}

pub fn sweep_csv(args: &SweepArgs) -> Result<String, CliError> {
    if !(args.delta_e_min > 0.0) || !args.delta_e_min.is_finite() {
        return Err(CliError::Validation(format!(
            "--delta-e-min {} must be positive",
            args.delta_e_min
        )));
    }
    if !(args.delta_e_max >= args.delta_e_min) || !args.delta_e_max.is_finite() {
        return Err(CliError::Validation(format!(
            "--delta-e-max {} must be finite and at least --delta-e-min",
            args.delta_e_max
        )));
    }
    if args.points == 0 {
        return Err(CliError::Validation("--points must be positive".into()));
    }
    let constants = physical_constants(args.k)?;
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for de in log_grid(args.delta_e_min, args.delta_e_max, args.points) {
        let tc = collapse_time(Energy::mev(de)?, &constants)?
            .collapse_time
            .seconds()
            .expect("positive energy difference");
        let _ = writeln!(out, "{},{}", fmt_f64(de), fmt_f64(tc));
    }
    Ok(out)
}

fn sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let csv = sweep_csv(args)?;
    write_file(&args.out, &csv)?;
    RunManifest::new("sweep", physical_constants(args.k)?)
        .param("delta_e_min", args.delta_e_min)
        .param("delta_e_max", args.delta_e_max)
        .param("points", args.points)
        .param("k", args.k)
        .write_beside(&args.out)?;
    emit(stdout, &format!("wrote {} rows to {}\n", args.points, args.out.display()))
}

fn ket(branch: &collapse_core::structure::ParticleNode) -> String {
    let leaves: Vec<&str> = branch.leaves().iter().map(|l| l.name()).collect();
    format!("|{}: {}>", branch.name(), leaves.join(" "))
}

pub fn kaon_report(args: &KaonArgs) -> Result<(HypothesisReport, String), CliError> {
    let constants = physical_constants(args.k)?;
    let masses = load_masses(args.masses.as_deref())?;
    let spec = kaon_superposition(&masses)?;
    if let Some(path) = &args.structure_out {
        write_file(path, &emit_structure(&spec))?;
    }
    let report = with_measurement(predict_collapse_time(&spec, &constants)?, args.measured)?;

    let mut text = String::new();
    let a = spec.amplitudes();
    let b = spec.branches();
    let sign = if a[1].re < 0.0 { "-" } else { "+" };
    let _ = writeln!(
        text,
        "state:          |{}> = {} {} {} {} {}",
        spec.name(),
        fmt_f64(a[0].re),
        ket(&b[0]),
        sign,
        fmt_f64(a[1].re.abs()),
        ket(&b[1]),
    );
    for (name, m) in masses.iter() {
        let _ = writeln!(text, "mass:           {name} = {} MeV", fmt_f64(m.value()));
    }
    let _ = writeln!(text, "delta E total:  {} MeV", fmt_f64(report.delta_e_total.value()));
    let tc = match report.predicted_tc {
        CollapseTime::NoCollapse => "no_collapse".to_string(),
        CollapseTime::Finite(t) => format!("{:.4e} s", t.value()),
    };
    let _ = writeln!(text, "predicted t_c:  {tc} (k = {})", fmt_f64(report.k));
    let _ = writeln!(text, "quoted:         ~{:e} s (order of magnitude)", KAON_QUOTED_SECONDS);
    if let Some(r) = report.log10_ratio {
        let _ = writeln!(text, "log10 ratio:    {}", fmt_f64(r));
    }
    Ok((report, text))
}

fn kaon(args: &KaonArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (report, text) = kaon_report(args)?;
    let json = report_json(&report);
    let masses = load_masses(args.masses.as_deref())?;
    let manifest = RunManifest::new("kaon", physical_constants(args.k)?)
        .param("k", args.k)
        .param("masses", mass_table_to_json(&masses))
        .param("measured", args.measured);
    write_report(args.out.as_deref(), &json, manifest)?;
    emit(
        stdout,
        &format!("{text}\n{}\n", serde_json::to_string_pretty(&json).unwrap_or_default()),
    )
}
