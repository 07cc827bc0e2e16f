//! The scenario table and the runners behind it.

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use kzchain::analysis::{
    dominant_frequency, fit_damped_sinusoid, fit_power_law, spectral_peaks, OscillationFit, Signal, SpectralOptions,
    Taper,
};
use kzchain::bcs::{
    derivative, dispersion, locate_critical_with, locate_crossover_in, solve_with, sweep, write_derivative_csv,
    write_sweep_csv, BcsOptions, CrossoverMethod, DERIVATIVE_STEP,
};
use kzchain::ed::{evolve_ed_fixed, ground_state, measure, pair_gap_ed, EdTrajectory, MAX_SITES, MIN_SITES};
use kzchain::integrable::{
    evolve_modes, kink_density_closed, kz_ramp_start_field, kzm_oscillation, lz_probability, ramp_series, ModeEnsemble,
};
use kzchain::pairmodel::{driven_response, pair_coefficients, pair_gap};
use kzchain::protocols::{MomentumGrid, RampProtocol};

use crate::config::{Config, Kind, ParamSpec, Value};
use crate::error::CliError;
use crate::output::Outputs;

type Check = fn(&Config) -> Result<(), String>;
type Run = fn(&Config, &mut Outputs) -> Result<Json, CliError>;

pub struct ScenarioDef {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamSpec],
    /// Files written besides `manifest.json`.
    pub outputs: &'static [&'static str],
    pub check: Check,
    pub run: Run,
}

macro_rules! param {
    ($key:literal, float $v:expr, $help:literal) => {
        ParamSpec { key: $key, kind: Kind::Float, default: || Value::Float($v), help: $help }
    };
    ($key:literal, int $v:expr, $help:literal) => {
        ParamSpec { key: $key, kind: Kind::Int, default: || Value::Int($v), help: $help }
    };
    ($key:literal, floats [$($v:expr),*], $help:literal) => {
        ParamSpec { key: $key, kind: Kind::FloatList, default: || Value::FloatList(vec![$($v),*]), help: $help }
    };
    ($key:literal, ints [$($v:expr),*], $help:literal) => {
        ParamSpec { key: $key, kind: Kind::IntList, default: || Value::IntList(vec![$($v),*]), help: $help }
    };
}

macro_rules! drive_params {
    ($g:expr, $a:expr) => {
        [
            param!("L", int 12, "chain length"),
            param!("g", float $g, "field"),
            param!("A", float $a, "drive amplitude"),
            param!("omega", float 8.0, "drive frequency"),
            param!("duration", float TAU, "drive duration"),
            param!("t_end", float 80.0, "end time"),
            param!("dt", float 0.01, "propagation step"),
            param!("sample_dt", float 0.05, "output spacing"),
            param!("j2", float 1.0, "next-nearest coupling"),
        ]
    };
}

pub static SCENARIOS: &[ScenarioDef] = &[
    ScenarioDef {
        name: "kz-integrable",
        description: "kink density after linear ramps of the J2=0 chain, and the Landau-Zener spectrum",
        params: &[
            param!("tauQ", floats [8.0, 16.0, 32.0, 64.0, 128.0], "quench times"),
            param!("nodes", int 2048, "quadrature nodes on (0, pi)"),
            param!("dt", float 0.01, "initial step; halved until converged"),
            param!("lz_tauQ", float 32.0, "quench time of the spectrum output"),
        ],
        outputs: &["kink_density.csv", "lz_spectrum.csv"],
        check: check_kz_integrable,
        run: run_kz_integrable,
    },
    ScenarioDef {
        name: "kzm-analytics",
        description: "numeric post-transition deviations against the closed-form oscillation",
        params: &[
            param!("tauQ", float 8.0, "quench time"),
            param!("g_target", float 0.0, "field where the ramp stops, in [0, 1)"),
            param!("nodes", int 2048, "quadrature nodes on (0, pi)"),
            param!("dt", float 0.005, "BdG step"),
            param!("sample_dt", float 0.05, "output spacing"),
        ],
        outputs: &["kzm_analytics.csv"],
        check: check_kzm_analytics,
        run: run_kzm_analytics,
    },
    ScenarioDef {
        name: "bcs-sweep",
        description: "self-consistent kink BCS fields, their derivatives and dispersions",
        params: &[
            param!("g_min", float 0.05, "first field"),
            param!("g_max", float 3.0, "last field"),
            param!("n_g", int 60, "number of fields"),
            param!("n_k", int 4096, "quadrature nodes"),
            param!("chunk", int 8, "continuation chunk length"),
            param!("dispersion_g", floats [0.5, 1.5, 2.4], "fields of the dispersion output"),
            param!("dispersion_nodes", int 256, "momentum nodes of the dispersion output"),
        ],
        outputs: &["bcs_sweep.csv", "bcs_derivatives.csv", "kink_dispersion.csv"],
        check: check_bcs_sweep,
        run: run_bcs_sweep,
    },
    ScenarioDef {
        name: "critical-point",
        description: "field where the BCS ground state changes character",
        params: &[
            param!("g_lo", float 2.2, "bracket start"),
            param!("g_hi", float 2.7, "bracket end"),
            param!("n_g", int 51, "scan points"),
            param!("n_k", int 4096, "quadrature nodes"),
        ],
        outputs: &["critical_point.json"],
        check: check_critical_point,
        run: run_critical_point,
    },
    ScenarioDef {
        name: "crossover",
        description: "field below which a bound pair is cheaper than two free kinks",
        params: &[
            param!("g_lo", float 0.5, "bracket start"),
            param!("g_hi", float 2.0, "bracket end"),
        ],
        outputs: &["crossover.json"],
        check: check_crossover,
        run: run_crossover,
    },
    ScenarioDef {
        name: "ed-gap",
        description: "exact-diagonalisation pair gap and its infinite-size extrapolation",
        params: &[
            param!("g", floats [0.0, 0.25, 0.5], "fields"),
            param!("L", ints [8, 10, 12, 14], "chain lengths"),
            param!("j2", float 1.0, "next-nearest coupling"),
            param!("threshold", float 1e-3, "ground doublet splitting below which E2 is used"),
        ],
        outputs: &["ed_gap.csv", "ed_gap.json"],
        check: check_ed_gap,
        run: run_ed_gap,
    },
    ScenarioDef {
        name: "ed-drive",
        description: "finite chain driven by a short field modulation, then free",
        params: &drive_params!(0.25, 0.005),
        outputs: &["ed_drive.csv", "ed_drive_fit.json"],
        check: check_drive,
        run: run_ed_drive,
    },
    ScenarioDef {
        name: "crash-test",
        description: "strong drive at zero field: spectrum and kink-train census",
        params: &drive_params!(0.0, 0.5),
        outputs: &["crash_test.csv", "crash_test.json"],
        check: check_drive,
        run: run_crash_test,
    },
    ScenarioDef {
        name: "pair-drive",
        description: "driven oscillator of the bosonic pair model",
        params: &[
            param!("g", float 0.25, "field"),
            param!("A", float 0.005, "drive amplitude"),
            param!("omega", float 8.0, "drive frequency"),
            param!("duration", float TAU, "drive duration"),
            param!("t_end", float 80.0, "end time"),
            param!("dt", float 0.05, "output spacing"),
        ],
        outputs: &["pair_drive.csv", "pair_coefficients.json"],
        check: check_pair_drive,
        run: run_pair_drive,
    },
    ScenarioDef {
        name: "amplitude-scan",
        description: "oscillation amplitude after finite-chain ramps of the J2=1 chain versus quench time",
        params: &[
            param!("L", int 12, "chain length"),
            param!("j2", float 1.0, "next-nearest coupling"),
            param!("tauQ", floats [2.0, 4.0, 8.0, 16.0], "quench times"),
            param!("g_start", float 4.0, "initial field"),
            param!("g_c", float 2.48135, "field crossed at t_c"),
            param!("g_target", float 0.25, "field held after the ramp"),
            param!("hold", float 60.0, "time at the final field"),
            param!("dt", float 0.01, "step"),
            param!("sample_dt", float 0.05, "output spacing"),
        ],
        outputs: &["amplitude_scan.csv"],
        check: check_amplitude_scan,
        run: run_amplitude_scan,
    },
];

pub fn find(name: &str) -> Option<&'static ScenarioDef> {
    SCENARIOS.iter().find(|s| s.name == name)
}

fn positive(c: &Config, keys: &[&str]) -> Result<(), String> {
    for k in keys {
        let v = c.float(k);
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("{k} must be positive"));
        }
    }
    Ok(())
}

fn at_least(c: &Config, key: &str, min: i64) -> Result<(), String> {
    if c.int(key) < min {
        return Err(format!("{key} must be at least {min}"));
    }
    Ok(())
}

fn chain_length(l: usize) -> Result<(), String> {
    if !(MIN_SITES..=MAX_SITES).contains(&l) {
        return Err(format!("L must be in [{MIN_SITES}, {MAX_SITES}]"));
    }
    Ok(())
}

fn check_kz_integrable(c: &Config) -> Result<(), String> {
    positive(c, &["dt", "lz_tauQ"])?;
    at_least(c, "nodes", 8)?;
    let taus = c.floats("tauQ");
    if taus.is_empty() || taus.iter().any(|&t| !(t > 0.0)) {
        return Err("tauQ must be a non-empty list of positive times".into());
    }
    Ok(())
}

/// State at the end of a linear ramp from deep in the paramagnet.
fn ramp_modes(
    tau: f64,
    g_target: f64,
    grid: &MomentumGrid<f64>,
) -> Result<(ModeEnsemble<f64>, RampProtocol<f64>), CliError> {
    let ramp = RampProtocol::linear(1.0, tau, g_target)?;
    let g0 = kz_ramp_start_field(tau);
    let t0 = ramp.critical_time().unwrap_or(0.0) - tau * (g0 - 1.0);
    Ok((ModeEnsemble::ground_state(grid, g0, t0), ramp))
}

fn run_kz_integrable(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let grid = MomentumGrid::infinite(c.usize("nodes"))?;
    let dt = c.float("dt");
    let taus = c.floats("tauQ");
    let mut rhos = Vec::new();
    let mut steps = Vec::new();
    for &tau in &taus {
        let (start, ramp) = ramp_modes(tau, 0.0, &grid)?;
        let (end, report) = evolve_modes(&start, &ramp, 0.0, dt)?;
        rhos.push(end.excitation_density());
        steps.push(report.dt);
    }
    out.csv("kink_density.csv", |w| {
        writeln!(w, "tauQ,rho,rho_closed,rel_error,dt")?;
        for ((&tau, &rho), &h) in taus.iter().zip(&rhos).zip(&steps) {
            let closed = kink_density_closed(tau);
            writeln!(w, "{tau},{rho:.15e},{closed:.15e},{:.6e},{h:e}", rho / closed - 1.0)?;
        }
        Ok(())
    })?;
    let lz_tau = c.float("lz_tauQ");
    let (start, ramp) = ramp_modes(lz_tau, 0.0, &grid)?;
    let (end, _) = evolve_modes(&start, &ramp, 0.0, dt)?;
    let p = end.excitation_probabilities();
    out.csv("lz_spectrum.csv", |w| {
        writeln!(w, "k,p,p_lz")?;
        for (&k, p) in end.grid.values.iter().zip(&p) {
            writeln!(w, "{k:.15e},{p:.15e},{:.15e}", lz_probability(lz_tau, k))?;
        }
        Ok(())
    })?;
    let fit = if taus.len() >= 3 {
        Some(fit_power_law(&taus, &rhos)?)
    } else {
        None
    };
    Ok(json!({ "power_law": fit }))
}

fn check_kzm_analytics(c: &Config) -> Result<(), String> {
    positive(c, &["tauQ", "dt", "sample_dt"])?;
    at_least(c, "nodes", 8)?;
    let g = c.float("g_target");
    if !(0.0..1.0).contains(&g) {
        return Err("g_target must be in [0, 1)".into());
    }
    Ok(())
}

fn run_kzm_analytics(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let tau = c.float("tauQ");
    let grid = MomentumGrid::infinite(c.usize("nodes"))?;
    let (start, ramp) = ramp_modes(tau, c.float("g_target"), &grid)?;
    let series = ramp_series(&start, &ramp, 0.0, c.float("dt"), c.float("sample_dt"))?;
    let rho = kink_density_closed(tau);
    let mut identity: f64 = 0.0;
    out.csv("kzm_analytics.csv", |w| {
        writeln!(
            w,
            "t_minus_tc,g,delta_x,delta_x_formula,delta_zz,delta_zz_formula,delta_yy,delta_yy_formula,rho_exc,extrapolated"
        )?;
        for r in series.rows.iter().filter(|r| r.t_rel > 0.0) {
            let f = kzm_oscillation(tau, r.t_rel, r.g);
            if r.t_rel >= 2.0 * tau.sqrt() {
                identity = identity.max((-r.delta_zz() - r.g * r.delta_x() - 2.0 * (1.0 - r.g) * rho).abs());
            }
            writeln!(
                w,
                "{:.10e},{:.10e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{}",
                r.t_rel,
                r.g,
                r.delta_x(),
                f.delta_x,
                r.delta_zz(),
                f.delta_zz,
                r.delta_yy(),
                f.delta_yy,
                r.rho_exc,
                f.extrapolated
            )?;
        }
        Ok(())
    })?;
    Ok(json!({
        "rho_closed": rho,
        "rho_final": series.last.excitation_density(),
        "identity_residual_max": identity,
    }))
}

fn bcs_options(c: &Config) -> BcsOptions<f64> {
    BcsOptions {
        n_k: c.usize("n_k"),
        ..Default::default()
    }
}

fn check_bcs_sweep(c: &Config) -> Result<(), String> {
    at_least(c, "n_g", 1)?;
    at_least(c, "n_k", 8)?;
    at_least(c, "chunk", 1)?;
    at_least(c, "dispersion_nodes", 8)?;
    if !(c.float("g_min") >= 0.0 && c.float("g_max") >= c.float("g_min")) {
        return Err("need 0 <= g_min <= g_max".into());
    }
    Ok(())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn run_bcs_sweep(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let opts = bcs_options(c);
    let gs = linspace(c.float("g_min"), c.float("g_max"), c.usize("n_g"));
    let states = sweep(&gs, &opts, c.usize("chunk"))?;
    let derivs = states
        .par_iter()
        .map(|s| derivative(s, &opts, DERIVATIVE_STEP))
        .collect::<Result<Vec<_>, _>>()?;
    out.csv("bcs_sweep.csv", |w| write_sweep_csv(&states, w))?;
    out.csv("bcs_derivatives.csv", |w| write_derivative_csv(&derivs, w))?;
    let grid = MomentumGrid::infinite(c.usize("dispersion_nodes"))?;
    let curves = c
        .floats("dispersion_g")
        .iter()
        .map(|&g| Ok(dispersion(&solve_with(g, &opts, None)?, &grid)))
        .collect::<Result<Vec<_>, CliError>>()?;
    out.csv("kink_dispersion.csv", |w| {
        writeln!(w, "g,k,u,v,omega")?;
        for d in &curves {
            for m in &d.samples {
                writeln!(w, "{},{:.15e},{:.15e},{:.15e},{:.15e}", d.g, m.k, m.u, m.v, m.omega)?;
            }
        }
        Ok(())
    })?;
    let min_gap = states
        .iter()
        .map(|s| (s.g, s.min_omega()))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    Ok(json!({ "min_kink_gap": min_gap.map(|(g, w)| json!({ "g": g, "omega": w })) }))
}

fn check_critical_point(c: &Config) -> Result<(), String> {
    at_least(c, "n_g", 3)?;
    at_least(c, "n_k", 8)?;
    if !(c.float("g_hi") > c.float("g_lo") && c.float("g_lo") > 0.0) {
        return Err("need 0 < g_lo < g_hi".into());
    }
    Ok(())
}

fn run_critical_point(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let g = locate_critical_with(c.float("g_lo"), c.float("g_hi"), c.usize("n_g"), &bcs_options(c))?;
    let result = json!({ "g_c_bcs": g });
    out.json("critical_point.json", &result)?;
    Ok(result)
}

fn check_crossover(c: &Config) -> Result<(), String> {
    if !(c.float("g_hi") > c.float("g_lo") && c.float("g_lo") > 0.0) {
        return Err("need 0 < g_lo < g_hi".into());
    }
    Ok(())
}

fn run_crossover(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let (lo, hi) = (c.float("g_lo"), c.float("g_hi"));
    let result = json!({
        "perturbative": locate_crossover_in(CrossoverMethod::Perturbative, lo, hi)?,
        "closed_form": 8.0 - 4.0 * 3f64.sqrt(),
        "full_bcs": locate_crossover_in(CrossoverMethod::FullBcs, lo, hi)?,
    });
    out.json("crossover.json", &result)?;
    Ok(result)
}

fn check_ed_gap(c: &Config) -> Result<(), String> {
    let ls = c.usizes("L");
    if ls.len() < 3 {
        return Err("L needs at least three lengths for the extrapolation".into());
    }
    ls.iter().try_for_each(|&l| chain_length(l))?;
    positive(c, &["threshold"])?;
    if c.floats("g").is_empty() {
        return Err("g must not be empty".into());
    }
    Ok(())
}

fn run_ed_gap(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let ls = c.usizes("L");
    let (j2, threshold) = (c.float("j2"), c.float("threshold"));
    let results = c
        .floats("g")
        .iter()
        .map(|&g| Ok((g, pair_gap_ed(g, j2, &ls, threshold)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    out.csv("ed_gap.csv", |w| {
        writeln!(w, "g,L,E0,E1,E2,gap,doublet")?;
        for (g, r) in &results {
            for p in &r.points {
                writeln!(
                    w,
                    "{g},{},{:.15e},{:.15e},{:.15e},{:.15e},{}",
                    p.l, p.e0, p.e1, p.e2, p.gap, p.doublet
                )?;
            }
        }
        Ok(())
    })?;
    let summary: Vec<Json> = results
        .iter()
        .map(|(g, r)| {
            json!({
                "g": g,
                "extrapolated": r.extrapolated,
                "pair_model": pair_gap(*g),
                "decay_length": r.decay_length,
                "fit_rms": r.fit_rms,
                "warning": r.warning,
            })
        })
        .collect();
    out.json("ed_gap.json", &summary)?;
    Ok(json!({ "gaps": summary }))
}

fn check_drive(c: &Config) -> Result<(), String> {
    chain_length(c.usize("L"))?;
    positive(c, &["omega", "duration", "t_end", "dt", "sample_dt"])?;
    if c.float("t_end") <= c.float("duration") + 20.0 * c.float("sample_dt") {
        return Err("t_end must leave a free-evolution window after the drive".into());
    }
    Ok(())
}

struct DriveRun {
    trajectory: EdTrajectory<f64>,
    sx_ground: f64,
    post: Signal<f64>,
}

fn ed_drive(c: &Config) -> Result<DriveRun, CliError> {
    let (g, duration, t_end) = (c.float("g"), c.float("duration"), c.float("t_end"));
    let (_, gs) = ground_state(c.usize("L"), g, c.float("j2"))?;
    let drive = RampProtocol::sinusoidal_drive(g, c.float("A"), c.float("omega"), duration)?;
    let trajectory = evolve_ed_fixed(&gs, &drive, t_end, c.float("dt"), c.float("sample_dt"))?;
    let post = trajectory.sx_signal()?.window(duration, t_end)?;
    Ok(DriveRun {
        trajectory,
        sx_ground: measure(&gs).sx,
        post,
    })
}

fn fit_json(f: &OscillationFit<f64>) -> Json {
    json!({
        "amplitude": f.amplitude,
        "frequency": f.frequency,
        "phase": f.phase,
        "offset": f.offset,
        "decay_time": f.decay_time,
        "q": f.q,
        "undamped": f.undamped,
        "residual_rms": f.residual_rms,
    })
}

fn run_ed_drive(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let run = ed_drive(c)?;
    out.csv("ed_drive.csv", |w| run.trajectory.write_csv(w))?;
    let g = c.float("g");
    let omega_pair = pair_gap(g);
    let peak = dominant_frequency(&run.post)?;
    let fit = fit_damped_sinusoid(&run.post, peak.frequency)?;
    let drive = RampProtocol::sinusoidal_drive(g, c.float("A"), c.float("omega"), c.float("duration"))?;
    let model = driven_response(g, drive, c.float("t_end"), c.float("sample_dt"))?;
    let model_post = model.signal.window(c.float("duration"), c.float("t_end"))?;
    let model_fit = fit_damped_sinusoid(&model_post, omega_pair)?;
    let result = json!({
        "sx_ground": run.sx_ground,
        "peak_frequency": peak.frequency,
        "pair_gap": omega_pair,
        "fit": fit_json(&fit),
        "oscillator_amplitude": model_fit.amplitude,
    });
    out.json("ed_drive_fit.json", &result)?;
    Ok(result)
}

fn run_crash_test(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let run = ed_drive(c)?;
    out.csv("crash_test.csv", |w| run.trajectory.write_csv(w))?;
    let opts = SpectralOptions {
        taper: Taper::Hann,
        ..Default::default()
    };
    let peaks = spectral_peaks(&run.post, &opts, 4, 0.05)?;
    let last = run.trajectory.rows.last().expect("trajectory has rows");
    let result = json!({
        "peaks": peaks.iter().map(|p| json!({ "frequency": p.frequency, "amplitude": p.amplitude })).collect::<Vec<_>>(),
        "train_densities": last.trains,
    });
    out.json("crash_test.json", &result)?;
    Ok(result)
}

fn check_pair_drive(c: &Config) -> Result<(), String> {
    positive(c, &["omega", "duration", "t_end", "dt"])?;
    if c.float("g") < 0.0 {
        return Err("g must be non-negative".into());
    }
    Ok(())
}

fn run_pair_drive(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let g = c.float("g");
    let drive = RampProtocol::sinusoidal_drive(g, c.float("A"), c.float("omega"), c.float("duration"))?;
    let r = driven_response(g, drive, c.float("t_end"), c.float("dt"))?;
    out.csv("pair_drive.csv", |w| r.write_csv(w))?;
    let coefficients = pair_coefficients(g);
    out.json("pair_coefficients.json", &coefficients)?;
    Ok(json!({
        "omega": r.omega,
        "final_amplitude": r.final_amplitude(),
        "valid": coefficients.valid,
    }))
}

fn check_amplitude_scan(c: &Config) -> Result<(), String> {
    chain_length(c.usize("L"))?;
    positive(c, &["g_c", "hold", "dt", "sample_dt"])?;
    let taus = c.floats("tauQ");
    if taus.is_empty() || taus.iter().any(|&t| !(t > 0.0)) {
        return Err("tauQ must be a non-empty list of positive times".into());
    }
    if !(c.float("g_start") > c.float("g_c") && c.float("g_c") > c.float("g_target") && c.float("g_target") >= 0.0) {
        return Err("need g_start > g_c > g_target >= 0".into());
    }
    Ok(())
}

fn run_amplitude_scan(c: &Config, out: &mut Outputs) -> Result<Json, CliError> {
    let (l, j2) = (c.usize("L"), c.float("j2"));
    let (g_start, g_c, g_target) = (c.float("g_start"), c.float("g_c"), c.float("g_target"));
    let (dt, sample_dt, hold) = (c.float("dt"), c.float("sample_dt"), c.float("hold"));
    let (_, gs) = ground_state(l, g_start, j2)?;
    let taus = c.floats("tauQ");
    let fits = taus
        .iter()
        .map(|&tau| {
            let ramp = RampProtocol::linear(g_c, tau, g_target)?;
            let mut start = gs.clone();
            start.t = ramp.critical_time().unwrap_or(0.0) - tau * (g_start / g_c - 1.0);
            start.g = g_start;
            let mut end = evolve_ed_fixed(&start, &ramp, 0.0, dt, sample_dt)?.last;
            end.t = 0.0;
            let free = evolve_ed_fixed(&end, &RampProtocol::constant(g_target), hold, dt, sample_dt)?;
            let signal = free.sx_signal()?;
            let peak = dominant_frequency(&signal)?;
            Ok((tau, fit_damped_sinusoid(&signal, peak.frequency)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    out.csv("amplitude_scan.csv", |w| {
        writeln!(w, "tauQ,amplitude,frequency,decay_time,q")?;
        for (tau, f) in &fits {
            writeln!(
                w,
                "{tau},{:.15e},{:.15e},{:.15e},{:.15e}",
                f.amplitude, f.frequency, f.decay_time, f.q
            )?;
        }
        Ok(())
    })?;
    let amps: Vec<f64> = fits.iter().map(|(_, f)| f.amplitude).collect();
    let law = if taus.len() >= 3 {
        fit_power_law(&taus, &amps).ok()
    } else {
        None
    };
    Ok(json!({ "power_law": law, "pair_gap": pair_gap(g_target) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    #[test]
    fn names_are_unique_and_defaults_validate() {
        for (i, s) in SCENARIOS.iter().enumerate() {
            assert!(SCENARIOS[..i].iter().all(|t| t.name != s.name));
            let c = RawConfig::default().resolve(s.name).unwrap();
            assert_eq!(c.params.len(), s.params.len());
        }
        assert_eq!(SCENARIOS.len(), 10);
    }

    #[test]
    fn checks_reject_bad_values() {
        let bad = [
            ("kz-integrable", "tauQ = [8.0, -1.0]"),
            ("kzm-analytics", "g_target = 1.0"),
            ("bcs-sweep", "g_max = -1.0"),
            ("critical-point", "g_lo = 3.0"),
            ("ed-gap", "L = [8, 10]"),
            ("ed-drive", "L = 30"),
            ("crash-test", "t_end = 5.0"),
            ("pair-drive", "dt = 0.0"),
            ("amplitude-scan", "g_target = 3.0"),
        ];
        for (name, text) in bad {
            assert!(RawConfig::parse(text).unwrap().resolve(name).is_err(), "{name}: {text}");
        }
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
    }
}
