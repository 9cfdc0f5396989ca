use std::f64::consts::PI;
use std::path::PathBuf;

use lrsphp::coupling::{
    b_map, dominant_peaks, efficiency_spectrum, level_crossings, mismatch_b, overlap_surface,
    propagate_coupled_modes, CouplerResponse, CouplerSpec, LongRangeFilm,
};
use lrsphp::dispersion::{dispersion_curve, Geometry};
use lrsphp::material::permittivity;
use lrsphp::modes::{build_profile, normalize_flux};
use lrsphp::quantum::{
    apply_transfer, beat_period_ps, build_biphoton_state, energy_time_trace, frequency_trace,
    outcome_probabilities, trace_visibility, transfer_matrix, transferred_shell_violations, GratingContext,
    QuantumError, Scheme, SpectralWeight, StateDump, TransferMatrix, TwoModeState,
};
use lrsphp::units::{wavenumber_cm1, UM};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{GridSpec, RunConfig};
use crate::error::{stage, CliError};
use crate::output::{ensure_dir, write_file, Cell, Table};

pub const PERMITTIVITY_GRID: GridSpec = GridSpec::new(600.0, 1100.0, 501);
pub const DISPERSION_GRID: GridSpec = GridSpec::new(794.0, 968.0, 175);
pub const OVERLAP_GRID: GridSpec = GridSpec::new(-0.2, 0.2, 201);
pub const WAVELENGTH_GRID: GridSpec = GridSpec::new(10.3, 12.6, 2301);

/// Local maxima at or above this fraction of the spectrum maximum count as peaks.
pub const PEAK_FRACTION: f64 = 0.5;

fn eps_d(cfg: &RunConfig) -> Complex64 {
    Complex64::new(cfg.eps_d, 0.0)
}

fn film(cfg: &RunConfig) -> Result<LongRangeFilm, CliError> {
    LongRangeFilm::new(cfg.material.clone(), eps_d(cfg), cfg.thickness_um * UM).map_err(stage("dispersion"))
}

fn coupler(cfg: &RunConfig) -> Result<CouplerSpec, CliError> {
    CouplerSpec::new(
        cfg.grating_period_um,
        cfg.grating_order,
        cfg.coupler_length_um,
        cfg.theta_rad,
        cfg.coupling_gl / cfg.coupler_length_um,
    )
    .map_err(|e| CliError::config(e.to_string()))
}

fn prepare(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_dir(&cfg.out)
}

pub fn permittivity_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let grid = cfg.grid_or(PERMITTIVITY_GRID).points();
    prepare(cfg)?;
    let mut table = Table::new(&["omega_cm1", "re_eps", "im_eps"]);
    for w in grid {
        let eps = permittivity(&cfg.material, w).ok().map(|p| p.value);
        table.push(vec![w.into(), eps.map(|e| e.re).into(), eps.map(|e| e.im).into()]);
    }
    Ok(vec![table.write(&cfg.out, "permittivity", cfg.format)?])
}

pub fn dispersion_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let grid = cfg.grid_or(DISPERSION_GRID).points();
    let model = film(cfg)?;
    prepare(cfg)?;
    let single = dispersion_curve(&cfg.material, eps_d(cfg), Geometry::SingleInterface, &grid)
        .map_err(stage("dispersion"))?;
    let slab = dispersion_curve(
        &cfg.material,
        eps_d(cfg),
        Geometry::Slab {
            thickness: model.thickness,
            branch: model.branch(),
        },
        &grid,
    )
    .map_err(stage("dispersion"))?;
    let mut table = Table::new(&[
        "omega_cm1",
        "light_line_cm1",
        "interface_re_beta_cm1",
        "interface_im_beta_cm1",
        "interface_re_n_eff",
        "film_re_beta_cm1",
        "film_im_beta_cm1",
        "film_re_n_eff",
    ]);
    for (a, b) in single.iter().zip(&slab) {
        let sa = a.mode.as_ref().ok();
        let sb = b.mode.as_ref().ok();
        table.push(vec![
            a.omega.into(),
            a.light_line.into(),
            sa.map(|m| m.beta.re).into(),
            sa.map(|m| m.beta.im).into(),
            sa.map(|m| m.n_eff.re).into(),
            sb.map(|m| m.beta.re).into(),
            sb.map(|m| m.beta.im).into(),
            sb.map(|m| m.n_eff.re).into(),
        ]);
    }
    Ok(vec![table.write(&cfg.out, "dispersion", cfg.format)?])
}

pub fn mode_profile_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let h = cfg.thickness_um;
    let grid = cfg.grid_or(GridSpec::new(-h - 4.0 * h.max(1.0), 4.0 * h.max(1.0), 801)).points();
    let model = film(cfg)?;
    let mode = model.mode(cfg.omega_cm1).map_err(stage("dispersion"))?;
    let profile = normalize_flux(&build_profile(&mode)).map_err(stage("mode profile"))?;
    prepare(cfg)?;
    let xs: Vec<f64> = grid.iter().map(|x| x * UM).collect();
    let mut table = Table::new(&["x_um", "region", "re_psi_x", "im_psi_x", "re_psi_z", "im_psi_z"]);
    for (s, x_um) in profile.sample(&xs).into_iter().zip(grid) {
        table.push(vec![
            x_um.into(),
            s.region.label().into(),
            s.fx.re.into(),
            s.fx.im.into(),
            s.fz.re.into(),
            s.fz.im.into(),
        ]);
    }
    Ok(vec![table.write(&cfg.out, "mode_profile", cfg.format)?])
}

pub fn overlap_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let axis = cfg.grid_or(OVERLAP_GRID).points();
    prepare(cfg)?;
    let z = cfg.coupler_length_um;
    let mut table = Table::new(&["dbeta1_rad_per_um", "dbeta2_rad_per_um", "c_normalized"]);
    for (a, b, v) in overlap_surface(&axis, &axis, z, z) {
        table.push(vec![a.into(), b.into(), v.into()]);
    }
    Ok(vec![table.write(&cfg.out, "overlap", cfg.format)?])
}

struct PhaseMatch {
    model: LongRangeFilm,
    spec: CouplerSpec,
    grid: Vec<f64>,
    efficiency: Vec<lrsphp::coupling::EfficiencyPoint>,
    b_values: Vec<Option<f64>>,
    peaks: Vec<lrsphp::coupling::EfficiencyPoint>,
}

fn phase_match(cfg: &RunConfig) -> Result<PhaseMatch, CliError> {
    let grid = cfg.grid_or(WAVELENGTH_GRID).points();
    let model = film(cfg)?;
    let spec = coupler(cfg)?;
    let efficiency = efficiency_spectrum(&model, &spec, &grid).map_err(stage("coupler"))?;
    let b_values = b_map(&model, &grid, &[spec.theta])
        .into_iter()
        .map(|p| p.map(|p| p.b_value))
        .collect();
    let peaks = dominant_peaks(&efficiency, PEAK_FRACTION);
    Ok(PhaseMatch {
        model,
        spec,
        grid,
        efficiency,
        b_values,
        peaks,
    })
}

pub fn phase_match_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let pm = phase_match(cfg)?;
    prepare(cfg)?;
    let thetas = cfg.theta_grid.points();
    let map = b_map(&pm.model, &pm.grid, &thetas);
    let mut bt = Table::new(&["wavelength_um", "theta_rad", "b_per_um"]);
    for (i, &lam) in pm.grid.iter().enumerate() {
        for (j, &th) in thetas.iter().enumerate() {
            bt.push(vec![lam.into(), th.into(), map[i * thetas.len() + j].map(|p| p.b_value).into()]);
        }
    }
    let mut et = Table::new(&["wavelength_um", "wavenumber_cm1", "b_per_um", "efficiency"]);
    for (p, b) in pm.efficiency.iter().zip(&pm.b_values) {
        et.push(vec![
            p.wavelength.into(),
            wavenumber_cm1(p.wavelength).into(),
            (*b).into(),
            p.efficiency.into(),
        ]);
    }
    let mut pt = Table::new(&["wavelength_um", "wavenumber_cm1", "efficiency"]);
    for p in &pm.peaks {
        pt.push(vec![p.wavelength.into(), wavenumber_cm1(p.wavelength).into(), p.efficiency.into()]);
    }
    Ok(vec![
        bt.write(&cfg.out, "b_map", cfg.format)?,
        et.write(&cfg.out, "efficiency", cfg.format)?,
        pt.write(&cfg.out, "peaks", cfg.format)?,
    ])
}

#[derive(Serialize)]
struct PeakReport {
    wavelength_um: f64,
    wavenumber_cm1: f64,
    efficiency: f64,
    t: Complex64,
    kappa: Complex64,
    detuning_rad_per_um: f64,
}

#[derive(Serialize)]
struct BiphotonReport {
    entries: usize,
    pump_cm1: f64,
    pump_bandwidth_cm1: f64,
    shell_violations_before_transfer: usize,
    shell_violations_after_transfer: usize,
    peak_omega1_cm1: f64,
    peak_omega2_cm1: f64,
}

#[derive(Serialize)]
struct CorrelationReport {
    scheme: Scheme,
    outcome: &'static str,
    prefactor: f64,
    visibility: f64,
    trace_visibility: f64,
    beat_period_ps: f64,
}

#[derive(Serialize)]
struct PipelineReport<'a> {
    config: &'a RunConfig,
    branch: &'static str,
    peaks: Vec<PeakReport>,
    transfer_matrix_re: [[f64; 4]; 4],
    transfer_matrix_im: [[f64; 4]; 4],
    outcomes: lrsphp::quantum::Outcomes,
    output_state: StateDump,
    biphoton: BiphotonReport,
    correlation: CorrelationReport,
}

/// Peak wavelength refined to the nearest phase-matching crossing.
fn refine(pm: &PhaseMatch, peak: f64) -> f64 {
    let step = (pm.grid[1] - pm.grid[0]).abs();
    let level = pm.spec.order as f64 / pm.spec.period;
    let lo = (peak - 3.0 * step).max(pm.grid[0]);
    let hi = (peak + 3.0 * step).min(*pm.grid.last().unwrap());
    let local: Vec<f64> = (0..=60).map(|i| lo + (hi - lo) * i as f64 / 60.0).collect();
    level_crossings(&pm.model, pm.spec.theta, level, &local)
        .into_iter()
        .min_by(|a, b| (a - peak).abs().total_cmp(&(b - peak).abs()))
        .unwrap_or(peak)
}

fn respond(pm: &PhaseMatch, lam: f64) -> Result<CouplerResponse, CliError> {
    let m = mismatch_b(&pm.model, lam, pm.spec.theta).map_err(stage("coupler"))?;
    propagate_coupled_modes(&pm.spec, m.delta_beta).map_err(stage("coupler"))
}

pub fn pipeline_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let pm = phase_match(cfg)?;
    if pm.peaks.len() != 2 {
        return Err(CliError::Numerical {
            stage: "coupler",
            message: format!("expected two phase-matching peaks, found {}", pm.peaks.len()),
        });
    }
    let mut lams: Vec<f64> = pm.peaks.iter().map(|p| refine(&pm, p.wavelength)).collect();
    lams.sort_by(|a, b| a.total_cmp(b));
    let (w1, w2) = (wavenumber_cm1(lams[0]), wavenumber_cm1(lams[1]));
    let r1 = respond(&pm, lams[0])?;
    let r2 = respond(&pm, lams[1])?;
    let tm = transfer_matrix(r1.t, r1.kappa, r2.t, r2.kappa).map_err(stage("transfer"))?;
    let input = TwoModeState::photon_pair(cfg.scheme, w1, w2).map_err(stage("transfer"))?;
    let output = apply_transfer(&input, &tm);
    let outcomes = outcome_probabilities(&output);

    let pump = cfg.pump_cm1.unwrap_or(w1 + w2);
    let mut omegas: Vec<f64> = (0..)
        .map(|i| (w2 - 3.0).floor() + 0.1 * i as f64)
        .take_while(|&w| w <= w1 + 3.0)
        .chain([w1, w2])
        .collect();
    omegas.sort_by(|a, b| a.total_cmp(b));
    omegas.dedup();
    let pairs: Vec<(f64, f64)> = omegas.iter().flat_map(|&a| omegas.iter().map(move |&b| (a, b))).collect();
    let ctx = GratingContext::new(&pm.model, pm.spec, pm.spec).with_grid(&omegas);
    let spectrum = build_biphoton_state(pump, cfg.pump_bandwidth_cm1, &pairs, &SpectralWeight::Flat, |a, b| {
        ctx.coupling(a, b)
    })
    .map_err(stage("biphoton"))?;
    let couplers = |a: f64, b: f64| -> Result<TransferMatrix, QuantumError> {
        let grating = lrsphp::coupling::grating_vector(&pm.spec);
        let ra = propagate_coupled_modes(&pm.spec, ctx.residual_mismatch(&pm.spec, a)? + grating)?;
        let rb = propagate_coupled_modes(&pm.spec, ctx.residual_mismatch(&pm.spec, b)? + grating)?;
        transfer_matrix(ra.t, ra.kappa, rb.t, rb.kappa)
    };
    let transferred = spectrum.transfer(couplers).map_err(stage("transfer"))?;
    let pair = spectrum.pair_state(w1, w2).ok_or_else(|| CliError::Numerical {
        stage: "correlation",
        message: "no biphoton entries".into(),
    })?;
    let peak = spectrum.peak().expect("non-empty spectrum");

    let prefactor = outcomes.polariton_polariton;
    let period = beat_period_ps(w1, w2);
    let (header, trace) = match cfg.scheme {
        Scheme::Frequency => {
            let delays: Vec<f64> = (0..=1000).map(|i| 5.0 * period * i as f64 / 1000.0).collect();
            ("chi_diff_ps", frequency_trace(&pair, prefactor, w1, w2, &delays))
        }
        Scheme::EnergyTime => {
            let phases: Vec<f64> = (0..=720).map(|i| 4.0 * PI * i as f64 / 720.0).collect();
            ("chi_diff_rad", energy_time_trace(&pair, prefactor, &phases))
        }
    };

    let report = PipelineReport {
        config: cfg,
        branch: pm.model.branch().label(),
        peaks: lams
            .iter()
            .zip([r1, r2])
            .map(|(&lam, r)| PeakReport {
                wavelength_um: lam,
                wavenumber_cm1: wavenumber_cm1(lam),
                efficiency: r.efficiency(),
                t: r.t,
                kappa: r.kappa,
                detuning_rad_per_um: r.detuning,
            })
            .collect(),
        transfer_matrix_re: tm.m.map(|row| row.map(|z| z.re)),
        transfer_matrix_im: tm.m.map(|row| row.map(|z| z.im)),
        outcomes,
        output_state: output.into(),
        biphoton: BiphotonReport {
            entries: spectrum.entries.len(),
            pump_cm1: pump,
            pump_bandwidth_cm1: cfg.pump_bandwidth_cm1,
            shell_violations_before_transfer: spectrum.shell_violations(),
            shell_violations_after_transfer: transferred_shell_violations(&spectrum, &transferred),
            peak_omega1_cm1: peak.omega1,
            peak_omega2_cm1: peak.omega2,
        },
        correlation: CorrelationReport {
            scheme: cfg.scheme,
            outcome: "polariton_polariton",
            prefactor,
            visibility: pair.visibility(),
            trace_visibility: trace_visibility(&trace),
            beat_period_ps: period,
        },
    };

    prepare(cfg)?;
    let report_path = cfg.out.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report is plain data");
    text.push('\n');
    write_file(&report_path, &text)?;
    let mut table = Table::new(&[header, "g2"]);
    for (x, g) in trace {
        table.push(vec![Cell::from(x), Cell::from(g)]);
    }
    let trace_path = table.write(&cfg.out, "correlation", cfg.format)?;
    Ok(vec![report_path, trace_path])
}
