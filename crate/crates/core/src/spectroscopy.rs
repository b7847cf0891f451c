//! Numerical experiments: single-tone two-state sweeps, coupling sweeps, and
//! the two-tone three-state ladder, producing figure-ready datasets.
//!
//! Sweep points fan out across a rayon worker pool and are gathered in plan
//! order; every run is seedless and deterministic, so reruns produce
//! byte-identical output.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::AngularBasis;
use crate::device::{derive_modes, CanonicalModes, DeviceParams};
use crate::error::{Result, SimError};
use crate::hamiltonian::build_hamiltonians;
use crate::lindblad::{
    build_gamma, build_lambda, evolve, ground_state, resolution_bound, DensityTrajectory,
    DriveWaveform, GammaTensor, JumpSet, LambdaTensor, SpinProjection,
};
use crate::perturbation::{perturb, EigenSystem};

/// Default detuning 2 pi * 50 kHz in rad/ns.
pub const DEFAULT_DETUNING: f64 = 2.0 * std::f64::consts::PI * 50e3 * 1e-9;
/// Default readout time t_2 = 100 us in ns.
pub const DEFAULT_T_READOUT: f64 = 1.0e5;
/// Default ladder horizon in ns; long enough for the occupations to settle.
pub const DEFAULT_T_LADDER: f64 = 3.0e5;
/// Default single-tone amplitude (nV).
pub const DEFAULT_VO: f64 = 1.0;
/// Default ladder tone amplitudes (nV).
pub const DEFAULT_VP: f64 = 0.5;
pub const DEFAULT_VC: f64 = 1.0;
/// Default frequency grid: 801 points spanning +- 20/tau around eps_21.
pub const DEFAULT_OMEGA_POINTS: usize = 801;
pub const DEFAULT_SPAN_LINEWIDTHS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    TwoStateSweep,
    GSweep,
    Ladder,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::TwoStateSweep => "two_state_sweep",
            Experiment::GSweep => "g_sweep",
            Experiment::Ladder => "ladder",
        }
    }
}

/// Everything a sweep needs beyond the device parameters.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub experiment: Experiment,
    /// Retained eigenstate ranks, zero-based and ascending in energy.
    pub state_set: Vec<usize>,
    /// Drive-frequency grid (rad/ns); empty selects the default grid around
    /// the computed transition.
    pub omega_grid: Vec<f64>,
    /// Coupling values for the g sweep (rad/ns).
    pub g_list: Vec<f64>,
    /// Readout / integration horizon (ns).
    pub t_readout: f64,
    /// Tone detuning added above resonance (rad/ns).
    pub detuning: f64,
    /// Single-tone amplitude (nV).
    pub vo: f64,
    /// Ladder tone amplitudes (nV).
    pub vp: f64,
    pub vc: f64,
    /// Perturbation order for states and energies.
    pub order: u8,
    /// Doubled spin cutoff of the physical basis (2 s_max).
    pub two_s_max: u32,
    /// Integrator step (ns); None picks half the resolution bound.
    pub dt: Option<f64>,
    /// Trajectory storage stride in steps (trajectories only).
    pub stride: usize,
    /// Worker-pool width; None uses the global pool.
    pub jobs: Option<usize>,
}

impl SweepPlan {
    pub fn two_state() -> Self {
        SweepPlan {
            experiment: Experiment::TwoStateSweep,
            state_set: vec![0, 1],
            omega_grid: Vec::new(),
            g_list: Vec::new(),
            t_readout: DEFAULT_T_READOUT,
            detuning: DEFAULT_DETUNING,
            vo: DEFAULT_VO,
            vp: DEFAULT_VP,
            vc: DEFAULT_VC,
            order: 2,
            two_s_max: 6,
            dt: None,
            stride: 0,
            jobs: None,
        }
    }

    pub fn g_sweep(g_list: Vec<f64>) -> Self {
        SweepPlan {
            experiment: Experiment::GSweep,
            g_list,
            ..SweepPlan::two_state()
        }
    }

    pub fn ladder() -> Self {
        SweepPlan {
            experiment: Experiment::Ladder,
            state_set: vec![0, 1, 2],
            t_readout: DEFAULT_T_LADDER,
            ..SweepPlan::two_state()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_readout > 0.0) {
            return Err(SimError::Config("t_readout must be > 0".into()));
        }
        if !self.omega_grid.is_empty() && !self.omega_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(SimError::Config(
                "omega grid must be strictly increasing".into(),
            ));
        }
        if self.experiment == Experiment::GSweep {
            if self.g_list.is_empty() {
                return Err(SimError::Config("g sweep needs a non-empty g list".into()));
            }
            if !self.g_list.windows(2).all(|w| w[0] < w[1]) {
                return Err(SimError::Config("g list must be strictly increasing".into()));
            }
        }
        Ok(())
    }
}

/// The full operator stack reduced to a retained state set.
pub struct ReducedModel {
    pub modes: CanonicalModes,
    pub eig: EigenSystem,
    pub gamma: GammaTensor,
    /// eps_k for k in the retained set (rad/ns)
    pub energies: Vec<f64>,
    /// drive operator in the retained eigenbasis
    pub theta: Array2<Complex64>,
    pub lambda: LambdaTensor,
    pub spin: SpinProjection,
}

/// Build modes, operators, eigensystem and the retained-set tables in one go.
pub fn assemble(
    params: &DeviceParams,
    order: u8,
    two_s_max: u32,
    set: &[usize],
) -> Result<ReducedModel> {
    let modes = derive_modes(params)?;
    let basis = AngularBasis::new(two_s_max);
    let ops = build_hamiltonians(params, &modes, &basis);
    let eig = perturb(&ops.spectrum, &ops.dh, &basis, order)?;
    let gamma = build_gamma(&params.rates, &modes);
    let jumps = JumpSet::build(&eig, &basis, set);
    let lambda = build_lambda(&gamma, &jumps);
    let theta = eig.project(&ops.theta, set);
    let spin = SpinProjection::build(&eig, &basis, set);
    let energies = set.iter().map(|&k| eig.energies[k]).collect();
    Ok(ReducedModel {
        modes,
        eig,
        gamma,
        energies,
        theta,
        lambda,
        spin,
    })
}

/// One record per plan point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Omega (two-state) or g (recorded per result) in rad/ns.
    pub x: f64,
    pub spin: [f64; 3],
    pub rho_diag: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub g: f64,
    pub order: u8,
    pub t_readout: f64,
    pub dt: f64,
    pub rows: Vec<SweepRow>,
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("worker pool")
            .install(f),
        _ => f(),
    }
}

fn default_omega_grid(center: f64, tau: f64, points: usize, span_linewidths: f64) -> Vec<f64> {
    let span = span_linewidths / tau;
    let n = points.max(2);
    (0..n)
        .map(|i| center - span + 2.0 * span * i as f64 / (n - 1) as f64)
        .collect()
}

/// Uniform step for a frequency sweep: half the resolution bound at the most
/// demanding grid point, so every point integrates with the same dt.
fn sweep_dt(plan: &SweepPlan, energies: &[f64], grid: &[f64]) -> f64 {
    plan.dt.unwrap_or_else(|| {
        let worst = DriveWaveform::single(plan.vo, grid.last().copied().unwrap_or(0.0).max(grid[0]));
        0.5 * resolution_bound(energies, &worst)
    })
}

/// Rabi-resonance sweep over the two lowest retained states: evolve from the
/// ground state to t_readout with V(t) = Vo sin(Omega t) and record the spin
/// expectation per grid point.
pub fn run_two_state(params: &DeviceParams, plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let set = [0usize, 1];
    let model = assemble(params, plan.order, plan.two_s_max, &set)?;
    let eps21 = model.energies[1] - model.energies[0];
    let tau = 1.0 / model.lambda.get(0, 1, 0, 1).norm();
    let grid = if plan.omega_grid.is_empty() {
        default_omega_grid(eps21, tau, DEFAULT_OMEGA_POINTS, DEFAULT_SPAN_LINEWIDTHS)
    } else {
        plan.omega_grid.clone()
    };
    let dt = sweep_dt(plan, &model.energies, &grid);
    let rho0 = ground_state(set.len());
    let rows: Result<Vec<SweepRow>> = with_pool(plan.jobs, || {
        grid.par_iter()
            .map(|&omega| {
                let drive = DriveWaveform::single(plan.vo, omega);
                let traj = evolve(
                    &model.energies,
                    &model.theta,
                    &model.lambda,
                    &drive,
                    &rho0,
                    plan.t_readout,
                    dt,
                    0,
                    &model.spin,
                )?;
                let rho = traj.final_rho();
                Ok(SweepRow {
                    x: omega,
                    spin: traj.final_spin(),
                    rho_diag: (0..set.len()).map(|k| rho[[k, k]].re).collect(),
                })
            })
            .collect()
    });
    Ok(SweepResult {
        experiment: Experiment::TwoStateSweep,
        g: params.g,
        order: plan.order,
        t_readout: plan.t_readout,
        dt,
        rows: rows?,
    })
}

/// Single fixed-frequency trajectory of the two-state system, driven at
/// Omega = eps_21 + detuning; the time-domain companion to the sweep.
pub fn two_state_trajectory(
    params: &DeviceParams,
    plan: &SweepPlan,
) -> Result<(DensityTrajectory, f64)> {
    plan.validate()?;
    let set = [0usize, 1];
    let model = assemble(params, plan.order, plan.two_s_max, &set)?;
    let eps21 = model.energies[1] - model.energies[0];
    let omega = eps21 + plan.detuning;
    let drive = DriveWaveform::single(plan.vo, omega);
    let dt = plan
        .dt
        .unwrap_or_else(|| 0.5 * resolution_bound(&model.energies, &drive));
    let steps = (plan.t_readout / dt).round() as usize;
    let stride = if plan.stride > 0 {
        plan.stride
    } else {
        (steps / 4000).max(1)
    };
    let traj = evolve(
        &model.energies,
        &model.theta,
        &model.lambda,
        &drive,
        &ground_state(set.len()),
        plan.t_readout,
        dt,
        stride,
        &model.spin,
    )?;
    Ok((traj, omega))
}

/// Lineshape per coupling value: rebuild modes, operators and eigensystem at
/// each g, then run the frequency sweep.
pub fn run_g_sweep(params: &DeviceParams, plan: &SweepPlan) -> Result<Vec<SweepResult>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.g_list.len());
    for &g in &plan.g_list {
        let p = DeviceParams { g, ..*params };
        let sub = SweepPlan {
            experiment: Experiment::TwoStateSweep,
            g_list: Vec::new(),
            ..plan.clone()
        };
        let mut r = run_two_state(&p, &sub)?;
        r.experiment = Experiment::GSweep;
        out.push(r);
    }
    Ok(out)
}

/// Long-time summary of a ladder run: occupations averaged over the trailing
/// fifth of the horizon.
#[derive(Debug, Clone)]
pub struct LadderSummary {
    pub omega_p: f64,
    pub omega_c: f64,
    pub long_time_diagonals: Vec<f64>,
    pub max_rho33: f64,
}

/// Two-tone ladder over the three lowest states. Tones sit 50 kHz-style
/// detuned above eps_21 and eps_32; the full 9-component trajectory is
/// returned together with the long-time occupation summary.
pub fn run_ladder(
    params: &DeviceParams,
    plan: &SweepPlan,
) -> Result<(SweepResult, LadderSummary, DensityTrajectory)> {
    plan.validate()?;
    let set = [0usize, 1, 2];
    let model = assemble(params, plan.order, plan.two_s_max, &set)?;
    let eps21 = model.energies[1] - model.energies[0];
    let eps32 = model.energies[2] - model.energies[1];
    let omega_p = eps21 + plan.detuning;
    let omega_c = eps32 + plan.detuning;
    let drive = DriveWaveform::two_tone(plan.vp, omega_p, plan.vc, omega_c);
    let dt = plan
        .dt
        .unwrap_or_else(|| 0.5 * resolution_bound(&model.energies, &drive));
    let steps = (plan.t_readout / dt).round() as usize;
    let stride = if plan.stride > 0 {
        plan.stride
    } else {
        (steps / 4000).max(1)
    };
    let traj = evolve(
        &model.energies,
        &model.theta,
        &model.lambda,
        &drive,
        &ground_state(set.len()),
        plan.t_readout,
        dt,
        stride,
        &model.spin,
    )?;

    let t_tail = 0.8 * plan.t_readout;
    let mut diag = vec![0.0; 3];
    let mut n = 0usize;
    let mut max_rho33 = 0.0_f64;
    for (i, &t) in traj.times.iter().enumerate() {
        max_rho33 = max_rho33.max(traj.rhos[i][[2, 2]].re);
        if t >= t_tail {
            for k in 0..3 {
                diag[k] += traj.rhos[i][[k, k]].re;
            }
            n += 1;
        }
    }
    for d in &mut diag {
        *d /= n as f64;
    }

    let result = SweepResult {
        experiment: Experiment::Ladder,
        g: params.g,
        order: plan.order,
        t_readout: plan.t_readout,
        dt,
        rows: vec![SweepRow {
            x: plan.t_readout,
            spin: traj.final_spin(),
            rho_diag: diag.clone(),
        }],
    };
    let summary = LadderSummary {
        omega_p,
        omega_c,
        long_time_diagonals: diag,
        max_rho33,
    };
    Ok((result, summary, traj))
}

/// Self-describing TSV: `# key=value` echo lines, then one row per point.
pub fn write_sweep_tsv<W: Write>(
    w: &mut W,
    result: &SweepResult,
    params: &DeviceParams,
    extra: &[(&str, String)],
) -> std::io::Result<()> {
    writeln!(w, "# experiment={}", result.experiment.name())?;
    writeln!(w, "# g={:e}", result.g)?;
    writeln!(w, "# order={}", result.order)?;
    writeln!(w, "# t_readout_us={:e}", result.t_readout * 1e-3)?;
    writeln!(w, "# dt_ns={:e}", result.dt)?;
    writeln!(
        w,
        "# L_pH={:e} C_nF={:e} EC_radns={:e} EJ_radns={:e}",
        params.l_ph, params.c_nf, params.e_c, params.e_j
    )?;
    writeln!(
        w,
        "# rates_radns={:e},{:e},{:e},{:e}",
        params.rates.gamma_plus_prime,
        params.rates.gamma_plus,
        params.rates.gamma_minus_prime,
        params.rates.gamma_minus
    )?;
    for (k, v) in extra {
        writeln!(w, "# {}={}", k, v)?;
    }
    let nstates = result.rows.first().map_or(0, |r| r.rho_diag.len());
    write!(w, "Omega_GHz\tSx\tSy\tSz")?;
    for k in 0..nstates {
        write!(w, "\trho_{0}_{0}", k + 1)?;
    }
    writeln!(w)?;
    for r in &result.rows {
        write!(w, "{:e}\t{:e}\t{:e}\t{:e}", r.x, r.spin[0], r.spin[1], r.spin[2])?;
        for d in &r.rho_diag {
            write!(w, "\t{:e}", d)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
