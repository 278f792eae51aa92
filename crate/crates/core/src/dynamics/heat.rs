//! Heat flow on `(0, L)` with zero boundary values, optionally with the
//! absorption term of `u_t - u_xx + u^3 = 0`, and the explicit solutions
//! showing that the backward problem is ill-posed.
//!
//! Diffusion is Crank–Nicolson (a few backward-Euler half steps first, to
//! damp the stiff modes of rough data); the reaction `u' = -u^3` is applied
//! exactly, `u / sqrt(1 + 2 u^2 t)`, in a Strang splitting.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::eps_core::{classify_numeric, AsymptoticClass, DyadicGrid, EpsRepresentative};
use crate::error::{Error, Result};
use crate::genfunc::{GenFunction1D, TestFunction};
use crate::quadrature::Quadrature;

/// Largest exponent for which `exp` stays finite.
const MAX_EXPONENT: f64 = 709.0;

#[derive(Debug, Clone)]
pub struct HeatProblem {
    pub length: f64,
    pub diffusivity: f64,
    pub nonlinear: bool,
    /// Initial data, sampled at scale `eps`.
    pub initial: GenFunction1D,
    pub eps: f64,
    /// Number of intervals of the spatial grid.
    pub intervals: usize,
    /// Largest time step; must not exceed the mesh width.
    pub dt_max: f64,
    /// First step; steps grow geometrically by 5% up to `dt_max`.
    pub dt_initial: f64,
    /// Backward-Euler half steps before Crank–Nicolson.
    pub startup_half_steps: usize,
    pub snapshot_times: Vec<f64>,
}

impl HeatProblem {
    /// `(0, pi)`, `k = 1`, uniform steps of a quarter mesh width (the
    /// time error of Crank–Nicolson dominates at equal steps).
    pub fn new(initial: GenFunction1D, intervals: usize, snapshot_times: Vec<f64>) -> Self {
        let dt = 0.25 * PI / intervals as f64;
        Self {
            length: PI,
            diffusivity: 1.0,
            nonlinear: false,
            initial,
            eps: 1.0,
            intervals,
            dt_max: dt,
            dt_initial: dt,
            startup_half_steps: 4,
            snapshot_times,
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.intervals as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || !(self.diffusivity > 0.0) || self.intervals < 4 {
            return Err(Error::InvalidInput("need L > 0, k > 0 and at least 4 intervals".into()));
        }
        if !(self.dt_max > 0.0 && self.dt_initial > 0.0) {
            return Err(Error::InvalidInput("time steps must be positive".into()));
        }
        if self.dt_max > self.dx() * (1.0 + 1e-12) {
            return Err(Error::StabilityViolation(format!(
                "dt = {} exceeds the mesh width {}",
                self.dt_max,
                self.dx()
            )));
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidInput("snapshot times must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatRun {
    pub x: Vec<f64>,
    /// `(t, u)` for each requested time, in increasing order.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub steps: usize,
}

impl HeatRun {
    pub fn at(&self, t: f64) -> Option<&[f64]> {
        self.snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-12 * t.max(1.0))
            .map(|(_, u)| u.as_slice())
    }
}

/// Solves `(1 + 2r) u_j - r (u_{j-1} + u_{j+1}) = d_j` on interior nodes.
fn thomas(r: f64, d: &mut [f64], scratch: &mut Vec<f64>) {
    let n = d.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let (a, b) = (-r, 1.0 + 2.0 * r);
    let mut beta = b;
    d[0] /= beta;
    for i in 1..n {
        scratch[i] = a / beta;
        beta = b - a * scratch[i];
        d[i] = (d[i] - a * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= scratch[i + 1] * d[i + 1];
    }
}

/// One theta-step of `u_t = k u_xx` on the interior values.
fn diffuse(u: &mut [f64], k: f64, dt: f64, dx: f64, theta: f64, scratch: &mut Vec<f64>, rhs: &mut Vec<f64>) {
    let n = u.len();
    let r = k * dt / (dx * dx);
    rhs.clear();
    rhs.extend((0..n).map(|i| {
        let left = if i == 0 { 0.0 } else { u[i - 1] };
        let right = if i + 1 == n { 0.0 } else { u[i + 1] };
        u[i] + (1.0 - theta) * r * (left - 2.0 * u[i] + right)
    }));
    thomas(theta * r, rhs, scratch);
    u.copy_from_slice(rhs);
}

fn absorb(u: &mut [f64], tau: f64) {
    for v in u.iter_mut() {
        *v /= (1.0 + 2.0 * *v * *v * tau).sqrt();
    }
}

/// Forward march to each snapshot time.
pub fn simulate_heat(problem: &HeatProblem) -> Result<HeatRun> {
    problem.validate()?;
    let n = problem.intervals;
    let dx = problem.dx();
    let x: Vec<f64> = (0..=n).map(|j| j as f64 * dx).collect();
    let mut u: Vec<f64> = x[1..n]
        .iter()
        .map(|&xi| problem.initial.evaluate(xi, problem.eps))
        .collect::<Result<_>>()?;
    let mut times = problem.snapshot_times.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let (mut scratch, mut rhs) = (Vec::new(), Vec::new());
    let mut t = 0.0;
    let mut dt = problem.dt_initial.min(problem.dt_max);
    let mut half_steps_left = problem.startup_half_steps;
    let mut steps = 0;
    let mut snapshots = Vec::with_capacity(times.len());
    let full = |u: &[f64]| {
        let mut v = Vec::with_capacity(n + 1);
        v.push(0.0);
        v.extend_from_slice(u);
        v.push(0.0);
        v
    };
    for &target in &times {
        while target - t > 1e-14 * target.max(1.0) {
            let h = dt.min(target - t);
            let mut sub = |u: &mut [f64], h: f64, theta: f64| {
                if problem.nonlinear {
                    absorb(u, 0.5 * h);
                }
                diffuse(u, problem.diffusivity, h, dx, theta, &mut scratch, &mut rhs);
                if problem.nonlinear {
                    absorb(u, 0.5 * h);
                }
            };
            if half_steps_left >= 2 {
                sub(&mut u, 0.5 * h, 1.0);
                sub(&mut u, 0.5 * h, 1.0);
                half_steps_left -= 2;
            } else {
                sub(&mut u, h, 0.5);
            }
            t += h;
            steps += 1;
            dt = (dt * 1.05).min(problem.dt_max);
            if let Some(v) = u.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonlinearSolveFailure(format!("non-finite value {v} at t = {t}")));
            }
        }
        snapshots.push((target, full(&u)));
    }
    Ok(HeatRun { x, snapshots, steps })
}

/// `b_m = (2/L) int_0^L f sin(m pi x / L)`, `m = 1..=modes`.
pub fn sine_coefficients<F: Fn(f64) -> f64 + Sync>(f: F, length: f64, modes: usize) -> Result<Vec<f64>> {
    let quad = Quadrature {
        panels: 64,
        tolerance: 1e-12,
        ..Quadrature::default()
    };
    (1..=modes)
        .into_par_iter()
        .map(|m| {
            let w = m as f64 * PI / length;
            Ok(2.0 / length * quad.integrate(|x| f(x) * (w * x).sin(), 0.0, length)?)
        })
        .collect()
}

/// Truncated series `sum b_m e^{-k (m pi / L)^2 t} sin(m pi x / L)`.
pub fn heat_series(coefficients: &[f64], length: f64, k: f64, t: f64, x: f64) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let w = (i + 1) as f64 * PI / length;
            b * (-k * w * w * t).exp() * (w * x).sin()
        })
        .sum()
}

/// `int G(omega, x, t) phi(x) dx` for the Dirichlet heat kernel of
/// `u_t = k u_xx` on `(0, pi)`.
pub fn heat_kernel_pairing(omega: f64, t: f64, k: f64, phi: &TestFunction) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("kernel time must be positive".into()));
    }
    let (a, b) = phi.support();
    let (a, b) = (a.max(0.0), b.min(PI));
    if a >= b {
        return Ok(0.0);
    }
    let quad = Quadrature {
        panels: 32,
        tolerance: 1e-12,
        ..Quadrature::default()
    };
    let mut total = 0.0;
    for m in 1.. {
        let decay = (-k * (m * m) as f64 * t).exp();
        if decay < 1e-18 {
            break;
        }
        let mf = m as f64;
        let proj = quad.integrate(|x| (mf * x).sin() * phi.eval(x), a, b)?;
        total += 2.0 / PI * decay * (mf * omega).sin() * proj;
    }
    Ok(total)
}

fn pairing_on_nodes(x: &[f64], u: &[f64], phi: &TestFunction) -> f64 {
    let dx = x[1] - x[0];
    x.iter().zip(u).map(|(&xi, &ui)| ui * phi.eval(xi)).sum::<f64>() * dx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaVanishingReport {
    pub eps: Vec<f64>,
    pub nonlinear: Vec<f64>,
    pub linear: Vec<f64>,
    pub kernel: f64,
    /// Pairings with absorption strictly decrease over the last four `eps`.
    pub decreasing_tail: bool,
    pub class: AsymptoticClass,
}

/// Runs the heat flow from `delta_eps(x - omega)` for a halving sequence of
/// `eps`, with and without absorption, and pairs the solutions at `t0` with
/// `phi`.
pub fn delta_vanishing_check(
    omega: f64,
    t0: f64,
    phi: &TestFunction,
    psi: &crate::profiles::DiracProfile,
    eps0: f64,
    levels: usize,
    cells_per_eps: usize,
) -> Result<DeltaVanishingReport> {
    if !(omega > 0.0 && omega < PI) || !(t0 > 0.0) || levels < 4 {
        return Err(Error::InvalidInput(
            "need 0 < omega < pi, t0 > 0 and at least 4 levels".into(),
        ));
    }
    let eps: Vec<f64> = (0..levels).map(|j| eps0 * 0.5f64.powi(j as i32)).collect();
    let runs: Vec<(f64, f64)> = eps
        .par_iter()
        .map(|&e| {
            let intervals = ((PI * cells_per_eps as f64 / e).ceil() as usize).max(64);
            let initial = GenFunction1D::dirac(omega, psi.clone(), (0.0, PI));
            let mut problem = HeatProblem::new(initial, intervals, vec![t0]);
            problem.eps = e;
            problem.dt_initial = (e * e / 16.0).min(problem.dt_max);
            let pair = |nonlinear: bool| -> Result<f64> {
                let run = simulate_heat(&HeatProblem {
                    nonlinear,
                    ..problem.clone()
                })?;
                Ok(pairing_on_nodes(&run.x, run.at(t0).expect("requested"), phi))
            };
            Ok((pair(true)?, pair(false)?))
        })
        .collect::<Result<_>>()?;
    let nonlinear: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let linear: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let tail = &nonlinear[levels - 4..];
    let decreasing_tail = tail.windows(2).all(|w| w[1] < w[0]);

    let table: HashMap<u64, f64> = eps.iter().map(|e| e.to_bits()).zip(nonlinear.iter().copied()).collect();
    let rep = EpsRepresentative::opaque(move |e| table.get(&e.to_bits()).copied().unwrap_or(f64::NAN));
    let grid = DyadicGrid::coarse(eps0, levels - 1, 4);
    let class = classify_numeric(&rep, &grid)?;
    Ok(DeltaVanishingReport {
        kernel: heat_kernel_pairing(omega, t0, 1.0, phi)?,
        eps,
        nonlinear,
        linear,
        decreasing_tail,
        class,
    })
}

/// `u_n(x, t) = e^{-n^2 t} sin(n x) / n`, solving `u_t = u_xx` on `(0, pi)`.
pub fn illposed_family(n: u32, x: f64, t: f64) -> f64 {
    let nf = n as f64;
    (-nf * nf * t).exp() * (nf * x).sin() / nf
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub n: u32,
    pub t: f64,
    /// `ln sup_x |u_n(x, t)| = -n^2 t - ln n`.
    pub log_sup_norm: f64,
    /// The sup-norm itself when representable.
    pub sup_norm: Option<f64>,
    /// Largest `|u_n(x, t)| e^{n^2 t}` over the sample grid, which must equal `1/n`.
    pub sampled_scaled_sup: f64,
    /// Largest `|u_t - u_xx|` relative to the sup-norm on the sample grid.
    pub residual: f64,
}

/// Sup-norms and equation residuals of the family over `ns x ts`. Norms are
/// carried as logarithms since `e^{n^2 t0}` overflows for moderate `n`.
pub fn family_report(ns: &[u32], ts: &[f64]) -> Result<Vec<FamilyRow>> {
    if ns.contains(&0) {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let nf = n as f64;
        let mut xs: Vec<f64> = (1..512).map(|j| j as f64 * PI / 512.0).collect();
        xs.push(PI / (2.0 * nf));
        for &t in ts {
            let log_sup = -nf * nf * t - nf.ln();
            let mut scaled_sup = 0.0f64;
            let mut residual = 0.0f64;
            for &x in &xs {
                // Work with the amplitude factored out so that t < 0 stays finite.
                let s = (nf * x).sin() / nf;
                scaled_sup = scaled_sup.max(s.abs());
                let u_t = -nf * nf * s;
                let u_xx = -nf * (nf * x).sin();
                residual = residual.max((u_t - u_xx).abs() * nf);
            }
            rows.push(FamilyRow {
                n,
                t,
                log_sup_norm: log_sup,
                sup_norm: (log_sup < MAX_EXPONENT).then(|| (-nf * nf * t).exp() / nf),
                sampled_scaled_sup: scaled_sup,
                residual,
            });
        }
    }
    Ok(rows)
}

/// `u(x, t) = sum b_m e^{k m^2 t} sin(m x)` on `(0, pi)`: the solution of
/// `u_t = -k u_xx` with `u(., 0) = sum b_m sin(m x)`. Modes are
/// `(m, b_m)`; returns the field and the growth rate `k m^2` of each mode.
pub fn backward_heat_series(modes: &[(usize, f64)], k: f64, t: f64, xs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(k > 0.0) || modes.iter().any(|(m, _)| *m == 0) {
        return Err(Error::InvalidInput("need k > 0 and modes m >= 1".into()));
    }
    let mut amplitudes = Vec::with_capacity(modes.len());
    for &(m, b) in modes {
        let rate = k * (m * m) as f64;
        if rate * t > MAX_EXPONENT {
            return Err(Error::OverflowForLargeMode { mode: m, t });
        }
        amplitudes.push((m as f64, b * (rate * t).exp()));
    }
    let field = xs
        .iter()
        .map(|&x| amplitudes.iter().map(|(m, a)| a * (m * x).sin()).sum())
        .collect();
    let rates = modes.iter().map(|(m, _)| k * (m * m) as f64).collect();
    Ok((field, rates))
}
