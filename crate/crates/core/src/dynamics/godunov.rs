//! First-order Godunov schemes.
//!
//! Scalar: `u_t + (u^2/2)_x = 0` with the exact Riemann flux.
//!
//! System: `rho_t + (rho u)_x = 0`, `(rho u)_t + (rho u^2 - tau)_x = 0`,
//! `tau_t + u tau_x = u_x`, with jumps obeying the relations selected by the
//! ledger `(=, =, ~)`: mass and momentum conserved and `m (u_bar - c) = 1`
//! for the mass flux `m` and the mean velocity `u_bar` of the jump. The
//! waves are `u -+ 1/sqrt(rho)` (genuinely nonlinear) and `u` (contact). Mass
//! and momentum are updated from interface fluxes; the stress, which has no
//! conservative form, is updated with the exact cell average of the two
//! neighbouring Riemann solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect_secant, fit_line};
use crate::riemann::{State, StatementLedger};

pub const SCALAR_CFL_LIMIT: f64 = 0.9;
pub const SYSTEM_CFL_LIMIT: f64 = 0.5;
pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub a: f64,
    pub b: f64,
    pub cells: usize,
}

impl UniformGrid {
    pub fn new(a: f64, b: f64, cells: usize) -> Result<Self> {
        if cells < MIN_CELLS || !(b > a) {
            return Err(Error::InvalidInput(format!(
                "grid needs b > a and at least {MIN_CELLS} cells"
            )));
        }
        Ok(Self { a, b, cells })
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = self.dx();
        (0..self.cells).map(|i| self.a + (i as f64 + 0.5) * h).collect()
    }
}

/// Ghost-cell policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Zero-gradient extrapolation.
    Transmissive,
    Periodic,
}

fn check_cfl(cfl: f64, limit: f64) -> Result<()> {
    if !(cfl > 0.0) {
        return Err(Error::InvalidInput("CFL number must be positive".into()));
    }
    if cfl > limit {
        return Err(Error::CflViolation { cfl, limit });
    }
    Ok(())
}

fn burgers_flux(u: f64) -> f64 {
    0.5 * u * u
}

/// Exact Riemann flux at `x/t = 0`.
fn burgers_godunov_flux(ul: f64, ur: f64) -> f64 {
    if ul > ur {
        // Shock with the jump speed of the scalar law.
        let c = 0.5 * (ul + ur);
        if c >= 0.0 {
            burgers_flux(ul)
        } else {
            burgers_flux(ur)
        }
    } else if ul >= 0.0 {
        burgers_flux(ul)
    } else if ur <= 0.0 {
        burgers_flux(ur)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarEvolution {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
    pub steps: usize,
    pub initial_mass: f64,
    /// Net mass that entered through the boundaries.
    pub boundary_inflow: f64,
}

impl ScalarEvolution {
    pub fn mass(&self) -> f64 {
        let h = self.x[1] - self.x[0];
        self.u.iter().sum::<f64>() * h
    }

    /// Relative defect of `mass = initial + inflow`.
    pub fn mass_defect(&self) -> f64 {
        (self.mass() - self.initial_mass - self.boundary_inflow).abs() / self.initial_mass.abs().max(1.0)
    }

    /// First crossing of `level` by the cell-center values, linearly
    /// interpolated.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        crossing(&self.x, &self.u, level)
    }
}

fn crossing(x: &[f64], u: &[f64], level: f64) -> Option<f64> {
    (1..u.len()).find_map(|i| {
        let (a, b) = (u[i - 1] - level, u[i] - level);
        if a == 0.0 {
            Some(x[i - 1])
        } else if a.signum() != b.signum() {
            Some(x[i - 1] + (x[i] - x[i - 1]) * a / (a - b))
        } else {
            None
        }
    })
}

fn ghosts<T: Copy>(v: &[T], boundary: Boundary) -> (T, T) {
    match boundary {
        Boundary::Transmissive => (v[0], v[v.len() - 1]),
        Boundary::Periodic => (v[v.len() - 1], v[0]),
    }
}

pub fn godunov_scalar(
    init: &[f64],
    grid: UniformGrid,
    cfl: f64,
    t_final: f64,
    boundary: Boundary,
) -> Result<ScalarEvolution> {
    check_cfl(cfl, SCALAR_CFL_LIMIT)?;
    if init.len() != grid.cells {
        return Err(Error::InvalidInput("initial data does not match the grid".into()));
    }
    let h = grid.dx();
    let mut u = init.to_vec();
    let initial_mass = u.iter().sum::<f64>() * h;
    let mut flux = vec![0.0; grid.cells + 1];
    let (mut t, mut steps, mut inflow) = (0.0, 0, 0.0);
    while t < t_final {
        let speed = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut dt = if speed > 0.0 { cfl * h / speed } else { t_final - t };
        dt = dt.min(t_final - t);
        let (gl, gr) = ghosts(&u, boundary);
        for (i, f) in flux.iter_mut().enumerate() {
            let ul = if i == 0 { gl } else { u[i - 1] };
            let ur = if i == grid.cells { gr } else { u[i] };
            *f = burgers_godunov_flux(ul, ur);
        }
        for (i, v) in u.iter_mut().enumerate() {
            *v -= dt / h * (flux[i + 1] - flux[i]);
        }
        if boundary == Boundary::Transmissive {
            inflow += dt * (flux[0] - flux[grid.cells]);
        }
        t += dt;
        steps += 1;
    }
    Ok(ScalarEvolution {
        x: grid.centers(),
        u,
        t,
        steps,
        initial_mass,
        boundary_inflow: inflow,
    })
}

/// Riemann data `(u_l, u_r)` with the jump at `x0`, cell averages.
pub fn riemann_cells(grid: &UniformGrid, x0: f64, left: f64, right: f64) -> Vec<f64> {
    let h = grid.dx();
    (0..grid.cells)
        .map(|i| {
            let (x1, x2) = (grid.a + i as f64 * h, grid.a + (i + 1) as f64 * h);
            let frac = ((x0 - x1) / h).clamp(0.0, 1.0);
            debug_assert!(x2 > x1);
            frac * left + (1.0 - frac) * right
        })
        .collect()
}

/// Shock-position errors of the scalar scheme on Riemann data over a
/// sequence of grids; returns `(cells, error)` pairs and the fitted order.
pub fn shock_position_eoc(
    ul: f64,
    ur: f64,
    cells: &[usize],
    cfl: f64,
    t_final: f64,
) -> Result<(Vec<(usize, f64)>, f64)> {
    if !(ul > ur) {
        return Err(Error::InvalidInput("shock data needs u_l > u_r".into()));
    }
    let c = 0.5 * (ul + ur);
    let (a, b) = (-1.0, 1.0 + (c * t_final).abs() + 1.0);
    let mut rows = Vec::new();
    for &n in cells {
        let grid = UniformGrid::new(a, b, n)?;
        let ev = godunov_scalar(
            &riemann_cells(&grid, 0.0, ul, ur),
            grid,
            cfl,
            t_final,
            Boundary::Transmissive,
        )?;
        let pos = ev
            .crossing(0.5 * (ul + ur))
            .ok_or_else(|| Error::SearchFailure("shock not found".into()))?;
        rows.push((n, (pos - c * t_final).abs()));
    }
    let xs: Vec<f64> = rows.iter().map(|(n, _)| (1.0 / *n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|(_, e)| e.max(1e-300).ln()).collect();
    let order = fit_line(&xs, &ys).map(|f| f.slope).unwrap_or(f64::NAN);
    Ok((rows, order))
}

// ---------------------------------------------------------------------------
// System

/// Self-similar solution of a system Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemWaves {
    pub left: State,
    pub right: State,
    pub u_star: f64,
    pub tau_star: f64,
    pub rho_star_left: f64,
    pub rho_star_right: f64,
    /// `[head, tail]` of the 1-wave (equal for a shock).
    pub wave1: [f64; 2],
    /// `[head, tail]` of the 3-wave (equal for a shock).
    pub wave3: [f64; 2],
}

fn sound(rho: f64) -> f64 {
    1.0 / rho.sqrt()
}

/// State behind a 1-wave from `l` with velocity `u`: `(rho, tau, speed)`,
/// where `speed` is the shock speed (NaN for a rarefaction).
fn wave1(l: &State, u: f64) -> Option<(f64, f64, f64)> {
    let du = u - l.u;
    if du >= 0.0 {
        let a = sound(l.rho) + 0.5 * du;
        Some((1.0 / (a * a), l.tau + 2.0 * (a / sound(l.rho)).ln(), f64::NAN))
    } else {
        let s = 0.5 * (-0.5 * du + (0.25 * du * du + 4.0 / l.rho).sqrt());
        let m = l.rho * s;
        let sr = s + du;
        (sr > 0.0).then(|| (m / sr, l.tau + m * du, l.u - s))
    }
}

/// State ahead of a 3-wave ending at `r`, given its velocity `u`.
fn wave3(r: &State, u: f64) -> Option<(f64, f64, f64)> {
    let du = r.u - u;
    if du >= 0.0 {
        let a = sound(r.rho) + 0.5 * du;
        Some((1.0 / (a * a), r.tau - 2.0 * (sound(r.rho) / a).ln(), f64::NAN))
    } else {
        let sr = 0.5 * (0.5 * du - (0.25 * du * du + 4.0 / r.rho).sqrt());
        let m = r.rho * sr;
        let sl = sr - du;
        (sl < 0.0).then(|| (m / sl, r.tau - m * du, r.u - sr))
    }
}

impl SystemWaves {
    pub fn solve(left: State, right: State) -> std::result::Result<Self, String> {
        if !(left.rho > 0.0 && right.rho > 0.0) {
            return Err("nonpositive density".into());
        }
        // Admissible middle velocities: strong shocks end where the state
        // behind them would need a negative density.
        let lo = left.u - (2.0 / left.rho).sqrt();
        let hi = right.u + (2.0 / right.rho).sqrt();
        let gap = |u: f64| -> f64 {
            match (wave1(&left, u), wave3(&right, u)) {
                (Some(a), Some(b)) => a.1 - b.1,
                _ => f64::NAN,
            }
        };
        let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let (lo, hi) = (lo + pad, hi - pad);
        if !(lo < hi) {
            return Err(format!("no admissible middle velocity in [{lo}, {hi}]"));
        }
        let u_star = if left == right {
            left.u
        } else {
            bisect_secant(gap, lo, hi, 0.0).map_err(|e| e.to_string())?
        };
        let (rl, tl, c1) = wave1(&left, u_star).ok_or("1-wave not admissible")?;
        let (rr, _, c3) = wave3(&right, u_star).ok_or("3-wave not admissible")?;
        let w1 = if c1.is_nan() {
            [left.u - sound(left.rho), u_star - sound(rl)]
        } else {
            [c1, c1]
        };
        let w3 = if c3.is_nan() {
            [u_star + sound(rr), right.u + sound(right.rho)]
        } else {
            [c3, c3]
        };
        Ok(Self {
            left,
            right,
            u_star,
            tau_star: tl,
            rho_star_left: rl,
            rho_star_right: rr,
            wave1: w1,
            wave3: w3,
        })
    }

    pub fn max_speed(&self) -> f64 {
        self.wave1[0].abs().max(self.wave3[1].abs()).max(self.u_star.abs())
    }

    /// State at `xi = x / t`.
    pub fn sample(&self, xi: f64) -> State {
        let (l, r) = (&self.left, &self.right);
        if xi < self.wave1[0] {
            *l
        } else if xi < self.wave1[1] {
            let a = xi - (l.u - 2.0 * sound(l.rho));
            State::new(
                1.0 / (a * a),
                l.u - 2.0 * sound(l.rho) + 2.0 * a,
                l.tau + 2.0 * (a / sound(l.rho)).ln(),
            )
        } else if xi < self.u_star {
            State::new(self.rho_star_left, self.u_star, self.tau_star)
        } else if xi < self.wave3[0] {
            State::new(self.rho_star_right, self.u_star, self.tau_star)
        } else if xi < self.wave3[1] {
            let k = r.u + 2.0 * sound(r.rho);
            let a = k - xi;
            State::new(1.0 / (a * a), k - 2.0 * a, r.tau - 2.0 * (sound(r.rho) / a).ln())
        } else {
            *r
        }
    }

    /// `int_lo^hi tau(xi) dxi`, exact on every piece.
    fn tau_integral(&self, lo: f64, hi: f64) -> f64 {
        let (l, r) = (&self.left, &self.right);
        let y_ln_y = |y: f64| y * y.ln() - y;
        let clip = |a: f64, b: f64| (a.max(lo), b.min(hi));
        let mut total = 0.0;
        let mut piece = |a: f64, b: f64, f: &dyn Fn(f64, f64) -> f64| {
            let (a, b) = clip(a, b);
            if b > a {
                total += f(a, b);
            }
        };
        let inf = f64::INFINITY;
        piece(-inf, self.wave1[0], &|a, b| l.tau * (b - a));
        let j = l.u - 2.0 * sound(l.rho);
        piece(self.wave1[0], self.wave1[1], &|a, b| {
            (l.tau - 2.0 * sound(l.rho).ln()) * (b - a) + 2.0 * (y_ln_y(b - j) - y_ln_y(a - j))
        });
        piece(self.wave1[1], self.wave3[0], &|a, b| self.tau_star * (b - a));
        let k = r.u + 2.0 * sound(r.rho);
        piece(self.wave3[0], self.wave3[1], &|a, b| {
            (r.tau - 2.0 * sound(r.rho).ln()) * (b - a) + 2.0 * (y_ln_y(k - a) - y_ln_y(k - b))
        });
        piece(self.wave3[1], inf, &|a, b| r.tau * (b - a));
        total
    }

    /// `int_0^inf (tau_R - tau(xi)) dxi`.
    fn right_deficit(&self) -> f64 {
        let end = self.wave3[1].max(0.0);
        self.right.tau * end - self.tau_integral(0.0, end)
    }

    /// `int_{-inf}^0 (tau_L - tau(xi)) dxi`.
    fn left_deficit(&self) -> f64 {
        let start = self.wave1[0].min(0.0);
        self.left.tau * (-start) - self.tau_integral(start, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemEvolution {
    pub x: Vec<f64>,
    pub states: Vec<State>,
    pub t: f64,
    pub steps: usize,
    pub initial_mass: f64,
    pub mass_inflow: f64,
}

impl SystemEvolution {
    pub fn mass(&self) -> f64 {
        let h = self.x[1] - self.x[0];
        self.states.iter().map(|s| s.rho).sum::<f64>() * h
    }

    pub fn mass_defect(&self) -> f64 {
        (self.mass() - self.initial_mass - self.mass_inflow).abs() / self.initial_mass.abs().max(1.0)
    }

    /// First crossing of the density level.
    pub fn density_crossing(&self, level: f64) -> Option<f64> {
        let rho: Vec<f64> = self.states.iter().map(|s| s.rho).collect();
        crossing(&self.x, &rho, level)
    }
}

pub fn godunov_system(
    init: &[State],
    grid: UniformGrid,
    cfl: f64,
    t_final: f64,
    ledger: &StatementLedger,
) -> Result<SystemEvolution> {
    if *ledger != StatementLedger::mixed() {
        return Err(Error::InvalidInput(format!(
            "the system scheme needs the ledger ==~, got {ledger}"
        )));
    }
    check_cfl(cfl, SYSTEM_CFL_LIMIT)?;
    if init.len() != grid.cells {
        return Err(Error::InvalidInput("initial data does not match the grid".into()));
    }
    if let Some(i) = init.iter().position(|s| !(s.rho > 0.0)) {
        return Err(Error::InvalidInput(format!("nonpositive density in cell {i}")));
    }
    let n = grid.cells;
    let h = grid.dx();
    let mut w = init.to_vec();
    let initial_mass = w.iter().map(|s| s.rho).sum::<f64>() * h;
    let (mut t, mut steps, mut inflow) = (0.0, 0, 0.0);
    let mut waves: Vec<SystemWaves> = Vec::with_capacity(n + 1);
    while t < t_final {
        waves.clear();
        let (gl, gr) = ghosts(&w, Boundary::Transmissive);
        for i in 0..=n {
            let l = if i == 0 { gl } else { w[i - 1] };
            let r = if i == n { gr } else { w[i] };
            waves.push(SystemWaves::solve(l, r).map_err(|reason| Error::SolverFailure { interface: i, reason })?);
        }
        let speed = waves.iter().fold(0.0f64, |m, wv| m.max(wv.max_speed()));
        let dt = if speed > 0.0 {
            (cfl * h / speed).min(t_final - t)
        } else {
            t_final - t
        };
        let flux: Vec<(f64, f64)> = waves
            .iter()
            .map(|wv| {
                let s = wv.sample(0.0);
                (s.rho * s.u, s.rho * s.u * s.u - s.tau)
            })
            .collect();
        for i in 0..n {
            let s = w[i];
            let rho = s.rho - dt / h * (flux[i + 1].0 - flux[i].0);
            let q = s.rho * s.u - dt / h * (flux[i + 1].1 - flux[i].1);
            // Average of the right half of interface i and the left half of
            // interface i + 1 after time dt.
            let tau = s.tau - dt / h * (waves[i].right_deficit() + waves[i + 1].left_deficit());
            if !(rho > 0.0) || !q.is_finite() || !tau.is_finite() {
                return Err(Error::SolverFailure {
                    interface: i,
                    reason: format!("update produced rho = {rho}, q = {q}, tau = {tau}"),
                });
            }
            w[i] = State::new(rho, q / rho, tau);
        }
        inflow += dt * (flux[0].0 - flux[n].0);
        t += dt;
        steps += 1;
    }
    Ok(SystemEvolution {
        x: grid.centers(),
        states: w,
        t,
        steps,
        initial_mass,
        mass_inflow: inflow,
    })
}
