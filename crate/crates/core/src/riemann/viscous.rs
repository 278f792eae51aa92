//! Traveling profiles of the viscous system
//!
//! ```text
//! rho_t + (rho u)_x = e1 rho_xx,  (rho u)_t + (rho u^2)_x = tau_x + e2 (rho u)_xx,
//! tau_t + u tau_x = u_x + e3 tau_xx
//! ```
//!
//! In `xi = x - ct` the first two equations integrate once, leaving a
//! first-order system for `(rho, q = rho u, tau, w = tau')` whose equilibria
//! form a curve through the left state. A profile is found by shooting
//! backward from the right equilibrium along its stable direction and
//! adjusting `c` until the orbit lands on the left state.

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flux_bracket, implied_right_state, State, SystemData, SPEED_TOLERANCE};
use crate::error::{Error, Result};
use crate::numerics::bisect_secant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscousProfileProblem {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// Left state and right velocity; the right density and stress are the
    /// ones the selected speed implies.
    pub data: SystemData,
}

impl ViscousProfileProblem {
    /// `e3 = 1`, `e1 = e2 = 1e-3`.
    pub fn stress_dominant(data: SystemData) -> Self {
        Self {
            eps1: 1e-3,
            eps2: 1e-3,
            eps3: 1.0,
            data,
        }
    }

    pub fn equal(data: SystemData) -> Self {
        Self {
            eps1: 1.0,
            eps2: 1.0,
            eps3: 1.0,
            data,
        }
    }

    fn validate(&self) -> Result<()> {
        for e in [self.eps1, self.eps2, self.eps3] {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::InvalidInput(format!("viscosity {e} must be positive")));
            }
        }
        self.data.validate()?;
        if self.data.right.u == self.data.left.u {
            return Err(Error::InvalidInput("no velocity jump".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViscousProfile {
    pub c: f64,
    /// `int K_u dK_tau` along the profile.
    pub a: f64,
    pub right: State,
    pub xi: Vec<f64>,
    pub k_u: Vec<f64>,
    pub k_tau: Vec<f64>,
    /// Largest equilibrium residual at the two ends of the computed orbit.
    pub far_field_residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct Traveling {
    c: f64,
    m: f64,
    k2: f64,
    e: [f64; 3],
}

impl Traveling {
    fn new(left: State, c: f64, p: &ViscousProfileProblem) -> Self {
        let m = left.rho * (left.u - c);
        Self {
            c,
            m,
            k2: m * left.u - left.tau,
            e: [p.eps1, p.eps2, p.eps3],
        }
    }

    fn rhs(&self, y: &Vector4<f64>) -> Vector4<f64> {
        let (rho, q, tau, w) = (y[0], y[1], y[2], y[3]);
        let u = q / rho;
        let drho = (q - self.c * rho - self.m) / self.e[0];
        let dq = (q * u - self.c * q - tau - self.k2) / self.e[1];
        let du = (dq - u * drho) / rho;
        Vector4::new(drho, dq, w, ((u - self.c) * w - du) / self.e[2])
    }

    /// Distance from the equilibrium curve, in the units of the integrated
    /// fluxes.
    fn equilibrium_residual(&self, y: &Vector4<f64>) -> f64 {
        let (rho, q, tau, w) = (y[0], y[1], y[2], y[3]);
        (q - self.c * rho - self.m)
            .abs()
            .max((q * q / rho - self.c * q - tau - self.k2).abs())
            .max((self.e[2] * w).abs())
    }

    fn jacobian(&self, y: &Vector4<f64>) -> Matrix4<f64> {
        let mut j = Matrix4::zeros();
        for k in 0..4 {
            let h = 1e-7 * (1.0 + y[k].abs());
            let mut yp = *y;
            let mut ym = *y;
            yp[k] += h;
            ym[k] -= h;
            j.set_column(k, &((self.rhs(&yp) - self.rhs(&ym)) / (2.0 * h)));
        }
        j
    }
}

fn equilibrium(s: &State) -> Vector4<f64> {
    Vector4::new(s.rho, s.rho * s.u, s.tau, 0.0)
}

struct Shot {
    tau_land: f64,
    path: Vec<(f64, Vector4<f64>)>,
    residual: f64,
}

const PERTURBATION: f64 = 1e-6;
const STEP: f64 = 0.01;
const XI_MAX: f64 = 400.0;
const ARRIVAL: f64 = 1e-11;

/// Integrates backward from the right equilibrium. Errors when the right
/// state has no stable direction or the orbit does not settle.
fn shoot(tw: &Traveling, left: State, right: State, keep_path: bool) -> Result<Shot> {
    let y_r = equilibrium(&right);
    let j = tw.jacobian(&y_r);
    let eig = j
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::NoConnection("complex spectrum at the right state".into()))?;
    let scale = tw.e.iter().cloned().fold(f64::INFINITY, f64::min).recip();
    let lambda = eig
        .iter()
        .cloned()
        .filter(|l| *l < -1e-9 * scale)
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .ok_or_else(|| Error::NoConnection("right state has no stable direction".into()))?;
    let svd = (j - Matrix4::identity() * lambda).svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let k = svd.singular_values.imin();
    let mut v: Vector4<f64> = v_t.row(k).transpose();
    if v[2] * (left.tau - right.tau) < 0.0 {
        v = -v;
    }
    let delta = PERTURBATION * (left.tau - right.tau).abs().max(1e-3) / v[2].abs().max(1e-12);

    // d/deta Y = -f(Y), eta = -xi; BDF2 with a backward-Euler start.
    let g = |y: &Vector4<f64>| -tw.rhs(y);
    let e3 = tw.e[2];
    let h = STEP * e3;
    let steps = (XI_MAX / STEP) as usize;
    let mut prev = y_r;
    let mut cur = y_r + v * delta;
    let mut path = vec![(0.0, y_r)];
    if keep_path {
        path.push((0.0, cur));
    }
    let mut first = true;
    for n in 0..steps {
        let (a1, a0, beta) = if first {
            (1.0, 0.0, 1.0)
        } else {
            (4.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0)
        };
        let base = cur * a1 + prev * a0;
        let mut next = cur + g(&cur) * (beta * h);
        let mut converged = false;
        for _ in 0..25 {
            let res = next - base - g(&next) * (beta * h);
            let jac = Matrix4::identity() + tw.jacobian(&next) * (beta * h);
            let dy = jac
                .lu()
                .solve(&res)
                .ok_or_else(|| Error::StiffnessFailure("singular Newton matrix".into()))?;
            next -= dy;
            if !next.iter().all(|x| x.is_finite()) || next[0] <= 0.0 {
                return Err(Error::NoConnection("orbit left the admissible region".into()));
            }
            if dy.norm() <= 1e-13 * (1.0 + next.norm()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::StiffnessFailure(format!("Newton did not converge at step {n}")));
        }
        first = false;
        prev = cur;
        cur = next;
        if keep_path {
            path.push((-((n + 1) as f64) * h, cur));
        }
        let r = tw.equilibrium_residual(&cur);
        if r < ARRIVAL * (1.0 + cur.norm()) && n > 10 {
            return Ok(Shot {
                tau_land: cur[2],
                path,
                residual: r,
            });
        }
    }
    Err(Error::NoConnection(format!(
        "orbit did not settle within xi = {}",
        XI_MAX * e3
    )))
}

/// Speed and internal profiles of the viscous traveling wave from the left
/// state to the velocity `u_r`.
pub fn viscous_profile_oracle(problem: &ViscousProfileProblem) -> Result<ViscousProfile> {
    problem.validate()?;
    let left = problem.data.left;
    let u_r = problem.data.right.u;
    let sign = problem.data.flux_sign();
    let miss = |s: f64| -> f64 {
        let c = left.u - s;
        let Ok(right) = implied_right_state(left, u_r, c) else {
            return f64::NAN;
        };
        let tw = Traveling::new(left, c, problem);
        match shoot(&tw, left, right, false) {
            Ok(shot) => shot.tau_land - left.tau,
            Err(_) => f64::NAN,
        }
    };
    let (lo, hi) = flux_bracket(left, u_r, sign);
    let n = 60;
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let misses: Vec<f64> = grid.par_iter().map(|&s| miss(s)).collect();
    let bracket = (0..n)
        .find(|&i| misses[i].is_finite() && misses[i + 1].is_finite() && misses[i].signum() != misses[i + 1].signum());
    let Some(i) = bracket else {
        return Err(Error::NoConnection(format!(
            "landing stress never crosses the left value for flux in [{lo}, {hi}]"
        )));
    };
    let s = bisect_secant(miss, grid[i], grid[i + 1], SPEED_TOLERANCE * (1.0 + left.tau.abs()))?;
    let c = left.u - s;
    let right = implied_right_state(left, u_r, c)?;
    let tw = Traveling::new(left, c, problem);
    let shot = shoot(&tw, left, right, true)?;

    // Orbit from left to right, closed with the exact end states.
    let mut path = shot.path;
    path.reverse();
    let du = right.u - left.u;
    let dtau = right.tau - left.tau;
    let mut xi = Vec::with_capacity(path.len() + 1);
    let mut k_u = Vec::with_capacity(path.len() + 1);
    let mut k_tau = Vec::with_capacity(path.len() + 1);
    let first_xi = path[0].0;
    xi.push(first_xi - STEP * tw.e[2]);
    k_u.push(0.0);
    k_tau.push(0.0);
    for (x, y) in &path {
        xi.push(*x);
        k_u.push((y[1] / y[0] - left.u) / du);
        k_tau.push((y[2] - left.tau) / dtau);
    }
    let a = k_u
        .windows(2)
        .zip(k_tau.windows(2))
        .map(|(u, t)| 0.5 * (u[0] + u[1]) * (t[1] - t[0]))
        .sum();
    let residual = shot.residual.max(tw.equilibrium_residual(&equilibrium(&right)));
    Ok(ViscousProfile {
        c,
        a,
        right,
        xi,
        k_u,
        k_tau,
        far_field_residual: residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurgersProfile {
    pub c: f64,
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
    /// Largest deviation from `c - (D/2) tanh(D (xi - xi0) / (4 nu))`.
    pub max_deviation: f64,
}

/// Viscous Burgers wave `u_t + u u_x = nu u_xx` found by shooting in `c`,
/// compared with its closed form.
pub fn burgers_viscous_oracle(u_l: f64, u_r: f64, nu: f64) -> Result<BurgersProfile> {
    if !(nu > 0.0) {
        return Err(Error::InvalidInput("viscosity must be positive".into()));
    }
    if !(u_l > u_r) {
        return Err(Error::NoConnection("a viscous wave needs u_l > u_r".into()));
    }
    let jump = u_l - u_r;
    let h = 1e-3 * 4.0 * nu / jump;
    // nu u' = (u - c)^2 / 2 - (u_l - c)^2 / 2, integrated from u_l.
    let orbit = |c: f64, keep: bool| -> (f64, Vec<f64>) {
        let f = |u: f64| ((u - c).powi(2) - (u_l - c).powi(2)) / (2.0 * nu);
        let mut u = u_l - 1e-9 * jump;
        let mut out = if keep { vec![u_l, u] } else { Vec::new() };
        for _ in 0..200_000 {
            let k1 = f(u);
            let k2 = f(u + 0.5 * h * k1);
            let k3 = f(u + 0.5 * h * k2);
            let k4 = f(u + h * k3);
            let next = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !next.is_finite() {
                return (f64::NEG_INFINITY, out);
            }
            u = next;
            if keep {
                out.push(u);
            }
            if f(u).abs() * h < 1e-15 * jump {
                break;
            }
        }
        (u, out)
    };
    // Landing above u_r means the speed is too small.
    let c = bisect_secant(|c| orbit(c, false).0.max(u_r - jump) - u_r, u_r, u_l, 1e-12 * jump)?;
    let (_, u) = orbit(c, true);
    let xi: Vec<f64> = (0..u.len()).map(|i| i as f64 * h).collect();
    let mid = u.iter().position(|&v| v <= c).unwrap_or(0).max(1);
    let t = (c - u[mid - 1]) / (u[mid] - u[mid - 1]);
    let xi0 = xi[mid - 1] + t * h;
    let max_deviation = xi
        .iter()
        .zip(&u)
        .map(|(x, v)| (v - (c - 0.5 * jump * (jump * (x - xi0) / (4.0 * nu)).tanh())).abs())
        .fold(0.0, f64::max);
    Ok(BurgersProfile {
        c,
        xi,
        u,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::{forward_constructed_datum, forward_datum, solve_system_with, SolveOptions, StatementLedger};

    #[test]
    fn burgers_wave_has_the_mean_speed() {
        for (l, r, nu) in [(1.0, 0.0, 0.1), (2.0, -1.0, 0.05), (0.5, 0.25, 1.0)] {
            let p = burgers_viscous_oracle(l, r, nu).unwrap();
            assert!((p.c - 0.5 * (l + r)).abs() < 1e-9, "{}", p.c);
            assert!(p.max_deviation < 1e-6 * (l - r), "{}", p.max_deviation);
        }
        assert!(matches!(
            burgers_viscous_oracle(0.0, 1.0, 0.1),
            Err(Error::NoConnection(_))
        ));
    }

    #[test]
    fn stress_dominant_viscosity_selects_the_mixed_ledger_jump() {
        let d = forward_constructed_datum();
        let p = viscous_profile_oracle(&ViscousProfileProblem::stress_dominant(d)).unwrap();
        assert!((p.c + 1.25).abs() < 0.0125, "c = {}", p.c);
        assert!((p.a - 0.5).abs() < 0.01, "A = {}", p.a);
        assert!(p.far_field_residual < 1e-8);
        // Profiles increase from 0 to 1.
        assert!(p.k_tau.first().unwrap().abs() < 1e-6 && (p.k_tau.last().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stress_dominant_agreement_on_other_data() {
        for (left, c) in [(State::new(2.0, 1.0, 0.5), 0.2), (State::new(0.5, -0.5, 1.0), -2.0)] {
            let d = forward_datum(left, c, 0.5).unwrap();
            let p = viscous_profile_oracle(&ViscousProfileProblem::stress_dominant(d)).unwrap();
            let v = solve_system_with(&StatementLedger::mixed(), &d, &SolveOptions::without_diagnostics()).unwrap();
            let c7 = v.speed().unwrap();
            assert!((p.c - c7).abs() < 0.01 * c7.abs().max(1.0), "{} vs {c7}", p.c);
            assert!((p.a - 0.5).abs() < 0.01, "{}", p.a);
        }
    }

    #[test]
    fn equal_viscosities_land_inside_the_family() {
        let d = forward_constructed_datum();
        let p = viscous_profile_oracle(&ViscousProfileProblem::equal(d)).unwrap();
        let v = solve_system_with(&StatementLedger::all_assoc(), &d, &SolveOptions::without_diagnostics()).unwrap();
        let (lo, hi) = v.speed_interval().unwrap();
        assert!(lo <= p.c && p.c <= hi, "{} not in [{lo}, {hi}]", p.c);
        // The speed and A satisfy the family relation.
        let s = d.left.u - p.c;
        let du = d.right.u - d.left.u;
        assert!((d.left.rho * s * (s + p.a * du) - 1.0).abs() < 1e-3, "A = {}", p.a);
    }

    #[test]
    fn rejects_bad_viscosity() {
        let mut p = ViscousProfileProblem::equal(forward_constructed_datum());
        p.eps2 = 0.0;
        assert!(viscous_profile_oracle(&p).is_err());
    }
}
