//! `(d_t + d_x) u1 = u1 u2`, `(d_t - d_x) u2 = -u1 u2` with Dirac initial
//! populations `a = alpha1 delta(x + 1)` (predators) and `b = alpha2 delta(x - 1)`
//! (prey).
//!
//! The grid is aligned with the characteristics (`dt = dx`), so transport is
//! an exact one-cell shift. The reaction conserves `s = u1 + u2` pointwise and
//! is logistic in `u1`; it is integrated exactly. The two are combined by
//! Strang splitting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::richardson;
use crate::profiles::{DiracProfile, ProfileSpec};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreyPredatorProblem {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Predator profile.
    pub psi1: ProfileSpec,
    /// Prey profile.
    pub psi2: ProfileSpec,
    pub eps: f64,
    pub t_final: f64,
    pub domain: (f64, f64),
    pub cells_per_eps: usize,
    /// Number of evenly spaced snapshots, endpoints included.
    pub snapshots: usize,
}

impl Default for PreyPredatorProblem {
    fn default() -> Self {
        Self {
            alpha1: 2.0,
            alpha2: 2.0,
            psi1: ProfileSpec::new("bump"),
            psi2: ProfileSpec::new("bump"),
            eps: 0.1,
            t_final: 4.0,
            domain: (-8.0, 8.0),
            cells_per_eps: 32,
            snapshots: 3,
        }
    }
}

impl PreyPredatorProblem {
    fn validate(&self) -> Result<(DiracProfile, DiracProfile)> {
        if !(self.alpha1 >= 0.0 && self.alpha2 >= 0.0) {
            return Err(Error::InvalidInput("masses must be nonnegative".into()));
        }
        if !(self.eps > 0.0) || self.cells_per_eps < 4 {
            return Err(Error::InvalidInput("need eps > 0 and at least 4 cells per eps".into()));
        }
        let (a, b) = self.domain;
        let p1 = self.psi1.dirac()?;
        let p2 = self.psi2.dirac()?;
        let reach = self.eps * p1.cutoff().max(p2.cutoff());
        if !(a < -1.0 - reach && b > 1.0 + reach) {
            return Err(Error::InvalidInput(
                "domain must contain both initial populations".into(),
            ));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidInput("final time must be positive".into()));
        }
        Ok((p1, p2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub predator: Vec<f64>,
    pub prey: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreyPredatorRun {
    /// Cell centers.
    pub x: Vec<f64>,
    pub dx: f64,
    /// Time actually reached (a whole number of steps).
    pub t_final: f64,
    pub snapshots: Vec<Snapshot>,
    /// `(t, predator mass, prey mass)` after every step.
    pub masses: Vec<(f64, f64, f64)>,
    /// Mass carried out of the domain by transport.
    pub outflow: f64,
}

impl PreyPredatorRun {
    pub fn final_masses(&self) -> (f64, f64) {
        let &(_, p, q) = self.masses.last().expect("at least the initial masses");
        (p, q)
    }
}

/// Cell averages of `alpha psi((x - center) / eps) / eps`.
fn cell_averages(psi: &DiracProfile, alpha: f64, center: f64, eps: f64, a: f64, dx: f64, n: usize) -> Vec<f64> {
    let gl = GaussLegendre::new(8);
    let lo = center - eps * psi.cutoff();
    let hi = center + eps * psi.cutoff();
    (0..n)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * dx, a + (i + 1) as f64 * dx);
            let (l, r) = (x0.max(lo), x1.min(hi));
            if l >= r {
                return 0.0;
            }
            alpha * gl.integrate(|x| psi.value((x - center) / eps) / eps, l, r) / dx
        })
        .collect()
}

/// Exact flow of `u1' = u1 u2, u2' = -u1 u2` over time `tau`.
fn react(u1: &mut [f64], u2: &mut [f64], tau: f64) {
    for (p, q) in u1.iter_mut().zip(u2.iter_mut()) {
        let s = *p + *q;
        if *p == 0.0 || *q == 0.0 {
            continue;
        }
        let np = s * *p / (*p + *q * (-s * tau).exp());
        *p = np;
        *q = (s - np).max(0.0);
    }
}

fn mass(u: &[f64], dx: f64) -> f64 {
    u.iter().sum::<f64>() * dx
}

pub fn simulate_prey_predator(problem: &PreyPredatorProblem) -> Result<PreyPredatorRun> {
    let (psi1, psi2) = problem.validate()?;
    let (a, b) = problem.domain;
    let n = ((b - a) / (problem.eps / problem.cells_per_eps as f64)).ceil() as usize;
    let dx = (b - a) / n as f64;
    let dt = dx;
    let steps = (problem.t_final / dt).round() as usize;
    let mut u1 = cell_averages(&psi1, problem.alpha1, -1.0, problem.eps, a, dx, n);
    let mut u2 = cell_averages(&psi2, problem.alpha2, 1.0, problem.eps, a, dx, n);

    let snap_every: Vec<usize> = match problem.snapshots {
        0 => Vec::new(),
        1 => vec![steps],
        k => (0..k).map(|j| (j * steps) / (k - 1)).collect(),
    };
    let mut snapshots = Vec::with_capacity(snap_every.len());
    let mut masses = Vec::with_capacity(steps + 1);
    masses.push((0.0, mass(&u1, dx), mass(&u2, dx)));
    if snap_every.first() == Some(&0) {
        snapshots.push(Snapshot {
            t: 0.0,
            predator: u1.clone(),
            prey: u2.clone(),
        });
    }
    let mut outflow = 0.0;
    let bound = 1e3 * (problem.alpha1 + problem.alpha2) / dx;
    for k in 1..=steps {
        react(&mut u1, &mut u2, 0.5 * dt);
        outflow += (u1[n - 1] + u2[0]) * dx;
        u1.rotate_right(1);
        u1[0] = 0.0;
        u2.rotate_left(1);
        u2[n - 1] = 0.0;
        react(&mut u1, &mut u2, 0.5 * dt);
        let t = k as f64 * dt;
        if let Some(v) = u1.iter().chain(&u2).find(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::BlowupDetected { t, value: *v });
        }
        masses.push((t, mass(&u1, dx), mass(&u2, dx)));
        if snap_every.contains(&k) {
            snapshots.push(Snapshot {
                t,
                predator: u1.clone(),
                prey: u2.clone(),
            });
        }
    }
    Ok(PreyPredatorRun {
        x: (0..n).map(|i| a + (i as f64 + 0.5) * dx).collect(),
        dx,
        t_final: steps as f64 * dt,
        snapshots,
        masses,
        outflow,
    })
}

/// Prey mass after the collision, `-2 log(1 - e^{-alpha1/2} + e^{-(alpha1+alpha2)/2})`.
pub fn beta(alpha1: f64, alpha2: f64) -> f64 {
    -2.0 * (-(-0.5 * alpha1).exp_m1() + (-0.5 * (alpha1 + alpha2)).exp()).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaReport {
    /// `(eps, predator mass, prey mass)` at the final time.
    pub per_eps: Vec<(f64, f64, f64)>,
    pub prey_extrapolated: f64,
    pub predator_extrapolated: f64,
    pub beta: f64,
    pub prey_relative_error: f64,
    pub predator_relative_error: f64,
}

/// Final masses over an `eps` sweep, extrapolated to `eps -> 0` by
/// Richardson on the three smallest values (assumed to halve).
pub fn prey_mass_after(problem: &PreyPredatorProblem, eps_list: &[f64]) -> Result<BetaReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidInput("need at least three eps values".into()));
    }
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let per_eps: Vec<(f64, f64, f64)> = eps_sorted
        .par_iter()
        .map(|&eps| {
            let run = simulate_prey_predator(&PreyPredatorProblem {
                eps,
                snapshots: 0,
                ..problem.clone()
            })?;
            let (p, q) = run.final_masses();
            Ok((eps, p, q))
        })
        .collect::<Result<_>>()?;
    let last3 = &per_eps[per_eps.len() - 3..];
    let prey = richardson(&last3.iter().map(|r| r.2).collect::<Vec<_>>(), 1.0, 1.0);
    let predator = richardson(&last3.iter().map(|r| r.1).collect::<Vec<_>>(), 1.0, 1.0);
    let b = beta(problem.alpha1, problem.alpha2);
    let rel = |x: f64, want: f64| (x - want).abs() / want.abs().max(f64::MIN_POSITIVE);
    Ok(BetaReport {
        prey_relative_error: rel(prey, b),
        predator_relative_error: rel(predator, problem.alpha1 + problem.alpha2 - b),
        per_eps,
        prey_extrapolated: prey,
        predator_extrapolated: predator,
        beta: b,
    })
}
