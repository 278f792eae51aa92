use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::config::Experiment;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    EpsTable,
    Moments,
    Association,
    SqrtDelta,
    RiemannScalar,
    RiemannSystem,
    ViscousOracle,
    PreyPredator,
    HeatForward,
    HeatBackwardSeries,
    IllposedFamily,
    GodunovScalar,
    GodunovSystem,
}

pub const KINDS: [Kind; 13] = [
    Kind::EpsTable,
    Kind::Moments,
    Kind::Association,
    Kind::SqrtDelta,
    Kind::RiemannScalar,
    Kind::RiemannSystem,
    Kind::ViscousOracle,
    Kind::PreyPredator,
    Kind::HeatForward,
    Kind::HeatBackwardSeries,
    Kind::IllposedFamily,
    Kind::GodunovScalar,
    Kind::GodunovSystem,
];

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::EpsTable => "eps-table",
            Kind::Moments => "moments",
            Kind::Association => "association",
            Kind::SqrtDelta => "sqrt-delta",
            Kind::RiemannScalar => "riemann-scalar",
            Kind::RiemannSystem => "riemann-system",
            Kind::ViscousOracle => "viscous-oracle",
            Kind::PreyPredator => "prey-predator",
            Kind::HeatForward => "heat-forward",
            Kind::HeatBackwardSeries => "heat-backward-series",
            Kind::IllposedFamily => "illposed-family",
            Kind::GodunovScalar => "godunov-scalar",
            Kind::GodunovSystem => "godunov-system",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Kind::EpsTable => "infinitesimals eps, 2 eps, sqrt(eps), eps^2 and their products with 1/eps",
            Kind::Moments => "moments int K^n K' = 1/(n+1) of Heaviside profiles and int (K^2 - K) K' = -1/6",
            Kind::Association => "association verdict between two expression trees over a test battery",
            Kind::SqrtDelta => "sqrt(delta) is associated to zero while its square pairs to phi(0)",
            Kind::RiemannScalar => "jump speeds of u_t + u u_x = 0 and of its multiplied form",
            Kind::RiemannSystem => "Riemann verdict of the rho/u/tau system under a statement ledger",
            Kind::ViscousOracle => "traveling viscous profile selecting the speed and microstructure of a jump",
            Kind::PreyPredator => "prey and predator masses after two Dirac populations cross",
            Kind::HeatForward => "forward heat flow, with optional absorption, against the Fourier series",
            Kind::HeatBackwardSeries => "mode growth of the backward heat equation",
            Kind::IllposedFamily => "e^{-n^2 t} sin(n x) / n: small at t = 0, huge for t < 0",
            Kind::GodunovScalar => "Godunov scheme for Burgers: shock position and mass conservation",
            Kind::GodunovSystem => "Godunov scheme for the rho/u/tau system under the mixed ledger",
        }
    }

    /// The statement each experiment exercises.
    pub fn reproduces(self) -> &'static str {
        match self {
            Kind::EpsTable => "products of distinct infinitesimals with the same infinite quantity differ",
            Kind::Moments => "H^n H' is associated to H'/(n+1); the integral (H^2 - H) H' = -1/6 vanishes only weakly",
            Kind::Association => "H^N ~ H but H^N != H in G; delta^N is not associated to any distribution",
            Kind::SqrtDelta => "a field can be infinitesimal while its energy density is not",
            Kind::RiemannScalar => "multiplying a nonconservative equation by u changes the jump speed",
            Kind::RiemannSystem => "mixed =/~ ledgers restore a unique jump; full association leaves a family",
            Kind::ViscousOracle => "a vanishing-viscosity limit picks one member of the family",
            Kind::PreyPredator => "the final masses do not depend on the microscopic shapes",
            Kind::HeatForward => "a Dirac source under cubic absorption is associated to zero",
            Kind::HeatBackwardSeries => "backward heat flow amplifies mode m by e^{k m^2 t}",
            Kind::IllposedFamily => "the backward heat equation is ill posed",
            Kind::GodunovScalar => "conservative schemes capture shocks at the Rankine-Hugoniot speed",
            Kind::GodunovSystem => "the mixed ledger yields a usable finite-volume scheme",
        }
    }

    /// Name, summary, and the parameter defaults.
    pub fn describe(self) -> Value {
        json!({
            "kind": self.name(),
            "summary": self.summary(),
            "reproduces": self.reproduces(),
            "params": Experiment::defaults(self).params_value(),
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KINDS
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::UnknownExperiment(s.to_string()))
    }
}
