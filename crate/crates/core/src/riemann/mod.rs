//! Jump conditions for the scalar law `u_t + u u_x = 0` and the system
//!
//! ```text
//! rho_t + (rho u)_x = 0,   (rho u)_t + (rho u^2)_x = tau_x,   tau_t + u tau_x = u_x
//! ```
//!
//! under a per-equation choice between equality in the algebra and
//! association. The traveling ansatz `w = w_l + (w_r - w_l) K_w((x - ct)/eps)`
//! is substituted into each equation as a generalized function; with
//! `w_t = -c w_x` every residual is formed at `t = 0`.
//!
//! Strong equality in the first two equations integrates exactly to
//! `rho (u - c) = m` and `tau = tau_l + m (u - u_l)`. This couples the
//! profiles (`K_u = K_tau`, so `A = int K_u K_tau' = 1/2`) and leaves the
//! third equation's weak jump relation `Delta tau (u_l - c + A Delta u) =
//! Delta u` to select the speed.
//!
//! For a given left state and right velocity `u_r` the solvers return the
//! speed together with the right density and stress implied by the
//! conservative relations (the Hugoniot locus through the left state).

mod viscous;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eps_core::{classify, AsymptoticClass, DyadicGrid, TriState};
use crate::error::{Error, Result};
use crate::genfunc::{
    default_battery, pair, pair_with_floor, pairing_representative, window_integral, GenFunction1D, TestFunction,
    DEFAULT_DOMAIN, WHOLE_LINE,
};
use crate::numerics::{bisect_secant, richardson};
use crate::profiles::{mixed_moment, preset_heaviside, HeavisideProfile, ProfileFn};

pub use viscous::{
    burgers_viscous_oracle, viscous_profile_oracle, BurgersProfile, ViscousProfile, ViscousProfileProblem,
};

/// Objective tolerance of the speed searches.
pub const SPEED_TOLERANCE: f64 = 1e-10;

/// Objective tolerance of the stress relation. The speed must be resolved to
/// rounding level: any residual error in `c` leaves an O(1) limit in the
/// stress pairing and spoils the association diagnostics.
const STRESS_TOLERANCE: f64 = 1e-15;

/// Relative mismatch allowed between a given right state and the one implied
/// by the jump relations.
pub const LOCUS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    StrongEq,
    Assoc,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::StrongEq => "=",
            Tag::Assoc => "~",
        })
    }
}

/// Per-equation choice between `=` and `~`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementLedger(Vec<Tag>);

impl StatementLedger {
    pub fn new(tags: Vec<Tag>, equations: usize) -> Result<Self> {
        if tags.len() != equations {
            return Err(Error::InvalidInput(format!(
                "ledger has {} entries for {equations} equations",
                tags.len()
            )));
        }
        Ok(Self(tags))
    }

    pub fn scalar(tag: Tag) -> Self {
        Self(vec![tag])
    }

    /// All three equations stated with association.
    pub fn all_assoc() -> Self {
        Self(vec![Tag::Assoc; 3])
    }

    /// Conservation laws with `=`, stress equation with `~`.
    pub fn mixed() -> Self {
        Self(vec![Tag::StrongEq, Tag::StrongEq, Tag::Assoc])
    }

    pub fn all_strong() -> Self {
        Self(vec![Tag::StrongEq; 3])
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }

    /// Parses strings such as `"==~"` or `"= = ~"`.
    pub fn parse(s: &str) -> Result<Self> {
        let tags: Vec<Tag> = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                '=' => Ok(Tag::StrongEq),
                '~' => Ok(Tag::Assoc),
                other => Err(Error::InvalidInput(format!("ledger symbol `{other}`"))),
            })
            .collect::<Result<_>>()?;
        if tags.is_empty() {
            return Err(Error::InvalidInput("empty ledger".into()));
        }
        Ok(Self(tags))
    }
}

impl fmt::Display for StatementLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|t| write!(f, "{t}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarData {
    pub u_l: f64,
    pub u_r: f64,
}

/// Density, velocity and stress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub rho: f64,
    pub u: f64,
    pub tau: f64,
}

impl State {
    pub fn new(rho: f64, u: f64, tau: f64) -> Self {
        Self { rho, u, tau }
    }

    fn close_to(&self, other: &State, tol: f64) -> bool {
        let near = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
        near(self.rho, other.rho) && near(self.u, other.u) && near(self.tau, other.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemData {
    pub left: State,
    pub right: State,
}

impl SystemData {
    pub fn validate(&self) -> Result<()> {
        for s in [self.left, self.right] {
            if !(s.rho > 0.0) || !s.u.is_finite() || !s.tau.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "state {s:?} needs rho > 0 and finite entries"
                )));
            }
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.left == self.right
    }

    /// Speed from the mass relation, when the density jumps.
    pub fn mass_speed(&self) -> Option<f64> {
        let (l, r) = (self.left, self.right);
        let drho = r.rho - l.rho;
        (drho != 0.0).then(|| (r.rho * r.u - l.rho * l.u) / drho)
    }

    /// Sign of the mass flux through the jump implied by the data; selects
    /// the branch of the quadratic jump relation.
    pub fn flux_sign(&self) -> f64 {
        match self.mass_speed() {
            Some(c) => (self.left.u - c).signum(),
            None => 1.0,
        }
    }
}

/// The data `(1, 0, 0) | (25/7, -9/10, -9/8)`: built from the speed `-5/4`
/// with `A = 1/2`, so its answer is known before any solver runs.
pub fn forward_constructed_datum() -> SystemData {
    forward_datum(State::new(1.0, 0.0, 0.0), -1.25, 0.5).expect("constructed datum is admissible")
}

/// Builds the right state connected to `left` by a jump of speed `c` whose
/// microstructure parameter is `a`: the jump relations solved forward.
pub fn forward_datum(left: State, c: f64, a: f64) -> Result<SystemData> {
    let s = left.u - c;
    if s == 0.0 || a == 0.0 || !(left.rho > 0.0) {
        return Err(Error::InvalidInput("degenerate forward construction".into()));
    }
    let m = left.rho * s;
    let du = (1.0 / m - s) / a;
    let u_r = left.u + du;
    let rho_r = m / (u_r - c);
    if !(rho_r > 0.0) || !rho_r.is_finite() {
        return Err(Error::InvalidInput(format!(
            "forward construction gives rho_r = {rho_r}"
        )));
    }
    Ok(SystemData {
        left,
        right: State::new(rho_r, u_r, left.tau + m * du),
    })
}

/// Right state on the Hugoniot locus of the conservative relations.
pub fn implied_right_state(left: State, u_r: f64, c: f64) -> Result<State> {
    let m = left.rho * (left.u - c);
    let rho_r = m / (u_r - c);
    if !(rho_r > 0.0) || !rho_r.is_finite() {
        return Err(Error::InvalidInput(format!("speed {c} gives rho_r = {rho_r}")));
    }
    Ok(State::new(rho_r, u_r, left.tau + m * (u_r - left.u)))
}

/// Classification summary of one equation's residual across the battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualDiagnostic {
    pub equation: usize,
    pub tag: Tag,
    pub negligible: TriState,
    pub associated: TriState,
    /// Smallest fitted pairing order across the battery (None when all
    /// pairings are negligible).
    pub leading_order: Option<f64>,
    /// Whether the ledger's contract for this equation holds.
    pub satisfied: bool,
}

fn summarize(equation: usize, tag: Tag, classes: &[AsymptoticClass]) -> ResidualDiagnostic {
    let all = |f: fn(&AsymptoticClass) -> TriState| {
        if classes.iter().all(|c| f(c).is_true()) {
            TriState::True
        } else if classes.iter().any(|c| f(c).is_false()) {
            TriState::False
        } else {
            TriState::Indeterminate
        }
    };
    let negligible = all(|c| c.negligible);
    let associated = all(|c| c.associated_to_zero);
    let leading_order = classes
        .iter()
        .filter(|c| !c.negligible.is_true())
        .filter_map(|c| c.leading_order)
        .min_by(|a, b| a.partial_cmp(b).unwrap());
    let satisfied = match tag {
        Tag::StrongEq => negligible.is_true(),
        Tag::Assoc => associated.is_true(),
    };
    ResidualDiagnostic {
        equation,
        tag,
        negligible,
        associated,
        leading_order,
        satisfied,
    }
}

/// A member of a one-parameter family of jumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMember {
    pub a: f64,
    pub c: f64,
    pub profiles: String,
    pub right: State,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub c: f64,
    pub profiles: String,
    pub phi: TestFunction,
    pub class: AsymptoticClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictKind {
    Unique {
        c: f64,
        a: Option<f64>,
        profiles: String,
        right: Option<State>,
    },
    Family {
        members: Vec<FamilyMember>,
        /// The microstructure parameter for which the family passes through
        /// the given right state, when it does.
        data_a: Option<f64>,
    },
    NoSolution {
        reason: String,
        search_space: String,
        witnesses: Vec<Witness>,
    },
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpVerdict {
    pub ledger: String,
    #[serde(flatten)]
    pub kind: VerdictKind,
    pub diagnostics: Vec<ResidualDiagnostic>,
}

impl JumpVerdict {
    fn plain(ledger: &StatementLedger, kind: VerdictKind) -> Self {
        Self {
            ledger: ledger.to_string(),
            kind,
            diagnostics: Vec::new(),
        }
    }

    pub fn speed(&self) -> Option<f64> {
        match &self.kind {
            VerdictKind::Unique { c, .. } => Some(*c),
            _ => None,
        }
    }

    pub fn is_unique(&self) -> bool {
        matches!(self.kind, VerdictKind::Unique { .. })
    }

    pub fn is_family(&self) -> bool {
        matches!(self.kind, VerdictKind::Family { .. })
    }

    pub fn is_no_solution(&self) -> bool {
        matches!(self.kind, VerdictKind::NoSolution { .. })
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.kind, VerdictKind::Degenerate)
    }

    /// `(min, max)` of the family speeds.
    pub fn speed_interval(&self) -> Option<(f64, f64)> {
        match &self.kind {
            VerdictKind::Family { members, .. } if !members.is_empty() => {
                Some(members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
                    (lo.min(m.c), hi.max(m.c))
                }))
            }
            _ => None,
        }
    }

    /// `A,c` rows of a family verdict.
    pub fn family_csv(&self) -> Option<String> {
        match &self.kind {
            VerdictKind::Family { members, .. } => {
                let mut s = String::from("A,c\n");
                for m in members {
                    s.push_str(&format!("{:.16e},{:.16e}\n", m.a, m.c));
                }
                Some(s)
            }
            _ => None,
        }
    }

    pub fn contract_holds(&self) -> bool {
        self.diagnostics.iter().all(|d| d.satisfied)
    }
}

// ---------------------------------------------------------------------------
// Scalar law

/// `u_t + u u_x` (as stated) or the same multiplied by `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarEquation {
    Transport,
    Multiplied,
}

fn ramp(left: f64, right: f64, k: &HeavisideProfile, domain: (f64, f64)) -> GenFunction1D {
    let base = GenFunction1D::constant(left, domain);
    if left == right {
        base
    } else {
        base.add(&GenFunction1D::heaviside(0.0, k.clone(), domain).scale(right - left))
    }
}

/// Residual of the scalar equation under the traveling ansatz, as a
/// generalized function of `x` at `t = 0`.
pub fn scalar_residual(
    eq: ScalarEquation,
    data: ScalarData,
    c: f64,
    k: &HeavisideProfile,
    domain: (f64, f64),
) -> Result<GenFunction1D> {
    let u = ramp(data.u_l, data.u_r, k, domain);
    let du = u.derivative()?;
    let transport = u.add(&GenFunction1D::constant(-c, domain)).mul(&du);
    Ok(match eq {
        ScalarEquation::Transport => transport,
        ScalarEquation::Multiplied => u.mul(&transport),
    })
}

pub fn scalar_weak_form_residual(
    eq: ScalarEquation,
    data: ScalarData,
    c: f64,
    k: &HeavisideProfile,
    phi: &TestFunction,
    eps: f64,
) -> Result<f64> {
    pair(&scalar_residual(eq, data, c, k, DEFAULT_DOMAIN)?, phi, eps)
}

/// `c = (u_l + u_r) / 2` from the equation as stated.
pub fn scalar_speed(data: ScalarData) -> JumpVerdict {
    let ledger = StatementLedger::scalar(Tag::Assoc);
    if data.u_l == data.u_r {
        return JumpVerdict::plain(&ledger, VerdictKind::Degenerate);
    }
    JumpVerdict::plain(
        &ledger,
        VerdictKind::Unique {
            c: 0.5 * (data.u_l + data.u_r),
            a: None,
            profiles: "any".into(),
            right: None,
        },
    )
}

/// Speed obtained from the multiplied equation:
/// `c = (2/3) (u_l^2 + u_l u_r + u_r^2) / (u_l + u_r)`.
pub fn scalar_speed_variant(data: ScalarData) -> JumpVerdict {
    let ledger = StatementLedger::scalar(Tag::Assoc);
    if data.u_l == data.u_r {
        return JumpVerdict::plain(&ledger, VerdictKind::Degenerate);
    }
    let (l, r) = (data.u_l, data.u_r);
    let den = l + r;
    if den == 0.0 {
        return JumpVerdict::plain(
            &ledger,
            VerdictKind::NoSolution {
                reason: "zero denominator: u_l + u_r = 0".into(),
                search_space: "closed form".into(),
                witnesses: Vec::new(),
            },
        );
    }
    JumpVerdict::plain(
        &ledger,
        VerdictKind::Unique {
            c: 2.0 / 3.0 * (l * l + l * r + r * r) / den,
            a: None,
            profiles: "any".into(),
            right: None,
        },
    )
}

/// Weak-form oracle: the root in `c` of `<residual_eps, phi>` at a sequence
/// of `eps`, extrapolated to `eps -> 0`.
pub fn weak_form_speed(eq: ScalarEquation, data: ScalarData, k: &HeavisideProfile, phi: &TestFunction) -> Result<f64> {
    if data.u_l == data.u_r {
        return Err(Error::InvalidInput("no jump".into()));
    }
    let lo = data.u_l.min(data.u_r);
    let hi = data.u_l.max(data.u_r);
    let span = hi - lo;
    let roots: Vec<f64> = (6..12)
        .into_par_iter()
        .map(|j| {
            let eps = 0.5f64.powi(j);
            // The residual is affine in c: r(c) = p - c q.
            let p = pair(&scalar_residual(eq, data, 0.0, k, DEFAULT_DOMAIN)?, phi, eps)?;
            let q = p - pair(&scalar_residual(eq, data, 1.0, k, DEFAULT_DOMAIN)?, phi, eps)?;
            if q == 0.0 {
                return Err(Error::SearchFailure("residual does not depend on c".into()));
            }
            bisect_secant(
                |c| p - c * q,
                lo - 4.0 * span - 1.0,
                hi + 4.0 * span + 1.0,
                SPEED_TOLERANCE * p.abs().max(q.abs()),
            )
        })
        .collect::<Result<_>>()?;
    Ok(richardson(&roots, 1.0, 1.0))
}

// ---------------------------------------------------------------------------
// System

/// Profiles of the three unknowns.
#[derive(Debug, Clone)]
pub struct SystemProfiles {
    pub rho: HeavisideProfile,
    pub u: HeavisideProfile,
    pub tau: HeavisideProfile,
}

impl SystemProfiles {
    pub fn uniform(k: &HeavisideProfile) -> Self {
        Self {
            rho: k.clone(),
            u: k.clone(),
            tau: k.clone(),
        }
    }

    pub fn describe(&self) -> String {
        format!("rho:{} u:{} tau:{}", self.rho.tag(), self.u.tag(), self.tau.tag())
    }

    /// `A = int K_u K_tau'`.
    pub fn microstructure(&self) -> Result<f64> {
        mixed_moment(&self.u, &self.tau)
    }
}

struct Ansatz {
    rho: GenFunction1D,
    u: GenFunction1D,
    tau: GenFunction1D,
}

fn ansatz(data: &SystemData, p: &SystemProfiles, domain: (f64, f64)) -> Ansatz {
    let (l, r) = (data.left, data.right);
    Ansatz {
        rho: ramp(l.rho, r.rho, &p.rho, domain),
        u: ramp(l.u, r.u, &p.u, domain),
        tau: ramp(l.tau, r.tau, &p.tau, domain),
    }
}

/// The three residuals `(rho u)' - c rho'`, `(rho u^2)' - c (rho u)' - tau'`,
/// `(u - c) tau' - u'` of the traveling ansatz at `t = 0`.
pub fn system_residuals(
    data: &SystemData,
    c: f64,
    p: &SystemProfiles,
    domain: (f64, f64),
) -> Result<[GenFunction1D; 3]> {
    let w = ansatz(data, p, domain);
    let q = w.rho.mul(&w.u);
    let drho = w.rho.derivative()?;
    let dq = q.derivative()?;
    let dtau = w.tau.derivative()?;
    let du = w.u.derivative()?;
    let eq1 = dq.sub(&drho.scale(c));
    let eq2 = q.mul(&w.u).derivative()?.sub(&dq.scale(c)).sub(&dtau);
    let eq3 = w.u.add(&GenFunction1D::constant(-c, domain)).mul(&dtau).sub(&du);
    Ok([eq1, eq2, eq3])
}

/// Residual of `u_t + u u_x - tau_x / rho` under the ansatz.
pub fn derived_identity_residual(
    data: &SystemData,
    c: f64,
    p: &SystemProfiles,
    domain: (f64, f64),
) -> Result<GenFunction1D> {
    let w = ansatz(data, p, domain);
    let du = w.u.derivative()?;
    let dtau = w.tau.derivative()?;
    Ok(w.u
        .add(&GenFunction1D::constant(-c, domain))
        .mul(&du)
        .sub(&dtau.mul(&w.rho.recip())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub equation: usize,
    pub tag: Tag,
    pub value: f64,
    pub floor: f64,
}

/// Pairings of the three residuals with `phi` at scale `eps`.
pub fn weak_form_residual(
    ledger: &StatementLedger,
    data: &SystemData,
    c: f64,
    p: &SystemProfiles,
    phi: &TestFunction,
    eps: f64,
) -> Result<Vec<ResidualEntry>> {
    let ledger = StatementLedger::new(ledger.tags().to_vec(), 3)?;
    let (a, b) = phi.support();
    let domain = (a.min(-1.0) - 1.0, b.max(1.0) + 1.0);
    system_residuals(data, c, p, domain)?
        .iter()
        .zip(ledger.tags())
        .enumerate()
        .map(|(i, (r, &tag))| {
            let v = pair_with_floor(r, phi, eps)?;
            Ok(ResidualEntry {
                equation: i + 1,
                tag,
                value: v.value,
                floor: v.floor,
            })
        })
        .collect()
}

/// Profiles forced by strong equality in the conservation laws: `K_rho` is
/// free, `u = c + m / rho` and `tau = tau_l + m (u - u_l)`.
pub fn coupled_profiles(left: State, right: State, c: f64, k_rho: &HeavisideProfile) -> Result<SystemProfiles> {
    let m = left.rho * (left.u - c);
    let (rho_l, drho, du, dtau) = (left.rho, right.rho - left.rho, right.u - left.u, right.tau - left.tau);
    if du == 0.0 || dtau == 0.0 {
        return Err(Error::InvalidInput("coupled profiles need jumps in u and tau".into()));
    }
    let u_of = {
        let k = k_rho.clone();
        move |y: f64| m / (rho_l + drho * k.value(y))
    };
    let ku: ProfileFn = {
        let u_of = u_of.clone();
        let u_l = m / rho_l;
        Arc::new(move |y| (u_of(y) - u_l) / du)
    };
    let dku: ProfileFn = {
        let k = k_rho.clone();
        Arc::new(move |y| {
            let rho = rho_l + drho * k.value(y);
            -m * drho * k.derivative(y) / (rho * rho * du)
        })
    };
    let k_u = HeavisideProfile::custom(
        format!("coupled({})", k_rho.tag()),
        k_rho.cutoff(),
        vec![ku, dku],
        false,
    )?;
    // tau - tau_l = m (u - u_l) gives the stress profile.
    let scale = m * du / dtau;
    let (ku2, dku2) = {
        let a = k_u.clone();
        let b = k_u.clone();
        (
            Arc::new(move |y| scale * a.value(y)) as ProfileFn,
            Arc::new(move |y| scale * b.derivative(y)) as ProfileFn,
        )
    };
    let k_tau = HeavisideProfile::custom(
        format!("coupled({})", k_rho.tag()),
        k_rho.cutoff(),
        vec![ku2, dku2],
        false,
    )?;
    Ok(SystemProfiles {
        rho: k_rho.clone(),
        u: k_u,
        tau: k_tau,
    })
}

/// Knobs of the system solver.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Profile of the density used where it is free.
    pub rho_profile: HeavisideProfile,
    /// Battery and grid of the residual diagnostics; `None` skips them.
    pub diagnostics: Option<(Vec<TestFunction>, DyadicGrid)>,
    /// Profile pairs `(K_u, K_tau)` of the association family.
    pub family_pairs: Vec<(HeavisideProfile, HeavisideProfile)>,
    /// Density profiles searched for a strong solution of all three
    /// equations.
    pub strong_search_profiles: Vec<HeavisideProfile>,
    /// Number of candidate speeds in that search.
    pub strong_search_speeds: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rho_profile: preset_heaviside("tanh").expect("preset"),
            diagnostics: Some((
                default_battery(DEFAULT_DOMAIN).expect("battery"),
                DyadicGrid::coarse(0.5, 40, 12),
            )),
            family_pairs: default_family_pairs().expect("presets"),
            strong_search_profiles: ["tanh", "erf", "skewed", "smoothstep"]
                .iter()
                .map(|t| preset_heaviside(t).expect("preset"))
                .chain(std::iter::once(
                    preset_heaviside("tanh")
                        .and_then(|k| k.transformed(0.0, 3.0))
                        .expect("preset"),
                ))
                .collect(),
            strong_search_speeds: 7,
        }
    }
}

impl SolveOptions {
    pub fn without_diagnostics() -> Self {
        Self {
            diagnostics: None,
            ..Self::default()
        }
    }
}

/// Shifted and rescaled preset pairs witnessing a spread of `A` values.
pub fn default_family_pairs() -> Result<Vec<(HeavisideProfile, HeavisideProfile)>> {
    let tanh = preset_heaviside("tanh")?;
    let erf = preset_heaviside("erf")?;
    let smooth = preset_heaviside("smoothstep")?;
    let mut pairs = Vec::new();
    for s in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
        pairs.push((tanh.transformed(s, 1.0)?, tanh.clone()));
    }
    for s in [-0.75, 0.75] {
        pairs.push((erf.transformed(s, 1.0)?, erf.clone()));
    }
    // Unit shifts keep the kinks of the compact profile on quadrature
    // breakpoints.
    for s in [-1.0, 1.0] {
        pairs.push((smooth.transformed(s, 1.0)?, smooth.clone()));
    }
    pairs.push((preset_heaviside("skewed")?, tanh.clone()));
    pairs.push((tanh.clone(), preset_heaviside("skewed")?));
    pairs.push((preset_heaviside("overshoot")?, tanh.clone()));
    pairs.push((tanh.transformed(0.0, 3.0)?, tanh.clone()));
    Ok(pairs)
}

/// Bracket of `s = u_l - c` on the branch with mass-flux sign `sign`, where
/// the implied right density is positive.
fn flux_bracket(left: State, u_r: f64, sign: f64) -> (f64, f64) {
    let du = u_r - left.u;
    // rho_r = rho_l s / (s + du) > 0 needs s and s + du of the same sign.
    let edge = if sign > 0.0 { 0f64.max(-du) } else { 0f64.min(-du) };
    let reach = 2.0 * (du.abs() + 1.0 / left.rho.sqrt()) + 1.0;
    let pad = 1e-6 * (1.0 + edge.abs());
    if sign > 0.0 {
        (edge + pad, edge + reach)
    } else {
        (edge - reach, edge - pad)
    }
}

/// Root in `c` of the integrated third residual for given profile builder.
fn stress_speed<F>(left: State, u_r: f64, sign: f64, profiles: F) -> Result<f64>
where
    F: Fn(f64, &SystemData) -> Result<SystemProfiles>,
{
    let (s_lo, s_hi) = flux_bracket(left, u_r, sign);
    let objective = |s: f64| -> f64 {
        let c = left.u - s;
        let eval = || -> Result<f64> {
            let data = SystemData {
                left,
                right: implied_right_state(left, u_r, c)?,
            };
            let p = profiles(c, &data)?;
            let [_, _, eq3] = system_residuals(&data, c, &p, WHOLE_LINE)?;
            let l = p.u.cutoff().max(p.tau.cutoff()).max(p.rho.cutoff());
            window_integral(&eq3, 0.0, l, 1.0)
        };
        eval().unwrap_or(f64::NAN)
    };
    let s = bisect_secant(objective, s_lo, s_hi, STRESS_TOLERANCE)?;
    Ok(left.u - s)
}

fn diagnose(
    ledger: &StatementLedger,
    data: &SystemData,
    c: f64,
    p: &SystemProfiles,
    opts: &SolveOptions,
) -> Result<Vec<ResidualDiagnostic>> {
    let Some((battery, grid)) = &opts.diagnostics else {
        return Ok(Vec::new());
    };
    let residuals = system_residuals(data, c, p, DEFAULT_DOMAIN)?;
    residuals
        .iter()
        .zip(ledger.tags())
        .enumerate()
        .map(|(i, (r, &tag))| {
            let classes: Vec<AsymptoticClass> = battery
                .iter()
                .map(|phi| classify(&pairing_representative(r, phi, grid)?, grid))
                .collect::<Result<_>>()?;
            Ok(summarize(i + 1, tag, &classes))
        })
        .collect()
}

/// Solves the Riemann problem of the system under `ledger`.
pub fn solve_system(ledger: &StatementLedger, data: &SystemData) -> Result<JumpVerdict> {
    solve_system_with(ledger, data, &SolveOptions::default())
}

pub fn solve_system_with(ledger: &StatementLedger, data: &SystemData, opts: &SolveOptions) -> Result<JumpVerdict> {
    let ledger = StatementLedger::new(ledger.tags().to_vec(), 3)?;
    data.validate()?;
    if data.is_trivial() || data.right.u == data.left.u {
        return Ok(JumpVerdict::plain(&ledger, VerdictKind::Degenerate));
    }
    use Tag::*;
    match ledger.tags() {
        [Assoc, Assoc, Assoc] => solve_family(&ledger, data, opts),
        [StrongEq, StrongEq, Assoc] => solve_mixed(&ledger, data, opts),
        [StrongEq, StrongEq, StrongEq] => solve_all_strong(&ledger, data, opts),
        _ => Err(Error::InvalidInput(format!(
            "ledger {ledger} is not supported; use ~~~, ==~ or ==="
        ))),
    }
}

fn solve_mixed(ledger: &StatementLedger, data: &SystemData, opts: &SolveOptions) -> Result<JumpVerdict> {
    let left = data.left;
    let u_r = data.right.u;
    let sign = data.flux_sign();
    let k_rho = opts.rho_profile.clone();
    let c = stress_speed(left, u_r, sign, |c, d| coupled_profiles(left, d.right, c, &k_rho))?;
    let right = implied_right_state(left, u_r, c)?;
    let implied = SystemData { left, right };
    let profiles = coupled_profiles(left, right, c, &k_rho)?;
    let a = profiles.microstructure()?;
    if !right.close_to(&data.right, LOCUS_TOLERANCE) {
        return Ok(JumpVerdict::plain(
            ledger,
            VerdictKind::NoSolution {
                reason: format!(
                    "right state off the locus: the jump from the left state to u_r = {u_r} has speed {c} and \
                     requires rho_r = {}, tau_r = {}",
                    right.rho, right.tau
                ),
                search_space: "speeds on the given flux branch".into(),
                witnesses: Vec::new(),
            },
        ));
    }
    let diagnostics = diagnose(ledger, &implied, c, &profiles, opts)?;
    Ok(JumpVerdict {
        ledger: ledger.to_string(),
        kind: VerdictKind::Unique {
            c,
            a: Some(a),
            profiles: profiles.describe(),
            right: Some(right),
        },
        diagnostics,
    })
}

fn solve_family(ledger: &StatementLedger, data: &SystemData, opts: &SolveOptions) -> Result<JumpVerdict> {
    let left = data.left;
    let u_r = data.right.u;
    let sign = data.flux_sign();
    let results: Vec<Option<(FamilyMember, SystemProfiles)>> = opts
        .family_pairs
        .par_iter()
        .map(|(ku, ktau)| {
            let a = mixed_moment(ku, ktau)?;
            let found = stress_speed(left, u_r, sign, |_, _| {
                Ok(SystemProfiles {
                    rho: ku.clone(),
                    u: ku.clone(),
                    tau: ktau.clone(),
                })
            });
            match found {
                Ok(c) => {
                    let p = SystemProfiles {
                        rho: ku.clone(),
                        u: ku.clone(),
                        tau: ktau.clone(),
                    };
                    Ok(Some((
                        FamilyMember {
                            a,
                            c,
                            profiles: p.describe(),
                            right: implied_right_state(left, u_r, c)?,
                        },
                        p,
                    )))
                }
                // No jump on this branch for this microstructure.
                Err(Error::SearchFailure(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut found: Vec<(FamilyMember, SystemProfiles)> = results.into_iter().flatten().collect();
    if found.is_empty() {
        return Ok(JumpVerdict::plain(
            ledger,
            VerdictKind::NoSolution {
                reason: "no profile pair admits a jump on this branch".into(),
                search_space: format!("{} profile pairs", opts.family_pairs.len()),
                witnesses: Vec::new(),
            },
        ));
    }
    found.sort_by(|x, y| x.0.a.partial_cmp(&y.0.a).unwrap());

    let mut diagnostics: Vec<ResidualDiagnostic> = Vec::new();
    for (member, p) in &found {
        let d = SystemData {
            left,
            right: member.right,
        };
        for diag in diagnose(ledger, &d, member.c, p, opts)? {
            // Keep, per equation, the least favourable member.
            match diagnostics.iter_mut().find(|x| x.equation == diag.equation) {
                Some(x) if x.satisfied && !diag.satisfied => *x = diag,
                Some(_) => {}
                None => diagnostics.push(diag),
            }
        }
    }

    let data_a = data.mass_speed().and_then(|c| {
        let s = left.u - c;
        let du = u_r - left.u;
        let a = (1.0 / (left.rho * s) - s) / du;
        let on_locus = implied_right_state(left, u_r, c).is_ok_and(|r| r.close_to(&data.right, LOCUS_TOLERANCE));
        (on_locus && a.is_finite()).then_some(a)
    });
    Ok(JumpVerdict {
        ledger: ledger.to_string(),
        kind: VerdictKind::Family {
            members: found.into_iter().map(|(m, _)| m).collect(),
            data_a,
        },
        diagnostics,
    })
}

fn solve_all_strong(ledger: &StatementLedger, data: &SystemData, opts: &SolveOptions) -> Result<JumpVerdict> {
    let left = data.left;
    let u_r = data.right.u;
    let sign = data.flux_sign();
    let (battery, grid) = opts.diagnostics.clone().unwrap_or_else(|| {
        (
            default_battery(DEFAULT_DOMAIN).expect("battery"),
            DyadicGrid::coarse(0.5, 40, 12),
        )
    });
    // Candidate speeds span the admissible branch and include the speed
    // selected by the stress relation in association form.
    let (s_lo, s_hi) = flux_bracket(left, u_r, sign);
    let k0 = opts.rho_profile.clone();
    let mut speeds: Vec<f64> = (0..opts.strong_search_speeds.max(2))
        .map(|i| {
            let t = (i as f64 + 0.5) / opts.strong_search_speeds.max(2) as f64;
            left.u - (s_lo + t * (s_hi - s_lo))
        })
        .collect();
    if let Ok(c) = stress_speed(left, u_r, sign, |c, d| coupled_profiles(left, d.right, c, &k0)) {
        speeds.push(c);
    }
    let candidates: Vec<(f64, HeavisideProfile)> = speeds
        .iter()
        .flat_map(|&c| opts.strong_search_profiles.iter().map(move |k| (c, k.clone())))
        .collect();
    let witnesses: Vec<Option<Witness>> = candidates
        .iter()
        .map(|(c, k)| {
            let right = implied_right_state(left, u_r, *c)?;
            let p = coupled_profiles(left, right, *c, k)?;
            let [_, _, eq3] = system_residuals(&SystemData { left, right }, *c, &p, DEFAULT_DOMAIN)?;
            for phi in &battery {
                let class = classify(&pairing_representative(&eq3, phi, &grid)?, &grid)?;
                if class.negligible.is_false() {
                    return Ok(Some(Witness {
                        c: *c,
                        profiles: p.describe(),
                        phi: *phi,
                        class,
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let search_space = format!(
        "{} speeds x {} density profiles ({}), profiles of u and tau coupled by the strong conservation laws",
        speeds.len(),
        opts.strong_search_profiles.len(),
        opts.strong_search_profiles
            .iter()
            .map(|k| k.tag())
            .collect::<Vec<_>>()
            .join(", ")
    );
    if let Some(i) = witnesses.iter().position(Option::is_none) {
        let (c, k) = &candidates[i];
        return Err(Error::SearchFailure(format!(
            "no non-negligibility witness for speed {c} with density profile {}; nonexistence not established",
            k.tag()
        )));
    }
    Ok(JumpVerdict::plain(
        ledger,
        VerdictKind::NoSolution {
            reason: "the stress residual u'(m (u - c) - 1) is not negligible for any candidate".into(),
            search_space,
            witnesses: witnesses.into_iter().flatten().collect(),
        },
    ))
}

/// Classification of the derived residual `u_t + u u_x - tau_x / rho` for
/// a solution `(c, profiles)` of the Riemann problem.
pub fn derived_identity_check(
    data: &SystemData,
    c: f64,
    profiles: &SystemProfiles,
    battery: &[TestFunction],
    grid: &DyadicGrid,
) -> Result<ResidualDiagnostic> {
    let r = derived_identity_residual(data, c, profiles, DEFAULT_DOMAIN)?;
    let classes: Vec<AsymptoticClass> = battery
        .iter()
        .map(|phi| classify(&pairing_representative(&r, phi, grid)?, grid))
        .collect::<Result<_>>()?;
    Ok(summarize(0, Tag::StrongEq, &classes))
}
