//! Generalized numbers as representatives `eps -> f(eps)`.
//!
//! A representative is *moderate* when `|f(eps)| <= C eps^-N` near zero and
//! *negligible* when `|f(eps)| <= C eps^q` for every `q`. Negligible
//! representatives form an ideal of the moderate ones and generalized numbers
//! are the classes of the quotient. Closed-form representatives are
//! classified exactly from their leading term; everything else goes through a
//! log-log slope fit on a dyadic grid and is reported with numeric confidence.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::fit_line;

pub type EpsFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Largest power tested by the numeric negligibility rule.
pub const Q_MAX: i32 = 12;
/// Slopes within this band of zero are not decided either way.
pub const SLOPE_TOLERANCE: f64 = 0.15;
/// Slopes within this band of zero are read as a nonzero finite limit.
const FLAT_BAND: f64 = 0.05;
/// Log-log fits worse than this (natural-log units) are rejected.
const MAX_FIT_RMS: f64 = 0.35;
const MIN_FIT_POINTS: usize = 4;

/// `coeff * eps^power * ln(1/eps)^log_power * exp(-exp_rate / eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    #[serde(default)]
    pub power: f64,
    #[serde(default)]
    pub log_power: i32,
    #[serde(default)]
    pub exp_rate: f64,
}

impl Monomial {
    fn eval(&self, eps: f64) -> f64 {
        let mut v = self.coeff * eps.powf(self.power);
        if self.log_power != 0 {
            v *= (1.0 / eps).ln().powi(self.log_power);
        }
        if self.exp_rate != 0.0 {
            v *= (-self.exp_rate / eps).exp();
        }
        v
    }

    fn same_shape(&self, other: &Monomial) -> bool {
        self.power == other.power && self.log_power == other.log_power && self.exp_rate == other.exp_rate
    }
}

/// Finite sums of monomials, kept in canonical form (like terms merged,
/// zero coefficients dropped).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedForm {
    pub terms: Vec<Monomial>,
}

impl ClosedForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0.0, 0, 0.0)
    }

    pub fn power(coeff: f64, power: f64) -> Self {
        Self::monomial(coeff, power, 0, 0.0)
    }

    /// `coeff * exp(-rate / eps)`; only decaying exponentials belong to the
    /// grammar.
    pub fn exp_decay(coeff: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(Self::monomial(coeff, 0.0, 0, rate))
    }

    pub fn monomial(coeff: f64, power: f64, log_power: i32, exp_rate: f64) -> Self {
        Self::from_terms(vec![Monomial {
            coeff,
            power,
            log_power,
            exp_rate,
        }])
    }

    pub fn from_terms(terms: Vec<Monomial>) -> Self {
        let mut merged: Vec<Monomial> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.iter_mut().find(|m| m.same_shape(&t)) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|m| m.coeff != 0.0);
        merged.sort_by(|a, b| {
            (a.exp_rate, a.power, -a.log_power)
                .partial_cmp(&(b.exp_rate, b.power, -b.log_power))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Self { terms: merged }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.exp_rate < 0.0 || !t.coeff.is_finite() || !t.power.is_finite() {
                return Err(Error::InvalidInput(format!("monomial outside grammar: {t:?}")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, eps: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(eps)).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).copied().collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(Monomial {
                    coeff: a.coeff * b.coeff,
                    power: a.power + b.power,
                    log_power: a.log_power + b.log_power,
                    exp_rate: a.exp_rate + b.exp_rate,
                });
            }
        }
        Self::from_terms(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| Monomial {
                    coeff: t.coeff * c,
                    ..*t
                })
                .collect(),
        )
    }

    /// Dominant algebraic term as `eps -> 0`, ignoring exponentially small
    /// terms. `None` when the form is negligible.
    fn leading(&self) -> Option<&Monomial> {
        self.terms.iter().filter(|t| t.exp_rate == 0.0).min_by(|a, b| {
            (a.power, -a.log_power)
                .partial_cmp(&(b.power, -b.log_power))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coeff)?;
            if t.power != 0.0 {
                write!(f, "*eps^{}", t.power)?;
            }
            if t.log_power != 0 {
                write!(f, "*log(1/eps)^{}", t.log_power)?;
            }
            if t.exp_rate != 0.0 {
                write!(f, "*exp(-{}/eps)", t.exp_rate)?;
            }
        }
        Ok(())
    }
}

/// A representative of a generalized number.
#[derive(Clone)]
pub struct EpsRepresentative {
    eval: EpsFn,
    form: Option<ClosedForm>,
    /// Absolute roundoff floor: samples below it are indistinguishable from 0.
    floor: Option<EpsFn>,
}

impl fmt::Debug for EpsRepresentative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Some(c) => write!(f, "EpsRepresentative({c})"),
            None => write!(f, "EpsRepresentative(opaque)"),
        }
    }
}

impl From<ClosedForm> for EpsRepresentative {
    fn from(form: ClosedForm) -> Self {
        let f = form.clone();
        Self {
            eval: Arc::new(move |e| f.eval(e)),
            form: Some(form),
            floor: None,
        }
    }
}

impl EpsRepresentative {
    pub fn opaque<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self {
            eval: Arc::new(f),
            form: None,
            floor: None,
        }
    }

    /// Opaque representative whose samples carry a known roundoff floor.
    pub fn with_floor<F, G>(f: F, floor: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            form: None,
            floor: Some(Arc::new(floor)),
        }
    }

    pub fn constant(c: f64) -> Self {
        ClosedForm::constant(c).into()
    }

    /// `coeff * eps^power`.
    pub fn power(coeff: f64, power: f64) -> Self {
        ClosedForm::power(coeff, power).into()
    }

    /// The quantity written "infinity" in the product table: `1/eps`.
    pub fn infinity() -> Self {
        Self::power(1.0, -1.0)
    }

    pub fn eval(&self, eps: f64) -> f64 {
        (self.eval)(eps)
    }

    pub fn form(&self) -> Option<&ClosedForm> {
        self.form.as_ref()
    }

    pub fn floor_at(&self, eps: f64) -> f64 {
        self.floor.as_ref().map_or(0.0, |g| g(eps))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self {
            eval: Arc::new(move |e| a(e) + b(e)),
            form: match (&self.form, &other.form) {
                (Some(x), Some(y)) => Some(x.add(y)),
                _ => None,
            },
            floor: combine_floors(self, other, |fa, fb, _, _| fa + fb),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self {
            eval: Arc::new(move |e| a(e) * b(e)),
            form: match (&self.form, &other.form) {
                (Some(x), Some(y)) => Some(x.mul(y)),
                _ => None,
            },
            floor: combine_floors(self, other, |fa, fb, va, vb| fa * vb.abs() + fb * va.abs()),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let a = self.eval.clone();
        Self {
            eval: Arc::new(move |e| c * a(e)),
            form: self.form.as_ref().map(|f| f.scale(c)),
            floor: self.floor.as_ref().map(|g| {
                let g = g.clone();
                Arc::new(move |e| c.abs() * g(e)) as EpsFn
            }),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }
}

fn combine_floors(a: &EpsRepresentative, b: &EpsRepresentative, rule: fn(f64, f64, f64, f64) -> f64) -> Option<EpsFn> {
    if a.floor.is_none() && b.floor.is_none() {
        return None;
    }
    let (fa, fb) = (a.floor.clone(), b.floor.clone());
    let (va, vb) = (a.eval.clone(), b.eval.clone());
    Some(Arc::new(move |e| {
        let fa = fa.as_ref().map_or(0.0, |g| g(e));
        let fb = fb.as_ref().map_or(0.0, |g| g(e));
        rule(fa, fb, va(e), vb(e))
    }))
}

/// Dyadic sampling grid `eps_k = eps_0 * 2^-k`, `k = 0..=k_max`.
///
/// Each octave `[eps_{k+1}, eps_k)` is sampled at `per_octave` geometric
/// points; the octave maximum of `|f|` is the envelope used by the slope fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicGrid {
    pub eps0: f64,
    pub k_max: usize,
    #[serde(default = "default_tail")]
    pub tail: usize,
    #[serde(default = "default_per_octave")]
    pub per_octave: usize,
}

fn default_tail() -> usize {
    12
}

fn default_per_octave() -> usize {
    4
}

impl Default for DyadicGrid {
    fn default() -> Self {
        Self {
            eps0: 0.5,
            k_max: 40,
            tail: default_tail(),
            per_octave: default_per_octave(),
        }
    }
}

impl DyadicGrid {
    pub fn new(eps0: f64, k_max: usize) -> Self {
        Self {
            eps0,
            k_max,
            ..Self::default()
        }
    }

    /// Grid for quantities that are costly to sample (pairings): one point
    /// per octave.
    pub fn coarse(eps0: f64, k_max: usize, tail: usize) -> Self {
        Self {
            eps0,
            k_max,
            tail,
            per_octave: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0) || self.k_max == 0 || self.tail < 2 || self.per_octave == 0 {
            return Err(Error::InvalidInput(format!("degenerate grid {self:?}")));
        }
        Ok(())
    }

    pub fn eps(&self, k: usize) -> f64 {
        self.eps0 * 0.5f64.powi(k as i32)
    }

    /// The dyadic samples `eps_0 .. eps_kmax`, strictly decreasing.
    pub fn samples(&self) -> Vec<f64> {
        (0..=self.k_max).map(|k| self.eps(k)).collect()
    }

    /// Every point at which `classify` samples, octave by octave.
    pub fn sample_points(&self) -> Vec<f64> {
        (0..=self.k_max).flat_map(|k| self.octave(k)).collect()
    }

    fn octave(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        let base = self.eps(k);
        let p = self.per_octave;
        (0..p).map(move |j| base * 2f64.powf(-(j as f64) / p as f64))
    }
}

/// Three-valued verdict for asymptotic decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    True,
    False,
    Indeterminate,
}

impl TriState {
    pub fn is_true(self) -> bool {
        self == TriState::True
    }

    pub fn is_false(self) -> bool {
        self == TriState::False
    }

    fn from_bool(b: bool) -> Self {
        if b {
            TriState::True
        } else {
            TriState::False
        }
    }
}

impl fmt::Display for TriState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriState::True => "true",
            TriState::False => "false",
            TriState::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Exact,
    Numeric,
}

/// Non-fatal conditions met while classifying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassNote {
    OverflowAtSample { eps: f64 },
    NonConvergentFit { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticClass {
    pub moderate: TriState,
    pub negligible: TriState,
    pub associated_to_zero: TriState,
    /// Exponent `p` of the best fit `|f| ~ C eps^p`.
    pub leading_order: Option<f64>,
    pub confidence: Confidence,
    pub note: Option<ClassNote>,
}

impl AsymptoticClass {
    fn negligible(confidence: Confidence) -> Self {
        Self {
            moderate: TriState::True,
            negligible: TriState::True,
            associated_to_zero: TriState::True,
            leading_order: None,
            confidence,
            note: None,
        }
    }

    fn indeterminate(reason: String) -> Self {
        Self {
            moderate: TriState::Indeterminate,
            negligible: TriState::Indeterminate,
            associated_to_zero: TriState::Indeterminate,
            leading_order: None,
            confidence: Confidence::Numeric,
            note: Some(ClassNote::NonConvergentFit { reason }),
        }
    }

    pub fn is_indeterminate(&self) -> bool {
        matches!(self.note, Some(ClassNote::NonConvergentFit { .. }))
    }
}

/// Classifies a representative: exactly from its closed form when present,
/// otherwise by sampling on `grid`.
pub fn classify(f: &EpsRepresentative, grid: &DyadicGrid) -> Result<AsymptoticClass> {
    match &f.form {
        Some(form) => Ok(classify_closed(form)),
        None => classify_numeric(f, grid),
    }
}

/// Exact classification from the leading algebraic term.
pub fn classify_closed(form: &ClosedForm) -> AsymptoticClass {
    let Some(lead) = form.leading() else {
        return AsymptoticClass::negligible(Confidence::Exact);
    };
    let p = lead.power;
    let assoc = p > 0.0 || (p == 0.0 && lead.log_power < 0);
    AsymptoticClass {
        moderate: TriState::True,
        negligible: TriState::False,
        associated_to_zero: TriState::from_bool(assoc),
        leading_order: Some(p),
        confidence: Confidence::Exact,
        note: None,
    }
}

struct Octave {
    eps: f64,
    envelope: f64,
    below_q_max: bool,
    /// Some sample was nonzero but under the rounding floor.
    floored: bool,
}

/// Numeric semi-decision on the grid tail.
pub fn classify_numeric(f: &EpsRepresentative, grid: &DyadicGrid) -> Result<AsymptoticClass> {
    grid.validate()?;
    let mut octaves: Vec<Octave> = Vec::with_capacity(grid.k_max + 1);
    let mut overflow_at = None;
    'outer: for k in 0..=grid.k_max {
        let mut envelope = 0.0f64;
        let mut below = true;
        let mut floored = false;
        for eps in grid.octave(k) {
            let v = f.eval(eps);
            if v.is_nan() {
                return Err(Error::EvaluationFailed { eps });
            }
            if !v.is_finite() {
                overflow_at = Some(eps);
                break 'outer;
            }
            let a = v.abs();
            floored |= a > 0.0 && a <= f.floor_at(eps);
            let a = if a <= f.floor_at(eps) { 0.0 } else { a };
            envelope = envelope.max(a);
            below &= a <= eps.powi(Q_MAX);
        }
        octaves.push(Octave {
            eps: grid.eps(k),
            envelope,
            below_q_max: below,
            floored,
        });
    }

    // A signal that decays into the rounding floor before the end of the
    // grid is judged on its last resolved octaves.
    let mut end = octaves.len();
    if overflow_at.is_none() {
        if let Some(i) = octaves.iter().rposition(|o| o.envelope > 0.0) {
            if i + 1 < end && octaves[i + 1].floored && i + 1 >= MIN_FIT_POINTS {
                end = i + 1;
            }
        }
    }
    let start = end.saturating_sub(grid.tail);
    let tail = &octaves[start..end];
    if tail.len() < MIN_FIT_POINTS {
        let mut c = AsymptoticClass::indeterminate(format!("only {} finite octaves before overflow", tail.len()));
        if let Some(eps) = overflow_at {
            c.moderate = TriState::False;
            c.note = Some(ClassNote::OverflowAtSample { eps });
        }
        return Ok(c);
    }

    if overflow_at.is_none() && tail.iter().all(|o| o.below_q_max) {
        return Ok(AsymptoticClass::negligible(Confidence::Numeric));
    }

    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|o| o.envelope > 0.0)
        .map(|o| (o.eps.ln(), o.envelope.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Ok(AsymptoticClass::indeterminate(
            "too few nonzero samples for a slope fit".into(),
        ));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::NonConvergentFit("singular fit".into()))?;
    let half = xs.len() / 2;
    let early = fit_line(&xs[..half.max(2)], &ys[..half.max(2)]);
    let late = fit_line(&xs[half.min(xs.len() - 2)..], &ys[half.min(xs.len() - 2)..]);
    let drift = match (early, late) {
        (Some(a), Some(b)) => b.slope - a.slope,
        _ => 0.0,
    };

    if let Some(eps) = overflow_at {
        return Ok(AsymptoticClass {
            moderate: TriState::False,
            negligible: TriState::False,
            associated_to_zero: TriState::False,
            leading_order: Some(fit.slope),
            confidence: Confidence::Numeric,
            note: Some(ClassNote::OverflowAtSample { eps }),
        });
    }

    // Decay that keeps steepening, or is faster than every power probed, is
    // super-polynomial.
    if fit.slope > Q_MAX as f64 || (fit.slope > SLOPE_TOLERANCE && drift > 2.0 * SLOPE_TOLERANCE) {
        return Ok(AsymptoticClass::negligible(Confidence::Numeric));
    }

    if fit.rms_residual > MAX_FIT_RMS || drift.abs() > 2.0 * SLOPE_TOLERANCE {
        // Growth that keeps steepening is super-polynomial.
        if fit.slope < -1.0 && drift < 0.0 {
            return Ok(AsymptoticClass {
                moderate: TriState::False,
                negligible: TriState::False,
                associated_to_zero: TriState::False,
                leading_order: Some(fit.slope),
                confidence: Confidence::Numeric,
                note: Some(ClassNote::NonConvergentFit {
                    reason: format!("steepening growth, drift {drift:.3}"),
                }),
            });
        }
        return Ok(AsymptoticClass::indeterminate(format!(
            "slope {:.3} unstable (rms {:.3}, drift {:.3})",
            fit.slope, fit.rms_residual, drift
        )));
    }

    let p = fit.slope;
    let assoc = if p > SLOPE_TOLERANCE {
        TriState::True
    } else if p < -SLOPE_TOLERANCE || p.abs() <= FLAT_BAND {
        TriState::False
    } else {
        TriState::Indeterminate
    };
    Ok(AsymptoticClass {
        moderate: TriState::True,
        negligible: TriState::False,
        associated_to_zero: assoc,
        leading_order: Some(p),
        confidence: Confidence::Numeric,
        note: None,
    })
}

/// Equality in the quotient: the difference is negligible.
pub fn eq_in_en(f: &EpsRepresentative, g: &EpsRepresentative, grid: &DyadicGrid) -> Result<TriState> {
    Ok(classify(&f.sub(g), grid)?.negligible)
}

pub fn associated_to_zero(f: &EpsRepresentative, grid: &DyadicGrid) -> Result<TriState> {
    Ok(classify(f, grid)?.associated_to_zero)
}

/// The four infinitesimals `eps, 2 eps, sqrt(eps), eps^2` of the product
/// table, with their labels.
pub fn infinitesimal_catalogue() -> Vec<(&'static str, EpsRepresentative)> {
    vec![
        ("0_1", EpsRepresentative::power(1.0, 1.0)),
        ("0_2", EpsRepresentative::power(2.0, 1.0)),
        ("0_3", EpsRepresentative::power(1.0, 0.5)),
        ("0_4", EpsRepresentative::power(1.0, 2.0)),
    ]
}
