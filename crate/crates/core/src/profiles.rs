//! Microstructure profiles.
//!
//! A Heaviside profile `K` rises from 0 to 1, a Dirac profile `psi` has unit
//! mass. At scale `eps` they are evaluated as `K((x - x0) / eps)` and
//! `psi((x - x0) / eps) / eps`. Outside the cutoff `|y| > L` a profile takes
//! its limit value exactly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `int exp(-1/(1-y^2)) dy` over `[-1, 1]`.
pub const BUMP_NORMALIZATION: f64 = 0.443_993_816_168_079_4;

/// Cutoff of the analytic presets: `1 - tanh(20) < 1e-17`.
pub const ANALYTIC_CUTOFF: f64 = 20.0;

const SMOOTHSTEP_HALF_WIDTH: f64 = 1.0;
const SKEW_EXPONENT: f64 = 3.0;
const OVERSHOOT_AMPLITUDE: f64 = 0.6;

pub const HEAVISIDE_TAGS: [&str; 5] = ["tanh", "erf", "smoothstep", "skewed", "overshoot"];
pub const DIRAC_TAGS: [&str; 3] = ["bump", "parabolic", "skewed"];

/// Shared representation: a profile and its analytic derivatives.
#[derive(Clone)]
struct Shape {
    /// `derivs[k]` is the k-th derivative.
    derivs: Vec<ProfileFn>,
    cutoff: f64,
    tag: String,
    /// Value for `y > cutoff` (the value for `y < -cutoff` is always 0).
    right_limit: f64,
}

impl Shape {
    fn eval(&self, order: usize, y: f64) -> Option<f64> {
        let f = self.derivs.get(order)?;
        if y.abs() > self.cutoff {
            return Some(if order == 0 && y > 0.0 { self.right_limit } else { 0.0 });
        }
        Some(f(y))
    }

    /// `y -> K((y - shift) / scale)`.
    fn transformed(&self, shift: f64, scale: f64) -> Shape {
        let derivs = self
            .derivs
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let f = f.clone();
                let factor = scale.powi(-(k as i32));
                Arc::new(move |y: f64| factor * f((y - shift) / scale)) as ProfileFn
            })
            .collect();
        Shape {
            derivs,
            cutoff: shift.abs() + self.cutoff * scale,
            tag: format!("{}[shift={shift},scale={scale}]", self.tag),
            right_limit: self.right_limit,
        }
    }
}

/// Smooth Heaviside microstructure `K` with `K(-L) = 0`, `K(L) = 1`.
#[derive(Clone)]
pub struct HeavisideProfile {
    shape: Shape,
    monotone: bool,
    unit_range: bool,
}

impl fmt::Debug for HeavisideProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HeavisideProfile({}, L = {})", self.shape.tag, self.shape.cutoff)
    }
}

impl HeavisideProfile {
    /// Builds a profile from closures; `derivs[0]` is `K`, `derivs[1]` is `K'`.
    pub fn custom(tag: impl Into<String>, cutoff: f64, derivs: Vec<ProfileFn>, monotone: bool) -> Result<Self> {
        if derivs.len() < 2 {
            return Err(Error::InvalidInput("a Heaviside profile needs K and K'".into()));
        }
        if !(cutoff > 0.0) {
            return Err(Error::InvalidInput(format!("cutoff must be positive, got {cutoff}")));
        }
        let p = Self {
            shape: Shape {
                derivs,
                cutoff,
                tag: tag.into(),
                right_limit: 1.0,
            },
            monotone,
            unit_range: monotone,
        };
        let (lo, hi) = (p.value(-cutoff), p.derivs_at(0, cutoff).unwrap_or(f64::NAN));
        if lo.abs() > 1e-10 || (hi - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "profile `{}` has limits ({lo}, {hi}) instead of (0, 1)",
                p.shape.tag
            )));
        }
        Ok(p)
    }

    pub fn tag(&self) -> &str {
        &self.shape.tag
    }

    pub fn cutoff(&self) -> f64 {
        self.shape.cutoff
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// True when the profile is known to take values in `[0, 1]`.
    pub fn has_unit_range(&self) -> bool {
        self.unit_range
    }

    pub fn max_order(&self) -> usize {
        self.shape.derivs.len() - 1
    }

    pub fn value(&self, y: f64) -> f64 {
        self.shape.eval(0, y).unwrap_or(f64::NAN)
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.shape.eval(1, y).unwrap_or(f64::NAN)
    }

    /// `order`-th derivative; `None` when it is not available analytically.
    pub fn derivs_at(&self, order: usize, y: f64) -> Option<f64> {
        self.shape.eval(order, y)
    }

    /// `y -> K((y - shift) / scale)`.
    pub fn transformed(&self, shift: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        Ok(Self {
            shape: self.shape.transformed(shift, scale),
            monotone: self.monotone,
            unit_range: self.unit_range,
        })
    }
}

/// Unit-mass Dirac microstructure `psi`.
#[derive(Clone)]
pub struct DiracProfile {
    shape: Shape,
    nonnegative: bool,
}

impl fmt::Debug for DiracProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiracProfile({}, L = {})", self.shape.tag, self.shape.cutoff)
    }
}

impl DiracProfile {
    /// `nonnegative` is the certificate consumed by square roots; it is the
    /// caller's claim, not something checked by sampling.
    pub fn custom(tag: impl Into<String>, cutoff: f64, derivs: Vec<ProfileFn>, nonnegative: bool) -> Result<Self> {
        if derivs.is_empty() {
            return Err(Error::InvalidInput("a Dirac profile needs psi".into()));
        }
        if !(cutoff > 0.0) {
            return Err(Error::InvalidInput(format!("cutoff must be positive, got {cutoff}")));
        }
        Ok(Self {
            shape: Shape {
                derivs,
                cutoff,
                tag: tag.into(),
                right_limit: 0.0,
            },
            nonnegative,
        })
    }

    pub fn tag(&self) -> &str {
        &self.shape.tag
    }

    pub fn cutoff(&self) -> f64 {
        self.shape.cutoff
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn max_order(&self) -> usize {
        self.shape.derivs.len() - 1
    }

    pub fn value(&self, y: f64) -> f64 {
        self.shape.eval(0, y).unwrap_or(f64::NAN)
    }

    pub fn derivs_at(&self, order: usize, y: f64) -> Option<f64> {
        self.shape.eval(order, y)
    }

    /// `y -> psi((y - shift) / scale) / scale`, still of unit mass.
    pub fn transformed(&self, shift: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        let mut shape = self.shape.transformed(shift, scale);
        shape.derivs = shape
            .derivs
            .into_iter()
            .map(|f| Arc::new(move |y: f64| f(y) / scale) as ProfileFn)
            .collect();
        Ok(Self {
            shape,
            nonnegative: self.nonnegative,
        })
    }
}

fn logistic(y: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * y).exp())
}

fn arc<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> ProfileFn {
    Arc::new(f)
}

/// Named Heaviside presets: `tanh`, `erf`, `smoothstep`, `skewed`,
/// `overshoot`.
pub fn preset_heaviside(tag: &str) -> Result<HeavisideProfile> {
    let l = ANALYTIC_CUTOFF;
    let (derivs, cutoff, monotone) = match tag {
        "tanh" => (
            vec![
                // (1 + tanh y) / 2 in a form without cancellation for y << 0.
                arc(logistic),
                arc(|y: f64| 0.5 / y.cosh().powi(2)),
                arc(|y: f64| -y.tanh() / y.cosh().powi(2)),
            ],
            l,
            true,
        ),
        "erf" => {
            let c = 1.0 / std::f64::consts::PI.sqrt();
            (
                vec![
                    arc(|y: f64| 0.5 * libm::erfc(-y)),
                    arc(move |y: f64| c * (-y * y).exp()),
                    arc(move |y: f64| -2.0 * y * c * (-y * y).exp()),
                ],
                l,
                true,
            )
        }
        "smoothstep" => {
            let h = SMOOTHSTEP_HALF_WIDTH;
            let s = move |y: f64| ((y + h) / (2.0 * h)).clamp(0.0, 1.0);
            (
                vec![
                    arc(move |y| {
                        let s = s(y);
                        s * s * (3.0 - 2.0 * s)
                    }),
                    arc(move |y| {
                        let s = s(y);
                        6.0 * s * (1.0 - s) / (2.0 * h)
                    }),
                    arc(move |y| {
                        if y.abs() >= h {
                            0.0
                        } else {
                            6.0 * (1.0 - 2.0 * s(y)) / (4.0 * h * h)
                        }
                    }),
                ],
                h,
                true,
            )
        }
        "skewed" => {
            // Generalized logistic (1 + e^{-2y})^{-nu}: K(0) = 2^{-nu}.
            let nu = SKEW_EXPONENT;
            (
                vec![
                    arc(move |y: f64| (1.0 + (-2.0 * y).exp()).powf(-nu)),
                    arc(move |y: f64| {
                        let e = (-2.0 * y).exp();
                        2.0 * nu * e * (1.0 + e).powf(-nu - 1.0)
                    }),
                    arc(move |y: f64| {
                        let e = (-2.0 * y).exp();
                        let b = 1.0 + e;
                        4.0 * nu * e * b.powf(-nu - 2.0) * ((nu + 1.0) * e - b)
                    }),
                ],
                l,
                true,
            )
        }
        "overshoot" => {
            // tanh front plus an odd wiggle a*y*e^{-y^2}: leaves [0, 1] near |y| ~ 1.
            let a = OVERSHOOT_AMPLITUDE;
            (
                vec![
                    arc(move |y: f64| logistic(y) + a * y * (-y * y).exp()),
                    arc(move |y: f64| 0.5 / y.cosh().powi(2) + a * (1.0 - 2.0 * y * y) * (-y * y).exp()),
                    arc(move |y: f64| -y.tanh() / y.cosh().powi(2) + a * (4.0 * y.powi(3) - 6.0 * y) * (-y * y).exp()),
                ],
                l,
                false,
            )
        }
        other => return Err(Error::UnknownTag(other.to_string())),
    };
    let mut p = HeavisideProfile::custom(tag, cutoff, derivs, monotone)?;
    p.unit_range = monotone;
    Ok(p)
}

/// Named Dirac presets: `bump`, `parabolic`, `skewed`.
pub fn preset_dirac(tag: &str) -> Result<DiracProfile> {
    let derivs = match tag {
        "bump" => {
            let z = BUMP_NORMALIZATION;
            let psi = move |y: f64| {
                let d = 1.0 - y * y;
                if d <= 0.0 {
                    0.0
                } else {
                    (-1.0 / d).exp() / z
                }
            };
            vec![
                arc(psi),
                arc(move |y: f64| {
                    let d = 1.0 - y * y;
                    if d <= 0.0 {
                        0.0
                    } else {
                        psi(y) * (-2.0 * y / (d * d))
                    }
                }),
            ]
        }
        "parabolic" => vec![
            arc(|y: f64| if y.abs() <= 1.0 { 0.75 * (1.0 - y * y) } else { 0.0 }),
            arc(|y: f64| if y.abs() <= 1.0 { -1.5 * y } else { 0.0 }),
        ],
        "skewed" => vec![
            // (3/4)(1 + y)(1 - y)^2: unit mass, nonnegative, mean -1/5.
            arc(|y: f64| {
                if y.abs() <= 1.0 {
                    0.75 * (1.0 + y) * (1.0 - y).powi(2)
                } else {
                    0.0
                }
            }),
            arc(|y: f64| {
                if y.abs() <= 1.0 {
                    0.75 * (1.0 - y) * (-1.0 - 3.0 * y)
                } else {
                    0.0
                }
            }),
        ],
        other => return Err(Error::UnknownTag(other.to_string())),
    };
    DiracProfile::custom(tag, 1.0, derivs, true)
}

/// Serializable description of a preset with an optional affine change of
/// variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub tag: String,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn new(tag: &str) -> Self {
        Self {
            tag: tag.to_string(),
            shift: 0.0,
            scale: 1.0,
        }
    }

    pub fn heaviside(&self) -> Result<HeavisideProfile> {
        let p = preset_heaviside(&self.tag)?;
        if self.shift == 0.0 && self.scale == 1.0 {
            Ok(p)
        } else {
            p.transformed(self.shift, self.scale)
        }
    }

    pub fn dirac(&self) -> Result<DiracProfile> {
        let p = preset_dirac(&self.tag)?;
        if self.shift == 0.0 && self.scale == 1.0 {
            Ok(p)
        } else {
            p.transformed(self.shift, self.scale)
        }
    }
}

fn profile_quadrature() -> Quadrature {
    Quadrature {
        panels: 64,
        tolerance: 1e-13,
        ..Quadrature::default()
    }
}

/// Breakpoints on `[-L, L]` that keep panels off the kinks of compactly
/// supported presets.
fn breakpoints(cutoff: f64, extra: &[f64]) -> Vec<f64> {
    let mut b = vec![-cutoff, cutoff];
    b.extend(extra.iter().copied().filter(|x| x.abs() < cutoff));
    b.sort_by(|a, b| a.partial_cmp(b).unwrap());
    b.dedup();
    b
}

/// `int K^n K' dy` over `[-L, L]`, by quadrature. Equal to `1 / (n + 1)` for
/// any profile with limits 0 and 1.
pub fn moment(k: &HeavisideProfile, n: u32) -> Result<f64> {
    if n > 16 {
        return Err(Error::InvalidInput(format!("moment order {n} exceeds 16")));
    }
    let l = k.cutoff();
    profile_quadrature().integrate_pieces(
        |y| k.value(y).powi(n as i32) * k.derivative(y),
        &breakpoints(l, &[-1.0, 0.0, 1.0]),
    )
}

/// `A = int K_a K_b' dy`.
pub fn mixed_moment(ka: &HeavisideProfile, kb: &HeavisideProfile) -> Result<f64> {
    let l = ka.cutoff().max(kb.cutoff());
    profile_quadrature().integrate_pieces(|y| ka.value(y) * kb.derivative(y), &breakpoints(l, &[-1.0, 0.0, 1.0]))
}

/// `int psi^p dy` for a Dirac profile.
pub fn dirac_power_integral(psi: &DiracProfile, p: f64) -> Result<f64> {
    let l = psi.cutoff();
    profile_quadrature().integrate_pieces(
        |y| {
            let v = psi.value(y);
            if v == 0.0 {
                0.0
            } else {
                v.signum() * v.abs().powf(p)
            }
        },
        &breakpoints(l, &[0.0]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_heaviside() -> Vec<HeavisideProfile> {
        HEAVISIDE_TAGS.iter().map(|t| preset_heaviside(t).unwrap()).collect()
    }

    #[test]
    fn midpoints() {
        assert_eq!(preset_heaviside("smoothstep").unwrap().value(0.0), 0.5);
        assert_eq!(preset_heaviside("tanh").unwrap().value(0.0), 0.5);
        assert!((preset_heaviside("erf").unwrap().value(0.0) - 0.5).abs() < 1e-16);
        let skew = preset_heaviside("skewed").unwrap().value(0.0);
        assert!((skew - 0.5).abs() > 0.05, "skewed K(0) = {skew}");
    }

    #[test]
    fn smoothstep_formula() {
        let k = preset_heaviside("smoothstep").unwrap();
        for y in [-0.9, -0.3, 0.2, 0.75] {
            let s: f64 = (y + 1.0) / 2.0;
            assert!((k.value(y) - (3.0 * s * s - 2.0 * s.powi(3))).abs() < 1e-15);
        }
    }

    #[test]
    fn limits_and_unit_derivative_mass() {
        for k in all_heaviside() {
            let l = k.cutoff();
            assert!(k.value(-l).abs() < 1e-10, "{k:?}");
            assert!((k.value(l) - 1.0).abs() < 1e-10, "{k:?}");
            let mass = moment(&k, 0).unwrap();
            assert!((mass - 1.0).abs() < 1e-10, "{k:?}: {mass}");
        }
    }

    #[test]
    fn derivatives_are_analytic() {
        // Compare against a high-order central difference away from kinks.
        for k in all_heaviside() {
            for y in [-1.7, -0.4, 0.3, 0.9, 2.2] {
                let h = 1e-4;
                let fd = (-k.value(y + 2.0 * h) + 8.0 * k.value(y + h) - 8.0 * k.value(y - h) + k.value(y - 2.0 * h))
                    / (12.0 * h);
                assert!((fd - k.derivative(y)).abs() < 1e-8, "{k:?} at {y}");
                let fd2 = (k.derivative(y + h) - k.derivative(y - h)) / (2.0 * h);
                assert!((fd2 - k.derivs_at(2, y).unwrap()).abs() < 1e-6, "{k:?} K'' at {y}");
            }
        }
    }

    #[test]
    fn overshoot_leaves_unit_interval() {
        let k = preset_heaviside("overshoot").unwrap();
        assert!(!k.is_monotone());
        assert!(k.value(1.0) > 1.0);
        assert!(k.value(-1.0) < 0.0);
    }

    #[test]
    fn unknown_tags() {
        assert!(matches!(preset_heaviside("sigmoid"), Err(Error::UnknownTag(_))));
        assert!(matches!(preset_dirac("gauss"), Err(Error::UnknownTag(_))));
    }

    #[test]
    fn dirac_presets_have_unit_mass() {
        for t in DIRAC_TAGS {
            let psi = preset_dirac(t).unwrap();
            let m = dirac_power_integral(&psi, 1.0).unwrap();
            assert!((m - 1.0).abs() < 1e-10, "{t}: {m}");
            assert!(psi.is_nonnegative());
        }
    }

    #[test]
    fn parabolic_square_integral() {
        // (9/16) int (1 - y^2)^2 dy = (9/16)(16/15) = 3/5.
        let psi = preset_dirac("parabolic").unwrap();
        let v = dirac_power_integral(&psi, 2.0).unwrap();
        assert!((v - 0.6).abs() < 1e-13);
    }

    #[test]
    fn moment_values() {
        for k in all_heaviside() {
            let m1 = moment(&k, 1).unwrap();
            let m2 = moment(&k, 2).unwrap();
            assert!((m1 - 0.5).abs() < 1e-10);
            assert!((m2 - 1.0 / 3.0).abs() < 1e-10);
            assert!((m2 - m1 + 1.0 / 6.0).abs() < 1e-10);
        }
        // Antiderivative K^6/6 at the limits gives 1/6 for the overshoot preset.
        let k = preset_heaviside("overshoot").unwrap();
        let l = k.cutoff();
        let oracle = (k.value(l).powi(6) - k.value(-l).powi(6)) / 6.0;
        assert!((moment(&k, 5).unwrap() - oracle).abs() < 1e-8);
        assert!(moment(&k, 17).is_err());
    }

    #[test]
    fn mixed_moment_of_a_profile_with_itself_is_half() {
        for k in all_heaviside() {
            assert!((mixed_moment(&k, &k).unwrap() - 0.5).abs() < 1e-10, "{k:?}");
        }
    }

    #[test]
    fn shifted_tanh_decreases_mixed_moment() {
        let base = preset_heaviside("tanh").unwrap();
        let mut prev = 0.5;
        for s in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let a = mixed_moment(&base.transformed(s, 1.0).unwrap(), &base).unwrap();
            assert!(a > 0.0 && a < prev, "shift {s}: {a}");
            prev = a;
        }
    }

    #[test]
    fn separated_smoothsteps_give_one() {
        let kb = preset_heaviside("smoothstep").unwrap();
        let ka = kb.transformed(-3.0, 1.0).unwrap();
        assert!((mixed_moment(&ka, &kb).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn profile_spec_round_trip() {
        let spec = ProfileSpec {
            tag: "erf".into(),
            shift: 0.5,
            scale: 2.0,
        };
        let k = spec.heaviside().unwrap();
        let base = preset_heaviside("erf").unwrap();
        assert!((k.value(1.3) - base.value((1.3 - 0.5) / 2.0)).abs() < 1e-15);
        assert!((k.derivative(1.3) - base.derivative(0.4) / 2.0).abs() < 1e-15);
    }
}
