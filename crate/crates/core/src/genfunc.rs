//! Generalized functions on an interval as expression trees evaluated at
//! `(x, eps)`.
//!
//! Points are carried in local coordinates `x = base + offset` so that a
//! profile centered at `base` sees `y = offset / eps` without the cancellation
//! `(x - x0) / eps` would suffer at tiny `eps`.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eps_core::{classify, AsymptoticClass, Confidence, DyadicGrid, EpsRepresentative, TriState};
use crate::error::{Error, Result};
use crate::numerics::{fit_line, richardson};
use crate::profiles::{DiracProfile, HeavisideProfile, ProfileFn, ProfileSpec, BUMP_NORMALIZATION};
use crate::quadrature::{GaussLegendre, Quadrature};

/// Relative step of the finite-difference fallback for opaque smooth
/// functions, as a multiple of `eps`.
pub const FD_STEP_FACTOR: f64 = 1e-4;
/// The fallback step never drops below this multiple of `1 + |x|`, where
/// `eps * 1e-4` would be lost to rounding.
pub const FD_MIN_RELATIVE_STEP: f64 = 1e-6;

/// A point `base + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub base: f64,
    pub offset: f64,
}

impl Point {
    pub fn at(x: f64) -> Self {
        Self { base: x, offset: 0.0 }
    }

    pub fn local(base: f64, offset: f64) -> Self {
        Self { base, offset }
    }

    pub fn x(&self) -> f64 {
        self.base + self.offset
    }

    fn scaled(&self, center: f64, eps: f64) -> f64 {
        ((self.base - center) + self.offset) / eps
    }
}

/// Smooth functions embedded as constant families.
#[derive(Clone)]
pub enum Smooth {
    Const(f64),
    /// `sum c_k x^k`.
    Poly(Vec<f64>),
    /// `a sin(k x + phase)`.
    Sin {
        amplitude: f64,
        freq: f64,
        phase: f64,
    },
    /// `a exp(r x)`.
    Exp {
        amplitude: f64,
        rate: f64,
    },
    Custom {
        name: String,
        f: ProfileFn,
        df: Option<ProfileFn>,
    },
}

impl fmt::Debug for Smooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smooth::Const(c) => write!(f, "{c}"),
            Smooth::Poly(c) => write!(f, "poly{c:?}"),
            Smooth::Sin { amplitude, freq, phase } => write!(f, "{amplitude}*sin({freq}x+{phase})"),
            Smooth::Exp { amplitude, rate } => write!(f, "{amplitude}*exp({rate}x)"),
            Smooth::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

impl Smooth {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Smooth::Const(c) => *c,
            Smooth::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
            Smooth::Sin { amplitude, freq, phase } => amplitude * (freq * x + phase).sin(),
            Smooth::Exp { amplitude, rate } => amplitude * (rate * x).exp(),
            Smooth::Custom { f, .. } => f(x),
        }
    }

    fn derivative(&self) -> Node {
        match self {
            Smooth::Const(_) => Node::Smooth(Smooth::Const(0.0)),
            Smooth::Poly(c) => {
                let d: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
                Node::Smooth(if d.is_empty() {
                    Smooth::Const(0.0)
                } else {
                    Smooth::Poly(d)
                })
            }
            Smooth::Sin { amplitude, freq, phase } => Node::Smooth(Smooth::Sin {
                amplitude: amplitude * freq,
                freq: *freq,
                phase: phase + FRAC_PI_2,
            }),
            Smooth::Exp { amplitude, rate } => Node::Smooth(Smooth::Exp {
                amplitude: amplitude * rate,
                rate: *rate,
            }),
            Smooth::Custom { name, f, df } => match df {
                Some(df) => Node::Smooth(Smooth::Custom {
                    name: format!("{name}'"),
                    f: df.clone(),
                    df: None,
                }),
                None => Node::FiniteDifference {
                    name: format!("{name}'"),
                    f: f.clone(),
                },
            },
        }
    }

    fn sign(&self) -> Sign {
        match self {
            Smooth::Const(c) => Sign::of(*c),
            Smooth::Poly(c) if c.len() == 1 => Sign::of(c[0]),
            Smooth::Exp { amplitude, .. } => Sign::of(*amplitude),
            _ => Sign::Unknown,
        }
    }
}

/// Sign certificate propagated through the tree from preset-level flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Nonnegative,
    Unknown,
}

impl Sign {
    fn of(c: f64) -> Self {
        if c > 0.0 {
            Sign::Positive
        } else if c == 0.0 {
            Sign::Nonnegative
        } else {
            Sign::Unknown
        }
    }

    fn nonnegative(self) -> bool {
        self != Sign::Unknown
    }
}

#[derive(Clone)]
enum Node {
    Smooth(Smooth),
    /// Central difference of an opaque smooth function.
    FiniteDifference {
        name: String,
        f: ProfileFn,
    },
    /// `eps^-order K^(order)((x - center) / eps)`.
    Heaviside {
        center: f64,
        profile: HeavisideProfile,
        order: usize,
    },
    /// `eps^-(1 + order) psi^(order)((x - center) / eps)`.
    Dirac {
        center: f64,
        profile: DiracProfile,
        order: usize,
    },
    Sum(Arc<Node>, Arc<Node>),
    Product(Arc<Node>, Arc<Node>),
    Scale(f64, Arc<Node>),
    Power(Arc<Node>, u32),
    Sqrt(Arc<Node>),
    Recip(Arc<Node>),
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Smooth(s) => write!(f, "{s:?}"),
            Node::FiniteDifference { name, .. } => write!(f, "fd({name})"),
            Node::Heaviside { center, profile, order } => {
                write!(f, "H[{}@{center}]", profile.tag())?;
                (0..*order).try_for_each(|_| write!(f, "'"))
            }
            Node::Dirac { center, profile, order } => {
                write!(f, "delta[{}@{center}]", profile.tag())?;
                (0..*order).try_for_each(|_| write!(f, "'"))
            }
            Node::Sum(a, b) => write!(f, "({a:?} + {b:?})"),
            Node::Product(a, b) => write!(f, "{a:?}*{b:?}"),
            Node::Scale(c, a) => write!(f, "{c}*{a:?}"),
            Node::Power(a, n) => write!(f, "{a:?}^{n}"),
            Node::Sqrt(a) => write!(f, "sqrt({a:?})"),
            Node::Recip(a) => write!(f, "1/{a:?}"),
        }
    }
}

impl Node {
    /// Returns `(value, magnitude)`; the magnitude bounds the size of the
    /// intermediate terms and so the rounding error of the value.
    fn eval(&self, p: Point, eps: f64) -> Result<(f64, f64)> {
        Ok(match self {
            Node::Smooth(s) => {
                let v = s.eval(p.x());
                (v, v.abs())
            }
            Node::FiniteDifference { f, .. } => {
                let x = p.x();
                let h = (eps * FD_STEP_FACTOR).max(FD_MIN_RELATIVE_STEP * (1.0 + x.abs()));
                let v = (f(x + h) - f(x - h)) / (2.0 * h);
                (v, v.abs())
            }
            Node::Heaviside { center, profile, order } => {
                let y = p.scaled(*center, eps);
                let k = profile
                    .derivs_at(*order, y)
                    .ok_or_else(|| Error::NonDifferentiableNode(format!("{}^({order})", profile.tag())))?;
                let v = k * eps.powi(-(*order as i32));
                (v, v.abs())
            }
            Node::Dirac { center, profile, order } => {
                let y = p.scaled(*center, eps);
                let d = profile
                    .derivs_at(*order, y)
                    .ok_or_else(|| Error::NonDifferentiableNode(format!("{}^({order})", profile.tag())))?;
                let v = d * eps.powi(-(1 + *order as i32));
                (v, v.abs())
            }
            Node::Sum(a, b) => {
                let (va, ma) = a.eval(p, eps)?;
                let (vb, mb) = b.eval(p, eps)?;
                (va + vb, ma + mb)
            }
            Node::Product(a, b) => {
                let (va, ma) = a.eval(p, eps)?;
                let (vb, mb) = b.eval(p, eps)?;
                (va * vb, ma * mb)
            }
            Node::Scale(c, a) => {
                let (v, m) = a.eval(p, eps)?;
                (c * v, c.abs() * m)
            }
            Node::Power(a, n) => {
                let (v, m) = a.eval(p, eps)?;
                (v.powi(*n as i32), m.powi(*n as i32))
            }
            Node::Sqrt(a) => {
                let (v, m) = a.eval(p, eps)?;
                if v < 0.0 {
                    return Err(Error::SqrtOfNegative { x: p.x(), value: v });
                }
                (v.sqrt(), m.sqrt())
            }
            Node::Recip(a) => {
                let (v, _) = a.eval(p, eps)?;
                if v == 0.0 {
                    return Err(Error::DomainError { x: p.x(), eps });
                }
                (1.0 / v, (1.0 / v).abs())
            }
        })
    }

    fn derivative(self: &Arc<Self>) -> Result<Arc<Node>> {
        let d = match &**self {
            Node::Smooth(s) => s.derivative(),
            Node::FiniteDifference { name, .. } => {
                return Err(Error::NonDifferentiableNode(format!(
                    "second derivative of opaque function {name}"
                )))
            }
            Node::Heaviside { center, profile, order } => {
                if profile.max_order() <= *order {
                    return Err(Error::NonDifferentiableNode(format!(
                        "profile {} has no analytic derivative of order {}",
                        profile.tag(),
                        order + 1
                    )));
                }
                Node::Heaviside {
                    center: *center,
                    profile: profile.clone(),
                    order: order + 1,
                }
            }
            Node::Dirac { center, profile, order } => {
                if profile.max_order() <= *order {
                    return Err(Error::NonDifferentiableNode(format!(
                        "profile {} has no analytic derivative of order {}",
                        profile.tag(),
                        order + 1
                    )));
                }
                Node::Dirac {
                    center: *center,
                    profile: profile.clone(),
                    order: order + 1,
                }
            }
            Node::Sum(a, b) => Node::Sum(a.derivative()?, b.derivative()?),
            Node::Product(a, b) => Node::Sum(
                Arc::new(Node::Product(a.derivative()?, b.clone())),
                Arc::new(Node::Product(a.clone(), b.derivative()?)),
            ),
            Node::Scale(c, a) => Node::Scale(*c, a.derivative()?),
            Node::Power(a, n) => {
                let da = a.derivative()?;
                if *n == 1 {
                    return Ok(da);
                }
                let lower = if *n == 2 {
                    a.clone()
                } else {
                    Arc::new(Node::Power(a.clone(), n - 1))
                };
                Node::Scale(*n as f64, Arc::new(Node::Product(lower, da)))
            }
            Node::Sqrt(a) => {
                if a.sign() != Sign::Positive {
                    return Err(Error::NonDifferentiableNode(format!(
                        "sqrt of {a:?}: operand may vanish"
                    )));
                }
                Node::Scale(
                    0.5,
                    Arc::new(Node::Product(a.derivative()?, Arc::new(Node::Recip(self.clone())))),
                )
            }
            Node::Recip(a) => Node::Scale(
                -1.0,
                Arc::new(Node::Product(a.derivative()?, Arc::new(Node::Power(self.clone(), 2)))),
            ),
        };
        Ok(Arc::new(d))
    }

    fn sign(self: &Arc<Self>) -> Sign {
        use Sign::*;
        match &**self {
            Node::Smooth(s) => s.sign(),
            Node::FiniteDifference { .. } => Unknown,
            Node::Heaviside { profile, order, .. } => {
                if *order == 0 && profile.has_unit_range() {
                    Nonnegative
                } else {
                    Unknown
                }
            }
            Node::Dirac { profile, order, .. } => {
                if *order == 0 && profile.is_nonnegative() {
                    Nonnegative
                } else {
                    Unknown
                }
            }
            Node::Sum(a, b) => match (a.sign(), b.sign()) {
                (Unknown, _) | (_, Unknown) => Unknown,
                (Positive, _) | (_, Positive) => Positive,
                _ => Nonnegative,
            },
            Node::Product(a, b) => {
                if Arc::ptr_eq(a, b) {
                    return if a.sign() == Positive { Positive } else { Nonnegative };
                }
                match (a.sign(), b.sign()) {
                    (Positive, Positive) => Positive,
                    (x, y) if x.nonnegative() && y.nonnegative() => Nonnegative,
                    _ => Unknown,
                }
            }
            Node::Scale(c, a) => match (Sign::of(*c), a.sign()) {
                (Nonnegative, _) => Nonnegative,
                (Positive, s) => s,
                _ => Unknown,
            },
            Node::Power(a, n) => match a.sign() {
                Unknown if n % 2 == 0 => Nonnegative,
                s => s,
            },
            Node::Sqrt(a) => {
                if a.sign() == Positive {
                    Positive
                } else {
                    Nonnegative
                }
            }
            Node::Recip(a) => {
                if a.sign() == Positive {
                    Positive
                } else {
                    Unknown
                }
            }
        }
    }

    /// Microscale features: `(center, cutoff)` with the cutoff in units of
    /// `eps`.
    fn features(&self, out: &mut Vec<(f64, f64)>) {
        match self {
            Node::Smooth(_) | Node::FiniteDifference { .. } => {}
            Node::Heaviside { center, profile, .. } => out.push((*center, profile.cutoff())),
            Node::Dirac { center, profile, .. } => out.push((*center, profile.cutoff())),
            Node::Sum(a, b) | Node::Product(a, b) => {
                a.features(out);
                b.features(out);
            }
            Node::Scale(_, a) | Node::Power(a, _) | Node::Sqrt(a) | Node::Recip(a) => a.features(out),
        }
    }
}

/// An element of the algebra on an open interval, as an expression tree.
#[derive(Clone)]
pub struct GenFunction1D {
    root: Arc<Node>,
    domain: (f64, f64),
}

impl fmt::Debug for GenFunction1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} on ({}, {})", self.root, self.domain.0, self.domain.1)
    }
}

impl fmt::Display for GenFunction1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.root)
    }
}

pub const WHOLE_LINE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

impl GenFunction1D {
    fn leaf(node: Node, domain: (f64, f64)) -> Self {
        Self {
            root: Arc::new(node),
            domain,
        }
    }

    fn join(&self, other: &Self, node: Node) -> Self {
        Self {
            root: Arc::new(node),
            domain: (self.domain.0.max(other.domain.0), self.domain.1.min(other.domain.1)),
        }
    }

    fn wrap(&self, node: Node) -> Self {
        Self {
            root: Arc::new(node),
            domain: self.domain,
        }
    }

    pub fn smooth(s: Smooth, domain: (f64, f64)) -> Self {
        Self::leaf(Node::Smooth(s), domain)
    }

    pub fn constant(c: f64, domain: (f64, f64)) -> Self {
        Self::smooth(Smooth::Const(c), domain)
    }

    pub fn heaviside(center: f64, profile: HeavisideProfile, domain: (f64, f64)) -> Self {
        Self::leaf(
            Node::Heaviside {
                center,
                profile,
                order: 0,
            },
            domain,
        )
    }

    pub fn dirac(center: f64, profile: DiracProfile, domain: (f64, f64)) -> Self {
        Self::leaf(
            Node::Dirac {
                center,
                profile,
                order: 0,
            },
            domain,
        )
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn add(&self, other: &Self) -> Self {
        self.join(other, Node::Sum(self.root.clone(), other.root.clone()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.join(other, Node::Product(self.root.clone(), other.root.clone()))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.wrap(Node::Scale(c, self.root.clone()))
    }

    pub fn pow(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("power must be at least 1".into()));
        }
        Ok(self.wrap(Node::Power(self.root.clone(), n)))
    }

    /// Square root; requires the operand to carry a nonnegativity certificate.
    pub fn sqrt(&self) -> Result<Self> {
        if !self.root.sign().nonnegative() {
            return Err(Error::CertificateViolation(format!("{self}")));
        }
        Ok(self.wrap(Node::Sqrt(self.root.clone())))
    }

    /// `1 / u`, checked only at evaluation time.
    pub fn recip(&self) -> Self {
        self.wrap(Node::Recip(self.root.clone()))
    }

    pub fn sign(&self) -> Sign {
        self.root.sign()
    }

    pub fn derivative(&self) -> Result<Self> {
        Ok(self.wrap_root(self.root.derivative()?))
    }

    fn wrap_root(&self, root: Arc<Node>) -> Self {
        Self {
            root,
            domain: self.domain,
        }
    }

    pub fn evaluate(&self, x: f64, eps: f64) -> Result<f64> {
        self.evaluate_at(Point::at(x), eps)
    }

    pub fn evaluate_at(&self, p: Point, eps: f64) -> Result<f64> {
        Ok(self.evaluate_with_magnitude(p, eps)?.0)
    }

    pub fn evaluate_with_magnitude(&self, p: Point, eps: f64) -> Result<(f64, f64)> {
        let x = p.x();
        if !(eps > 0.0) || !(x > self.domain.0 && x < self.domain.1) {
            return Err(Error::DomainError { x, eps });
        }
        self.root.eval(p, eps)
    }

    /// Microscale windows `(center, half-width)` at this `eps`.
    pub fn windows(&self, eps: f64) -> Vec<(f64, f64)> {
        let mut f = Vec::new();
        self.root.features(&mut f);
        f.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        f.into_iter().map(|(c, l)| (c, l * eps)).collect()
    }
}

/// Unit-mass bump `exp(-1/(1-s^2)) / (Z width)`, `s = (x - center) / width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub center: f64,
    pub width: f64,
}

impl TestFunction {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !center.is_finite() {
            return Err(Error::InvalidInput(format!("test function ({center}, {width})")));
        }
        Ok(Self { center, width })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        let d = 1.0 - s * s;
        if d <= 0.0 {
            0.0
        } else {
            (-1.0 / d).exp() / (BUMP_NORMALIZATION * self.width)
        }
    }

    pub fn peak(&self) -> f64 {
        self.eval(self.center)
    }
}

/// Seven bumps spread over `(a, b)`: centers at `m + h {-1/2, -1/4, -1/20, 0,
/// 1/20, 1/4, 1/2}` with widths `h {1/4, 1/8, 1/8, 1/2, 1/4, 1/8, 1/4}`.
/// The members just off the midpoint see a feature there asymmetrically, so
/// odd perturbations do not cancel by symmetry.
pub fn default_battery(domain: (f64, f64)) -> Result<Vec<TestFunction>> {
    let (a, b) = domain;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInput(format!(
            "battery needs a bounded domain, got ({a}, {b})"
        )));
    }
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let centers = [-0.5, -0.25, -0.05, 0.0, 0.05, 0.25, 0.5];
    let widths = [0.25, 0.125, 0.125, 0.5, 0.25, 0.125, 0.25];
    centers
        .iter()
        .zip(widths)
        .map(|(c, w)| TestFunction::new(m + h * c, h * w))
        .collect()
}

pub const DEFAULT_DOMAIN: (f64, f64) = (-4.0, 4.0);

/// A pairing value with a rounding floor below which it carries no sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairValue {
    pub value: f64,
    pub floor: f64,
}

const FINE_PANELS_PER_EPS: f64 = 4.0;
const PANELS_PER_WIDTH: f64 = 128.0;
const ROUNDOFF_FACTOR: f64 = 32.0 * f64::EPSILON;
const PAIR_REL_TOLERANCE: f64 = 1e-9;

struct Segment {
    base: f64,
    lo: f64,
    hi: f64,
    panel: f64,
    graded: bool,
}

/// Splits `[a, b]` into microscale windows (local coordinates, fine panels)
/// and the gaps between them (coarse panels).
fn segments(u: &GenFunction1D, a: f64, b: f64, eps: f64) -> Vec<Segment> {
    let coarse = (b - a) / PANELS_PER_WIDTH;
    let fine = coarse.min(eps / FINE_PANELS_PER_EPS);
    // Merge overlapping windows into clusters; the first center of a cluster
    // is its base, and every feature edge and center becomes a breakpoint.
    let mut clusters: Vec<(f64, Vec<f64>)> = Vec::new();
    for (c, half) in u.windows(eps) {
        if let Some((base, breaks)) = clusters.last_mut() {
            let top = breaks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if c - half <= *base + top {
                let y = c - *base;
                breaks.extend([y - half, y, y + half]);
                continue;
            }
        }
        clusters.push((c, vec![-half, 0.0, half]));
    }
    let mut out = Vec::new();
    let mut cursor = a;
    for (base, mut breaks) in clusters {
        let (lo_lim, hi_lim) = (a - base, b - base);
        breaks.iter_mut().for_each(|y| *y = y.clamp(lo_lim, hi_lim));
        breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
        breaks.dedup();
        if breaks.len() < 2 {
            continue;
        }
        let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
        if base + lo > cursor {
            out.push(Segment {
                base: cursor,
                lo: 0.0,
                hi: base + lo - cursor,
                panel: coarse,
                graded: false,
            });
        }
        for w in breaks.windows(2) {
            out.push(Segment {
                base,
                lo: w[0],
                hi: w[1],
                panel: fine,
                graded: true,
            });
        }
        cursor = cursor.max(base + hi);
    }
    if cursor < b {
        out.push(Segment {
            base: cursor,
            lo: 0.0,
            hi: b - cursor,
            panel: coarse,
            graded: false,
        });
    }
    out
}

struct Sums {
    high: f64,
    low: f64,
    magnitude: f64,
}

/// Geometric grading levels toward the ends of microscale windows, where
/// compactly supported profiles may have algebraic singularities.
const GRADING_LEVELS: i32 = 14;

/// Panel edges for a segment: uniform, with the end panels of fine segments
/// split geometrically toward the segment ends.
fn panel_edges(seg: &Segment, refine: usize) -> Vec<f64> {
    let len = seg.hi - seg.lo;
    let n = ((len / seg.panel).ceil() as usize).max(1) << refine;
    let h = len / n as f64;
    let mut edges: Vec<f64> = (0..=n).map(|k| seg.lo + k as f64 * h).collect();
    edges[n] = seg.hi;
    if seg.graded {
        let mut head: Vec<f64> = (1..=GRADING_LEVELS)
            .rev()
            .map(|j| seg.lo + h * 0.5f64.powi(j))
            .collect();
        let mut tail: Vec<f64> = (1..=GRADING_LEVELS).map(|j| seg.hi - h * 0.5f64.powi(j)).collect();
        let mut out = vec![seg.lo];
        out.append(&mut head);
        out.extend_from_slice(&edges[1..n]);
        out.append(&mut tail);
        out.push(seg.hi);
        out.dedup();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return out;
    }
    edges
}

fn integrate_segments<W: Fn(f64) -> f64>(
    u: &GenFunction1D,
    segs: &[Segment],
    eps: f64,
    weight: &W,
    refine: usize,
) -> Result<Sums> {
    thread_local! {
        static RULES: (GaussLegendre, GaussLegendre) = (GaussLegendre::new(10), GaussLegendre::new(8));
    }
    RULES.with(|(g10, g8)| {
        let mut s = Sums {
            high: 0.0,
            low: 0.0,
            magnitude: 0.0,
        };
        for seg in segs {
            for w2 in panel_edges(seg, refine).windows(2) {
                let (lo, hi) = (w2[0], w2[1]);
                let h = hi - lo;
                let mid = 0.5 * (lo + hi);
                for (rule, high) in [(g10, true), (g8, false)] {
                    for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
                        let p = Point::local(seg.base, mid + 0.5 * h * t);
                        let phi = weight(p.x());
                        if phi == 0.0 {
                            continue;
                        }
                        let (v, m) = u.root.eval(p, eps)?;
                        let wv = 0.5 * h * w * phi;
                        if high {
                            s.high += wv * v;
                        } else {
                            s.low += wv * v;
                        }
                        s.magnitude = s.magnitude.max(0.0) + 0.5 * (wv * m).abs();
                    }
                }
            }
        }
        Ok(s)
    })
}

/// `int_a^b u(x, eps) w(x) dx` with windows resolved at scale `eps`.
pub fn integrate_weighted<W: Fn(f64) -> f64>(
    u: &GenFunction1D,
    a: f64,
    b: f64,
    eps: f64,
    weight: W,
) -> Result<PairValue> {
    if !(a >= u.domain.0 && b <= u.domain.1 && a < b) {
        return Err(Error::DomainError {
            x: if a < u.domain.0 { a } else { b },
            eps,
        });
    }
    if !(eps > 0.0) {
        return Err(Error::DomainError { x: a, eps });
    }
    let segs = segments(u, a, b, eps);
    let mut estimate = f64::INFINITY;
    for refine in 0..4 {
        let s = integrate_segments(u, &segs, eps, &weight, refine)?;
        let roundoff = ROUNDOFF_FACTOR * s.magnitude;
        estimate = (s.high - s.low).abs();
        if !s.high.is_finite() {
            break;
        }
        if estimate <= PAIR_REL_TOLERANCE * s.magnitude.max(f64::MIN_POSITIVE) + roundoff {
            return Ok(PairValue {
                value: s.high,
                // The 10-point result is far more accurate than the 8-point
                // one it was compared with; keep a fraction of the gap.
                floor: roundoff + 1e-3 * estimate,
            });
        }
    }
    Err(Error::QuadratureFailure {
        tolerance: PAIR_REL_TOLERANCE,
        estimate,
    })
}

/// `<u_eps, phi>` with its rounding floor.
pub fn pair_with_floor(u: &GenFunction1D, phi: &TestFunction, eps: f64) -> Result<PairValue> {
    let (a, b) = phi.support();
    if a < u.domain.0 || b > u.domain.1 {
        return Err(Error::DomainError {
            x: if a < u.domain.0 { a } else { b },
            eps,
        });
    }
    integrate_weighted(u, a, b, eps, |x| phi.eval(x))
}

pub fn pair(u: &GenFunction1D, phi: &TestFunction, eps: f64) -> Result<f64> {
    Ok(pair_with_floor(u, phi, eps)?.value)
}

/// `int_{-L}^{L} u(center + eps y) eps dy`: the integral of `u` over the
/// microscale window, in the stretched variable.
pub fn window_integral(u: &GenFunction1D, center: f64, cutoff: f64, eps: f64) -> Result<f64> {
    let mut breaks: Vec<f64> = vec![-cutoff, cutoff];
    for (c, half) in u.windows(eps) {
        let y = (c - center) / eps;
        let l = half / eps;
        for b in [y - l, y - 1.0, y, y + 1.0, y + l] {
            if b.abs() < cutoff {
                breaks.push(b);
            }
        }
    }
    let whole = cutoff.ceil() as i64;
    breaks.extend((-whole..=whole).map(|k| k as f64).filter(|b| b.abs() < cutoff));
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let quad = Quadrature {
        panels: 2,
        tolerance: 1e-13,
        max_doublings: 12,
        ..Quadrature::default()
    };
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let value = quad.integrate_pieces(
        |y| match u.root.eval(Point::local(center, eps * y), eps) {
            Ok((v, _)) => v * eps,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                0.0
            }
        },
        &breaks,
    )?;
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Pairing values at every sample of `grid`, computed in parallel, wrapped as
/// a representative with its rounding floor.
pub fn pairing_representative(u: &GenFunction1D, phi: &TestFunction, grid: &DyadicGrid) -> Result<EpsRepresentative> {
    let samples = grid.sample_points();
    let values: Vec<PairValue> = samples
        .par_iter()
        .map(|&eps| pair_with_floor(u, phi, eps))
        .collect::<Result<_>>()?;
    let table: Arc<HashMap<u64, PairValue>> = Arc::new(samples.iter().map(|e| e.to_bits()).zip(values).collect());
    let (u1, phi1, t1) = (u.clone(), *phi, table.clone());
    let (u2, phi2, t2) = (u.clone(), *phi, table);
    let lookup = move |t: &HashMap<u64, PairValue>, u: &GenFunction1D, phi: &TestFunction, eps: f64| {
        t.get(&eps.to_bits())
            .copied()
            .or_else(|| pair_with_floor(u, phi, eps).ok())
            .unwrap_or(PairValue {
                value: f64::NAN,
                floor: 0.0,
            })
    };
    Ok(EpsRepresentative::with_floor(
        move |e| lookup(&t1, &u1, &phi1, e).value,
        move |e| lookup(&t2, &u2, &phi2, e).floor,
    ))
}

/// One row of a pairing sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingRow {
    pub eps: f64,
    pub phi_id: usize,
    pub value: f64,
}

pub fn pairing_sweep_csv(rows: &[PairingRow]) -> String {
    let mut s = String::from("eps,phi_id,value\n");
    for r in rows {
        s.push_str(&format!("{:.16e},{},{:.16e}\n", r.eps, r.phi_id, r.value));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    EqualInG,
    AssociatedNotEqual,
    NotAssociated,
    Indeterminate,
}

impl fmt::Display for Association {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Association::EqualInG => "equal_in_G",
            Association::AssociatedNotEqual => "associated_not_equal",
            Association::NotAssociated => "not_associated",
            Association::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone)]
pub struct AssociationVerdict {
    pub per_test: Vec<AsymptoticClass>,
    pub aggregate: Association,
    /// Always numeric: a finite battery and grid only semi-decide.
    pub confidence: Confidence,
    pub sweep: Vec<PairingRow>,
}

impl AssociationVerdict {
    /// Most negative fitted pairing slope across the battery.
    pub fn steepest_slope(&self) -> Option<f64> {
        self.per_test
            .iter()
            .filter_map(|c| c.leading_order)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

pub fn aggregate(classes: &[AsymptoticClass]) -> Association {
    if classes.iter().any(|c| c.associated_to_zero.is_false()) {
        Association::NotAssociated
    } else if classes.iter().all(|c| c.negligible.is_true()) {
        Association::EqualInG
    } else if classes.iter().all(|c| c.associated_to_zero.is_true()) && classes.iter().any(|c| c.negligible.is_false())
    {
        Association::AssociatedNotEqual
    } else {
        Association::Indeterminate
    }
}

/// Classifies `eps -> <u_eps - v_eps, phi>` for every member of the battery.
pub fn association(
    u: &GenFunction1D,
    v: &GenFunction1D,
    battery: &[TestFunction],
    grid: &DyadicGrid,
) -> Result<AssociationVerdict> {
    if battery.is_empty() {
        return Err(Error::InvalidInput("empty test-function battery".into()));
    }
    grid.validate()?;
    let diff = u.sub(v);
    let mut per_test = Vec::with_capacity(battery.len());
    let mut sweep = Vec::new();
    for (id, phi) in battery.iter().enumerate() {
        let rep = pairing_representative(&diff, phi, grid)?;
        sweep.extend(grid.samples().into_iter().map(|eps| PairingRow {
            eps,
            phi_id: id,
            value: rep.eval(eps),
        }));
        per_test.push(classify(&rep, grid)?);
    }
    Ok(AssociationVerdict {
        aggregate: aggregate(&per_test),
        per_test,
        confidence: Confidence::Numeric,
        sweep,
    })
}

/// `int (H^2 - H) H' dx` for `H = K(x / eps)` at every grid sample; the
/// integrand is an exact rescaling, so the samples must agree.
pub fn integral_i(k: &HeavisideProfile, grid: &DyadicGrid) -> Result<f64> {
    grid.validate()?;
    let h = GenFunction1D::heaviside(0.0, k.clone(), WHOLE_LINE);
    let integrand = h.pow(2)?.sub(&h).mul(&h.derivative()?);
    let values: Vec<f64> = grid
        .samples()
        .par_iter()
        .map(|&eps| window_integral(&integrand, 0.0, k.cutoff(), eps))
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread > 1e-10 {
        return Err(Error::QuadratureFailure {
            tolerance: 1e-10,
            estimate: spread,
        });
    }
    Ok(mean)
}

#[derive(Debug, Clone)]
pub struct SqrtDeltaReport {
    /// Classification of `<sqrt(delta)_eps, phi>`.
    pub field_class: AsymptoticClass,
    /// Classification of `<(sqrt(delta)_eps)^2, phi>`.
    pub energy_class: AsymptoticClass,
    /// `phi(0) int sqrt(psi)`: the predicted coefficient of `sqrt(eps)`.
    pub field_coefficient: f64,
    /// Richardson-extrapolated energy pairing.
    pub energy_limit: f64,
    pub phi_at_center: f64,
}

/// The field `sqrt(delta)` is associated to zero while its energy density
/// `delta` is not.
pub fn sqrt_delta_demo(psi: &DiracProfile, phi: &TestFunction, grid: &DyadicGrid) -> Result<SqrtDeltaReport> {
    if !psi.is_nonnegative() {
        return Err(Error::CertificateViolation(format!(
            "Dirac profile `{}` is not certified nonnegative",
            psi.tag()
        )));
    }
    let (a, b) = phi.support();
    let domain = (a - 1.0, b + 1.0);
    let delta = GenFunction1D::dirac(0.0, psi.clone(), domain);
    let field = delta.sqrt()?;
    let energy = field.pow(2)?;
    let field_class = classify(&pairing_representative(&field, phi, grid)?, grid)?;
    let energy_rep = pairing_representative(&energy, phi, grid)?;
    let energy_class = classify(&energy_rep, grid)?;

    // Extrapolate on the first dyadic samples: the error is a power series
    // in eps once the pairing window sits inside the support of phi.
    let eps: Vec<f64> = (0..6).map(|k| grid.eps0 * 0.5f64.powi(k + 4)).collect();
    let values: Vec<f64> = eps.iter().map(|&e| pair(&energy, phi, e)).collect::<Result<_>>()?;
    let energy_limit = richardson(&values, 1.0, 1.0);

    // y = L cos(t) absorbs the square-root behaviour at the support edges.
    let l = psi.cutoff();
    let root_mass = Quadrature::default().integrate(
        |t| psi.value(l * t.cos()).max(0.0).sqrt() * l * t.sin(),
        0.0,
        std::f64::consts::PI,
    )?;
    Ok(SqrtDeltaReport {
        field_class,
        energy_class,
        field_coefficient: phi.eval(0.0) * root_mass,
        energy_limit,
        phi_at_center: phi.eval(0.0),
    })
}

/// Log-log slope of `|values|` against `eps`, for reporting.
pub fn loglog_slope(eps: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(values)
        .filter(|(_, v)| v.abs() > 0.0)
        .map(|(e, v)| (e.ln(), v.abs().ln()))
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    fit_line(&xs, &ys).map(|f| f.slope)
}

pub fn tri(b: bool) -> TriState {
    if b {
        TriState::True
    } else {
        TriState::False
    }
}

/// JSON form of smooth leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothSpec {
    Const {
        value: f64,
    },
    Poly {
        coeffs: Vec<f64>,
    },
    Sin {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    Exp {
        #[serde(default = "one")]
        amplitude: f64,
        rate: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl SmoothSpec {
    pub fn build(&self) -> Smooth {
        match self {
            SmoothSpec::Const { value } => Smooth::Const(*value),
            SmoothSpec::Poly { coeffs } => Smooth::Poly(coeffs.clone()),
            SmoothSpec::Sin { amplitude, freq, phase } => Smooth::Sin {
                amplitude: *amplitude,
                freq: *freq,
                phase: *phase,
            },
            SmoothSpec::Exp { amplitude, rate } => Smooth::Exp {
                amplitude: *amplitude,
                rate: *rate,
            },
        }
    }
}

/// JSON form of an expression tree, e.g.
/// `{"kind": "power", "n": 2, "arg": {"kind": "heaviside", "profile": {"tag": "tanh"}}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeSpec {
    Smooth {
        #[serde(rename = "fn")]
        function: SmoothSpec,
    },
    Heaviside {
        #[serde(default)]
        center: f64,
        profile: ProfileSpec,
    },
    Dirac {
        #[serde(default)]
        center: f64,
        profile: ProfileSpec,
    },
    Sum {
        terms: Vec<NodeSpec>,
    },
    Product {
        factors: Vec<NodeSpec>,
    },
    Scale {
        factor: f64,
        arg: Box<NodeSpec>,
    },
    Power {
        n: u32,
        arg: Box<NodeSpec>,
    },
    Sqrt {
        arg: Box<NodeSpec>,
    },
    Derivative {
        arg: Box<NodeSpec>,
    },
}

impl NodeSpec {
    pub fn build(&self, domain: (f64, f64)) -> Result<GenFunction1D> {
        Ok(match self {
            NodeSpec::Smooth { function } => GenFunction1D::smooth(function.build(), domain),
            NodeSpec::Heaviside { center, profile } => GenFunction1D::heaviside(*center, profile.heaviside()?, domain),
            NodeSpec::Dirac { center, profile } => GenFunction1D::dirac(*center, profile.dirac()?, domain),
            NodeSpec::Sum { terms } => fold(terms, domain, GenFunction1D::add)?,
            NodeSpec::Product { factors } => fold(factors, domain, GenFunction1D::mul)?,
            NodeSpec::Scale { factor, arg } => arg.build(domain)?.scale(*factor),
            NodeSpec::Power { n, arg } => arg.build(domain)?.pow(*n)?,
            NodeSpec::Sqrt { arg } => arg.build(domain)?.sqrt()?,
            NodeSpec::Derivative { arg } => arg.build(domain)?.derivative()?,
        })
    }
}

fn fold(
    items: &[NodeSpec],
    domain: (f64, f64),
    op: fn(&GenFunction1D, &GenFunction1D) -> GenFunction1D,
) -> Result<GenFunction1D> {
    let mut it = items.iter();
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidInput("empty sum or product".into()))?
        .build(domain)?;
    it.try_fold(first, |acc, n| Ok(op(&acc, &n.build(domain)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{preset_dirac, preset_heaviside, DIRAC_TAGS, HEAVISIDE_TAGS};

    fn h(tag: &str) -> GenFunction1D {
        GenFunction1D::heaviside(0.0, preset_heaviside(tag).unwrap(), DEFAULT_DOMAIN)
    }

    fn d(tag: &str) -> GenFunction1D {
        GenFunction1D::dirac(0.0, preset_dirac(tag).unwrap(), DEFAULT_DOMAIN)
    }

    fn coarse() -> DyadicGrid {
        DyadicGrid::coarse(0.5, 40, 12)
    }

    #[test]
    fn node_values() {
        assert_eq!(h("tanh").evaluate(0.0, 0.3).unwrap(), 0.5);
        assert!((d("parabolic").evaluate(0.0, 0.1).unwrap() - 7.5).abs() < 1e-14);
        let u = h("skewed");
        for (x, eps) in [(0.01, 0.1), (-0.3, 0.5), (2.0, 1e-6)] {
            let p = u.mul(&u).evaluate(x, eps).unwrap();
            let q = u.pow(2).unwrap().evaluate(x, eps).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn domain_is_enforced() {
        assert!(matches!(h("tanh").evaluate(5.0, 0.1), Err(Error::DomainError { .. })));
        assert!(matches!(h("tanh").evaluate(0.0, 0.0), Err(Error::DomainError { .. })));
    }

    #[test]
    fn local_coordinates_keep_precision() {
        let u = GenFunction1D::heaviside(1.0, preset_heaviside("tanh").unwrap(), DEFAULT_DOMAIN);
        let eps = 1e-14;
        let v = u.evaluate_at(Point::local(1.0, 0.5 * eps), eps).unwrap();
        assert!((v - 0.5 * (1.0 + 0.5f64.tanh())).abs() < 1e-15);
    }

    #[test]
    fn smooth_derivatives() {
        let u = GenFunction1D::smooth(Smooth::Poly(vec![0.0, 0.0, 1.0]), DEFAULT_DOMAIN);
        let du = u.derivative().unwrap();
        for x in [-1.0, 0.3, 2.5] {
            assert_eq!(du.evaluate(x, 0.1).unwrap(), 2.0 * x);
        }
        let s = GenFunction1D::smooth(
            Smooth::Sin {
                amplitude: 2.0,
                freq: 3.0,
                phase: 0.0,
            },
            DEFAULT_DOMAIN,
        );
        let ds = s.derivative().unwrap();
        assert!((ds.evaluate(0.4, 0.1).unwrap() - 6.0 * 1.2f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn opaque_smooth_falls_back_to_differences() {
        let f: ProfileFn = Arc::new(|x: f64| x.powi(3));
        let u = GenFunction1D::smooth(
            Smooth::Custom {
                name: "cube".into(),
                f,
                df: None,
            },
            DEFAULT_DOMAIN,
        );
        let du = u.derivative().unwrap();
        assert!((du.evaluate(1.5, 0.1).unwrap() - 6.75).abs() < 1e-8);
        assert!(matches!(du.derivative(), Err(Error::NonDifferentiableNode(_))));
    }

    #[test]
    fn heaviside_derivative_is_scaled_profile_derivative() {
        let k = preset_heaviside("erf").unwrap();
        let du = h("erf").derivative().unwrap();
        let eps = 0.01;
        for x in [-0.02, 0.0, 0.005] {
            let want = k.derivative(x / eps) / eps;
            assert!((du.evaluate(x, eps).unwrap() - want).abs() < 1e-12 * want.abs().max(1.0));
        }
        let d3 = du.derivative().unwrap().derivative();
        assert!(matches!(d3, Err(Error::NonDifferentiableNode(_))));
    }

    #[test]
    fn sum_rule() {
        let u = h("tanh").add(&d("bump"));
        let du = u.derivative().unwrap();
        let split = h("tanh").derivative().unwrap().add(&d("bump").derivative().unwrap());
        for (x, eps) in [(0.0, 0.5), (0.1, 0.2), (-0.05, 0.1)] {
            assert_eq!(du.evaluate(x, eps).unwrap(), split.evaluate(x, eps).unwrap());
        }
    }

    #[test]
    fn sqrt_certificates() {
        assert!(d("parabolic").sqrt().is_ok());
        assert!(h("tanh").sqrt().is_ok());
        assert!(matches!(h("overshoot").sqrt(), Err(Error::CertificateViolation(_))));
        assert!(matches!(
            h("tanh").scale(-1.0).sqrt(),
            Err(Error::CertificateViolation(_))
        ));
        assert!(h("overshoot").pow(2).unwrap().sqrt().is_ok());
        let signed = DiracProfile::custom(
            "odd",
            1.0,
            vec![Arc::new(|y: f64| if y.abs() < 1.0 { 0.5 + 0.75 * y } else { 0.0 })],
            false,
        )
        .unwrap();
        let u = GenFunction1D::dirac(0.0, signed, DEFAULT_DOMAIN);
        assert!(matches!(u.sqrt(), Err(Error::CertificateViolation(_))));
    }

    #[test]
    fn sqrt_derivative_needs_positive_operand() {
        let r = d("bump").sqrt().unwrap().derivative();
        assert!(matches!(r, Err(Error::NonDifferentiableNode(_))));
        let pos = h("tanh").add(&GenFunction1D::constant(1.0, DEFAULT_DOMAIN));
        let dr = pos.sqrt().unwrap().derivative().unwrap();
        let (x, eps) = (0.03, 0.1);
        let k = preset_heaviside("tanh").unwrap();
        let want = 0.5 * k.derivative(x / eps) / eps / (1.0 + k.value(x / eps)).sqrt();
        assert!((dr.evaluate(x, eps).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn constant_pairing_is_mass_of_phi() {
        let one = GenFunction1D::constant(1.0, DEFAULT_DOMAIN);
        let phi = TestFunction::new(0.3, 1.2).unwrap();
        for eps in [0.5, 1e-3, 1e-9] {
            assert!((pair(&one, &phi, eps).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn test_function_shape() {
        let phi = TestFunction::new(0.5, 0.25).unwrap();
        assert_eq!(phi.eval(0.76), 0.0);
        assert!(phi.peak() > phi.eval(0.55));
        assert!(phi.peak() > phi.eval(0.45));
        let battery = default_battery(DEFAULT_DOMAIN).unwrap();
        assert_eq!(battery.len(), 7);
        for phi in &battery {
            let (a, b) = phi.support();
            assert!(a >= -4.0 && b <= 4.0);
        }
    }

    #[test]
    fn dirac_sampling_extrapolates_to_phi_at_center() {
        let phi = TestFunction::new(0.1, 0.5).unwrap();
        for tag in DIRAC_TAGS {
            let u = d(tag);
            let vals: Vec<f64> = (3..9).map(|k| pair(&u, &phi, 0.5f64.powi(k)).unwrap()).collect();
            let lim = richardson(&vals, 1.0, 1.0);
            assert!((lim - phi.eval(0.0)).abs() < 1e-8, "{tag}: {lim} vs {}", phi.eval(0.0));
        }
    }

    #[test]
    fn dirac_square_diverges_like_inverse_eps() {
        let u = d("parabolic").pow(2).unwrap();
        let phi = TestFunction::new(0.0, 1.0).unwrap();
        for eps in [1e-4, 1e-8] {
            let v = pair(&u, &phi, eps).unwrap();
            let want = 0.6 * phi.eval(0.0) / eps;
            assert!((v / want - 1.0).abs() < 1e-6, "{eps}: {v} vs {want}");
        }
    }

    #[test]
    fn smoothstep_derivative_samples_phi() {
        let du = h("smoothstep").derivative().unwrap();
        let phi = TestFunction::new(-0.2, 0.5).unwrap();
        let vals: Vec<f64> = (2..8).map(|k| pair(&du, &phi, 0.5f64.powi(k)).unwrap()).collect();
        assert!((richardson(&vals, 2.0, 2.0) - phi.eval(0.0)).abs() < 1e-9);
    }

    #[test]
    fn heaviside_square_is_associated_not_equal() {
        let battery = default_battery(DEFAULT_DOMAIN).unwrap();
        for tag in HEAVISIDE_TAGS {
            let u = h(tag);
            let v = association(&u.pow(2).unwrap(), &u, &battery, &coarse()).unwrap();
            assert_eq!(v.aggregate, Association::AssociatedNotEqual, "{tag}: {:?}", v.per_test);
        }
    }

    #[test]
    fn reflexive_association_is_equality() {
        let battery = default_battery(DEFAULT_DOMAIN).unwrap();
        let u = h("erf").mul(&d("bump"));
        let v = association(&u, &u, &battery, &coarse()).unwrap();
        assert_eq!(v.aggregate, Association::EqualInG);
    }

    #[test]
    fn dirac_square_is_not_associated_to_a_multiple() {
        let battery = default_battery(DEFAULT_DOMAIN).unwrap();
        let delta = d("parabolic");
        for c in [0.0, 1.0, 0.6] {
            let v = association(&delta.pow(2).unwrap(), &delta.scale(c), &battery, &coarse()).unwrap();
            assert_eq!(v.aggregate, Association::NotAssociated);
            assert!((v.steepest_slope().unwrap() + 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn integral_i_is_minus_one_sixth() {
        let grid = DyadicGrid::coarse(0.5, 40, 12);
        for tag in HEAVISIDE_TAGS {
            let i = integral_i(&preset_heaviside(tag).unwrap(), &grid).unwrap();
            assert!((i + 1.0 / 6.0).abs() < 1e-8, "{tag}: {i}");
        }
        let k = preset_heaviside("overshoot").unwrap();
        let l = k.cutoff();
        let anti = |y: f64| k.value(y).powi(3) / 3.0 - k.value(y).powi(2) / 2.0;
        let i = integral_i(&k, &grid).unwrap();
        assert!((i - (anti(l) - anti(-l))).abs() < 1e-8);
    }

    #[test]
    fn replacing_the_square_gives_zero() {
        let u = h("tanh");
        let z = u.sub(&u).mul(&u.derivative().unwrap());
        assert_eq!(window_integral(&z, 0.0, 20.0, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn sqrt_delta() {
        let psi = preset_dirac("parabolic").unwrap();
        let phi = TestFunction::new(0.0, 1.0).unwrap();
        let r = sqrt_delta_demo(&psi, &phi, &coarse()).unwrap();
        assert_eq!(r.field_class.associated_to_zero, TriState::True);
        assert!((r.field_class.leading_order.unwrap() - 0.5).abs() < 0.1);
        assert_eq!(r.energy_class.associated_to_zero, TriState::False);
        assert!((r.energy_limit - r.phi_at_center).abs() < 1e-4);
        // sqrt(eps) coefficient: phi(0) * (sqrt(3)/2) * pi/2.
        let want = phi.eval(0.0) * 3f64.sqrt() / 2.0 * std::f64::consts::FRAC_PI_2;
        assert!((r.field_coefficient - want).abs() < 1e-9);
        let eps = 1e-10;
        let g = GenFunction1D::dirac(0.0, psi, (-2.0, 2.0)).sqrt().unwrap();
        assert!((pair(&g, &phi, eps).unwrap() / eps.sqrt() / want - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disjoint_support_pairings_vanish() {
        let psi = preset_dirac("bump").unwrap();
        let phi = TestFunction::new(2.0, 0.5).unwrap();
        let g = GenFunction1D::dirac(0.0, psi, DEFAULT_DOMAIN).sqrt().unwrap();
        assert_eq!(pair(&g, &phi, 1e-3).unwrap(), 0.0);
        assert_eq!(pair(&g.pow(2).unwrap(), &phi, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"kind": "sum", "terms": [
            {"kind": "power", "n": 2, "arg": {"kind": "heaviside", "profile": {"tag": "tanh"}}},
            {"kind": "scale", "factor": -1, "arg": {"kind": "heaviside", "profile": {"tag": "tanh"}}}
        ]}"#;
        let spec: NodeSpec = serde_json::from_str(json).unwrap();
        let u = spec.build(DEFAULT_DOMAIN).unwrap();
        let k = preset_heaviside("tanh").unwrap();
        let y: f64 = 0.7;
        let want = k.value(y).powi(2) - k.value(y);
        assert!((u.evaluate(0.07, 0.1).unwrap() - want).abs() < 1e-15);
        let back: NodeSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let bad = r#"{"kind": "heaviside", "profile": {"tag": "tanh"}, "colour": 1}"#;
        assert!(serde_json::from_str::<NodeSpec>(bad).is_err());
    }

    #[test]
    fn sweep_csv_has_header_and_rows() {
        let rows = [PairingRow {
            eps: 0.5,
            phi_id: 3,
            value: -1.25,
        }];
        let s = pairing_sweep_csv(&rows);
        assert_eq!(s.lines().next(), Some("eps,phi_id,value"));
        assert!(s.contains(",3,-1.2500000000000000e0"));
    }
}
