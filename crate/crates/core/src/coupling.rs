//! Odd coupling functions.
//!
//! A coupling `f` is an odd C¹ function. Equilibria are built from its roots
//! and stability depends on `f'` at those roots, so every kind exposes value,
//! derivative, antiderivative (`F` with `F(0) = 0`) and a root scan.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points in the uniform sign-change scan over `[−bound, bound]`.
pub const ROOT_GRID: usize = 10_000;

/// `|f'(r)|` at or below this flags a root as (nearly) degenerate.
pub const DEGENERATE_SLOPE: f64 = 1e-8;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Linear(f64),
    /// Coefficients of `y, y³, y⁵, …`.
    OddPolynomial(Vec<f64>),
    /// `f(y) = −a·sin(y)`.
    Sine(f64),
    Custom(Arc<Custom>),
}

struct Custom {
    name: String,
    value: ScalarFn,
    derivative: ScalarFn,
    antiderivative: Option<ScalarFn>,
    roots: Option<Vec<f64>>,
}

/// An odd scalar coupling function.
#[derive(Clone)]
pub struct CouplingFunction {
    kind: Kind,
}

impl CouplingFunction {
    /// `f(y) = slope·y`. A zero slope is rejected since every `y` would be a root.
    pub fn linear(slope: f64) -> Result<Self> {
        if !slope.is_finite() || slope == 0.0 {
            return Err(Error::InvalidCoupling(format!(
                "linear slope must be finite and nonzero, got {slope}"
            )));
        }
        Ok(CouplingFunction {
            kind: Kind::Linear(slope),
        })
    }

    /// `f(y) = a₁y + a₃y³ + a₅y⁵ + …` from the odd-power coefficients.
    /// Trailing zeros are dropped.
    pub fn odd_polynomial(coeffs: &[f64]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCoupling("non-finite coefficient".into()));
        }
        let mut c = coeffs.to_vec();
        while c.last() == Some(&0.0) {
            c.pop();
        }
        if c.is_empty() {
            return Err(Error::InvalidCoupling("polynomial coupling is identically zero".into()));
        }
        Ok(CouplingFunction {
            kind: Kind::OddPolynomial(c),
        })
    }

    /// The running example `y − y³`.
    pub fn cubic() -> Self {
        CouplingFunction {
            kind: Kind::OddPolynomial(vec![1.0, -1.0]),
        }
    }

    /// `f(y) = −a·sin(y)`.
    pub fn sine(amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude == 0.0 {
            return Err(Error::InvalidCoupling(format!(
                "sine amplitude must be finite and nonzero, got {amplitude}"
            )));
        }
        Ok(CouplingFunction {
            kind: Kind::Sine(amplitude),
        })
    }

    /// A user-supplied coupling. Oddness and the derivative are spot-checked
    /// on a grid in `[−2, 2]`; `roots`, if given, replaces the numeric scan.
    pub fn custom<F, D>(
        name: impl Into<String>,
        value: F,
        derivative: D,
        antiderivative: Option<ScalarFn>,
        roots: Option<Vec<f64>>,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        let h = 1e-5;
        for k in 0..=40 {
            let y = -2.0 + 0.1 * k as f64 + 0.0123;
            let fy = value(y);
            let fm = value(-y);
            if !fy.is_finite() || (fy + fm).abs() > 1e-10 * (1.0 + fy.abs()) {
                return Err(Error::InvalidCoupling(format!("{name} is not odd at y = {y}")));
            }
            let fd = (value(y + h) - value(y - h)) / (2.0 * h);
            let d = derivative(y);
            if (d - fd).abs() > 1e-6 * d.abs().max(1.0) {
                return Err(Error::InvalidCoupling(format!(
                    "{name}: derivative {d} disagrees with finite difference {fd} at y = {y}"
                )));
            }
        }
        Ok(CouplingFunction {
            kind: Kind::Custom(Arc::new(Custom {
                name,
                value: Arc::new(value),
                derivative: Arc::new(derivative),
                antiderivative,
                roots,
            })),
        })
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Linear(s) => s * y,
            Kind::OddPolynomial(c) => {
                let y2 = y * y;
                y * c.iter().rev().fold(0.0, |acc, a| acc * y2 + a)
            }
            Kind::Sine(a) => -a * y.sin(),
            Kind::Custom(c) => (c.value)(y),
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Linear(s) => *s,
            Kind::OddPolynomial(c) => {
                let y2 = y * y;
                c.iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (k, a)| acc * y2 + a * (2 * k + 1) as f64)
            }
            Kind::Sine(a) => -a * y.cos(),
            Kind::Custom(c) => (c.derivative)(y),
        }
    }

    /// `F(y) = ∫₀ʸ f`.
    pub fn antiderivative(&self, y: f64) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Linear(s) => 0.5 * s * y * y,
            Kind::OddPolynomial(c) => {
                let y2 = y * y;
                y2 * c
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (k, a)| acc * y2 + a / (2 * k + 2) as f64)
            }
            Kind::Sine(a) => a * (y.cos() - 1.0),
            Kind::Custom(c) => match &c.antiderivative {
                Some(f) => f(y),
                None => return Err(Error::NotAvailable(c.name.clone())),
            },
        })
    }

    pub fn has_antiderivative(&self) -> bool {
        match &self.kind {
            Kind::Custom(c) => c.antiderivative.is_some(),
            _ => true,
        }
    }

    /// Odd-power coefficients when the coupling is polynomial (linear counts).
    pub fn polynomial_coefficients(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Linear(s) => Some(vec![*s]),
            Kind::OddPolynomial(c) => Some(c.clone()),
            _ => None,
        }
    }

    pub fn degree(&self) -> Option<usize> {
        self.polynomial_coefficients().map(|c| 2 * c.len() - 1)
    }

    pub fn is_sine(&self) -> bool {
        matches!(self.kind, Kind::Sine(_))
    }

    /// Sorted roots of `f` in `[−bound, bound]`. The set is symmetric and
    /// always contains 0 exactly.
    pub fn roots(&self, bound: f64) -> Result<Vec<f64>> {
        check_bound(bound)?;
        let positive: Vec<f64> = match &self.kind {
            Kind::Sine(_) => {
                let kmax = (bound / std::f64::consts::PI).floor() as i64;
                (1..=kmax).map(|k| k as f64 * std::f64::consts::PI).collect()
            }
            Kind::Custom(c) if c.roots.is_some() => {
                let mut r: Vec<f64> = c
                    .roots
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|r| r.abs())
                    .filter(|&r| r > 0.0 && r <= bound)
                    .collect();
                r.sort_by(f64::total_cmp);
                r.dedup();
                r
            }
            // f(0) = 0 exactly, so scanning from 0 cannot bracket a spurious root there.
            _ => self.scan(0.0, 0.0, bound)?.into_iter().filter(|&r| r > 0.0).collect(),
        };
        let mut out: Vec<f64> = positive.iter().rev().map(|r| -r).collect();
        out.push(0.0);
        out.extend(positive);
        self.warn_degenerate(&out);
        Ok(out)
    }

    /// Sorted roots of `f − λ` in `[−bound, bound]`.
    pub fn roots_shifted(&self, lambda: f64, bound: f64) -> Result<Vec<f64>> {
        if lambda == 0.0 {
            return self.roots(bound);
        }
        check_bound(bound)?;
        let r = self.scan(lambda, -bound, bound)?;
        self.warn_degenerate(&r);
        Ok(r)
    }

    /// Positive roots in `(0, bound]`.
    pub fn positive_roots(&self, bound: f64) -> Result<Vec<f64>> {
        Ok(self.roots(bound)?.into_iter().filter(|&r| r > 0.0).collect())
    }

    fn warn_degenerate(&self, roots: &[f64]) {
        for &r in roots {
            if self.derivative(r).abs() <= DEGENERATE_SLOPE {
                log::warn!("degenerate root of {self} at y = {r}: f'(y) = {}", self.derivative(r));
            }
        }
    }

    /// Sign-change scan of `f − λ` on a uniform grid, refined by bisection
    /// until the bracket cannot shrink further.
    fn scan(&self, lambda: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
        let g = |y: f64| self.eval(y) - lambda;
        let step = (hi - lo) / ROOT_GRID as f64;
        let mut roots = Vec::new();
        let mut y0 = lo;
        let mut g0 = g(y0);
        if !g0.is_finite() {
            return Err(Error::RootFindingFailed(format!("f is not finite at {y0}")));
        }
        if g0 == 0.0 {
            roots.push(y0);
        }
        for i in 1..=ROOT_GRID {
            let y1 = if i == ROOT_GRID { hi } else { lo + step * i as f64 };
            let g1 = g(y1);
            if !g1.is_finite() {
                return Err(Error::RootFindingFailed(format!("f is not finite at {y1}")));
            }
            if g1 == 0.0 {
                roots.push(y1);
            } else if g0 != 0.0 && (g0 < 0.0) != (g1 < 0.0) {
                roots.push(bisect(&g, y0, y1, g0));
            }
            y0 = y1;
            g0 = g1;
        }
        Ok(roots)
    }

    pub fn spec(&self) -> Option<CouplingSpec> {
        match &self.kind {
            Kind::Linear(s) => Some(CouplingSpec::Linear { slope: *s }),
            Kind::OddPolynomial(c) => Some(CouplingSpec::OddPolynomial { coeffs: c.clone() }),
            Kind::Sine(a) => Some(CouplingSpec::Sine { amplitude: *a }),
            Kind::Custom(_) => None,
        }
    }
}

fn check_bound(bound: f64) -> Result<()> {
    if bound.is_finite() && bound > 0.0 {
        Ok(())
    } else {
        Err(Error::RootFindingFailed(format!(
            "root bound must be positive, got {bound}"
        )))
    }
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    if ga.abs() <= g(b).abs() {
        a
    } else {
        b
    }
}

impl fmt::Display for CouplingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Linear(s) => write!(f, "{s}·y"),
            Kind::OddPolynomial(c) => {
                let mut first = true;
                for (k, a) in c.iter().enumerate() {
                    if *a == 0.0 {
                        continue;
                    }
                    let sign = if *a < 0.0 {
                        "−"
                    } else if first {
                        ""
                    } else {
                        "+"
                    };
                    let mag = a.abs();
                    let coef = if mag == 1.0 { String::new() } else { format!("{mag}·") };
                    let pow = match 2 * k + 1 {
                        1 => "y".to_string(),
                        p => format!("y^{p}"),
                    };
                    if first {
                        write!(f, "{sign}{coef}{pow}")?;
                    } else {
                        write!(f, " {sign} {coef}{pow}")?;
                    }
                    first = false;
                }
                Ok(())
            }
            Kind::Sine(a) => write!(f, "−{a}·sin(y)"),
            Kind::Custom(c) => write!(f, "{}", c.name),
        }
    }
}

impl fmt::Debug for CouplingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CouplingFunction({self})")
    }
}

/// True iff no two positive roots (repetition allowed) sum to a third,
/// within `1e−10`.
pub fn is_additive_open(positive_roots: &[f64]) -> bool {
    for (i, &a) in positive_roots.iter().enumerate() {
        for &b in &positive_roots[i..] {
            if positive_roots.iter().any(|&c| (a + b - c).abs() <= 1e-10) {
                return false;
            }
        }
    }
    true
}

/// JSON description of a built-in coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    OddPolynomial { coeffs: Vec<f64> },
    Sine { amplitude: f64 },
    Linear { slope: f64 },
}

impl TryFrom<CouplingSpec> for CouplingFunction {
    type Error = Error;

    fn try_from(spec: CouplingSpec) -> Result<Self> {
        match spec {
            CouplingSpec::OddPolynomial { coeffs } => CouplingFunction::odd_polynomial(&coeffs),
            CouplingSpec::Sine { amplitude } => CouplingFunction::sine(amplitude),
            CouplingSpec::Linear { slope } => CouplingFunction::linear(slope),
        }
    }
}

/// Which coupling acts on which edge.
#[derive(Debug, Clone)]
pub enum CouplingAssignment {
    Uniform(CouplingFunction),
    /// Indexed by edge.
    PerEdge(Vec<CouplingFunction>),
}

impl CouplingAssignment {
    pub fn validate(&self, edge_count: usize) -> Result<()> {
        match self {
            CouplingAssignment::Uniform(_) => Ok(()),
            CouplingAssignment::PerEdge(v) if v.len() >= edge_count => Ok(()),
            CouplingAssignment::PerEdge(v) => Err(Error::UncoveredEdge(v.len())),
        }
    }

    pub fn for_edge(&self, e: usize) -> &CouplingFunction {
        match self {
            CouplingAssignment::Uniform(f) => f,
            CouplingAssignment::PerEdge(v) => &v[e],
        }
    }

    pub fn uniform(&self) -> Option<&CouplingFunction> {
        match self {
            CouplingAssignment::Uniform(f) => Some(f),
            CouplingAssignment::PerEdge(_) => None,
        }
    }

    /// Restriction to a subset of edges, renumbered in the given order.
    pub fn restrict(&self, edges: &[usize]) -> CouplingAssignment {
        match self {
            CouplingAssignment::Uniform(f) => CouplingAssignment::Uniform(f.clone()),
            CouplingAssignment::PerEdge(v) => {
                CouplingAssignment::PerEdge(edges.iter().map(|&e| v[e].clone()).collect())
            }
        }
    }
}

impl From<CouplingFunction> for CouplingAssignment {
    fn from(f: CouplingFunction) -> Self {
        CouplingAssignment::Uniform(f)
    }
}
