//! Gauss–Legendre rules and adaptive bisection built on them.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Fixed-rule estimate of `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Estimates of `∫_a^b f` and `∫_a^b |f|` from one set of evaluations.
    fn integrate_with_abs(&self, a: f64, b: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let (mut s, mut sa) = (0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = w * f(mid + half * x);
            s += v;
            sa += v.abs();
        }
        (s * half, sa * half.abs())
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule15() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(15))
}

/// Tolerances for [`integrate`] and friends.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_depth: 40,
        }
    }
}

/// Adaptive bisection of `∫_a^b f` with a 15-point rule per panel; a panel is
/// accepted when its estimate agrees with the sum over its two halves.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = rule15();
    let whole = rule.integrate(a, b, &f);
    let target = spec.abs_tol.max(spec.rel_tol * whole.abs());
    let mut trace = Vec::new();
    let v = bisect(&f, a, b, whole, target, spec.max_depth, &mut trace)?;
    if !v.is_finite() {
        return Err(Error::Quadrature {
            message: format!("non-finite integral on [{a}, {b}]"),
            trace,
        });
    }
    Ok(v)
}

fn bisect(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    target: f64,
    depth: usize,
    trace: &mut Vec<String>,
) -> Result<f64> {
    let rule = rule15();
    let m = 0.5 * (a + b);
    let (left, left_abs) = rule.integrate_with_abs(a, m, f);
    let (right, right_abs) = rule.integrate_with_abs(m, b, f);
    let refined = left + right;
    if !refined.is_finite() {
        trace.push(format!("non-finite panel [{a:.6e}, {b:.6e}]"));
        return Err(Error::Quadrature {
            message: "integrand is not finite".into(),
            trace: std::mem::take(trace),
        });
    }
    let err = (refined - whole).abs();
    // a disagreement at the rounding level of the panel's own |f| mass
    // cannot be reduced by refining further
    let noise = 256.0 * f64::EPSILON * (left_abs + right_abs);
    if err <= target.max(noise) || (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
        return Ok(refined);
    }
    if depth == 0 {
        trace.push(format!(
            "panel [{a:.6e}, {b:.6e}] still differs by {err:.3e} at maximum depth"
        ));
        return Err(Error::Quadrature {
            message: "maximum refinement depth reached".into(),
            trace: std::mem::take(trace),
        });
    }
    Ok(bisect(f, a, m, left, 0.5 * target, depth - 1, trace)?
        + bisect(f, m, b, right, 0.5 * target, depth - 1, trace)?)
}

/// `∫_a^∞ f` through `x = a + c·s/(1−s)`, where `c` sets the length scale on
/// which the integrand decays.
pub fn integrate_to_infinity(
    f: impl Fn(f64) -> f64,
    a: f64,
    c: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::invalid(format!("length scale must be positive, got {c}")));
    }
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - s;
        let v = f(a + c * s / d);
        if v == 0.0 {
            0.0
        } else {
            v * c / (d * d)
        }
    };
    integrate(g, 0.0, 1.0, spec)
}
