//! Quadrature verification that `γ(x,y) = √(G/π³) / |x-y|²` is a
//! convolutional square root of `G / |x-y|`.
//!
//! Convolving γ with itself reduces to
//! `(2G/π²) (1/r) ∫₀^∞ (1/ρ) ln|(r+ρ)/(r-ρ)| dρ`, and the inner and outer
//! halves of that integral (split at ρ = r) are each π²/4.
//!
//! Each half is integrated in three pieces: a regular piece on geometrically
//! graded Gauss-Legendre panels, and a piece of half-width `δ·r` next to the
//! logarithmic singularity, evaluated on mirrored nodes `r ∓ t` with the
//! grading `t = δ r s⁴` that turns `ln t` into the smooth `s³ ln s`.
//! The inner and outer near pieces share the same `t` nodes.

use serde::Serialize;

use super::PhysicalConstants;
use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, integrate_gl};

pub const QUARTER_PI_SQ: f64 = std::f64::consts::PI * std::f64::consts::PI / 4.0;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Total quadrature nodes per half-line integral; at least 1000.
    pub nodes: usize,
    /// Half-width of the singular window, relative to r.
    pub delta: f64,
    /// Allowed disagreement between the n-node and 2n-node estimates.
    pub refinement_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 1200,
            delta: 1e-3,
            refinement_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SqrtResidual {
    pub r: f64,
    /// `∫₀^r (1/ρ) ln|(r+ρ)/(r-ρ)| dρ`
    pub inner: f64,
    /// `∫_r^∞ (1/ρ) ln|(r+ρ)/(r-ρ)| dρ`
    pub outer: f64,
    pub inner_residual: f64,
    pub outer_residual: f64,
    /// `(2G/π²)(inner + outer)/r`
    pub assembled: f64,
    pub target: f64,
    pub assembled_rel_residual: f64,
    /// Contributions of the singular windows and their analytic bounds.
    pub inner_near: f64,
    pub outer_near: f64,
    pub inner_near_bound: f64,
    pub outer_near_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SqrtCheckReport {
    pub g: f64,
    pub rows: Vec<SqrtResidual>,
}

impl SqrtCheckReport {
    /// Largest of all absolute half-integral residuals and relative
    /// assembled residuals.
    pub fn max_residual(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.inner_residual, r.outer_residual, r.assembled_rel_residual])
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:>10} {:>20} {:>12} {:>20} {:>12} {:>20} {:>12}\n",
            "r", "inner", "resid", "outer", "resid", "assembled", "rel.resid"
        );
        for row in &self.rows {
            s.push_str(&format!(
                "{:>10.4} {:>20.15} {:>12.3e} {:>20.15} {:>12.3e} {:>20.15} {:>12.3e}\n",
                row.r,
                row.inner,
                row.inner_residual,
                row.outer,
                row.outer_residual,
                row.assembled,
                row.assembled_rel_residual
            ));
        }
        s
    }
}

pub fn gamma_square_root_check(
    constants: PhysicalConstants,
    r_samples: &[f64],
    quad: QuadratureSpec,
) -> Result<SqrtCheckReport> {
    if quad.nodes < 1000 {
        return Err(Error::validation(
            "quadrature.nodes",
            format!("need at least 1000 nodes, got {}", quad.nodes),
        ));
    }
    if !(quad.delta > 0.0 && quad.delta < 0.5) {
        return Err(Error::validation(
            "quadrature.delta",
            "must lie in (0, 0.5)",
        ));
    }
    if let Some(r) = r_samples.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::validation(
            "r_samples",
            format!("all r must be positive, got {r}"),
        ));
    }
    let g = constants.g();
    let coarse = HalfLines::new(quad.nodes, quad.delta);
    let fine = HalfLines::new(2 * quad.nodes, quad.delta);
    let mut rows = Vec::with_capacity(r_samples.len());
    for &r in r_samples {
        let a = coarse.evaluate(r);
        let b = fine.evaluate(r);
        let disagreement = (a.inner - b.inner).abs().max((a.outer - b.outer).abs());
        if disagreement > quad.refinement_tol {
            return Err(Error::Numerical {
                context: "gamma_square_root_check",
                reason: format!(
                    "refinement disagreement {disagreement:e} at r = {r} exceeds {:e}",
                    quad.refinement_tol
                ),
            });
        }
        let (inner_bound, outer_bound) = near_bounds(quad.delta);
        if b.inner_near > inner_bound || b.outer_near > outer_bound {
            return Err(Error::Numerical {
                context: "gamma_square_root_check",
                reason: format!(
                    "singular-window contribution exceeds its analytic bound at r = {r}"
                ),
            });
        }
        let assembled = 2.0 * g / (std::f64::consts::PI.powi(2)) * (b.inner + b.outer) / r;
        let target = g / r;
        rows.push(SqrtResidual {
            r,
            inner: b.inner,
            outer: b.outer,
            inner_residual: (b.inner - QUARTER_PI_SQ).abs(),
            outer_residual: (b.outer - QUARTER_PI_SQ).abs(),
            assembled,
            target,
            assembled_rel_residual: ((assembled - target) / target).abs(),
            inner_near: b.inner_near,
            outer_near: b.outer_near,
            inner_near_bound: inner_bound,
            outer_near_bound: outer_bound,
        });
    }
    Ok(SqrtCheckReport { g, rows })
}

/// Upper bounds for the singular-window integrals in the scaled variable
/// `u = ρ/r`:
/// `∫_{1-δ}^1 (1/u) ln((1+u)/(1-u)) du ≤ (δ ln 2 + δ(1 - ln δ)) / (1 - δ)` and
/// `∫_1^{1+δ} (1/u) ln((u+1)/(u-1)) du ≤ δ ln(2+δ) + δ(1 - ln δ)`.
pub fn near_bounds(delta: f64) -> (f64, f64) {
    let log_part = delta * (1.0 - delta.ln());
    (
        (delta * std::f64::consts::LN_2 + log_part) / (1.0 - delta),
        delta * (2.0 + delta).ln() + log_part,
    )
}

struct Pieces {
    inner: f64,
    outer: f64,
    inner_near: f64,
    outer_near: f64,
}

struct HalfLines {
    panels: Vec<(f64, f64)>,
    panel_rule: (Vec<f64>, Vec<f64>),
    near_rule: (Vec<f64>, Vec<f64>),
    delta: f64,
}

impl HalfLines {
    fn new(nodes: usize, delta: f64) -> Self {
        // geometric panels on [0, 1-δ]: [0, ½], [½, ¾], ... toward 1-δ
        let mut panels = Vec::new();
        let mut left = 0.0;
        let mut gap = 0.5;
        while 1.0 - gap < 1.0 - delta {
            panels.push((left, 1.0 - gap));
            left = 1.0 - gap;
            gap *= 0.5;
        }
        panels.push((left, 1.0 - delta));
        let near_nodes = (nodes / 4).max(50);
        let per_panel = ((nodes - near_nodes) / panels.len()).max(20);
        HalfLines {
            panels,
            panel_rule: gauss_legendre(per_panel),
            near_rule: gauss_legendre(near_nodes),
            delta,
        }
    }

    fn evaluate(&self, r: f64) -> Pieces {
        let f = |rho: f64| integrand(r, rho);

        // inner regular piece, ρ ∈ [0, r(1-δ)]
        let inner_regular: f64 = self
            .panels
            .iter()
            .map(|&(a, b)| integrate_gl(f, r * a, r * b, &self.panel_rule))
            .sum();

        // outer regular piece: ρ = r(1+δ)/v maps [r(1+δ), ∞) onto v ∈ (0, 1];
        // the v-integrand is graded toward v = 1 with the same panels.
        let c = r * (1.0 + self.delta);
        let g_v = |v: f64| {
            let rho = c / v;
            f(rho) * c / (v * v)
        };
        let outer_regular: f64 = self
            .panels
            .iter()
            .map(|&(a, b)| {
                // panels on [0, 1-δ] rescaled to [0, 1]
                let s = 1.0 / (1.0 - self.delta);
                integrate_gl(g_v, a * s, b * s, &self.panel_rule)
            })
            .sum();

        // singular windows on mirrored nodes ρ = r ∓ t, t = δ r s⁴
        let width = self.delta * r;
        let (mut inner_near, mut outer_near) = (0.0, 0.0);
        for (x, w) in self.near_rule.0.iter().zip(&self.near_rule.1) {
            let s = 0.5 * (x + 1.0);
            let t = width * s.powi(4);
            let jac = 0.5 * w * 4.0 * width * s.powi(3);
            inner_near += jac * f(r - t);
            outer_near += jac * f(r + t);
        }

        Pieces {
            inner: inner_regular + inner_near,
            outer: outer_regular + outer_near,
            inner_near,
            outer_near,
        }
    }
}

/// `(1/ρ) ln|(r+ρ)/(r-ρ)|`, written via `ln_1p` for accuracy near ρ = 0.
fn integrand(r: f64, rho: f64) -> f64 {
    let u = rho / r;
    if u == 1.0 {
        return 0.0;
    }
    if u < 1.0 {
        (u.ln_1p() - (-u).ln_1p()) / rho
    } else {
        let v = 1.0 / u;
        (v.ln_1p() - (-v).ln_1p()) / rho
    }
}
