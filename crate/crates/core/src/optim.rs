//! Per-iteration step solvers.
//!
//! Every method consumes the same residual-weighted gradient
//! `d = sum over pixels of grad^T (T - I(W))` and turns it into a parameter
//! step: Gauss-Newton solves against the template Gram matrix, gradient
//! descent scales by a constant step size, the conjugate-gradient variants
//! blend in the previous search direction, and the Newton rule solves
//! against a normalized second-derivative matrix.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{GradField, Patch, SecondDerivField};

/// Translation parameters of the warp `W(x, y) = (x + tx, y + ty)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WarpParams {
    pub tx: f64,
    pub ty: f64,
}

impl WarpParams {
    pub fn zero() -> Self {
        WarpParams { tx: 0.0, ty: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.tx.is_finite() && self.ty.is_finite()
    }
}

/// A parameter increment (and, for CG, a search direction).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepVec {
    pub dx: f64,
    pub dy: f64,
}

impl StepVec {
    pub fn new(dx: f64, dy: f64) -> Self {
        StepVec { dx, dy }
    }

    pub fn zero() -> Self {
        StepVec { dx: 0.0, dy: 0.0 }
    }

    pub fn dot(&self, other: &StepVec) -> f64 {
        self.dx * other.dx + self.dy * other.dy
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, k: f64) -> StepVec {
        StepVec {
            dx: self.dx * k,
            dy: self.dy * k,
        }
    }
}

impl std::ops::Add for StepVec {
    type Output = StepVec;
    fn add(self, rhs: StepVec) -> StepVec {
        StepVec {
            dx: self.dx + rhs.dx,
            dy: self.dy + rhs.dy,
        }
    }
}

impl std::ops::Sub for StepVec {
    type Output = StepVec;
    fn sub(self, rhs: StepVec) -> StepVec {
        StepVec {
            dx: self.dx - rhs.dx,
            dy: self.dy - rhs.dy,
        }
    }
}

/// A 2x2 system matrix. Constructors in this module produce either exactly
/// symmetric matrices (Gram) or nonnegative-entry matrices (Newton).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hess2 {
    pub h11: f64,
    pub h12: f64,
    pub h21: f64,
    pub h22: f64,
}

impl Hess2 {
    pub fn trace(&self) -> f64 {
        self.h11 + self.h22
    }

    pub fn det(&self) -> f64 {
        self.h11 * self.h22 - self.h12 * self.h21
    }

    /// Scale-invariant singularity test: |det| <= guard * trace^2.
    pub fn is_singular(&self, guard: f64) -> bool {
        self.det().abs() <= guard * self.trace() * self.trace()
    }
}

/// Conjugate-gradient beta formula selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CgVariant {
    FletcherReeves,
    PolakRibiere,
    HestenesStiefel,
    DaiYuan,
}

impl CgVariant {
    pub const ALL: [CgVariant; 4] = [
        CgVariant::FletcherReeves,
        CgVariant::PolakRibiere,
        CgVariant::HestenesStiefel,
        CgVariant::DaiYuan,
    ];
}

/// Step-rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    GaussNewton,
    GradientDescent,
    Cg(CgVariant),
    Newton,
}

impl Method {
    /// The seven methods in benchmark row order.
    pub const ALL: [Method; 7] = [
        Method::GaussNewton,
        Method::GradientDescent,
        Method::Cg(CgVariant::FletcherReeves),
        Method::Cg(CgVariant::PolakRibiere),
        Method::Cg(CgVariant::HestenesStiefel),
        Method::Cg(CgVariant::DaiYuan),
        Method::Newton,
    ];

    /// Gauss-Newton derives its step from the system solve; all others scale
    /// by a fixed step size.
    pub fn uses_step_size(&self) -> bool {
        !matches!(self, Method::GaussNewton)
    }

    pub fn token(&self) -> &'static str {
        match self {
            Method::GaussNewton => "gauss_newton",
            Method::GradientDescent => "gd",
            Method::Cg(CgVariant::FletcherReeves) => "cg_fr",
            Method::Cg(CgVariant::PolakRibiere) => "cg_pr",
            Method::Cg(CgVariant::HestenesStiefel) => "cg_hs",
            Method::Cg(CgVariant::DaiYuan) => "cg_dy",
            Method::Newton => "newton",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.token() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method '{s}' (expected one of gauss_newton, gd, cg_fr, cg_pr, cg_hs, cg_dy, newton)"
                ))
            })
    }
}

/// Method plus its constant step size and the degeneracy guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSpec {
    pub method: Method,
    pub eta: f64,
    pub epsilon_guard: f64,
}

/// The step-size grid used by the benchmark tables.
pub const STEP_GRID: [f64; 5] = [0.005, 0.01, 0.02, 0.04, 0.08];

pub const DEFAULT_GUARD: f64 = 1e-12;

impl OptimizerSpec {
    /// Build a spec, enforcing `eta > 0` for every method that consumes it.
    pub fn new(method: Method, eta: f64) -> Result<Self> {
        if method.uses_step_size() && !(eta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "method {method} requires a step size > 0, got {eta}"
            )));
        }
        Ok(OptimizerSpec {
            method,
            eta,
            epsilon_guard: DEFAULT_GUARD,
        })
    }

    pub fn gauss_newton() -> Self {
        OptimizerSpec {
            method: Method::GaussNewton,
            eta: 0.0,
            epsilon_guard: DEFAULT_GUARD,
        }
    }
}

/// Conjugate-gradient memory carried between iterations of one alignment.
#[derive(Debug, Clone, Copy, Default)]
pub struct CgState {
    prev: Option<CgPrev>,
}

#[derive(Debug, Clone, Copy)]
struct CgPrev {
    s: StepVec,
    d: StepVec,
}

impl CgState {
    pub fn new() -> Self {
        CgState { prev: None }
    }

    pub fn is_initialized(&self) -> bool {
        self.prev.is_some()
    }

    /// Previous `(search direction, residual gradient)` pair, once one
    /// iteration has run.
    pub fn previous(&self) -> Option<(StepVec, StepVec)> {
        self.prev.map(|p| (p.s, p.d))
    }
}

/// Residual-weighted gradient `d = (sum gx*r, sum gy*r)` with
/// `r = template - warped`, the shared driving vector of every step rule.
pub fn residual_gradient(template: &Patch, warped: &Patch, grads: &GradField) -> Result<StepVec> {
    if !template.same_shape(warped)
        || grads.width != template.width
        || grads.height != template.height
    {
        return Err(Error::Dimension(format!(
            "residual gradient needs matching shapes: template {}x{}, warped {}x{}, grads {}x{}",
            template.width,
            template.height,
            warped.width,
            warped.height,
            grads.width,
            grads.height
        )));
    }
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..template.values.len() {
        let r = template.values[i] - warped.values[i];
        dx += grads.gx[i] * r;
        dy += grads.gy[i] * r;
    }
    Ok(StepVec { dx, dy })
}

/// Gram matrix of a gradient field: `H = sum grad^T grad`. Symmetric
/// positive semidefinite by construction.
pub fn gn_hessian(grads: &GradField) -> Hess2 {
    let mut h11 = 0.0;
    let mut h12 = 0.0;
    let mut h22 = 0.0;
    for (gx, gy) in grads.gx.iter().zip(&grads.gy) {
        h11 += gx * gx;
        h12 += gx * gy;
        h22 += gy * gy;
    }
    Hess2 {
        h11,
        h12,
        h21: h12,
        h22,
    }
}

/// Closed-form 2x2 solve `H dp = d`. Fails when the matrix is singular under
/// the scale-invariant guard; the tracker turns that into a zero step plus a
/// degeneracy flag.
pub fn solve_gn_step(h: &Hess2, d: &StepVec, guard: f64) -> Result<StepVec> {
    if h.is_singular(guard) {
        return Err(Error::SingularHessian {
            det: h.det(),
            trace: h.trace(),
        });
    }
    let det = h.det();
    Ok(StepVec {
        dx: (h.h22 * d.dx - h.h12 * d.dy) / det,
        dy: (h.h11 * d.dy - h.h21 * d.dx) / det,
    })
}

/// Constant-step gradient descent: `dp = eta * d`.
pub fn gd_step(d: &StepVec, eta: f64) -> StepVec {
    d.scaled(eta)
}

/// Conjugacy coefficient for the selected variant, computed from the current
/// and previous residual gradients and the previous search direction. A
/// denominator at or below `guard` restarts the direction (beta = 0).
pub fn cg_beta(
    variant: CgVariant,
    d_n: &StepVec,
    d_prev: &StepVec,
    s_prev: &StepVec,
    guard: f64,
) -> f64 {
    let diff = *d_n - *d_prev;
    let (num, den) = match variant {
        CgVariant::FletcherReeves => (d_n.dot(d_n), d_prev.dot(d_prev)),
        CgVariant::PolakRibiere => (d_n.dot(&diff), d_prev.dot(d_prev)),
        CgVariant::HestenesStiefel => (-d_n.dot(&diff), s_prev.dot(&diff)),
        CgVariant::DaiYuan => (-d_n.dot(d_n), s_prev.dot(&diff)),
    };
    if den.abs() <= guard {
        0.0
    } else {
        num / den
    }
}

/// One conjugate-gradient step: `s_n = d_n + beta * s_prev` (first iteration
/// takes `s_n = d_n`), `dp = eta * s_n`. Returns the step and the state for
/// the next iteration.
pub fn cg_step(d_n: &StepVec, state: &CgState, beta: f64, eta: f64) -> (StepVec, CgState) {
    let s_n = match state.prev {
        None => *d_n,
        Some(prev) => *d_n + prev.s.scaled(beta),
    };
    let next = CgState {
        prev: Some(CgPrev { s: s_n, d: *d_n }),
    };
    (s_n.scaled(eta), next)
}

/// Sum-of-squares second-derivative matrix, normalized by the sum of its
/// entries. Entries are nonnegative by construction; an all-zero field has
/// no defined normalization.
pub fn newton_hessian(sd: &SecondDerivField) -> Result<Hess2> {
    let sq_sum = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let h11 = sq_sum(&sd.ixx);
    let h12 = sq_sum(&sd.ixy);
    let h21 = sq_sum(&sd.iyx);
    let h22 = sq_sum(&sd.iyy);
    let total = h11 + h12 + h21 + h22;
    if total <= 0.0 {
        return Err(Error::DegenerateHessian);
    }
    Ok(Hess2 {
        h11: h11 / total,
        h12: h12 / total,
        h21: h21 / total,
        h22: h22 / total,
    })
}

/// Newton step `dp = eta * H_norm^-1 d`; a singular normalized matrix falls
/// back to the plain gradient step, reported through the returned flag.
pub fn newton_step(h_norm: &Hess2, d: &StepVec, eta: f64, guard: f64) -> (StepVec, bool) {
    match solve_gn_step(h_norm, d, guard) {
        Ok(solved) => (solved.scaled(eta), false),
        Err(_) => (d.scaled(eta), true),
    }
}
