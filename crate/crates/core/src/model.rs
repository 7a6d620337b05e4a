//! Two-phase traffic models.
//!
//! A state is u = (rho, q) with density rho and linearized momentum q. The
//! free phase Omega_f is the curve q = Q(rho) on [0, sigma_f_plus] where all
//! vehicles travel at the speed V_f; the congested phase Omega_c is the
//! two-dimensional region {rho in [sigma_c_minus, R], 0 <= v(u) <= V_c,
//! w_minus <= q/rho <= w_plus} governed by a 2x2 system.
//!
//! Two velocity laws are supported:
//!
//! * curvature law:  v(u) = v_eq(rho) (1 + q),
//!   v_eq(rho) = (R/rho - 1)(V_f sigma/(R - sigma) + a (sigma - rho))
//! * pressure law:   v(u) = q/rho - p(rho),  p(rho) = rho^gamma
//!
//! Along a line q = w rho (a Lax curve of the first family) the flux graph is
//! L_w(rho) = f(rho, w rho); the model hypotheses require L_w' < 0 on the
//! extended congested region (capacity drop) and L_w'' of constant nonzero
//! sign per curve (genuine nonlinearity), the curvature law with a = 0 being
//! exempt on its linear curve w = 0.

use crate::error::{Error, Result};

/// Symmetric tolerance band on phase-membership inequalities.
pub const MEMBER_TOL: f64 = 1e-9;
/// Absolute tolerance on rho for all implicit-equation solves.
pub const ROOT_TOL: f64 = 1e-13;
/// States closer than this (L1 in (rho, q)) are considered equal.
pub const STATE_TOL: f64 = 1e-12;
/// Densities at or below this are treated as vacuum.
pub const VACUUM_RHO: f64 = 1e-12;

/// A point u = (rho, q) in the (density, linearized momentum) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub rho: f64,
    pub q: f64,
}

impl State {
    pub const VACUUM: State = State { rho: 0.0, q: 0.0 };

    pub fn new(rho: f64, q: f64) -> Self {
        State { rho, q }
    }

    /// L1 distance in the conserved variables.
    pub fn dist(&self, other: &State) -> f64 {
        (self.rho - other.rho).abs() + (self.q - other.q).abs()
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho <= VACUUM_RHO && self.q.abs() <= MEMBER_TOL
    }
}

/// Which velocity law the model uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Curvature law with parameters a and sigma (the density where
    /// v_eq = V_f).
    PTa { a: f64, sigma: f64 },
    /// Pressure law p(rho) = rho^gamma.
    PTp { gamma: f64 },
}

/// Phase classification of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseClass {
    /// rho = 0 (by convention the state (0, 0), carrying v = V_f).
    Vacuum,
    /// Free curve with rho < sigma_f_minus.
    FreeMinus,
    /// Free curve with rho in [sigma_f_minus, sigma_f_plus], phases disjoint.
    FreePlus,
    /// In Omega_c but not on the free curve.
    CongestedOnly,
    /// In Omega_f and Omega_c (only when V_c = V_f).
    CongestedAndFree,
    /// Not in Omega_f, Omega_c, or the extended congested region.
    OutOfDomain,
}

impl PhaseClass {
    pub fn is_free(self) -> bool {
        matches!(
            self,
            PhaseClass::Vacuum
                | PhaseClass::FreeMinus
                | PhaseClass::FreePlus
                | PhaseClass::CongestedAndFree
        )
    }

    pub fn is_free_minus(self) -> bool {
        matches!(self, PhaseClass::Vacuum | PhaseClass::FreeMinus)
    }

    pub fn is_free_plus(self) -> bool {
        matches!(self, PhaseClass::FreePlus | PhaseClass::CongestedAndFree)
    }

    pub fn is_congested(self) -> bool {
        matches!(self, PhaseClass::CongestedOnly | PhaseClass::CongestedAndFree)
    }

    /// Omega_c minus the free overlap (Omega_c^-).
    pub fn is_congested_minus(self) -> bool {
        matches!(self, PhaseClass::CongestedOnly)
    }

    pub fn in_domain(self) -> bool {
        !matches!(self, PhaseClass::OutOfDomain)
    }
}

/// Velocity level selector for the first-family intersection map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Free,
    Cong,
}

/// Marker selector for the second-family intersection map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Convexity of a first-family Lax curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Concave,
    Convex,
    Linear,
}

/// One validation check with its outcome.
#[derive(Debug, Clone)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of the hypothesis checks run at construction.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(ValidationCheck { name, passed, detail });
    }

    pub fn failures(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<18} {}  {}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Validated model constants. Immutable after construction; all operations
/// are pure functions of (&ModelParams, inputs).
#[derive(Debug, Clone)]
pub struct ModelParams {
    variant: Variant,
    v_free: f64,
    v_cong: f64,
    r_max: f64,
    w_minus: f64,
    w_plus: f64,
    sigma_f_minus: f64,
    sigma_f_plus: f64,
    sigma_c_minus: f64,
    sigma_c_plus: f64,
}

/// Bisection on a strictly monotone function; returns rho with |bracket|
/// narrowed to ROOT_TOL. `f` need not be signed consistently: the bracket
/// endpoints decide orientation.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::SolveFailure(format!(
            "{what}: no sign change on [{lo}, {hi}] (f: {flo} .. {fhi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOL {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl ModelParams {
    /// Build and validate a model. `w_minus`/`w_plus` are the marker bounds
    /// (q_pm / R); the four sigma densities are derived by solving
    /// v(s, s w_pm) = V_f and = V_c.
    pub fn new(
        variant: Variant,
        v_free: f64,
        v_cong: f64,
        r_max: f64,
        w_minus: f64,
        w_plus: f64,
    ) -> Result<Self> {
        let mut p = ModelParams {
            variant,
            v_free,
            v_cong,
            r_max,
            w_minus,
            w_plus,
            sigma_f_minus: f64::NAN,
            sigma_f_plus: f64::NAN,
            sigma_c_minus: f64::NAN,
            sigma_c_plus: f64::NAN,
        };
        p.basic_ranges().map_err(|e| Error::InvalidParams(e))?;
        p.derive_sigmas()?;
        let report = p.validate();
        if !report.passed() {
            return Err(Error::InvalidParams(report.failures()));
        }
        Ok(p)
    }

    fn basic_ranges(&self) -> std::result::Result<(), String> {
        if !(self.v_free > 0.0) {
            return Err(format!("V_f = {} must be > 0", self.v_free));
        }
        if !(self.v_cong > 0.0 && self.v_cong <= self.v_free) {
            return Err(format!("V_c = {} must be in (0, V_f]", self.v_cong));
        }
        if !(self.r_max > 0.0) {
            return Err(format!("R = {} must be > 0", self.r_max));
        }
        if !(self.w_minus < self.w_plus) {
            return Err(format!(
                "w_minus = {} must be < w_plus = {}",
                self.w_minus, self.w_plus
            ));
        }
        match self.variant {
            Variant::PTa { sigma, .. } => {
                if !(sigma > 0.0 && sigma < self.r_max) {
                    return Err(format!("sigma = {sigma} must be in (0, R)"));
                }
            }
            Variant::PTp { gamma } => {
                if !(gamma > 0.0) {
                    return Err(format!("gamma = {gamma} must be > 0"));
                }
                if !(self.w_minus > self.v_free) {
                    return Err(format!(
                        "pressure law needs w_minus = {} > V_f = {}",
                        self.w_minus, self.v_free
                    ));
                }
            }
        }
        Ok(())
    }

    fn derive_sigmas(&mut self) -> Result<()> {
        self.sigma_f_minus = self.rho_at_velocity_on_curve(self.w_minus, self.v_free)?;
        self.sigma_f_plus = self.rho_at_velocity_on_curve(self.w_plus, self.v_free)?;
        self.sigma_c_minus = self.rho_at_velocity_on_curve(self.w_minus, self.v_cong)?;
        self.sigma_c_plus = self.rho_at_velocity_on_curve(self.w_plus, self.v_cong)?;
        Ok(())
    }

    // --- accessors ---------------------------------------------------------

    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn v_free(&self) -> f64 {
        self.v_free
    }
    pub fn v_cong(&self) -> f64 {
        self.v_cong
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn w_minus(&self) -> f64 {
        self.w_minus
    }
    pub fn w_plus(&self) -> f64 {
        self.w_plus
    }
    pub fn sigma_f_minus(&self) -> f64 {
        self.sigma_f_minus
    }
    pub fn sigma_f_plus(&self) -> f64 {
        self.sigma_f_plus
    }
    pub fn sigma_c_minus(&self) -> f64 {
        self.sigma_c_minus
    }
    pub fn sigma_c_plus(&self) -> f64 {
        self.sigma_c_plus
    }

    /// True when the phases intersect (V_c = V_f).
    pub fn is_intersecting(&self) -> bool {
        self.v_cong == self.v_free
    }

    /// The point of Omega_c with minimal density, u_-^c.
    pub fn u_cong_min(&self) -> State {
        State::new(self.sigma_c_minus, self.w_minus * self.sigma_c_minus)
    }

    /// Largest admissible constraint level, V_f * sigma_f_plus.
    pub fn max_constraint(&self) -> f64 {
        self.v_free * self.sigma_f_plus
    }

    /// The same model with the congested cap raised to V_f. Used to run the
    /// intersecting-phase solver on a disjoint-phase model; the hypothesis
    /// region is unchanged, so no re-validation is needed.
    pub fn as_intersecting(&self) -> ModelParams {
        let mut p = self.clone();
        p.v_cong = p.v_free;
        p.sigma_c_minus = p.sigma_f_minus;
        p.sigma_c_plus = p.sigma_f_plus;
        p
    }

    // --- velocity / flux / marker ------------------------------------------

    fn v_eq(&self, rho: f64) -> f64 {
        match self.variant {
            Variant::PTa { a, sigma } => {
                (self.r_max / rho - 1.0)
                    * (self.v_free * sigma / (self.r_max - sigma) + a * (sigma - rho))
            }
            Variant::PTp { .. } => unreachable!("v_eq is a curvature-law quantity"),
        }
    }

    fn pressure(&self, rho: f64) -> f64 {
        match self.variant {
            Variant::PTp { gamma } => rho.powf(gamma),
            Variant::PTa { .. } => unreachable!("pressure is a pressure-law quantity"),
        }
    }

    /// Velocity formula without domain checks; vacuum carries V_f.
    pub(crate) fn velocity_raw(&self, u: State) -> f64 {
        if u.rho <= VACUUM_RHO {
            return self.v_free;
        }
        match self.variant {
            Variant::PTa { .. } => self.v_eq(u.rho) * (1.0 + u.q),
            Variant::PTp { .. } => u.q / u.rho - self.pressure(u.rho),
        }
    }

    /// Flux formula without domain checks; zero at vacuum.
    pub(crate) fn flux_raw(&self, u: State) -> f64 {
        if u.rho <= VACUUM_RHO {
            return 0.0;
        }
        u.rho * self.velocity_raw(u)
    }

    /// Average speed v(u). Errors on out-of-domain states; (0, 0) carries
    /// v = V_f by the vacuum convention, other rho = 0 states are rejected.
    pub fn velocity(&self, u: State) -> Result<f64> {
        if u.rho <= VACUUM_RHO {
            if u.q.abs() <= MEMBER_TOL {
                return Ok(self.v_free);
            }
            return match self.variant {
                Variant::PTp { .. } => Err(Error::UndefinedVelocity),
                Variant::PTa { .. } => Err(Error::OutOfDomain {
                    rho: u.rho,
                    q: u.q,
                    context: "velocity at rho = 0 with q != 0",
                }),
            };
        }
        if self.classify(u).in_domain() || self.in_extended_congested(u) {
            Ok(self.velocity_raw(u))
        } else {
            Err(Error::OutOfDomain { rho: u.rho, q: u.q, context: "velocity" })
        }
    }

    /// Flux f(u) = rho v(u).
    pub fn flux(&self, u: State) -> Result<f64> {
        if u.rho <= VACUUM_RHO && u.q.abs() <= MEMBER_TOL {
            return Ok(0.0);
        }
        Ok(u.rho * self.velocity(u)?)
    }

    /// Lagrangian marker without domain checks: q/rho on the congested side,
    /// affine extension w_minus + V_f (rho/sigma_f_minus - 1) below
    /// sigma_f_minus. The two branches agree at rho = sigma_f_minus.
    pub(crate) fn marker_raw(&self, u: State) -> f64 {
        if u.rho < self.sigma_f_minus {
            self.w_minus + self.v_free * (u.rho / self.sigma_f_minus - 1.0)
        } else {
            u.q / u.rho
        }
    }

    /// Lagrangian marker w(u); defined on Omega_c^ex and the lower free
    /// branch.
    pub fn marker(&self, u: State) -> Result<f64> {
        let class = self.classify(u);
        if class.is_free_minus() || self.in_extended_congested(u) || class.in_domain() {
            Ok(self.marker_raw(u))
        } else {
            Err(Error::OutOfDomain { rho: u.rho, q: u.q, context: "marker" })
        }
    }

    /// Free-curve momentum Q(rho) without the domain cap.
    pub(crate) fn q_free_raw(&self, rho: f64) -> f64 {
        match self.variant {
            Variant::PTa { a, sigma } => {
                let r = self.r_max;
                (rho - sigma) * (self.v_free * r + a * (r - rho) * (r - sigma))
                    / ((r - rho) * (self.v_free * sigma + a * (sigma - rho) * (r - sigma)))
            }
            Variant::PTp { .. } => rho * (self.v_free + self.pressure(rho)),
        }
    }

    /// Free-curve momentum q = Q(rho), rho in [0, sigma_f_plus].
    pub fn q_free(&self, rho: f64) -> Result<f64> {
        if rho < -MEMBER_TOL || rho > self.sigma_f_plus + MEMBER_TOL {
            return Err(Error::OutOfDomain {
                rho,
                q: f64::NAN,
                context: "Q is defined on [0, sigma_f_plus]",
            });
        }
        Ok(self.q_free_raw(rho.clamp(0.0, self.sigma_f_plus)))
    }

    /// The free state of density rho; (0, 0) at vacuum.
    pub fn free_state(&self, rho: f64) -> Result<State> {
        if rho <= VACUUM_RHO {
            return Ok(State::VACUUM);
        }
        Ok(State::new(rho, self.q_free(rho)?))
    }

    // --- Lax curves of the first family -------------------------------------

    /// Cubic coefficients of L_w for the curvature law.
    fn lax_cubic(&self, w: f64) -> [f64; 4] {
        match self.variant {
            Variant::PTa { a, sigma } => {
                let r = self.r_max;
                let c = self.v_free * sigma / (r - sigma);
                // rho * v_eq(rho) = (R - rho)(c + a sigma - a rho)
                let a0 = r * (c + a * sigma);
                let a1 = -(a * r + c + a * sigma);
                let a2 = a;
                [a0, a1 + w * a0, a2 + w * a1, w * a2]
            }
            Variant::PTp { .. } => unreachable!(),
        }
    }

    /// L_w(rho) = f(rho, w rho), the flux along the marker-w line.
    pub(crate) fn lax_value_raw(&self, w: f64, rho: f64) -> f64 {
        match self.variant {
            Variant::PTa { .. } => {
                let c = self.lax_cubic(w);
                ((c[3] * rho + c[2]) * rho + c[1]) * rho + c[0]
            }
            Variant::PTp { .. } => rho * (w - self.pressure(rho)),
        }
    }

    pub(crate) fn lax_d1_raw(&self, w: f64, rho: f64) -> f64 {
        match self.variant {
            Variant::PTa { .. } => {
                let c = self.lax_cubic(w);
                (3.0 * c[3] * rho + 2.0 * c[2]) * rho + c[1]
            }
            Variant::PTp { gamma } => w - (gamma + 1.0) * rho.powf(gamma),
        }
    }

    pub(crate) fn lax_d2_raw(&self, w: f64, rho: f64) -> f64 {
        match self.variant {
            Variant::PTa { .. } => {
                let c = self.lax_cubic(w);
                6.0 * c[3] * rho + 2.0 * c[2]
            }
            Variant::PTp { gamma } => -gamma * (gamma + 1.0) * rho.powf(gamma - 1.0),
        }
    }

    fn check_w(&self, w: f64) -> Result<()> {
        let tol = MEMBER_TOL * (1.0 + self.w_plus.abs().max(self.w_minus.abs()));
        if w < self.w_minus - tol || w > self.w_plus + tol {
            return Err(Error::MarkerRange(w));
        }
        Ok(())
    }

    /// Flux along the first Lax curve of marker w.
    pub fn lax1_value(&self, w: f64, rho: f64) -> Result<f64> {
        self.check_w(w)?;
        Ok(self.lax_value_raw(w, rho))
    }

    /// Slope L_w'(rho) (equal to lambda_1 on the curve).
    pub fn lax1_d1(&self, w: f64, rho: f64) -> Result<f64> {
        self.check_w(w)?;
        Ok(self.lax_d1_raw(w, rho))
    }

    /// Curvature L_w''(rho).
    pub fn lax1_d2(&self, w: f64, rho: f64) -> Result<f64> {
        self.check_w(w)?;
        Ok(self.lax_d2_raw(w, rho))
    }

    /// Sign of L_w'' along the curve of marker w (constant under the model
    /// hypotheses; evaluated at mid-curve).
    pub fn curve_convexity(&self, w: f64) -> Convexity {
        let rho = 0.5 * (self.rho1_f_raw(w) + self.rho1_0_raw(w));
        let d2 = self.lax_d2_raw(w, rho);
        let scale = self.v_free / self.r_max;
        if d2.abs() <= 1e-12 * scale {
            Convexity::Linear
        } else if d2 > 0.0 {
            Convexity::Convex
        } else {
            Convexity::Concave
        }
    }

    // --- eigenvalues --------------------------------------------------------

    /// First characteristic speed, computed as L_{w(u)}'(rho) (the same code
    /// path as lax1_d1).
    pub fn lambda1(&self, u: State) -> Result<f64> {
        if !self.in_extended_congested(u) {
            return Err(Error::OutOfDomain { rho: u.rho, q: u.q, context: "lambda1" });
        }
        Ok(self.lax_d1_raw(u.q / u.rho, u.rho))
    }

    /// Second characteristic speed, lambda_2(u) = v(u).
    pub fn lambda2(&self, u: State) -> Result<f64> {
        if !self.in_extended_congested(u) {
            return Err(Error::OutOfDomain { rho: u.rho, q: u.q, context: "lambda2" });
        }
        Ok(self.velocity_raw(u))
    }

    // --- geometric helper maps ----------------------------------------------

    pub(crate) fn rho1_0_raw(&self, w: f64) -> f64 {
        match self.variant {
            Variant::PTa { .. } => self.r_max,
            Variant::PTp { gamma } => w.powf(1.0 / gamma),
        }
    }

    /// Density where the marker-w curve reaches v = 0.
    pub fn rho1_0(&self, w: f64) -> Result<f64> {
        self.check_w(w)?;
        Ok(self.rho1_0_raw(w))
    }

    fn rho1_f_raw(&self, w: f64) -> f64 {
        self.rho_at_velocity_on_curve(w, self.v_free)
            .expect("validated models bracket v = V_f on every curve")
    }

    /// Density where the marker-w curve reaches v = V_f.
    pub fn rho1_f(&self, w: f64) -> Result<f64> {
        self.check_w(w)?;
        self.rho_at_velocity_on_curve(w, self.v_free)
    }

    /// Density where the marker-w curve reaches v = V_c.
    pub fn rho1_c(&self, w: f64) -> Result<f64> {
        self.check_w(w)?;
        self.rho_at_velocity_on_curve(w, self.v_cong)
    }

    /// Density of the second-family intersection psi_2^pm at speed v.
    pub fn rho2(&self, side: Side, v: f64) -> Result<f64> {
        let w = match side {
            Side::Minus => self.w_minus,
            Side::Plus => self.w_plus,
        };
        self.rho_at_velocity_on_curve(w, v)
    }

    /// Velocity along the marker-w line, evaluated through the Lax-curve
    /// value (no vacuum convention; diverges as rho -> 0 for the curvature
    /// law).
    pub(crate) fn v_on_curve_raw(&self, w: f64, rho: f64) -> f64 {
        self.lax_value_raw(w, rho) / rho
    }

    /// Solve v(rho, w rho) = v_target on the marker-w line. Velocity is
    /// strictly decreasing in rho there (validated), so bisection applies;
    /// the pressure law inverts in closed form.
    pub(crate) fn rho_at_velocity_on_curve(&self, w: f64, v_target: f64) -> Result<f64> {
        if v_target < 0.0 {
            return Err(Error::SolveFailure(format!("negative target speed {v_target}")));
        }
        match self.variant {
            Variant::PTp { gamma } => {
                // w - p(rho) = v  =>  rho = p^{-1}(w - v)
                if w - v_target <= 0.0 {
                    return Err(Error::SolveFailure(format!(
                        "curve w = {w} never reaches v = {v_target}"
                    )));
                }
                Ok((w - v_target).powf(1.0 / gamma))
            }
            Variant::PTa { .. } => {
                let hi = self.r_max;
                if v_target == 0.0 {
                    return Ok(hi);
                }
                let lo = 1e-12 * self.r_max;
                let g = |rho: f64| self.v_on_curve_raw(w, rho) - v_target;
                bisect(lo, hi, g, "rho_at_velocity_on_curve")
            }
        }
    }

    /// Solve L_w(rho) = flux on [rho_lo, rho_hi] (L strictly decreasing
    /// there).
    pub(crate) fn rho_at_flux_on_curve(
        &self,
        w: f64,
        flux: f64,
        rho_lo: f64,
        rho_hi: f64,
    ) -> Result<f64> {
        let g = |rho: f64| self.lax_value_raw(w, rho) - flux;
        bisect(rho_lo, rho_hi, g, "rho_at_flux_on_curve")
    }

    /// The state of marker w and density rho (the point (rho, w rho)).
    pub fn state_on_curve(&self, w: f64, rho: f64) -> State {
        State::new(rho, w * rho)
    }

    /// The state of density rho on the second-family curve of speed v.
    pub(crate) fn state_with_velocity(&self, rho: f64, v: f64) -> State {
        let q = match self.variant {
            Variant::PTa { .. } => v / self.v_eq(rho) - 1.0,
            Variant::PTp { .. } => rho * (v + self.pressure(rho)),
        };
        State::new(rho, q)
    }

    /// First-family intersection: w(u') = w(u), v(u') = V_f or V_c.
    pub fn psi1(&self, u: State, level: Level) -> Result<State> {
        let w = self.marker(u)?;
        let v = match level {
            Level::Free => self.v_free,
            Level::Cong => self.v_cong,
        };
        let rho = self.rho_at_velocity_on_curve(w, v)?;
        Ok(self.state_on_curve(w, rho))
    }

    /// Second-family intersection: w(u') = w_pm, v(u') = v(u).
    pub fn psi2(&self, u: State, side: Side) -> Result<State> {
        let v = if u.is_vacuum() { self.v_free } else { self.velocity(u)? };
        let w = match side {
            Side::Minus => self.w_minus,
            Side::Plus => self.w_plus,
        };
        let rho = self.rho_at_velocity_on_curve(w, v)?;
        Ok(self.state_on_curve(w, rho))
    }

    /// Intersection of the first Lax curve through u_minus with the second
    /// Lax curve through u_plus: w(u) = w(u_minus), v(u) = v(u_plus). When
    /// u_plus already sits on the u_minus curve the intersection is u_plus
    /// itself and is returned exactly.
    pub fn u_star(&self, u_minus: State, u_plus: State) -> Result<State> {
        let w = self.marker(u_minus)?;
        if !u_plus.is_vacuum() {
            let w_plus_state = self.marker(u_plus)?;
            let scale = 1.0 + self.w_plus.abs().max(self.w_minus.abs());
            if (w - w_plus_state).abs() <= 1e-12 * scale && u_plus.rho >= self.sigma_f_minus {
                return Ok(u_plus);
            }
        }
        let v = if u_plus.is_vacuum() { self.v_free } else { self.velocity(u_plus)? };
        let rho = self.rho_at_velocity_on_curve(w, v)?;
        Ok(self.state_on_curve(w, rho))
    }

    /// Rankine-Hugoniot speed of the jump between two states.
    pub fn rh_speed(&self, u_minus: State, u_plus: State) -> Result<f64> {
        if (u_plus.rho - u_minus.rho).abs() <= VACUUM_RHO {
            return Err(Error::DegenerateJump);
        }
        Ok((self.flux_raw(u_plus) - self.flux_raw(u_minus)) / (u_plus.rho - u_minus.rho))
    }

    // --- classification ------------------------------------------------------

    /// Extended congested region Omega_c^ex: rho in (0, R], v in [0, V_f],
    /// w in [w_minus, w_plus].
    pub fn in_extended_congested(&self, u: State) -> bool {
        if u.rho <= VACUUM_RHO || u.rho > self.r_max + MEMBER_TOL {
            return false;
        }
        let w = u.q / u.rho;
        let wtol = MEMBER_TOL * (1.0 + self.w_plus.abs().max(self.w_minus.abs()));
        if w < self.w_minus - wtol || w > self.w_plus + wtol {
            return false;
        }
        let v = self.velocity_raw(u);
        let vtol = MEMBER_TOL * (1.0 + self.v_free);
        v >= -vtol && v <= self.v_free + vtol
    }

    fn on_free_curve(&self, u: State) -> bool {
        if u.rho < -MEMBER_TOL || u.rho > self.sigma_f_plus + MEMBER_TOL {
            return false;
        }
        let rho = u.rho.clamp(VACUUM_RHO, self.sigma_f_plus);
        let q = self.q_free_raw(rho);
        (u.q - q).abs() <= MEMBER_TOL * (1.0 + q.abs())
    }

    fn in_congested(&self, u: State) -> bool {
        if u.rho < self.sigma_c_minus - MEMBER_TOL || u.rho > self.r_max + MEMBER_TOL {
            return false;
        }
        let w = u.q / u.rho;
        let wtol = MEMBER_TOL * (1.0 + self.w_plus.abs().max(self.w_minus.abs()));
        if w < self.w_minus - wtol || w > self.w_plus + wtol {
            return false;
        }
        let v = self.velocity_raw(u);
        let vtol = MEMBER_TOL * (1.0 + self.v_free);
        v >= -vtol && v <= self.v_cong + vtol
    }

    /// Total phase classification with a tolerance band of MEMBER_TOL on the
    /// defining inequalities.
    pub fn classify(&self, u: State) -> PhaseClass {
        if u.rho <= VACUUM_RHO {
            if u.q.abs() <= MEMBER_TOL {
                return PhaseClass::Vacuum;
            }
            return if self.on_free_curve(u) { PhaseClass::FreeMinus } else { PhaseClass::OutOfDomain };
        }
        let free = self.on_free_curve(u);
        let congested = self.in_congested(u);
        match (free, congested) {
            (true, true) => PhaseClass::CongestedAndFree,
            (true, false) => {
                if u.rho < self.sigma_f_minus - MEMBER_TOL {
                    PhaseClass::FreeMinus
                } else if self.is_intersecting() {
                    // boundary band: snap to the overlap
                    PhaseClass::CongestedAndFree
                } else {
                    PhaseClass::FreePlus
                }
            }
            (false, true) => PhaseClass::CongestedOnly,
            (false, false) => PhaseClass::OutOfDomain,
        }
    }

    // --- validation ----------------------------------------------------------

    /// Re-run all hypothesis checks. Grid-sampled (default 512 x 512 over
    /// Omega_c^ex) rather than symbolic.
    pub fn validate(&self) -> ValidationReport {
        self.validate_with_grid(512)
    }

    pub fn validate_with_grid(&self, n: usize) -> ValidationReport {
        let mut rep = ValidationReport { checks: Vec::new() };

        match self.basic_ranges() {
            Ok(()) => rep.push("parameter-ranges", true, String::new()),
            Err(e) => {
                rep.push("parameter-ranges", false, e);
                return rep;
            }
        }

        // sigma ordering and defining velocities
        let sf = (self.sigma_f_minus, self.sigma_f_plus);
        let sc = (self.sigma_c_minus, self.sigma_c_plus);
        let ordered = 0.0 < sf.0
            && sf.0 < sf.1
            && sf.1 < self.r_max
            && 0.0 < sc.0
            && sc.0 < sc.1
            && sc.1 < self.r_max
            && sf.0 <= sc.0 + ROOT_TOL
            && sf.1 <= sc.1 + ROOT_TOL;
        let equal_iff = if self.is_intersecting() {
            (sf.0 - sc.0).abs() <= 1e-10 && (sf.1 - sc.1).abs() <= 1e-10
        } else {
            sf.0 < sc.0 && sf.1 < sc.1
        };
        rep.push(
            "sigma-ordering",
            ordered && equal_iff,
            format!("sigma_f = ({:.6}, {:.6}), sigma_c = ({:.6}, {:.6})", sf.0, sf.1, sc.0, sc.1),
        );

        let mut vdefect: f64 = 0.0;
        for (s, w, v) in [
            (sf.0, self.w_minus, self.v_free),
            (sf.1, self.w_plus, self.v_free),
            (sc.0, self.w_minus, self.v_cong),
            (sc.1, self.w_plus, self.v_cong),
        ] {
            let got = self.velocity_raw(self.state_on_curve(w, s));
            vdefect = vdefect.max(((got - v) / v).abs());
        }
        rep.push("sigma-velocity", vdefect <= 1e-12, format!("max rel defect {vdefect:.3e}"));

        // rho_1^0(w_plus) = R for both laws
        let r0 = self.rho1_0_raw(self.w_plus);
        rep.push(
            "rho1_0-at-w_plus",
            ((r0 - self.r_max) / self.r_max).abs() <= 1e-9,
            format!("rho_1^0(w_plus) = {r0}, R = {}", self.r_max),
        );

        // (P) for the pressure law
        if let Variant::PTp { gamma } = self.variant {
            let mut ok = true;
            let mut detail = String::new();
            for i in 1..=n {
                let rho = self.r_max * i as f64 / n as f64;
                let p1 = gamma * rho.powf(gamma - 1.0);
                let p2 = gamma * (gamma - 1.0) * rho.powf(gamma - 2.0);
                if !(p1 > 0.0) || !(2.0 * p1 + rho * p2 > 0.0) {
                    ok = false;
                    detail = format!("violated at rho = {rho}");
                    break;
                }
            }
            rep.push("pressure-P", ok, detail);
        }

        // H1, H2, monotonicity of v along curves, sampled on an n x n grid
        let mut h1_max = f64::NEG_INFINITY;
        let mut h1_at = (0.0, 0.0);
        let mut h2_ok = true;
        let mut h2_detail = String::new();
        let mut mono_ok = true;
        let mut mono_detail = String::new();
        for i in 0..n {
            let w = self.w_minus + (self.w_plus - self.w_minus) * i as f64 / (n - 1) as f64;
            if let Variant::PTa { a, .. } = self.variant {
                if a == 0.0 && w.abs() < 1e-14 {
                    continue; // linear curve, exempt from H2 and flat in lambda1
                }
            }
            let rho_f = match self.rho_at_velocity_on_curve(w, self.v_free) {
                Ok(r) => r,
                Err(e) => {
                    rep.push("curve-bracket", false, format!("w = {w}: {e}"));
                    return rep;
                }
            };
            let rho_0 = self.rho1_0_raw(w);
            let mut sign = 0.0;
            let mut prev_v = f64::INFINITY;
            for j in 0..n {
                let rho = rho_f + (rho_0 - rho_f) * j as f64 / (n - 1) as f64;
                let l1 = self.lax_d1_raw(w, rho);
                if l1 >= h1_max {
                    h1_max = l1;
                    h1_at = (w, rho);
                }
                let d2 = self.lax_d2_raw(w, rho);
                if j == 0 {
                    sign = d2.signum();
                }
                if h2_ok && (d2 == 0.0 || d2.signum() != sign) {
                    h2_ok = false;
                    h2_detail = format!("L'' sign changes on curve w = {w} at rho = {rho}");
                }
                let v = self.v_on_curve_raw(w, rho);
                if mono_ok && v >= prev_v {
                    mono_ok = false;
                    mono_detail = format!("v not decreasing on curve w = {w} at rho = {rho}");
                }
                prev_v = v;
            }
            // extend the monotonicity sweep below the free intersection
            let mut prev = f64::INFINITY;
            for j in 0..64 {
                let rho = rho_f * (j + 1) as f64 / 64.0;
                let v = self.v_on_curve_raw(w, rho);
                if mono_ok && v >= prev {
                    mono_ok = false;
                    mono_detail = format!("v not decreasing on curve w = {w} at rho = {rho}");
                }
                prev = v;
            }
        }
        rep.push(
            "H1",
            h1_max < 0.0,
            format!("max lambda1 = {h1_max:.6e} at (w, rho) = ({:.6}, {:.6})", h1_at.0, h1_at.1),
        );
        rep.push("H2", h2_ok, h2_detail);
        rep.push("curve-monotonicity", mono_ok, mono_detail);

        rep
    }
}
