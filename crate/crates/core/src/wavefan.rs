//! Self-similar Riemann solutions as ordered wave sequences.
//!
//! A `WaveFan` is a list of waves with nondecreasing speeds chaining the left
//! datum to the right datum. Rarefactions are stored exactly (endpoint states
//! plus the shared marker); discretization happens only in the front-tracking
//! simulator.

use crate::error::Result;
use crate::model::{ModelParams, State, STATE_TOL};

/// Rankine-Hugoniot residual tolerance for stored waves.
pub const RH_TOL: f64 = 1e-10;
/// Tolerance on state chaining and wave-local identities.
pub const CHAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveKind {
    /// Linearly degenerate jump (free contact, 2-contact, or the 1-contact of
    /// a linear Lax curve).
    Contact { speed: f64 },
    /// Admissible shock of the first family.
    Shock1 { speed: f64 },
    /// First-family rarefaction on the Lax curve of marker `w`.
    Rarefaction1 { speed_lo: f64, speed_hi: f64, w: f64 },
    /// Jump connecting states of different phases.
    PhaseTransition { speed: f64 },
    /// The undercompressive zero-speed jump at a flux constraint.
    StationaryJump,
}

impl WaveKind {
    pub fn speed_range(&self) -> (f64, f64) {
        match *self {
            WaveKind::Contact { speed }
            | WaveKind::Shock1 { speed }
            | WaveKind::PhaseTransition { speed } => (speed, speed),
            WaveKind::Rarefaction1 { speed_lo, speed_hi, .. } => (speed_lo, speed_hi),
            WaveKind::StationaryJump => (0.0, 0.0),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            WaveKind::Contact { .. } => "contact",
            WaveKind::Shock1 { .. } => "shock1",
            WaveKind::Rarefaction1 { .. } => "rarefaction1",
            WaveKind::PhaseTransition { .. } => "phase_transition",
            WaveKind::StationaryJump => "stationary_jump",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub kind: WaveKind,
    pub left: State,
    pub right: State,
}

impl Wave {
    pub fn speed_range(&self) -> (f64, f64) {
        self.kind.speed_range()
    }
}

/// Side selector for evaluating a fan exactly at a wave speed (the traces
/// u(t, 0^-) and u(t, 0^+) of the constrained problems).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bias {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFan {
    pub waves: Vec<Wave>,
    pub left_state: State,
    pub right_state: State,
}

impl WaveFan {
    pub fn constant(u: State) -> Self {
        WaveFan { waves: Vec::new(), left_state: u, right_state: u }
    }

    pub fn from_waves(left: State, waves: Vec<Wave>) -> Self {
        let right = waves.last().map_or(left, |w| w.right);
        WaveFan { waves, left_state: left, right_state: right }
    }

    pub fn min_speed(&self) -> Option<f64> {
        self.waves.first().map(|w| w.speed_range().0)
    }

    pub fn max_speed(&self) -> Option<f64> {
        self.waves.last().map(|w| w.speed_range().1)
    }

    /// All speeds at which the profile can change.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.waves.len());
        for w in &self.waves {
            let (lo, hi) = w.speed_range();
            out.push(lo);
            if hi > lo {
                out.push(hi);
            }
        }
        out
    }

    /// State inside a rarefaction where the first characteristic speed equals
    /// xi. Monotone in rho by genuine nonlinearity, so plain bisection.
    fn rarefaction_state(p: &ModelParams, wave: &Wave, w: f64, xi: f64) -> State {
        let (mut lo, mut hi) = (wave.left.rho, wave.right.rho);
        let flo = p.lax_d1_raw(w, lo) - xi;
        let fhi = p.lax_d1_raw(w, hi) - xi;
        if flo.abs() <= f64::EPSILON {
            return wave.left;
        }
        if fhi.abs() <= f64::EPSILON {
            return wave.right;
        }
        if flo.signum() == fhi.signum() {
            // xi grazes an endpoint within roundoff
            return if flo.abs() < fhi.abs() { wave.left } else { wave.right };
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo).abs() <= 1e-14 {
                break;
            }
            let fm = p.lax_d1_raw(w, mid) - xi;
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        p.state_on_curve(w, 0.5 * (lo + hi))
    }

    /// Evaluate the self-similar solution at xi = x/t. `bias` resolves the
    /// value when xi sits exactly on a jump.
    pub fn eval(&self, p: &ModelParams, xi: f64, bias: Bias) -> State {
        let mut current = self.left_state;
        for wave in &self.waves {
            let (lo, hi) = wave.speed_range();
            let before = match bias {
                Bias::Left => xi <= lo,
                Bias::Right => xi < lo,
            };
            if before {
                return current;
            }
            let after = match bias {
                Bias::Left => xi > hi,
                Bias::Right => xi >= hi,
            };
            if !after {
                if let WaveKind::Rarefaction1 { w, .. } = wave.kind {
                    return Self::rarefaction_state(p, wave, w, xi);
                }
                return match bias {
                    Bias::Left => wave.left,
                    Bias::Right => wave.right,
                };
            }
            current = wave.right;
        }
        current
    }

    /// Trace u(t, 0^-).
    pub fn trace_minus(&self, p: &ModelParams) -> State {
        self.eval(p, 0.0, Bias::Left)
    }

    /// Trace u(t, 0^+).
    pub fn trace_plus(&self, p: &ModelParams) -> State {
        self.eval(p, 0.0, Bias::Right)
    }

    /// Total variation of v(u) or w(u) over xi. A rarefaction contributes its
    /// monotone v-swing and nothing in w.
    pub fn tv_of(&self, p: &ModelParams, coord: RInvariant) -> f64 {
        self.waves
            .iter()
            .map(|wave| match coord {
                RInvariant::Velocity => {
                    (p.velocity_raw(wave.right) - p.velocity_raw(wave.left)).abs()
                }
                RInvariant::Marker => match wave.kind {
                    WaveKind::Rarefaction1 { .. } => 0.0,
                    _ => (p.marker_raw(wave.right) - p.marker_raw(wave.left)).abs(),
                },
            })
            .sum()
    }

    /// Line-oriented record: one wave per line with 17 significant digits.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        for wave in &self.waves {
            let (lo, hi) = wave.speed_range();
            s.push_str(&format!(
                "{} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}\n",
                wave.kind.label(),
                lo,
                hi,
                wave.left.rho,
                wave.left.q,
                wave.right.rho,
                wave.right.q
            ));
        }
        s
    }

    /// Verify the structural invariants: chaining, speed order, RH residuals,
    /// Lax admissibility of 1-shocks, rarefaction endpoint speeds, and the
    /// one-phase-transition rule (per segment between stationary jumps).
    pub fn check_admissible(&self, p: &ModelParams) -> AdmissibilityReport {
        let mut rep = AdmissibilityReport { violations: Vec::new() };
        let scale = 1.0 + p.r_max() + p.v_free();

        let mut current = self.left_state;
        let mut prev_hi = f64::NEG_INFINITY;
        let mut pt_in_segment = 0usize;
        for (i, wave) in self.waves.iter().enumerate() {
            if wave.left.dist(&current) > CHAIN_TOL * scale {
                rep.violations.push(format!(
                    "wave {i}: left state ({}, {}) does not chain to ({}, {})",
                    wave.left.rho, wave.left.q, current.rho, current.q
                ));
            }
            let (lo, hi) = wave.speed_range();
            if lo < prev_hi - 1e-12 {
                rep.violations
                    .push(format!("wave {i}: speed order violated ({lo} < {prev_hi})"));
            }
            if hi < lo {
                rep.violations.push(format!("wave {i}: inverted speed range [{lo}, {hi}]"));
            }
            match wave.kind {
                WaveKind::Rarefaction1 { speed_lo, speed_hi, w } => {
                    let wl = p.marker_raw(wave.left);
                    let wr = p.marker_raw(wave.right);
                    if (wl - w).abs() > CHAIN_TOL || (wr - w).abs() > CHAIN_TOL {
                        rep.violations
                            .push(format!("wave {i}: rarefaction leaves its Lax curve"));
                    }
                    let l_lo = p.lax_d1_raw(w, wave.left.rho);
                    let l_hi = p.lax_d1_raw(w, wave.right.rho);
                    if (speed_lo - l_lo).abs() > CHAIN_TOL || (speed_hi - l_hi).abs() > CHAIN_TOL
                    {
                        rep.violations.push(format!(
                            "wave {i}: rarefaction speeds [{speed_lo}, {speed_hi}] != lambda1 [{l_lo}, {l_hi}]"
                        ));
                    }
                }
                WaveKind::StationaryJump => {
                    let df = p.flux_raw(wave.right) - p.flux_raw(wave.left);
                    if df.abs() > RH_TOL * scale {
                        rep.violations.push(format!(
                            "wave {i}: stationary jump does not conserve flux (df = {df:.3e})"
                        ));
                    }
                }
                WaveKind::Contact { speed }
                | WaveKind::Shock1 { speed }
                | WaveKind::PhaseTransition { speed } => {
                    let res = speed * (wave.right.rho - wave.left.rho)
                        - (p.flux_raw(wave.right) - p.flux_raw(wave.left));
                    if res.abs() > RH_TOL * scale {
                        rep.violations
                            .push(format!("wave {i}: RH residual {res:.3e} at speed {speed}"));
                    }
                    if let WaveKind::Shock1 { speed } = wave.kind {
                        let wl = p.marker_raw(wave.left);
                        let wr = p.marker_raw(wave.right);
                        if (wl - wr).abs() > CHAIN_TOL {
                            rep.violations
                                .push(format!("wave {i}: 1-shock changes the marker"));
                        }
                        let l_l = p.lax_d1_raw(wl, wave.left.rho);
                        let l_r = p.lax_d1_raw(wl, wave.right.rho);
                        if l_l < speed - CHAIN_TOL || speed < l_r - CHAIN_TOL {
                            rep.violations.push(format!(
                                "wave {i}: Lax inequalities fail ({l_l} >= {speed} >= {l_r})"
                            ));
                        }
                    }
                }
            }
            if matches!(wave.kind, WaveKind::PhaseTransition { .. }) {
                pt_in_segment += 1;
                if pt_in_segment > 1 {
                    rep.violations
                        .push(format!("wave {i}: more than one phase transition in a fan"));
                }
            }
            if matches!(wave.kind, WaveKind::StationaryJump) {
                pt_in_segment = 0;
            }
            prev_hi = hi;
            current = wave.right;
        }
        if current.dist(&self.right_state) > CHAIN_TOL * scale {
            rep.violations.push(format!(
                "fan does not reach its right state: ({}, {}) vs ({}, {})",
                current.rho, current.q, self.right_state.rho, self.right_state.q
            ));
        }
        rep
    }

    /// Endpoint states of all waves plus sampled rarefaction interiors.
    pub fn attained_states(&self, p: &ModelParams, interior: usize) -> Vec<State> {
        let mut out = vec![self.left_state, self.right_state];
        for wave in &self.waves {
            out.push(wave.left);
            out.push(wave.right);
            if let WaveKind::Rarefaction1 { speed_lo, speed_hi, w } = wave.kind {
                for k in 1..=interior {
                    let xi = speed_lo + (speed_hi - speed_lo) * k as f64 / (interior + 1) as f64;
                    out.push(Self::rarefaction_state(p, wave, w, xi));
                }
            }
        }
        out
    }

    /// Drop zero-strength waves (used when assembling composite fans).
    pub fn culled(mut self) -> Self {
        self.waves.retain(|w| w.left.dist(&w.right) > STATE_TOL);
        self
    }
}

/// Riemann-invariant coordinate selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RInvariant {
    Velocity,
    Marker,
}

#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub violations: Vec<String>,
}

impl AdmissibilityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.ok() {
            write!(f, "admissible")
        } else {
            write!(f, "{}", self.violations.join("\n"))
        }
    }
}

// --- weak-form residual ------------------------------------------------------

/// Which conservation law to test in the weak form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Mass,
    Momentum,
}

/// Polynomial bump test function phi(t, x) = b((t-tc)/rt) b((x-xc)/rx) with
/// b(s) = (1 - s^2)^4 on [-1, 1]. Compact support, C^3, and piecewise
/// polynomial, so sector integrals are exact under Gauss quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub t_center: f64,
    pub t_radius: f64,
    pub x_center: f64,
    pub x_radius: f64,
}

fn bump_b(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let u = 1.0 - s * s;
        u * u * u * u
    }
}

fn bump_db(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let u = 1.0 - s * s;
        -8.0 * s * u * u * u
    }
}

/// Antiderivative of b, clamped outside the support.
fn bump_ib(s: f64) -> f64 {
    let s = s.clamp(-1.0, 1.0);
    let s2 = s * s;
    s * (1.0 + s2 * (-4.0 / 3.0 + s2 * (6.0 / 5.0 + s2 * (-4.0 / 7.0 + s2 / 9.0))))
}

impl Bump {
    pub fn phi(&self, t: f64, x: f64) -> f64 {
        bump_b((t - self.t_center) / self.t_radius) * bump_b((x - self.x_center) / self.x_radius)
    }

    pub fn phi_t(&self, t: f64, x: f64) -> f64 {
        bump_db((t - self.t_center) / self.t_radius) / self.t_radius
            * bump_b((x - self.x_center) / self.x_radius)
    }

    pub fn phi_x(&self, t: f64, x: f64) -> f64 {
        bump_b((t - self.t_center) / self.t_radius)
            * bump_db((x - self.x_center) / self.x_radius)
            / self.x_radius
    }

    /// Closed form of int_{x0}^{x1} phi_t dx.
    fn int_phi_t(&self, t: f64, x0: f64, x1: f64) -> f64 {
        let tb = bump_db((t - self.t_center) / self.t_radius) / self.t_radius;
        let c0 = bump_ib((x0 - self.x_center) / self.x_radius);
        let c1 = bump_ib((x1 - self.x_center) / self.x_radius);
        tb * self.x_radius * (c1 - c0)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

enum Sector {
    Constant(State),
    Rarefaction { wave: Wave, w: f64 },
}

/// Maximal xi-intervals on which the momentum equation holds weakly (it fails
/// only across phase transitions and stationary jumps).
pub fn momentum_windows(fan: &WaveFan) -> Vec<(f64, f64)> {
    let mut cuts = vec![f64::NEG_INFINITY];
    for wave in &fan.waves {
        if matches!(
            wave.kind,
            WaveKind::PhaseTransition { .. } | WaveKind::StationaryJump
        ) {
            let (lo, hi) = wave.speed_range();
            cuts.push(lo);
            cuts.push(hi);
        }
    }
    cuts.push(f64::INFINITY);
    cuts.chunks(2).map(|c| (c[0], c[1])).collect()
}

/// Weak residual of one conservation law against a compactly supported test
/// function, plus the magnitude scale of the integrand. The bump must sit at
/// positive times. Sector-exact in x; piecewise Gauss in t.
pub fn weak_residual(
    p: &ModelParams,
    fan: &WaveFan,
    bump: &Bump,
    eq: Equation,
) -> Result<(f64, f64)> {
    assert!(bump.t_center - bump.t_radius > 0.0, "bump must not touch t = 0");

    let dens = |u: State| match eq {
        Equation::Mass => u.rho,
        Equation::Momentum => u.q,
    };
    let flx = |u: State| match eq {
        Equation::Mass => p.flux_raw(u),
        Equation::Momentum => u.q * p.velocity_raw(u),
    };

    // sector decomposition in xi
    let mut sectors: Vec<(f64, f64, Sector)> = Vec::new();
    let mut lo = f64::NEG_INFINITY;
    let mut current = fan.left_state;
    for wave in &fan.waves {
        let (slo, shi) = wave.speed_range();
        sectors.push((lo, slo, Sector::Constant(current)));
        if shi > slo {
            if let WaveKind::Rarefaction1 { w, .. } = wave.kind {
                sectors.push((slo, shi, Sector::Rarefaction { wave: *wave, w }));
            } else {
                sectors.push((slo, shi, Sector::Constant(wave.left)));
            }
        }
        lo = shi;
        current = wave.right;
    }
    sectors.push((lo, f64::INFINITY, Sector::Constant(current)));

    // t-segmentation at ray/support crossings
    let (t0, t1) = (bump.t_center - bump.t_radius, bump.t_center + bump.t_radius);
    let (xl, xr) = (bump.x_center - bump.x_radius, bump.x_center + bump.x_radius);
    let mut tcuts = vec![t0, t1];
    for wave in &fan.waves {
        let (a, b) = wave.speed_range();
        for s in [a, b] {
            if s != 0.0 {
                for edge in [xl, xr] {
                    let t = edge / s;
                    if t > t0 && t < t1 {
                        tcuts.push(t);
                    }
                }
            }
        }
    }
    tcuts.sort_by(f64::total_cmp);
    tcuts.dedup();

    let (gn, gw) = gauss_legendre(24);
    let clamp_lo = xl - bump.x_radius;
    let clamp_hi = xr + bump.x_radius;

    let mut residual = 0.0;
    let mut scale = 0.0;
    for seg in tcuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        for (tn, tw) in gn.iter().zip(&gw) {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * tn;
            let wt = 0.5 * (b - a) * tw;
            for (slo, shi, sector) in &sectors {
                let x0 = (slo * t).clamp(clamp_lo, clamp_hi);
                let x1 = (shi * t).clamp(clamp_lo, clamp_hi);
                if x1 <= x0 {
                    continue;
                }
                match sector {
                    Sector::Constant(u) => {
                        let term_t = dens(*u) * bump.int_phi_t(t, x0, x1);
                        let term_x = flx(*u) * (bump.phi(t, x1) - bump.phi(t, x0));
                        residual += wt * (term_t + term_x);
                        scale += wt * (term_t.abs() + term_x.abs());
                    }
                    Sector::Rarefaction { wave, w } => {
                        for (xn, xw) in gn.iter().zip(&gw) {
                            let x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * xn;
                            let wx = 0.5 * (x1 - x0) * xw;
                            let u = WaveFan::rarefaction_state(p, wave, *w, x / t);
                            let term =
                                dens(u) * bump.phi_t(t, x) + flx(u) * bump.phi_x(t, x);
                            residual += wt * wx * term;
                            scale += wt * wx * term.abs();
                        }
                    }
                }
            }
        }
    }
    Ok((residual, scale.max(1e-300)))
}
