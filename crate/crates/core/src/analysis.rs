//! Analysis harness: seeded samplers, consistency and L1loc-continuity
//! probes, invariant-domain membership and closure campaigns, and the
//! total-variation bookkeeping for the constrained solvers.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constrained::{classify_d, solve_rf, solve_sf, DClass, Family};
use crate::error::{Error, Result};
use crate::model::{Level, ModelParams, Side, State};
use crate::riemann::{solve_r, solve_s};
use crate::wavefan::{gauss_legendre, Bias, RInvariant, WaveFan};

/// Seeded generator used by every campaign; the stream depends only on the
/// seed, so identical configs reproduce identical reports.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A solver together with its constraint level, as one dispatchable value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    R,
    S,
    RF { f: f64 },
    SF { f: f64 },
}

impl SolverKind {
    pub fn label(&self) -> &'static str {
        match self {
            SolverKind::R => "R",
            SolverKind::S => "S",
            SolverKind::RF { .. } => "R_F",
            SolverKind::SF { .. } => "S_F",
        }
    }

    pub fn constraint(&self) -> Option<f64> {
        match self {
            SolverKind::RF { f } | SolverKind::SF { f } => Some(*f),
            _ => None,
        }
    }

    /// Solve the Riemann problem; constrained solutions are returned as the
    /// full combined profile.
    pub fn solve(&self, p: &ModelParams, u_l: State, u_r: State) -> Result<WaveFan> {
        match self {
            SolverKind::R => solve_r(p, u_l, u_r),
            SolverKind::S => solve_s(p, u_l, u_r),
            SolverKind::RF { f } => Ok(solve_rf(p, *f, u_l, u_r)?.combined()),
            SolverKind::SF { f } => Ok(solve_sf(p, *f, u_l, u_r)?.combined()),
        }
    }
}

// --- samplers -----------------------------------------------------------------

/// A state on the free curve, density uniform on [0, sigma_f_plus).
pub fn sample_free(p: &ModelParams, rng: &mut impl Rng) -> State {
    let rho = rng.random_range(0.0..p.sigma_f_plus());
    p.free_state(rho).expect("free curve density in range")
}

/// A congested state: rho and w uniform over their boxes, rejecting states
/// outside Omega_c.
pub fn sample_congested(p: &ModelParams, rng: &mut impl Rng) -> State {
    loop {
        let rho = rng.random_range(1e-6..=p.r_max());
        let w = rng.random_range(p.w_minus()..=p.w_plus());
        let u = p.state_on_curve(w, rho);
        if p.classify(u).is_congested() {
            return u;
        }
    }
}

/// A state anywhere in Omega (free or congested with equal odds).
pub fn sample_omega(p: &ModelParams, rng: &mut impl Rng) -> State {
    if rng.random_bool(0.5) {
        sample_free(p, rng)
    } else {
        sample_congested(p, rng)
    }
}

// --- profile comparison --------------------------------------------------------

/// A profile on the line: either a fan or a fan glued to other data at a cut
/// point (the shapes appearing in the consistency conditions).
pub(crate) enum Profile<'a> {
    Fan(&'a WaveFan),
    /// fan(x) for x < cut, state for x >= cut
    CutRightConst { fan: &'a WaveFan, cut: f64, state: State },
    /// state for x < cut, fan(x) for x >= cut
    CutLeftConst { state: State, cut: f64, fan: &'a WaveFan },
    /// left(x) for x < cut, right(x) for x >= cut
    Glue { left: &'a WaveFan, cut: f64, right: &'a WaveFan },
}

impl<'a> Profile<'a> {
    fn eval(&self, p: &ModelParams, xi: f64) -> State {
        match self {
            Profile::Fan(fan) => fan.eval(p, xi, Bias::Right),
            Profile::CutRightConst { fan, cut, state } => {
                if xi < *cut {
                    fan.eval(p, xi, Bias::Right)
                } else {
                    *state
                }
            }
            Profile::CutLeftConst { state, cut, fan } => {
                if xi < *cut {
                    *state
                } else {
                    fan.eval(p, xi, Bias::Right)
                }
            }
            Profile::Glue { left, cut, right } => {
                if xi < *cut {
                    left.eval(p, xi, Bias::Right)
                } else {
                    right.eval(p, xi, Bias::Right)
                }
            }
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Profile::Fan(fan) => out.extend(fan.breakpoints()),
            Profile::CutRightConst { fan, cut, .. } | Profile::CutLeftConst { cut, fan, .. } => {
                out.extend(fan.breakpoints());
                out.push(*cut);
            }
            Profile::Glue { left, cut, right } => {
                out.extend(left.breakpoints());
                out.extend(right.breakpoints());
                out.push(*cut);
            }
        }
    }
}

/// Compare two profiles as L-infinity functions: sample interior points of
/// every interval between merged breakpoints. Returns the first xi where they
/// disagree beyond `tol`.
pub(crate) fn profiles_disagree_at(
    p: &ModelParams,
    a: &Profile,
    b: &Profile,
    tol: f64,
) -> Option<f64> {
    let mut bps = Vec::new();
    a.breakpoints(&mut bps);
    b.breakpoints(&mut bps);
    bps.push(0.0);
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let (lo, hi) = match (bps.first(), bps.last()) {
        (Some(&lo), Some(&hi)) => (lo - 1.0, hi + 1.0),
        _ => (-1.0, 1.0),
    };
    let mut grid = vec![lo, hi];
    grid.extend_from_slice(&bps);
    grid.sort_by(f64::total_cmp);
    for pair in grid.windows(2) {
        let (x0, x1) = (pair[0], pair[1]);
        if x1 - x0 <= 1e-13 {
            continue;
        }
        for k in 1..=9 {
            let xi = x0 + (x1 - x0) * k as f64 / 10.0;
            let ua = a.eval(p, xi);
            let ub = b.eval(p, xi);
            if ua.dist(&ub) > tol {
                return Some(xi);
            }
        }
    }
    None
}

/// Whether two fans agree as L-infinity profiles to `tol`.
pub fn fans_equal(p: &ModelParams, a: &WaveFan, b: &WaveFan, tol: f64) -> bool {
    profiles_disagree_at(p, &Profile::Fan(a), &Profile::Fan(b), tol).is_none()
}

// --- consistency -----------------------------------------------------------------

/// Outcome of the consistency campaign: property (I) restriction checks and
/// property (II) concatenation checks on sampled data.
#[derive(Debug, Clone, Default)]
pub struct ConsistencyReport {
    pub i_checked: usize,
    pub i_failures: Vec<(State, State, f64)>,
    pub ii_checked: usize,
    pub ii_vacuous: usize,
    pub ii_failures: Vec<(State, State, State)>,
}

impl ConsistencyReport {
    pub fn i_passed(&self) -> bool {
        self.i_failures.is_empty()
    }
    pub fn ii_passed(&self) -> bool {
        self.ii_failures.is_empty()
    }
}

const PROFILE_TOL: f64 = 1e-7;

/// Check property (I) for one pair at every structural cut point of its
/// solution. Returns the first violating cut, if any.
pub fn check_restriction_property(
    p: &ModelParams,
    kind: SolverKind,
    u_l: State,
    u_r: State,
) -> Result<Option<f64>> {
    let fan = kind.solve(p, u_l, u_r)?;
    let mut bps = fan.breakpoints();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let mut cuts = Vec::new();
    if bps.is_empty() {
        cuts.push(0.0);
    } else {
        cuts.push(bps[0] - 0.5);
        for pair in bps.windows(2) {
            if pair[1] - pair[0] > 1e-12 {
                cuts.push(0.5 * (pair[0] + pair[1]));
                // quarter points probe rarefaction interiors
                cuts.push(pair[0] + 0.25 * (pair[1] - pair[0]));
            }
        }
        cuts.push(bps[bps.len() - 1] + 0.5);
    }
    for xbar in cuts {
        let um = fan.eval(p, xbar, Bias::Right);
        let left = kind.solve(p, u_l, um)?;
        let right = kind.solve(p, um, u_r)?;
        let want_left = Profile::CutRightConst { fan: &fan, cut: xbar, state: um };
        let want_right = Profile::CutLeftConst { state: um, cut: xbar, fan: &fan };
        if profiles_disagree_at(p, &Profile::Fan(&left), &want_left, PROFILE_TOL).is_some()
            || profiles_disagree_at(p, &Profile::Fan(&right), &want_right, PROFILE_TOL).is_some()
        {
            return Ok(Some(xbar));
        }
    }
    Ok(None)
}

/// Check property (II) for one triple: when the fans of (u_l, u_m) and
/// (u_m, u_r) separate at some cut, their concatenation must solve
/// (u_l, u_r). Returns None when the premise cannot be arranged.
pub fn check_concatenation_property(
    p: &ModelParams,
    kind: SolverKind,
    u_l: State,
    u_m: State,
    u_r: State,
) -> Result<Option<bool>> {
    let left = kind.solve(p, u_l, u_m)?;
    let right = kind.solve(p, u_m, u_r)?;
    let a = left.max_speed().unwrap_or(f64::NEG_INFINITY);
    let b = right.min_speed().unwrap_or(f64::INFINITY);
    if a >= b {
        return Ok(None);
    }
    let xbar = if a.is_infinite() && b.is_infinite() {
        0.0
    } else if a.is_infinite() {
        b - 1.0
    } else if b.is_infinite() {
        a + 1.0
    } else {
        0.5 * (a + b)
    };
    let fan = kind.solve(p, u_l, u_r)?;
    let want = Profile::Glue { left: &left, cut: xbar, right: &right };
    Ok(Some(profiles_disagree_at(p, &Profile::Fan(&fan), &want, PROFILE_TOL).is_none()))
}

/// Construct a triple whose two half-problems separate at some cut, so the
/// concatenation premise holds non-vacuously: the middle state closes the
/// left problem with backward waves and opens the right one with a forward
/// 2-contact.
pub fn sample_concat_triple(
    p: &ModelParams,
    constraint: Option<f64>,
    rng: &mut impl Rng,
) -> Result<(State, State, State)> {
    let n_families = if constraint.is_some() { 3 } else { 2 };
    match rng.random_range(0..n_families) {
        0 => {
            // 1-wave down the left curve, then a 2-contact
            let u_l = sample_congested(p, rng);
            let w = p.marker_raw(u_l);
            let v_m = rng.random_range(0.05 * p.v_cong()..=p.v_cong());
            let u_m = p.state_on_curve(w, p.rho_at_velocity_on_curve(w, v_m)?);
            let w_r = rng.random_range(p.w_minus()..=p.w_plus());
            let u_r = p.state_on_curve(w_r, p.rho_at_velocity_on_curve(w_r, v_m)?);
            Ok((u_l, u_m, u_r))
        }
        1 => {
            // phase transition onto the minus curve, then a 2-contact
            let u_r = loop {
                let u = sample_congested(p, rng);
                if p.velocity_raw(u) >= 0.05 * p.v_cong() {
                    break u;
                }
            };
            let u_m = p.psi2(u_r, Side::Minus)?;
            let u_l = p.free_state(rng.random_range(0.0..p.sigma_f_minus()))?;
            Ok((u_l, u_m, u_r))
        }
        _ => {
            // middle state at the gate capacity on the left marker curve
            let f = constraint.expect("family requires a constraint");
            let u_l = (0..1000)
                .map(|_| sample_omega(p, rng))
                .find(|u| p.flux_raw(*u) > f)
                .ok_or_else(|| Error::SolveFailure("no state above capacity".into()))?;
            let w_hat = p.marker_raw(u_l).max(p.w_minus());
            let rho_top = p.rho_at_velocity_on_curve(w_hat, p.v_cong())?;
            let f_eff = f.min(p.lax_value_raw(w_hat, rho_top));
            let rho_hat = p.rho_at_flux_on_curve(w_hat, f_eff, rho_top, p.rho1_0_raw(w_hat))?;
            let u_m = p.state_on_curve(w_hat, rho_hat);
            let v_m = p.velocity_raw(u_m);
            let w_r = rng.random_range(p.w_minus()..=p.w_plus());
            let u_r = p.state_on_curve(w_r, p.rho_at_velocity_on_curve(w_r, v_m)?);
            Ok((u_l, u_m, u_r))
        }
    }
}

/// Run the consistency campaign: property (I) on `n` sampled pairs and
/// property (II) on `n` constructed triples.
pub fn consistency_suite(
    p: &ModelParams,
    kind: SolverKind,
    n: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    let mut rng = rng_from_seed(seed);
    let mut rep = ConsistencyReport::default();
    for _ in 0..n {
        let u_l = sample_omega(p, &mut rng);
        let u_r = sample_omega(p, &mut rng);
        rep.i_checked += 1;
        if let Some(xbar) = check_restriction_property(p, kind, u_l, u_r)? {
            rep.i_failures.push((u_l, u_r, xbar));
        }

        let (a, m, b) = sample_concat_triple(p, kind.constraint(), &mut rng)?;
        match check_concatenation_property(p, kind, a, m, b)? {
            None => rep.ii_vacuous += 1,
            Some(ok) => {
                rep.ii_checked += 1;
                if !ok {
                    rep.ii_failures.push((a, m, b));
                }
            }
        }
    }
    Ok(rep)
}

/// An instance of the restriction-property counterexample for the
/// constrained solvers: u_l free below capacity, u_r congested with the
/// minus-curve flux above capacity, the cut taken inside the middle state.
#[derive(Debug, Clone, Copy)]
pub struct RestrictionCounterexample {
    pub u_l: State,
    pub u_m: State,
    pub u_r: State,
    pub xbar: f64,
}

pub fn restriction_counterexample(p: &ModelParams, f: f64) -> Result<RestrictionCounterexample> {
    let v_r = 0.9 * p.v_cong();
    let u_r = p.state_on_curve(p.w_plus(), p.rho_at_velocity_on_curve(p.w_plus(), v_r)?);
    let u_m = p.psi2(u_r, Side::Minus)?;
    if p.flux_raw(u_m) <= f {
        return Err(Error::SolveFailure(format!(
            "no counterexample: minus-curve flux {} below capacity {f}",
            p.flux_raw(u_m)
        )));
    }
    let u_l = p.free_state(0.5 * f / p.v_free())?;
    let chord = p.rh_speed(u_l, u_m)?;
    let xbar = 0.5 * (chord.max(0.0) + v_r);
    Ok(RestrictionCounterexample { u_l, u_m, u_r, xbar })
}

/// Evaluate property (I) on the counterexample; returns false (the expected
/// outcome for the constrained solvers) when the restriction fails.
pub fn restriction_holds_on(
    p: &ModelParams,
    kind: SolverKind,
    cx: &RestrictionCounterexample,
) -> Result<bool> {
    let fan = kind.solve(p, cx.u_l, cx.u_r)?;
    let um = fan.eval(p, cx.xbar, Bias::Right);
    if um.dist(&cx.u_m) > 1e-9 {
        return Err(Error::SolveFailure("cut does not hit the middle state".into()));
    }
    let left = kind.solve(p, cx.u_l, um)?;
    let right = kind.solve(p, um, cx.u_r)?;
    let want_left = Profile::CutRightConst { fan: &fan, cut: cx.xbar, state: um };
    let want_right = Profile::CutLeftConst { state: um, cut: cx.xbar, fan: &fan };
    Ok(profiles_disagree_at(p, &Profile::Fan(&left), &want_left, PROFILE_TOL).is_none()
        && profiles_disagree_at(p, &Profile::Fan(&right), &want_right, PROFILE_TOL).is_none())
}

// --- L1loc continuity ---------------------------------------------------------

/// L1 distance between two profiles over [lo, hi] (conserved variables,
/// Gauss quadrature between merged breakpoints).
pub fn fan_l1_distance(p: &ModelParams, a: &WaveFan, b: &WaveFan, lo: f64, hi: f64) -> f64 {
    let mut bps = vec![lo, hi];
    for s in a.breakpoints().into_iter().chain(b.breakpoints()) {
        if s > lo && s < hi {
            bps.push(s);
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let (gn, gw) = gauss_legendre(10);
    let mut total = 0.0;
    for pair in bps.windows(2) {
        let (x0, x1) = (pair[0], pair[1]);
        if x1 <= x0 {
            continue;
        }
        for (xn, xw) in gn.iter().zip(&gw) {
            let xi = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * xn;
            let wx = 0.5 * (x1 - x0) * xw;
            total += wx * a.eval(p, xi, Bias::Right).dist(&b.eval(p, xi, Bias::Right));
        }
    }
    total
}

/// Nudge a state inside its phase by eps (free states along the curve,
/// congested states in the (v, w) box).
pub fn perturb_state(p: &ModelParams, u: State, eps: f64, rng: &mut impl Rng) -> State {
    let class = p.classify(u);
    if class.is_congested() && !class.is_free() {
        let v = p.velocity_raw(u);
        let w = p.marker_raw(u);
        let sv = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let sw = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let v2 = (v + sv * eps).clamp(0.0, p.v_cong());
        let w2 = (w + sw * eps).clamp(p.w_minus(), p.w_plus());
        let rho = p
            .rho_at_velocity_on_curve(w2, v2)
            .expect("perturbed congested state stays on a curve");
        p.state_on_curve(w2, rho)
    } else {
        let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let rho = (u.rho + s * eps).clamp(0.0, p.sigma_f_plus());
        p.free_state(rho).expect("perturbed free state stays on the curve")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuitySample {
    pub eps: f64,
    pub data_dist: f64,
    pub gap: f64,
}

/// Perturbation probe: for each sampled pair and radius, the L1 gap between
/// the perturbed and unperturbed solutions over [-window, window].
pub fn l1loc_probe(
    p: &ModelParams,
    kind: SolverKind,
    n: usize,
    radii: &[f64],
    seed: u64,
    window: f64,
) -> Result<Vec<ContinuitySample>> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n * radii.len());
    for _ in 0..n {
        let u_l = sample_omega(p, &mut rng);
        let u_r = sample_omega(p, &mut rng);
        let base = kind.solve(p, u_l, u_r)?;
        for &eps in radii {
            let ul2 = perturb_state(p, u_l, eps, &mut rng);
            let ur2 = perturb_state(p, u_r, eps, &mut rng);
            let dist = ul2.dist(&u_l) + ur2.dist(&u_r);
            let fan2 = kind.solve(p, ul2, ur2)?;
            let gap = fan_l1_distance(p, &base, &fan2, -window, window);
            out.push(ContinuitySample { eps, data_dist: dist, gap });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct JumpProbe {
    pub eps: f64,
    pub gap: f64,
    pub analytic_gap: f64,
}

/// The discontinuity family of the disjoint-phase constrained solver: free
/// data with f(u_l) = F exactly, approached from above. The L1 gap on the
/// negative half-line converges to the limit-profile mass instead of zero.
pub fn sf_discontinuity_probe(
    p: &ModelParams,
    f: f64,
    radii: &[f64],
    window: f64,
) -> Result<Vec<JumpProbe>> {
    if p.is_intersecting() {
        return Err(Error::RequiresDisjoint("sf_discontinuity_probe"));
    }
    if f <= p.flux_raw(p.u_cong_min()) {
        return Err(Error::SolveFailure(
            "family needs F above the congested corner flux".into(),
        ));
    }
    let rho_l = f / p.v_free();
    let u_l = p.free_state(rho_l)?;
    let u_r = p.free_state(0.5 * rho_l)?;
    let u_sharp = if rho_l < p.sigma_f_minus() {
        p.u_cong_min()
    } else {
        p.psi1(u_l, Level::Cong)?
    };
    let chord = p.rh_speed(u_l, u_sharp)?;
    let analytic = u_sharp.dist(&u_l) * chord.abs().min(window);
    let base = solve_sf(p, f, u_l, u_r)?.combined();
    let mut out = Vec::new();
    for &eps in radii {
        let ul2 = p.free_state(rho_l + eps)?;
        let fan2 = solve_sf(p, f, ul2, u_r)?.combined();
        let gap = fan_l1_distance(p, &base, &fan2, -window, 0.0);
        out.push(JumpProbe { eps, gap, analytic_gap: analytic });
    }
    Ok(out)
}

// --- invariant domains -----------------------------------------------------------

/// State sets whose invariance under the solvers is analysed.
#[derive(Clone)]
pub enum DomainSpec {
    OmegaF,
    OmegaC,
    /// Minimal invariant domain containing Omega_f (both solver families).
    InvariantFree { f: f64 },
    /// Minimal invariant domain containing Omega_c, intersecting phases.
    InvariantCongR { f: f64 },
    /// Minimal invariant domain containing Omega_c, disjoint phases.
    InvariantCongS { f: f64 },
    Custom(Arc<dyn Fn(&ModelParams, State) -> bool + Send + Sync>),
}

impl std::fmt::Debug for DomainSpec {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainSpec::OmegaF => write!(fm, "OmegaF"),
            DomainSpec::OmegaC => write!(fm, "OmegaC"),
            DomainSpec::InvariantFree { f } => write!(fm, "InvariantFree(F={f})"),
            DomainSpec::InvariantCongR { f } => write!(fm, "InvariantCongR(F={f})"),
            DomainSpec::InvariantCongS { f } => write!(fm, "InvariantCongS(F={f})"),
            DomainSpec::Custom(_) => write!(fm, "Custom"),
        }
    }
}

const MEMBER_BAND: f64 = 1e-9;

/// Membership test, decidable to a 1e-9 band at set boundaries.
pub fn member(p: &ModelParams, spec: &DomainSpec, u: State) -> bool {
    let class = p.classify(u);
    match spec {
        DomainSpec::OmegaF => class.is_free(),
        DomainSpec::OmegaC => class.is_congested(),
        DomainSpec::InvariantFree { f } => {
            if class.is_free() {
                return true;
            }
            if !class.is_congested() {
                return false;
            }
            let flux = p.flux_raw(u);
            // I_1: f(u) <= F <= f(psi_2^+(u))
            if flux <= f + MEMBER_BAND {
                let plus = p.psi2(u, Side::Plus).expect("congested state maps to w_plus");
                if *f <= p.flux_raw(plus) + MEMBER_BAND {
                    return true;
                }
            }
            // I_2: f(u) > F on a strictly convex curve
            flux > f - MEMBER_BAND && p.lax_d2_raw(p.marker_raw(u), u.rho) > 0.0
        }
        DomainSpec::InvariantCongR { f } => {
            class.is_congested()
                || p.free_state(f / p.v_free())
                    .map(|pt| u.dist(&pt) <= MEMBER_BAND * (1.0 + pt.q.abs()))
                    .unwrap_or(false)
        }
        DomainSpec::InvariantCongS { f } => {
            if class.is_congested() {
                return true;
            }
            if *f >= p.flux_raw(p.u_cong_min()) {
                return false;
            }
            p.free_state(f / p.v_free())
                .map(|pt| u.dist(&pt) <= MEMBER_BAND * (1.0 + pt.q.abs()))
                .unwrap_or(false)
        }
        DomainSpec::Custom(pred) => pred(p, u),
    }
}

/// Rejection-sample a member of the domain.
pub fn sample_member(
    p: &ModelParams,
    spec: &DomainSpec,
    rng: &mut impl Rng,
    max_tries: usize,
) -> Result<State> {
    for _ in 0..max_tries {
        let u = match spec {
            DomainSpec::OmegaF | DomainSpec::InvariantFree { .. } => {
                if rng.random_bool(0.5) {
                    sample_free(p, rng)
                } else {
                    sample_congested(p, rng)
                }
            }
            DomainSpec::OmegaC
            | DomainSpec::InvariantCongR { .. }
            | DomainSpec::InvariantCongS { .. } => sample_congested(p, rng),
            DomainSpec::Custom(_) => sample_omega(p, rng),
        };
        if member(p, spec, u) {
            return Ok(u);
        }
    }
    Err(Error::SolveFailure("domain sampler exhausted its tries".into()))
}

#[derive(Debug, Clone)]
pub struct ClosureViolation {
    pub u_l: State,
    pub u_r: State,
    pub state: State,
}

#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub pairs: usize,
    pub states_checked: usize,
    pub violations: Vec<ClosureViolation>,
}

impl ClosureReport {
    pub fn closed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Rarefaction interiors are sampled at this many points in closure tests.
pub const CLOSURE_INTERIOR_SAMPLES: usize = 17;

/// Sample pairs from the domain, solve, and check that every attained state
/// (wave endpoints, gate states, rarefaction interiors) stays inside.
pub fn closure_test(
    p: &ModelParams,
    spec: &DomainSpec,
    kind: SolverKind,
    n: usize,
    seed: u64,
) -> Result<ClosureReport> {
    let mut rng = rng_from_seed(seed);
    let mut rep = ClosureReport { pairs: 0, states_checked: 0, violations: Vec::new() };
    for _ in 0..n {
        let u_l = sample_member(p, spec, &mut rng, 100_000)?;
        let u_r = sample_member(p, spec, &mut rng, 100_000)?;
        let fan = kind.solve(p, u_l, u_r)?;
        rep.pairs += 1;
        for state in fan.attained_states(p, CLOSURE_INTERIOR_SAMPLES) {
            rep.states_checked += 1;
            if !member(p, spec, state) {
                rep.violations.push(ClosureViolation { u_l, u_r, state });
            }
        }
    }
    Ok(rep)
}

/// Which minimal invariant domain the generator families belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainFamily {
    FreeSide,
    CongestedSide,
}

/// The pair families from the minimality argument: free pairs above
/// capacity, equal-capacity congested pairs with decreasing velocity, and
/// the overlap-to-congested pairs when the capacity exceeds the corner flux
/// (free side); congested pairs whose minus-curve flux exceeds the capacity
/// (congested side).
pub fn minimality_generators(
    p: &ModelParams,
    f: f64,
    family: DomainFamily,
    n: usize,
    seed: u64,
) -> Result<Vec<(State, State)>> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    let v = p.v_free();
    // the state of flux f on the curve of marker w, if the curve reaches it
    let state_at_capacity = |p: &ModelParams, w: f64| -> Result<Option<State>> {
        let rho_top = p.rho_at_velocity_on_curve(w, p.v_cong())?;
        if p.lax_value_raw(w, rho_top) < f {
            return Ok(None);
        }
        let rho = p.rho_at_flux_on_curve(w, f, rho_top, p.rho1_0_raw(w))?;
        Ok(Some(p.state_on_curve(w, rho)))
    };
    match family {
        DomainFamily::FreeSide => {
            for _ in 0..n {
                let rho_l = rng.random_range((f / v).min(p.sigma_f_plus())..p.sigma_f_plus());
                out.push((p.free_state(rho_l)?, sample_free(p, &mut rng)));
            }
            let mut made = 0;
            let mut tries = 0;
            while made < n && tries < 100 * n {
                tries += 1;
                let w1 = rng.random_range(p.w_minus()..=p.w_plus());
                let w2 = rng.random_range(p.w_minus()..=p.w_plus());
                if let (Some(a), Some(b)) = (state_at_capacity(p, w1)?, state_at_capacity(p, w2)?)
                {
                    // equal flux: the smaller density carries the larger speed
                    let (fast, slow) = if a.rho < b.rho { (a, b) } else { (b, a) };
                    if fast.dist(&slow) > 1e-9 {
                        out.push((fast, slow));
                        made += 1;
                    }
                }
            }
            if f > v * p.sigma_f_minus() {
                let mut made = 0;
                let mut tries = 0;
                while made < n && tries < 100 * n {
                    tries += 1;
                    let rho_l =
                        rng.random_range(p.sigma_f_minus()..(f / v).min(p.sigma_f_plus()));
                    let w2 = rng.random_range(p.w_minus()..=p.w_plus());
                    if let Some(b) = state_at_capacity(p, w2)? {
                        out.push((p.free_state(rho_l)?, b));
                        made += 1;
                    }
                }
            }
        }
        DomainFamily::CongestedSide => {
            let mut made = 0;
            let mut tries = 0;
            while made < n && tries < 1000 * n {
                tries += 1;
                let u_l = sample_congested(p, &mut rng);
                let u_r = sample_congested(p, &mut rng);
                let m = p.psi2(u_r, Side::Minus)?;
                if p.flux_raw(m) > f && p.flux_raw(p.u_star(u_l, u_r)?) > f {
                    out.push((u_l, u_r));
                    made += 1;
                }
            }
        }
    }
    Ok(out)
}

// --- total variation ---------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct TvReport {
    pub dtv_v: f64,
    pub dtv_w: f64,
    pub zero_zone: bool,
    pub classification: DClass,
}

/// Total-variation excess of the constrained solution over the datum jump,
/// in both Riemann-invariant coordinates, plus membership in the zero-excess
/// zone.
pub fn delta_tv(
    p: &ModelParams,
    f: f64,
    family: Family,
    u_l: State,
    u_r: State,
) -> Result<TvReport> {
    let split = match family {
        Family::R => solve_rf(p, f, u_l, u_r)?,
        Family::S => solve_sf(p, f, u_l, u_r)?,
    };
    let fan = split.combined();
    let tv_v = fan.tv_of(p, RInvariant::Velocity);
    let tv_w = fan.tv_of(p, RInvariant::Marker);
    let dtv_v = tv_v - (p.velocity_raw(u_l) - p.velocity_raw(u_r)).abs();
    let dtv_w = tv_w - (p.marker_raw(u_l) - p.marker_raw(u_r)).abs();

    let zero_zone = match split.classification {
        DClass::D1 => true,
        DClass::D2 => {
            let cl = p.classify(u_l);
            let cr = p.classify(u_r);
            let v_hat = p.velocity_raw(split.u_hat);
            let w_chk = p.marker_raw(split.u_check);
            let v_l = p.velocity_raw(u_l);
            let w_r = p.marker_raw(u_r);
            if cl.is_congested() && cr.is_congested() {
                let m = p.psi2(u_r, Side::Minus)?;
                p.flux_raw(m) <= f && v_l <= v_hat && w_r <= w_chk
            } else if cl.is_congested_minus() && cr.is_free_minus() {
                v_l <= v_hat && w_r <= w_chk
            } else {
                false
            }
        }
    };
    Ok(TvReport { dtv_v, dtv_w, zero_zone, classification: split.classification })
}

/// The data classes where the disjoint-phase gate selection differs from the
/// intersecting one (labels 4, 5, 6 for the three families).
pub fn special_selection_case(
    p: &ModelParams,
    f: f64,
    u_l: State,
    u_r: State,
) -> Result<Option<u8>> {
    let cl = p.classify(u_l);
    let cr = p.classify(u_r);
    if cr.is_free() {
        if cl.is_free_minus() {
            let corner = p.flux_raw(p.u_cong_min());
            if f > corner && f < p.flux_raw(u_l) {
                return Ok(Some(4));
            }
        } else if cl.is_free_plus() {
            let cap = p.flux_raw(p.psi1(u_l, Level::Cong)?);
            if f > cap && f < p.flux_raw(u_l) {
                return Ok(Some(5));
            }
        } else if cl.is_congested() {
            let cap = p.flux_raw(p.psi1(u_l, Level::Cong)?);
            let top = p.flux_raw(p.psi1(u_l, Level::Free)?);
            if f > cap && f < top {
                return Ok(Some(6));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy)]
pub struct TvComparison {
    pub r: TvReport,
    pub s: TvReport,
    pub case: Option<u8>,
    pub w_r_exceeds_check2: bool,
}

/// Compare the TV excess of the two constrained solvers on one pair; `p_r`
/// must be `p_s` with the congested cap raised to V_f.
pub fn compare_tv_rf_sf(
    p_r: &ModelParams,
    p_s: &ModelParams,
    f: f64,
    u_l: State,
    u_r: State,
) -> Result<TvComparison> {
    let compatible = p_r.is_intersecting()
        && !p_s.is_intersecting()
        && p_r.v_free() == p_s.v_free()
        && p_r.r_max() == p_s.r_max()
        && p_r.w_minus() == p_s.w_minus()
        && p_r.w_plus() == p_s.w_plus()
        && p_r.variant() == p_s.variant();
    if !compatible {
        return Err(Error::InvalidParams(
            "compare_tv_rf_sf needs the intersecting counterpart of the same model".into(),
        ));
    }
    let r = delta_tv(p_r, f, Family::R, u_l, u_r)?;
    let s = delta_tv(p_s, f, Family::S, u_l, u_r)?;
    let case = special_selection_case(p_s, f, u_l, u_r)?;
    let split = solve_sf(p_s, f, u_l, u_r)?;
    let w_r_exceeds_check2 = split.classification == DClass::D2
        && p_s.marker_raw(u_r) > p_s.marker_raw(split.u_check);
    Ok(TvComparison { r, s, case, w_r_exceeds_check2 })
}

/// The six data classes of the zero-zone case analysis (pair in D2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvCase {
    FreeMinusToFree,
    FreePlusToFree,
    CongCongHighMinusFlux,
    CongCongLowMinusFlux,
    CongMinusToFreeMinus,
    FreeMinusToCongMinus,
}

pub const TV_CASES: [TvCase; 6] = [
    TvCase::FreeMinusToFree,
    TvCase::FreePlusToFree,
    TvCase::CongCongHighMinusFlux,
    TvCase::CongCongLowMinusFlux,
    TvCase::CongMinusToFreeMinus,
    TvCase::FreeMinusToCongMinus,
];

impl TvCase {
    pub fn label(&self) -> &'static str {
        match self {
            TvCase::FreeMinusToFree => "free_minus/free",
            TvCase::FreePlusToFree => "free_plus/free",
            TvCase::CongCongHighMinusFlux => "cong/cong high-minus-flux",
            TvCase::CongCongLowMinusFlux => "cong/cong low-minus-flux",
            TvCase::CongMinusToFreeMinus => "cong_minus/free_minus",
            TvCase::FreeMinusToCongMinus => "free_minus/cong_minus",
        }
    }
}

/// Sample a D2 pair in the given case family, keeping a 1e-6 margin from the
/// case boundaries. Returns None when the family is empty for this model and
/// capacity.
pub fn sample_tv_case(
    p: &ModelParams,
    f: f64,
    case: TvCase,
    rng: &mut impl Rng,
    max_tries: usize,
) -> Result<Option<(State, State)>> {
    const BAND: f64 = 1e-6;
    let family = if p.is_intersecting() { Family::R } else { Family::S };
    for _ in 0..max_tries {
        let (u_l, u_r) = match case {
            TvCase::FreeMinusToFree => {
                let u_l = p.free_state(rng.random_range(0.0..p.sigma_f_minus()))?;
                (u_l, sample_free(p, rng))
            }
            TvCase::FreePlusToFree => {
                let u_l = p.free_state(rng.random_range(p.sigma_f_minus()..p.sigma_f_plus()))?;
                (u_l, sample_free(p, rng))
            }
            TvCase::CongCongHighMinusFlux | TvCase::CongCongLowMinusFlux => {
                (sample_congested(p, rng), sample_congested(p, rng))
            }
            TvCase::CongMinusToFreeMinus => {
                let u_r = p.free_state(rng.random_range(0.0..p.sigma_f_minus()))?;
                (sample_congested(p, rng), u_r)
            }
            TvCase::FreeMinusToCongMinus => {
                let u_l = p.free_state(rng.random_range(0.0..p.sigma_f_minus()))?;
                (u_l, sample_congested(p, rng))
            }
        };
        match case {
            TvCase::CongCongHighMinusFlux => {
                if p.flux_raw(p.psi2(u_r, Side::Minus)?) <= f + BAND {
                    continue;
                }
            }
            TvCase::CongCongLowMinusFlux => {
                if p.flux_raw(p.psi2(u_r, Side::Minus)?) >= f - BAND {
                    continue;
                }
            }
            TvCase::CongMinusToFreeMinus => {
                if !p.classify(u_l).is_congested_minus() {
                    continue;
                }
            }
            TvCase::FreeMinusToCongMinus => {
                if !p.classify(u_r).is_congested_minus() {
                    continue;
                }
            }
            _ => {}
        }
        if classify_d(p, f, u_l, u_r, family)? != DClass::D2 {
            continue;
        }
        let split = match family {
            Family::R => solve_rf(p, f, u_l, u_r)?,
            Family::S => solve_sf(p, f, u_l, u_r)?,
        };
        let v_l = p.velocity_raw(u_l);
        let v_hat = p.velocity_raw(split.u_hat);
        let w_r = p.marker_raw(u_r);
        let w_chk = p.marker_raw(split.u_check);
        if (v_l - v_hat).abs() < BAND || (w_r - w_chk).abs() < BAND {
            continue;
        }
        return Ok(Some((u_l, u_r)));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn samplers_land_in_their_phases() {
        let p = presets::pt0_tollgate();
        let mut rng = rng_from_seed(7);
        for _ in 0..200 {
            assert!(p.classify(sample_free(&p, &mut rng)).is_free());
            assert!(p.classify(sample_congested(&p, &mut rng)).is_congested());
        }
        let pd = presets::ptp_disjoint();
        for _ in 0..200 {
            assert!(pd.classify(sample_congested(&pd, &mut rng)).is_congested());
        }
    }

    #[test]
    fn profile_comparison_detects_differences() {
        let p = presets::pt0_tollgate();
        let a = p.free_state(0.1).unwrap();
        let b = p.free_state(0.2).unwrap();
        let fan1 = solve_r(&p, a, b).unwrap();
        let fan2 = solve_r(&p, a, a).unwrap();
        assert!(
            profiles_disagree_at(&p, &Profile::Fan(&fan1), &Profile::Fan(&fan1), 1e-9).is_none()
        );
        assert!(
            profiles_disagree_at(&p, &Profile::Fan(&fan1), &Profile::Fan(&fan2), 1e-9).is_some()
        );
    }

    #[test]
    fn restriction_counterexample_fails_for_constrained_solver_only() {
        let p = presets::pt0_tollgate();
        let f = 3.0 / 25.0;
        let cx = restriction_counterexample(&p, f).unwrap();
        assert_eq!(classify_d(&p, f, cx.u_l, cx.u_r, Family::R).unwrap(), DClass::D1);
        assert_eq!(classify_d(&p, f, cx.u_m, cx.u_r, Family::R).unwrap(), DClass::D2);
        assert!(restriction_holds_on(&p, SolverKind::R, &cx).unwrap());
        assert!(!restriction_holds_on(&p, SolverKind::RF { f }, &cx).unwrap());
    }

    #[test]
    fn member_examples() {
        let p = presets::pt0_tollgate();
        let f = 3.0 / 25.0;
        let spec = DomainSpec::InvariantFree { f };
        assert!(member(&p, &spec, p.free_state(0.2).unwrap()));
        // the capacity point belongs to the congested-side domain
        let spec_c = DomainSpec::InvariantCongR { f };
        let pt = p.free_state(f / p.v_free()).unwrap();
        assert!(member(&p, &spec_c, pt));
        assert!(!member(&p, &spec_c, p.free_state(0.05).unwrap()));
        // hat state of the gate problem: in I_f iff its plus-curve flux covers F
        let u2 = State::new(1.0, 0.3);
        let (hat2, _) = crate::constrained::select_hat_check_r(&p, f, u2, State::VACUUM).unwrap();
        let plus = p.psi2(hat2, Side::Plus).unwrap();
        assert!(p.flux(plus).unwrap() >= f);
        assert!(member(&p, &spec, hat2));
    }

    #[test]
    fn zero_zone_examples() {
        let p = presets::pt0_tollgate();
        let f = 3.0 / 25.0;
        // D1 pair: no excess
        let a = p.free_state(0.05).unwrap();
        let b = p.free_state(0.2).unwrap();
        let rep = delta_tv(&p, f, Family::R, a, b).unwrap();
        assert!(rep.zero_zone && rep.dtv_v.abs() < 1e-12 && rep.dtv_w.abs() < 1e-12);
        // the toll-gate pair (stopped traffic against vacuum) sits in the
        // zero zone: enumerating the fan jumps gives no excess in either
        // invariant, matching the characterization with v_l = 0 <= v_hat and
        // w_r = w_minus - V <= w_check
        let rep = delta_tv(&p, f, Family::R, State::new(1.0, 0.3), State::VACUUM).unwrap();
        assert!(rep.zero_zone);
        assert!(rep.dtv_v.abs() < 1e-10 && rep.dtv_w.abs() < 1e-10);
        // a free state above capacity against vacuum leaves the zone
        let rep = delta_tv(&p, f, Family::R, p.free_state(0.2).unwrap(), State::VACUUM).unwrap();
        assert!(!rep.zero_zone);
        assert!(rep.dtv_v > 1e-6 && rep.dtv_w > 1e-6);
    }

    #[test]
    fn free_minus_to_congested_case_formulas() {
        // u_l free-minus, u_r congested-minus, D2: the case analysis gives
        // dTV_v = 2(V - v_hat) and dTV_w = 2(w_minus - w_check)
        let p = presets::pt0_tollgate();
        let f = 3.0 / 25.0;
        let mut rng = rng_from_seed(11);
        let mut found = 0;
        for _ in 0..500 {
            if let Some((u_l, u_r)) =
                sample_tv_case(&p, f, TvCase::FreeMinusToCongMinus, &mut rng, 200).unwrap()
            {
                let split = solve_rf(&p, f, u_l, u_r).unwrap();
                let rep = delta_tv(&p, f, Family::R, u_l, u_r).unwrap();
                let want_v = 2.0 * (p.v_free() - p.velocity_raw(split.u_hat));
                let want_w = 2.0 * (p.w_minus() - p.marker_raw(split.u_check));
                assert!((rep.dtv_v - want_v).abs() < 1e-9, "{} vs {want_v}", rep.dtv_v);
                assert!((rep.dtv_w - want_w).abs() < 1e-9, "{} vs {want_w}", rep.dtv_w);
                assert!(rep.dtv_v > 0.0 && rep.dtv_w > 0.0);
                found += 1;
                if found > 25 {
                    break;
                }
            }
        }
        assert!(found > 0, "family must be non-empty for the toll-gate data");
    }
}
