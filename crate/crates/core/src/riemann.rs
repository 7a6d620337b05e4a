//! Exact Riemann solvers for the two-phase models.
//!
//! `solve_r` handles intersecting phases (V_c = V_f): free pairs join by a
//! contact at V, congested pairs by a 1-wave to the curve intersection
//! u_*(u_l, u_r) followed by a 2-contact, and mixed pairs by phase
//! transitions; when the jump to the minus-marker curve is too steep for a
//! single transition, the transition attaches tangentially at u_p
//! (Lambda(u_l, u_p) = lambda_1(u_p)) and continues as a rarefaction.
//!
//! `solve_s` handles V_c < V_f. It delegates to `solve_r` (run with the
//! congested cap raised to V_f) except where that solution would sweep
//! velocities in (V_c, V_f) outside the domain; there the offending
//! rarefaction is cut at v = V_c and bridged by a phase transition.

use crate::error::{Error, Result};
use crate::model::{Convexity, Level, ModelParams, Side, State, STATE_TOL};
use crate::wavefan::{Wave, WaveFan, WaveKind};

/// The 1-wave joining two states on one first-family Lax curve: a contact on
/// a linear curve, otherwise a shock when the jump is compressive for the
/// curve's convexity (concave: density up; convex: density down) and a
/// rarefaction in the opposite direction.
fn one_wave(p: &ModelParams, u_l: State, u_r: State) -> Result<Option<Wave>> {
    if u_l.dist(&u_r) <= STATE_TOL {
        return Ok(None);
    }
    let w = p.marker_raw(u_l);
    let kind = match p.curve_convexity(w) {
        Convexity::Linear => WaveKind::Contact { speed: p.rh_speed(u_l, u_r)? },
        Convexity::Concave if u_r.rho > u_l.rho => {
            WaveKind::Shock1 { speed: p.rh_speed(u_l, u_r)? }
        }
        Convexity::Convex if u_r.rho < u_l.rho => {
            WaveKind::Shock1 { speed: p.rh_speed(u_l, u_r)? }
        }
        _ => {
            let lo = p.lax_d1_raw(w, u_l.rho);
            let hi = p.lax_d1_raw(w, u_r.rho);
            WaveKind::Rarefaction1 { speed_lo: lo, speed_hi: hi.max(lo), w }
        }
    };
    Ok(Some(Wave { kind, left: u_l, right: u_r }))
}

fn contact(u_l: State, u_r: State, speed: f64) -> Option<Wave> {
    if u_l.dist(&u_r) <= STATE_TOL {
        None
    } else {
        Some(Wave { kind: WaveKind::Contact { speed }, left: u_l, right: u_r })
    }
}

fn phase_transition(p: &ModelParams, u_l: State, u_r: State) -> Result<Option<Wave>> {
    if u_l.dist(&u_r) <= STATE_TOL {
        return Ok(None);
    }
    Ok(Some(Wave {
        kind: WaveKind::PhaseTransition { speed: p.rh_speed(u_l, u_r)? },
        left: u_l,
        right: u_r,
    }))
}

/// Lax solution of the congested 2x2 system: 1-wave from u_l to
/// u_*(u_l, u_r), then a 2-contact at v(u_r).
pub fn lax_congested(p: &ModelParams, u_l: State, u_r: State) -> Result<WaveFan> {
    let mid = p.u_star(u_l, u_r)?;
    let mut waves = Vec::with_capacity(2);
    if let Some(w) = one_wave(p, u_l, mid)? {
        waves.push(w);
    }
    if let Some(w) = contact(mid, u_r, p.velocity_raw(u_r)) {
        waves.push(w);
    }
    Ok(WaveFan { waves, left_state: u_l, right_state: u_r })
}

/// The state u_p on the minus-marker curve where the chord from u_l attaches
/// tangentially: Lambda(u_l, u_p) = lambda_1(u_p). Bracketed on
/// [sigma_c_minus, rho(m)].
fn tangent_state(p: &ModelParams, u_l: State, m: State) -> Result<State> {
    let w = p.w_minus();
    let g = |rho: f64| {
        let u = p.state_on_curve(w, rho);
        (p.flux_raw(u) - p.flux_raw(u_l)) / (u.rho - u_l.rho) - p.lax_d1_raw(w, rho)
    };
    let mut lo = p.sigma_c_minus();
    let mut hi = m.rho;
    let (flo, fhi) = (g(lo), g(hi));
    if flo.signum() == fhi.signum() {
        return Err(Error::SolveFailure(format!(
            "tangency chord has no sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 {
            break;
        }
        if g(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(p.state_on_curve(w, 0.5 * (lo + hi)))
}

/// Riemann solver for intersecting phases (Omega_f and Omega_c overlap,
/// V_c = V_f).
pub fn solve_r(p: &ModelParams, u_l: State, u_r: State) -> Result<WaveFan> {
    if !p.is_intersecting() {
        return Err(Error::RequiresIntersecting("solve_r"));
    }
    let cl = p.classify(u_l);
    let cr = p.classify(u_r);
    if !cl.in_domain() {
        return Err(Error::OutOfDomain { rho: u_l.rho, q: u_l.q, context: "solve_r left state" });
    }
    if !cr.in_domain() {
        return Err(Error::OutOfDomain { rho: u_r.rho, q: u_r.q, context: "solve_r right state" });
    }
    let v = p.v_free();

    if cl.is_free() && cr.is_free() {
        // (R.1) contact at the free speed
        let waves = contact(u_l, u_r, v).into_iter().collect();
        return Ok(WaveFan { waves, left_state: u_l, right_state: u_r });
    }
    if cl.is_congested() && cr.is_congested() {
        // (R.2)
        return lax_congested(p, u_l, u_r);
    }
    if cl.is_congested_minus() && cr.is_free_minus() {
        // (R.3) 1-wave up to the free level, then a contact
        let mid = p.psi1(u_l, Level::Free)?;
        let mut waves = Vec::with_capacity(2);
        if let Some(w) = one_wave(p, u_l, mid)? {
            waves.push(w);
        }
        if let Some(w) = contact(mid, u_r, v) {
            waves.push(w);
        }
        return Ok(WaveFan { waves, left_state: u_l, right_state: u_r });
    }
    // remaining case: u_l in Omega_f^-, u_r in Omega_c^-
    debug_assert!(cl.is_free_minus() && cr.is_congested_minus());
    let m = p.psi2(u_r, Side::Minus)?;
    let mut waves = Vec::with_capacity(3);
    let lam_m = p.lax_d1_raw(p.w_minus(), m.rho);
    let chord = p.rh_speed(u_l, m)?;
    if chord >= lam_m {
        // (R.4) single phase transition onto the minus curve
        if let Some(w) = phase_transition(p, u_l, m)? {
            waves.push(w);
        }
    } else {
        // (R.5) transition attaches tangentially at u_p, then a rarefaction
        let up = tangent_state(p, u_l, m)?;
        if let Some(w) = phase_transition(p, u_l, up)? {
            waves.push(w);
        }
        if up.dist(&m) > STATE_TOL {
            let w_ = p.w_minus();
            let lo = p.lax_d1_raw(w_, up.rho);
            let hi = p.lax_d1_raw(w_, m.rho);
            waves.push(Wave {
                kind: WaveKind::Rarefaction1 { speed_lo: lo, speed_hi: hi.max(lo), w: w_ },
                left: up,
                right: m,
            });
        }
    }
    if let Some(w) = contact(m, u_r, p.velocity_raw(u_r)) {
        waves.push(w);
    }
    Ok(WaveFan { waves, left_state: u_l, right_state: u_r })
}

/// Riemann solver for non-intersecting phases (V_c < V_f).
pub fn solve_s(p: &ModelParams, u_l: State, u_r: State) -> Result<WaveFan> {
    if p.is_intersecting() {
        return Err(Error::RequiresDisjoint("solve_s"));
    }
    let pr = p.as_intersecting();
    let cl = p.classify(u_l);
    let cr = p.classify(u_r);
    if !cl.in_domain() {
        return Err(Error::OutOfDomain { rho: u_l.rho, q: u_l.q, context: "solve_s left state" });
    }
    if !cr.in_domain() {
        return Err(Error::OutOfDomain { rho: u_r.rho, q: u_r.q, context: "solve_s right state" });
    }

    if cl.is_free() && cr.is_free() || cl.is_congested() && cr.is_congested() {
        return solve_r(&pr, u_l, u_r);
    }

    if cl.is_congested() && cr.is_free() {
        let d2 = p.lax_d2_raw(p.marker_raw(u_l), u_l.rho);
        if d2 >= 0.0 {
            // (S.1) the 1-wave to the free level is a single shock
            return solve_r(&pr, u_l, u_r);
        }
        // (S.2) rarefaction only up to V_c, then a phase transition
        let mid_c = p.psi1(u_l, Level::Cong)?;
        let mid_f = p.psi1(u_l, Level::Free)?;
        let mut waves = solve_r(&pr, u_l, mid_c)?.waves;
        if let Some(w) = phase_transition(p, mid_c, mid_f)? {
            waves.push(w);
        }
        waves.extend(solve_r(&pr, mid_f, u_r)?.waves);
        return Ok(WaveFan { waves, left_state: u_l, right_state: u_r });
    }

    debug_assert!(cl.is_free() && cr.is_congested());
    if cl.is_free_minus() {
        let ucm = p.u_cong_min();
        let lam = p.lax_d1_raw(p.w_minus(), ucm.rho);
        let chord = p.rh_speed(u_l, ucm)?;
        if chord >= lam {
            return solve_r(&pr, u_l, u_r);
        }
        // (S.3) transition to the congested corner, then the congested solve
        let mut waves = phase_transition(p, u_l, ucm)?.into_iter().collect::<Vec<_>>();
        waves.extend(solve_r(&pr, ucm, u_r)?.waves);
        return Ok(WaveFan { waves, left_state: u_l, right_state: u_r });
    }
    let d2 = p.lax_d2_raw(p.marker_raw(u_l), u_l.rho);
    if d2 <= 0.0 {
        return solve_r(&pr, u_l, u_r);
    }
    // (S.4) jump down to V_c on the own curve, then the congested solve
    let mid = p.psi1(u_l, Level::Cong)?;
    let mut waves = phase_transition(p, u_l, mid)?.into_iter().collect::<Vec<_>>();
    waves.extend(solve_r(&pr, mid, u_r)?.waves);
    Ok(WaveFan { waves, left_state: u_l, right_state: u_r })
}

/// Dispatch on the phase topology of the model.
pub fn solve(p: &ModelParams, u_l: State, u_r: State) -> Result<WaveFan> {
    if p.is_intersecting() {
        solve_r(p, u_l, u_r)
    } else {
        solve_s(p, u_l, u_r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhaseClass;
    use crate::presets;
    use crate::wavefan::Bias;

    #[test]
    fn r1_two_free_states_join_by_a_contact() {
        let p = presets::pt0_tollgate();
        let a = p.free_state(0.05).unwrap();
        let b = p.free_state(0.25).unwrap();
        let fan = solve_r(&p, a, b).unwrap();
        assert_eq!(fan.waves.len(), 1);
        assert!(matches!(fan.waves[0].kind, WaveKind::Contact { speed } if (speed - 1.0).abs() < 1e-12));
        assert!(fan.check_admissible(&p).ok());
        // identical data: empty fan
        assert!(solve_r(&p, a, a).unwrap().waves.is_empty());
    }

    #[test]
    fn tollgate_initial_contact_is_stationary() {
        // the two stopped blocks join by a stationary 2-contact
        let p = presets::pt0_tollgate();
        let u1 = State::new(1.0, -0.4);
        let u2 = State::new(1.0, 0.3);
        let fan = solve_r(&p, u1, u2).unwrap();
        assert_eq!(fan.waves.len(), 1);
        match fan.waves[0].kind {
            WaveKind::Contact { speed } => assert!(speed.abs() < 1e-12),
            ref k => panic!("expected a contact, got {k:?}"),
        }
        assert!(fan.check_admissible(&p).ok());
    }

    #[test]
    fn one_wave_types_follow_curve_convexity() {
        let p = presets::pt0_tollgate();
        let f = 3.0 / 25.0;
        // concave curve w = 0.3, density decreasing: rarefaction
        let u2 = State::new(1.0, 0.3);
        let rho_hat2 = (-35.0 + 3385.0_f64.sqrt()) / 30.0;
        let hat2 = p.state_on_curve(0.3, rho_hat2);
        let fan = solve_r(&p, u2, hat2).unwrap();
        assert_eq!(fan.waves.len(), 1);
        match fan.waves[0].kind {
            WaveKind::Rarefaction1 { speed_lo, speed_hi, w } => {
                assert!((w - 0.3).abs() < 1e-12);
                assert!((speed_lo - (-39.0 / 70.0)).abs() < 1e-12);
                assert!((speed_hi - (-0.49869216712418936)).abs() < 1e-10);
            }
            ref k => panic!("expected a rarefaction, got {k:?}"),
        }
        assert!(fan.check_admissible(&p).ok());

        // convex curve w = -0.4, density decreasing: admissible shock
        let u1 = State::new(1.0, -0.4);
        let rho_hat1 = (35.0 - 505.0_f64.sqrt()) / 20.0;
        let hat1 = p.state_on_curve(-0.4, rho_hat1);
        let fan = solve_r(&p, u1, hat1).unwrap();
        assert_eq!(fan.waves.len(), 1);
        match fan.waves[0].kind {
            WaveKind::Shock1 { speed } => {
                let lam = f / (rho_hat1 - 1.0);
                assert!((speed - lam).abs() < 1e-12);
                assert!((speed - (-0.32119032903637913)).abs() < 1e-10, "{speed}");
            }
            ref k => panic!("expected a shock, got {k:?}"),
        }
        assert!(fan.check_admissible(&p).ok());
    }

    #[test]
    fn pressure_law_congested_pair_gives_rarefaction_and_contact() {
        let p = presets::ptp_intersecting();
        let w = 0.85;
        let u_l = p.state_on_curve(w, p.rho1_0(w).unwrap()); // v = 0
        let u_r = p.psi1(u_l, Level::Cong).unwrap(); // v = V_c on the same curve
        let fan = solve_r(&p, u_l, u_r).unwrap();
        assert_eq!(fan.waves.len(), 1, "2-contact degenerates");
        assert!(matches!(fan.waves[0].kind, WaveKind::Rarefaction1 { .. }));
        assert!(fan.check_admissible(&p).ok());
    }

    #[test]
    fn r5_tangent_transition_on_the_convex_minus_curve() {
        let p = presets::pt0_tollgate();
        let u_l = p.free_state(0.25).unwrap();
        let u_r = p.state_on_curve(-0.4, 0.98);
        // premise: the direct chord is steeper than the tangent
        let chord = p.rh_speed(u_l, u_r).unwrap();
        assert!(chord < p.lambda1(u_r).unwrap());
        let fan = solve_r(&p, u_l, u_r).unwrap();
        assert_eq!(fan.waves.len(), 2, "transition + rarefaction, contact degenerate");
        let up = fan.waves[0].right;
        match fan.waves[0].kind {
            WaveKind::PhaseTransition { speed } => {
                assert!(
                    (speed - p.lambda1(up).unwrap()).abs() < 1e-10,
                    "tangency defect {}",
                    speed - p.lambda1(up).unwrap()
                );
                assert!((speed - p.rh_speed(u_l, up).unwrap()).abs() < 1e-12);
            }
            ref k => panic!("expected a phase transition, got {k:?}"),
        }
        assert!(matches!(fan.waves[1].kind, WaveKind::Rarefaction1 { .. }));
        assert!(fan.check_admissible(&p).ok());
    }

    #[test]
    fn vacuum_left_state_always_takes_the_direct_transition() {
        let p = presets::pt0_tollgate();
        let u_r = State::new(1.0, -0.4);
        let fan = solve_r(&p, State::VACUUM, u_r).unwrap();
        assert_eq!(fan.waves.len(), 1);
        match fan.waves[0].kind {
            WaveKind::PhaseTransition { speed } => assert!(speed.abs() < 1e-12),
            ref k => panic!("expected a phase transition, got {k:?}"),
        }
    }

    #[test]
    fn s2_cuts_the_rarefaction_at_the_congested_cap() {
        let p = presets::ptp_disjoint();
        let w = 0.9;
        let u_l = p.state_on_curve(w, p.rho1_0(w).unwrap()); // v = 0, congested
        let u_r = p.free_state(0.1).unwrap();
        let fan = solve_s(&p, u_l, u_r).unwrap();
        assert_eq!(fan.waves.len(), 3);
        assert!(matches!(fan.waves[0].kind, WaveKind::Rarefaction1 { .. }));
        match fan.waves[1].kind {
            WaveKind::PhaseTransition { speed } => {
                // capacity drop makes the bridging transition move backwards
                assert!(speed < 0.0, "transition speed {speed}");
                let (_, hi) = fan.waves[0].speed_range();
                assert!(speed >= hi - 1e-12);
            }
            ref k => panic!("expected a phase transition, got {k:?}"),
        }
        assert!(matches!(fan.waves[2].kind, WaveKind::Contact { .. }));
        assert!(fan.check_admissible(&p).ok(), "{}", fan.check_admissible(&p));
        // the congested cap is respected along the whole profile
        for xi in [-0.5, -0.2, -0.05, 0.01, 0.05] {
            let u = fan.eval(&p, xi, Bias::Left);
            let c = p.classify(u);
            assert!(c.in_domain(), "state at xi={xi} leaves the domain");
        }
    }

    #[test]
    fn s3_condition_false_for_vacuum_left_state() {
        let p = presets::ptp_disjoint();
        let u_r = p.state_on_curve(1.0, p.rho1_0(1.0).unwrap());
        let ucm = p.u_cong_min();
        // Lambda((0,0), u_-^c) = v(u_-^c) = V_c > 0 > lambda_1
        assert!(p.rh_speed(State::VACUUM, ucm).unwrap() > p.lambda1(ucm).unwrap());
        let fan = solve_s(&p, State::VACUUM, u_r).unwrap();
        let pr = p.as_intersecting();
        let rfan = solve_r(&pr, State::VACUUM, u_r).unwrap();
        assert_eq!(fan, rfan);
    }

    #[test]
    fn s_matches_r_exactly_outside_the_special_sets() {
        let p = presets::pt0_disjoint();
        let pr = p.as_intersecting();
        // congested -> free on a convex curve (w < 0): S.1 applies
        let u_l = p.state_on_curve(-0.2, 0.9);
        let u_r = p.free_state(0.1).unwrap();
        assert!(p.lax_d2_raw(-0.2, 0.9) > 0.0);
        assert_eq!(solve_s(&p, u_l, u_r).unwrap(), solve_r(&pr, u_l, u_r).unwrap());
        // and differs on a concave curve (w > 0)
        let u_l = p.state_on_curve(0.2, 0.9);
        assert!(p.lax_d2_raw(0.2, 0.9) < 0.0);
        assert_ne!(solve_s(&p, u_l, u_r).unwrap(), solve_r(&pr, u_l, u_r).unwrap());
    }

    #[test]
    fn s4_jumps_to_the_cap_on_convex_curves() {
        let p = presets::pt0_disjoint();
        // free-plus left state on a convex curve (marker < 0)
        let rho_l = 0.29;
        let u_l = p.free_state(rho_l).unwrap();
        assert_eq!(p.classify(u_l), PhaseClass::FreePlus);
        assert!(p.marker(u_l).unwrap() < 0.0);
        let u_r = p.state_on_curve(0.1, 0.95);
        let fan = solve_s(&p, u_l, u_r).unwrap();
        assert!(matches!(fan.waves[0].kind, WaveKind::PhaseTransition { .. }));
        let mid = fan.waves[0].right;
        assert!((p.velocity(mid).unwrap() - p.v_cong()).abs() < 1e-10);
        assert!((p.marker(mid).unwrap() - p.marker(u_l).unwrap()).abs() < 1e-10);
        assert!(fan.check_admissible(&p).ok(), "{}", fan.check_admissible(&p));
    }

    #[test]
    fn solver_guards() {
        let p = presets::pt0_tollgate();
        assert!(matches!(
            solve_s(&p, State::VACUUM, State::VACUUM),
            Err(crate::Error::RequiresDisjoint(_))
        ));
        let pd = presets::pt0_disjoint();
        assert!(matches!(
            solve_r(&pd, State::VACUUM, State::VACUUM),
            Err(crate::Error::RequiresIntersecting(_))
        ));
        assert!(solve_r(&p, State::new(0.5, 9.0), State::VACUUM).is_err());
    }
}
