//! Riemann solvers under a point constraint f(u(t, 0±)) <= F.
//!
//! When the unconstrained solution already respects the gate capacity (the
//! pair is in D1) it is kept; otherwise (D2) the solution is split into a
//! left fan reaching a state u_hat, an undercompressive stationary jump
//! u_hat -> u_check at x = 0, and a right fan leaving from u_check, with
//! f(u_hat) = f(u_check) pinned to the capacity (or, for the disjoint-phase
//! solver, to the largest congested flux available on the marker curve).

use crate::error::{Error, Result};
use crate::model::{Level, ModelParams, Side, State, STATE_TOL};
use crate::riemann::{solve_r, solve_s};
use crate::wavefan::{Wave, WaveFan, WaveKind};

/// Gate capacity; admissible range (0, V_f sigma_f_plus).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub f: f64,
}

impl Constraint {
    pub fn new(p: &ModelParams, f: f64) -> Result<Self> {
        if f > 0.0 && f < p.max_constraint() {
            Ok(Constraint { f })
        } else {
            Err(Error::ConstraintRange(f))
        }
    }
}

/// Which solver family the constrained classification refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    R,
    S,
}

/// D1: the unconstrained solution satisfies the constraint; D2: it does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DClass {
    D1,
    D2,
}

/// A constrained Riemann solution: the classification, the gate states, and
/// the two half-line fans.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSplit {
    pub classification: DClass,
    pub u_hat: State,
    pub u_check: State,
    pub left_fan: WaveFan,
    pub right_fan: WaveFan,
}

impl ConstrainedSplit {
    /// The full profile on the line: left fan, the stationary jump (emitted
    /// in D2 unless u_hat = u_check to within 1e-12), right fan.
    pub fn combined(&self) -> WaveFan {
        let mut waves = self.left_fan.waves.clone();
        if self.classification == DClass::D2 && self.u_hat.dist(&self.u_check) > STATE_TOL {
            waves.push(Wave {
                kind: WaveKind::StationaryJump,
                left: self.u_hat,
                right: self.u_check,
            });
        }
        waves.extend(self.right_fan.waves.iter().cloned());
        WaveFan {
            waves,
            left_state: self.left_fan.left_state,
            right_state: self.right_fan.right_state,
        }
    }
}

fn check_states(p: &ModelParams, u_l: State, u_r: State, context: &'static str) -> Result<()> {
    if !p.classify(u_l).in_domain() {
        return Err(Error::OutOfDomain { rho: u_l.rho, q: u_l.q, context });
    }
    if !p.classify(u_r).in_domain() {
        return Err(Error::OutOfDomain { rho: u_r.rho, q: u_r.q, context });
    }
    Ok(())
}

/// Classify a pair against the explicit D1 unions for the given family.
pub fn classify_d(
    p: &ModelParams,
    f: f64,
    u_l: State,
    u_r: State,
    family: Family,
) -> Result<DClass> {
    check_states(p, u_l, u_r, "classify_d")?;
    let cl = p.classify(u_l);
    let cr = p.classify(u_r);
    let in_d1 = if cl.is_free() && cr.is_free() {
        p.flux_raw(u_l) <= f
    } else if cl.is_congested() && cr.is_congested() {
        p.flux_raw(p.u_star(u_l, u_r)?) <= f
    } else if cl.is_congested() && cr.is_free() {
        match family {
            // intersecting phases only pair Omega_c^- with Omega_f^-
            Family::R => p.flux_raw(p.psi1(u_l, Level::Cong)?) <= f,
            Family::S => p.flux_raw(p.psi1(u_l, Level::Free)?) <= f,
        }
    } else if cl.is_free_minus() && cr.is_congested() {
        let m = p.psi2(u_r, Side::Minus)?;
        p.flux_raw(u_l).min(p.flux_raw(m)) <= f
    } else {
        // free-plus left against congested right (disjoint phases)
        debug_assert!(cl.is_free_plus() && cr.is_congested());
        p.flux_raw(p.u_star(u_l, u_r)?) <= f
    };
    Ok(if in_d1 { DClass::D1 } else { DClass::D2 })
}

/// The D2 gate states for the intersecting-phase solver: u_hat on the Lax
/// curve of marker max{w(u_l), w_minus} with f(u_hat) = F; u_check with
/// f = F, at the free speed if the minus-curve flux at v(u_r) exceeds F and
/// at v(u_r) otherwise.
pub fn select_hat_check_r(
    p: &ModelParams,
    f: f64,
    u_l: State,
    u_r: State,
) -> Result<(State, State)> {
    if !p.is_intersecting() {
        return Err(Error::RequiresIntersecting("select_hat_check_r"));
    }
    let w_hat = p.marker_raw(u_l).max(p.w_minus());
    let rho_hat = p.rho_at_flux_on_curve(
        w_hat,
        f,
        p.rho_at_velocity_on_curve(w_hat, p.v_free())?,
        p.rho1_0_raw(w_hat),
    )?;
    let u_hat = p.state_on_curve(w_hat, rho_hat);

    let m = p.psi2(u_r, Side::Minus)?;
    let u_check = if p.flux_raw(m) > f {
        p.free_state(f / p.v_free())?
    } else {
        let v_r = p.velocity_raw(u_r);
        if v_r <= 0.0 {
            return Err(Error::SolveFailure(
                "check state needs a positive right velocity".into(),
            ));
        }
        p.state_with_velocity(f / v_r, v_r)
    };
    Ok((u_hat, u_check))
}

/// The D2 gate states for the disjoint-phase solver: the target flux is
/// capped by the largest flux available on the marker curve inside Omega_c
/// (attained at v = V_c).
pub fn select_hat_check_s(
    p: &ModelParams,
    f: f64,
    u_l: State,
    u_r: State,
) -> Result<(State, State)> {
    if p.is_intersecting() {
        return Err(Error::RequiresDisjoint("select_hat_check_s"));
    }
    let w_hat = p.marker_raw(u_l).max(p.w_minus());
    let rho_cap = p.rho_at_velocity_on_curve(w_hat, p.v_cong())?;
    let f_cap = p.lax_value_raw(w_hat, rho_cap);
    let f_eff = f.min(f_cap);
    let rho_hat = p.rho_at_flux_on_curve(w_hat, f_eff, rho_cap, p.rho1_0_raw(w_hat))?;
    let u_hat = p.state_on_curve(w_hat, rho_hat);

    let m = p.psi2(u_r, Side::Minus)?;
    // the branch condition is written with F itself, not with f(u_hat)
    let u_check = if p.flux_raw(m) > f {
        p.free_state(f_eff / p.v_free())?
    } else {
        let v_r = p.velocity_raw(u_r);
        if v_r <= 0.0 {
            return Err(Error::SolveFailure(
                "check state needs a positive right velocity".into(),
            ));
        }
        p.state_with_velocity(f_eff / v_r, v_r)
    };
    Ok((u_hat, u_check))
}

/// Split an unconstrained fan at xi = 0 (D1 case). Zero-speed waves go left.
fn split_at_zero(p: &ModelParams, fan: WaveFan) -> (WaveFan, WaveFan, State, State) {
    let u_hat = fan.trace_minus(p);
    let u_check = fan.trace_plus(p);
    let left_state = fan.left_state;
    let right_state = fan.right_state;
    let (left, right): (Vec<Wave>, Vec<Wave>) =
        fan.waves.into_iter().partition(|w| w.speed_range().1 <= 0.0);
    let left_fan = WaveFan {
        left_state,
        right_state: left.last().map_or(left_state, |w| w.right),
        waves: left,
    };
    let right_fan = WaveFan {
        left_state: right.first().map_or(right_state, |w| w.left),
        right_state,
        waves: right,
    };
    (left_fan, right_fan, u_hat, u_check)
}

fn assert_split_speeds(left: &WaveFan, right: &WaveFan) -> Result<()> {
    if let Some(hi) = left.max_speed() {
        if hi > 1e-9 {
            return Err(Error::SolveFailure(format!(
                "left fan has a positive speed {hi}"
            )));
        }
    }
    if let Some(lo) = right.min_speed() {
        if lo < -1e-9 {
            return Err(Error::SolveFailure(format!(
                "right fan has a negative speed {lo}"
            )));
        }
    }
    Ok(())
}

/// Constrained solver for intersecting phases.
pub fn solve_rf(p: &ModelParams, f: f64, u_l: State, u_r: State) -> Result<ConstrainedSplit> {
    if !p.is_intersecting() {
        return Err(Error::RequiresIntersecting("solve_rf"));
    }
    Constraint::new(p, f)?;
    check_states(p, u_l, u_r, "solve_rf")?;
    match classify_d(p, f, u_l, u_r, Family::R)? {
        DClass::D1 => {
            let (left_fan, right_fan, u_hat, u_check) = split_at_zero(p, solve_r(p, u_l, u_r)?);
            Ok(ConstrainedSplit { classification: DClass::D1, u_hat, u_check, left_fan, right_fan })
        }
        DClass::D2 => {
            let (u_hat, u_check) = select_hat_check_r(p, f, u_l, u_r)?;
            let left_fan = solve_r(p, u_l, u_hat)?;
            let right_fan = solve_r(p, u_check, u_r)?;
            assert_split_speeds(&left_fan, &right_fan)?;
            Ok(ConstrainedSplit { classification: DClass::D2, u_hat, u_check, left_fan, right_fan })
        }
    }
}

/// Constrained solver for non-intersecting phases.
pub fn solve_sf(p: &ModelParams, f: f64, u_l: State, u_r: State) -> Result<ConstrainedSplit> {
    if p.is_intersecting() {
        return Err(Error::RequiresDisjoint("solve_sf"));
    }
    Constraint::new(p, f)?;
    check_states(p, u_l, u_r, "solve_sf")?;
    match classify_d(p, f, u_l, u_r, Family::S)? {
        DClass::D1 => {
            let (left_fan, right_fan, u_hat, u_check) = split_at_zero(p, solve_s(p, u_l, u_r)?);
            Ok(ConstrainedSplit { classification: DClass::D1, u_hat, u_check, left_fan, right_fan })
        }
        DClass::D2 => {
            let (u_hat, u_check) = select_hat_check_s(p, f, u_l, u_r)?;
            let left_fan = solve_s(p, u_l, u_hat)?;
            let right_fan = solve_s(p, u_check, u_r)?;
            assert_split_speeds(&left_fan, &right_fan)?;
            Ok(ConstrainedSplit { classification: DClass::D2, u_hat, u_check, left_fan, right_fan })
        }
    }
}

/// Dispatch on the phase topology of the model.
pub fn solve_constrained(
    p: &ModelParams,
    f: f64,
    u_l: State,
    u_r: State,
) -> Result<ConstrainedSplit> {
    if p.is_intersecting() {
        solve_rf(p, f, u_l, u_r)
    } else {
        solve_sf(p, f, u_l, u_r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::wavefan::Bias;

    const F: f64 = 3.0 / 25.0;

    #[test]
    fn d_classification_examples() {
        let p = presets::pt0_tollgate();
        // two free states below capacity
        let a = p.free_state(0.05).unwrap();
        let b = p.free_state(0.2).unwrap();
        assert_eq!(classify_d(&p, F, a, b, Family::R).unwrap(), DClass::D1);
        // the gate pair of the toll example carries flux above F
        let u2 = State::new(1.0, 0.3);
        assert_eq!(classify_d(&p, F, u2, State::VACUUM, Family::R).unwrap(), DClass::D2);
        // zero unconstrained gate flux
        let stopped = State::new(1.0, 0.3);
        assert_eq!(classify_d(&p, F, stopped, stopped, Family::R).unwrap(), DClass::D1);
    }

    #[test]
    fn hat_and_check_states_of_the_tollgate() {
        let p = presets::pt0_tollgate();
        let u1 = State::new(1.0, -0.4);
        let u2 = State::new(1.0, 0.3);

        // frozen from the quadratic oracles 15r^2+35r-36=0 and 10r^2-35r+18=0
        let (hat2, check) = select_hat_check_r(&p, F, u2, State::VACUUM).unwrap();
        assert!((hat2.rho - 0.77269176103851417).abs() < 1e-12, "{}", hat2.rho);
        assert!((hat2.q - 0.23180752831155425).abs() < 1e-12);
        assert!((check.rho - 0.12).abs() < 1e-13);
        assert!((check.q - (-0.68181818181818182)).abs() < 1e-13);
        assert!((p.velocity(check).unwrap() - 1.0).abs() < 1e-12);

        let (hat1, _) = select_hat_check_r(&p, F, u1, check).unwrap();
        assert!((hat1.rho - 0.62638974728778841).abs() < 1e-12, "{}", hat1.rho);
        assert!((hat1.q - (-0.25055589891511536)).abs() < 1e-12);

        for hat in [hat2, hat1] {
            assert!((p.flux(hat).unwrap() - F).abs() < 1e-12);
        }
    }

    #[test]
    fn tollgate_gate_split() {
        let p = presets::pt0_tollgate();
        let u2 = State::new(1.0, 0.3);
        let split = solve_rf(&p, F, u2, State::VACUUM).unwrap();
        assert_eq!(split.classification, DClass::D2);
        let fan = split.combined();
        assert_eq!(fan.waves.len(), 3);
        assert!(matches!(fan.waves[0].kind, WaveKind::Rarefaction1 { .. }));
        assert!(matches!(fan.waves[1].kind, WaveKind::StationaryJump));
        assert!(
            matches!(fan.waves[2].kind, WaveKind::Contact { speed } if (speed - 1.0).abs() < 1e-12)
        );
        // traces satisfy the constraint with equality
        assert!((p.flux(fan.trace_minus(&p)).unwrap() - F).abs() < 1e-12);
        assert!((p.flux(fan.trace_plus(&p)).unwrap() - F).abs() < 1e-12);
        assert!(fan.check_admissible(&p).ok(), "{}", fan.check_admissible(&p));
    }

    #[test]
    fn d1_split_reproduces_the_unconstrained_fan() {
        let p = presets::pt0_tollgate();
        let a = p.free_state(0.05).unwrap();
        let b = p.free_state(0.2).unwrap();
        let split = solve_rf(&p, F, a, b).unwrap();
        assert_eq!(split.classification, DClass::D1);
        let fan = split.combined();
        assert_eq!(fan, crate::riemann::solve_r(&p, a, b).unwrap());
        for xi in [-1.0, 0.0, 0.5, 1.5] {
            assert_eq!(
                fan.eval(&p, xi, Bias::Left),
                crate::riemann::solve_r(&p, a, b).unwrap().eval(&p, xi, Bias::Left)
            );
        }
    }

    #[test]
    fn check_state_keeps_the_right_velocity_when_the_minus_flux_is_low() {
        let p = presets::pt0_tollgate();
        let u_l = State::new(1.0, 0.3);
        let v_r = 0.16;
        let u_r = p.state_on_curve(0.0, p.rho_at_velocity_on_curve(0.0, v_r).unwrap());
        // membership in the intended branch
        let m = p.psi2(u_r, Side::Minus).unwrap();
        assert!(p.flux(m).unwrap() <= F);
        assert_eq!(classify_d(&p, F, u_l, u_r, Family::R).unwrap(), DClass::D2);
        let split = solve_rf(&p, F, u_l, u_r).unwrap();
        assert!((p.velocity(split.u_check).unwrap() - v_r).abs() < 1e-10);
        assert!((p.flux(split.u_check).unwrap() - F).abs() < 1e-12);
        // the right fan is then a single 2-contact
        assert_eq!(split.right_fan.waves.len(), 1);
        assert!(matches!(split.right_fan.waves[0].kind, WaveKind::Contact { .. }));
    }

    #[test]
    fn sf_caps_the_flux_at_the_congested_maximum() {
        // case with u_l free-minus, u_r free and F in (f(u_-^c), f(u_l)):
        // f(u_hat) = f(u_check) < F and v(u_hat) = V_c
        let p = presets::ptp_disjoint();
        let f_corner = p.flux(p.u_cong_min()).unwrap();
        let f = 0.5 * (f_corner + p.v_free() * p.sigma_f_minus());
        let u_l = p.free_state(0.5 * (f / p.v_free() + p.sigma_f_minus())).unwrap();
        assert!(p.classify(u_l).is_free_minus(), "test setup: {:?}", p.classify(u_l));
        assert!(p.flux(u_l).unwrap() > f);
        let u_r = p.free_state(0.1).unwrap();
        let split = solve_sf(&p, f, u_l, u_r).unwrap();
        assert_eq!(split.classification, DClass::D2);
        assert!((p.velocity(split.u_hat).unwrap() - p.v_cong()).abs() < 1e-10);
        let fh = p.flux(split.u_hat).unwrap();
        let fc = p.flux(split.u_check).unwrap();
        assert!((fh - fc).abs() < 1e-10);
        assert!(fh < f && (fh - f_corner).abs() < 1e-10);
        let fan = split.combined();
        assert!(fan.check_admissible(&p).ok(), "{}", fan.check_admissible(&p));
    }

    #[test]
    fn sf_matches_rf_selection_when_the_cap_is_inactive() {
        let p = presets::ptp_disjoint();
        let f = 0.8 * p.flux(p.u_cong_min()).unwrap();
        let u_l = p.free_state(0.38).unwrap();
        let u_r = p.free_state(0.05).unwrap();
        assert!(p.flux(u_l).unwrap() > f);
        let (hat_s, check_s) = select_hat_check_s(&p, f, u_l, u_r).unwrap();
        let pr = p.as_intersecting();
        let (hat_r, check_r) = select_hat_check_r(&pr, f, u_l, u_r).unwrap();
        assert!(hat_s.dist(&hat_r) < 1e-10);
        assert!(check_s.dist(&check_r) < 1e-10);
        assert!((p.flux(hat_s).unwrap() - f).abs() < 1e-10);
    }

    #[test]
    fn constraint_range_is_enforced() {
        let p = presets::pt0_tollgate();
        assert!(matches!(
            solve_rf(&p, 0.0, State::VACUUM, State::VACUUM),
            Err(Error::ConstraintRange(_))
        ));
        assert!(matches!(
            solve_rf(&p, p.max_constraint() + 0.01, State::VACUUM, State::VACUUM),
            Err(Error::ConstraintRange(_))
        ));
    }
}
