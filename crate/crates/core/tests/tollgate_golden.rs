//! Golden reproduction of the toll-gate example (curvature law with a = 0,
//! R = 1, sigma = 3/10, V = 1, markers -2/5 and 3/10, gate capacity 3/25,
//! blocks on (-5, -1) and (-1, 0)).
//!
//! Every expected number below comes from test-local closed forms for this
//! model: L_w(r) = (3/7)(1-r)(1+w r), Q(r) = (r - 3/10)/((3/10)(1-r)), and
//! plain bisection on those expressions — independent of the library's
//! solution path.

use twophase::constrained::{select_hat_check_r, solve_rf, DClass};
use twophase::model::State;
use twophase::presets;
use twophase::wavefan::{Bias, WaveKind};
use twophase::wft::{toll_gate_milestones, SimConfig, Simulation};

const F: f64 = 3.0 / 25.0;
const X1: f64 = -5.0;
const X2: f64 = -1.0;

// --- test-local oracle ----------------------------------------------------------

fn lax(w: f64, r: f64) -> f64 {
    (3.0 / 7.0) * (1.0 - r) * (1.0 + w * r)
}

fn lax_d1(w: f64, r: f64) -> f64 {
    (3.0 / 7.0) * (w - 1.0 - 2.0 * w * r)
}

fn q_free(r: f64) -> f64 {
    (r - 0.3) / (0.3 * (1.0 - r))
}

/// Bisection for g strictly decreasing with g(lo) > 0 > g(hi).
fn bisect_dec(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Oracle {
    rho_hat2: f64,
    rho_hat1: f64,
    u_check: (f64, f64),
    rho_star: f64,
    v_hat2: f64,
    lam_s1: f64,
    t_a1: f64,
    t_a6: f64,
}

fn oracle() -> Oracle {
    // roots of the quadratics L_w(r) = F: 15r^2 + 35r - 36 = 0 (w = 3/10)
    // and 10r^2 - 35r + 18 = 0 (w = -2/5)
    let rho_hat2 = (-35.0 + 3385.0_f64.sqrt()) / 30.0;
    let rho_hat1 = (35.0 - 505.0_f64.sqrt()) / 20.0;
    assert!((lax(0.3, rho_hat2) - F).abs() < 1e-15);
    assert!((lax(-0.4, rho_hat1) - F).abs() < 1e-15);
    let v_hat2 = F / rho_hat2;
    // u_* : w = -2/5 and v = v(hat u_2), by bisection of the curve velocity
    let rho_star = bisect_dec(1e-6, 1.0, |r| lax(-0.4, r) / r - v_hat2);
    let lam_s1 = F / (rho_hat2 - 1.0);
    Oracle {
        rho_hat2,
        rho_hat1,
        u_check: (F, q_free(F)),
        rho_star,
        v_hat2,
        lam_s1,
        t_a1: X2 / lam_s1,
        t_a6: -X1 / F,
    }
}

// --- analytic pipeline ----------------------------------------------------------

#[test]
fn analytic_gate_values_match_the_oracles() {
    let started = std::time::Instant::now();
    let p = presets::pt0_tollgate();
    let g = presets::tollgate_scenario();
    let orc = oracle();

    let (hat2, check) = select_hat_check_r(&p, F, g.u2, State::VACUUM).unwrap();
    assert!((hat2.rho - orc.rho_hat2).abs() < 1e-10, "{} vs {}", hat2.rho, orc.rho_hat2);
    assert!((hat2.q - 0.3 * orc.rho_hat2).abs() < 1e-10);
    assert!((check.rho - orc.u_check.0).abs() < 1e-10);
    assert!((check.q - orc.u_check.1).abs() < 1e-10);

    let (hat1, _) = select_hat_check_r(&p, F, g.u1, check).unwrap();
    assert!((hat1.rho - orc.rho_hat1).abs() < 1e-10, "{} vs {}", hat1.rho, orc.rho_hat1);

    let star = p.u_star(g.u1, hat2).unwrap();
    assert!((star.rho - orc.rho_star).abs() < 1e-10, "{} vs {}", star.rho, orc.rho_star);
    assert!((p.velocity(star).unwrap() - orc.v_hat2).abs() < 1e-10);

    let lam = p.rh_speed(g.u2, hat2).unwrap();
    assert!((lam - orc.lam_s1).abs() < 1e-10, "{lam} vs {}", orc.lam_s1);
    let t_a1 = X2 / lam;
    assert!((t_a1 - orc.t_a1).abs() < 1e-10);
    assert!((orc.t_a6 - 125.0 / 3.0).abs() < 1e-14);

    // frozen oracle digits (mpmath, 30 significant digits)
    assert!((orc.rho_hat2 - 0.77269176103851417).abs() < 1e-14);
    assert!((orc.rho_hat1 - 0.62638974728778841).abs() < 1e-14);
    assert!((orc.rho_star - 0.66899930032855211).abs() < 1e-12);
    assert!((orc.lam_s1 - (-0.52791751213352325)).abs() < 1e-14);
    assert!((orc.t_a1 - 1.8942353246790486).abs() < 1e-13);
    assert!((lax_d1(-0.4, 1.0) - (-9.0 / 35.0)).abs() < 1e-16);

    assert!(started.elapsed().as_secs_f64() < 1.0, "analytic pipeline too slow");
}

#[test]
fn gate_split_record_matches_the_golden_file() {
    let p = presets::pt0_tollgate();
    let g = presets::tollgate_scenario();
    let split = solve_rf(&p, F, g.u2, State::VACUUM).unwrap();
    assert_eq!(split.classification, DClass::D2);
    let fan = split.combined();
    // evaluated at the gate, the split exposes the capacity pair
    assert!(fan.trace_minus(&p).dist(&split.u_hat) < 1e-10);
    assert!(fan.trace_plus(&p).dist(&split.u_check) < 1e-10);
    assert!(fan.eval(&p, -1e-12, Bias::Left).dist(&split.u_hat) < 1e-10);
    let golden = include_str!("golden/tollgate_gate_record.txt");
    assert_eq!(fan.to_record(), golden, "line-oriented record drifted");
}

// --- simulation -----------------------------------------------------------------

fn run_tollgate(delta_v: f64) -> twophase::wft::SimTrace {
    let p = presets::pt0_tollgate();
    let g = presets::tollgate_scenario();
    let cfg = SimConfig::new(
        vec![(g.x1, g.x2, g.u1), (g.x2, 0.0, g.u2)],
        Some(g.f),
        50.0,
        delta_v,
    );
    Simulation::run(&p, cfg).unwrap()
}

#[test]
fn simulation_reproduces_the_toll_gate_cascade() {
    let p = presets::pt0_tollgate();
    let orc = oracle();
    let trace = run_tollgate(1e-3);

    // initial pattern: two stationary fronts away from the gate and the
    // split (rarefaction fan, stationary jump, forward contact) at it
    let initial: Vec<_> = trace.front_log.iter().filter(|m| m.born_event == 0).collect();
    assert!(initial.iter().any(|m| (m.x0 - X1).abs() < 1e-12 && m.speed.abs() < 1e-12));
    assert!(initial.iter().any(|m| (m.x0 - X2).abs() < 1e-12 && m.speed.abs() < 1e-12));
    assert!(initial
        .iter()
        .any(|m| m.x0.abs() < 1e-12 && matches!(m.kind, twophase::wft::FrontKind::StationaryJump)));
    assert!(initial
        .iter()
        .any(|m| m.x0.abs() < 1e-12 && m.speed == 1.0));
    let n_raref = initial
        .iter()
        .filter(|m| matches!(m.kind, twophase::wft::FrontKind::Rarefaction))
        .count();
    assert_eq!(n_raref, (orc.v_hat2 / 1e-3).ceil() as usize);

    // the six macro-interactions, in the paper's temporal order
    let ms = toll_gate_milestones(&trace).unwrap();
    let find = |label: &str| ms.iter().find(|m| m.label == label).unwrap();
    let (a1, a4, a2, a3, a5, a6) =
        (find("a1"), find("a4"), find("a2"), find("a3"), find("a5"), find("a6"));
    assert!(a1.t < a4.t && a4.t < a2.t && a2.t <= a3.t && a3.t < a5.t && a5.t < a6.t);
    // with the stated block data the compression train reaches the tail
    // fully merged, so a2 and a3 coincide
    assert_eq!(a2.event_index, a3.event_index);
    assert!((a6.t - orc.t_a6).abs() <= 0.01 * orc.t_a6, "t_a6 = {}", a6.t);
    assert!((a6.x).abs() < 1e-9);
    // the first collision is the rarefaction edge reaching the contact:
    // x2 / lambda_1(u2) = 70/39, approached first-order in delta_v
    assert!((a1.t - 70.0 / 39.0).abs() < 5e-3, "t_a1 = {}", a1.t);

    // gate flux stays pinned at the capacity until the queue clears
    for (t, fm, fp) in &trace.gate_flux {
        if *t > 1e-9 && *t < a6.t - 1e-9 {
            assert!((fm - F).abs() <= 1e-10, "f(0-) = {fm} at t = {t}");
            assert!((fp - F).abs() <= 1e-10, "f(0+) = {fp} at t = {t}");
        }
        if *t >= a6.t {
            assert!(fm.abs() <= 1e-10 && fp.abs() <= 1e-10);
        }
    }

    // mass bookkeeping: 4 + 1 vehicles initially, conserved to roundoff
    assert!((trace.mass[0].1 - 5.0).abs() < 1e-12);
    assert!(trace.mass_drift() < 1e-6, "drift {}", trace.mass_drift());

    // every front that ever lived satisfies Rankine-Hugoniot to 1e-10
    for e in &trace.events {
        for f in &e.incoming {
            let res = f.speed * (f.right.rho - f.left.rho)
                - (p.flux(f.right).unwrap() - p.flux(f.left).unwrap());
            assert!(res.abs() < 1e-10, "front {} residual {res}", f.id);
        }
    }
    for f in &trace.final_fronts {
        assert!(f.rh_residual(&p).abs() < 1e-10);
    }

    // no front blow-up
    assert!(trace.max_fronts < 1000, "max fronts {}", trace.max_fronts);
    assert!(trace.quiescent);
}

#[test]
fn event_times_converge_first_order_in_delta_v() {
    let t_of = |trace: &twophase::wft::SimTrace, label: &str| {
        toll_gate_milestones(trace)
            .unwrap()
            .into_iter()
            .find(|m| m.label == label)
            .unwrap()
            .t
    };
    let traces: Vec<_> = [4e-3, 2e-3, 1e-3, 5e-4].iter().map(|&dv| run_tollgate(dv)).collect();
    // Richardson limit for a first-order method from the two finest runs
    let t1 = [
        t_of(&traces[0], "a1"),
        t_of(&traces[1], "a1"),
        t_of(&traces[2], "a1"),
        t_of(&traces[3], "a1"),
    ];
    let limit = 2.0 * t1[3] - t1[2];
    let dev: Vec<f64> = t1.iter().map(|t| (t - limit).abs()).collect();
    assert!(dev[1] <= 0.65 * dev[0] + 1e-12, "a1 deviations {dev:?}");
    assert!(dev[2] <= 0.65 * dev[1] + 1e-12, "a1 deviations {dev:?}");
    // the limit is the rarefaction edge arrival time x2/lambda1(u2)
    assert!((limit - 70.0 / 39.0).abs() < 1e-4, "limit {limit}");

    // the conservation-pinned macro times are already exact at every
    // resolution, so halving the step keeps them within roundoff
    for label in ["a2", "a4", "a5", "a6"] {
        let ts: Vec<f64> = traces.iter().map(|tr| t_of(tr, label)).collect();
        for pair in ts.windows(2) {
            assert!(
                (pair[1] - pair[0]).abs() <= (pair[0] - ts[3]).abs().max(1e-8),
                "{label} times {ts:?}"
            );
        }
    }
}
