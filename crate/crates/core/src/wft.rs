//! Wave-front tracking for piecewise-constant initial data, with an optional
//! flux constraint at x = 0.
//!
//! Every front is an exact jump between two model states propagated at its
//! Rankine-Hugoniot speed; rarefactions are discretized at creation into
//! fronts of velocity jump at most `delta_v`. The evolution advances from
//! collision to collision: the earliest front-front collision (or front-gate
//! crossing) is resolved by the exact Riemann solver — the constrained one at
//! the gate — and the incoming fronts are replaced by the outgoing fan. Mass
//! bookkeeping integrates the density over a fixed window together with the
//! exact boundary-flux integral, so any drift is pure roundoff.

use crate::constrained::solve_constrained;
use crate::error::{Error, Result};
use crate::model::{ModelParams, State, STATE_TOL};
use crate::riemann::solve;
use crate::wavefan::{WaveFan, WaveKind};

/// Positions closer than this coincide (collision clustering).
const POS_TOL: f64 = 1e-11;
/// A collision point within this distance of the origin is a gate event.
const GATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontKind {
    Contact,
    Shock,
    Rarefaction,
    PhaseTransition,
    StationaryJump,
}

impl FrontKind {
    pub fn label(&self) -> &'static str {
        match self {
            FrontKind::Contact => "contact",
            FrontKind::Shock => "shock1",
            FrontKind::Rarefaction => "rarefaction1",
            FrontKind::PhaseTransition => "phase_transition",
            FrontKind::StationaryJump => "stationary_jump",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Front {
    pub id: u64,
    pub pos: f64,
    pub speed: f64,
    pub left: State,
    pub right: State,
    pub kind: FrontKind,
    pub born_event: usize,
}

impl Front {
    /// Rankine-Hugoniot defect of the stored speed.
    pub fn rh_residual(&self, p: &ModelParams) -> f64 {
        self.speed * (self.right.rho - self.left.rho)
            - (p.flux_raw(self.right) - p.flux_raw(self.left))
    }
}

/// Simulation setup: initial blocks (contiguous; vacuum outside), optional
/// gate capacity at x = 0, horizon, rarefaction resolution, and output
/// cadence.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub initial: Vec<(f64, f64, State)>,
    pub gate: Option<f64>,
    pub t_end: f64,
    pub delta_v: f64,
    pub cadence: f64,
    pub profile_points: usize,
    pub max_events: usize,
}

impl SimConfig {
    pub fn new(
        initial: Vec<(f64, f64, State)>,
        gate: Option<f64>,
        t_end: f64,
        delta_v: f64,
    ) -> Self {
        SimConfig {
            initial,
            gate,
            t_end,
            delta_v,
            cadence: 0.0,
            profile_points: 400,
            max_events: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FrontSnapshot {
    pub id: u64,
    pub kind: FrontKind,
    pub left: State,
    pub right: State,
    pub speed: f64,
    pub born_event: usize,
}

#[derive(Debug, Clone)]
pub struct EventRecord {
    pub index: usize,
    pub t: f64,
    pub x: f64,
    pub at_gate: bool,
    pub incoming: Vec<FrontSnapshot>,
    pub out_ids: Vec<u64>,
}

/// Birth/death bookkeeping for one front (its trajectory is the segment from
/// the birth point at the stored speed until death or the horizon).
#[derive(Debug, Clone, Copy)]
pub struct FrontMeta {
    pub id: u64,
    pub kind: FrontKind,
    pub born_event: usize,
    pub t0: f64,
    pub x0: f64,
    pub speed: f64,
    pub death: Option<(usize, f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileRow {
    pub t: f64,
    pub x: f64,
    pub rho: f64,
    pub q: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub events: Vec<EventRecord>,
    /// (t, f(0-), f(0+)) after initialization and after every event.
    pub gate_flux: Vec<(f64, f64, f64)>,
    /// (t, window mass, cumulative net outflux); their sum is conserved.
    pub mass: Vec<(f64, f64, f64)>,
    pub profiles: Vec<ProfileRow>,
    pub front_log: Vec<FrontMeta>,
    pub final_fronts: Vec<Front>,
    pub final_time: f64,
    pub quiescent: bool,
    pub max_fronts: usize,
}

impl SimTrace {
    /// Largest relative defect of mass + cumulative outflux over the run.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass.first().map(|r| r.1 + r.2).unwrap_or(0.0);
        self.mass.iter().map(|r| (r.1 + r.2 - m0).abs()).fold(0.0, f64::max) / m0.abs().max(1.0)
    }
}

pub struct Simulation {
    p: ModelParams,
    cfg: SimConfig,
    pub t: f64,
    pub fronts: Vec<Front>,
    next_id: u64,
    window: (f64, f64),
    cum_outflux: f64,
    trace: SimTrace,
    next_cadence: f64,
    profile_xs: Vec<f64>,
}

/// Outcome of one step of the event loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Event,
    ReachedEnd,
    Quiescent,
}

impl Simulation {
    pub fn new(p: &ModelParams, cfg: SimConfig) -> Result<Self> {
        if !(cfg.t_end > 0.0) {
            return Err(Error::BadConfig(format!("t_end = {} must be > 0", cfg.t_end)));
        }
        if !(cfg.delta_v > 0.0) {
            return Err(Error::BadConfig(format!("delta_v = {} must be > 0", cfg.delta_v)));
        }
        let mut blocks = cfg.initial.clone();
        blocks.sort_by(|a, b| a.0.total_cmp(&b.0));
        for b in &blocks {
            if !(b.0 < b.1) {
                return Err(Error::BadConfig(format!("empty interval [{}, {}]", b.0, b.1)));
            }
            if !p.classify(b.2).in_domain() {
                return Err(Error::BadConfig(format!(
                    "initial state ({}, {}) outside the domain",
                    b.2.rho, b.2.q
                )));
            }
        }
        for pair in blocks.windows(2) {
            if (pair[0].1 - pair[1].0).abs() > 1e-12 {
                return Err(Error::BadConfig(format!(
                    "intervals do not partition the line: [{}, {}] then [{}, {}]",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        if let Some(f) = cfg.gate {
            crate::constrained::Constraint::new(p, f)?;
        }

        // breakpoints: block edges, plus the gate position when constrained
        let mut cuts: Vec<f64> = Vec::new();
        for b in &blocks {
            cuts.push(b.0);
            cuts.push(b.1);
        }
        if cfg.gate.is_some() {
            cuts.push(0.0);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

        let state_at = |x: f64| -> State {
            for b in &blocks {
                if x >= b.0 - 1e-12 && x < b.1 - 1e-12 {
                    return b.2;
                }
            }
            State::VACUUM
        };

        let span = blocks.last().map(|b| b.1).unwrap_or(1.0)
            - blocks.first().map(|b| b.0).unwrap_or(0.0);
        let window = (
            blocks.first().map(|b| b.0).unwrap_or(0.0) - 0.5 * span.max(1.0),
            blocks.last().map(|b| b.1).unwrap_or(1.0) + 0.5 * span.max(1.0),
        );
        let profile_xs = (0..cfg.profile_points)
            .map(|i| {
                window.0
                    + (window.1 - window.0) * i as f64 / (cfg.profile_points - 1).max(1) as f64
            })
            .collect();

        let mut sim = Simulation {
            p: p.clone(),
            cfg,
            t: 0.0,
            fronts: Vec::new(),
            next_id: 0,
            window,
            cum_outflux: 0.0,
            trace: SimTrace {
                events: Vec::new(),
                gate_flux: Vec::new(),
                mass: Vec::new(),
                profiles: Vec::new(),
                front_log: Vec::new(),
                final_fronts: Vec::new(),
                final_time: 0.0,
                quiescent: false,
                max_fronts: 0,
            },
            next_cadence: 0.0,
            profile_xs,
        };

        for &x in &cuts {
            let ul = state_at(x - 1e-9);
            let ur = state_at(x + 1e-9);
            let at_gate = sim.cfg.gate.is_some() && x.abs() <= GATE_TOL;
            let fan = if at_gate {
                solve_constrained(p, sim.cfg.gate.unwrap(), ul, ur)?.combined()
            } else {
                if ul.dist(&ur) <= STATE_TOL {
                    continue;
                }
                solve(p, ul, ur)?
            };
            sim.emit(x, &fan, 0);
        }
        sim.fronts
            .sort_by(|a, b| a.pos.total_cmp(&b.pos).then(a.speed.total_cmp(&b.speed)));
        sim.trace.max_fronts = sim.fronts.len();
        sim.record_series();
        if sim.cfg.cadence > 0.0 {
            sim.sample_profiles_at(0.0);
            sim.next_cadence = sim.cfg.cadence;
        }
        Ok(sim)
    }

    fn emit(&mut self, x: f64, fan: &WaveFan, born_event: usize) {
        for wave in &fan.waves {
            match wave.kind {
                WaveKind::Rarefaction1 { w, .. } => {
                    let v_l = self.p.velocity_raw(wave.left);
                    let v_r = self.p.velocity_raw(wave.right);
                    let n = ((v_r - v_l).abs() / self.cfg.delta_v).ceil().max(1.0) as usize;
                    let mut prev = wave.left;
                    for k in 1..=n {
                        let v = v_l + (v_r - v_l) * k as f64 / n as f64;
                        let next = if k == n {
                            wave.right
                        } else {
                            let rho = self
                                .p
                                .rho_at_velocity_on_curve(w, v)
                                .expect("rarefaction interior stays on its curve");
                            self.p.state_on_curve(w, rho)
                        };
                        if next.dist(&prev) > STATE_TOL {
                            let speed = self
                                .p
                                .rh_speed(prev, next)
                                .expect("rarefaction fronts join distinct densities");
                            self.push_front(x, speed, prev, next, FrontKind::Rarefaction, born_event);
                        }
                        prev = next;
                    }
                }
                _ => {
                    if wave.left.dist(&wave.right) <= STATE_TOL {
                        continue;
                    }
                    let (speed, kind) = match wave.kind {
                        WaveKind::Contact { speed } => (speed, FrontKind::Contact),
                        WaveKind::Shock1 { speed } => (speed, FrontKind::Shock),
                        WaveKind::PhaseTransition { speed } => {
                            (speed, FrontKind::PhaseTransition)
                        }
                        WaveKind::StationaryJump => (0.0, FrontKind::StationaryJump),
                        WaveKind::Rarefaction1 { .. } => unreachable!(),
                    };
                    self.push_front(x, speed, wave.left, wave.right, kind, born_event);
                }
            }
        }
    }

    fn push_front(
        &mut self,
        x: f64,
        speed: f64,
        left: State,
        right: State,
        kind: FrontKind,
        born_event: usize,
    ) {
        let id = self.next_id;
        self.next_id += 1;
        self.fronts.push(Front { id, pos: x, speed, left, right, kind, born_event });
        self.trace.front_log.push(FrontMeta {
            id,
            kind,
            born_event,
            t0: self.t,
            x0: x,
            speed,
            death: None,
        });
    }

    /// States immediately left and right of the gate, as limits for
    /// t -> t+: fronts parked at x = 0 count for the side their speed moves
    /// them to, stationary jumps separate the two traces.
    pub fn gate_traces(&self) -> (State, State) {
        let mut minus = self.fronts.first().map(|f| f.left).unwrap_or(State::VACUUM);
        let mut plus = minus;
        for f in &self.fronts {
            let at_gate = f.pos.abs() <= POS_TOL;
            if f.pos < -POS_TOL || (at_gate && f.speed < -1e-14) {
                minus = f.right;
            }
            if f.pos < -POS_TOL || (at_gate && f.speed <= 1e-14) {
                plus = f.right;
            }
            if f.pos > POS_TOL {
                break;
            }
        }
        (minus, plus)
    }

    /// The state of the region containing x (points at a front resolve to its
    /// right side).
    pub fn state_at(&self, x: f64) -> State {
        let mut state = self.fronts.first().map(|f| f.left).unwrap_or(State::VACUUM);
        for f in &self.fronts {
            if f.pos <= x {
                state = f.right;
            } else {
                break;
            }
        }
        state
    }

    fn window_mass(&self) -> f64 {
        let (lo, hi) = self.window;
        let mut mass = 0.0;
        let mut x = lo;
        let mut state = self.fronts.first().map(|f| f.left).unwrap_or(State::VACUUM);
        for f in &self.fronts {
            let edge = f.pos.clamp(lo, hi);
            if edge > x {
                mass += state.rho * (edge - x);
                x = edge;
            }
            state = f.right;
        }
        mass += state.rho * (hi - x);
        mass
    }

    fn record_series(&mut self) {
        let (ul, ur) = self.gate_traces();
        self.trace.gate_flux.push((self.t, self.p.flux_raw(ul), self.p.flux_raw(ur)));
        self.trace.mass.push((self.t, self.window_mass(), self.cum_outflux));
    }

    fn sample_profiles_at(&mut self, dt_ahead: f64) {
        let t = self.t + dt_ahead;
        for i in 0..self.profile_xs.len() {
            let x = self.profile_xs[i];
            let mut state = self.fronts.first().map(|f| f.left).unwrap_or(State::VACUUM);
            for f in &self.fronts {
                if f.pos + f.speed * dt_ahead <= x {
                    state = f.right;
                } else {
                    break;
                }
            }
            self.trace.profiles.push(ProfileRow {
                t,
                x,
                rho: state.rho,
                q: state.q,
                v: self.p.velocity_raw(state),
                w: self.p.marker_raw(state),
            });
        }
    }

    /// Exact flux-time integral at a window edge over the next dt, accounting
    /// for fronts that cross the edge.
    fn edge_flux_integral(&self, edge: f64, dt: f64) -> f64 {
        let mut crossings: Vec<(f64, State)> = Vec::new();
        for f in &self.fronts {
            if f.speed != 0.0 {
                let tau = (edge - f.pos) / f.speed;
                if tau > 0.0 && tau <= dt {
                    let state = if f.speed > 0.0 { f.left } else { f.right };
                    crossings.push((tau, state));
                }
            }
        }
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut t0 = 0.0;
        let mut state = self.state_at(edge);
        for (tau, next) in crossings {
            acc += self.p.flux_raw(state) * (tau - t0);
            t0 = tau;
            state = next;
        }
        acc + self.p.flux_raw(state) * (dt - t0)
    }

    /// Time to the next front-front collision or gate crossing.
    fn next_event_dt(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut push = |dt: f64| {
            if dt >= 0.0 && best.is_none_or(|b| dt < b) {
                best = Some(dt);
            }
        };
        for pair in self.fronts.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.speed > b.speed + 1e-14 {
                push(((b.pos - a.pos) / (a.speed - b.speed)).max(0.0));
            }
        }
        if self.cfg.gate.is_some() {
            for f in &self.fronts {
                if f.pos < -GATE_TOL && f.speed > 0.0 || f.pos > GATE_TOL && f.speed < 0.0 {
                    push(-f.pos / f.speed);
                }
            }
        }
        best
    }

    /// Advance to the next interaction and resolve it, or run out the clock.
    pub fn step(&mut self) -> Result<StepOutcome> {
        loop {
            let Some(dt) = self.next_event_dt() else {
                self.finish_profiles(self.cfg.t_end);
                self.t = self.cfg.t_end;
                self.trace.quiescent = true;
                return Ok(StepOutcome::Quiescent);
            };
            if self.t + dt > self.cfg.t_end {
                self.finish_profiles(self.cfg.t_end);
                self.t = self.cfg.t_end;
                return Ok(StepOutcome::ReachedEnd);
            }
            if self.trace.events.len() >= self.cfg.max_events {
                return Err(Error::EventOverflow {
                    events: self.trace.events.len(),
                    time: self.t,
                });
            }

            self.finish_profiles(self.t + dt);
            self.cum_outflux += self.edge_flux_integral(self.window.1, dt)
                - self.edge_flux_integral(self.window.0, dt);
            for f in &mut self.fronts {
                f.pos += f.speed * dt;
            }
            self.t += dt;

            if self.resolve_leftmost_cluster()? {
                return Ok(StepOutcome::Event);
            }
            // roundoff left no touching pair at the computed time; retry
        }
    }

    /// Find and resolve the leftmost collision cluster at the current time.
    /// Simultaneous events resolve left-to-right, one cluster per step.
    fn resolve_leftmost_cluster(&mut self) -> Result<bool> {
        let mut cluster_x: Option<f64> = None;
        for pair in self.fronts.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.pos - a.pos <= POS_TOL && a.speed > b.speed + 1e-14 {
                cluster_x = Some(a.pos);
                break;
            }
        }
        if cluster_x.is_none() && self.cfg.gate.is_some() {
            for f in &self.fronts {
                if f.pos.abs() <= POS_TOL && f.speed != 0.0 && self.arrived_at_gate(f) {
                    cluster_x = Some(0.0);
                    break;
                }
            }
        }
        let Some(x_star) = cluster_x else {
            return Ok(false);
        };

        let at_gate = self.cfg.gate.is_some() && x_star.abs() <= GATE_TOL;
        let x_star = if at_gate { 0.0 } else { x_star };
        let tol = if at_gate { GATE_TOL } else { POS_TOL };
        let members: Vec<usize> = self
            .fronts
            .iter()
            .enumerate()
            .filter(|(_, f)| (f.pos - x_star).abs() <= tol)
            .map(|(i, _)| i)
            .collect();
        let first = members[0];
        let last = *members.last().unwrap();
        let outer_left = self.fronts[first].left;
        let outer_right = self.fronts[last].right;

        let event_index = self.trace.events.len() + 1;
        let incoming: Vec<FrontSnapshot> = self.fronts[first..=last]
            .iter()
            .map(|f| FrontSnapshot {
                id: f.id,
                kind: f.kind,
                left: f.left,
                right: f.right,
                speed: f.speed,
                born_event: f.born_event,
            })
            .collect();
        for f in &self.fronts[first..=last] {
            self.trace.front_log[f.id as usize].death = Some((event_index, self.t, f.pos));
        }
        self.fronts.drain(first..=last);

        let fan = if at_gate {
            solve_constrained(&self.p, self.cfg.gate.unwrap(), outer_left, outer_right)?
                .combined()
        } else {
            solve(&self.p, outer_left, outer_right)?
        };
        let id_start = self.next_id;
        self.emit(x_star, &fan, event_index);
        let out_ids: Vec<u64> = (id_start..self.next_id).collect();
        self.fronts
            .sort_by(|a, b| a.pos.total_cmp(&b.pos).then(a.speed.total_cmp(&b.speed)));
        self.trace.max_fronts = self.trace.max_fronts.max(self.fronts.len());

        self.trace.events.push(EventRecord {
            index: event_index,
            t: self.t,
            x: x_star,
            at_gate,
            incoming,
            out_ids,
        });
        self.record_series();
        Ok(true)
    }

    /// Fronts born at the gate move away from it; only fronts born elsewhere
    /// can arrive and trigger a crossing event.
    fn arrived_at_gate(&self, f: &Front) -> bool {
        self.trace.front_log[f.id as usize].x0.abs() > GATE_TOL
    }

    fn finish_profiles(&mut self, t_to: f64) {
        if self.cfg.cadence <= 0.0 {
            return;
        }
        while self.next_cadence <= t_to + 1e-12 {
            let dt_ahead = self.next_cadence - self.t;
            self.sample_profiles_at(dt_ahead);
            self.next_cadence += self.cfg.cadence;
        }
    }

    pub fn into_trace(mut self) -> SimTrace {
        self.trace.final_time = self.t;
        self.trace.final_fronts = self.fronts;
        self.trace
    }

    /// Run to quiescence, the horizon, or the event cap.
    pub fn run(p: &ModelParams, cfg: SimConfig) -> Result<SimTrace> {
        let mut sim = Simulation::new(p, cfg)?;
        loop {
            match sim.step()? {
                StepOutcome::Event => {}
                StepOutcome::ReachedEnd | StepOutcome::Quiescent => break,
            }
        }
        sim.record_series();
        Ok(sim.into_trace())
    }
}

// --- toll-gate milestones -------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Milestone {
    pub label: &'static str,
    pub event_index: usize,
    pub t: f64,
    pub x: f64,
}

/// Identify the macro-interactions of a toll-gate run: the first collision
/// (a1), the first gate re-solve (a4), and the queue-tail chain — first
/// motion (a2), last absorption from the compression train (a3), the meeting
/// with the gate-emitted backward shock (a5), and the arrival at the gate
/// (a6). a2 and a3 coincide when the train has fully merged before reaching
/// the tail.
pub fn toll_gate_milestones(trace: &SimTrace) -> Result<Vec<Milestone>> {
    let events = &trace.events;
    if events.is_empty() {
        return Err(Error::SolveFailure("no events in the trace".into()));
    }
    let mk = |label: &'static str, e: &EventRecord| Milestone {
        label,
        event_index: e.index,
        t: e.t,
        x: e.x,
    };
    let a1 = events.first().unwrap();
    let a4 = events
        .iter()
        .find(|e| e.at_gate)
        .ok_or_else(|| Error::SolveFailure("no gate event".into()))?;
    let tail: Vec<&EventRecord> = events
        .iter()
        .filter(|e| e.incoming.first().is_some_and(|f| f.left.is_vacuum()))
        .collect();
    if tail.len() < 3 {
        return Err(Error::SolveFailure(format!(
            "tail chain too short: {} events",
            tail.len()
        )));
    }
    let a2 = tail[0];
    let a6 = tail[tail.len() - 1];
    let a5 = tail[tail.len() - 2];
    let a3 = tail[tail.len() - 3];
    if !a6.at_gate {
        return Err(Error::SolveFailure("tail chain does not end at the gate".into()));
    }
    Ok(vec![
        mk("a1", a1),
        mk("a4", a4),
        mk("a2", a2),
        mk("a3", if tail.len() == 3 { a2 } else { a3 }),
        mk("a5", a5),
        mk("a6", a6),
    ])
}

// --- file emission ----------------------------------------------------------------

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Event log: `t,x,in_ids,out_ids,kind` with semicolon-joined id lists.
pub fn events_csv(trace: &SimTrace) -> String {
    let mut s = String::from("t,x,in_ids,out_ids,kind\n");
    for e in &trace.events {
        let ins =
            e.incoming.iter().map(|f| f.id.to_string()).collect::<Vec<_>>().join(";");
        let outs = e.out_ids.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(e.t),
            fmt(e.x),
            ins,
            outs,
            if e.at_gate { "gate" } else { "interior" }
        ));
    }
    s
}

/// Sampled profiles: `t,x,rho,q,v,w`.
pub fn profiles_csv(trace: &SimTrace) -> String {
    let mut s = String::from("t,x,rho,q,v,w\n");
    for r in &trace.profiles {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(r.t),
            fmt(r.x),
            fmt(r.rho),
            fmt(r.q),
            fmt(r.v),
            fmt(r.w)
        ));
    }
    s
}

pub fn gate_flux_csv(trace: &SimTrace) -> String {
    let mut s = String::from("t,flux_minus,flux_plus\n");
    for (t, fm, fp) in &trace.gate_flux {
        s.push_str(&format!("{},{},{}\n", fmt(*t), fmt(*fm), fmt(*fp)));
    }
    s
}

pub fn mass_csv(trace: &SimTrace) -> String {
    let mut s = String::from("t,mass,cumulative_outflux\n");
    for (t, m, c) in &trace.mass {
        s.push_str(&format!("{},{},{}\n", fmt(*t), fmt(*m), fmt(*c)));
    }
    s
}

/// Space-time diagram: one line segment per front (x horizontal, t upward),
/// styling keyed by wave kind.
pub fn space_time_svg(trace: &SimTrace) -> String {
    let (width, height, margin) = (800.0, 600.0, 50.0);
    let t_max = trace.final_time.max(1e-9);
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    for m in &trace.front_log {
        let t1 = m.death.map(|d| d.1).unwrap_or(t_max);
        for x in [m.x0, m.x0 + m.speed * (t1 - m.t0)] {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
        }
    }
    if !x_lo.is_finite() {
        x_lo = -1.0;
        x_hi = 1.0;
    }
    let pad = 0.05 * (x_hi - x_lo).max(1e-9);
    let (x_lo, x_hi) = (x_lo - pad, x_hi + pad);
    let sx = |x: f64| margin + (x - x_lo) / (x_hi - x_lo) * (width - 2.0 * margin);
    let sy = |t: f64| height - margin - t / t_max * (height - 2.0 * margin);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    );
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        sx(x_lo),
        sy(0.0),
        sx(x_hi),
        sy(0.0)
    ));
    if x_lo < 0.0 && x_hi > 0.0 {
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#cccccc\" stroke-dasharray=\"2,4\"/>\n",
            sx(0.0),
            sy(0.0),
            sy(t_max)
        ));
    }
    for m in &trace.front_log {
        let t1 = m.death.map(|d| d.1).unwrap_or(t_max);
        let x1 = m.x0 + m.speed * (t1 - m.t0);
        let (color, sw, dash) = match m.kind {
            FrontKind::Contact => ("#888888", 1.2, "4,3"),
            FrontKind::Shock => ("#cc2222", 1.8, ""),
            FrontKind::Rarefaction => ("#ee9922", 0.6, ""),
            FrontKind::PhaseTransition => ("#2255cc", 1.8, ""),
            FrontKind::StationaryJump => ("#000000", 2.6, ""),
        };
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"{sw}\"{dash_attr}/>\n",
            sx(m.x0),
            sy(m.t0),
            sx(x1),
            sy(t1)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn config_validation() {
        let p = presets::pt0_tollgate();
        let u = p.free_state(0.1).unwrap();
        assert!(matches!(
            Simulation::new(&p, SimConfig::new(vec![(0.5, 0.5, u)], None, 1.0, 1e-3)),
            Err(Error::BadConfig(_))
        ));
        assert!(matches!(
            Simulation::new(
                &p,
                SimConfig::new(vec![(0.0, 1.0, u), (1.5, 2.0, u)], None, 1.0, 1e-3)
            ),
            Err(Error::BadConfig(_))
        ));
        assert!(Simulation::new(&p, SimConfig::new(vec![(0.0, 1.0, u)], None, 1.0, 1e-3)).is_ok());
    }

    #[test]
    fn fronts_satisfy_rankine_hugoniot() {
        let p = presets::pt0_tollgate();
        let a = p.free_state(0.25).unwrap();
        let cfg = SimConfig::new(vec![(-1.0, 0.5, a)], None, 2.0, 1e-3);
        let sim = Simulation::new(&p, cfg).unwrap();
        assert!(!sim.fronts.is_empty());
        for f in &sim.fronts {
            assert!(f.rh_residual(&p).abs() < 1e-10);
        }
    }

    #[test]
    fn interior_continuity_produces_no_front() {
        let p = presets::pt0_tollgate();
        let u = State::new(1.0, 0.3);
        let cfg = SimConfig::new(vec![(-2.0, -1.0, u), (-1.0, 0.0, u)], None, 0.5, 1e-3);
        let sim = Simulation::new(&p, cfg).unwrap();
        // only the hull edges emit fronts
        assert!(sim.fronts.iter().all(|f| (f.pos + 2.0).abs() < 1e-12 || f.pos.abs() < 1e-12));
    }

    #[test]
    fn rarefaction_discretization_count() {
        // gate fan of the toll-gate problem: v-jump 0.15530..., delta_v 0.01
        // gives ceil(15.53) = 16 fronts
        let p = presets::pt0_tollgate();
        let g = presets::tollgate_scenario();
        let cfg = SimConfig::new(
            vec![(g.x1, g.x2, g.u1), (g.x2, 0.0, g.u2)],
            Some(g.f),
            50.0,
            0.01,
        );
        let sim = Simulation::new(&p, cfg).unwrap();
        let n_raref = sim.fronts.iter().filter(|f| f.kind == FrontKind::Rarefaction).count();
        assert_eq!(n_raref, 16);
        let n_stat = sim
            .fronts
            .iter()
            .filter(|f| f.speed.abs() < 1e-12 && f.kind != FrontKind::Rarefaction)
            .count();
        assert_eq!(n_stat, 3, "PT1, C1 and U1 are stationary");
        assert_eq!(
            sim.fronts.iter().filter(|f| f.kind == FrontKind::StationaryJump).count(),
            1
        );
        let (ul, ur) = sim.gate_traces();
        assert!((p.flux(ul).unwrap() - g.f).abs() < 1e-12);
        assert!((p.flux(ur).unwrap() - g.f).abs() < 1e-12);
    }

    #[test]
    fn colliding_shocks_merge_via_the_solver() {
        let p = presets::pt0_tollgate();
        // two jumps down the convex minus curve approach and merge
        let a = p.state_on_curve(-0.4, 1.0);
        let b = p.state_on_curve(-0.4, 0.8);
        let c = p.state_on_curve(-0.4, 0.62);
        let cfg = SimConfig::new(
            vec![(-4.0, -2.0, a), (-2.0, -1.0, b), (-1.0, 8.0, c)],
            None,
            40.0,
            1e-3,
        );
        let trace = Simulation::run(&p, cfg).unwrap();
        assert!(!trace.events.is_empty());
        assert_eq!(trace.events[0].incoming.len(), 2);
        assert!(trace.mass_drift() < 1e-12, "drift {}", trace.mass_drift());
    }

    #[test]
    fn gate_crossing_resolves_with_the_constrained_solver() {
        let p = presets::pt0_tollgate();
        // a block of moving traffic above capacity arrives at an idle gate
        let u = p.free_state(0.2).unwrap();
        let f = 3.0 / 25.0;
        let cfg = SimConfig::new(vec![(-2.0, -1.0, u)], Some(f), 30.0, 1e-3);
        let trace = Simulation::run(&p, cfg).unwrap();
        let gate_event = trace.events.iter().find(|e| e.at_gate).expect("gate event");
        assert!(gate_event.t > 0.0);
        for (t, fm, fp) in &trace.gate_flux {
            if *t >= gate_event.t {
                assert!(*fm <= f + 1e-12 && *fp <= f + 1e-12, "flux at t={t}");
            }
        }
        assert!(trace.mass_drift() < 1e-9, "drift {}", trace.mass_drift());
    }
}
