use twophase::presets;
use twophase::wft::{toll_gate_milestones, SimConfig, Simulation};

fn main() {
    let p = presets::pt0_tollgate();
    let g = presets::tollgate_scenario();
    for delta_v in [4e-3, 2e-3, 1e-3] {
        let cfg = SimConfig::new(
            vec![(g.x1, g.x2, g.u1), (g.x2, 0.0, g.u2)],
            Some(g.f),
            50.0,
            delta_v,
        );
        let t0 = std::time::Instant::now();
        let trace = Simulation::run(&p, cfg).unwrap();
        let ms = toll_gate_milestones(&trace);
        println!(
            "delta_v={delta_v:.0e}: events={} max_fronts={} drift={:.2e} quiescent={} wall={:?}",
            trace.events.len(),
            trace.max_fronts,
            trace.mass_drift(),
            trace.quiescent,
            t0.elapsed()
        );
        match ms {
            Ok(list) => {
                for m in list {
                    println!("  {}  t={:.6}  x={:.6}  (event {})", m.label, m.t, m.x, m.event_index);
                }
            }
            Err(e) => println!("  milestones failed: {e}"),
        }
        // gate flux sanity
        let mut bad = 0;
        let t_a6 = trace.events.iter().filter(|e| e.at_gate).map(|e| e.t).fold(0.0, f64::max);
        for (t, fm, fp) in &trace.gate_flux {
            if *t > 1e-9 && *t < t_a6 - 1e-9 {
                if (fm - g.f).abs() > 1e-10 || (fp - g.f).abs() > 1e-10 {
                    bad += 1;
                }
            }
        }
        println!("  gate flux defects in (0, t_a6): {bad}");
    }
}
