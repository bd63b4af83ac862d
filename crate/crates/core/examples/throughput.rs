use std::time::Instant;

use cogap::model::{simulate_batch, ControlScheme, Detail, InteractionMode, ModelParams, SimConfig};
use cogap::scenario::ProjectedState;

fn main() {
    let mode = match std::env::args().nth(1).as_deref() {
        Some("im") => InteractionMode::Interactive,
        _ => InteractionMode::NonInteractive,
    };
    let cfg = SimConfig::with(mode, ControlScheme::Acceleration);
    let params = ModelParams::default();
    let detail = if std::env::var("FULL").is_ok() { Detail::Full } else { Detail::Decision };
    let n_p: usize = std::env::var("NP").ok().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let mut total = 0;
    let start = Instant::now();
    for (i, (de, dt)) in [(40.0, 6.0), (80.0, 3.0), (25.0, 10.0), (60.0, 0.5)].iter().enumerate() {
        let init = (ProjectedState::new(*de, 10.0), ProjectedState::new(*dt, 3.0));
        let set = simulate_batch(&format!("s{i}"), init, &params, &cfg, 4.0, n_p, 1, detail).unwrap();
        let acc = set.outcomes.iter().filter(|o| o.accepted).count();
        let steps: f64 = set.outcomes.iter().map(|o| o.ended_at).sum::<f64>() / n_p as f64;
        println!("sample {i}: accepted {acc}/{n_p}, mean end {steps:.2}s");
        total += n_p;
    }
    let secs = start.elapsed().as_secs_f64();
    println!("{:.0} rollouts/s", total as f64 / secs);
}
