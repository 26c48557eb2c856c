//! One-step Mackey-Glass prediction with the feedback reservoir, flagging
//! operating points where the resonance spikes (self-pulsing).

use microring_rc::experiment::cells::mackey_glass_task;
use microring_rc::experiment::{ExperimentConfig, Settings};
use std::f64::consts::PI;

fn main() -> microring_rc::Result<()> {
    let cfg = ExperimentConfig::parse("kind = \"mackey_glass\"\nseed = 7\n")?;
    let Settings::Feedback(base) = &cfg.settings else { unreachable!() };
    for (eta, phase) in [(0.0, 0.0), (0.6, 0.0), (0.6, PI), (0.9, 0.25 * PI), (0.9, 1.25 * PI)] {
        let mut s = base.clone();
        s.eta = eta;
        s.phase = phase;
        let r = mackey_glass_task(&cfg.device, &s)?;
        println!(
            "eta {eta:.1} phase {:.2}pi: NMSE {:.2e}, {} spikes{}",
            phase / PI,
            r.score,
            r.spikes,
            if r.self_pulsing { " (self-pulsing)" } else { "" }
        );
    }
    Ok(())
}
