//! NARMA-10 on the ring with an external feedback loop, for a few
//! feedback strengths at a fixed phase.

use microring_rc::experiment::cells::narma_task;
use microring_rc::experiment::{ExperimentConfig, Settings};

fn main() -> microring_rc::Result<()> {
    let cfg = ExperimentConfig::parse("kind = \"narma10\"\nseed = 7\n")?;
    let Settings::Feedback(base) = &cfg.settings else { unreachable!() };
    for eta in [0.0, 0.4, 0.7, 0.9] {
        let mut s = base.clone();
        s.eta = eta;
        s.phase = 1.25 * std::f64::consts::PI;
        let r = narma_task(&cfg.device, &s, cfg.seed)?;
        println!("eta {eta:.1}: NMSE {:.4}", r.score);
    }
    Ok(())
}
