//! Linear memory capacity of the feedback reservoir, per delay.

use microring_rc::experiment::{ExperimentConfig, Settings};
use microring_rc::reservoir::{memory_capacity, MemoryOptions};

fn main() -> microring_rc::Result<()> {
    let cfg = ExperimentConfig::parse("kind = \"memory_capacity\"\nseed = 7\n")?;
    let Settings::Feedback(base) = &cfg.settings else { unreachable!() };
    let opts = MemoryOptions::default();
    for (eta, phase) in [(0.0, 0.0), (0.9, 0.0), (0.9, std::f64::consts::PI)] {
        let mut s = base.clone();
        s.eta = eta;
        s.phase = phase;
        let mc = memory_capacity(
            |x| Ok(microring_rc::experiment::cells::feedback_reservoir(&cfg.device, &s, x)?.states),
            &opts,
            cfg.seed,
        )?;
        let head: Vec<String> = mc.per_delay[..6].iter().map(|m| format!("{m:.2}")).collect();
        println!("eta {eta} phase {phase:.2}: MC {:.2}  m(1..6) {}", mc.total, head.join(" "));
    }
    Ok(())
}
