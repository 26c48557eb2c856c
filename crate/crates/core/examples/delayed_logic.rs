//! Delayed AND tasks on the logic ring's drop port at one operating point.
//! At 10 Mb/s a bit lasts about one thermal lifetime, which leaves the ring
//! just enough fading memory for two bits of delay but not three.

use microring_rc::experiment::cells::logic_task;
use microring_rc::experiment::{ExperimentConfig, Settings};

const CONFIG: &str = r#"
kind = "logic_task"
seed = 11
[settings]
op = "and"
n1 = [0, 1, 2, 3]
power = "3mW"
detuning = "7.5GHz"
bitrate = "10Mbps"
noise = 0.015
"#;

fn main() -> microring_rc::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let Settings::Logic(s) = &cfg.settings else { unreachable!() };
    let r = logic_task(&cfg.device, s, cfg.seed, 1)?;
    for ((n1, out), inp) in s.n1.iter().zip(&r.ber).zip(&r.ber_input) {
        let fmt = |m: &microring_rc::experiment::Metric| {
            format!("{}{:.4}", if m.floor { "<" } else { "" }, m.value)
        };
        println!("AND-{n1}: ring {:>8}  input {:>8}", fmt(out), fmt(inp));
    }
    Ok(())
}
