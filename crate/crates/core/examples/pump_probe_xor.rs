//! One-bit delayed XOR through the pump-probe carrier kernel, against a
//! readout trained on the raw input nodes.

use microring_rc::experiment::cells::xor_task;
use microring_rc::experiment::ExperimentConfig;
use microring_rc::experiment::Settings;

fn main() -> microring_rc::Result<()> {
    let cfg = ExperimentConfig::parse("kind = \"xor_rc\"\nseed = 5\n")?;
    let Settings::Xor(base) = cfg.settings else { unreachable!() };
    println!("{:>12} {:>8} {:>10} {:>10}", "bitrate", "T/tau", "BER ring", "BER input");
    for bitrate in [20e6, 50e6, 110e6, 250e6, 1e9, 4e9] {
        let s = microring_rc::experiment::config::XorSettings { bitrate, ..base.clone() };
        let r = xor_task(&s, cfg.seed, 1)?;
        let show = |m: microring_rc::experiment::Metric| {
            if m.floor { format!("<{:.0e}", m.value) } else { format!("{:.4}", m.value) }
        };
        println!(
            "{:>9.0} Mb/s {:>8.2} {:>10} {:>10}",
            bitrate / 1e6,
            1.0 / (bitrate * s.tau_fc),
            show(r.ber),
            show(r.ber_input)
        );
    }
    Ok(())
}
