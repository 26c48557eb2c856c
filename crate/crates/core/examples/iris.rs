//! Iris classification through the pump-probe kernel with a random input
//! mask, against a linear readout on the raw features.

use microring_rc::experiment::cells::{iris_bundled, iris_task};
use microring_rc::experiment::{ExperimentConfig, Settings};

fn main() -> microring_rc::Result<()> {
    let cfg = ExperimentConfig::parse("kind = \"iris\"\nseed = 2\n")?;
    let Settings::Iris(base) = &cfg.settings else { unreachable!() };
    let data = iris_bundled();
    println!("{} samples, classes {:?}", data.n_samples(), data.classes);
    for nv in [5, 10, 30, 50] {
        let s = microring_rc::experiment::config::IrisSettings { n_virtual: nv, ..base.clone() };
        let r = iris_task(&data, &s, cfg.seed)?;
        println!(
            "N_v {nv:>2}: test {:.3}  train {:.3}  (raw features {:.3})",
            r.accuracy, r.accuracy_train, r.accuracy_linear
        );
    }
    Ok(())
}
