//! Coarse stability map of the self-pulsing ring over pump power and
//! detuning, written as `P,delta_nu,class,sp_freq_hz` CSV.

use microring_rc::mrr::{Preset, StabilityMap, StabilityOptions};

fn main() -> microring_rc::Result<()> {
    let ring = Preset::SelfPulsing.params();
    let opts = StabilityOptions::for_params(&ring);
    let lw = ring.linewidth();
    let powers = [2e-3, 8e-3, 16e-3, 32e-3];
    let detunings: Vec<f64> = (0..7).map(|k| -(6 - k) as f64 * lw).collect();
    let map = StabilityMap::compute(&ring, &powers, &detunings, &opts)?;
    println!("self-pulsing frequency (MHz); columns are detuning/linewidth {:?}",
        detunings.iter().map(|d| d / lw).collect::<Vec<_>>());
    for (ip, p) in powers.iter().enumerate() {
        let row: Vec<String> = (0..detunings.len())
            .map(|id| format!("{:5.2}", map.get(ip, id).frequency() / 1e6))
            .collect();
        println!("{:5.1} mW  {}", p * 1e3, row.join(" "));
    }
    let path = std::env::temp_dir().join("self_pulsing_map.csv");
    map.write_csv(std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
