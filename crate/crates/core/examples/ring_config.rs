//! Load a ring from a unit-suffixed config and compare the simulated CW
//! drop transmission with the Lorentzian of the linear ring.

use microring_rc::mrr::{integrate, linear_transmission, IntegrateOptions, MrrParams, MrrState};
use microring_rc::signal::SampledSignal;

const RING: &str = r#"
radius = "7um"
q_intrinsic = 1.11e5
coupling_k2 = 0.063
tau_fc = "45ns"
tau_th = "270ns"
tpa_gen_coeff = 0
tpa_loss_coeff = 0
fca_loss_coeff = 0
thermal_heating_coeff = 0
"#;

fn main() -> microring_rc::Result<()> {
    let ring = MrrParams::from_toml_str(RING)?;
    println!(
        "loaded Q {:.0}, linewidth {:.1} GHz ({:.1} pm), photon lifetime {:.2} ps",
        ring.loaded_q(),
        ring.linewidth() / 1e9,
        ring.linewidth_wavelength() * 1e12,
        ring.photon_lifetime() * 1e12
    );
    let lw = ring.linewidth();
    let opts = IntegrateOptions::rk4(ring.photon_lifetime() / 20.0);
    println!("{:>10} {:>10} {:>10}", "det/lw", "ODE", "Lorentz");
    for k in -4..=4 {
        let det = 0.5 * k as f64 * lw;
        let n = 4000;
        let input = SampledSignal::cw(1e-3, n, 1.0 / (ring.photon_lifetime() / 4.0))?;
        let tr = integrate(&ring, det, MrrState::default(), &input, &opts)?;
        let sim = tr.drop_power()[n - 1] / 1e-3;
        let (_, lorentz) = linear_transmission(&ring, det);
        println!("{:>10.1} {sim:>10.5} {lorentz:>10.5}", det / lw);
    }
    Ok(())
}
