//! PRBS-7 at 10 Gb/s, NRZ-modulated, detected through a 7 GHz photodiode,
//! and round-tripped through both waveform file formats.

use microring_rc::signal::{detect, nrz_modulate, prbs, DetectorModel, SampledSignal};

fn main() -> microring_rc::Result<()> {
    let bits = prbs(7, 1)?.with_bitrate(10e9)?;
    let field = nrz_modulate(&bits, 8, 1e-3, 0.0)?;
    println!(
        "{} bits, {} samples at {:.0} GSa/s, {:.1} ns",
        bits.len(),
        field.len(),
        field.sample_rate() / 1e9,
        field.duration() * 1e9
    );

    let mut csv = Vec::new();
    field.write_csv(&mut csv)?;
    let mut bin = Vec::new();
    field.write_binary(&mut bin)?;
    assert_eq!(SampledSignal::read_csv(csv.as_slice())?, field);
    assert_eq!(SampledSignal::read_binary(bin.as_slice())?, field);
    println!("csv {} bytes, binary {} bytes, both lossless", csv.len(), bin.len());

    let rx = detect(&field, &DetectorModel::new(7e9, 2e-5, true)?, 42);
    let eye: Vec<String> = rx[..16].iter().map(|p| format!("{:.2}", p * 1e3)).collect();
    println!("first two bits after detection (mW): {}", eye.join(" "));
    Ok(())
}
