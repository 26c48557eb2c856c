//! File formats of the reservoir layer: a state matrix with feature
//! labels, ridge readout weights as JSON, and a task dataset as CSV.

use microring_rc::reservoir::{augment_rbits, ridge_fit, RidgeReadout, StateMatrix};
use microring_rc::tasks::Dataset;
use nalgebra::DMatrix;

fn main() -> microring_rc::Result<()> {
    let nodes = DMatrix::from_fn(3, 8, |r, c| ((r + 1) * (c + 2)) as f64 / 10.0);
    let state = augment_rbits(&StateMatrix::from_nodes(nodes)?, 2)?;
    let mut csv = Vec::new();
    state.write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv).lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("\n...");
    assert_eq!(StateMatrix::read_csv(csv.as_slice())?, state);

    let y = DMatrix::from_fn(1, 8, |_, c| c as f64);
    let readout = ridge_fit(state.features(), &y, 1e-3, true)?;
    let json = readout.to_json()?;
    assert_eq!(RidgeReadout::from_json(&json)?, readout);
    println!("readout JSON: {} bytes", json.len());

    let data = Dataset::narma10(20, 1)?;
    let mut out = Vec::new();
    data.write_csv(&mut out)?;
    assert_eq!(Dataset::read_csv(out.as_slice())?, data);
    println!("NARMA-10 dataset CSV header: {}", String::from_utf8_lossy(&out).lines().next().unwrap_or(""));
    Ok(())
}
