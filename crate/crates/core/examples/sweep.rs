//! Run a config file as the CLI would, then reload its maps, compare the
//! ring with the input baseline and project the best power.
//!
//! `cargo run --release --example sweep -- configs/xor_rc.toml`

use microring_rc::experiment::{best_power_projection, compare_baseline, run, ResultMap, RunOptions};

fn main() -> microring_rc::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/xor_rc.toml".into());
    let summary = run(&path, &RunOptions::default())?;
    println!("{} cells, {} diverged, written to {}", summary.map.cells.len(), summary.diverged, summary.output.display());
    let text = std::fs::read_to_string(summary.output.join("map.csv"))?;
    let map = ResultMap::read_csv(text.as_bytes())?;
    assert_eq!(map.to_csv_string()?, text);
    if let Some(base) = &summary.baseline {
        let rb = compare_baseline(&map, base)?;
        for (i, c) in rb.cells.iter().enumerate() {
            let p: Vec<String> = rb.point(i).iter().map(|v| format!("{v:.3e}")).collect();
            let m: Vec<String> = c.metrics.iter().map(|m| format!("{}{:.3e}", if m.floor { "<" } else { "" }, m.value)).collect();
            println!("[{}] {} = {}", p.join(", "), rb.metrics.join(","), m.join(","));
        }
    }
    let bers: Vec<&str> = map.metrics.iter().map(String::as_str).filter(|m| m.starts_with("ber")).collect();
    if let Ok(best) = best_power_projection(&map, &bers) {
        println!("best over power:\n{}", best.to_csv_string()?);
    }
    Ok(())
}
