// Runs the four built-in sweeps and writes each as CSV.

use std::path::PathBuf;
use uavq::report::write_results;
use uavq::sweep::{preset, run_sweep, PRESET_NAMES};

pub fn run_example() -> uavq::Result<()> {
    let dir = std::env::temp_dir().join("uavq-presets");
    std::fs::create_dir_all(&dir)?;
    for name in PRESET_NAMES {
        let p = preset(name)?;
        let table = run_sweep(&p.scenario, &p.sweep)?;
        let path: PathBuf = dir.join(format!("{name}.csv"));
        write_results(&table, std::fs::File::create(&path)?)?;
        println!("{name}: {} rows, columns {:?} -> {}", table.rows.len(), table.columns, path.display());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
