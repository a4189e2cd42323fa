//! Write a dataset as `x,y,value` CSV, read it back with grid detection, and
//! show how malformed input is reported.
//!
//! cargo run --example csv_io

use isotropy::io::{read_csv, save_csv, ingest_csv};
use isotropy::{GridSpec, SpatialDataset};

fn main() -> isotropy::Result<()> {
    let grid = GridSpec::new(4, 3, 0.5)?;
    let values: Vec<f64> = (0..grid.len()).map(|i| (i as f64).sin()).collect();
    let data = SpatialDataset::on_grid(grid, values)?;

    let path = std::env::temp_dir().join("isotropy_csv_io_example.csv");
    save_csv(&data, &path)?;
    let back = ingest_csv(&path)?;
    let g = back.dataset.grid().expect("lattice detected");
    println!("read {} rows, grid {} x {} at spacing {}", back.dataset.len(), g.n_cols, g.n_rows, g.spacing);
    for w in &back.warnings {
        println!("warning: {w}");
    }
    std::fs::remove_file(&path).ok();

    for bad in ["x,y,value\n0,0,1\n1,oops,2\n", "x,y,value\n0,0,1\n1,0,2\n0,0,3\n", "lon,lat,z\n0,0,1\n"] {
        match read_csv(bad.as_bytes()) {
            Ok(_) => println!("unexpectedly accepted"),
            Err(e) => println!("rejected (data error = {}): {e}", e.is_data_error()),
        }
    }
    Ok(())
}
