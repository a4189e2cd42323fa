//! CSV input and output with header `x,y,value`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::{detect_grid, find_duplicate, Location, SpatialDataset, LOCATION_TOLERANCE};
use crate::error::{Error, Result};

/// Lattice tolerance for grid auto-detection on ingest.
pub const GRID_DETECT_TOLERANCE: f64 = 1e-6;
/// Below this many observations ingestion warns.
pub const MIN_RECOMMENDED_OBSERVATIONS: usize = 10;

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: SpatialDataset,
    pub warnings: Vec<String>,
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Ingested> {
    let file = File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file)
}

/// Parses `x,y,value` rows. Line numbers in errors count the header as 1.
pub fn read_csv<R: Read>(reader: R) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Malformed { line: 1, reason: e.to_string() })?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["x", "y", "value"] {
        return Err(Error::Malformed { line: 1, reason: format!("expected header x,y,value, found {}", names.join(",")) });
    }
    let mut locations = Vec::new();
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Malformed {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::Malformed { line, reason: format!("{name} {raw:?} is not a number") })?;
            if !v.is_finite() {
                return Err(Error::Malformed { line, reason: format!("{name} must be finite") });
            }
            Ok(v)
        };
        locations.push(Location::new(field(0, "x")?, field(1, "y")?));
        values.push(field(2, "value")?);
        lines.push(line);
    }
    if locations.len() < 2 {
        return Err(Error::Domain(format!("need at least 2 observations, found {}", locations.len())));
    }
    if let Some((_, j)) = find_duplicate(&locations, LOCATION_TOLERANCE) {
        let l = locations[j];
        return Err(Error::DuplicateLocation { x: l.x, y: l.y, line: Some(lines[j]) });
    }
    let mut warnings = Vec::new();
    if locations.len() < MIN_RECOMMENDED_OBSERVATIONS {
        warnings.push(format!("only {} observations; results will be unreliable", locations.len()));
    }
    let grid = detect_grid(&locations, GRID_DETECT_TOLERANCE);
    let mut dataset = SpatialDataset::new(locations, values)?;
    if let Some(g) = grid {
        dataset = dataset.with_grid(g)?;
    }
    Ok(Ingested { dataset, warnings })
}

pub fn write_csv<W: Write>(dataset: &SpatialDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["x", "y", "value"]).map_err(io)?;
    for (l, v) in dataset.locations().iter().zip(dataset.values()) {
        // shortest round-trip representation
        w.write_record([l.x.to_string(), l.y.to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &SpatialDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv(dataset, file)
}
