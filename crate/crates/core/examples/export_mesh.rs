//! Serializes a scene's complex to JSON and reads it back.

use modwedge::scenes::{build_scene, parse_params};
use modwedge::MetricComplex;

fn main() -> modwedge::Result<()> {
    let params = parse_params("n=2,resolution=4")?;
    let s = build_scene("lohvansuu_cube", &params)?;
    let text = s.complex.to_json()?;
    let back = MetricComplex::from_json(&text)?;
    let counts: Vec<usize> = (0..=back.dimension()).map(|k| back.num_cells(k)).collect();
    println!("{} bytes, cells per degree {counts:?}, round trip equal: {}", text.len(), back.to_json()? == text);
    Ok(())
}
