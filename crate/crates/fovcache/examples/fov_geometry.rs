//! Viewport-to-tile geometry: overlap fractions for a few orientations,
//! including the wrap-around at the ±180° seam, rendered as text grids.

use fovcache::trace::{effective_fov_area, orientation_to_tiles};
use fovcache::types::TileGrid;

fn render(yaw: f64, pitch: f64, grid: &TileGrid) {
    let tiles = orientation_to_tiles(yaw, pitch, grid);
    println!("viewport at yaw {yaw}, pitch {pitch}:");
    for row in (0..grid.n_rows).rev() {
        let cells: Vec<String> = (0..grid.n_cols)
            .map(|col| format!("{:>5.2}", tiles[row * grid.n_cols + col]))
            .collect();
        println!("  {}", cells.join(" "));
    }
    let covered: f64 = tiles.iter().map(|f| f * grid.tile_area()).sum();
    println!(
        "  covered area {covered:.3} deg^2, effective viewport {:.3} deg^2\n",
        effective_fov_area(pitch, grid)
    );
}

fn main() -> fovcache::Result<()> {
    let grid = TileGrid::new(6, 4, 100.0, 100.0)?;
    render(0.0, 0.0, &grid);
    render(179.0, 10.0, &grid);
    render(-120.0, 85.0, &grid);
    Ok(())
}
