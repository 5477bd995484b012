//! Heightmap ingestion and per-cell terrain statistics.
//!
//! Intensities are normalized to `[0, 1]`; a high intensity is tough terrain. Scores are
//! oriented so that 1 is good: `g_mean` is one minus the mean normalized intensity over a
//! cell and `los_mean` is one minus the normalized intensity variance over the sensing
//! window around the cell center.

mod pgm;
mod stats;

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::svg::{self, SvgCanvas};

pub use pgm::{encode_p2, encode_p5, load_heightmap};
pub use stats::{discretize, discretize_with_texture, DiscretizeParams, TextureTerm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("unsupported PGM magic `{0}` (expected P2 or P5)")]
    BadMagic(String),
    #[error("truncated PGM: {0}")]
    Truncated(String),
    #[error("malformed PGM header: {0}")]
    Header(String),
    #[error("unsupported maxval {0} (expected 255 or 65535)")]
    MaxVal(u32),
    #[error("sample {value} exceeds maxval {maxval}")]
    SampleRange { value: u32, maxval: u32 },
    #[error("cell size {cell_size} px does not fit a {width}x{height} map")]
    CellTooLarge {
        cell_size: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid discretization parameter: {0}")]
    Param(String),
    #[error("cell ({row}, {col}) is outside the {rows}x{cols} grid")]
    OutOfGrid {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// Grayscale heightmap, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightmap {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u16>,
    pub maxval: u16,
    /// Meters per pixel.
    pub resolution: f64,
}

impl Heightmap {
    pub fn sample(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }

    /// Intensity in `[0, 1]`.
    pub fn normalized(&self, x: usize, y: usize) -> f64 {
        f64::from(self.sample(x, y)) / f64::from(self.maxval)
    }
}

/// Grid cell address.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Same cell or one of the eight neighbors.
    pub fn is_adjacent_or_same(&self, other: &Cell) -> bool {
        self.row.abs_diff(other.row) <= 1 && self.col.abs_diff(other.col) <= 1
    }
}

/// Gaussian statistics of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    /// Traversability score, 1 = easy.
    pub g_mean: f64,
    pub g_var: f64,
    /// Line-of-sight score, 1 = clear view.
    pub los_mean: f64,
    pub los_var: f64,
    pub nogo: bool,
}

/// Discretized terrain.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    pub rows: usize,
    pub cols: usize,
    /// Cell side in pixels.
    pub cell_size: usize,
    pub sensing_radius: usize,
    /// Meters per pixel.
    pub resolution: f64,
    /// Row-major.
    pub stats: Vec<CellStats>,
}

impl CellGrid {
    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn check(&self, cell: Cell) -> Result<(), TerrainError> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(TerrainError::OutOfGrid {
                row: cell.row,
                col: cell.col,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn stats(&self, cell: Cell) -> &CellStats {
        &self.stats[cell.row * self.cols + cell.col]
    }

    pub fn is_traversable(&self, cell: Cell) -> bool {
        self.contains(cell) && !self.stats(cell).nogo
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| Cell::new(r, c)))
    }

    /// Cell side length in meters.
    pub fn cell_meters(&self) -> f64 {
        self.cell_size as f64 * self.resolution
    }

    /// World-frame centroid `(x, y)` in meters; x grows with the column, y with the row.
    pub fn centroid(&self, cell: Cell) -> (f64, f64) {
        let side = self.cell_meters();
        (
            (cell.col as f64 + 0.5) * side,
            (cell.row as f64 + 0.5) * side,
        )
    }

    /// Cell containing a world-frame point, clamped to the grid.
    pub fn cell_at(&self, x: f64, y: f64) -> Cell {
        let side = self.cell_meters();
        let clamp = |v: f64, n: usize| ((v / side).floor().max(0.0) as usize).min(n - 1);
        Cell::new(clamp(y, self.rows), clamp(x, self.cols))
    }

    /// `row,col,g_mean,g_var,los_mean,los_var,nogo` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,g_mean,g_var,los_mean,los_var,nogo\n");
        for cell in self.cells() {
            let s = self.stats(cell);
            writeln!(
                out,
                "{},{},{:.9},{:.9},{:.9},{:.9},{}",
                cell.row, cell.col, s.g_mean, s.g_var, s.los_mean, s.los_var, s.nogo
            )
            .unwrap();
        }
        out
    }

    /// Heatmap of one score, `px` pixels per cell. No-go cells are crossed out.
    pub fn heatmap_svg(&self, layer: Layer, px: f64) -> String {
        let mut canvas = SvgCanvas::new(self.cols as f64 * px, self.rows as f64 * px);
        self.draw_heatmap(&mut canvas, layer, px);
        canvas.finish()
    }

    pub fn draw_heatmap(&self, canvas: &mut SvgCanvas, layer: Layer, px: f64) {
        for cell in self.cells() {
            let s = self.stats(cell);
            let v = match layer {
                Layer::Traversability => s.g_mean,
                Layer::LineOfSight => s.los_mean,
            };
            let (x, y) = (cell.col as f64 * px, cell.row as f64 * px);
            canvas.rect(x, y, px, px, &svg::gray(v));
            if s.nogo {
                canvas.line((x, y), (x + px, y + px), "#c00000", px / 10.0);
                canvas.line((x + px, y), (x, y + px), "#c00000", px / 10.0);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Traversability,
    LineOfSight,
}
