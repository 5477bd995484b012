use super::{CellGrid, CellStats, Heightmap, TerrainError};

/// Largest variance of a `[0, 1]` variable; normalizes window variance into a score.
const V_REF: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizeParams {
    /// Cell side in pixels.
    pub cell_size: usize,
    /// Half-width of the line-of-sight window in pixels.
    pub sensing_radius: usize,
    /// Cells with a traversability score below this are no-go.
    pub g_min: f64,
}

/// Extra traversability penalty computed from a cell's normalized intensities. The
/// penalty is subtracted from `g_c` and the result clamped to `[0, 1]`.
pub trait TextureTerm {
    fn penalty(&self, block: &[f64]) -> f64;
}

/// Intensity-only traversability.
pub fn discretize(h: &Heightmap, params: &DiscretizeParams) -> Result<CellGrid, TerrainError> {
    discretize_impl(h, params, None)
}

pub fn discretize_with_texture(
    h: &Heightmap,
    params: &DiscretizeParams,
    texture: &dyn TextureTerm,
) -> Result<CellGrid, TerrainError> {
    discretize_impl(h, params, Some(texture))
}

/// Mean and population variance. Deviations are taken from the first value so constant
/// data has exactly zero variance.
fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    let first = values.clone().next().unwrap_or(0.0);
    let shift = values.clone().map(|v| v - first).sum::<f64>() / n as f64;
    let var = values
        .clone()
        .map(|v| (v - first - shift).powi(2))
        .sum::<f64>()
        / n as f64;
    (first + shift, var, n)
}

/// Pixel index range `[lo, hi)` whose centers lie within `r` of a center given in doubled
/// coordinates (pixel `i` has doubled center `2i + 1`), clipped to `[0, len)`.
fn window(center2: i64, r: usize, len: usize) -> (usize, usize) {
    let r2 = 2 * r as i64;
    // 2i + 1 >= center2 - r2  and  2i + 1 <= center2 + r2
    let lo = (center2 - r2 - 1 + 1).div_euclid(2).max(0);
    let hi = ((center2 + r2 - 1).div_euclid(2) + 1).min(len as i64);
    (lo as usize, hi.max(lo) as usize)
}

/// Population variance of normalized intensities in the window around a doubled center.
fn window_variance(h: &Heightmap, cy2: i64, cx2: i64, r: usize) -> f64 {
    let (y0, y1) = window(cy2, r, h.height);
    let (x0, x1) = window(cx2, r, h.width);
    if y0 >= y1 || x0 >= x1 {
        return 0.0;
    }
    let values = (y0..y1).flat_map(|y| (x0..x1).map(move |x| h.normalized(x, y)));
    mean_var(values).1
}

fn discretize_impl(
    h: &Heightmap,
    params: &DiscretizeParams,
    texture: Option<&dyn TextureTerm>,
) -> Result<CellGrid, TerrainError> {
    let d = params.cell_size;
    if d < 2 {
        return Err(TerrainError::Param(format!("cell size {d} < 2")));
    }
    if 2 * params.sensing_radius < d {
        return Err(TerrainError::Param(format!(
            "sensing radius {} is below half the cell size {d}",
            params.sensing_radius
        )));
    }
    if !(0.0..=1.0).contains(&params.g_min) {
        return Err(TerrainError::Param(format!("g_min {} outside [0, 1]", params.g_min)));
    }
    if d > h.width || d > h.height {
        return Err(TerrainError::CellTooLarge {
            cell_size: d,
            width: h.width,
            height: h.height,
        });
    }
    let rows = h.height / d;
    let cols = h.width / d;
    let r = params.sensing_radius;
    let mut stats = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let block: Vec<f64> = (row * d..(row + 1) * d)
                .flat_map(|y| (col * d..(col + 1) * d).map(move |x| (x, y)))
                .map(|(x, y)| h.normalized(x, y))
                .collect();
            let (raw, var, n) = mean_var(block.iter().copied());
            let mut g_mean = 1.0 - raw;
            if let Some(t) = texture {
                g_mean -= t.penalty(&block);
            }
            let g_mean = g_mean.clamp(0.0, 1.0);
            let g_var = var / n as f64;

            let cy2 = (2 * row * d + d) as i64;
            let cx2 = (2 * col * d + d) as i64;
            let v = window_variance(h, cy2, cx2, r);
            let los_mean = 1.0 - (v / V_REF).min(1.0);
            let mut ring = Vec::with_capacity(9);
            for dy in [-2i64, 0, 2] {
                for dx in [-2i64, 0, 2] {
                    ring.push(window_variance(h, cy2 + dy, cx2 + dx, r));
                }
            }
            let ring_mean = ring.iter().sum::<f64>() / 9.0;
            let sample_var = ring.iter().map(|w| (w - ring_mean).powi(2)).sum::<f64>() / 8.0;
            stats.push(CellStats {
                g_mean,
                g_var,
                los_mean,
                los_var: sample_var / 9.0,
                nogo: g_mean < params.g_min,
            });
        }
    }
    Ok(CellGrid {
        rows,
        cols,
        cell_size: d,
        sensing_radius: r,
        resolution: h.resolution,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(width: usize, height: usize, f: impl Fn(usize, usize) -> u16) -> Heightmap {
        Heightmap {
            width,
            height,
            samples: (0..height)
                .flat_map(|y| (0..width).map(move |x| (x, y)))
                .map(|(x, y)| f(x, y))
                .collect(),
            maxval: 255,
            resolution: 1.0,
        }
    }

    fn params(cell_size: usize, sensing_radius: usize) -> DiscretizeParams {
        DiscretizeParams {
            cell_size,
            sensing_radius,
            g_min: 0.0,
        }
    }

    #[test]
    fn window_bounds() {
        // Cell 0 of size 2 has doubled center 2: pixels 0 and 1 within radius 1.
        assert_eq!(window(2, 1, 10), (0, 2));
        // Odd cell 3 px: doubled center 3 is pixel 1; radius 1 covers 0..=2.
        assert_eq!(window(3, 1, 10), (0, 3));
        assert_eq!(window(3, 0, 10), (1, 2));
        assert_eq!(window(18, 2, 10), (7, 10));
        assert_eq!(window(-4, 1, 10), (0, 0));
    }

    #[test]
    fn uniform_map() {
        let h = map(8, 6, |_, _| 51);
        let g = discretize(&h, &params(2, 2)).unwrap();
        assert_eq!((g.rows, g.cols), (3, 4));
        for s in &g.stats {
            assert!((s.g_mean - (1.0 - 51.0 / 255.0)).abs() < 1e-12);
            assert_eq!(s.g_var, 0.0);
            assert_eq!(s.los_mean, 1.0);
            assert_eq!(s.los_var, 0.0);
        }
    }

    #[test]
    fn checkerboard() {
        let h = map(8, 8, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 });
        let g = discretize(&h, &params(2, 1)).unwrap();
        for s in &g.stats {
            assert!((s.g_mean - 0.5).abs() < 1e-12);
            // Population variance 0.25 of the 4-pixel block, over 4 pixels.
            assert!((s.g_var - 0.0625).abs() < 1e-12);
            assert!(s.los_mean.abs() < 1e-12);
        }
    }

    #[test]
    fn nogo_threshold_and_partial_cells() {
        let h = map(5, 5, |x, _| if x < 2 { 255 } else { 0 });
        let mut p = params(2, 1);
        p.g_min = 0.5;
        let g = discretize(&h, &p).unwrap();
        assert_eq!((g.rows, g.cols), (2, 2));
        assert!(g.stats[0].nogo && g.stats[2].nogo);
        assert!(!g.stats[1].nogo && !g.stats[3].nogo);
    }

    #[test]
    fn parameter_errors() {
        let h = map(4, 4, |_, _| 0);
        assert!(matches!(
            discretize(&h, &params(5, 3)),
            Err(TerrainError::CellTooLarge { .. })
        ));
        assert!(matches!(discretize(&h, &params(1, 1)), Err(TerrainError::Param(_))));
        assert!(matches!(discretize(&h, &params(4, 1)), Err(TerrainError::Param(_))));
    }

    #[test]
    fn los_variance_oracle() {
        // Independent recomputation for one interior cell with a naive distance test.
        let h = map(12, 12, |x, y| ((x * 37 + y * 91) % 256) as u16);
        let (d, r) = (3usize, 2usize);
        let g = discretize(&h, &params(d, r)).unwrap();
        let (row, col) = (1usize, 2usize);
        let var_at = |cy: f64, cx: f64| {
            let mut v = Vec::new();
            for y in 0..12 {
                for x in 0..12 {
                    let (py, px) = (y as f64 + 0.5, x as f64 + 0.5);
                    if (py - cy).abs() <= r as f64 && (px - cx).abs() <= r as f64 {
                        v.push(h.normalized(x, y));
                    }
                }
            }
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let (cy, cx) = ((row * d) as f64 + d as f64 / 2.0, (col * d) as f64 + d as f64 / 2.0);
        let s = g.stats(super::super::Cell::new(row, col));
        assert!((s.los_mean - (1.0 - (var_at(cy, cx) / 0.25).min(1.0))).abs() < 1e-12);
        let ring: Vec<f64> = [-1.0, 0.0, 1.0]
            .iter()
            .flat_map(|dy| [-1.0, 0.0, 1.0].map(|dx| var_at(cy + dy, cx + dx)))
            .collect();
        let m = ring.iter().sum::<f64>() / 9.0;
        let sv = ring.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 8.0;
        assert!((s.los_var - sv / 9.0).abs() < 1e-12);
    }

    struct Flat(f64);
    impl TextureTerm for Flat {
        fn penalty(&self, _: &[f64]) -> f64 {
            self.0
        }
    }

    #[test]
    fn texture_hook_lowers_traversability() {
        let h = map(4, 4, |_, _| 0);
        let g = discretize_with_texture(&h, &params(2, 1), &Flat(0.3)).unwrap();
        assert!((g.stats[0].g_mean - 0.7).abs() < 1e-12);
        let g = discretize_with_texture(&h, &params(2, 1), &Flat(2.0)).unwrap();
        assert_eq!(g.stats[0].g_mean, 0.0);
    }

    proptest! {
        #[test]
        fn scores_bounded(samples in proptest::collection::vec(0u16..=255, 36), d in 2usize..4, extra in 0usize..3) {
            let h = Heightmap { width: 6, height: 6, samples, maxval: 255, resolution: 1.0 };
            let g = discretize(&h, &params(d, d.div_ceil(2) + extra)).unwrap();
            for s in &g.stats {
                prop_assert!((0.0..=1.0).contains(&s.g_mean));
                prop_assert!((0.0..=1.0).contains(&s.los_mean));
                prop_assert!(s.g_var >= 0.0 && s.g_var.is_finite());
                prop_assert!(s.los_var >= 0.0 && s.los_var.is_finite());
            }
            prop_assert_eq!(&discretize(&h, &params(d, d.div_ceil(2) + extra)).unwrap(), &g);
        }

        #[test]
        fn raising_a_pixel_never_raises_its_cells_score(
            samples in proptest::collection::vec(0u16..=200, 36),
            idx in 0usize..36,
            bump in 1u16..=55,
        ) {
            let h = Heightmap { width: 6, height: 6, samples, maxval: 255, resolution: 1.0 };
            let mut raised = h.clone();
            raised.samples[idx] += bump;
            let a = discretize(&h, &params(2, 1)).unwrap();
            let b = discretize(&raised, &params(2, 1)).unwrap();
            let cell = super::super::Cell::new(idx / 6 / 2, idx % 6 / 2);
            prop_assert!(b.stats(cell).g_mean <= a.stats(cell).g_mean);
        }
    }
}
