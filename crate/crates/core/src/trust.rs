//! Linear-Gaussian trust belief.
//!
//! A team's trust after a step is `τ = β·z + γ` with `z = [τ_prev, g, σ]`, random weights
//! `β ~ N(μ_β, Σ_β)`, terrain scores drawn from the cell statistics and residual
//! `γ ~ N(0, ξ²)`. [`propagate_trust`] returns the exact first two moments of that product
//! of independent Gaussians; [`mc_trust`] estimates them by sampling.

use std::fmt::Write;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::terrain::{Cell, CellGrid, CellStats};

const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrustError {
    #[error("weight covariance is not symmetric")]
    NotSymmetric,
    #[error("weight covariance is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("cell ({row}, {col}) is no-go or outside the grid")]
    Untraversable { row: usize, col: usize },
}

/// Gaussian trust belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustBelief {
    pub mean: f64,
    pub var: f64,
}

impl TrustBelief {
    pub fn new(mean: f64, var: f64) -> Self {
        TrustBelief { mean, var }
    }
}

impl Default for TrustBelief {
    fn default() -> Self {
        TrustBelief {
            mean: 0.5,
            var: 0.01,
        }
    }
}

/// Weight hyperprior and initial belief of one team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustParams {
    /// `[self, traversability, line of sight]`.
    pub beta_mean: [f64; 3],
    pub beta_cov: [[f64; 3]; 3],
    pub residual_var: f64,
    #[serde(default)]
    pub tau0: TrustBelief,
}

impl TrustParams {
    /// Noise-free weights.
    pub fn deterministic(beta_mean: [f64; 3]) -> Self {
        TrustParams {
            beta_mean,
            beta_cov: [[0.0; 3]; 3],
            residual_var: 0.0,
            tau0: TrustBelief::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TrustError> {
        let finite = |v: f64, what| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(TrustError::NonFinite(what))
            }
        };
        for &b in &self.beta_mean {
            finite(b, "beta_mean")?;
        }
        for row in &self.beta_cov {
            for &v in row {
                finite(v, "beta_cov")?;
            }
        }
        finite(self.residual_var, "residual_var")?;
        finite(self.tau0.mean, "tau0 mean")?;
        finite(self.tau0.var, "tau0 variance")?;
        if self.residual_var < 0.0 {
            return Err(TrustError::Negative("residual_var"));
        }
        if self.tau0.var < 0.0 {
            return Err(TrustError::Negative("tau0 variance"));
        }
        check_psd(&self.beta_cov)
    }

    fn mu(&self) -> Vector3<f64> {
        Vector3::from(self.beta_mean)
    }

    fn sigma(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.beta_cov[i][j])
    }
}

/// Ok when `m` is symmetric and a Cholesky factorization of `m + 1e-12 I` exists.
pub fn check_psd(m: &[[f64; 3]; 3]) -> Result<(), TrustError> {
    for i in 0..3 {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > PSD_TOL * (1.0 + m[i][j].abs()) {
                return Err(TrustError::NotSymmetric);
            }
        }
    }
    let a = Matrix3::from_fn(|i, j| m[i][j]) + Matrix3::identity() * PSD_TOL;
    if a.cholesky().is_some() {
        Ok(())
    } else {
        let min = SymmetricEigen::new(Matrix3::from_fn(|i, j| m[i][j]))
            .eigenvalues
            .min();
        Err(TrustError::NotPsd(min))
    }
}

/// Nearest symmetric PSD matrix in Frobenius norm: eigenvalues clipped at zero.
pub fn nearest_psd(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let sym = Matrix3::from_fn(|i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let out = eig.eigenvectors * Matrix3::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let mut r = [[0.0; 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 0.5 * (out[(i, j)] + out[(j, i)]);
        }
    }
    r
}

fn dot(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn inputs(prev: TrustBelief, cell: &CellStats) -> (Vector3<f64>, Vector3<f64>) {
    (
        Vector3::new(prev.mean, cell.g_mean, cell.los_mean),
        Vector3::new(prev.var, cell.g_var, cell.los_var),
    )
}

/// Exact moments of `β·z + γ` for independent Gaussian `β`, `z` and `γ`.
pub fn propagate_trust(
    prev: TrustBelief,
    cell: &CellStats,
    p: &TrustParams,
) -> Result<TrustBelief, TrustError> {
    p.validate()?;
    Ok(propagate_unchecked(prev, cell, p))
}

pub(crate) fn propagate_unchecked(prev: TrustBelief, cell: &CellStats, p: &TrustParams) -> TrustBelief {
    let (z, zv) = inputs(prev, cell);
    let mu = p.mu();
    let sb = p.sigma();
    let mean = dot(&mu, &z);
    let var = mu.component_mul(&mu).dot(&zv)
        + z.dot(&(sb * z))
        + (0..3).map(|i| sb[(i, i)] * zv[i]).sum::<f64>()
        + p.residual_var;
    TrustBelief {
        mean,
        var: var.max(0.0),
    }
}

/// Monte-Carlo estimate of the propagated moments with `n` samples. Deterministic for a
/// given seed.
pub fn mc_trust(
    prev: TrustBelief,
    cell: &CellStats,
    p: &TrustParams,
    n: usize,
    seed: u64,
) -> TrustBelief {
    let (z_mean, z_var) = inputs(prev, cell);
    let mu = p.mu();
    let eig = SymmetricEigen::new(p.sigma());
    let root = eig.eigenvectors
        * Matrix3::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    let z_sd = z_var.map(|v| v.max(0.0).sqrt());
    let gamma_sd = p.residual_var.max(0.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal3 = |rng: &mut ChaCha8Rng| {
        Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        )
    };

    let n = n.max(2);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let beta = mu + root * normal3(&mut rng);
        let z = z_mean + z_sd.component_mul(&normal3(&mut rng));
        let gamma: f64 = StandardNormal.sample(&mut rng);
        samples.push(dot(&beta, &z) + gamma_sd * gamma);
    }
    // Shifted accumulation keeps degenerate inputs exact.
    let x0 = samples[0];
    let shift = samples.iter().map(|x| x - x0).sum::<f64>() / n as f64;
    let var = samples
        .iter()
        .map(|x| (x - x0 - shift).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    TrustBelief {
        mean: x0 + shift,
        var,
    }
}

/// Beliefs after each cell of a path, starting from `p.tau0`.
pub fn path_trust(
    cells: &[Cell],
    grid: &CellGrid,
    p: &TrustParams,
) -> Result<Vec<TrustBelief>, TrustError> {
    p.validate()?;
    let mut belief = p.tau0;
    let mut out = Vec::with_capacity(cells.len());
    for &c in cells {
        if !grid.is_traversable(c) {
            return Err(TrustError::Untraversable {
                row: c.row,
                col: c.col,
            });
        }
        belief = propagate_unchecked(belief, grid.stats(c), p);
        out.push(belief);
    }
    Ok(out)
}

/// `step,mean,var` with a header line; step 0 is the initial belief.
pub fn timeline_csv(tau0: TrustBelief, beliefs: &[TrustBelief]) -> String {
    let mut out = String::from("step,mean,var\n");
    for (k, b) in std::iter::once(&tau0).chain(beliefs).enumerate() {
        writeln!(out, "{k},{:.9},{:.9}", b.mean, b.var).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(g: f64, gv: f64, s: f64, sv: f64) -> CellStats {
        CellStats {
            g_mean: g,
            g_var: gv,
            los_mean: s,
            los_var: sv,
            nogo: false,
        }
    }

    #[test]
    fn identity_weights_reproduce_the_prior() {
        let p = TrustParams::deterministic([1.0, 0.0, 0.0]);
        let prev = TrustBelief::new(0.3141, 0.0271);
        let out = propagate_trust(prev, &cell(0.2, 0.1, 0.9, 0.05), &p).unwrap();
        assert_eq!(out, prev);
    }

    #[test]
    fn weights_summing_to_one_fix_full_trust() {
        let p = TrustParams::deterministic([0.27, 0.33, 0.40]);
        let out = propagate_trust(TrustBelief::new(1.0, 0.0), &cell(1.0, 0.0, 1.0, 0.0), &p).unwrap();
        assert!((out.mean - 1.0).abs() < 1e-15);
        assert_eq!(out.var, 0.0);
    }

    #[test]
    fn closed_form_by_hand() {
        // One nonzero entry per term so each contribution is checked separately.
        let p = TrustParams {
            beta_mean: [0.5, 0.2, 0.0],
            beta_cov: [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.3]],
            residual_var: 0.01,
            tau0: TrustBelief::default(),
        };
        let out = propagate_trust(TrustBelief::new(0.4, 0.04), &cell(0.5, 0.02, 0.6, 0.1), &p).unwrap();
        assert!((out.mean - (0.2 + 0.1)).abs() < 1e-15);
        let expected = 0.25 * 0.04 + 0.04 * 0.02 + 0.3 * 0.36 + 0.3 * 0.1 + 0.01;
        assert!((out.var - expected).abs() < 1e-15);
    }

    #[test]
    fn geometric_path_recursion() {
        let p = TrustParams {
            tau0: TrustBelief::new(0.0, 0.0),
            ..TrustParams::deterministic([0.5, 0.25, 0.25])
        };
        let grid = CellGrid {
            rows: 1,
            cols: 5,
            cell_size: 2,
            sensing_radius: 1,
            resolution: 1.0,
            stats: vec![cell(1.0, 0.0, 1.0, 0.0); 5],
        };
        let path: Vec<Cell> = (0..5).map(|c| Cell::new(0, c)).collect();
        let beliefs = path_trust(&path, &grid, &p).unwrap();
        let mut tau = 0.0;
        for b in &beliefs {
            tau = 0.5 * tau + 0.5;
            assert!((b.mean - tau).abs() < 1e-15);
        }
        assert_eq!(beliefs[2].mean, 0.875);
        let csv = timeline_csv(p.tau0, &beliefs);
        assert_eq!(csv.lines().count(), 7);
        assert_eq!(csv.lines().nth(1).unwrap(), "0,0.000000000,0.000000000");
    }

    #[test]
    fn nogo_path_is_rejected() {
        let mut grid = CellGrid {
            rows: 1,
            cols: 1,
            cell_size: 2,
            sensing_radius: 1,
            resolution: 1.0,
            stats: vec![cell(0.1, 0.0, 1.0, 0.0)],
        };
        grid.stats[0].nogo = true;
        let p = TrustParams::deterministic([1.0, 0.0, 0.0]);
        assert!(matches!(
            path_trust(&[Cell::new(0, 0)], &grid, &p),
            Err(TrustError::Untraversable { .. })
        ));
        assert!(path_trust(&[Cell::new(3, 3)], &grid, &p).is_err());
    }

    #[test]
    fn covariance_checks() {
        let indefinite = [[0.01, -0.01, -0.01], [-0.01, 0.01, 0.0], [-0.01, 0.0, 0.01]];
        assert!(matches!(check_psd(&indefinite), Err(TrustError::NotPsd(_))));
        let fixed = nearest_psd(&indefinite);
        assert!(check_psd(&fixed).is_ok());
        // Eigenvalues 0.01 (1 ± sqrt 2) and 0.01; clipping drops only the negative one.
        let removed = 0.01 * (1.0 - 2f64.sqrt());
        let trace: f64 = (0..3).map(|i| fixed[i][i]).sum();
        assert!((trace - (0.03 - removed)).abs() < 1e-12);
        assert_eq!(
            check_psd(&[[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
            Err(TrustError::NotSymmetric)
        );
        let mut p = TrustParams::deterministic([0.0; 3]);
        p.residual_var = -1.0;
        assert_eq!(p.validate(), Err(TrustError::Negative("residual_var")));
        p.residual_var = f64::NAN;
        assert_eq!(p.validate(), Err(TrustError::NonFinite("residual_var")));
    }

    #[test]
    fn monte_carlo_degenerate_and_seeded() {
        let p = TrustParams::deterministic([0.27, 0.33, 0.40]);
        let prev = TrustBelief::new(0.7, 0.0);
        let c = cell(0.6, 0.0, 0.3, 0.0);
        let mc = mc_trust(prev, &c, &p, 1000, 5);
        assert_eq!(mc.var, 0.0);
        assert_eq!(mc.mean, propagate_trust(prev, &c, &p).unwrap().mean);

        let noisy = TrustParams {
            beta_cov: [[0.01, 0.0, 0.0], [0.0, 0.02, 0.0], [0.0, 0.0, 0.01]],
            residual_var: 0.001,
            ..p
        };
        let c = cell(0.6, 0.01, 0.3, 0.02);
        assert_eq!(mc_trust(prev, &c, &noisy, 2000, 9), mc_trust(prev, &c, &noisy, 2000, 9));
        assert_ne!(mc_trust(prev, &c, &noisy, 2000, 9), mc_trust(prev, &c, &noisy, 2000, 10));
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let p = TrustParams {
            beta_mean: [0.4, 0.3, 0.5],
            beta_cov: [[0.02, 0.005, 0.0], [0.005, 0.03, -0.004], [0.0, -0.004, 0.01]],
            residual_var: 0.002,
            tau0: TrustBelief::default(),
        };
        let prev = TrustBelief::new(0.6, 0.03);
        let c = cell(0.7, 0.01, 0.4, 0.02);
        let exact = propagate_trust(prev, &c, &p).unwrap();
        let n = 100_000;
        let mc = mc_trust(prev, &c, &p, n, 42);
        let se = (mc.var / n as f64).sqrt();
        assert!((exact.mean - mc.mean).abs() <= 3.0 * se);
        assert!((exact.var - mc.var).abs() <= 0.05 * exact.var);
    }

    fn psd() -> impl Strategy<Value = [[f64; 3]; 3]> {
        proptest::array::uniform9(-0.3f64..0.3).prop_map(|a| {
            let mut m = [[0.0; 3]; 3];
            for (i, row) in m.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = (0..3).map(|k| a[3 * i + k] * a[3 * j + k]).sum();
                }
            }
            m
        })
    }

    proptest! {
        #[test]
        fn variance_is_non_negative(
            mu in proptest::array::uniform3(-2.0f64..2.0),
            cov in psd(),
            xi in 0.0f64..0.1,
            prev_mean in -1.0f64..2.0,
            prev_var in 0.0f64..0.5,
            g in 0.0f64..1.0, gv in 0.0f64..0.1, s in 0.0f64..1.0, sv in 0.0f64..0.1,
        ) {
            let p = TrustParams { beta_mean: mu, beta_cov: cov, residual_var: xi, tau0: TrustBelief::default() };
            let out = propagate_trust(TrustBelief::new(prev_mean, prev_var), &cell(g, gv, s, sv), &p).unwrap();
            prop_assert!(out.var >= 0.0 && out.var.is_finite());
        }

        #[test]
        fn mean_is_monotone_in_terrain_scores(
            mu in proptest::array::uniform3(0.0f64..1.0),
            prev in 0.0f64..1.0,
            g in 0.0f64..1.0, dg in 0.0f64..1.0, s in 0.0f64..1.0, ds in 0.0f64..1.0,
        ) {
            let p = TrustParams::deterministic(mu);
            let lo = propagate_trust(TrustBelief::new(prev, 0.0), &cell(g, 0.0, s, 0.0), &p).unwrap();
            let hi = propagate_trust(
                TrustBelief::new(prev, 0.0),
                &cell((g + dg).min(1.0), 0.0, (s + ds).min(1.0), 0.0),
                &p,
            ).unwrap();
            prop_assert!(hi.mean >= lo.mean);
        }

        #[test]
        fn means_stay_bounded(
            raw in proptest::array::uniform3(0.0f64..1.0),
            tau0 in -1.0f64..1.0,
            cells in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..20),
        ) {
            // Scale weights so β0 < 1 and the sum is at most 1.
            let total = raw.iter().sum::<f64>().max(1.0) + 1e-9;
            let mu = raw.map(|b| b / total);
            let p = TrustParams::deterministic(mu);
            let mut b = TrustBelief::new(tau0, 0.0);
            for (g, s) in cells {
                b = propagate_trust(b, &cell(g, 0.0, s, 0.0), &p).unwrap();
                prop_assert!(b.mean >= tau0.min(0.0) - 1e-12 && b.mean <= 1.0 + 1e-12);
            }
        }
    }
}
