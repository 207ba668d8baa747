//! Dyadic covering lattice `z_{n,k} = (1 - 2^-n) e^{2 pi i k / 2^n}`, covering
//! radius search and overlap counts.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::geometry::{phb_disk_to_euclidean_unchecked, phb_distance_unchecked, Point};
use crate::region::polar_grid;
use crate::scalar::Real;

/// Largest supported lattice depth.
pub const MAX_LEVEL: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticeIndex {
    pub n: u32,
    pub k: u64,
}

impl LatticeIndex {
    pub fn new(n: u32, k: u64) -> Result<Self> {
        ensure!(n <= MAX_LEVEL, Index, "lattice level {n} exceeds {MAX_LEVEL}");
        ensure!(k < (1u64 << n), Index, "k = {k} not in [0, 2^{n})");
        Ok(Self { n, k })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CoveringReport<T> {
    pub r: T,
    /// Grid maximum of the overlap count; a lower bound for the true `N`.
    pub measured_n: usize,
    /// `c_ov (1 - r)^-2 ln(1/(1 - r))`.
    pub bound_n: T,
    pub covering_ok: bool,
    pub uncovered_fraction: T,
}

fn level_radius<T: Real>(n: u32) -> T {
    T::one() - T::lit(2f64.powi(-(n as i32)))
}

fn level_point<T: Real>(n: u32, k: u64) -> Point<T> {
    let count = T::lit((1u64 << n) as f64);
    let th = T::TAU() * T::lit(k as f64) / count;
    Complex::from_polar(level_radius(n), th)
}

pub fn lattice_point<T: Real>(idx: LatticeIndex) -> Result<Point<T>> {
    let idx = LatticeIndex::new(idx.n, idx.k)?;
    Ok(level_point(idx.n, idx.k))
}

pub fn lattice_indices_up_to(n_max: u32) -> Vec<LatticeIndex> {
    (0..=n_max.min(MAX_LEVEL))
        .flat_map(|n| (0..(1u64 << n)).map(move |k| LatticeIndex { n, k }))
        .collect()
}

/// `(1 - r)^-2 ln(1/(1 - r))`.
pub fn overlap_shape<T: Real>(r: T) -> T {
    let s = T::one() - r;
    -(s.ln()) / (s * s)
}

/// Indices `k` at level `n` whose angle lies within `half_width` (plus one
/// lattice step) of `center_angle`.
fn angular_window(n: u32, center_angle: f64, half_width: f64) -> impl Iterator<Item = u64> {
    let count = 1u64 << n;
    let step = std::f64::consts::TAU / count as f64;
    let (lo, hi) = if half_width >= std::f64::consts::PI {
        (0i64, count as i64 - 1)
    } else {
        let lo = ((center_angle - half_width) / step).floor() as i64 - 1;
        let hi = ((center_angle + half_width) / step).ceil() as i64 + 1;
        if hi - lo + 1 >= count as i64 {
            (0, count as i64 - 1)
        } else {
            (lo, hi)
        }
    };
    (lo..=hi).map(move |j| j.rem_euclid(count as i64) as u64)
}

/// Lattice points (levels `<= n_max`) inside `D_phb(z, r)`, visiting only the
/// angular windows where the Euclidean form meets each lattice circle.
pub fn lattice_points_in_disk<T: Real>(z: Point<T>, r: T, n_max: u32) -> Vec<LatticeIndex> {
    let disk = phb_disk_to_euclidean_unchecked(z, r);
    let d = disk.center.norm().to_f64_lossy();
    let big_r = disk.radius.to_f64_lossy();
    let arg = if d > 0.0 { disk.center.arg().to_f64_lossy() } else { 0.0 };
    let mut out = Vec::new();
    for n in 0..=n_max.min(MAX_LEVEL) {
        let rho: f64 = level_radius(n);
        if (rho - d).abs() > big_r * (1.0 + 1e-12) + 1e-15 {
            continue;
        }
        let half = if n == 0 || d == 0.0 || d + rho <= big_r {
            std::f64::consts::PI
        } else {
            let kappa = (rho * rho + d * d - big_r * big_r) / (2.0 * rho * d);
            kappa.clamp(-1.0, 1.0).acos()
        };
        let mut seen_window: Vec<u64> = angular_window(n, arg, half).collect();
        seen_window.sort_unstable();
        seen_window.dedup();
        for k in seen_window {
            if phb_distance_unchecked(z, level_point::<T>(n, k)) < r {
                out.push(LatticeIndex { n, k });
            }
        }
    }
    out
}

/// Number of lattice indices with `z ∈ D_phb(z_{n,k}, r)`.
pub fn overlap_count<T: Real>(z: Point<T>, r: T, n_max: u32) -> Result<usize> {
    ensure!(crate::geometry::in_open_disk(z), Domain, "point {z} outside the unit disk");
    ensure!(r > T::zero() && r < T::one(), Domain, "radius {r} not in (0, 1)");
    Ok(lattice_points_in_disk(z, r, n_max).len())
}

/// Pseudohyperbolic distance from `z` to the nearest lattice point of level
/// `<= n_max`. On a fixed circle the distance increases with the angular gap,
/// so only the two angular neighbours per level need checking.
pub fn nearest_lattice_distance<T: Real>(z: Point<T>, n_max: u32) -> T {
    let arg = z.arg().to_f64_lossy().rem_euclid(std::f64::consts::TAU);
    let mut best = T::infinity();
    for n in 0..=n_max.min(MAX_LEVEL) {
        let count = 1u64 << n;
        let step = std::f64::consts::TAU / count as f64;
        let j = (arg / step).floor() as i64;
        for k in [j, j + 1] {
            let k = k.rem_euclid(count as i64) as u64;
            best = best.min(phb_distance_unchecked(z, level_point::<T>(n, k)));
        }
    }
    best
}

/// Radii examined by [`find_covering_radius`]: `0.30, 0.31, ..., 0.99`.
pub fn covering_search_grid<T: Real>() -> Vec<T> {
    (30..=99).map(|i| T::lit(i as f64 / 100.0)).collect()
}

fn check_margin<T: Real>(n_max: u32, boundary_margin: T) -> Result<()> {
    let limit = T::lit(2f64.powi(-(n_max as i32)));
    ensure!(
        boundary_margin > T::zero() && boundary_margin <= limit * (T::one() + T::lit(1e-12)),
        InvalidParameter,
        "boundary margin {boundary_margin} not in (0, 2^-{n_max}]"
    );
    Ok(())
}

/// Test grid of [`find_covering_radius`]: polar, radii uniform in
/// `[0, 1 - margin]`.
pub fn covering_test_grid<T: Real>(grid_resolution: usize, boundary_margin: T) -> Vec<Point<T>> {
    polar_grid(grid_resolution, T::one() - boundary_margin)
}

/// Largest nearest-lattice distance over the test grid.
pub fn covering_gap<T: Real>(n_max: u32, grid_resolution: usize, boundary_margin: T) -> Result<T> {
    check_margin(n_max, boundary_margin)?;
    ensure!(grid_resolution >= 2, InvalidParameter, "grid resolution must be at least 2");
    let grid = covering_test_grid(grid_resolution, boundary_margin);
    Ok(grid
        .par_iter()
        .map(|&z| nearest_lattice_distance(z, n_max))
        .reduce(|| T::zero(), |a, b| a.max(b)))
}

/// Smallest `r` in `{0.30, ..., 0.99}` such that every test point with
/// `|z| <= 1 - boundary_margin` lies in some `D_phb(z_{n,k}, r)`, `n <= n_max`.
/// The value depends on the grid resolution.
pub fn find_covering_radius<T: Real>(n_max: u32, grid_resolution: usize, boundary_margin: T) -> Result<T> {
    ensure!(
        grid_resolution >= 64,
        InvalidParameter,
        "grid resolution {grid_resolution} below 64"
    );
    let gap = covering_gap(n_max, grid_resolution, boundary_margin)?;
    covering_search_grid::<T>().into_iter().find(|&r| gap < r).ok_or_else(|| {
        crate::error::Error::Numerical(format!(
            "no radius below 1 covers the grid (largest gap {gap}); n_max = {n_max} is too small for the margin"
        ))
    })
}

/// Fraction of test points not covered at radius `r`.
pub fn uncovered_fraction<T: Real>(r: T, n_max: u32, grid_resolution: usize, boundary_margin: T) -> Result<T> {
    check_margin(n_max, boundary_margin)?;
    let grid = covering_test_grid(grid_resolution, boundary_margin);
    let missed = grid.par_iter().filter(|&&z| nearest_lattice_distance(z, n_max) >= r).count();
    Ok(T::from_usize_lossy(missed) / T::from_usize_lossy(grid.len()))
}

/// Overlap report at radius `r`: grid maximum of [`overlap_count`] with the
/// boundary margin `2^-n_max`, and the bound `c_ov (1-r)^-2 ln(1/(1-r))`.
pub fn overlap_constant<T: Real>(r: T, n_max: u32, grid_resolution: usize, c_ov: T) -> Result<CoveringReport<T>> {
    ensure!(r > T::zero() && r < T::one(), Domain, "radius {r} not in (0, 1)");
    ensure!(grid_resolution >= 2, InvalidParameter, "grid resolution must be at least 2");
    let margin = T::lit(2f64.powi(-(n_max as i32)));
    let grid = covering_test_grid(grid_resolution, margin);
    let (measured, missed) = grid
        .par_iter()
        .map(|&z| {
            let count = lattice_points_in_disk(z, r, n_max).len();
            (count, usize::from(count == 0))
        })
        .reduce(|| (0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    Ok(CoveringReport {
        r,
        measured_n: measured,
        bound_n: c_ov * overlap_shape(r),
        covering_ok: missed == 0,
        uncovered_fraction: T::from_usize_lossy(missed) / T::from_usize_lossy(grid.len()),
    })
}

/// Number of distinct levels `n` having some lattice point in `D_phb(z, r)`.
pub fn radial_levels<T: Real>(z: Point<T>, r: T, n_max: u32) -> usize {
    let mut levels: Vec<u32> = lattice_points_in_disk(z, r, n_max).iter().map(|i| i.n).collect();
    levels.dedup();
    levels.len()
}

/// `ln(4/(1-r)^2)/ln 2 + 1`.
pub fn radial_level_bound<T: Real>(r: T) -> T {
    let s = T::one() - r;
    (T::lit(4.0) / (s * s)).ln() / T::LN_2() + T::one()
}
