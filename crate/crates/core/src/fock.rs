//! Fock spaces on the plane: Gaussian-weighted norms, the isometric
//! translations, the integer lattice and `p = 2` sampling constants.
//!
//! Areas are planar Lebesgue measure `dx dy` without normalization.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analysis::{abs_pow, moment_gram, polynomial_roots, AnalyticFunction, SpaceParams};
use crate::bounds::BoundConfig;
use crate::error::{ensure, Result};
use crate::geometry::Point;
use crate::linalg::HermitianMatrix;
use crate::quadrature::{adaptive, disk_rule, integrate_nodes, sector_rule, split_sector_rule, Density, Node, RuleSize};
use crate::region::Region;
use crate::sampling::{pencil_from, result_from_pencil, SamplingResult};
use crate::scalar::Real;

/// Relative Gaussian tail mass the default truncation radius must stay below.
pub const TAIL_TARGET: f64 = 1e-12;
/// Relative tolerance of the adaptive Fock quadrature.
pub const FOCK_TOLERANCE: f64 = 1e-10;
/// Spacing of the test grid used for lattice covering and overlap.
pub const FOCK_GRID_STEP: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FockParams<T> {
    pub p: T,
    pub alpha: T,
    pub truncation_radius: T,
}

impl<T: Real> FockParams<T> {
    pub fn new(p: T, alpha: T, truncation_radius: T) -> Result<Self> {
        ensure!(p >= T::one(), InvalidParameter, "p = {p} must be at least 1");
        ensure!(alpha > T::zero(), InvalidParameter, "alpha = {alpha} must be positive");
        ensure!(
            truncation_radius > T::zero() && truncation_radius.is_finite(),
            InvalidParameter,
            "truncation radius {truncation_radius} must be positive"
        );
        Ok(Self {
            p,
            alpha,
            truncation_radius,
        })
    }

    /// Parameters with [`default_truncation`] for polynomials of `degree`.
    pub fn for_degree(p: T, alpha: T, degree: usize) -> Result<Self> {
        Self::new(p, alpha, T::one())?;
        Self::new(p, alpha, default_truncation(p, alpha, degree))
    }

    /// `exp(-p alpha |z|^2 / 2) dx dy`.
    pub fn density(&self) -> Density<T> {
        Density::Gaussian {
            beta: self.p * self.alpha * T::lit(0.5),
            scale: T::one(),
        }
    }

    /// Largest relative tail of `|z^n|^p` weight beyond the truncation radius
    /// over `n <= degree`.
    pub fn tail_bound(&self, degree: usize) -> T {
        (0..=degree)
            .map(|n| monomial_tail(self.p, self.alpha, n, self.truncation_radius))
            .fold(T::zero(), T::max)
    }
}

/// `Q(p n/2 + 1, p alpha R^2 / 2)`: the fraction of `int |z^n|^p e^{-p alpha |z|^2/2}`
/// lying outside `D(0, R)`.
pub fn monomial_tail<T: Real>(p: T, alpha: T, n: usize, radius: T) -> T {
    let a = p.to_f64_lossy() * n as f64 * 0.5 + 1.0;
    let x = p.to_f64_lossy() * alpha.to_f64_lossy() * radius.to_f64_lossy().powi(2) * 0.5;
    T::lit(statrs::function::gamma::gamma_ur(a, x))
}

/// `max(6/sqrt(alpha), 2 sqrt(degree/alpha))`, enlarged by 5% steps until
/// the monomial tails up to `degree` drop below `1e-12`.
pub fn default_truncation<T: Real>(p: T, alpha: T, degree: usize) -> T {
    let d = T::from_usize_lossy(degree);
    let mut r = (T::lit(6.0) / alpha.sqrt()).max(T::lit(2.0) * (d / alpha).sqrt());
    for _ in 0..200 {
        let worst = (0..=degree).map(|n| monomial_tail(p, alpha, n, r)).fold(T::zero(), T::max);
        if worst < T::lit(TAIL_TARGET) {
            break;
        }
        r *= T::lit(1.05);
    }
    r
}

/// `||z^n||^2 = pi n! / alpha^{n+1}` on the whole plane for `p = 2`.
pub fn fock_monomial_norm_p2<T: Real>(n: usize, alpha: T) -> T {
    let mut v = T::PI() / alpha;
    for k in 1..=n {
        v *= T::from_usize_lossy(k) / alpha;
    }
    v
}

/// Tensor nodes over `E` or `D(0, radius)`; pieces of `E` are cut through
/// the points in `cuts`.
fn planar_nodes<T: Real>(
    region: Option<&Region<T>>,
    radius: T,
    density: Density<T>,
    size: RuleSize,
    cuts: &[Point<T>],
) -> Result<Vec<Node<T>>> {
    match region {
        None => sector_rule(T::zero(), radius, T::zero(), T::TAU(), density, size),
        Some(e) => {
            let radii: Vec<T> = cuts.iter().map(|z| z.norm()).collect();
            let angles: Vec<T> = cuts.iter().map(|z| z.arg()).collect();
            let mut nodes = Vec::new();
            for piece in e.disjoint_pieces() {
                nodes.extend(split_sector_rule(
                    piece.rho_min,
                    piece.rho_max,
                    piece.theta_start,
                    piece.width,
                    &radii,
                    &angles,
                    density,
                    size,
                )?);
            }
            Ok(nodes)
        }
    }
}

fn step_h<T: Real>(x: T) -> T {
    if x > T::zero() {
        (-x.recip()).exp()
    } else {
        T::zero()
    }
}

/// Smooth cutoff: 1 on `[0, 1/2]`, 0 on `[1, inf)`.
fn cutoff<T: Real>(t: T) -> T {
    let a = step_h(T::one() - t);
    let b = step_h(t - T::lit(0.5));
    if a == T::zero() {
        T::zero()
    } else {
        a / (a + b)
    }
}

/// Cutoff disks `(center, delta)` around the zeros inside `D(0, radius)`,
/// pairwise disjoint. Zeros closer than `1e-9` are merged.
fn zero_disks<T: Real>(zeros: &[Point<T>], radius: T) -> Vec<(Point<T>, T)> {
    let mut centers: Vec<Point<T>> = Vec::new();
    for &z in zeros {
        if !centers.iter().any(|c| (*c - z).norm() < T::lit(1e-9)) {
            centers.push(z);
        }
    }
    centers
        .iter()
        .enumerate()
        .filter_map(|(k, &c)| {
            let gap = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &o)| (o - c).norm())
                .fold(T::infinity(), T::min);
            let delta = T::one().min(gap * T::lit(0.45));
            (c.norm() + delta < radius).then_some((c, delta))
        })
        .collect()
}

/// `(int_E |f|^p e^{-p alpha |z|^2/2} dA)^{1/p}` for any evaluable `f`, over
/// `E` or the disk of the truncation radius. `degree_hint` sets the starting
/// rule size.
///
/// For `p` other than an even integer, `|f|^p` is not smooth at the zeros of
/// `f`. On the whole disk the integrand is then split with smooth cutoffs
/// around the given `zeros`: each cutoff piece is integrated in polar
/// coordinates about its zero, where it is smooth, and the remainder
/// vanishes near every zero. On a region the sectors are instead cut
/// through the zeros.
pub fn fock_norm_of<T: Real, F>(
    f: F,
    zeros: &[Point<T>],
    degree_hint: usize,
    params: FockParams<T>,
    region: Option<&Region<T>>,
) -> Result<T>
where
    F: Fn(Point<T>) -> Complex<T> + Sync,
{
    if let Some(e) = region {
        e.check_within(params.truncation_radius)?;
        if e.is_empty() {
            return Ok(T::zero());
        }
    }
    let working = (params.p * T::from_usize_lossy(degree_hint) * T::lit(0.5))
        .ceil()
        .to_usize()
        .unwrap_or(degree_hint);
    let start = RuleSize::for_degree(working + 8);
    let p = params.p;
    let even = (p * T::lit(0.5)).fract() == T::zero();
    let disks = if even || region.is_some() {
        Vec::new()
    } else {
        zero_disks(zeros, params.truncation_radius)
    };
    let cuts: &[Point<T>] = if even { &[] } else { zeros };
    let density = params.density();
    let integral = adaptive(start, T::tolerance(FOCK_TOLERANCE), 5, |size| {
        let nodes = planar_nodes(region, params.truncation_radius, density, size, cuts)?;
        if disks.is_empty() {
            return Ok(integrate_nodes(&nodes, |z| abs_pow(f(z), p)));
        }
        let rest = |z: Point<T>| {
            let w: T = disks.iter().map(|&(c, d)| cutoff((z - c).norm() / d)).sum();
            let keep = T::one() - w;
            if keep == T::zero() {
                T::zero()
            } else {
                keep * abs_pow(f(z), p)
            }
        };
        let mut total = integrate_nodes(&nodes, rest);
        for &(c, d) in &disks {
            let local = disk_rule(c, d, density, size);
            total += integrate_nodes(&local, |z| cutoff((z - c).norm() / d) * abs_pow(f(z), p));
        }
        Ok(total)
    })?;
    Ok(integral.powf(p.recip()))
}

/// Fock norm of a plain polynomial, restricted to `E` if given.
pub fn fock_norm<T: Real>(f: &AnalyticFunction<T>, params: FockParams<T>, region: Option<&Region<T>>) -> Result<T> {
    f.validate()?;
    ensure!(f.is_plain(), InvalidParameter, "Fock norms take plain polynomials");
    let zeros = if f.degree() > 0 { polynomial_roots(&f.coeffs)? } else { Vec::new() };
    fock_norm_of(|z| f.eval(z), &zeros, f.degree(), params, region)
}

/// `T_a f(z) = e^{alpha conj(a) z - alpha |a|^2 / 2} f(z - a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockTranslate<T> {
    pub f: AnalyticFunction<T>,
    pub a: Point<T>,
    pub alpha: T,
}

impl<T: Real> FockTranslate<T> {
    pub fn eval(&self, z: Point<T>) -> Complex<T> {
        let e = self.a.conj() * z * self.alpha - Complex::new(self.alpha * self.a.norm_sqr() * T::lit(0.5), T::zero());
        e.exp() * self.f.eval(z - self.a)
    }

    /// Truncation radius that keeps the translated mass: the original radius
    /// plus `|a|`.
    pub fn truncation(&self, params: FockParams<T>) -> FockParams<T> {
        FockParams {
            truncation_radius: params.truncation_radius + self.a.norm(),
            ..params
        }
    }

    pub fn norm(&self, params: FockParams<T>) -> Result<T> {
        let zeros: Vec<Point<T>> = if self.f.degree() > 0 {
            polynomial_roots(&self.f.coeffs)?.into_iter().map(|z| z + self.a).collect()
        } else {
            Vec::new()
        };
        fock_norm_of(|z| self.eval(z), &zeros, self.f.degree() + 8, self.truncation(params), None)
    }
}

pub fn fock_translate<T: Real>(f: &AnalyticFunction<T>, a: Point<T>, alpha: T) -> Result<FockTranslate<T>> {
    f.validate()?;
    ensure!(f.is_plain(), InvalidParameter, "translations take plain polynomials");
    ensure!(alpha > T::zero(), InvalidParameter, "alpha = {alpha} must be positive");
    Ok(FockTranslate { f: f.clone(), a, alpha })
}

/// Lattice point `n + i k`.
pub fn fock_lattice<T: Real>(n: i64, k: i64) -> Point<T> {
    Complex::new(T::lit(n as f64), T::lit(k as f64))
}

fn fock_test_grid<T: Real>(window: usize) -> Vec<Point<T>> {
    let w = window.max(1) as f64;
    let steps = (2.0 * w / FOCK_GRID_STEP).round() as usize;
    let mut pts = Vec::with_capacity((steps + 1) * (steps + 1));
    for i in 0..=steps {
        for j in 0..=steps {
            pts.push(Complex::new(
                T::lit(-w + i as f64 * FOCK_GRID_STEP),
                T::lit(-w + j as f64 * FOCK_GRID_STEP),
            ));
        }
    }
    pts
}

fn lattice_count<T: Real>(z: Point<T>, r: T) -> usize {
    let (x, y) = (z.re.to_f64_lossy(), z.im.to_f64_lossy());
    let rr = r.to_f64_lossy();
    let mut count = 0;
    for n in (x - rr).floor() as i64..=(x + rr).ceil() as i64 {
        for k in (y - rr).floor() as i64..=(y + rr).ceil() as i64 {
            if (z - fock_lattice::<T>(n, k)).norm() < r {
                count += 1;
            }
        }
    }
    count
}

/// Largest number of disks `D(n + i k, r)` containing a point of the test
/// grid on `[-window, window]^2` (spacing 1/32).
pub fn fock_overlap<T: Real>(r: T, window: usize) -> Result<usize> {
    ensure!(r > T::zero(), InvalidParameter, "r = {r} must be positive");
    Ok(fock_test_grid::<T>(window)
        .into_iter()
        .map(|z| lattice_count(z, r))
        .max()
        .unwrap_or(0))
}

/// Whether every test grid point on `[-window, window]^2` lies in some
/// `D(n + i k, r)`.
pub fn fock_covered<T: Real>(r: T, window: usize) -> Result<bool> {
    ensure!(r > T::zero(), InvalidParameter, "r = {r} must be positive");
    Ok(fock_test_grid::<T>(window).into_iter().all(|z| {
        let nearest = fock_lattice::<T>(z.re.round().to_i64().unwrap_or(0), z.im.round().to_i64().unwrap_or(0));
        (z - nearest).norm() < r
    }))
}

/// `G[i][j] = int_E conj(z)^i z^j e^{-alpha |z|^2} dA`.
pub fn fock_gram_matrix<T: Real>(region: &Region<T>, degree: usize, alpha: T) -> Result<HermitianMatrix<T>> {
    ensure!(alpha > T::zero(), InvalidParameter, "alpha = {alpha} must be positive");
    moment_gram(
        region,
        degree,
        Density::Gaussian {
            beta: alpha,
            scale: T::one(),
        },
    )
}

/// Best `C` with `||f||_{L^2(E)} >= C ||f||` over polynomials of degree
/// `<= degree` in the `p = 2` Fock space, against the untruncated whole-plane
/// norm `pi n! / alpha^{n+1}`.
pub fn fock_optimal_constant_p2<T: Real>(region: &Region<T>, degree: usize, alpha: T, truncation_radius: T) -> Result<SamplingResult<T>> {
    ensure!(alpha > T::zero(), InvalidParameter, "alpha = {alpha} must be positive");
    region.check_within(truncation_radius)?;
    let diag: Vec<T> = (0..=degree).map(|n| fock_monomial_norm_p2(n, alpha)).collect();
    ensure!(
        diag.iter().all(|d| d.is_finite() && *d > T::lit(1e-300)),
        Numerical,
        "whole-plane Gram diagonal out of range at degree {degree}"
    );
    let pencil = pencil_from(fock_gram_matrix(region, degree, alpha)?, diag)?;
    result_from_pencil(&pencil, degree, SpaceParams { p: T::lit(2.0), alpha }, &region.label)
}

/// `e^{-2 alpha r^2} (gamma / c)^{eta ln M + 1/p}` clamped to `[0, 1]`, with
/// `ln M = 8 alpha r^2 ln r + (2/p) ln r`, `eta = c'' 16 ln 2` and `c` the
/// Remez constant of `cfg`.
pub fn fock_bound<T: Real>(gamma: T, r: T, params: FockParams<T>, cfg: &BoundConfig<T>) -> Result<T> {
    ensure!(
        gamma > T::zero() && gamma <= T::one(),
        InvalidParameter,
        "gamma = {gamma} not in (0, 1]"
    );
    ensure!(r > T::SQRT_2(), InvalidParameter, "r = {r} must exceed sqrt 2");
    let ln_r = r.ln();
    let ln_m = T::lit(8.0) * params.alpha * r * r * ln_r + T::lit(2.0) / params.p * ln_r;
    let eta = cfg.c_dprime.value * T::lit(16.0) * T::LN_2();
    let v = (-T::lit(2.0) * params.alpha * r * r).exp() * (gamma / cfg.c_remez.value).powf(eta * ln_m + params.p.recip());
    Ok(v.max(T::zero()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::AnnularSector;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn gaussian_integral_oracle() {
        let params = FockParams::for_degree(2.0, 1.0, 0).unwrap();
        let n = fock_norm(&AnalyticFunction::constant(c(1.0, 0.0)), params, None).unwrap();
        assert!((n - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        let e = Region::<f64>::empty();
        assert_eq!(fock_norm(&AnalyticFunction::constant(c(1.0, 0.0)), params, Some(&e)).unwrap(), 0.0);
    }

    #[test]
    fn default_truncation_meets_tail_target() {
        for (p, alpha, d) in [(2.0, 1.0, 0), (2.0, 0.5, 20), (1.0, 2.0, 20), (3.0, 1.0, 10)] {
            let params = FockParams::for_degree(p, alpha, d).unwrap();
            assert!(params.tail_bound(d) < 1e-12, "{p} {alpha} {d}");
            assert!(params.truncation_radius >= 6.0 / f64::sqrt(alpha));
        }
        assert_eq!(default_truncation(2.0, 1.0, 0), 6.0);
        // 2 sqrt(d / alpha) leaves a tail of about 1e-8 at d = 10
        assert!(monomial_tail(2.0, 1.0, 10, 2.0 * 10f64.sqrt()) > 1e-9);
        assert!(default_truncation(2.0, 1.0, 10) > 2.0 * 10f64.sqrt());
    }

    #[test]
    fn translation_is_pointwise_isometric() {
        let f = AnalyticFunction::polynomial(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.1, 0.0)]);
        let a = c(1.2, -0.7);
        let alpha = 1.5;
        let t = fock_translate(&f, a, alpha).unwrap();
        for k in 0..50 {
            let z = Complex::from_polar(0.1 * k as f64, 0.7 * k as f64);
            let lhs = t.eval(z).norm() * (-alpha * z.norm_sqr() / 2.0).exp();
            let rhs = f.eval(z - a).norm() * (-alpha * (z - a).norm_sqr() / 2.0).exp();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
        let zero = fock_translate(&f, c(0.0, 0.0), alpha).unwrap();
        assert_eq!(zero.eval(c(0.3, 0.4)), f.eval(c(0.3, 0.4)));
    }

    #[test]
    fn lattice_and_overlap() {
        assert_eq!(fock_lattice::<f64>(0, 0), c(0.0, 0.0));
        assert_eq!(fock_lattice::<f64>(2, -3), c(2.0, -3.0));
        assert!(fock_covered(1.5, 2).unwrap());
        assert!(!fock_covered(0.5, 2).unwrap());
        for r in [2.0, 4.0] {
            let n = fock_overlap(r, 1).unwrap() as f64;
            assert!((1.0..=8.0).contains(&(n / (r * r))), "{r}: {n}");
        }
    }

    #[test]
    fn optimal_constant_examples() {
        let alpha = 1.0f64;
        let big = default_truncation(2.0, alpha, 10);
        let full = fock_optimal_constant_p2(&Region::disk(big).unwrap(), 10, alpha, big).unwrap();
        assert!((full.c_hat - 1.0).abs() < 1e-6, "{}", full.c_hat);
        let none = fock_optimal_constant_p2(&Region::<f64>::empty(), 5, alpha, big).unwrap();
        assert_eq!(none.c_hat, 0.0);
        let rr = 1.3;
        let d0 = fock_optimal_constant_p2(&Region::disk(rr).unwrap(), 0, alpha, big).unwrap();
        assert!((d0.c_hat - (1.0 - f64::exp(-alpha * rr * rr)).sqrt()).abs() < 1e-12);
        let e = Region::new("s", vec![AnnularSector::new(0.5, 3.0, 0.0, 2.0).unwrap()]).unwrap();
        let a = fock_optimal_constant_p2(&e, 4, alpha, big).unwrap().c_hat;
        let b = fock_optimal_constant_p2(&e, 6, alpha, big).unwrap().c_hat;
        assert!(b <= a + 1e-12);
    }

    #[test]
    fn bound_examples() {
        let params = FockParams::new(2.0, 1.0, 10.0).unwrap();
        let cfg = BoundConfig::default();
        assert!((fock_bound(1.0, 2.0, params, &cfg).unwrap() - (-8.0f64).exp()).abs() < 1e-15);
        let lo = fock_bound(0.3, 2.0, params, &cfg).unwrap();
        let hi = fock_bound(0.6, 2.0, params, &cfg).unwrap();
        assert!(lo <= hi);
        assert!(fock_bound(0.6, 2.5, params, &cfg).unwrap() <= hi);
        assert!(fock_bound(0.5, 1.4, params, &cfg).is_err());
    }
}
