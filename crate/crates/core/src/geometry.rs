//! Pseudohyperbolic geometry of the unit disk.
//!
//! The pseudohyperbolic distance is `|z - w| / |1 - conj(z) w|`. Its balls are
//! Euclidean disks whose center and radius have closed forms; every routine
//! here is exact up to floating-point rounding.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::scalar::Real;

/// A point of the complex plane.
pub type Point<T> = Complex<T>;

/// `|z| < 1` with the 1e-14 boundary guard.
pub fn in_open_disk<T: Real>(z: Point<T>) -> bool {
    z.norm() < T::one() - T::lit(1e-14).max(T::epsilon())
}

fn require_disk<T: Real>(z: Point<T>, what: &str) -> Result<()> {
    ensure!(
        z.re.is_finite() && z.im.is_finite() && in_open_disk(z),
        Domain,
        "{what} = {z} is not in the open unit disk"
    );
    Ok(())
}

fn require_radius<T: Real>(r: T) -> Result<()> {
    ensure!(r > T::zero() && r < T::one(), Domain, "radius {r} is not in (0, 1)");
    Ok(())
}

/// Pseudohyperbolic distance `|z - w| / |1 - conj(z) w|`.
pub fn phb_distance<T: Real>(z: Point<T>, w: Point<T>) -> Result<T> {
    require_disk(z, "z")?;
    require_disk(w, "w")?;
    Ok(phb_distance_unchecked(z, w))
}

#[inline]
pub(crate) fn phb_distance_unchecked<T: Real>(z: Point<T>, w: Point<T>) -> T {
    let den = (Complex::new(T::one(), T::zero()) - z.conj() * w).norm();
    (z - w).norm() / den
}

/// The involutive disk automorphism `(a - z) / (1 - conj(a) z)`.
pub fn automorphism<T: Real>(a: Point<T>, z: Point<T>) -> Result<Point<T>> {
    require_disk(a, "a")?;
    require_disk(z, "z")?;
    Ok(automorphism_unchecked(a, z))
}

#[inline]
pub(crate) fn automorphism_unchecked<T: Real>(a: Point<T>, z: Point<T>) -> Point<T> {
    (a - z) / (Complex::new(T::one(), T::zero()) - a.conj() * z)
}

/// Derivative of [`automorphism`] in `z`: `-(1 - |a|^2) / (1 - conj(a) z)^2`.
pub fn automorphism_derivative<T: Real>(a: Point<T>, z: Point<T>) -> Result<Point<T>> {
    require_disk(a, "a")?;
    require_disk(z, "z")?;
    Ok(automorphism_derivative_unchecked(a, z))
}

#[inline]
pub(crate) fn automorphism_derivative_unchecked<T: Real>(a: Point<T>, z: Point<T>) -> Point<T> {
    let q = Complex::new(T::one(), T::zero()) - a.conj() * z;
    -Complex::new(T::one() - a.norm_sqr(), T::zero()) / (q * q)
}

/// Pseudohyperbolic doubling `2r / (1 + r^2)`: the radius of the ball about a
/// point at distance `r` that contains the ball of radius `r`.
pub fn phb_double<T: Real>(r: T) -> Result<T> {
    require_radius(r)?;
    Ok((r + r) / (T::one() + r * r))
}

/// A Euclidean disk `D(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EuclideanDisk<T> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Real> EuclideanDisk<T> {
    pub fn new(center: Point<T>, radius: T) -> Self {
        Self { center, radius }
    }

    #[inline]
    pub fn contains(&self, z: Point<T>) -> bool {
        (z - self.center).norm_sqr() < self.radius * self.radius
    }

    /// Lebesgue area divided by pi (normalized so the unit disk has area 1).
    pub fn normalized_area(&self) -> T {
        self.radius * self.radius
    }
}

/// Euclidean form of the pseudohyperbolic disk `D_phb(center, r)`.
///
/// For a real center `x` the disk has diameter `[(x - r)/(1 - r x), (x + r)/(1 + r x)]`,
/// so its center is `x (1 - r^2)/(1 - r^2 x^2)` and its radius `r (1 - x^2)/(1 - r^2 x^2)`.
/// A general center is rotated onto the positive real axis and back.
pub fn phb_disk_to_euclidean<T: Real>(center: Point<T>, r: T) -> Result<EuclideanDisk<T>> {
    require_disk(center, "center")?;
    require_radius(r)?;
    Ok(phb_disk_to_euclidean_unchecked(center, r))
}

pub(crate) fn phb_disk_to_euclidean_unchecked<T: Real>(center: Point<T>, r: T) -> EuclideanDisk<T> {
    let one = T::one();
    let x = center.norm();
    let r2 = r * r;
    let den = one - r2 * x * x;
    let c = x * (one - r2) / den;
    let radius = r * (one - x * x) / den;
    let dir = if x > T::zero() { center / x } else { Complex::new(one, T::zero()) };
    EuclideanDisk { center: dir * c, radius }
}

/// A pseudohyperbolic disk together with its Euclidean form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PhbDisk<T> {
    pub center: Point<T>,
    pub radius: T,
    pub euclidean_center: Point<T>,
    pub euclidean_radius: T,
}

impl<T: Real> PhbDisk<T> {
    pub fn new(center: Point<T>, radius: T) -> Result<Self> {
        let e = phb_disk_to_euclidean(center, radius)?;
        Ok(Self {
            center,
            radius,
            euclidean_center: e.center,
            euclidean_radius: e.radius,
        })
    }

    pub fn euclidean(&self) -> EuclideanDisk<T> {
        EuclideanDisk::new(self.euclidean_center, self.euclidean_radius)
    }

    /// Membership through the metric itself (not the Euclidean form).
    pub fn contains(&self, w: Point<T>) -> bool {
        in_open_disk(w) && phb_distance_unchecked(self.center, w) < self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type P = Point<f64>;

    fn random_in_disk(rng: &mut ChaCha8Rng, max: f64) -> P {
        let rho = max * rng.random::<f64>().sqrt();
        P::from_polar(rho, std::f64::consts::TAU * rng.random::<f64>())
    }

    #[test]
    fn distance_examples() {
        let w = P::new(0.3, -0.4);
        assert!((phb_distance(P::new(0.0, 0.0), w).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(phb_distance(w, w).unwrap(), 0.0);
        let d = phb_distance(P::new(0.5, 0.0), P::new(-0.5, 0.0)).unwrap();
        assert!((d - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_points_off_the_disk() {
        assert!(phb_distance(P::new(1.0, 0.0), P::new(0.0, 0.0)).is_err());
        assert!(automorphism(P::new(0.0, 1.2), P::new(0.0, 0.0)).is_err());
        assert!(automorphism_derivative(P::new(0.1, 0.0), P::new(f64::NAN, 0.0)).is_err());
        assert!(phb_disk_to_euclidean(P::new(0.0, 0.0), 1.0).is_err());
        assert!(phb_disk_to_euclidean(P::new(0.0, 0.0), 0.0).is_err());
        assert!(phb_double(1.0f64).is_err());
    }

    #[test]
    fn automorphism_examples() {
        let a = P::new(0.3, 0.2);
        assert_eq!(automorphism(a, P::new(0.0, 0.0)).unwrap(), a);
        assert!(automorphism(a, a).unwrap().norm() < 1e-16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = random_in_disk(&mut rng, 0.99);
            let z = random_in_disk(&mut rng, 0.99);
            let back = automorphism(a, automorphism(a, z).unwrap()).unwrap();
            assert!((back - z).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-7;
        for _ in 0..200 {
            let a = random_in_disk(&mut rng, 0.9);
            let z = random_in_disk(&mut rng, 0.9);
            let fd = (automorphism(a, z + h).unwrap() - automorphism(a, z - h).unwrap()) / (2.0 * h);
            let d = automorphism_derivative(a, z).unwrap();
            assert!((fd - d).norm() < 1e-6 * d.norm().max(1.0), "{fd} vs {d}");
        }
        assert_eq!(
            automorphism_derivative(P::new(0.0, 0.0), P::new(0.4, 0.1)).unwrap(),
            P::new(-1.0, 0.0)
        );
        let a = P::new(0.6, 0.0);
        let d0 = automorphism_derivative(a, P::new(0.0, 0.0)).unwrap();
        assert!((d0 - P::new(-(1.0 - 0.36), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn euclidean_form_examples() {
        let e = phb_disk_to_euclidean(P::new(0.0, 0.0), 0.3).unwrap();
        assert_eq!(e.center, P::new(0.0, 0.0));
        assert!((e.radius - 0.3).abs() < 1e-16);
        // diameter endpoints (x - r)/(1 - r x) = 0 and (x + r)/(1 + r x) = 0.8
        let e = phb_disk_to_euclidean(P::new(0.5, 0.0), 0.5).unwrap();
        assert!((e.center.re - 0.4).abs() < 1e-15 && e.center.im.abs() < 1e-16);
        assert!((e.radius - 0.4).abs() < 1e-15);
    }

    #[test]
    fn euclidean_form_membership_cross_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z = random_in_disk(&mut rng, 0.95);
            let r = 0.05 + 0.9 * rng.random::<f64>();
            let disk = PhbDisk::new(z, r).unwrap();
            let e = disk.euclidean();
            for _ in 0..500 {
                let w = random_in_disk(&mut rng, 0.999);
                let d = phb_distance(z, w).unwrap();
                if (d - r).abs() < 1e-9 {
                    continue;
                }
                assert_eq!(d < r, e.contains(w));
            }
        }
    }

    #[test]
    fn doubling() {
        assert!((phb_double(1.0f64 / 3.0).unwrap() - 0.6).abs() < 1e-15);
        for r in [0.1, 0.4, 0.77, 0.95] {
            let via_distance = phb_distance(P::new(-r, 0.0), P::new(r, 0.0)).unwrap();
            assert!((phb_double(r).unwrap() - via_distance).abs() < 1e-15);
        }
        assert!(phb_double(1e-300f64).unwrap() < 1e-299);
    }

    #[test]
    fn boundary_distance_constants() {
        for r in [0.2, 0.5, 0.8, 0.95] {
            for i in 0..200 {
                let x = i as f64 / 200.0;
                let outer = 1.0 - (x + r) / (1.0 + r * x);
                let inner = 1.0 - (x - r) / (1.0 - r * x);
                assert!(outer >= (1.0 - r) / 2.0 * (1.0 - x) - 1e-15);
                assert!(inner <= 2.0 / (1.0 - r) * (1.0 - x) + 1e-15);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let d = phb_distance(Point::<f32>::new(0.5, 0.0), Point::new(-0.5, 0.0)).unwrap();
        assert!((d - 0.8).abs() < 1e-6);
        let e = phb_disk_to_euclidean(Point::<f32>::new(0.5, 0.0), 0.5).unwrap();
        assert!((e.radius - 0.4).abs() < 1e-6);
    }
}
