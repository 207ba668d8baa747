//! Test functions, weighted Bergman norms, Gram matrices and the
//! change-of-variable operator `T_a f = (f o phi_a) (phi_a')^{(2+alpha)/p}`.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::{automorphism_unchecked, in_open_disk, Point};
use crate::linalg::HermitianMatrix;
use crate::quadrature::{adaptive, disk_rule, integrate_nodes, radial_rule, sector_rule, split_sector_rule, Density, Node, RuleSize};
use crate::region::Region;
use crate::scalar::Real;

/// Relative tolerance of adaptive norm quadrature.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Refinement cap of adaptive norm quadrature.
pub const MAX_DOUBLINGS: usize = 5;

/// Exponent `p >= 1` and weight `alpha > -1` of `A^{p,alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpaceParams<T> {
    pub p: T,
    pub alpha: T,
}

impl<T: Real> SpaceParams<T> {
    pub fn new(p: T, alpha: T) -> Result<Self> {
        ensure!(p >= T::one() && p.is_finite(), InvalidParameter, "p = {p} must be >= 1");
        ensure!(
            alpha > -T::one() && alpha.is_finite(),
            InvalidParameter,
            "alpha = {alpha} must exceed -1"
        );
        Ok(Self { p, alpha })
    }

    /// Hilbert case `p = 2`.
    pub fn hilbert(alpha: T) -> Result<Self> {
        Self::new(T::lit(2.0), alpha)
    }

    /// `(2 + alpha)/p`, the Jacobian exponent of `T_a`.
    pub fn jacobian_power(&self) -> T {
        (T::lit(2.0) + self.alpha) / self.p
    }

    pub fn density(&self) -> Density<T> {
        Density::Bergman { alpha: self.alpha }
    }
}

fn one<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// Polynomial core, optionally composed with `phi_a` and multiplied by a
/// power of `phi_a'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AnalyticFunction<T> {
    /// Coefficients of `1, z, z^2, ...`.
    pub coeffs: Vec<Complex<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobius_center: Option<Point<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian_power: Option<T>,
    #[serde(default = "one")]
    pub scalar: Complex<T>,
}

impl<T: Real> AnalyticFunction<T> {
    pub fn polynomial(coeffs: Vec<Complex<T>>) -> Self {
        Self {
            coeffs,
            mobius_center: None,
            jacobian_power: None,
            scalar: one(),
        }
    }

    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); n + 1];
        coeffs[n] = one();
        Self::polynomial(coeffs)
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::polynomial(vec![c])
    }

    /// `scalar * prod (z - root)`.
    pub fn from_roots(roots: &[Complex<T>], scalar: Complex<T>) -> Self {
        let mut coeffs = vec![one::<T>()];
        for &r in roots {
            let mut next = vec![Complex::new(T::zero(), T::zero()); coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            coeffs = next;
        }
        Self {
            scalar,
            ..Self::polynomial(coeffs)
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.coeffs.is_empty(), InvalidParameter, "function needs at least one coefficient");
        ensure!(
            self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
            InvalidParameter,
            "non-finite coefficient"
        );
        if let Some(a) = self.mobius_center {
            ensure!(in_open_disk(a), Domain, "mobius center {a} outside the unit disk");
        }
        Ok(())
    }

    pub fn is_plain(&self) -> bool {
        self.mobius_center.is_none() && self.jacobian_power.is_none()
    }

    /// Degree of the polynomial core.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn evaluate(&self, z: Point<T>) -> Result<Complex<T>> {
        ensure!(in_open_disk(z), Domain, "evaluation point {z} outside the unit disk");
        Ok(self.eval(z))
    }

    /// Evaluation without the domain check.
    pub fn eval(&self, z: Point<T>) -> Complex<T> {
        match self.mobius_center {
            None => self.scalar * horner(&self.coeffs, z),
            Some(a) => {
                let w = automorphism_unchecked(a, z);
                let mut v = self.scalar * horner(&self.coeffs, w);
                if let Some(q) = self.jacobian_power {
                    v *= jacobian_factor(a, q, z);
                }
                v
            }
        }
    }
}

pub(crate) fn horner<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> Complex<T> {
    coeffs.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
}

/// Roots of `sum c_k z^k` by Aberth iteration followed by two Newton steps.
pub fn polynomial_roots<T: Real>(coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let zero = Complex::new(T::zero(), T::zero());
    let Some(n) = coeffs.iter().rposition(|c| *c != zero) else {
        return Err(Error::InvalidParameter("the zero polynomial has no isolated roots".into()));
    };
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let monic: Vec<Complex<T>> = coeffs[..=n].iter().map(|c| *c / lead).collect();
    let deriv: Vec<Complex<T>> = (1..=n).map(|k| monic[k] * T::from_usize_lossy(k)).collect();
    let bound = T::one() + monic[..n].iter().map(|c| c.norm()).fold(T::zero(), T::max);
    let radius = bound.min(T::lit(2.0) * monic[0].norm().powf(T::from_usize_lossy(n).recip()).max(T::lit(0.1)));
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|k| Complex::from_polar(radius, T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(n) + T::lit(0.4)))
        .collect();
    let mut converged = false;
    for _ in 0..1000 {
        let mut worst = T::zero();
        let mut settled = true;
        for k in 0..n {
            let pv = horner(&monic, z[k]);
            let dv = horner(&deriv, z[k]);
            if pv == zero {
                continue;
            }
            // rounding level of p at z[k]
            let r = z[k].norm();
            let scale = monic.iter().rev().fold(T::zero(), |acc, c| acc * r + c.norm());
            if pv.norm() > T::epsilon() * T::from_usize_lossy(8 * (n + 1)) * scale {
                settled = false;
            }
            let w = pv / dv;
            let mut s = zero;
            for j in 0..n {
                if j != k {
                    s += (z[k] - z[j]).inv();
                }
            }
            let step = w / (Complex::new(T::one(), T::zero()) - w * s);
            if step.re.is_finite() && step.im.is_finite() {
                z[k] -= step;
                worst = worst.max(step.norm() / (T::one() + z[k].norm()));
            }
        }
        if settled || worst <= T::epsilon() * T::lit(64.0) {
            converged = true;
            break;
        }
    }
    ensure!(converged, Numerical, "root iteration did not converge for degree {n}");
    for r in z.iter_mut() {
        for _ in 0..2 {
            let dv = horner(&deriv, *r);
            if dv != zero {
                let step = horner(&monic, *r) / dv;
                if step.re.is_finite() && step.im.is_finite() {
                    *r -= step;
                }
            }
        }
    }
    Ok(z)
}

/// `(phi_a'(z))^q` on the branch `(1-|a|^2)^q e^{i pi q} (1 - conj(a) z)^{-2q}`
/// with the principal logarithm of `1 - conj(a) z` (its real part is positive).
pub fn jacobian_factor<T: Real>(a: Point<T>, q: T, z: Point<T>) -> Complex<T> {
    let m = (T::one() - a.norm_sqr()).powf(q);
    let u = one::<T>() - a.conj() * z;
    let phase = Complex::new(T::zero(), T::PI() * q).exp();
    let tail = (u.ln() * (-(q + q))).exp();
    phase * tail * m
}

/// `||z^n||^2` in `A^{2,alpha}`: `Gamma(alpha+2) n! / Gamma(n+alpha+2)`,
/// evaluated as `prod_{k=1}^n k/(k+alpha+1)`.
pub fn monomial_norm_p2<T: Real>(n: usize, alpha: T) -> Result<T> {
    ensure!(alpha > -T::one(), InvalidParameter, "alpha = {alpha} must exceed -1");
    let mut v = T::one();
    for k in 1..=n {
        let k = T::from_usize_lossy(k);
        v *= k / (k + alpha + T::one());
    }
    Ok(v)
}

/// Tensor nodes for `E` (or the whole disk) against `dA_alpha`.
pub fn region_nodes<T: Real>(region: Option<&Region<T>>, density: Density<T>, size: RuleSize) -> Result<Vec<Node<T>>> {
    match region {
        None => sector_rule(T::zero(), T::one(), T::zero(), T::TAU(), density, size),
        Some(e) => {
            let mut nodes = Vec::new();
            for piece in e.disjoint_pieces() {
                nodes.extend(sector_rule(
                    piece.rho_min,
                    piece.rho_max,
                    piece.theta_start,
                    piece.width,
                    density,
                    size,
                )?);
            }
            Ok(nodes)
        }
    }
}

/// `|v|^p`, using `|v|^2` directly for `p = 2`.
#[inline]
pub(crate) fn abs_pow<T: Real>(v: Complex<T>, p: T) -> T {
    if p == T::lit(2.0) {
        v.norm_sqr()
    } else {
        v.norm().powf(p)
    }
}

fn start_size<T: Real>(f: &AnalyticFunction<T>, p: T) -> RuleSize {
    let d = f.degree();
    let working = (p * T::from_usize_lossy(d) * T::lit(0.5)).ceil().to_usize().unwrap_or(d);
    let extra = if f.is_plain() { 0 } else { 8 };
    RuleSize::for_degree(working + extra)
}

/// `int_{E or D} |f|^p dA_alpha` by adaptive tensor quadrature.
pub fn pth_power_integral<T: Real>(f: &AnalyticFunction<T>, params: SpaceParams<T>, region: Option<&Region<T>>) -> Result<T> {
    f.validate()?;
    if let Some(e) = region {
        e.check_within(T::one())?;
        if e.is_empty() {
            return Ok(T::zero());
        }
    }
    let p = params.p;
    let even = (p * T::lit(0.5)).fract() == T::zero();
    let zeros = if !even && f.is_plain() && f.degree() > 0 {
        polynomial_roots(&f.coeffs)?.into_iter().filter(|z| z.norm() < T::one()).collect()
    } else {
        Vec::new()
    };
    adaptive(start_size(f, p), T::tolerance(NORM_TOLERANCE), MAX_DOUBLINGS, |size| {
        let nodes = if zeros.is_empty() {
            region_nodes(region, params.density(), size)?
        } else {
            split_region_nodes(region, params.density(), size, &zeros)?
        };
        Ok(integrate_nodes(&nodes, |z| abs_pow(f.eval(z), p)))
    })
}

/// [`region_nodes`] with every piece cut through the given points.
fn split_region_nodes<T: Real>(
    region: Option<&Region<T>>,
    density: Density<T>,
    size: RuleSize,
    points: &[Point<T>],
) -> Result<Vec<Node<T>>> {
    let radii: Vec<T> = points.iter().map(|z| z.norm()).collect();
    let angles: Vec<T> = points.iter().map(|z| z.arg()).collect();
    let pieces = match region {
        None => vec![(T::zero(), T::one(), T::zero(), T::TAU())],
        Some(e) => e
            .disjoint_pieces()
            .into_iter()
            .map(|q| (q.rho_min, q.rho_max, q.theta_start, q.width))
            .collect(),
    };
    let mut nodes = Vec::new();
    for (r1, r2, t1, w) in pieces {
        nodes.extend(split_sector_rule(r1, r2, t1, w, &radii, &angles, density, size)?);
    }
    Ok(nodes)
}

/// Norm by quadrature only, never the closed form.
pub fn bergman_norm_quadrature<T: Real>(f: &AnalyticFunction<T>, params: SpaceParams<T>, region: Option<&Region<T>>) -> Result<T> {
    Ok(pth_power_integral(f, params, region)?.powf(params.p.recip()))
}

/// `(int_{E or D} |f|^p dA_alpha)^{1/p}`. Plain polynomials with `p = 2` on
/// the whole disk use the orthogonality of monomials.
pub fn bergman_norm<T: Real>(f: &AnalyticFunction<T>, params: SpaceParams<T>, region: Option<&Region<T>>) -> Result<T> {
    if region.is_none() && f.is_plain() && params.p == T::lit(2.0) {
        f.validate()?;
        let mut s = T::zero();
        for (n, c) in f.coeffs.iter().enumerate() {
            s += c.norm_sqr() * monomial_norm_p2(n, params.alpha)?;
        }
        return Ok(f.scalar.norm() * s.sqrt());
    }
    bergman_norm_quadrature(f, params, region)
}

/// `int_{theta0}^{theta0+width} e^{i m theta} d theta`.
fn angular_moment<T: Real>(m: i64, theta0: T, width: T, full: bool) -> Complex<T> {
    if m == 0 {
        return Complex::new(width, T::zero());
    }
    if full {
        return Complex::new(T::zero(), T::zero());
    }
    let mf = T::lit(m as f64);
    let e1 = Complex::new(T::zero(), mf * (theta0 + width)).exp();
    let e0 = Complex::new(T::zero(), mf * theta0).exp();
    (e1 - e0) / Complex::new(T::zero(), mf)
}

/// Moment matrix `G[i][j] = int_E conj(z)^i z^j dA_alpha`, `0 <= i, j <= degree`,
/// so that `||f||^2_{L^{2,alpha}(E)} = c^H G c` for `f = sum c_j z^j`.
pub fn gram_matrix<T: Real>(region: &Region<T>, degree: usize, alpha: T) -> Result<HermitianMatrix<T>> {
    ensure!(alpha > -T::one(), InvalidParameter, "alpha = {alpha} must exceed -1");
    region.check_within(T::one())?;
    moment_gram(region, degree, Density::Bergman { alpha })
}

/// `G[i][j] = int_E conj(z)^i z^j density`, from radial moments and closed-form
/// angular moments.
pub(crate) fn moment_gram<T: Real>(region: &Region<T>, degree: usize, density: Density<T>) -> Result<HermitianMatrix<T>> {
    let n = degree + 1;
    let mut g = HermitianMatrix::zeros(n);
    for piece in region.disjoint_pieces() {
        let rule = radial_rule(piece.rho_min, piece.rho_max, density, degree + 24)?;
        let mut moments = vec![T::zero(); 2 * degree + 1];
        for (&rho, &w) in rule.nodes.iter().zip(&rule.weights) {
            let mut pw = w;
            for m in moments.iter_mut() {
                *m += pw;
                pw *= rho;
            }
        }
        let full = piece.is_full_turn();
        let ang: Vec<Complex<T>> = (-(degree as i64)..=degree as i64)
            .map(|m| angular_moment(m, piece.theta_start, piece.width, full))
            .collect();
        for i in 0..n {
            for j in i..n {
                let a = ang[(j as i64 - i as i64 + degree as i64) as usize];
                let v = g.get(i, j) + a * moments[i + j];
                g.set(i, j, v);
                g.set(j, i, v.conj());
            }
        }
    }
    for i in 0..n {
        let d = g.get(i, i);
        g.set(i, i, Complex::new(d.re, T::zero()));
    }
    Ok(g)
}

/// `T_a f` as an evaluable composite with Jacobian exponent `(2+alpha)/p`.
pub fn change_of_variable<T: Real>(f: &AnalyticFunction<T>, a: Point<T>, params: SpaceParams<T>) -> Result<AnalyticFunction<T>> {
    ensure!(in_open_disk(a), Domain, "center {a} outside the unit disk");
    ensure!(f.is_plain(), InvalidParameter, "T_a applies to plain polynomials only");
    Ok(AnalyticFunction {
        coeffs: f.coeffs.clone(),
        mobius_center: Some(a),
        jacobian_power: Some(params.jacobian_power()),
        scalar: f.scalar,
    })
}

/// Maximum of `g` on the circle `|z - center| = radius`: `samples` equally
/// spaced angles, then golden-section refinement around the best one.
pub fn circle_sup<T: Real, G: Fn(Point<T>) -> T>(g: G, center: Point<T>, radius: T, samples: usize) -> (T, Point<T>) {
    let samples = samples.max(8);
    let at = |th: T| g(center + Complex::from_polar(radius, th));
    let step = T::TAU() / T::from_usize_lossy(samples);
    let mut best = (T::neg_infinity(), T::zero());
    for j in 0..samples {
        let th = step * T::from_usize_lossy(j);
        let v = at(th);
        if v > best.0 {
            best = (v, th);
        }
    }
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let ratio = T::lit(0.618_033_988_749_894_9);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (at(x1), at(x2));
    for _ in 0..60 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = at(x2);
        }
        if hi - lo <= T::epsilon() * T::lit(8.0) {
            break;
        }
    }
    for (v, th) in [(f1, x1), (f2, x2)] {
        if v > best.0 {
            best = (v, th);
        }
    }
    (best.0, center + Complex::from_polar(radius, best.1))
}

/// `sup_{D(z0, rho)} |h|^p (1 - rho/t)^{2+alpha} / int_{D(z0,t)} |h|^p dA_alpha`
/// for a disk `D(z0, t)` inside the unit disk.
pub fn sub_mean_value_ratio<T: Real>(h: &AnalyticFunction<T>, params: SpaceParams<T>, z0: Point<T>, t: T, rho: T) -> Result<T> {
    ensure!(z0.norm() + t < T::one(), Domain, "disk D({z0}, {t}) not inside the unit disk");
    ensure!(rho > T::zero() && rho < t, InvalidParameter, "need 0 < rho < t");
    let p = params.p;
    let samples = 8 * h.degree() + 64;
    let (sup, _) = circle_sup(|z| abs_pow(h.eval(z), p), z0, rho, samples);
    let density = params.density();
    let integral = adaptive(start_size(h, p), T::tolerance(NORM_TOLERANCE), MAX_DOUBLINGS, |size| {
        let nodes = disk_rule(z0, t, density, size);
        Ok(integrate_nodes(&nodes, |z| abs_pow(h.eval(z), p)))
    })?;
    ensure!(integral > T::zero(), DegenerateFit, "function vanishes on the disk");
    Ok(sup * (T::one() - rho / t).powf(T::lit(2.0) + params.alpha) / integral)
}

/// Value the ratio of [`sub_mean_value_ratio`] cannot exceed: the mean value
/// inequality on `D(z, t - rho)` with the weight bounded below on `D(z0, t)`.
pub fn sub_mean_value_bound<T: Real>(params: SpaceParams<T>, z0: Point<T>, t: T, rho: T) -> T {
    let alpha = params.alpha;
    let w_min = if alpha >= T::zero() {
        let outer = z0.norm() + t;
        (T::one() - outer * outer).powf(alpha)
    } else {
        T::one()
    };
    (T::one() - rho / t).powf(alpha) / (t * t * (alpha + T::one()) * w_min)
}

/// Polynomial of the given degree with standard complex Gaussian coefficients.
pub fn random_polynomial<T: Real, R: Rng + ?Sized>(rng: &mut R, degree: usize) -> AnalyticFunction<T> {
    let coeffs = (0..=degree)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    AnalyticFunction::polynomial(coeffs)
}

/// Polynomial with `degree` roots of modulus in `[min_modulus, 2 min_modulus]`
/// (zero-free on the closed disk when `min_modulus > 1`).
pub fn random_zero_free_polynomial<T: Real, R: Rng + ?Sized>(rng: &mut R, degree: usize, min_modulus: f64) -> AnalyticFunction<T> {
    let roots: Vec<Complex<T>> = (0..degree)
        .map(|_| {
            let m = min_modulus * (1.0 + rng.random::<f64>());
            let th = std::f64::consts::TAU * rng.random::<f64>();
            Complex::from_polar(T::lit(m), T::lit(th))
        })
        .collect();
    let scale = T::lit(min_modulus.powi(-(degree as i32)));
    AnalyticFunction::from_roots(&roots, Complex::new(scale, T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn evaluate_examples() {
        let f = AnalyticFunction::<f64>::monomial(2);
        assert!((f.evaluate(c(0.5, 0.0)).unwrap() - c(0.25, 0.0)).norm() < 1e-15);
        assert!(f.evaluate(c(1.0, 0.0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let g = random_polynomial::<f64, _>(&mut rng, 7);
            let z = c(0.3, -0.4);
            let naive: Complex<f64> = g.coeffs.iter().enumerate().map(|(k, &a)| a * z.powi(k as i32)).sum();
            assert!((g.eval(z) - naive).norm() < 1e-12);
        }
    }

    #[test]
    fn composite_at_its_center() {
        let params = SpaceParams::new(3.0, 0.5).unwrap();
        let a = c(0.3, 0.4);
        let f = AnalyticFunction::polynomial(vec![c(2.0, -1.0), c(0.5, 0.5)]);
        let g = change_of_variable(&f, a, params).unwrap();
        let q = params.jacobian_power();
        let want = c(2.0, -1.0) * Complex::new(0.0, std::f64::consts::PI * q).exp() * (1.0 - a.norm_sqr()).powf(-q);
        assert!((g.eval(a) - want).norm() < 1e-13);
        let d = crate::geometry::automorphism_derivative(a, c(0.1, 0.2)).unwrap();
        assert!((g.eval(c(0.1, 0.2)).norm() - f.eval(automorphism_unchecked(a, c(0.1, 0.2))).norm() * d.norm().powf(q)).abs() < 1e-13);
        assert!(change_of_variable(&g, a, params).is_err());
    }

    #[test]
    fn identity_translation_preserves_modulus() {
        let params = SpaceParams::new(2.0, 1.0).unwrap();
        let f = AnalyticFunction::polynomial(vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 0.5)]);
        let g = change_of_variable(&f, c(0.0, 0.0), params).unwrap();
        for z in [c(0.2, 0.1), c(-0.7, 0.3)] {
            let w = automorphism_unchecked(c(0.0, 0.0), z);
            assert!((g.eval(z).norm() - f.eval(w).norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn monomial_norm_examples() {
        assert_eq!(monomial_norm_p2(0, 3.5f64).unwrap(), 1.0);
        assert!((monomial_norm_p2(3, 0.0f64).unwrap() - 0.25).abs() < 1e-15);
        assert!((monomial_norm_p2(2, 1.0f64).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        for n in 0..30 {
            for &a in &[-0.5, 0.0, 0.5, 2.0] {
                let want = (a + 1.0) * statrs::function::beta::beta(n as f64 + 1.0, a + 1.0);
                assert!((monomial_norm_p2(n, a).unwrap() - want).abs() <= 1e-12 * want);
            }
        }
    }

    #[test]
    fn norm_examples() {
        let p2 = SpaceParams::hilbert(0.0).unwrap();
        let f = AnalyticFunction::polynomial({
            let mut v = vec![c(0.0, 0.0); 5];
            v[4] = c(5f64.sqrt(), 0.0);
            v
        });
        assert!((bergman_norm(&f, p2, None).unwrap() - 1.0).abs() < 1e-14);
        assert!((bergman_norm_quadrature(&f, p2, None).unwrap() - 1.0).abs() < 1e-12);
        let one_fn = AnalyticFunction::constant(c(1.0, 0.0));
        for (p, a) in [(1.0, 0.0), (3.0, 2.0), (2.0, -0.5)] {
            let params = SpaceParams::new(p, a).unwrap();
            assert!((bergman_norm(&one_fn, params, None).unwrap() - 1.0).abs() < 1e-10);
        }
        let ann = Region::annulus(0.5).unwrap();
        assert!((bergman_norm(&one_fn, p2, Some(&ann)).unwrap() - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn full_disk_gram_is_diagonal() {
        for &a in &[0.0, 0.5, 2.0, -0.5] {
            let g = gram_matrix(&Region::<f64>::full(), 12, a).unwrap();
            assert_eq!(g.max_off_diagonal(), 0.0);
            for i in 0..=12 {
                let want = monomial_norm_p2(i, a).unwrap();
                assert!((g.get(i, i).re - want).abs() <= 1e-12 * want, "alpha={a} i={i}");
            }
        }
    }

    #[test]
    fn gram_radial_factor_matches_incomplete_beta() {
        let ann = Region::<f64>::annulus(0.6).unwrap();
        for &a in &[0.0, 0.5, 2.0] {
            let g = gram_matrix(&ann, 8, a).unwrap();
            for i in 0..=8 {
                // (alpha+1) int_{0.36}^1 t^i (1-t)^alpha dt
                let b = statrs::function::beta::beta(i as f64 + 1.0, a + 1.0);
                let want = (a + 1.0) * b * (1.0 - statrs::function::beta::beta_reg(i as f64 + 1.0, a + 1.0, 0.36));
                assert!((g.get(i, i).re - want).abs() <= 1e-11 * want, "alpha={a} i={i}");
            }
        }
    }

    #[test]
    fn gram_form_matches_quadrature_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = crate::region::random_sectors::<f64>(4, 2).unwrap();
        for &a in &[0.0, 1.5] {
            let g = gram_matrix(&e, 6, a).unwrap();
            assert!(g.hermitian_defect() == 0.0);
            let f = random_polynomial::<f64, _>(&mut rng, 6);
            let via_gram = g.quad_form(&f.coeffs).sqrt();
            let params = SpaceParams::hilbert(a).unwrap();
            let via_quad = bergman_norm_quadrature(&f, params, Some(&e)).unwrap();
            assert!((via_gram - via_quad).abs() <= 1e-10 * via_quad);
            let p4 = SpaceParams::new(4.0, a).unwrap();
            assert!(bergman_norm(&f, p4, Some(&e)).unwrap() > 0.0);
        }
    }

    #[test]
    fn norm_is_monotone_in_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = SpaceParams::new(3.0, 0.5).unwrap();
        let small = crate::region::grating::<f64>(4, 0.3).unwrap();
        let big = crate::region::grating::<f64>(4, 0.7).unwrap();
        let f = random_zero_free_polynomial::<f64, _>(&mut rng, 4, 1.5);
        let a = bergman_norm(&f, params, Some(&small)).unwrap();
        let b = bergman_norm(&f, params, Some(&big)).unwrap();
        assert!(a <= b);
    }

    #[test]
    fn sub_mean_value_stays_below_explicit_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..10 {
            let params = SpaceParams::new([1.0, 2.0, 3.0][trial % 3], [0.0, 1.0][trial % 2]).unwrap();
            let h = random_zero_free_polynomial::<f64, _>(&mut rng, 4, 1.2);
            let z0 = c(0.2, -0.1);
            let (t, rho) = (0.6, 0.35);
            let ratio = sub_mean_value_ratio(&h, params, z0, t, rho).unwrap();
            assert!(ratio <= sub_mean_value_bound(params, z0, t, rho));
        }
    }

    #[test]
    fn circle_sup_finds_peak() {
        let (v, at) = circle_sup(|z: Complex<f64>| -(z - c(0.0, 1.0)).norm(), c(0.0, 0.0), 1.0, 16);
        assert!((v - 0.0).abs() < 1e-12);
        assert!((at - c(0.0, 1.0)).norm() < 1e-7);
    }

    #[test]
    fn json_spec() {
        let f = AnalyticFunction::<f64>::from_json_str(r#"{"coeffs": [[1, 0], [0, 2]]}"#).unwrap();
        assert!(f.is_plain());
        assert_eq!(f.scalar, c(1.0, 0.0));
        assert!((f.eval(c(0.5, 0.0)) - c(1.0, 1.0)).norm() < 1e-15);
        assert!(AnalyticFunction::<f64>::from_json_str(r#"{"coeffs": []}"#).is_err());
    }

    #[test]
    fn odd_power_with_interior_zero() {
        // |z - 1/2| over the disk, alpha = 0, against a fine polar sum
        let f = AnalyticFunction::polynomial(vec![Complex::new(-0.5, 0.0), Complex::new(1.0, 0.0)]);
        let q = pth_power_integral(&f, SpaceParams::new(1.0, 0.0).unwrap(), None).unwrap();
        let n = 2000;
        let mut want = 0.0;
        for i in 0..n {
            let rho = (i as f64 + 0.5) / n as f64;
            for j in 0..n {
                let th = std::f64::consts::TAU * (j as f64 + 0.5) / n as f64;
                want += (Complex::from_polar(rho, th) - 0.5).norm() * rho;
            }
        }
        want *= 2.0 / (n * n) as f64;
        assert!((q - want).abs() < 1e-6, "{q} {want}");
    }

    #[test]
    fn roots_round_trip() {
        let roots = [c(0.5, -0.2), c(-1.3, 0.7), c(0.0, 2.0), c(0.9, 0.9)];
        let f = AnalyticFunction::from_roots(&roots, c(1.0, 0.0));
        let mut found = polynomial_roots(&f.coeffs).unwrap();
        assert_eq!(found.len(), 4);
        for r in roots {
            let (i, d) = found
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - r).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert!(d < 1e-12, "{r}: {d}");
            found.remove(i);
        }
        assert!(polynomial_roots(&[c(3.0, 0.0)]).unwrap().is_empty());
        assert!(polynomial_roots::<f64>(&[]).is_err());
    }

    #[test]
    fn roots_of_a_triple_zero() {
        let f = AnalyticFunction::from_roots(&[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(-0.2, 0.1)], c(2.0, 0.0));
        let found = polynomial_roots(&f.coeffs).unwrap();
        assert_eq!(found.iter().filter(|z| (*z - c(0.5, 0.0)).norm() < 1e-4).count(), 3);
        assert!(found.iter().any(|z| (z - c(-0.2, 0.1)).norm() < 1e-10));
    }
}
