//! Quadrature rules on intervals, annular sectors and Euclidean disks.
//!
//! Radial integrals against the Bergman weight `(1 - rho^2)^alpha` are split
//! into panels whose length never exceeds their distance to `rho = 1`; the panel
//! touching the unit circle uses Gauss-Jacobi nodes for `(1 - rho)^alpha` so the
//! endpoint singularity is integrated exactly.

use num_complex::Complex;

use crate::error::{ensure, Error, Result};
use crate::scalar::Real;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine map of a rule on `[-1, 1]` to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> Rule<T> {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        Rule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| w * half).collect(),
        }
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss-Legendre rule with `n` nodes on `[-1, 1]` (Newton iteration on the
/// three-term recurrence).
pub fn gauss_legendre<T: Real>(n: usize) -> Rule<T> {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Gauss-Jacobi rule for the weight `(1 - x)^alpha` on `[-1, 1]` (Golub-Welsch).
pub fn gauss_jacobi_right<T: Real>(n: usize, alpha: T) -> Result<Rule<T>> {
    ensure!(n >= 1, InvalidParameter, "Gauss-Jacobi needs at least one node");
    ensure!(alpha > -T::one(), InvalidParameter, "Jacobi exponent {alpha} must exceed -1");
    if alpha == T::zero() {
        return Ok(gauss_legendre(n));
    }
    let a = alpha;
    let b = T::zero();
    let two = T::lit(2.0);
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = T::from_usize_lossy(k);
        let s = two * kf + a + b;
        *d = if k == 0 {
            (b - a) / (a + b + two)
        } else {
            (b * b - a * a) / (s * (s + two))
        };
    }
    for k in 1..n {
        let kf = T::from_usize_lossy(k);
        let s = two * kf + a + b;
        let num = T::lit(4.0) * kf * (kf + a) * (kf + b) * (kf + a + b);
        let den = s * s * (s + T::one()) * (s - T::one());
        off[k - 1] = (num / den).sqrt();
    }
    let mu0 = two.powf(a + T::one()) / (a + T::one());
    let (values, first) = symmetric_tridiagonal_eigen(&mut diag, &mut off)?;
    let mut pairs: Vec<(T, T)> = values.into_iter().zip(first).map(|(x, v)| (x, mu0 * v * v)).collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite nodes"));
    Ok(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Eigenvalues of a symmetric tridiagonal matrix (implicit QL) together with
/// the first component of each normalized eigenvector. `off[i]` couples rows
/// `i` and `i + 1`; both slices are overwritten.
pub fn symmetric_tridiagonal_eigen<T: Real>(diag: &mut [T], off: &mut [T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    ensure!(
        off.len() == n,
        InvalidParameter,
        "off-diagonal must have length n (last entry unused)"
    );
    let mut first = vec![T::zero(); n];
    if n == 0 {
        return Ok((Vec::new(), first));
    }
    first[0] = T::one();
    off[n - 1] = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::Numerical("tridiagonal QL did not converge".into()));
            }
            let mut g = (diag[l + 1] - diag[l]) / (T::lit(2.0) * off[l]);
            let mut r = g.hypot(T::one());
            let sign_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = diag[m] - diag[l] + off[l] / (g + sign_r);
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == T::zero() {
                    diag[i + 1] -= p;
                    off[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + T::lit(2.0) * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let fz = first[i + 1];
                first[i + 1] = s * first[i] + c * fz;
                first[i] = c * first[i] - s * fz;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = T::zero();
        }
    }
    Ok((diag.to_vec(), first))
}

/// Trapezoid rule for a full period starting at `start`.
pub fn periodic_trapezoid<T: Real>(n: usize, start: T) -> Rule<T> {
    let h = T::TAU() / T::from_usize_lossy(n);
    Rule {
        nodes: (0..n).map(|j| start + h * T::from_usize_lossy(j)).collect(),
        weights: vec![h; n],
    }
}

/// Area density with respect to planar Lebesgue measure `dx dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density<T> {
    /// `scale * dx dy`.
    Lebesgue { scale: T },
    /// `(alpha + 1) (1 - |z|^2)^alpha dx dy / pi`: the normalized Bergman measure.
    Bergman { alpha: T },
    /// `scale * exp(-beta |z|^2) dx dy`.
    Gaussian { beta: T, scale: T },
}

impl<T: Real> Density<T> {
    /// Pointwise density at squared modulus `rho2`.
    #[inline]
    pub fn at(&self, rho2: T) -> T {
        match *self {
            Density::Lebesgue { scale } => scale,
            Density::Bergman { alpha } => {
                if alpha == T::zero() {
                    T::FRAC_1_PI()
                } else {
                    (alpha + T::one()) * (T::one() - rho2).max(T::zero()).powf(alpha) * T::FRAC_1_PI()
                }
            }
            Density::Gaussian { beta, scale } => scale * (-beta * rho2).exp(),
        }
    }
}

const BERGMAN_LEVELS: i32 = 10;

/// Radial rule on `[rho1, rho2]` for `int g(rho) density(rho) rho d rho`.
///
/// `n` is the node count per panel.
pub fn radial_rule<T: Real>(rho1: T, rho2: T, density: Density<T>, n: usize) -> Result<Rule<T>> {
    ensure!(
        rho1 >= T::zero() && rho2 >= rho1,
        InvalidParameter,
        "radial interval [{rho1}, {rho2}] is invalid"
    );
    let mut out = Rule {
        nodes: Vec::new(),
        weights: Vec::new(),
    };
    if rho2 == rho1 {
        return Ok(out);
    }
    let gl = gauss_legendre::<T>(n);
    let push_gl = |a: T, b: T, out: &mut Rule<T>| {
        let r = gl.mapped(a, b);
        for (x, w) in r.nodes.into_iter().zip(r.weights) {
            out.nodes.push(x);
            out.weights.push(w * x * density.at(x * x));
        }
    };
    match density {
        Density::Bergman { alpha } => {
            ensure!(rho2 <= T::one(), Domain, "Bergman radial interval exceeds the unit disk");
            let cutoff = T::lit(2f64.powi(-BERGMAN_LEVELS));
            let mut a = rho1;
            while a < rho2 {
                let dist = T::one() - a;
                if rho2 == T::one() && dist <= cutoff {
                    // Jacobi panel: int_a^1 h(rho) (1 - rho)^alpha d rho
                    let gj = gauss_jacobi_right(n, alpha)?;
                    let half = dist * T::lit(0.5);
                    let scale = half.powf(alpha + T::one());
                    for (&x, &w) in gj.nodes.iter().zip(&gj.weights) {
                        let rho = a + half * (x + T::one());
                        let smooth = if alpha == T::zero() {
                            T::one()
                        } else {
                            (T::one() + rho).powf(alpha)
                        };
                        out.nodes.push(rho);
                        out.weights.push(w * scale * smooth * rho * (alpha + T::one()) * T::FRAC_1_PI());
                    }
                    break;
                }
                let b = (a + dist * T::lit(0.5)).min(rho2);
                let b = if rho2 - b <= T::epsilon() * T::lit(16.0) { rho2 } else { b };
                push_gl(a, b, &mut out);
                a = b;
            }
        }
        Density::Gaussian { beta, .. } => {
            let width = if beta > T::zero() { T::one() / beta.sqrt() } else { rho2 - rho1 };
            let panels = ((rho2 - rho1) / width).ceil().to_usize().unwrap_or(1).clamp(1, 4096);
            let h = (rho2 - rho1) / T::from_usize_lossy(panels);
            for i in 0..panels {
                let a = rho1 + h * T::from_usize_lossy(i);
                let b = if i + 1 == panels { rho2 } else { a + h };
                push_gl(a, b, &mut out);
            }
        }
        Density::Lebesgue { .. } => {
            push_gl(rho1, rho2, &mut out);
        }
    }
    Ok(out)
}

/// One node of a planar rule: position and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<T> {
    pub z: Complex<T>,
    pub w: T,
}

/// Node counts of a planar tensor rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleSize {
    pub radial: usize,
    pub angular: usize,
}

impl RuleSize {
    pub fn doubled(self) -> Self {
        Self {
            radial: self.radial * 2,
            angular: self.angular * 2,
        }
    }

    /// Counts that integrate `|f|^2 * density` exactly (up to the weight's
    /// smooth factor) for polynomials of the given degree.
    pub fn for_degree(degree: usize) -> Self {
        Self {
            radial: degree + 8,
            angular: 4 * degree + 16,
        }
    }
}

/// Tensor rule on the polar rectangle `[rho1, rho2] x [theta1, theta1 + width]`.
pub fn sector_rule<T: Real>(rho1: T, rho2: T, theta1: T, width: T, density: Density<T>, size: RuleSize) -> Result<Vec<Node<T>>> {
    let radial = radial_rule(rho1, rho2, density, size.radial)?;
    let full = width >= T::TAU() - T::lit(1e-12);
    let angular = if full {
        periodic_trapezoid(size.angular, theta1)
    } else {
        gauss_legendre::<T>(size.angular).mapped(theta1, theta1 + width)
    };
    let mut nodes = Vec::with_capacity(radial.len() * angular.len());
    for (&rho, &wr) in radial.nodes.iter().zip(&radial.weights) {
        for (&th, &wt) in angular.nodes.iter().zip(&angular.weights) {
            nodes.push(Node {
                z: Complex::from_polar(rho, th),
                w: wr * wt,
            });
        }
    }
    Ok(nodes)
}

/// Node count for a sub-interval holding `part` of the whole length.
fn share<T: Real>(n: usize, part: T) -> usize {
    (T::from_usize_lossy(n) * part).ceil().to_usize().unwrap_or(n).max(8)
}

/// [`sector_rule`] with the polar rectangle cut at the given radii and
/// angles, so that integrands with isolated kinks (such as `|f|^p` at the
/// zeros of `f`) only meet them at cell corners. Node counts are shared out
/// in proportion to the cell sizes.
#[allow(clippy::too_many_arguments)]
pub fn split_sector_rule<T: Real>(
    rho1: T,
    rho2: T,
    theta1: T,
    width: T,
    radii: &[T],
    angles: &[T],
    density: Density<T>,
    size: RuleSize,
) -> Result<Vec<Node<T>>> {
    let mut rs = vec![rho1];
    rs.extend(radii.iter().copied().filter(|&r| r > rho1 && r < rho2));
    rs.push(rho2);
    rs.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
    rs.dedup();
    let full = width >= T::TAU() - T::lit(1e-12);
    let mut offsets: Vec<T> = angles
        .iter()
        .map(|&a| {
            let o = (a - theta1) % T::TAU();
            if o < T::zero() {
                o + T::TAU()
            } else {
                o
            }
        })
        .collect();
    offsets.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    offsets.dedup();
    let (start, mut ts) = if full && !offsets.is_empty() {
        let s = theta1 + offsets[0];
        let mut ts: Vec<T> = offsets.iter().map(|&o| o - offsets[0]).collect();
        ts.push(T::TAU());
        (s, ts)
    } else if full {
        return sector_rule(rho1, rho2, theta1, width, density, size);
    } else {
        let mut ts = vec![T::zero()];
        ts.extend(offsets.into_iter().filter(|&o| o > T::zero() && o < width));
        ts.push(width);
        (theta1, ts)
    };
    ts.dedup();
    let mut nodes = Vec::new();
    for rw in rs.windows(2) {
        let nr = share(size.radial, (rw[1] - rw[0]) / (rho2 - rho1));
        let radial = radial_rule(rw[0], rw[1], density, nr)?;
        for tw in ts.windows(2) {
            let nt = share(size.angular, (tw[1] - tw[0]) / width);
            let angular = gauss_legendre::<T>(nt).mapped(start + tw[0], start + tw[1]);
            for (&rho, &wr) in radial.nodes.iter().zip(&radial.weights) {
                for (&th, &wt) in angular.nodes.iter().zip(&angular.weights) {
                    nodes.push(Node {
                        z: Complex::from_polar(rho, th),
                        w: wr * wt,
                    });
                }
            }
        }
    }
    Ok(nodes)
}

/// Tensor rule on the Euclidean disk `D(center, radius)` in its own polar
/// coordinates; the density is evaluated pointwise.
pub fn disk_rule<T: Real>(center: Complex<T>, radius: T, density: Density<T>, size: RuleSize) -> Vec<Node<T>> {
    let radial = gauss_legendre::<T>(size.radial).mapped(T::zero(), radius);
    let angular = periodic_trapezoid::<T>(size.angular, T::zero());
    let mut nodes = Vec::with_capacity(radial.len() * angular.len());
    for (&s, &ws) in radial.nodes.iter().zip(&radial.weights) {
        for (&psi, &wp) in angular.nodes.iter().zip(&angular.weights) {
            let z = center + Complex::from_polar(s, psi);
            nodes.push(Node {
                z,
                w: ws * wp * s * density.at(z.norm_sqr()),
            });
        }
    }
    nodes
}

/// `sum_i w_i f(z_i)`, evaluated in parallel over fixed-size chunks and
/// summed in node order, so the result does not depend on the thread count.
pub fn integrate_nodes<T: Real, F>(nodes: &[Node<T>], f: F) -> T
where
    F: Fn(Complex<T>) -> T + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 2048;
    if nodes.len() <= CHUNK {
        return nodes.iter().map(|n| n.w * f(n.z)).sum();
    }
    let partial: Vec<T> = nodes.par_chunks(CHUNK).map(|c| c.iter().map(|n| n.w * f(n.z)).sum::<T>()).collect();
    partial.into_iter().sum()
}

/// Runs `eval` at doubling rule sizes until two consecutive values agree to
/// `tol` (relative), returning the finer value.
pub fn adaptive<T: Real, F>(start: RuleSize, tol: T, max_doublings: usize, mut eval: F) -> Result<T>
where
    F: FnMut(RuleSize) -> Result<T>,
{
    let mut size = start;
    let mut prev = eval(size)?;
    let tiny = T::min_positive_value().sqrt();
    let mut change = T::infinity();
    for _ in 0..max_doublings {
        size = size.doubled();
        let next = eval(size)?;
        let diff = (next - prev).abs();
        if diff <= tol * next.abs() || next.abs().max(prev.abs()) <= tiny {
            return Ok(next);
        }
        change = diff / next.abs();
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "relative change {change} above tolerance {tol} at radial={} angular={}",
        size.radial, size.angular
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_rule_keeps_moments() {
        let d = Density::Bergman { alpha: 0.5 };
        let size = RuleSize::for_degree(6);
        let cuts = [0.3, 0.7, 2.0];
        for (t1, w) in [(0.0, std::f64::consts::TAU), (5.5, 2.0), (1.0, 0.5)] {
            let plain = sector_rule(0.1, 0.9, t1, w, d, size).unwrap();
            let split = split_sector_rule(0.1, 0.9, t1, w, &cuts, &[1.2, -2.0, 6.0], d, size).unwrap();
            let f = |z: Complex<f64>| z.re * z.re * z.im + z.norm_sqr() + 1.0;
            let a = integrate_nodes(&plain, f);
            let b = integrate_nodes(&split, f);
            assert!((a - b).abs() < 1e-12 * a.abs(), "{a} {b}");
        }
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64, 200] {
            let r = gauss_legendre::<f64>(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // x^(2n-2) is the top even power integrated exactly
            let k = 2 * n - 2;
            let val = r.integrate(|x| x.powi(k as i32));
            assert!((val - 2.0 / (k as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn jacobi_moments() {
        // int_{-1}^{1} (1-x)^a (1+x)^k dx = 2^{a+k+1} B(a+1, k+1)
        for &a in &[-0.5f64, 0.5, 2.0, 3.7] {
            let r = gauss_jacobi_right(12, a).unwrap();
            for k in 0..20 {
                let got = r.integrate(|x| (1.0 + x).powi(k));
                let beta = statrs::function::beta::beta(a + 1.0, k as f64 + 1.0);
                let want = 2f64.powf(a + k as f64 + 1.0) * beta;
                assert!((got - want).abs() <= 1e-12 * want, "a={a} k={k}: {got} vs {want}");
            }
        }
        assert!(gauss_jacobi_right(4, -1.0f64).is_err());
    }

    #[test]
    fn tridiagonal_eigen_matches_known_spectrum() {
        // tridiag(-1, 2, -1): eigenvalues 2 - 2 cos(k pi/(n+1))
        let n = 9;
        let mut d = vec![2.0f64; n];
        let mut e = vec![-1.0f64; n];
        let (mut vals, first) = symmetric_tridiagonal_eigen(&mut d, &mut e).unwrap();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, v) in vals.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - want).abs() < 1e-13);
        }
        assert!((first.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn bergman_radial_moments() {
        // (alpha+1)/pi * 2pi int_0^1 rho^{2n+1} (1-rho^2)^alpha d rho = (alpha+1) B(n+1, alpha+1)
        for &alpha in &[-0.7f64, 0.0, 0.5, 2.0] {
            let rule = radial_rule(0.0, 1.0, Density::Bergman { alpha }, 30).unwrap();
            for n in 0..25 {
                let got = 2.0 * std::f64::consts::PI * rule.integrate(|rho| rho.powi(2 * n));
                let want = (alpha + 1.0) * statrs::function::beta::beta(n as f64 + 1.0, alpha + 1.0);
                assert!((got - want).abs() <= 1e-12 * want, "alpha={alpha} n={n}");
            }
        }
    }

    #[test]
    fn gaussian_radial_mass() {
        let rule = radial_rule(0.0, 12.0, Density::Gaussian { beta: 1.0, scale: 1.0 }, 20).unwrap();
        let mass = 2.0 * std::f64::consts::PI * rule.integrate(|_| 1.0);
        assert!((mass - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn disk_rule_area() {
        let nodes = disk_rule(
            Complex::new(0.3, 0.1),
            0.25f64,
            Density::Lebesgue { scale: 1.0 },
            RuleSize::for_degree(2),
        );
        let area: f64 = nodes.iter().map(|n| n.w).sum();
        assert!((area - std::f64::consts::PI * 0.0625).abs() < 1e-14);
    }

    #[test]
    fn adaptive_reports_stall() {
        let res = adaptive(RuleSize { radial: 1, angular: 1 }, 1e-12f64, 3, |s| Ok(s.radial as f64));
        assert!(matches!(res, Err(Error::Quadrature(_))));
        let ok = adaptive(RuleSize { radial: 1, angular: 1 }, 1e-12f64, 3, |_| Ok(2.0));
        assert_eq!(ok.unwrap(), 2.0);
    }
}
