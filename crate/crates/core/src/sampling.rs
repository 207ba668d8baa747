//! Sampling ratios, optimal sampling constants on polynomial spaces and the
//! K-good disk decomposition.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    abs_pow, bergman_norm, gram_matrix, monomial_norm_p2, pth_power_integral, region_nodes, AnalyticFunction, SpaceParams, MAX_DOUBLINGS,
};
use crate::covering::{lattice_indices_up_to, lattice_point, overlap_constant, LatticeIndex};
use crate::error::{ensure, Error, Result};
use crate::geometry::phb_disk_to_euclidean_unchecked;
use crate::linalg::{hermitian_eigen, HermitianMatrix};
use crate::quadrature::{adaptive, disk_rule, integrate_nodes, Node, RuleSize};
use crate::region::Region;
use crate::scalar::Real;

/// Relative slack under which a disk at the K threshold counts as good.
pub const GOOD_TIE_SLACK: f64 = 1e-10;
/// Relative tolerance of the local disk norms.
pub const LOCAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SamplingResult<T> {
    pub c_hat: T,
    pub degree: usize,
    pub params: SpaceParams<T>,
    pub region_label: String,
    /// Monomial coefficients of the extremal polynomial, normalized to unit
    /// norm on the whole disk.
    pub extremal_coeffs: Vec<Complex<T>>,
}

/// `||f||_{L^{p,alpha}(E)} / ||f||_{A^{p,alpha}}`.
pub fn sampling_ratio<T: Real>(f: &AnalyticFunction<T>, region: &Region<T>, params: SpaceParams<T>) -> Result<T> {
    let full = bergman_norm(f, params, None)?;
    ensure!(full > T::zero(), InvalidParameter, "function has zero norm");
    let restricted = bergman_norm(f, params, Some(region))?;
    Ok((restricted / full).min(T::one()))
}

/// Diagonal of the whole-disk Gram matrix.
pub fn full_gram_diagonal<T: Real>(degree: usize, alpha: T) -> Result<Vec<T>> {
    let diag = (0..=degree).map(|n| monomial_norm_p2(n, alpha)).collect::<Result<Vec<T>>>()?;
    if let Some(bad) = diag.iter().position(|&g| g < T::lit(1e-300)) {
        return Err(Error::Numerical(format!(
            "whole-disk Gram entry {bad} underflows; degree {degree} is too large"
        )));
    }
    Ok(diag)
}

/// Eigen-pencil data behind [`optimal_constant_p2`].
#[derive(Debug, Clone)]
pub struct Pencil<T> {
    pub g_e: HermitianMatrix<T>,
    pub g_full_diag: Vec<T>,
    /// Smallest eigenvalue of the whitened restricted matrix.
    pub lambda_min: T,
    pub eigenvector: Vec<Complex<T>>,
}

impl<T: Real> Pencil<T> {
    /// `||G_E v - lambda G_full v|| / ||G_full v||` for the extremal coefficients.
    pub fn residual(&self, coeffs: &[Complex<T>]) -> T {
        let ge = self.g_e.mul_vec(coeffs);
        let mut num = T::zero();
        let mut den = T::zero();
        for ((g, &d), c) in ge.iter().zip(&self.g_full_diag).zip(coeffs) {
            let gf = *c * d;
            num += (*g - gf * self.lambda_min).norm_sqr();
            den += gf.norm_sqr();
        }
        (num / den).sqrt()
    }
}

pub fn gram_pencil<T: Real>(region: &Region<T>, degree: usize, alpha: T) -> Result<Pencil<T>> {
    pencil_from(gram_matrix(region, degree, alpha)?, full_gram_diagonal(degree, alpha)?)
}

/// Whitens `g_e` by the diagonal whole-space Gram matrix and takes the
/// smallest eigenpair.
pub(crate) fn pencil_from<T: Real>(g_e: HermitianMatrix<T>, g_full_diag: Vec<T>) -> Result<Pencil<T>> {
    let scale: Vec<T> = g_full_diag.iter().map(|g| g.sqrt().recip()).collect();
    let white = g_e.congruence_diagonal(&scale);
    let eig = hermitian_eigen(&white)?;
    Ok(Pencil {
        g_e,
        g_full_diag,
        lambda_min: eig.values[0],
        eigenvector: eig.vectors[0].clone(),
    })
}

/// Best constant `C` with `||f||_{L^{2,alpha}(E)} >= C ||f||` over polynomials
/// of degree `<= degree`: the square root of the smallest eigenvalue of
/// `G_full^{-1/2} G_E G_full^{-1/2}`.
pub fn optimal_constant_p2<T: Real>(region: &Region<T>, degree: usize, alpha: T) -> Result<SamplingResult<T>> {
    let params = SpaceParams::hilbert(alpha)?;
    result_from_pencil(&gram_pencil(region, degree, alpha)?, degree, params, &region.label)
}

pub(crate) fn result_from_pencil<T: Real>(
    pencil: &Pencil<T>,
    degree: usize,
    params: SpaceParams<T>,
    label: &str,
) -> Result<SamplingResult<T>> {
    let coeffs: Vec<Complex<T>> = pencil
        .eigenvector
        .iter()
        .zip(&pencil.g_full_diag)
        .map(|(v, g)| *v / g.sqrt())
        .collect();
    Ok(SamplingResult {
        c_hat: pencil.lambda_min.max(T::zero()).sqrt().min(T::one()),
        degree,
        params,
        region_label: label.to_string(),
        extremal_coeffs: coeffs,
    })
}

/// `C_hat` for each degree.
pub fn convergence_table<T: Real>(region: &Region<T>, degrees: &[usize], alpha: T) -> Result<Vec<(usize, T)>> {
    degrees
        .iter()
        .map(|&d| optimal_constant_p2(region, d, alpha).map(|r| (d, r.c_hat)))
        .collect()
}

/// Raises the degree until `C_hat` changes by less than `1e-3` (relative)
/// over five more degrees, or `max_degree` is reached.
pub fn converged_constant_p2<T: Real>(region: &Region<T>, start: usize, max_degree: usize, alpha: T) -> Result<(SamplingResult<T>, bool)> {
    let mut current = optimal_constant_p2(region, start, alpha)?;
    let mut d = start;
    while d + 5 <= max_degree {
        let next = optimal_constant_p2(region, d + 5, alpha)?;
        let change = (current.c_hat - next.c_hat).abs();
        let done = change <= T::lit(1e-3) * next.c_hat.max(T::min_positive_value());
        current = next;
        d += 5;
        if done {
            return Ok((current, true));
        }
    }
    Ok((current, false))
}

/// Fixed-node objective `int_E |f|^p / int_D |f|^p` in the orthonormalized
/// monomial basis `z^j / ||z^j||_{A^{2,alpha}}`.
struct Objective<T> {
    n: usize,
    p: T,
    basis_e: Vec<Complex<T>>,
    w_e: Vec<T>,
    basis_d: Vec<Complex<T>>,
    w_d: Vec<T>,
}

struct Sums<T> {
    s: T,
    ds: T,
    dds: T,
}

impl<T: Real> Objective<T> {
    fn new(region: &Region<T>, degree: usize, params: SpaceParams<T>) -> Result<Self> {
        let work = (params.p * T::from_usize_lossy(degree) * T::lit(0.5))
            .ceil()
            .to_usize()
            .unwrap_or(degree);
        let extra = if params.p == T::lit(2.0) { 0 } else { 8 };
        let size = RuleSize::for_degree(work + extra);
        let scale: Vec<T> = full_gram_diagonal(degree, params.alpha)?.iter().map(|g| g.sqrt().recip()).collect();
        let n = degree + 1;
        let tabulate = |nodes: Vec<Node<T>>| {
            let mut basis = Vec::with_capacity(nodes.len() * n);
            let mut w = Vec::with_capacity(nodes.len());
            for node in nodes {
                let mut pw = Complex::new(T::one(), T::zero());
                for s in &scale {
                    basis.push(pw * *s);
                    pw *= node.z;
                }
                w.push(node.w);
            }
            (basis, w)
        };
        let (basis_e, w_e) = tabulate(if region.is_empty() {
            Vec::new()
        } else {
            region_nodes(Some(region), params.density(), size)?
        });
        let (basis_d, w_d) = tabulate(region_nodes(None, params.density(), size)?);
        Ok(Self {
            n,
            p: params.p,
            basis_e,
            w_e,
            basis_d,
            w_d,
        })
    }

    fn apply(&self, basis: &[Complex<T>], u: &[Complex<T>]) -> Vec<Complex<T>> {
        basis
            .chunks_exact(self.n)
            .map(|row| {
                row.iter()
                    .zip(u)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (b, c)| acc + *b * *c)
            })
            .collect()
    }

    fn column(&self, basis: &[Complex<T>], j: usize, scale: Complex<T>) -> Vec<Complex<T>> {
        basis.chunks_exact(self.n).map(|row| row[j] * scale).collect()
    }

    /// `S(t) = sum w |F + t G|^p` with first and second derivatives.
    fn sums(&self, f: &[Complex<T>], g: &[Complex<T>], w: &[T], t: T) -> Sums<T> {
        let p = self.p;
        let two = T::lit(2.0);
        let tiny = T::min_positive_value().sqrt();
        let mut out = Sums {
            s: T::zero(),
            ds: T::zero(),
            dds: T::zero(),
        };
        for ((&fi, &gi), &wi) in f.iter().zip(g).zip(w) {
            let v = fi + gi * t;
            let m2 = v.norm_sqr();
            let re = (v.conj() * gi).re;
            if p == two {
                out.s += wi * m2;
                out.ds += wi * two * re;
                out.dds += wi * two * gi.norm_sqr();
            } else {
                let m = m2.sqrt().max(tiny);
                let mp2 = m.powf(p - two);
                out.s += wi * mp2 * m * m;
                out.ds += wi * p * mp2 * re;
                out.dds += wi * p * mp2 * (gi.norm_sqr() + (p - two) * re * re / (m * m));
            }
        }
        out
    }

    fn log_ratio(&self, se: T, sd: T) -> T {
        if se <= T::zero() {
            T::neg_infinity()
        } else {
            se.ln() - sd.ln()
        }
    }

    /// Minimizes `ln S_E(t) - ln S_D(t)` over real `t`; returns the step taken.
    fn line_search(&self, state: &mut State<T>, ge: &[Complex<T>], gd: &[Complex<T>]) -> T {
        let p2 = self.p == T::lit(2.0);
        let mut t_total = T::zero();
        let iterations = if p2 { 1 } else { 6 };
        for _ in 0..iterations {
            let e = self.sums(&state.fe, ge, &self.w_e, T::zero());
            let d = self.sums(&state.fd, gd, &self.w_d, T::zero());
            let current = self.log_ratio(e.s, d.s);
            let step = if p2 {
                match quadratic_ratio_argmin(&e, &d) {
                    Some(t) => t,
                    None => break,
                }
            } else {
                let g1 = e.ds / e.s - d.ds / d.s;
                let g2 = e.dds / e.s - (e.ds / e.s).powi(2) - d.dds / d.s + (d.ds / d.s).powi(2);
                if g1 == T::zero() {
                    break;
                }
                if g2 > T::zero() {
                    -g1 / g2
                } else {
                    -g1.signum() * T::lit(0.1) * (d.s / (d.dds.abs() + T::min_positive_value())).sqrt()
                }
            };
            let mut t = step;
            let mut accepted = false;
            for _ in 0..30 {
                if !t.is_finite() || t == T::zero() {
                    break;
                }
                let se = self.sums(&state.fe, ge, &self.w_e, t).s;
                let sd = self.sums(&state.fd, gd, &self.w_d, t).s;
                if self.log_ratio(se, sd) < current {
                    accepted = true;
                    break;
                }
                t *= T::lit(0.5);
            }
            if !accepted {
                break;
            }
            for (x, g) in state.fe.iter_mut().zip(ge) {
                *x += *g * t;
            }
            for (x, g) in state.fd.iter_mut().zip(gd) {
                *x += *g * t;
            }
            t_total += t;
            if t.abs() <= T::epsilon() {
                break;
            }
        }
        t_total
    }

    fn value(&self, state: &State<T>) -> (T, T) {
        let se = self.sums_only(&state.fe, &self.w_e);
        let sd = self.sums_only(&state.fd, &self.w_d);
        (se, sd)
    }

    fn sums_only(&self, f: &[Complex<T>], w: &[T]) -> T {
        f.iter().zip(w).map(|(&v, &wi)| wi * abs_pow(v, self.p)).sum()
    }

    /// Wirtinger gradient of `ln S_E - ln S_D` with respect to `conj(u)`.
    fn gradient(&self, state: &State<T>) -> Vec<Complex<T>> {
        let (se, sd) = self.value(state);
        let p = self.p;
        let half_p = p * T::lit(0.5);
        let tiny = T::min_positive_value().sqrt();
        let mut g = vec![Complex::new(T::zero(), T::zero()); self.n];
        let mut acc = |basis: &[Complex<T>], f: &[Complex<T>], w: &[T], scale: T| {
            for ((row, &fi), &wi) in basis.chunks_exact(self.n).zip(f).zip(w) {
                let m = fi.norm().max(tiny);
                let coef = fi * (wi * half_p * m.powf(p - T::lit(2.0)) * scale);
                for (gj, b) in g.iter_mut().zip(row) {
                    *gj += b.conj() * coef;
                }
            }
        };
        if se > T::zero() {
            acc(&self.basis_e, &state.fe, &self.w_e, se.recip());
        }
        acc(&self.basis_d, &state.fd, &self.w_d, -sd.recip());
        g
    }
}

/// Minimizer of `(a_E + 2 b_E t + c_E t^2) / (a_D + 2 b_D t + c_D t^2)` given
/// `S`, `S'`, `S''` at `t = 0`, when it improves on `t = 0`.
fn quadratic_ratio_argmin<T: Real>(e: &Sums<T>, d: &Sums<T>) -> Option<T> {
    let half = T::lit(0.5);
    let (ae, be, ce) = (e.s, e.ds * half, e.dds * half);
    let (ad, bd, cd) = (d.s, d.ds * half, d.dds * half);
    let qa = bd * ce - be * cd;
    let qb = ad * ce - ae * cd;
    let qc = be * ad - ae * bd;
    let ratio = |t: T| (ae + T::lit(2.0) * be * t + ce * t * t) / (ad + T::lit(2.0) * bd * t + cd * t * t);
    let mut roots = Vec::new();
    if qa.abs() <= T::epsilon() * (qb.abs() + qc.abs()) {
        if qb != T::zero() {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - T::lit(4.0) * qa * qc;
        if disc >= T::zero() {
            let sq = disc.sqrt();
            let q = -half * (qb + qb.signum() * sq);
            if q != T::zero() {
                roots.push(q / qa);
                roots.push(qc / q);
            }
        }
    }
    let base = ratio(T::zero());
    roots
        .into_iter()
        .filter(|t| t.is_finite())
        .map(|t| (ratio(t), t))
        .filter(|(v, _)| *v < base)
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite ratio"))
        .map(|(_, t)| t)
}

struct State<T> {
    u: Vec<Complex<T>>,
    fe: Vec<Complex<T>>,
    fd: Vec<Complex<T>>,
}

impl<T: Real> State<T> {
    fn renormalize(&mut self, obj: &Objective<T>) {
        let sd = obj.sums_only(&self.fd, &obj.w_d);
        if sd > T::zero() && sd.is_finite() {
            let s = sd.powf(-obj.p.recip());
            for v in self.u.iter_mut().chain(self.fe.iter_mut()).chain(self.fd.iter_mut()) {
                *v *= s;
            }
        }
    }
}

/// Sweep cap of [`extremal_search`].
pub const MAX_SWEEPS: usize = 400;

fn run_restart<T: Real>(obj: &Objective<T>, seed: u64, restart: u64) -> (T, Vec<Complex<T>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    let u: Vec<Complex<T>> = (0..obj.n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    let fe = obj.apply(&obj.basis_e, &u);
    let fd = obj.apply(&obj.basis_d, &u);
    let mut st = State { u, fe, fd };
    st.renormalize(obj);
    let current = |st: &State<T>| {
        let (se, sd) = obj.value(st);
        obj.log_ratio(se, sd)
    };
    let mut best = current(&st);
    let mut prev_grad: Option<Vec<Complex<T>>> = None;
    let mut prev_dir: Option<Vec<Complex<T>>> = None;
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    for _ in 0..MAX_SWEEPS {
        // coordinate pass over real and imaginary directions
        for j in 0..obj.n {
            for dir in [one, i] {
                let ge = obj.column(&obj.basis_e, j, dir);
                let gd = obj.column(&obj.basis_d, j, dir);
                let t = obj.line_search(&mut st, &ge, &gd);
                st.u[j] += dir * t;
            }
        }
        // conjugate-gradient steps on the full coefficient vector
        for _ in 0..obj.n {
            let g = obj.gradient(&st);
            let gnorm: T = g.iter().map(|x| x.norm_sqr()).sum();
            if gnorm == T::zero() {
                break;
            }
            let mut d: Vec<Complex<T>> = g.iter().map(|x| -*x).collect();
            if let (Some(pg), Some(pd)) = (&prev_grad, &prev_dir) {
                let pn: T = pg.iter().map(|x| x.norm_sqr()).sum();
                let num: T = g.iter().zip(pg).map(|(a, b)| (a.conj() * (*a - *b)).re).sum();
                let beta = (num / pn).max(T::zero());
                if beta.is_finite() {
                    for (dk, pk) in d.iter_mut().zip(pd) {
                        *dk += *pk * beta;
                    }
                }
            }
            let ge = obj.apply(&obj.basis_e, &d);
            let gd = obj.apply(&obj.basis_d, &d);
            let t = obj.line_search(&mut st, &ge, &gd);
            for (uk, dk) in st.u.iter_mut().zip(&d) {
                *uk += *dk * t;
            }
            prev_grad = Some(g);
            prev_dir = if t == T::zero() { None } else { Some(d) };
        }
        st.renormalize(obj);
        let now = current(&st);
        let gain = best - now;
        best = best.min(now);
        if gain <= T::lit(1e-14) {
            break;
        }
    }
    // exact recomputation removes drift of the incremental node values
    st.fe = obj.apply(&obj.basis_e, &st.u);
    st.fd = obj.apply(&obj.basis_d, &st.u);
    (current(&st), st.u)
}

/// Minimizes the sampling ratio over polynomials of degree `<= degree` by
/// coordinate descent (with conjugate-gradient steps between coordinate
/// passes) from `restarts` random starts. Restart `k` draws from stream `k`
/// of a ChaCha8 generator seeded with `seed`, so the result does not depend on
/// scheduling. The returned constant is an upper bound for the true
/// restricted constant.
pub fn extremal_search<T: Real>(
    region: &Region<T>,
    degree: usize,
    params: SpaceParams<T>,
    restarts: usize,
    seed: u64,
) -> Result<SamplingResult<T>> {
    ensure!(restarts >= 1, InvalidParameter, "need at least one restart");
    let obj = Objective::new(region, degree, params)?;
    let scale: Vec<T> = full_gram_diagonal(degree, params.alpha)?.iter().map(|g| g.sqrt().recip()).collect();
    if obj.w_e.is_empty() {
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); degree + 1];
        coeffs[0] = Complex::new(T::one(), T::zero());
        return Ok(SamplingResult {
            c_hat: T::zero(),
            degree,
            params,
            region_label: region.label.clone(),
            extremal_coeffs: coeffs,
        });
    }
    let runs: Vec<(T, Vec<Complex<T>>)> = (0..restarts as u64).into_par_iter().map(|k| run_restart(&obj, seed, k)).collect();
    let (best, u) = runs
        .into_iter()
        .fold(None, |acc: Option<(T, Vec<Complex<T>>)>, run| match acc {
            Some(a) if a.0 <= run.0 => Some(a),
            _ => Some(run),
        })
        .expect("at least one restart");
    let c_hat = (best / params.p).exp().min(T::one());
    // back to monomial coefficients with unit whole-disk norm
    let mut coeffs: Vec<Complex<T>> = u.iter().zip(&scale).map(|(c, s)| *c * *s).collect();
    let f = AnalyticFunction::polynomial(coeffs.clone());
    let norm = bergman_norm(&f, params, None)?;
    if norm > T::zero() {
        for c in coeffs.iter_mut() {
            *c /= norm;
        }
    }
    Ok(SamplingResult {
        c_hat,
        degree,
        params,
        region_label: region.label.clone(),
        extremal_coeffs: coeffs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GoodDiskSet<T> {
    pub indices: Vec<LatticeIndex>,
    pub k: T,
    pub s: T,
    pub t: T,
    pub good_mass_fraction: T,
}

/// `int |f|^p dA_alpha` over `D_phb(z_{n,k}, s)` and `D_phb(z_{n,k}, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LocalMass<T> {
    pub index: LatticeIndex,
    pub mass_s: T,
    pub mass_t: T,
}

fn disk_mass<T: Real>(f: &AnalyticFunction<T>, params: SpaceParams<T>, index: LatticeIndex, r: T) -> Result<T> {
    let center = lattice_point(index)?;
    let disk = phb_disk_to_euclidean_unchecked(center, r);
    let work = (params.p * T::from_usize_lossy(f.degree()) * T::lit(0.5))
        .ceil()
        .to_usize()
        .unwrap_or(0);
    let p = params.p;
    let density = params.density();
    adaptive(RuleSize::for_degree(work), T::tolerance(LOCAL_TOLERANCE), MAX_DOUBLINGS, |size| {
        let nodes = disk_rule(disk.center, disk.radius, density, size);
        Ok(integrate_nodes(&nodes, |z| abs_pow(f.eval(z), p)))
    })
}

fn check_radii<T: Real>(s: T, t: T) -> Result<()> {
    ensure!(s > T::zero() && t < T::one(), Domain, "radii must lie in (0, 1)");
    ensure!(s < t, InvalidParameter, "need s < t (got s = {s}, t = {t})");
    Ok(())
}

/// Local masses for every lattice disk with `n <= n_max`.
pub fn local_masses<T: Real>(f: &AnalyticFunction<T>, params: SpaceParams<T>, s: T, t: T, n_max: u32) -> Result<Vec<LocalMass<T>>> {
    check_radii(s, t)?;
    f.validate()?;
    lattice_indices_up_to(n_max)
        .into_par_iter()
        .map(|index| {
            Ok(LocalMass {
                index,
                mass_s: disk_mass(f, params, index, s)?,
                mass_t: disk_mass(f, params, index, t)?,
            })
        })
        .collect()
}

/// `||f||_{D^t} <= K ||f||_{D^s}`, with ties within `1e-10` counted as good.
pub fn is_good<T: Real>(m: &LocalMass<T>, k: T, p: T) -> bool {
    let lhs = m.mass_t.powf(p.recip());
    let rhs = k * m.mass_s.powf(p.recip());
    lhs <= rhs + T::lit(GOOD_TIE_SLACK) * lhs
}

/// Splits precomputed local masses at threshold `K`.
pub fn classify<T: Real>(masses: &[LocalMass<T>], k: T, p: T, s: T, t: T, total_mass: T) -> GoodDiskSet<T> {
    let mut indices = Vec::new();
    let mut good = T::zero();
    for m in masses {
        if is_good(m, k, p) {
            indices.push(m.index);
            good += m.mass_s;
        }
    }
    GoodDiskSet {
        indices,
        k,
        s,
        t,
        good_mass_fraction: good / total_mass,
    }
}

/// K-good lattice disks of `f` for radii `s < t`.
pub fn good_disks<T: Real>(f: &AnalyticFunction<T>, params: SpaceParams<T>, s: T, t: T, k: T, n_max: u32) -> Result<GoodDiskSet<T>> {
    ensure!(k > T::one(), InvalidParameter, "K = {k} must exceed 1");
    let masses = local_masses(f, params, s, t, n_max)?;
    let total = pth_power_integral(f, params, None)?;
    ensure!(total > T::zero(), InvalidParameter, "function has zero norm");
    Ok(classify(&masses, k, params.p, s, t, total))
}

/// Outcome of [`verify_good_mass`]; masses are relative to `||f||^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GoodMassReport<T> {
    pub c: T,
    /// Measured overlap at radius `t`.
    pub n_t: usize,
    /// Measured overlap at radius `s`.
    pub n_s: usize,
    pub k: T,
    pub good_mass_fraction: T,
    pub good_count: usize,
    pub disk_count: usize,
    /// `sum ||f||^p_{D^s}` over all lattice disks.
    pub covered_mass: T,
    /// Mass of `f` beyond `|z| = 1 - 2^-n_max`.
    pub tail_fraction: T,
    pub mass_ok: bool,
    pub frame_ok: bool,
}

impl<T: Real> GoodMassReport<T> {
    pub fn passed(&self) -> bool {
        self.mass_ok && self.frame_ok
    }
}

/// Grid resolution for the overlap counts used by [`verify_good_mass`].
pub const OVERLAP_GRID: usize = 256;

/// Overlap counts at `s` and `t` for reuse across functions.
pub fn measured_overlaps<T: Real>(s: T, t: T, n_max: u32) -> Result<(usize, usize)> {
    check_radii(s, t)?;
    let ns = overlap_constant(s, n_max, OVERLAP_GRID, T::one())?.measured_n;
    let nt = overlap_constant(t, n_max, OVERLAP_GRID, T::one())?.measured_n;
    Ok((ns, nt))
}

/// Checks the good-disk mass bound with `K^p = N/(1-c)` and the frame
/// inequality `||f||^p <= sum ||f||^p_{D^s} <= N_s ||f||^p`, the lower side
/// relaxed by the mass beyond the truncated lattice.
pub fn verify_good_mass<T: Real>(
    f: &AnalyticFunction<T>,
    params: SpaceParams<T>,
    s: T,
    t: T,
    c: T,
    n_max: u32,
) -> Result<GoodMassReport<T>> {
    ensure!(c > T::zero() && c < T::one(), InvalidParameter, "c = {c} not in (0, 1)");
    let overlaps = measured_overlaps(s, t, n_max)?;
    let masses = local_masses(f, params, s, t, n_max)?;
    verify_with_masses(f, params, &masses, overlaps, s, t, c, n_max)
}

/// [`verify_good_mass`] with precomputed masses and overlap counts.
#[allow(clippy::too_many_arguments)]
pub fn verify_with_masses<T: Real>(
    f: &AnalyticFunction<T>,
    params: SpaceParams<T>,
    masses: &[LocalMass<T>],
    (n_s, n_t): (usize, usize),
    s: T,
    t: T,
    c: T,
    n_max: u32,
) -> Result<GoodMassReport<T>> {
    let total = pth_power_integral(f, params, None)?;
    ensure!(total > T::zero(), InvalidParameter, "function has zero norm");
    let edge = T::one() - T::lit(2f64.powi(-(n_max as i32)));
    let tail = pth_power_integral(f, params, Some(&Region::annulus(edge)?))? / total;
    let k = (T::from_usize_lossy(n_t) / (T::one() - c)).powf(params.p.recip());
    let set = classify(masses, k, params.p, s, t, total);
    let covered = masses.iter().map(|m| m.mass_s).sum::<T>() / total;
    let slack = T::lit(1e-6);
    let mass_ok = set.good_mass_fraction >= c - tail - slack;
    let frame_ok = covered >= T::one() - tail - slack && covered <= T::from_usize_lossy(n_s) * (T::one() + slack);
    Ok(GoodMassReport {
        c,
        n_t,
        n_s,
        k,
        good_mass_fraction: set.good_mass_fraction,
        good_count: set.indices.len(),
        disk_count: masses.len(),
        covered_mass: covered,
        tail_fraction: tail,
        mass_ok,
        frame_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::random_polynomial;
    use crate::region::{grating, random_sectors};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn ratio_examples() {
        let params = SpaceParams::hilbert(0.0).unwrap();
        let f = AnalyticFunction::polynomial(vec![c(1.0, 0.0), c(0.3, -0.2), c(0.0, 0.5)]);
        assert!((sampling_ratio(&f, &Region::full(), params).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sampling_ratio(&f, &Region::empty(), params).unwrap(), 0.0);
        let one = AnalyticFunction::constant(c(1.0, 0.0));
        let ann = Region::annulus(0.5).unwrap();
        let v: f64 = sampling_ratio(&one, &ann, params).unwrap();
        assert!((v - 0.75f64.sqrt()).abs() < 1e-12);
        let zero = AnalyticFunction::constant(c(0.0, 0.0));
        assert!(sampling_ratio(&zero, &ann, params).is_err());
    }

    #[test]
    fn optimal_constant_examples() {
        for d in [0, 3, 10] {
            let r = optimal_constant_p2(&Region::<f64>::full(), d, 0.5).unwrap();
            assert!((r.c_hat - 1.0).abs() < 1e-10);
        }
        assert_eq!(optimal_constant_p2(&Region::<f64>::empty(), 4, 0.0).unwrap().c_hat, 0.0);
        let ann = Region::<f64>::annulus(0.5).unwrap();
        let r = optimal_constant_p2(&ann, 0, 0.0).unwrap();
        assert!((r.c_hat - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn extremal_vector_attains_the_constant() {
        let e = random_sectors::<f64>(5, 4).unwrap();
        let pencil = gram_pencil(&e, 8, 0.0).unwrap();
        let r = optimal_constant_p2(&e, 8, 0.0).unwrap();
        assert!(pencil.residual(&r.extremal_coeffs) < 1e-8);
        let f = AnalyticFunction::polynomial(r.extremal_coeffs.clone());
        let ratio = sampling_ratio(&f, &e, SpaceParams::hilbert(0.0).unwrap()).unwrap();
        assert!((ratio - r.c_hat).abs() < 1e-8);
    }

    #[test]
    fn constant_is_monotone() {
        let e = grating::<f64>(5, 0.4).unwrap();
        let table = convergence_table(&e, &[0, 2, 4, 6, 8], 0.0).unwrap();
        assert!(table.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
        let bigger = grating::<f64>(5, 0.6).unwrap();
        for d in [0, 4, 8] {
            let a = optimal_constant_p2(&e, d, 0.0).unwrap().c_hat;
            let b = optimal_constant_p2(&bigger, d, 0.0).unwrap().c_hat;
            assert!(a <= b + 1e-12);
        }
    }

    #[test]
    fn search_matches_eigen_oracle() {
        let e = random_sectors::<f64>(4, 9).unwrap();
        let params = SpaceParams::hilbert(0.0).unwrap();
        let exact = optimal_constant_p2(&e, 5, 0.0).unwrap().c_hat;
        let found = extremal_search(&e, 5, params, 4, 1).unwrap();
        assert!((found.c_hat - exact).abs() < 1e-4, "{} vs {exact}", found.c_hat);
        let again = extremal_search(&e, 5, params, 4, 1).unwrap();
        assert_eq!(found, again);
        let full = extremal_search(&Region::<f64>::full(), 4, SpaceParams::new(3.0, 1.0).unwrap(), 2, 77).unwrap();
        assert!((full.c_hat - 1.0).abs() < 1e-8);
    }

    #[test]
    fn search_general_p_is_consistent() {
        let e = grating::<f64>(3, 0.5).unwrap();
        let params = SpaceParams::new(3.0, 0.0).unwrap();
        let found = extremal_search(&e, 3, params, 3, 5).unwrap();
        let f = AnalyticFunction::polynomial(found.extremal_coeffs.clone());
        let ratio = sampling_ratio(&f, &e, params).unwrap();
        assert!((ratio - found.c_hat).abs() < 1e-6);
        assert!(found.c_hat > 0.0 && found.c_hat < 1.0);
    }

    #[test]
    fn good_disks_for_constant_function() {
        let params = SpaceParams::hilbert(0.0).unwrap();
        let one = AnalyticFunction::constant(c(1.0, 0.0));
        let all = good_disks(&one, params, 0.5, 0.8, 1e6, 4).unwrap();
        assert_eq!(all.indices.len(), 31);
        let few = good_disks(&one, params, 0.5, 0.8, 1.01, 4).unwrap();
        assert!(few.indices.len() < 31);
        assert!(good_disks(&one, params, 0.8, 0.5, 2.0, 3).is_err());
    }

    #[test]
    fn good_mass_small_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = SpaceParams::hilbert(0.0).unwrap();
        let f = random_polynomial::<f64, _>(&mut rng, 6);
        let rep = verify_good_mass(&f, params, 0.6, 0.85, 0.5, 5).unwrap();
        assert!(rep.mass_ok, "{rep:?}");
        let one = AnalyticFunction::constant(c(1.0, 0.0));
        assert!(verify_good_mass(&one, params, 0.6, 0.85, 0.5, 5).unwrap().mass_ok);
    }
}
