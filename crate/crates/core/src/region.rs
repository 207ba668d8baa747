//! Candidate dominating sets: finite unions of annular sectors.
//!
//! Areas, weighted areas and areas of intersection with Euclidean disks are
//! computed in closed form. Every area returned here is normalized so that the
//! unit disk has area 1, i.e. Lebesgue measure divided by pi.

use std::fmt;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::{phb_disk_to_euclidean_unchecked, EuclideanDisk, Point};
use crate::scalar::Real;

/// `{ rho_min <= |z| < rho_max, theta_min <= arg z <= theta_max }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AnnularSector<T> {
    pub rho_min: T,
    pub rho_max: T,
    pub theta_min: T,
    pub theta_max: T,
}

impl<T: Real> AnnularSector<T> {
    pub fn new(rho_min: T, rho_max: T, theta_min: T, theta_max: T) -> Result<Self> {
        let s = Self {
            rho_min,
            rho_max,
            theta_min,
            theta_max,
        };
        s.validate()?;
        Ok(s)
    }

    /// Full annulus `rho_min <= |z| < rho_max`.
    pub fn annulus(rho_min: T, rho_max: T) -> Result<Self> {
        Self::new(rho_min, rho_max, T::zero(), T::TAU())
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.rho_min, self.rho_max, self.theta_min, self.theta_max]
            .iter()
            .all(|v| v.is_finite());
        ensure!(finite, InvalidParameter, "sector has non-finite bounds");
        ensure!(
            self.rho_min >= T::zero() && self.rho_min < self.rho_max,
            InvalidParameter,
            "sector radii must satisfy 0 <= rho_min < rho_max (got {} .. {})",
            self.rho_min,
            self.rho_max
        );
        let width = self.width();
        ensure!(
            width >= T::zero() && width <= T::TAU() + T::lit(1e-12),
            InvalidParameter,
            "sector angular width {width} outside [0, 2 pi]"
        );
        Ok(())
    }

    pub fn width(&self) -> T {
        self.theta_max - self.theta_min
    }

    pub fn is_full_turn(&self) -> bool {
        self.width() >= T::TAU() - T::lit(1e-12)
    }

    pub fn contains(&self, z: Point<T>) -> bool {
        let rho = z.norm();
        if rho < self.rho_min || rho >= self.rho_max {
            return false;
        }
        if self.is_full_turn() {
            return true;
        }
        let rel = (z.arg() - self.theta_min).rem_euclid(&T::TAU());
        rel <= self.width()
    }
}

/// A finite union of annular sectors (overlaps allowed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Region<T> {
    pub label: String,
    pub sectors: Vec<AnnularSector<T>>,
}

impl<T: Real> fmt::Display for Region<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} sectors)", self.label, self.sectors.len())
    }
}

/// Disjoint polar rectangle produced by [`Region::disjoint_pieces`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece<T> {
    pub rho_min: T,
    pub rho_max: T,
    /// Start angle in `[0, 2 pi)`.
    pub theta_start: T,
    /// Angular width in `(0, 2 pi]`.
    pub width: T,
}

impl<T: Real> Piece<T> {
    pub fn is_full_turn(&self) -> bool {
        self.width >= T::TAU() - T::lit(1e-12)
    }
}

impl<T: Real> Region<T> {
    pub fn new(label: impl Into<String>, sectors: Vec<AnnularSector<T>>) -> Result<Self> {
        let r = Self {
            label: label.into(),
            sectors,
        };
        for s in &r.sectors {
            s.validate()?;
        }
        Ok(r)
    }

    pub fn full() -> Self {
        Self {
            label: "full".into(),
            sectors: vec![AnnularSector::annulus(T::zero(), T::one()).expect("valid")],
        }
    }

    pub fn empty() -> Self {
        Self {
            label: "empty".into(),
            sectors: Vec::new(),
        }
    }

    /// Disk `{|z| < radius}`; used for planar (Fock) regions as well.
    pub fn disk(radius: T) -> Result<Self> {
        Self::new(format!("disk({radius})"), vec![AnnularSector::annulus(T::zero(), radius)?])
    }

    pub fn annulus(inner: T) -> Result<Self> {
        Self::new(format!("annulus({inner})"), vec![AnnularSector::annulus(inner, T::one())?])
    }

    pub fn is_empty(&self) -> bool {
        self.disjoint_pieces().is_empty()
    }

    pub fn contains(&self, z: Point<T>) -> bool {
        self.sectors.iter().any(|s| s.contains(z))
    }

    pub fn max_radius(&self) -> T {
        self.sectors.iter().fold(T::zero(), |m, s| m.max(s.rho_max))
    }

    /// Checks that every sector lies in `{|z| <= radius}`.
    pub fn check_within(&self, radius: T) -> Result<()> {
        for s in &self.sectors {
            s.validate()?;
            ensure!(
                s.rho_max <= radius + T::epsilon() * T::lit(4.0),
                Domain,
                "sector reaches radius {} beyond {radius}",
                s.rho_max
            );
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        for s in &r.sectors {
            s.validate()?;
        }
        Ok(r)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Rewrites the union as disjoint polar rectangles: radial bands between
    /// consecutive sector radii, each carrying the merged angular intervals
    /// of the sectors spanning it. Adjacent bands with identical angular sets
    /// are fused.
    pub fn disjoint_pieces(&self) -> Vec<Piece<T>> {
        let bands = self.bands();
        let mut pieces: Vec<Piece<T>> = Vec::new();
        let mut prev: Option<Band<T>> = None;
        for (lo, hi, ivs) in bands {
            match prev.take() {
                Some((plo, phi, pivs)) if phi == lo && pivs == ivs => prev = Some((plo, hi, pivs)),
                Some(p) => {
                    push_band(&mut pieces, p);
                    prev = Some((lo, hi, ivs));
                }
                None => prev = Some((lo, hi, ivs)),
            }
        }
        if let Some(p) = prev {
            push_band(&mut pieces, p);
        }
        pieces
    }

    fn bands(&self) -> Vec<Band<T>> {
        let mut radii: Vec<T> = self
            .sectors
            .iter()
            .filter(|s| s.width() > T::zero())
            .flat_map(|s| [s.rho_min, s.rho_max])
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
        radii.dedup();
        let mut out = Vec::new();
        for w in radii.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let ivs: Vec<(T, T)> = self
                .sectors
                .iter()
                .filter(|s| s.width() > T::zero() && s.rho_min <= lo && s.rho_max >= hi)
                .flat_map(|s| normalized_intervals(s.theta_min, s.width()))
                .collect();
            let merged = merge_intervals(ivs);
            if !merged.is_empty() {
                out.push((lo, hi, merged));
            }
        }
        out
    }

    /// Complement within `{|z| < outer}`.
    pub fn complement(&self, outer: T, label: impl Into<String>) -> Result<Self> {
        let mut radii: Vec<T> = vec![T::zero(), outer];
        for s in &self.sectors {
            if s.rho_min < outer {
                radii.push(s.rho_min);
            }
            if s.rho_max < outer {
                radii.push(s.rho_max);
            }
        }
        radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
        radii.dedup();
        let mut sectors = Vec::new();
        for w in radii.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let ivs: Vec<(T, T)> = self
                .sectors
                .iter()
                .filter(|s| s.width() > T::zero() && s.rho_min <= lo && s.rho_max >= hi)
                .flat_map(|s| normalized_intervals(s.theta_min, s.width()))
                .collect();
            let merged = merge_intervals(ivs);
            let mut cursor = T::zero();
            for (a, b) in merged.iter().copied().chain(std::iter::once((T::TAU(), T::TAU()))) {
                if a > cursor {
                    sectors.push(AnnularSector::new(lo, hi, cursor, a)?);
                }
                cursor = cursor.max(b);
            }
        }
        Self::new(label, sectors)
    }
}

/// Radial band `[lo, hi)` with its merged angular intervals.
type Band<T> = (T, T, Vec<(T, T)>);

fn push_band<T: Real>(pieces: &mut Vec<Piece<T>>, band: Band<T>) {
    let (lo, hi, ivs) = band;
    for (a, b) in ivs {
        pieces.push(Piece {
            rho_min: lo,
            rho_max: hi,
            theta_start: a,
            width: b - a,
        });
    }
}

/// Angular interval as sub-intervals of `[0, 2 pi]`.
fn normalized_intervals<T: Real>(start: T, width: T) -> Vec<(T, T)> {
    let tau = T::TAU();
    if width >= tau - T::lit(1e-12) {
        return vec![(T::zero(), tau)];
    }
    let a = start.rem_euclid(&tau);
    let b = a + width;
    if b <= tau {
        vec![(a, b)]
    } else {
        vec![(a, tau), (T::zero(), b - tau)]
    }
}

fn merge_intervals<T: Real>(mut ivs: Vec<(T, T)>) -> Vec<(T, T)> {
    ivs.retain(|iv| iv.1 > iv.0);
    ivs.sort_by(|x, y| x.partial_cmp(y).expect("finite angles"));
    let mut out: Vec<(T, T)> = Vec::new();
    for (a, b) in ivs {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    let tau = T::TAU();
    if out.len() == 1 && out[0].0 <= T::zero() && out[0].1 >= tau - T::lit(1e-12) {
        return vec![(T::zero(), tau)];
    }
    out
}

/// Normalized area `A(E)` (`alpha = None`) or weighted area
/// `A_alpha(E) = (alpha + 1) int_E (1 - |z|^2)^alpha dA`.
pub fn region_area<T: Real>(region: &Region<T>, alpha: Option<T>) -> Result<T> {
    if let Some(a) = alpha {
        ensure!(a > -T::one(), InvalidParameter, "alpha = {a} must exceed -1");
        region.check_within(T::one())?;
    }
    let mut total = T::zero();
    for p in region.disjoint_pieces() {
        let frac = p.width / T::TAU();
        let (t1, t2) = (p.rho_min * p.rho_min, p.rho_max * p.rho_max);
        let radial = match alpha {
            None => t2 - t1,
            Some(a) => {
                let e = a + T::one();
                (T::one() - t1).powf(e) - (T::one() - t2).max(T::zero()).powf(e)
            }
        };
        total += frac * radial;
    }
    Ok(total)
}

/// Normalized area of `E ∩ disk`, exact up to rounding.
///
/// In polar coordinates about the origin each disjoint piece is a rectangle,
/// and a ray at relative angle `d` meets the disk in `[rho_-(d), rho_+(d)]` with
/// `rho_± = |c| cos d ± sqrt(R^2 - |c|^2 sin^2 d)`. The angular integral of
/// `(upper^2 - lower^2)/2` is split at the angles where the clipping switches
/// and integrated with closed-form antiderivatives.
pub fn intersect_disk_area<T: Real>(region: &Region<T>, disk: &EuclideanDisk<T>) -> T {
    region.disjoint_pieces().iter().map(|p| piece_disk_area(p, disk)).sum::<T>() * T::FRAC_1_PI()
}

pub(crate) fn piece_disk_area<T: Real>(p: &Piece<T>, disk: &EuclideanDisk<T>) -> T {
    let d = disk.center.norm();
    let phi = if d > T::zero() { disk.center.arg() } else { T::zero() };
    let geom = RayDisk { d, r: disk.radius };
    // quick reject: radial ranges disjoint
    if d - disk.radius >= p.rho_max || d + disk.radius <= p.rho_min {
        return T::zero();
    }
    let tau = T::TAU();
    let pi = T::PI();
    let s = (p.theta_start - phi + pi).rem_euclid(&tau) - pi;
    let e = s + p.width;
    let mut total = T::zero();
    if e <= pi {
        total += geom.integrate(s, e, p.rho_min, p.rho_max);
    } else {
        total += geom.integrate(s, pi, p.rho_min, p.rho_max);
        total += geom.integrate(-pi, e - tau, p.rho_min, p.rho_max);
    }
    total
}

struct RayDisk<T> {
    d: T,
    r: T,
}

impl<T: Real> RayDisk<T> {
    fn root_term(&self, delta: T) -> T {
        let s = self.d * delta.sin();
        (self.r * self.r - s * s).max(T::zero()).sqrt()
    }

    fn rho_plus(&self, delta: T) -> T {
        self.d * delta.cos() + self.root_term(delta)
    }

    fn rho_minus(&self, delta: T) -> T {
        self.d * delta.cos() - self.root_term(delta)
    }

    fn shadowed(&self) -> bool {
        self.d > self.r
    }

    /// Antiderivative of `rho_±(delta)^2 / 2`.
    fn antiderivative(&self, delta: T, sign: T) -> T {
        let (d, r) = (self.d, self.r);
        let half = T::lit(0.5);
        let base = half * (half * d * d * (delta + delta).sin() + r * r * delta);
        let u = d * delta.sin();
        let root = (r * r - u * u).max(T::zero()).sqrt();
        let ratio = if r > T::zero() {
            (u / r).max(-T::one()).min(T::one())
        } else {
            T::zero()
        };
        let h = half * (u * root + r * r * ratio.asin());
        base + sign * h
    }

    /// `int_a^b (upper^2 - lower^2)/2` over `[a, b] ⊂ [-pi, pi]` for the
    /// radial window `[lo, hi]`.
    fn integrate(&self, a: T, b: T, lo: T, hi: T) -> T {
        if b <= a {
            return T::zero();
        }
        let mut cuts = vec![a, b];
        let mut add = |x: T| {
            if x > a && x < b {
                cuts.push(x);
                if -x > a && -x < b {
                    cuts.push(-x);
                }
            } else if -x > a && -x < b {
                cuts.push(-x);
            }
        };
        let half_width = if self.shadowed() {
            (self.r / self.d).min(T::one()).asin()
        } else {
            T::PI()
        };
        if self.shadowed() {
            add(half_width);
        }
        if self.d > T::zero() {
            for r0 in [lo, hi] {
                if r0 > T::zero() {
                    let kappa = (r0 * r0 + self.d * self.d - self.r * self.r) / (T::lit(2.0) * r0 * self.d);
                    if kappa.abs() <= T::one() {
                        add(kappa.acos());
                    }
                }
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cuts"));
        let half = T::lit(0.5);
        let mut total = T::zero();
        for w in cuts.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            if x1 <= x0 {
                continue;
            }
            let m = half * (x0 + x1);
            if self.shadowed() && m.abs() >= half_width {
                continue;
            }
            let rp = self.rho_plus(m);
            let upper_is_disk = rp < hi;
            let upper = if upper_is_disk { rp } else { hi };
            let (lower_is_disk, lower) = if self.shadowed() {
                let rm = self.rho_minus(m);
                if rm > lo {
                    (true, rm)
                } else {
                    (false, lo)
                }
            } else {
                (false, lo)
            };
            if upper <= lower {
                continue;
            }
            let up = if upper_is_disk {
                self.antiderivative(x1, T::one()) - self.antiderivative(x0, T::one())
            } else {
                half * hi * hi * (x1 - x0)
            };
            let down = if lower_is_disk {
                self.antiderivative(x1, -T::one()) - self.antiderivative(x0, -T::one())
            } else {
                half * lo * lo * (x1 - x0)
            };
            total += up - down;
        }
        total.max(T::zero())
    }
}

/// Estimated relative density of a region at pseudohyperbolic radius `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DensityReport<T> {
    pub r: T,
    /// Minimum of the density ratio over the center grid; an upper bound for
    /// the true infimum over the disk.
    pub gamma_hat: T,
    pub argmin_center: Point<T>,
    pub grid_resolution: usize,
}

/// Largest center modulus used by the density grid.
pub const DENSITY_CENTER_MAX: f64 = 1.0 - 1e-3;

/// Polar grid of `resolution` radii in `[0, max_radius]` and `resolution`
/// angles (the origin appears once).
pub fn polar_grid<T: Real>(resolution: usize, max_radius: T) -> Vec<Point<T>> {
    let m = resolution.max(2);
    let mut pts = vec![Complex::new(T::zero(), T::zero())];
    for i in 1..m {
        let rho = max_radius * T::from_usize_lossy(i) / T::from_usize_lossy(m - 1);
        for j in 0..m {
            let th = T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(m);
            pts.push(Complex::from_polar(rho, th));
        }
    }
    pts
}

/// Ratio `|E ∩ D_phb(z, r)| / |D_phb(z, r)|` (planar Lebesgue measure).
pub fn density_at<T: Real>(region: &Region<T>, center: Point<T>, r: T) -> T {
    let disk = phb_disk_to_euclidean_unchecked(center, r);
    let pieces = region.disjoint_pieces();
    let area: T = pieces.iter().map(|p| piece_disk_area(p, &disk)).sum::<T>() * T::FRAC_1_PI();
    (area / disk.normalized_area()).min(T::one())
}

/// Minimum density ratio over a polar grid of centers with `|z| <= 1 - 1e-3`.
pub fn density<T: Real>(region: &Region<T>, r: T, center_grid_resolution: usize) -> Result<DensityReport<T>> {
    ensure!(r > T::zero() && r < T::one(), Domain, "density radius {r} not in (0, 1)");
    ensure!(center_grid_resolution >= 2, InvalidParameter, "center grid needs resolution >= 2");
    region.check_within(T::one())?;
    let pieces = region.disjoint_pieces();
    let centers = polar_grid(center_grid_resolution, T::lit(DENSITY_CENTER_MAX));
    let ratios: Vec<T> = centers
        .par_iter()
        .map(|&z| {
            let disk = phb_disk_to_euclidean_unchecked(z, r);
            let area: T = pieces.iter().map(|p| piece_disk_area(p, &disk)).sum::<T>() * T::FRAC_1_PI();
            (area / disk.normalized_area()).min(T::one())
        })
        .collect();
    let (idx, gamma) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0usize, T::infinity()), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    Ok(DensityReport {
        r,
        gamma_hat: gamma.max(T::zero()),
        argmin_center: centers[idx],
        grid_resolution: center_grid_resolution,
    })
}

/// Dyadic annuli `{1 - 2^-n <= |z| < 1 - (1 - eps) 2^-n}` for `n = 0..=n_max`.
pub fn dyadic_annuli<T: Real>(eps: T, n_max: u32) -> Result<Region<T>> {
    ensure!(
        eps > T::zero() && eps <= T::one(),
        InvalidParameter,
        "annuli eps {eps} not in (0, 1]"
    );
    let mut sectors = Vec::new();
    for n in 0..=n_max {
        let scale = T::lit(2f64.powi(-(n as i32)));
        let lo = T::one() - scale;
        let hi = T::one() - (T::one() - eps) * scale;
        sectors.push(AnnularSector::annulus(lo, hi)?);
    }
    Region::new(format!("annuli({eps},{n_max})"), sectors)
}

/// `m` equal angular sectors, each filling `fill` of its slot.
pub fn grating<T: Real>(m: usize, fill: T) -> Result<Region<T>> {
    ensure!(m >= 1, InvalidParameter, "grating needs at least one slot");
    ensure!(
        fill > T::zero() && fill <= T::one(),
        InvalidParameter,
        "grating fill {fill} not in (0, 1]"
    );
    let slot = T::TAU() / T::from_usize_lossy(m);
    let sectors = (0..m)
        .map(|j| {
            let a = slot * T::from_usize_lossy(j);
            AnnularSector::new(T::zero(), T::one(), a, a + fill * slot)
        })
        .collect::<Result<Vec<_>>>()?;
    Region::new(format!("grating({m},{fill})"), sectors)
}

/// Union of `count` random sectors drawn deterministically from `seed`.
pub fn random_sectors<T: Real>(count: usize, seed: u64) -> Result<Region<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sectors = Vec::with_capacity(count);
    for _ in 0..count {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let hi = if hi - lo < 1e-3 { (lo + 0.05).min(1.0) } else { hi };
        let start: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let width: f64 = rng.random::<f64>() * std::f64::consts::PI;
        sectors.push(AnnularSector::new(T::lit(lo), T::lit(hi), T::lit(start), T::lit(start + width))?);
    }
    Region::new(format!("random({count},{seed})"), sectors)
}

/// Unit disk with a polar box removed around every dyadic lattice point
/// `z_{n,k}`, `1 <= n <= levels`; `size` in `(0, 1)` is the relative box size.
pub fn holes<T: Real>(levels: u32, size: T) -> Result<Region<T>> {
    ensure!(
        size > T::zero() && size < T::one(),
        InvalidParameter,
        "hole size {size} not in (0, 1)"
    );
    let mut boxes = Vec::new();
    for n in 1..=levels {
        let h = T::lit(2f64.powi(-(n as i32)));
        let rho = T::one() - h;
        let half_r = size * h * T::lit(0.5);
        let count = 1usize << n;
        let half_t = size * T::PI() / T::from_usize_lossy(count);
        for k in 0..count {
            let th = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(count);
            boxes.push(AnnularSector::new(rho - half_r, rho + half_r, th - half_t, th + half_t)?);
        }
    }
    let removed = Region::new("holes", boxes)?;
    removed.complement(T::one(), format!("holes({levels},{size})"))
}

/// Names understood by [`builtin_region`].
pub const BUILTIN_NAMES: &[&str] = &[
    "full",
    "empty",
    "annulus(a)",
    "annuli(eps[,n_max])",
    "grating(m,fill)",
    "random(count,seed)",
    "holes(levels,size)",
];

/// Catalog lookup: `full`, `empty`, `annulus(0.5)`, `annuli(0.3)`,
/// `annuli(0.3,10)`, `grating(8,0.5)`, `random(6,42)`, `holes(5,0.4)`.
pub fn builtin_region<T: Real>(spec: &str) -> Result<Region<T>> {
    let spec = spec.trim();
    let (name, args) = match spec.find('(') {
        Some(i) => {
            ensure!(spec.ends_with(')'), UnknownRegion, "{spec}");
            let inner = &spec[i + 1..spec.len() - 1];
            let args = inner
                .split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| Error::UnknownRegion(spec.to_string()))?;
            (&spec[..i], args)
        }
        None => (spec, Vec::new()),
    };
    let bad = || Error::UnknownRegion(spec.to_string());
    let region = match (name, args.as_slice()) {
        ("full" | "disk", []) => Region::full(),
        ("empty", []) => Region::empty(),
        ("annulus", [a]) => Region::annulus(T::lit(*a))?,
        ("annuli", [eps]) => dyadic_annuli(T::lit(*eps), 12)?,
        ("annuli", [eps, n]) => dyadic_annuli(T::lit(*eps), *n as u32)?,
        ("grating", [m, fill]) => grating(*m as usize, T::lit(*fill))?,
        ("random", [count, seed]) => random_sectors(*count as usize, *seed as u64)?,
        ("holes", [levels, size]) => holes(*levels as u32, T::lit(*size))?,
        _ => return Err(bad()),
    };
    Ok(Region {
        label: spec.to_string(),
        ..region
    })
}
