use num_complex::Complex;
use proptest::prelude::*;

use sampler_core::analysis::{bergman_norm, gram_matrix, AnalyticFunction, SpaceParams};
use sampler_core::bounds::{exponent_l, m_bound, theoretical_lower, BoundConfig};
use sampler_core::covering::{nearest_lattice_distance, radial_level_bound, radial_levels};
use sampler_core::fock::fock_optimal_constant_p2;
use sampler_core::geometry::EuclideanDisk;
use sampler_core::geometry::{automorphism, phb_disk_to_euclidean, phb_distance, Point};
use sampler_core::region::{density, grating, intersect_disk_area, random_sectors, region_area, AnnularSector, Region};
use sampler_core::remez::{candidate_pool, select_from_pool};
use sampler_core::sampling::{gram_pencil, optimal_constant_p2, sampling_ratio};

fn disk_point(max_modulus: f64) -> impl Strategy<Value = Point<f64>> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(u, t)| Complex::from_polar(max_modulus * u.sqrt(), t))
}

fn coeffs(max_degree: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=max_degree + 1)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex::new(a, b)).collect())
        .prop_filter("nonzero", |v: &Vec<Complex<f64>>| v.iter().any(|c| c.norm() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn automorphism_is_an_involution(a in disk_point(0.95), z in disk_point(0.95)) {
        let back = automorphism(a, automorphism(a, z).unwrap()).unwrap();
        prop_assert!((back - z).norm() < 1e-12);
    }

    #[test]
    fn metric_is_mobius_invariant(a in disk_point(0.95), z in disk_point(0.95), w in disk_point(0.95)) {
        let d0 = phb_distance(z, w).unwrap();
        let d1 = phb_distance(automorphism(a, z).unwrap(), automorphism(a, w).unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-12);
    }

    #[test]
    fn disk_image_stays_in_centered_disk(z in disk_point(0.9), r in 0.05..0.95f64, u in disk_point(1.0)) {
        let disk = phb_disk_to_euclidean(z, r).unwrap();
        let w = disk.center + u * disk.radius;
        prop_assert!(automorphism(z, w).unwrap().norm() < r + 1e-9);
    }

    #[test]
    fn boundary_distance_constants(x in 0.0..0.999f64, r in 0.01..0.99f64) {
        let outer = 1.0 - (x + r) / (1.0 + r * x);
        let inner = 1.0 - (x - r) / (1.0 - r * x);
        prop_assert!(outer >= (1.0 - r) / 2.0 * (1.0 - x) * (1.0 - 1e-12));
        prop_assert!(inner <= 2.0 / (1.0 - r) * (1.0 - x) * (1.0 + 1e-12));
    }

    #[test]
    fn coverage_grows_with_radius(z in disk_point(0.99), r in 0.3..0.9f64, dr in 0.0..0.09f64) {
        let d = nearest_lattice_distance(z, 8);
        if d < r {
            prop_assert!(d < r + dr);
        }
    }

    #[test]
    fn radial_level_count_is_bounded(z in disk_point(0.996), r in 0.3..0.95f64) {
        prop_assert!(radial_levels(z, r, 8) as f64 <= radial_level_bound(r));
    }

    #[test]
    fn exponent_and_lower_bound_are_monotone(r1 in 0.05..0.95f64, r2 in 0.05..0.95f64, g1 in 0.0..1.0f64, g2 in 0.0..1.0f64) {
        let cfg = BoundConfig::default();
        let params = SpaceParams::hilbert(0.0).unwrap();
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(exponent_l(lo, params, &cfg).unwrap() <= exponent_l(hi, params, &cfg).unwrap());
        prop_assert!(m_bound(lo, params, 2.0, &cfg).unwrap() <= m_bound(hi, params, 2.0, &cfg).unwrap());
        let (ga, gb) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        let a = theoretical_lower(ga, r1, params, &cfg).unwrap();
        let b = theoretical_lower(gb, r1, params, &cfg).unwrap();
        prop_assert!(a <= b);
        prop_assert!(theoretical_lower(gb, hi, params, &cfg).unwrap() <= theoretical_lower(gb, lo, params, &cfg).unwrap());
        prop_assert_eq!(a.to_bits(), theoretical_lower(ga, r1, params, &cfg).unwrap().to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrature_matches_gram_form(c in coeffs(8), seed in 0u64..1000, alpha in 0.0..2.0f64) {
        let e: Region<f64> = random_sectors(3, seed).unwrap();
        let params = SpaceParams::hilbert(alpha).unwrap();
        let f = AnalyticFunction::polynomial(c.clone());
        let q = bergman_norm(&f, params, Some(&e)).unwrap().powi(2);
        let g = gram_matrix(&e, c.len() - 1, alpha).unwrap();
        let form = g.quad_form(&c);
        prop_assert!((q - form).abs() <= 1e-10 * form.max(1e-12), "{} vs {}", q, form);
    }

    #[test]
    fn restricted_norm_grows_with_region(c in coeffs(6), f1 in 0.05..1.0f64, f2 in 0.05..1.0f64, p in 1.0..3.0f64) {
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let params = SpaceParams::new(p, 0.5).unwrap();
        let f = AnalyticFunction::polynomial(c);
        let small = bergman_norm(&f, params, Some(&grating(3, lo).unwrap())).unwrap();
        let big = bergman_norm(&f, params, Some(&grating(3, hi).unwrap())).unwrap();
        prop_assert!(small <= big * (1.0 + 1e-9));
    }

    #[test]
    fn density_grows_with_region(m in 2usize..8, f1 in 0.05..1.0f64, f2 in 0.05..1.0f64, r in 0.3..0.9f64) {
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let a = density(&grating(m, lo).unwrap(), r, 24).unwrap().gamma_hat;
        let b = density(&grating(m, hi).unwrap(), r, 24).unwrap().gamma_hat;
        prop_assert!(a <= b + 1e-6);
    }

    #[test]
    fn area_matches_raster(seed in 0u64..1000, count in 1usize..6) {
        let e: Region<f64> = random_sectors(count, seed).unwrap();
        let exact = region_area(&e, None).unwrap();
        let raster = intersect_disk_area(&e, &EuclideanDisk::new(Complex::new(0.0, 0.0), 1.0 - 1e-9));
        prop_assert!((exact - raster).abs() <= 1e-3 * exact);
    }

    #[test]
    fn sampling_constant_is_monotone(seed in 0u64..1000, d in 1usize..10, alpha in 0.0..2.0f64) {
        let e: Region<f64> = random_sectors(4, seed).unwrap();
        let a = optimal_constant_p2(&e, d, alpha).unwrap().c_hat;
        let b = optimal_constant_p2(&e, d + 1, alpha).unwrap().c_hat;
        prop_assert!(b <= a + 1e-12);
        let mut bigger = e.sectors.clone();
        bigger.push(AnnularSector::new(0.0, 0.5, 0.0, 3.0).unwrap());
        let grown = Region::new("grown", bigger).unwrap();
        prop_assert!(optimal_constant_p2(&grown, d, alpha).unwrap().c_hat + 1e-12 >= a);
    }

    #[test]
    fn extremal_polynomial_attains_constant(seed in 0u64..1000, d in 1usize..8) {
        let e: Region<f64> = random_sectors(3, seed).unwrap();
        let res = optimal_constant_p2(&e, d, 0.0).unwrap();
        let f = AnalyticFunction::polynomial(res.extremal_coeffs.clone());
        let ratio = sampling_ratio(&f, &e, SpaceParams::hilbert(0.0).unwrap()).unwrap();
        prop_assert!((ratio - res.c_hat).abs() < 1e-8);
        let pencil = gram_pencil(&e, d, 0.0).unwrap();
        prop_assert!(pencil.residual(&res.extremal_coeffs) <= 1e-8);
    }

    #[test]
    fn fock_constant_is_monotone(d in 1usize..8, rho in 0.5..3.0f64, width in 0.5..6.0f64) {
        let e: Region<f64> = Region::new("s", vec![AnnularSector::new(0.0, rho, 0.0, width).unwrap()]).unwrap();
        let a = fock_optimal_constant_p2(&e, d, 1.0, 10.0).unwrap().c_hat;
        let b = fock_optimal_constant_p2(&e, d + 1, 1.0, 10.0).unwrap().c_hat;
        prop_assert!(b <= a + 1e-12);
        let wider = Region::new("w", vec![AnnularSector::new(0.0, rho + 0.5, 0.0, width).unwrap()]).unwrap();
        prop_assert!(fock_optimal_constant_p2(&wider, d, 1.0, 10.0).unwrap().c_hat + 1e-12 >= a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn remez_samples_nest_and_replay(d in 1usize..4, s1 in 0.05..0.5f64, s2 in 0.05..0.5f64, seed in 0u64..100) {
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        let area = std::f64::consts::PI;
        let pool = candidate_pool::<f64>(d, 1.0, 1, seed).unwrap();
        let small = select_from_pool(&pool, d, lo * area, 1.0).unwrap();
        let large = select_from_pool(&pool, d, hi * area, 1.0).unwrap();
        prop_assert!(small.boundary_sup >= large.boundary_sup * (1.0 - 1e-9));
        small.replay(1.0).unwrap();
        large.replay(1.0).unwrap();
    }
}
