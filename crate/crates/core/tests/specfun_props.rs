use std::f64::consts::PI;

use proptest::prelude::*;
use spatial_anc::specfun::{bessel_j, bessel_y, hankel2};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn three_term_recurrence(x in 0.1f64..100.0, m in 1i32..=40) {
        let j = |n| bessel_j(n, x).unwrap();
        let y = |n| bessel_y(n, x).unwrap();
        let lhs = j(m - 1) + j(m + 1) - 2.0 * f64::from(m) / x * j(m);
        prop_assert!(lhs.abs() <= 1e-9 * j(m).abs().max(1.0), "J: {lhs:e}");
        let lhs = y(m - 1) + y(m + 1) - 2.0 * f64::from(m) / x * y(m);
        prop_assert!(lhs.abs() <= 1e-9 * y(m).abs().max(1.0), "Y: {lhs:e}");
    }

    #[test]
    fn wronskian(x in 0.1f64..100.0, m in 0i32..=40) {
        let w = bessel_j(m + 1, x).unwrap() * bessel_y(m, x).unwrap()
            - bessel_j(m, x).unwrap() * bessel_y(m + 1, x).unwrap();
        let want = 2.0 / (PI * x);
        prop_assert!(((w - want) / want).abs() <= 1e-9, "{w} vs {want}");
    }

    #[test]
    fn hankel_dominates_its_parts(x in 0.01f64..200.0, m in -60i32..=60) {
        let h = hankel2(m, x).unwrap();
        prop_assert!(h.norm() >= bessel_j(m, x).unwrap().abs());
        prop_assert!(h.norm() >= bessel_y(m, x).unwrap().abs());
    }
}

#[test]
fn extended_envelope_against_mpmath() {
    // (m, x, J, Y) at 30 digits
    let table = [
        (5, 1000.0, 0.005_025_406_945_233_186, -0.024_725_956_719_740_69),
        (0, 10000.0, -0.007_096_160_353_388_801, 0.003_647_805_558_986_606),
        (200, 10000.0, -0.000_363_400_523_426_835_1, -0.007_971_364_590_391_938),
        (256, 300.0, -0.056_242_657_691_127_08, 0.030_097_755_931_465_61),
        (100, 100.0, 0.096_366_673_295_861_56, -0.166_921_411_417_576_5),
        (256, 5000.0, -0.003_959_459_066_672_771, -0.010_574_206_949_317_03),
        (40, 0.001, 1.114_692_560_490_866_4e-180, -7.138_961_395_399_321_5e177),
    ];
    for (m, x, jw, yw) in table {
        let j = bessel_j(m, x).unwrap();
        let y = bessel_y(m, x).unwrap();
        assert!(((j - jw) / jw).abs() < 1e-10, "J_{m}({x}) = {j:e}, want {jw:e}");
        assert!(((y - yw) / yw).abs() < 1e-8, "Y_{m}({x}) = {y:e}, want {yw:e}");
    }
}
