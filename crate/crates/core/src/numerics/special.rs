/// Complementary error function, `erfc(x) = 1 - erf(x)`.
///
/// Total on the reals: `erfc(+inf) = 0`, `erfc(-inf) = 2`, NaN propagates.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // 30-digit reference values.
    const REFERENCE: &[(f64, f64)] = &[
        (1.0, 0.157_299_207_050_285_130_66),
        (-1.0, 1.842_700_792_949_714_869_3),
        (0.5, 0.479_500_122_186_953_462_32),
        (2.0, 0.004_677_734_981_047_265_837_9),
        (3.7, 1.671_510_579_091_459_751_3e-7),
        (-2.5, 1.999_593_047_982_555_041_1),
        (5.0, 1.537_459_794_428_034_850_2e-12),
        (8.0, 1.122_429_717_298_292_708e-29),
        (10.0, 2.088_487_583_762_544_757e-45),
        (1e-3, 0.998_871_621_209_030_763_6),
    ];

    #[test]
    fn matches_reference_values() {
        for &(x, want) in REFERENCE {
            let got = erfc(x);
            let rel = ((got - want) / want).abs();
            assert!(rel <= 1e-12, "erfc({x}) = {got}, want {want} (rel {rel:e})");
        }
    }

    #[test]
    fn limits_and_symmetry_point() {
        assert_eq!(erfc(0.0), 1.0);
        assert_eq!(erfc(f64::INFINITY), 0.0);
        assert_eq!(erfc(f64::NEG_INFINITY), 2.0);
        assert!(erfc(f64::NAN).is_nan());
    }

    #[test]
    fn reflection_identity() {
        for i in 0..200 {
            let x = -10.0 + 0.1 * i as f64;
            assert!((erfc(x) + erfc(-x) - 2.0).abs() < 1e-15);
        }
    }
}
