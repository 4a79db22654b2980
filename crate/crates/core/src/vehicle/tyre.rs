//! Simplified magic-formula tyre forces.

use crate::dual::Scalar;
use crate::vehicle::TyreParams;

/// Pure-slip magic formula normalised to unit peak, `D sin(C atan(Bx - E(Bx - atan Bx)))`.
#[inline]
pub fn magic_formula<T: Scalar>(slip: T, tyre: &TyreParams) -> T {
    let bx = slip * tyre.b;
    let arg = bx - (bx - bx.atan()) * tyre.e;
    (arg.atan() * tyre.c).sin() * tyre.d
}

/// Lateral force of one axle (or one wheel) with vertical load `fz` and
/// friction factor `mu`. Odd in `alpha` and bounded by `mu * fz * D`.
#[inline]
pub fn axle_lateral_force<T: Scalar>(alpha: T, fz: f64, mu: f64, tyre: &TyreParams) -> T {
    magic_formula(alpha, tyre) * (mu * fz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FRONT: TyreParams = TyreParams {
        b: 9.0,
        c: 1.45,
        d: 1.0,
        e: 0.3,
    };

    #[test]
    fn zero_slip_gives_zero_force() {
        assert_eq!(axle_lateral_force(0.0, 4000.0, 0.6, &FRONT), 0.0);
    }

    #[test]
    fn peak_from_dense_scan() {
        // E = 0, C > 1: the curve peaks where C atan(B alpha) = pi/2, value mu Fz D.
        let tyre = TyreParams { e: 0.0, ..FRONT };
        let (fz, mu) = (3500.0, 0.8);
        let peak = (0..=15_708)
            .map(|i| axle_lateral_force(i as f64 * 1e-4, fz, mu, &tyre).abs())
            .fold(0.0, f64::max);
        let expected = mu * fz * tyre.d;
        assert!((peak - expected).abs() / expected < 1e-6, "{peak} vs {expected}");
    }

    #[test]
    fn large_slip_asymptote() {
        // sin(C pi/2) is the supremum approached as alpha grows, which is
        // the peak only when C <= 1.
        let tyre = TyreParams {
            b: 10.0,
            c: 0.8,
            d: 1.0,
            e: 0.0,
        };
        let f = axle_lateral_force(1e9, 1000.0, 1.0, &tyre);
        let expected = 1000.0 * (0.8 * std::f64::consts::FRAC_PI_2).sin();
        assert!((f - expected).abs() < 1e-5);
        let scan = (0..=15_708)
            .map(|i| axle_lateral_force(i as f64 * 1e-4, 1000.0, 1.0, &tyre))
            .fold(0.0, f64::max);
        assert!(scan < expected);
    }

    proptest! {
        #[test]
        fn odd_and_bounded(alpha in -1.5f64..1.5, fz in 0.0f64..8000.0, mu in 0.1f64..1.2) {
            let fp = axle_lateral_force(alpha, fz, mu, &FRONT);
            let fm = axle_lateral_force(-alpha, fz, mu, &FRONT);
            prop_assert!((fp + fm).abs() <= 1e-9 * (1.0 + fp.abs()));
            prop_assert!(fp.abs() <= mu * fz * FRONT.d * (1.0 + 1e-12));
        }
    }
}
