//! Fourth-order commutator-free Magnus stepping for Hamiltonians that are
//! affine in the transverse field, `H(t) = A + g(t) B`.
//!
//! One step of size `h` is `exp(-i h/2 H(g_2)) exp(-i h/2 H(g_1))` with
//! effective fields built from the two Gauss nodes.

use crate::protocols::RampProtocol;
use crate::scalar::Real;

/// Magnus weights `(3 ∓ 2√3)/12` and Gauss nodes `1/2 ∓ √3/6`.
pub(crate) struct Cf4<T> {
    c1: T,
    c2: T,
    a1: T,
    a2: T,
}

impl<T: Real> Cf4<T> {
    pub(crate) fn new() -> Self {
        let s3 = T::lit(3.0).sqrt();
        Self {
            c1: T::lit(0.5) - s3 / T::lit(6.0),
            c2: T::lit(0.5) + s3 / T::lit(6.0),
            a1: (T::lit(3.0) - T::lit(2.0) * s3) / T::lit(12.0),
            a2: (T::lit(3.0) + T::lit(2.0) * s3) / T::lit(12.0),
        }
    }

    /// Effective fields `(g_first, g_second)` of the step `[t, t + h]`; the
    /// first factor is applied first, each for a time `h/2`.
    pub(crate) fn fields(&self, protocol: &RampProtocol<T>, t: T, h: T) -> (T, T) {
        let two = T::lit(2.0);
        let g1 = protocol.value_unchecked(t + self.c1 * h);
        let g2 = protocol.value_unchecked(t + self.c2 * h);
        (two * (self.a2 * g1 + self.a1 * g2), two * (self.a1 * g1 + self.a2 * g2))
    }
}
