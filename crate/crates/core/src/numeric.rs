//! Small floating-point helpers shared by the norm and experiment modules.

/// `2^x`, factored as an exact integer power of two times `exp2` of the
/// fractional part.
///
/// The factorization buys a structural guarantee the bare libm call does not
/// make: whenever `x` and `x + k` (integer `k`) are both exactly
/// representable — which holds for the dyadic exponents the norm operations
/// feed in — the two calls share the same fractional part, so
/// `pow2(x + k) == pow2(x) * 2^k` bit for bit. The exact exponent-shift
/// identities (`T^t` versus a Sobolev index shift, derivative action versus
/// a Morrey index shift) rest on this.
pub(crate) fn pow2(x: f64) -> f64 {
    debug_assert!(x.is_finite(), "dyadic exponent must be finite");
    let k = x.floor();
    let frac = x - k;
    frac.exp2() * power_of_two(k as i32)
}

/// Exact `2^k` for moderate integer `k` (every multiplication by two is
/// exact in binary floating point until overflow or underflow).
pub(crate) fn power_of_two(k: i32) -> f64 {
    2.0f64.powi(k)
}

/// `v^e` with the ubiquitous exponents special-cased, so the exactness
/// claims of the norm identities do not lean on libm corner cases.
pub(crate) fn ppow(v: f64, e: f64) -> f64 {
    if e == 1.0 {
        v
    } else if e == 2.0 {
        v * v
    } else if e == 0.5 {
        v.sqrt()
    } else {
        v.powf(e)
    }
}

/// `v^(1/p)`.
pub(crate) fn proot(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v.sqrt()
    } else {
        v.powf(p.recip())
    }
}
