//! Gamma function and exact moments of the fractional kernel `(t - τ)^(q-1)`.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("gamma has a pole at {0}")]
    Pole(f64),
    #[error("kernel moment requires 0 <= a <= b <= t, got a={a}, b={b}, t={t}")]
    Domain { a: f64, b: f64, t: f64 },
    #[error("kernel moment order must be 0 or 1, got {0}")]
    Order(u32),
}

const LANCZOS_G: f64 = 7.0;

const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

// FACTORIALS[n] = n!, exact in f64 up to 22!.
const FACTORIALS: [f64; 23] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
    87178291200.0,
    1307674368000.0,
    20922789888000.0,
    355687428096000.0,
    6402373705728000.0,
    121645100408832000.0,
    2432902008176640000.0,
    51090942171709440000.0,
    1124000727777607680000.0,
];

/// Gamma function Γ(x).
///
/// Lanczos approximation (g = 7, 9 coefficients) for x ≥ 0.5, reflection
/// formula below that. Positive integers up to 23 come from a factorial
/// table.
pub fn gamma(x: f64) -> Result<f64, SpecialError> {
    if x <= 0.0 && x == x.floor() {
        return Err(SpecialError::Pole(x));
    }
    if x > 0.0 && x == x.floor() && x <= FACTORIALS.len() as f64 {
        return Ok(FACTORIALS[x as usize - 1]);
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Exact moment `∫_a^b (t - τ)^(q-1) τ^k dτ` for `k ∈ {0, 1}`.
///
/// Any `q > 0` is accepted; the solver only uses the closed forms below.
pub fn kernel_moment(q: f64, t: f64, a: f64, b: f64, k: u32) -> Result<f64, SpecialError> {
    if !(0.0 <= a && a <= b && b <= t) {
        return Err(SpecialError::Domain { a, b, t });
    }
    // Substituting s = t - τ maps [a, b] onto [t - b, t - a].
    let lo = t - b;
    let hi = t - a;
    let m0 = (hi.powf(q) - lo.powf(q)) / q;
    match k {
        0 => Ok(m0),
        1 => {
            let m1s = (hi.powf(q + 1.0) - lo.powf(q + 1.0)) / (q + 1.0);
            // ∫ s^(q-1) (t - s) ds; clamp tiny negative rounding residue.
            Ok((t * m0 - m1s).max(0.0))
        }
        other => Err(SpecialError::Order(other)),
    }
}
