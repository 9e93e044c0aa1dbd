//! Hurwitz zeta `ζ(s, q) = Σ_{k≥0} (q + k)^(−s)` and its derivative in `s`,
//! by Euler–Maclaurin summation. Valid for `s > 1`, `q ≥ 1`.

/// B_2j / (2j)! for j = 1..=10.
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
    -174611.0 / 330.0 / 2432902008176640000.0,
];

/// Direct terms summed before switching to the asymptotic expansion.
fn direct_terms(q: f64) -> usize {
    if q >= 12.0 {
        0
    } else {
        (12.0 - q).ceil() as usize
    }
}

pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    hurwitz_zeta_and_derivative(s, q).0
}

/// `(ζ(s, q), ∂ζ/∂s (s, q))`.
pub fn hurwitz_zeta_and_derivative(s: f64, q: f64) -> (f64, f64) {
    debug_assert!(s > 1.0 && q > 0.0);
    let n = direct_terms(q);
    let (mut z, mut dz) = (0.0, 0.0);
    for k in 0..n {
        let x = q + k as f64;
        let t = x.powf(-s);
        z += t;
        dz -= x.ln() * t;
    }
    let a = q + n as f64;
    let la = a.ln();
    let a_1s = a.powf(1.0 - s);
    let a_s = a_1s / a;
    // integral tail and half-term
    z += a_1s / (s - 1.0) + 0.5 * a_s;
    dz += -la * a_1s / (s - 1.0) - a_1s / ((s - 1.0) * (s - 1.0)) - 0.5 * la * a_s;
    // Bernoulli corrections: B_2j/(2j)! · (s)_(2j−1) · a^(−s−2j+1)
    let mut rising = s; // (s)(s+1)...(s+2j-2)
    let mut rising_d = 1.0; // derivative of `rising` in s
    let mut power = a_s / a; // a^(−s−1)
    let inv_a2 = 1.0 / (a * a);
    for (j, &b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let term = b * rising * power;
        z += term;
        dz += b * (rising_d * power - la * rising * power);
        if term.abs() < 1e-17 * z.abs() {
            break;
        }
        let (p1, p2) = (s + (2 * j + 1) as f64, s + (2 * j + 2) as f64);
        rising_d = rising_d * p1 * p2 + rising * (p1 + p2);
        rising *= p1 * p2;
        power *= inv_a2;
    }
    (z, dz)
}
