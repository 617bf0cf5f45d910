//! Scalar special functions used by the kernels: Gaussian and first-passage
//! densities, their time moments, and Dawson's integral.

use std::f64::consts::{PI, SQRT_2};

/// `sqrt(2/pi)`, the constant multiplying Abel-transformed quantities.
pub const ALPHA: f64 = 0.797_884_560_802_865_4;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Free heat kernel `p(x, t) = (2 pi t)^{-1/2} exp(-x^2 / 2t)`.
#[inline]
pub fn heat_kernel(x: f64, t: f64) -> f64 {
    FRAC_1_SQRT_2PI / t.sqrt() * (-x * x / (2.0 * t)).exp()
}

/// First-passage density of Brownian motion to level `a > 0`: `(a / t) p(a, t)`.
#[inline]
pub fn first_passage_density(a: f64, t: f64) -> f64 {
    a / t * heat_kernel(a, t)
}

/// Zeroth and first time moments `(int_0^tau k, int_0^tau u k(u) du)` of a kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub zeroth: f64,
    pub first: f64,
}

impl Moments {
    pub const ZERO: Moments = Moments {
        zeroth: 0.0,
        first: 0.0,
    };

    #[inline]
    pub fn scale(self, c: f64) -> Moments {
        Moments {
            zeroth: c * self.zeroth,
            first: c * self.first,
        }
    }
}

impl std::ops::Add for Moments {
    type Output = Moments;
    fn add(self, o: Moments) -> Moments {
        Moments {
            zeroth: self.zeroth + o.zeroth,
            first: self.first + o.first,
        }
    }
}

impl std::ops::AddAssign for Moments {
    fn add_assign(&mut self, o: Moments) {
        self.zeroth += o.zeroth;
        self.first += o.first;
    }
}

impl std::ops::Sub for Moments {
    type Output = Moments;
    fn sub(self, o: Moments) -> Moments {
        Moments {
            zeroth: self.zeroth - o.zeroth,
            first: self.first - o.first,
        }
    }
}

/// Moments of `u -> p(a, u)` on `[0, tau]`, `a >= 0`.
pub fn heat_kernel_moments(a: f64, tau: f64) -> Moments {
    if tau <= 0.0 {
        return Moments::ZERO;
    }
    let a = a.abs();
    let g = (-a * a / (2.0 * tau)).exp();
    let zeroth = (2.0 * tau / PI).sqrt() * g - a * erfc(a / (2.0 * tau).sqrt());
    let first = (2.0 / 3.0) * (FRAC_1_SQRT_2PI * tau.powf(1.5) * g - 0.5 * a * a * zeroth);
    Moments { zeroth, first }
}

/// Moments of the first-passage density `u -> (a/u) p(a, u)` on `[0, tau]`, `a > 0`.
pub fn first_passage_moments(a: f64, tau: f64) -> Moments {
    if tau <= 0.0 {
        return Moments::ZERO;
    }
    let a = a.abs();
    Moments {
        zeroth: erfc(a / (2.0 * tau).sqrt()),
        first: a * heat_kernel_moments(a, tau).zeroth,
    }
}

/// Moments of `u -> u^{-1/2}` on `[0, tau]`.
pub fn inverse_sqrt_moments(tau: f64) -> Moments {
    if tau <= 0.0 {
        return Moments::ZERO;
    }
    Moments {
        zeroth: 2.0 * tau.sqrt(),
        first: (2.0 / 3.0) * tau.powf(1.5),
    }
}

/// Moments of the relaxation kernel `u -> rate * exp(-rate u)` on `[0, tau]`.
pub fn relaxation_moments(rate: f64, tau: f64) -> Moments {
    if tau <= 0.0 {
        return Moments::ZERO;
    }
    let x = rate * tau;
    let zeroth = -(-x).exp_m1();
    // int_0^tau u rate e^{-rate u} du = (1 - (1 + x) e^{-x}) / rate
    let first = if x < 1e-3 {
        // x^2/2 - x^3/3 + x^4/8 - ...
        tau * x * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
    } else {
        (1.0 - (1.0 + x) * (-x).exp()) / rate
    };
    Moments { zeroth, first }
}

const DAWSON_H: f64 = 0.2;
const DAWSON_TERMS: usize = 20;

/// Dawson's integral `D(x) = exp(-x^2) int_0^x exp(y^2) dy`.
///
/// Power series near the origin, Rybicki's sampling formula elsewhere.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.2 {
        return x - dawson_series_tail(x);
    }
    let n0 = 2.0 * (0.5 * ax / DAWSON_H).round();
    let xp = ax - n0 * DAWSON_H;
    let mut e1 = (2.0 * xp * DAWSON_H).exp();
    let e2 = e1 * e1;
    let mut d1 = n0 + 1.0;
    let mut d2 = d1 - 2.0;
    let mut sum = 0.0;
    for i in 1..=DAWSON_TERMS {
        let c = (-((2 * i - 1) as f64 * DAWSON_H).powi(2)).exp();
        sum += c * (e1 / d1 + 1.0 / (d2 * e1));
        d1 += 2.0;
        d2 -= 2.0;
        e1 *= e2;
    }
    FRAC_1_SQRT_PI * (-xp * xp).exp() * sum * x.signum()
}

/// `x - D(x)`, accurate for small `x`.
pub fn dawson_residual(x: f64) -> f64 {
    if x.abs() < 0.2 {
        dawson_series_tail(x)
    } else {
        x - dawson(x)
    }
}

/// `1/x - 2 D(x)`, accurate for large `x`.
pub fn dawson_reciprocal_gap(x: f64) -> f64 {
    if x > 12.0 {
        // 2D(x) ~ (1/x) sum_k (2k-1)!! / (2x^2)^k
        let y = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..40 {
            term *= (2 * k - 1) as f64 * y;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        -sum / x
    } else {
        1.0 / x - 2.0 * dawson(x)
    }
}

// sum_{k>=1} (-1)^{k+1} 2^k x^{2k+1} / (2k+1)!!, i.e. x - D(x).
fn dawson_series_tail(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = 0.0;
    for k in 1..30 {
        term *= -2.0 * x2 / (2 * k + 1) as f64;
        sum -= term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `sqrt(2)` re-exported for kernel code.
pub const SQRT2: f64 = SQRT_2;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_gauss_kronrod;

    fn dawson_oracle(x: f64) -> f64 {
        let r = adaptive_gauss_kronrod(|y: f64| (y * y - x * x).exp(), 0.0, x, 1e-15, 200)
            .unwrap();
        r.value
    }

    #[test]
    fn dawson_matches_quadrature() {
        for &x in &[1e-4, 0.05, 0.19, 0.21, 0.5, 0.9241, 1.7, 3.0, 6.5, 11.0, 15.0, 30.0] {
            let got = dawson(x);
            let want = dawson_oracle(x);
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "x={x}: {got} vs {want}"
            );
            assert_eq!(dawson(-x), -got);
        }
    }

    #[test]
    fn dawson_tails_are_consistent() {
        for &x in &[0.01, 0.1, 0.3, 1.0] {
            assert!((dawson_residual(x) - (x - dawson_oracle(x))).abs() < 1e-15);
        }
        for &x in &[2.0, 8.0, 11.9, 12.1, 20.0] {
            let want = 1.0 / x - 2.0 * dawson_oracle(x);
            let got = dawson_reciprocal_gap(x);
            assert!(((got - want) / want).abs() < 1e-9, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn moments_match_quadrature() {
        for &(a, tau) in &[(0.0, 0.3), (0.4, 0.05), (1.0, 1.0), (2.0, 0.7), (0.05, 1e-3)] {
            let m = heat_kernel_moments(a, tau);
            let z = adaptive_gauss_kronrod(|u| heat_kernel(a, u), 0.0, tau, 1e-14, 200).unwrap();
            let f =
                adaptive_gauss_kronrod(|u| u * heat_kernel(a, u), 0.0, tau, 1e-14, 200).unwrap();
            assert!((m.zeroth - z.value).abs() < 1e-12, "{a} {tau}");
            assert!((m.first - f.value).abs() < 1e-12, "{a} {tau}");
            if a > 0.0 {
                let q = first_passage_moments(a, tau);
                let z = adaptive_gauss_kronrod(|u| first_passage_density(a, u), 0.0, tau, 1e-14, 200)
                    .unwrap();
                assert!((q.zeroth - z.value).abs() < 1e-12);
            }
        }
        let r = relaxation_moments(3.0, 0.2);
        let f = adaptive_gauss_kronrod(|u| u * 3.0 * (-3.0 * u).exp(), 0.0, 0.2, 1e-15, 100)
            .unwrap();
        assert!((r.first - f.value).abs() < 1e-14);
        let r = relaxation_moments(3.0, 1e-5);
        let f = adaptive_gauss_kronrod(|u| u * 3.0 * (-3.0 * u).exp(), 0.0, 1e-5, 1e-20, 100)
            .unwrap();
        assert!((r.first - f.value).abs() < 1e-18);
    }
}
