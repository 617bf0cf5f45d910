//! The interval heat kernel `Θ(r, t) = Σ_n p(r + 2n, t)` (method of images),
//! its spatial derivative, closed-form time integrals of the wall flux, and
//! the boundary forcing terms built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::quadrature::adaptive_with_breaks;
use crate::special::{
    erfc, first_passage_moments, heat_kernel, heat_kernel_moments, Moments,
};

/// Truncation and quadrature controls for kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEvalConfig {
    /// Image sums stop once the next term is below this magnitude.
    pub abs_tol: f64,
    /// Cap on `|n|` (counted from the dominant image).
    pub max_images: usize,
    /// Absolute tolerance for integrals over the initial datum.
    pub quad_tol: f64,
    /// Subdivision budget of the adaptive quadrature.
    pub max_intervals: usize,
}

impl Default for ThetaEvalConfig {
    fn default() -> Self {
        ThetaEvalConfig {
            abs_tol: 1e-12,
            max_images: 64,
            quad_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

impl ThetaEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || self.max_images < 1 || !(self.quad_tol > 0.0) {
            return Err(Error::config(
                "ThetaEvalConfig requires abs_tol > 0, quad_tol > 0 and max_images >= 1",
            ));
        }
        Ok(())
    }
}

/// Which wall a boundary quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// Sums `term(x + 2n)` over all images `n`, walking outward from the dominant
/// one. `spread` is the length scale beyond which terms decay monotonically.
fn image_sum<T, F>(x: f64, spread: f64, cfg: &ThetaEvalConfig, mut term: F) -> Result<T>
where
    T: Copy + std::ops::AddAssign,
    F: FnMut(f64) -> (T, f64),
{
    let center = (-x / 2.0).round();
    let (mut acc, _) = term(x + 2.0 * center);
    for dir in [1.0, -1.0] {
        let mut k = 1usize;
        loop {
            let y = x + 2.0 * (center + dir * k as f64);
            let (v, mag) = term(y);
            if mag < cfg.abs_tol && y.abs() >= spread {
                break;
            }
            acc += v;
            k += 1;
            if k > cfg.max_images {
                return Err(Error::ToleranceNotMet {
                    what: format!("image sum at x = {x}"),
                    achieved: mag,
                });
            }
        }
    }
    Ok(acc)
}

/// `Θ(r, t)`.
pub fn theta(r: f64, t: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    check_time(t)?;
    image_sum(r, t.sqrt(), cfg, |y| {
        let v = heat_kernel(y, t);
        (v, v)
    })
}

/// `∂Θ/∂r (r, t)`.
pub fn theta_dr(r: f64, t: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    check_time(t)?;
    image_sum(r, t.sqrt(), cfg, |y| {
        let v = -y / t * heat_kernel(y, t);
        (v, v.abs())
    })
}

/// `(1/2) ∫_0^t ∂Θ/∂r (x, s) ds` in closed form: `-(1/2) Σ_n sgn(x+2n) erfc(|x+2n| / √(2t))`.
pub fn flux_primitive(x: f64, t: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    check_time(t)?;
    let nearest_even = 2.0 * (x / 2.0).round();
    if x == nearest_even {
        return Err(Error::domain(format!(
            "flux_primitive is singular at the even integer {x}; take the one-sided limit at the field level"
        )));
    }
    let s = (2.0 * t).sqrt();
    image_sum(x, s, cfg, |y| {
        let v = -0.5 * y.signum() * erfc(y.abs() / s);
        (v, v.abs())
    })
}

/// `Σ_n sgn(x+2n) erfc(|x+2n| / √(2t))` for `x` in `(0, 1]`: the mass
/// that the Dirichlet problem started from a unit point mass at `x` has
/// lost through the left wall by time `t`.
pub(crate) fn exit_kernel(x: f64, t: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    Ok(-2.0 * flux_primitive(x, t, cfg)?)
}

/// Abel transform `∫_0^x exit_kernel(r, s) (x - s)^{-1/2} ds`, closed form.
pub(crate) fn abel_exit_kernel(r: f64, x: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    check_time(x)?;
    let sx = x.sqrt();
    let s2x = (2.0 * x).sqrt();
    let two_pi_sqrt = (2.0 * std::f64::consts::PI).sqrt();
    image_sum(r, s2x, cfg, |y| {
        let a = y.abs();
        let v = y.signum()
            * (2.0 * sx * (-a * a / (2.0 * x)).exp() - two_pi_sqrt * a * erfc(a / s2x));
        (v, v.abs())
    })
}

/// Time moments of `u -> Θ(r, u)` on `[0, tau]`.
pub fn theta_moments(r: f64, tau: f64, cfg: &ThetaEvalConfig) -> Result<Moments> {
    if tau <= 0.0 {
        return Ok(Moments::ZERO);
    }
    image_sum(r, tau.sqrt(), cfg, |y| {
        let m = heat_kernel_moments(y, tau);
        (m, m.zeroth)
    })
}

/// Time moments of `u -> -∂Θ/∂r (r, u)` on `[0, tau]`; requires `r` not an even integer.
pub fn neg_theta_dr_moments(r: f64, tau: f64, cfg: &ThetaEvalConfig) -> Result<Moments> {
    if tau <= 0.0 {
        return Ok(Moments::ZERO);
    }
    image_sum(r, tau.sqrt(), cfg, |y| {
        if y == 0.0 {
            return (Moments::ZERO, 0.0);
        }
        let m = first_passage_moments(y.abs(), tau).scale(y.signum());
        (m, m.zeroth.abs())
    })
}

/// Quadrature breakpoints for integrals of the datum against kernels with
/// layers of width `√t` at the given `peaks`.
pub(crate) fn layered_breakpoints(u0: &InitialData, peaks: &[f64], t: f64) -> Vec<f64> {
    let w = 8.0 * t.sqrt();
    let mut pts = vec![0.0, 1.0];
    pts.extend(u0.breakpoints());
    for &p in peaks {
        for q in [p - w, p, p + w] {
            if q > 0.0 && q < 1.0 {
                pts.push(q);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

/// Integrates `u0(r') k(r')` over `(0, 1)` with the adaptive rule.
pub(crate) fn integrate_against_datum<K>(
    u0: &InitialData,
    breaks: &[f64],
    cfg: &ThetaEvalConfig,
    what: &str,
    mut kernel: K,
) -> Result<f64>
where
    K: FnMut(f64) -> Result<f64>,
{
    let mut failure = None;
    let res = adaptive_with_breaks(
        |rp| {
            let v = u0.u0(rp);
            if v == 0.0 {
                return 0.0;
            }
            match kernel(rp) {
                Ok(k) => v * k,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        breaks,
        cfg.quad_tol,
        cfg.max_intervals,
    )
    .map_err(|e| match e {
        Error::ToleranceNotMet { achieved, .. } => Error::ToleranceNotMet {
            what: what.to_string(),
            achieved,
        },
        other => other,
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res.value)
}

/// Wall forcing `f^±(t)`: the mass the initial datum alone (zero wall values)
/// pushes through the chosen wall by time `t`.
pub fn f_boundary(side: Side, u0: &InitialData, t: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    check_time(t)?;
    let wall = match side {
        Side::Minus => 0.0,
        Side::Plus => 1.0,
    };
    let breaks = layered_breakpoints(u0, &[wall], t);
    integrate_against_datum(u0, &breaks, cfg, "f_boundary quadrature", |rp| {
        let x = match side {
            Side::Minus => rp,
            Side::Plus => 1.0 - rp,
        };
        exit_kernel(x, t, cfg)
    })
}

/// `∫_0^1 g(r') [Θ(r - r', t) - Θ(r + r', t)] dr'`: the zero-wall heat flow of `g`.
pub(crate) fn dirichlet_propagate<G>(
    g: G,
    u0: &InitialData,
    r: f64,
    t: f64,
    cfg: &ThetaEvalConfig,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    check_time(t)?;
    let breaks = layered_breakpoints(u0, &[0.0, r, 1.0], t);
    let mut failure = None;
    let res = adaptive_with_breaks(
        |rp| {
            let v = g(rp);
            if v == 0.0 {
                return 0.0;
            }
            // images of r - r' and r + r' share the same lattice shift
            let k = image_sum(r - rp, t.sqrt(), cfg, |y| {
                let v = heat_kernel(y, t) - heat_kernel(y + 2.0 * rp, t);
                (v, heat_kernel(y, t).max(heat_kernel(y + 2.0 * rp, t)))
            });
            match k {
                Ok(k) => v * k,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        &breaks,
        cfg.quad_tol,
        cfg.max_intervals,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::Profile;
    use crate::quadrature::adaptive_gauss_kronrod;
    use proptest::prelude::*;

    fn cfg() -> ThetaEvalConfig {
        ThetaEvalConfig::default()
    }

    // Direct summation over |n| <= 10, independent of the adaptive walk.
    fn theta_oracle(r: f64, t: f64) -> f64 {
        (-10..=10)
            .map(|n| heat_kernel(r + 2.0 * n as f64, t))
            .sum()
    }

    #[test]
    fn theta_at_origin_unit_time() {
        let want: f64 = (-10..=10)
            .map(|n: i32| (-2.0 * (n * n) as f64).exp())
            .sum::<f64>()
            / (2.0 * std::f64::consts::PI).sqrt();
        let got = theta(0.0, 1.0, &cfg()).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.50719).abs() < 1e-5);
    }

    #[test]
    fn theta_small_time_single_term_dominates() {
        let t = 0.001;
        let single = heat_kernel(0.5, t);
        let three = heat_kernel(0.5, t) + heat_kernel(0.5 - 2.0, t) + heat_kernel(2.5, t);
        let got = theta(0.5, t, &cfg()).unwrap();
        assert!((got - three).abs() < 1e-12);
        assert!((got - single).abs() / single < 1e-12);
    }

    #[test]
    fn theta_rejects_nonpositive_time() {
        assert!(matches!(theta(0.1, 0.0, &cfg()), Err(Error::Domain(_))));
        assert!(matches!(theta_dr(0.1, -1.0, &cfg()), Err(Error::Domain(_))));
    }

    #[test]
    fn tight_image_cap_reports_tolerance() {
        let c = ThetaEvalConfig {
            max_images: 1,
            ..cfg()
        };
        assert!(matches!(
            theta(0.0, 50.0, &c),
            Err(Error::ToleranceNotMet { .. })
        ));
    }

    #[test]
    fn theta_dr_is_odd_and_matches_differences() {
        for &t in &[0.01, 0.3, 2.0] {
            assert!(theta_dr(0.0, t, &cfg()).unwrap().abs() < 1e-15);
        }
        let h = 1e-5;
        let (r, t) = (0.3, 0.5);
        let fd = (theta(r + h, t, &cfg()).unwrap() - theta(r - h, t, &cfg()).unwrap()) / (2.0 * h);
        assert!((theta_dr(r, t, &cfg()).unwrap() - fd).abs() < 1e-8);

        let (r, t) = (0.5, 0.01);
        let h = 1e-6;
        let fd = (theta_oracle(r + h, t) - theta_oracle(r - h, t)) / (2.0 * h);
        let got = theta_dr(r, t, &cfg()).unwrap();
        let lead = -0.5 / 0.01 * heat_kernel(0.5, 0.01);
        assert!(((got - fd) / fd).abs() < 1e-6);
        assert!(((got - lead) / lead).abs() < 1e-6);
    }

    #[test]
    fn theta_solves_heat_equation() {
        let h = 1e-4;
        for &(r, t) in &[(0.2, 0.05), (0.5, 0.3), (0.9, 1.0), (0.7, 0.02)] {
            let th = |r, t| theta(r, t, &cfg()).unwrap();
            let dt = (th(r, t + h) - th(r, t - h)) / (2.0 * h);
            let drr = (th(r + h, t) - 2.0 * th(r, t) + th(r - h, t)) / (h * h);
            assert!((dt - 0.5 * drr).abs() < 1e-4, "({r},{t}): {dt} vs {}", 0.5 * drr);
        }
    }

    #[test]
    fn flux_primitive_matches_quadrature_on_grid() {
        let xs = [0.1, 0.3, 0.5, 0.8, 1.4];
        let ts = [0.01, 0.1, 0.5, 1.0, 2.0];
        for &x in &xs {
            for &t in &ts {
                let oracle = adaptive_gauss_kronrod(
                    |s| {
                        0.5 * (-10..=10)
                            .map(|n| {
                                let y = x + 2.0 * n as f64;
                                -y / s * heat_kernel(y, s)
                            })
                            .sum::<f64>()
                    },
                    0.0,
                    t,
                    1e-13,
                    2000,
                )
                .unwrap()
                .value;
                let got = flux_primitive(x, t, &cfg()).unwrap();
                assert!((got - oracle).abs() < 1e-8, "x={x} t={t}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn flux_primitive_single_image_at_half() {
        let s2 = 2f64.sqrt();
        let single = -0.5 * erfc(0.5 / s2);
        assert!((single + 0.30854).abs() < 1e-5);
        let all: f64 = (-10..=10)
            .map(|n| {
                let y = 0.5 + 2.0 * n as f64;
                -0.5 * y.signum() * erfc(y.abs() / s2)
            })
            .sum();
        let got = flux_primitive(0.5, 1.0, &cfg()).unwrap();
        assert!((got - all).abs() < 1e-12);
        // images matter at t = 1
        assert!((got - single).abs() > 1e-3);
        assert!(flux_primitive(0.3, 1e-4, &cfg()).unwrap().abs() < 1e-12);
        assert!(matches!(
            flux_primitive(2.0, 1.0, &cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn f_boundary_vanishes_for_zero_datum() {
        let d = InitialData::new(Profile::Constant { c: 0.0 }, 0.3, 0.4).unwrap();
        for &t in &[1e-4, 0.1, 1.0] {
            assert_eq!(f_boundary(Side::Minus, &d, t, &cfg()).unwrap(), 0.0);
            assert_eq!(f_boundary(Side::Plus, &d, t, &cfg()).unwrap(), 0.0);
        }
    }

    #[test]
    fn f_boundary_matches_nested_limit_quadrature() {
        // f^-(t) = lim_{l->0} lim_{t0->0} ∫_{t0}^t (1/2) ∫ u0(r') [Θ_r(l-r', s) - Θ_r(l+r', s)] dr' ds
        let d = InitialData::reference();
        let t = 0.5;
        let l = 1e-3;
        let t0 = 1e-6;
        let th_r = |x: f64, s: f64| -> f64 {
            (-10..=10)
                .map(|n| {
                    let y = x + 2.0 * n as f64;
                    -y / s * heat_kernel(y, s)
                })
                .sum()
        };
        let inner = |s: f64| {
            adaptive_gauss_kronrod(
                |rp| 0.5 * rp * (th_r(l - rp, s) - th_r(l + rp, s)),
                0.0,
                1.0,
                1e-11,
                4000,
            )
            .unwrap()
            .value
        };
        let mut pts = vec![t0];
        let mut s = 1e-5;
        while s < t {
            pts.push(s);
            s *= 4.0;
        }
        pts.push(t);
        let oracle = crate::quadrature::adaptive_with_breaks(inner, &pts, 1e-9, 4000)
            .unwrap()
            .value;
        let got = f_boundary(Side::Minus, &d, t, &cfg()).unwrap();
        assert!((got - oracle).abs() < 1e-4, "{got} vs {oracle}");
    }

    #[test]
    fn abel_exit_kernel_matches_quadrature() {
        for &(r, x) in &[(0.2f64, 0.5f64), (0.7, 1.0), (0.05, 0.01)] {
            let oracle = adaptive_gauss_kronrod(
                |w| 2.0 * exit_kernel(r, x - w * w, &cfg()).unwrap_or(0.0),
                0.0,
                x.sqrt(),
                1e-12,
                4000,
            )
            .unwrap()
            .value;
            let got = abel_exit_kernel(r, x, &cfg()).unwrap();
            assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
        }
    }

    #[test]
    fn moments_sum_images() {
        let tau = 0.7;
        let m = theta_moments(1.0, tau, &cfg()).unwrap();
        let q = adaptive_gauss_kronrod(|u| theta_oracle(1.0, u), 0.0, tau, 1e-14, 500).unwrap();
        assert!((m.zeroth - q.value).abs() < 1e-11);
        let m = neg_theta_dr_moments(0.25, tau, &cfg()).unwrap();
        let q = adaptive_gauss_kronrod(
            |u| -theta_dr(0.25, u, &cfg()).unwrap(),
            0.0,
            tau,
            1e-13,
            2000,
        )
        .unwrap();
        assert!((m.zeroth - q.value).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn theta_symmetric_and_periodic(r in -1.0f64..1.0, t in 0.001f64..3.0) {
            let c = cfg();
            let a = theta(r, t, &c).unwrap();
            prop_assert!((a - theta(-r, t, &c).unwrap()).abs() <= 2.0 * c.abs_tol);
            prop_assert!((a - theta(r + 2.0, t, &c).unwrap()).abs() <= 2.0 * c.abs_tol);
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn flux_primitive_antisymmetric(x in 0.01f64..1.99, t in 0.001f64..3.0) {
            let c = cfg();
            let a = flux_primitive(x, t, &c).unwrap();
            prop_assert!((a + flux_primitive(-x, t, &c).unwrap()).abs() < 1e-12);
        }
    }
}
