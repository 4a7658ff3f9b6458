//! Analytic data families for null-line profiles and their time integrals.
//!
//! The time integral of a profile `f` is `T^{-1} f (x) = -∫_x^∞ f`, applied
//! `n` times for `T^{-n}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::fields::{NullProfile, Orientation};
use crate::numerics::negative_tail_integral;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataFamily {
    /// `A exp(-((x - c)/w)^2)`.
    GaussianBump {
        center: f64,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `A exp(-a x)`.
    ExponentialTail {
        rate: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `(1 + x - x0)^(-s)` for `x >= x0`, continued by `1` below `x0`.
    PolynomialTail { exponent: f64, onset: f64 },
    /// `A exp(-i omega x)`.
    ExponentialMode { omega: Complex64, amplitude: Complex64 },
    Zero,
    /// `T^{-order}` of a base family without a closed-form reduction.
    TimeIntegral { base: Box<DataFamily>, order: u32 },
}

impl DataFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            DataFamily::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                if !(center.is_finite() && amplitude.is_finite()) {
                    return Err(Error::InvalidParameter("bump parameters must be finite".into()));
                }
            }
            DataFamily::ExponentialTail { rate, amplitude } => {
                if !(rate.is_finite() && *rate > 0.0 && amplitude.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "exponential tail needs a positive finite rate, got {rate}"
                    )));
                }
            }
            DataFamily::PolynomialTail { exponent, onset } => {
                if !(exponent.is_finite() && *exponent > 0.5 && onset.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "polynomial tail exponent must exceed 1/2, got {exponent}"
                    )));
                }
            }
            DataFamily::ExponentialMode { omega, amplitude } => {
                let finite = [omega.re, omega.im, amplitude.re, amplitude.im]
                    .iter()
                    .all(|x| x.is_finite());
                if !finite {
                    return Err(Error::InvalidParameter("mode parameters must be finite".into()));
                }
            }
            DataFamily::Zero => {}
            DataFamily::TimeIntegral { base, .. } => base.validate()?,
        }
        Ok(())
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        match self {
            DataFamily::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let z = (x - center) / width;
                Complex64::new(amplitude * (-z * z).exp(), 0.0)
            }
            DataFamily::ExponentialTail { rate, amplitude } => {
                Complex64::new(amplitude * (-rate * x).exp(), 0.0)
            }
            DataFamily::PolynomialTail { exponent, onset } => {
                Complex64::new(polynomial_tail_integral(*exponent, *onset, 0, x), 0.0)
            }
            DataFamily::ExponentialMode { omega, amplitude } => {
                amplitude * (-Complex64::i() * omega * x).exp()
            }
            DataFamily::Zero => Complex64::new(0.0, 0.0),
            DataFamily::TimeIntegral { base, order } => match base.as_ref() {
                DataFamily::GaussianBump {
                    center,
                    width,
                    amplitude,
                } => Complex64::new(
                    gaussian_tail_integral(*center, *width, *amplitude, *order, x),
                    0.0,
                ),
                DataFamily::PolynomialTail { exponent, onset } => {
                    Complex64::new(polynomial_tail_integral(*exponent, *onset, *order, x), 0.0)
                }
                other => match other.time_integral(*order) {
                    Ok(reduced) if !matches!(reduced, DataFamily::TimeIntegral { .. }) => {
                        reduced.evaluate(x)
                    }
                    _ => Complex64::new(f64::NAN, f64::NAN),
                },
            },
        }
    }

    /// `T^{-n}` of this family, in closed form where one exists.
    pub fn time_integral(&self, n: u32) -> Result<DataFamily> {
        if n == 0 {
            return Ok(self.clone());
        }
        match self {
            DataFamily::Zero => Ok(DataFamily::Zero),
            DataFamily::ExponentialTail { rate, amplitude } => Ok(DataFamily::ExponentialTail {
                rate: *rate,
                amplitude: amplitude * (-1.0 / rate).powi(n as i32),
            }),
            DataFamily::ExponentialMode { omega, amplitude } => {
                if omega.im >= 0.0 {
                    return Err(Error::Unsupported(format!(
                        "time integral of exp(-i omega x) needs Im omega < 0, got {omega}"
                    )));
                }
                let factor = (-Complex64::i() * omega).powi(-(n as i32));
                Ok(DataFamily::ExponentialMode {
                    omega: *omega,
                    amplitude: amplitude * factor,
                })
            }
            DataFamily::PolynomialTail { exponent, .. } => {
                if *exponent <= n as f64 {
                    return Err(Error::Unsupported(format!(
                        "T^-{n} of a polynomial tail needs exponent > {n}, got {exponent}"
                    )));
                }
                Ok(DataFamily::TimeIntegral {
                    base: Box::new(self.clone()),
                    order: n,
                })
            }
            DataFamily::GaussianBump { .. } => {
                if n > 8 {
                    return Err(Error::Unsupported(format!(
                        "Gaussian time integrals limited to order 8, got {n}"
                    )));
                }
                Ok(DataFamily::TimeIntegral {
                    base: Box::new(self.clone()),
                    order: n,
                })
            }
            DataFamily::TimeIntegral { base, order } => base.time_integral(order + n),
        }
    }

    /// Samples of the family on `n + 1` uniform points of `[start, end]`.
    pub fn profile(
        &self,
        orientation: Orientation,
        fixed_coordinate: f64,
        start: f64,
        end: f64,
        n: usize,
    ) -> Result<NullProfile> {
        NullProfile::sample(orientation, fixed_coordinate, start, end, n, |x| {
            self.evaluate(x)
        })
    }
}

/// `T^{-n}` of sampled data, treating the profile as vanishing beyond its end.
pub fn time_integral_profile(profile: &NullProfile, n: u32) -> NullProfile {
    let h = profile.step();
    let mut samples = profile.samples.clone();
    for _ in 0..n {
        samples = negative_tail_integral(&samples, h);
    }
    NullProfile {
        samples,
        ..profile.clone()
    }
}

/// Repeated integral of the complementary error function, `i^n erfc(z)`,
/// with `i^{-1} erfc(z) = 2 exp(-z^2)/sqrt(pi)`.
pub fn iterated_erfc(n: i32, z: f64) -> f64 {
    let mut prev = 2.0 / PI.sqrt() * (-z * z).exp();
    if n == -1 {
        return prev;
    }
    let mut cur = erfc(z);
    for k in 1..=n {
        let next = -z / k as f64 * cur + prev / (2.0 * k as f64);
        prev = cur;
        cur = next;
    }
    cur
}

fn gaussian_tail_integral(center: f64, width: f64, amplitude: f64, n: u32, x: f64) -> f64 {
    if n == 0 {
        let z = (x - center) / width;
        return amplitude * (-z * z).exp();
    }
    let z = (x - center) / width;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * amplitude * width.powi(n as i32) * 0.5 * PI.sqrt() * iterated_erfc(n as i32 - 1, z)
}

/// `T^{-n}` of the polynomial tail, `n = 0` giving the tail itself.
fn polynomial_tail_integral(s: f64, x0: f64, n: u32, x: f64) -> f64 {
    let at_or_above = |k: u32, y: f64| -> f64 {
        let mut denom = 1.0;
        for q in 1..=k {
            denom *= s - q as f64;
        }
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (1.0 + y).powf(k as f64 - s) / denom
    };
    if x >= x0 {
        return at_or_above(n, x - x0);
    }
    // Below the onset the profile is 1, so T^{-n} is a polynomial matching
    // the values of T^{-(n-k)} at the onset.
    let d = x - x0;
    let mut value = 0.0;
    let mut fact = 1.0;
    for k in 0..n {
        if k > 0 {
            fact *= k as f64;
        }
        value += at_or_above(n - k, 0.0) * d.powi(k as i32) / fact;
    }
    let n_fact: f64 = (1..=n).map(|q| q as f64).product();
    value + d.powi(n as i32) / n_fact
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_tail(f: impl Fn(f64) -> f64, x: f64, end: f64, n: usize) -> f64 {
        // Composite Simpson for -∫_x^end f.
        let h = (end - x) / n as f64;
        let mut s = f(x) + f(end);
        for k in 1..n {
            s += f(x + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        -s * h / 3.0
    }

    #[test]
    fn exponential_mode_integral_factor() {
        let omega = Complex64::new(0.5, -0.25);
        let fam = DataFamily::ExponentialMode {
            omega,
            amplitude: Complex64::new(1.0, 0.0),
        };
        match fam.time_integral(1).unwrap() {
            DataFamily::ExponentialMode { amplitude, .. } => {
                let expected = 1.0 / (-Complex64::i() * omega);
                assert!((amplitude - expected).norm() < 1e-15);
            }
            _ => panic!("wrong family"),
        }
        let real = DataFamily::ExponentialMode {
            omega: Complex64::new(1.0, 0.0),
            amplitude: Complex64::new(1.0, 0.0),
        };
        assert!(matches!(real.time_integral(1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn exponential_tail_integral() {
        let fam = DataFamily::ExponentialTail {
            rate: 2.0,
            amplitude: 1.0,
        };
        let t1 = fam.time_integral(1).unwrap();
        let x = 0.7;
        assert!((t1.evaluate(x).re + 0.5 * (-2.0 * x).exp()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_integrals_match_quadrature() {
        let fam = DataFamily::GaussianBump {
            center: 3.0,
            width: 0.8,
            amplitude: 1.5,
        };
        let t1 = fam.time_integral(1).unwrap();
        let t2 = fam.time_integral(2).unwrap();
        for &x in &[1.0, 2.5, 3.0, 4.2] {
            let q1 = quad_tail(|s| fam.evaluate(s).re, x, 20.0, 4000);
            assert!((t1.evaluate(x).re - q1).abs() < 1e-10, "x={x}");
            let q2 = quad_tail(|s| t1.evaluate(s).re, x, 20.0, 4000);
            assert!((t2.evaluate(x).re - q2).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn polynomial_tail_integrals() {
        let fam = DataFamily::PolynomialTail {
            exponent: 3.5,
            onset: 1.0,
        };
        let t1 = fam.time_integral(1).unwrap();
        let t2 = fam.time_integral(2).unwrap();
        for &x in &[0.0, 0.5, 1.0, 2.0, 5.0] {
            let head = if x < 1.0 {
                quad_tail(|s| fam.evaluate(s).re, x, 1.0, 2000)
            } else {
                0.0
            };
            let q1 = head + quad_tail(|s| fam.evaluate(s).re, x.max(1.0), 1e4, 400000);
            assert!((t1.evaluate(x).re - q1).abs() < 1e-6, "x={x}");
        }
        // Derivative of T^-2 is T^-1.
        let h = 1e-5;
        for &x in &[0.3, 3.0] {
            let d = (t2.evaluate(x + h).re - t2.evaluate(x - h).re) / (2.0 * h);
            assert!((d - t1.evaluate(x).re).abs() < 1e-8);
        }
        assert!(DataFamily::PolynomialTail {
            exponent: 1.5,
            onset: 0.0
        }
        .time_integral(2)
        .is_err());
    }

    #[test]
    fn validation() {
        assert!(DataFamily::GaussianBump {
            center: 0.0,
            width: 0.0,
            amplitude: 1.0
        }
        .validate()
        .is_err());
        assert!(DataFamily::PolynomialTail {
            exponent: 0.5,
            onset: 0.0
        }
        .validate()
        .is_err());
        assert!(DataFamily::Zero.validate().is_ok());
    }

    #[test]
    fn zero_mean_profile_integrates_to_compact_support() {
        let p = NullProfile::sample(Orientation::ConstantV, 0.0, 0.0, 20.0, 2000, |x| {
            let z = x - 10.0;
            Complex64::new(-2.0 * z * (-z * z).exp(), 0.0)
        })
        .unwrap();
        let t = time_integral_profile(&p, 1);
        assert!(t.samples[0].norm() < 1e-8);
        assert!(t.samples[2000].norm() == 0.0);
        assert!((t.samples[1000].re - 1.0).abs() < 1e-4);
    }

    #[test]
    fn serde_round_trip() {
        let fam = DataFamily::GaussianBump {
            center: 1.0,
            width: 2.0,
            amplitude: 1.0,
        };
        let s = serde_json::to_string(&fam).unwrap();
        assert!(s.contains("\"kind\":\"gaussian_bump\""));
        let back: DataFamily = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fam);
    }
}
