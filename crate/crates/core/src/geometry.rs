//! Extremal Reissner–Nordström background.
//!
//! The metric function is `D(r) = (1 - M/r)^2`. Both the exterior (`r > M`)
//! and the interior (`0 < r < M`) carry a tortoise coordinate `r_*` with
//! `dr_*/dr = 1/D`, and Eddington–Finkelstein null coordinates satisfy
//! `r_* = (v - u)/2` in either region.
//!
//! Inversion works with the offset `x = |r - M|` rather than `r` itself, so
//! that `r - M` keeps full relative precision deep in the near-horizon tail
//! where `r - M ~ M^2/|r_*|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of the tortoise inversion residual.
pub const INVERSION_TOLERANCE: f64 = 1e-12;

/// Beyond `|r_*| > ASYMPTOTIC_SEED_SWITCH * M` Newton starts from the
/// asymptotic branch rather than from `r = 2M`.
pub const ASYMPTOTIC_SEED_SWITCH: f64 = 1e3;

const MAX_ITERATIONS: usize = 200;

/// Below `r = SERIES_SWITCH * M` the interior tortoise map is summed as a series.
const SERIES_SWITCH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    #[default]
    Exterior,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackHole {
    mass: f64,
}

impl BlackHole {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `D(r) = (1 - M/r)^2`.
    pub fn metric_d(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.d_unchecked(r))
    }

    /// `dD/dr = 2M(r - M)/r^3`.
    pub fn metric_d_prime(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.d_prime_unchecked(r))
    }

    pub(crate) fn d_unchecked(&self, r: f64) -> f64 {
        let f = 1.0 - self.mass / r;
        f * f
    }

    pub(crate) fn d_prime_unchecked(&self, r: f64) -> f64 {
        2.0 * self.mass * (r - self.mass) / (r * r * r)
    }

    /// Tortoise coordinate of the given region.
    pub fn tortoise(&self, r: f64, region: Region) -> Result<f64> {
        let m = self.mass;
        match region {
            Region::Exterior => {
                if !(r > m && r.is_finite()) {
                    return Err(Error::Domain(format!(
                        "exterior tortoise needs r > M = {m}, got {r}"
                    )));
                }
                Ok(self.exterior_tortoise_offset(r - m))
            }
            Region::Interior => {
                if !(r > 0.0 && r < m) {
                    return Err(Error::Domain(format!(
                        "interior tortoise needs 0 < r < M = {m}, got {r}"
                    )));
                }
                Ok(self.interior_tortoise_radius(r))
            }
        }
    }

    /// `r_*` as a function of `x = r - M > 0`.
    fn exterior_tortoise_offset(&self, x: f64) -> f64 {
        let m = self.mass;
        x - m * m / x + 2.0 * m * (x / m).ln()
    }

    /// `r_*` as a function of `y = M - r ∈ (0, M)`.
    fn interior_tortoise_offset(&self, y: f64) -> f64 {
        let m = self.mass;
        -y + m * m / y + 2.0 * m * (y / m).ln()
    }

    /// Interior `r_*` as a function of `r`. Close to `r = 0` the closed form
    /// cancels catastrophically, so the series
    /// `r_* = M Σ_{k≥3} (k-2)/k (r/M)^k` is summed instead.
    fn interior_tortoise_radius(&self, r: f64) -> f64 {
        let m = self.mass;
        let rho = r / m;
        if rho >= SERIES_SWITCH {
            return self.interior_tortoise_offset(m - r);
        }
        let mut power = rho * rho * rho;
        let mut sum = 0.0;
        for k in 3..200 {
            let term = power * (k as f64 - 2.0) / k as f64;
            sum += term;
            if term < f64::EPSILON * 1e-2 * sum {
                break;
            }
            power *= rho;
        }
        m * sum
    }

    /// Inverse of [`BlackHole::tortoise`].
    pub fn invert_tortoise(&self, rstar: f64, region: Region) -> Result<f64> {
        let offset = self.invert_tortoise_offset(rstar, region)?;
        Ok(match region {
            Region::Exterior => self.mass + offset,
            Region::Interior => self.mass - offset,
        })
    }

    /// Solves for `|r - M|` given `r_*`. The returned offset carries full
    /// relative precision even where `r` itself would round to `M`.
    pub fn invert_tortoise_offset(&self, rstar: f64, region: Region) -> Result<f64> {
        if !rstar.is_finite() {
            return Err(Error::Domain(format!("r_* must be finite, got {rstar}")));
        }
        match region {
            Region::Exterior => self.invert_exterior(rstar),
            Region::Interior => self.invert_interior(rstar),
        }
    }

    fn invert_exterior(&self, rstar: f64) -> Result<f64> {
        let m = self.mass;
        // f(x) = r_*(x) - rstar is increasing in x with f'(x) = (x + M)^2 / x^2.
        let seed = if rstar < -ASYMPTOTIC_SEED_SWITCH * m {
            m * m / rstar.abs()
        } else if rstar > ASYMPTOTIC_SEED_SWITCH * m {
            let r = rstar - 2.0 * m * (rstar / m).ln();
            (r - m).max(m)
        } else {
            m
        };
        // Bracket: x ∈ (lo, hi) with f(lo) < 0 < f(hi).
        let mut lo = seed;
        while self.exterior_tortoise_offset(lo) > rstar {
            lo *= 0.5;
        }
        let mut hi = seed;
        while self.exterior_tortoise_offset(hi) < rstar {
            hi *= 2.0;
        }
        safeguarded_newton(
            rstar,
            seed,
            lo,
            hi,
            INVERSION_TOLERANCE * rstar.abs().max(1.0),
            |x| self.exterior_tortoise_offset(x),
            |x| {
                let q = (x + m) / x;
                q * q
            },
        )
    }

    fn invert_interior(&self, rstar: f64) -> Result<f64> {
        let m = self.mass;
        if rstar <= 0.0 {
            return Err(Error::Domain(format!(
                "interior r_* must be positive (r > 0), got {rstar}"
            )));
        }
        let tol = INVERSION_TOLERANCE * rstar.max(1.0);
        if rstar < self.interior_tortoise_radius(SERIES_SWITCH * m) {
            // Near r = 0, where r_* ≈ r^3/(3M^2), solve for r directly with a
            // residual tolerance relative to r_* itself.
            let seed = (3.0 * m * m * rstar).cbrt().min(0.49 * m);
            let mut lo = seed;
            while self.interior_tortoise_radius(lo) > rstar {
                lo *= 0.5;
            }
            let hi = SERIES_SWITCH * m;
            let r = safeguarded_newton(
                rstar,
                seed.clamp(lo, hi),
                lo,
                hi,
                INVERSION_TOLERANCE * 1e-2 * rstar,
                |r| self.interior_tortoise_radius(r),
                |r| {
                    let q = r / (m - r);
                    q * q
                },
            )?;
            return Ok(m - r);
        }
        // g(y) = r_*(y) - rstar is decreasing in y ∈ (0, M); r_* → +∞ as
        // y → 0 with y ≈ M^2/r_*.
        let seed = if rstar > ASYMPTOTIC_SEED_SWITCH * m {
            m * m / rstar
        } else {
            0.25 * m
        };
        // Work with the increasing map y ↦ -r_*(y) on (0, M/2].
        let f = |y: f64| -self.interior_tortoise_offset(y);
        let target = -rstar;
        let mut lo = seed.min(0.25 * m);
        while f(lo) > target {
            lo *= 0.5;
        }
        let hi = (1.0 - SERIES_SWITCH) * m;
        safeguarded_newton(target, seed.clamp(lo, hi), lo, hi, tol, f, |y| {
            let q = (m - y) / y;
            q * q
        })
    }

    /// Radius at a double-null point, `r = r(r_* = (v - u)/2)`.
    pub fn radius(&self, p: NullPoint) -> Result<f64> {
        self.invert_tortoise(p.rstar(), p.region)
    }

    /// `r - M` at `r_*` in the exterior, `M - r` in the interior.
    pub fn horizon_offset(&self, rstar: f64, region: Region) -> Result<f64> {
        self.invert_tortoise_offset(rstar, region)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive, got {r}")))
    }
}

/// Newton iteration for an increasing function, kept inside a shrinking
/// bracket with bisection whenever the Newton step would leave it.
fn safeguarded_newton(
    target: f64,
    seed: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> Result<f64> {
    let mut x = seed;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        residual = f(x) - target;
        if residual.abs() <= tol {
            return Ok(x);
        }
        if residual < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = residual / df(x);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        // Round-off floor: the root is pinned to a few ulps of x.
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() {
            let r_next = f(next) - target;
            return Ok(if r_next.abs() < residual.abs() { next } else { x });
        }
        x = next;
    }
    Err(Error::NoConvergence {
        rstar: target,
        residual,
        iterations: MAX_ITERATIONS,
    })
}

/// A point of the double-null chart `(u, v)` tagged with its region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullPoint {
    pub u: f64,
    pub v: f64,
    pub region: Region,
}

impl NullPoint {
    pub fn new(u: f64, v: f64, region: Region) -> Result<Self> {
        if !(u.is_finite() && v.is_finite()) {
            return Err(Error::Domain("null coordinates must be finite".into()));
        }
        if region == Region::Interior && v - u <= 0.0 {
            return Err(Error::Domain(format!(
                "interior point (u={u}, v={v}) lies at or past r = 0"
            )));
        }
        Ok(Self { u, v, region })
    }

    pub fn t(&self) -> f64 {
        0.5 * (self.u + self.v)
    }

    pub fn rstar(&self) -> f64 {
        0.5 * (self.v - self.u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bh() -> BlackHole {
        BlackHole::new(1.0).unwrap()
    }

    #[test]
    fn metric_values() {
        let b = bh();
        assert_eq!(b.metric_d(1.0).unwrap(), 0.0);
        assert!((b.metric_d(2.0).unwrap() - 0.25).abs() < 1e-15);
        // D(10^6) = 1 - 2e-6 + 1e-12.
        let far = b.metric_d(1e6).unwrap();
        assert!((far - (1.0 - 2e-6 + 1e-12)).abs() < 1e-15);
        assert!((far - 1.0).abs() < 2.0000001e-6);
        assert_eq!(b.metric_d_prime(1.0).unwrap(), 0.0);
        assert!((b.metric_d_prime(2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((b.metric_d_prime(0.5).unwrap() + 8.0).abs() < 1e-12);
        assert!(b.metric_d(0.0).is_err());
        assert!(b.metric_d_prime(-1.0).is_err());
        assert!(BlackHole::new(-1.0).is_err());
        assert!(BlackHole::new(0.0).is_err());
    }

    #[test]
    fn tortoise_values() {
        let b = bh();
        assert!(b.tortoise(2.0, Region::Exterior).unwrap().abs() < 1e-14);
        let interior = b.tortoise(0.5, Region::Interior).unwrap();
        assert!((interior - (1.5 - 2.0 * 2f64.ln())).abs() < 1e-14);
        assert!((interior - 0.11371).abs() < 1e-5);
        for m in [0.5, 1.0, 3.0] {
            let b = BlackHole::new(m).unwrap();
            assert!(
                b.tortoise(3.0 * m, Region::Exterior).unwrap()
                    > b.tortoise(2.0 * m, Region::Exterior).unwrap()
            );
        }
        assert!(b.tortoise(1.0, Region::Exterior).is_err());
        assert!(b.tortoise(1.0, Region::Interior).is_err());
        assert!(b.tortoise(0.0, Region::Interior).is_err());
    }

    #[test]
    fn inversion_examples() {
        let b = bh();
        assert!((b.invert_tortoise(0.0, Region::Exterior).unwrap() - 2.0).abs() < 1e-10);
        let x = b.invert_tortoise_offset(-1e6, Region::Exterior).unwrap();
        assert!((x / 1e-6 - 1.0).abs() < 0.01);
        for f in [1.001, 1.5, 2.0, 10.0, 1e4] {
            let r = b.invert_tortoise(b.tortoise(f, Region::Exterior).unwrap(), Region::Exterior);
            assert!((r.unwrap() - f).abs() <= 1e-10 * f, "r = {f}");
        }
        for f in [0.01, 0.2, 0.5, 0.9, 0.999] {
            let rs = b.tortoise(f, Region::Interior).unwrap();
            let r = b.invert_tortoise(rs, Region::Interior).unwrap();
            assert!((r - f).abs() <= 1e-10 * f, "r = {f}: {r}");
        }
        assert!(b.invert_tortoise(-0.1, Region::Interior).is_err());
        assert!(b.invert_tortoise(f64::NAN, Region::Exterior).is_err());
    }

    #[test]
    fn inversion_residual_is_tight() {
        let b = bh();
        for rstar in [-1e8, -1e5, -1e3, -50.0, -3.0, 0.0, 0.7, 40.0, 1e3, 1e6] {
            let x = b.invert_tortoise_offset(rstar, Region::Exterior).unwrap();
            let res = (b.exterior_tortoise_offset(x) - rstar).abs();
            assert!(res <= 1e-12 * rstar.abs().max(1.0), "rstar {rstar}: {res:e}");
        }
        for rstar in [1e-9, 1e-4, 0.3, 5.0, 1e4, 1e7] {
            let y = b.invert_tortoise_offset(rstar, Region::Interior).unwrap();
            let back = if y > 0.5 {
                b.tortoise(1.0 - y, Region::Interior).unwrap()
            } else {
                b.interior_tortoise_offset(y)
            };
            let res = (back - rstar).abs();
            assert!(res <= 1e-12 * rstar.abs().max(1.0), "rstar {rstar}: {res:e}");
        }
    }

    #[test]
    fn radius_of_null_points() {
        let b = bh();
        let p = NullPoint::new(0.0, 0.0, Region::Exterior).unwrap();
        assert!((b.radius(p).unwrap() - 2.0).abs() < 1e-10);
        let q = NullPoint::new(-10.0, 10.0, Region::Exterior).unwrap();
        assert_eq!(
            b.radius(q).unwrap(),
            b.invert_tortoise(10.0, Region::Exterior).unwrap()
        );
        assert!(NullPoint::new(1.0, 0.5, Region::Interior).is_err());
    }
}
