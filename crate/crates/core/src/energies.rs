//! Energy functionals of a single mode, by trapezoid quadrature along grid
//! lines and midpoint quadrature over cells.
//!
//! Angular integrals use orthonormal spherical harmonics, so the squared
//! angular gradient of a mode contributes `ell(ell+1)|phi|^2`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{angular_eigenvalue, t_power};
use crate::fields::{GridSpec, ModeField, NullProfile, Orientation};
use crate::geometry::Region;
use crate::numerics::{derivative, nth_derivative, trapezoid};

/// Floor of relative-defect denominators.
pub const DEFECT_FLOOR: f64 = 1e-300;

/// A contiguous piece `[start, end]` (node indices) of one grid line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSegment {
    pub orientation: Orientation,
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl LineSegment {
    pub fn new(orientation: Orientation, index: usize, start: usize, end: usize) -> Self {
        Self {
            orientation,
            index,
            start,
            end,
        }
    }

    /// The whole grid line.
    pub fn full(grid: &GridSpec, orientation: Orientation, index: usize) -> Self {
        let end = match orientation {
            Orientation::ConstantU => grid.n_v,
            Orientation::ConstantV => grid.n_u,
        };
        Self::new(orientation, index, 0, end)
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        let (line_max, along_max) = match self.orientation {
            Orientation::ConstantU => (grid.n_u, grid.n_v),
            Orientation::ConstantV => (grid.n_v, grid.n_u),
        };
        if self.index > line_max {
            return Err(Error::IndexOutOfRange {
                index: self.index,
                max: line_max,
            });
        }
        if self.end > along_max {
            return Err(Error::IndexOutOfRange {
                index: self.end,
                max: along_max,
            });
        }
        if self.start >= self.end {
            return Err(Error::InvalidParameter(format!(
                "empty segment [{}, {}]",
                self.start, self.end
            )));
        }
        Ok(())
    }

    #[inline]
    fn node(&self, k: usize) -> (usize, usize) {
        match self.orientation {
            Orientation::ConstantU => (self.index, k),
            Orientation::ConstantV => (k, self.index),
        }
    }

    fn step(&self, grid: &GridSpec) -> f64 {
        match self.orientation {
            Orientation::ConstantU => grid.h_v(),
            Orientation::ConstantV => grid.h_u(),
        }
    }

    fn coordinate(&self, grid: &GridSpec, k: usize) -> f64 {
        match self.orientation {
            Orientation::ConstantU => grid.v(k),
            Orientation::ConstantV => grid.u(k),
        }
    }
}

/// Samples of a line segment together with radius data.
struct LineSamples {
    h: f64,
    coords: Vec<f64>,
    phi: Vec<Complex64>,
    r: Vec<f64>,
    offset: Vec<f64>,
}

fn line_samples(field: &ModeField, seg: &LineSegment) -> Result<LineSamples> {
    let g = field.grid();
    seg.check(g)?;
    let n = seg.end - seg.start + 1;
    let mut out = LineSamples {
        h: seg.step(g),
        coords: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        offset: Vec::with_capacity(n),
    };
    for k in seg.start..=seg.end {
        let (i, j) = seg.node(k);
        out.coords.push(seg.coordinate(g, k));
        out.phi.push(field.at(i, j));
        out.r.push(field.radii().node_r(i, j));
        out.offset.push(field.radii().node_offset(i, j));
    }
    Ok(out)
}

/// Degenerate T-energy flux through a null segment,
/// `∫ r^2 |∂ψ|^2 + (D/4) ell(ell+1) |ψ|^2` along the segment.
pub fn t_flux(field: &ModeField, seg: &LineSegment) -> Result<f64> {
    let s = line_samples(field, seg)?;
    let lambda = angular_eigenvalue(field.ell());
    let psi: Vec<Complex64> = s.phi.iter().zip(&s.r).map(|(p, r)| p / r).collect();
    let dpsi = derivative(&psi, s.h);
    let integrand: Vec<f64> = (0..psi.len())
        .map(|k| {
            let (r, x) = (s.r[k], s.offset[k]);
            let d = (x / r) * (x / r);
            r * r * dpsi[k].norm_sqr() + 0.25 * d * lambda * psi[k].norm_sqr()
        })
        .collect();
    Ok(trapezoid(&integrand, s.h))
}

/// Index rectangle `[i0, i1] x [j0, j1]` of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diamond {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl Diamond {
    pub fn full(grid: &GridSpec) -> Self {
        Self {
            i0: 0,
            i1: grid.n_u,
            j0: 0,
            j1: grid.n_v,
        }
    }
}

/// Past and future T-fluxes of a rectangle.
pub fn flux_balance(field: &ModeField, d: &Diamond) -> Result<(f64, f64)> {
    if d.i0 >= d.i1 || d.j0 >= d.j1 {
        return Err(Error::InvalidParameter(format!("degenerate diamond {d:?}")));
    }
    let seg_u = |i| LineSegment::new(Orientation::ConstantU, i, d.j0, d.j1);
    let seg_v = |j| LineSegment::new(Orientation::ConstantV, j, d.i0, d.i1);
    let influx = t_flux(field, &seg_u(d.i0))? + t_flux(field, &seg_v(d.j0))?;
    let outflux = t_flux(field, &seg_u(d.i1))? + t_flux(field, &seg_v(d.j1))?;
    Ok((influx, outflux))
}

/// `|influx - outflux| / max(influx, ε)` for a rectangle.
pub fn energy_balance_defect(field: &ModeField, d: &Diamond) -> Result<f64> {
    let (influx, outflux) = flux_balance(field, d)?;
    Ok((influx - outflux).abs() / influx.max(DEFECT_FLOOR))
}

fn profile_start_index(profile: &NullProfile, start: f64) -> Result<usize> {
    let h = profile.step();
    let k = ((start - profile.start()) / h - 1e-9).ceil().max(0.0) as usize;
    if k >= profile.len() {
        return Err(Error::InvalidParameter(format!(
            "start {start} beyond the profile end {}",
            profile.end()
        )));
    }
    Ok(k)
}

/// `Σ_{j=0}^2 ∫ x^{2-j} |∂^{j+1} Φ|^2 + ell(ell+1) ∫ |Φ|^2` over `x >= start`,
/// where `x` is the profile coordinate (`u` on null infinity, `v` on the
/// horizon).
pub fn weighted_flux_boundary(profile: &NullProfile, ell: u32, start: f64) -> Result<f64> {
    if start < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "weights need a nonnegative start coordinate, got {start}"
        )));
    }
    let k0 = profile_start_index(profile, start)?;
    let samples = &profile.samples[k0..];
    let coords = &profile.coordinates[k0..];
    if samples.len() < 5 {
        return Err(Error::Resolution(format!(
            "three derivatives need at least 5 samples, got {}",
            samples.len()
        )));
    }
    let h = profile.step();
    let mut total = 0.0;
    for j in 0..3 {
        let current = nth_derivative(samples, h, j as u32 + 1);
        let weight_power = 2 - j;
        let integrand: Vec<f64> = current
            .iter()
            .zip(coords)
            .map(|(d, &x)| x.powi(weight_power) * d.norm_sqr())
            .collect();
        total += trapezoid(&integrand, h);
    }
    let lambda = angular_eigenvalue(ell);
    let angular: Vec<f64> = samples.iter().map(|z| z.norm_sqr()).collect();
    Ok(total + lambda * trapezoid(&angular, h))
}

/// Weighted flux of a null-infinity profile from `u0` onwards.
pub fn weighted_flux_scri(profile: &NullProfile, ell: u32, u0: f64) -> Result<f64> {
    weighted_flux_boundary(profile, ell, u0)
}

/// Weighted flux of a horizon profile from `v0` onwards.
pub fn weighted_flux_horizon(profile: &NullProfile, ell: u32, v0: f64) -> Result<f64> {
    weighted_flux_boundary(profile, ell, v0)
}

/// `∫ x^p |∂Φ|^2` over the profile, `x` the profile coordinate.
pub fn weighted_partial_integral(profile: &NullProfile, p: f64) -> Result<f64> {
    if profile.start() < 0.0 && p.fract() != 0.0 {
        return Err(Error::InvalidParameter(
            "fractional weights need nonnegative coordinates".into(),
        ));
    }
    let h = profile.step();
    let d = derivative(&profile.samples, h);
    let integrand: Vec<f64> = d
        .iter()
        .zip(&profile.coordinates)
        .map(|(z, &x)| x.powf(p) * z.norm_sqr())
        .collect();
    Ok(trapezoid(&integrand, h))
}

/// `∫ |∂Φ|^2` over the profile.
pub fn profile_flux(profile: &NullProfile) -> f64 {
    let d = derivative(&profile.samples, profile.step());
    let integrand: Vec<f64> = d.iter().map(|z| z.norm_sqr()).collect();
    trapezoid(&integrand, profile.step())
}

/// Index of the initial pair `u = u_i`, `v = v_j` and the segments running
/// from their corner to the grid boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialPair {
    pub i: usize,
    pub j: usize,
}

impl InitialPair {
    pub fn past() -> Self {
        Self { i: 0, j: 0 }
    }

    /// Outgoing piece `u = u_i`, `v >= v_j`.
    pub fn outgoing(&self, grid: &GridSpec) -> LineSegment {
        LineSegment::new(Orientation::ConstantU, self.i, self.j, grid.n_v)
    }

    /// Ingoing piece `v = v_j`, `u >= u_i`.
    pub fn ingoing(&self, grid: &GridSpec) -> LineSegment {
        LineSegment::new(Orientation::ConstantV, self.j, self.i, grid.n_u)
    }
}

/// `∫ w |∂^{order} phi|^2` along a segment, with the weight given as a
/// function of `(r, r - M)`.
fn weighted_line_integral(
    field: &ModeField,
    seg: &LineSegment,
    order: u32,
    weight: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let s = line_samples(field, seg)?;
    let d = nth_derivative(&s.phi, s.h, order);
    let integrand: Vec<f64> = (0..d.len())
        .map(|k| weight(s.r[k], s.offset[k]) * d[k].norm_sqr())
        .collect();
    Ok(trapezoid(&integrand, s.h))
}

fn t_powers(field: &ModeField, max: u32) -> Result<Vec<ModeField>> {
    (0..=max).map(|m| t_power(field, m)).collect()
}

/// Non-degenerate energy of the data on an initial pair:
/// `Σ_{j≤1} [∫_in (r-M)^{-2+j} |∂_u T^j phi|^2 du + ∫_out r^{2-j} |∂_v T^j phi|^2 dv]`
/// plus the T-fluxes of `T^j psi`, `j ≤ 2`, through both pieces.
pub fn sigma0_norm(field: &ModeField, pair: &InitialPair) -> Result<f64> {
    let (out_strip, in_strip) = pair_strips(field, pair, 2)?;
    let out_powers = t_powers(&out_strip, 2)?;
    let in_powers = t_powers(&in_strip, 2)?;
    let out = LineSegment::full(out_strip.grid(), Orientation::ConstantU, 0);
    let inn = LineSegment::full(in_strip.grid(), Orientation::ConstantV, 0);
    let mut total = 0.0;
    for j in 0..2 {
        let jj = j as i32;
        total += weighted_line_integral(&in_powers[j], &inn, 1, |_, x| x.abs().powi(-2 + jj))?;
        total += weighted_line_integral(&out_powers[j], &out, 1, |r, _| r.powi(2 - jj))?;
    }
    for j in 0..3 {
        total += t_flux(&out_powers[j], &out)? + t_flux(&in_powers[j], &inn)?;
    }
    Ok(total)
}

/// Thin strips along the two pieces of an initial pair, wide enough that
/// `t_powers` derivatives on the pair lines are unaffected by the cut.
fn pair_strips(field: &ModeField, pair: &InitialPair, powers: u32) -> Result<(ModeField, ModeField)> {
    let g = field.grid();
    if pair.i >= g.n_u || pair.j >= g.n_v {
        return Err(Error::IndexOutOfRange {
            index: pair.i.max(pair.j),
            max: g.n_u.min(g.n_v),
        });
    }
    let depth = 2 * powers as usize + 4;
    let out_strip = field.window(pair.i, (pair.i + depth).min(g.n_u), pair.j, g.n_v)?;
    let in_strip = field.window(pair.i, g.n_u, pair.j, (pair.j + depth).min(g.n_v))?;
    Ok((out_strip, in_strip))
}

/// Highest `n` accepted by [`higher_order_norm`].
pub const MAX_NORM_ORDER: u32 = 2;

/// Higher-order energy of the data on an initial pair:
///
/// ```text
/// Σ_{j≤2} Σ_{m+2a+2k≤2n} Λ^a [ ∫_out r^{2+2k-j} |L^{1+k} T^{m+j} phi|^2 dv
///                            + ∫_in (r-M)^{-2-2k+j} |Lbar^{1+k} T^{m+j} phi|^2 du ]
///   + Σ_{m+2a≤2n+2} Λ^a (T-flux of T^m psi through both pieces)
/// ```
///
/// with `Λ = ell(ell+1)` standing in for the angular derivatives.
pub fn higher_order_norm(field: &ModeField, pair: &InitialPair, n: u32) -> Result<f64> {
    if n > MAX_NORM_ORDER {
        return Err(Error::Unsupported(format!(
            "higher-order norms implemented for n <= {MAX_NORM_ORDER}, got {n}"
        )));
    }
    let g = field.grid();
    let max_t = 2 * n + 2;
    let max_derivative = 1 + n + max_t;
    let shortest = (g.n_u - pair.i).min(g.n_v - pair.j) + 1;
    if shortest < 4 * max_derivative as usize {
        return Err(Error::Resolution(format!(
            "{shortest} samples cannot resolve {max_derivative} derivatives"
        )));
    }
    let (out_strip, in_strip) = pair_strips(field, pair, max_t)?;
    let out_powers = t_powers(&out_strip, max_t)?;
    let in_powers = t_powers(&in_strip, max_t)?;
    let out = LineSegment::full(out_strip.grid(), Orientation::ConstantU, 0);
    let inn = LineSegment::full(in_strip.grid(), Orientation::ConstantV, 0);
    let lambda = angular_eigenvalue(field.ell());
    let mut total = 0.0;
    for j in 0..=2u32 {
        for k in 0..=n {
            for a in 0..=n - k {
                let ang = lambda.powi(a as i32);
                if ang == 0.0 {
                    continue;
                }
                for m in 0..=(2 * n - 2 * a - 2 * k) {
                    let p = (m + j) as usize;
                    let (kk, jj) = (k as i32, j as i32);
                    let out_term = weighted_line_integral(&out_powers[p], &out, 1 + k, |r, _| {
                        r.powi(2 + 2 * kk - jj)
                    })?;
                    let in_term = weighted_line_integral(&in_powers[p], &inn, 1 + k, |_, x| {
                        x.abs().powi(-2 - 2 * kk + jj)
                    })?;
                    total += ang * (out_term + in_term);
                }
            }
        }
    }
    for a in 0..=(n + 1) {
        let ang = lambda.powi(a as i32);
        if ang == 0.0 {
            continue;
        }
        for m in 0..=(2 * n + 2 - 2 * a) {
            let p = m as usize;
            total += ang * (t_flux(&out_powers[p], &out)? + t_flux(&in_powers[p], &inn)?);
        }
    }
    Ok(total)
}

/// Radial band `[lo, hi]` in `r`.
pub type Band = (f64, f64);

/// Spacetime integral over two radial bands, one on each side of the photon
/// sphere, of `|∂_v ψ|^2 + ell(ell+1)|ψ|^2/r^2 + |ψ|^2 + |∂_r ψ|^2` with
/// `∂_r = -2 D^{-1} ∂_u` at fixed `v`; midpoint rule in `(u, v)`.
pub fn morawetz_bulk(field: &ModeField, inner: Band, outer: Band) -> Result<f64> {
    let m = field.black_hole().mass();
    if field.grid().region != Region::Exterior {
        return Err(Error::Domain("Morawetz bulk is an exterior quantity".into()));
    }
    if inner.0 <= m {
        return Err(Error::Domain(format!(
            "band [{}, {}] touches the horizon r = {m}",
            inner.0, inner.1
        )));
    }
    if !(inner.0 < inner.1 && inner.1 < 2.0 * m && 2.0 * m < outer.0 && outer.0 < outer.1) {
        return Err(Error::InvalidParameter(format!(
            "bands must satisfy M < r0 < r1 < 2M < r2 < r3, got {inner:?}, {outer:?}"
        )));
    }
    let g = field.grid();
    let (hu, hv) = (g.h_u(), g.h_v());
    let lambda = angular_eigenvalue(field.ell());
    let in_band = |r: f64| (r >= inner.0 && r <= inner.1) || (r >= outer.0 && r <= outer.1);
    let mut total = 0.0;
    for i in 0..g.n_u {
        for j in 0..g.n_v {
            let (r, x) = field.radii().cell(i, j);
            if !in_band(r) {
                continue;
            }
            let s = field.psi_at(i, j);
            let e = field.psi_at(i, j + 1);
            let w = field.psi_at(i + 1, j);
            let n = field.psi_at(i + 1, j + 1);
            let psi = 0.25 * (s + e + w + n);
            let dv = ((e + n) - (s + w)) / (2.0 * hv);
            let du = ((w + n) - (s + e)) / (2.0 * hu);
            let d = (x / r) * (x / r);
            let dr = du * (2.0 / d);
            total += (dv.norm_sqr()
                + lambda * psi.norm_sqr() / (r * r)
                + psi.norm_sqr()
                + dr.norm_sqr())
                * hu
                * hv;
        }
    }
    Ok(total)
}

/// `∫ r^p |∂_v^{k+1} phi|^2 dv` on outgoing segments and
/// `∫ |r-M|^{-p} |∂_u^{k+1} phi|^2 du` on ingoing ones, for `2k ≤ p ≤ 2k+2`.
pub fn p_weighted_flux(field: &ModeField, seg: &LineSegment, p: f64, k: u32) -> Result<f64> {
    let (lo, hi) = (2.0 * k as f64, 2.0 * k as f64 + 2.0);
    if !(p >= lo && p <= hi) {
        return Err(Error::HierarchyRange { p, k, lo, hi });
    }
    match seg.orientation {
        Orientation::ConstantU => weighted_line_integral(field, seg, k + 1, |r, _| r.powf(p)),
        Orientation::ConstantV => {
            weighted_line_integral(field, seg, k + 1, |_, x| x.abs().powf(-p))
        }
    }
}

/// Angular weight of the interior fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularWeight {
    /// `ell(ell+1)|phi|^2`, on horizon and Cauchy-horizon lines.
    Full,
    /// `D ell(ell+1)|phi|^2`, on lines inside the interior.
    Degenerate,
}

/// `∫ u^2 |∂_u phi|^2 + A ell(ell+1)|phi|^2 du` on ingoing segments,
/// `∫ v^2 |∂_v phi|^2 + A ell(ell+1)|phi|^2 dv` on outgoing ones, with `A = 1`
/// or `A = D`.
pub fn k_weighted_flux(field: &ModeField, seg: &LineSegment, angular: AngularWeight) -> Result<f64> {
    let s = line_samples(field, seg)?;
    let d = derivative(&s.phi, s.h);
    let lambda = angular_eigenvalue(field.ell());
    let integrand: Vec<f64> = (0..d.len())
        .map(|k| {
            let a = match angular {
                AngularWeight::Full => 1.0,
                AngularWeight::Degenerate => (s.offset[k] / s.r[k]).powi(2),
            };
            s.coords[k].powi(2) * d[k].norm_sqr() + a * lambda * s.phi[k].norm_sqr()
        })
        .collect();
    Ok(trapezoid(&integrand, s.h))
}

/// `∫ x^2 |∂Φ|^2 + ell(ell+1)|Φ|^2` of a boundary profile.
pub fn k_weighted_profile(profile: &NullProfile, ell: u32) -> f64 {
    let h = profile.step();
    let d = derivative(&profile.samples, h);
    let lambda = angular_eigenvalue(ell);
    let integrand: Vec<f64> = (0..d.len())
        .map(|k| {
            profile.coordinates[k].powi(2) * d[k].norm_sqr()
                + lambda * profile.samples[k].norm_sqr()
        })
        .collect();
    trapezoid(&integrand, h)
}

/// `∫ (r-M)^{-2} |∂_u phi|^2 du` over the part of the ingoing line `v = v_j`
/// with `r <= r0`.
pub fn horizon_localized_n_energy(field: &ModeField, j: usize, r0: f64) -> Result<f64> {
    let g = field.grid();
    let m = field.black_hole().mass();
    if !(r0 > m && r0 < 2.0 * m) {
        return Err(Error::InvalidParameter(format!(
            "localisation radius must lie in (M, 2M), got {r0}"
        )));
    }
    let full = LineSegment::full(g, Orientation::ConstantV, j);
    let s = line_samples(field, &full)?;
    let d = derivative(&s.phi, s.h);
    let integrand: Vec<f64> = (0..d.len())
        .map(|k| {
            if s.r[k] <= r0 {
                d[k].norm_sqr() / (s.offset[k] * s.offset[k])
            } else {
                0.0
            }
        })
        .collect();
    // Integrate only over the contiguous near-horizon tail.
    let first = integrand
        .iter()
        .zip(&s.r)
        .position(|(_, &r)| r <= r0)
        .unwrap_or(integrand.len());
    if first + 1 >= integrand.len() {
        return Ok(0.0);
    }
    Ok(trapezoid(&integrand[first..], s.h))
}

/// `∫ r^2 |∂_v phi|^2 dv` over the part of the outgoing line `u = u_i` with
/// `r >= r1`.
pub fn infinity_localized_energy(field: &ModeField, i: usize, r1: f64) -> Result<f64> {
    let m = field.black_hole().mass();
    if !(r1 > m) {
        return Err(Error::InvalidParameter(format!(
            "localisation radius must exceed M, got {r1}"
        )));
    }
    let full = LineSegment::full(field.grid(), Orientation::ConstantU, i);
    let s = line_samples(field, &full)?;
    let d = derivative(&s.phi, s.h);
    let Some(first) = s.r.iter().position(|&r| r >= r1) else {
        return Ok(0.0);
    };
    let integrand: Vec<f64> = (first..d.len())
        .map(|k| s.r[k] * s.r[k] * d[k].norm_sqr())
        .collect();
    Ok(trapezoid(&integrand, s.h))
}

/// Sums controlling `phi` in `W^{1,2}` near the Cauchy horizon: the largest
/// `∫ |∂_u phi|^2 + ell(ell+1)|phi|^2 du` over ingoing lines, and
/// `∫ |∂_r phi|^2 + ell(ell+1)|phi|^2 dr` on the last outgoing line, written
/// as `∫ 2 D^{-1}|∂_v phi|^2 + ell(ell+1)(D/2)|phi|^2 dv`.
pub fn cauchy_horizon_sums(field: &ModeField) -> Result<(f64, f64)> {
    let g = *field.grid();
    let lambda = angular_eigenvalue(field.ell());
    let mut sup: f64 = 0.0;
    for j in 0..=g.n_v {
        let s = line_samples(field, &LineSegment::full(&g, Orientation::ConstantV, j))?;
        let d = derivative(&s.phi, s.h);
        let integrand: Vec<f64> = (0..d.len())
            .map(|k| d[k].norm_sqr() + lambda * s.phi[k].norm_sqr())
            .collect();
        sup = sup.max(trapezoid(&integrand, s.h));
    }
    let s = line_samples(field, &LineSegment::full(&g, Orientation::ConstantU, g.n_u))?;
    let d = derivative(&s.phi, s.h);
    let integrand: Vec<f64> = (0..d.len())
        .map(|k| {
            let dd = (s.offset[k] / s.r[k]).powi(2);
            2.0 / dd * d[k].norm_sqr() + lambda * 0.5 * dd * s.phi[k].norm_sqr()
        })
        .collect();
    Ok((sup, trapezoid(&integrand, s.h)))
}

/// Named energy values of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub ell: u32,
    pub grid: Option<GridSpec>,
    pub values: BTreeMap<String, f64>,
    pub segments: BTreeMap<String, String>,
}

impl EnergyReport {
    pub fn new(ell: u32, grid: Option<GridSpec>) -> Self {
        Self {
            ell,
            grid,
            ..Self::default()
        }
    }

    /// Records a value, rejecting negative or non-finite ones.
    pub fn insert(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy {name} must be finite and nonnegative, got {value}"
            )));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    pub fn describe(&mut self, name: &str, segment: impl Into<String>) {
        self.segments.insert(name.to_string(), segment.into());
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::ExactSolution;
    use crate::geometry::BlackHole;

    fn bh() -> BlackHole {
        BlackHole::new(1.0).unwrap()
    }

    #[test]
    fn static_solution_carries_no_t_flux() {
        let g = GridSpec::square(0.0, 10.0, 64, Region::Exterior).unwrap();
        let f = ExactSolution::Constant.field(&bh(), &g).unwrap();
        for seg in [
            LineSegment::full(&g, Orientation::ConstantU, 3),
            LineSegment::full(&g, Orientation::ConstantV, 10),
        ] {
            assert!(t_flux(&f, &seg).unwrap() < 1e-20);
        }
        let z = f.map_values(|_| Complex64::new(0.0, 0.0));
        assert_eq!(t_flux(&z, &LineSegment::full(&g, Orientation::ConstantU, 0)).unwrap(), 0.0);
        assert!(t_flux(&z, &LineSegment::new(Orientation::ConstantU, 0, 4, 4)).is_err());
    }

    #[test]
    fn exponential_profile_weighted_flux() {
        let p = NullProfile::sample(Orientation::ConstantV, 40.0, 0.0, 40.0, 8000, |u| {
            Complex64::new((-u).exp(), 0.0)
        })
        .unwrap();
        let e0 = weighted_flux_scri(&p, 0, 0.0).unwrap();
        let e1 = weighted_flux_scri(&p, 1, 0.0).unwrap();
        assert!((e0 - 1.0).abs() < 1e-3, "{e0}");
        assert!((e1 - 2.0).abs() < 1e-3, "{e1}");
        assert_eq!(weighted_flux_scri(&p.zeros_like(), 0, 0.0).unwrap(), 0.0);
        let short = NullProfile::sample(Orientation::ConstantV, 0.0, 0.0, 1.0, 3, |_| {
            Complex64::new(1.0, 0.0)
        })
        .unwrap();
        assert!(weighted_flux_scri(&short, 0, 0.0).is_err());
    }

    #[test]
    fn k_weighted_exponential() {
        let p = NullProfile::sample(Orientation::ConstantU, 0.0, 0.0, 40.0, 8000, |v| {
            Complex64::new((-v).exp(), 0.0)
        })
        .unwrap();
        assert!((k_weighted_profile(&p, 0) - 0.25).abs() < 1e-4);
    }

    #[test]
    fn hierarchy_range_is_enforced() {
        let g = GridSpec::square(0.0, 10.0, 16, Region::Exterior).unwrap();
        let f = ModeField::zeros(bh(), 0, g).unwrap();
        let seg = LineSegment::full(&g, Orientation::ConstantU, 0);
        assert!(matches!(
            p_weighted_flux(&f, &seg, 2.5, 0),
            Err(Error::HierarchyRange { .. })
        ));
        assert!(p_weighted_flux(&f, &seg, 3.0, 1).is_ok());
    }

    #[test]
    fn morawetz_of_constant_is_band_area() {
        let g = GridSpec::square(0.0, 20.0, 200, Region::Exterior).unwrap();
        let f = ExactSolution::Constant.field(&bh(), &g).unwrap();
        let val = morawetz_bulk(&f, (1.2, 1.8), (2.5, 4.0)).unwrap();
        // Cell count oracle on the same cell centres.
        let mut count = 0usize;
        for i in 0..g.n_u {
            for j in 0..g.n_v {
                let r = f.radii().cell(i, j).0;
                if (1.2..=1.8).contains(&r) || (2.5..=4.0).contains(&r) {
                    count += 1;
                }
            }
        }
        let h = g.h_u();
        assert!((val - count as f64 * h * h).abs() < 1e-9 * val);
        assert!(morawetz_bulk(&f, (1.0, 1.8), (2.5, 4.0)).is_err());
        assert!(morawetz_bulk(&f, (1.2, 2.2), (2.5, 4.0)).is_err());
    }

    #[test]
    fn report_rejects_negative_values() {
        let mut r = EnergyReport::new(0, None);
        assert!(r.insert("x", 1.0).is_ok());
        assert!(r.insert("y", -1.0).is_err());
        assert!(r.insert("z", f64::NAN).is_err());
        assert_eq!(r.get("x"), Some(1.0));
    }
}
