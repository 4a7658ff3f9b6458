//! Quasinormal-type modes `phi = e^{-i omega t} R(r_*)` with prescribed
//! asymptotic amplitudes on the event horizon and null infinity, and
//! regularity probes for time-integrated data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use crate::data::time_integral_profile;
use crate::data::DataFamily;
use crate::error::{Error, Result};
use crate::evolution::{dataset_from_families, potential_at, t_derivative, t_power, BoundaryPair, Stencil};
use crate::fields::{GridSpec, ModeField, NullProfile, Orientation, ScatteringDataset};
use crate::geometry::{BlackHole, Region};
use crate::numerics::derivative;

/// Fraction of each grid direction excluded from mode diagnostics.
pub const MODE_MARGIN: f64 = 0.1;

/// Frequency and asymptotic amplitudes of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub omega: Complex64,
    /// Limit of the profile at the event horizon.
    pub f_horizon: Complex64,
    /// Limit of the profile at null infinity.
    pub f_infinity: Complex64,
}

impl ModeSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [
            self.omega.re,
            self.omega.im,
            self.f_horizon.re,
            self.f_horizon.im,
            self.f_infinity.re,
            self.f_infinity.im,
        ];
        if !parts.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("mode parameters must be finite".into()));
        }
        if !(self.omega.im < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "modes need Im(omega) < 0, got omega = {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Future-boundary mode data with the null-infinity amplitude rescaled to
/// match the horizon line at the shared corner.
#[derive(Debug, Clone)]
pub struct ModeData {
    pub dataset: ScatteringDataset,
    /// Factor applied to the null-infinity amplitude.
    pub infinity_scale: Complex64,
}

/// `f_H e^{-i omega v}` on `u = u_max` and `s f_I e^{-i omega u}` on
/// `v = v_max`, with `s` fixed by corner continuity.
pub fn mode_data(grid: &GridSpec, ell: u32, spec: &ModeSpec) -> Result<ModeData> {
    spec.validate()?;
    if grid.region != Region::Exterior {
        return Err(Error::Unsupported("mode data live on exterior grids".into()));
    }
    let i = Complex64::i();
    let corner_h = spec.f_horizon * (-i * spec.omega * grid.v_max).exp();
    let corner_i = spec.f_infinity * (-i * spec.omega * grid.u_max).exp();
    let scale = if corner_i.norm() > 0.0 {
        corner_h / corner_i
    } else if corner_h.norm() <= crate::fields::CORNER_TOLERANCE {
        Complex64::new(1.0, 0.0)
    } else {
        return Err(Error::Incompatible(format!(
            "zero null-infinity amplitude cannot match the horizon corner value {corner_h}"
        )));
    };
    let horizon = DataFamily::ExponentialMode {
        omega: spec.omega,
        amplitude: spec.f_horizon,
    };
    let infinity = DataFamily::ExponentialMode {
        omega: spec.omega,
        amplitude: spec.f_infinity * scale,
    };
    let dataset = dataset_from_families(grid, BoundaryPair::Future, ell, &horizon, &infinity)?;
    Ok(ModeData {
        dataset,
        infinity_scale: scale,
    })
}

/// Exact radial function of a mode sampled on the `r_*` lattice of a grid.
#[derive(Debug, Clone)]
pub struct RadialTrace {
    pub rstar_min: f64,
    /// Lattice spacing in `r_*` (half the null spacing).
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl RadialTrace {
    pub fn rstar(&self, k: usize) -> f64 {
        self.rstar_min + k as f64 * self.step
    }
}

fn check_uniform(grid: &GridSpec) -> Result<f64> {
    let (hu, hv) = (grid.h_u(), grid.h_v());
    if (hu - hv).abs() > 1e-12 * hu {
        return Err(Error::InvalidGrid(format!(
            "modes need equal null spacings, got {hu} and {hv}"
        )));
    }
    Ok(hu)
}

/// `R'' = (4 V - omega^2) R` by RK4 on the lattice `r_* = lo + k h/2`,
/// seeded with a pure plane wave at one end; returns the samples and `R'`
/// at the far end.
fn radial_solution(
    bh: &BlackHole,
    ell: u32,
    omega: Complex64,
    lo: f64,
    step: f64,
    count: usize,
    from_left: bool,
) -> Result<(Vec<Complex64>, Complex64)> {
    let m = bh.mass();
    let coefficient = |rstar: f64| -> Result<Complex64> {
        let offset = bh.invert_tortoise_offset(rstar, Region::Exterior)?;
        let v = potential_at(m, ell, m + offset, offset);
        Ok(4.0 * v - omega * omega)
    };
    let i = Complex64::i();
    let hi = lo + (count - 1) as f64 * step;
    let (start, h, sign) = if from_left { (lo, step, -1.0) } else { (hi, -step, 1.0) };
    let wave = (sign * i * omega * start).exp();
    let mut y = [wave, sign * i * omega * wave];
    let mut out = vec![Complex64::new(0.0, 0.0); count];
    let slot = |k: usize| if from_left { k } else { count - 1 - k };
    out[slot(0)] = y[0];
    let mut q0 = coefficient(start)?;
    for k in 0..count - 1 {
        let x = start + k as f64 * h;
        let qm = coefficient(x + 0.5 * h)?;
        let q1 = coefficient(x + h)?;
        let f = |y: [Complex64; 2], q: Complex64| [y[1], q * y[0]];
        let k1 = f(y, q0);
        let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]], qm);
        let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]], qm);
        let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]], q1);
        for c in 0..2 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        out[slot(k + 1)] = y[0];
        q0 = q1;
    }
    Ok((out, y[1]))
}

/// Local amplitudes `(c_+, c_-)` of `R = c_+ e^{i omega r_*} + c_- e^{-i omega r_*}`.
fn local_amplitudes(r: Complex64, dr: Complex64, omega: Complex64, rstar: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let ratio = dr / (i * omega);
    let plus = 0.5 * (r + ratio) * (-i * omega * rstar).exp();
    let minus = 0.5 * (r - ratio) * (i * omega * rstar).exp();
    (plus, minus)
}

/// Radial function whose local amplitudes are `f_horizon` (ingoing into the
/// horizon) at the left end and `f_infinity` (outgoing) at the right end of
/// the grid's `r_*` range.
pub fn radial_trace(bh: &BlackHole, ell: u32, grid: &GridSpec, spec: &ModeSpec) -> Result<RadialTrace> {
    spec.validate()?;
    let h = check_uniform(grid)?;
    let lo = 0.5 * (grid.v_min - grid.u_max);
    let step = 0.5 * h;
    let count = grid.n_u + grid.n_v + 1;
    let (left, left_slope) = radial_solution(bh, ell, spec.omega, lo, step, count, true)?;
    let (right, right_slope) = radial_solution(bh, ell, spec.omega, lo, step, count, false)?;
    let hi = lo + (count - 1) as f64 * step;
    // Left solution has c_- = 1, c_+ = 0 at lo; right has c_+ = 1, c_- = 0 at hi.
    let a = local_amplitudes(right[0], right_slope, spec.omega, lo).1;
    let b = local_amplitudes(left[count - 1], left_slope, spec.omega, hi).0;
    let det = Complex64::new(1.0, 0.0) - a * b;
    if det.norm() < 1e-12 {
        return Err(Error::Degenerate(format!(
            "asymptotic amplitudes are not independent (det = {det})"
        )));
    }
    let alpha = (spec.f_horizon - a * spec.f_infinity) / det;
    let beta = (spec.f_infinity - b * spec.f_horizon) / det;
    let values = left
        .iter()
        .zip(&right)
        .map(|(l, r)| alpha * l + beta * r)
        .collect();
    Ok(RadialTrace {
        rstar_min: lo,
        step,
        values,
    })
}

/// Profile `f(r_*) = phi e^{i omega (t - |r_*|)}` along a constant-`t` slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceProfile {
    pub t: f64,
    pub rstar: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Diagnostics of a constructed mode.
#[derive(Debug, Clone)]
pub struct ModeOutcome {
    pub field: ModeField,
    /// `sup |T phi + i omega phi| / sup |phi|` away from the grid edges.
    pub residual: f64,
    /// Largest relative deviation of `phi(t2)/phi(t1)` from
    /// `e^{-i omega (t2 - t1)}` along the diagonals of two slices.
    pub slice_ratio_defect: f64,
    pub profile: SliceProfile,
    /// Profile values at the horizon and null-infinity ends of the slice.
    pub end_values: (Complex64, Complex64),
}

/// Mode with the given asymptotic amplitudes: its exact traces on the
/// future boundary lines are evolved backward, and the result is checked
/// against the mode equation `T phi = -i omega phi`.
pub fn construct_mode(bh: &BlackHole, ell: u32, grid: &GridSpec, spec: &ModeSpec) -> Result<ModeOutcome> {
    grid.validate(bh)?;
    if grid.region != Region::Exterior {
        return Err(Error::Unsupported("modes are constructed on exterior grids".into()));
    }
    let trace = radial_trace(bh, ell, grid, spec)?;
    let g = *grid;
    let time = |i: usize, j: usize| 0.5 * (g.u(i) + g.v(j));
    let exact = |i: usize, j: usize| -> Complex64 {
        let k = j + g.n_u - i;
        (-Complex64::i() * spec.omega * time(i, j)).exp() * trace.values[k]
    };
    let u_line: Vec<Complex64> = (0..=g.n_v).map(|j| exact(g.n_u, j)).collect();
    let v_line: Vec<Complex64> = (0..=g.n_u).map(|i| exact(i, g.n_v)).collect();
    let field = Stencil::new(*bh, ell, g)?.backward_from_lines(&u_line, &v_line)?;
    if !field.is_finite() {
        return Err(Error::Resolution("mode evolution overflowed".into()));
    }
    let residual = mode_residual(&field, spec.omega)?;
    let slice_ratio_defect = slice_ratio_defect(&field, spec.omega)?;
    let mid = (g.n_u + g.n_v) / 2;
    let profile = slice_profile(&field, spec.omega, mid);
    let end_values = (
        *profile.values.first().expect("nonempty slice"),
        *profile.values.last().expect("nonempty slice"),
    );
    Ok(ModeOutcome {
        field,
        residual,
        slice_ratio_defect,
        profile,
        end_values,
    })
}

fn margins(n: usize) -> (usize, usize) {
    let m = (MODE_MARGIN * n as f64).ceil() as usize;
    (m, n - m)
}

/// `sup |T phi + i omega phi| / sup |phi|` over the grid minus its margins.
pub fn mode_residual(field: &ModeField, omega: Complex64) -> Result<f64> {
    let g = field.grid();
    let t = t_derivative(field)?;
    let (i0, i1) = margins(g.n_u);
    let (j0, j1) = margins(g.n_v);
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in i0..=i1 {
        for j in j0..=j1 {
            let phi = field.at(i, j);
            num = num.max((t.at(i, j) + Complex64::i() * omega * phi).norm());
            den = den.max(phi.norm());
        }
    }
    Ok(if den > 0.0 { num / den } else { num })
}

/// Largest relative deviation of `phi(t2, r_*)/phi(t1, r_*)` from
/// `e^{-i omega (t2 - t1)}` for two slices inside the margins.
pub fn slice_ratio_defect(field: &ModeField, omega: Complex64) -> Result<f64> {
    let g = field.grid();
    let (i0, i1) = margins(g.n_u);
    let (j0, j1) = margins(g.n_v);
    let total = g.n_u + g.n_v;
    let s1 = (0.4 * total as f64).round() as usize;
    let mut s2 = (0.6 * total as f64).round() as usize;
    if (s2 - s1) % 2 == 1 {
        s2 += 1;
    }
    let dt = 0.5 * (s2 - s1) as f64 * g.h_u();
    let expected = (-Complex64::i() * omega * dt).exp();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i_a in i0..=i1 {
        if i_a > s1 {
            break;
        }
        let j_a = s1 - i_a;
        let shift = (s2 - s1) / 2;
        let (i_b, j_b) = (i_a + shift, j_a + shift);
        let inside = |i: usize, j: usize| i >= i0 && i <= i1 && j >= j0 && j <= j1;
        if !(inside(i_a, j_a) && inside(i_b, j_b)) {
            continue;
        }
        let a = field.at(i_a, j_a);
        if a.norm() == 0.0 {
            continue;
        }
        let ratio = field.at(i_b, j_b) / a;
        worst = worst.max((ratio - expected).norm() / expected.norm());
        count += 1;
    }
    if count == 0 {
        return Err(Error::Resolution("no slice pairs inside the margins".into()));
    }
    Ok(worst)
}

/// `f = phi e^{i omega (t - |r_*|)}` on the slice of nodes with `i + j = s`.
pub fn slice_profile(field: &ModeField, omega: Complex64, s: usize) -> SliceProfile {
    let g = field.grid();
    let mut rstar = Vec::new();
    let mut values = Vec::new();
    let mut t = 0.0;
    // Walk from the horizon end (large u) to the null-infinity end.
    for i in (0..=g.n_u.min(s)).rev() {
        let j = s - i;
        if j > g.n_v {
            continue;
        }
        let (u, v) = (g.u(i), g.v(j));
        t = 0.5 * (u + v);
        let x = 0.5 * (v - u);
        rstar.push(x);
        values.push(field.at(i, j) * (Complex64::i() * omega * (t - x.abs())).exp());
    }
    SliceProfile { t, rstar, values }
}

/// Parameters of a regularity probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityConfig {
    pub mass: f64,
    pub ell: u32,
    pub grid: GridSpec,
    /// Future horizon data before time integration.
    pub family: DataFamily,
    /// Number of time integrations applied to the data.
    pub order: u32,
    /// Radial window `[r_lo, r_hi]` of the sums.
    pub radii: (f64, f64),
    /// Advanced-time window `[v_lo, v_hi]` of the sums.
    pub advanced: (f64, f64),
}

/// Output of a regularity probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `∫∫ |∂_r^k T^n phi|^2 dr dv` over the window for `k = 0..=n+1`, with
    /// `∂_r` taken at fixed `v`.
    pub sums: Vec<f64>,
    /// Relative sup difference on the window between `T^n` of the
    /// time-integrated run and the run from the original data.
    pub consistency_defect: f64,
    pub window_nodes: usize,
}

/// Evolves `T^{-n}` of horizon data backward, differentiates `n` times in
/// `T`, and sums radial derivatives over a window near the horizon.
pub fn regularity_probe(cfg: &RegularityConfig) -> Result<RegularityReport> {
    let bh = BlackHole::new(cfg.mass)?;
    let g = cfg.grid;
    g.validate(&bh)?;
    if g.region != Region::Exterior {
        return Err(Error::Unsupported("regularity probes run on exterior grids".into()));
    }
    let integrated = cfg.family.time_integral(cfg.order)?;
    let stencil = Stencil::new(bh, cfg.ell, g)?;
    let run = |family: &DataFamily| -> Result<ModeField> {
        let data = dataset_from_families(&g, BoundaryPair::Future, cfg.ell, family, &DataFamily::Zero)?;
        stencil.backward(&data)
    };
    let lifted = t_power(&run(&integrated)?, cfg.order)?;
    let direct = run(&cfg.family)?;
    let (r_lo, r_hi) = cfg.radii;
    let (v_lo, v_hi) = cfg.advanced;
    if !(r_lo > bh.mass() && r_hi > r_lo && v_hi > v_lo) {
        return Err(Error::InvalidParameter(format!(
            "window needs M < r_lo < r_hi and v_lo < v_hi, got {:?} and {:?}",
            cfg.radii, cfg.advanced
        )));
    }
    let (hu, hv) = (g.h_u(), g.h_v());
    let edge = cfg.order as usize + 4;
    let mut sums = vec![0.0; cfg.order as usize + 2];
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut nodes = 0;
    for j in 0..=g.n_v {
        let v = g.v(j);
        if v < v_lo || v > v_hi {
            continue;
        }
        let column: Vec<Complex64> = (0..=g.n_u).map(|i| lifted.at(i, j)).collect();
        // ∂_r at fixed v is -(2/D) ∂_u.
        let to_r: Vec<f64> = (0..=g.n_u)
            .map(|i| {
                let (r, off) = (lifted.radii().node_r(i, j), lifted.radii().node_offset(i, j));
                -2.0 * (r / off) * (r / off)
            })
            .collect();
        let mut derivs = vec![column];
        for _ in 0..=cfg.order {
            let last = derivs.last().expect("nonempty");
            let d = derivative(last, hu);
            derivs.push(d.iter().zip(&to_r).map(|(z, w)| z * *w).collect());
        }
        for i in edge..=g.n_u.saturating_sub(edge) {
            let r = lifted.radii().node_r(i, j);
            if r < r_lo || r > r_hi {
                continue;
            }
            let off = lifted.radii().node_offset(i, j);
            let dr_du = 0.5 * (off / r) * (off / r);
            for (k, d) in derivs.iter().enumerate() {
                sums[k] += d[i].norm_sqr() * dr_du * hu * hv;
            }
            worst = worst.max((lifted.at(i, j) - direct.at(i, j)).norm());
            scale = scale.max(direct.at(i, j).norm());
            nodes += 1;
        }
    }
    if nodes == 0 {
        return Err(Error::Resolution("the window contains no grid nodes".into()));
    }
    Ok(RegularityReport {
        sums,
        consistency_defect: if scale > 0.0 { worst / scale } else { worst },
        window_nodes: nodes,
    })
}

/// Horizon profile of a mode's data, for reference plots.
pub fn horizon_mode_profile(grid: &GridSpec, spec: &ModeSpec) -> Result<NullProfile> {
    spec.validate()?;
    DataFamily::ExponentialMode {
        omega: spec.omega,
        amplitude: spec.f_horizon,
    }
    .profile(Orientation::ConstantU, grid.u_max, grid.v_min, grid.v_max, grid.n_v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ModeSpec {
        ModeSpec {
            omega: Complex64::new(0.5, -0.25),
            f_horizon: Complex64::new(1.0, 0.0),
            f_infinity: Complex64::new(0.5, 0.0),
        }
    }

    fn bh() -> BlackHole {
        BlackHole::new(1.0).unwrap()
    }

    #[test]
    fn growing_modes_are_rejected() {
        let mut s = spec();
        s.omega = Complex64::new(0.5, 0.1);
        assert!(s.validate().is_err());
    }

    #[test]
    fn mode_data_matches_at_the_corner() {
        let g = GridSpec::square(0.0, 20.0, 40, Region::Exterior).unwrap();
        let d = mode_data(&g, 0, &spec()).unwrap();
        assert!(d.dataset.corner_mismatch().unwrap() < 1e-12);
        let mut zero_i = spec();
        zero_i.f_infinity = Complex64::new(0.0, 0.0);
        assert!(mode_data(&g, 0, &zero_i).is_err());
    }

    #[test]
    fn free_trace_is_the_plane_wave_pair() {
        // Far from the black hole the potential is negligible, so the trace
        // approaches f_H e^{-i omega r_*} on the left.
        let g = GridSpec::square(0.0, 40.0, 400, Region::Exterior).unwrap();
        let t = radial_trace(&bh(), 0, &g, &spec()).unwrap();
        let lo = t.rstar(0);
        let w = Complex64::i() * spec().omega;
        let expected = spec().f_horizon * (-w * lo).exp();
        assert!((t.values[0] - expected).norm() / expected.norm() < 1e-2);
    }

    #[test]
    fn constructed_mode_satisfies_the_mode_equation() {
        let mut last = f64::INFINITY;
        for n in [128, 256] {
            let g = GridSpec::square(0.0, 40.0, n, Region::Exterior).unwrap();
            let m = construct_mode(&bh(), 1, &g, &spec()).unwrap();
            assert!(m.residual < last);
            last = m.residual;
            assert!(m.slice_ratio_defect < 0.05, "{}", m.slice_ratio_defect);
        }
        assert!(last < 1e-2, "{last}");
    }

    #[test]
    fn regularity_probe_reports_finite_sums() {
        let g = GridSpec::square(0.0, 40.0, 200, Region::Exterior).unwrap();
        let cfg = RegularityConfig {
            mass: 1.0,
            ell: 0,
            grid: g,
            family: DataFamily::ExponentialTail {
                rate: 1.0,
                amplitude: 1.0,
            },
            order: 1,
            radii: (1.2, 1.6),
            advanced: (10.0, 25.0),
        };
        let r = regularity_probe(&cfg).unwrap();
        assert_eq!(r.sums.len(), 3);
        assert!(r.sums.iter().all(|s| s.is_finite() && *s > 0.0));
        assert!(r.consistency_defect < 0.05, "{}", r.consistency_defect);
    }
}
