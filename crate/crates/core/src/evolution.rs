//! Per-mode wave equation `∂_u ∂_v phi = -V_ell(r) phi` and its diamond
//! integrator.
//!
//! A cell with corners `S = (i, j)`, `E = (i, j+1)`, `W = (i+1, j)` and
//! `N = (i+1, j+1)` is advanced by
//!
//! ```text
//! phi_N = (1 - h_u h_v V_c / 2) (phi_E + phi_W) - phi_S
//! ```
//!
//! with `V_c` taken at the cell centre. The rule is symmetric under
//! `N <-> S`, so the backward sweep uses the same expression.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::data::DataFamily;
use crate::error::{Error, Result};
use crate::fields::{
    restrict, GridSpec, ModeField, NullProfile, Orientation, RadiusTable, ScatteringDataset,
};
use crate::geometry::{BlackHole, Region};
use crate::numerics::{nth_derivative, sup_norm};

/// `V_ell(r) = (D/4)(D'/r + ell(ell+1)/r^2)`.
pub fn potential(bh: &BlackHole, ell: u32, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    Ok(potential_at(bh.mass(), ell, r, r - bh.mass()))
}

/// Potential from `r` and the separately resolved offset `r - M`.
#[inline]
pub(crate) fn potential_at(mass: f64, ell: u32, r: f64, offset: f64) -> f64 {
    let q = offset / r;
    let d = q * q;
    let d_prime = 2.0 * mass * offset / (r * r * r);
    let lambda = angular_eigenvalue(ell);
    0.25 * d * (d_prime / r + lambda / (r * r))
}

/// `ell (ell + 1)`.
#[inline]
pub fn angular_eigenvalue(ell: u32) -> f64 {
    let l = ell as f64;
    l * (l + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialTerm {
    pub bh: BlackHole,
    pub ell: u32,
}

impl PotentialTerm {
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        potential(&self.bh, self.ell, r)
    }
}

/// Precomputed cell factors `1 - h_u h_v V_c / 2` for one grid and mode.
#[derive(Debug, Clone)]
pub struct Stencil {
    bh: BlackHole,
    ell: u32,
    grid: GridSpec,
    radii: Arc<RadiusTable>,
    factors: Factors,
}

#[derive(Debug, Clone)]
enum Factors {
    Diagonal(Vec<f64>),
    Cell(Vec<f64>),
}

impl Stencil {
    pub fn new(bh: BlackHole, ell: u32, grid: GridSpec) -> Result<Self> {
        let radii = Arc::new(RadiusTable::new(&bh, &grid)?);
        Ok(Self::build(bh, ell, grid, radii, true))
    }

    /// Stencil with the potential switched off (flat 1+1 wave equation).
    pub fn free(bh: BlackHole, ell: u32, grid: GridSpec) -> Result<Self> {
        let radii = Arc::new(RadiusTable::new(&bh, &grid)?);
        Ok(Self::build(bh, ell, grid, radii, false))
    }

    fn build(
        bh: BlackHole,
        ell: u32,
        grid: GridSpec,
        radii: Arc<RadiusTable>,
        with_potential: bool,
    ) -> Self {
        let half_area = 0.5 * grid.h_u() * grid.h_v();
        let m = bh.mass();
        let factor = |r: f64, offset: f64| {
            if with_potential {
                1.0 - half_area * potential_at(m, ell, r, offset)
            } else {
                1.0
            }
        };
        let factors = if grid.is_uniform() {
            // Cell (i, j) shares the diagonal j - i with its south node.
            let count = grid.n_u + grid.n_v + 1;
            let mut f = vec![1.0; count];
            for (d, slot) in f.iter_mut().enumerate() {
                let (i, j) = if d >= grid.n_u {
                    (0, d - grid.n_u)
                } else {
                    (grid.n_u - d, 0)
                };
                if i < grid.n_u && j < grid.n_v {
                    let (r, off) = radii.cell(i, j);
                    *slot = factor(r, off);
                }
            }
            Factors::Diagonal(f)
        } else {
            let mut f = Vec::with_capacity(grid.n_u * grid.n_v);
            for i in 0..grid.n_u {
                for j in 0..grid.n_v {
                    let (r, off) = radii.cell(i, j);
                    f.push(factor(r, off));
                }
            }
            Factors::Cell(f)
        };
        Self {
            bh,
            ell,
            grid,
            radii,
            factors,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    fn factor(&self, i: usize, j: usize) -> f64 {
        match &self.factors {
            Factors::Diagonal(f) => f[j + self.grid.n_u - i],
            Factors::Cell(f) => f[i * self.grid.n_v + j],
        }
    }

    fn empty_field(&self) -> ModeField {
        ModeField::with_radii(self.bh, self.ell, self.grid, Arc::clone(&self.radii))
    }

    /// Forward sweep from samples on `u = u_min` (indexed by `j`) and
    /// `v = v_min` (indexed by `i`).
    pub fn forward_from_lines(&self, u_line: &[Complex64], v_line: &[Complex64]) -> Result<ModeField> {
        let g = self.grid;
        check_lengths(&g, u_line, v_line)?;
        let mut field = self.empty_field();
        let stride = g.n_v + 1;
        let vals = field.values_mut();
        vals[..stride].copy_from_slice(u_line);
        for (i, z) in v_line.iter().enumerate() {
            vals[i * stride] = *z;
        }
        for i in 0..g.n_u {
            let (lower, upper) = vals.split_at_mut((i + 1) * stride);
            let south = &lower[i * stride..];
            let north = &mut upper[..stride];
            for j in 0..g.n_v {
                let sum = south[j + 1] + north[j];
                north[j + 1] = sum * self.factor(i, j) - south[j];
            }
        }
        Ok(field)
    }

    /// Backward sweep from samples on `u = u_max` (indexed by `j`) and
    /// `v = v_max` (indexed by `i`).
    pub fn backward_from_lines(&self, u_line: &[Complex64], v_line: &[Complex64]) -> Result<ModeField> {
        let g = self.grid;
        check_lengths(&g, u_line, v_line)?;
        let mut field = self.empty_field();
        let stride = g.n_v + 1;
        let vals = field.values_mut();
        vals[g.n_u * stride..].copy_from_slice(u_line);
        for (i, z) in v_line.iter().enumerate() {
            vals[i * stride + g.n_v] = *z;
        }
        for i in (0..g.n_u).rev() {
            let (lower, upper) = vals.split_at_mut((i + 1) * stride);
            let south = &mut lower[i * stride..];
            let north = &upper[..stride];
            for j in (0..g.n_v).rev() {
                let sum = south[j + 1] + north[j];
                south[j] = sum * self.factor(i, j) - north[j + 1];
            }
        }
        Ok(field)
    }

    pub fn forward(&self, data: &ScatteringDataset) -> Result<ModeField> {
        let (ul, vl) = self.lines_at(data, self.grid.u_min, self.grid.v_min)?;
        self.forward_from_lines(&ul.samples, &vl.samples)
    }

    pub fn backward(&self, data: &ScatteringDataset) -> Result<ModeField> {
        let (ul, vl) = self.lines_at(data, self.grid.u_max, self.grid.v_max)?;
        self.backward_from_lines(&ul.samples, &vl.samples)
    }

    fn lines_at<'a>(
        &self,
        data: &'a ScatteringDataset,
        u_fixed: f64,
        v_fixed: f64,
    ) -> Result<(&'a NullProfile, &'a NullProfile)> {
        if data.ell != self.ell {
            return Err(Error::Incompatible(format!(
                "data for ell = {} on a stencil for ell = {}",
                data.ell, self.ell
            )));
        }
        let (ul, vl) = data.lines()?;
        let g = &self.grid;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        let fits = close(ul.fixed_coordinate, u_fixed)
            && close(vl.fixed_coordinate, v_fixed)
            && close(ul.start(), g.v_min)
            && close(ul.end(), g.v_max)
            && close(vl.start(), g.u_min)
            && close(vl.end(), g.u_max);
        if !fits {
            return Err(Error::Incompatible(format!(
                "data lines u = {}, v = {} do not match the grid boundary u = {u_fixed}, v = {v_fixed}",
                ul.fixed_coordinate, vl.fixed_coordinate
            )));
        }
        Ok((ul, vl))
    }
}

fn check_lengths(g: &GridSpec, u_line: &[Complex64], v_line: &[Complex64]) -> Result<()> {
    if u_line.len() != g.n_v + 1 || v_line.len() != g.n_u + 1 {
        return Err(Error::Incompatible(format!(
            "line data of lengths {} and {} for a {}x{} grid",
            u_line.len(),
            v_line.len(),
            g.n_u,
            g.n_v
        )));
    }
    Ok(())
}

/// Forward characteristic evolution from data on `u = u_min` and `v = v_min`.
pub fn evolve_forward(
    bh: &BlackHole,
    ell: u32,
    data: &ScatteringDataset,
    grid: &GridSpec,
) -> Result<ModeField> {
    Stencil::new(*bh, ell, *grid)?.forward(data)
}

/// Backward characteristic evolution from data on `u = u_max` and `v = v_max`.
pub fn evolve_backward(
    bh: &BlackHole,
    ell: u32,
    data: &ScatteringDataset,
    grid: &GridSpec,
) -> Result<ModeField> {
    Stencil::new(*bh, ell, *grid)?.backward(data)
}

/// Which pair of boundary lines of a grid carries data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPair {
    /// `u = u_min` and `v = v_min`.
    Past,
    /// `u = u_max` and `v = v_max`.
    Future,
}

/// Builds a dataset on a grid boundary pair from two families: `outgoing`
/// as a function of `v` on the `u = const` line and `ingoing` as a function
/// of `u` on the `v = const` line. The shared corner takes the outgoing
/// value; a mismatch larger than the corner tolerance is an error.
pub fn dataset_from_families(
    grid: &GridSpec,
    pair: BoundaryPair,
    ell: u32,
    outgoing: &DataFamily,
    ingoing: &DataFamily,
) -> Result<ScatteringDataset> {
    outgoing.validate()?;
    ingoing.validate()?;
    let (u_fixed, v_fixed) = match pair {
        BoundaryPair::Past => (grid.u_min, grid.v_min),
        BoundaryPair::Future => (grid.u_max, grid.v_max),
    };
    let ul = outgoing.profile(Orientation::ConstantU, u_fixed, grid.v_min, grid.v_max, grid.n_v)?;
    let vl = ingoing.profile(Orientation::ConstantV, v_fixed, grid.u_min, grid.u_max, grid.n_u)?;
    dataset_from_lines(grid, pair, ell, ul, vl)
}

/// Pairs two already sampled lines, assigning horizon/infinity roles by
/// region and pair.
pub fn dataset_from_lines(
    grid: &GridSpec,
    pair: BoundaryPair,
    ell: u32,
    u_line: NullProfile,
    mut v_line: NullProfile,
) -> Result<ScatteringDataset> {
    let (a, b) = match pair {
        BoundaryPair::Past => (0, 0),
        BoundaryPair::Future => (u_line.len() - 1, v_line.len() - 1),
    };
    let corner = u_line.samples[a];
    let other = v_line.samples[b];
    let scale = 1.0f64.max(corner.norm()).max(other.norm());
    if (corner - other).norm() > crate::fields::CORNER_TOLERANCE * scale {
        return Err(Error::Incompatible(format!(
            "corner values differ: {corner} vs {other}"
        )));
    }
    v_line.samples[b] = corner;
    // Exterior: u = u_max is H+, v = v_min is H-; interior: u = u_min is H+.
    let u_line_is_horizon = match (grid.region, pair) {
        (Region::Exterior, BoundaryPair::Future) => true,
        (Region::Exterior, BoundaryPair::Past) => false,
        (Region::Interior, BoundaryPair::Past) => true,
        (Region::Interior, BoundaryPair::Future) => false,
    };
    if u_line_is_horizon {
        ScatteringDataset::new(u_line, v_line, ell, None)
    } else {
        ScatteringDataset::new(v_line, u_line, ell, None)
    }
}

/// Restriction of a field to one of its boundary pairs.
pub fn boundary_dataset(field: &ModeField, pair: BoundaryPair) -> Result<ScatteringDataset> {
    let g = field.grid();
    let (i, j) = match pair {
        BoundaryPair::Past => (0, 0),
        BoundaryPair::Future => (g.n_u, g.n_v),
    };
    let ul = restrict(field, Orientation::ConstantU, i)?;
    let vl = restrict(field, Orientation::ConstantV, j)?;
    dataset_from_lines(g, pair, field.ell(), ul, vl)
}

/// Result of a backward truncation sequence.
#[derive(Debug, Clone)]
pub struct TruncationReport {
    pub truncations: Vec<f64>,
    pub fields: Vec<ModeField>,
    /// Sup-norm differences between consecutive runs on the window.
    pub differences: Vec<f64>,
    /// Comparison window `[v_min, window_end]` in `v`.
    pub window_end: f64,
}

impl TruncationReport {
    pub fn is_decreasing(&self) -> bool {
        self.differences.windows(2).all(|w| w[1] < w[0])
    }
}

/// Backward evolutions with the infinity-side data placed on `v = V_i` for
/// each truncation `V_i`, compared on a common window `v <= window_end`.
///
/// `base` fixes `u_min`, `u_max`, `v_min` and the spacing `h_v`; its `v_max`
/// and `n_v` are replaced for every truncation.
pub fn truncation_sequence(
    bh: &BlackHole,
    ell: u32,
    base: &GridSpec,
    horizon: &DataFamily,
    infinity: &DataFamily,
    truncations: &[f64],
    window_end: f64,
) -> Result<TruncationReport> {
    if truncations.is_empty() {
        return Err(Error::InvalidParameter("empty truncation list".into()));
    }
    if !truncations.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(format!(
            "truncations must be strictly increasing, got {truncations:?}"
        )));
    }
    if !(window_end > base.v_min && window_end <= truncations[0]) {
        return Err(Error::InvalidParameter(format!(
            "window end {window_end} must lie in (v_min, {}]",
            truncations[0]
        )));
    }
    let h = base.h_v();
    let grids: Vec<GridSpec> = truncations
        .iter()
        .map(|&t| {
            let n_v = ((t - base.v_min) / h).round() as usize;
            GridSpec::new((base.u_min, base.u_max), (base.v_min, t), base.n_u, n_v, base.region)
                .map(|g| GridSpec { r_floor: base.r_floor, ..g })
        })
        .collect::<Result<_>>()?;
    let mut fields = Vec::with_capacity(grids.len());
    for g in &grids {
        let data = dataset_from_families(g, BoundaryPair::Future, ell, horizon, infinity)?;
        fields.push(evolve_backward(bh, ell, &data, g)?);
    }
    let window_n = ((window_end - base.v_min) / h).round() as usize;
    let differences = fields
        .windows(2)
        .map(|w| window_difference(&w[0], &w[1], window_n))
        .collect();
    Ok(TruncationReport {
        truncations: truncations.to_vec(),
        fields,
        differences,
        window_end,
    })
}

fn window_difference(a: &ModeField, b: &ModeField, window_n: usize) -> f64 {
    let n_u = a.grid().n_u;
    let mut diff: f64 = 0.0;
    for i in 0..=n_u {
        for j in 0..=window_n {
            diff = diff.max((a.at(i, j) - b.at(i, j)).norm());
        }
    }
    diff
}

/// `T phi = (∂_u + ∂_v) phi` by second-order differences.
pub fn t_derivative(field: &ModeField) -> Result<ModeField> {
    t_power(field, 1)
}

/// `T^m phi = Σ_k C(m, k) ∂_u^k ∂_v^{m-k} phi` with direct difference
/// stencils, second order up to the grid boundary.
pub fn t_power(field: &ModeField, m: u32) -> Result<ModeField> {
    let g = *field.grid();
    let needed = (m as usize + 2) | 1;
    if g.n_u < needed.max(2) || g.n_v < needed.max(2) {
        return Err(Error::Resolution(format!(
            "T^{m} needs at least {} cells in each direction",
            needed.max(2)
        )));
    }
    if m == 0 {
        return Ok(field.clone());
    }
    let (hu, hv) = (g.h_u(), g.h_v());
    let mut out = field.map_values(|_| Complex64::new(0.0, 0.0));
    let mut binomial = 1.0;
    for k in 0..=m {
        let mut partial = field.map_values(|z| z);
        if m - k > 0 {
            for i in 0..=g.n_u {
                let start = partial.index(i, 0);
                let row = &mut partial.values_mut()[start..start + g.n_v + 1];
                let d = nth_derivative(row, hv, m - k);
                row.copy_from_slice(&d);
            }
        }
        if k > 0 {
            let mut column = vec![Complex64::new(0.0, 0.0); g.n_u + 1];
            for j in 0..=g.n_v {
                for (i, slot) in column.iter_mut().enumerate() {
                    *slot = partial.at(i, j);
                }
                let d = nth_derivative(&column, hu, k);
                for (i, dk) in d.into_iter().enumerate() {
                    let idx = partial.index(i, j);
                    partial.values_mut()[idx] = dk;
                }
            }
        }
        for (o, p) in out.values_mut().iter_mut().zip(partial.values()) {
            *o += binomial * p;
        }
        binomial = binomial * (m - k) as f64 / (k + 1) as f64;
    }
    Ok(out)
}

/// Closed-form `ell = 0` solutions used as convergence references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactSolution {
    /// `psi = 1`, `phi = r`.
    Constant,
    /// `psi = t`, `phi = r t`.
    Time,
    /// `psi = 1/(r - M)`, `phi = r/(r - M)`.
    InverseOffset,
}

impl ExactSolution {
    /// `phi` from `r`, the signed offset `r - M` and `t`.
    pub fn phi(&self, r: f64, offset: f64, t: f64) -> f64 {
        match self {
            ExactSolution::Constant => r,
            ExactSolution::Time => r * t,
            ExactSolution::InverseOffset => r / offset,
        }
    }

    pub fn field(&self, bh: &BlackHole, grid: &GridSpec) -> Result<ModeField> {
        let mut f = ModeField::zeros(*bh, 0, *grid)?;
        for i in 0..=grid.n_u {
            for j in 0..=grid.n_v {
                let r = f.radii().node_r(i, j);
                let off = f.radii().node_offset(i, j);
                let t = 0.5 * (grid.u(i) + grid.v(j));
                let k = f.index(i, j);
                f.values_mut()[k] = Complex64::new(self.phi(r, off, t), 0.0);
            }
        }
        Ok(f)
    }
}

/// Max-norm error of a forward evolution from the exact solution's past
/// boundary values, absolute and relative to the solution's max norm.
pub fn exact_solution_error(
    bh: &BlackHole,
    solution: ExactSolution,
    grid: &GridSpec,
) -> Result<(f64, f64)> {
    let exact = solution.field(bh, grid)?;
    let data = boundary_dataset(&exact, BoundaryPair::Past)?;
    let evolved = evolve_forward(bh, 0, &data, grid)?;
    let diff: Vec<Complex64> = evolved
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| a - b)
        .collect();
    let err = sup_norm(&diff);
    Ok((err, err / exact.max_abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::observed_order;

    fn bh() -> BlackHole {
        BlackHole::new(1.0).unwrap()
    }

    #[test]
    fn potential_values() {
        let b = bh();
        assert_eq!(potential(&b, 0, 1.0).unwrap(), 0.0);
        assert!((potential(&b, 0, 2.0).unwrap() - 1.0 / 128.0).abs() < 1e-16);
        assert!((potential(&b, 1, 2.0).unwrap() - 5.0 / 128.0).abs() < 1e-16);
        assert!(potential(&b, 0, 0.0).is_err());
        for ell in 0..4 {
            assert_eq!(potential(&b, ell, 1.0).unwrap(), 0.0);
        }
        // Fall-off rates.
        let (r1, r2) = (1e3, 2e3);
        let ratio0 = potential(&b, 0, r1).unwrap() / potential(&b, 0, r2).unwrap();
        let ratio1 = potential(&b, 1, r1).unwrap() / potential(&b, 1, r2).unwrap();
        assert!((ratio0 - 8.0).abs() < 0.1);
        assert!((ratio1 - 4.0).abs() < 0.1);
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let grid = GridSpec::square(0.0, 10.0, 32, Region::Exterior).unwrap();
        let data =
            dataset_from_families(&grid, BoundaryPair::Past, 1, &DataFamily::Zero, &DataFamily::Zero)
                .unwrap();
        let f = evolve_forward(&bh(), 1, &data, &grid).unwrap();
        assert_eq!(f.max_abs(), 0.0);
        let data =
            dataset_from_families(&grid, BoundaryPair::Future, 1, &DataFamily::Zero, &DataFamily::Zero)
                .unwrap();
        assert_eq!(evolve_backward(&bh(), 1, &data, &grid).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn static_solution_converges_at_second_order() {
        let b = bh();
        let errs: Vec<f64> = [64, 128]
            .iter()
            .map(|&n| {
                let g = GridSpec::square(0.0, 20.0, n, Region::Exterior).unwrap();
                exact_solution_error(&b, ExactSolution::Constant, &g).unwrap().0
            })
            .collect();
        let order = observed_order(errs[0], errs[1], 2.0);
        assert!((order - 2.0).abs() < 0.2, "order {order}, errors {errs:?}");
    }

    #[test]
    fn backward_inverts_forward() {
        let b = bh();
        let grid = GridSpec::square(0.0, 20.0, 128, Region::Exterior).unwrap();
        let bump = DataFamily::GaussianBump {
            center: 5.0,
            width: 1.0,
            amplitude: 1.0,
        };
        let data =
            dataset_from_families(&grid, BoundaryPair::Past, 2, &DataFamily::Zero, &bump).unwrap();
        let fwd = evolve_forward(&b, 2, &data, &grid).unwrap();
        let future = boundary_dataset(&fwd, BoundaryPair::Future).unwrap();
        let back = evolve_backward(&b, 2, &future, &grid).unwrap();
        let err = fwd
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, c)| (a - c).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12 * fwd.max_abs(), "err {err}");
    }

    #[test]
    fn t_derivative_of_static_and_time_solutions() {
        let b = bh();
        let grid = GridSpec::square(0.0, 10.0, 64, Region::Exterior).unwrap();
        let stat = ExactSolution::Constant.field(&b, &grid).unwrap();
        assert!(t_derivative(&stat).unwrap().max_abs() < 1e-2);
        let time = ExactSolution::Time.field(&b, &grid).unwrap();
        let t = t_derivative(&time).unwrap();
        let err = t
            .values()
            .iter()
            .zip(stat.values())
            .map(|(a, c)| (a - c).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "err {err}");
        let tiny = GridSpec::new((0.0, 1.0), (0.0, 1.0), 1, 4, Region::Exterior).unwrap();
        assert!(t_derivative(&ModeField::zeros(b, 0, tiny).unwrap()).is_err());
    }

    #[test]
    fn truncation_sequence_rejects_bad_schedules() {
        let b = bh();
        let base = GridSpec::new((0.0, 20.0), (0.0, 40.0), 40, 80, Region::Exterior).unwrap();
        let z = DataFamily::Zero;
        assert!(truncation_sequence(&b, 0, &base, &z, &z, &[80.0, 40.0], 20.0).is_err());
        let rep = truncation_sequence(&b, 0, &base, &z, &z, &[40.0, 80.0], 20.0).unwrap();
        assert!(rep.differences.iter().all(|&d| d == 0.0));
        assert!(rep.fields.iter().all(|f| f.max_abs() == 0.0));
    }
}
