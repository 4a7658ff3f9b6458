//! Double-null grids, mode fields on them, and null-line profiles.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BlackHole, Region};

/// Default interior radius floor as a fraction of `M`.
pub const DEFAULT_FLOOR_FRACTION: f64 = 0.05;

/// Tolerance for corner compatibility of characteristic data.
pub const CORNER_TOLERANCE: f64 = 1e-10;

const SPACING_TOLERANCE: f64 = 1e-12;

/// A rectangle `[u_min, u_max] x [v_min, v_max]` with `n_u x n_v` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub n_u: usize,
    pub n_v: usize,
    #[serde(default)]
    pub region: Region,
    /// Smallest admissible interior radius; `None` means `0.05 M`.
    #[serde(default)]
    pub r_floor: Option<f64>,
}

impl GridSpec {
    pub fn new(
        u: (f64, f64),
        v: (f64, f64),
        n_u: usize,
        n_v: usize,
        region: Region,
    ) -> Result<Self> {
        let grid = Self {
            u_min: u.0,
            u_max: u.1,
            v_min: v.0,
            v_max: v.1,
            n_u,
            n_v,
            region,
            r_floor: None,
        };
        grid.check_shape()?;
        Ok(grid)
    }

    /// Square exterior or interior grid on `[lo, hi]^2` with `n` cells per side.
    pub fn square(lo: f64, hi: f64, n: usize, region: Region) -> Result<Self> {
        Self::new((lo, hi), (lo, hi), n, n, region)
    }

    pub fn with_floor(mut self, r_floor: f64) -> Self {
        self.r_floor = Some(r_floor);
        self
    }

    pub fn h_u(&self) -> f64 {
        (self.u_max - self.u_min) / self.n_u as f64
    }

    pub fn h_v(&self) -> f64 {
        (self.v_max - self.v_min) / self.n_v as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        if i == self.n_u {
            self.u_max
        } else {
            self.u_min + i as f64 * self.h_u()
        }
    }

    pub fn v(&self, j: usize) -> f64 {
        if j == self.n_v {
            self.v_max
        } else {
            self.v_min + j as f64 * self.h_v()
        }
    }

    pub fn node_count(&self) -> usize {
        (self.n_u + 1) * (self.n_v + 1)
    }

    /// True when `h_u` and `h_v` agree to round-off.
    pub fn is_uniform(&self) -> bool {
        let (a, b) = (self.h_u(), self.h_v());
        (a - b).abs() <= SPACING_TOLERANCE * a.max(b)
    }

    fn check_shape(&self) -> Result<()> {
        let finite = [self.u_min, self.u_max, self.v_min, self.v_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidGrid("grid bounds must be finite".into()));
        }
        if !(self.u_min < self.u_max && self.v_min < self.v_max) {
            return Err(Error::InvalidGrid(format!(
                "need u_min < u_max and v_min < v_max, got u [{}, {}], v [{}, {}]",
                self.u_min, self.u_max, self.v_min, self.v_max
            )));
        }
        if self.n_u == 0 || self.n_v == 0 {
            return Err(Error::InvalidGrid("cell counts must be positive".into()));
        }
        Ok(())
    }

    pub fn floor(&self, bh: &BlackHole) -> f64 {
        self.r_floor
            .unwrap_or(DEFAULT_FLOOR_FRACTION * bh.mass())
    }

    /// Shape checks plus the interior radius floor.
    pub fn validate(&self, bh: &BlackHole) -> Result<()> {
        self.check_shape()?;
        if self.region == Region::Interior {
            let floor = self.floor(bh);
            if !(floor > 0.0) {
                return Err(Error::InvalidGrid(format!("r_floor must be positive, got {floor}")));
            }
            let rstar_min = 0.5 * (self.v_min - self.u_max);
            if rstar_min <= 0.0 {
                return Err(Error::RadiusFloor { r: 0.0, floor });
            }
            let r = bh.invert_tortoise(rstar_min, Region::Interior)?;
            if r < floor {
                return Err(Error::RadiusFloor { r, floor });
            }
        }
        Ok(())
    }

    /// Grid mirrored by `(u, v) -> (-v, -u)`.
    pub fn reflected(&self) -> Self {
        Self {
            u_min: -self.v_max,
            u_max: -self.v_min,
            v_min: -self.u_max,
            v_max: -self.u_min,
            n_u: self.n_v,
            n_v: self.n_u,
            ..*self
        }
    }
}

/// Radii at nodes and cell centres, computed once per grid.
///
/// On uniform grids `r` depends only on the diagonal `j - i`, and a cell
/// centre sits on the same diagonal as its lower-left node.
#[derive(Debug, Clone)]
pub struct RadiusTable {
    n_u: usize,
    n_v: usize,
    layout: Layout,
}

#[derive(Debug, Clone)]
enum Layout {
    Diagonal {
        r: Vec<f64>,
        offset: Vec<f64>,
    },
    Full {
        node_r: Vec<f64>,
        node_offset: Vec<f64>,
        cell_r: Vec<f64>,
        cell_offset: Vec<f64>,
    },
}

impl RadiusTable {
    pub fn new(bh: &BlackHole, grid: &GridSpec) -> Result<Self> {
        grid.validate(bh)?;
        let region = grid.region;
        let sign = match region {
            Region::Exterior => 1.0,
            Region::Interior => -1.0,
        };
        let m = bh.mass();
        let eval = |rstar: f64| -> Result<(f64, f64)> {
            let x = bh.invert_tortoise_offset(rstar, region)?;
            Ok((m + sign * x, sign * x))
        };
        let layout = if grid.is_uniform() {
            let h = grid.h_u();
            let base = 0.5 * (grid.v_min - grid.u_min);
            let count = grid.n_u + grid.n_v + 1;
            let mut r = Vec::with_capacity(count);
            let mut offset = Vec::with_capacity(count);
            for d in 0..count {
                let diag = d as f64 - grid.n_u as f64;
                let (ri, oi) = eval(base + 0.5 * diag * h)?;
                r.push(ri);
                offset.push(oi);
            }
            Layout::Diagonal { r, offset }
        } else {
            let (hu, hv) = (grid.h_u(), grid.h_v());
            let mut node_r = Vec::with_capacity(grid.node_count());
            let mut node_offset = Vec::with_capacity(grid.node_count());
            for i in 0..=grid.n_u {
                for j in 0..=grid.n_v {
                    let (ri, oi) = eval(0.5 * (grid.v(j) - grid.u(i)))?;
                    node_r.push(ri);
                    node_offset.push(oi);
                }
            }
            let mut cell_r = Vec::with_capacity(grid.n_u * grid.n_v);
            let mut cell_offset = Vec::with_capacity(grid.n_u * grid.n_v);
            for i in 0..grid.n_u {
                for j in 0..grid.n_v {
                    let rstar = 0.5 * ((grid.v(j) + 0.5 * hv) - (grid.u(i) + 0.5 * hu));
                    let (ri, oi) = eval(rstar)?;
                    cell_r.push(ri);
                    cell_offset.push(oi);
                }
            }
            Layout::Full {
                node_r,
                node_offset,
                cell_r,
                cell_offset,
            }
        };
        Ok(Self {
            n_u: grid.n_u,
            n_v: grid.n_v,
            layout,
        })
    }

    #[inline]
    fn diag(&self, i: usize, j: usize) -> usize {
        j + self.n_u - i
    }

    /// `r` at node `(i, j)`.
    #[inline]
    pub fn node_r(&self, i: usize, j: usize) -> f64 {
        match &self.layout {
            Layout::Diagonal { r, .. } => r[self.diag(i, j)],
            Layout::Full { node_r, .. } => node_r[i * (self.n_v + 1) + j],
        }
    }

    /// Signed `r - M` at node `(i, j)`.
    #[inline]
    pub fn node_offset(&self, i: usize, j: usize) -> f64 {
        match &self.layout {
            Layout::Diagonal { offset, .. } => offset[self.diag(i, j)],
            Layout::Full { node_offset, .. } => node_offset[i * (self.n_v + 1) + j],
        }
    }

    /// `(r, r - M)` at the centre of cell `(i, j)`, `i < n_u`, `j < n_v`.
    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> (f64, f64) {
        match &self.layout {
            Layout::Diagonal { r, offset } => {
                let d = self.diag(i, j);
                (r[d], offset[d])
            }
            Layout::Full {
                cell_r,
                cell_offset,
                ..
            } => {
                let k = i * self.n_v + j;
                (cell_r[k], cell_offset[k])
            }
        }
    }
}

/// A single spherical-harmonic mode of the radiation field `phi = r psi`
/// sampled on a double-null grid, stored row-major in `(u_i, v_j)`.
#[derive(Debug, Clone)]
pub struct ModeField {
    bh: BlackHole,
    ell: u32,
    grid: GridSpec,
    values: Vec<Complex64>,
    radii: Arc<RadiusTable>,
}

impl ModeField {
    pub fn zeros(bh: BlackHole, ell: u32, grid: GridSpec) -> Result<Self> {
        let radii = Arc::new(RadiusTable::new(&bh, &grid)?);
        Ok(Self::with_radii(bh, ell, grid, radii))
    }

    pub(crate) fn with_radii(
        bh: BlackHole,
        ell: u32,
        grid: GridSpec,
        radii: Arc<RadiusTable>,
    ) -> Self {
        Self {
            bh,
            ell,
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.node_count()],
            radii,
        }
    }

    /// Field sampled from `f(u, v)` at every node.
    pub fn from_fn(
        bh: BlackHole,
        ell: u32,
        grid: GridSpec,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let mut field = Self::zeros(bh, ell, grid)?;
        for i in 0..=grid.n_u {
            let u = grid.u(i);
            for j in 0..=grid.n_v {
                field.values[i * (grid.n_v + 1) + j] = f(u, grid.v(j));
            }
        }
        Ok(field)
    }

    /// Same grid and background, new values.
    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&z| f(z)).collect(),
            ..self.clone()
        }
    }

    pub fn black_hole(&self) -> &BlackHole {
        &self.bh
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn radii(&self) -> &RadiusTable {
        &self.radii
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.grid.n_v + 1) + j
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.index(i, j)]
    }

    /// `psi = phi / r` at node `(i, j)`.
    #[inline]
    pub fn psi_at(&self, i: usize, j: usize) -> Complex64 {
        self.at(i, j) / self.radii.node_r(i, j)
    }

    /// Copy of the sub-rectangle `[i0, i1] x [j0, j1]` as a field of its own.
    pub fn window(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Result<Self> {
        let g = &self.grid;
        if i1 > g.n_u || j1 > g.n_v {
            return Err(Error::IndexOutOfRange {
                index: i1.max(j1),
                max: g.n_u.max(g.n_v),
            });
        }
        if i0 >= i1 || j0 >= j1 {
            return Err(Error::InvalidGrid(format!(
                "empty window [{i0}, {i1}] x [{j0}, {j1}]"
            )));
        }
        let sub = GridSpec {
            u_min: g.u(i0),
            u_max: g.u(i1),
            v_min: g.v(j0),
            v_max: g.v(j1),
            n_u: i1 - i0,
            n_v: j1 - j0,
            ..*g
        };
        let mut out = Self::zeros(self.bh, self.ell, sub)?;
        for i in i0..=i1 {
            let src = self.index(i, j0);
            let dst = out.index(i - i0, 0);
            out.values[dst..dst + sub.n_v + 1]
                .copy_from_slice(&self.values[src..src + sub.n_v + 1]);
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Outgoing line `u = const`, parametrised by `v`.
    ConstantU,
    /// Ingoing line `v = const`, parametrised by `u`.
    ConstantV,
}

impl Orientation {
    pub fn transposed(self) -> Self {
        match self {
            Orientation::ConstantU => Orientation::ConstantV,
            Orientation::ConstantV => Orientation::ConstantU,
        }
    }
}

/// Samples along one null line with a uniform, increasing coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullProfile {
    pub orientation: Orientation,
    pub fixed_coordinate: f64,
    pub coordinates: Vec<f64>,
    pub samples: Vec<Complex64>,
}

impl NullProfile {
    pub fn new(
        orientation: Orientation,
        fixed_coordinate: f64,
        coordinates: Vec<f64>,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        if coordinates.len() != samples.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates for {} samples",
                coordinates.len(),
                samples.len()
            )));
        }
        if coordinates.len() < 2 {
            return Err(Error::InvalidParameter(
                "a profile needs at least two samples".into(),
            ));
        }
        if !coordinates.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "profile coordinates must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            orientation,
            fixed_coordinate,
            coordinates,
            samples,
        })
    }

    /// Profile sampled from `f` on `n + 1` points of `[start, end]`.
    pub fn sample(
        orientation: Orientation,
        fixed_coordinate: f64,
        start: f64,
        end: f64,
        n: usize,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let h = (end - start) / n as f64;
        let coordinates: Vec<f64> = (0..=n)
            .map(|k| if k == n { end } else { start + k as f64 * h })
            .collect();
        let samples = coordinates.iter().map(|&x| f(x)).collect();
        Self::new(orientation, fixed_coordinate, coordinates, samples)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); self.samples.len()],
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        let n = self.coordinates.len() - 1;
        (self.coordinates[n] - self.coordinates[0]) / n as f64
    }

    pub fn start(&self) -> f64 {
        self.coordinates[0]
    }

    pub fn end(&self) -> f64 {
        self.coordinates[self.coordinates.len() - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        crate::numerics::sup_norm(&self.samples)
    }

    /// Scales every sample by `a`.
    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&z| a * z).collect(),
            ..self.clone()
        }
    }

    /// Value at coordinate `x` by linear interpolation; `None` outside the range.
    pub fn interpolate(&self, x: f64) -> Option<Complex64> {
        let (a, b) = (self.start(), self.end());
        if x < a - 1e-12 * (1.0 + a.abs()) || x > b + 1e-12 * (1.0 + b.abs()) {
            return None;
        }
        let h = self.step();
        let s = ((x - a) / h).clamp(0.0, (self.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.len() - 2);
        let w = s - k as f64;
        Some(self.samples[k] * (1.0 - w) + self.samples[k + 1] * w)
    }
}

/// Characteristic data on a transversal pair of null lines: one outgoing
/// line stored as `horizon_profile` or `infinity_profile` according to
/// which boundary it stands in for, and one ingoing line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringDataset {
    pub horizon_profile: NullProfile,
    pub infinity_profile: NullProfile,
    pub ell: u32,
    /// Truncation parameter the data were produced at, if any.
    pub truncation: Option<f64>,
}

impl ScatteringDataset {
    pub fn new(
        horizon_profile: NullProfile,
        infinity_profile: NullProfile,
        ell: u32,
        truncation: Option<f64>,
    ) -> Result<Self> {
        let dataset = Self {
            horizon_profile,
            infinity_profile,
            ell,
            truncation,
        };
        dataset.check_corner()?;
        Ok(dataset)
    }

    /// Boundary profiles that meet only at timelike infinity, such as
    /// extracted radiation fields; no corner is checked.
    pub fn asymptotic(
        horizon_profile: NullProfile,
        infinity_profile: NullProfile,
        ell: u32,
        truncation: Option<f64>,
    ) -> Result<Self> {
        let dataset = Self {
            horizon_profile,
            infinity_profile,
            ell,
            truncation,
        };
        dataset.lines()?;
        Ok(dataset)
    }

    /// The `(u = const, v = const)` lines of the pair.
    pub fn lines(&self) -> Result<(&NullProfile, &NullProfile)> {
        use Orientation::*;
        match (
            self.horizon_profile.orientation,
            self.infinity_profile.orientation,
        ) {
            (ConstantU, ConstantV) => Ok((&self.horizon_profile, &self.infinity_profile)),
            (ConstantV, ConstantU) => Ok((&self.infinity_profile, &self.horizon_profile)),
            _ => Err(Error::Incompatible(
                "dataset lines must have opposite orientations".into(),
            )),
        }
    }

    /// Sample indices of the shared corner on the `(u-line, v-line)`.
    pub fn corner_indices(&self) -> Result<(usize, usize)> {
        let (ul, vl) = self.lines()?;
        let find = |p: &NullProfile, x: f64| -> Result<usize> {
            let tol = 1e-9 * (1.0 + x.abs());
            if (p.start() - x).abs() <= tol {
                Ok(0)
            } else if (p.end() - x).abs() <= tol {
                Ok(p.len() - 1)
            } else {
                Err(Error::Incompatible(format!(
                    "lines do not meet at an endpoint (corner coordinate {x})"
                )))
            }
        };
        Ok((find(ul, vl.fixed_coordinate)?, find(vl, ul.fixed_coordinate)?))
    }

    pub fn corner_mismatch(&self) -> Result<f64> {
        let (ul, vl) = self.lines()?;
        let (a, b) = self.corner_indices()?;
        Ok((ul.samples[a] - vl.samples[b]).norm())
    }

    fn check_corner(&self) -> Result<()> {
        let (ul, vl) = self.lines()?;
        let (a, b) = self.corner_indices()?;
        let (x, y) = (ul.samples[a], vl.samples[b]);
        let scale = 1.0f64.max(x.norm()).max(y.norm());
        if (x - y).norm() > CORNER_TOLERANCE * scale {
            return Err(Error::Incompatible(format!(
                "corner values differ: {x} vs {y}"
            )));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.horizon_profile
            .sup_norm()
            .max(self.infinity_profile.sup_norm())
    }
}

/// Copies one grid line out of a field.
pub fn restrict(field: &ModeField, orientation: Orientation, index: usize) -> Result<NullProfile> {
    let g = field.grid();
    match orientation {
        Orientation::ConstantU => {
            if index > g.n_u {
                return Err(Error::IndexOutOfRange {
                    index,
                    max: g.n_u,
                });
            }
            let coords = (0..=g.n_v).map(|j| g.v(j)).collect();
            let samples = (0..=g.n_v).map(|j| field.at(index, j)).collect();
            NullProfile::new(orientation, g.u(index), coords, samples)
        }
        Orientation::ConstantV => {
            if index > g.n_v {
                return Err(Error::IndexOutOfRange {
                    index,
                    max: g.n_v,
                });
            }
            let coords = (0..=g.n_u).map(|i| g.u(i)).collect();
            let samples = (0..=g.n_u).map(|i| field.at(i, index)).collect();
            NullProfile::new(orientation, g.v(index), coords, samples)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Outgoing line `u = u_max`.
    Horizon,
    /// Ingoing line `v = v_max`; the Cauchy-horizon side on interior grids.
    Infinity,
}

/// Two-point Richardson extrapolation of a boundary profile from runs that
/// differ only in the truncation of the far coordinate.
///
/// Each sample is extrapolated linearly in the local small parameter of the
/// boundary it approaches: `1/r` towards null infinity and `|r - M|`
/// towards a horizon.
pub fn extract_radiation(coarse: &ModeField, fine: &ModeField, side: Side) -> Result<NullProfile> {
    if coarse.ell() != fine.ell() {
        return Err(Error::Incompatible(format!(
            "mode mismatch: ell {} vs {}",
            coarse.ell(),
            fine.ell()
        )));
    }
    if coarse.black_hole() != fine.black_hole() {
        return Err(Error::Incompatible("different backgrounds".into()));
    }
    let (gc, gf) = (coarse.grid(), fine.grid());
    if gc.region != gf.region {
        return Err(Error::Incompatible("different regions".into()));
    }
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()));
    let (orientation, line_c, line_f, start_ok, step_ok, far_ok) = match side {
        Side::Horizon => (
            Orientation::ConstantU,
            gc.n_u,
            gf.n_u,
            same(gc.v_min, gf.v_min),
            same(gc.h_v(), gf.h_v()),
            gf.u_max > gc.u_max,
        ),
        Side::Infinity => (
            Orientation::ConstantV,
            gc.n_v,
            gf.n_v,
            same(gc.u_min, gf.u_min),
            same(gc.h_u(), gf.h_u()),
            gf.v_max > gc.v_max,
        ),
    };
    if !(start_ok && step_ok) {
        return Err(Error::Incompatible(
            "runs must share the start and spacing of the extracted coordinate".into(),
        ));
    }
    if !far_ok {
        return Err(Error::Incompatible(
            "second run must have the larger truncation".into(),
        ));
    }
    let pc = restrict(coarse, orientation, line_c)?;
    let pf = restrict(fine, orientation, line_f)?;
    let n = pc.len().min(pf.len());
    let towards_infinity = side == Side::Infinity && gc.region == Region::Exterior;
    let abscissa = |field: &ModeField, line: usize, k: usize| -> f64 {
        let (i, j) = match orientation {
            Orientation::ConstantU => (line, k),
            Orientation::ConstantV => (k, line),
        };
        if towards_infinity {
            1.0 / field.radii().node_r(i, j)
        } else {
            field.radii().node_offset(i, j).abs()
        }
    };
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let x1 = abscissa(coarse, line_c, k);
        let x2 = abscissa(fine, line_f, k);
        let (f1, f2) = (pc.samples[k], pf.samples[k]);
        let value = if (x1 - x2).abs() > 0.0 {
            (f2 * x1 - f1 * x2) / (x1 - x2)
        } else {
            f2
        };
        samples.push(value);
    }
    NullProfile::new(orientation, pf.fixed_coordinate, pc.coordinates[..n].to_vec(), samples)
}
