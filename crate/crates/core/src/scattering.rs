//! Scattering maps between characteristic data sets: forward and backward
//! maps between an initial pair and the future boundary, the full past to
//! future map, and the interior map from the event horizon to the Cauchy
//! horizon.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::data::DataFamily;
use crate::energies::{
    cauchy_horizon_sums, energy_balance_defect, flux_balance, horizon_localized_n_energy,
    infinity_localized_energy, k_weighted_flux, k_weighted_profile, profile_flux, sigma0_norm,
    weighted_flux_horizon, weighted_flux_scri, AngularWeight, Diamond,
    EnergyReport, InitialPair, LineSegment,
};
use crate::error::{Error, Result};
use crate::evolution::{
    boundary_dataset, dataset_from_families, truncation_sequence, BoundaryPair, Stencil,
};
use crate::fields::{
    extract_radiation, restrict, GridSpec, ModeField, NullProfile, Orientation,
    ScatteringDataset, Side,
};
use crate::geometry::{BlackHole, Region};
use crate::numerics::trapezoid;

/// Truncations used when a run does not list its own.
pub const DEFAULT_TRUNCATIONS: [f64; 3] = [40.0, 80.0, 160.0];

fn infinity_side() -> Side {
    Side::Infinity
}

/// A data family together with the boundary line it is placed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    #[serde(flatten)]
    pub family: DataFamily,
    #[serde(default = "infinity_side")]
    pub side: Side,
}

impl DataSpec {
    pub fn new(family: DataFamily, side: Side) -> Self {
        Self { family, side }
    }

    /// `(outgoing, ingoing)` families for a boundary pair of a grid.
    fn families(&self, region: Region, pair: BoundaryPair) -> (DataFamily, DataFamily) {
        let u_line_is_horizon = matches!(
            (region, pair),
            (Region::Exterior, BoundaryPair::Future) | (Region::Interior, BoundaryPair::Past)
        );
        if (self.side == Side::Horizon) == u_line_is_horizon {
            (self.family.clone(), DataFamily::Zero)
        } else {
            (DataFamily::Zero, self.family.clone())
        }
    }

    /// `(horizon, infinity)` families.
    fn by_role(&self) -> (DataFamily, DataFamily) {
        match self.side {
            Side::Horizon => (self.family.clone(), DataFamily::Zero),
            Side::Infinity => (DataFamily::Zero, self.family.clone()),
        }
    }

    pub fn dataset(&self, grid: &GridSpec, pair: BoundaryPair, ell: u32) -> Result<ScatteringDataset> {
        let (outgoing, ingoing) = self.families(grid.region, pair);
        dataset_from_families(grid, pair, ell, &outgoing, &ingoing)
    }
}

/// Parameters shared by the scattering-map runs.
///
/// `grid` fixes the spacing and the near ends `u_min`, `v_min`; the far
/// ends used by a run come from `truncations` (or from `grid` when the list
/// is empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRunConfig {
    pub mass: f64,
    pub ell: u32,
    pub grid: GridSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub truncations: Vec<f64>,
    #[serde(default)]
    pub window: Option<f64>,
}

impl MapRunConfig {
    pub fn new(mass: f64, ell: u32, grid: GridSpec, data: DataSpec) -> Self {
        Self {
            mass,
            ell,
            grid,
            data,
            truncations: Vec::new(),
            window: None,
        }
    }

    pub fn with_truncations(mut self, truncations: Vec<f64>) -> Self {
        self.truncations = truncations;
        self
    }

    pub fn with_window(mut self, window: f64) -> Self {
        self.window = Some(window);
        self
    }

    pub fn black_hole(&self) -> Result<BlackHole> {
        BlackHole::new(self.mass)
    }

    pub fn validate(&self) -> Result<()> {
        let bh = self.black_hole()?;
        self.grid.validate(&bh)?;
        self.data.family.validate()?;
        if !self.truncations.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidParameter("truncations must be finite".into()));
        }
        if !self.truncations.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(format!(
                "truncations must be strictly increasing, got {:?}",
                self.truncations
            )));
        }
        Ok(())
    }

    /// The two largest truncations, or the grid extent and its double.
    fn extraction_pair(&self, default: f64) -> (f64, f64) {
        match self.truncations.as_slice() {
            [] => (default, 2.0 * default - self.near_end()),
            [t] => (*t, 2.0 * t - self.near_end()),
            ts => (ts[ts.len() - 2], ts[ts.len() - 1]),
        }
    }

    fn near_end(&self) -> f64 {
        match self.grid.region {
            Region::Exterior => self.grid.u_min.min(self.grid.v_min),
            Region::Interior => self.grid.v_min,
        }
    }
}

/// Copy of `grid` with new far ends and the same spacing.
pub fn resized(grid: &GridSpec, u_max: f64, v_max: f64) -> Result<GridSpec> {
    let count = |lo: f64, hi: f64, h: f64| -> Result<usize> {
        let n = (hi - lo) / h;
        let rounded = n.round();
        if !(rounded >= 1.0) || (n - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "extent [{lo}, {hi}] is not a whole number of cells of width {h}"
            )));
        }
        Ok(rounded as usize)
    };
    let n_u = count(grid.u_min, u_max, grid.h_u())?;
    let n_v = count(grid.v_min, v_max, grid.h_v())?;
    let g = GridSpec::new((grid.u_min, u_max), (grid.v_min, v_max), n_u, n_v, grid.region)?;
    Ok(GridSpec {
        r_floor: grid.r_floor,
        ..g
    })
}

/// First half (by coordinate) of a profile, the part where a two-point
/// extrapolation is reliable.
pub fn leading_half(profile: &NullProfile) -> Result<NullProfile> {
    let n = profile.len().div_ceil(2).max(2).min(profile.len());
    NullProfile::new(
        profile.orientation,
        profile.fixed_coordinate,
        profile.coordinates[..n].to_vec(),
        profile.samples[..n].to_vec(),
    )
}

/// Result of a forward or full scattering run.
#[derive(Debug, Clone)]
pub struct MapOutcome {
    /// Extracted boundary profiles.
    pub dataset: ScatteringDataset,
    pub report: EnergyReport,
}

struct ForwardRuns {
    coarse: ModeField,
    fine: ModeField,
    horizon: NullProfile,
    infinity: NullProfile,
}

fn forward_runs(cfg: &MapRunConfig) -> Result<ForwardRuns> {
    cfg.validate()?;
    if cfg.grid.region != Region::Exterior {
        return Err(Error::Unsupported(
            "forward maps run on exterior grids; use the interior map".into(),
        ));
    }
    let bh = cfg.black_hole()?;
    let (t1, t2) = cfg.extraction_pair(cfg.grid.u_max.max(cfg.grid.v_max));
    let run = |t: f64| -> Result<ModeField> {
        let g = resized(&cfg.grid, t, t)?;
        let data = cfg.data.dataset(&g, BoundaryPair::Past, cfg.ell)?;
        Stencil::new(bh, cfg.ell, g)?.forward(&data)
    };
    let coarse = run(t1)?;
    let fine = run(t2)?;
    let horizon = extract_radiation(&coarse, &fine, Side::Horizon)?;
    let infinity = extract_radiation(&coarse, &fine, Side::Infinity)?;
    Ok(ForwardRuns {
        coarse,
        fine,
        horizon,
        infinity,
    })
}

fn boundary_energy(
    report: &mut EnergyReport,
    horizon: &NullProfile,
    infinity: &NullProfile,
    ell: u32,
    grid: &GridSpec,
) -> Result<f64> {
    let e_scri = weighted_flux_scri(infinity, ell, grid.u_min.max(0.0))?;
    let e_hor = weighted_flux_horizon(horizon, ell, grid.v_min.max(0.0))?;
    report.insert("weighted_flux_scri", e_scri)?;
    report.insert("weighted_flux_horizon", e_hor)?;
    report.insert("t_flux_scri", profile_flux(infinity))?;
    report.insert("t_flux_horizon", profile_flux(horizon))?;
    Ok(e_scri + e_hor)
}

/// Forward map from data on the initial pair `u = u_min`, `v = v_min` to
/// the radiation fields on the future event horizon and future null
/// infinity, extracted from two runs of increasing truncation.
pub fn forward_map(cfg: &MapRunConfig) -> Result<MapOutcome> {
    let runs = forward_runs(cfg)?;
    let mut report = EnergyReport::new(cfg.ell, Some(*runs.coarse.grid()));
    let input = sigma0_norm(&runs.fine, &InitialPair::past())?;
    report.insert("sigma0_norm", input)?;
    report.describe("sigma0_norm", "initial pair u = u_min, v = v_min");
    let output = boundary_energy(
        &mut report,
        &leading_half(&runs.horizon)?,
        &leading_half(&runs.infinity)?,
        cfg.ell,
        runs.coarse.grid(),
    )?;
    report.insert("weighted_output", output)?;
    report.insert("output_input_ratio", output / input.max(f64::MIN_POSITIVE))?;
    let dataset = ScatteringDataset::asymptotic(
        runs.horizon,
        runs.infinity,
        cfg.ell,
        Some(runs.fine.grid().u_max),
    )?;
    Ok(MapOutcome { dataset, report })
}

/// Full scattering map from the past boundary pair to the future one.
/// Besides the extracted future profiles, the report carries the T-flux
/// balance of the rectangle and the time-reflection defect.
pub fn scattering_map(cfg: &MapRunConfig) -> Result<MapOutcome> {
    let runs = forward_runs(cfg)?;
    let grid = *runs.coarse.grid();
    let mut report = EnergyReport::new(cfg.ell, Some(grid));
    let diamond = Diamond::full(&grid);
    let (flux_in, flux_out) = flux_balance(&runs.coarse, &diamond)?;
    report.insert("t_flux_past", flux_in)?;
    report.insert("t_flux_future", flux_out)?;
    report.insert("balance_defect", energy_balance_defect(&runs.coarse, &diamond)?)?;
    let data = cfg.data.dataset(&grid, BoundaryPair::Past, cfg.ell)?;
    report.insert(
        "reflection_defect",
        time_reflection_defect(&cfg.black_hole()?, cfg.ell, &grid, &data)?,
    )?;
    boundary_energy(
        &mut report,
        &leading_half(&runs.horizon)?,
        &leading_half(&runs.infinity)?,
        cfg.ell,
        &grid,
    )?;
    let dataset = ScatteringDataset::asymptotic(
        runs.horizon,
        runs.infinity,
        cfg.ell,
        Some(runs.fine.grid().u_max),
    )?;
    Ok(MapOutcome { dataset, report })
}

/// Result of a backward map.
#[derive(Debug, Clone)]
pub struct BackwardOutcome {
    /// Restriction of the most truncated run to its initial pair.
    pub dataset: ScatteringDataset,
    pub report: EnergyReport,
    pub truncations: Vec<f64>,
    /// Sup differences of consecutive runs on the comparison window.
    pub differences: Vec<f64>,
    pub window_end: f64,
}

impl BackwardOutcome {
    pub fn is_cauchy(&self) -> bool {
        self.differences.windows(2).all(|w| w[1] < w[0])
    }
}

/// Backward map from future data (horizon line `u = u_max`, null-infinity
/// stand-in `v = V`) to the initial pair, as the limit of a sequence of
/// truncations `V`.
pub fn backward_map(cfg: &MapRunConfig) -> Result<BackwardOutcome> {
    cfg.validate()?;
    if cfg.grid.region != Region::Exterior {
        return Err(Error::Unsupported("backward maps run on exterior grids".into()));
    }
    let bh = cfg.black_hole()?;
    let g = &cfg.grid;
    let truncations = if cfg.truncations.is_empty() {
        let span = g.v_max - g.v_min;
        vec![g.v_max, g.v_min + 2.0 * span, g.v_min + 4.0 * span]
    } else {
        cfg.truncations.clone()
    };
    let window_end = cfg
        .window
        .unwrap_or(g.v_min + 0.5 * (truncations[0] - g.v_min));
    let (horizon, infinity) = cfg.data.by_role();
    let seq = truncation_sequence(&bh, cfg.ell, g, &horizon, &infinity, &truncations, window_end)?;
    let finest = seq.fields.last().expect("nonempty truncation list");
    let fg = *finest.grid();
    let mut report = EnergyReport::new(cfg.ell, Some(fg));
    let initial = sigma0_norm(finest, &InitialPair::past())?;
    report.insert("sigma0_norm", initial)?;
    let future_h = restrict(finest, Orientation::ConstantU, fg.n_u)?;
    let future_i = restrict(finest, Orientation::ConstantV, fg.n_v)?;
    let future = boundary_energy(&mut report, &future_h, &future_i, cfg.ell, &fg)?;
    report.insert("weighted_input", future)?;
    report.insert("output_input_ratio", initial / future.max(f64::MIN_POSITIVE))?;
    Ok(BackwardOutcome {
        dataset: boundary_dataset(finest, BoundaryPair::Past)?,
        report,
        truncations,
        differences: seq.differences,
        window_end,
    })
}

/// Same-grid round-trip defects, relative to the data sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    /// `|B(F(data)) - data|` for data on the initial pair.
    pub backward_of_forward: f64,
    /// `|F(B(data)) - data|` for data on the future pair.
    pub forward_of_backward: f64,
}

fn dataset_difference(a: &ScatteringDataset, b: &ScatteringDataset) -> f64 {
    let diff = |p: &NullProfile, q: &NullProfile| {
        p.samples
            .iter()
            .zip(&q.samples)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    };
    diff(&a.horizon_profile, &b.horizon_profile).max(diff(&a.infinity_profile, &b.infinity_profile))
}

fn relative(defect: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        defect / scale
    } else {
        defect
    }
}

/// Evolves the configured data forward and back (and back and forward) on
/// the configured grid.
pub fn roundtrip(cfg: &MapRunConfig) -> Result<RoundtripReport> {
    cfg.validate()?;
    let past = cfg.data.dataset(&cfg.grid, BoundaryPair::Past, cfg.ell)?;
    let future = cfg.data.dataset(&cfg.grid, BoundaryPair::Future, cfg.ell)?;
    roundtrip_defects(&cfg.black_hole()?, cfg.ell, &cfg.grid, &past, &future)
}

/// Round-trip defects of explicit past and future datasets on one grid.
pub fn roundtrip_defects(
    bh: &BlackHole,
    ell: u32,
    grid: &GridSpec,
    past: &ScatteringDataset,
    future: &ScatteringDataset,
) -> Result<RoundtripReport> {
    let stencil = Stencil::new(*bh, ell, *grid)?;
    let there = stencil.forward(past)?;
    let back = stencil.backward(&boundary_dataset(&there, BoundaryPair::Future)?)?;
    let bf = dataset_difference(&boundary_dataset(&back, BoundaryPair::Past)?, past);
    let back = stencil.backward(future)?;
    let there = stencil.forward(&boundary_dataset(&back, BoundaryPair::Past)?)?;
    let fb = dataset_difference(&boundary_dataset(&there, BoundaryPair::Future)?, future);
    Ok(RoundtripReport {
        backward_of_forward: relative(bf, past.sup_norm()),
        forward_of_backward: relative(fb, future.sup_norm()),
    })
}

/// One level of the extract and re-inject round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossGridLevel {
    pub spacing: f64,
    pub truncation: f64,
    /// Relative sup defect of the recovered initial data on the window.
    pub defect: f64,
}

/// Forward map with extraction, followed by re-injection of the extracted
/// profiles as future data of a truncated grid and backward evolution.
/// Each level halves the spacing and doubles the truncation; the defect is
/// measured on the leading half of each initial line.
pub fn cross_grid_roundtrip(cfg: &MapRunConfig, levels: usize) -> Result<Vec<CrossGridLevel>> {
    cfg.validate()?;
    let bh = cfg.black_hole()?;
    let base_t = cfg.extraction_pair(cfg.grid.u_max.max(cfg.grid.v_max)).0;
    let near = cfg.near_end();
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let k = (1usize << level) as f64;
        let fine_base = GridSpec::new(
            (cfg.grid.u_min, cfg.grid.u_max),
            (cfg.grid.v_min, cfg.grid.v_max),
            cfg.grid.n_u * (1 << level),
            cfg.grid.n_v * (1 << level),
            cfg.grid.region,
        )?;
        let t = near + k * (base_t - near);
        let level_cfg = MapRunConfig {
            grid: GridSpec {
                r_floor: cfg.grid.r_floor,
                ..fine_base
            },
            truncations: vec![t, near + 2.0 * (t - near)],
            ..cfg.clone()
        };
        let runs = forward_runs(&level_cfg)?;
        let g = *runs.coarse.grid();
        let mut u_line = runs.horizon.samples.clone();
        let v_line = runs.infinity.samples.clone();
        // The two extracted profiles end at different points of timelike
        // infinity; the corner takes the null-infinity value.
        *u_line.last_mut().expect("nonempty") = *v_line.last().expect("nonempty");
        let back = Stencil::new(bh, cfg.ell, g)?.backward_from_lines(&u_line, &v_line)?;
        let original = boundary_dataset(&runs.coarse, BoundaryPair::Past)?;
        let recovered = boundary_dataset(&back, BoundaryPair::Past)?;
        let half = |d: &ScatteringDataset| -> Result<ScatteringDataset> {
            ScatteringDataset::asymptotic(
                leading_half(&d.horizon_profile)?,
                leading_half(&d.infinity_profile)?,
                d.ell,
                None,
            )
        };
        let (a, b) = (half(&original)?, half(&recovered)?);
        out.push(CrossGridLevel {
            spacing: g.h_u(),
            truncation: t,
            defect: relative(dataset_difference(&a, &b), a.sup_norm()),
        });
    }
    Ok(out)
}

/// Mirror image of a field under `(u, v) -> (-v, -u)`.
pub fn reflect_field(field: &ModeField) -> Result<ModeField> {
    let g = *field.grid();
    let r = g.reflected();
    let mut out = ModeField::zeros(*field.black_hole(), field.ell(), r)?;
    let values: Vec<Complex64> = (0..=r.n_u)
        .flat_map(|i| (0..=r.n_v).map(move |j| (i, j)))
        .map(|(i, j)| field.at(g.n_u - j, g.n_v - i))
        .collect();
    out.values_mut().copy_from_slice(&values);
    Ok(out)
}

/// Relative sup difference between a forward run and the reflection of a
/// backward run from the reflected data.
pub fn time_reflection_defect(
    bh: &BlackHole,
    ell: u32,
    grid: &GridSpec,
    past: &ScatteringDataset,
) -> Result<f64> {
    let forward = Stencil::new(*bh, ell, *grid)?.forward(past)?;
    let mirrored_data = boundary_dataset(&reflect_field(&forward)?, BoundaryPair::Future)?;
    let rg = grid.reflected();
    let backward = Stencil::new(*bh, ell, rg)?.backward(&mirrored_data)?;
    let restored = reflect_field(&backward)?;
    let diff = forward
        .values()
        .iter()
        .zip(restored.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(relative(diff, forward.max_abs()))
}

/// Result of the interior map.
#[derive(Debug, Clone)]
pub struct InteriorOutcome {
    /// Extracted profile on the Cauchy horizon, a function of `u`.
    pub cauchy_profile: NullProfile,
    /// Profile on the last outgoing line `u = u_max`.
    pub inner_profile: NullProfile,
    pub report: EnergyReport,
}

/// Interior map from data on the event horizon `u = u_min` and the ingoing
/// line `v = v_min` to the Cauchy horizon (`v -> ∞`, extracted) and the
/// outgoing line `u = u_max`.
///
/// On interior grids `Side::Horizon` places the data on the event horizon
/// and `Side::Infinity` on the ingoing line.
pub fn interior_map(cfg: &MapRunConfig) -> Result<InteriorOutcome> {
    cfg.validate()?;
    if cfg.grid.region != Region::Interior {
        return Err(Error::Unsupported("the interior map needs an interior grid".into()));
    }
    let bh = cfg.black_hole()?;
    let (t1, t2) = cfg.extraction_pair(cfg.grid.v_max);
    let run = |t: f64| -> Result<ModeField> {
        let g = resized(&cfg.grid, cfg.grid.u_max, t)?;
        g.validate(&bh)?;
        let data = cfg.data.dataset(&g, BoundaryPair::Past, cfg.ell)?;
        Stencil::new(bh, cfg.ell, g)?.forward(&data)
    };
    let coarse = run(t1)?;
    let fine = run(t2)?;
    let cauchy_profile = extract_radiation(&coarse, &fine, Side::Infinity)?;
    let g = *coarse.grid();
    let inner_profile = restrict(&coarse, Orientation::ConstantU, g.n_u)?;
    let mut report = EnergyReport::new(cfg.ell, Some(g));
    let seg = |o, i| LineSegment::full(&g, o, i);
    let k_event = k_weighted_flux(&coarse, &seg(Orientation::ConstantU, 0), AngularWeight::Full)?;
    let k_ingoing =
        k_weighted_flux(&coarse, &seg(Orientation::ConstantV, 0), AngularWeight::Degenerate)?;
    let k_cauchy = k_weighted_profile(&cauchy_profile, cfg.ell);
    let k_inner =
        k_weighted_flux(&coarse, &seg(Orientation::ConstantU, g.n_u), AngularWeight::Degenerate)?;
    report.insert("k_flux_event_horizon", k_event)?;
    report.insert("k_flux_ingoing", k_ingoing)?;
    report.insert("k_flux_cauchy_horizon", k_cauchy)?;
    report.insert("k_flux_inner", k_inner)?;
    let k_in = k_event + k_ingoing;
    let k_out = k_cauchy + k_inner;
    report.insert("k_flux_in", k_in)?;
    report.insert("k_flux_out", k_out)?;
    report.insert("k_flux_ratio", k_out / k_in.max(f64::MIN_POSITIVE))?;
    let (sup_ingoing, last_outgoing) = cauchy_horizon_sums(&coarse)?;
    report.insert("w12_sup_ingoing", sup_ingoing)?;
    report.insert("w12_last_outgoing", last_outgoing)?;
    Ok(InteriorOutcome {
        cauchy_profile,
        inner_profile,
        report,
    })
}

/// Parameters of the tail-data truncation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStudyConfig {
    pub mass: f64,
    pub ell: u32,
    /// Cell width in both null directions.
    pub spacing: f64,
    /// Truncations `U` of the data line.
    pub truncations: Vec<f64>,
    /// Length of the transverse direction as a multiple of `U`.
    pub aspect: f64,
    /// Line carrying the tail data.
    pub side: Side,
    /// Decay exponent `s` of the data derivative `(1 + x)^{-s}`.
    pub exponent: f64,
    /// Weight powers of the partial integrals `∫ x^p |∂Φ|^2`.
    pub powers: Vec<f64>,
    /// Localisation radius of the initial-line energy.
    pub radius: f64,
}

impl Default for TailStudyConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            ell: 0,
            spacing: 0.25,
            truncations: DEFAULT_TRUNCATIONS.to_vec(),
            aspect: 4.0,
            side: Side::Infinity,
            exponent: 1.5,
            powers: vec![1.5, 2.0, 2.5],
            radius: 1.5,
        }
    }
}

/// One truncation of the tail study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStudyRow {
    pub truncation: f64,
    /// `∫ |∂Φ|^2` of the data.
    pub data_t_flux: f64,
    /// `(p, ∫ x^p |∂Φ|^2)` of the data.
    pub partial_integrals: Vec<(f64, f64)>,
    /// Non-degenerate energy of the backward solution on the initial line,
    /// localised near the horizon (data at null infinity) or near null
    /// infinity (data on the horizon).
    pub localized_energy: f64,
}

/// Backward evolutions of truncated tail data `Φ_U(x) = G(x) - G(U)` with
/// `G' = (1 + x)^{-s}`, placed on one future line with zero data on the
/// other, for a sequence of truncations `U`.
pub fn tail_study(cfg: &TailStudyConfig) -> Result<Vec<TailStudyRow>> {
    let bh = BlackHole::new(cfg.mass)?;
    if !(cfg.spacing > 0.0 && cfg.aspect > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need spacing > 0 and aspect > 1, got {} and {}",
            cfg.spacing, cfg.aspect
        )));
    }
    let tail = DataFamily::PolynomialTail {
        exponent: cfg.exponent,
        onset: 0.0,
    };
    tail.validate()?;
    let primitive = tail.time_integral(1)?;
    let mut rows = Vec::with_capacity(cfg.truncations.len());
    for &u_trunc in &cfg.truncations {
        if !(u_trunc > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "truncations must be positive, got {u_trunc}"
            )));
        }
        let long = cfg.aspect * u_trunc;
        let n_short = (u_trunc / cfg.spacing).round() as usize;
        let n_long = (long / cfg.spacing).round() as usize;
        let shift = primitive.evaluate(u_trunc);
        let data = |x: f64| primitive.evaluate(x) - shift;
        let zero = Complex64::new(0.0, 0.0);
        let (grid, u_line, v_line, profile) = match cfg.side {
            Side::Infinity => {
                let g = GridSpec::new((0.0, u_trunc), (0.0, long), n_short, n_long, Region::Exterior)?;
                let p = NullProfile::sample(Orientation::ConstantV, long, 0.0, u_trunc, n_short, data)?;
                (g, vec![zero; n_long + 1], p.samples.clone(), p)
            }
            Side::Horizon => {
                let g = GridSpec::new((0.0, long), (0.0, u_trunc), n_long, n_short, Region::Exterior)?;
                let p = NullProfile::sample(Orientation::ConstantU, long, 0.0, u_trunc, n_short, data)?;
                (g, p.samples.clone(), vec![zero; n_long + 1], p)
            }
        };
        let field = Stencil::new(bh, cfg.ell, grid)?.backward_from_lines(&u_line, &v_line)?;
        let slope: Vec<f64> = profile
            .coordinates
            .iter()
            .map(|&x| tail.evaluate(x).norm_sqr())
            .collect();
        let weighted = |p: f64| -> f64 {
            let w: Vec<f64> = slope
                .iter()
                .zip(&profile.coordinates)
                .map(|(g, &x)| x.powf(p) * g)
                .collect();
            trapezoid(&w, cfg.spacing)
        };
        let partial_integrals = cfg.powers.iter().map(|&p| (p, weighted(p))).collect();
        let localized_energy = match cfg.side {
            Side::Infinity => horizon_localized_n_energy(&field, 0, cfg.radius * cfg.mass)?,
            Side::Horizon => infinity_localized_energy(&field, 0, cfg.radius * cfg.mass)?,
        };
        rows.push(TailStudyRow {
            truncation: u_trunc,
            data_t_flux: weighted(0.0),
            partial_integrals,
            localized_energy,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(center: f64) -> DataFamily {
        DataFamily::GaussianBump {
            center,
            width: 1.5,
            amplitude: 1.0,
        }
    }

    fn cfg(n: usize, side: Side) -> MapRunConfig {
        let g = GridSpec::square(0.0, 20.0, n, Region::Exterior).unwrap();
        MapRunConfig::new(1.0, 1, g, DataSpec::new(bump(10.0), side))
    }

    #[test]
    fn data_spec_flattens_the_family() {
        let spec: DataSpec =
            serde_json::from_str(r#"{"kind":"gaussian_bump","center":3,"width":1,"side":"horizon"}"#)
                .unwrap();
        assert_eq!(spec.side, Side::Horizon);
        assert_eq!(
            spec.family,
            DataFamily::GaussianBump {
                center: 3.0,
                width: 1.0,
                amplitude: 1.0
            }
        );
        let default: DataSpec = serde_json::from_str(r#"{"kind":"zero"}"#).unwrap();
        assert_eq!(default.side, Side::Infinity);
    }

    #[test]
    fn placement_follows_region_and_pair() {
        let g = GridSpec::square(0.0, 20.0, 40, Region::Exterior).unwrap();
        let spec = DataSpec::new(bump(10.0), Side::Infinity);
        let past = spec.dataset(&g, BoundaryPair::Past, 0).unwrap();
        assert_eq!(past.infinity_profile.orientation, Orientation::ConstantU);
        assert!(past.infinity_profile.sup_norm() > 0.9);
        assert!(past.horizon_profile.sup_norm() < 1e-15);
        let future = spec.dataset(&g, BoundaryPair::Future, 0).unwrap();
        assert_eq!(future.infinity_profile.orientation, Orientation::ConstantV);
        assert!(future.infinity_profile.sup_norm() > 0.9);
    }

    #[test]
    fn roundtrip_on_one_grid_is_exact() {
        let report = roundtrip(&cfg(200, Side::Infinity)).unwrap();
        assert!(report.backward_of_forward < 1e-12, "{report:?}");
        assert!(report.forward_of_backward < 1e-12, "{report:?}");
    }

    #[test]
    fn reflection_reproduces_the_run() {
        let c = cfg(100, Side::Horizon);
        let data = c.data.dataset(&c.grid, BoundaryPair::Past, 1).unwrap();
        let d = time_reflection_defect(&BlackHole::new(1.0).unwrap(), 1, &c.grid, &data).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn forward_map_reports_positive_energies() {
        let out = forward_map(&cfg(80, Side::Infinity)).unwrap();
        let r = &out.report;
        assert!(r.get("sigma0_norm").unwrap() > 0.0);
        assert!(r.get("weighted_output").unwrap() > 0.0);
        assert_eq!(out.dataset.horizon_profile.orientation, Orientation::ConstantU);
        assert!(out.dataset.truncation.unwrap() > 20.0);
    }

    #[test]
    fn scattering_map_balances_flux() {
        let out = scattering_map(&cfg(200, Side::Infinity)).unwrap();
        assert!(out.report.get("balance_defect").unwrap() < 1e-2);
        assert!(out.report.get("reflection_defect").unwrap() < 1e-12);
    }

    #[test]
    fn backward_map_converges_in_truncation() {
        let g = GridSpec::new((0.0, 40.0), (0.0, 20.0), 160, 80, Region::Exterior).unwrap();
        let c = MapRunConfig::new(
            1.0,
            0,
            g,
            DataSpec::new(
                DataFamily::ExponentialTail {
                    rate: 1.0,
                    amplitude: 1.0,
                },
                Side::Infinity,
            ),
        )
        .with_truncations(vec![20.0, 40.0, 80.0])
        .with_window(10.0);
        let out = backward_map(&c).unwrap();
        assert!(out.is_cauchy(), "{:?}", out.differences);
        assert!(out.report.get("sigma0_norm").unwrap() > 0.0);
    }

    #[test]
    fn interior_map_of_vanishing_data_is_zero() {
        let g = GridSpec::new((-20.0, -1.0), (1.0, 20.0), 76, 76, Region::Interior).unwrap();
        let c = MapRunConfig::new(1.0, 0, g, DataSpec::new(DataFamily::Zero, Side::Horizon));
        let out = interior_map(&c).unwrap();
        assert_eq!(out.cauchy_profile.sup_norm(), 0.0);
        assert_eq!(out.report.get("k_flux_in"), Some(0.0));
    }

    #[test]
    fn resized_keeps_spacing() {
        let g = GridSpec::square(0.0, 10.0, 40, Region::Exterior).unwrap();
        let r = resized(&g, 20.0, 30.0).unwrap();
        assert_eq!((r.n_u, r.n_v), (80, 120));
        assert!(resized(&g, 10.1, 10.0).is_err());
    }

    #[test]
    fn tail_study_data_flux_stabilises() {
        let c = TailStudyConfig {
            spacing: 0.1,
            truncations: vec![10.0, 20.0],
            ..TailStudyConfig::default()
        };
        let rows = tail_study(&c).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[1].data_t_flux - 0.5).abs() < 0.01, "{rows:?}");
        assert!(rows[1].localized_energy > rows[0].localized_energy);
    }
}
