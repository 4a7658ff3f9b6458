//! Scenario drivers: each computes its tables and summary, and the shared
//! runner writes them out.

use std::path::Path;
use std::time::Instant;

use ern_core::energies::{
    energy_balance_defect, flux_balance, higher_order_norm, morawetz_bulk, p_weighted_flux,
    sigma0_norm, t_flux, Diamond, InitialPair, LineSegment,
};
use ern_core::evolution::{exact_solution_error, BoundaryPair};
use ern_core::modes::{construct_mode, regularity_probe, RegularityConfig};
use ern_core::numerics::observed_order;
use ern_core::scattering::{
    backward_map, forward_map, interior_map, roundtrip, scattering_map, tail_study,
};
use ern_core::{NullProfile, Orientation, ScatteringDataset, Stencil};
use log::info;
use rayon::prelude::*;

use crate::config::{RunConfig, Scenario};
use crate::error::{CliError, CliResult};
use crate::output::{
    complex_cells, write_csv, write_manifest, write_summary, Cell, RunManifest, Summary, Table,
    MANIFEST_FILE, SUMMARY_FILE,
};

/// Same-grid round trips must close to round-off.
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-12;
/// Largest accepted T-flux balance defect of a rectangle.
pub const BALANCE_TOLERANCE: f64 = 1e-2;
/// Largest accepted mode residual and slice-ratio defect.
pub const MODE_TOLERANCE: f64 = 1e-2;
/// Largest accepted relative drift of a quantity across refinements.
pub const DRIFT_TOLERANCE: f64 = 0.2;
/// Accepted distance of an observed order from 2.
pub const ORDER_TOLERANCE: f64 = 0.3;
/// Smallest accepted growth per truncation of the localised tail energy.
pub const TAIL_GROWTH: f64 = 0.05;

pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    pub summary: Summary,
}

fn coordinate_name(profile: &NullProfile) -> &'static str {
    match profile.orientation {
        Orientation::ConstantU => "v",
        Orientation::ConstantV => "u",
    }
}

fn dataset_tables(prefix: &str, d: &ScatteringDataset) -> Vec<Table> {
    let h = &d.horizon_profile;
    let i = &d.infinity_profile;
    vec![
        Table::profile(&format!("{prefix}horizon_profile"), coordinate_name(h), h),
        Table::profile(&format!("{prefix}infinity_profile"), coordinate_name(i), i),
    ]
}

fn finite(profile: &NullProfile) -> bool {
    profile.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn drift(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == 0.0 {
        0.0
    } else {
        (hi - lo) / lo.abs().max(f64::MIN_POSITIVE)
    }
}

fn evolve_forward(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let out = forward_map(&cfg.map_config()?)?;
    let mut s = Summary::new(cfg);
    s.values(&out.report.values);
    s.check(
        "profiles_finite",
        finite(&out.dataset.horizon_profile) && finite(&out.dataset.infinity_profile),
    );
    Ok(ScenarioOutput {
        tables: dataset_tables("", &out.dataset),
        summary: s,
    })
}

fn evolve_backward(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let out = backward_map(&cfg.map_config()?)?;
    let mut s = Summary::new(cfg);
    s.values(&out.report.values);
    s.value("window_end", out.window_end);
    let mut t = Table::new("truncation_differences", &["truncation", "difference"]);
    for (v, d) in out.truncations.iter().skip(1).zip(&out.differences) {
        t.push(vec![Cell::Float(*v), Cell::Float(*d)]);
    }
    let scale = out.dataset.sup_norm().max(1.0);
    let settled = out.differences.iter().all(|d| *d <= ROUNDTRIP_TOLERANCE * scale);
    s.check("differences_decrease", out.is_cauchy() || settled);
    s.check(
        "profiles_finite",
        finite(&out.dataset.horizon_profile) && finite(&out.dataset.infinity_profile),
    );
    let mut tables = dataset_tables("initial_", &out.dataset);
    tables.push(t);
    Ok(ScenarioOutput { tables, summary: s })
}

fn roundtrip_scenario(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let map = cfg.map_config()?;
    let r = roundtrip(&map)?;
    let mut s = Summary::new(cfg);
    s.value("backward_of_forward_defect", r.backward_of_forward);
    s.value("forward_of_backward_defect", r.forward_of_backward);
    s.check("backward_of_forward", r.backward_of_forward <= ROUNDTRIP_TOLERANCE);
    s.check("forward_of_backward", r.forward_of_backward <= ROUNDTRIP_TOLERANCE);
    let mut t = Table::new(
        "roundtrip",
        &["ell", "h_u", "h_v", "backward_of_forward_defect", "forward_of_backward_defect"],
    );
    t.push(vec![
        Cell::Int(cfg.ell as i64),
        Cell::Float(map.grid.h_u()),
        Cell::Float(map.grid.h_v()),
        Cell::Float(r.backward_of_forward),
        Cell::Float(r.forward_of_backward),
    ]);
    Ok(ScenarioOutput {
        tables: vec![t],
        summary: s,
    })
}

fn scattering_scenario(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let out = scattering_map(&cfg.map_config()?)?;
    let mut s = Summary::new(cfg);
    s.values(&out.report.values);
    let get = |k: &str| out.report.get(k).unwrap_or(f64::NAN);
    s.check("reflection_symmetric", get("reflection_defect") <= ROUNDTRIP_TOLERANCE);
    s.check("flux_balanced", get("balance_defect") <= BALANCE_TOLERANCE);
    s.check(
        "profiles_finite",
        finite(&out.dataset.horizon_profile) && finite(&out.dataset.infinity_profile),
    );
    Ok(ScenarioOutput {
        tables: dataset_tables("future_", &out.dataset),
        summary: s,
    })
}

fn interior_scenario(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let out = interior_map(&cfg.map_config()?)?;
    let mut s = Summary::new(cfg);
    s.values(&out.report.values);
    let ratio = out.report.get("k_flux_ratio").unwrap_or(f64::NAN);
    s.check("k_flux_ratio_positive", ratio.is_finite() && ratio > 0.0);
    s.check(
        "profiles_finite",
        finite(&out.cauchy_profile) && finite(&out.inner_profile),
    );
    Ok(ScenarioOutput {
        tables: vec![
            Table::profile("cauchy_profile", coordinate_name(&out.cauchy_profile), &out.cauchy_profile),
            Table::profile("inner_profile", coordinate_name(&out.inner_profile), &out.inner_profile),
        ],
        summary: s,
    })
}

fn mode_scenario(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let spec = cfg.mode.expect("resolved config");
    let out = construct_mode(&cfg.black_hole()?, cfg.ell, &cfg.grid_spec()?, &spec)?;
    let mut s = Summary::new(cfg);
    s.value("residual", out.residual);
    s.value("slice_ratio_defect", out.slice_ratio_defect);
    s.value("slice_t", out.profile.t);
    let (h, i) = out.end_values;
    s.value("f_horizon_end_re", h.re);
    s.value("f_horizon_end_im", h.im);
    s.value("f_infinity_end_re", i.re);
    s.value("f_infinity_end_im", i.im);
    s.check("residual_small", out.residual < MODE_TOLERANCE);
    s.check("slice_ratio_small", out.slice_ratio_defect < MODE_TOLERANCE);
    let mut t = Table::new("mode_profile", &["rstar", "f_re", "f_im"]);
    for (x, z) in out.profile.rstar.iter().zip(&out.profile.values) {
        let [re, im] = complex_cells(*z);
        t.push(vec![Cell::Float(*x), re, im]);
    }
    Ok(ScenarioOutput {
        tables: vec![t],
        summary: s,
    })
}

fn power_label(p: f64) -> String {
    format!("{p}").replace(['.', '-'], "_")
}

fn tail_study_scenario(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let tc = cfg.tail_config()?;
    let rows = tail_study(&tc)?;
    let mut columns = vec!["truncation".to_string(), "data_t_flux".to_string()];
    columns.extend(tc.powers.iter().map(|p| format!("partial_integral_p{}", power_label(*p))));
    columns.push("localized_energy".to_string());
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new("tail_study", &refs);
    for r in &rows {
        let mut row = vec![Cell::Float(r.truncation), Cell::Float(r.data_t_flux)];
        row.extend(r.partial_integrals.iter().map(|(_, x)| Cell::Float(*x)));
        row.push(Cell::Float(r.localized_energy));
        t.push(row);
    }
    let mut s = Summary::new(cfg);
    let increments = |k: usize| -> Vec<f64> {
        rows.windows(2)
            .map(|w| w[1].partial_integrals[k].1 - w[0].partial_integrals[k].1)
            .collect()
    };
    let mut converging = true;
    let mut diverging = true;
    for (k, p) in tc.powers.iter().enumerate() {
        let inc = increments(k);
        if *p < 2.0 {
            converging &= inc.iter().all(|d| *d > 0.0) && inc.windows(2).all(|w| w[1] < w[0]);
        } else {
            diverging &= inc.iter().all(|d| *d > 0.0) && inc.windows(2).all(|w| w[1] >= 0.9 * w[0]);
        }
        s.value(&format!("last_increment_p{}", power_label(*p)), *inc.last().expect("rows"));
    }
    let flux: Vec<f64> = rows.iter().map(|r| r.data_t_flux).collect();
    let n = flux.len();
    let flux_change = (flux[n - 1] - flux[n - 2]).abs() / flux[n - 1].abs().max(f64::MIN_POSITIVE);
    let growth: Vec<f64> = rows
        .windows(2)
        .map(|w| w[1].localized_energy / w[0].localized_energy - 1.0)
        .collect();
    s.value("data_t_flux", flux[n - 1]);
    s.value("data_t_flux_last_change", flux_change);
    s.value("localized_energy", rows[n - 1].localized_energy);
    s.value(
        "localized_energy_min_growth",
        growth.iter().cloned().fold(f64::INFINITY, f64::min),
    );
    s.check("subcritical_partial_integrals_converge", converging);
    s.check("critical_partial_integrals_grow", diverging);
    s.check("data_t_flux_stable", flux_change < 1e-2);
    s.check("localized_energy_grows", growth.iter().all(|g| *g >= TAIL_GROWTH));
    Ok(ScenarioOutput {
        tables: vec![t],
        summary: s,
    })
}

fn energies_scenario(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let map = cfg.map_config()?;
    let g = map.grid;
    let bh = cfg.black_hole()?;
    let data = map.data.dataset(&g, BoundaryPair::Past, cfg.ell)?;
    let field = Stencil::new(bh, cfg.ell, g)?.forward(&data)?;
    let mut s = Summary::new(cfg);
    let diamond = Diamond::full(&g);
    let (flux_in, flux_out) = flux_balance(&field, &diamond)?;
    let balance = energy_balance_defect(&field, &diamond)?;
    s.value("t_flux_past", flux_in);
    s.value("t_flux_future", flux_out);
    s.value("balance_defect", balance);
    let pair = InitialPair::past();
    s.value("sigma0_norm", sigma0_norm(&field, &pair)?);
    for n in 1..=2 {
        s.value(&format!("higher_order_norm_{n}"), higher_order_norm(&field, &pair, n)?);
    }
    let m = bh.mass();
    s.value(
        "morawetz_bulk",
        morawetz_bulk(&field, (1.2 * m, 1.8 * m), (2.5 * m, 6.0 * m))?,
    );
    let outgoing = LineSegment::full(&g, Orientation::ConstantU, g.n_u);
    let ingoing = LineSegment::full(&g, Orientation::ConstantV, g.n_v);
    for p in [0.0, 1.0, 2.0] {
        let label = power_label(p);
        s.value(&format!("p_weighted_flux_outgoing_p{label}"), p_weighted_flux(&field, &outgoing, p, 0)?);
        s.value(&format!("p_weighted_flux_ingoing_p{label}"), p_weighted_flux(&field, &ingoing, p, 0)?);
    }
    s.check("flux_balanced", balance <= BALANCE_TOLERANCE);
    let mut by_u = Table::new("t_flux_outgoing_lines", &["u", "t_flux"]);
    for i in 0..=g.n_u {
        let f = t_flux(&field, &LineSegment::full(&g, Orientation::ConstantU, i))?;
        by_u.push(vec![Cell::Float(g.u(i)), Cell::Float(f)]);
    }
    let mut by_v = Table::new("t_flux_ingoing_lines", &["v", "t_flux"]);
    for j in 0..=g.n_v {
        let f = t_flux(&field, &LineSegment::full(&g, Orientation::ConstantV, j))?;
        by_v.push(vec![Cell::Float(g.v(j)), Cell::Float(f)]);
    }
    Ok(ScenarioOutput {
        tables: vec![by_u, by_v],
        summary: s,
    })
}

fn convergence_scenario(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let bh = cfg.black_hole()?;
    let solution = cfg.exact_solution.expect("resolved config");
    let base = cfg.grid_config();
    let region = cfg.region();
    let runs: Vec<(f64, f64, f64)> = cfg
        .refinements
        .par_iter()
        .map(|k| {
            let g = base.refined(*k).spec(region)?;
            let (abs, rel) = exact_solution_error(&bh, solution, &g)?;
            Ok((g.h_u(), abs, rel))
        })
        .collect::<ern_core::Result<_>>()?;
    let mut t = Table::new("convergence", &["h", "error", "relative_error", "observed_order"]);
    let mut last_order = f64::NAN;
    for (k, (h, abs, rel)) in runs.iter().enumerate() {
        let order = if k == 0 {
            f64::NAN
        } else {
            observed_order(runs[k - 1].1, *abs, runs[k - 1].0 / h)
        };
        last_order = order;
        t.push(vec![Cell::Float(*h), Cell::Float(*abs), Cell::Float(*rel), Cell::Float(order)]);
    }
    let mut s = Summary::new(cfg);
    s.value("observed_order", last_order);
    s.value("finest_error", runs.last().map_or(f64::NAN, |r| r.1));
    s.check(
        "second_order",
        runs.len() < 2 || (last_order - 2.0).abs() <= ORDER_TOLERANCE,
    );
    Ok(ScenarioOutput {
        tables: vec![t],
        summary: s,
    })
}

fn regularity_scenario(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    let window = cfg.regularity.expect("resolved config");
    let base = cfg.grid_config();
    let region = cfg.region();
    let family = cfg.data_spec().family;
    let reports: Vec<(f64, ern_core::modes::RegularityReport)> = cfg
        .refinements
        .par_iter()
        .map(|k| {
            let grid = base.refined(*k).spec(region)?;
            let probe = RegularityConfig {
                mass: cfg.mass,
                ell: cfg.ell,
                grid,
                family: family.clone(),
                order: window.order,
                radii: window.radii,
                advanced: window.advanced,
            };
            Ok((grid.h_u(), regularity_probe(&probe)?))
        })
        .collect::<ern_core::Result<_>>()?;
    let orders = window.order as usize + 2;
    let mut columns = vec!["h".to_string(), "window_nodes".to_string()];
    columns.extend((0..orders).map(|k| format!("sum_k{k}")));
    columns.push("consistency_defect".to_string());
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new("regularity", &refs);
    for (h, r) in &reports {
        let mut row = vec![Cell::Float(*h), Cell::Int(r.window_nodes as i64)];
        row.extend(r.sums.iter().map(|x| Cell::Float(*x)));
        row.push(Cell::Float(r.consistency_defect));
        t.push(row);
    }
    let mut s = Summary::new(cfg);
    let mut stable = true;
    for k in 0..orders {
        let series: Vec<f64> = reports.iter().map(|(_, r)| r.sums[k]).collect();
        let d = drift(&series);
        s.value(&format!("sum_k{k}_drift"), d);
        s.value(&format!("sum_k{k}"), *series.last().expect("refinements"));
        stable &= series.iter().all(|x| x.is_finite()) && d < DRIFT_TOLERANCE;
    }
    let defects: Vec<f64> = reports.iter().map(|(_, r)| r.consistency_defect).collect();
    s.value("consistency_defect", *defects.last().expect("refinements"));
    s.check("sums_resolution_stable", stable);
    s.check(
        "consistency_improves",
        defects.windows(2).all(|w| w[1] <= w[0]),
    );
    Ok(ScenarioOutput {
        tables: vec![t],
        summary: s,
    })
}

pub fn compute(cfg: &RunConfig) -> CliResult<ScenarioOutput> {
    match cfg.scenario() {
        Scenario::EvolveForward => evolve_forward(cfg),
        Scenario::EvolveBackward => evolve_backward(cfg),
        Scenario::Roundtrip => roundtrip_scenario(cfg),
        Scenario::Scattering => scattering_scenario(cfg),
        Scenario::Interior => interior_scenario(cfg),
        Scenario::Mode => mode_scenario(cfg),
        Scenario::TailStudy => tail_study_scenario(cfg),
        Scenario::Energies => energies_scenario(cfg),
        Scenario::Convergence => convergence_scenario(cfg),
        Scenario::Regularity => regularity_scenario(cfg),
    }
}

/// Runs a resolved configuration and writes its tables, `summary.json` and
/// `manifest.json` into `out`. Outputs are written even when an invariant
/// fails; the failure is then returned as an error.
pub fn run_scenario(cfg: &RunConfig, out: &Path) -> CliResult<RunManifest> {
    let start = Instant::now();
    info!("running {} into {}", cfg.scenario().name(), out.display());
    let mut result = compute(cfg)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut outputs = Vec::new();
    for table in &result.tables {
        write_csv(out, table)?;
        outputs.push(table.file_name());
    }
    write_summary(out, &mut result.summary)?;
    outputs.push(SUMMARY_FILE.to_string());
    let manifest = RunManifest {
        scenario: cfg.scenario().name().to_string(),
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs,
        passed: result.summary.passed,
    };
    write_manifest(out, &manifest)?;
    info!("wrote {} and {MANIFEST_FILE}", manifest.outputs.join(", "));
    let failures = result.summary.failures();
    if failures.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::Invariant(failures))
    }
}
