//! Implementation of the CLI commands.

use crate::overrides::{apply_override, parse_override};
use crate::plot::{emit_plot, PlotSpec};
use crate::table::{Cell, Table};
use crate::{CliError, CommandKind, RunOutcome, RunRequest};
use acouswarm_core::cross_section::cross_section_breakdown;
use acouswarm_core::mitigation::{run_strategy, StrategyOutcome};
use acouswarm_core::piston::robot_power;
use acouswarm_core::scenario::Scenario;
use acouswarm_core::swarm::{
    propagate_profile, swarm_power_summary, AbsorptionPolicy, DensityProfile, FieldProfile,
};
use acouswarm_core::tissue::path_pressure;
use acouswarm_core::units::{FREQUENCY_MAX, FREQUENCY_MIN};
use acouswarm_core::validate_scenario;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};

pub fn run(request: &RunRequest) -> Result<RunOutcome, CliError> {
    let raw = load_with_overrides(request)?;
    let scenario = Scenario::from_json_value(raw.clone())?;
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        return Err(CliError::Validation(violations));
    }
    if request.command == CommandKind::Validate {
        return Ok(RunOutcome::default());
    }

    fs::create_dir_all(&request.out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", request.out_dir.display())))?;

    let mut emitter = Emitter::new(request, &scenario);
    match request.command {
        CommandKind::PowerProfile => power_profile(&scenario, request, &mut emitter)?,
        CommandKind::CrossSections => cross_sections(&scenario, request, &mut emitter)?,
        CommandKind::SwarmProfile => swarm_profile(&scenario, request, &mut emitter)?,
        CommandKind::Mitigate => mitigate(&scenario, request, &mut emitter)?,
        CommandKind::Sweep => sweep(&raw, request, &mut emitter)?,
        CommandKind::Validate => unreachable!(),
    }
    emitter.write_manifest(request)
}

fn load_with_overrides(request: &RunRequest) -> Result<Value, CliError> {
    let text = fs::read_to_string(&request.scenario_path).map_err(|e| {
        CliError::Io(format!(
            "reading {}: {e}",
            request.scenario_path.display()
        ))
    })?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("scenario is not valid JSON: {e}")))?;
    for entry in &request.overrides {
        let (key, v) = parse_override(entry)?;
        apply_override(&mut value, &key, v)?;
    }
    Ok(value)
}

/// Collects emitted files and resolved parameters for the manifest.
struct Emitter {
    outputs: Vec<PathBuf>,
    resolved: serde_json::Map<String, Value>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    scenario_file: String,
    overrides: &'a [String],
    resolved: &'a serde_json::Map<String, Value>,
    outputs: Vec<String>,
}

impl Emitter {
    fn new(request: &RunRequest, scenario: &Scenario) -> Self {
        let mut resolved = serde_json::Map::new();
        resolved.insert(
            "scenario".to_string(),
            serde_json::to_value(scenario).expect("scenario serializes"),
        );
        let _ = request;
        Emitter {
            outputs: Vec::new(),
            resolved,
        }
    }

    fn note(&mut self, key: &str, value: Value) {
        self.resolved.insert(key.to_string(), value);
    }

    fn write_table(&mut self, dir: &Path, name: &str, table: &Table) -> Result<(), CliError> {
        let path = dir.join(name);
        table.write_csv(&path)?;
        self.outputs.push(path);
        Ok(())
    }

    fn write_plot(
        &mut self,
        dir: &Path,
        name: &str,
        table: &Table,
        spec: &PlotSpec,
    ) -> Result<(), CliError> {
        let svg = emit_plot(table, spec)?;
        let path = dir.join(name);
        fs::write(&path, svg)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        self.outputs.push(path);
        Ok(())
    }

    fn write_manifest(mut self, request: &RunRequest) -> Result<RunOutcome, CliError> {
        let path = request.out_dir.join("manifest.json");
        let manifest = Manifest {
            command: request.command.name(),
            scenario_file: request.scenario_path.display().to_string(),
            overrides: &request.overrides,
            resolved: &self.resolved,
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Io(format!("serializing manifest: {e}")))?;
        fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        self.outputs.push(path);
        Ok(RunOutcome {
            outputs: self.outputs,
        })
    }
}

/// Log-spaced frequency grid over the supported band, or the configured
/// band frequencies when the source carries more than one.
fn grid_frequencies(scenario: &Scenario) -> Vec<f64> {
    if scenario.source.frequencies.len() > 1 {
        let mut f: Vec<f64> = scenario
            .source
            .frequencies
            .iter()
            .map(|b| b.frequency)
            .collect();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return f;
    }
    let n = scenario.numerics.frequency_points.max(2) as usize;
    let ratio = FREQUENCY_MAX / FREQUENCY_MIN;
    (0..n)
        .map(|i| FREQUENCY_MIN * ratio.powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn depths_in_path(scenario: &Scenario) -> Vec<f64> {
    let total = scenario.path.total_length();
    scenario
        .numerics
        .depths
        .iter()
        .copied()
        .filter(|d| *d <= total * (1.0 + 1e-12))
        .collect()
}

fn band_frequency(scenario: &Scenario) -> f64 {
    scenario.source.frequencies[0].frequency
}

// ---------------------------------------------------------------------------
// power-profile: robot power vs frequency at several depths, no swarm
// ---------------------------------------------------------------------------

fn power_profile(
    scenario: &Scenario,
    request: &RunRequest,
    emitter: &mut Emitter,
) -> Result<(), CliError> {
    let frequencies = grid_frequencies(scenario);
    let depths = depths_in_path(scenario);
    let mut table = Table::new(&["depth_m", "frequency_hz", "pressure_pa", "robot_power_w"]);
    for depth in &depths {
        for f in &frequencies {
            let p = path_pressure(&scenario.source, &scenario.path, *f, *depth)?;
            let power = robot_power(&scenario.robot, p, *f, &scenario.fluid);
            table.push_row(vec![
                Cell::Num(*depth),
                Cell::Num(*f),
                Cell::Num(p),
                Cell::Num(power),
            ]);
        }
    }
    emitter.note("frequencies_hz", serde_json::to_value(&frequencies).unwrap());
    emitter.note("depths_m", serde_json::to_value(&depths).unwrap());
    emitter.write_table(&request.out_dir, "power_profile.csv", &table)?;
    if request.plot {
        emitter.write_plot(
            &request.out_dir,
            "power_profile.svg",
            &table,
            &PlotSpec {
                title: "Robot power vs frequency".to_string(),
                x_column: "frequency_hz".to_string(),
                y_column: "robot_power_w".to_string(),
                series_column: Some("depth_m".to_string()),
                log_x: true,
                log_y: true,
                vline: None,
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// cross-sections: per-robot loss channels vs frequency at the deepest
// configured depth
// ---------------------------------------------------------------------------

fn cross_sections(
    scenario: &Scenario,
    request: &RunRequest,
    emitter: &mut Emitter,
) -> Result<(), CliError> {
    let depths = depths_in_path(scenario);
    let depth = depths.iter().copied().fold(0.0f64, f64::max);
    let frequencies = grid_frequencies(scenario);
    let mut table = Table::new(&[
        "frequency_hz",
        "pressure_pa",
        "sigma_absorption_m2",
        "sigma_dissipation_m2",
        "sigma_scattering_m2",
        "sigma_total_m2",
        "sigma_dissipation_locked_m2",
        "sigma_scattering_locked_m2",
        "sigma_geometric_m2",
    ]);
    for f in &frequencies {
        let p = path_pressure(&scenario.source, &scenario.path, *f, depth)?;
        let medium = scenario.path.medium_at(depth.min(scenario.path.total_length() * 0.999999));
        let active = cross_section_breakdown(
            &scenario.robot,
            &scenario.fluid,
            medium,
            p,
            *f,
            false,
        )?;
        let locked = cross_section_breakdown(
            &scenario.robot,
            &scenario.fluid,
            medium,
            p,
            *f,
            true,
        )?;
        table.push_row(vec![
            Cell::Num(*f),
            Cell::Num(p),
            Cell::Num(active.absorption),
            Cell::Num(active.boundary_dissipation),
            Cell::Num(active.scattering),
            Cell::Num(active.total),
            Cell::Num(locked.boundary_dissipation),
            Cell::Num(locked.scattering),
            Cell::Num(active.geometric),
        ]);
    }
    emitter.note("depth_m", serde_json::json!(depth));
    emitter.write_table(&request.out_dir, "cross_sections.csv", &table)?;
    if request.plot {
        // one line per channel: reshape to (frequency, sigma, channel)
        let mut shaped = Table::new(&["frequency_hz", "sigma_m2", "channel"]);
        for row in &table.rows {
            for (column, label) in [
                (2usize, "absorption"),
                (3, "dissipation"),
                (4, "scattering"),
                (8, "geometric"),
            ] {
                shaped.push_row(vec![
                    row[0].clone(),
                    row[column].clone(),
                    Cell::Text(label.to_string()),
                ]);
            }
        }
        emitter.write_plot(
            &request.out_dir,
            "cross_sections.svg",
            &shaped,
            &PlotSpec {
                title: "Cross sections vs frequency".to_string(),
                x_column: "frequency_hz".to_string(),
                y_column: "sigma_m2".to_string(),
                series_column: Some("channel".to_string()),
                log_x: true,
                log_y: true,
                vline: None,
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// swarm-profile: power vs frequency at depths with swarm attenuation,
// plus full depth profiles at the configured band frequencies
// ---------------------------------------------------------------------------

fn swarm_profile_at(scenario: &Scenario, frequency: f64) -> Result<FieldProfile, CliError> {
    let density = DensityProfile::from_swarm(&scenario.swarm)?;
    Ok(propagate_profile(
        &scenario.source,
        &scenario.path,
        frequency,
        &scenario.robot,
        &scenario.fluid,
        &density,
        &AbsorptionPolicy {
            include_passive: scenario.numerics.include_passive,
            ..Default::default()
        },
        &scenario.numerics,
    )?)
}

fn swarm_profile(
    scenario: &Scenario,
    request: &RunRequest,
    emitter: &mut Emitter,
) -> Result<(), CliError> {
    let frequencies = grid_frequencies(scenario);
    let depths = depths_in_path(scenario);

    let profiles: Vec<Result<FieldProfile, CliError>> = frequencies
        .par_iter()
        .map(|f| swarm_profile_at(scenario, *f))
        .collect();

    let mut by_frequency = Table::new(&["depth_m", "frequency_hz", "pressure_pa", "robot_power_w"]);
    let mut collected = Vec::with_capacity(profiles.len());
    for profile in profiles {
        collected.push(profile?);
    }
    for depth in &depths {
        for profile in &collected {
            let sample = profile.sample_at(*depth);
            by_frequency.push_row(vec![
                Cell::Num(*depth),
                Cell::Num(profile.frequency),
                Cell::Num(sample.pressure),
                Cell::Num(sample.robot_power),
            ]);
        }
    }
    emitter.write_table(&request.out_dir, "swarm_power_vs_frequency.csv", &by_frequency)?;

    // full depth profile at the configured band frequency
    let band = band_frequency(scenario);
    let profile = swarm_profile_at(scenario, band)?;
    let mut by_depth = Table::new(&[
        "frequency_hz",
        "depth_m",
        "pressure_pa",
        "robot_power_w",
        "robot_attenuation_per_m",
    ]);
    for sample in &profile.samples {
        by_depth.push_row(vec![
            Cell::Num(band),
            Cell::Num(sample.depth),
            Cell::Num(sample.pressure),
            Cell::Num(sample.robot_power),
            Cell::Num(sample.robot_attenuation),
        ]);
    }
    let summary = swarm_power_summary(&profile, &scenario.swarm);
    emitter.note(
        "swarm_summary",
        serde_json::json!({
            "frequency_hz": band,
            "mean_robot_power_w": summary.mean_robot_power,
            "total_swarm_power_w": summary.total_swarm_power,
        }),
    );
    emitter.note("frequencies_hz", serde_json::to_value(&frequencies).unwrap());
    emitter.note("depths_m", serde_json::to_value(&depths).unwrap());
    emitter.write_table(&request.out_dir, "swarm_depth_profile.csv", &by_depth)?;

    if request.plot {
        emitter.write_plot(
            &request.out_dir,
            "swarm_power_vs_frequency.svg",
            &by_frequency,
            &PlotSpec {
                title: "Robot power vs frequency with swarm attenuation".to_string(),
                x_column: "frequency_hz".to_string(),
                y_column: "robot_power_w".to_string(),
                series_column: Some("depth_m".to_string()),
                log_x: true,
                log_y: true,
                vline: None,
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// mitigate: run the scenario's configured strategy
// ---------------------------------------------------------------------------

fn mitigate(
    scenario: &Scenario,
    request: &RunRequest,
    emitter: &mut Emitter,
) -> Result<(), CliError> {
    let frequency = band_frequency(scenario);
    match run_strategy(scenario, frequency)? {
        StrategyOutcome::Baseline(profile) => {
            let mut table = Table::new(&[
                "depth_m",
                "pressure_pa",
                "robot_power_w",
                "robot_attenuation_per_m",
            ]);
            for s in &profile.samples {
                table.push_row(vec![
                    Cell::Num(s.depth),
                    Cell::Num(s.pressure),
                    Cell::Num(s.robot_power),
                    Cell::Num(s.robot_attenuation),
                ]);
            }
            emitter.write_table(&request.out_dir, "mitigate_baseline.csv", &table)?;
        }
        StrategyOutcome::Capped { baseline, capped } => {
            let mut table = Table::new(&[
                "depth_m",
                "pressure_uncapped_pa",
                "power_uncapped_w",
                "pressure_capped_pa",
                "power_capped_w",
            ]);
            for (b, c) in baseline.samples.iter().zip(&capped.samples) {
                table.push_row(vec![
                    Cell::Num(b.depth),
                    Cell::Num(b.pressure),
                    Cell::Num(b.robot_power),
                    Cell::Num(c.pressure),
                    Cell::Num(c.robot_power),
                ]);
            }
            emitter.write_table(&request.out_dir, "mitigate_power_cap.csv", &table)?;
            if request.plot {
                let mut shaped = Table::new(&["depth_m", "power_w", "case"]);
                for (b, c) in baseline.samples.iter().zip(&capped.samples) {
                    shaped.push_row(vec![
                        Cell::Num(b.depth),
                        Cell::Num(b.robot_power),
                        Cell::Text("uncapped".to_string()),
                    ]);
                    shaped.push_row(vec![
                        Cell::Num(c.depth),
                        Cell::Num(c.robot_power),
                        Cell::Text("capped".to_string()),
                    ]);
                }
                emitter.write_plot(
                    &request.out_dir,
                    "mitigate_power_cap.svg",
                    &shaped,
                    &PlotSpec {
                        title: "Power cap".to_string(),
                        x_column: "depth_m".to_string(),
                        y_column: "power_w".to_string(),
                        series_column: Some("case".to_string()),
                        log_x: false,
                        log_y: true,
                        vline: None,
                    },
                )?;
            }
        }
        StrategyOutcome::Dual(dual) => {
            let mut table = Table::new(&[
                "depth_m",
                "pressure_low_pa",
                "pressure_high_pa",
                "power_low_w",
                "power_high_w",
                "chosen",
                "delivered_power_w",
            ]);
            for (i, (lo, hi)) in dual.low.samples.iter().zip(&dual.high.samples).enumerate() {
                table.push_row(vec![
                    Cell::Num(lo.depth),
                    Cell::Num(lo.pressure),
                    Cell::Num(hi.pressure),
                    Cell::Num(lo.robot_power),
                    Cell::Num(hi.robot_power),
                    Cell::Text(if dual.chosen_high[i] { "high" } else { "low" }.to_string()),
                    Cell::Num(dual.delivered_power[i]),
                ]);
            }
            emitter.note(
                "crossover_depth_m",
                serde_json::to_value(dual.crossover_depth).unwrap(),
            );
            emitter.write_table(&request.out_dir, "mitigate_split_frequency.csv", &table)?;
            if request.plot {
                emitter.write_plot(
                    &request.out_dir,
                    "mitigate_split_frequency.svg",
                    &table,
                    &PlotSpec {
                        title: "Split frequencies".to_string(),
                        x_column: "depth_m".to_string(),
                        y_column: "delivered_power_w".to_string(),
                        series_column: None,
                        log_x: false,
                        log_y: true,
                        vline: dual.crossover_depth,
                    },
                )?;
            }
        }
        StrategyOutcome::Avoided { uniform, avoided } => {
            let mut table = Table::new(&[
                "depth_m",
                "pressure_uniform_pa",
                "power_uniform_w",
                "pressure_avoided_pa",
                "power_avoided_w",
            ]);
            for (u, a) in uniform.samples.iter().zip(&avoided.samples) {
                table.push_row(vec![
                    Cell::Num(u.depth),
                    Cell::Num(u.pressure),
                    Cell::Num(u.robot_power),
                    Cell::Num(a.pressure),
                    Cell::Num(a.robot_power),
                ]);
            }
            emitter.write_table(&request.out_dir, "mitigate_avoid_path.csv", &table)?;
        }
        StrategyOutcome::Burst(burst) => {
            let mut table = Table::new(&[
                "depth_m",
                "pressure_burst_pa",
                "power_burst_w",
                "power_baseline_w",
                "power_time_average_w",
            ]);
            for ((b, base), avg) in burst
                .burst
                .samples
                .iter()
                .zip(&burst.baseline.samples)
                .zip(&burst.time_average_power)
            {
                table.push_row(vec![
                    Cell::Num(b.depth),
                    Cell::Num(b.pressure),
                    Cell::Num(b.robot_power),
                    Cell::Num(base.robot_power),
                    Cell::Num(*avg),
                ]);
            }
            emitter.write_table(&request.out_dir, "mitigate_sync_duty.csv", &table)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep: repeat the swarm profile over one overridden parameter
// ---------------------------------------------------------------------------

fn sweep(raw: &Value, request: &RunRequest, emitter: &mut Emitter) -> Result<(), CliError> {
    let spec = request
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep requires --param and --values".to_string()))?;
    if spec.values.is_empty() {
        return Err(CliError::Usage("sweep requires at least one value".to_string()));
    }

    // resolve each point's scenario up front so errors surface in order
    let mut points = Vec::with_capacity(spec.values.len());
    for value_text in &spec.values {
        let mut raw_point = raw.clone();
        let (key, value) = parse_override(&format!("{}={}", spec.parameter, value_text))?;
        apply_override(&mut raw_point, &key, value)?;
        let scenario = Scenario::from_json_value(raw_point)?;
        let violations = validate_scenario(&scenario);
        if !violations.is_empty() {
            return Err(CliError::Validation(violations));
        }
        points.push((value_text.clone(), scenario));
    }

    let results: Vec<Result<FieldProfile, CliError>> = points
        .par_iter()
        .map(|(_, scenario)| swarm_profile_at(scenario, band_frequency(scenario)))
        .collect();

    let mut summary = Table::new(&[
        "param_value",
        "frequency_hz",
        "depth_m",
        "pressure_pa",
        "robot_power_w",
        "mean_robot_power_w",
        "total_swarm_power_w",
    ]);
    for (i, ((value_text, scenario), result)) in points.iter().zip(results).enumerate() {
        let profile = result?;
        let mut table = Table::new(&[
            "depth_m",
            "pressure_pa",
            "robot_power_w",
            "robot_attenuation_per_m",
        ]);
        for s in &profile.samples {
            table.push_row(vec![
                Cell::Num(s.depth),
                Cell::Num(s.pressure),
                Cell::Num(s.robot_power),
                Cell::Num(s.robot_attenuation),
            ]);
        }
        emitter.write_table(&request.out_dir, &format!("sweep_{i:03}.csv"), &table)?;

        let stats = swarm_power_summary(&profile, &scenario.swarm);
        for depth in depths_in_path(scenario) {
            let sample = profile.sample_at(depth);
            summary.push_row(vec![
                Cell::Text(value_text.clone()),
                Cell::Num(profile.frequency),
                Cell::Num(depth),
                Cell::Num(sample.pressure),
                Cell::Num(sample.robot_power),
                Cell::Num(stats.mean_robot_power),
                Cell::Num(stats.total_swarm_power),
            ]);
        }
    }
    emitter.note("sweep_parameter", serde_json::json!(spec.parameter));
    emitter.note("sweep_values", serde_json::to_value(&spec.values).unwrap());
    emitter.write_table(&request.out_dir, "sweep_summary.csv", &summary)?;
    if request.plot {
        emitter.write_plot(
            &request.out_dir,
            "sweep_summary.svg",
            &summary,
            &PlotSpec {
                title: format!("Sweep over {}", spec.parameter),
                x_column: "depth_m".to_string(),
                y_column: "robot_power_w".to_string(),
                series_column: Some("param_value".to_string()),
                log_x: false,
                log_y: true,
                vline: None,
            },
        )?;
    }
    Ok(())
}
