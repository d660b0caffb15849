//! Command-line driver: scenario construction, solves, reports, exports.
//!
//! Exit codes: 0 success, 1 usage error, 2 solver failure, 3 scenario or
//! i/o error. Reports are printed as aligned plain text and, with `--out`,
//! written as JSON next to the exported fields.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    compare, hotspot_report, rise_settling_time_ns, tier_profile, HotspotReport, TierStat,
};
use crate::calibrate::{calibrate_to_peak, CalibrateError};
use crate::electrical::{joule_heat, solve_potential, ElectricalError};
use crate::field::ScalarField;
use crate::geometry::presets::{
    add_dielectric_medium, add_extraction_features, build_fabric, default_placement,
    probe_selector, scale_sources, tier_selectors, total_prescribed_power, Fabric, FabricOptions,
    DEFAULT_DIELECTRIC_MARGIN, SINK_TEMPERATURE,
};
use crate::geometry::{voxelize, Scenario};
use crate::grid::VoxelGrid;
use crate::io::csv::write_trace_csv;
use crate::io::scenario::{load_scenario, save_scenario};
use crate::io::vtk::write_vtk;
use crate::io::IoError;
use crate::materials::builtin_library;
use crate::thermal::{
    run_transient, solve_steady, source_density, Probe, SteadySolution, ThermalError,
    TransientOptions, DEFAULT_TOL,
};
use crate::verify;

#[derive(Parser)]
#[command(
    name = "thermgrid",
    version,
    about = "Voxel-based 3-D electro-thermal simulator for transistor-level 3-D ICs",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize a scenario and print grid statistics.
    Build(BuildArgs),
    /// Solve the steady-state temperature field and report hotspots.
    Steady(SteadyArgs),
    /// Run a transient solve with the scenario's source schedule.
    Transient(TransientArgs),
    /// Steady solve reported as a tier-by-tier temperature profile.
    Report(SteadyArgs),
    /// Compare a fabric baseline against a variant with extra features.
    Compare(CompareArgs),
    /// Find the source power that puts the steady peak at a target.
    Calibrate(CalibrateArgs),
    /// Run the built-in oracle verification suite.
    Verify,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario JSON file (alternative to --fabric).
    #[arg(long, conflicts_with = "fabric")]
    scenario: Option<PathBuf>,
    /// Built-in fabric preset.
    #[arg(long, value_enum)]
    fabric: Option<FabricArg>,
    /// Voxel spacing in nm (fabric presets only).
    #[arg(long, default_value_t = 1)]
    spacing: u32,
    /// Surround the structure with the heat-spreading dielectric medium.
    #[arg(long)]
    dielectric: bool,
    /// Add the heat-extraction features (thermal junction, connector, pillar).
    #[arg(long)]
    extraction: bool,
    /// Skybridge stack height (number of stacked transistors).
    #[arg(long, default_value_t = 3)]
    stack: u8,
}

#[derive(Args, Clone)]
struct PowerArgs {
    /// Scale prescribed sources to this total power (W).
    #[arg(long, conflicts_with = "calibrate_to")]
    power: Option<f64>,
    /// Calibrate source power so the bare-fabric baseline peaks at this
    /// temperature (K); the same power is then applied to the requested
    /// variant.
    #[arg(long)]
    calibrate_to: Option<f64>,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Relative solver tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Output directory for reports and exported fields.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact formats to write into --out (repeatable).
    #[arg(long, value_enum)]
    format: Vec<Format>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output directory for the voxelized scenario JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SteadyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    power: PowerArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TransientArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    power: PowerArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Time step (ns).
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// End time (ns).
    #[arg(long, default_value_t = 200.0)]
    t_end: f64,
    /// Probe region selector (repeatable; trailing `*` matches prefixes).
    #[arg(long)]
    probe: Vec<String>,
    /// Override the scenario's duty cycle (1.0 holds the source on).
    #[arg(long)]
    duty: Option<f64>,
    /// Override the scenario's schedule period (ns).
    #[arg(long)]
    period: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    power: PowerArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Target steady peak temperature (K).
    #[arg(long)]
    calibrate_to: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FabricArg {
    M3d,
    Sn3d,
    Skybridge,
}

impl From<FabricArg> for Fabric {
    fn from(f: FabricArg) -> Fabric {
        match f {
            FabricArg::M3d => Fabric::M3d,
            FabricArg::Sn3d => Fabric::Sn3d,
            FabricArg::Skybridge => Fabric::Skybridge,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Vtk,
    Csv,
    Json,
}

/// Errors mapped onto the exit-code contract.
enum CliError {
    Usage(String),
    Solver(String),
    Scenario(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Scenario(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Solver(m) | CliError::Scenario(m) => m,
        }
    }
}

impl From<ThermalError> for CliError {
    fn from(e: ThermalError) -> Self {
        match e {
            ThermalError::Solver(_) => CliError::Solver(e.to_string()),
            _ => CliError::Scenario(e.to_string()),
        }
    }
}

impl From<ElectricalError> for CliError {
    fn from(e: ElectricalError) -> Self {
        match e {
            ElectricalError::Solver(_) => CliError::Solver(e.to_string()),
            _ => CliError::Scenario(e.to_string()),
        }
    }
}

impl From<CalibrateError> for CliError {
    fn from(e: CalibrateError) -> Self {
        match e {
            CalibrateError::Thermal(ThermalError::Solver(_)) => CliError::Solver(e.to_string()),
            _ => CliError::Scenario(e.to_string()),
        }
    }
}

impl From<crate::geometry::GeometryError> for CliError {
    fn from(e: crate::geometry::GeometryError) -> Self {
        CliError::Scenario(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Scenario(e.to_string())
    }
}

impl From<crate::analysis::AnalysisError> for CliError {
    fn from(e: crate::analysis::AnalysisError) -> Self {
        CliError::Scenario(e.to_string())
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let threads = match thread_cap() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return e.exit_code();
        }
    };

    let result = match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Steady(a) => cmd_steady(&a, threads, false),
        Command::Report(a) => cmd_steady(&a, threads, true),
        Command::Transient(a) => cmd_transient(&a, threads),
        Command::Compare(a) => cmd_compare(&a, threads),
        Command::Calibrate(a) => cmd_calibrate(&a, threads),
        Command::Verify => cmd_verify(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// THERMGRID_THREADS caps solver parallelism; the solver runs serially, so
/// any positive cap is honored. A malformed value is a usage error.
fn thread_cap() -> Result<usize, CliError> {
    match std::env::var("THERMGRID_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Usage(format!(
                "THERMGRID_THREADS must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(1),
    }
}

struct Built {
    scenario: Scenario,
    name: String,
    fabric: Option<Fabric>,
    stack: u8,
}

fn build_scenario(args: &ScenarioArgs) -> Result<Built, CliError> {
    if let Some(path) = &args.scenario {
        if args.extraction {
            return Err(CliError::Usage(
                "--extraction requires --fabric (the placement derives from the preset)".into(),
            ));
        }
        let mut s = load_scenario(path)?;
        s.validate()?;
        if args.dielectric {
            s = add_dielectric_medium(&s, DEFAULT_DIELECTRIC_MARGIN)?;
        }
        return Ok(Built {
            scenario: s,
            name: path.display().to_string(),
            fabric: None,
            stack: args.stack,
        });
    }
    let Some(fabric) = args.fabric else {
        return Err(CliError::Usage(
            "either --fabric or --scenario is required".into(),
        ));
    };
    let fabric: Fabric = fabric.into();
    let opts = FabricOptions {
        dielectric: args.dielectric,
        extraction: args.extraction,
        spacing_nm: args.spacing,
        stack: args.stack,
        dielectric_margin_nm: DEFAULT_DIELECTRIC_MARGIN,
    };
    let scenario = build_fabric(fabric, &opts)?;
    let mut name = format!("{fabric:?}").to_lowercase();
    if args.extraction {
        name.push_str("+extraction");
    }
    if args.dielectric {
        name.push_str("+dielectric");
    }
    Ok(Built {
        scenario,
        name,
        fabric: Some(fabric),
        stack: args.stack,
    })
}

#[derive(Serialize, Clone)]
struct CalibrationReport {
    target_k: f64,
    scale: f64,
    power_w: f64,
    baseline_peak_k: f64,
}

/// Apply --power / --calibrate-to to a built scenario. Calibration always
/// runs on the bare fabric baseline so feature variants reuse the same
/// dissipation, mirroring the measurement workflow.
fn apply_power(
    built: &mut Built,
    args: &ScenarioArgs,
    power: &PowerArgs,
    tol: f64,
) -> Result<Option<CalibrationReport>, CliError> {
    if let Some(target) = power.calibrate_to {
        let db = builtin_library();
        let baseline = match built.fabric {
            Some(f) => build_fabric(
                f,
                &FabricOptions {
                    dielectric: false,
                    extraction: false,
                    spacing_nm: args.spacing,
                    stack: args.stack,
                    dielectric_margin_nm: DEFAULT_DIELECTRIC_MARGIN,
                },
            )?,
            None => built.scenario.clone(),
        };
        let (_, cal) = calibrate_to_peak(&baseline, &db, target, tol)?;
        scale_sources(&mut built.scenario, cal.scale);
        return Ok(Some(CalibrationReport {
            target_k: target,
            scale: cal.scale,
            power_w: cal.power,
            baseline_peak_k: cal.peak,
        }));
    }
    if let Some(p) = power.power {
        let p0 = total_prescribed_power(&built.scenario);
        if !(p0 > 0.0) {
            return Err(CliError::Scenario(
                "scenario has no prescribed source power to scale".into(),
            ));
        }
        if !(p >= 0.0) {
            return Err(CliError::Usage(format!("--power must be >= 0, got {p}")));
        }
        scale_sources(&mut built.scenario, p / p0);
    }
    Ok(None)
}

/// Heat density for the scenario: prescribed sources plus, when an
/// electrical spec is present, the Joule field of the potential solve.
fn heat_density(
    grid: &VoxelGrid,
    scenario: &Scenario,
    tol: f64,
) -> Result<ScalarField, CliError> {
    let joule = match &scenario.electrical {
        Some(spec) => {
            let pot = solve_potential(grid, spec, tol)?;
            Some(joule_heat(grid, &pot)?)
        }
        None => None,
    };
    Ok(source_density(grid, &scenario.sources, joule.as_ref())?)
}

fn tier_list(built: &Built) -> Vec<String> {
    match built.fabric {
        Some(f) => tier_selectors(f, built.stack),
        None => vec!["*".to_string()],
    }
}

#[derive(Serialize)]
struct PeakReport {
    temperature_k: f64,
    voxel: [usize; 3],
    position_nm: [f64; 3],
    region: String,
    material: String,
}

#[derive(Serialize)]
struct TierReport {
    selector: String,
    voxels: usize,
    mean_k: f64,
    max_k: f64,
}

#[derive(Serialize)]
struct TransientReport {
    dt_ns: f64,
    t_end_ns: f64,
    steps: usize,
    period_ns: f64,
    duty: f64,
    cg_iterations: usize,
    probes: Vec<ProbeReport>,
}

#[derive(Serialize)]
struct ProbeReport {
    selector: String,
    final_k: f64,
    max_k: f64,
    /// Time to reach 99% of the final rise, when the probe heats at all.
    t99_ns: Option<f64>,
}

#[derive(Serialize)]
struct ComparisonReport {
    baseline: String,
    variant: String,
    ambient_k: f64,
    baseline_peak_k: f64,
    variant_peak_k: f64,
    delta_peak_k: f64,
    /// Reduction of the rise above ambient, % of the baseline rise.
    rise_reduction_pct: f64,
    /// Reduction of the absolute peak, % of the baseline peak.
    peak_reduction_pct: f64,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    scenario: String,
    spacing_nm: u32,
    grid_dims: [usize; 3],
    active_voxels: usize,
    tol: f64,
    thread_cap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<CalibrationReport>,
    source_power_w: f64,
    sink_flux_w: f64,
    balance_residual: f64,
    cg_iterations: usize,
    peak: PeakReport,
    tiers: Vec<TierReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transient: Option<TransientReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<ComparisonReport>,
}

fn peak_report(rep: &HotspotReport) -> PeakReport {
    PeakReport {
        temperature_k: rep.peak.temperature,
        voxel: rep.peak.voxel,
        position_nm: rep.peak.position_nm,
        region: rep.peak.label.clone(),
        material: rep.peak.material.clone(),
    }
}

fn tier_reports(stats: &[TierStat]) -> Vec<TierReport> {
    stats
        .iter()
        .map(|t| TierReport {
            selector: t.selector.clone(),
            voxels: t.voxels,
            mean_k: t.mean,
            max_k: t.max,
        })
        .collect()
}

fn print_report(r: &RunReport) {
    let kv = |k: &str, v: String| println!("{k:<22} {v}");
    kv("command", r.command.clone());
    kv("scenario", r.scenario.clone());
    kv(
        "grid",
        format!(
            "{} x {} x {} voxels at {} nm ({} active)",
            r.grid_dims[0], r.grid_dims[1], r.grid_dims[2], r.spacing_nm, r.active_voxels
        ),
    );
    kv(
        "solver",
        format!(
            "tol {:.1e}, {} CG iterations, thread cap {}",
            r.tol, r.cg_iterations, r.thread_cap
        ),
    );
    if let Some(c) = &r.calibration {
        kv(
            "calibration",
            format!(
                "target {:.2} K -> power {:.4e} W (scale {:.4e}, baseline peak {:.3} K)",
                c.target_k, c.power_w, c.scale, c.baseline_peak_k
            ),
        );
    }
    kv(
        "power",
        format!(
            "in {:.6e} W, out {:.6e} W, balance residual {:.2e}",
            r.source_power_w, r.sink_flux_w, r.balance_residual
        ),
    );
    kv(
        "peak",
        format!(
            "{:.3} K at ({:.0}, {:.0}, {:.0}) nm in region '{}' ({})",
            r.peak.temperature_k,
            r.peak.position_nm[0],
            r.peak.position_nm[1],
            r.peak.position_nm[2],
            r.peak.region,
            r.peak.material
        ),
    );
    if !r.tiers.is_empty() {
        println!("{:<22} {:>10} {:>12} {:>12}", "tier", "voxels", "mean K", "max K");
        for t in &r.tiers {
            println!(
                "{:<22} {:>10} {:>12.3} {:>12.3}",
                t.selector, t.voxels, t.mean_k, t.max_k
            );
        }
    }
    if let Some(tr) = &r.transient {
        kv(
            "transient",
            format!(
                "dt {} ns, t_end {} ns ({} steps), schedule {}% of {} ns, {} CG iterations",
                tr.dt_ns,
                tr.t_end_ns,
                tr.steps,
                tr.duty * 100.0,
                tr.period_ns,
                tr.cg_iterations
            ),
        );
        println!("{:<22} {:>12} {:>12} {:>12}", "probe", "final K", "max K", "t99 ns");
        for p in &tr.probes {
            println!(
                "{:<22} {:>12.3} {:>12.3} {:>12}",
                p.selector,
                p.final_k,
                p.max_k,
                p.t99_ns.map_or("-".to_string(), |t| format!("{t:.2}"))
            );
        }
    }
    if let Some(c) = &r.comparison {
        kv(
            "comparison",
            format!("'{}' vs '{}'", c.baseline, c.variant),
        );
        kv(
            "peaks",
            format!(
                "{:.3} K -> {:.3} K (delta {:.3} K)",
                c.baseline_peak_k, c.variant_peak_k, c.delta_peak_k
            ),
        );
        kv(
            "reduction",
            format!(
                "{:.1}% of the absolute peak, {:.1}% of the rise above {:.0} K",
                c.peak_reduction_pct, c.rise_reduction_pct, c.ambient_k
            ),
        );
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Scenario(format!("report serialization failed: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| IoError::file(path, e))?;
    Ok(())
}

fn prepare_out(out: &Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

fn formats_or(defaults: &[Format], chosen: &[Format]) -> Vec<Format> {
    if chosen.is_empty() {
        defaults.to_vec()
    } else {
        chosen.to_vec()
    }
}

fn cmd_build(args: &BuildArgs) -> Result<i32, CliError> {
    let built = build_scenario(&args.scenario)?;
    let grid = voxelize(&built.scenario, &builtin_library())?;
    println!("{:<22} {}", "scenario", built.name);
    println!(
        "{:<22} {} x {} x {} voxels at {} nm",
        "grid", grid.dims[0], grid.dims[1], grid.dims[2], grid.spacing_nm
    );
    println!(
        "{:<22} {} active / {} total",
        "voxels",
        grid.n_active(),
        grid.voxel_count()
    );
    println!(
        "{:<22} {:.4e} W prescribed over {} sources",
        "power",
        total_prescribed_power(&built.scenario),
        built.scenario.sources.len()
    );
    println!("{:<22} {:>12} {:>10}", "region", "voxels", "material");
    for (i, name) in grid.label_names.iter().enumerate().skip(1) {
        let voxels: Vec<u32> = grid
            .active_voxels()
            .iter()
            .copied()
            .filter(|&v| grid.label_index(v as usize) as usize == i)
            .collect();
        if voxels.is_empty() {
            continue;
        }
        let mat = grid.material_at(voxels[0] as usize).name.clone();
        println!("{name:<22} {:>12} {mat:>10}", voxels.len());
    }
    if let Some(dir) = prepare_out(&args.out)? {
        let path = dir.join("scenario.json");
        save_scenario(&path, &built.scenario)?;
        println!("{:<22} {}", "wrote", path.display());
    }
    Ok(0)
}

struct SteadyRun {
    grid: VoxelGrid,
    density: ScalarField,
    solution: SteadySolution,
}

fn run_steady(built: &Built, tol: f64) -> Result<SteadyRun, CliError> {
    let grid = voxelize(&built.scenario, &builtin_library())?;
    let density = heat_density(&grid, &built.scenario, tol)?;
    let solution = solve_steady(&grid, &built.scenario.sinks, &density, tol, None)?;
    Ok(SteadyRun {
        grid,
        density,
        solution,
    })
}

fn cmd_steady(args: &SteadyArgs, threads: usize, tiers_only: bool) -> Result<i32, CliError> {
    let mut built = build_scenario(&args.scenario)?;
    let calibration = apply_power(&mut built, &args.scenario, &args.power, args.output.tol)?;
    let run = run_steady(&built, args.output.tol)?;
    let rep = hotspot_report(
        &run.grid,
        &run.solution.temperature,
        &run.density,
        run.solution.sink_flux(),
    )?;
    let tiers = tier_profile(&run.grid, &run.solution.temperature, &tier_list(&built))?;
    let report = RunReport {
        command: if tiers_only { "report" } else { "steady" }.into(),
        scenario: built.name.clone(),
        spacing_nm: run.grid.spacing_nm,
        grid_dims: run.grid.dims,
        active_voxels: run.grid.n_active(),
        tol: args.output.tol,
        thread_cap: threads,
        calibration,
        source_power_w: rep.source_power,
        sink_flux_w: rep.sink_flux,
        balance_residual: rep.balance_residual,
        cg_iterations: run.solution.stats.iterations,
        peak: peak_report(&rep),
        tiers: tier_reports(&tiers),
        transient: None,
        comparison: None,
    };
    print_report(&report);
    if let Some(dir) = prepare_out(&args.output.out)? {
        for f in formats_or(&[Format::Json, Format::Vtk], &args.output.format) {
            match f {
                Format::Json => write_json(&dir.join("report.json"), &report)?,
                Format::Vtk => write_vtk(
                    &dir.join("temperature.vtk"),
                    &run.grid,
                    &run.solution.temperature,
                    SINK_TEMPERATURE,
                )?,
                Format::Csv => {}
            }
        }
    }
    Ok(0)
}

fn cmd_transient(args: &TransientArgs, threads: usize) -> Result<i32, CliError> {
    let mut built = build_scenario(&args.scenario)?;
    let calibration = apply_power(&mut built, &args.scenario, &args.power, args.output.tol)?;
    let mut schedule = built.scenario.schedule.clone();
    if let Some(d) = args.duty {
        schedule.duty = d;
    }
    if let Some(p) = args.period {
        schedule.period_ns = p;
    }
    schedule.validate()?;

    let grid = voxelize(&built.scenario, &builtin_library())?;
    let density = heat_density(&grid, &built.scenario, args.output.tol)?;
    let selectors: Vec<String> = if args.probe.is_empty() {
        match built.fabric {
            Some(f) => vec![probe_selector(f, built.stack)],
            None => vec!["*".to_string()],
        }
    } else {
        args.probe.clone()
    };
    let probes: Vec<Probe> = selectors
        .iter()
        .map(|s| Probe {
            name: s.clone(),
            selector: s.clone(),
        })
        .collect();
    let ambient = built
        .scenario
        .sinks
        .first()
        .map(|p| p.temperature)
        .unwrap_or(SINK_TEMPERATURE);
    let opts = TransientOptions {
        dt_ns: args.dt,
        t_end_ns: args.t_end,
        tol: args.output.tol,
        ambient,
    };
    let sol = run_transient(&grid, &built.scenario.sinks, &density, &schedule, &probes, &opts)?;

    let probe_reports: Vec<ProbeReport> = selectors
        .iter()
        .map(|s| {
            let series = sol.trace.probe(s).unwrap();
            ProbeReport {
                selector: s.clone(),
                final_k: *series.last().unwrap(),
                max_k: series.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                t99_ns: rise_settling_time_ns(&sol.trace.times_ns, series, ambient, 0.99),
            }
        })
        .collect();
    let rep = hotspot_report(&grid, &sol.temperature, &density, f64::NAN)?;
    let tiers = tier_profile(&grid, &sol.temperature, &tier_list(&built))?;
    let report = RunReport {
        command: "transient".into(),
        scenario: built.name.clone(),
        spacing_nm: grid.spacing_nm,
        grid_dims: grid.dims,
        active_voxels: grid.n_active(),
        tol: args.output.tol,
        thread_cap: threads,
        calibration,
        source_power_w: rep.source_power,
        sink_flux_w: f64::NAN,
        balance_residual: f64::NAN,
        cg_iterations: sol.total_cg_iterations,
        peak: peak_report(&rep),
        tiers: tier_reports(&tiers),
        transient: Some(TransientReport {
            dt_ns: args.dt,
            t_end_ns: args.t_end,
            steps: sol.steps,
            period_ns: schedule.period_ns,
            duty: schedule.duty,
            cg_iterations: sol.total_cg_iterations,
            probes: probe_reports,
        }),
        comparison: None,
    };
    print_report(&report);
    if let Some(dir) = prepare_out(&args.output.out)? {
        for f in formats_or(&[Format::Json, Format::Csv], &args.output.format) {
            match f {
                Format::Json => write_json(&dir.join("report.json"), &report)?,
                Format::Csv => write_trace_csv(&dir.join("trace.csv"), &sol.trace)?,
                Format::Vtk => write_vtk(
                    &dir.join("temperature.vtk"),
                    &grid,
                    &sol.temperature,
                    ambient,
                )?,
            }
        }
    }
    Ok(0)
}

fn cmd_compare(args: &CompareArgs, threads: usize) -> Result<i32, CliError> {
    if !(args.scenario.dielectric || args.scenario.extraction) {
        return Err(CliError::Usage(
            "compare needs at least one variant feature (--dielectric and/or --extraction)".into(),
        ));
    }
    if args.scenario.fabric.is_none() {
        return Err(CliError::Usage("compare requires --fabric".into()));
    }
    let base_args = ScenarioArgs {
        dielectric: false,
        extraction: false,
        ..args.scenario.clone()
    };
    let mut base = build_scenario(&base_args)?;
    let calibration = apply_power(&mut base, &base_args, &args.power, args.output.tol)?;
    let mut variant = Built {
        scenario: base.scenario.clone(),
        name: build_scenario(&args.scenario)?.name,
        fabric: base.fabric,
        stack: base.stack,
    };
    let fabric = base.fabric.expect("checked above");
    if args.scenario.extraction {
        variant.scenario = add_extraction_features(
            &variant.scenario,
            &default_placement(fabric, base.stack),
        )?;
    }
    if args.scenario.dielectric {
        variant.scenario = add_dielectric_medium(&variant.scenario, DEFAULT_DIELECTRIC_MARGIN)?;
    }

    let run_a = run_steady(&base, args.output.tol)?;
    let run_b = run_steady(&variant, args.output.tol)?;
    let ambient = base
        .scenario
        .sinks
        .first()
        .map(|p| p.temperature)
        .unwrap_or(SINK_TEMPERATURE);
    let cmp = compare(
        &run_a.grid,
        &run_a.solution.temperature,
        &run_b.grid,
        &run_b.solution.temperature,
        ambient,
    )?;
    let rep_b = hotspot_report(
        &run_b.grid,
        &run_b.solution.temperature,
        &run_b.density,
        run_b.solution.sink_flux(),
    )?;
    let tiers = tier_profile(&run_b.grid, &run_b.solution.temperature, &tier_list(&variant))?;
    let report = RunReport {
        command: "compare".into(),
        scenario: variant.name.clone(),
        spacing_nm: run_b.grid.spacing_nm,
        grid_dims: run_b.grid.dims,
        active_voxels: run_b.grid.n_active(),
        tol: args.output.tol,
        thread_cap: threads,
        calibration,
        source_power_w: rep_b.source_power,
        sink_flux_w: rep_b.sink_flux,
        balance_residual: rep_b.balance_residual,
        cg_iterations: run_a.solution.stats.iterations + run_b.solution.stats.iterations,
        peak: peak_report(&rep_b),
        tiers: tier_reports(&tiers),
        transient: None,
        comparison: Some(ComparisonReport {
            baseline: base.name.clone(),
            variant: variant.name.clone(),
            ambient_k: cmp.ambient,
            baseline_peak_k: cmp.peak_a,
            variant_peak_k: cmp.peak_b,
            delta_peak_k: cmp.delta_peak,
            rise_reduction_pct: cmp.rise_reduction_pct,
            peak_reduction_pct: cmp.peak_reduction_pct,
        }),
    };
    print_report(&report);
    if let Some(dir) = prepare_out(&args.output.out)? {
        for f in formats_or(&[Format::Json], &args.output.format) {
            match f {
                Format::Json => write_json(&dir.join("report.json"), &report)?,
                Format::Vtk => write_vtk(
                    &dir.join("temperature.vtk"),
                    &run_b.grid,
                    &run_b.solution.temperature,
                    ambient,
                )?,
                Format::Csv => {}
            }
        }
    }
    Ok(0)
}

fn cmd_calibrate(args: &CalibrateArgs, threads: usize) -> Result<i32, CliError> {
    let built = build_scenario(&args.scenario)?;
    let db = builtin_library();
    let (calibrated, cal) =
        calibrate_to_peak(&built.scenario, &db, args.calibrate_to, args.output.tol)?;
    let rep = hotspot_report(
        &cal.grid,
        &cal.solution.temperature,
        &cal.density,
        cal.solution.sink_flux(),
    )?;
    let tiers = tier_profile(&cal.grid, &cal.solution.temperature, &tier_list(&built))?;
    let report = RunReport {
        command: "calibrate".into(),
        scenario: built.name.clone(),
        spacing_nm: cal.grid.spacing_nm,
        grid_dims: cal.grid.dims,
        active_voxels: cal.grid.n_active(),
        tol: args.output.tol,
        thread_cap: threads,
        calibration: Some(CalibrationReport {
            target_k: args.calibrate_to,
            scale: cal.scale,
            power_w: cal.power,
            baseline_peak_k: cal.peak,
        }),
        source_power_w: rep.source_power,
        sink_flux_w: rep.sink_flux,
        balance_residual: rep.balance_residual,
        cg_iterations: cal.solution.stats.iterations,
        peak: peak_report(&rep),
        tiers: tier_reports(&tiers),
        transient: None,
        comparison: None,
    };
    print_report(&report);
    if let Some(dir) = prepare_out(&args.output.out)? {
        save_scenario(&dir.join("scenario.json"), &calibrated)?;
        for f in formats_or(&[Format::Json], &args.output.format) {
            match f {
                Format::Json => write_json(&dir.join("report.json"), &report)?,
                Format::Vtk => write_vtk(
                    &dir.join("temperature.vtk"),
                    &cal.grid,
                    &cal.solution.temperature,
                    cal.ambient,
                )?,
                Format::Csv => {}
            }
        }
    }
    Ok(0)
}

fn cmd_verify() -> Result<i32, CliError> {
    let results = verify::run_all();
    let mut failed = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<34} {}", r.name, r.detail);
        if !r.passed {
            failed += 1;
        }
    }
    println!(
        "{} of {} checks passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        Err(CliError::Solver(format!("{failed} verification checks failed")))
    } else {
        Ok(0)
    }
}
