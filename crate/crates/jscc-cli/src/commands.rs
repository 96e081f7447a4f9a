//! Subcommand implementations.

use crate::output::{curve_csv, curve_svg, fmt_num, write_atomic, CurveRow};
use clap::{Args, ValueEnum};
use jscc::layered::{
    analytic_distortion, gaussianization_report, simulate_plan, LayerPlan, MixInput, SimOptions,
};
use jscc::model::{
    capacity, linear_layer_distortion, separation_distortion, shannon_lower_bound,
    DistortionProfile, SourceModel,
};
use jscc::optimize::{
    build_ladder, min_energy_linear, optimize_allocation, ppm_terminated_preset,
    preset_fig2_linear, preset_fig2_ppm, preset_fig3_scalar, verify_profile, LastLayer,
};
use jscc::ppm::{ppm_distortion_bound, ppm_optimized_beta_bound};
use std::fmt::Write as _;
use std::path::PathBuf;

/// Command error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    msg: String,
    code: i32,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.msg)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        self.code
    }

    fn config(msg: impl Into<String>) -> Self {
        Self { msg: msg.into(), code: 2 }
    }

    fn check(msg: impl Into<String>) -> Self {
        Self { msg: msg.into(), code: 4 }
    }
}

impl From<jscc::Error> for CliError {
    fn from(err: jscc::Error) -> Self {
        let code = match &err {
            jscc::Error::Infeasible(_) | jscc::Error::GoodnessSaturated { .. } => 3,
            _ => 2,
        };
        Self { msg: err.to_string(), code }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self { msg: format!("io: {err}"), code: 2 }
    }
}

type CmdResult = Result<(), CliError>;

fn db_grid(db_min: f64, db_max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points < 1 || db_max < db_min {
        return Err(CliError::config("invalid dB grid"));
    }
    if points == 1 {
        return Ok(vec![db_min]);
    }
    Ok((0..points)
        .map(|i| db_min + (db_max - db_min) * i as f64 / (points - 1) as f64)
        .collect())
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Gaussian,
    Uniform,
}

impl SourceArg {
    fn model(self, variance: f64) -> Result<SourceModel, CliError> {
        Ok(match self {
            SourceArg::Gaussian => SourceModel::gaussian(variance)?,
            SourceArg::Uniform => SourceModel::uniform((3.0 * variance).sqrt())?,
        })
    }
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct BoundsArgs {
    /// Grid start, in dB of ENR.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub db_min: f64,
    /// Grid end, in dB of ENR.
    #[arg(long, default_value_t = 40.0, allow_negative_numbers = true)]
    pub db_max: f64,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = SourceArg::Gaussian)]
    pub source: SourceArg,
    /// Source variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Pulse-width parameter for the PPM bound column.
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Output CSV path.
    #[arg(long, short)]
    pub out: PathBuf,
}

pub fn run_bounds(args: BoundsArgs) -> CmdResult {
    let source = args.source.model(args.sigma2)?;
    let grid = db_grid(args.db_min, args.db_max, args.points)?;
    let mut csv = String::from(
        "enr_db,enr,capacity_nats,separation,shannon_lower,linear_layer,\
         ppm_bound_total,ppm_bound_flag,ppm_opt_bound,ppm_opt_beta\n",
    );
    for &db in &grid {
        let enr = 10f64.powf(db / 10.0);
        let cap = capacity(enr)?;
        let sep = separation_distortion(&source, enr)?;
        let slb = shannon_lower_bound(&source, enr)?;
        let lin = linear_layer_distortion(args.sigma2, enr)?;
        // The PPM columns stay empty below the bound's validity threshold.
        let (ppm_total, ppm_flag) = match ppm_distortion_bound(enr, args.beta) {
            Ok(b) => (fmt_num(args.sigma2 * b.d_total), "ok"),
            Err(_) => (String::new(), "below_threshold"),
        };
        let (opt_bound, opt_beta) = match ppm_optimized_beta_bound(enr) {
            Ok(b) => (fmt_num(args.sigma2 * b.d), fmt_num(b.beta_star)),
            Err(_) => (String::new(), String::new()),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_num(db),
            fmt_num(enr),
            fmt_num(cap),
            fmt_num(sep),
            fmt_num(slb),
            fmt_num(lin),
            ppm_total,
            ppm_flag,
            opt_bound,
            opt_beta
        );
    }
    write_atomic(&args.out, &csv)?;
    println!("bounds: wrote {} rows to {}", grid.len(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// min-energy
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LastLayerArg {
    Linear,
    Ppm,
}

#[derive(Args)]
pub struct MinEnergyArgs {
    /// Profile decay order (must exceed 1).
    #[arg(long, default_value_t = 2.0)]
    pub order: f64,
    #[arg(long, value_enum, default_value_t = LastLayerArg::Linear)]
    pub last_layer: LastLayerArg,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1.0)]
    pub e_dsgn: f64,
    /// Profile enforcement floor for the reported ladder.
    #[arg(long, default_value_t = 1e-3)]
    pub n_min: f64,
    /// Verify thresholds and exit 4 on failure.
    #[arg(long)]
    pub check: bool,
}

pub fn run_min_energy(args: MinEnergyArgs) -> CmdResult {
    match args.last_layer {
        LastLayerArg::Linear => {
            let res = min_energy_linear(args.order, args.tol)?;
            let (x, alpha) = res.argmin;
            println!(
                "all-linear minimum energy: {:.6} x e_dsgn at (x, alpha) = ({:.4}, {:.4}) \
                 [{} evaluations]",
                res.value, x, alpha, res.evaluations
            );
            let ladder =
                build_ladder(args.e_dsgn, args.order, x * args.e_dsgn, alpha, args.n_min)?;
            println!(
                "ladder: {} layers, truncated total {:.6}, infinite total {:.6}",
                ladder.e_mid.len() + 1,
                ladder.total,
                ladder.total_infinite.unwrap_or(f64::NAN)
            );
            let profile = DistortionProfile::new(args.e_dsgn, args.order, args.n_min)?;
            let plan = jscc::optimize::build_plan(
                profile,
                SourceModel::std_gaussian(),
                &ladder,
                LastLayer::Linear,
                jscc::layered::RecursionRule::Relaxed,
            )?;
            let check = verify_profile(&plan, 400)?;
            println!(
                "profile check: ok = {}, worst margin {:.9} at n = {:.6e}",
                check.ok, check.worst_margin, check.worst_n
            );
            if args.check {
                if !check.ok {
                    return Err(CliError::check("profile verification failed"));
                }
                if (args.order - 2.0).abs() < 1e-9 && (res.value - 2.167).abs() > 0.002 {
                    return Err(CliError::check(format!(
                        "quadratic-profile minimum {:.4} is off the reference 2.167",
                        res.value
                    )));
                }
                if res.value >= 2.32 && (args.order - 2.0).abs() < 1e-9 {
                    return Err(CliError::check("minimum does not improve on 2.32"));
                }
            }
        }
        LastLayerArg::Ppm => {
            let profile = DistortionProfile::new(args.e_dsgn, args.order, args.n_min)?;
            let res = optimize_allocation(
                profile,
                SourceModel::std_gaussian(),
                LastLayer::Ppm,
                2000,
            )?;
            println!(
                "PPM-terminated total: {:.6} x e_dsgn over {} layers [{} evaluations]",
                res.total_energy / args.e_dsgn,
                res.plan.layer_count(),
                res.evaluations
            );
            let reference = ppm_terminated_preset(args.e_dsgn)?;
            println!(
                "reference allocation: total {:.6} x e_dsgn, beta {:.2}",
                reference.total / args.e_dsgn,
                reference.ppm_beta.unwrap_or(f64::NAN)
            );
            let check = verify_profile(&res.plan, 400)?;
            println!(
                "profile check: ok = {}, worst margin {:.9} at n = {:.6e}",
                check.ok, check.worst_margin, check.worst_n
            );
            if args.check {
                if !check.ok {
                    return Err(CliError::check("profile verification failed"));
                }
                if res.total_energy / args.e_dsgn > 1.962 + 1e-6 {
                    return Err(CliError::check(format!(
                        "PPM-terminated total {:.4} exceeds the 1.962 reference",
                        res.total_energy / args.e_dsgn
                    )));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// figure
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Eleven-layer all-linear analytic curve (Gaussian source).
    #[value(name = "fig2_linear", alias = "fig2-linear")]
    Fig2Linear,
    /// Seven-layer PPM-terminated analytic curve (Gaussian source).
    #[value(name = "fig2_ppm", alias = "fig2-ppm")]
    Fig2Ppm,
    /// Two-layer scalar Monte Carlo curve (uniform source, k = 1).
    #[value(name = "fig3_scalar", alias = "fig3-scalar")]
    Fig3Scalar,
}

#[derive(Args)]
pub struct FigureArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Optional SVG chart path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Grid start, in dB of e_dsgn/N (preset default when omitted).
    #[arg(long, allow_negative_numbers = true)]
    pub db_min: Option<f64>,
    /// Grid end, in dB of e_dsgn/N (preset default when omitted).
    #[arg(long, allow_negative_numbers = true)]
    pub db_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub e_dsgn: f64,
    /// Trials per grid point (Monte Carlo presets).
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Mandatory for Monte Carlo presets.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Assert the preset's curve contract and exit 4 on violation.
    #[arg(long)]
    pub check: bool,
}

pub fn run_figure(args: FigureArgs) -> CmdResult {
    let (plan, analytic, db_lo, db_hi, points): (LayerPlan, bool, f64, f64, usize) =
        match args.preset {
            Preset::Fig2Linear => {
                // A truncated all-linear ladder enforces the profile down to
                // its deepest level only; the default grid stops there.
                let plan = preset_fig2_linear(args.e_dsgn)?;
                let db_floor = 10.0 * (args.e_dsgn / plan.profile.n_min).log10();
                (plan, true, 0.0, db_floor, 81)
            }
            Preset::Fig2Ppm => (preset_fig2_ppm(args.e_dsgn)?, true, 0.0, 40.0, 81),
            Preset::Fig3Scalar => (preset_fig3_scalar(args.e_dsgn)?, false, 10.0, 35.0, 6),
        };
    let db_lo = args.db_min.unwrap_or(db_lo);
    let db_hi = args.db_max.unwrap_or(db_hi);
    let points = args.points.unwrap_or(points);
    let grid = db_grid(db_lo, db_hi, points)?;
    let sigma2 = plan.source.variance;

    let mut rows = Vec::with_capacity(grid.len());
    let mut cis = Vec::with_capacity(grid.len());
    for &db in &grid {
        let n = args.e_dsgn * 10f64.powf(-db / 10.0);
        let ceiling = plan.profile.ceiling(sigma2, n)?;
        let (distortion, ci) = if analytic {
            (analytic_distortion(&plan, n)?, 0.0)
        } else {
            let seed = args
                .seed
                .ok_or_else(|| CliError::config("--seed is mandatory for Monte Carlo presets"))?;
            let est = simulate_plan(&plan, n, &SimOptions::new(args.trials, seed, 1))?;
            (est.d_hat, est.ci95)
        };
        rows.push(CurveRow {
            edsgn_over_n_db: db,
            distortion,
            profile_ceiling: ceiling,
            accumulated_energy: plan.accumulated_energy(n),
            layers_used: plan.receiver_layer(n),
        });
        cis.push(ci);
    }
    emit_curve(&rows, &args.out, args.svg.as_deref())?;
    println!(
        "figure: wrote {} rows to {} (total energy {:.6}, layers {})",
        rows.len(),
        args.out.display(),
        plan.total_energy(),
        plan.layer_count()
    );

    if args.check {
        // Full-plan energy once every layer is engaged.
        let total = plan.total_energy();
        // The profile contract applies at and above the enforcement floor.
        let db_floor = 10.0 * (args.e_dsgn / plan.profile.n_min).log10() + 1e-9;
        let in_band: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].edsgn_over_n_db <= db_floor)
            .collect();
        let rows: Vec<CurveRow> = in_band.iter().map(|&i| rows[i]).collect();
        let cis: Vec<f64> = in_band.iter().map(|&i| cis[i]).collect();
        match args.preset {
            Preset::Fig2Linear => {
                check_curve_under_ceiling(&rows, &cis, 0.0)?;
                if total > 2.17 * args.e_dsgn {
                    return Err(CliError::check(format!(
                        "accumulated energy {total:.4} exceeds 2.17 x e_dsgn"
                    )));
                }
            }
            Preset::Fig2Ppm => {
                check_curve_under_ceiling(&rows, &cis, 0.0)?;
                if (total - 1.9620 * args.e_dsgn).abs() > 1e-4 {
                    return Err(CliError::check(format!(
                        "accumulated energy ends at {total:.5}, expected 1.9620 x e_dsgn"
                    )));
                }
            }
            Preset::Fig3Scalar => check_curve_under_ceiling(&rows, &cis, 3.0)?,
        }
    }
    Ok(())
}

fn check_curve_under_ceiling(rows: &[CurveRow], cis: &[f64], ci_mult: f64) -> CmdResult {
    let mut failures = Vec::new();
    for (r, &ci) in rows.iter().zip(cis) {
        let allowance = r.profile_ceiling * (1.0 + 1e-9) + ci_mult * ci;
        if r.distortion > allowance {
            failures.push(format!(
                "{:.1} dB: distortion {:.4e} > ceiling {:.4e} (margin {:.2})",
                r.edsgn_over_n_db,
                r.distortion,
                r.profile_ceiling,
                r.distortion / r.profile_ceiling
            ));
        }
    }
    if failures.is_empty() {
        println!("check: all {} grid points under the profile ceiling", rows.len());
        Ok(())
    } else {
        Err(CliError::check(format!(
            "{} of {} grid points exceed the ceiling:\n  {}",
            failures.len(),
            rows.len(),
            failures.join("\n  ")
        )))
    }
}

fn emit_curve(
    rows: &[CurveRow],
    out: &std::path::Path,
    svg: Option<&std::path::Path>,
) -> CmdResult {
    write_atomic(out, &curve_csv(rows))?;
    if let Some(svg_path) = svg {
        let xs: Vec<f64> = rows.iter().map(|r| r.edsgn_over_n_db).collect();
        let d: Vec<f64> = rows.iter().map(|r| r.distortion).collect();
        let c: Vec<f64> = rows.iter().map(|r| r.profile_ceiling).collect();
        let chart = curve_svg(&xs, &[("distortion", d), ("profile ceiling", c)]);
        write_atomic(svg_path, &chart)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct SimulateArgs {
    /// Plan file (TOML).
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub db_min: f64,
    #[arg(long, default_value_t = 35.0, allow_negative_numbers = true)]
    pub db_max: f64,
    #[arg(long, default_value_t = 6)]
    pub points: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Mandatory seed (reproducibility contract).
    #[arg(long)]
    pub seed: u64,
    /// Source block length.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Optional Walsh-Hadamard mixing batch (power of two, at least k).
    #[arg(long)]
    pub b: Option<usize>,
    /// Assert every point sits under the ceiling plus 3 confidence
    /// intervals; exit 4 otherwise.
    #[arg(long)]
    pub check: bool,
}

pub fn run_simulate(args: SimulateArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.plan)?;
    let plan = LayerPlan::from_toml(&text)?;
    let grid = db_grid(args.db_min, args.db_max, args.points)?;
    let sigma2 = plan.source.variance;
    let e_dsgn = plan.profile.e_dsgn;
    let mut rows = Vec::with_capacity(grid.len());
    let mut cis = Vec::with_capacity(grid.len());
    for &db in &grid {
        let n = e_dsgn * 10f64.powf(-db / 10.0);
        let mut opts = SimOptions::new(args.trials, args.seed, args.k);
        if let Some(b) = args.b {
            opts = opts.with_mixing(b);
        }
        let est = simulate_plan(&plan, n, &opts)?;
        rows.push(CurveRow {
            edsgn_over_n_db: db,
            distortion: est.d_hat,
            profile_ceiling: plan.profile.ceiling(sigma2, n)?,
            accumulated_energy: plan.accumulated_energy(n),
            layers_used: est.layers_used,
        });
        cis.push(est.ci95);
    }
    emit_curve(&rows, &args.out, args.svg.as_deref())?;
    println!("simulate: wrote {} rows to {}", rows.len(), args.out.display());
    if args.check {
        check_curve_under_ceiling(&rows, &cis, 3.0)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gaussianize
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MixInputArg {
    Dither,
    Gaussian,
}

#[derive(Args)]
pub struct GaussianizeArgs {
    /// Comma-separated ascending powers of two.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 16, 256])]
    pub b_list: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MixInputArg::Dither)]
    pub input: MixInputArg,
    /// Dither cell spacing (dither input).
    #[arg(long, default_value_t = 3.4641016151377544)]
    pub spacing: f64,
    /// Standard deviation (gaussian input).
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, short)]
    pub out: PathBuf,
}

pub fn run_gaussianize(args: GaussianizeArgs) -> CmdResult {
    let input = match args.input {
        MixInputArg::Dither => MixInput::DitherUniform { spacing: args.spacing },
        MixInputArg::Gaussian => MixInput::Gaussian { sigma: args.sigma },
    };
    let report = gaussianization_report(input, &args.b_list, args.runs, args.seed)?;
    let mut csv = String::from("b,ks_mean,ks_std\n");
    for row in &report.rows {
        let _ = writeln!(csv, "{},{},{}", row.b, fmt_num(row.ks_mean), fmt_num(row.ks_std));
    }
    write_atomic(&args.out, &csv)?;
    println!(
        "gaussianize: wrote {} rows to {} (monotone decrease: {})",
        report.rows.len(),
        args.out.display(),
        report.monotone_decreasing
    );
    Ok(())
}
