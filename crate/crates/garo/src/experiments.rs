//! Shared experiment drivers used by both the CLI and the test suites:
//! the micro-benchmark protocol, the kinematic-MPC reaching simulation,
//! the oriented-pointmass via-point problem and motor-interpolation sweeps.

use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::control::{
    circular_grasp_error, double_integrator, ilqr_solve, motor_pose_error, pointing_error,
    reach_error, tool_z_line, CostTerm, IlqrProblem,
};
use crate::dynamics::{forward_dynamics, inverse_dynamics};
use crate::error::{Error, Result};
use crate::ga::{embed_point, Multivector};
use crate::kinematics::{analytic_jacobian, forward_kinematics, geometric_jacobian_full};
use crate::model::RobotModel;
use crate::motor::{exp_bivector, motor_interpolate, Motor, ScrewBivector, MOTOR_BLADES};
use crate::primitives::{parse_primitive, Primitive, PrimitiveKind};

/// Deterministic RNG for tests and experiments.
pub fn test_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random vector in [−scale, scale]³ (test/experiment helper).
pub fn random_vec3(rng: &mut impl rand::Rng, scale: f64) -> nalgebra::Vector3<f64> {
    nalgebra::Vector3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

// ---------------------------------------------------------------------------
// Benchmarks
// ---------------------------------------------------------------------------

pub const BENCH_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchKernelStats {
    pub name: String,
    /// Median over repetitions of the per-execution mean, nanoseconds.
    pub median_ns: f64,
    pub mean_ns: f64,
    pub stddev_ns: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub model: String,
    pub executions: usize,
    pub repetitions: usize,
    pub kernels: Vec<BenchKernelStats>,
}

fn summarize(name: &str, mut per_rep_ns: Vec<f64>) -> BenchKernelStats {
    per_rep_ns.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = per_rep_ns.len();
    let median = if n % 2 == 1 {
        per_rep_ns[n / 2]
    } else {
        0.5 * (per_rep_ns[n / 2 - 1] + per_rep_ns[n / 2])
    };
    let mean = per_rep_ns.iter().sum::<f64>() / n as f64;
    let var = per_rep_ns.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    BenchKernelStats { name: name.into(), median_ns: median, mean_ns: mean, stddev_ns: var.sqrt() }
}

/// The Fig.-4 micro-benchmark protocol: each kernel is timed as the mean of
/// `executions` runs, repeated `repetitions` times; the reported statistics
/// are over the repetition means.  States are drawn once, deterministically,
/// and cycled.
pub fn run_bench(
    model: &RobotModel,
    executions: usize,
    repetitions: usize,
    seed: u64,
) -> Result<BenchReport> {
    let n = model.dof();
    let mut rng = test_rng(seed);
    let n_states = 64;
    let states: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..n_states)
        .map(|_| {
            let q: Vec<f64> =
                model.joints.iter().map(|j| rng.gen_range(j.limits.0..j.limits.1)).collect();
            let qd: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let qdd: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (q, qd, qdd)
        })
        .collect();
    // Torques that keep forward dynamics well-conditioned: the inverse
    // dynamics of the sampled accelerations.
    let taus: Vec<Vec<f64>> = states
        .iter()
        .map(|(q, qd, qdd)| inverse_dynamics(model, q, qd, qdd, None).as_slice().to_vec())
        .collect();

    let time_kernel = |name: &str, f: &mut dyn FnMut(usize)| -> BenchKernelStats {
        // Warmup.
        for i in 0..n_states {
            f(i);
        }
        let mut reps = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            for e in 0..executions {
                f(e % n_states);
            }
            reps.push(start.elapsed().as_nanos() as f64 / executions as f64);
        }
        summarize(name, reps)
    };

    let kernels = vec![
        time_kernel("forward_kinematics", &mut |i| {
            black_box(forward_kinematics(model, black_box(&states[i].0)));
        }),
        time_kernel("analytic_jacobian", &mut |i| {
            black_box(analytic_jacobian(model, black_box(&states[i].0)));
        }),
        time_kernel("geometric_jacobian", &mut |i| {
            black_box(geometric_jacobian_full(model, black_box(&states[i].0)));
        }),
        time_kernel("inverse_dynamics", &mut |i| {
            let (q, qd, qdd) = &states[i];
            black_box(inverse_dynamics(model, black_box(q), qd, qdd, None));
        }),
        time_kernel("forward_dynamics", &mut |i| {
            let (q, qd, _) = &states[i];
            black_box(forward_dynamics(model, black_box(q), qd, &taus[i], None).unwrap());
        }),
    ];

    Ok(BenchReport {
        schema_version: BENCH_SCHEMA_VERSION,
        model: model.name.clone(),
        executions,
        repetitions,
        kernels,
    })
}

/// Regression gate: kernels whose current median exceeds the baseline median
/// by more than `threshold` (fractional, e.g. 0.15 for ±15%).
pub fn bench_regressions(
    current: &BenchReport,
    baseline: &BenchReport,
    threshold: f64,
) -> Vec<String> {
    let mut out = Vec::new();
    for k in &current.kernels {
        if let Some(b) = baseline.kernels.iter().find(|b| b.name == k.name) {
            if k.median_ns > b.median_ns * (1.0 + threshold) {
                out.push(format!(
                    "{}: median {:.1} ns vs baseline {:.1} ns (+{:.1}%)",
                    k.name,
                    k.median_ns,
                    b.median_ns,
                    100.0 * (k.median_ns / b.median_ns - 1.0)
                ));
            }
        } else {
            out.push(format!("{}: missing from baseline", k.name));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Reaching simulation (kinematic MPC on the joint-space double integrator)
// ---------------------------------------------------------------------------

/// One target phase of a reaching task; `time` is when it becomes active.
#[derive(Clone, Debug, Deserialize)]
pub struct TargetSpec {
    #[serde(default)]
    pub time: f64,
    pub kind: String,
    pub literal: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ReachConfig {
    pub model: String,
    pub q0: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_plan_iters")]
    pub plan_iters: usize,
    #[serde(default = "default_cost_weight")]
    pub cost_weight: f64,
    #[serde(default = "default_control_weight")]
    pub control_weight: f64,
    #[serde(default = "default_damping_weight")]
    pub damping_weight: f64,
    /// Optional acceptance gate on the final error norm.
    pub error_threshold: Option<f64>,
    pub targets: Vec<TargetSpec>,
}

fn default_dt() -> f64 {
    0.01
}
fn default_steps() -> usize {
    300
}
fn default_horizon() -> usize {
    20
}
fn default_plan_iters() -> usize {
    5
}
fn default_cost_weight() -> f64 {
    1e3
}
fn default_control_weight() -> f64 {
    1e-3
}
fn default_damping_weight() -> f64 {
    1e-1
}

enum ReachTask {
    /// OPNS reach of tool X against target X_d.
    Opns { tool: Primitive, target: Primitive },
    Pointing { target: Primitive },
    GraspCircle { circle: Primitive },
}

impl ReachTask {
    fn parse(spec: &TargetSpec) -> Result<ReachTask> {
        let tool_point =
            Primitive { kind: PrimitiveKind::Point, mv: embed_point(nalgebra::Vector3::zeros()) };
        match spec.kind.as_str() {
            "point" | "pointpair" | "line" | "circle" | "plane" | "sphere" => {
                let target = parse_primitive(&spec.literal)?;
                if target.kind.name() != spec.kind {
                    return Err(Error::Config(format!(
                        "target kind '{}' does not match literal '{}'",
                        spec.kind, spec.literal
                    )));
                }
                Ok(ReachTask::Opns { tool: tool_point, target })
            }
            "pointing" => {
                let target = parse_primitive(&spec.literal)?;
                if target.kind != PrimitiveKind::Point {
                    return Err(Error::Config("pointing target must be a point literal".into()));
                }
                Ok(ReachTask::Pointing { target })
            }
            "grasp-circle" => {
                let circle = parse_primitive(&spec.literal)?;
                if circle.kind != PrimitiveKind::Circle {
                    return Err(Error::Config("grasp-circle target must be a circle literal".into()));
                }
                Ok(ReachTask::GraspCircle { circle })
            }
            other => Err(Error::Config(format!("unknown target kind '{other}'"))),
        }
    }

    fn error(&self, model: &RobotModel, q: &[f64]) -> Result<DVector<f64>> {
        match self {
            ReachTask::Opns { tool, target } => Ok(reach_error(model, q, tool, target)),
            ReachTask::Pointing { target } => Ok(pointing_error(model, q, target)),
            ReachTask::GraspCircle { circle } => circular_grasp_error(model, q, circle),
        }
    }

    fn cost_term<'a>(
        &'a self,
        model: &'a RobotModel,
        timesteps: Vec<usize>,
        weight: f64,
        dim: usize,
    ) -> CostTerm<'a> {
        let w = DMatrix::identity(dim, dim) * weight;
        match self {
            ReachTask::Opns { tool, target } => {
                CostTerm::reach(timesteps, w, model, tool.clone(), target.clone())
            }
            ReachTask::Pointing { target } => {
                CostTerm::reach(timesteps, w, model, tool_z_line(), target.clone())
            }
            ReachTask::GraspCircle { circle } => {
                CostTerm::circular_grasp(timesteps, w, model, circle.clone())
            }
        }
    }
}

pub struct ReachResult {
    pub header: Vec<String>,
    /// Per-step rows: t, q[1..N], error[1..K], ‖error‖.
    pub rows: Vec<Vec<f64>>,
    pub final_error: f64,
}

/// Nominal-MPC reaching: at every simulation step the joint-space double
/// integrator is re-planned over a short horizon against the currently
/// active target and only the first command is applied.
pub fn run_reach(model: &RobotModel, cfg: &ReachConfig) -> Result<ReachResult> {
    let n = model.dof();
    if cfg.q0.len() != n {
        return Err(Error::Config(format!("q0 has {} entries, model has {n}", cfg.q0.len())));
    }
    if cfg.targets.is_empty() {
        return Err(Error::Config("reach config lists no targets".into()));
    }
    let mut tasks: Vec<(f64, ReachTask)> = Vec::new();
    for spec in &cfg.targets {
        tasks.push((spec.time, ReachTask::parse(spec)?));
    }
    tasks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let sys = double_integrator(n, cfg.dt);
    let err_dim = tasks[0].1.error(model, &cfg.q0)?.len();
    for (_, t) in &tasks {
        if t.error(model, &cfg.q0)?.len() != err_dim {
            return Err(Error::Config(
                "scripted targets must share one error dimension (same kinds)".into(),
            ));
        }
    }

    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("q{i}")));
    header.extend((1..=err_dim).map(|i| format!("e{i}")));
    header.push("err_norm".into());

    let mut x = DVector::zeros(2 * n);
    for i in 0..n {
        x[i] = cfg.q0[i];
    }
    let mut rows = Vec::with_capacity(cfg.steps + 1);
    let mut final_error = f64::INFINITY;
    // Velocity damping keeps the MPC equilibrium stationary.
    let damp = {
        let wd = cfg.damping_weight;
        move |nx: usize, n: usize, timesteps: Vec<usize>| {
            CostTerm::new(timesteps, DMatrix::identity(n, n) * wd, move |s: &DVector<f64>| {
                let mut jac = DMatrix::zeros(n, nx);
                for i in 0..n {
                    jac[(i, n + i)] = 1.0;
                }
                Ok((DVector::from_iterator(n, s.rows(n, n).iter().copied()), jac))
            })
        }
    };

    for step in 0..=cfg.steps {
        let t = step as f64 * cfg.dt;
        let task = &tasks.iter().rev().find(|(t0, _)| *t0 <= t).unwrap_or(&tasks[0]).1;
        let q: Vec<f64> = x.rows(0, n).iter().copied().collect();
        let e = task.error(model, &q)?;
        final_error = e.norm();
        let mut row = Vec::with_capacity(header.len());
        row.push(t);
        row.extend_from_slice(&q);
        row.extend(e.iter().copied());
        row.push(final_error);
        rows.push(row);
        if step == cfg.steps {
            break;
        }

        let timesteps: Vec<usize> = (1..=cfg.horizon).collect();
        let problem = IlqrProblem {
            system: sys.clone(),
            horizon: cfg.horizon,
            x0: x.clone(),
            r: DMatrix::identity(n, n) * cfg.control_weight,
            costs: vec![
                task.cost_term(model, timesteps.clone(), cfg.cost_weight, err_dim),
                damp(2 * n, n, timesteps),
            ],
            max_iters: cfg.plan_iters,
            tol: 1e-10,
        };
        let plan = ilqr_solve(&problem)?;
        x = sys.step(&x, &plan.us[0]);
    }
    Ok(ReachResult { header, rows, final_error })
}

// ---------------------------------------------------------------------------
// Oriented pointmass (Fig. 5)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
pub struct ViaSpec {
    pub step: usize,
    /// Motor coefficients on (1, e23, e13, e12, e1∞, e2∞, e3∞, e123∞).
    pub m: [f64; 8],
}

#[derive(Clone, Debug, Deserialize)]
pub struct PointmassConfig {
    #[serde(default = "default_pm_dt")]
    pub dt: f64,
    #[serde(default = "default_pm_horizon")]
    pub horizon: usize,
    #[serde(default = "default_control_weight_pm")]
    pub control_weight: f64,
    #[serde(default = "default_via_weight")]
    pub via_weight: f64,
    pub error_threshold: Option<f64>,
    pub vias: Vec<ViaSpec>,
}

fn default_pm_dt() -> f64 {
    0.01
}
fn default_pm_horizon() -> usize {
    200
}
fn default_control_weight_pm() -> f64 {
    1e-4
}
fn default_via_weight() -> f64 {
    1e4
}

pub struct PointmassResult {
    pub header: Vec<String>,
    /// Per-step rows: t, m1..m8 of exp(B(b_t)).
    pub rows: Vec<Vec<f64>>,
    /// (step, pose error ‖log(M̃_via M_t)‖) per via-point.
    pub via_errors: Vec<(usize, f64)>,
}

pub fn run_pointmass(cfg: &PointmassConfig) -> Result<PointmassResult> {
    if cfg.vias.is_empty() {
        return Err(Error::Config("pointmass config lists no via-points".into()));
    }
    let mut vias = Vec::with_capacity(cfg.vias.len());
    for v in &cfg.vias {
        if v.step > cfg.horizon {
            return Err(Error::Config(format!(
                "via step {} beyond horizon {}",
                v.step, cfg.horizon
            )));
        }
        let motor = Motor::from_multivector(&{
            let mut mv = Multivector::ZERO;
            for (i, &b) in MOTOR_BLADES.iter().enumerate() {
                mv = mv + Multivector::basis(b) * v.m[i];
            }
            mv
        })
        .map_err(|e| Error::Config(format!("via motor at step {}: {e}", v.step)))?;
        vias.push((v.step, motor));
    }

    let sys = double_integrator(6, cfg.dt);
    let costs: Vec<CostTerm> = vias
        .iter()
        .map(|(step, m)| {
            CostTerm::motor_pose(vec![*step], DMatrix::identity(6, 6) * cfg.via_weight, *m)
        })
        .collect();
    let problem = IlqrProblem {
        system: sys,
        horizon: cfg.horizon,
        x0: DVector::zeros(12),
        r: DMatrix::identity(6, 6) * cfg.control_weight,
        costs,
        max_iters: 200,
        tol: 1e-12,
    };
    let sol = ilqr_solve(&problem)?;

    let mut header = vec!["t".to_string()];
    header.extend((1..=8).map(|i| format!("m{i}")));
    let mut rows = Vec::with_capacity(cfg.horizon + 1);
    for (step, x) in sol.xs.iter().enumerate() {
        let b = ScrewBivector { b: SVector::<f64, 6>::from_iterator(x.rows(0, 6).iter().copied()).into() };
        let m = exp_bivector(&b);
        let mut row = Vec::with_capacity(9);
        row.push(step as f64 * cfg.dt);
        row.extend_from_slice(&m.m);
        rows.push(row);
    }
    let via_errors = vias
        .iter()
        .map(|(step, m)| {
            let b = SVector::<f64, 6>::from_iterator(sol.xs[*step].rows(0, 6).iter().copied());
            Ok((*step, motor_pose_error(&b, m)?.norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointmassResult { header, rows, via_errors })
}

// ---------------------------------------------------------------------------
// Motor interpolation (Fig. 3)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
pub struct MotorSpec {
    pub m: [f64; 8],
}

#[derive(Clone, Debug, Deserialize)]
pub struct InterpConfig {
    #[serde(default = "default_interp_steps")]
    pub steps: usize,
    /// Optional primitive swept along the interpolation.
    pub primitive: Option<String>,
    pub motors: Vec<MotorSpec>,
}

fn default_interp_steps() -> usize {
    11
}

pub struct InterpResult {
    pub header: Vec<String>,
    /// Per-sample rows: s, m1..m8 [, primitive blade coefficients].
    pub rows: Vec<Vec<f64>>,
}

pub fn run_interp(cfg: &InterpConfig) -> Result<InterpResult> {
    if cfg.motors.len() < 2 {
        return Err(Error::Config("interpolation needs at least two motors".into()));
    }
    if cfg.steps < 2 {
        return Err(Error::Config("interpolation needs at least two steps".into()));
    }
    let vias: Vec<Motor> = cfg
        .motors
        .iter()
        .map(|spec| {
            let mut mv = Multivector::ZERO;
            for (i, &b) in MOTOR_BLADES.iter().enumerate() {
                mv = mv + Multivector::basis(b) * spec.m[i];
            }
            Motor::from_multivector(&mv).map_err(|e| Error::Config(format!("bad motor: {e}")))
        })
        .collect::<Result<_>>()?;
    let primitive = cfg.primitive.as_deref().map(parse_primitive).transpose()?;

    // Piecewise-linear weight schedule across consecutive via pairs.
    let segments = vias.len() - 1;
    let mut weights = Vec::with_capacity(cfg.steps);
    let mut params = Vec::with_capacity(cfg.steps);
    for k in 0..cfg.steps {
        let s = k as f64 / (cfg.steps - 1) as f64;
        let scaled = s * segments as f64;
        let seg = (scaled.floor() as usize).min(segments - 1);
        let local = scaled - seg as f64;
        let mut w = vec![0.0; vias.len()];
        w[seg] = 1.0 - local;
        w[seg + 1] = local;
        weights.push(w);
        params.push(s);
    }
    let motors = motor_interpolate(&vias, &weights)?;

    let blades: Vec<usize> = primitive
        .as_ref()
        .map(|p| crate::ga::BitIter(p.kind.mask()).collect())
        .unwrap_or_default();
    let mut header = vec!["s".to_string()];
    header.extend((1..=8).map(|i| format!("m{i}")));
    header.extend((1..=blades.len()).map(|i| format!("p{i}")));

    let mut rows = Vec::with_capacity(cfg.steps);
    for (s, m) in params.iter().zip(&motors) {
        let mut row = Vec::with_capacity(header.len());
        row.push(*s);
        row.extend_from_slice(&m.m);
        if let Some(p) = &primitive {
            let moved = m.sandwich(&p.mv).restricted(p.kind.mask());
            row.extend(blades.iter().map(|&b| moved.coeff(b)));
        }
        rows.push(row);
    }
    Ok(InterpResult { header, rows })
}

// ---------------------------------------------------------------------------
// Config plumbing shared with the CLI
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
pub struct IkConfig {
    pub model: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub min_success_rate: Option<f64>,
    pub max_mean_iterations: Option<f64>,
    pub max_mean_final_cost: Option<f64>,
}

fn default_trials() -> usize {
    10000
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    100
}

/// Per-trial CSV schema for the IK experiment.
pub fn run_ik_csv_rows(stats: &crate::ik::IkExperimentStats) -> (Vec<String>, Vec<Vec<f64>>) {
    let header =
        vec!["trial".to_string(), "success".into(), "iterations".into(), "final_cost".into()];
    let rows = stats
        .reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![i as f64, r.converged as u8 as f64, r.iterations as f64, r.final_cost]
        })
        .collect();
    (header, rows)
}

#[derive(Clone, Debug, Deserialize)]
pub struct BenchConfig {
    pub model: String,
    #[serde(default = "default_executions")]
    pub executions: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_executions() -> usize {
    10000
}
fn default_repetitions() -> usize {
    10
}

pub fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Resolve a model path relative to the config file that referenced it.
pub fn resolve_model(config_path: &Path, model: &str) -> std::path::PathBuf {
    let p = Path::new(model);
    if p.is_absolute() || p.exists() {
        p.to_path_buf()
    } else {
        config_path.parent().map(|d| d.join(model)).unwrap_or_else(|| p.to_path_buf())
    }
}

pub fn write_csv(header: &[String], rows: &[Vec<f64>], out: &mut dyn std::io::Write) -> Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
