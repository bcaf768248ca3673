//! Gauss-Newton inverse kinematics on the motor manifold: the bivector-space
//! cost ‖log(M̃_target ⊗ M(q))‖², its Jacobian chained through the motor
//! logarithm, and the multivector-to-matrix embedding.

use nalgebra::{DMatrix, SMatrix, SVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ga::{BitIter, Multivector};
use crate::kinematics::{analytic_jacobian, forward_kinematics, MultivectorMatrix};
use crate::model::RobotModel;
use crate::motor::{log_jacobian, log_motor, Motor, MOTOR_BLADES};

/// Flatten a typed multivector matrix into a real matrix over the K blades
/// of `blade_mask`: each entry expands its K coefficients down the column
/// block, giving an (I·K)×J real matrix.
pub fn embed(m: &MultivectorMatrix, blade_mask: u32) -> Result<DMatrix<f64>> {
    let blades: Vec<usize> = BitIter(blade_mask).collect();
    let k = blades.len();
    let mut out = DMatrix::zeros(m.rows() * k, m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let entry = m.at(i, j);
            if entry.residual_outside(blade_mask) != 0.0 {
                return Err(Error::Contract(format!(
                    "entry ({i},{j}) has coefficients outside the declared blade set"
                )));
            }
            for (b, &blade) in blades.iter().enumerate() {
                out[(i * k + b, j)] = entry.coeff(blade);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`embed`] for the same blade set and shape.
pub fn un_embed(mat: &DMatrix<f64>, rows: usize, blade_mask: u32) -> Result<MultivectorMatrix> {
    let blades: Vec<usize> = BitIter(blade_mask).collect();
    let k = blades.len();
    if mat.nrows() != rows * k {
        return Err(Error::Contract(format!(
            "matrix with {} rows cannot hold {rows} blocks of {k} blades",
            mat.nrows()
        )));
    }
    let mut out = MultivectorMatrix::zeros(rows, mat.ncols());
    for i in 0..rows {
        for j in 0..mat.ncols() {
            let mut mv = Multivector::zero_with_mask(blade_mask);
            for (b, &blade) in blades.iter().enumerate() {
                mv.set_coeff(blade, mat[(i * k + b, j)]);
            }
            out.set(i, j, mv);
        }
    }
    Ok(out)
}

/// The 6-vector residual log(M̃_target ⊗ M(q)) in screw coordinates.
pub fn ik_residual(model: &RobotModel, q: &[f64], target: &Motor) -> Result<SVector<f64, 6>> {
    let delta = target.reverse().compose(&forward_kinematics(model, q));
    Ok(SVector::from(log_motor(&delta)?.b))
}

/// IK cost ‖log(M̃_target ⊗ M(q))‖² over the 6 bivector parameters.
pub fn ik_cost(model: &RobotModel, q: &[f64], target: &Motor) -> Result<f64> {
    Ok(ik_residual(model, q, target)?.norm_squared())
}

/// IK Jacobian J_𝔹 = J_{𝓜→𝔹} · embed(M̃_target ⊗ J^A(q)): the 6×N
/// derivative of the residual with respect to q.
pub fn ik_jacobian(model: &RobotModel, q: &[f64], target: &Motor) -> Result<DMatrix<f64>> {
    let delta = target.reverse().compose(&forward_kinematics(model, q));
    let log_jac: SMatrix<f64, 6, 8> = log_jacobian(&delta)?;
    let ja = analytic_jacobian(model, q);
    let t_rev = target.reverse().to_multivector();
    let mut chained = MultivectorMatrix::zeros(1, model.dof());
    for i in 0..model.dof() {
        chained.set(0, i, t_rev.geometric(ja.at(0, i)));
    }
    let motor_mask = crate::ga::mask::of(&MOTOR_BLADES);
    let embedded = embed(&chained, motor_mask)?; // 8×N in MOTOR_BLADES order
    let mut log_jac_dyn = DMatrix::zeros(6, 8);
    log_jac_dyn.copy_from(&log_jac);
    Ok(log_jac_dyn * embedded)
}

/// An inverse-kinematics problem instance.
#[derive(Clone, Debug)]
pub struct IkProblem<'a> {
    pub model: &'a RobotModel,
    pub target: Motor,
    pub q0: Vec<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

/// Solver outcome and statistics.
#[derive(Clone, Debug)]
pub struct IkReport {
    pub q_final: Vec<f64>,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cost_trace: Vec<f64>,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 20;
const LAMBDA_INIT: f64 = 1e-9;
const STEP_TOL: f64 = 1e-12;

/// Gauss-Newton with backtracking line search and Levenberg damping:
/// q ← q − α(JᵀJ + λI)⁻¹Jᵀf.
pub fn solve_ik(problem: &IkProblem) -> IkReport {
    let model = problem.model;
    let n = model.dof();
    assert_eq!(problem.q0.len(), n);
    assert!(problem.tol > 0.0);
    debug_assert!(problem.target.constraint_residual() < 1e-9);

    let mut q = problem.q0.clone();
    let mut lambda = LAMBDA_INIT;
    let mut cost = match ik_cost(model, &q, &problem.target) {
        Ok(c) => c,
        Err(_) => {
            return IkReport {
                q_final: q,
                final_cost: f64::INFINITY,
                iterations: 0,
                converged: false,
                cost_trace: vec![],
            }
        }
    };
    let mut trace = vec![cost];
    let mut iterations = 0;

    while cost > problem.tol && iterations < problem.max_iters {
        let (residual, jacobian) = match (
            ik_residual(model, &q, &problem.target),
            ik_jacobian(model, &q, &problem.target),
        ) {
            (Ok(r), Ok(j)) => (r, j),
            _ => break,
        };
        let grad = jacobian.transpose() * residual * 2.0;
        let mut normal = jacobian.transpose() * &jacobian;
        for i in 0..n {
            normal[(i, i)] += lambda;
        }
        let step = match normal.cholesky() {
            Some(ch) => ch.solve(&(jacobian.transpose() * residual)),
            None => break,
        };
        if step.norm() < STEP_TOL {
            break;
        }
        let slope = grad.dot(&step); // directional decrease along −step
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_BACKTRACKS {
            let q_try: Vec<f64> = q.iter().zip(step.iter()).map(|(a, s)| a - alpha * s).collect();
            if let Ok(c) = ik_cost(model, &q_try, &problem.target) {
                if c <= cost - ARMIJO_C * alpha * slope.max(0.0) {
                    q = q_try;
                    cost = c;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if accepted {
            lambda = LAMBDA_INIT;
            trace.push(cost);
        } else {
            lambda *= 10.0;
            if lambda > 1e8 {
                break;
            }
        }
    }

    IkReport {
        converged: cost <= problem.tol,
        q_final: q,
        final_cost: cost,
        iterations,
        cost_trace: trace,
    }
}

/// Aggregate statistics of the randomized IK experiment.
#[derive(Clone, Debug)]
pub struct IkExperimentStats {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_iterations: f64,
    pub mean_final_cost: f64,
    pub mean_solve_time_us: f64,
    pub reports: Vec<IkReport>,
}

fn random_q_within_limits(model: &RobotModel, rng: &mut impl Rng) -> Vec<f64> {
    model.joints.iter().map(|j| rng.gen_range(j.limits.0..j.limits.1)).collect()
}

/// The randomized reachable-target protocol: per trial, a target FK(q_rand)
/// and an independent initial guess, both uniform within joint limits.
/// Trials run in parallel but are seeded per-index, so results are
/// deterministic and order-stable for a given seed.
///
/// Success is judged against `tol`, but the solver itself polishes well past
/// it (it stops on step-norm convergence), so converged solves report costs
/// far below the success gate.
pub fn run_ik_experiment(
    model: &RobotModel,
    trials: usize,
    seed: u64,
    tol: f64,
    max_iters: usize,
) -> IkExperimentStats {
    let polish_tol = (tol * 1e-10).max(1e-18);
    let results: Vec<(IkReport, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = crate::experiments::test_rng(seed ^ trial);
            let q_target = random_q_within_limits(model, &mut rng);
            let q0 = random_q_within_limits(model, &mut rng);
            let target = forward_kinematics(model, &q_target);
            let start = std::time::Instant::now();
            let mut report =
                solve_ik(&IkProblem { model, target, q0, tol: polish_tol, max_iters });
            report.converged = report.final_cost <= tol;
            (report, start.elapsed().as_secs_f64() * 1e6)
        })
        .collect();

    let successes: Vec<&IkReport> = results.iter().filter(|(r, _)| r.converged).map(|(r, _)| r).collect();
    let n_succ = successes.len();
    let mean = |f: &dyn Fn(&IkReport) -> f64| {
        if n_succ == 0 {
            f64::NAN
        } else {
            successes.iter().map(|r| f(r)).sum::<f64>() / n_succ as f64
        }
    };
    IkExperimentStats {
        trials,
        successes: n_succ,
        success_rate: n_succ as f64 / trials.max(1) as f64,
        mean_iterations: mean(&|r| r.iterations as f64),
        mean_final_cost: mean(&|r| r.final_cost),
        mean_solve_time_us: results.iter().map(|(_, t)| t).sum::<f64>() / results.len().max(1) as f64,
        reports: results.into_iter().map(|(r, _)| r).collect(),
    }
}
