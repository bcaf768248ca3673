//! iLQR optimal control over two double-integrator system classes — the
//! 6-dimensional bivector space (oriented pointmass) and the joint space of
//! a manipulator — with uniform OPNS reaching costs, the motor-pose cost,
//! composite task costs (pointing, circular grasp), and the
//! inverse-dynamics control law.

use nalgebra::{DMatrix, DVector, SMatrix, SVector, Vector3};

use crate::dynamics::inverse_dynamics;
use crate::error::{Error, Result};
use crate::ga::{blade, embed_point, op_mask, BitIter, Multivector};
use crate::kinematics::{analytic_jacobian, forward_kinematics};
use crate::model::RobotModel;
use crate::motor::{
    exp_bivector, exp_jacobian, log_jacobian, log_motor, Motor, ScrewBivector, MOTOR_BLADES,
};
use crate::primitives::{
    circle_geometry, plane_normal, project_point_to_plane, Primitive, PrimitiveKind,
};
#[cfg(test)]
use crate::primitives::make_plane;

/// A discrete linear system x_{t+1} = A x_t + C u_t with double-integrator
/// structure: state [position; velocity] of dimension 2d, input dimension d.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub dt: f64,
    pub dim: usize,
}

/// Exact zero-order-hold double integrator:
/// p += v·dt + ½u·dt², v += u·dt.
pub fn double_integrator(dim: usize, dt: f64) -> LinearSystem {
    assert!(dim >= 1 && dt > 0.0);
    let mut a = DMatrix::identity(2 * dim, 2 * dim);
    let mut c = DMatrix::zeros(2 * dim, dim);
    for i in 0..dim {
        a[(i, dim + i)] = dt;
        c[(i, i)] = 0.5 * dt * dt;
        c[(dim + i, i)] = dt;
    }
    LinearSystem { a, c, dt, dim }
}

impl LinearSystem {
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.c * u
    }
}

/// Pose error on the linear bivector system: e = log(M̃_target ⊗ exp(B(b))).
pub fn motor_pose_error(b: &SVector<f64, 6>, target: &Motor) -> Result<SVector<f64, 6>> {
    let m = exp_bivector(&ScrewBivector { b: (*b).into() });
    Ok(SVector::from(log_motor(&target.reverse().compose(&m))?.b))
}

/// Derivative of [`motor_pose_error`] with respect to b, chained through the
/// exp differential and the motor log Jacobian.
pub fn motor_pose_jacobian(b: &SVector<f64, 6>, target: &Motor) -> Result<SMatrix<f64, 6, 6>> {
    let bv = ScrewBivector { b: (*b).into() };
    let m = exp_bivector(&bv);
    let delta = target.reverse().compose(&m);
    let log_jac = log_jacobian(&delta)?; // 6×8 at delta
    let dexp = exp_jacobian(&bv); // 8×6, motor coefficients of ∂exp/∂b
    // Left-compose each exp-differential column with M̃_target.
    let t_rev = target.reverse().to_multivector();
    let mut chain = SMatrix::<f64, 8, 6>::zeros();
    for col in 0..6 {
        let mut dm = Multivector::ZERO;
        for (row, &bl) in MOTOR_BLADES.iter().enumerate() {
            dm = dm + Multivector::basis(bl) * dexp[(row, col)];
        }
        let composed = t_rev.geometric(&dm);
        for (row, &bl) in MOTOR_BLADES.iter().enumerate() {
            chain[(row, col)] = composed.coeff(bl);
        }
    }
    Ok(log_jac * chain)
}

/// (cost, error) of the motor-pose objective ‖e‖².
pub fn motor_pose_cost(b: &SVector<f64, 6>, target: &Motor) -> Result<(f64, SVector<f64, 6>)> {
    let e = motor_pose_error(b, target)?;
    Ok((e.norm_squared(), e))
}

/// Static blade set of the reach error X_d ∧ (M X M̃).
pub fn reach_error_mask(x: &Primitive, xd: &Primitive) -> u32 {
    op_mask(xd.kind.mask(), x.kind.mask())
}

/// Number of components of the embedded reach error.
pub fn reach_error_dim(x: &Primitive, xd: &Primitive) -> usize {
    crate::motor::blade_count(reach_error_mask(x, xd))
}

fn embed_on_mask(mv: &Multivector, mask: u32) -> DVector<f64> {
    let blades: Vec<usize> = BitIter(mask).collect();
    DVector::from_iterator(blades.len(), blades.iter().map(|&b| mv.coeff(b)))
}

/// The uniform OPNS reaching error E(q) = X_d ∧ (M(q) X M̃(q)), embedded
/// over its non-trivial blades.
pub fn reach_error(model: &RobotModel, q: &[f64], x: &Primitive, xd: &Primitive) -> DVector<f64> {
    let m = forward_kinematics(model, q);
    let moved = m.sandwich(&x.mv).restricted(x.kind.mask());
    let e = xd.mv.outer(&moved);
    embed_on_mask(&e, reach_error_mask(x, xd))
}

/// Reach-error Jacobian per the chain rule:
/// column i = X_d ∧ (J^A_i X M̃ + M X J̃^A_i), embedded like the error.
pub fn reach_jacobian(
    model: &RobotModel,
    q: &[f64],
    x: &Primitive,
    xd: &Primitive,
) -> DMatrix<f64> {
    let m = forward_kinematics(model, q).to_multivector();
    let m_rev = m.reverse();
    let ja = analytic_jacobian(model, q);
    let mask = reach_error_mask(x, xd);
    let blades: Vec<usize> = BitIter(mask).collect();
    let mut out = DMatrix::zeros(blades.len(), model.dof());
    for i in 0..model.dof() {
        let jai = ja.at(0, i);
        let dx = jai.geometric(&x.mv).geometric(&m_rev) + m.geometric(&x.mv).geometric(&jai.reverse());
        let col = xd.mv.outer(&dx.restricted(x.kind.mask()));
        for (r, &b) in blades.iter().enumerate() {
            out[(r, i)] = col.coeff(b);
        }
    }
    out
}

/// The tool line used by pointing tasks: the end-effector-frame z-axis,
/// L = e0 ∧ embed(e3) ∧ e∞.
pub fn tool_z_line() -> Primitive {
    crate::primitives::make_line(
        &embed_point(Vector3::zeros()),
        &embed_point(Vector3::new(0.0, 0.0, 1.0)),
    )
    .expect("distinct points")
}

/// Pointing error: the end-effector z-axis line of sight must pass through
/// the target point.
pub fn pointing_error(model: &RobotModel, q: &[f64], target: &Primitive) -> DVector<f64> {
    reach_error(model, q, &tool_z_line(), target)
}

/// The three Fig.-10 circular-grasp constraint blocks, stacked:
/// (a) the end-effector point lies on the circle (OPNS reach error);
/// (b) the gripper y-axis is collinear with the radial vector from the
///     grasp position projected into the carrier plane to the circle
///     center (cross-product residual);
/// (c) the end-effector z-axis is collinear with and opposite to the
///     carrier-plane normal (sum residual).
pub fn circular_grasp_error(
    model: &RobotModel,
    q: &[f64],
    circle: &Primitive,
) -> Result<DVector<f64>> {
    if circle.kind != PrimitiveKind::Circle {
        return Err(Error::Domain("grasp target must be a circle".into()));
    }
    let geom = circle_geometry(circle)?;
    let carrier = Primitive {
        kind: PrimitiveKind::Plane,
        mv: circle
            .mv
            .outer(&Multivector::basis(blade::EI))
            .restricted(PrimitiveKind::Plane.mask()),
    };
    let normal = plane_normal(&carrier)?;
    let m = forward_kinematics(model, q);
    let p = m.transform_point(Vector3::zeros());
    let y_axis = m.rotate_vector(Vector3::new(0.0, 1.0, 0.0));
    let z_axis = m.rotate_vector(Vector3::new(0.0, 0.0, 1.0));

    // (a) point on circle.
    let ee_point = Primitive {
        kind: PrimitiveKind::Point,
        mv: embed_point(Vector3::zeros()),
    };
    let on_circle = reach_error(model, q, &ee_point, circle);

    // (b) radial alignment through the Eq.-(57) projection.
    let projected = crate::ga::extract_point(&project_point_to_plane(&embed_point(p), &carrier)?)?;
    let radial = geom.center - projected;
    let rn = radial.norm();
    let radial_unit = if rn > 1e-12 { radial / rn } else { radial };
    let align = y_axis.cross(&radial_unit);

    // (c) approach axis anti-parallel to the plane normal.  The Eq.-(56)
    // normal carries the plane's orientation sign; anti-alignment is against
    // the axis pointing away from the approach side, resolved per-pose by
    // the nearer of ±n (collinearity) plus the explicit opposition term.
    let n = if normal.dot(&geom.axis) >= 0.0 { normal } else { -normal };
    let anti = z_axis + n;

    let mut out = DVector::zeros(on_circle.len() + 6);
    out.rows_mut(0, on_circle.len()).copy_from(&on_circle);
    out.rows_mut(on_circle.len(), 3).copy_from(&align);
    out.rows_mut(on_circle.len() + 3, 3).copy_from(&anti);
    Ok(out)
}

/// A residual-based cost term l(x) = r(x)ᵀ W r(x) applied at the listed
/// timesteps (the horizon index itself denotes the terminal cost).
pub struct CostTerm<'a> {
    pub timesteps: Vec<usize>,
    pub weight: DMatrix<f64>,
    residual: Box<dyn Fn(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> + Sync + 'a>,
}

impl<'a> CostTerm<'a> {
    pub fn new(
        timesteps: Vec<usize>,
        weight: DMatrix<f64>,
        residual: impl Fn(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> + Sync + 'a,
    ) -> CostTerm<'a> {
        CostTerm { timesteps, weight, residual: Box::new(residual) }
    }

    /// Linear residual r = x − x_ref (full state).
    pub fn state_target(timesteps: Vec<usize>, weight: DMatrix<f64>, x_ref: DVector<f64>) -> CostTerm<'a> {
        let n = x_ref.len();
        CostTerm::new(timesteps, weight, move |x: &DVector<f64>| {
            Ok((x - &x_ref, DMatrix::identity(n, n)))
        })
    }

    /// Motor-pose residual on the bivector double integrator (d = 6).
    pub fn motor_pose(timesteps: Vec<usize>, weight: DMatrix<f64>, target: Motor) -> CostTerm<'a> {
        CostTerm::new(timesteps, weight, move |x: &DVector<f64>| {
            let b = SVector::<f64, 6>::from_iterator(x.rows(0, 6).iter().copied());
            let e = motor_pose_error(&b, &target)?;
            let jb = motor_pose_jacobian(&b, &target)?;
            let mut jac = DMatrix::zeros(6, x.len());
            jac.view_mut((0, 0), (6, 6)).copy_from(&jb);
            Ok((DVector::from_iterator(6, e.iter().copied()), jac))
        })
    }

    /// OPNS reach residual on the joint-space double integrator.
    pub fn reach(
        timesteps: Vec<usize>,
        weight: DMatrix<f64>,
        model: &'a RobotModel,
        x: Primitive,
        xd: Primitive,
    ) -> CostTerm<'a> {
        let n = model.dof();
        CostTerm::new(timesteps, weight, move |state: &DVector<f64>| {
            let q: Vec<f64> = state.rows(0, n).iter().copied().collect();
            let e = reach_error(model, &q, &x, &xd);
            let jq = reach_jacobian(model, &q, &x, &xd);
            let mut jac = DMatrix::zeros(e.len(), state.len());
            jac.view_mut((0, 0), (e.len(), n)).copy_from(&jq);
            Ok((e, jac))
        })
    }

    /// Circular-grasp residual; the Jacobian is taken by central finite
    /// differences of the composite blocks.
    pub fn circular_grasp(
        timesteps: Vec<usize>,
        weight: DMatrix<f64>,
        model: &'a RobotModel,
        circle: Primitive,
    ) -> CostTerm<'a> {
        let n = model.dof();
        CostTerm::new(timesteps, weight, move |state: &DVector<f64>| {
            let q: Vec<f64> = state.rows(0, n).iter().copied().collect();
            let e = circular_grasp_error(model, &q, &circle)?;
            let h = 1e-6;
            let mut jac = DMatrix::zeros(e.len(), state.len());
            for i in 0..n {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[i] += h;
                qm[i] -= h;
                let d = (circular_grasp_error(model, &qp, &circle)?
                    - circular_grasp_error(model, &qm, &circle)?)
                    / (2.0 * h);
                jac.column_mut(i).copy_from(&d);
            }
            Ok((e, jac))
        })
    }

    fn eval(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        (self.residual)(x)
    }
}

pub struct IlqrProblem<'a> {
    pub system: LinearSystem,
    pub horizon: usize,
    pub x0: DVector<f64>,
    /// Control weight R (cost uᵀRu per step); must be positive definite.
    pub r: DMatrix<f64>,
    pub costs: Vec<CostTerm<'a>>,
    pub max_iters: usize,
    pub tol: f64,
}

pub struct IlqrSolution {
    pub xs: Vec<DVector<f64>>,
    pub us: Vec<DVector<f64>>,
    pub cost_trace: Vec<f64>,
    pub converged: bool,
}

struct StageQuadratic {
    l: f64,
    lx: DVector<f64>,
    lxx: DMatrix<f64>,
}

fn stage_cost(problem: &IlqrProblem, t: usize, x: &DVector<f64>) -> Result<StageQuadratic> {
    let nx = x.len();
    let mut q = StageQuadratic { l: 0.0, lx: DVector::zeros(nx), lxx: DMatrix::zeros(nx, nx) };
    for term in &problem.costs {
        if term.timesteps.contains(&t) {
            let (r, j) = term.eval(x)?;
            let wr = &term.weight * &r;
            q.l += r.dot(&wr);
            q.lx += j.transpose() * &wr * 2.0;
            q.lxx += j.transpose() * &term.weight * &j * 2.0;
        }
    }
    Ok(q)
}

fn total_cost(problem: &IlqrProblem, xs: &[DVector<f64>], us: &[DVector<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for (t, x) in xs.iter().enumerate() {
        for term in &problem.costs {
            if term.timesteps.contains(&t) {
                let (r, _) = term.eval(x)?;
                total += r.dot(&(&term.weight * &r));
            }
        }
    }
    for u in us {
        total += u.dot(&(&problem.r * u));
    }
    Ok(total)
}

fn rollout(system: &LinearSystem, x0: &DVector<f64>, us: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut xs = Vec::with_capacity(us.len() + 1);
    xs.push(x0.clone());
    for u in us {
        let next = system.step(xs.last().unwrap(), u);
        xs.push(next);
    }
    xs
}

/// iLQR: backward Riccati pass on the Gauss-Newton-quadraticized cost,
/// forward rollout with backtracking line search.  Accepted iterations never
/// increase the total cost.
pub fn ilqr_solve(problem: &IlqrProblem) -> Result<IlqrSolution> {
    let sys = &problem.system;
    let nx = problem.x0.len();
    let nu = sys.c.ncols();
    assert_eq!(nx, sys.a.nrows());
    let mut us = vec![DVector::zeros(nu); problem.horizon];
    let mut xs = rollout(sys, &problem.x0, &us);
    let mut cost = total_cost(problem, &xs, &us)?;
    let mut trace = vec![cost];
    let mut lambda = 0.0f64;
    let mut converged = false;

    for _ in 0..problem.max_iters {
        // Backward pass.
        let quads: Vec<StageQuadratic> = xs
            .iter()
            .enumerate()
            .map(|(t, x)| stage_cost(problem, t, x))
            .collect::<Result<_>>()?;
        let backward = |lambda: f64| -> Option<(Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
            let mut vx = quads[problem.horizon].lx.clone();
            let mut vxx = quads[problem.horizon].lxx.clone();
            let mut ks = vec![DVector::zeros(nu); problem.horizon];
            let mut kmats = vec![DMatrix::zeros(nu, nx); problem.horizon];
            for t in (0..problem.horizon).rev() {
                let qx = &quads[t].lx + sys.a.transpose() * &vx;
                let qu = &problem.r * &us[t] * 2.0 + sys.c.transpose() * &vx;
                let qxx = &quads[t].lxx + sys.a.transpose() * &vxx * &sys.a;
                let mut quu = &problem.r * 2.0 + sys.c.transpose() * &vxx * &sys.c;
                for i in 0..nu {
                    quu[(i, i)] += lambda;
                }
                let qux = sys.c.transpose() * &vxx * &sys.a;
                let chol = quu.clone().cholesky()?;
                let k = -chol.solve(&qu);
                let kmat = -chol.solve(&qux);
                vx = &qx
                    + kmat.transpose() * &quu * &k
                    + kmat.transpose() * &qu
                    + qux.transpose() * &k;
                vxx = &qxx
                    + kmat.transpose() * &quu * &kmat
                    + kmat.transpose() * &qux
                    + qux.transpose() * &kmat;
                // Keep symmetric against drift.
                vxx = (&vxx + &vxx.transpose()) * 0.5;
                ks[t] = k;
                kmats[t] = kmat;
            }
            Some((ks, kmats))
        };

        let (ks, kmats) = loop {
            match backward(lambda) {
                Some(pass) => break pass,
                None => {
                    lambda = if lambda == 0.0 { 1e-8 } else { lambda * 10.0 };
                    if lambda > 1e10 {
                        return Err(Error::Numerical(
                            "iLQR backward pass failed: non-PD Hessian at maximum damping".into(),
                        ));
                    }
                }
            }
        };

        // Forward line search.
        let mut accepted = false;
        let mut alpha = 1.0;
        for _ in 0..12 {
            let mut xs_new = Vec::with_capacity(problem.horizon + 1);
            let mut us_new = Vec::with_capacity(problem.horizon);
            xs_new.push(problem.x0.clone());
            for t in 0..problem.horizon {
                let dx = &xs_new[t] - &xs[t];
                let u = &us[t] + &ks[t] * alpha + &kmats[t] * dx;
                let next = sys.step(&xs_new[t], &u);
                us_new.push(u);
                xs_new.push(next);
            }
            if let Ok(c) = total_cost(problem, &xs_new, &us_new) {
                if c <= cost {
                    let improvement = cost - c;
                    xs = xs_new;
                    us = us_new;
                    cost = c;
                    trace.push(cost);
                    accepted = true;
                    lambda = 0.0;
                    if improvement < problem.tol * cost.max(1.0) {
                        converged = true;
                    }
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            lambda = if lambda == 0.0 { 1e-8 } else { lambda * 10.0 };
            if lambda > 1e10 {
                break;
            }
        }
        if converged {
            break;
        }
    }

    Ok(IlqrSolution { xs, us, cost_trace: trace, converged })
}

/// Eq.-(55) inverse-dynamics control law:
/// u = τ(q, q̇, q̈_d) + Kp (q_d − q) + Kd (q̇_d − q̇).
#[allow(clippy::too_many_arguments)]
pub fn inverse_dynamics_control(
    model: &RobotModel,
    q: &[f64],
    qd: &[f64],
    q_des: &[f64],
    qd_des: &[f64],
    qdd_des: &[f64],
    kp: &DMatrix<f64>,
    kd: &DMatrix<f64>,
) -> DVector<f64> {
    let tau = inverse_dynamics(model, q, qd, qdd_des, None);
    let eq = DVector::from_iterator(q.len(), q_des.iter().zip(q).map(|(a, b)| a - b));
    let ed = DVector::from_iterator(q.len(), qd_des.iter().zip(qd).map(|(a, b)| a - b));
    tau + kp * eq + kd * ed
}
