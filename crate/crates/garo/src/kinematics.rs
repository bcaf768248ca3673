//! Forward kinematics as motor products, analytic and geometric Jacobians
//! as multivector matrices, and the geometric Jacobian's time derivative.

use crate::error::{Error, Result};
use crate::ga::{mask, Multivector};
use crate::model::{joint_motor, RobotModel};
use crate::motor::{make_rotor, Motor};

/// Joint-space state of a manipulator.
#[derive(Clone, Debug)]
pub struct JointState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Option<Vec<f64>>,
}

/// A dense rows×cols matrix of multivectors with a uniform entry kind.
#[derive(Clone, Debug)]
pub struct MultivectorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Multivector>,
}

impl MultivectorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> MultivectorMatrix {
        MultivectorMatrix { rows, cols, data: vec![Multivector::ZERO; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Multivector {
        assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Multivector) {
        assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Multivector] {
        &self.data
    }
}

fn check_len(model: &RobotModel, q: &[f64]) {
    assert_eq!(q.len(), model.dof(), "joint vector length must match the model");
}

/// Forward kinematics: the ordered product Π M_{F,i} R_i(q_i).
pub fn forward_kinematics(model: &RobotModel, q: &[f64]) -> Motor {
    check_len(model, q);
    let mut m = Motor::IDENTITY;
    for (joint, &qi) in model.joints.iter().zip(q) {
        m = m.compose(&joint_motor(joint, qi));
    }
    m
}

/// Partial forward kinematics up to the k-th joint (1-based).
pub fn forward_kinematics_to(model: &RobotModel, q: &[f64], k: usize) -> Result<Motor> {
    check_len(model, q);
    if k < 1 || k > model.dof() {
        return Err(Error::Domain(format!(
            "joint index {k} out of range 1..={}",
            model.dof()
        )));
    }
    let mut m = Motor::IDENTITY;
    for (joint, &qi) in model.joints.iter().zip(q).take(k) {
        m = m.compose(&joint_motor(joint, qi));
    }
    Ok(m)
}

/// Analytic Jacobian: 1×N matrix of motor-blade entries, column i being
/// ∂M/∂q_i = M₁⋯M_{F,i}(−½B_i)R_i(q_i)⋯M_N.
pub fn analytic_jacobian(model: &RobotModel, q: &[f64]) -> MultivectorMatrix {
    check_len(model, q);
    let n = model.dof();
    // Suffix products M_{i+1}⋯M_N.
    let mut suffix = vec![Motor::IDENTITY; n + 1];
    for i in (0..n).rev() {
        suffix[i] = joint_motor(&model.joints[i], q[i]).compose(&suffix[i + 1]);
    }
    let mut jac = MultivectorMatrix::zeros(1, n);
    let mut prefix = Multivector::scalar(1.0);
    for i in 0..n {
        let joint = &model.joints[i];
        let rotor = make_rotor(&joint.rotation_plane, q[i]).expect("unit plane");
        let middle = joint
            .frame_motor
            .to_multivector()
            .geometric(&(joint.rotation_plane * -0.5).geometric(&rotor.to_multivector()));
        let col = prefix.geometric(&middle).geometric(&suffix[i + 1].to_multivector());
        debug_assert!(col.residual_outside(mask::MOTOR) < 1e-10);
        jac.set(0, i, col.restricted(mask::MOTOR));
        prefix = prefix.geometric(&joint_motor(joint, q[i]).to_multivector());
    }
    jac
}

/// The transformed rotation bivectors B_i′ = M₁⋯M_{F,i} B_i M̃_{F,i}⋯M̃₁
/// for i = 1..N.
pub fn transformed_bivectors(model: &RobotModel, q: &[f64]) -> Vec<Multivector> {
    check_len(model, q);
    let mut out = Vec::with_capacity(model.dof());
    let mut prefix = Motor::IDENTITY;
    for (joint, &qi) in model.joints.iter().zip(q) {
        let p = prefix.compose(&joint.frame_motor);
        out.push(p.sandwich(&joint.rotation_plane).restricted(mask::SCREW));
        prefix = prefix.compose(&joint_motor(joint, qi));
    }
    out
}

/// Geometric Jacobian up to joint j: 1×N matrix of bivector entries, columns
/// 1..j the transformed rotation bivectors B_i′ and columns j+1..N the zero
/// bivector.
pub fn geometric_jacobian(model: &RobotModel, q: &[f64], j: usize) -> Result<MultivectorMatrix> {
    if j < 1 || j > model.dof() {
        return Err(Error::Domain(format!(
            "joint index {j} out of range 1..={}",
            model.dof()
        )));
    }
    let bs = transformed_bivectors(model, q);
    let mut jac = MultivectorMatrix::zeros(1, model.dof());
    for (i, b) in bs.into_iter().enumerate().take(j) {
        jac.set(0, i, b);
    }
    Ok(jac)
}

/// Full end-effector geometric Jacobian (up to joint N).
pub fn geometric_jacobian_full(model: &RobotModel, q: &[f64]) -> MultivectorMatrix {
    geometric_jacobian(model, q, model.dof()).expect("N >= 1")
}

/// Commutator matrix J^×_{ij} = B_i′ × B_j′.
pub fn commutator_matrix(model: &RobotModel, q: &[f64]) -> MultivectorMatrix {
    let bs = transformed_bivectors(model, q);
    let n = bs.len();
    let mut jx = MultivectorMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                jx.set(i, j, bs[i].commutator(&bs[j]));
            }
        }
    }
    jx
}

/// Time derivatives of the transformed rotation bivectors:
/// Ḃ_i′ = Σ_{k<i} q̇_k (B_i′ × B_k′) — only upstream joints move B_i′.
pub fn bivector_rates(model: &RobotModel, q: &[f64], qd: &[f64]) -> Vec<Multivector> {
    check_len(model, qd);
    let bs = transformed_bivectors(model, q);
    let n = bs.len();
    let mut rates = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = Multivector::ZERO;
        for k in 0..i {
            r = r + bs[i].commutator(&bs[k]) * qd[k];
        }
        rates.push(r.restricted(mask::SCREW));
    }
    rates
}

/// Time derivative of the geometric Jacobian: N×N lower-triangular matrix
/// with entry (i, j) = Ḃ_j′ for j ≤ i and the zero bivector above the
/// diagonal.
pub fn geometric_jacobian_dt(model: &RobotModel, q: &[f64], qd: &[f64]) -> MultivectorMatrix {
    let rates = bivector_rates(model, q, qd);
    let n = rates.len();
    let mut out = MultivectorMatrix::zeros(n, n);
    for i in 0..n {
        for (j, r) in rates.iter().enumerate().take(i + 1) {
            out.set(i, j, *r);
        }
    }
    out
}
