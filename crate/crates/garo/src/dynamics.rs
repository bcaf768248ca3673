//! Extended manipulator dynamics: V-matrix and its time derivative,
//! joint-dependent rotational inertia and its time derivative, gravity,
//! Coriolis composition, and inverse/forward dynamics.
//!
//! Scalar reduction convention: every multivector-matrix contraction is
//! reduced to a real number with `Multivector::scalar_pair` (⟨ã ⊗ b⟩₀),
//! which is positive-definite on Euclidean blades of every grade.  This is
//! the single place where the convention lives; all quadratic forms below
//! inherit it.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::ga::{blade, embed_point, mask, Multivector};
use crate::kinematics::MultivectorMatrix;
use crate::model::RobotModel;
use crate::motor::Motor;

/// Condition-number guard for the generalized mass matrix solve.
const CONDITION_LIMIT: f64 = 1e12;

/// Rotor factor of a motor-blade multivector as a linear map,
/// R = −e0 · (M ⊗ e∞).  Linearity makes it valid for motor *derivatives*
/// too, which is how the workspace obtains exact rotor partials.
fn rotor_linear(m: &Multivector) -> Multivector {
    (-(Multivector::basis(blade::E0).inner(&m.geometric(&Multivector::basis(blade::EI)))))
        .restricted(mask::ROTOR)
}

/// Euclidean rotation part of a screw bivector (e23, e13, e12 components).
fn rot_part(b: &Multivector) -> Multivector {
    b.restricted(mask::ROTATION_BIVECTOR)
}

/// (e23, e13, e12) coordinates of a Euclidean bivector.
fn biv_coords(b: &Multivector) -> Vector3<f64> {
    Vector3::new(b.coeff(blade::E23), b.coeff(blade::E13), b.coeff(blade::E12))
}

fn euclid(v: &Multivector) -> Vector3<f64> {
    Vector3::new(v.coeff(blade::E1), v.coeff(blade::E2), v.coeff(blade::E3))
}

/// Per-configuration cache of the chain quantities entering Eqs. (36)–(47):
/// prefix motors, transformed rotation bivectors, CoM points and rotors,
/// together with their exact partial derivatives with respect to q.
pub struct DynamicsWorkspace<'a> {
    model: &'a RobotModel,
    n: usize,
    /// B_i′, world rotation bivectors.
    bprime: Vec<Multivector>,
    /// X_j^CoM, conformal CoM points.
    xcom: Vec<Multivector>,
    /// R_i, rotor parts of the prefix motors (rotor-blade multivectors).
    rotors: Vec<Multivector>,
    /// ∂B_j′/∂q_k = B_j′ × B_k′ for k < j, zero otherwise.
    db: Vec<Vec<Multivector>>,
    /// ∂X_j/∂q_k = X_j × B_k′ for k ≤ j, zero otherwise.
    dx: Vec<Vec<Multivector>>,
    /// ∂R_i/∂q_k via the linear rotor map of ∂M^i/∂q_k = −½B_k′ M^i, k ≤ i.
    dr: Vec<Vec<Multivector>>,
}

impl<'a> DynamicsWorkspace<'a> {
    pub fn new(model: &'a RobotModel, q: &[f64]) -> DynamicsWorkspace<'a> {
        assert_eq!(q.len(), model.dof(), "joint vector length must match the model");
        let n = model.dof();
        let bprime = crate::kinematics::transformed_bivectors(model, q);
        let mut prefixes = Vec::with_capacity(n);
        let mut m = Motor::IDENTITY;
        for (joint, &qi) in model.joints.iter().zip(q) {
            m = m.compose(&crate::model::joint_motor(joint, qi));
            prefixes.push(m);
        }
        let xcom: Vec<Multivector> = (0..n)
            .map(|j| prefixes[j].sandwich(&embed_point(model.links[j].com)))
            .collect();
        let rotors: Vec<Multivector> =
            prefixes.iter().map(|p| rotor_linear(&p.to_multivector())).collect();
        let zero = Multivector::ZERO;
        let db: Vec<Vec<Multivector>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| if k < j { bprime[j].commutator(&bprime[k]) } else { zero })
                    .collect()
            })
            .collect();
        let dx: Vec<Vec<Multivector>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| if k <= j { xcom[j].commutator(&bprime[k]) } else { zero })
                    .collect()
            })
            .collect();
        let dr: Vec<Vec<Multivector>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| {
                        if k <= i {
                            rotor_linear(
                                &(bprime[k] * -0.5).geometric(&prefixes[i].to_multivector()),
                            )
                        } else {
                            zero
                        }
                    })
                    .collect()
            })
            .collect();
        DynamicsWorkspace { model, n, bprime, xcom, rotors, db, dx, dr }
    }

    /// V_{j,k} = X_j^CoM · B_k′ for k ≤ j; zero above the diagonal (joint k
    /// beyond link j has no lever effect — enforced by construction, since
    /// the raw contraction does not vanish algebraically for k > j).
    pub fn v_matrix(&self) -> MultivectorMatrix {
        let mut v = MultivectorMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for k in 0..=j {
                v.set(j, k, self.xcom[j].inner(&self.bprime[k]));
            }
        }
        v
    }

    /// Exact time derivative of the V-matrix along q̇.
    pub fn v_matrix_dt(&self, qd: &[f64]) -> MultivectorMatrix {
        assert_eq!(qd.len(), self.n);
        let mut v = MultivectorMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for k in 0..=j {
                let mut e = Multivector::ZERO;
                for l in 0..self.n {
                    e = e + (self.dx[j][l].inner(&self.bprime[k])
                        + self.xcom[j].inner(&self.db[k][l]))
                        * qd[l];
                }
                v.set(j, k, e);
            }
        }
        v
    }

    /// Link-frame rotation generators A_i (3×N, columns j ≤ i): the
    /// (e23,e13,e12) coordinates of R̃_i rot(B_j′) R_i.
    fn link_generators(&self) -> Vec<DMatrix<f64>> {
        (0..self.n)
            .map(|i| {
                let mut a = DMatrix::zeros(3, self.n);
                let r = &self.rotors[i];
                let rrev = r.reverse();
                for j in 0..=i {
                    let b = rrev.geometric(&rot_part(&self.bprime[j])).geometric(r);
                    a.set_column(j, &biv_coords(&b));
                }
                a
            })
            .collect()
    }

    /// ∂A_i/∂q_l by the product rule through R_i and B_j′.
    fn link_generator_partial(&self, i: usize, l: usize) -> DMatrix<f64> {
        let mut da = DMatrix::zeros(3, self.n);
        let r = &self.rotors[i];
        let rrev = r.reverse();
        let drl = &self.dr[i][l];
        let drl_rev = drl.reverse();
        for j in 0..=i {
            let w = rot_part(&self.bprime[j]);
            let dw = rot_part(&self.db[j][l]);
            let term = drl_rev.geometric(&w).geometric(r)
                + rrev.geometric(&dw).geometric(r)
                + rrev.geometric(&w).geometric(drl);
            da.set_column(j, &biv_coords(&term));
        }
        da
    }

    /// Euclidean CoM Jacobians W_j (3×N): column k = ∂x_j/∂q_k, read from
    /// the V-matrix entries.
    fn com_jacobians(&self) -> Vec<DMatrix<f64>> {
        (0..self.n)
            .map(|j| {
                let mut w = DMatrix::zeros(3, self.n);
                for k in 0..=j {
                    w.set_column(k, &euclid(&self.xcom[j].inner(&self.bprime[k])));
                }
                w
            })
            .collect()
    }

    fn com_jacobian_partial(&self, j: usize, l: usize) -> DMatrix<f64> {
        let mut dw = DMatrix::zeros(3, self.n);
        for k in 0..=j {
            let e = self.dx[j][l].inner(&self.bprime[k]) + self.xcom[j].inner(&self.db[k][l]);
            dw.set_column(k, &euclid(&e));
        }
        dw
    }

    /// Joint-dependent rotational inertia 𝐈(q) = Σ_i A_iᵀ 𝓘_i A_i.
    pub fn inertia_matrix(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (i, a) in self.link_generators().iter().enumerate() {
            out += a.transpose() * self.model.links[i].inertia * a;
        }
        debug_assert!(
            out.symmetric_eigenvalues().min() > -1e-10,
            "rotational inertia must be PSD"
        );
        out
    }

    /// Exact ∂𝐈/∂q_l of the rotational inertia.
    fn inertia_partial(&self, generators: &[DMatrix<f64>], l: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (i, a) in generators.iter().enumerate() {
            let da = self.link_generator_partial(i, l);
            let inertia: Matrix3<f64> = self.model.links[i].inertia;
            let term = da.transpose() * inertia * a;
            out += &term + term.transpose();
        }
        out
    }

    /// Exact time derivative 𝐈̇ = Σ_l q̇_l ∂𝐈/∂q_l.
    pub fn inertia_matrix_dt(&self, qd: &[f64]) -> DMatrix<f64> {
        assert_eq!(qd.len(), self.n);
        let generators = self.link_generators();
        let mut out = DMatrix::zeros(self.n, self.n);
        for l in 0..self.n {
            if qd[l] != 0.0 {
                out += self.inertia_partial(&generators, l) * qd[l];
            }
        }
        out
    }

    /// Generalized mass matrix M(q) = 𝐈(q) + Vᵀ m V reduced to scalars.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let mut out = self.inertia_matrix();
        for (j, w) in self.com_jacobians().iter().enumerate() {
            out += w.transpose() * w * self.model.links[j].mass;
        }
        out
    }

    /// Exact partials ∂M/∂q_l of the generalized mass matrix.
    pub fn mass_matrix_partials(&self) -> Vec<DMatrix<f64>> {
        let generators = self.link_generators();
        let ws = self.com_jacobians();
        (0..self.n)
            .map(|l| {
                let mut out = self.inertia_partial(&generators, l);
                for (j, w) in ws.iter().enumerate() {
                    let dw = self.com_jacobian_partial(j, l);
                    let term = dw.transpose() * w * self.model.links[j].mass;
                    out += &term + term.transpose();
                }
                out
            })
            .collect()
    }

    /// Gravity torques Vᵀ m 𝐆 with 𝐆_j = g·e3, equal to the gradient of the
    /// potential U = Σ_j m_j g z_j^CoM.
    pub fn gravity_forces(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        let g = Multivector::basis(blade::E3) * self.model.gravity;
        for (j, link) in self.model.links.iter().enumerate() {
            for k in 0..=j {
                out[k] += link.mass * self.xcom[j].inner(&self.bprime[k]).scalar_pair(&g);
            }
        }
        out
    }

    /// Velocity-product (Coriolis/centrifugal) torques from the Christoffel
    /// symbols of the exact mass-matrix partials:
    /// c_k = Σ_{l,m} ½(∂M_{kl}/∂q_m + ∂M_{km}/∂q_l − ∂M_{lm}/∂q_k) q̇_l q̇_m.
    pub fn coriolis_forces(&self, qd: &[f64]) -> DVector<f64> {
        assert_eq!(qd.len(), self.n);
        let dm = self.mass_matrix_partials();
        let mut out = DVector::zeros(self.n);
        for k in 0..self.n {
            let mut ck = 0.0;
            for l in 0..self.n {
                for m in 0..self.n {
                    ck += 0.5 * (dm[m][(k, l)] + dm[l][(k, m)] - dm[k][(l, m)]) * qd[l] * qd[m];
                }
            }
            out[k] = ck;
        }
        out
    }
}

pub fn v_matrix(model: &RobotModel, q: &[f64]) -> MultivectorMatrix {
    DynamicsWorkspace::new(model, q).v_matrix()
}

pub fn v_matrix_dt(model: &RobotModel, q: &[f64], qd: &[f64]) -> MultivectorMatrix {
    DynamicsWorkspace::new(model, q).v_matrix_dt(qd)
}

pub fn inertia_matrix(model: &RobotModel, q: &[f64]) -> DMatrix<f64> {
    DynamicsWorkspace::new(model, q).inertia_matrix()
}

pub fn inertia_matrix_dt(model: &RobotModel, q: &[f64], qd: &[f64]) -> DMatrix<f64> {
    DynamicsWorkspace::new(model, q).inertia_matrix_dt(qd)
}

pub fn mass_matrix(model: &RobotModel, q: &[f64]) -> DMatrix<f64> {
    DynamicsWorkspace::new(model, q).mass_matrix()
}

pub fn gravity_forces(model: &RobotModel, q: &[f64]) -> DVector<f64> {
    DynamicsWorkspace::new(model, q).gravity_forces()
}

/// Inverse dynamics: τ = τ_ext + M(q) q̈ + c(q, q̇) + g(q).
pub fn inverse_dynamics(
    model: &RobotModel,
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
    tau_ext: Option<&[f64]>,
) -> DVector<f64> {
    let ws = DynamicsWorkspace::new(model, q);
    let qdd = DVector::from_column_slice(qdd);
    let mut tau = ws.mass_matrix() * qdd + ws.coriolis_forces(qd) + ws.gravity_forces();
    if let Some(ext) = tau_ext {
        tau += DVector::from_column_slice(ext);
    }
    tau
}

/// Forward dynamics: q̈ = M(q)⁻¹ (τ − τ_ext − c(q, q̇) − g(q)), solved with a
/// Cholesky factorization behind a condition-number guard.
pub fn forward_dynamics(
    model: &RobotModel,
    q: &[f64],
    qd: &[f64],
    tau: &[f64],
    tau_ext: Option<&[f64]>,
) -> Result<DVector<f64>> {
    let ws = DynamicsWorkspace::new(model, q);
    let m = ws.mass_matrix();
    let eig = m.symmetric_eigenvalues();
    let (emin, emax) = (eig.min(), eig.max());
    if emin <= 0.0 || emax / emin > CONDITION_LIMIT {
        return Err(Error::Numerical(format!(
            "generalized mass matrix is singular or ill-conditioned (eigenvalue range [{emin}, {emax}])"
        )));
    }
    let mut rhs = DVector::from_column_slice(tau) - ws.coriolis_forces(qd) - ws.gravity_forces();
    if let Some(ext) = tau_ext {
        rhs -= DVector::from_column_slice(ext);
    }
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Numerical("Cholesky factorization failed".into()))?;
    Ok(chol.solve(&rhs))
}
