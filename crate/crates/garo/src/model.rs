//! Serial-manipulator description: ordered revolute chain with per-joint
//! fixed frame motors, rotation planes, and link mass properties, loaded
//! from a TOML robot-description file.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::{blade, Multivector};
use crate::motor::{make_rotor, make_translator, Motor};

/// A revolute joint: fixed frame transform M_F followed by a rotation in a
/// fixed unit bivector plane.
#[derive(Clone, Debug)]
pub struct Joint {
    pub name: String,
    pub frame_motor: Motor,
    /// Unit bivector in span{e23, e13, e12}.
    pub rotation_plane: Multivector,
    pub limits: (f64, f64),
}

/// Mass properties of the link following a joint, expressed in the joint
/// frame after the joint's rotation.
#[derive(Clone, Debug)]
pub struct Link {
    pub mass: f64,
    pub com: Vector3<f64>,
    /// Symmetric positive-definite rotational inertia tensor acting on the
    /// (e23, e13, e12) coordinates of rotation bivectors.
    pub inertia: Matrix3<f64>,
}

/// An ordered serial chain of revolute joints with link mass properties.
#[derive(Clone, Debug)]
pub struct RobotModel {
    pub name: String,
    pub joints: Vec<Joint>,
    pub links: Vec<Link>,
    /// Gravitational acceleration magnitude, acting along e3.
    pub gravity: f64,
}

/// Rotation plane in a description file: a named plane or explicit
/// (e23, e13, e12) coefficients.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PlaneSpec {
    Named(String),
    Coefficients([f64; 3]),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FixedRotation {
    pub axis: [f64; 3],
    pub angle: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LinkDescription {
    pub mass: f64,
    pub com: [f64; 3],
    /// [Ixx, Iyy, Izz, Ixy, Ixz, Iyz].
    pub inertia: [f64; 6],
}

fn default_joint_type() -> String {
    "revolute".to_string()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct JointDescription {
    pub name: String,
    #[serde(rename = "type", default = "default_joint_type")]
    pub joint_type: String,
    pub translation: [f64; 3],
    pub rotation_plane: PlaneSpec,
    pub limits: [f64; 2],
    // Tables last so TOML serialization emits values before sub-tables.
    #[serde(default)]
    pub fixed_rotation: Option<FixedRotation>,
    pub link: LinkDescription,
}

fn default_gravity() -> f64 {
    9.81
}

/// The on-disk schema of a `.model` file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RobotDescription {
    pub name: String,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub joints: Vec<JointDescription>,
}

impl RobotDescription {
    pub fn from_toml(text: &str) -> Result<RobotDescription> {
        toml::from_str(text).map_err(|e| Error::Config(format!("bad robot description: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("serialization failed: {e}")))
    }
}

/// Euclidean rotation-plane bivector dual to a unit axis:
/// n ↦ n_x e23 − n_y e13 + n_z e12.
pub fn axis_to_plane(axis: Vector3<f64>) -> Result<Multivector> {
    let n = axis.norm();
    if n < 1e-12 {
        return Err(Error::Config("zero rotation axis".into()));
    }
    let a = axis / n;
    let mut mv = Multivector::zero_with_mask(crate::ga::mask::ROTATION_BIVECTOR);
    mv.set_coeff(blade::E23, a.x);
    mv.set_coeff(blade::E13, -a.y);
    mv.set_coeff(blade::E12, a.z);
    Ok(mv)
}

fn resolve_plane(spec: &PlaneSpec) -> Result<Multivector> {
    let mv = match spec {
        PlaneSpec::Named(s) => match s.as_str() {
            "e23" => Multivector::basis(blade::E23),
            "e13" => Multivector::basis(blade::E13),
            "e12" => Multivector::basis(blade::E12),
            other => {
                return Err(Error::Config(format!(
                    "unknown rotation plane '{other}' (expected e23, e13, e12 or coefficients)"
                )))
            }
        },
        PlaneSpec::Coefficients([c23, c13, c12]) => {
            let mut mv = Multivector::zero_with_mask(crate::ga::mask::ROTATION_BIVECTOR);
            mv.set_coeff(blade::E23, *c23);
            mv.set_coeff(blade::E13, *c13);
            mv.set_coeff(blade::E12, *c12);
            mv
        }
    };
    let norm = mv.coeff_norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "rotation plane must be unit-norm (got norm {norm})"
        )));
    }
    Ok(mv * (1.0 / norm))
}

fn validate_inertia(name: &str, i: &[f64; 6]) -> Result<Matrix3<f64>> {
    let m = Matrix3::new(i[0], i[3], i[4], i[3], i[1], i[5], i[4], i[5], i[2]);
    let eig = m.symmetric_eigenvalues();
    let mut ev = [eig[0], eig[1], eig[2]];
    ev.sort_by(f64::total_cmp);
    if ev[0] <= 0.0 {
        return Err(Error::Config(format!(
            "joint '{name}': inertia tensor is not positive definite (eigenvalues {ev:?})"
        )));
    }
    // Physical inertia triangle inequality: each principal moment is at most
    // the sum of the other two.
    if ev[2] > ev[0] + ev[1] + 1e-12 * ev[2] {
        return Err(Error::Config(format!(
            "joint '{name}': inertia tensor violates the triangle inequality (eigenvalues {ev:?})"
        )));
    }
    Ok(m)
}

/// Construct a model from a parsed description, establishing all invariants.
pub fn load_model(doc: &RobotDescription) -> Result<RobotModel> {
    if doc.joints.is_empty() {
        return Err(Error::Config("robot needs at least one joint".into()));
    }
    let mut joints = Vec::with_capacity(doc.joints.len());
    let mut links = Vec::with_capacity(doc.joints.len());
    for jd in &doc.joints {
        if jd.joint_type != "revolute" {
            return Err(Error::Config(format!(
                "joint '{}': unsupported joint type '{}' (only revolute)",
                jd.name, jd.joint_type
            )));
        }
        if jd.limits[0] > jd.limits[1] {
            return Err(Error::Config(format!(
                "joint '{}': limits are reversed",
                jd.name
            )));
        }
        let translator =
            make_translator(Vector3::new(jd.translation[0], jd.translation[1], jd.translation[2]));
        let mut frame_motor = translator.as_motor();
        if let Some(fr) = &jd.fixed_rotation {
            if fr.angle != 0.0 {
                let plane = axis_to_plane(Vector3::new(fr.axis[0], fr.axis[1], fr.axis[2]))?;
                let rotor = make_rotor(&plane, fr.angle)?;
                frame_motor = frame_motor.compose(&rotor.as_motor());
            }
        }
        let rotation_plane = resolve_plane(&jd.rotation_plane)?;
        if jd.link.mass <= 0.0 {
            return Err(Error::Config(format!(
                "joint '{}': link mass must be positive",
                jd.name
            )));
        }
        let inertia = validate_inertia(&jd.name, &jd.link.inertia)?;
        joints.push(Joint {
            name: jd.name.clone(),
            frame_motor,
            rotation_plane,
            limits: (jd.limits[0], jd.limits[1]),
        });
        links.push(Link {
            mass: jd.link.mass,
            com: Vector3::new(jd.link.com[0], jd.link.com[1], jd.link.com[2]),
            inertia,
        });
    }
    Ok(RobotModel { name: doc.name.clone(), joints, links, gravity: doc.gravity })
}

impl RobotModel {
    pub fn from_toml(text: &str) -> Result<RobotModel> {
        load_model(&RobotDescription::from_toml(text)?)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<RobotModel> {
        RobotModel::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }
}

/// Joint transform M_{F,j} ⊗ R_j(q): the fixed frame motor followed by the
/// joint rotation in the joint's plane.
pub fn joint_motor(j: &Joint, q: f64) -> Motor {
    let rotor = make_rotor(&j.rotation_plane, q).expect("joint rotation plane is unit");
    j.frame_motor.compose(&rotor.as_motor())
}

/// Build a joint frame from modified (Craig) DH parameters: the fixed part
/// of Rot_x(α)·Trans_x(a)·Trans_z(d)·Rot_z(q), i.e. translation
/// Rx(α)·(a,0,d) followed by the fixed rotation about x by α.  The joint
/// variable q then acts in the e12 plane.
pub fn dh_to_frame(a: f64, d: f64, alpha: f64) -> (Vector3<f64>, FixedRotation) {
    let t = Vector3::new(a, -d * alpha.sin(), d * alpha.cos());
    (t, FixedRotation { axis: [1.0, 0.0, 0.0], angle: alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Isometry3, Translation3, UnitQuaternion};

    fn models_dir() -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
    }

    const ONE_JOINT: &str = r#"
name = "planar1"

[[joints]]
name = "j1"
translation = [0.0, 0.0, 0.0]
rotation_plane = "e12"
limits = [-3.1416, 3.1416]

[joints.link]
mass = 1.0
com = [0.5, 0.0, 0.0]
inertia = [0.01, 0.01, 0.015, 0.0, 0.0, 0.0]
"#;

    #[test]
    fn one_joint_model_loads() {
        let model = RobotModel::from_toml(ONE_JOINT).unwrap();
        assert_eq!(model.dof(), 1);
        assert_eq!(model.gravity, 9.81);
        assert_eq!(model.joints[0].frame_motor, Motor::IDENTITY);
        assert_eq!(model.joints[0].rotation_plane, Multivector::basis(blade::E12));
        // q=0 → frame motor.
        assert_eq!(joint_motor(&model.joints[0], 0.0), Motor::IDENTITY);
    }

    #[test]
    fn axis_to_plane_golden() {
        // +π/2 about z maps e1 → e2; about y maps e3 → e1; about x maps e2 → e3.
        let cases = [
            (Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)),
            (Vector3::new(0.0, 1.0, 0.0), Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0)),
            (Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0), Vector3::new(0.0, 0.0, 1.0)),
        ];
        for (axis, from, to) in cases {
            let plane = axis_to_plane(axis).unwrap();
            let r = make_rotor(&plane, std::f64::consts::FRAC_PI_2).unwrap();
            assert!((r.rotate(from) - to).norm() < 1e-12, "axis {axis:?}");
        }
    }

    #[test]
    fn axis_angle_matches_nalgebra() {
        let mut rng = crate::experiments::test_rng(50);
        for _ in 0..50 {
            let axis = crate::experiments::random_vec3(&mut rng, 1.0).normalize();
            let angle: f64 = rand::Rng::gen_range(&mut rng, -3.0..3.0);
            let v = crate::experiments::random_vec3(&mut rng, 2.0);
            let r = make_rotor(&axis_to_plane(axis).unwrap(), angle).unwrap();
            let q = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
            assert!((r.rotate(v) - q * v).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_descriptions() {
        // Negative inertia eigenvalue.
        let bad = ONE_JOINT.replace("[0.01, 0.01, 0.015", "[-0.01, 0.01, 0.015");
        assert!(RobotModel::from_toml(&bad).is_err());
        // Triangle-inequality violation (Izz > Ixx + Iyy).
        let bad = ONE_JOINT.replace("[0.01, 0.01, 0.015", "[0.01, 0.01, 0.5");
        assert!(RobotModel::from_toml(&bad).is_err());
        // Non-revolute joint.
        let bad = ONE_JOINT.replace("name = \"j1\"", "name = \"j1\"\ntype = \"prismatic\"");
        assert!(RobotModel::from_toml(&bad).is_err());
        // Non-unit rotation plane.
        let bad = ONE_JOINT.replace("rotation_plane = \"e12\"", "rotation_plane = [0.0, 0.0, 0.5]");
        assert!(RobotModel::from_toml(&bad).is_err());
        // Zero mass.
        let bad = ONE_JOINT.replace("mass = 1.0", "mass = 0.0");
        assert!(RobotModel::from_toml(&bad).is_err());
        // Reversed limits.
        let bad = ONE_JOINT.replace("limits = [-3.1416, 3.1416]", "limits = [3.0, -3.0]");
        assert!(RobotModel::from_toml(&bad).is_err());
    }

    #[test]
    fn joint_motor_periodicity_in_sandwich() {
        let model = RobotModel::from_toml(ONE_JOINT).unwrap();
        let j = &model.joints[0];
        let q = 0.7;
        let m1 = joint_motor(j, q);
        let m2 = joint_motor(j, q + 4.0 * std::f64::consts::PI);
        for i in 0..8 {
            assert_relative_eq!(m1.m[i], m2.m[i], epsilon = 1e-12);
        }
        // At q + 2π the motor flips sign but the sandwich action agrees.
        let m3 = joint_motor(j, q + 2.0 * std::f64::consts::PI);
        let p = Vector3::new(0.3, -0.2, 0.9);
        assert!((m1.transform_point(p) - m3.transform_point(p)).norm() < 1e-12);
        assert!((m1.m[0] + m3.m[0]).abs() < 1e-12);
    }

    #[test]
    fn planar2_model_loads() {
        let model = RobotModel::load_file(models_dir().join("planar2.model")).unwrap();
        assert_eq!(model.dof(), 2);
        for j in &model.joints {
            assert!(j.frame_motor.constraint_residual() < 1e-12);
        }
        // Chain composition associativity: ((M1 M2) vs M1 (M2)) applied stepwise.
        let q = [0.4, -0.9];
        let m1 = joint_motor(&model.joints[0], q[0]);
        let m2 = joint_motor(&model.joints[1], q[1]);
        let p = Vector3::new(0.1, 0.2, 0.3);
        let via_compose = m1.compose(&m2).transform_point(p);
        let stepwise = m1.transform_point(m2.transform_point(p));
        assert!((via_compose - stepwise).norm() < 1e-12);
    }

    #[test]
    fn franka_model_loads_and_matches_matrix_chain() {
        let model = RobotModel::load_file(models_dir().join("franka.model")).unwrap();
        assert_eq!(model.dof(), 7);
        for j in &model.joints {
            assert!(j.frame_motor.constraint_residual() < 1e-12);
            assert_eq!(j.rotation_plane, Multivector::basis(blade::E12));
        }

        // Independent oracle: the same chain as homogeneous transforms built
        // from the modified DH parameters with nalgebra isometries.
        let dh: [(f64, f64, f64); 7] = [
            (0.0, 0.333, 0.0),
            (0.0, 0.0, -std::f64::consts::FRAC_PI_2),
            (0.0, 0.316, std::f64::consts::FRAC_PI_2),
            (0.0825, 0.0, std::f64::consts::FRAC_PI_2),
            (-0.0825, 0.384, -std::f64::consts::FRAC_PI_2),
            (0.0, 0.0, std::f64::consts::FRAC_PI_2),
            (0.088, 0.0, std::f64::consts::FRAC_PI_2),
        ];
        let qs = [
            [0.0; 7],
            [0.3, -0.6, 0.25, -1.8, 0.4, 1.5, 0.7],
            [-1.1, 0.9, -0.4, -2.2, 1.3, 2.4, -0.5],
        ];
        for q in qs {
            let mut iso = Isometry3::identity();
            let mut motor = Motor::IDENTITY;
            for (i, &(a, d, alpha)) in dh.iter().enumerate() {
                let x_axis = nalgebra::Unit::new_normalize(Vector3::x());
                let z_axis = nalgebra::Unit::new_normalize(Vector3::z());
                iso *= Isometry3::from_parts(
                    Translation3::identity(),
                    UnitQuaternion::from_axis_angle(&x_axis, alpha),
                );
                iso *= Isometry3::translation(a, 0.0, d);
                iso *= Isometry3::from_parts(
                    Translation3::identity(),
                    UnitQuaternion::from_axis_angle(&z_axis, q[i]),
                );
                motor = motor.compose(&joint_motor(&model.joints[i], q[i]));
            }
            let probe = [Vector3::zeros(), Vector3::new(0.1, -0.2, 0.3)];
            for p in probe {
                let want = iso * nalgebra::Point3::from(p);
                let got = motor.transform_point(p);
                assert!((got - want.coords).norm() < 1e-10, "q={q:?} p={p:?}");
            }
        }
    }

    #[test]
    fn serialize_roundtrip_is_bitwise_identical() {
        for file in ["planar2.model", "franka.model"] {
            let text = std::fs::read_to_string(models_dir().join(file)).unwrap();
            let desc = RobotDescription::from_toml(&text).unwrap();
            let desc2 = RobotDescription::from_toml(&desc.to_toml().unwrap()).unwrap();
            assert_eq!(desc, desc2);
            let m1 = load_model(&desc).unwrap();
            let m2 = load_model(&desc2).unwrap();
            assert_eq!(m1.gravity.to_bits(), m2.gravity.to_bits());
            for (a, b) in m1.joints.iter().zip(&m2.joints) {
                for i in 0..8 {
                    assert_eq!(a.frame_motor.m[i].to_bits(), b.frame_motor.m[i].to_bits());
                }
                assert_eq!(a.limits, b.limits);
            }
            for (a, b) in m1.links.iter().zip(&m2.links) {
                assert_eq!(a.mass.to_bits(), b.mass.to_bits());
                assert_eq!(a.com, b.com);
                assert_eq!(a.inertia, b.inertia);
            }
        }
    }

    #[test]
    fn dh_helper_matches_model_file_frames() {
        let model = RobotModel::load_file(models_dir().join("franka.model")).unwrap();
        let (t, fr) = dh_to_frame(0.0825, 0.0, std::f64::consts::FRAC_PI_2);
        let plane = axis_to_plane(Vector3::new(fr.axis[0], fr.axis[1], fr.axis[2])).unwrap();
        let motor = make_translator(t)
            .as_motor()
            .compose(&make_rotor(&plane, fr.angle).unwrap().as_motor());
        let j4 = &model.joints[3].frame_motor;
        for i in 0..8 {
            assert_relative_eq!(motor.m[i], j4.m[i], epsilon = 1e-12);
        }
    }
}
