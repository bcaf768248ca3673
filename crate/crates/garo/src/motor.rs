//! Rotors, translators, motors and the exponential / logarithmic maps
//! between the motor manifold and its bivector Lie algebra.
//!
//! A motor M = m1 + m2 e23 + m3 e13 + m4 e12 + m5 e1∞ + m6 e2∞ + m7 e3∞
//! + m8 e123∞ encodes a rigid transformation applied through the sandwich
//! product M X M̃.  Its logarithm is a screw bivector
//! B = b1 e23 + b2 e13 + b3 e12 + b4 e1∞ + b5 e2∞ + b6 e3∞ with the
//! rotational parameters b1..b3 in radians and the translational ones
//! b4..b6 in meters.
//!
//! The exponential map is defined as the exact inverse of the logarithm on
//! the principal branch (rotation angle below 2π), so log(exp(B)) = B holds
//! literally; all sign conventions follow from that requirement together
//! with the canonical blade orientations of [`crate::ga`].

use nalgebra::{SMatrix, Vector3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::ga::{blade, mask, BitIter, Multivector, GRADE_MASKS};

/// Blade indices backing the 8 motor coefficients, in m1..m8 order.
pub const MOTOR_BLADES: [usize; 8] = [
    blade::S,
    blade::E23,
    blade::E13,
    blade::E12,
    blade::E1I,
    blade::E2I,
    blade::E3I,
    blade::E123I,
];

/// Blade indices backing the 6 screw-bivector coefficients, in b1..b6 order.
pub const SCREW_BLADES: [usize; 6] = [
    blade::E23,
    blade::E13,
    blade::E12,
    blade::E1I,
    blade::E2I,
    blade::E3I,
];

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A rotor: unit-norm even element on {1, e23, e13, e12}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotor {
    /// Coefficients on {1, e23, e13, e12}.
    pub r: [f64; 4],
}

/// A translator: 1 − ½(t1 e1∞ + t2 e2∞ + t3 e3∞).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Translator {
    /// Coefficients on {1, e1∞, e2∞, e3∞}; scalar part is always 1.
    pub t: [f64; 4],
}

/// A motor: the product of a translator and a rotor, constrained to the
/// manifold M M̃ = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Motor {
    /// Coefficients m1..m8 on {1, e23, e13, e12, e1∞, e2∞, e3∞, e123∞}.
    pub m: [f64; 8],
}

/// A screw bivector — the Lie-algebra generator (dual line / screw axis)
/// of a motor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScrewBivector {
    /// Coefficients b1..b6 on {e23, e13, e12, e1∞, e2∞, e3∞}.
    pub b: [f64; 6],
}

impl Rotor {
    pub const IDENTITY: Rotor = Rotor { r: [1.0, 0.0, 0.0, 0.0] };

    pub fn as_motor(&self) -> Motor {
        Motor { m: [self.r[0], self.r[1], self.r[2], self.r[3], 0.0, 0.0, 0.0, 0.0] }
    }

    pub fn to_multivector(&self) -> Multivector {
        Multivector::from_coeffs(&[
            (blade::S, self.r[0]),
            (blade::E23, self.r[1]),
            (blade::E13, self.r[2]),
            (blade::E12, self.r[3]),
        ])
        .restricted(mask::ROTOR)
    }

    pub fn reverse(&self) -> Rotor {
        Rotor { r: [self.r[0], -self.r[1], -self.r[2], -self.r[3]] }
    }

    /// Rotate a Euclidean vector by the sandwich product.
    pub fn rotate(&self, v: Vector3<f64>) -> Vector3<f64> {
        let out = self.as_motor().sandwich(&Multivector::euclidean(v));
        Vector3::new(out.coeff(blade::E1), out.coeff(blade::E2), out.coeff(blade::E3))
    }
}

impl Translator {
    pub const IDENTITY: Translator = Translator { t: [1.0, 0.0, 0.0, 0.0] };

    pub fn as_motor(&self) -> Motor {
        Motor { m: [self.t[0], 0.0, 0.0, 0.0, self.t[1], self.t[2], self.t[3], 0.0] }
    }

    pub fn to_multivector(&self) -> Multivector {
        self.as_motor().to_multivector().restricted(mask::TRANSLATOR)
    }

    /// The Euclidean translation this translator applies.
    pub fn translation(&self) -> Vector3<f64> {
        -2.0 * Vector3::new(self.t[1], self.t[2], self.t[3])
    }
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// T = 1 − ½(t1 e1∞ + t2 e2∞ + t3 e3∞); sandwiching e0 yields
/// embed_point(t).
pub fn make_translator(t: Vector3<f64>) -> Translator {
    Translator { t: [1.0, -0.5 * t.x, -0.5 * t.y, -0.5 * t.z] }
}

/// R = cos(angle/2) − sin(angle/2)·plane for a unit rotation plane in
/// span{e23, e13, e12}.
pub fn make_rotor(plane: &Multivector, angle: f64) -> Result<Rotor> {
    if plane.residual_outside(mask::ROTATION_BIVECTOR) > 0.0 {
        return Err(Error::Domain("rotation plane must lie in span{e23, e13, e12}".into()));
    }
    let p = [plane.coeff(blade::E23), plane.coeff(blade::E13), plane.coeff(blade::E12)];
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("rotation plane not unit-norm: |plane| = {norm}")));
    }
    let (s, c) = (angle / 2.0).sin_cos();
    Ok(Rotor { r: [c, -s * p[0], -s * p[1], -s * p[2]] })
}

impl Motor {
    pub const IDENTITY: Motor = Motor { m: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] };

    pub fn to_multivector(&self) -> Multivector {
        let mut mv = Multivector::zero_with_mask(mask::MOTOR);
        for (k, &b) in MOTOR_BLADES.iter().enumerate() {
            mv.set_coeff(b, self.m[k]);
        }
        mv
    }

    /// Reads a motor from an even multivector, enforcing the blade contract.
    pub fn from_multivector(mv: &Multivector) -> Result<Motor> {
        let outside = mv.residual_outside(mask::MOTOR);
        if outside > 1e-9 {
            return Err(Error::Contract(format!(
                "motor has coefficient {outside:.3e} outside its blade set"
            )));
        }
        Ok(Self::from_multivector_unchecked(mv))
    }

    pub(crate) fn from_multivector_unchecked(mv: &Multivector) -> Motor {
        let mut m = [0.0; 8];
        for (k, &b) in MOTOR_BLADES.iter().enumerate() {
            m[k] = mv.coeff(b);
        }
        Motor { m }
    }

    /// Motor composition (this applied after `rhs` when sandwiching:
    /// (A⊗B) X (A⊗B)~ = A (B X B̃) Ã).
    pub fn compose(&self, rhs: &Motor) -> Motor {
        Motor::from_multivector_unchecked(
            &self.to_multivector().geometric(&rhs.to_multivector()),
        )
    }

    pub fn reverse(&self) -> Motor {
        let m = self.m;
        Motor { m: [m[0], -m[1], -m[2], -m[3], -m[4], -m[5], -m[6], m[7]] }
    }

    /// Residual of the manifold constraint M M̃ = 1.
    pub fn constraint_residual(&self) -> f64 {
        let p = self.to_multivector().geometric(&self.reverse().to_multivector());
        (p - Multivector::scalar(1.0)).max_abs_coeff()
    }

    /// The sandwich product M X M̃.  Grade-preserving: the result is
    /// restricted to the grades present in X (the off-grade coefficients
    /// cancel algebraically).
    pub fn sandwich(&self, x: &Multivector) -> Multivector {
        let mv = self.to_multivector();
        let full = mv.geometric(x).geometric(&self.reverse().to_multivector());
        let mut grades = 0u32;
        for k in 0..6 {
            if x.mask() & GRADE_MASKS[k] != 0 {
                grades |= GRADE_MASKS[k];
            }
        }
        full.restricted(full.mask() & grades)
    }

    /// Apply the motor to a Euclidean position (embed, sandwich, extract).
    pub fn transform_point(&self, x: Vector3<f64>) -> Vector3<f64> {
        crate::ga::extract_point(&self.sandwich(&crate::ga::embed_point(x)))
            .expect("motor sandwich preserves finite points")
    }

    /// Rotate a Euclidean direction (translation part has no effect).
    pub fn rotate_vector(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.rotor_part().rotate(v)
    }

    /// The rotor factor R of M = T ⊗ R, extracted as R = −e0 · (M ⊗ e∞).
    pub fn rotor_part(&self) -> Rotor {
        let me = self.to_multivector().geometric(&Multivector::basis(blade::EI));
        let r = -(Multivector::basis(blade::E0).inner(&me));
        Rotor {
            r: [r.coeff(blade::S), r.coeff(blade::E23), r.coeff(blade::E13), r.coeff(blade::E12)],
        }
    }

    /// The translator factor T = M ⊗ R̃ of M = T ⊗ R.
    pub fn translator_part(&self) -> Translator {
        let t = self
            .to_multivector()
            .geometric(&self.rotor_part().reverse().to_multivector());
        Translator {
            t: [t.coeff(blade::S), t.coeff(blade::E1I), t.coeff(blade::E2I), t.coeff(blade::E3I)],
        }
    }

    /// Re-project onto the manifold after numeric drift: with
    /// M M̃ = s + d e123∞, right-multiply by s^{−1/2} − d/(2 s^{3/2}) e123∞.
    pub fn normalize(&self) -> Result<Motor> {
        let p = self.to_multivector().geometric(&self.reverse().to_multivector());
        let s = p.scalar_part();
        let d = p.coeff(blade::E123I);
        if s <= 0.0 {
            return Err(Error::Domain(format!("degenerate motor: scalar of M M̃ is {s}")));
        }
        let a = 1.0 / s.sqrt();
        let b = -d / (2.0 * s * s.sqrt());
        let corr = Multivector::from_coeffs(&[(blade::S, a), (blade::E123I, b)]);
        Ok(Motor::from_multivector_unchecked(&self.to_multivector().geometric(&corr)))
    }

    /// A uniformly random rigid transform: uniform unit-quaternion rotor
    /// composed with a translation in [−scale, scale]³.
    pub fn random(rng: &mut impl Rng, scale: f64) -> Motor {
        // Shepperd-style uniform quaternion from three uniforms.
        let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        let a = (1.0 - u1).sqrt();
        let b = u1.sqrt();
        let r = [
            a * (2.0 * std::f64::consts::PI * u2).sin(),
            a * (2.0 * std::f64::consts::PI * u2).cos(),
            b * (2.0 * std::f64::consts::PI * u3).sin(),
            b * (2.0 * std::f64::consts::PI * u3).cos(),
        ];
        let rotor = Rotor { r };
        let t = Vector3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        );
        make_translator(t).as_motor().compose(&rotor.as_motor())
    }
}

impl ScrewBivector {
    pub const ZERO: ScrewBivector = ScrewBivector { b: [0.0; 6] };

    pub fn to_multivector(&self) -> Multivector {
        let mut mv = Multivector::zero_with_mask(mask::SCREW);
        for (k, &b) in SCREW_BLADES.iter().enumerate() {
            mv.set_coeff(b, self.b[k]);
        }
        mv
    }

    pub fn from_multivector(mv: &Multivector) -> Result<ScrewBivector> {
        if mv.residual_outside(mask::SCREW) > 1e-9 {
            return Err(Error::Contract("screw bivector outside its blade set".into()));
        }
        let mut b = [0.0; 6];
        for (k, &bl) in SCREW_BLADES.iter().enumerate() {
            b[k] = mv.coeff(bl);
        }
        Ok(ScrewBivector { b })
    }

    /// Rotation angle ‖(b1, b2, b3)‖ in radians.
    pub fn angle(&self) -> f64 {
        (self.b[0] * self.b[0] + self.b[1] * self.b[1] + self.b[2] * self.b[2]).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.b.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> ScrewBivector {
        let mut b = self.b;
        for x in &mut b {
            *x *= s;
        }
        ScrewBivector { b }
    }

    pub fn add(&self, rhs: &ScrewBivector) -> ScrewBivector {
        let mut b = self.b;
        for (x, y) in b.iter_mut().zip(rhs.b) {
            *x += y;
        }
        ScrewBivector { b }
    }
}

// ---------------------------------------------------------------------------
// exp / log and their Jacobians
// ---------------------------------------------------------------------------

/// Threshold on 1 − m1 below which the acos-based coefficients switch to
/// their Taylor expansions.
const SERIES_SWITCH: f64 = 1e-8;

/// f(x) = 2 acos(x) / sin(acos(x)), the coefficient tying b1..b3 to m2..m4.
/// Near x = 1 the closed form is 0/0; a Taylor expansion in u = 1 − x
/// (coefficients 2·2ⁿ(n!)²/(2n+1)!) takes over.
fn log_coeff(x: f64) -> f64 {
    let u = 1.0 - x;
    if u < SERIES_SWITCH {
        2.0 * (1.0 + u / 3.0 + 2.0 * u * u / 15.0 + 2.0 * u * u * u / 35.0)
    } else {
        2.0 * x.acos() / (1.0 - x * x).sqrt()
    }
}

/// Wider series window for the derivative: its closed form subtracts two
/// O(1/u) terms and loses ~u^{−3/2}·ε of precision, so the Taylor path must
/// take over much earlier than for the value itself.
const DERIV_SERIES_SWITCH: f64 = 1e-4;

/// d/dx of [`log_coeff`].  The closed form is
/// 2/(x²−1) + 2x·acos(x)/(1−x²)^{3/2}, with the matching Taylor expansion
/// −2(1/3 + 4u/15 + 6u²/35 + 32u³/315) near x = 1.
fn log_coeff_deriv(x: f64) -> f64 {
    let u = 1.0 - x;
    if u < DERIV_SERIES_SWITCH {
        -2.0 * (1.0 / 3.0 + 4.0 * u / 15.0 + 6.0 * u * u / 35.0 + 32.0 * u * u * u / 315.0)
    } else {
        let s2 = 1.0 - x * x;
        2.0 / (x * x - 1.0) + 2.0 * x * x.acos() / (s2 * s2.sqrt())
    }
}

/// sin(θ/2)/θ with a series fallback near zero.
fn half_sinc(theta: f64) -> f64 {
    if theta.abs() < 1e-6 {
        let t2 = theta * theta;
        0.5 - t2 / 48.0 + t2 * t2 / 3840.0
    } else {
        (theta / 2.0).sin() / theta
    }
}

/// d/dθ of [`half_sinc`], divided by θ (the combination the Jacobian needs).
fn half_sinc_deriv_over_theta(theta: f64) -> f64 {
    if theta.abs() < 1e-4 {
        -1.0 / 24.0 + theta * theta / 960.0
    } else {
        let s = (theta / 2.0).sin();
        let c = (theta / 2.0).cos();
        (0.5 * theta * c - s) / (theta * theta * theta)
    }
}

/// The 4×3 columns tying (m5..m8) to the translational parameters: with
/// c = (−b4/2, −b5/2, −b6/2) and the rotor coefficients m1..m4,
///   m5 = m1 c1 − m4 c2 − m3 c3,
///   m6 = m4 c1 + m1 c2 − m2 c3,
///   m7 = m3 c1 + m2 c2 + m1 c3,
///   m8 = m2 c1 − m3 c2 + m4 c3.
/// This is the orthogonal-completion solve of the Appendix-D bilinear system
/// plus the manifold constraint m2 m5 − m3 m6 + m4 m7 − m1 m8 = 0.
fn translation_coeffs(m14: [f64; 4], c: [f64; 3]) -> [f64; 4] {
    let [m1, m2, m3, m4] = m14;
    [
        m1 * c[0] - m4 * c[1] - m3 * c[2],
        m4 * c[0] + m1 * c[1] - m2 * c[2],
        m3 * c[0] + m2 * c[1] + m1 * c[2],
        m2 * c[0] - m3 * c[1] + m4 * c[2],
    ]
}

/// Exponential map from screw bivectors to motors — the exact inverse of
/// [`log_motor`] on the principal branch (rotation angle < 2π).
pub fn exp_bivector(bv: &ScrewBivector) -> Motor {
    let theta = bv.angle();
    let s = half_sinc(theta);
    let m1 = (theta / 2.0).cos();
    let m14 = [m1, -s * bv.b[0], -s * bv.b[1], -s * bv.b[2]];
    let c = [-bv.b[3] / 2.0, -bv.b[4] / 2.0, -bv.b[5] / 2.0];
    let m58 = translation_coeffs(m14, c);
    Motor {
        m: [m14[0], m14[1], m14[2], m14[3], m58[0], m58[1], m58[2], m58[3]],
    }
}

/// Logarithmic map from motors to screw bivectors, per the closed forms
///   b_i    = −m_{i+1} · 2 acos(m1)/sin(acos(m1))        (i = 1..3)
///   b4     = −2( m1 m5 + m4 m6 + m3 m7 + m2 m8)
///   b5     = −2(−m4 m5 + m1 m6 + m2 m7 − m3 m8)
///   b6     = −2(−m3 m5 − m2 m6 + m1 m7 + m4 m8).
pub fn log_motor(motor: &Motor) -> Result<ScrewBivector> {
    let m = motor.m;
    if m[0] <= -1.0 + 1e-12 {
        return Err(Error::Domain(
            "motor log branch point: rotation angle 2π (m1 = −1)".into(),
        ));
    }
    let f = log_coeff(m[0].clamp(-1.0, 1.0));
    Ok(ScrewBivector {
        b: [
            -m[1] * f,
            -m[2] * f,
            -m[3] * f,
            -2.0 * (m[0] * m[4] + m[3] * m[5] + m[2] * m[6] + m[1] * m[7]),
            -2.0 * (-m[3] * m[4] + m[0] * m[5] + m[1] * m[6] - m[2] * m[7]),
            -2.0 * (-m[2] * m[4] - m[1] * m[5] + m[0] * m[6] + m[3] * m[7]),
        ],
    })
}

/// Jacobian ∂b/∂m of [`log_motor`] over the 8 ambient motor coordinates.
///
/// Rows 1–3 use the derivative of the acos coefficient
/// (2/(m1²−1) + 2 m1 acos(m1)/(1−m1²)^{3/2}); rows 4–6 are the exact
/// gradients of the bilinear forms above.
pub fn log_jacobian(motor: &Motor) -> Result<SMatrix<f64, 6, 8>> {
    let m = motor.m;
    if m[0] <= -1.0 + 1e-12 {
        return Err(Error::Domain(
            "motor log branch point: rotation angle 2π (m1 = −1)".into(),
        ));
    }
    let x = m[0].clamp(-1.0, 1.0);
    let f = log_coeff(x);
    let fp = log_coeff_deriv(x);
    let mut j = SMatrix::<f64, 6, 8>::zeros();
    for i in 0..3 {
        j[(i, 0)] = -m[i + 1] * fp;
        j[(i, i + 1)] = -f;
    }
    // b4 row.
    j[(3, 0)] = -2.0 * m[4];
    j[(3, 1)] = -2.0 * m[7];
    j[(3, 2)] = -2.0 * m[6];
    j[(3, 3)] = -2.0 * m[5];
    j[(3, 4)] = -2.0 * m[0];
    j[(3, 5)] = -2.0 * m[3];
    j[(3, 6)] = -2.0 * m[2];
    j[(3, 7)] = -2.0 * m[1];
    // b5 row.
    j[(4, 0)] = -2.0 * m[5];
    j[(4, 1)] = -2.0 * m[6];
    j[(4, 2)] = 2.0 * m[7];
    j[(4, 3)] = 2.0 * m[4];
    j[(4, 4)] = 2.0 * m[3];
    j[(4, 5)] = -2.0 * m[0];
    j[(4, 6)] = -2.0 * m[1];
    j[(4, 7)] = 2.0 * m[2];
    // b6 row.
    j[(5, 0)] = -2.0 * m[6];
    j[(5, 1)] = 2.0 * m[5];
    j[(5, 2)] = 2.0 * m[4];
    j[(5, 3)] = -2.0 * m[7];
    j[(5, 4)] = 2.0 * m[2];
    j[(5, 5)] = 2.0 * m[1];
    j[(5, 6)] = -2.0 * m[0];
    j[(5, 7)] = -2.0 * m[3];
    Ok(j)
}

/// Differential ∂m/∂b of [`exp_bivector`] at B — the 8×6 tangent map used
/// when chaining costs through the exponential.
pub fn exp_jacobian(bv: &ScrewBivector) -> SMatrix<f64, 8, 6> {
    let theta = bv.angle();
    let s = half_sinc(theta);
    let sp = half_sinc_deriv_over_theta(theta);
    let m1 = (theta / 2.0).cos();
    let m14 = [m1, -s * bv.b[0], -s * bv.b[1], -s * bv.b[2]];
    let c = [-bv.b[3] / 2.0, -bv.b[4] / 2.0, -bv.b[5] / 2.0];
    let mut j = SMatrix::<f64, 8, 6>::zeros();
    // Rotor block: ∂m1/∂b_j = −½ s b_j; ∂m_{1+i}/∂b_j = −(sp b_i b_j + s δ_ij).
    for jj in 0..3 {
        j[(0, jj)] = -0.5 * s * bv.b[jj];
        for i in 0..3 {
            j[(i + 1, jj)] = -(sp * bv.b[i] * bv.b[jj] + if i == jj { s } else { 0.0 });
        }
    }
    // Translation block, rotational columns: chain through m1..m4.
    for jj in 0..3 {
        let dm: [f64; 4] = [j[(0, jj)], j[(1, jj)], j[(2, jj)], j[(3, jj)]];
        j[(4, jj)] = c[0] * dm[0] - c[1] * dm[3] - c[2] * dm[2];
        j[(5, jj)] = c[0] * dm[3] + c[1] * dm[0] - c[2] * dm[1];
        j[(6, jj)] = c[0] * dm[2] + c[1] * dm[1] + c[2] * dm[0];
        j[(7, jj)] = c[0] * dm[1] - c[1] * dm[2] + c[2] * dm[3];
    }
    // Translation block, translational columns: ∂c_k/∂b_{3+k} = −½.
    let cols = [
        [m14[0], m14[3], m14[2], m14[1]],
        [-m14[3], m14[0], m14[1], -m14[2]],
        [-m14[2], -m14[1], m14[0], m14[3]],
    ];
    for (k, col) in cols.iter().enumerate() {
        for i in 0..4 {
            j[(4 + i, 3 + k)] = -0.5 * col[i];
        }
    }
    j
}

/// Weighted motor interpolation M(t) = exp(Σ_j w_j(t) log(M_j)).
pub fn motor_interpolate(viapoints: &[Motor], weights: &[Vec<f64>]) -> Result<Vec<Motor>> {
    if viapoints.is_empty() {
        return Err(Error::Domain("motor interpolation needs at least one viapoint".into()));
    }
    let logs: Vec<ScrewBivector> =
        viapoints.iter().map(log_motor).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(weights.len());
    for w in weights {
        if w.len() != viapoints.len() {
            return Err(Error::Domain(format!(
                "weight vector length {} != viapoint count {}",
                w.len(),
                viapoints.len()
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("interpolation weights sum to {sum}, not 1")));
        }
        let mut acc = ScrewBivector::ZERO;
        for (wj, lj) in w.iter().zip(&logs) {
            acc = acc.add(&lj.scaled(*wj));
        }
        out.push(exp_bivector(&acc));
    }
    Ok(out)
}

/// Convenience: the set bit count of a mask (blade count of a typed kind).
pub fn blade_count(mask: u32) -> usize {
    BitIter(mask).count()
}
