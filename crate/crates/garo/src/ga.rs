//! The conformal geometric algebra G(4,1) kernel.
//!
//! Basis blades follow the canonical grade-ascending ordering (scalar; e1,
//! e2, e3, e∞, e0; the ten bivectors e23..e0∞; the ten trivectors; the five
//! 4-vectors; the pseudoscalar e0123∞).  Every composite blade is oriented
//! as the wedge of its constituent vectors taken in the fixed internal order
//! e0 < e1 < e2 < e3 < e∞.  All product signs are derived from that single
//! canonical order by rewriting words of basis vectors into normal-ordered
//! form with the Clifford relation  a b + b a = 2 B(a, b),  where the only
//! nonzero metric pairings are  e1² = e2² = e3² = 1  and  e∞·e0 = −1.
//!
//! Multivectors are sparse: a 32-bit mask records which blades a value may
//! carry, and every operation statically propagates that mask, so typed
//! values (points, motors, lines, ...) never acquire coefficients outside
//! their declared blade set.

use nalgebra::Vector3;
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// Number of basis blades of G(4,1).
pub const NUM_BLADES: usize = 32;

/// Named blade indices in the canonical ordering.  `I` in a name stands for
/// e∞ ("infinity"), `0` for the origin null vector e0.
pub mod blade {
    pub const S: usize = 0; // scalar
    pub const E1: usize = 1;
    pub const E2: usize = 2;
    pub const E3: usize = 3;
    pub const EI: usize = 4; // e∞
    pub const E0: usize = 5;
    pub const E23: usize = 6;
    pub const E13: usize = 7;
    pub const E12: usize = 8;
    pub const E1I: usize = 9;
    pub const E2I: usize = 10;
    pub const E3I: usize = 11;
    pub const E01: usize = 12;
    pub const E02: usize = 13;
    pub const E03: usize = 14;
    pub const E0I: usize = 15;
    pub const E123: usize = 16;
    pub const E12I: usize = 17;
    pub const E13I: usize = 18;
    pub const E23I: usize = 19;
    pub const E012: usize = 20;
    pub const E013: usize = 21;
    pub const E023: usize = 22;
    pub const E01I: usize = 23;
    pub const E02I: usize = 24;
    pub const E03I: usize = 25;
    pub const E123I: usize = 26;
    pub const E0123: usize = 27;
    pub const E012I: usize = 28;
    pub const E023I: usize = 29;
    pub const E013I: usize = 30;
    pub const E0123I: usize = 31;
}

/// Constituent basis vectors of each blade, as a 5-bit set
/// (bit 0 = e0, bits 1..3 = e1..e3, bit 4 = e∞).
pub const BLADE_VECTORS: [u8; NUM_BLADES] = [
    0b00000, // 1
    0b00010, 0b00100, 0b01000, 0b10000, 0b00001, // e1 e2 e3 e∞ e0
    0b01100, 0b01010, 0b00110, 0b10010, 0b10100, // e23 e13 e12 e1∞ e2∞
    0b11000, 0b00011, 0b00101, 0b01001, 0b10001, // e3∞ e01 e02 e03 e0∞
    0b01110, 0b10110, 0b11010, 0b11100, 0b00111, // e123 e12∞ e13∞ e23∞ e012
    0b01011, 0b01101, 0b10011, 0b10101, 0b11001, // e013 e023 e01∞ e02∞ e03∞
    0b11110, 0b01111, 0b10111, 0b11101, 0b11011, // e123∞ e0123 e012∞ e023∞ e013∞
    0b11111, // e0123∞
];

/// Human-readable blade names, index-aligned with the canonical ordering.
pub const BLADE_NAMES: [&str; NUM_BLADES] = [
    "1", "e1", "e2", "e3", "ei", "e0", "e23", "e13", "e12", "e1i", "e2i", "e3i", "e01", "e02",
    "e03", "e0i", "e123", "e12i", "e13i", "e23i", "e012", "e013", "e023", "e01i", "e02i", "e03i",
    "e123i", "e0123", "e012i", "e023i", "e013i", "e0123i",
];

/// Grade (number of constituent vectors) of a blade.
pub const fn grade(index: usize) -> usize {
    BLADE_VECTORS[index].count_ones() as usize
}

/// Blade masks of frequently used value kinds (bit k set ⇔ blade k allowed).
pub mod mask {
    use super::blade::*;

    pub const fn of(blades: &[usize]) -> u32 {
        let mut m = 0u32;
        let mut i = 0;
        while i < blades.len() {
            m |= 1 << blades[i];
            i += 1;
        }
        m
    }

    pub const SCALAR: u32 = 1 << S;
    /// Grade-1 subspace; also the blade set of a conformal point.
    pub const POINT: u32 = of(&[E1, E2, E3, EI, E0]);
    /// Euclidean vectors (no null components).
    pub const EUCLIDEAN: u32 = of(&[E1, E2, E3]);
    /// Full grade-2 subspace; also the blade set of a point pair.
    pub const POINT_PAIR: u32 = of(&[E23, E13, E12, E1I, E2I, E3I, E01, E02, E03, E0I]);
    /// Rotation bivectors.
    pub const ROTATION_BIVECTOR: u32 = of(&[E23, E13, E12]);
    /// Screw bivectors (motor Lie algebra / dual lines).
    pub const SCREW: u32 = of(&[E23, E13, E12, E1I, E2I, E3I]);
    pub const ROTOR: u32 = of(&[S, E23, E13, E12]);
    pub const TRANSLATOR: u32 = of(&[S, E1I, E2I, E3I]);
    pub const MOTOR: u32 = of(&[S, E23, E13, E12, E1I, E2I, E3I, E123I]);
    pub const LINE: u32 = of(&[E12I, E13I, E23I, E01I, E02I, E03I]);
    /// Full grade-3 subspace; also the blade set of a circle.
    pub const CIRCLE: u32 = of(&[E123, E12I, E13I, E23I, E012, E013, E023, E01I, E02I, E03I]);
    pub const PLANE: u32 = of(&[E123I, E012I, E023I, E013I]);
    /// Full grade-4 subspace; also the blade set of a sphere.
    pub const SPHERE: u32 = of(&[E123I, E0123, E012I, E023I, E013I]);
    pub const PSEUDOSCALAR: u32 = 1 << E0123I;
    pub const FULL: u32 = u32::MAX;
}

/// Mask selecting all blades of grade `k`.
pub const GRADE_MASKS: [u32; 6] = {
    let mut m = [0u32; 6];
    let mut i = 0;
    while i < NUM_BLADES {
        m[BLADE_VECTORS[i].count_ones() as usize] |= 1 << i;
        i += 1;
    }
    m
};

// ---------------------------------------------------------------------------
// Product tables
// ---------------------------------------------------------------------------

const VEC_E0: u8 = 0;
const VEC_EI: u8 = 4;

/// Metric pairing of two basis vectors: B(e∞, e0) = B(e0, e∞) = −1,
/// B(ek, ek) = 1 for the Euclidean vectors, zero otherwise.
fn metric(a: u8, b: u8) -> f64 {
    if a == b {
        if a == VEC_E0 || a == VEC_EI {
            0.0
        } else {
            1.0
        }
    } else if (a == VEC_E0 && b == VEC_EI) || (a == VEC_EI && b == VEC_E0) {
        -1.0
    } else {
        0.0
    }
}

/// Rewrite a word of basis vectors into a combination of strictly ascending
/// words using the Clifford relation, accumulating into `out`.
fn normal_order(word: &mut Vec<u8>, coeff: f64, out: &mut Vec<(Vec<u8>, f64)>) {
    for i in 0..word.len().saturating_sub(1) {
        let (a, b) = (word[i], word[i + 1]);
        if a == b {
            let m = metric(a, a);
            if m != 0.0 {
                let mut w = word.clone();
                w.drain(i..i + 2);
                normal_order(&mut w, coeff * m, out);
            }
            return;
        }
        if a > b {
            // a b = 2 B(a,b) − b a
            let m = metric(a, b);
            if m != 0.0 {
                let mut w = word.clone();
                w.drain(i..i + 2);
                normal_order(&mut w, 2.0 * m * coeff, out);
            }
            word.swap(i, i + 1);
            normal_order(word, -coeff, out);
            return;
        }
    }
    out.push((word.clone(), coeff));
}

fn vec_bits_to_list(bits: u8) -> Vec<u8> {
    (0u8..5).filter(|v| bits & (1 << v) != 0).collect()
}

fn blade_index_of_bits(bits: u8) -> usize {
    BLADE_VECTORS.iter().position(|&b| b == bits).unwrap()
}

/// Expand a canonical blade into words: blades containing both null vectors
/// differ from the plain ascending word by a contraction correction,
///   word(W) = blade(W) + (−1)^{|W|−1} blade(W \ {e0, e∞}),
/// hence  blade(W) = word(W) − (−1)^{|W|−1} word(W \ {e0, e∞}).
fn blade_to_words(index: usize) -> Vec<(Vec<u8>, f64)> {
    let bits = BLADE_VECTORS[index];
    let word = vec_bits_to_list(bits);
    let mut terms = vec![(word.clone(), 1.0)];
    if bits & 0b10001 == 0b10001 {
        let k = word.len();
        let inner = vec_bits_to_list(bits & !0b10001u8);
        let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
        terms.push((inner, -sign));
    }
    terms
}

/// Collect a strictly ascending word into canonical-blade coefficients.
fn word_to_blades(word: &[u8], coeff: f64, acc: &mut [f64; NUM_BLADES]) {
    let bits = word.iter().fold(0u8, |m, &v| m | 1 << v);
    acc[blade_index_of_bits(bits)] += coeff;
    if bits & 0b10001 == 0b10001 {
        let k = word.len();
        let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
        acc[blade_index_of_bits(bits & !0b10001u8)] += coeff * sign;
    }
}

struct Tables {
    /// Geometric-product expansion of each blade pair: list of (blade, sign).
    gp: Vec<Vec<Vec<(usize, f64)>>>,
    /// Outer product: grade-(r+s) part of `gp`.
    op: Vec<Vec<Vec<(usize, f64)>>>,
    /// Inner product: grade-|r−s| part of `gp`.
    ip: Vec<Vec<Vec<(usize, f64)>>>,
    /// Static result masks per blade pair and product.
    gp_mask: [[u32; NUM_BLADES]; NUM_BLADES],
    op_mask: [[u32; NUM_BLADES]; NUM_BLADES],
    ip_mask: [[u32; NUM_BLADES]; NUM_BLADES],
}

static TABLES: Lazy<Tables> = Lazy::new(|| {
    let mut gp = vec![vec![Vec::new(); NUM_BLADES]; NUM_BLADES];
    let mut op = vec![vec![Vec::new(); NUM_BLADES]; NUM_BLADES];
    let mut ip = vec![vec![Vec::new(); NUM_BLADES]; NUM_BLADES];
    let mut gp_mask = [[0u32; NUM_BLADES]; NUM_BLADES];
    let mut op_mask = [[0u32; NUM_BLADES]; NUM_BLADES];
    let mut ip_mask = [[0u32; NUM_BLADES]; NUM_BLADES];

    for i in 0..NUM_BLADES {
        for j in 0..NUM_BLADES {
            let mut acc = [0.0f64; NUM_BLADES];
            for (wa, ca) in blade_to_words(i) {
                for (wb, cb) in blade_to_words(j) {
                    let mut word: Vec<u8> = wa.iter().chain(wb.iter()).copied().collect();
                    let mut normal = Vec::new();
                    normal_order(&mut word, ca * cb, &mut normal);
                    for (w, c) in normal {
                        word_to_blades(&w, c, &mut acc);
                    }
                }
            }
            let (gi, gj) = (grade(i), grade(j));
            for (k, &c) in acc.iter().enumerate() {
                if c != 0.0 {
                    gp[i][j].push((k, c));
                    gp_mask[i][j] |= 1 << k;
                    if grade(k) == gi + gj {
                        op[i][j].push((k, c));
                        op_mask[i][j] |= 1 << k;
                    }
                    if grade(k) == gi.abs_diff(gj) {
                        ip[i][j].push((k, c));
                        ip_mask[i][j] |= 1 << k;
                    }
                }
            }
        }
    }

    Tables { gp, op, ip, gp_mask, op_mask, ip_mask }
});

/// Statically predicted blade mask of the geometric product of two masks.
pub fn gp_mask(a: u32, b: u32) -> u32 {
    mask_product(a, b, &TABLES.gp_mask)
}

/// Statically predicted blade mask of the outer product of two masks.
pub fn op_mask(a: u32, b: u32) -> u32 {
    mask_product(a, b, &TABLES.op_mask)
}

/// Statically predicted blade mask of the inner product of two masks.
pub fn ip_mask(a: u32, b: u32) -> u32 {
    mask_product(a, b, &TABLES.ip_mask)
}

fn mask_product(a: u32, b: u32, table: &[[u32; NUM_BLADES]; NUM_BLADES]) -> u32 {
    let mut out = 0;
    for i in BitIter(a) {
        for j in BitIter(b) {
            out |= table[i][j];
        }
    }
    out
}

/// Iterator over the set bit positions of a mask.
#[derive(Clone, Copy)]
pub struct BitIter(pub u32);

impl Iterator for BitIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            let i = self.0.trailing_zeros() as usize;
            self.0 &= self.0 - 1;
            Some(i)
        }
    }
}

// ---------------------------------------------------------------------------
// Multivector
// ---------------------------------------------------------------------------

/// A sparse multivector of G(4,1): a blade mask plus dense coefficient
/// storage.  Blades outside the mask are semantically zero and are never
/// touched by arithmetic.
#[derive(Clone, Copy)]
pub struct Multivector {
    mask: u32,
    c: [f64; NUM_BLADES],
}

impl Multivector {
    pub const ZERO: Multivector = Multivector { mask: 0, c: [0.0; NUM_BLADES] };

    /// The zero multivector carrying a declared blade mask (all coefficients
    /// zero but the static type information retained).
    pub fn zero_with_mask(mask: u32) -> Multivector {
        Multivector { mask, c: [0.0; NUM_BLADES] }
    }

    pub fn scalar(x: f64) -> Multivector {
        let mut m = Multivector::zero_with_mask(mask::SCALAR);
        m.c[blade::S] = x;
        m
    }

    /// The basis blade with the given canonical index.
    pub fn basis(index: usize) -> Multivector {
        let mut m = Multivector::zero_with_mask(1 << index);
        m.c[index] = 1.0;
        m
    }

    /// A Euclidean vector x·e1 + y·e2 + z·e3.
    pub fn euclidean(v: Vector3<f64>) -> Multivector {
        let mut m = Multivector::zero_with_mask(mask::EUCLIDEAN);
        m.c[blade::E1] = v.x;
        m.c[blade::E2] = v.y;
        m.c[blade::E3] = v.z;
        m
    }

    pub fn from_coeffs(pairs: &[(usize, f64)]) -> Multivector {
        let mut m = Multivector::ZERO;
        for &(i, c) in pairs {
            m.mask |= 1 << i;
            m.c[i] = c;
        }
        m
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    /// Coefficient of a blade (zero when outside the mask).
    pub fn coeff(&self, index: usize) -> f64 {
        if self.mask & (1 << index) != 0 {
            self.c[index]
        } else {
            0.0
        }
    }

    pub fn set_coeff(&mut self, index: usize, value: f64) {
        self.mask |= 1 << index;
        self.c[index] = value;
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeff(blade::S)
    }

    /// Restrict the static mask (drops blades outside `mask` entirely).
    pub fn restricted(&self, mask: u32) -> Multivector {
        let mut out = Multivector::zero_with_mask(mask);
        for i in BitIter(self.mask & mask) {
            out.c[i] = self.c[i];
        }
        out
    }

    /// Largest absolute coefficient outside the given mask — the runtime
    /// check behind the sparsity contract.
    pub fn residual_outside(&self, mask: u32) -> f64 {
        BitIter(self.mask & !mask).map(|i| self.c[i].abs()).fold(0.0, f64::max)
    }

    fn product(&self, rhs: &Multivector, which: Which) -> Multivector {
        let t = &*TABLES;
        let (table, masks) = match which {
            Which::Geometric => (&t.gp, &t.gp_mask),
            Which::Outer => (&t.op, &t.op_mask),
            Which::Inner => (&t.ip, &t.ip_mask),
        };
        let mut out = Multivector::ZERO;
        for i in BitIter(self.mask) {
            let a = self.c[i];
            for j in BitIter(rhs.mask) {
                out.mask |= masks[i][j];
                let f = a * rhs.c[j];
                if f != 0.0 {
                    for &(k, s) in &table[i][j] {
                        out.c[k] += f * s;
                    }
                }
            }
        }
        out
    }

    /// Geometric product a ⊗ b.
    pub fn geometric(&self, rhs: &Multivector) -> Multivector {
        self.product(rhs, Which::Geometric)
    }

    /// Outer product a ∧ b.
    pub fn outer(&self, rhs: &Multivector) -> Multivector {
        self.product(rhs, Which::Outer)
    }

    /// Inner product a · b (grade-|r−s| part of the geometric product).
    pub fn inner(&self, rhs: &Multivector) -> Multivector {
        self.product(rhs, Which::Inner)
    }

    /// Commutator product ½(a⊗b − b⊗a).
    pub fn commutator(&self, rhs: &Multivector) -> Multivector {
        (self.geometric(rhs) - rhs.geometric(self)) * 0.5
    }

    /// Grade-wise reversion: grade-k components scale by (−1)^{k(k−1)/2}.
    pub fn reverse(&self) -> Multivector {
        let mut out = *self;
        for i in BitIter(self.mask) {
            let k = grade(i);
            if (k * (k.wrapping_sub(1)) / 2) % 2 == 1 {
                out.c[i] = -out.c[i];
            }
        }
        out
    }

    /// Duality: multiplication by the pseudoscalar, I ⊗ a with I = e0123∞.
    pub fn dual(&self) -> Multivector {
        Multivector::basis(blade::E0123I).geometric(self)
    }

    /// Keep exactly the grade-k blades.
    pub fn grade_project(&self, k: usize) -> Result<Multivector> {
        if k > 5 {
            return Err(Error::Domain(format!("grade {k} out of range 0..=5")));
        }
        Ok(self.restricted(self.mask & GRADE_MASKS[k]))
    }

    /// ⟨ã ⊗ b⟩₀ — the scalar pairing used for all torque/energy reductions.
    /// For two grade-1 or two grade-2 multivectors this is the (positive-
    /// definite on Euclidean blades) invariant pairing a·b.
    pub fn scalar_pair(&self, rhs: &Multivector) -> f64 {
        let mut acc = 0.0;
        let t = &*TABLES;
        for i in BitIter(self.mask) {
            let k = grade(i);
            let sign = if (k * (k.wrapping_sub(1)) / 2) % 2 == 1 { -1.0 } else { 1.0 };
            for j in BitIter(rhs.mask) {
                for &(kk, s) in &t.gp[i][j] {
                    if kk == blade::S {
                        acc += sign * s * self.c[i] * rhs.c[j];
                    }
                }
            }
        }
        acc
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        BitIter(self.mask).map(|i| self.c[i] * self.c[i]).sum::<f64>().sqrt()
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        BitIter(self.mask).map(|i| self.c[i].abs()).fold(0.0, f64::max)
    }

    /// Drop mask bits whose coefficient is exactly zero (used by tests and
    /// display; arithmetic never needs it).
    pub fn compacted(&self) -> Multivector {
        let mut out = Multivector::ZERO;
        for i in BitIter(self.mask) {
            if self.c[i] != 0.0 {
                out.mask |= 1 << i;
                out.c[i] = self.c[i];
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
enum Which {
    Geometric,
    Outer,
    Inner,
}

impl std::ops::Add for Multivector {
    type Output = Multivector;
    fn add(self, rhs: Multivector) -> Multivector {
        let mut out = Multivector::zero_with_mask(self.mask | rhs.mask);
        for i in BitIter(out.mask) {
            out.c[i] = self.coeff(i) + rhs.coeff(i);
        }
        out
    }
}

impl std::ops::Sub for Multivector {
    type Output = Multivector;
    fn sub(self, rhs: Multivector) -> Multivector {
        let mut out = Multivector::zero_with_mask(self.mask | rhs.mask);
        for i in BitIter(out.mask) {
            out.c[i] = self.coeff(i) - rhs.coeff(i);
        }
        out
    }
}

impl std::ops::Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self * -1.0
    }
}

impl std::ops::Mul<f64> for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: f64) -> Multivector {
        let mut out = self;
        for i in BitIter(self.mask) {
            out.c[i] *= rhs;
        }
        out
    }
}

impl std::ops::Mul for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: Multivector) -> Multivector {
        self.geometric(&rhs)
    }
}

impl PartialEq for Multivector {
    fn eq(&self, other: &Self) -> bool {
        (0..NUM_BLADES).all(|i| self.coeff(i) == other.coeff(i))
    }
}

impl std::fmt::Debug for Multivector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for i in BitIter(self.mask) {
            if self.c[i] != 0.0 {
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "{}*{}", self.c[i], BLADE_NAMES[i])?;
                first = false;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Conformal embedding
// ---------------------------------------------------------------------------

/// The conformal embedding P = x + ½‖x‖² e∞ + e0.
pub fn embed_point(x: Vector3<f64>) -> Multivector {
    let mut p = Multivector::zero_with_mask(mask::POINT);
    p.c[blade::E1] = x.x;
    p.c[blade::E2] = x.y;
    p.c[blade::E3] = x.z;
    p.c[blade::EI] = 0.5 * x.norm_squared();
    p.c[blade::E0] = 1.0;
    p
}

/// Inverse of the embedding: normalizes by −(e∞ · P) and reads the Euclidean
/// coefficients.  Scale-invariant; errors on points at infinity.
pub fn extract_point(p: &Multivector) -> Result<Vector3<f64>> {
    // e∞ · P = −(e0-coefficient of P).
    let w = p.coeff(blade::E0);
    if w.abs() < 1e-300 {
        return Err(Error::Domain("point at infinity: zero e0 coefficient".into()));
    }
    Ok(Vector3::new(p.coeff(blade::E1), p.coeff(blade::E2), p.coeff(blade::E3)) / w)
}
