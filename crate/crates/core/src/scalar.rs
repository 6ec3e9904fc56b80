//! Floating-point abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the solvers are generic over: `f32` or `f64`.
///
/// Anything that has to go through the FFT needs `rustfft::FftNum`, which both
/// primitive floats satisfy.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Sum
    + Default
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
pub fn dot<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &Vec3<T>) -> T {
    dot(a, a)
}

/// `A v`
#[inline]
pub fn mat_vec<T: Scalar>(a: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [dot(&a[0], v), dot(&a[1], v), dot(&a[2], v)]
}

/// `Aᵀ v`
#[inline]
pub fn mat_t_vec<T: Scalar>(a: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    let col = |j: usize| [a[0][j], a[1][j], a[2][j]];
    [dot(&col(0), v), dot(&col(1), v), dot(&col(2), v)]
}

#[inline]
pub fn transpose<T: Scalar>(a: &Mat3<T>) -> Mat3<T> {
    let mut t = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Full contraction `A : B = Σ A_ij B_ij`.
#[inline]
pub fn contract<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> T {
    let mut s = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            s = s + a[i][j] * b[i][j];
        }
    }
    s
}

/// Kronecker (outer) product, `(a ⊗ b)_ij = a_i b_j`.
#[inline]
pub fn kron<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Mat3<T> {
    let mut m = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i] * b[j];
        }
    }
    m
}
