//! Penalty potential `W(d)` for the unit-length constraint, its gradient, and
//! the convex + Lipschitz splitting `W = W₁ + W₂` used by the time stepper.
//!
//! Every supported potential is radial. For the double-well family the
//! concave part is always `W₂(d) = 1 - 2|d|²`, whose gradient `-4d` is
//! globally Lipschitz; `W₁ = W - W₂` is then `|d|⁴` (or its quadratic
//! continuation outside the truncation radius), which is convex.

use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::fields::VectorField;
use crate::scalar::{norm_sq, Scalar, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("potential.r0 must be > 1, got {0}")]
    Radius(f64),
    #[error("potential.coeffs must be non-empty")]
    EmptyPolynomial,
    #[error("potential.coeffs: coefficient of |d|^{power} is negative ({value}); the concave part must have a Lipschitz gradient")]
    NegativeHighOrder { power: usize, value: f64 },
    #[error("potential.coeffs: W takes the negative value {value} at |d| = {radius}")]
    Negative { radius: f64, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `(|d|² - 1)²` everywhere.
    DoubleWell,
    /// `(|d|² - 1)²` inside `|d| ≤ r0`, continued by its radial second-order
    /// Taylor polynomial outside, so that `W ∈ C²` and `∇W` is globally Lipschitz.
    TruncatedDoubleWell { r0: f64 },
    Zero,
    /// `Σ_j c_j |d|^{2j}`.
    Polynomial(Vec<f64>),
}

impl Default for PotentialKind {
    fn default() -> Self {
        PotentialKind::TruncatedDoubleWell { r0: 2.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Potential<T> {
    kind: PotentialKind,
    coeffs: Vec<T>,
    r0: T,
    lipschitz_w2: T,
}

impl<T: Scalar> Potential<T> {
    pub fn new(kind: PotentialKind) -> Result<Self, PotentialError> {
        let mut coeffs = match &kind {
            PotentialKind::DoubleWell | PotentialKind::TruncatedDoubleWell { .. } => vec![1.0, -2.0, 1.0],
            PotentialKind::Zero => vec![0.0],
            PotentialKind::Polynomial(c) => {
                if c.is_empty() {
                    return Err(PotentialError::EmptyPolynomial);
                }
                for (power, &value) in c.iter().enumerate().skip(2) {
                    if value < 0.0 {
                        return Err(PotentialError::NegativeHighOrder { power: 2 * power, value });
                    }
                }
                c.clone()
            }
        };
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let r0 = match kind {
            PotentialKind::TruncatedDoubleWell { r0 } => {
                if !(r0.is_finite() && r0 > 1.0) {
                    return Err(PotentialError::Radius(r0));
                }
                r0
            }
            _ => f64::INFINITY,
        };
        let mut pot = Potential {
            kind,
            coeffs: coeffs.iter().map(|&c| T::of(c)).collect(),
            r0: T::of(r0),
            lipschitz_w2: T::zero(),
        };
        if let PotentialKind::Polynomial(_) = pot.kind {
            pot.check_nonnegative()?;
        }
        pot.lipschitz_w2 = pot.sample_w2_hessian_bound();
        Ok(pot)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == T::zero())
    }

    /// Cached Lipschitz constant of `∇W₂`.
    pub fn lipschitz_w2(&self) -> T {
        self.lipschitz_w2
    }

    fn poly(&self, s: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * s + c)
    }

    fn poly_prime(&self, s: T) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(T::zero(), |acc, (j, &c)| acc * s + c * T::of_usize(j))
    }

    fn poly_second(&self, s: T) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(T::zero(), |acc, (j, &c)| acc * s + c * T::of_usize(j * (j - 1)))
    }

    /// Radial profile `w(ρ)` and its first two derivatives, for `ρ = |d|`.
    fn profile_at(&self, rho: T) -> (T, T, T) {
        let two = T::of(2.0);
        let four = T::of(4.0);
        let s = rho * rho;
        (
            self.poly(s),
            two * rho * self.poly_prime(s),
            two * self.poly_prime(s) + four * s * self.poly_second(s),
        )
    }

    fn outside(&self, rho: T) -> bool {
        rho > self.r0
    }

    pub fn eval_w(&self, d: &Vec3<T>) -> T {
        let s = norm_sq(d);
        let rho = s.sqrt();
        if self.outside(rho) {
            let (w0, w1, w2) = self.profile_at(self.r0);
            let x = rho - self.r0;
            w0 + w1 * x + T::of(0.5) * w2 * x * x
        } else {
            self.poly(s)
        }
    }

    pub fn eval_grad_w(&self, d: &Vec3<T>) -> Vec3<T> {
        let s = norm_sq(d);
        let rho = s.sqrt();
        let factor = if self.outside(rho) {
            let (_, w1, w2) = self.profile_at(self.r0);
            (w1 + w2 * (rho - self.r0)) / rho
        } else {
            T::of(2.0) * self.poly_prime(s)
        };
        [factor * d[0], factor * d[1], factor * d[2]]
    }

    /// Gradient of the concave part, `∇W₂`; affine in `d` for every supported kind.
    fn grad_w2_factor(&self) -> T {
        let c1 = self.coeffs.get(1).copied().unwrap_or(T::zero());
        T::of(2.0) * c1.min(T::zero())
    }

    /// `(∇W₁(d), ∇W₂(d))` with `∇W₁ + ∇W₂ = ∇W`.
    pub fn split_grad_w(&self, d: &Vec3<T>) -> (Vec3<T>, Vec3<T>) {
        let g = self.eval_grad_w(d);
        let f = self.grad_w2_factor();
        let g2 = [f * d[0], f * d[1], f * d[2]];
        ([g[0] - g2[0], g[1] - g2[1], g[2] - g2[2]], g2)
    }

    pub fn grad_w1(&self, d: &Vec3<T>) -> Vec3<T> {
        self.split_grad_w(d).0
    }

    pub fn grad_w2(&self, d: &Vec3<T>) -> Vec3<T> {
        self.split_grad_w(d).1
    }

    /// Hessian of `W₂` at `d`, `2φ₂'(s) I + 4φ₂''(s) d dᵀ` with `φ₂` the
    /// concave polynomial part in `s = |d|²`.
    fn w2_hessian(&self, _d: &Vec3<T>) -> [[T; 3]; 3] {
        let f = self.grad_w2_factor();
        let mut h = [[T::zero(); 3]; 3];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = f;
        }
        h
    }

    /// Upper bound on `‖Hess W₂‖₂` from 2000 samples in `|d| ≤ 10` (row-sum norm).
    fn sample_w2_hessian_bound(&self) -> T {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let mut best = T::zero();
        for _ in 0..2000 {
            let d: Vec3<T> = [
                T::of(rng.gen_range(-10.0..10.0)),
                T::of(rng.gen_range(-10.0..10.0)),
                T::of(rng.gen_range(-10.0..10.0)),
            ];
            let h = self.w2_hessian(&d);
            let bound = h
                .iter()
                .map(|r| r[0].abs() + r[1].abs() + r[2].abs())
                .fold(T::zero(), T::max);
            best = best.max(bound);
        }
        best
    }

    /// Pointwise `∇W(d)`.
    pub fn grad_field(&self, d: &VectorField<T>) -> VectorField<T> {
        d.map_points(|v| self.eval_grad_w(&v))
    }

    /// Pointwise `∇W₁(d)`.
    pub fn grad_w1_field(&self, d: &VectorField<T>) -> VectorField<T> {
        d.map_points(|v| self.grad_w1(&v))
    }

    /// Pointwise `∇W₂(d)`.
    pub fn grad_w2_field(&self, d: &VectorField<T>) -> VectorField<T> {
        d.map_points(|v| self.grad_w2(&v))
    }

    /// Rectangle-rule `∫ W(d)`.
    pub fn integral(&self, d: &VectorField<T>) -> T {
        let s: T = (0..d.grid.num_points()).map(|i| self.eval_w(&d.at(i))).sum();
        s * T::of(d.grid.cell_volume())
    }

    fn check_nonnegative(&self) -> Result<(), PotentialError> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xa11);
        for _ in 0..10_000 {
            let rho = rng.gen_range(0.0..10.0);
            let w = self.eval_w(&[T::of(rho), T::zero(), T::zero()]);
            if w < T::zero() {
                return Err(PotentialError::Negative { radius: rho, value: w.to_f64_lossy() });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, r: f64) -> Vec3<f64> {
        [rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r)]
    }

    fn kinds() -> Vec<PotentialKind> {
        vec![
            PotentialKind::DoubleWell,
            PotentialKind::TruncatedDoubleWell { r0: 2.0 },
            PotentialKind::TruncatedDoubleWell { r0: 1.3 },
            PotentialKind::Zero,
            PotentialKind::Polynomial(vec![0.5, -1.0, 0.5, 0.1]),
        ]
    }

    #[test]
    fn double_well_values() {
        let w = Potential::<f64>::new(PotentialKind::DoubleWell).unwrap();
        assert_eq!(w.eval_w(&[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(w.eval_w(&[0.0, 0.0, 0.0]), 1.0);
        assert_eq!(w.eval_w(&[2.0, 0.0, 0.0]), 9.0);
        assert_eq!(w.eval_grad_w(&[0.0; 3]), [0.0; 3]);
        assert_eq!(w.eval_grad_w(&[2.0, 0.0, 0.0]), [24.0, 0.0, 0.0]);
    }

    #[test]
    fn truncation_changes_only_outside() {
        let w = Potential::<f64>::new(PotentialKind::TruncatedDoubleWell { r0: 2.0 }).unwrap();
        assert_eq!(w.eval_w(&[1.5, 0.0, 0.0]), (1.5f64 * 1.5 - 1.0).powi(2));
        // Taylor continuation at R0 = 2: w = 9, w' = 24, w'' = 44.
        let rho = 3.0;
        assert!((w.eval_w(&[rho, 0.0, 0.0]) - (9.0 + 24.0 + 22.0)).abs() < 1e-12);
    }

    #[test]
    fn nonnegative_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in kinds() {
            let w = Potential::<f64>::new(kind.clone()).unwrap();
            for _ in 0..10_000 {
                let d = random_point(&mut rng, 10.0 / 3f64.sqrt());
                assert!(w.eval_w(&d) >= 0.0, "{kind:?} at {d:?}");
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-4;
        for kind in kinds() {
            let w = Potential::<f64>::new(kind.clone()).unwrap();
            for _ in 0..100 {
                let d = random_point(&mut rng, 2.5);
                let g = w.eval_grad_w(&d);
                for a in 0..3 {
                    let mut p = d;
                    let mut m = d;
                    p[a] += h;
                    m[a] -= h;
                    let fd = (w.eval_w(&p) - w.eval_w(&m)) / (2.0 * h);
                    assert!((fd - g[a]).abs() < 1e-6 * (1.0 + g[a].abs()), "{kind:?} {d:?} axis {a}");
                }
            }
        }
    }

    #[test]
    fn c2_across_truncation_sphere() {
        let r0 = 2.0;
        let w = Potential::<f64>::new(PotentialKind::TruncatedDoubleWell { r0 }).unwrap();
        let dir = [0.48, -0.6, 0.64];
        let at = |rho: f64| [rho * dir[0], rho * dir[1], rho * dir[2]];
        let eps = 1e-7;
        let (inside, outside) = (at(r0 - eps), at(r0 + eps));
        assert!((w.eval_w(&inside) - w.eval_w(&outside)).abs() < 1e-5);
        let (gi, go) = (w.eval_grad_w(&inside), w.eval_grad_w(&outside));
        for a in 0..3 {
            assert!((gi[a] - go[a]).abs() < 1e-5);
        }
        // Radial second derivative by finite differences on each side.
        let h = 1e-4;
        let radial = |rho: f64| w.eval_w(&at(rho));
        let second_in = (radial(r0 - h) - 2.0 * radial(r0 - 2.0 * h) + radial(r0 - 3.0 * h)) / (h * h);
        let second_out = (radial(r0 + 3.0 * h) - 2.0 * radial(r0 + 2.0 * h) + radial(r0 + h)) / (h * h);
        assert!((second_in - second_out).abs() < 0.05, "{second_in} vs {second_out}");
    }

    #[test]
    fn split_sums_to_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in kinds() {
            let w = Potential::<f64>::new(kind).unwrap();
            for _ in 0..100 {
                let d = random_point(&mut rng, 3.0);
                let (g1, g2) = w.split_grad_w(&d);
                let g = w.eval_grad_w(&d);
                for a in 0..3 {
                    assert!((g1[a] + g2[a] - g[a]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn convex_part_has_monotone_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in kinds() {
            let w = Potential::<f64>::new(kind.clone()).unwrap();
            for _ in 0..100 {
                let a = random_point(&mut rng, 4.0);
                let b = random_point(&mut rng, 4.0);
                let (ga, gb) = (w.grad_w1(&a), w.grad_w1(&b));
                let m: f64 = (0..3).map(|i| (ga[i] - gb[i]) * (a[i] - b[i])).sum();
                assert!(m >= -1e-12, "{kind:?}: {m}");
            }
        }
    }

    #[test]
    fn concave_part_is_lipschitz_with_cached_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Hessian of 1 - 2|d|² is -4 I, so the sampled bound must be 4.
        let dw = Potential::<f64>::new(PotentialKind::default()).unwrap();
        assert_eq!(dw.lipschitz_w2(), 4.0);
        for kind in kinds() {
            let w = Potential::<f64>::new(kind).unwrap();
            let l = w.lipschitz_w2();
            for _ in 0..100 {
                let a = random_point(&mut rng, 10.0);
                let b = random_point(&mut rng, 10.0);
                let (ga, gb) = (w.grad_w2(&a), w.grad_w2(&b));
                let lhs: f64 = (0..3).map(|i| (ga[i] - gb[i]).powi(2)).sum::<f64>().sqrt();
                let rhs: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
                assert!(lhs <= l * rhs + 1e-12);
            }
        }
    }

    #[test]
    fn truncated_gradient_is_globally_lipschitz() {
        // Outside R0 the Hessian is bounded by max(w''(R0), w'(R0)/R0) = max(44, 12).
        let w = Potential::<f64>::new(PotentialKind::TruncatedDoubleWell { r0: 2.0 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let a = random_point(&mut rng, 50.0);
            let b = random_point(&mut rng, 50.0);
            let (ga, gb) = (w.eval_grad_w(&a), w.eval_grad_w(&b));
            let lhs: f64 = (0..3).map(|i| (ga[i] - gb[i]).powi(2)).sum::<f64>().sqrt();
            let rhs: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
            assert!(lhs <= 44.0 * rhs + 1e-9);
        }
        // And W grows at most quadratically.
        assert!(w.eval_w(&[100.0, 0.0, 0.0]) <= 9.0 + 24.0 * 98.0 + 22.0 * 98.0 * 98.0 + 1e-6);
    }

    #[test]
    fn invalid_parameters() {
        assert_eq!(
            Potential::<f64>::new(PotentialKind::TruncatedDoubleWell { r0: 0.9 }).unwrap_err(),
            PotentialError::Radius(0.9)
        );
        assert!(matches!(
            Potential::<f64>::new(PotentialKind::Polynomial(vec![1.0, 0.0, -1.0])),
            Err(PotentialError::NegativeHighOrder { power: 4, .. })
        ));
        assert!(matches!(
            Potential::<f64>::new(PotentialKind::Polynomial(vec![-1.0, 0.0, 1.0])),
            Err(PotentialError::Negative { .. })
        ));
    }

    #[test]
    fn zero_potential_is_zero() {
        let w = Potential::<f64>::new(PotentialKind::Zero).unwrap();
        assert!(w.is_zero());
        assert_eq!(w.eval_w(&[3.0, 1.0, 0.0]), 0.0);
        assert_eq!(w.eval_grad_w(&[3.0, 1.0, 0.0]), [0.0; 3]);
        assert_eq!(w.lipschitz_w2(), 0.0);
    }
}
