//! Named initial data.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounded::{MacGrid, MacVelocity};
use crate::fields::{Fourier, Grid, VectorField};
use crate::scalar::{Scalar, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `u = 0`, `d ≡ e₁`.
    Rest,
    /// Random divergence-free band-limited `u` and a smoothly varying director of nearly unit length.
    Smooth,
    /// Taylor-Green vortex with `d ≡ e₁`.
    TaylorGreen,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "rest" => Some(Preset::Rest),
            "smooth" => Some(Preset::Smooth),
            "taylor_green" => Some(Preset::TaylorGreen),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Rest => "rest",
            Preset::Smooth => "smooth",
            Preset::TaylorGreen => "taylor_green",
        }
    }

    /// `(u₀, d₀)`; `amplitude` scales the velocity and the director tilt.
    pub fn build<T: Scalar>(&self, grid: &Grid, amplitude: f64, seed: u64) -> (VectorField<T>, VectorField<T>) {
        match self {
            Preset::Rest => (VectorField::zeros(grid), VectorField::constant(grid, [T::one(), T::zero(), T::zero()])),
            Preset::TaylorGreen => {
                let s = [std::f64::consts::TAU / grid.length(0), std::f64::consts::TAU / grid.length(1)];
                let u = VectorField::from_fn(grid, |x| {
                    let (a, b) = (s[0] * x[0], s[1] * x[1]);
                    [amplitude * a.sin() * b.cos(), -amplitude * s[0] / s[1] * a.cos() * b.sin(), 0.0]
                });
                (u, VectorField::constant(grid, [T::one(), T::zero(), T::zero()]))
            }
            Preset::Smooth => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let fourier = Fourier::<T>::new(grid);
                let mut uh = fourier.forward(&random_band_limited::<T>(grid, 4, &mut rng));
                fourier.leray(&mut uh);
                let u = normalized(fourier.inverse(&uh), amplitude);
                let angles = normalized(random_band_limited::<T>(grid, 3, &mut rng), 1.0);
                let tilt = T::of(std::f64::consts::FRAC_PI_4 * amplitude.min(2.0));
                let twist = T::PI();
                let d = angles.map_points(|a| {
                    let (th, ph) = (tilt * a[0], twist * a[1]);
                    [th.cos(), th.sin() * ph.cos(), th.sin() * ph.sin()]
                });
                (u, d)
            }
        }
    }
}

/// Seeded smooth scalar: a few cosine modes with wavenumbers up to 3 and
/// random phases, scaled to maximum magnitude about 1.
struct SmoothScalar {
    modes: Vec<(f64, f64, f64, f64)>,
}

impl SmoothScalar {
    fn new(rng: &mut impl Rng, s: [f64; 2]) -> Self {
        let mut modes = Vec::new();
        for kx in 0..=3i32 {
            for ky in -3..=3i32 {
                if (kx == 0 && ky <= 0) || kx * kx + ky * ky > 9 {
                    continue;
                }
                let w = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
                modes.push((s[0] * kx as f64, s[1] * ky as f64, rng.gen_range(-1.0..1.0) * w, rng.gen_range(0.0..std::f64::consts::TAU)));
            }
        }
        let total: f64 = modes.iter().map(|m| m.2.abs()).sum();
        for m in modes.iter_mut() {
            m.2 /= total;
        }
        SmoothScalar { modes }
    }

    fn eval(&self, x: [f64; 2]) -> f64 {
        self.modes.iter().map(|(a, b, c, ph)| c * (a * x[0] + b * x[1] + ph).cos()).sum()
    }
}

/// Initial data for the staggered backend. On walled grids the stream
/// function is multiplied by a bump vanishing to second order on the walls.
pub fn mac_preset<T: Scalar>(preset: Preset, grid: &MacGrid, amplitude: f64, seed: u64) -> (MacVelocity<T>, Vec<Vec3<T>>) {
    let (lx, ly) = (grid.lx(), grid.ly());
    let periodic = grid.is_periodic();
    let s = if periodic { [std::f64::consts::TAU / lx, std::f64::consts::TAU / ly] } else { [std::f64::consts::PI / lx, std::f64::consts::PI / ly] };
    let aligned = vec![[T::one(), T::zero(), T::zero()]; grid.num_vertices()];
    match preset {
        Preset::Rest => (MacVelocity::zeros(grid), aligned),
        Preset::TaylorGreen => {
            let u = MacVelocity::from_stream_function(grid, |x| amplitude / s[1] * (s[0] * x[0]).sin() * (s[1] * x[1]).sin());
            (u, aligned)
        }
        Preset::Smooth => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tau = [std::f64::consts::TAU / lx, std::f64::consts::TAU / ly];
            let psi = SmoothScalar::new(&mut rng, tau);
            let bump = |x: [f64; 2]| if periodic { 1.0 } else { ((s[0] * x[0]).sin() * (s[1] * x[1]).sin()).powi(2) };
            let mut u = MacVelocity::<T>::from_stream_function(grid, |x| bump(x) * psi.eval(x));
            let m = u.max_abs();
            if m > T::zero() {
                let k = T::of(amplitude) / m;
                u.ux.iter_mut().chain(u.uy.iter_mut()).for_each(|v| *v = *v * k);
            }
            let (a, b) = (SmoothScalar::new(&mut rng, tau), SmoothScalar::new(&mut rng, tau));
            let tilt = std::f64::consts::FRAC_PI_4 * amplitude.min(2.0);
            let mut d = aligned;
            for i in 0..grid.vx() {
                for j in 0..grid.vy() {
                    let x = grid.vertex_coords(i, j);
                    let (th, ph) = (tilt * a.eval(x), std::f64::consts::PI * b.eval(x));
                    d[grid.vertex(i, j)] = [T::of(th.cos()), T::of(th.sin() * ph.cos()), T::of(th.sin() * ph.sin())];
                }
            }
            (u, d)
        }
    }
}

/// Real field whose Fourier modes all satisfy `|m|_∞ ≤ kmax`, with random
/// coefficients decaying like `1/(1+|m|²)`.
pub fn random_band_limited<T: Scalar>(grid: &Grid, kmax: usize, rng: &mut impl Rng) -> VectorField<T> {
    let fourier = Fourier::<T>::new(grid);
    let mut s = crate::fields::Spectrum::zeros(grid);
    for c in 0..3 {
        for idx in 0..grid.num_points() {
            let l = fourier.mode_linf(idx);
            if l == 0 || l > kmax {
                continue;
            }
            let w = 1.0 / (1.0 + fourier.k_squared(idx).to_f64_lossy());
            let re = rng.gen_range(-1.0..1.0) * w;
            let im = rng.gen_range(-1.0..1.0) * w;
            s.comps[c][idx] = Complex::new(T::of(re), T::of(im));
        }
    }
    let [a, b, c] = s.comps;
    VectorField {
        grid: grid.clone(),
        comps: [fourier.inverse_real(a), fourier.inverse_real(b), fourier.inverse_real(c)],
    }
}

fn normalized<T: Scalar>(v: VectorField<T>, target: f64) -> VectorField<T> {
    let m = v.max_abs();
    if m == T::zero() {
        v
    } else {
        v.scaled(T::of(target) / m)
    }
}
