//! Staggered rectangle: pressure at cell centres, `u_x` on the faces `x = i h_x`,
//! `u_y` on the faces `y = j h_y`, and the director on the vertices.
//!
//! Walls hold the normal velocity at zero by construction; the tangential
//! component is reflected with a sign change across the wall so that it
//! vanishes there. The director is reflected without sign change, which is the
//! natural boundary condition of the discrete Dirichlet energy.

use crate::error::SolverError;
use crate::scalar::{Scalar, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct MacGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    periodic: bool,
}

/// Face velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct MacVelocity<T> {
    pub ux: Vec<T>,
    pub uy: Vec<T>,
}

impl<T: Scalar> MacVelocity<T> {
    pub fn zeros(grid: &MacGrid) -> Self {
        MacVelocity { ux: vec![T::zero(); grid.num_ux()], uy: vec![T::zero(); grid.num_uy()] }
    }

    /// Samples `f` at the face midpoints; wall faces are left at zero.
    pub fn from_fn(grid: &MacGrid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut u = Self::zeros(grid);
        for i in 0..grid.vx() {
            for j in 0..grid.ny {
                if grid.ux_free(i) {
                    u.ux[grid.ux_index(i, j)] = T::of(f(grid.ux_coords(i, j))[0]);
                }
            }
        }
        for i in 0..grid.nx {
            for j in 0..grid.vy() {
                if grid.uy_free(j) {
                    u.uy[grid.uy_index(i, j)] = T::of(f(grid.uy_coords(i, j))[1]);
                }
            }
        }
        u
    }

    /// Discretely divergence-free field `(∂_y ψ, −∂_x ψ)` from a stream
    /// function sampled at the vertices; `ψ` should vanish on walls.
    pub fn from_stream_function(grid: &MacGrid, psi: impl Fn([f64; 2]) -> f64) -> Self {
        let mut u = Self::zeros(grid);
        let at = |i: usize, j: usize| psi(grid.vertex_coords(i, j));
        for i in 0..grid.vx() {
            for j in 0..grid.ny {
                if grid.ux_free(i) {
                    let jp = grid.wrap_y(j + 1);
                    u.ux[grid.ux_index(i, j)] = T::of((at(i, jp) - at(i, j)) / grid.hy());
                }
            }
        }
        for i in 0..grid.nx {
            for j in 0..grid.vy() {
                if grid.uy_free(j) {
                    let ip = grid.wrap_x(i + 1);
                    u.uy[grid.uy_index(i, j)] = T::of(-(at(ip, j) - at(i, j)) / grid.hx());
                }
            }
        }
        u
    }

    pub fn axpy(&mut self, s: T, other: &Self) {
        for (a, b) in self.ux.iter_mut().zip(&other.ux) {
            *a = *a + s * *b;
        }
        for (a, b) in self.uy.iter_mut().zip(&other.uy) {
            *a = *a + s * *b;
        }
    }

    pub fn max_abs(&self) -> T {
        self.ux.iter().chain(&self.uy).fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.ux.iter().chain(&self.uy).all(|v| v.is_finite())
    }
}

/// Velocity gradient split by location: normal derivatives at cell centres,
/// shear derivatives at vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGradient<T> {
    /// `∂_x u_x` per cell.
    pub dxx: Vec<T>,
    /// `∂_y u_y` per cell.
    pub dyy: Vec<T>,
    /// `∂_y u_x` per vertex.
    pub dyx: Vec<T>,
    /// `∂_x u_y` per vertex.
    pub dxy: Vec<T>,
}

impl MacGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, periodic: bool) -> Result<Self, SolverError> {
        let mut errs = Vec::new();
        if nx < 4 || ny < 4 {
            errs.push(format!("MAC grid needs at least 4 cells per axis, got {nx} x {ny}"));
        }
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            errs.push(format!("MAC box lengths must be positive, got {lx} x {ly}"));
        }
        if errs.is_empty() {
            Ok(MacGrid { nx, ny, lx, ly, periodic })
        } else {
            Err(SolverError::Invalid(errs))
        }
    }

    pub fn square(n: usize, len: f64, periodic: bool) -> Result<Self, SolverError> {
        Self::new(n, n, len, len, periodic)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Vertices along x.
    pub fn vx(&self) -> usize {
        if self.periodic {
            self.nx
        } else {
            self.nx + 1
        }
    }

    /// Vertices along y.
    pub fn vy(&self) -> usize {
        if self.periodic {
            self.ny
        } else {
            self.ny + 1
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vx() * self.vy()
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_ux(&self) -> usize {
        self.vx() * self.ny
    }

    pub fn num_uy(&self) -> usize {
        self.nx * self.vy()
    }

    #[inline]
    pub fn vertex(&self, i: usize, j: usize) -> usize {
        i * self.vy() + j
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn ux_index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn uy_index(&self, i: usize, j: usize) -> usize {
        i * self.vy() + j
    }

    pub fn vertex_coords(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.hx(), j as f64 * self.hy()]
    }

    pub fn cell_coords(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy()]
    }

    pub fn ux_coords(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.hx(), (j as f64 + 0.5) * self.hy()]
    }

    pub fn uy_coords(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.hx(), j as f64 * self.hy()]
    }

    /// False for the wall faces `x = 0, L_x`.
    pub fn ux_free(&self, i: usize) -> bool {
        self.periodic || (i > 0 && i < self.nx)
    }

    pub fn uy_free(&self, j: usize) -> bool {
        self.periodic || (j > 0 && j < self.ny)
    }

    pub fn is_boundary_vertex(&self, i: usize, j: usize) -> bool {
        !self.periodic && (i == 0 || j == 0 || i == self.nx || j == self.ny)
    }

    /// Trapezoidal quadrature weight of a vertex.
    pub fn vertex_weight(&self, i: usize, j: usize) -> f64 {
        let mut w = self.cell_area();
        if !self.periodic {
            if i == 0 || i == self.nx {
                w *= 0.5;
            }
            if j == 0 || j == self.ny {
                w *= 0.5;
            }
        }
        w
    }

    /// Boundary vertices, counterclockwise from the origin (empty when periodic).
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        if self.periodic {
            return Vec::new();
        }
        let (nx, ny) = (self.nx, self.ny);
        let mut v = Vec::with_capacity(2 * (nx + ny));
        v.extend((0..nx).map(|i| (i, 0)));
        v.extend((0..ny).map(|j| (nx, j)));
        v.extend((1..=nx).rev().map(|i| (i, ny)));
        v.extend((1..=ny).rev().map(|j| (0, j)));
        v
    }

    /// Trapezoidal weight of a boundary vertex along the boundary curve.
    pub fn boundary_length(&self, i: usize, j: usize) -> f64 {
        let on_x_wall = i == 0 || i == self.nx;
        let on_y_wall = j == 0 || j == self.ny;
        match (on_x_wall, on_y_wall) {
            (true, true) => 0.5 * (self.hx() + self.hy()),
            (true, false) => self.hy(),
            (false, true) => self.hx(),
            (false, false) => 0.0,
        }
    }

    /// `C_P` in `‖v‖ ≤ C_P ‖∇v‖` for mean-zero (periodic) or wall-vanishing fields.
    pub fn poincare_constant(&self) -> f64 {
        if self.periodic {
            self.lx.max(self.ly) / std::f64::consts::TAU
        } else {
            1.0 / (std::f64::consts::PI * (self.lx.powi(-2) + self.ly.powi(-2)).sqrt())
        }
    }

    pub(crate) fn wrap_x(&self, i: usize) -> usize {
        if self.periodic {
            i % self.nx
        } else {
            i
        }
    }

    pub(crate) fn wrap_y(&self, j: usize) -> usize {
        if self.periodic {
            j % self.ny
        } else {
            j
        }
    }

    /// Storage slot of `u_x(i, j)` for `j` possibly one past either wall:
    /// `(index, sign)`, or `None` on wall faces.
    #[inline]
    fn ux_slot(&self, i: isize, j: isize) -> Option<(usize, f64)> {
        if self.periodic {
            let (n, m) = (self.nx as isize, self.ny as isize);
            return Some((self.ux_index(i.rem_euclid(n) as usize, j.rem_euclid(m) as usize), 1.0));
        }
        if i <= 0 || i >= self.nx as isize {
            return None;
        }
        let m = self.ny as isize;
        let (jj, s) = if j < 0 {
            (-1 - j, -1.0)
        } else if j >= m {
            (2 * m - 1 - j, -1.0)
        } else {
            (j, 1.0)
        };
        Some((self.ux_index(i as usize, jj as usize), s))
    }

    #[inline]
    fn uy_slot(&self, i: isize, j: isize) -> Option<(usize, f64)> {
        if self.periodic {
            let (n, m) = (self.nx as isize, self.ny as isize);
            return Some((self.uy_index(i.rem_euclid(n) as usize, j.rem_euclid(m) as usize), 1.0));
        }
        if j <= 0 || j >= self.ny as isize {
            return None;
        }
        let n = self.nx as isize;
        let (ii, s) = if i < 0 {
            (-1 - i, -1.0)
        } else if i >= n {
            (2 * n - 1 - i, -1.0)
        } else {
            (i, 1.0)
        };
        Some((self.uy_index(ii as usize, j as usize), s))
    }

    #[inline]
    fn get<T: Scalar>(v: &[T], slot: Option<(usize, f64)>) -> T {
        match slot {
            Some((k, s)) if s > 0.0 => v[k],
            Some((k, _)) => -v[k],
            None => T::zero(),
        }
    }

    #[inline]
    fn put<T: Scalar>(v: &mut [T], slot: Option<(usize, f64)>, x: T) {
        match slot {
            Some((k, s)) if s > 0.0 => v[k] = v[k] + x,
            Some((k, _)) => v[k] = v[k] - x,
            None => {}
        }
    }

    /// Vertex index with mirror reflection across walls (wrap when periodic).
    #[inline]
    fn vertex_reflect(&self, i: isize, j: isize) -> usize {
        if self.periodic {
            let (n, m) = (self.nx as isize, self.ny as isize);
            return self.vertex(i.rem_euclid(n) as usize, j.rem_euclid(m) as usize);
        }
        let (n, m) = (self.nx as isize, self.ny as isize);
        let r = |k: isize, top: isize| {
            if k < 0 {
                -k
            } else if k > top {
                2 * top - k
            } else {
                k
            }
        };
        self.vertex(r(i, n) as usize, r(j, m) as usize)
    }

    /// Sets wall faces to zero.
    pub fn enforce_no_slip<T: Scalar>(&self, u: &mut MacVelocity<T>) {
        if self.periodic {
            return;
        }
        for j in 0..self.ny {
            u.ux[self.ux_index(0, j)] = T::zero();
            u.ux[self.ux_index(self.nx, j)] = T::zero();
        }
        for i in 0..self.nx {
            u.uy[self.uy_index(i, 0)] = T::zero();
            u.uy[self.uy_index(i, self.ny)] = T::zero();
        }
    }

    // ---- velocity ----

    pub fn velocity_gradient<T: Scalar>(&self, u: &MacVelocity<T>) -> VelocityGradient<T> {
        let (hx, hy) = (T::of(self.hx()), T::of(self.hy()));
        let mut g = VelocityGradient {
            dxx: vec![T::zero(); self.num_cells()],
            dyy: vec![T::zero(); self.num_cells()],
            dyx: vec![T::zero(); self.num_vertices()],
            dxy: vec![T::zero(); self.num_vertices()],
        };
        for i in 0..self.nx {
            for j in 0..self.ny {
                let (a, b) = (i as isize, j as isize);
                let c = self.cell(i, j);
                g.dxx[c] = (Self::get(&u.ux, self.ux_slot(a + 1, b)) - Self::get(&u.ux, self.ux_slot(a, b))) / hx;
                g.dyy[c] = (Self::get(&u.uy, self.uy_slot(a, b + 1)) - Self::get(&u.uy, self.uy_slot(a, b))) / hy;
            }
        }
        for i in 0..self.vx() {
            for j in 0..self.vy() {
                let (a, b) = (i as isize, j as isize);
                let v = self.vertex(i, j);
                g.dyx[v] = (Self::get(&u.ux, self.ux_slot(a, b)) - Self::get(&u.ux, self.ux_slot(a, b - 1))) / hy;
                g.dxy[v] = (Self::get(&u.uy, self.uy_slot(a, b)) - Self::get(&u.uy, self.uy_slot(a - 1, b))) / hx;
            }
        }
        g
    }

    /// Adds the transpose of [`Self::velocity_gradient`] applied to `cot` into `out`.
    pub fn velocity_gradient_adjoint<T: Scalar>(&self, cot: &VelocityGradient<T>, out: &mut MacVelocity<T>) {
        let (hx, hy) = (T::of(self.hx()), T::of(self.hy()));
        for i in 0..self.nx {
            for j in 0..self.ny {
                let (a, b) = (i as isize, j as isize);
                let c = self.cell(i, j);
                let x = cot.dxx[c] / hx;
                Self::put(&mut out.ux, self.ux_slot(a + 1, b), x);
                Self::put(&mut out.ux, self.ux_slot(a, b), -x);
                let y = cot.dyy[c] / hy;
                Self::put(&mut out.uy, self.uy_slot(a, b + 1), y);
                Self::put(&mut out.uy, self.uy_slot(a, b), -y);
            }
        }
        for i in 0..self.vx() {
            for j in 0..self.vy() {
                let (a, b) = (i as isize, j as isize);
                let v = self.vertex(i, j);
                let x = cot.dyx[v] / hy;
                Self::put(&mut out.ux, self.ux_slot(a, b), x);
                Self::put(&mut out.ux, self.ux_slot(a, b - 1), -x);
                let y = cot.dxy[v] / hx;
                Self::put(&mut out.uy, self.uy_slot(a, b), y);
                Self::put(&mut out.uy, self.uy_slot(a - 1, b), -y);
            }
        }
    }

    /// `‖∇_h u‖²`.
    pub fn gradient_norm_sq<T: Scalar>(&self, g: &VelocityGradient<T>) -> T {
        let ca = T::of(self.cell_area());
        let mut s = T::zero();
        for c in 0..self.num_cells() {
            s = s + ca * (g.dxx[c] * g.dxx[c] + g.dyy[c] * g.dyy[c]);
        }
        for i in 0..self.vx() {
            for j in 0..self.vy() {
                let v = self.vertex(i, j);
                s = s + T::of(self.vertex_weight(i, j)) * (g.dyx[v] * g.dyx[v] + g.dxy[v] * g.dxy[v]);
            }
        }
        s
    }

    /// `K u` with `⟨K u, u⟩ = ‖∇_h u‖²`; equals `−h_x h_y Δ_h u` on free faces.
    pub fn viscous_apply<T: Scalar>(&self, u: &MacVelocity<T>) -> MacVelocity<T> {
        let mut g = self.velocity_gradient(u);
        let ca = T::of(self.cell_area());
        for c in 0..self.num_cells() {
            g.dxx[c] = g.dxx[c] * ca;
            g.dyy[c] = g.dyy[c] * ca;
        }
        for i in 0..self.vx() {
            for j in 0..self.vy() {
                let v = self.vertex(i, j);
                let w = T::of(self.vertex_weight(i, j));
                g.dyx[v] = g.dyx[v] * w;
                g.dxy[v] = g.dxy[v] * w;
            }
        }
        let mut out = MacVelocity::zeros(self);
        self.velocity_gradient_adjoint(&g, &mut out);
        out
    }

    pub fn divergence<T: Scalar>(&self, u: &MacVelocity<T>) -> Vec<T> {
        let (hx, hy) = (T::of(self.hx()), T::of(self.hy()));
        let mut out = vec![T::zero(); self.num_cells()];
        for i in 0..self.nx {
            for j in 0..self.ny {
                let (a, b) = (i as isize, j as isize);
                out[self.cell(i, j)] = (Self::get(&u.ux, self.ux_slot(a + 1, b)) - Self::get(&u.ux, self.ux_slot(a, b)))
                    / hx
                    + (Self::get(&u.uy, self.uy_slot(a, b + 1)) - Self::get(&u.uy, self.uy_slot(a, b))) / hy;
            }
        }
        out
    }

    /// `u ← u − s ∇_h p` on free faces.
    pub fn subtract_gradient<T: Scalar>(&self, p: &[T], s: T, u: &mut MacVelocity<T>) {
        let (hx, hy) = (T::of(self.hx()), T::of(self.hy()));
        let cell = |i: isize, j: isize| {
            self.cell(i.rem_euclid(self.nx as isize) as usize, j.rem_euclid(self.ny as isize) as usize)
        };
        for i in 0..self.vx() {
            if !self.ux_free(i) {
                continue;
            }
            for j in 0..self.ny {
                let (a, b) = (i as isize, j as isize);
                let k = self.ux_index(i, j);
                u.ux[k] = u.ux[k] - s * (p[cell(a, b)] - p[cell(a - 1, b)]) / hx;
            }
        }
        for i in 0..self.nx {
            for j in 0..self.vy() {
                if !self.uy_free(j) {
                    continue;
                }
                let (a, b) = (i as isize, j as isize);
                let k = self.uy_index(i, j);
                u.uy[k] = u.uy[k] - s * (p[cell(a, b)] - p[cell(a, b - 1)]) / hy;
            }
        }
    }

    /// `−div_h ∇_h p` with zero flux through walls (symmetric, semidefinite).
    pub fn pressure_apply<T: Scalar>(&self, p: &[T], out: &mut [T]) {
        let (ax, ay) = (T::of(1.0 / (self.hx() * self.hx())), T::of(1.0 / (self.hy() * self.hy())));
        let (n, m) = (self.nx as isize, self.ny as isize);
        for i in 0..self.nx {
            for j in 0..self.ny {
                let (a, b) = (i as isize, j as isize);
                let c = self.cell(i, j);
                let mut s = T::zero();
                for (da, db, w) in [(-1, 0, ax), (1, 0, ax), (0, -1, ay), (0, 1, ay)] {
                    let (x, y) = (a + da, b + db);
                    let inside = (0..n).contains(&x) && (0..m).contains(&y);
                    if inside || self.periodic {
                        s = s + w * (p[c] - p[self.cell(x.rem_euclid(n) as usize, y.rem_euclid(m) as usize)]);
                    }
                }
                out[c] = s;
            }
        }
    }

    /// Divergence-form convection `div(u ⊗ u)` on free faces.
    pub fn convection<T: Scalar>(&self, u: &MacVelocity<T>) -> MacVelocity<T> {
        let (hx, hy) = (T::of(self.hx()), T::of(self.hy()));
        let half = T::of(0.5);
        let gx = |a: isize, b: isize| Self::get(&u.ux, self.ux_slot(a, b));
        let gy = |a: isize, b: isize| Self::get(&u.uy, self.uy_slot(a, b));
        // u_x at the centre of cell (a, b); u_y likewise; both at vertex (a, b).
        let cx = |a: isize, b: isize| half * (gx(a, b) + gx(a + 1, b));
        let cy = |a: isize, b: isize| half * (gy(a, b) + gy(a, b + 1));
        let vxv = |a: isize, b: isize| half * (gx(a, b - 1) + gx(a, b));
        let vyv = |a: isize, b: isize| half * (gy(a - 1, b) + gy(a, b));
        let mut out = MacVelocity::zeros(self);
        for i in 0..self.vx() {
            if !self.ux_free(i) {
                continue;
            }
            for j in 0..self.ny {
                let (a, b) = (i as isize, j as isize);
                let fxx = (cx(a, b) * cx(a, b) - cx(a - 1, b) * cx(a - 1, b)) / hx;
                let fxy = (vxv(a, b + 1) * vyv(a, b + 1) - vxv(a, b) * vyv(a, b)) / hy;
                out.ux[self.ux_index(i, j)] = fxx + fxy;
            }
        }
        for i in 0..self.nx {
            for j in 0..self.vy() {
                if !self.uy_free(j) {
                    continue;
                }
                let (a, b) = (i as isize, j as isize);
                let fyy = (cy(a, b) * cy(a, b) - cy(a, b - 1) * cy(a, b - 1)) / hy;
                let fyx = (vxv(a + 1, b) * vyv(a + 1, b) - vxv(a, b) * vyv(a, b)) / hx;
                out.uy[self.uy_index(i, j)] = fyy + fyx;
            }
        }
        out
    }

    /// `Σ h_x h_y |u|²` over faces.
    pub fn kinetic<T: Scalar>(&self, u: &MacVelocity<T>) -> T {
        let ca = T::of(self.cell_area());
        u.ux.iter().chain(&u.uy).fold(T::zero(), |s, v| s + ca * *v * *v)
    }

    pub fn inner<T: Scalar>(&self, a: &MacVelocity<T>, b: &MacVelocity<T>) -> T {
        let ca = T::of(self.cell_area());
        let s = a.ux.iter().zip(&b.ux).chain(a.uy.iter().zip(&b.uy)).fold(T::zero(), |s, (x, y)| s + *x * *y);
        s * ca
    }

    // ---- director ----

    /// `K x` for one director component, with `½⟨K x, x⟩` the discrete
    /// Dirichlet energy. `K = −W Δ_h` with `W` the vertex weights.
    pub fn stiffness_apply<T: Scalar>(&self, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        self.for_each_edge(|a, b, c| {
            let c = T::of(c);
            let diff = c * (x[a] - x[b]);
            out[a] = out[a] + diff;
            out[b] = out[b] - diff;
        });
    }

    /// `∫|∇d|²` summed over edges.
    /// `|∇d|` at cell centres from the four corner values; pairs with weight `cell_area`.
    pub fn director_gradient_magnitudes<T: Scalar>(&self, d: &[Vec3<T>]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_cells());
        for i in 0..self.nx {
            for j in 0..self.ny {
                let (i1, j1) = (self.wrap_x(i + 1), self.wrap_y(j + 1));
                let (a, b, c, e) = (self.vertex(i, j), self.vertex(i1, j), self.vertex(i, j1), self.vertex(i1, j1));
                let mut s = 0.0;
                for k in 0..3 {
                    let v = |x: usize| d[x][k].to_f64_lossy();
                    let gx = 0.5 * (v(b) - v(a) + v(e) - v(c)) / self.hx();
                    let gy = 0.5 * (v(c) - v(a) + v(e) - v(b)) / self.hy();
                    s += gx * gx + gy * gy;
                }
                out.push(s.sqrt());
            }
        }
        out
    }

    pub fn elastic<T: Scalar>(&self, d: &[Vec3<T>]) -> T {
        let mut s = T::zero();
        self.for_each_edge(|a, b, c| {
            let c = T::of(c);
            for k in 0..3 {
                let diff = d[a][k] - d[b][k];
                s = s + c * diff * diff;
            }
        });
        s
    }

    /// `Δ_h d` at every vertex (reflected across walls).
    pub fn laplacian<T: Scalar>(&self, d: &[Vec3<T>]) -> Vec<Vec3<T>> {
        let np = self.num_vertices();
        let mut out = vec![[T::zero(); 3]; np];
        let mut x = vec![T::zero(); np];
        let mut kx = vec![T::zero(); np];
        for k in 0..3 {
            for (xv, dv) in x.iter_mut().zip(d) {
                *xv = dv[k];
            }
            self.stiffness_apply(&x, &mut kx);
            for i in 0..self.vx() {
                for j in 0..self.vy() {
                    let v = self.vertex(i, j);
                    out[v][k] = -kx[v] / T::of(self.vertex_weight(i, j));
                }
            }
        }
        out
    }

    /// Centred `(∂_x d, ∂_y d)` at every vertex.
    pub fn director_gradient<T: Scalar>(&self, d: &[Vec3<T>]) -> Vec<[Vec3<T>; 2]> {
        let (tx, ty) = (T::of(0.5 / self.hx()), T::of(0.5 / self.hy()));
        let mut out = vec![[[T::zero(); 3]; 2]; self.num_vertices()];
        for i in 0..self.vx() {
            for j in 0..self.vy() {
                let (a, b) = (i as isize, j as isize);
                let (xp, xm) = (d[self.vertex_reflect(a + 1, b)], d[self.vertex_reflect(a - 1, b)]);
                let (yp, ym) = (d[self.vertex_reflect(a, b + 1)], d[self.vertex_reflect(a, b - 1)]);
                let o = &mut out[self.vertex(i, j)];
                for k in 0..3 {
                    o[0][k] = (xp[k] - xm[k]) * tx;
                    o[1][k] = (yp[k] - ym[k]) * ty;
                }
            }
        }
        out
    }

    /// Calls `f(a, b, c)` for every edge `a-b` with coefficient `c` such that
    /// the discrete Dirichlet energy is `Σ c |x_a − x_b|²`.
    fn for_each_edge(&self, mut f: impl FnMut(usize, usize, f64)) {
        let (hx, hy) = (self.hx(), self.hy());
        let half_if = |wall: bool| if wall && !self.periodic { 0.5 } else { 1.0 };
        for i in 0..self.nx {
            for j in 0..self.vy() {
                let c = hy / hx * half_if(j == 0 || j == self.ny);
                f(self.vertex(i, j), self.vertex(self.wrap_x(i + 1), j), c);
            }
        }
        for i in 0..self.vx() {
            for j in 0..self.ny {
                let c = hx / hy * half_if(i == 0 || i == self.nx);
                f(self.vertex(i, j), self.vertex(i, self.wrap_y(j + 1)), c);
            }
        }
    }

    // ---- coupling ----

    /// `B(d) u = u·∇d + s(d, ∇u)` at every vertex, with `u` averaged to the
    /// vertices and `∇u` taken from [`Self::velocity_gradient`] (normal
    /// derivatives averaged over the four adjacent cells, zero on walls).
    pub fn coupling_apply<T: Scalar>(&self, d: &[Vec3<T>], grad_d: &[[Vec3<T>; 2]], u: &MacVelocity<T>, alpha: T) -> Vec<Vec3<T>> {
        let g = self.velocity_gradient(u);
        let half = T::of(0.5);
        let quarter = T::of(0.25);
        let beta = T::one() - alpha;
        let mut out = vec![[T::zero(); 3]; self.num_vertices()];
        for i in 0..self.vx() {
            for j in 0..self.vy() {
                let (a, b) = (i as isize, j as isize);
                let v = self.vertex(i, j);
                let ubar = [
                    half * (Self::get(&u.ux, self.ux_slot(a, b - 1)) + Self::get(&u.ux, self.ux_slot(a, b))),
                    half * (Self::get(&u.uy, self.uy_slot(a - 1, b)) + Self::get(&u.uy, self.uy_slot(a, b))),
                ];
                let (axx, ayy) = match self.vertex_cells(i, j) {
                    Some(cs) => (
                        quarter * cs.iter().map(|&c| g.dxx[c]).sum::<T>(),
                        quarter * cs.iter().map(|&c| g.dyy[c]).sum::<T>(),
                    ),
                    None => (T::zero(), T::zero()),
                };
                // A_ij = ∂_j u_i
                let am = [[axx, g.dyx[v]], [g.dxy[v], ayy]];
                let dv = d[v];
                let o = &mut out[v];
                for k in 0..3 {
                    o[k] = ubar[0] * grad_d[v][0][k] + ubar[1] * grad_d[v][1][k];
                }
                for p in 0..2 {
                    for q in 0..2 {
                        o[p] = o[p] - alpha * am[p][q] * dv[q];
                        o[q] = o[q] + beta * am[p][q] * dv[p];
                    }
                }
            }
        }
        out
    }

    /// `Bᵀ q`, the exact transpose of [`Self::coupling_apply`] in the
    /// Euclidean pairing of vertex and face arrays.
    pub fn coupling_adjoint<T: Scalar>(&self, d: &[Vec3<T>], grad_d: &[[Vec3<T>; 2]], q: &[Vec3<T>], alpha: T) -> MacVelocity<T> {
        let half = T::of(0.5);
        let quarter = T::of(0.25);
        let beta = T::one() - alpha;
        let mut out = MacVelocity::zeros(self);
        let mut cot = VelocityGradient {
            dxx: vec![T::zero(); self.num_cells()],
            dyy: vec![T::zero(); self.num_cells()],
            dyx: vec![T::zero(); self.num_vertices()],
            dxy: vec![T::zero(); self.num_vertices()],
        };
        for i in 0..self.vx() {
            for j in 0..self.vy() {
                let (a, b) = (i as isize, j as isize);
                let v = self.vertex(i, j);
                let (qv, dv) = (q[v], d[v]);
                let cx = (0..3).map(|k| qv[k] * grad_d[v][0][k]).sum::<T>() * half;
                let cy = (0..3).map(|k| qv[k] * grad_d[v][1][k]).sum::<T>() * half;
                Self::put(&mut out.ux, self.ux_slot(a, b - 1), cx);
                Self::put(&mut out.ux, self.ux_slot(a, b), cx);
                Self::put(&mut out.uy, self.uy_slot(a - 1, b), cy);
                Self::put(&mut out.uy, self.uy_slot(a, b), cy);
                let mut m = [[T::zero(); 2]; 2];
                for p in 0..2 {
                    for r in 0..2 {
                        m[p][r] = -alpha * qv[p] * dv[r] + beta * dv[p] * qv[r];
                    }
                }
                cot.dyx[v] = m[0][1];
                cot.dxy[v] = m[1][0];
                if let Some(cs) = self.vertex_cells(i, j) {
                    for c in cs {
                        cot.dxx[c] = cot.dxx[c] + quarter * m[0][0];
                        cot.dyy[c] = cot.dyy[c] + quarter * m[1][1];
                    }
                }
            }
        }
        self.velocity_gradient_adjoint(&cot, &mut out);
        out
    }

    /// The four cells sharing vertex `(i, j)`; `None` on walls.
    fn vertex_cells(&self, i: usize, j: usize) -> Option<[usize; 4]> {
        if self.is_boundary_vertex(i, j) {
            return None;
        }
        let (n, m) = (self.nx, self.ny);
        let im = (i + n - 1) % n;
        let jm = (j + m - 1) % m;
        let (i0, j0) = (i % n, j % m);
        Some([self.cell(im, jm), self.cell(im, j0), self.cell(i0, jm), self.cell(i0, j0)])
    }
}
