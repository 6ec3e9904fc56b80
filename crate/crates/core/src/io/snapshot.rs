//! Binary snapshots: the 16-byte magic `NEMATOFLOW-SNAP1`, then little-endian
//! `u32` dim, `u32` per-axis sizes, `f64` time, `f64` box lengths, and the
//! `u`, `d` and pressure arrays as `f64`, each component stored contiguously
//! in row-major point order.

use std::path::Path;

use thiserror::Error;

use crate::bounded::{MacGrid, MacState, MacVelocity};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::galerkin::SolverState;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 16] = b"NEMATOFLOW-SNAP1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot: bad magic")]
    Magic,
    #[error("snapshot truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("snapshot has {extra} trailing bytes")]
    Trailing { extra: usize },
    #[error("snapshot is {found}-dimensional but the run is {expected}-dimensional")]
    Dimension { expected: u32, found: u32 },
    #[error("snapshot grid {found:?} does not match the run grid {expected:?}")]
    Grid { expected: String, found: String },
    #[error("snapshot contains non-finite values")]
    NonFinite,
    #[error("snapshot I/O on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Storage layout of the three arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Collocated: `u` and `d` have 3 components per point, pressure one.
    Collocated,
    /// Staggered 2D: `u` is the x-face then the y-face array, `d` has 3
    /// components per vertex, pressure one value per cell.
    Staggered { periodic: bool },
}

impl Layout {
    fn lengths(&self, dim: u32, sizes: &[u32]) -> (usize, usize, usize) {
        match *self {
            Layout::Collocated => {
                let p: usize = sizes.iter().map(|&s| s as usize).product();
                (3 * p, 3 * p, p)
            }
            Layout::Staggered { periodic } => {
                if dim != 2 || sizes.len() != 2 {
                    return (0, 0, 0);
                }
                let (nx, ny) = (sizes[0] as usize, sizes[1] as usize);
                let e = usize::from(!periodic);
                ((nx + e) * ny + nx * (ny + e), 3 * (nx + e) * (ny + e), nx * ny)
            }
        }
    }
}

/// Decoded snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: u32,
    pub sizes: Vec<u32>,
    pub time: f64,
    pub lengths: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl Snapshot {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * (self.u.len() + self.d.len() + self.pressure.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.dim.to_le_bytes());
        for s in &self.sizes {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out.extend_from_slice(&self.time.to_le_bytes());
        for l in &self.lengths {
            out.extend_from_slice(&l.to_le_bytes());
        }
        for v in self.u.iter().chain(&self.d).chain(&self.pressure) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], layout: Layout) -> Result<Self, SnapshotError> {
        let need = |n: usize| {
            if bytes.len() < n {
                Err(SnapshotError::Truncated { expected: n, found: bytes.len() })
            } else {
                Ok(())
            }
        };
        need(20)?;
        if &bytes[..16] != MAGIC {
            return Err(SnapshotError::Magic);
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let dim = u32_at(16);
        if dim != 2 && dim != 3 {
            return Err(SnapshotError::Dimension { expected: 2, found: dim });
        }
        let nd = dim as usize;
        let header = 20 + 4 * nd + 8 + 8 * nd;
        need(header)?;
        let sizes: Vec<u32> = (0..nd).map(|a| u32_at(20 + 4 * a)).collect();
        let time = f64_at(20 + 4 * nd);
        let lengths: Vec<f64> = (0..nd).map(|a| f64_at(28 + 4 * nd + 8 * a)).collect();
        let (nu, ndir, np) = layout.lengths(dim, &sizes);
        let total = header + 8 * (nu + ndir + np);
        need(total)?;
        if bytes.len() > total {
            return Err(SnapshotError::Trailing { extra: bytes.len() - total });
        }
        let read = |start: usize, n: usize| (0..n).map(|k| f64_at(header + 8 * (start + k))).collect::<Vec<_>>();
        Ok(Snapshot { dim, sizes, time, lengths, u: read(0, nu), d: read(nu, ndir), pressure: read(nu + ndir, np) })
    }

    pub fn write(&self, path: &Path) -> Result<(), SnapshotError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| SnapshotError::Io { path: path.display().to_string(), source })
    }

    pub fn read(path: &Path, layout: Layout) -> Result<Self, SnapshotError> {
        let bytes = std::fs::read(path).map_err(|source| SnapshotError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes, layout)
    }

    fn check_grid(&self, dim: u32, sizes: Vec<u32>, lengths: Vec<f64>) -> Result<(), SnapshotError> {
        if self.dim != dim {
            return Err(SnapshotError::Dimension { expected: dim, found: self.dim });
        }
        if self.sizes != sizes || self.lengths != lengths {
            return Err(SnapshotError::Grid {
                expected: format!("{sizes:?} x {lengths:?}"),
                found: format!("{:?} x {:?}", self.sizes, self.lengths),
            });
        }
        if self.u.iter().chain(&self.d).chain(&self.pressure).any(|v| !v.is_finite()) {
            return Err(SnapshotError::NonFinite);
        }
        Ok(())
    }

    pub fn from_spectral<T: Scalar>(s: &SolverState<T>) -> Self {
        let g = s.grid();
        let flat = |v: &VectorField<T>| v.comps.iter().flatten().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
        Snapshot {
            dim: g.dim() as u32,
            sizes: (0..g.dim()).map(|a| g.n(a) as u32).collect(),
            time: s.t,
            lengths: (0..g.dim()).map(|a| g.length(a)).collect(),
            u: flat(&s.u),
            d: flat(&s.d),
            pressure: s.pressure.data.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }

    /// State on `grid`; the step index is `round(t/dt)`.
    pub fn to_spectral<T: Scalar>(&self, grid: &Grid, dt: f64) -> Result<SolverState<T>, SnapshotError> {
        self.check_grid(
            grid.dim() as u32,
            (0..grid.dim()).map(|a| grid.n(a) as u32).collect(),
            (0..grid.dim()).map(|a| grid.length(a)).collect(),
        )?;
        let np = grid.num_points();
        let field = |v: &[f64]| {
            let mut f = VectorField::zeros(grid);
            for c in 0..3 {
                f.comps[c] = v[c * np..(c + 1) * np].iter().map(|&x| T::of(x)).collect();
            }
            f
        };
        Ok(SolverState {
            t: self.time,
            u: field(&self.u),
            d: field(&self.d),
            pressure: ScalarField { grid: grid.clone(), data: self.pressure.iter().map(|&x| T::of(x)).collect() },
            step_index: (self.time / dt).round().max(0.0) as u64,
        })
    }

    pub fn from_mac<T: Scalar>(grid: &MacGrid, s: &MacState<T>) -> Self {
        let f = |x: &T| x.to_f64_lossy();
        Snapshot {
            dim: 2,
            sizes: vec![grid.nx() as u32, grid.ny() as u32],
            time: s.t,
            lengths: vec![grid.lx(), grid.ly()],
            u: s.u.ux.iter().chain(&s.u.uy).map(f).collect(),
            d: (0..3).flat_map(|c| s.d.iter().map(move |v| v[c].to_f64_lossy())).collect(),
            pressure: s.pressure.iter().map(f).collect(),
        }
    }

    pub fn to_mac<T: Scalar>(&self, grid: &MacGrid, dt: f64) -> Result<MacState<T>, SnapshotError> {
        self.check_grid(2, vec![grid.nx() as u32, grid.ny() as u32], vec![grid.lx(), grid.ly()])?;
        let nux = grid.num_ux();
        let nv = grid.num_vertices();
        let t = |x: &f64| T::of(*x);
        Ok(MacState {
            t: self.time,
            u: MacVelocity { ux: self.u[..nux].iter().map(t).collect(), uy: self.u[nux..].iter().map(t).collect() },
            d: (0..nv).map(|v| [T::of(self.d[v]), T::of(self.d[nv + v]), T::of(self.d[2 * nv + v])]).collect(),
            pressure: self.pressure.iter().map(t).collect(),
            step_index: (self.time / dt).round().max(0.0) as u64,
        })
    }
}
