use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bounded::{BoundaryKind, BoundaryRegime, MacGrid};
use crate::fields::Grid;
use crate::galerkin::{Picard, SchemeParams};
use crate::potential::{Potential, PotentialKind};
use crate::presets::Preset;
use crate::stress::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Spectral,
    Mac,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Spectral => "spectral",
            Backend::Mac => "mac",
        }
    }
}

/// One forcing mode `a cos(k·x')` with `x'_i = 2π x_i / L_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingMode {
    pub k: [i64; 3],
    pub amplitude: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Zero,
    Modes(Vec<ForcingMode>),
    /// Velocity field of a snapshot.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Preset { preset: Preset, amplitude: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub backend: Backend,
    pub dim: usize,
    pub n: Vec<usize>,
    pub length: Vec<f64>,
    pub model: ModelParams,
    pub scheme: SchemeParams,
    pub potential: PotentialKind,
    pub boundary: BoundaryKind,
    pub h_file: Option<PathBuf>,
    pub forcing: ForcingSpec,
    pub initial: InitialSpec,
    pub output_dir: PathBuf,
    /// Snapshot every this many steps; 0 keeps only the first and last.
    pub snapshot_every: u64,
    pub seed: u64,
    /// Largest tolerated positive energy-law residual.
    pub energy_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: Backend::Spectral,
            dim: 2,
            n: vec![64],
            length: vec![std::f64::consts::TAU],
            model: ModelParams::default(),
            scheme: SchemeParams::default(),
            potential: PotentialKind::default(),
            boundary: BoundaryKind::Periodic,
            h_file: None,
            forcing: ForcingSpec::Zero,
            initial: InitialSpec::Preset { preset: Preset::Smooth, amplitude: 1.0 },
            output_dir: PathBuf::from("out"),
            snapshot_every: 0,
            seed: 0,
            energy_tol: 1e-6,
        }
    }
}

const KEYS: &[&str] = &[
    "run.backend",
    "run.seed",
    "grid.dim",
    "grid.n",
    "grid.length",
    "model.mu",
    "model.lambda",
    "model.gamma",
    "model.alpha",
    "scheme.N",
    "scheme.M",
    "scheme.r",
    "scheme.dt",
    "scheme.t_end",
    "scheme.picard",
    "scheme.picard_max_iters",
    "scheme.picard_tol",
    "scheme.stabilization",
    "scheme.regularize",
    "potential.kind",
    "potential.r0",
    "potential.coeffs",
    "boundary.kind",
    "boundary.h_file",
    "forcing.kind",
    "forcing.modes",
    "forcing.file",
    "initial.preset",
    "initial.amplitude",
    "initial.file",
    "output.dir",
    "output.snapshot_every",
    "diagnostics.energy_tol",
];

struct Reader {
    values: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl Reader {
    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    fn parsed<V: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<V> {
        let v = self.raw(key)?.to_string();
        match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.errors.push(format!("{key}: expected {what}, got '{v}'"));
                None
            }
        }
    }

    fn float(&mut self, key: &str, slot: &mut f64) {
        if let Some(v) = self.parsed::<f64>(key, "a number") {
            *slot = v;
        }
    }

    fn uint(&mut self, key: &str) -> Option<u64> {
        self.parsed::<u64>(key, "a non-negative integer")
    }

    fn list<V: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<Vec<V>> {
        let v = self.raw(key)?.to_string();
        let items: Result<Vec<V>, _> = v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
        match items {
            Ok(x) if !x.is_empty() => Some(x),
            _ => {
                self.errors.push(format!("{key}: expected a list of {what}, got '{v}'"));
                None
            }
        }
    }

    fn boolean(&mut self, key: &str) -> Option<bool> {
        let v = self.raw(key)?;
        match v {
            "true" | "on" | "yes" | "1" => Some(true),
            "false" | "off" | "no" | "0" => Some(false),
            _ => {
                let msg = format!("{key}: expected true or false, got '{v}'");
                self.errors.push(msg);
                None
            }
        }
    }
}

/// Parses the flat `section.key = value` format. Every violation is
/// reported, each naming its key; path values are returned as written.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<String>> {
    let mut r = Reader { values: BTreeMap::new(), errors: Vec::new() };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            r.errors.push(format!("line {}: expected 'section.key = value', got '{line}'", lineno + 1));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            r.errors.push(format!("{k}: unknown key (line {})", lineno + 1));
            continue;
        }
        if let Some((prev, _)) = r.values.insert(k.to_string(), (lineno + 1, v.to_string())) {
            r.errors.push(format!("{k}: given twice (lines {prev} and {})", lineno + 1));
        }
    }

    let mut c = RunConfig::default();
    match r.raw("run.backend") {
        None | Some("spectral") => {}
        Some("mac") => c.backend = Backend::Mac,
        Some(v) => {
            let msg = format!("run.backend: expected spectral or mac, got '{v}'");
            r.errors.push(msg);
        }
    }
    if let Some(v) = r.uint("run.seed") {
        c.seed = v;
    }
    if let Some(v) = r.uint("grid.dim") {
        c.dim = v as usize;
    }
    if let Some(v) = r.list::<usize>("grid.n", "positive integers") {
        c.n = v;
    }
    match r.list::<f64>("grid.length", "numbers") {
        Some(v) => c.length = v,
        None if c.backend == Backend::Mac => c.length = vec![1.0],
        None => {}
    }

    r.float("model.mu", &mut c.model.mu);
    r.float("model.lambda", &mut c.model.lambda);
    r.float("model.gamma", &mut c.model.gamma);
    r.float("model.alpha", &mut c.model.alpha);

    if let Some(v) = r.uint("scheme.N") {
        c.scheme.n = v as usize;
    }
    match r.uint("scheme.M") {
        Some(v) => c.scheme.m = v as usize,
        None => c.scheme.m = c.scheme.m.min(c.scheme.n),
    }
    r.float("scheme.r", &mut c.scheme.r);
    r.float("scheme.dt", &mut c.scheme.dt);
    r.float("scheme.t_end", &mut c.scheme.t_end);
    r.float("scheme.stabilization", &mut c.scheme.stabilization);
    if let Some(v) = r.boolean("scheme.regularize") {
        c.scheme.regularize = v;
    }
    let picard_on = r.boolean("scheme.picard").unwrap_or(false);
    let max_iters = r.uint("scheme.picard_max_iters").unwrap_or(50) as usize;
    let mut tol = 1e-9;
    r.float("scheme.picard_tol", &mut tol);
    if picard_on {
        c.scheme.picard = Picard::On { max_iters, tol };
    } else if r.raw("scheme.picard_max_iters").is_some() || r.raw("scheme.picard_tol").is_some() {
        r.errors.push("scheme.picard_max_iters and scheme.picard_tol require scheme.picard = on".into());
    }

    let mut r0 = 2.0;
    r.float("potential.r0", &mut r0);
    let kind = r.raw("potential.kind").unwrap_or("truncated_double_well").to_string();
    c.potential = match kind.as_str() {
        "truncated_double_well" => PotentialKind::TruncatedDoubleWell { r0 },
        "double_well" => PotentialKind::DoubleWell,
        "zero" => PotentialKind::Zero,
        "polynomial" => PotentialKind::Polynomial(r.list::<f64>("potential.coeffs", "numbers").unwrap_or_default()),
        other => {
            r.errors.push(format!("potential.kind: expected truncated_double_well, double_well, zero or polynomial, got '{other}'"));
            PotentialKind::default()
        }
    };
    if r.raw("potential.r0").is_some() && kind != "truncated_double_well" {
        r.errors.push("potential.r0 only applies to potential.kind = truncated_double_well".into());
    }
    if r.raw("potential.coeffs").is_some() && kind != "polynomial" {
        r.errors.push("potential.coeffs only applies to potential.kind = polynomial".into());
    }

    if let Some(v) = r.raw("boundary.kind") {
        match BoundaryKind::parse(v) {
            Some(k) => c.boundary = k,
            None => {
                let msg = format!("boundary.kind: expected periodic, neumann or dirichlet, got '{v}'");
                r.errors.push(msg);
            }
        }
    }
    c.h_file = r.raw("boundary.h_file").map(PathBuf::from);

    let forcing_kind = r.raw("forcing.kind").unwrap_or("zero").to_string();
    c.forcing = match forcing_kind.as_str() {
        "zero" => ForcingSpec::Zero,
        "modes" => match r.raw("forcing.modes").map(parse_modes) {
            Some(Ok(m)) => ForcingSpec::Modes(m),
            Some(Err(e)) => {
                r.errors.push(format!("forcing.modes: {e}"));
                ForcingSpec::Zero
            }
            None => {
                r.errors.push("forcing.modes is required when forcing.kind = modes".into());
                ForcingSpec::Zero
            }
        },
        "file" => match r.raw("forcing.file") {
            Some(p) => ForcingSpec::File(PathBuf::from(p)),
            None => {
                r.errors.push("forcing.file is required when forcing.kind = file".into());
                ForcingSpec::Zero
            }
        },
        other => {
            r.errors.push(format!("forcing.kind: expected zero, modes or file, got '{other}'"));
            ForcingSpec::Zero
        }
    };
    if r.raw("forcing.modes").is_some() && forcing_kind != "modes" {
        r.errors.push("forcing.modes only applies to forcing.kind = modes".into());
    }
    if r.raw("forcing.file").is_some() && forcing_kind != "file" {
        r.errors.push("forcing.file only applies to forcing.kind = file".into());
    }

    let mut amplitude = 1.0;
    r.float("initial.amplitude", &mut amplitude);
    c.initial = match (r.raw("initial.preset"), r.raw("initial.file")) {
        (Some(_), Some(_)) => {
            r.errors.push("initial.preset and initial.file are mutually exclusive".into());
            c.initial
        }
        (None, Some(p)) => InitialSpec::File(PathBuf::from(p)),
        (p, None) => match Preset::parse(p.unwrap_or("smooth")) {
            Some(preset) => InitialSpec::Preset { preset, amplitude },
            None => {
                let msg = format!("initial.preset: expected rest, smooth or taylor_green, got '{}'", p.unwrap_or(""));
                r.errors.push(msg);
                c.initial
            }
        },
    };
    if !amplitude.is_finite() {
        r.errors.push(format!("initial.amplitude must be finite, got {amplitude}"));
    }

    if let Some(v) = r.raw("output.dir") {
        c.output_dir = PathBuf::from(v);
    }
    if let Some(v) = r.uint("output.snapshot_every") {
        c.snapshot_every = v;
    }
    r.float("diagnostics.energy_tol", &mut c.energy_tol);
    if !(c.energy_tol.is_finite() && c.energy_tol >= 0.0) {
        r.errors.push(format!("diagnostics.energy_tol must be >= 0, got {}", c.energy_tol));
    }

    let mut errors = r.errors;
    errors.extend(c.validate());
    if errors.is_empty() {
        Ok(c)
    } else {
        Err(errors)
    }
}

fn parse_modes(text: &str) -> Result<Vec<ForcingMode>, String> {
    let mut out = Vec::new();
    for entry in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let v: Vec<&str> = entry.split_whitespace().collect();
        if v.len() != 6 {
            return Err(format!("each mode needs 'kx ky kz ax ay az', got '{entry}'"));
        }
        let k: Result<Vec<i64>, _> = v[..3].iter().map(|s| s.parse()).collect();
        let a: Result<Vec<f64>, _> = v[3..].iter().map(|s| s.parse()).collect();
        match (k, a) {
            (Ok(k), Ok(a)) if a.iter().all(|x| x.is_finite()) => {
                if k.iter().all(|x| *x == 0) {
                    return Err("the zero mode would give the forcing a non-zero mean".into());
                }
                out.push(ForcingMode { k: [k[0], k[1], k[2]], amplitude: [a[0], a[1], a[2]] });
            }
            _ => return Err(format!("could not parse mode '{entry}'")),
        }
    }
    if out.is_empty() {
        return Err("no modes given".into());
    }
    Ok(out)
}

impl RunConfig {
    /// Re-runs every module-level validation on the assembled configuration.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.model.validate();
        match self.backend {
            Backend::Spectral => {
                errs.extend(self.scheme.validate());
                match self.spectral_grid() {
                    Ok(g) => errs.extend(self.scheme.validate_for_grid(&g)),
                    Err(e) => errs.push(format!("grid: {e}")),
                }
                if self.boundary != BoundaryKind::Periodic {
                    errs.push(format!("boundary.kind = {} requires run.backend = mac", self.boundary.name()));
                }
            }
            Backend::Mac => {
                if !(self.scheme.dt.is_finite() && self.scheme.dt > 0.0) {
                    errs.push(format!("scheme.dt must be > 0, got {}", self.scheme.dt));
                }
                if !(self.scheme.t_end.is_finite() && self.scheme.t_end > 0.0) {
                    errs.push(format!("scheme.t_end must be > 0, got {}", self.scheme.t_end));
                }
                if !(self.scheme.stabilization.is_finite() && self.scheme.stabilization >= 0.0) {
                    errs.push(format!("scheme.stabilization must be >= 0, got {}", self.scheme.stabilization));
                }
                if self.scheme.picard != Picard::Off {
                    errs.push("scheme.picard is only available with run.backend = spectral".into());
                }
                if let Err(e) = self.mac_grid() {
                    errs.push(format!("grid: {e}"));
                }
            }
        }
        if let Err(e) = Potential::<f64>::new(self.potential.clone()) {
            errs.push(e.to_string());
        }
        match (self.boundary, &self.h_file) {
            (BoundaryKind::Dirichlet, None) => errs.push("boundary.h_file is required when boundary.kind = dirichlet".into()),
            (BoundaryKind::Periodic | BoundaryKind::Neumann, Some(_)) => {
                errs.push("boundary.h_file only applies to boundary.kind = dirichlet".into())
            }
            _ => {}
        }
        if let ForcingSpec::Modes(modes) = &self.forcing {
            for m in modes {
                if self.dim == 2 && m.k[2] != 0 {
                    errs.push(format!("forcing.modes: kz must be 0 in 2D, got {}", m.k[2]));
                }
            }
        }
        errs
    }

    pub fn spectral_grid(&self) -> Result<Grid, String> {
        Grid::new(self.dim, &self.n, &self.length).map_err(|e| e.to_string())
    }

    pub fn mac_grid(&self) -> Result<MacGrid, String> {
        if self.dim != 2 {
            return Err(format!("run.backend = mac is two-dimensional, got grid.dim = {}", self.dim));
        }
        let pick = |v: &[usize], a: usize| if v.len() == 1 { Some(v[0]) } else { v.get(a).copied().filter(|_| v.len() == 2) };
        let pickf = |v: &[f64], a: usize| if v.len() == 1 { Some(v[0]) } else { v.get(a).copied().filter(|_| v.len() == 2) };
        let (Some(nx), Some(ny), Some(lx), Some(ly)) = (pick(&self.n, 0), pick(&self.n, 1), pickf(&self.length, 0), pickf(&self.length, 1)) else {
            return Err("grid.n and grid.length take 1 or 2 values".into());
        };
        MacGrid::new(nx, ny, lx, ly, self.boundary == BoundaryKind::Periodic).map_err(|e| e.to_string())
    }

    /// Boundary regime without data; Dirichlet data is attached once `h_file` is read.
    pub fn regime_kind(&self) -> BoundaryRegime {
        match self.boundary {
            BoundaryKind::Periodic => BoundaryRegime::periodic(),
            BoundaryKind::Neumann => BoundaryRegime::neumann(),
            BoundaryKind::Dirichlet => BoundaryRegime { kind: BoundaryKind::Dirichlet, h: None },
        }
    }

    /// Resolves relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(h) = self.h_file.as_mut() {
            fix(h);
        }
        if let ForcingSpec::File(p) = &mut self.forcing {
            fix(p);
        }
        if let InitialSpec::File(p) = &mut self.initial {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    /// Canonical text form; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        let join = |v: &[String]| v.join(", ");
        put("run.backend", self.backend.name().into());
        put("run.seed", self.seed.to_string());
        put("grid.dim", self.dim.to_string());
        put("grid.n", join(&self.n.iter().map(|x| x.to_string()).collect::<Vec<_>>()));
        put("grid.length", join(&self.length.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>()));
        put("model.mu", format!("{:?}", self.model.mu));
        put("model.lambda", format!("{:?}", self.model.lambda));
        put("model.gamma", format!("{:?}", self.model.gamma));
        put("model.alpha", format!("{:?}", self.model.alpha));
        if self.backend == Backend::Spectral {
            put("scheme.N", self.scheme.n.to_string());
            put("scheme.M", self.scheme.m.to_string());
            put("scheme.r", format!("{:?}", self.scheme.r));
            put("scheme.regularize", self.scheme.regularize.to_string());
        }
        put("scheme.dt", format!("{:?}", self.scheme.dt));
        put("scheme.t_end", format!("{:?}", self.scheme.t_end));
        put("scheme.stabilization", format!("{:?}", self.scheme.stabilization));
        if let Picard::On { max_iters, tol } = self.scheme.picard {
            put("scheme.picard", "on".into());
            put("scheme.picard_max_iters", max_iters.to_string());
            put("scheme.picard_tol", format!("{tol:?}"));
        }
        match &self.potential {
            PotentialKind::TruncatedDoubleWell { r0 } => {
                put("potential.kind", "truncated_double_well".into());
                put("potential.r0", format!("{r0:?}"));
            }
            PotentialKind::DoubleWell => put("potential.kind", "double_well".into()),
            PotentialKind::Zero => put("potential.kind", "zero".into()),
            PotentialKind::Polynomial(c) => {
                put("potential.kind", "polynomial".into());
                put("potential.coeffs", join(&c.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>()));
            }
        }
        put("boundary.kind", self.boundary.name().into());
        if let Some(h) = &self.h_file {
            put("boundary.h_file", h.display().to_string());
        }
        match &self.forcing {
            ForcingSpec::Zero => put("forcing.kind", "zero".into()),
            ForcingSpec::Modes(m) => {
                put("forcing.kind", "modes".into());
                let items: Vec<String> = m
                    .iter()
                    .map(|m| format!("{} {} {} {:?} {:?} {:?}", m.k[0], m.k[1], m.k[2], m.amplitude[0], m.amplitude[1], m.amplitude[2]))
                    .collect();
                put("forcing.modes", items.join("; "));
            }
            ForcingSpec::File(p) => {
                put("forcing.kind", "file".into());
                put("forcing.file", p.display().to_string());
            }
        }
        match &self.initial {
            InitialSpec::Preset { preset, amplitude } => {
                put("initial.preset", preset.name().into());
                put("initial.amplitude", format!("{amplitude:?}"));
            }
            InitialSpec::File(p) => put("initial.file", p.display().to_string()),
        }
        put("output.dir", self.output_dir.display().to_string());
        put("output.snapshot_every", self.snapshot_every.to_string());
        put("diagnostics.energy_tol", format!("{:?}", self.energy_tol));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_r_inside_interval() {
        let c = parse_config("scheme.r = 3.2\n").unwrap();
        assert_eq!(c.scheme.r, 3.2);
    }

    #[test]
    fn rejects_r_outside_interval_naming_it() {
        let e = parse_config("scheme.r = 3.5").unwrap_err();
        assert!(e.iter().any(|m| m.contains("scheme.r must lie in (3, 10/3)")), "{e:?}");
    }

    #[test]
    fn rejects_m_above_n() {
        let e = parse_config("scheme.M = 64\nscheme.N = 32\n").unwrap_err();
        assert!(e.iter().any(|m| m.contains("scheme.M must be <= scheme.N")), "{e:?}");
    }

    #[test]
    fn collects_every_violation() {
        let e = parse_config("model.mu = -1\nscheme.dt = 0\nfoo.bar = 1\nmodel.alpha = x\nnot a line\n").unwrap_err();
        assert!(e.iter().any(|m| m.starts_with("model.mu")));
        assert!(e.iter().any(|m| m.starts_with("scheme.dt")));
        assert!(e.iter().any(|m| m.contains("foo.bar: unknown key")));
        assert!(e.iter().any(|m| m.starts_with("model.alpha: expected a number")));
        assert!(e.iter().any(|m| m.starts_with("line 5")));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_config("# header\n\nmodel.mu = 0.5 # viscosity\n").unwrap();
        assert_eq!(c.model.mu, 0.5);
    }

    #[test]
    fn boundary_rules() {
        assert!(parse_config("boundary.kind = neumann").unwrap_err().iter().any(|m| m.contains("requires run.backend = mac")));
        let e = parse_config("run.backend = mac\nboundary.kind = dirichlet").unwrap_err();
        assert!(e.iter().any(|m| m.contains("boundary.h_file is required")));
        let c = parse_config("run.backend = mac\nboundary.kind = dirichlet\nboundary.h_file = h.txt\ngrid.n = 32").unwrap();
        assert_eq!(c.length, vec![1.0]);
        assert!(!c.mac_grid().unwrap().is_periodic());
        assert!(parse_config("run.backend = mac\ngrid.dim = 3").is_err());
    }

    #[test]
    fn spectral_grid_must_be_power_of_two() {
        let e = parse_config("grid.n = 48").unwrap_err();
        assert!(e.iter().any(|m| m.contains("power of two")), "{e:?}");
    }

    #[test]
    fn forcing_modes() {
        let c = parse_config("forcing.kind = modes\nforcing.modes = 1 0 0 0 1 0; 0 2 0 0.5 0 0").unwrap();
        assert_eq!(c.forcing, ForcingSpec::Modes(vec![
            ForcingMode { k: [1, 0, 0], amplitude: [0.0, 1.0, 0.0] },
            ForcingMode { k: [0, 2, 0], amplitude: [0.5, 0.0, 0.0] },
        ]));
        assert!(parse_config("forcing.kind = modes\nforcing.modes = 0 0 0 1 1 1").is_err());
        assert!(parse_config("forcing.kind = modes").is_err());
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        assert!(parse_config("model.mu = 1\nmodel.mu = 2").unwrap_err()[0].contains("given twice"));
    }

    #[test]
    fn text_form_round_trips() {
        let text = "run.seed = 4\nscheme.picard = on\npotential.kind = polynomial\npotential.coeffs = 1, -2, 1\nforcing.kind = modes\nforcing.modes = 1 1 0 0.1 -0.1 0\ninitial.preset = taylor_green\n";
        let c = parse_config(text).unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
        let m = parse_config("run.backend = mac\nboundary.kind = dirichlet\nboundary.h_file = /tmp/h\ninitial.file = /tmp/s").unwrap();
        assert_eq!(parse_config(&m.to_text()).unwrap(), m);
    }
}
