use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energetics::{FieldLaw, LoadSchedule, Problem, Table};
use crate::error::{Error, Result};
use crate::fields::{Edge, Grid, MagnetizationField, ModeKind};
use crate::material::{
    AnisotropyModel, DissipationParams, ElasticityTensor, Materials, OffPlane, R3Law, ThicknessScaling,
};
use crate::solver::SolverConfig;

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "THINMAG_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Static,
    #[default]
    Evolve,
    GammaSweep,
    StrayDiag,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Static => "static",
            Experiment::Evolve => "evolve",
            Experiment::GammaSweep => "gamma-sweep",
            Experiment::StrayDiag => "stray-diag",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub edge: Edge,
    pub mode: ModeKind,
    /// Bulk thickness; absent means the plate limit.
    pub h: Option<f64>,
    /// Layers of bulk grids (`h` runs and sweeps).
    pub nz: usize,
    /// Strictly decreasing thicknesses for sweeps.
    pub h_list: Vec<f64>,
    /// Layer cap of the stray-field extrusion.
    pub nz_cap: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            nx: 16,
            ny: 16,
            lx: 1.0,
            ly: 1.0,
            edge: Edge::Left,
            mode: ModeKind::Zero,
            h: None,
            nz: 3,
            h_list: vec![1.0, 0.5, 0.25, 0.125],
            nz_cap: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    pub m_sat: f64,
    pub exchange: f64,
    pub lame: Option<Lame>,
    /// Full 6x6 stiffness in Voigt order (11, 22, 33, 23, 13, 12).
    pub voigt: Option<Vec<Vec<f64>>>,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self { m_sat: 1.0, exchange: 0.01, lame: Some(Lame { lambda: 0.1, mu: 0.1 }), voigt: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AnisotropyKind {
    #[default]
    Uniaxial,
    Cubic,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnisotropyConfig {
    pub kind: AnisotropyKind,
    pub k_p: f64,
    pub k3: f64,
    pub scaling: ThicknessScaling,
    /// Easy axis of the uniaxial kind.
    pub axis: [f64; 3],
    /// Cubic triad, or one axis per planar node for the tabulated kind.
    pub axes: Vec<[f64; 3]>,
}

impl Default for AnisotropyConfig {
    fn default() -> Self {
        Self {
            kind: AnisotropyKind::Uniaxial,
            k_p: 0.0,
            k3: 0.5,
            scaling: ThicknessScaling::Constant { value: 1.0 },
            axis: [1.0, 0.0, 0.0],
            axes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DissipationConfig {
    pub r_p: f64,
    pub r3: R3Law,
}

impl Default for DissipationConfig {
    fn default() -> Self {
        Self { r_p: 0.2, r3: R3Law::Constant { value: 0.2 } }
    }
}

/// Applied field: rows `[t, H1, H2, H3]`, a CSV file of such rows, or a
/// harmonic law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    Table { rows: Vec<[f64; 4]> },
    File { path: PathBuf },
    Harmonic { offset: [f64; 3], amplitude: [f64; 3], period: f64, phase: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub horizon: f64,
    pub steps: usize,
    /// Boundary amplitude rows `[t, lambda]`.
    pub lambda: Vec<[f64; 2]>,
    pub field: FieldConfig,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            steps: 20,
            lambda: vec![[0.0, 0.0]],
            field: FieldConfig::Harmonic { offset: [0.0; 3], amplitude: [1.5, 0.15, 0.0], period: 1.0, phase: 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// Start direction; defaults to the first easy axis.
    pub direction: Option<[f64; 3]>,
    /// Amplitude of the planar texture `(sin(3 x1 / Lx), x2 / Ly, 0)` added
    /// before projection.
    pub texture: f64,
    /// Replace the initial magnetization by one incremental step at `t = 0`.
    pub relax: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a node table per step.
    pub snapshots: bool,
    /// Run the stability audit after every step.
    pub audit: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { snapshots: false, audit: true }
    }
}

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    pub anisotropy: AnisotropyConfig,
    pub dissipation: DissipationConfig,
    pub schedule: ScheduleConfig,
    pub initial: InitialConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    /// Directory relative paths are resolved against (not serialized).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Evolve,
            seed: 0,
            output_dir: PathBuf::from("thinmag_out"),
            geometry: GeometryConfig::default(),
            material: MaterialConfig::default(),
            anisotropy: AnisotropyConfig::default(),
            dissipation: DissipationConfig::default(),
            schedule: ScheduleConfig::default(),
            initial: InitialConfig::default(),
            solver: SolverConfig { global_restarts: true, ..SolverConfig::default() },
            output: OutputConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// 1-based line of `key = ...` inside `[section]`, if present.
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            current = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        let name = l.split('=').next().unwrap_or("").trim();
        let inline_hit = current.is_empty() && name == section && l.contains(&format!("{key} "));
        if (current == section && name == key) || inline_hit {
            return Some(i + 1);
        }
    }
    None
}

fn schema_error(src: Option<&str>, section: &str, key: &str, msg: String) -> Error {
    let at = src.and_then(|s| locate(s, section, key));
    let path = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
    match at {
        Some(line) => Error::Config(format!("line {line}: {path}: {msg}")),
        None => Error::Config(format!("{path}: {msg}")),
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl RunConfig {
    /// Parses and validates TOML text. A `voigt` table without `lame`
    /// replaces the default Lame constants.
    pub fn from_toml(src: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        let raw: toml::Table = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(toml::Value::Table(m)) = raw.get("material") {
            if m.contains_key("voigt") && !m.contains_key("lame") {
                cfg.material.lame = None;
            }
        }
        cfg.base_dir = base_dir.to_path_buf();
        cfg.check(Some(src))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Self::from_toml(&src, &base)
    }

    /// Schema checks that need no constitutive construction.
    pub fn check(&self, src: Option<&str>) -> Result<()> {
        let err = |section: &str, key: &str, msg: String| Err(schema_error(src, section, key, msg));
        let g = &self.geometry;
        if g.nx < 3 || g.ny < 3 {
            return err("geometry", "nx", format!("need nx, ny >= 3 (got {} x {})", g.nx, g.ny));
        }
        if !positive(g.lx) || !positive(g.ly) {
            return err("geometry", "lx", "side lengths must be positive".into());
        }
        if let Some(h) = g.h {
            if !(h > 0.0 && h <= 1.0) {
                return err("geometry", "h", format!("must lie in (0, 1] (got {h})"));
            }
        }
        if g.nz < 2 {
            return err("geometry", "nz", format!("must be at least 2 (got {})", g.nz));
        }
        if g.h_list.is_empty() || g.h_list.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
            return err("geometry", "h_list", "needs values in (0, 1]".into());
        }
        if g.h_list.windows(2).any(|w| w[1] >= w[0]) {
            return err("geometry", "h_list", "must be strictly decreasing".into());
        }
        let m = &self.material;
        if !positive(m.m_sat) {
            return err("material", "m_sat", format!("must be positive (got {})", m.m_sat));
        }
        if !(m.exchange >= 0.0 && m.exchange.is_finite()) {
            return err("material", "exchange", format!("must be nonnegative (got {})", m.exchange));
        }
        match (&m.lame, &m.voigt) {
            (Some(_), Some(_)) | (None, None) => {
                return err("material", "lame", "give exactly one of `lame` and `voigt`".into())
            }
            (None, Some(v)) if v.len() != 6 || v.iter().any(|r| r.len() != 6) => {
                return err("material", "voigt", "must be a 6 x 6 table".into())
            }
            _ => {}
        }
        let a = &self.anisotropy;
        if !(a.k_p >= 0.0) || !(a.k3 >= 0.0) {
            return err("anisotropy", "k3", "anisotropy constants must be nonnegative".into());
        }
        match a.kind {
            AnisotropyKind::Cubic if a.axes.len() != 3 => {
                return err("anisotropy", "axes", "cubic anisotropy needs three axes".into())
            }
            AnisotropyKind::Tabulated if a.axes.len() != g.nx * g.ny => {
                return err("anisotropy", "axes", format!("needs nx * ny = {} axes", g.nx * g.ny))
            }
            _ => {}
        }
        let d = &self.dissipation;
        if !(d.r_p >= 0.0 && d.r_p.is_finite()) {
            return err("dissipation", "r_p", format!("must be nonnegative (got {})", d.r_p));
        }
        let r3_ok = match d.r3 {
            R3Law::Constant { value } => value >= 0.0,
            R3Law::Affine { at_zero, slope } => at_zero >= 0.0 && at_zero + slope >= 0.0,
        };
        if !r3_ok {
            return err("dissipation", "r3", "must be nonnegative on [0, 1]".into());
        }
        let s = &self.schedule;
        if !positive(s.horizon) {
            return err("schedule", "horizon", format!("must be positive (got {})", s.horizon));
        }
        if s.steps < 1 {
            return err("schedule", "steps", "must be at least 1".into());
        }
        if s.lambda.is_empty() || s.lambda.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return err("schedule", "lambda", "rows must be nonempty with increasing times".into());
        }
        match &s.field {
            FieldConfig::Table { rows } if rows.is_empty() || rows.windows(2).any(|w| w[1][0] <= w[0][0]) => {
                return err("schedule", "field", "rows must be nonempty with increasing times".into())
            }
            FieldConfig::File { path } if !self.resolve(path).is_file() => {
                return err("schedule", "field", format!("file {} does not exist", self.resolve(path).display()))
            }
            FieldConfig::Harmonic { period, .. } if !positive(*period) => {
                return err("schedule", "field", "harmonic period must be positive".into())
            }
            _ => {}
        }
        if let Some(dir) = self.initial.direction {
            if dir.iter().all(|c| *c == 0.0) || dir.iter().any(|c| !c.is_finite()) {
                return err("initial", "direction", "must be a finite nonzero vector".into());
            }
        }
        self.solver.validate().map_err(|e| match e {
            Error::Config(msg) => {
                let key = msg.split(['.', ' ']).nth(1).unwrap_or("").to_string();
                schema_error(src, "solver", &key, msg)
            }
            other => other,
        })?;
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Output directory after the environment override.
    pub fn output_path(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.resolve(&self.output_dir),
        }
    }

    /// Canonical TOML of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Solver settings with the run seed.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { rng_seed: self.seed, ..self.solver.clone() }
    }

    pub fn elasticity(&self) -> Result<ElasticityTensor> {
        match (&self.material.lame, &self.material.voigt) {
            (Some(l), None) => ElasticityTensor::isotropic(l.lambda, l.mu),
            (None, Some(v)) => {
                let mut c = [[0.0; 6]; 6];
                for i in 0..6 {
                    for j in 0..6 {
                        c[i][j] = v[i][j];
                    }
                }
                ElasticityTensor::new(c)
            }
            _ => Err(Error::Config("material: give exactly one of `lame` and `voigt`".into())),
        }
    }

    pub fn anisotropy_model(&self) -> Result<AnisotropyModel> {
        let a = &self.anisotropy;
        let offplane = match a.kind {
            AnisotropyKind::Uniaxial => OffPlane::Uniaxial { k3: a.k3, axis: a.axis },
            AnisotropyKind::Cubic => OffPlane::Cubic { k3: a.k3, axes: [a.axes[0], a.axes[1], a.axes[2]] },
            AnisotropyKind::Tabulated => OffPlane::Tabulated { k3: a.k3, axes: a.axes.clone() },
        };
        AnisotropyModel::new(a.k_p, offplane, a.scaling, self.material.m_sat)
    }

    pub fn dissipation_params(&self) -> Result<DissipationParams> {
        DissipationParams::new(self.dissipation.r_p, self.dissipation.r3)
    }

    pub fn materials(&self) -> Result<Materials> {
        Materials::new(
            self.material.m_sat,
            self.material.exchange,
            self.elasticity()?,
            self.anisotropy_model()?,
            self.dissipation_params()?,
        )
    }

    fn field_rows(&self) -> Result<Vec<[f64; 4]>> {
        match &self.schedule.field {
            FieldConfig::Table { rows } => Ok(rows.clone()),
            FieldConfig::File { path } => {
                let path = self.resolve(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let mut rows = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let l = line.trim();
                    if l.is_empty() || l.starts_with('#') || l.starts_with('t') {
                        continue;
                    }
                    let vals: Vec<f64> = l
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
                    if vals.len() != 4 {
                        return Err(Error::Config(format!("{}:{}: expected t, H1, H2, H3", path.display(), i + 1)));
                    }
                    rows.push([vals[0], vals[1], vals[2], vals[3]]);
                }
                Ok(rows)
            }
            FieldConfig::Harmonic { .. } => Ok(Vec::new()),
        }
    }

    pub fn load_schedule(&self) -> Result<LoadSchedule> {
        let s = &self.schedule;
        let lambda = Table::new(s.lambda.iter().map(|r| (r[0], r[1])).collect()).map_err(config_err)?;
        let field = match &s.field {
            FieldConfig::Harmonic { offset, amplitude, period, phase } => {
                FieldLaw::Harmonic { offset: *offset, amplitude: *amplitude, period: *period, phase: *phase }
            }
            _ => FieldLaw::Table {
                table: Table::new(self.field_rows()?.iter().map(|r| (r[0], [r[1], r[2], r[3]])).collect())
                    .map_err(config_err)?,
            },
        };
        LoadSchedule::new(lambda, field, s.horizon).map_err(config_err)
    }

    /// Plate grid, or the bulk grid when `geometry.h` is set.
    pub fn grid(&self) -> Result<Grid> {
        let g = &self.geometry;
        match g.h {
            None => self.plate_grid(),
            Some(h) => Grid::bulk(g.nx, g.ny, g.nz, g.lx, g.ly, h, g.edge).map_err(config_err),
        }
    }

    pub fn plate_grid(&self) -> Result<Grid> {
        let g = &self.geometry;
        Grid::plate(g.nx, g.ny, g.lx, g.ly, g.edge).map_err(config_err)
    }

    pub fn problem_on(&self, grid: Grid) -> Result<Problem> {
        Problem::new(grid, self.materials()?, self.load_schedule()?, self.geometry.mode)
    }

    pub fn problem(&self) -> Result<Problem> {
        self.problem_on(self.grid()?)
    }

    /// Initial magnetization on `grid`.
    pub fn initial_m(&self, grid: &Grid, materials: &Materials) -> Result<MagnetizationField> {
        let dir = match self.initial.direction {
            Some(d) => d,
            None => materials.anisotropy.easy_axes(0)[0],
        };
        let a = self.initial.texture;
        let (lx, ly) = (grid.lx, grid.ly);
        MagnetizationField::from_planar(grid, materials.m_sat, |x, y| {
            [dir[0] + a * (3.0 * x / lx).sin(), dir[1] + a * (y / ly), dir[2]]
        })
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidInput(msg) => Error::Config(msg),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.canonical(), Path::new(".")).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash(), back.hash());
    }

    #[test]
    fn negative_yield_is_a_schema_error() {
        let src = "seed = 1\n\n[dissipation]\nr_p = -0.5\n";
        match RunConfig::from_toml(src, Path::new(".")) {
            Err(Error::Config(msg)) => assert!(msg.starts_with("line 4"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("[geometry]\nnxx = 3\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("line 2")), "{err}");
    }

    #[test]
    fn missing_field_file_is_rejected() {
        let src = "[schedule.field]\nkind = \"file\"\npath = \"nope.csv\"\n";
        assert!(matches!(RunConfig::from_toml(src, Path::new("/nonexistent")), Err(Error::Config(_))));
    }
}
