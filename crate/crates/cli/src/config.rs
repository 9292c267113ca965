//! Run configuration: one TOML file, command-line overrides on top.
//!
//! Every key is optional; `docs/config.md` in the repository lists the
//! defaults.

use std::path::{Path, PathBuf};

use gma_core::chern_weil::{BundleFile, DirectSumBundle};
use gma_core::herm::HermFormRepr;
use gma_core::lemmas::SuiteCounts;
use gma_core::{ContinuitySettings, GridSpec, HermForm};
use serde::{Deserialize, Serialize};

use crate::exit::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    VerifyLemmas,
    ChernWeil,
    Oracle,
    Export,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::VerifyLemmas => "verify-lemmas",
            Command::ChernWeil => "chern-weil",
            Command::Oracle => "oracle",
            Command::Export => "export",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub problem: ProblemConfig,
    pub settings: ContinuitySettings,
    pub lemmas: LemmaConfig,
    pub chern_weil: ChernWeilConfig,
    pub export: ExportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: 0,
            output_dir: PathBuf::from("gma-out"),
            grid: GridConfig::default(),
            problem: ProblemConfig::default(),
            settings: ContinuitySettings::default(),
            lemmas: LemmaConfig::default(),
            chern_weil: ChernWeilConfig::default(),
            export: ExportConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// `N₁ … N_{2n}` in axis order `x₁ … x_n, y₁ … y_n`.
    pub sizes: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { sizes: vec![8; 6] }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, CliError> {
        if self.sizes.len() % 2 != 0 {
            return Err(CliError::config("grid.sizes needs an even number of axes"));
        }
        Ok(GridSpec::new(self.sizes.len() / 2, self.sizes.clone())?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingKind {
    /// `F` in `c_t e^{tF} f₀`.
    Driving,
    /// The target density itself.
    Density,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingSource {
    Zero,
    Constant,
    /// Band-limited random field from the run seed.
    BandLimited,
    /// `amplitude · cos(2πx₁) cos(2πy₁)`.
    Separable,
    /// A scalar field dump.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub kind: ForcingKind,
    pub source: ForcingSource,
    pub value: f64,
    pub amplitude: f64,
    pub max_mode: usize,
    pub path: Option<PathBuf>,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            kind: ForcingKind::Driving,
            source: ForcingSource::Zero,
            value: 0.0,
            amplitude: 0.2,
            max_mode: 2,
            path: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Metric matrix; identity when absent.
    pub g: Option<HermFormRepr>,
    /// Coefficient `A`; `Id/6` on ℂ³ and zero on ℂ² when absent.
    pub a: Option<HermFormRepr>,
    pub epsilon_tilde: f64,
    pub forcing: ForcingConfig,
}

impl ProblemConfig {
    pub fn matrices(&self, n: usize) -> Result<(HermForm, HermForm), CliError> {
        let g = match &self.g {
            Some(r) => HermForm::try_from(r)?,
            None => HermForm::identity(n),
        };
        let a = match &self.a {
            Some(r) => HermForm::try_from(r)?,
            None if n == 3 => HermForm::identity(3).scale(1.0 / 6.0),
            None => HermForm::zeros(n),
        };
        if g.n() != n || a.n() != n {
            return Err(CliError::config(format!("problem matrices must be {n}×{n} to match the grid")));
        }
        Ok((g, a))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub useful: usize,
    pub ek: usize,
    pub rem1: usize,
    /// Test hook: run the useful-lemma suite against a broken adjugate.
    pub corrupt_adjugate: bool,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        let c = SuiteCounts::default();
        Self { useful: c.useful, ek: c.ek, rem1: c.rem1, corrupt_adjugate: false }
    }
}

impl LemmaConfig {
    pub fn counts(&self) -> SuiteCounts {
        SuiteCounts { useful: self.useful, ek: self.ek, rem1: self.rem1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundlePreset {
    /// `diag(1,1,1) ⊕ diag(0,3,1) ⊕ diag(0,0,2)` on ℂ³.
    Threefold,
    /// `diag(2,2) ⊕ diag(1,−1)` on ℂ².
    Surface,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChernWeilConfig {
    /// Bundle description file (`.json` or `.toml`); overrides `preset`.
    pub bundle: Option<PathBuf>,
    pub preset: BundlePreset,
    pub epsilon: f64,
    pub max_mode: usize,
}

impl Default for ChernWeilConfig {
    fn default() -> Self {
        Self { bundle: None, preset: BundlePreset::Threefold, epsilon: 0.01, max_mode: 2 }
    }
}

impl ChernWeilConfig {
    pub fn load_bundle(&self) -> Result<DirectSumBundle, CliError> {
        let Some(path) = &self.bundle else {
            let summands = match self.preset {
                BundlePreset::Threefold => {
                    vec![HermForm::identity(3), HermForm::diag(&[0.0, 3.0, 1.0]), HermForm::diag(&[0.0, 0.0, 2.0])]
                }
                BundlePreset::Surface => vec![HermForm::diag(&[2.0, 2.0]), HermForm::diag(&[1.0, -1.0])],
            };
            return Ok(DirectSumBundle::new(summands)?);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read bundle {}: {e}", path.display())))?;
        let file: BundleFile = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| CliError::config(format!("bundle {}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("bundle {}: {e}", path.display())))?
        };
        Ok(DirectSumBundle::try_from(&file)?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    /// Scalar field dump to export.
    pub input: Option<PathBuf>,
    /// Free axes of the slice; `[0, n]` (the `x₁,y₁` plane) when absent.
    pub axes: Option<[usize; 2]>,
    /// Index of every pinned axis; zeros when absent.
    pub fixed: Option<Vec<usize>>,
}

/// Parsed config plus the text it was hashed from.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    /// Resolved config in canonical TOML, the input of the manifest hash.
    pub canonical: String,
}

/// Reads `path` (if any), applies `key=value` overrides and the dedicated
/// flags, and validates the result.
pub fn load(
    path: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
    output: Option<&Path>,
    grid: Option<&[usize]>,
) -> Result<Loaded, CliError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::io(format!("cannot read config {}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let mut config: RunConfig =
        toml::Value::Table(value).try_into().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(o) = output {
        config.output_dir = o.to_path_buf();
    }
    if let Some(g) = grid {
        config.grid.sizes = g.to_vec();
    }
    // relative paths inside the config resolve against its directory
    if let Some(dir) = path.and_then(Path::parent) {
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut().filter(|q| q.is_relative()) {
                *q = dir.join(&q);
            }
        };
        rebase(&mut config.problem.forcing.path);
        rebase(&mut config.chern_weil.bundle);
        rebase(&mut config.export.input);
    }
    validate(&config)?;
    let canonical = toml::to_string(&config).map_err(|e| CliError::config(e.to_string()))?;
    Ok(Loaded { config, canonical })
}

/// `a.b.c=value`; the value is read as a TOML literal, or as a bare string
/// if it does not parse as one.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| CliError::config(format!("override '{spec}' is not key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("bad override key '{key}'")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("override '{key}': '{part}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn validate(c: &RunConfig) -> Result<(), CliError> {
    let grid = c.grid.spec()?;
    c.settings.validate()?;
    let f = &c.problem.forcing;
    if !(c.problem.epsilon_tilde >= 0.0) {
        return Err(CliError::config("problem.epsilon_tilde must be ≥ 0"));
    }
    if !f.value.is_finite() || !(f.amplitude >= 0.0 && f.amplitude.is_finite()) {
        return Err(CliError::config("forcing value/amplitude must be finite (amplitude ≥ 0)"));
    }
    if f.source == ForcingSource::BandLimited && 2 * f.max_mode >= grid.sizes().iter().copied().min().unwrap_or(2) {
        return Err(CliError::config(format!("forcing.max_mode {} is not below Nyquist", f.max_mode)));
    }
    if f.source == ForcingSource::File && f.path.is_none() {
        return Err(CliError::config("forcing.source = \"file\" needs forcing.path"));
    }
    let cw = &c.chern_weil;
    if !(cw.epsilon >= 0.0 && cw.epsilon.is_finite()) {
        return Err(CliError::config("chern_weil.epsilon must be finite and ≥ 0"));
    }
    Ok(())
}
