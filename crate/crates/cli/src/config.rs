//! Run configuration: sections of `key = value` lines in TOML syntax.
//!
//! ```text
//! [kernel]
//! type = "gaussian"
//! delta = 0.25
//!
//! [grid]
//! h = 0.0625
//! ```
//!
//! Every other key has a default; [`RunConfig::to_text`] writes the fully resolved form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use pdpml::integrator::{CflPolicy, InitialCondition, OutputConfig};
use pdpml::{GammaBar, GridConfig, KernelSpec, PmlProfile, SimulationConfig};
use serde::Serialize;
use thiserror::Error;
use toml::{Spanned, Value};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key '{key}' expects {expected}")]
    Type {
        key: String,
        line: usize,
        expected: &'static str,
    },
    #[error("missing required key '{key}'")]
    Missing { key: String },
    #[error("line {line}: invalid value for '{key}': {message}")]
    Invalid { key: String, line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelConfig {
    #[serde(rename = "type")]
    pub family: String,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub cutoff: f64,
    pub s: f64,
    pub gamma_bar: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub h: f64,
    pub half_width: f64,
    pub n_p: usize,
    pub quad_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmlSection {
    pub sigma0: f64,
    /// Per-node damping from the interface outward; overrides `sigma0` when present.
    pub layer: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSection {
    pub dt: f64,
    pub t_final: f64,
    pub cfl_safety: f64,
    pub strict_cfl: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialSection {
    pub amplitude: f64,
    pub decay: f64,
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub snapshot_times: Vec<f64>,
    /// Extra snapshots every this many steps; 0 disables.
    pub snapshot_every: usize,
    pub probes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSection {
    pub enlargement: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySection {
    pub meshes: Vec<f64>,
    pub h_ref: f64,
    pub t_eval: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSection {
    /// Damping values in units of `1/h`.
    pub sigma0_h: Vec<f64>,
    pub kappa: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    pub grid: GridSection,
    pub pml: PmlSection,
    pub time: TimeSection,
    pub initial: InitialSection,
    pub output: OutputSection,
    pub reference: ReferenceSection,
    pub study: StudySection,
    pub scan: ScanSection,
}

const KEYS: &[(&str, &[&str])] = &[
    ("kernel", &["type", "epsilon", "delta", "cutoff", "s", "gamma_bar"]),
    ("grid", &["h", "half_width", "n_p", "quad_order"]),
    ("pml", &["sigma0", "layer"]),
    ("time", &["dt", "t_final", "cfl_safety", "strict_cfl"]),
    ("initial", &["amplitude", "decay", "center"]),
    ("output", &["snapshot_times", "snapshot_every", "probes"]),
    ("reference", &["enlargement"]),
    ("study", &["meshes", "h_ref", "t_eval"]),
    ("scan", &["sigma0_h", "kappa"]),
];

type RawTable = BTreeMap<String, BTreeMap<String, Spanned<Value>>>;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Typed access to the parsed sections with line numbers for errors.
struct Raw<'a> {
    text: &'a str,
    table: RawTable,
}

impl<'a> Raw<'a> {
    fn get(&self, section: &str, key: &str) -> Option<(&Value, usize)> {
        self.table
            .get(section)
            .and_then(|s| s.get(key))
            .map(|v| (v.get_ref(), line_of(self.text, v.span().start)))
    }

    fn line(&self, section: &str, key: &str) -> usize {
        self.get(section, key).map(|(_, l)| l).unwrap_or(0)
    }

    fn type_err(section: &str, key: &str, line: usize, expected: &'static str) -> ConfigError {
        ConfigError::Type {
            key: format!("{section}.{key}"),
            line,
            expected,
        }
    }

    fn float(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((v, line)) => as_float(v)
                .map(Some)
                .ok_or_else(|| Self::type_err(section, key, line, "a number")),
        }
    }

    fn uint(&self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((Value::Integer(i), _)) if *i >= 0 => Ok(Some(*i as usize)),
            Some((_, line)) => Err(Self::type_err(section, key, line, "a nonnegative integer")),
        }
    }

    fn boolean(&self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((Value::Boolean(b), _)) => Ok(Some(*b)),
            Some((_, line)) => Err(Self::type_err(section, key, line, "true or false")),
        }
    }

    fn string(&self, section: &str, key: &str) -> Result<Option<String>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((Value::String(s), _)) => Ok(Some(s.clone())),
            Some((_, line)) => Err(Self::type_err(section, key, line, "a quoted string")),
        }
    }

    fn floats(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((Value::Array(a), line)) => a
                .iter()
                .map(as_float)
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| Self::type_err(section, key, line, "an array of numbers")),
            Some((_, line)) => Err(Self::type_err(section, key, line, "an array of numbers")),
        }
    }

    fn pair(&self, section: &str, key: &str) -> Result<Option<[f64; 2]>, ConfigError> {
        match self.floats(section, key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some([v[0], v[1]])),
            Some(_) => Err(Self::type_err(section, key, self.line(section, key), "two numbers")),
        }
    }

    fn pairs(&self, section: &str, key: &str) -> Result<Option<Vec<[f64; 2]>>, ConfigError> {
        let err = |line| Self::type_err(section, key, line, "an array of number pairs");
        match self.get(section, key) {
            None => Ok(None),
            Some((Value::Array(a), line)) => a
                .iter()
                .map(|p| match p {
                    Value::Array(xy) if xy.len() == 2 => Some([as_float(&xy[0])?, as_float(&xy[1])?]),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| err(line)),
            Some((_, line)) => Err(err(line)),
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn invalid(raw: &Raw, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: format!("{section}.{key}"),
        line: raw.line(section, key),
        message: message.into(),
    }
}

fn positive(raw: &Raw, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(raw, section, key, format!("must be positive, got {v}")))
    }
}

fn nonnegative(raw: &Raw, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(raw, section, key, format!("must be nonnegative, got {v}")))
    }
}

fn gamma_bar(name: &str) -> Option<GammaBar> {
    [GammaBar::Heaviside, GammaBar::PiecewiseLinear, GammaBar::Gaussian]
        .into_iter()
        .find(|g| g.name() == name)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let table: RawTable = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    for (section, entries) in &table {
        let known = KEYS.iter().find(|(s, _)| s == section);
        for (key, v) in entries {
            if !known.is_some_and(|(_, keys)| keys.contains(&key.as_str())) {
                return Err(ConfigError::UnknownKey {
                    key: format!("{section}.{key}"),
                    line: line_of(text, v.span().start),
                });
            }
        }
    }
    let raw = Raw { text, table };
    let missing = |key: &str| ConfigError::Missing { key: key.into() };

    let family = raw.string("kernel", "type")?.ok_or_else(|| missing("kernel.type"))?;
    let cutoff = positive(&raw, "kernel", "cutoff", raw.float("kernel", "cutoff")?.unwrap_or(pdpml::kernel::DEFAULT_CUTOFF))?;
    let s = raw.float("kernel", "s")?.unwrap_or(0.0);
    let gamma_name = raw.string("kernel", "gamma_bar")?.unwrap_or_else(|| "heaviside".into());
    let delta_in = raw.float("kernel", "delta")?;
    let eps_in = raw.float("kernel", "epsilon")?;
    let (epsilon, delta) = match family.as_str() {
        "gaussian" => {
            let eps = match (eps_in, delta_in) {
                (Some(e), None) => e,
                (None, Some(d)) => {
                    let d = positive(&raw, "kernel", "delta", d)?;
                    d / (-cutoff.ln()).sqrt()
                }
                (Some(_), Some(_)) => return Err(invalid(&raw, "kernel", "delta", "give either epsilon or delta")),
                (None, None) => return Err(missing("kernel.epsilon")),
            };
            (Some(positive(&raw, "kernel", "epsilon", eps)?), None)
        }
        "heaviside" | "singular" => {
            if eps_in.is_some() {
                return Err(invalid(&raw, "kernel", "epsilon", "only used by the gaussian kernel"));
            }
            let d = delta_in.ok_or_else(|| missing("kernel.delta"))?;
            (None, Some(positive(&raw, "kernel", "delta", d)?))
        }
        other => {
            return Err(invalid(
                &raw,
                "kernel",
                "type",
                format!("'{other}' is not one of gaussian, heaviside, singular"),
            ))
        }
    };
    if gamma_bar(&gamma_name).is_none() {
        return Err(invalid(&raw, "kernel", "gamma_bar", format!("unknown shape '{gamma_name}'")));
    }
    let kernel = KernelConfig {
        family,
        epsilon,
        delta,
        cutoff,
        s,
        gamma_bar: gamma_name,
    };
    let spec = kernel.spec();
    spec.validate().map_err(|e| invalid(&raw, "kernel", "type", e.to_string()))?;

    let h = positive(&raw, "grid", "h", raw.float("grid", "h")?.ok_or_else(|| missing("grid.h"))?)?;
    let grid = GridSection {
        h,
        half_width: positive(&raw, "grid", "half_width", raw.float("grid", "half_width")?.unwrap_or(1.0))?,
        n_p: raw.uint("grid", "n_p")?.unwrap_or(4),
        quad_order: raw.uint("grid", "quad_order")?.unwrap_or(pdpml::stencil::DEFAULT_QUAD_ORDER),
    };
    if grid.quad_order == 0 {
        return Err(invalid(&raw, "grid", "quad_order", "must be at least 1"));
    }
    GridConfig::for_domain(grid.half_width, h, grid.n_p, spec.horizon())
        .map_err(|e| invalid(&raw, "grid", "half_width", e.to_string()))?;

    let sigma0 = nonnegative(&raw, "pml", "sigma0", raw.float("pml", "sigma0")?.unwrap_or(2.0 / h))?;
    let layer = raw.floats("pml", "layer")?;
    if let Some(l) = &layer {
        if l.len() != grid.n_p {
            return Err(invalid(&raw, "pml", "layer", format!("needs {} values, got {}", grid.n_p, l.len())));
        }
        for &v in l {
            nonnegative(&raw, "pml", "layer", v)?;
        }
    }

    let time = TimeSection {
        dt: positive(&raw, "time", "dt", raw.float("time", "dt")?.unwrap_or(h / 32.0))?,
        t_final: nonnegative(&raw, "time", "t_final", raw.float("time", "t_final")?.unwrap_or(2.0))?,
        cfl_safety: positive(&raw, "time", "cfl_safety", raw.float("time", "cfl_safety")?.unwrap_or(0.9))?,
        strict_cfl: raw.boolean("time", "strict_cfl")?.unwrap_or(false),
    };
    let initial = InitialSection {
        amplitude: raw.float("initial", "amplitude")?.unwrap_or(1.0),
        decay: nonnegative(&raw, "initial", "decay", raw.float("initial", "decay")?.unwrap_or(40.0))?,
        center: raw.pair("initial", "center")?.unwrap_or([0.0, 0.0]),
    };
    let output = OutputSection {
        snapshot_times: raw.floats("output", "snapshot_times")?.unwrap_or_else(|| vec![1.0, 1.5, 2.0]),
        snapshot_every: raw.uint("output", "snapshot_every")?.unwrap_or(0),
        probes: raw.pairs("output", "probes")?.unwrap_or_else(|| vec![[0.5, 0.5]]),
    };
    for &t in &output.snapshot_times {
        nonnegative(&raw, "output", "snapshot_times", t)?;
    }
    let reference = ReferenceSection {
        enlargement: raw.uint("reference", "enlargement")?.unwrap_or(4),
    };
    if reference.enlargement < 2 {
        return Err(invalid(&raw, "reference", "enlargement", "must be at least 2"));
    }
    let study = StudySection {
        meshes: raw.floats("study", "meshes")?.unwrap_or_else(|| vec![0.125, 0.0625, 0.03125]),
        h_ref: positive(&raw, "study", "h_ref", raw.float("study", "h_ref")?.unwrap_or(0.015625))?,
        t_eval: nonnegative(&raw, "study", "t_eval", raw.float("study", "t_eval")?.unwrap_or(1.5))?,
    };
    for &m in &study.meshes {
        positive(&raw, "study", "meshes", m)?;
    }
    let scan = ScanSection {
        sigma0_h: raw.floats("scan", "sigma0_h")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0, 8.0]),
        kappa: raw.pairs("scan", "kappa")?.unwrap_or_else(|| vec![[10.0, 10.0], [20.0, 20.0], [40.0, 40.0]]),
    };
    for &v in &scan.sigma0_h {
        nonnegative(&raw, "scan", "sigma0_h", v)?;
    }
    if scan.sigma0_h.is_empty() || scan.kappa.is_empty() {
        return Err(invalid(&raw, "scan", "sigma0_h", "scan lists must be nonempty"));
    }
    Ok(RunConfig {
        kernel,
        grid,
        pml: PmlSection { sigma0, layer },
        time,
        initial,
        output,
        reference,
        study,
        scan,
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}

impl KernelConfig {
    pub fn spec(&self) -> KernelSpec {
        match self.family.as_str() {
            "gaussian" => KernelSpec::gaussian(self.epsilon.unwrap_or(0.0), self.cutoff),
            "heaviside" => KernelSpec::heaviside(self.delta.unwrap_or(0.0)),
            _ => KernelSpec::singular(
                self.delta.unwrap_or(0.0),
                self.s,
                gamma_bar(&self.gamma_bar).unwrap_or(GammaBar::Heaviside),
            ),
        }
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| fmt_float(*x)).collect();
    format!("[{}]", items.join(", "))
}

fn pair_list(v: &[[f64; 2]]) -> String {
    let items: Vec<String> = v.iter().map(|p| list(p)).collect();
    format!("[{}]", items.join(", "))
}

/// Shortest round-trip decimal, always with a decimal point or exponent.
fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

impl RunConfig {
    pub fn grid_config(&self) -> anyhow::Result<GridConfig> {
        Ok(GridConfig::for_domain(
            self.grid.half_width,
            self.grid.h,
            self.grid.n_p,
            self.kernel.spec().horizon(),
        )?)
    }

    pub fn profile(&self, grid: &GridConfig) -> anyhow::Result<PmlProfile> {
        Ok(match &self.pml.layer {
            Some(l) => PmlProfile::mirrored(grid, l)?,
            None => PmlProfile::constant(grid, self.pml.sigma0)?,
        })
    }

    pub fn simulation(&self) -> anyhow::Result<SimulationConfig> {
        let grid = self.grid_config()?;
        Ok(SimulationConfig {
            grid,
            kernel: self.kernel.spec(),
            quad_order: self.grid.quad_order,
            profile: self.profile(&grid)?,
            dt: self.time.dt,
            t_final: self.time.t_final,
            initial: InitialCondition::GaussianPulse {
                amplitude: self.initial.amplitude,
                decay: self.initial.decay,
                center: self.initial.center,
            },
            output: OutputConfig {
                snapshot_times: self
                    .output
                    .snapshot_times
                    .iter()
                    .copied()
                    .filter(|&t| t <= self.time.t_final + 0.5 * self.time.dt)
                    .collect(),
                snapshot_every: (self.output.snapshot_every > 0).then_some(self.output.snapshot_every),
                probes: self.output.probes.clone(),
            },
            cfl: CflPolicy {
                safety: self.time.cfl_safety,
                strict: self.time.strict_cfl,
            },
        })
    }

    /// Fully resolved configuration in the input syntax.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let k = &self.kernel;
        let _ = writeln!(s, "[kernel]\ntype = \"{}\"", k.family);
        if let Some(e) = k.epsilon {
            let _ = writeln!(s, "epsilon = {}", fmt_float(e));
        }
        if let Some(d) = k.delta {
            let _ = writeln!(s, "delta = {}", fmt_float(d));
        }
        let _ = writeln!(s, "cutoff = {}\ns = {}\ngamma_bar = \"{}\"", fmt_float(k.cutoff), fmt_float(k.s), k.gamma_bar);
        let g = &self.grid;
        let _ = writeln!(
            s,
            "\n[grid]\nh = {}\nhalf_width = {}\nn_p = {}\nquad_order = {}",
            fmt_float(g.h),
            fmt_float(g.half_width),
            g.n_p,
            g.quad_order
        );
        let _ = writeln!(s, "\n[pml]\nsigma0 = {}", fmt_float(self.pml.sigma0));
        if let Some(l) = &self.pml.layer {
            let _ = writeln!(s, "layer = {}", list(l));
        }
        let t = &self.time;
        let _ = writeln!(
            s,
            "\n[time]\ndt = {}\nt_final = {}\ncfl_safety = {}\nstrict_cfl = {}",
            fmt_float(t.dt),
            fmt_float(t.t_final),
            fmt_float(t.cfl_safety),
            t.strict_cfl
        );
        let i = &self.initial;
        let _ = writeln!(
            s,
            "\n[initial]\namplitude = {}\ndecay = {}\ncenter = {}",
            fmt_float(i.amplitude),
            fmt_float(i.decay),
            list(&i.center)
        );
        let o = &self.output;
        let _ = writeln!(
            s,
            "\n[output]\nsnapshot_times = {}\nsnapshot_every = {}\nprobes = {}",
            list(&o.snapshot_times),
            o.snapshot_every,
            pair_list(&o.probes)
        );
        let _ = writeln!(s, "\n[reference]\nenlargement = {}", self.reference.enlargement);
        let st = &self.study;
        let _ = writeln!(
            s,
            "\n[study]\nmeshes = {}\nh_ref = {}\nt_eval = {}",
            list(&st.meshes),
            fmt_float(st.h_ref),
            fmt_float(st.t_eval)
        );
        let _ = writeln!(
            s,
            "\n[scan]\nsigma0_h = {}\nkappa = {}",
            list(&self.scan.sigma0_h),
            pair_list(&self.scan.kappa)
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[kernel]\ntype = \"gaussian\"\ndelta = 0.25\n\n[grid]\nh = 0.0625\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.grid.n_p, 4);
        assert_eq!(c.grid.quad_order, 8);
        assert_eq!(c.pml.sigma0, 32.0);
        assert_eq!(c.time.dt, 0.0625 / 32.0);
        assert_eq!(c.initial.decay, 40.0);
        assert!((c.kernel.spec().horizon() - 0.25).abs() < 1e-14);
        let sim = c.simulation().unwrap();
        assert_eq!(sim.grid.p, 4);
        assert_eq!(sim.grid.n, 16);
    }

    #[test]
    fn resolved_text_round_trips() {
        let c = parse_config_str(MINIMAL).unwrap();
        let again = parse_config_str(&c.to_text()).unwrap();
        assert_eq!(c, again);
        let mut d = c.clone();
        d.pml.layer = Some(vec![1.0, 2.5, 3.0, 1e-3]);
        d.output.probes = vec![[0.5, -0.25], [0.0, 0.0]];
        assert_eq!(parse_config_str(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn negative_damping_rejected() {
        let err = parse_config_str(&format!("{MINIMAL}\n[pml]\nsigma0 = -1\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, line: 9, .. } if key == "pml.sigma0"), "{err}");
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = parse_config_str(&format!("{MINIMAL}frobnicate = 3\n")).unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                key: "grid.frobnicate".into(),
                line: 7
            }
        );
    }

    #[test]
    fn type_mismatch_names_key_and_line() {
        let err = parse_config_str("[kernel]\ntype = \"heaviside\"\ndelta = \"wide\"\n[grid]\nh = 0.1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Type { ref key, line: 3, .. } if key == "kernel.delta"), "{err}");
    }

    #[test]
    fn missing_keys_reported() {
        assert_eq!(
            parse_config_str("[grid]\nh = 0.1\n").unwrap_err(),
            ConfigError::Missing { key: "kernel.type".into() }
        );
        assert_eq!(
            parse_config_str("[kernel]\ntype = \"heaviside\"\ndelta = 0.25\n").unwrap_err(),
            ConfigError::Missing { key: "grid.h".into() }
        );
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config_str("[kernel]\ntype = \"heaviside\"\ndelta 0.25\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 3, .. }), "{err}");
    }
}
