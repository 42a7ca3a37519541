//! Run configuration: `key = value` lines, optional `[section]` headers that
//! prefix the keys below them, `#` comments. Every key has a default; unknown
//! keys are errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use orowan_core::cell::CellProblemConfig;
use orowan_core::layer::LayerConfig;
use orowan_core::operator::LevyQuadratureConfig;
use orowan_core::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the config text, if the error came from parsing.
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: None,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorBlock {
    pub l: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullBlock {
    pub delta: f64,
    pub p0: f64,
    pub l: f64,
    pub tol: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellBlock {
    /// Single-run parameters for the `cell` subcommand.
    pub p: f64,
    pub l: f64,
    /// Scan parameters for the `orowan` subcommand.
    pub p0: f64,
    pub l0: f64,
    pub deltas: Vec<f64>,
    /// Resolution, step, horizon and burn-in shared by both.
    pub base: CellProblemConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticlesBlock {
    pub n: usize,
    pub spacing: f64,
    pub x0: f64,
    pub l0: f64,
    /// `None`: take `c₀` from the layer.
    pub c0: Option<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub wrap: bool,
    /// Write every k-th state to the CSV.
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub potential: String,
    pub levy: LevyQuadratureConfig,
    pub layer: LayerConfig,
    pub corrector: CorrectorBlock,
    pub hull: HullBlock,
    pub cell: CellBlock,
    pub particles: ParticlesBlock,
    pub output_dir: PathBuf,
    pub emit_plot_data: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            potential: "standard".into(),
            levy: LevyQuadratureConfig::default(),
            layer: LayerConfig::default(),
            corrector: CorrectorBlock { l: 1.0, tol: 1e-4 },
            hull: HullBlock {
                delta: 0.1,
                p0: 1.0,
                l: 1.0,
                tol: 1e-10,
                n: 8,
            },
            cell: CellBlock {
                p: 0.1,
                l: 0.1,
                p0: 1.0,
                l0: 1.0,
                deltas: vec![0.2, 0.1, 0.05],
                base: CellProblemConfig::default(),
            },
            particles: ParticlesBlock {
                n: 32,
                spacing: 1.0,
                x0: 0.0,
                l0: 1.0,
                c0: None,
                horizon: 1.0,
                dt: 1e-3,
                wrap: true,
                record_every: 10,
            },
            output_dir: PathBuf::from("orowan-out"),
            emit_plot_data: false,
        }
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

fn num(key: &str, v: &str) -> Result<f64, ConfigError> {
    unquote(v)
        .parse::<f64>()
        .map_err(|_| err(format!("`{key}` expects a number, got `{v}`")))
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    unquote(v)
        .parse::<T>()
        .map_err(|_| err(format!("`{key}` expects a nonnegative integer, got `{v}`")))
}

fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
    match unquote(v) {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(format!("`{key}` expects true or false, got `{v}`"))),
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let v = unquote(v).trim_start_matches('[').trim_end_matches(']');
    v.split(',').map(|s| num(key, s.trim())).collect()
}

impl RunConfig {
    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let at = |mut e: ConfigError| {
                e.line = Some(idx + 1);
                e
            };
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return Err(at(err(format!("malformed section header `{line}`"))));
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| at(err(format!("expected `key = value`, got `{line}`"))))?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            cfg.set(&key, v.trim()).map_err(at)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "potential" => self.potential = unquote(v).to_string(),
            "output_dir" => self.output_dir = PathBuf::from(unquote(v)),
            "emit_plot_data" => self.emit_plot_data = flag(key, v)?,

            "levy.r" => self.levy.inner_radius = num(key, v)?,
            "levy.R" => self.levy.outer_cutoff = num(key, v)?,
            "levy.nodes_per_decade" => self.levy.nodes_per_decade = int(key, v)?,
            "levy.max_panel_width" => self.levy.max_panel_width = num(key, v)?,

            "layer.X" => self.layer.half_width = num(key, v)?,
            "layer.count" => self.layer.count = int(key, v)?,
            "layer.tol" => self.layer.tol = num(key, v)?,
            "layer.max_iter" => self.layer.max_iter = int(key, v)?,
            "layer.initial_stretch" => self.layer.initial_stretch = num(key, v)?,
            "layer.image_correction" => self.layer.image_correction = flag(key, v)?,

            "corrector.L" => self.corrector.l = num(key, v)?,
            "corrector.tol" => self.corrector.tol = num(key, v)?,

            "hull.delta" => self.hull.delta = num(key, v)?,
            "hull.p0" => self.hull.p0 = num(key, v)?,
            "hull.L" => self.hull.l = num(key, v)?,
            "hull.tol" => self.hull.tol = num(key, v)?,
            "hull.n" => self.hull.n = int(key, v)?,

            "cell.p" => self.cell.p = num(key, v)?,
            "cell.L" => self.cell.l = num(key, v)?,
            "cell.p0" => self.cell.p0 = num(key, v)?,
            "cell.L0" => self.cell.l0 = num(key, v)?,
            "cell.deltas" => self.cell.deltas = list(key, v)?,
            "cell.points_per_unit" => self.cell.base.points_per_unit = num(key, v)?,
            "cell.dt" => self.cell.base.dt_factor = num(key, v)?,
            "cell.T" => self.cell.base.horizon = num(key, v)?,
            "cell.burn_in" => self.cell.base.burn_in = num(key, v)?,
            "cell.samples" => self.cell.base.samples = int(key, v)?,

            "particles.N" => self.particles.n = int(key, v)?,
            "particles.spacing" => self.particles.spacing = num(key, v)?,
            "particles.x0" => self.particles.x0 = num(key, v)?,
            "particles.L0" => self.particles.l0 = num(key, v)?,
            "particles.c0" => {
                self.particles.c0 = match unquote(v) {
                    "layer" => None,
                    _ => Some(num(key, v)?),
                }
            }
            "particles.T" => self.particles.horizon = num(key, v)?,
            "particles.dt" => self.particles.dt = num(key, v)?,
            "particles.wrap" => self.particles.wrap = flag(key, v)?,
            "particles.record_every" => self.particles.record_every = int(key, v)?,
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Checks every block against the preconditions of the module it feeds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn wrap(block: &'static str) -> impl Fn(orowan_core::Error) -> ConfigError {
            move |e| err(format!("{block}: {e}"))
        }
        PotentialSpec::from_label(&self.potential).map_err(wrap("potential"))?;
        self.levy.validate().map_err(wrap("levy"))?;
        self.layer.validate().map_err(wrap("layer"))?;
        if !(self.corrector.tol > 0.0) || !self.corrector.l.is_finite() {
            return Err(err("corrector: tol must be positive and L finite"));
        }
        let h = &self.hull;
        if !(h.delta > 0.0 && h.p0 != 0.0 && h.p0.is_finite() && h.l.is_finite()) {
            return Err(err("hull: need delta > 0, p0 finite and nonzero, L finite"));
        }
        if h.delta * h.p0.abs() > 0.5 {
            return Err(err("hull: need 1/(delta |p0|) >= 2"));
        }
        if !(h.tol > 0.0) || h.n < 1 {
            return Err(err("hull: tol must be positive and n at least 1"));
        }
        let c = &self.cell;
        CellProblemConfig {
            p: c.p,
            l: c.l,
            ..c.base
        }
        .validate()
        .map_err(wrap("cell"))?;
        if c.deltas.is_empty() || c.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(err("cell: deltas must be positive"));
        }
        if c.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(err("cell: deltas must be sorted in descending order"));
        }
        if !(c.p0.is_finite() && c.p0 != 0.0 && c.l0.is_finite()) {
            return Err(err("cell: p0 must be nonzero and L0 finite"));
        }
        let p = &self.particles;
        if p.n == 0 || !(p.spacing > 0.0) || !(p.horizon > 0.0) || !(p.dt > 0.0) || p.record_every == 0 {
            return Err(err("particles: need N >= 1, spacing > 0, T > 0, dt > 0, record_every >= 1"));
        }
        if !(p.x0.is_finite() && p.l0.is_finite() && p.c0.is_none_or(|c| c.is_finite())) {
            return Err(err("particles: x0, L0 and c0 must be finite"));
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order. Parsing this text
    /// reproduces the config exactly.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("potential", format!("\"{}\"", self.potential));
        put("output_dir", format!("\"{}\"", self.output_dir.display()));
        put("emit_plot_data", self.emit_plot_data.to_string());
        put("levy.r", self.levy.inner_radius.to_string());
        put("levy.R", self.levy.outer_cutoff.to_string());
        put("levy.nodes_per_decade", self.levy.nodes_per_decade.to_string());
        put("levy.max_panel_width", self.levy.max_panel_width.to_string());
        put("layer.X", self.layer.half_width.to_string());
        put("layer.count", self.layer.count.to_string());
        put("layer.tol", self.layer.tol.to_string());
        put("layer.max_iter", self.layer.max_iter.to_string());
        put("layer.initial_stretch", self.layer.initial_stretch.to_string());
        put("layer.image_correction", self.layer.image_correction.to_string());
        put("corrector.L", self.corrector.l.to_string());
        put("corrector.tol", self.corrector.tol.to_string());
        put("hull.delta", self.hull.delta.to_string());
        put("hull.p0", self.hull.p0.to_string());
        put("hull.L", self.hull.l.to_string());
        put("hull.tol", self.hull.tol.to_string());
        put("hull.n", self.hull.n.to_string());
        put("cell.p", self.cell.p.to_string());
        put("cell.L", self.cell.l.to_string());
        put("cell.p0", self.cell.p0.to_string());
        put("cell.L0", self.cell.l0.to_string());
        let deltas: Vec<String> = self.cell.deltas.iter().map(|d| d.to_string()).collect();
        put("cell.deltas", deltas.join(","));
        put("cell.points_per_unit", self.cell.base.points_per_unit.to_string());
        put("cell.dt", self.cell.base.dt_factor.to_string());
        put("cell.T", self.cell.base.horizon.to_string());
        put("cell.burn_in", self.cell.base.burn_in.to_string());
        put("cell.samples", self.cell.base.samples.to_string());
        put("particles.N", self.particles.n.to_string());
        put("particles.spacing", self.particles.spacing.to_string());
        put("particles.x0", self.particles.x0.to_string());
        put("particles.L0", self.particles.l0.to_string());
        put(
            "particles.c0",
            self.particles.c0.map_or("layer".to_string(), |c| c.to_string()),
        );
        put("particles.T", self.particles.horizon.to_string());
        put("particles.dt", self.particles.dt.to_string());
        put("particles.wrap", self.particles.wrap.to_string());
        put("particles.record_every", self.particles.record_every.to_string());
        s
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}
