//! Layer cache: CSV samples of `φ, …, φ''''` behind `#` metadata lines, keyed
//! by a hash of everything the layer solve depends on. Floats are written in
//! shortest round-trip form, so a reloaded layer is bit-identical.

use std::fs;
use std::path::{Path, PathBuf};

use orowan_core::layer::{LayerConfig, LayerSolution};
use orowan_core::{Error, Result};
use sha2::{Digest, Sha256};

const MAGIC: &str = "# orowan layer cache v1";

pub fn cache_key(potential: &str, cfg: &LayerConfig) -> String {
    let text = format!(
        "{}\npotential={potential}\nX={}\ncount={}\ntol={}\nmax_iter={}\nstretch={}\nimages={}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.half_width,
        cfg.count,
        cfg.tol,
        cfg.max_iter,
        cfg.initial_stretch,
        cfg.image_correction
    );
    hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
}

pub fn cache_path(dir: &Path, potential: &str, cfg: &LayerConfig) -> PathBuf {
    dir.join(format!("layer-{}.csv", cache_key(potential, cfg)))
}

pub fn encode(layer: &LayerSolution) -> String {
    let p = layer.profile();
    let history: Vec<String> = layer.residual_history.iter().map(|v| v.to_string()).collect();
    let mut s = format!(
        "{MAGIC}\n# potential = {}\n# alpha = {}\n# box = {} {}\n# residual = {}\n# multiplier = {}\n# iterations = {}\n# history = {}\n",
        layer.potential,
        layer.alpha,
        layer.box_half_width,
        layer.box_count,
        layer.residual,
        layer.multiplier,
        layer.iterations,
        history.join(",")
    );
    s.push_str("x,phi,phi1,phi2,phi3,phi4\n");
    for (j, x) in layer.xs.iter().enumerate() {
        s.push_str(&x.to_string());
        for order in 0..5 {
            s.push(',');
            s.push_str(&p.samples(order)[j].to_string());
        }
        s.push('\n');
    }
    s
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(format!("layer cache: {}", msg.into()))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| bad(format!("bad number `{s}`")))
}

pub fn decode(text: &str) -> Result<LayerSolution> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header"));
    }
    let mut meta = std::collections::HashMap::new();
    for line in text.lines().skip(1).take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line[1..].split_once('=') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let get = |k: &str| meta.get(k).ok_or_else(|| bad(format!("missing `{k}`")));
    let alpha = parse_f64(get("alpha")?)?;
    let (bx, bn) = get("box")?.split_once(' ').ok_or_else(|| bad("bad box"))?;
    let solver_box = (parse_f64(bx)?, bn.parse().map_err(|_| bad("bad box count"))?);
    let residual = parse_f64(get("residual")?)?;
    let multiplier = parse_f64(get("multiplier")?)?;
    let iterations = get("iterations")?.parse().map_err(|_| bad("bad iterations"))?;
    let history = get("history")?;
    let history = if history.is_empty() {
        vec![]
    } else {
        history.split(',').map(parse_f64).collect::<Result<_>>()?
    };

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut xs = vec![];
    let mut derivs: [Vec<f64>; 5] = Default::default();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 6 {
            return Err(bad("expected 6 columns"));
        }
        xs.push(parse_f64(&rec[0])?);
        for (k, d) in derivs.iter_mut().enumerate() {
            d.push(parse_f64(&rec[k + 1])?);
        }
    }
    LayerSolution::from_parts(
        xs,
        derivs,
        alpha,
        get("potential")?.clone(),
        solver_box,
        (residual, multiplier, history, iterations),
    )
}

pub fn load(path: &Path) -> Result<Option<LayerSolution>> {
    match fs::read_to_string(path) {
        Ok(text) => decode(&text).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Writes through a temporary file so a concurrent reader never sees a
/// half-written cache.
pub fn store(path: &Path, layer: &LayerSolution) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, encode(layer))?;
    fs::rename(&tmp, path)?;
    Ok(())
}
