//! Run configuration: INI-style sections or an equivalent JSON document,
//! merged with command-line flags. Unknown and duplicate keys are hard
//! errors; every output directory receives the resolved configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use vortexpatch::{Bitmap, Domain, InterpKind, Point};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Fully resolved run configuration. Serialized (minus the output
/// directory, which is a runtime locator) into every output directory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunConfig {
    pub domain_kind: String,
    pub width: f64,
    pub height: f64,
    pub mask_path: Option<String>,
    pub n: usize,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub seed1: Point,
    pub seed2: Point,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub lambdas: Vec<f64>,
    pub max_iters: usize,
    pub energy_tol: f64,
    pub rng_seed: u64,
    pub threads: usize,
    pub interp: String,
    pub perturb: String,
    pub turnovers: f64,
    pub trials: usize,
    pub snapshot_every: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain_kind: "disk".into(),
            width: 1.0,
            height: 1.0,
            mask_path: None,
            n: 256,
            kappa1: None,
            kappa2: None,
            seed1: Point::new(0.3, 0.0),
            seed2: Point::new(-0.3, 0.0),
            delta: None,
            lambda: None,
            lambdas: vec![100.0, 200.0, 400.0, 800.0],
            max_iters: 500,
            energy_tol: 1e-10,
            rng_seed: 42,
            threads: 1,
            interp: "bfecc".into(),
            perturb: "translate:0.01".into(),
            turnovers: 3.0,
            trials: 64,
            snapshot_every: 0.5,
        }
    }
}

const KNOWN_KEYS: &[(&str, &str)] = &[
    ("domain", "kind"),
    ("domain", "width"),
    ("domain", "height"),
    ("domain", "mask_path"),
    ("domain", "n"),
    ("vortex", "kappa1"),
    ("vortex", "kappa2"),
    ("vortex", "seed1"),
    ("vortex", "seed2"),
    ("vortex", "delta"),
    ("solver", "lambda"),
    ("solver", "lambdas"),
    ("solver", "max_iters"),
    ("solver", "energy_tol"),
    ("solver", "seed"),
    ("solver", "threads"),
    ("solver", "interp"),
    ("evolution", "perturb"),
    ("evolution", "turnovers"),
    ("evolution", "trials"),
    ("evolution", "snapshot_every"),
];

type KeyMap = BTreeMap<(String, String), String>;

fn parse_ini(text: &str) -> Result<KeyMap, ConfigError> {
    let mut map = KeyMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return err(format!("line {}: malformed section header", lineno + 1));
            };
            section = name.trim().to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {}: expected key = value", lineno + 1));
        };
        let key = (section.clone(), k.trim().to_string());
        if map.contains_key(&key) {
            return err(format!(
                "line {}: duplicate key [{}] {}",
                lineno + 1,
                key.0,
                key.1
            ));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse_json(text: &str) -> Result<KeyMap, ConfigError> {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return err(format!("malformed JSON: {e}")),
    };
    let serde_json::Value::Object(sections) = value else {
        return err("top level must be an object of sections");
    };
    let mut map = KeyMap::new();
    for (section, body) in sections {
        let serde_json::Value::Object(entries) = body else {
            return err(format!("section {section:?} must be an object"));
        };
        for (k, v) in entries {
            let text = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|x| match x {
                        serde_json::Value::Number(n) => Ok(n.to_string()),
                        serde_json::Value::String(s) => Ok(s.clone()),
                        _ => err("array entries must be numbers or strings"),
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .join(","),
                other => return err(format!("unsupported value {other} for key {k:?}")),
            };
            map.insert((section.clone(), k), text);
        }
    }
    Ok(map)
}

fn parse_point(v: &str) -> Result<Point, ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return err(format!("expected X,Y but got {v:?}"));
    }
    let x = parse_f64(parts[0])?;
    let y = parse_f64(parts[1])?;
    Ok(Point::new(x, y))
}

fn parse_f64(v: &str) -> Result<f64, ConfigError> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| ConfigError(format!("expected a number, got {v:?}")))
}

fn parse_usize(v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| ConfigError(format!("expected a nonnegative integer, got {v:?}")))
}

/// Parse a config document (INI-style sections or JSON; sniffed from the
/// first non-blank character) into a RunConfig with defaults filled.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let map = if text.trim_start().starts_with('{') {
        parse_json(text)?
    } else {
        parse_ini(text)?
    };
    apply_map(RunConfig::default(), &map)
}

fn apply_map(mut cfg: RunConfig, map: &KeyMap) -> Result<RunConfig, ConfigError> {
    for (key, v) in map {
        if !KNOWN_KEYS
            .iter()
            .any(|(s, k)| *s == key.0 && *k == key.1)
        {
            return err(format!("unknown key [{}] {}", key.0, key.1));
        }
        match (key.0.as_str(), key.1.as_str()) {
            ("domain", "kind") => cfg.domain_kind = v.clone(),
            ("domain", "width") => cfg.width = parse_f64(v)?,
            ("domain", "height") => cfg.height = parse_f64(v)?,
            ("domain", "mask_path") => cfg.mask_path = Some(v.clone()),
            ("domain", "n") => cfg.n = parse_usize(v)?,
            ("vortex", "kappa1") => cfg.kappa1 = Some(parse_f64(v)?),
            ("vortex", "kappa2") => cfg.kappa2 = Some(parse_f64(v)?),
            ("vortex", "seed1") => cfg.seed1 = parse_point(v)?,
            ("vortex", "seed2") => cfg.seed2 = parse_point(v)?,
            ("vortex", "delta") => cfg.delta = Some(parse_f64(v)?),
            ("solver", "lambda") => cfg.lambda = Some(parse_f64(v)?),
            ("solver", "lambdas") => {
                cfg.lambdas = v
                    .split(',')
                    .map(parse_f64)
                    .collect::<Result<Vec<_>, _>>()?;
            }
            ("solver", "max_iters") => cfg.max_iters = parse_usize(v)?,
            ("solver", "energy_tol") => cfg.energy_tol = parse_f64(v)?,
            ("solver", "seed") => {
                cfg.rng_seed = v
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| ConfigError(format!("expected a u64 seed, got {v:?}")))?;
            }
            ("solver", "threads") => cfg.threads = parse_usize(v)?,
            ("solver", "interp") => cfg.interp = v.clone(),
            ("evolution", "perturb") => cfg.perturb = v.clone(),
            ("evolution", "turnovers") => cfg.turnovers = parse_f64(v)?,
            ("evolution", "trials") => cfg.trials = parse_usize(v)?,
            ("evolution", "snapshot_every") => cfg.snapshot_every = parse_f64(v)?,
            _ => unreachable!("key list checked above"),
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    match cfg.domain_kind.as_str() {
        "disk" | "rectangle" | "mask" => {}
        other => return err(format!("unknown domain kind {other:?}")),
    }
    if cfg.domain_kind == "mask" && cfg.mask_path.is_none() {
        return err("domain kind \"mask\" needs mask_path");
    }
    if cfg.n < 4 {
        return err("n must be at least 4");
    }
    if let Some(k1) = cfg.kappa1 {
        if !(k1 > 0.0) {
            return err(format!("kappa1 must be positive, got {k1}"));
        }
    }
    if let Some(k2) = cfg.kappa2 {
        if !(k2 < 0.0) {
            return err(format!("kappa2 must be negative, got {k2}"));
        }
    }
    if let Some(l) = cfg.lambda {
        if !(l > 0.0) {
            return err("lambda must be positive");
        }
    }
    if cfg.lambdas.iter().any(|l| !(*l > 0.0)) {
        return err("all sweep lambdas must be positive");
    }
    if cfg.threads != 1 {
        return err("only threads = 1 is supported (recorded for provenance)");
    }
    interp_kind(&cfg.interp)?;
    Ok(())
}

impl RunConfig {
    /// Circulations are mandatory for the vortex commands; absent values
    /// are a configuration error naming the field.
    pub fn require_kappas(&self) -> Result<(f64, f64), ConfigError> {
        match (self.kappa1, self.kappa2) {
            (Some(a), Some(b)) => Ok((a, b)),
            (None, _) => err("missing required field kappa1"),
            (_, None) => err("missing required field kappa2"),
        }
    }

    pub fn require_lambda(&self) -> Result<f64, ConfigError> {
        self.lambda
            .ok_or_else(|| ConfigError("missing required field lambda".into()))
    }
}

pub fn interp_kind(name: &str) -> Result<InterpKind, ConfigError> {
    match name {
        "bilinear" => Ok(InterpKind::ClippedBilinear),
        "bicubic" => Ok(InterpKind::ClippedBicubic),
        "bfecc" => Ok(InterpKind::BfeccBicubic),
        other => err(format!(
            "unknown interp {other:?} (expected bilinear | bicubic | bfecc)"
        )),
    }
}

impl RunConfig {
    pub fn domain(&self) -> Result<Domain, ConfigError> {
        match self.domain_kind.as_str() {
            "disk" => Ok(Domain::UnitDisk),
            "rectangle" => Domain::rectangle(self.width, self.height)
                .map_err(|e| ConfigError(e.to_string())),
            "mask" => {
                let path = self.mask_path.as_ref().expect("validated");
                let bm = read_mask_pgm(Path::new(path))?;
                Ok(Domain::MaskedBitmap(bm))
            }
            _ => unreachable!("validated"),
        }
    }
}

/// Binary PGM (P5, 8-bit) mask reader: pixels above 127 are inside. The
/// top image row is the grid row with the largest y, matching the
/// preview writer.
pub fn read_mask_pgm(path: &Path) -> Result<Bitmap, ConfigError> {
    let data = std::fs::read(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut fields = Vec::new();
    let mut pos = 0usize;
    while fields.len() < 4 && pos < data.len() {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&data[start..pos]).to_string());
    }
    if fields.len() < 4 || fields[0] != "P5" {
        return err("mask must be binary 8-bit PGM (P5)");
    }
    let nx: usize = fields[1].parse().map_err(|_| ConfigError("bad width".into()))?;
    let ny: usize = fields[2].parse().map_err(|_| ConfigError("bad height".into()))?;
    if fields[3] != "255" {
        return err("mask PGM must have maxval 255");
    }
    pos += 1; // single whitespace after maxval
    if data.len() < pos + nx * ny {
        return err("mask PGM truncated");
    }
    let mut cells = vec![false; nx * ny];
    for row in 0..ny {
        let iy = ny - 1 - row;
        for ix in 0..nx {
            cells[iy * nx + ix] = data[pos + row * nx + ix] > 127;
        }
    }
    Bitmap::new(nx, ny, cells).map_err(|e| ConfigError(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const INI: &str = "
[domain]
kind = disk
n = 128

[vortex]
kappa1 = 1.5
kappa2 = -0.5
seed1 = 0.4, 0.1

[solver]
lambda = 150
seed = 7
";

    #[test]
    fn minimal_ini_fills_defaults() {
        let cfg = parse_config(INI).unwrap();
        assert_eq!(cfg.n, 128);
        assert_eq!(cfg.kappa1, Some(1.5));
        assert_eq!(cfg.lambda, Some(150.0));
        assert_eq!(cfg.max_iters, 500); // default
        assert_eq!(cfg.rng_seed, 7);
        assert_eq!(cfg.seed1.x, 0.4);
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = "[domain]\nn = 64\nn = 128\n";
        let e = parse_config(text).unwrap_err();
        assert!(e.0.contains("duplicate"), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = "[solver]\nlambdaa = 100\n";
        let e = parse_config(text).unwrap_err();
        assert!(e.0.contains("unknown key"), "{e}");
    }

    #[test]
    fn json_equals_ini() {
        let json = r#"{
  "domain": {"kind": "disk", "n": 128},
  "vortex": {"kappa1": 1.5, "kappa2": -0.5, "seed1": "0.4, 0.1"},
  "solver": {"lambda": 150, "seed": 7}
}"#;
        let a = parse_config(INI).unwrap();
        let b = parse_config(json).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn bad_kappa_sign_rejected() {
        let text = "[vortex]\nkappa2 = 0.5\n";
        assert!(parse_config(text).is_err());
    }
}
