//! Run specification: flat key-value records resolved from defaults, an
//! optional config file (or a previously written manifest) and command-line
//! flags, in that order of precedence. The resolved record is echoed into
//! `<prefix>.manifest.json`, and feeding that manifest back through
//! `--config` reproduces the run byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use mlfield::{Complex64, Error, Result};
use serde_json::{json, Value};

pub type SpecMap = BTreeMap<String, String>;

/// Square grid specification `min:max:count` (same axis for re and im),
/// row-major ordering: imaginary part in the outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidParameter(format!(
                "grid must be min:max:count, got {text:?}"
            )));
        }
        let min: f64 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("grid min {:?}", parts[0])))?;
        let max: f64 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("grid max {:?}", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("grid count {:?}", parts[2])))?;
        if !(max > min) || count < 2 {
            return Err(Error::InvalidParameter(
                "grid needs max > min and count >= 2".into(),
            ));
        }
        Ok(Self { min, max, count })
    }

    pub fn points(&self) -> Vec<Complex64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        let mut pts = Vec::with_capacity(self.count * self.count);
        for iy in 0..self.count {
            let im = self.min + step * iy as f64;
            for ix in 0..self.count {
                pts.push(Complex64::new(self.min + step * ix as f64, im));
            }
        }
        pts
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: String,
    pub k: u32,
    pub c_list: Vec<f64>,
    pub tau0: f64,
    pub n: usize,
    pub beta: f64,
    pub grid: Option<GridSpec>,
    pub points: Option<Vec<Complex64>>,
    pub xmax: f64,
    pub resolution: usize,
    pub x: Option<f64>,
    pub ml_a: Option<f64>,
    pub ml_b: Option<f64>,
    pub tail: bool,
    pub limiting: bool,
    pub seed: u64,
    pub trials: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub proposal_scale: f64,
    pub mode: String,
    pub normalization: String,
    pub insertion: Option<Complex64>,
    pub fd_step: f64,
    pub n_list: Vec<usize>,
    pub out: String,
    pub threads: usize,
    /// The resolved flat record (echoed into the manifest).
    map: SpecMap,
}

fn defaults() -> SpecMap {
    let mut m = SpecMap::new();
    for (k, v) in [
        ("k", "1"),
        ("c", "1"),
        ("tau0", "1"),
        ("n", "100"),
        ("beta", "1"),
        ("xmax", "2.5"),
        ("resolution", "512"),
        ("tail", "false"),
        ("limiting", "false"),
        ("seed", "1"),
        ("trials", "10000"),
        ("steps", "1000000"),
        ("burn_in", "100000"),
        ("proposal_scale", "0.3"),
        ("mode", "moduli"),
        ("normalization", "pure-log"),
        ("fd_step", "1e-3"),
        ("out", "run"),
        ("threads", "0"),
    ] {
        m.insert(k.to_string(), v.to_string());
    }
    m
}

/// Parse a config file: either a flat `key = value` text or a manifest JSON
/// (recognized by a leading `{`), whose `spec` object is the flat record.
pub fn load_config(path: &Path) -> Result<SpecMap> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text)?;
        let spec = v
            .get("spec")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::InvalidParameter("manifest lacks a spec object".into()))?;
        let mut m = SpecMap::new();
        for (k, val) in spec {
            let s = val
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::InvalidParameter(format!("manifest key {k} not a string")))?;
            m.insert(k.clone(), s);
        }
        return Ok(m);
    }
    let mut m = SpecMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("config line {} is not key = value: {line:?}", ln + 1))
        })?;
        m.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(m)
}

fn get<T: std::str::FromStr>(map: &SpecMap, key: &str) -> Result<T> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::InvalidParameter(format!("missing key {key}")))?;
    raw.parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse {key} = {raw:?}")))
}

fn get_opt<T: std::str::FromStr>(map: &SpecMap, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("cannot parse {key} = {raw:?}"))),
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str, key: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse {key} entry {s:?}")))
        })
        .collect()
}

fn parse_points(raw: &str) -> Result<Vec<Complex64>> {
    raw.split(';')
        .map(|pair| {
            let (re, im) = pair.split_once(',').ok_or_else(|| {
                Error::InvalidParameter(format!("point must be re,im — got {pair:?}"))
            })?;
            let re: f64 = re.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("cannot parse point component {re:?}"))
            })?;
            let im: f64 = im.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("cannot parse point component {im:?}"))
            })?;
            Ok(Complex64::new(re, im))
        })
        .collect()
}

impl RunSpec {
    /// Merge defaults, config-file values and CLI overrides, then validate.
    pub fn resolve(command: &str, file: Option<SpecMap>, cli: SpecMap) -> Result<Self> {
        let mut map = defaults();
        // figure2 exists to contrast the two normalizations
        if command == "figure2" {
            map.insert("normalization".into(), "both".into());
        }
        if let Some(f) = file {
            map.extend(f);
        }
        map.extend(cli);

        let k: u32 = get(&map, "k")?;
        if k < 1 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        let c_list: Vec<f64> = parse_list(map.get("c").unwrap(), "c")?;
        if c_list.is_empty() || c_list.iter().any(|&c| !(c > -1.0)) {
            return Err(Error::InvalidParameter("every charge must satisfy c > -1".into()));
        }
        let tau0: f64 = get(&map, "tau0")?;
        let n: usize = get(&map, "n")?;
        let beta: f64 = get(&map, "beta")?;
        let grid = match map.get("grid") {
            Some(g) => Some(GridSpec::parse(g)?),
            None => None,
        };
        let points = match map.get("points") {
            Some(p) => Some(parse_points(p)?),
            None => None,
        };
        if let Some(p) = &points {
            if p.is_empty() {
                return Err(Error::InvalidParameter("point list must be nonempty".into()));
            }
        }
        let insertion = match (get_opt::<f64>(&map, "insertion_re")?, get_opt::<f64>(&map, "insertion_im")?) {
            (None, None) => None,
            (re, im) => Some(Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))),
        };
        let n_list = match map.get("n_list") {
            Some(raw) => parse_list(raw, "n_list")?,
            None => Vec::new(),
        };

        let spec = Self {
            command: command.to_string(),
            k,
            c_list,
            tau0,
            n,
            beta,
            grid,
            points,
            xmax: get(&map, "xmax")?,
            resolution: get(&map, "resolution")?,
            x: get_opt(&map, "x")?,
            ml_a: get_opt(&map, "a")?,
            ml_b: get_opt(&map, "b")?,
            tail: get(&map, "tail")?,
            limiting: get(&map, "limiting")?,
            seed: get(&map, "seed")?,
            trials: get(&map, "trials")?,
            steps: get(&map, "steps")?,
            burn_in: get(&map, "burn_in")?,
            proposal_scale: get(&map, "proposal_scale")?,
            mode: map.get("mode").unwrap().clone(),
            normalization: map.get("normalization").unwrap().clone(),
            insertion,
            fd_step: get(&map, "fd_step")?,
            n_list,
            out: map.get("out").unwrap().clone(),
            threads: get(&map, "threads")?,
            map,
        };
        if !matches!(spec.mode.as_str(), "moduli" | "mcmc") {
            return Err(Error::InvalidParameter(format!(
                "mode must be moduli or mcmc, got {:?}",
                spec.mode
            )));
        }
        if !matches!(spec.normalization.as_str(), "pure-log" | "green" | "both") {
            return Err(Error::InvalidParameter(format!(
                "normalization must be pure-log, green or both, got {:?}",
                spec.normalization
            )));
        }
        Ok(spec)
    }

    pub fn charge(&self) -> f64 {
        self.c_list[0]
    }

    /// Worker thread count: the `threads` key, else `MLFIELD_THREADS`, else
    /// one per core.
    pub fn effective_threads(&self) -> usize {
        if self.threads > 0 {
            return self.threads;
        }
        std::env::var("MLFIELD_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .filter(|&t| t > 0)
            .unwrap_or(0)
    }

    /// Evaluation points: explicit list, else the grid, else `None`.
    pub fn eval_points(&self) -> Option<Vec<Complex64>> {
        if let Some(p) = &self.points {
            return Some(p.clone());
        }
        self.grid.map(|g| g.points())
    }

    pub fn manifest(&self) -> Value {
        let spec: serde_json::Map<String, Value> = self
            .map
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        json!({
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "spec": Value::Object(spec),
        })
    }
}
