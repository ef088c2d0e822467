//! Config files: flat dotted keys in TOML syntax.
//!
//! ```text
//! problem.domain = "interval"        # or "rectangle"
//! problem.lx = 1.0
//! problem.ly = 1.0                   # rectangle only
//! problem.alpha = [1.0]              # [ax] / [ax, ay] / "couette"
//! problem.kappa = 0.005
//! problem.source = 1.0
//! problem.dirichlet.left = 0.0       # one key per tag: left right bottom top
//! problem.neumann.top = 0.0
//! mesh.nx = 6
//! mesh.ny = 6                        # rectangle only, defaults to nx
//! enrichment.family = "hb"           # none ha hb hc hb2 global-local
//! enrichment.tags = ["right"]
//! enrichment.gamma = 200.0           # default max|alpha| / kappa
//! enrichment.prune_flat = false
//! bc.mode = "strong"                 # or "weak"
//! bc.lambda = 1e6
//! continuation.pe_start = 1.0
//! continuation.pe_end = 3.0
//! continuation.steps = 8
//! output.dir = "out/ad1d"
//! output.emit_tau = false
//! output.cut_lines = [0.5]
//! ```
//!
//! A node on two Dirichlet boundaries takes the value of the later one in
//! left, right, bottom, top order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use super::{
    BcKind, ContinuationConfig, EnrichmentConfig, FamilyName, OutputConfig, RunConfig, DEFAULT_LAMBDA,
    DEFAULT_STEPS,
};
use crate::mesh::BoundaryTag;
use crate::problem::{Advection, Domain, ProblemSpec};
use crate::{GfemError, Result};

const KNOWN_KEYS: [&str; 21] = [
    "problem.domain",
    "problem.lx",
    "problem.ly",
    "problem.alpha",
    "problem.kappa",
    "problem.source",
    "mesh.nx",
    "mesh.ny",
    "enrichment.family",
    "enrichment.tags",
    "enrichment.gamma",
    "enrichment.prune_flat",
    "bc.mode",
    "bc.lambda",
    "continuation.pe_start",
    "continuation.pe_end",
    "continuation.steps",
    "output.dir",
    "output.emit_tau",
    "output.cut_lines",
    "name",
];

fn is_known(key: &str) -> bool {
    if KNOWN_KEYS.contains(&key) {
        return true;
    }
    ["problem.dirichlet.", "problem.neumann."]
        .iter()
        .any(|p| key.strip_prefix(p).is_some_and(|t| t.parse::<BoundaryTag>().is_ok()))
}

fn flatten(prefix: &str, table: &Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn schema(key: &str, message: impl Into<String>) -> GfemError {
    GfemError::ConfigSchema {
        key: key.into(),
        message: message.into(),
    }
}

struct Keys(BTreeMap<String, Value>);

impl Keys {
    fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(schema(key, "expected a number")),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn required_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| schema(key, "missing required key"))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(v)) if *v > 0 => Ok(Some(*v as usize)),
            Some(_) => Err(schema(key, "expected a positive integer")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(schema(key, "expected a string")),
        }
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(schema(key, "expected true or false")),
        }
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(x) => Ok(*x as f64),
                    _ => Err(schema(key, "expected an array of numbers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(Value::Float(x)) => Ok(Some(vec![*x])),
            Some(Value::Integer(x)) => Ok(Some(vec![*x as f64])),
            Some(_) => Err(schema(key, "expected an array of numbers")),
        }
    }

    fn tags(&self, key: &str) -> Result<Vec<BoundaryTag>> {
        let names: Vec<&str> = match self.get(key) {
            None => vec![],
            Some(Value::String(s)) => vec![s.as_str()],
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().ok_or_else(|| schema(key, "expected boundary tag names")))
                .collect::<Result<_>>()?,
            Some(_) => return Err(schema(key, "expected boundary tag names")),
        };
        names
            .into_iter()
            .map(|n| n.parse().map_err(|e: GfemError| schema(key, e.to_string())))
            .collect()
    }

    fn boundary_values(&self, group: &str) -> Result<Vec<(BoundaryTag, f64)>> {
        let mut out = Vec::new();
        for tag in BoundaryTag::ALL {
            let key = format!("problem.{group}.{tag}");
            if let Some(v) = self.f64(&key)? {
                out.push((tag, v));
            }
        }
        // aliases such as `inflow` resolve to a canonical tag
        for k in self.0.keys() {
            if let Some(name) = k.strip_prefix(&format!("problem.{group}.")) {
                let tag: BoundaryTag = name.parse()?;
                if tag.to_string() != name && !out.iter().any(|(t, _)| *t == tag) {
                    out.push((tag, self.required_f64(k)?));
                }
            }
        }
        out.sort_by_key(|(t, _)| BoundaryTag::ALL.iter().position(|a| a == t));
        Ok(out)
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses config text. `name` is used when the file has no `name` key.
pub fn parse_config(text: &str, name: &str) -> Result<RunConfig> {
    let table: Table = toml::from_str(text).map_err(|e| GfemError::ConfigParse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat);
    let unknown: Vec<&str> = flat.keys().map(String::as_str).filter(|k| !is_known(k)).collect();
    if !unknown.is_empty() {
        return Err(schema(&unknown.join(", "), "unknown keys"));
    }
    let k = Keys(flat);

    let name = k.string("name")?.unwrap_or(name).to_string();
    let domain = match k.string("problem.domain")? {
        Some("interval") => Domain::Interval {
            length: k.f64_or("problem.lx", 1.0)?,
        },
        Some("rectangle") => Domain::Rectangle {
            lx: k.f64_or("problem.lx", 1.0)?,
            ly: k.f64_or("problem.ly", 1.0)?,
        },
        Some(other) => return Err(schema("problem.domain", format!("unknown domain `{other}`"))),
        None => return Err(schema("problem.domain", "missing required key")),
    };
    let alpha = match k.get("problem.alpha") {
        Some(Value::String(s)) if s.eq_ignore_ascii_case("couette") => Advection::Couette,
        Some(Value::String(s)) => {
            return Err(schema("problem.alpha", format!("unknown velocity profile `{s}`")))
        }
        Some(_) => {
            let v = k.numbers("problem.alpha")?.unwrap_or_default();
            match v.as_slice() {
                [a] => Advection::Constant([*a, 0.0]),
                [a, b] => Advection::Constant([*a, *b]),
                _ => return Err(schema("problem.alpha", "expected one or two components")),
            }
        }
        None => return Err(schema("problem.alpha", "missing required key")),
    };
    let kappa = k.required_f64("problem.kappa")?;
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(schema("problem.kappa", "kappa must be positive"));
    }
    let problem = ProblemSpec {
        domain,
        alpha,
        kappa,
        source: k.f64_or("problem.source", 0.0)?,
        dirichlet: k.boundary_values("dirichlet")?,
        neumann: k.boundary_values("neumann")?,
    };

    let nx = k.count("mesh.nx")?.ok_or_else(|| schema("mesh.nx", "missing required key"))?;
    let ny = match domain {
        Domain::Interval { .. } => {
            if k.get("mesh.ny").is_some() {
                return Err(schema("mesh.ny", "not used on an interval"));
            }
            1
        }
        Domain::Rectangle { .. } => k.count("mesh.ny")?.unwrap_or(nx),
    };

    let family = match k.string("enrichment.family")? {
        Some(s) => s.parse().map_err(|e: GfemError| schema("enrichment.family", e.to_string()))?,
        None => FamilyName::None,
    };
    let enrichment = EnrichmentConfig {
        family,
        tags: k.tags("enrichment.tags")?,
        gamma: k.f64("enrichment.gamma")?,
        prune_flat: k.bool("enrichment.prune_flat")?,
    };

    let bc = match k.string("bc.mode")? {
        Some(s) => s.parse().map_err(|e: GfemError| schema("bc.mode", e.to_string()))?,
        None => BcKind::Strong,
    };
    let lambda = k.f64_or("bc.lambda", DEFAULT_LAMBDA)?;

    let has_continuation = k.0.keys().any(|key| key.starts_with("continuation."));
    let continuation = if has_continuation {
        Some(ContinuationConfig {
            pe_start: k.f64_or("continuation.pe_start", 1.0)?,
            pe_end: k.required_f64("continuation.pe_end")?,
            steps: k.count("continuation.steps")?.unwrap_or(DEFAULT_STEPS),
        })
    } else {
        None
    };

    let default_lines = match domain {
        Domain::Interval { .. } => vec![],
        Domain::Rectangle { ly, .. } => vec![0.5 * ly],
    };
    let output = OutputConfig {
        dir: k
            .string("output.dir")?
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out").join(&name)),
        emit_tau: k.bool("output.emit_tau")?,
        cut_lines: k.numbers("output.cut_lines")?.unwrap_or(default_lines),
    };

    let config = RunConfig {
        name,
        problem,
        nx,
        ny,
        enrichment,
        bc,
        lambda,
        continuation,
        output,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| GfemError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    parse_config(&text, stem)
}

fn number(v: f64) -> String {
    // `{:?}` round-trips and always carries a decimal point or exponent
    format!("{v:?}")
}

/// Writes `config` in the file format read by [`parse_config`].
pub fn render_config(config: &RunConfig) -> String {
    let mut s = String::new();
    let p = &config.problem;
    let _ = writeln!(s, "name = \"{}\"", config.name);
    match p.domain {
        Domain::Interval { length } => {
            let _ = writeln!(s, "problem.domain = \"interval\"\nproblem.lx = {}", number(length));
        }
        Domain::Rectangle { lx, ly } => {
            let _ = writeln!(
                s,
                "problem.domain = \"rectangle\"\nproblem.lx = {}\nproblem.ly = {}",
                number(lx),
                number(ly)
            );
        }
    }
    match p.alpha {
        Advection::Couette => s.push_str("problem.alpha = \"couette\"\n"),
        Advection::Constant(a) if p.domain.dim() == 1 => {
            let _ = writeln!(s, "problem.alpha = [{}]", number(a[0]));
        }
        Advection::Constant(a) => {
            let _ = writeln!(s, "problem.alpha = [{}, {}]", number(a[0]), number(a[1]));
        }
    }
    let _ = writeln!(s, "problem.kappa = {}", number(p.kappa));
    let _ = writeln!(s, "problem.source = {}", number(p.source));
    for (tag, v) in &p.dirichlet {
        let _ = writeln!(s, "problem.dirichlet.{tag} = {}", number(*v));
    }
    for (tag, v) in &p.neumann {
        let _ = writeln!(s, "problem.neumann.{tag} = {}", number(*v));
    }
    let _ = writeln!(s, "mesh.nx = {}", config.nx);
    if p.domain.dim() == 2 {
        let _ = writeln!(s, "mesh.ny = {}", config.ny);
    }
    let e = &config.enrichment;
    let _ = writeln!(s, "enrichment.family = \"{}\"", e.family.as_str());
    let tags: Vec<String> = e.tags.iter().map(|t| format!("\"{t}\"")).collect();
    let _ = writeln!(s, "enrichment.tags = [{}]", tags.join(", "));
    if let Some(g) = e.gamma {
        let _ = writeln!(s, "enrichment.gamma = {}", number(g));
    }
    let _ = writeln!(s, "enrichment.prune_flat = {}", e.prune_flat);
    let mode = match config.bc {
        BcKind::Strong => "strong",
        BcKind::Weak => "weak",
    };
    let _ = writeln!(s, "bc.mode = \"{mode}\"\nbc.lambda = {}", number(config.lambda));
    if let Some(c) = &config.continuation {
        let _ = writeln!(
            s,
            "continuation.pe_start = {}\ncontinuation.pe_end = {}\ncontinuation.steps = {}",
            number(c.pe_start),
            number(c.pe_end),
            c.steps
        );
    }
    let o = &config.output;
    let _ = writeln!(s, "output.dir = \"{}\"", o.dir.display());
    let _ = writeln!(s, "output.emit_tau = {}", o.emit_tau);
    let lines: Vec<String> = o.cut_lines.iter().map(|v| number(*v)).collect();
    let _ = writeln!(s, "output.cut_lines = [{}]", lines.join(", "));
    s
}
