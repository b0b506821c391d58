//! Problem instance files.

use std::fmt;

use glaeser_core::{
    is_submodule, AffineFiber, BhkInstance, Bundle, JetShape, LinSubspace, RefinementConfig, RegularModulus,
};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `Σ φ_j f_j = φ` with `f` and `φ` sampled on the points.
    Bhk,
    /// Scalar values to interpolate (`d = 1`).
    Interpolation,
    /// Fibers given directly as a base jet vector and direction vectors.
    ExplicitBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpecFile {
    pub mode: Mode,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub points: Vec<Vec<f64>>,
    /// `d` arrays of coefficient values, one entry per point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fibers: Option<Vec<FiberSpec>>,
    #[serde(default, skip_serializing_if = "ConfigSpec::is_empty")]
    pub config: ConfigSpec,
}

/// Flat jet vectors: component-major, graded-lex Taylor coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    /// `null` for an empty fiber.
    pub base: Option<Vec<f64>>,
    #[serde(default)]
    pub directions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sharp: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snap_to_submodule: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Largest subset size for the finiteness scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_k_sharp: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaSpec>,
}

impl ConfigSpec {
    fn is_empty(&self) -> bool {
        *self == ConfigSpec::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    /// `t^gamma`, `0 < gamma <= 1`.
    Power { gamma: f64 },
    /// Piecewise linear through `(t_i, w_i)`.
    Table { t: Vec<f64>, w: Vec<f64> },
}

impl OmegaSpec {
    pub fn modulus(&self) -> glaeser_core::Result<RegularModulus> {
        match self {
            OmegaSpec::Power { gamma } => RegularModulus::power(*gamma),
            OmegaSpec::Table { t, w } => RegularModulus::tabulated(t.clone(), w.clone()),
        }
    }
}

/// A parse or validation failure, with the 1-based line it refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for SpecError {}

/// Step of a path into a JSON document.
#[derive(Debug, Clone, Copy)]
pub enum Seg<'a> {
    Key(&'a str),
    Index(usize),
}

/// Parses and validates a spec file.
pub fn parse(text: &str) -> Result<ProblemSpecFile, SpecError> {
    let spec: ProblemSpecFile = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = match msg.rfind(" at line ") {
            Some(k) => msg[..k].to_string(),
            None => msg,
        };
        SpecError {
            line: Some(e.line()),
            message: msg,
        }
    })?;
    validate(&spec, text)?;
    Ok(spec)
}

pub fn to_json(spec: &ProblemSpecFile) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("spec serializes");
    s.push('\n');
    s
}

/// Line of the value at `path`, if the document contains it.
pub fn locate(text: &str, path: &[Seg<'_>]) -> Option<usize> {
    let mut sc = Scanner { b: text.as_bytes(), i: 0 };
    let off = sc.find(path)?;
    Some(text.as_bytes()[..off].iter().filter(|&&c| c == b'\n').count() + 1)
}

struct Scanner<'a> {
    b: &'a [u8],
    i: usize,
}

impl Scanner<'_> {
    fn peek(&self) -> Option<u8> {
        self.b.get(self.i).copied()
    }

    fn ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Option<()> {
        self.ws();
        (self.peek()? == c).then(|| self.i += 1)
    }

    fn string(&mut self) -> Option<String> {
        self.eat(b'"')?;
        let mut out = Vec::new();
        loop {
            let c = self.peek()?;
            self.i += 1;
            match c {
                b'"' => return String::from_utf8(out).ok(),
                b'\\' => {
                    out.push(self.peek()?);
                    self.i += 1;
                }
                _ => out.push(c),
            }
        }
    }

    fn skip_value(&mut self) -> Option<()> {
        self.ws();
        match self.peek()? {
            b'"' => self.string().map(|_| ()),
            open @ (b'{' | b'[') => {
                let close = if open == b'{' { b'}' } else { b']' };
                self.i += 1;
                self.ws();
                if self.peek()? == close {
                    self.i += 1;
                    return Some(());
                }
                loop {
                    if open == b'{' {
                        self.string()?;
                        self.eat(b':')?;
                    }
                    self.skip_value()?;
                    self.ws();
                    match self.peek()? {
                        b',' => self.i += 1,
                        c if c == close => {
                            self.i += 1;
                            return Some(());
                        }
                        _ => return None,
                    }
                }
            }
            _ => {
                while self.peek().is_some_and(|c| !matches!(c, b',' | b']' | b'}') && !c.is_ascii_whitespace()) {
                    self.i += 1;
                }
                Some(())
            }
        }
    }

    fn find(&mut self, path: &[Seg<'_>]) -> Option<usize> {
        self.ws();
        let Some((head, rest)) = path.split_first() else {
            return Some(self.i);
        };
        match *head {
            Seg::Key(k) => {
                self.eat(b'{')?;
                loop {
                    self.ws();
                    if self.peek()? == b'}' {
                        return None;
                    }
                    let key = self.string()?;
                    self.eat(b':')?;
                    if key == k {
                        return self.find(rest);
                    }
                    self.skip_value()?;
                    self.eat(b',')?;
                }
            }
            Seg::Index(n) => {
                self.eat(b'[')?;
                for idx in 0.. {
                    self.ws();
                    if self.peek()? == b']' {
                        return None;
                    }
                    if idx == n {
                        return self.find(rest);
                    }
                    self.skip_value()?;
                    self.eat(b',')?;
                }
                None
            }
        }
    }
}

fn err(text: &str, path: &[Seg<'_>], message: impl Into<String>) -> SpecError {
    SpecError {
        line: locate(text, path).or_else(|| locate(text, &path[..1.min(path.len())])),
        message: message.into(),
    }
}

fn check_len(text: &str, path: &[Seg<'_>], what: &str, found: usize, expected: usize) -> Result<(), SpecError> {
    if found != expected {
        return Err(err(text, path, format!("{what} has length {found}, expected {expected}")));
    }
    Ok(())
}

/// Shape and consistency checks that the schema alone cannot express.
pub fn validate(spec: &ProblemSpecFile, text: &str) -> Result<(), SpecError> {
    use Seg::{Index, Key};
    let (n, d) = (spec.n, spec.d);
    if n == 0 {
        return Err(err(text, &[Key("n")], "n must be at least 1"));
    }
    if d == 0 {
        return Err(err(text, &[Key("d")], "d must be at least 1"));
    }
    if spec.points.is_empty() {
        return Err(err(text, &[Key("points")], "points must be nonempty"));
    }
    let count = spec.points.len();
    for (k, p) in spec.points.iter().enumerate() {
        check_len(text, &[Key("points"), Index(k)], &format!("point {k}"), p.len(), n)?;
        if let Some(first) = spec.points[..k].iter().position(|q| q == p) {
            return Err(err(
                text,
                &[Key("points"), Index(k)],
                format!("point {k} duplicates point {first}"),
            ));
        }
    }
    let unused = |field: &str, present: bool| -> Result<(), SpecError> {
        if present {
            return Err(err(
                text,
                &[Key(field)],
                format!("field `{field}` is not used in {} mode", mode_name(spec.mode)),
            ));
        }
        Ok(())
    };
    let require = |field: &str| err(text, &[Key("mode")], format!("{} mode requires `{field}`", mode_name(spec.mode)));
    match spec.mode {
        Mode::Bhk => {
            unused("values", spec.values.is_some())?;
            unused("fibers", spec.fibers.is_some())?;
            let f = spec.f.as_ref().ok_or_else(|| require("f"))?;
            check_len(text, &[Key("f")], "f", f.len(), d)?;
            for (j, fj) in f.iter().enumerate() {
                check_len(text, &[Key("f"), Index(j)], &format!("f[{j}]"), fj.len(), count)?;
            }
            let phi = spec.phi.as_ref().ok_or_else(|| require("phi"))?;
            check_len(text, &[Key("phi")], "phi", phi.len(), count)?;
        }
        Mode::Interpolation => {
            unused("f", spec.f.is_some())?;
            unused("phi", spec.phi.is_some())?;
            unused("fibers", spec.fibers.is_some())?;
            if d != 1 {
                return Err(err(text, &[Key("d")], "interpolation mode requires d = 1"));
            }
            let v = spec.values.as_ref().ok_or_else(|| require("values"))?;
            check_len(text, &[Key("values")], "values", v.len(), count)?;
        }
        Mode::ExplicitBundle => {
            unused("f", spec.f.is_some())?;
            unused("phi", spec.phi.is_some())?;
            unused("values", spec.values.is_some())?;
            let fibers = spec.fibers.as_ref().ok_or_else(|| require("fibers"))?;
            check_len(text, &[Key("fibers")], "fibers", fibers.len(), count)?;
            let shape = JetShape::new(spec.m, n, d);
            let dim = shape.dim();
            for (k, fib) in fibers.iter().enumerate() {
                let at = [Key("fibers"), Index(k)];
                if let Some(b) = &fib.base {
                    check_len(text, &[Key("fibers"), Index(k), Key("base")], &format!("fiber {k} base"), b.len(), dim)?;
                } else if !fib.directions.is_empty() {
                    return Err(err(text, &at, format!("fiber {k} is empty but lists directions")));
                }
                for (i, v) in fib.directions.iter().enumerate() {
                    let path = [Key("fibers"), Index(k), Key("directions"), Index(i)];
                    check_len(text, &path, &format!("fiber {k} direction {i}"), v.len(), dim)?;
                }
                let space = LinSubspace::span_of(dim, &fib.directions).map_err(|e| err(text, &at, e.to_string()))?;
                let closed = is_submodule(&space, &spec.points[k], shape, 1e-8).map_err(|e| err(text, &at, e.to_string()))?;
                if !closed {
                    return Err(err(
                        text,
                        &at,
                        format!("fiber {k} directions do not span a submodule"),
                    ));
                }
            }
        }
    }
    validate_config(&spec.config, text)
}

fn validate_config(c: &ConfigSpec, text: &str) -> Result<(), SpecError> {
    use Seg::Key;
    let at = |k: &'static str| [Key("config"), Key(k)];
    if c.k_sharp == Some(0) {
        return Err(err(text, &at("k_sharp"), "k_sharp must be at least 1"));
    }
    if c.scan_k_sharp == Some(0) {
        return Err(err(text, &at("scan_k_sharp"), "scan_k_sharp must be at least 1"));
    }
    if c.tuple_budget == Some(0) || c.scan_budget == Some(0) {
        let k = if c.tuple_budget == Some(0) { "tuple_budget" } else { "scan_budget" };
        return Err(err(text, &at(k), format!("{k} must be positive")));
    }
    if let Some(e) = c.eta {
        if !(e > 0.0 && e < 1.0) {
            return Err(err(text, &at("eta"), "eta must lie in (0, 1)"));
        }
    }
    if let Some(t) = c.tol_min {
        if t < 0.0 {
            return Err(err(text, &at("tol_min"), "tol_min must be nonnegative"));
        }
    }
    if let Some(s) = &c.scales {
        if s.iter().any(|v| *v <= 0.0) {
            return Err(err(text, &at("scales"), "scales must be positive"));
        }
        if s.windows(2).any(|w| w[1] >= w[0]) {
            return Err(err(text, &at("scales"), "scales must be strictly decreasing"));
        }
    }
    if let Some(o) = &c.omega {
        o.modulus().map_err(|e| err(text, &at("omega"), e.to_string()))?;
    }
    Ok(())
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Bhk => "bhk",
        Mode::Interpolation => "interpolation",
        Mode::ExplicitBundle => "explicit-bundle",
    }
}

impl ProblemSpecFile {
    pub fn shape(&self) -> JetShape {
        JetShape::new(self.m, self.n, self.d)
    }

    /// The BHK instance, in bhk mode.
    pub fn bhk_instance(&self) -> Option<glaeser_core::Result<BhkInstance>> {
        match (self.mode, &self.f, &self.phi) {
            (Mode::Bhk, Some(f), Some(phi)) => Some(BhkInstance::new(self.points.clone(), f.clone(), phi.clone())),
            _ => None,
        }
    }

    pub fn bundle(&self) -> glaeser_core::Result<Bundle> {
        match self.mode {
            Mode::Bhk => Bundle::from_bhk(&self.bhk_instance().expect("validated bhk fields")?, self.m),
            Mode::Interpolation => {
                Bundle::from_interpolation(self.points.clone(), self.values.as_ref().expect("validated values"), self.m)
            }
            Mode::ExplicitBundle => {
                let dim = self.shape().dim();
                let fibers = self
                    .fibers
                    .as_ref()
                    .expect("validated fibers")
                    .iter()
                    .map(|f| match &f.base {
                        None => Ok(AffineFiber::Empty),
                        Some(b) => AffineFiber::new(DVector::from_vec(b.clone()), LinSubspace::span_of(dim, &f.directions)?),
                    })
                    .collect::<glaeser_core::Result<Vec<_>>>()?;
                Bundle::new(self.shape(), self.points.clone(), fibers)
            }
        }
    }

    /// Explicit-bundle spec describing `b`, keeping this spec's config.
    pub fn from_bundle(b: &Bundle, config: ConfigSpec) -> Self {
        let shape = b.shape();
        let fibers = b
            .fibers()
            .iter()
            .map(|f| match f {
                AffineFiber::Empty => FiberSpec {
                    base: None,
                    directions: Vec::new(),
                },
                AffineFiber::Affine { base, directions } => FiberSpec {
                    base: Some(base.iter().copied().collect()),
                    directions: directions
                        .basis()
                        .column_iter()
                        .map(|c| c.iter().copied().collect())
                        .collect(),
                },
            })
            .collect();
        ProblemSpecFile {
            mode: Mode::ExplicitBundle,
            m: shape.m,
            n: shape.n,
            d: shape.d,
            points: b.points().to_vec(),
            f: None,
            phi: None,
            values: None,
            fibers: Some(fibers),
            config,
        }
    }

    /// Refinement parameters from the config block over the defaults.
    pub fn refinement_config(&self) -> RefinementConfig {
        let c = &self.config;
        let mut cfg = RefinementConfig::default();
        if let Some(v) = c.k_sharp {
            cfg.k_sharp = v;
        }
        if let Some(v) = &c.scales {
            cfg.scales = v.clone();
        }
        if let Some(v) = c.eta {
            cfg.eta = v;
        }
        if let Some(v) = c.tol_min {
            cfg.tol_min = v;
        }
        if let Some(v) = c.snap_to_submodule {
            cfg.snap_to_submodule = v;
        }
        if let Some(v) = c.tuple_budget {
            cfg.tuple_budget = v;
        }
        if let Some(v) = c.seed {
            cfg.seed = v;
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locates_nested_values() {
        let text = "{\n  \"a\": [1,\n    [2, 3]],\n  \"b\": {\"c\": \"x,]\"\n  , \"d\": 4}\n}";
        assert_eq!(locate(text, &[Seg::Key("a")]), Some(2));
        assert_eq!(locate(text, &[Seg::Key("a"), Seg::Index(1), Seg::Index(0)]), Some(3));
        assert_eq!(locate(text, &[Seg::Key("b"), Seg::Key("d")]), Some(5));
        assert_eq!(locate(text, &[Seg::Key("z")]), None);
        assert_eq!(locate(text, &[Seg::Key("a"), Seg::Index(5)]), None);
    }
}
