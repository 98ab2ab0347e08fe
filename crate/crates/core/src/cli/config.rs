//! Run configuration: a line-oriented `key = value` file with `[section]`
//! headers. `#` starts a comment. Keys before the first header are
//! top-level (`command`).
//!
//! ```text
//! command = verify
//!
//! [flow]
//! kind = cigar
//! potential = steady
//!
//! [params]
//! alpha = 0.5
//! beta = 0.5
//!
//! [eval]
//! times = 0, 0.1
//! points = 0.3 0.4; -0.2 0.1
//! ```
//!
//! Sections and keys:
//!
//! * `[flow]` `kind` (conformal, cone, convex-euclidean, poincare, cigar,
//!   warped, warped-general), `potential` (`const c`, `exp c`,
//!   `linear a b`, `steady`), `base` (`euclidean n`, `sphere n`,
//!   `hyperbolic n`), `n`, `e` (`const c`, `bump a w`), `k`, `profile`
//!   (`sn k`, `power p`).
//! * `[params]` `alpha`, `beta`.
//! * `[eval]` `t`, `times`, `point`, `points`, `tol`, `ladder`, `c`.
//! * `[diff]` `step`, `order`, `richardson`.
//! * `[grid]` `initial` (`cigar`, `bump a`, `waves a`, `constant c`),
//!   `chart` (cartesian, parabolic), `shape`, `lower`, `upper`, `bc`
//!   (periodic, dirichlet-frozen, dirichlet-exact).
//! * `[solver]` `dt`, `steps`, `scheme` (explicit-euler, rk4,
//!   semi-implicit), `cfl_guard`, `snapshot_every`.
//! * `[probes]` `points` as `t c1 c2` triples separated by `;`.
//! * `[output]` `dir`, `prefix`.

use std::fmt;
use std::path::PathBuf;

use crate::diff::DiffSpec;
use crate::error::Error;
use crate::flows::{cigar_steady_potential, BaseMetric, FlowKind, IsothermalFactor, Potential, SnK, WarpProfile};
use crate::pde::{Chart, Probe, Scheme};
use crate::ry::RyParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type ConfigResult<T> = Result<T, ConfigError>;

fn err_at(line: Option<usize>, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line, key: Some(key.into()), message: message.into() }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["command"]),
    ("flow", &["kind", "potential", "base", "n", "e", "k", "profile"]),
    ("params", &["alpha", "beta"]),
    ("eval", &["t", "times", "point", "points", "tol", "ladder", "c"]),
    ("diff", &["step", "order", "richardson"]),
    ("grid", &["initial", "chart", "shape", "lower", "upper", "bc"]),
    ("solver", &["dt", "steps", "scheme", "cfl_guard", "snapshot_every"]),
    ("probes", &["points"]),
    ("output", &["dir", "prefix"]),
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: Option<usize>,
}

/// The raw key-value document, before typing. Overrides act on this level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    entries: Vec<Entry>,
}

impl Document {
    pub fn parse(text: &str) -> ConfigResult<Self> {
        let mut section = String::new();
        let mut doc = Document::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = Some(idx + 1);
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError { line, key: None, message: format!("malformed section header {content:?}") })?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                    return Err(ConfigError { line, key: None, message: format!("unknown section [{name}]") });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError { line, key: None, message: format!("expected `key = value`, got {content:?}") })?;
            doc.set_at(&section, key.trim(), value.trim(), line)?;
        }
        Ok(doc)
    }

    fn set_at(&mut self, section: &str, key: &str, value: &str, line: Option<usize>) -> ConfigResult<()> {
        let allowed = SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, keys)| *keys).unwrap_or(&[]);
        let full = full_key(section, key);
        if !allowed.contains(&key) {
            return Err(err_at(line, &full, "unknown key"));
        }
        if let Some(existing) = self.entries.iter_mut().find(|e| e.section == section && e.key == key) {
            if line.is_some() && existing.line.is_some() {
                return Err(err_at(line, &full, format!("duplicate key (first set on line {})", existing.line.unwrap())));
            }
            existing.value = value.to_string();
            existing.line = line;
        } else {
            self.entries.push(Entry { section: section.into(), key: key.into(), value: value.into(), line });
        }
        Ok(())
    }

    /// Applies a `section.key=value` (or `key=value` for top-level keys) override.
    pub fn apply_override(&mut self, assignment: &str) -> ConfigResult<()> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError { line: None, key: None, message: format!("override {assignment:?} is not key=value") })?;
        let (section, key) = path.trim().rsplit_once('.').unwrap_or(("", path.trim()));
        if !SECTIONS.iter().any(|(s, _)| *s == section) {
            return Err(ConfigError { line: None, key: Some(path.trim().into()), message: "unknown section".into() });
        }
        self.set_at(section, key, value.trim(), None)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.section == section && e.key == key)
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.iter().any(|e| e.section == section)
    }
}

fn full_key(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

/// Typed reads from a [`Document`], with errors that name the key and line.
struct Reader<'a> {
    doc: &'a Document,
    section: &'a str,
}

impl<'a> Reader<'a> {
    fn raw(&self, key: &str) -> Option<(&'a str, Option<usize>)> {
        self.doc.get(self.section, key).map(|e| (e.value.as_str(), e.line))
    }

    fn fail(&self, key: &str, line: Option<usize>, message: impl Into<String>) -> ConfigError {
        err_at(line, &full_key(self.section, key), message)
    }

    fn parse<T>(&self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> ConfigResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => f(v).map(Some).map_err(|m| self.fail(key, line, m)),
        }
    }

    fn f64(&self, key: &str) -> ConfigResult<Option<f64>> {
        self.parse(key, parse_f64)
    }

    fn usize(&self, key: &str) -> ConfigResult<Option<usize>> {
        self.parse(key, |v| v.parse::<usize>().map_err(|_| format!("expected a non-negative integer, got {v:?}")))
    }

    fn bool(&self, key: &str) -> ConfigResult<Option<bool>> {
        self.parse(key, |v| match v {
            "true" | "yes" | "on" => Ok(true),
            "false" | "no" | "off" => Ok(false),
            _ => Err(format!("expected true or false, got {v:?}")),
        })
    }

    fn list(&self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        self.parse(key, parse_list)
    }

    fn required<T>(&self, key: &str, value: Option<T>) -> ConfigResult<T> {
        value.ok_or_else(|| self.fail(key, None, "required"))
    }

    fn check(&self, key: &str, ok: bool, message: impl Into<String>) -> ConfigResult<()> {
        if ok {
            Ok(())
        } else {
            Err(self.fail(key, self.raw(key).and_then(|(_, l)| l), message))
        }
    }
}

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v.trim().parse().map_err(|_| format!("expected a number, got {v:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{v} is not finite"))
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(parse_f64).collect()
}

fn parse_groups(v: &str) -> Result<Vec<Vec<f64>>, String> {
    v.split(';').map(str::trim).filter(|s| !s.is_empty()).map(parse_list).collect()
}

fn words(v: &str) -> Vec<&str> {
    v.split_whitespace().collect()
}

fn num(s: Option<&&str>, what: &str) -> Result<f64, String> {
    parse_f64(s.ok_or_else(|| format!("missing {what}"))?)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
}

fn fmt_groups(groups: &[Vec<f64>]) -> String {
    groups.iter().map(|g| g.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Curvature,
    RyEval,
    Classify,
    Verify,
    FlowRun,
    Residuals,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Curvature => "curvature",
            Self::RyEval => "ry-eval",
            Self::Classify => "classify",
            Self::Verify => "verify",
            Self::FlowRun => "flow-run",
            Self::Residuals => "residuals",
        }
    }

    fn parse(v: &str) -> Result<Self, String> {
        Ok(match v {
            "curvature" => Self::Curvature,
            "ry-eval" => Self::RyEval,
            "classify" => Self::Classify,
            "verify" => Self::Verify,
            "flow-run" => Self::FlowRun,
            "residuals" => Self::Residuals,
            _ => return Err(format!("unknown command {v:?}")),
        })
    }

    fn needs_flow(&self) -> bool {
        matches!(self, Self::Curvature | Self::RyEval | Self::Classify | Self::Verify)
    }
}

/// Time profile `f(t)` as written in a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    Constant(f64),
    Exponential(f64),
    Linear(f64, f64),
    /// `e^{4(α+β)t}`, the steady cigar profile.
    Steady,
}

impl PotentialSpec {
    fn parse(v: &str) -> Result<Self, String> {
        let w = words(v);
        Ok(match w.first().copied() {
            Some("const") => Self::Constant(num(w.get(1), "constant")?),
            Some("exp") => Self::Exponential(num(w.get(1), "rate")?),
            Some("linear") => Self::Linear(num(w.get(1), "intercept")?, num(w.get(2), "slope")?),
            Some("steady") => Self::Steady,
            _ => return Err(format!("expected const c | exp c | linear a b | steady, got {v:?}")),
        })
    }

    fn render(&self) -> String {
        match self {
            Self::Constant(c) => format!("const {}", fmt_f64(*c)),
            Self::Exponential(c) => format!("exp {}", fmt_f64(*c)),
            Self::Linear(a, b) => format!("linear {} {}", fmt_f64(*a), fmt_f64(*b)),
            Self::Steady => "steady".into(),
        }
    }

    pub fn resolve(&self, params: &RyParams) -> Potential {
        match *self {
            Self::Constant(c) => Potential::Constant(c),
            Self::Exponential(rate) => Potential::Exponential { rate },
            Self::Linear(intercept, slope) => Potential::Linear { intercept, slope },
            Self::Steady => cigar_steady_potential(params),
        }
    }
}

fn parse_base(v: &str) -> Result<BaseMetric, String> {
    let w = words(v);
    let n = match w.get(1) {
        Some(s) => s.parse::<usize>().map_err(|_| format!("bad dimension {s:?}"))?,
        None => 2,
    };
    Ok(match w.first().copied() {
        Some("euclidean") => BaseMetric::Euclidean { n },
        Some("sphere") => BaseMetric::Sphere { n },
        Some("hyperbolic") => BaseMetric::Hyperbolic { n },
        _ => return Err(format!("expected euclidean | sphere | hyperbolic [n], got {v:?}")),
    })
}

fn render_base(b: &BaseMetric) -> String {
    match b {
        BaseMetric::Euclidean { n } => format!("euclidean {n}"),
        BaseMetric::Sphere { n } => format!("sphere {n}"),
        BaseMetric::Hyperbolic { n } => format!("hyperbolic {n}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorSpec {
    Constant(f64),
    Bump { amplitude: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowSpec {
    Conformal { f: PotentialSpec, base: BaseMetric },
    Cone { base: BaseMetric },
    ConvexEuclidean { e: FactorSpec },
    Poincare { n: usize },
    Cigar { f: PotentialSpec },
    Warped { f: PotentialSpec, k: f64 },
    WarpedGeneral { f: PotentialSpec, profile: WarpProfile },
}

impl FlowSpec {
    pub fn to_kind(&self, params: &RyParams) -> FlowKind {
        match *self {
            Self::Conformal { f, base } => FlowKind::Conformal { f: f.resolve(params), base },
            Self::Cone { base } => FlowKind::Cone { base },
            Self::ConvexEuclidean { e } => FlowKind::ConvexEuclidean {
                e: match e {
                    FactorSpec::Constant(c) => IsothermalFactor::Constant(c),
                    FactorSpec::Bump { amplitude, width } => IsothermalFactor::GaussianBump { amplitude, width },
                },
            },
            Self::Poincare { n } => FlowKind::Poincare { n },
            Self::Cigar { f } => FlowKind::GeneralizedCigar { f: f.resolve(params) },
            Self::Warped { f, k } => FlowKind::WarpedRotSym { f: f.resolve(params), k },
            Self::WarpedGeneral { f, profile } => FlowKind::WarpedGeneral { f: f.resolve(params), g: profile },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Conformal { base, .. } | Self::Cone { base } => base.dim(),
            Self::Poincare { n } => *n,
            _ => 2,
        }
    }

    fn read(r: &Reader<'_>) -> ConfigResult<Self> {
        let kind = r.required("kind", r.parse("kind", |v| Ok(v.to_string()))?)?;
        let potential = r.parse("potential", PotentialSpec::parse)?;
        let base = r.parse("base", parse_base)?.unwrap_or(BaseMetric::Euclidean { n: 2 });
        let spec = match kind.as_str() {
            "conformal" => Self::Conformal { f: r.required("potential", potential)?, base },
            "cone" => Self::Cone { base },
            "convex-euclidean" => {
                let e = r.parse("e", |v| {
                    let w = words(v);
                    Ok(match w.first().copied() {
                        Some("const") => FactorSpec::Constant(num(w.get(1), "constant")?),
                        Some("bump") => FactorSpec::Bump { amplitude: num(w.get(1), "amplitude")?, width: num(w.get(2), "width")? },
                        _ => return Err(format!("expected const c | bump a w, got {v:?}")),
                    })
                })?;
                Self::ConvexEuclidean { e: r.required("e", e)? }
            }
            "poincare" => Self::Poincare { n: r.usize("n")?.unwrap_or(2) },
            "cigar" => Self::Cigar { f: potential.unwrap_or(PotentialSpec::Steady) },
            "warped" => Self::Warped { f: r.required("potential", potential)?, k: r.f64("k")?.unwrap_or(0.0) },
            "warped-general" => {
                let profile = r.parse("profile", |v| {
                    let w = words(v);
                    Ok(match w.first().copied() {
                        Some("sn") => WarpProfile::SnSquared(SnK::new(num(w.get(1), "k")?)),
                        Some("power") => WarpProfile::Power(num(w.get(1), "exponent")?),
                        _ => return Err(format!("expected sn k | power p, got {v:?}")),
                    })
                })?;
                Self::WarpedGeneral { f: r.required("potential", potential)?, profile: r.required("profile", profile)? }
            }
            other => {
                return Err(r.fail("kind", r.raw("kind").and_then(|(_, l)| l), format!("unknown flow kind {other:?}")))
            }
        };
        if matches!(potential, Some(PotentialSpec::Steady)) && !matches!(spec, Self::Cigar { .. }) {
            return Err(r.fail("potential", r.raw("potential").and_then(|(_, l)| l), "steady applies to the cigar flow only"));
        }
        Ok(spec)
    }

    fn render(&self, out: &mut Vec<String>) {
        let mut kv = |k: &str, v: String| out.push(format!("{k} = {v}"));
        match self {
            Self::Conformal { f, base } => {
                kv("kind", "conformal".into());
                kv("potential", f.render());
                kv("base", render_base(base));
            }
            Self::Cone { base } => {
                kv("kind", "cone".into());
                kv("base", render_base(base));
            }
            Self::ConvexEuclidean { e } => {
                kv("kind", "convex-euclidean".into());
                kv(
                    "e",
                    match e {
                        FactorSpec::Constant(c) => format!("const {}", fmt_f64(*c)),
                        FactorSpec::Bump { amplitude, width } => format!("bump {} {}", fmt_f64(*amplitude), fmt_f64(*width)),
                    },
                );
            }
            Self::Poincare { n } => {
                kv("kind", "poincare".into());
                kv("n", n.to_string());
            }
            Self::Cigar { f } => {
                kv("kind", "cigar".into());
                kv("potential", f.render());
            }
            Self::Warped { f, k } => {
                kv("kind", "warped".into());
                kv("potential", f.render());
                kv("k", fmt_f64(*k));
            }
            Self::WarpedGeneral { f, profile } => {
                kv("kind", "warped-general".into());
                kv("potential", f.render());
                kv(
                    "profile",
                    match profile {
                        WarpProfile::SnSquared(sn) => format!("sn {}", fmt_f64(sn.k)),
                        WarpProfile::Power(p) => format!("power {}", fmt_f64(*p)),
                    },
                );
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSpec {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Verdict tolerance for residuals and the steady band.
    pub tol: f64,
    /// Step ladder for convergence checks, strictly decreasing.
    pub ladder: Vec<f64>,
    /// Potential rate used by the residual and ledger samples.
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `−ln(1 + c1² + c2²)` in Cartesian coordinates.
    Cigar,
    /// `a·exp(−(c1² + c2²))`.
    Bump(f64),
    /// `a·(sin c1 · cos c2 + ½ cos(2 c1 + c2))`.
    Waves(f64),
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySpec {
    Periodic,
    DirichletFrozen,
    /// Exact cigar values; requires cigar initial data.
    DirichletExact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub initial: InitialData,
    pub chart: Chart,
    pub shape: [usize; 2],
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub bc: BoundarySpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub cfl_guard: bool,
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub flow: Option<FlowSpec>,
    pub params: RyParams,
    pub eval: EvalSpec,
    pub diff: DiffSpec,
    pub grid: Option<GridSpec>,
    pub solver: Option<SolverSpec>,
    pub probes: Vec<Probe>,
    pub output: OutputSpec,
}

fn pair(r: &Reader<'_>, key: &str, xs: Option<Vec<f64>>) -> ConfigResult<Option<[f64; 2]>> {
    match xs {
        None => Ok(None),
        Some(v) if v.len() == 2 => Ok(Some([v[0], v[1]])),
        Some(v) => Err(r.fail(key, r.raw(key).and_then(|(_, l)| l), format!("expected two values, got {}", v.len()))),
    }
}

fn parse_scheme(v: &str) -> Result<Scheme, String> {
    Ok(match v {
        "explicit-euler" => Scheme::ExplicitEuler,
        "rk4" => Scheme::Rk4,
        "semi-implicit" => Scheme::SemiImplicit,
        _ => return Err(format!("expected explicit-euler | rk4 | semi-implicit, got {v:?}")),
    })
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::ExplicitEuler => "explicit-euler",
        Scheme::Rk4 => "rk4",
        Scheme::SemiImplicit => "semi-implicit",
    }
}

impl RunConfig {
    pub fn from_document(doc: &Document) -> ConfigResult<Self> {
        let top = Reader { doc, section: "" };
        let command = top.required("command", top.parse("command", Command::parse)?)?;

        let params_r = Reader { doc, section: "params" };
        let alpha = params_r.f64("alpha")?.unwrap_or(1.0);
        let beta = params_r.f64("beta")?.unwrap_or(0.0);
        let params = RyParams::new(alpha, beta).map_err(|e| err_at(None, "params", e.to_string()))?;

        let flow = if doc.has_section("flow") {
            Some(FlowSpec::read(&Reader { doc, section: "flow" })?)
        } else if command.needs_flow() {
            return Err(err_at(None, "flow.kind", format!("required by the {} command", command.name())));
        } else {
            None
        };

        let ev = Reader { doc, section: "eval" };
        let mut times = ev.list("times")?.unwrap_or_default();
        if let Some(t) = ev.f64("t")? {
            times.insert(0, t);
        }
        if times.is_empty() {
            times.push(0.0);
        }
        let mut points = ev.parse("points", parse_groups)?.unwrap_or_default();
        if let Some(p) = ev.list("point")? {
            points.insert(0, p);
        }
        let n = flow.as_ref().map_or(2, FlowSpec::dim);
        if points.is_empty() {
            points.push(vec![0.5; n]);
        }
        if let Some(bad) = points.iter().find(|p| p.len() != n) {
            return Err(ev.fail("points", None, format!("point {bad:?} does not have dimension {n}")));
        }
        let tol = ev.f64("tol")?.unwrap_or(1e-6);
        ev.check("tol", tol > 0.0, "must be positive")?;
        let ladder = ev.list("ladder")?.unwrap_or_else(|| vec![0.04, 0.02, 0.01]);
        ev.check(
            "ladder",
            !ladder.is_empty() && ladder.iter().all(|h| *h > 0.0) && ladder.windows(2).all(|w| w[1] < w[0]),
            "must be positive and strictly decreasing",
        )?;
        let c = ev.f64("c")?.unwrap_or(2.0);
        let eval = EvalSpec { times, points, tol, ladder, c };

        let dr = Reader { doc, section: "diff" };
        let default = DiffSpec::default();
        let diff = DiffSpec {
            step: dr.f64("step")?.unwrap_or(default.step),
            order: match dr.usize("order")? {
                Some(o) => u8::try_from(o).map_err(|_| dr.fail("order", None, "must be 2 or 4"))?,
                None => default.order,
            },
            richardson: dr.bool("richardson")?.unwrap_or(default.richardson),
        };
        diff.validate().map_err(|e| dr.fail("step", dr.raw("step").and_then(|(_, l)| l), e.to_string()))?;

        let grid = if doc.has_section("grid") || command == Command::FlowRun {
            let g = Reader { doc, section: "grid" };
            let initial = g
                .parse("initial", |v| {
                    let w = words(v);
                    Ok(match w.first().copied() {
                        Some("cigar") => InitialData::Cigar,
                        Some("bump") => InitialData::Bump(num(w.get(1), "amplitude")?),
                        Some("waves") => InitialData::Waves(num(w.get(1), "amplitude")?),
                        Some("constant") => InitialData::Constant(num(w.get(1), "value")?),
                        _ => return Err(format!("expected cigar | bump a | waves a | constant c, got {v:?}")),
                    })
                })?
                .unwrap_or(InitialData::Cigar);
            let chart = g
                .parse("chart", |v| match v {
                    "cartesian" => Ok(Chart::Cartesian),
                    "parabolic" => Ok(Chart::ParabolicUV),
                    _ => Err(format!("time stepping supports cartesian | parabolic, got {v:?}")),
                })?
                .unwrap_or(Chart::Cartesian);
            let shape = match g.list("shape")? {
                None => [41, 41],
                Some(v) => {
                    let ok = v.len() == 2 && v.iter().all(|x| x.fract() == 0.0 && *x >= crate::pde::MIN_NODES as f64);
                    g.check("shape", ok, format!("expected two integers >= {}", crate::pde::MIN_NODES))?;
                    [v[0] as usize, v[1] as usize]
                }
            };
            let lower = pair(&g, "lower", g.list("lower")?)?.unwrap_or([-2.0, -2.0]);
            let upper = pair(&g, "upper", g.list("upper")?)?.unwrap_or([2.0, 2.0]);
            g.check("upper", upper[0] > lower[0] && upper[1] > lower[1], "must exceed grid.lower")?;
            let bc = g
                .parse("bc", |v| match v {
                    "periodic" => Ok(BoundarySpec::Periodic),
                    "dirichlet-frozen" => Ok(BoundarySpec::DirichletFrozen),
                    "dirichlet-exact" => Ok(BoundarySpec::DirichletExact),
                    _ => Err(format!("expected periodic | dirichlet-frozen | dirichlet-exact, got {v:?}")),
                })?
                .unwrap_or(BoundarySpec::DirichletFrozen);
            g.check(
                "bc",
                bc != BoundarySpec::DirichletExact || (initial == InitialData::Cigar && chart == Chart::Cartesian),
                "exact boundary values need cigar initial data on the cartesian chart",
            )?;
            Some(GridSpec { initial, chart, shape, lower, upper, bc })
        } else {
            None
        };

        let solver = if doc.has_section("solver") || command == Command::FlowRun {
            let s = Reader { doc, section: "solver" };
            let dt = s.required("dt", s.f64("dt")?)?;
            s.check("dt", dt > 0.0, "must be positive")?;
            let steps = s.usize("steps")?.unwrap_or(1);
            let snapshot_every = s.usize("snapshot_every")?.unwrap_or(steps.max(1));
            s.check("snapshot_every", snapshot_every >= 1, "must be at least 1")?;
            Some(SolverSpec {
                dt,
                steps,
                scheme: s.parse("scheme", parse_scheme)?.unwrap_or(Scheme::Rk4),
                cfl_guard: s.bool("cfl_guard")?.unwrap_or(true),
                snapshot_every,
            })
        } else {
            None
        };

        let pr = Reader { doc, section: "probes" };
        let probes = pr
            .parse("points", parse_groups)?
            .unwrap_or_default()
            .into_iter()
            .map(|g| {
                if g.len() == 3 {
                    Ok(Probe { t: g[0], coord1: g[1], coord2: g[2] })
                } else {
                    Err(pr.fail("points", pr.raw("points").and_then(|(_, l)| l), "each probe is `t c1 c2`"))
                }
            })
            .collect::<ConfigResult<Vec<_>>>()?;

        let out = Reader { doc, section: "output" };
        let output = OutputSpec {
            dir: PathBuf::from(out.parse("dir", |v| Ok(v.to_string()))?.unwrap_or_else(|| "rylab-out".into())),
            prefix: out.parse("prefix", |v| Ok(v.to_string()))?.unwrap_or_else(|| command.name().into()),
        };
        out.check("prefix", !output.prefix.is_empty() && !output.prefix.contains(['/', '\\']), "must be a plain file stem")?;

        Ok(Self { command, flow, params, eval, diff, grid, solver, probes, output })
    }

    /// Canonical text form; `parse_config(render(c)) == c`.
    pub fn render(&self) -> String {
        let mut lines = vec![format!("command = {}", self.command.name())];
        if let Some(flow) = &self.flow {
            lines.push(String::new());
            lines.push("[flow]".into());
            flow.render(&mut lines);
        }
        lines.push(String::new());
        lines.push("[params]".into());
        lines.push(format!("alpha = {}", fmt_f64(self.params.alpha)));
        lines.push(format!("beta = {}", fmt_f64(self.params.beta)));

        lines.push(String::new());
        lines.push("[eval]".into());
        lines.push(format!("times = {}", fmt_list(&self.eval.times)));
        if !self.eval.points.is_empty() {
            lines.push(format!("points = {}", fmt_groups(&self.eval.points)));
        }
        lines.push(format!("tol = {}", fmt_f64(self.eval.tol)));
        lines.push(format!("ladder = {}", fmt_list(&self.eval.ladder)));
        lines.push(format!("c = {}", fmt_f64(self.eval.c)));

        lines.push(String::new());
        lines.push("[diff]".into());
        lines.push(format!("step = {}", fmt_f64(self.diff.step)));
        lines.push(format!("order = {}", self.diff.order));
        lines.push(format!("richardson = {}", self.diff.richardson));

        if let Some(g) = &self.grid {
            lines.push(String::new());
            lines.push("[grid]".into());
            lines.push(format!(
                "initial = {}",
                match g.initial {
                    InitialData::Cigar => "cigar".to_string(),
                    InitialData::Bump(a) => format!("bump {}", fmt_f64(a)),
                    InitialData::Waves(a) => format!("waves {}", fmt_f64(a)),
                    InitialData::Constant(c) => format!("constant {}", fmt_f64(c)),
                }
            ));
            lines.push(format!("chart = {}", g.chart.name()));
            lines.push(format!("shape = {}, {}", g.shape[0], g.shape[1]));
            lines.push(format!("lower = {}", fmt_list(&g.lower)));
            lines.push(format!("upper = {}", fmt_list(&g.upper)));
            lines.push(format!(
                "bc = {}",
                match g.bc {
                    BoundarySpec::Periodic => "periodic",
                    BoundarySpec::DirichletFrozen => "dirichlet-frozen",
                    BoundarySpec::DirichletExact => "dirichlet-exact",
                }
            ));
        }
        if let Some(s) = &self.solver {
            lines.push(String::new());
            lines.push("[solver]".into());
            lines.push(format!("dt = {}", fmt_f64(s.dt)));
            lines.push(format!("steps = {}", s.steps));
            lines.push(format!("scheme = {}", scheme_name(s.scheme)));
            lines.push(format!("cfl_guard = {}", s.cfl_guard));
            lines.push(format!("snapshot_every = {}", s.snapshot_every));
        }
        if !self.probes.is_empty() {
            lines.push(String::new());
            lines.push("[probes]".into());
            let groups: Vec<Vec<f64>> = self.probes.iter().map(|p| vec![p.t, p.coord1, p.coord2]).collect();
            lines.push(format!("points = {}", fmt_groups(&groups)));
        }
        lines.push(String::new());
        lines.push("[output]".into());
        lines.push(format!("dir = {}", self.output.dir.display()));
        lines.push(format!("prefix = {}", self.output.prefix));
        lines.push(String::new());
        lines.join("\n")
    }
}

pub fn parse_config(text: &str) -> ConfigResult<RunConfig> {
    RunConfig::from_document(&Document::parse(text)?)
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError { line: None, key: None, message: e.to_string() }
    }
}
