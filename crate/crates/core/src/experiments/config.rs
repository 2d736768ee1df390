use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{EnvironmentLaw, LawKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentKind {
    Lclt,
    CovarianceLimits,
    WickScaling,
    Gmc,
    Gibbs,
    GreenBounds,
    Ergodic,
    HeatKernel,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Lclt,
        ExperimentKind::CovarianceLimits,
        ExperimentKind::WickScaling,
        ExperimentKind::Gmc,
        ExperimentKind::Gibbs,
        ExperimentKind::GreenBounds,
        ExperimentKind::Ergodic,
        ExperimentKind::HeatKernel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Lclt => "lclt",
            ExperimentKind::CovarianceLimits => "covariance-limits",
            ExperimentKind::WickScaling => "wick-scaling",
            ExperimentKind::Gmc => "gmc",
            ExperimentKind::Gibbs => "gibbs",
            ExperimentKind::GreenBounds => "green-bounds",
            ExperimentKind::Ergodic => "ergodic",
            ExperimentKind::HeatKernel => "heatkernel",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// A test function on the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFunction {
    Zero,
    One,
    /// Smooth bump `exp(1 − 1/(1 − |x − c|²/r²))`, equal to 1 at the centre.
    Bump { center: [f64; 2], radius: f64 },
    /// Indicator of `[x0, x1) × [y0, y1)`.
    Box { lo: [f64; 2], hi: [f64; 2] },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64; 2]) -> f64 {
        match *self {
            TestFunction::Zero => 0.0,
            TestFunction::One => 1.0,
            TestFunction::Bump { center, radius } => {
                let q = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (radius * radius);
                if q < 1.0 {
                    (1.0 - 1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            }
            TestFunction::Box { lo, hi } => {
                let inside = (0..2).all(|k| x[k] >= lo[k] && x[k] < hi[k]);
                f64::from(u8::from(inside))
            }
        }
    }

    /// Values at the midpoints of the `r⁻¹`-grid.
    pub fn grid(&self, r: usize) -> Vec<f64> {
        crate::wick::sample_on_grid(r, |x| self.eval(x))
    }

    /// Distance from the support to the boundary of the unit square.
    pub fn boundary_clearance(&self) -> f64 {
        match *self {
            TestFunction::Zero => f64::INFINITY,
            TestFunction::One => 0.0,
            TestFunction::Bump { center, radius } => {
                center.iter().map(|c| c.min(1.0 - c)).fold(f64::INFINITY, f64::min) - radius
            }
            TestFunction::Box { lo, hi } => lo[0].min(lo[1]).min(1.0 - hi[0]).min(1.0 - hi[1]),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Zero => write!(f, "zero"),
            TestFunction::One => write!(f, "one"),
            TestFunction::Bump { center, radius } => write!(f, "bump {} {} {}", center[0], center[1], radius),
            TestFunction::Box { lo, hi } => write!(f, "box {} {} {} {}", lo[0], hi[0], lo[1], hi[1]),
        }
    }
}

impl FromStr for TestFunction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut parts = s.split_whitespace();
        let head = parts.next().ok_or("empty test function")?;
        let nums: Vec<f64> = parts
            .map(|p| p.parse::<f64>().map_err(|e| format!("bad number `{p}` in `{s}`: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let arity = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(format!("`{head}` takes {k} numbers, got {}", nums.len()))
            }
        };
        match head {
            "zero" | "0" => arity(0).map(|_| TestFunction::Zero),
            "one" | "1" => arity(0).map(|_| TestFunction::One),
            "bump" => {
                arity(3)?;
                if nums[2] <= 0.0 {
                    return Err("bump radius must be positive".into());
                }
                Ok(TestFunction::Bump { center: [nums[0], nums[1]], radius: nums[2] })
            }
            "box" => {
                arity(4)?;
                if nums[0] >= nums[1] || nums[2] >= nums[3] {
                    return Err(format!("empty box `{s}`"));
                }
                Ok(TestFunction::Box { lo: [nums[0], nums[2]], hi: [nums[1], nums[3]] })
            }
            other => Err(format!("unknown test function `{other}`")),
        }
    }
}

/// The scalar settings shared by all experiments, plus experiment-specific
/// keys kept as raw strings.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub path: PathBuf,
    pub experiment: ExperimentKind,
    pub d: usize,
    pub laws: Vec<EnvironmentLaw>,
    pub ns: Vec<usize>,
    pub eps: Vec<f64>,
    pub delta: Option<f64>,
    pub gamma: f64,
    pub f_name: String,
    pub s: Option<f64>,
    pub f: TestFunction,
    pub g: TestFunction,
    pub replicas: usize,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    extras: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (csv or json)")),
        }
    }
}

const SHARED_KEYS: &[&str] = &[
    "experiment", "d", "law", "p", "w0", "alpha", "n", "eps", "delta", "gamma", "F", "s", "f", "g", "replicas",
    "seeds", "out", "format",
];

const EXTRA_KEYS: &[&str] = &[
    "k", "grid", "target_r", "smear_r", "limits", "c_hat", "set", "V", "sources", "dense_max", "distances",
    "t_points", "half_widths", "baseline_L", "baseline_seed", "observable", "cap",
];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: format!("cannot read: {e}"),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |message: String| Error::Config { path: path.to_path_buf(), message };
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected key=value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !SHARED_KEYS.contains(&k) && !EXTRA_KEYS.contains(&k) {
                return Err(err(format!("line {}: unknown key `{k}`", lineno + 1)));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(err(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
        }
        let take = |k: &str| map.get(k).map(String::as_str);
        let experiment: ExperimentKind = take("experiment")
            .ok_or_else(|| err("missing `experiment`".into()))?
            .parse()
            .map_err(err)?;
        let d = scalar(take("d"), 2usize).map_err(err)?;
        if !(2..=3).contains(&d) {
            return Err(err(format!("d = {d} is not supported (2 or 3)")));
        }

        let kind = take("law").unwrap_or("bernoulli");
        let ps: Vec<f64> = list(take("p")).map_err(err)?;
        let w0 = scalar(take("w0"), 1.0).map_err(err)?;
        let alpha = scalar(take("alpha"), 3.0).map_err(err)?;
        let ps = if ps.is_empty() { vec![1.0] } else { ps };
        let laws: Vec<EnvironmentLaw> = ps
            .iter()
            .map(|&p| match kind {
                "bernoulli" => Ok(EnvironmentLaw::bernoulli(p, w0, 0)),
                "pareto" => Ok(EnvironmentLaw::pareto(p, alpha, w0, 0)),
                "constant" => Ok(EnvironmentLaw::constant(w0, 0)),
                other => Err(format!("unknown law `{other}`")),
            })
            .collect::<std::result::Result<_, _>>()
            .map_err(err)?;
        for law in &laws {
            law.validate().map_err(|e| err(e.to_string()))?;
            if matches!(law.kind, LawKind::Constant { .. }) && ps.len() > 1 {
                return Err(err("a constant law takes no p-list".into()));
            }
        }

        let ns: Vec<usize> = list(take("n")).map_err(err)?;
        if ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(err("n-list must be strictly increasing".into()));
        }
        let eps: Vec<f64> = list(take("eps")).map_err(err)?;
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(err("eps-list must be strictly decreasing".into()));
        }
        if eps.iter().any(|e| !(*e > 0.0)) {
            return Err(err("eps must be positive".into()));
        }
        let delta = take("delta").map(|v| v.parse::<f64>().map_err(|e| format!("delta: {e}"))).transpose().map_err(err)?;
        if experiment == ExperimentKind::Lclt {
            let delta = delta.ok_or_else(|| err("lclt needs `delta`".into()))?;
            let e0 = *eps.first().ok_or_else(|| err("lclt needs `eps`".into()))?;
            if !(e0 < delta) {
                return Err(err(format!("K(eps, delta) needs eps < delta, got eps = {e0}, delta = {delta}")));
            }
            if !(delta < 0.5) {
                return Err(err("K(eps, delta) is empty for delta >= 1/2".into()));
            }
        }
        let seeds = seed_list(take("seeds")).map_err(err)?;
        let test = |k: &str, default: TestFunction| -> Result<TestFunction> {
            take(k).map_or(Ok(default), |v| v.parse().map_err(|e: String| err(format!("{k}: {e}"))))
        };
        let cfg = ExperimentConfig {
            path: path.to_path_buf(),
            experiment,
            d,
            laws,
            ns,
            eps,
            delta,
            gamma: scalar(take("gamma"), 0.0).map_err(err)?,
            f_name: take("F").unwrap_or("id").to_string(),
            s: take("s").map(|v| v.parse::<f64>().map_err(|e| format!("s: {e}"))).transpose().map_err(err)?,
            f: test("f", TestFunction::Bump { center: [0.5, 0.5], radius: 0.25 })?,
            g: test("g", TestFunction::One)?,
            replicas: scalar(take("replicas"), 1000usize).map_err(err)?,
            seeds: if seeds.is_empty() { vec![1] } else { seeds },
            out: take("out").map(PathBuf::from),
            format: take("format").map_or(Ok(OutputFormat::Csv), str::parse).map_err(err)?,
            extras: map
                .iter()
                .filter(|(k, _)| EXTRA_KEYS.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        Ok(cfg)
    }

    pub(crate) fn config_error(&self, message: impl Into<String>) -> Error {
        Error::Config { path: self.path.clone(), message: message.into() }
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extras.get(key).map(String::as_str)
    }

    pub fn extra_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        scalar(self.extra(key), default).map_err(|m| self.config_error(m))
    }

    pub fn extra_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        list(self.extra(key)).map_err(|m| self.config_error(m))
    }

    /// Overrides the seed list, as the command line `--seed` does.
    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_out(mut self, out: PathBuf) -> Self {
        self.out = Some(out);
        self
    }

    pub fn with_format(mut self, format: OutputFormat) -> Self {
        self.format = format;
        self
    }

    /// The largest scale, or a config error if the n-list is empty.
    pub(crate) fn n_max(&self) -> Result<usize> {
        self.ns.last().copied().ok_or_else(|| self.config_error("missing `n`"))
    }
}

fn scalar<T: FromStr>(v: Option<&str>, default: T) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    match v {
        None => Ok(default),
        Some(s) => s.parse::<T>().map_err(|e| format!("bad value `{s}`: {e}")),
    }
}

fn list<T: FromStr>(v: Option<&str>) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    match v {
        None => Ok(Vec::new()),
        Some(s) => s
            .split(',')
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("bad list entry `{}`: {e}", p.trim())))
            .collect(),
    }
}

/// `1,2,5` or the inclusive range `1..10`.
fn seed_list(v: Option<&str>) -> std::result::Result<Vec<u64>, String> {
    match v {
        Some(s) if s.contains("..") => {
            let (a, b) = s.split_once("..").expect("checked");
            let a: u64 = a.trim().parse().map_err(|e| format!("bad seed range `{s}`: {e}"))?;
            let b: u64 = b.trim().parse().map_err(|e| format!("bad seed range `{s}`: {e}"))?;
            if b < a {
                return Err(format!("empty seed range `{s}`"));
            }
            Ok((a..=b).collect())
        }
        other => list(other),
    }
}
