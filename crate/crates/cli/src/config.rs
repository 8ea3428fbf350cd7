//! Flat `key = value` configuration from a file and `--key value` flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    EstimateSup,
    EstimatePickands,
    VerifyTail,
    VerifyIdentities,
    Report,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::EstimateSup,
        Command::EstimatePickands,
        Command::VerifyTail,
        Command::VerifyIdentities,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::EstimateSup => "estimate-sup",
            Command::EstimatePickands => "estimate-pickands",
            Command::VerifyTail => "verify-tail",
            Command::VerifyIdentities => "verify-identities",
            Command::Report => "report",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn summary(self) -> &'static str {
        match self {
            Command::Simulate => "write one simulated path as t,value rows",
            Command::EstimateSup => "estimate P(max X > z) on a grid by several methods",
            Command::EstimatePickands => "estimate Pickands constants over a parameter sweep",
            Command::VerifyTail => "tail-ratio trend and conditional-limit checks",
            Command::VerifyIdentities => "cross-check the exceedance and shift identities",
            Command::Report => "merge result files into one table",
        }
    }
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Line { file: PathBuf, line: usize },
    Flag(String),
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line { file, line } => write!(f, "{}:{line}", file.display()),
            Origin::Flag(name) => write!(f, "flag --{name}"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: unknown key `{key}` for command {command}")]
    UnknownKey { origin: Origin, key: String, command: &'static str },
    #[error("{origin}: `{key}` = `{value}`: {reason}")]
    BadValue { origin: Origin, key: String, value: String, reason: String },
    #[error("missing required key `{key}`{context}")]
    Missing { key: String, context: String },
    #[error("{origin}: {reason}")]
    Syntax { origin: Origin, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    /// Real in the interval given by `(low, low_inclusive, high, high_inclusive)`.
    Real(f64, bool, f64, bool),
    /// Integer at least the given value.
    Count(u64),
    Choice(&'static [&'static str]),
    /// Comma-separated reals, each in the given interval.
    Reals(f64, bool, f64, bool),
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    /// `None` marks an optional key without default.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const INF: f64 = f64::INFINITY;
const ALPHA: Kind = Kind::Real(0.0, false, 2.0, true);
const POSITIVE: Kind = Kind::Real(0.0, false, INF, false);
const NONNEG: Kind = Kind::Real(0.0, true, INF, false);
const ANY: Kind = Kind::Real(-INF, false, INF, false);
const MODELS: &[&str] = &["powered_exponential", "generalized_cauchy"];

const fn p(key: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> Param {
    Param { key, kind, default, help }
}

/// Options shared by every command; excluded from the config digest.
pub const RUN_KEYS: &[Param] = &[
    p("seed", Kind::Count(0), Some("1"), "master seed"),
    p("workers", Kind::Count(1), Some("1"), "worker threads"),
    p("reduction", Kind::Choice(&["sequential", "parallel"]), Some("sequential"), "sequential folds replicates in order (bitwise reproducible for any worker count)"),
    p("format", Kind::Choice(&["json", "csv"]), Some("json"), "output format"),
];

const SIMULATE: &[Param] = &[
    p("process", Kind::Choice(&["drifted", "fbm", "stationary", "conditional"]), Some("drifted"), "process to simulate"),
    p("alpha", ALPHA, Some("1.5"), "index alpha in (0, 2]"),
    p("model", Kind::Choice(MODELS), Some("powered_exponential"), "correlation model of stationary processes"),
    p("c", POSITIVE, Some("1"), "local constant: 1 - r(t) ~ c |t|^alpha"),
    p("delta", POSITIVE, Some("0.05"), "grid spacing"),
    p("points", Kind::Count(1), Some("201"), "number of grid points"),
    p("origin", ANY, Some("0"), "first grid point"),
    p("b", NONNEG, Some("1"), "drift multiplier of the drifted process"),
    p("pivot", Kind::Count(0), Some("0"), "conditioning grid index (conditional)"),
    p("z", ANY, None, "conditioning level (required for conditional)"),
];

const ESTIMATE_SUP: &[Param] = &[
    p("method", Kind::Choice(&["all", "discrete", "continuous", "stationary", "naive"]), Some("all"), "estimator"),
    p("model", Kind::Choice(MODELS), Some("powered_exponential"), "correlation model"),
    p("alpha", ALPHA, Some("1"), "index alpha in (0, 2]"),
    p("c", POSITIVE, Some("1"), "local constant"),
    p("points", Kind::Count(1), Some("16"), "number of grid points"),
    p("delta", POSITIVE, None, "grid spacing (default: points cover [0, 1])"),
    p("z", ANY, Some("1.5"), "level"),
    p("weight", Kind::Choice(&["indicator", "exponential", "power"]), Some("indicator"), "sojourn weight f"),
    p("weight_b", NONNEG, Some("1"), "parameter of the exponential or power weight"),
    p("kappa", ANY, None, "weight threshold, at most z (default: z)"),
    p("n", Kind::Count(1), Some("100000"), "replicates"),
];

const ESTIMATE_PICKANDS: &[Param] = &[
    p("method", Kind::Choice(&["auto", "harmonic", "probability", "dieker-yakir", "continuous", "windowed", "ratio", "all"]), Some("auto"), "representation (auto: harmonic for delta > 0, continuous for delta = 0; windowed reports H(T) / T)"),
    p("alpha", Kind::Reals(0.0, false, 2.0, true), Some("2"), "comma-separated alpha values"),
    p("delta", Kind::Reals(0.0, true, INF, false), Some("0"), "comma-separated lattice spacings; 0 is the continuous constant"),
    p("b", Kind::Reals(0.0, true, INF, false), Some("0"), "comma-separated drift multipliers"),
    p("theta", Kind::Reals(0.0, true, INF, false), Some("0"), "comma-separated theta values"),
    p("T", Kind::Real(1.0, true, INF, false), Some("12"), "truncation window half-width"),
    p("window_rule", Kind::Choice(&["fixed", "recommended"]), Some("fixed"), "recommended replaces T by a window adapted to alpha"),
    p("inner_delta", POSITIVE, Some("0.05"), "finest spacing when delta = 0"),
    p("continuum", Kind::Choice(&["extrapolated", "finest"]), Some("extrapolated"), "delta = 0 evaluation"),
    p("n", Kind::Count(2), Some("100000"), "replicates per configuration"),
];

const VERIFY_TAIL: &[Param] = &[
    p("check", Kind::Choice(&["both", "ratio", "limit"]), Some("both"), "which checks to run"),
    p("model", Kind::Choice(MODELS), Some("powered_exponential"), "correlation model"),
    p("alpha", ALPHA, Some("1.5"), "index alpha in (0, 2]"),
    p("c", POSITIVE, Some("1"), "local constant"),
    p("delta", NONNEG, Some("0.25"), "lattice spacing of the limit process"),
    p("levels", Kind::Reals(-INF, false, INF, false), Some("2,3,4,5"), "increasing levels z"),
    p("horizon", Kind::Choice(&["max1z", "power"]), Some("max1z"), "T_z = max(1, z) or scale * z^exponent"),
    p("horizon_scale", POSITIVE, Some("1"), "scale of the power horizon"),
    p("horizon_exponent", ANY, Some("1"), "exponent of the power horizon"),
    p("n", Kind::Count(2), Some("100000"), "replicates per level"),
    p("plugin", Kind::Choice(&["harmonic", "probability"]), Some("harmonic"), "representation for the Pickands constant plug-in"),
    p("plugin_n", Kind::Count(2), Some("100000"), "replicates for the plug-in"),
    p("lags", Kind::Reals(0.0, true, INF, false), Some("0,0.5,1,2"), "lags in units of z^(-2/alpha)"),
    p("limit_n", Kind::Count(2), Some("10000"), "samples per level for the conditional limit"),
];

const VERIFY_IDENTITIES: &[Param] = &[
    p("model", Kind::Choice(MODELS), Some("powered_exponential"), "correlation model"),
    p("alpha", ALPHA, Some("1"), "index alpha in (0, 2]"),
    p("c", POSITIVE, Some("1"), "local constant"),
    p("points", Kind::Count(1), Some("16"), "grid points on [0, 1]"),
    p("z", ANY, Some("1.5"), "level"),
    p("n", Kind::Count(2), Some("100000"), "replicates per estimator"),
    p("shift_alpha", ALPHA, Some("1.5"), "alpha of the shift identity"),
    p("shift_h", Kind::Reals(0.0, true, INF, false), Some("0,0.5,1"), "shifts h"),
    p("shift_x", Kind::Reals(0.0, false, INF, false), Some("1,1,2"), "multipliers x, one per shift"),
];

pub fn params_for(command: Command) -> &'static [Param] {
    match command {
        Command::Simulate => SIMULATE,
        Command::EstimateSup => ESTIMATE_SUP,
        Command::EstimatePickands => ESTIMATE_PICKANDS,
        Command::VerifyTail => VERIFY_TAIL,
        Command::VerifyIdentities => VERIFY_IDENTITIES,
        Command::Report => &[],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Count(u64),
    Text(String),
    Reals(Vec<f64>),
}

impl Value {
    fn canonical(&self) -> String {
        match self {
            Value::Real(x) => format!("{x:?}"),
            Value::Count(n) => n.to_string(),
            Value::Text(s) => s.clone(),
            Value::Reals(v) => v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","),
        }
    }
}

fn in_range(x: f64, lo: f64, lo_in: bool, hi: f64, hi_in: bool) -> bool {
    (if lo_in { x >= lo } else { x > lo }) && (if hi_in { x <= hi } else { x < hi })
}

fn range_text(lo: f64, lo_in: bool, hi: f64, hi_in: bool) -> String {
    format!("{}{lo}, {hi}{}", if lo_in { '[' } else { '(' }, if hi_in { ']' } else { ')' })
}

fn parse_value(param: &Param, raw: &str, origin: &Origin) -> Result<Value, ConfigError> {
    let bad = |reason: String| ConfigError::BadValue {
        origin: origin.clone(),
        key: param.key.to_string(),
        value: raw.to_string(),
        reason,
    };
    let real = |s: &str, lo, lo_in, hi, hi_in| -> Result<f64, ConfigError> {
        let x: f64 = s.trim().parse().map_err(|_| bad(format!("`{s}` is not a number")))?;
        if x.is_nan() || !in_range(x, lo, lo_in, hi, hi_in) {
            return Err(bad(format!("must lie in {}", range_text(lo, lo_in, hi, hi_in))));
        }
        Ok(x)
    };
    match param.kind {
        Kind::Real(lo, lo_in, hi, hi_in) => Ok(Value::Real(real(raw, lo, lo_in, hi, hi_in)?)),
        Kind::Count(min) => {
            let n: u64 = raw.trim().parse().map_err(|_| bad("expected a nonnegative integer".into()))?;
            if n < min {
                return Err(bad(format!("must be at least {min}")));
            }
            Ok(Value::Count(n))
        }
        Kind::Choice(options) => {
            let s = raw.trim();
            if options.contains(&s) {
                Ok(Value::Text(s.to_string()))
            } else {
                Err(bad(format!("expected one of {}", options.join(", "))))
            }
        }
        Kind::Reals(lo, lo_in, hi, hi_in) => {
            let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if items.is_empty() {
                return Err(bad("expected at least one value".into()));
            }
            let v = items.iter().map(|s| real(s, lo, lo_in, hi, hi_in)).collect::<Result<Vec<_>, _>>()?;
            Ok(Value::Reals(v))
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub workers: usize,
    pub parallel_reduction: bool,
    pub out: Option<PathBuf>,
    pub csv: bool,
    /// Input files of `report`.
    pub inputs: Vec<PathBuf>,
}

impl RunConfig {
    pub fn real(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(Value::Real(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn count(&self, key: &str) -> Option<u64> {
        match self.params.get(key) {
            Some(Value::Count(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.params.get(key) {
            Some(Value::Text(s)) => s,
            _ => "",
        }
    }

    pub fn reals(&self, key: &str) -> &[f64] {
        match self.params.get(key) {
            Some(Value::Reals(v)) => v,
            _ => &[],
        }
    }

    /// SHA-256 of the command and every resolved parameter, in key order.
    /// Seed, workers, reduction, output path and format are not part of it.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.name().as_bytes());
        for (k, v) in &self.params {
            h.update(format!("\n{k}={}", v.canonical()).as_bytes());
        }
        hex::encode(h.finalize())
    }
}

struct Setting {
    raw: String,
    origin: Origin,
}

/// Splits file text into `key = value` settings.
fn read_file_settings(text: &str, file: &Path, into: &mut BTreeMap<String, Setting>) -> Result<(), ConfigError> {
    for (i, line) in text.lines().enumerate() {
        let origin = Origin::Line { file: file.to_path_buf(), line: i + 1 };
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { origin, reason: format!("expected `key = value`, got `{content}`") });
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { origin, reason: "empty key".into() });
        }
        into.insert(key.to_string(), Setting { raw: v.trim().to_string(), origin });
    }
    Ok(())
}

/// Parses `<command> [--config FILE] [--key value]... [paths...]`.
pub fn parse_args(args: &[String]) -> Result<RunConfig, ConfigError> {
    let Some(name) = args.first() else {
        return Err(ConfigError::Usage("missing command".into()));
    };
    let command =
        Command::parse(name).ok_or_else(|| ConfigError::Usage(format!("unknown command `{name}`")))?;
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut config_file: Option<PathBuf> = None;
    let mut out: Option<(PathBuf, Origin)> = None;
    let mut inputs = Vec::new();
    let mut it = args[1..].iter();
    while let Some(a) = it.next() {
        if let Some(flag) = a.strip_prefix("--") {
            let (key, value) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| ConfigError::Syntax {
                        origin: Origin::Flag(flag.to_string()),
                        reason: "missing value".into(),
                    })?;
                    (flag.to_string(), v.clone())
                }
            };
            match key.as_str() {
                "config" => config_file = Some(PathBuf::from(value)),
                "out" => out = Some((PathBuf::from(value), Origin::Flag(key))),
                _ => flags.push((key, value)),
            }
        } else if command == Command::Report {
            inputs.push(PathBuf::from(a));
        } else {
            return Err(ConfigError::Usage(format!("unexpected argument `{a}`")));
        }
    }

    let mut settings: BTreeMap<String, Setting> = BTreeMap::new();
    if let Some(file) = &config_file {
        let text = std::fs::read_to_string(file).map_err(|source| ConfigError::Io { path: file.clone(), source })?;
        read_file_settings(&text, file, &mut settings)?;
    }
    for (key, raw) in flags {
        let origin = Origin::Flag(key.clone());
        settings.insert(key, Setting { raw, origin });
    }
    if out.is_none() {
        if let Some(s) = settings.remove("out") {
            out = Some((PathBuf::from(&s.raw), s.origin));
        }
    }

    let table = params_for(command);
    let mut params = BTreeMap::new();
    let mut run = BTreeMap::new();
    for (key, s) in &settings {
        let spec = table
            .iter()
            .chain(RUN_KEYS)
            .find(|p| p.key == key)
            .ok_or_else(|| ConfigError::UnknownKey { origin: s.origin.clone(), key: key.clone(), command: command.name() })?;
        let v = parse_value(spec, &s.raw, &s.origin)?;
        if RUN_KEYS.iter().any(|p| p.key == key) {
            run.insert(key.clone(), v);
        } else {
            params.insert(key.clone(), v);
        }
    }
    for spec in table {
        if !params.contains_key(spec.key) {
            if let Some(d) = spec.default {
                params.insert(spec.key.to_string(), parse_value(spec, d, &Origin::Default)?);
            }
        }
    }
    for spec in RUN_KEYS {
        if !run.contains_key(spec.key) {
            run.insert(spec.key.to_string(), parse_value(spec, spec.default.unwrap_or_default(), &Origin::Default)?);
        }
    }
    let count = |k: &str| match run.get(k) {
        Some(Value::Count(n)) => *n,
        _ => unreachable!("run keys have defaults"),
    };
    let text = |k: &str| match run.get(k) {
        Some(Value::Text(s)) => s.clone(),
        _ => unreachable!("run keys have defaults"),
    };
    let config = RunConfig {
        command,
        params,
        seed: count("seed"),
        workers: count("workers") as usize,
        parallel_reduction: text("reduction") == "parallel",
        out: out.map(|(p, _)| p),
        csv: text("format") == "csv",
        inputs,
    };
    check_requirements(&config)?;
    Ok(config)
}

fn check_requirements(c: &RunConfig) -> Result<(), ConfigError> {
    match c.command {
        Command::Simulate if c.text("process") == "conditional" && c.real("z").is_none() => {
            Err(ConfigError::Missing { key: "z".into(), context: " (process = conditional)".into() })
        }
        Command::Report if c.inputs.is_empty() => {
            Err(ConfigError::Missing { key: "input file".into(), context: " (report needs at least one path)".into() })
        }
        Command::VerifyIdentities if c.reals("shift_h").len() != c.reals("shift_x").len() => {
            Err(ConfigError::BadValue {
                origin: Origin::Default,
                key: "shift_x".into(),
                value: format!("{:?}", c.reals("shift_x")),
                reason: "needs one value per shift_h".into(),
            })
        }
        _ => Ok(()),
    }
}

pub fn usage() -> String {
    let mut s = String::from(
        "usage: sojourn <command> [--config FILE] [--key value]... [--seed N] [--workers K] [--out PATH] [--format json|csv]\n\n\
         Config files hold one `key = value` per line; `#` starts a comment. Flags override the file.\n\ncommands:\n",
    );
    for c in Command::ALL {
        s.push_str(&format!("  {:<18} {}\n", c.name(), c.summary()));
    }
    s.push_str("\nrun `sojourn <command> --help` for its keys and defaults\n");
    s
}

pub fn command_help(command: Command) -> String {
    let mut s = format!("sojourn {}: {}\n\nkeys:\n", command.name(), command.summary());
    let list = |s: &mut String, params: &[Param]| {
        for p in params {
            let default = p.default.map(|d| format!(" [default: {d}]")).unwrap_or_default();
            s.push_str(&format!("  --{:<17} {}{default}\n", p.key, p.help));
        }
    };
    list(&mut s, params_for(command));
    s.push_str("\nrun options:\n  --config           config file\n  --out              output path (default: stdout)\n");
    list(&mut s, RUN_KEYS);
    if command == Command::Report {
        s.push_str("\npositional: result files (JSON or CSV) written by other commands\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn defaults_apply() {
        let c = parse_args(&args(&["estimate-pickands"])).unwrap();
        assert_eq!(c.reals("alpha"), &[2.0]);
        assert_eq!(c.count("n"), Some(100_000));
        assert_eq!(c.seed, 1);
        assert!(!c.csv);
    }

    #[test]
    fn range_errors_name_their_location() {
        let err = parse_args(&args(&["estimate-sup", "--alpha", "3.0"])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("flag --alpha") && msg.contains("(0, 2]"), "{msg}");
        let dir = std::env::temp_dir().join(format!("sojourn-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("c.cfg");
        std::fs::write(&file, "# comment\nz = 2\nalpha = 3.0\n").unwrap();
        let err = parse_args(&args(&["estimate-sup", "--config", file.to_str().unwrap()])).unwrap_err();
        assert!(err.to_string().contains("c.cfg:3"), "{err}");
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        assert!(matches!(
            parse_args(&args(&["simulate", "--colour", "red"])),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(parse_args(&args(&["simulate", "--points", "many"])), Err(ConfigError::BadValue { .. })));
        assert!(matches!(
            parse_args(&args(&["simulate", "--process", "conditional"])),
            Err(ConfigError::Missing { .. })
        ));
    }

    #[test]
    fn flag_order_does_not_change_digest() {
        let a = parse_args(&args(&["estimate-sup", "--z", "2", "--alpha", "1.5", "--seed", "4"])).unwrap();
        let b = parse_args(&args(&["estimate-sup", "--alpha", "1.5", "--seed", "9", "--z", "2.0"])).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = parse_args(&args(&["estimate-sup", "--alpha", "1.5", "--z", "2.5"])).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn explicit_defaults_match_implicit() {
        let a = parse_args(&args(&["verify-tail"])).unwrap();
        let b = parse_args(&args(&["verify-tail", "--levels", "2, 3, 4, 5", "--alpha=1.5"])).unwrap();
        assert_eq!(a.digest(), b.digest());
    }
}
