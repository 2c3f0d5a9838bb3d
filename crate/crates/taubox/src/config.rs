//! Run configuration: a flat key = value text format with integer arrays.
//!
//! ```text
//! # lines starting with # are comments; inline comments allowed
//! command = compare        # exact | estimate | compare | local-dump | verify
//! ell = 3
//! Q = [1,0,0, 0,1,0, 0,0,1]   # row-major, ell^2 entries
//! b = [0,0,0]                 # ell entries
//! c = 0
//! k = 2
//! X = [50, 100, 200]          # required for exact/estimate/compare
//! P0 = 100                    # optional (default 100)
//! M0 = 6                      # optional (default 6)
//! Q0 = 300                    # optional (default 300)
//! quadrature = tensor         # optional: tensor | mc (default by dimension)
//! panels = 2                  # optional: tensor starting panels per axis
//! samples = 1048576           # optional: mc sample count
//! tol = 1e-9                  # optional: quadrature relative tolerance
//! seed = 0                    # optional
//! threads = 1                 # optional
//! output = report.csv         # optional (default <command>.csv)
//! ```
//!
//! Syntax errors carry line and column; semantic validation reports every
//! violation, not just the first.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::integrals::{QuadMethod, QuadratureSpec};
use crate::quadpoly::QuadPoly;
use crate::singular::Truncation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Exact,
    Estimate,
    Compare,
    LocalDump,
    Verify,
}

impl Command {
    pub fn parse(s: &str) -> Option<Command> {
        match s {
            "exact" => Some(Command::Exact),
            "estimate" => Some(Command::Estimate),
            "compare" => Some(Command::Compare),
            "local-dump" => Some(Command::LocalDump),
            "verify" => Some(Command::Verify),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Estimate => "estimate",
            Command::Compare => "compare",
            Command::LocalDump => "local-dump",
            Command::Verify => "verify",
        }
    }

    fn needs_schedule(&self) -> bool {
        matches!(self, Command::Exact | Command::Estimate | Command::Compare)
    }

    /// The asymptotic engine needs l >= 3; diagnostics accept any dimension.
    fn needs_three_variables(&self) -> bool {
        matches!(self, Command::Estimate | Command::Compare)
    }
}

/// A fully validated run request.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub poly: QuadPoly,
    pub k: u32,
    pub x_schedule: Vec<u64>,
    pub trunc: Truncation,
    pub quad: QuadratureSpec,
    pub seed: u64,
    pub threads: usize,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub enum ConfigError {
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    /// Every semantic violation found, in source order.
    Invalid(Vec<String>),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Syntax { line, col, msg } => {
                write!(f, "syntax error at line {line}, column {col}: {msg}")
            }
            ConfigError::Invalid(v) => {
                write!(f, "invalid configuration: {}", v.join("; "))
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug)]
enum Value {
    Int(i64),
    Float(f64),
    Ident(String),
    List(Vec<i64>),
}

struct RawEntry {
    value: Value,
    line: usize,
}

fn parse_raw(text: &str) -> Result<BTreeMap<String, RawEntry>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(ConfigError::Syntax {
                line: line_no,
                col: 1,
                msg: "expected `key = value`".into(),
            });
        };
        let key = line[..eq].trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Syntax {
                line: line_no,
                col: 1,
                msg: format!("bad key `{key}`"),
            });
        }
        let val_str = line[eq + 1..].trim();
        let col = eq + 2 + (line[eq + 1..].len() - line[eq + 1..].trim_start().len());
        if val_str.is_empty() {
            return Err(ConfigError::Syntax {
                line: line_no,
                col,
                msg: "missing value".into(),
            });
        }
        let value = parse_value(val_str).map_err(|msg| ConfigError::Syntax {
            line: line_no,
            col,
            msg,
        })?;
        if map
            .insert(key.to_string(), RawEntry { value, line: line_no })
            .is_some()
        {
            return Err(ConfigError::Syntax {
                line: line_no,
                col: 1,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(map)
}

fn parse_value(s: &str) -> Result<Value, String> {
    if let Some(inner) = s.strip_prefix('[') {
        let Some(inner) = inner.strip_suffix(']') else {
            return Err("unterminated list".into());
        };
        let mut items = Vec::new();
        for part in inner.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            items.push(
                part.parse::<i64>()
                    .map_err(|_| format!("list entry `{part}` is not an integer"))?,
            );
        }
        return Ok(Value::List(items));
    }
    if let Ok(v) = s.parse::<i64>() {
        return Ok(Value::Int(v));
    }
    if let Ok(v) = s.parse::<f64>() {
        return Ok(Value::Float(v));
    }
    if s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./".contains(c)) {
        return Ok(Value::Ident(s.to_string()));
    }
    Err(format!("cannot parse value `{s}`"))
}

const KNOWN_KEYS: [&str; 16] = [
    "command", "ell", "Q", "b", "c", "k", "X", "P0", "M0", "Q0", "quadrature", "panels",
    "samples", "tol", "seed", "threads",
];

/// Parses and validates; returns either a ready `RunConfig` or the full list
/// of violations.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let map = parse_raw(text)?;
    let mut errs: Vec<String> = Vec::new();
    for key in map.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) && key != "output" {
            errs.push(format!("unknown key `{key}`"));
        }
    }

    let get_int = |key: &str, errs: &mut Vec<String>| -> Option<i64> {
        match map.get(key) {
            Some(RawEntry { value: Value::Int(v), .. }) => Some(*v),
            Some(RawEntry { line, .. }) => {
                errs.push(format!("`{key}` (line {line}) must be an integer"));
                None
            }
            None => None,
        }
    };
    let get_list = |key: &str, errs: &mut Vec<String>| -> Option<Vec<i64>> {
        match map.get(key) {
            Some(RawEntry { value: Value::List(v), .. }) => Some(v.clone()),
            Some(RawEntry { value: Value::Int(v), .. }) => Some(vec![*v]),
            Some(RawEntry { line, .. }) => {
                errs.push(format!("`{key}` (line {line}) must be an integer list"));
                None
            }
            None => None,
        }
    };

    let command = match map.get("command") {
        Some(RawEntry { value: Value::Ident(s), line }) => match Command::parse(s) {
            Some(c) => Some(c),
            None => {
                errs.push(format!(
                    "unknown command `{s}` (line {line}); expected exact | estimate | compare | local-dump | verify"
                ));
                None
            }
        },
        Some(RawEntry { line, .. }) => {
            errs.push(format!("`command` (line {line}) must be a command name"));
            None
        }
        None => {
            errs.push("missing required key `command`".into());
            None
        }
    };

    let ell = get_int("ell", &mut errs);
    if !map.contains_key("ell") {
        errs.push("missing required key `ell`".into());
    }
    let q = get_list("Q", &mut errs);
    if !map.contains_key("Q") {
        errs.push("missing required key `Q`".into());
    }
    let b = get_list("b", &mut errs);
    if !map.contains_key("b") {
        errs.push("missing required key `b`".into());
    }
    let c = get_int("c", &mut errs);
    if !map.contains_key("c") {
        errs.push("missing required key `c`".into());
    }
    let k = get_int("k", &mut errs);
    if !map.contains_key("k") {
        errs.push("missing required key `k`".into());
    }

    // polynomial assembly
    let mut poly = None;
    if let (Some(ell), Some(q), Some(b), Some(c)) = (ell, q.clone(), b.clone(), c) {
        if ell < 1 {
            errs.push("`ell` must be >= 1".into());
        } else {
            let l = ell as usize;
            if q.len() != l * l {
                errs.push(format!(
                    "`Q` must have ell^2 = {} entries, got {}",
                    l * l,
                    q.len()
                ));
            }
            if b.len() != l {
                errs.push(format!("`b` must have ell = {l} entries, got {}", b.len()));
            }
            if q.len() == l * l && b.len() == l {
                match QuadPoly::new(l, q, b, c) {
                    Ok(p) => poly = Some(p),
                    Err(e) => errs.push(format!("polynomial: {e}")),
                }
            }
        }
    }

    if let Some(k) = k {
        if k < 2 {
            errs.push(format!(
                "`k` must be >= 2 (the asymptotic requires k >= 2), got {k}"
            ));
        }
    }
    if let (Some(cmd), Some(ell)) = (command, ell) {
        if cmd.needs_three_variables() && ell < 3 {
            errs.push(format!(
                "command `{}` requires ell >= 3 (asymptotic hypothesis), got {ell}",
                cmd.name()
            ));
        }
    }

    let x_schedule: Vec<u64> = match map.get("X") {
        Some(_) => {
            let xs = get_list("X", &mut errs).unwrap_or_default();
            let mut out = Vec::new();
            for v in xs {
                if v < 1 {
                    errs.push(format!("`X` entries must be >= 1, got {v}"));
                } else {
                    out.push(v as u64);
                }
            }
            out
        }
        None => Vec::new(),
    };
    if let Some(cmd) = command {
        if cmd.needs_schedule() && x_schedule.is_empty() {
            errs.push(format!(
                "command `{}` requires a nonempty `X` schedule",
                cmd.name()
            ));
        }
    }

    let mut trunc = Truncation::default();
    if let Some(v) = get_int("P0", &mut errs) {
        if v < 2 {
            errs.push("`P0` must be >= 2".into());
        } else {
            trunc.p0 = v as u64;
        }
    }
    if let Some(v) = get_int("M0", &mut errs) {
        if !(1..=12).contains(&v) {
            errs.push("`M0` must be in 1..=12".into());
        } else {
            trunc.m0 = v as u32;
        }
    }
    if let Some(v) = get_int("Q0", &mut errs) {
        if v < 1 {
            errs.push("`Q0` must be >= 1".into());
        } else {
            trunc.q0 = v as u64;
        }
    }

    let seed = match get_int("seed", &mut errs) {
        Some(v) => v as u64,
        None => 0,
    };
    let threads = match get_int("threads", &mut errs) {
        Some(v) if v >= 1 => v as usize,
        Some(_) => {
            errs.push("`threads` must be >= 1".into());
            1
        }
        None => 1,
    };

    let tol = match map.get("tol") {
        Some(RawEntry { value: Value::Float(v), .. }) => Some(*v),
        Some(RawEntry { value: Value::Int(v), .. }) => Some(*v as f64),
        Some(RawEntry { line, .. }) => {
            errs.push(format!("`tol` (line {line}) must be a number"));
            None
        }
        None => None,
    };
    if let Some(t) = tol {
        if t.is_nan() || t <= 0.0 {
            errs.push("`tol` must be > 0".into());
        }
    }

    let ell_usize = ell.unwrap_or(3).max(1) as usize;
    let mut quad = QuadratureSpec::default_for_dimension(ell_usize, seed);
    match map.get("quadrature") {
        Some(RawEntry { value: Value::Ident(s), line }) => match s.as_str() {
            "tensor" => {
                quad.method = QuadMethod::TensorGaussLegendre { initial_panels: 2 }
            }
            "mc" => {
                quad.method = QuadMethod::MonteCarlo { samples: 1 << 20 };
                quad.rel_tol = 1e-3;
            }
            other => errs.push(format!(
                "`quadrature` (line {line}) must be tensor or mc, got `{other}`"
            )),
        },
        Some(RawEntry { line, .. }) => {
            errs.push(format!("`quadrature` (line {line}) must be tensor or mc"))
        }
        None => {}
    }
    if let Some(v) = get_int("panels", &mut errs) {
        if v < 1 {
            errs.push("`panels` must be >= 1".into());
        } else if let QuadMethod::TensorGaussLegendre { ref mut initial_panels } = quad.method {
            *initial_panels = v as usize;
        }
    }
    if let Some(v) = get_int("samples", &mut errs) {
        if v < 1 {
            errs.push("`samples` must be >= 1".into());
        } else if let QuadMethod::MonteCarlo { ref mut samples } = quad.method {
            *samples = v as u64;
        }
    }
    if let Some(t) = tol {
        if t > 0.0 {
            quad.rel_tol = t;
        }
    }
    quad.seed = seed;

    let output = match map.get("output") {
        Some(RawEntry { value: Value::Ident(s), .. }) => Some(PathBuf::from(s)),
        Some(RawEntry { line, .. }) => {
            errs.push(format!("`output` (line {line}) must be a path"));
            None
        }
        None => None,
    };

    if !errs.is_empty() {
        return Err(ConfigError::Invalid(errs));
    }
    Ok(RunConfig {
        command: command.expect("validated"),
        poly: poly.expect("validated"),
        k: k.expect("validated") as u32,
        x_schedule,
        trunc,
        quad,
        seed,
        threads,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
command = compare
ell = 3
Q = [1,0,0, 0,1,0, 0,0,1]
b = [0,0,0]
c = 0
k = 2
X = [100]
";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.command, Command::Compare);
        assert_eq!(cfg.trunc.p0, 100);
        assert_eq!(cfg.trunc.q0, 300);
        assert_eq!(cfg.trunc.m0, 6);
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.x_schedule, vec![100]);
        assert_eq!(cfg.threads, 1);
        assert!(cfg.output.is_none());
    }

    #[test]
    fn k_below_two_rejected_with_reason() {
        let text = MINIMAL.replace("k = 2", "k = 1");
        match parse_config(&text) {
            Err(ConfigError::Invalid(v)) => {
                assert!(v.iter().any(|m| m.contains("k >= 2")), "{v:?}")
            }
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn two_variable_gating_depends_on_command() {
        let base = "\
ell = 2
Q = [1,0, 0,1]
b = [0,0]
c = 0
k = 2
X = [10]
";
        let compare = format!("command = compare\n{base}");
        assert!(matches!(
            parse_config(&compare),
            Err(ConfigError::Invalid(_))
        ));
        let verify = format!("command = verify\n{base}");
        assert!(parse_config(&verify).is_ok());
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_config("command = compare\nell == 3\n") {
            Err(ConfigError::Syntax { line: 2, .. }) => {}
            other => panic!("expected syntax error at line 2, got {other:?}"),
        }
        match parse_config("foo bar\n") {
            Err(ConfigError::Syntax { line: 1, .. }) => {}
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn all_violations_reported_together() {
        let text = "\
command = compare
ell = 2
Q = [1,0, 0,1]
b = [0]
c = 0
k = 1
";
        match parse_config(text) {
            Err(ConfigError::Invalid(v)) => {
                assert!(v.len() >= 3, "want k, ell, b, X violations, got {v:?}");
                assert!(v.iter().any(|m| m.contains("k >= 2")));
                assert!(v.iter().any(|m| m.contains("ell >= 3")));
                assert!(v.iter().any(|m| m.contains("`X`")));
            }
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_syntax_error() {
        let text = format!("{MINIMAL}k = 3\n");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::Syntax { .. })
        ));
    }

    #[test]
    fn quadrature_selection() {
        let text = format!("{MINIMAL}quadrature = mc\nsamples = 1000\n");
        let cfg = parse_config(&text).unwrap();
        assert!(matches!(
            cfg.quad.method,
            QuadMethod::MonteCarlo { samples: 1000 }
        ));
        let text = format!("{MINIMAL}quadrature = trapezoids\n");
        assert!(matches!(parse_config(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn unknown_key_flagged() {
        let text = format!("{MINIMAL}frobnicate = 7\n");
        match parse_config(&text) {
            Err(ConfigError::Invalid(v)) => {
                assert!(v[0].contains("frobnicate"))
            }
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn inline_comments_and_spacing() {
        let text = "\
command = exact   # run the exact sum
ell = 3
Q = [ 1,0,0, 0,1,0, 0,0,1 ]
b = [0, 0, 0]
c = 5         # shift
k = 3
X = 7
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.command, Command::Exact);
        assert_eq!(cfg.poly.constant(), 5);
        assert_eq!(cfg.x_schedule, vec![7]);
    }
}
