//! `key=value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Every key below has a default; unknown keys and duplicates are errors.
//! The grid keys `solver.*` default per subcommand (see [`grid_defaults`]).

use std::collections::BTreeMap;
use std::path::Path;

use kswave::solver::{Scheme, SolverConfig};
use kswave::wave::{FixedPointConfig, OuterStart};
use kswave::SystemParams;

use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Constants,
    KernelTest,
    Wave,
    Speed,
    Stability,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::KernelTest => "kernel-test",
            Command::Wave => "wave",
            Command::Speed => "speed",
            Command::Stability => "stability",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Float,
    /// A float or the literal `auto`.
    AutoFloat,
    Count,
    Seed,
    Bool,
    Choice(&'static [&'static str]),
    /// Empty, a comma list, or `from:to:count`.
    List,
}

struct Key {
    name: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key { name, kind, default }
}

// solver grid defaults are filled in by `grid_defaults`
const KEYS: &[Key] = &[
    key("model.chi", Kind::Float, "0.3"),
    key("model.mu", Kind::Float, "1"),
    key("model.lambda", Kind::Float, "1"),
    key("model.a", Kind::Float, "1"),
    key("model.b", Kind::Float, "1"),
    key("model.tau", Kind::Float, "1"),
    key("solver.x_min", Kind::Float, ""),
    key("solver.x_max", Kind::Float, ""),
    key("solver.n", Kind::Count, ""),
    key("solver.dt", Kind::Float, ""),
    key("solver.scheme", Kind::Choice(&["imex", "explicit"]), "imex"),
    key("solver.blowup_cap", Kind::Float, "1e6"),
    key("constants.c", Kind::AutoFloat, "auto"),
    key("kernel.c", Kind::Float, "1.7"),
    key("kernel.kappa", Kind::Float, "0.5"),
    key("kernel.samples", Kind::Count, "20"),
    key("wave.c", Kind::Float, "2.5"),
    key("wave.inner_tol", Kind::Float, "1e-8"),
    key("wave.outer_tol", Kind::Float, "1e-6"),
    key("wave.max_inner_time", Kind::Float, "2000"),
    key("wave.max_outer_iters", Kind::Count, "200"),
    key("wave.eta", Kind::AutoFloat, "auto"),
    key("wave.d_factor", Kind::Float, "10"),
    key("wave.start", Kind::Choice(&["upper", "lower"]), "upper"),
    key("wave.relaxation", Kind::Float, "1"),
    key("speed.t_end", Kind::Float, "40"),
    key("speed.window_start", Kind::Float, "20"),
    key("speed.window_end", Kind::Float, "40"),
    key("speed.half_width", Kind::Float, "2"),
    key("speed.height", Kind::AutoFloat, "auto"),
    key("speed.sample_every", Kind::Float, "0.25"),
    key("speed.boundary_margin", Kind::Float, "5"),
    key("stability.c", Kind::Float, "1"),
    key("stability.t_end", Kind::Float, "30"),
    key("stability.base", Kind::Float, "0.5"),
    key("stability.amplitude", Kind::Float, "0.3"),
    key("stability.wavelength", Kind::Float, "20"),
    key("stability.sample_every", Kind::Float, "0.5"),
    key("sweep.tau", Kind::List, ""),
    key("sweep.chi", Kind::List, ""),
    key("sweep.c", Kind::List, ""),
    key("sweep.measure_speed", Kind::Bool, "false"),
    key("run.seed", Kind::Seed, "0"),
];

/// `(x_min, x_max, n, dt)` for each subcommand.
pub fn grid_defaults(cmd: Command) -> (&'static str, &'static str, &'static str, &'static str) {
    match cmd {
        Command::Wave => ("-40", "80", "4096", "0.05"),
        Command::Stability => ("-50", "50", "2048", "0.01"),
        Command::KernelTest => ("-30", "30", "4096", "0.01"),
        Command::Constants | Command::Speed | Command::Sweep => ("-100", "100", "4001", "0.01"),
    }
}

/// Fully resolved configuration: every known key mapped to its normalised value.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<&'static str, String>,
}

fn lookup(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// Checks `raw` against the key's kind and returns the canonical spelling.
fn normalise(k: &Key, raw: &str) -> Result<String, String> {
    let float = |s: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{s}` is not a finite number"))
    };
    match k.kind {
        Kind::Float => float(raw).map(fmt_float),
        Kind::AutoFloat if raw == "auto" => Ok(raw.to_string()),
        Kind::AutoFloat => float(raw).map(fmt_float),
        Kind::Count => raw
            .parse::<usize>()
            .map(|v| v.to_string())
            .map_err(|_| format!("`{raw}` is not a non-negative integer")),
        Kind::Seed => raw
            .parse::<u64>()
            .map(|v| v.to_string())
            .map_err(|_| format!("`{raw}` is not a u64")),
        Kind::Bool => match raw {
            "true" | "false" => Ok(raw.to_string()),
            _ => Err(format!("`{raw}` is not true or false")),
        },
        Kind::Choice(options) if options.contains(&raw) => Ok(raw.to_string()),
        Kind::Choice(options) => Err(format!("`{raw}` is not one of {}", options.join(", "))),
        Kind::List => parse_list(raw).map(|_| raw.to_string()),
    }
}

/// Empty, `v1,v2,...` or `from:to:count` (inclusive, evenly spaced).
pub fn parse_list(raw: &str) -> Result<Vec<f64>, String> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| -> Result<f64, String> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{}` is not a finite number", s.trim()))
    };
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err("a range is written from:to:count".into());
        }
        let (from, to) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("`{}` is not a count", parts[2].trim()))?;
        return match count {
            0 => Err("a range needs at least one point".into()),
            1 => Ok(vec![from]),
            _ => Ok((0..count)
                .map(|i| {
                    if i + 1 == count {
                        to
                    } else {
                        from + (to - from) * i as f64 / (count - 1) as f64
                    }
                })
                .collect()),
        };
    }
    raw.split(',').map(num).collect()
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let (x_min, x_max, n, dt) = grid_defaults(command);
        let values = KEYS
            .iter()
            .map(|k| {
                let v = match k.name {
                    "solver.x_min" => x_min,
                    "solver.x_max" => x_max,
                    "solver.n" => n,
                    "solver.dt" => dt,
                    _ => k.default,
                };
                (k.name, normalise(k, v).expect("built-in default"))
            })
            .collect();
        Self { command, values }
    }

    /// Defaults overridden by the assignments in `text`.
    pub fn parse(command: Command, text: &str, origin: &str) -> Result<Self, LabError> {
        let mut cfg = Self::defaults(command);
        let mut seen = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| LabError::Config {
                origin: origin.to_string(),
                line: line_no,
                msg,
            };
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, found `{body}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let key = lookup(k).ok_or_else(|| err(format!("unknown key `{k}`")))?;
            if let Some(first) = seen.insert(key.name, line_no) {
                return Err(err(format!("`{k}` already set on line {first}")));
            }
            let value = normalise(key, v).map_err(|m| err(format!("{k}: {m}")))?;
            cfg.values.insert(key.name, value);
        }
        Ok(cfg)
    }

    pub fn load(command: Command, path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(command, &text, &path.display().to_string())
    }

    /// Overrides one key, as if it had been written in the file.
    pub fn set(&mut self, name: &str, raw: &str) -> Result<(), LabError> {
        let key = lookup(name).ok_or_else(|| LabError::Usage(format!("unknown key `{name}`")))?;
        let value = normalise(key, raw).map_err(|m| LabError::Usage(format!("{name}: {m}")))?;
        self.values.insert(key.name, value);
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &str)> {
        self.values.iter().map(|(k, v)| (*k, v.as_str()))
    }

    /// The resolved config in the file format; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        self.entries().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn raw(&self, name: &str) -> &str {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("unregistered key {name}"))
    }

    pub fn float(&self, name: &str) -> f64 {
        self.raw(name).parse().expect("validated on ingestion")
    }

    /// `None` for `auto`.
    pub fn auto_float(&self, name: &str) -> Option<f64> {
        match self.raw(name) {
            "auto" => None,
            v => Some(v.parse().expect("validated on ingestion")),
        }
    }

    pub fn count(&self, name: &str) -> usize {
        self.raw(name).parse().expect("validated on ingestion")
    }

    pub fn seed(&self) -> u64 {
        self.raw("run.seed").parse().expect("validated on ingestion")
    }

    pub fn flag(&self, name: &str) -> bool {
        self.raw(name) == "true"
    }

    pub fn text(&self, name: &str) -> &str {
        self.raw(name)
    }

    pub fn list(&self, name: &str) -> Vec<f64> {
        parse_list(self.raw(name)).expect("validated on ingestion")
    }

    pub fn params(&self) -> Result<SystemParams, LabError> {
        Ok(SystemParams::new(
            self.float("model.chi"),
            self.float("model.mu"),
            self.float("model.lambda"),
            self.float("model.a"),
            self.float("model.b"),
            self.float("model.tau"),
        )?)
    }

    pub fn solver(&self) -> SolverConfig {
        let mut sc = SolverConfig::new(
            self.float("solver.x_min"),
            self.float("solver.x_max"),
            self.count("solver.n"),
            self.float("solver.dt"),
        );
        sc.scheme = match self.text("solver.scheme") {
            "explicit" => Scheme::Explicit,
            _ => Scheme::Imex,
        };
        sc.blowup_cap = self.float("solver.blowup_cap");
        sc
    }

    pub fn fixed_point(&self) -> FixedPointConfig {
        let mut fp = FixedPointConfig::new(self.solver());
        fp.inner_tol = self.float("wave.inner_tol");
        fp.outer_tol = self.float("wave.outer_tol");
        fp.max_inner_time = self.float("wave.max_inner_time");
        fp.max_outer_iters = self.count("wave.max_outer_iters");
        fp.eta = self.auto_float("wave.eta");
        fp.d_factor = self.float("wave.d_factor");
        fp.start = match self.text("wave.start") {
            "lower" => OuterStart::Lower,
            _ => OuterStart::Upper,
        };
        fp.relaxation = self.float("wave.relaxation");
        fp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: LabError) -> usize {
        match e {
            LabError::Config { line, .. } => line,
            other => panic!("{other}"),
        }
    }

    #[test]
    fn defaults_resolve_every_key() {
        let cfg = RunConfig::defaults(Command::Wave);
        assert_eq!(cfg.entries().count(), KEYS.len());
        assert_eq!(cfg.count("solver.n"), 4096);
        assert_eq!(cfg.auto_float("wave.eta"), None);
        assert_eq!(cfg.float("wave.inner_tol"), 1e-8);
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# header\nmodel.a = 4  # growth\n\nsolver.n=512\nwave.start=lower\n";
        let cfg = RunConfig::parse(Command::Wave, text, "t").unwrap();
        assert_eq!(cfg.float("model.a"), 4.0);
        assert_eq!(cfg.text("model.a"), "4.0");
        assert_eq!(cfg.count("solver.n"), 512);
        assert_eq!(cfg.fixed_point().start, OuterStart::Lower);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = [
            ("model.a=1\nmodel.q=2\n", 2),
            ("\n\nsolver.n=-3\n", 3),
            ("model.a=1\nmodel.a=2\n", 2),
            ("model.b\n", 1),
            ("solver.scheme=rk4\n", 1),
            ("model.chi=nan\n", 1),
            ("sweep.tau=0:1\n", 1),
        ];
        for (text, line) in bad {
            let e = RunConfig::parse(Command::Sweep, text, "t").unwrap_err();
            assert_eq!(line_of(e), line, "{text:?}");
        }
    }

    #[test]
    fn text_round_trip() {
        let cfg = RunConfig::parse(Command::Sweep, "model.tau=0.1\nsweep.chi=0,0.1\n", "t").unwrap();
        let back = RunConfig::parse(Command::Sweep, &cfg.to_text(), "echo").unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_list("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_list("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_list("0.3:0.3:1").unwrap(), vec![0.3]);
        assert!(parse_list("0:1:0").is_err());
    }
}
