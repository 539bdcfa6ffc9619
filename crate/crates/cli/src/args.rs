//! Minimal flag parsing with exact control over the exit-code contract:
//! any unknown flag or malformed value is a usage error.

use std::collections::BTreeMap;

#[derive(Debug)]
pub struct Args {
    values: BTreeMap<String, String>,
    switches: Vec<String>,
}

#[derive(Debug)]
pub struct UsageError(pub String);

/// Flags that take a value, per subcommand.
const VALUE_FLAGS: &[&str] = &[
    "--model", "--t", "--u-max", "--eps", "--r-max", "--paths", "--horizon", "--seed", "--u",
    "--experiment", "--format", "--out", "--pg", "--c", "--k-max", "--threads",
];
/// Boolean switches.
const SWITCH_FLAGS: &[&str] = &["--claims", "--echo"];

impl Args {
    pub fn parse(raw: &[String]) -> Result<Args, UsageError> {
        let mut values = BTreeMap::new();
        let mut switches = Vec::new();
        let mut iter = raw.iter();
        while let Some(flag) = iter.next() {
            if SWITCH_FLAGS.contains(&flag.as_str()) {
                switches.push(flag.clone());
            } else if VALUE_FLAGS.contains(&flag.as_str()) {
                let value = iter
                    .next()
                    .ok_or_else(|| UsageError(format!("flag {flag} expects a value")))?;
                values.insert(flag.clone(), value.clone());
            } else {
                return Err(UsageError(format!("unknown flag {flag}")));
            }
        }
        Ok(Args { values, switches })
    }

    pub fn switch(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    pub fn required(&self, name: &str) -> Result<&str, UsageError> {
        self.get(name).ok_or_else(|| UsageError(format!("missing required flag {name}")))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, UsageError> {
        match self.get(name) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| UsageError(format!("flag {name}: cannot parse {raw:?}"))),
        }
    }

    pub fn required_value<T: std::str::FromStr>(&self, name: &str) -> Result<T, UsageError> {
        self.required(name)?
            .parse::<T>()
            .map_err(|_| UsageError(format!("flag {name}: cannot parse {:?}", self.get(name).unwrap())))
    }

    /// `--format`, restricted to the listed choices.
    pub fn format(&self, choices: &[&str], default: &str) -> Result<String, UsageError> {
        let value = self.get("--format").unwrap_or(default);
        if choices.contains(&value) {
            Ok(value.to_string())
        } else {
            Err(UsageError(format!("flag --format: expected one of {choices:?}, got {value:?}")))
        }
    }

    /// Echo of every result-determining parameter, for the run manifest.
    /// `--out` and `--threads` only steer delivery and scheduling, never
    /// the report content, so they stay out (equal manifests must mean
    /// byte-identical reports).
    pub fn manifest_params(&self) -> BTreeMap<String, String> {
        let mut out = self.values.clone();
        out.remove("--out");
        out.remove("--threads");
        for s in &self.switches {
            out.insert(s.clone(), "true".to_string());
        }
        out
    }
}
