//! Run configuration: flat `key = value` text with `#` comment lines and
//! two sections, `[junction]` and `[run]`.
//!
//! ```text
//! [junction]
//! ej_over_ec = 100
//! omega_ratio = 2
//! j_ratio = 1
//! alpha1 = 0.1
//! alpha2 = 0.1
//! kappa = 1
//! bias = 0.95
//!
//! [run]
//! axis1 = bias
//! ```
//!
//! The junction block takes either the direct energies `ej1, ej2, ein` or
//! the ratio form `ej_over_ec, omega_ratio, j_ratio`, never both.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use super::CliError;
use crate::model::JunctionParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Conflict(String),
}

const JUNCTION_KEYS: &[&str] = &[
    "ej1",
    "ej2",
    "ein",
    "ej_over_ec",
    "omega_ratio",
    "j_ratio",
    "alpha1",
    "alpha2",
    "kappa",
    "bias",
];

const RUN_KEYS: &[&str] = &[
    // simulate
    "dt",
    "n_steps",
    "stride",
    "theta0",
    "psi0",
    "theta_dot0",
    "psi_dot0",
    "switch_window",
    // escape / sweep
    "epsilon",
    "profile_out",
    "profile_points",
    "axis1",
    "axis1_min",
    "axis1_max",
    "axis1_count",
    "axis2",
    "axis2_min",
    "axis2_max",
    "axis2_count",
    "out",
    "json_out",
    // verify
    "spectrum_points",
    "spectrum_width_sigmas",
    "spectrum_levels",
    "bounce_tol",
    "amplitude",
    "flip_g_plus",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub junction: BTreeMap<String, String>,
    pub run: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section: Option<&str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name.trim() {
                    "junction" => Some("junction"),
                    "run" => Some("run"),
                    other => {
                        return Err(ConfigError::Syntax {
                            line: lineno,
                            message: format!("unknown section [{other}]"),
                        })
                    }
                };
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: lineno,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let (table, allowed) = match section {
                Some("junction") => (&mut cfg.junction, JUNCTION_KEYS),
                Some(_) => (&mut cfg.run, RUN_KEYS),
                None => {
                    return Err(ConfigError::Syntax {
                        line: lineno,
                        message: format!("key `{key}` outside of a section"),
                    })
                }
            };
            if !allowed.contains(&key) {
                return Err(ConfigError::Syntax {
                    line: lineno,
                    message: format!("unknown key `{key}`"),
                });
            }
            if table.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line: lineno,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(cfg)
    }

    /// Builds the junction parameters. Presence and syntax problems are
    /// [`ConfigError`]s; physical invariants are checked later by
    /// [`JunctionParams::validate`], except for the ratio-form inputs, which
    /// are checked here.
    pub fn junction_params(&self) -> Result<JunctionParams, CliError> {
        let j = &self.junction;
        let direct = ["ej1", "ej2", "ein"].iter().any(|k| j.contains_key(*k));
        let ratio = ["ej_over_ec", "omega_ratio", "j_ratio"]
            .iter()
            .any(|k| j.contains_key(*k));
        if direct && ratio {
            return Err(ConfigError::Conflict(
                "[junction] mixes ej1/ej2/ein with ej_over_ec/omega_ratio/j_ratio".into(),
            )
            .into());
        }
        let get = |key: &str| -> Result<f64, ConfigError> {
            let raw = j
                .get(key)
                .ok_or_else(|| ConfigError::Missing(key.to_string()))?;
            parse_value(key, raw)
        };
        let alpha1 = get("alpha1")?;
        let alpha2 = get("alpha2")?;
        let bias = get("bias")?;
        let kappa = match j.get("kappa") {
            Some(raw) => parse_value("kappa", raw)?,
            None => 1.0,
        };
        if ratio {
            let params = JunctionParams::from_ratio_form(
                get("ej_over_ec")?,
                get("omega_ratio")?,
                get("j_ratio")?,
                alpha1,
                alpha2,
                kappa,
                bias,
            )?;
            Ok(params)
        } else {
            Ok(JunctionParams {
                ej1: get("ej1")?,
                ej2: get("ej2")?,
                ein: get("ein")?,
                alpha1,
                alpha2,
                kappa,
                bias,
            })
        }
    }

    pub fn run_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.run
            .get(key)
            .map(|raw| parse_value(key, raw))
            .transpose()
    }

    pub fn run_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.run_value(key)?.unwrap_or(default))
    }

    pub fn run_required<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.run_value(key)?
            .ok_or_else(|| ConfigError::Missing(format!("[run] {key}")))
    }

    pub fn run_str(&self, key: &str) -> Option<&str> {
        self.run.get(key).map(String::as_str)
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: raw.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3: &str = "# contour setup\n[junction]\nej_over_ec = 100\nomega_ratio = 2\nj_ratio = 1\nalpha1 = 0.1\nalpha2 = 0.1\nkappa = 1\nbias = 0.95\n\n[run]\nout = /tmp/x.csv\n";

    #[test]
    fn parses_ratio_form() {
        let cfg = RunConfig::parse(FIG3).unwrap();
        let p = cfg.junction_params().unwrap();
        assert_eq!(p.ej1, 50.0);
        assert_eq!(p.ej2, 50.0);
        assert!((p.ein - 100.0 / (0.2 * 4.0)).abs() < 1e-12);
        assert_eq!(cfg.run_str("out"), Some("/tmp/x.csv"));
    }

    #[test]
    fn missing_ein_names_the_key() {
        let cfg =
            RunConfig::parse("[junction]\nej1=50\nej2=50\nalpha1=0.1\nalpha2=0.1\nbias=0.9\n")
                .unwrap();
        let err = cfg.junction_params().unwrap_err();
        assert!(matches!(&err, CliError::Config(ConfigError::Missing(k)) if k == "ein"));
        assert!(err.to_string().contains("ein"));
    }

    #[test]
    fn mixed_styles_rejected() {
        let cfg = RunConfig::parse(
            "[junction]\nej1=50\nej2=50\nomega_ratio=2\nalpha1=0.1\nalpha2=0.1\nbias=0.9\n",
        )
        .unwrap();
        assert!(matches!(
            cfg.junction_params(),
            Err(CliError::Config(ConfigError::Conflict(_)))
        ));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        for (text, line) in [
            ("[junction]\nej1 50\n", 2),
            ("ej1 = 3\n", 1),
            ("[junction]\n[nope]\n", 2),
            ("[run]\n# c\nspeed = 3\n", 3),
            ("[run]\ndt = 1\ndt = 2\n", 3),
        ] {
            match RunConfig::parse(text) {
                Err(ConfigError::Syntax { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn bad_numbers_are_reported() {
        let cfg = RunConfig::parse("[run]\ndt = fast\n").unwrap();
        assert!(matches!(
            cfg.run_value::<f64>("dt"),
            Err(ConfigError::BadValue { .. })
        ));
        assert_eq!(cfg.run_or("n_steps", 7usize).unwrap(), 7);
    }
}
