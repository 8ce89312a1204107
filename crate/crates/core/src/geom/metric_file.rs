//! Plain-text metric definitions.
//!
//! One `key = value` pair per line, `#` starts a comment, values may be
//! wrapped in double quotes. Recognised keys:
//!
//! | key          | meaning                                                     |
//! |--------------|-------------------------------------------------------------|
//! | `kind`       | `flat`, `conformal` or `revolution`                         |
//! | `phi`        | conformal factor as an expression in `x`, `y`               |
//! | `phi_grid`   | file of `resolution^2` whitespace-separated samples of phi  |
//! | `resolution` | grid size for `phi_grid`                                    |
//! | `profile`    | `capped_cone` (needs `k`) or `spherical_cap` (`cap_angle`)  |
//! | `k`          | boundary total turning of the capped cone, in `(0, pi)`     |
//! | `cap_angle`  | angular radius of a unit spherical cap, in `(0, pi/2)`      |
//! | `label`      | free-form name carried into reports                         |

use std::collections::BTreeMap;
use std::path::Path;

use super::{ConformalFactor, Expr, GeomError, GridField, Meridian, MetricChart};

/// Parsed key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSpec {
    entries: BTreeMap<String, String>,
}

impl MetricSpec {
    pub fn parse(text: &str) -> Result<Self, GeomError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GeomError::MetricFile(format!("line {}: expected key = value", lineno + 1)))?;
            let key = k.trim().to_ascii_lowercase();
            let mut val = v.trim();
            if val.len() >= 2 && val.starts_with('"') && val.ends_with('"') {
                val = &val[1..val.len() - 1];
            }
            if entries.insert(key.clone(), val.to_string()).is_some() {
                return Err(GeomError::MetricFile(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(MetricSpec { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn number(&self, key: &str) -> Result<Option<f64>, GeomError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let e = Expr::parse(v).map_err(|e| GeomError::MetricFile(format!("{key}: {e}")))?;
                Ok(Some(e.eval(0.0, 0.0)))
            }
        }
    }

    fn require(&self, key: &str) -> Result<f64, GeomError> {
        self.number(key)?.ok_or_else(|| GeomError::MetricFile(format!("missing `{key}`")))
    }

    /// Builds the chart; `base` resolves relative `phi_grid` paths.
    pub fn build(&self, base: Option<&Path>) -> Result<MetricChart, GeomError> {
        let kind = self.get("kind").ok_or_else(|| GeomError::MetricFile("missing `kind`".into()))?;
        let chart = match kind {
            "flat" => MetricChart::flat(),
            "conformal" => {
                let phi = match (self.get("phi"), self.get("phi_grid")) {
                    (Some(src), None) => ConformalFactor::Expr(
                        Expr::parse(src).map_err(|e| GeomError::MetricFile(format!("phi: {e}")))?,
                    ),
                    (None, Some(path)) => {
                        let n = self.require("resolution")?;
                        if !(n >= 4.0 && n.fract() == 0.0) {
                            return Err(GeomError::MetricFile(format!("resolution must be an integer >= 4, got {n}")));
                        }
                        let full = match base {
                            Some(b) => b.join(path),
                            None => Path::new(path).to_path_buf(),
                        };
                        let text = std::fs::read_to_string(&full)
                            .map_err(|e| GeomError::MetricFile(format!("{}: {e}", full.display())))?;
                        let values = text
                            .split_whitespace()
                            .map(|t| t.parse::<f64>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| GeomError::MetricFile(format!("{}: {e}", full.display())))?;
                        let grid = GridField::new(n as usize, values).ok_or_else(|| {
                            GeomError::MetricFile(format!("{}: expected {} finite samples", full.display(), n * n))
                        })?;
                        ConformalFactor::Grid(grid)
                    }
                    _ => return Err(GeomError::MetricFile("conformal needs exactly one of `phi`, `phi_grid`".into())),
                };
                MetricChart::conformal(phi)?
            }
            "revolution" => match self.get("profile") {
                Some("capped_cone") => {
                    let k = self.require("k")?;
                    let m = Meridian::capped_cone(k)
                        .ok_or_else(|| GeomError::InvalidProfile(format!("k = {k} outside (0, pi)")))?;
                    MetricChart::revolution(m)?
                }
                Some("spherical_cap") => MetricChart::spherical_cap(self.require("cap_angle")?)?,
                Some(other) => return Err(GeomError::MetricFile(format!("unknown profile `{other}`"))),
                None => return Err(GeomError::MetricFile("revolution needs `profile`".into())),
            },
            other => return Err(GeomError::MetricFile(format!("unknown kind `{other}`"))),
        };
        Ok(match self.get("label") {
            Some(l) => chart.with_label(l),
            None => chart,
        })
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Reads and builds a metric file.
pub fn load_metric(path: &Path) -> Result<MetricChart, GeomError> {
    let text = std::fs::read_to_string(path).map_err(|e| GeomError::MetricFile(format!("{}: {e}", path.display())))?;
    MetricSpec::parse(&text)?.build(path.parent())
}
