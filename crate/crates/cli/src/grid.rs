//! Axis grids: `a:b:N` (linear), `a:b:Nlog` (logarithmic), a comma list, or
//! a single value.

use std::fmt;
use std::str::FromStr;

use crate::error::{usage, CliError};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    values: Vec<f64>,
    source: String,
}

impl Grid {
    pub fn single(v: f64) -> Self {
        Self {
            values: vec![v],
            source: fmt_value(v),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Shortest round-trip representation, as used in metadata echoes.
pub fn fmt_value(v: f64) -> String {
    format!("{v:?}")
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn number(s: &str, whole: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| usage(format!("grid `{whole}`: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(usage(format!("grid `{whole}`: `{s}` is not finite")));
    }
    Ok(v)
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, n] = parts[..] else {
                return Err(usage(format!("grid `{s}`: expected start:stop:count")));
            };
            let (a, b) = (number(a, s)?, number(b, s)?);
            let (count, log) = match n.trim().strip_suffix("log") {
                Some(c) => (c, true),
                None => (n.trim(), false),
            };
            let count: usize = count
                .parse()
                .map_err(|_| usage(format!("grid `{s}`: `{n}` is not a point count")))?;
            if count == 0 {
                return Err(usage(format!("grid `{s}` is empty")));
            }
            if log && (a <= 0.0 || b <= 0.0) {
                return Err(usage(format!("log grid `{s}` needs positive end points")));
            }
            if count == 1 {
                vec![a]
            } else {
                let t = |k: usize| k as f64 / (count - 1) as f64;
                (0..count)
                    .map(|k| match (log, k) {
                        (_, 0) => a,
                        (_, k) if k == count - 1 => b,
                        (true, k) => (a.ln() + t(k) * (b.ln() - a.ln())).exp(),
                        (false, k) => a + t(k) * (b - a),
                    })
                    .collect()
            }
        } else {
            s.split(',').map(|x| number(x, s)).collect::<Result<Vec<_>, _>>()?
        };
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(usage(format!("grid `{s}` must be strictly monotone")));
        }
        Ok(Self {
            values,
            source: s.to_string(),
        })
    }
}
