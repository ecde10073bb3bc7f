use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fit::FitResult;
use super::GlmError;

const HEADER: [&str; 5] = ["term", "estimate", "std_error", "p_value", "signif"];
/// p-values below this print as an upper bound.
const P_FLOOR: f64 = 2e-16;

/// A p-value as printed: exact, or only bounded from above ("< 2e-16").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PValue {
    Exact(f64),
    Below(f64),
}

impl PValue {
    pub fn from_fit(p: f64) -> Self {
        if p < P_FLOOR {
            PValue::Below(P_FLOOR)
        } else {
            PValue::Exact(p)
        }
    }

    pub fn bound(self) -> f64 {
        match self {
            PValue::Exact(p) | PValue::Below(p) => p,
        }
    }

    /// Stars for this p-value; a bound `< b` counts as lying just below `b`.
    pub fn significance(self) -> &'static str {
        match self {
            PValue::Exact(p) => significance_code(p),
            PValue::Below(b) => significance_code(b - b * f64::EPSILON),
        }
    }
}

fn format_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.5}")
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PValue::Exact(p) => f.write_str(&format_p(*p)),
            PValue::Below(p) if *p == P_FLOOR => f.write_str("< 2e-16"),
            PValue::Below(p) => write!(f, "< {}", format_p(*p)),
        }
    }
}

impl FromStr for PValue {
    type Err = GlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || GlmError::Table(format!("bad p-value `{s}`"));
        let (below, num) = match s.strip_prefix('<') {
            Some(rest) => (true, rest.trim()),
            None => (false, s),
        };
        let p: f64 = num.parse().map_err(|_| bad())?;
        if !(0.0..=1.0).contains(&p) {
            return Err(bad());
        }
        Ok(if below { PValue::Below(p) } else { PValue::Exact(p) })
    }
}

/// Significance stars: `***` p<0.001, `**` p<0.01, `*` p<0.05, `.` p<0.1.
pub fn significance_code(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else if p < 0.1 {
        "."
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: PValue,
}

impl CoefficientRow {
    pub fn significance(&self) -> &'static str {
        self.p_value.significance()
    }
}

/// Estimates with standard errors and p-values, one row per term.
///
/// Serialized as tab-separated text with header
/// `term estimate std_error p_value signif`; blank lines and lines starting
/// with `#` are ignored when reading.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub rows: Vec<CoefficientRow>,
}

impl CoefficientTable {
    pub fn from_fit(fit: &FitResult) -> Self {
        Self {
            rows: fit
                .coefficients
                .iter()
                .map(|c| CoefficientRow {
                    term: c.name.clone(),
                    estimate: c.estimate,
                    std_error: c.std_error,
                    p_value: PValue::from_fit(c.p_value),
                })
                .collect(),
        }
    }

    pub fn row(&self, term: &str) -> Option<&CoefficientRow> {
        self.rows.iter().find(|r| r.term == term)
    }

    pub fn estimate(&self, term: &str) -> Option<f64> {
        self.row(term).map(|r| r.estimate)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.term.as_str())
    }

    /// Renders with five-decimal estimates and standard errors.
    pub fn to_tsv(&self) -> String {
        let mut out = HEADER.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{:.5}\t{:.5}\t{}\t{}\n",
                r.term,
                r.estimate,
                r.std_error,
                r.p_value,
                r.significance()
            ));
        }
        out
    }

    pub fn parse_tsv(source: &str) -> Result<Self, GlmError> {
        let mut lines = source
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| GlmError::Table("empty table".into()))?;
        let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
        if cols.len() < 4 || cols[..4] != HEADER[..4] {
            return Err(GlmError::Table(format!("unexpected header `{header}`")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |what: &str| GlmError::Table(format!("line {}: {what}", i + 1));
            if fields.len() < 4 {
                return Err(bad("expected at least 4 fields"));
            }
            let num = |s: &str, what: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("bad {what} `{s}`")));
            let term = fields[0].trim().to_string();
            if rows.iter().any(|r: &CoefficientRow| r.term == term) {
                return Err(bad(&format!("duplicate term `{term}`")));
            }
            rows.push(CoefficientRow {
                term,
                estimate: num(fields[1], "estimate")?,
                std_error: num(fields[2], "std_error")?,
                p_value: fields[3].parse().map_err(|e: GlmError| bad(&e.to_string()))?,
            });
        }
        Ok(Self { rows })
    }
}
