use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::GlmError;

pub const INTERCEPT: &str = "(Intercept)";
/// Separator between the parts of an interaction column name.
pub const INTERACTION_SEP: char = '×';

/// A main-effect term of a regression formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    /// Categorical factor, treatment coded against `reference`.
    Factor { name: String, reference: String },
    /// Continuous covariate entering linearly.
    Covariate { name: String },
}

impl Term {
    pub fn factor(name: &str, reference: &str) -> Self {
        Term::Factor {
            name: name.to_string(),
            reference: reference.to_string(),
        }
    }

    pub fn covariate(name: &str) -> Self {
        Term::Covariate { name: name.to_string() }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Factor { name, .. } | Term::Covariate { name } => name,
        }
    }
}

/// Main effects plus pairwise interactions for a binary response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub response: String,
    pub terms: Vec<Term>,
    pub interactions: Vec<(String, String)>,
}

impl RegressionSpec {
    pub fn new(response: &str, terms: Vec<Term>) -> Self {
        Self {
            response: response.to_string(),
            terms,
            interactions: Vec::new(),
        }
    }

    pub fn with_interaction(mut self, left: &str, right: &str) -> Self {
        self.interactions.push((left.to_string(), right.to_string()));
        self
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name() == name)
    }

    pub fn has_interaction(&self, a: &str, b: &str) -> bool {
        self.interactions
            .iter()
            .any(|(l, r)| (l == a && r == b) || (l == b && r == a))
    }

    pub fn validate(&self) -> Result<(), GlmError> {
        let mut seen = BTreeSet::new();
        for t in &self.terms {
            if !seen.insert(t.name()) {
                return Err(GlmError::InvalidSpec(format!("term `{}` declared twice", t.name())));
            }
        }
        for (l, r) in &self.interactions {
            for side in [l, r] {
                if self.term(side).is_none() {
                    return Err(GlmError::InvalidSpec(format!(
                        "interaction {l}×{r} references undeclared term `{side}`"
                    )));
                }
            }
            if l == r {
                return Err(GlmError::InvalidSpec(format!("term `{l}` interacted with itself")));
            }
        }
        Ok(())
    }
}

/// Covariate values of one observation: a level per factor and a number per
/// continuous covariate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    pub levels: BTreeMap<String, String>,
    pub values: BTreeMap<String, f64>,
}

impl Covariates {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn level(mut self, factor: &str, level: &str) -> Self {
        self.levels.insert(factor.to_string(), level.to_string());
        self
    }

    pub fn value(mut self, covariate: &str, value: f64) -> Self {
        self.values.insert(covariate.to_string(), value);
        self
    }
}

/// One analysis row: a binary response with its covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub response: bool,
    pub covariates: Covariates,
}

impl Observation {
    pub fn new(response: bool, covariates: Covariates) -> Self {
        Self { response, covariates }
    }
}

/// One factor of a product column, or a covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Part {
    Dummy { factor: String, level: String },
    Value { covariate: String },
}

impl Part {
    fn name(&self) -> String {
        match self {
            Part::Dummy { factor, level } => format!("{factor}:{level}"),
            Part::Value { covariate } => covariate.clone(),
        }
    }

    fn eval(&self, cov: &Covariates) -> Result<f64, GlmError> {
        match self {
            Part::Dummy { factor, level } => {
                let got = cov
                    .levels
                    .get(factor)
                    .ok_or_else(|| GlmError::MissingValue(factor.clone()))?;
                Ok(if got == level { 1.0 } else { 0.0 })
            }
            Part::Value { covariate } => {
                let v = cov
                    .values
                    .get(covariate)
                    .copied()
                    .ok_or_else(|| GlmError::MissingValue(covariate.clone()))?;
                if !v.is_finite() {
                    return Err(GlmError::InvalidSpec(format!("covariate `{covariate}` is not finite")));
                }
                Ok(v)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Column {
    Intercept,
    Single(Part),
    Product(Part, Part),
}

impl Column {
    fn name(&self) -> String {
        match self {
            Column::Intercept => INTERCEPT.to_string(),
            Column::Single(p) => p.name(),
            Column::Product(a, b) => format!("{}{INTERACTION_SEP}{}", a.name(), b.name()),
        }
    }

    fn eval(&self, cov: &Covariates) -> Result<f64, GlmError> {
        match self {
            Column::Intercept => Ok(1.0),
            Column::Single(p) => p.eval(cov),
            Column::Product(a, b) => Ok(a.eval(cov)? * b.eval(cov)?),
        }
    }
}

/// Column layout derived from a spec and the levels seen in training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    spec: RegressionSpec,
    /// Levels per factor, reference level first, the rest sorted.
    factor_levels: BTreeMap<String, Vec<String>>,
    columns: Vec<Column>,
}

impl Encoding {
    pub fn spec(&self) -> &RegressionSpec {
        &self.spec
    }

    pub fn levels(&self, factor: &str) -> Option<&[String]> {
        self.factor_levels.get(factor).map(Vec::as_slice)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(Column::name).collect()
    }

    /// Encodes one covariate set; levels outside the training data are errors.
    pub fn encode(&self, cov: &Covariates) -> Result<Vec<f64>, GlmError> {
        for (factor, levels) in &self.factor_levels {
            let level = cov
                .levels
                .get(factor)
                .ok_or_else(|| GlmError::MissingValue(factor.clone()))?;
            if !levels.contains(level) {
                return Err(GlmError::UnseenLevel {
                    factor: factor.clone(),
                    level: level.clone(),
                });
            }
        }
        self.columns.iter().map(|c| c.eval(cov)).collect()
    }
}

/// Dense treatment-coded design with its binary response.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub encoding: Option<Encoding>,
}

impl DesignMatrix {
    /// Wraps a raw matrix; the response must be 0/1 and match the row count.
    pub fn from_parts(names: Vec<String>, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self, GlmError> {
        if names.len() != x.ncols() || y.len() != x.nrows() {
            return Err(GlmError::InvalidSpec(format!(
                "design is {}×{} with {} names and {} responses",
                x.nrows(),
                x.ncols(),
                names.len(),
                y.len()
            )));
        }
        if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(GlmError::NonBinaryResponse);
        }
        Ok(Self {
            names,
            x,
            y,
            encoding: None,
        })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

fn parts_for(term: &Term, levels: &BTreeMap<String, Vec<String>>) -> Vec<Part> {
    match term {
        Term::Factor { name, .. } => levels[name][1..]
            .iter()
            .map(|l| Part::Dummy {
                factor: name.clone(),
                level: l.clone(),
            })
            .collect(),
        Term::Covariate { name } => vec![Part::Value {
            covariate: name.clone(),
        }],
    }
}

/// Builds the treatment-coded design for `rows` under `spec`.
///
/// Column order: intercept, main-effect columns in term order (factor levels
/// sorted after the reference), then interaction columns in declaration
/// order. Factor×factor interaction columns are emitted only for level pairs
/// that occur together in the data.
pub fn encode_design(rows: &[Observation], spec: &RegressionSpec) -> Result<DesignMatrix, GlmError> {
    spec.validate()?;
    let mut factor_levels: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for term in &spec.terms {
        let Term::Factor { name, reference } = term else {
            continue;
        };
        let mut seen = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            let level = row
                .covariates
                .levels
                .get(name)
                .ok_or_else(|| GlmError::MissingValueInRow {
                    row: i,
                    term: name.clone(),
                })?;
            seen.insert(level.clone());
        }
        if !seen.remove(reference) {
            return Err(GlmError::UnknownReference {
                factor: name.clone(),
                level: reference.clone(),
            });
        }
        let mut levels = vec![reference.clone()];
        levels.extend(seen);
        factor_levels.insert(name.clone(), levels);
    }
    for term in &spec.terms {
        if let Term::Covariate { name } = term {
            if let Some(i) = rows.iter().position(|r| !r.covariates.values.contains_key(name)) {
                return Err(GlmError::MissingValueInRow {
                    row: i,
                    term: name.clone(),
                });
            }
        }
    }

    let mut columns = vec![Column::Intercept];
    for term in &spec.terms {
        columns.extend(parts_for(term, &factor_levels).into_iter().map(Column::Single));
    }
    for (left, right) in &spec.interactions {
        let lt = spec.term(left).expect("validated");
        let rt = spec.term(right).expect("validated");
        let both_factors = matches!((lt, rt), (Term::Factor { .. }, Term::Factor { .. }));
        let present: BTreeSet<(&str, &str)> = if both_factors {
            rows.iter()
                .map(|r| (r.covariates.levels[left].as_str(), r.covariates.levels[right].as_str()))
                .collect()
        } else {
            BTreeSet::new()
        };
        for a in parts_for(lt, &factor_levels) {
            for b in parts_for(rt, &factor_levels) {
                if let (Part::Dummy { level: la, .. }, Part::Dummy { level: lb, .. }) = (&a, &b) {
                    if !present.contains(&(la.as_str(), lb.as_str())) {
                        continue;
                    }
                }
                columns.push(Column::Product(a.clone(), b));
            }
        }
    }

    let encoding = Encoding {
        spec: spec.clone(),
        factor_levels,
        columns,
    };
    let p = encoding.columns.len();
    let mut x = DMatrix::<f64>::zeros(rows.len(), p);
    let mut y = DVector::<f64>::zeros(rows.len());
    for (i, row) in rows.iter().enumerate() {
        for (j, col) in encoding.columns.iter().enumerate() {
            x[(i, j)] = col.eval(&row.covariates)?;
        }
        y[i] = if row.response { 1.0 } else { 0.0 };
    }
    Ok(DesignMatrix {
        names: encoding.column_names(),
        x,
        y,
        encoding: Some(encoding),
    })
}
