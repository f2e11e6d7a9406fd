//! Flat group-by summaries over entity attributes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::graph::{compare_values, ErGraph, NodeId, Scalar, TermId};
use crate::plan::BindingTable;

use super::{FolderNode, SummarizeError};

/// Bucket label for entities lacking a dimension attribute.
pub const MISSING: &str = "⊥";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Count,
    Sum,
    Min,
    Max,
    Avg,
}

impl FromStr for Aggregate {
    type Err = SummarizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "count" => Aggregate::Count,
            "sum" => Aggregate::Sum,
            "min" => Aggregate::Min,
            "max" => Aggregate::Max,
            "avg" => Aggregate::Avg,
            _ => return Err(SummarizeError::UnknownAggregate(s.to_string())),
        })
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregate::Count => "count",
            Aggregate::Sum => "sum",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
            Aggregate::Avg => "avg",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measure {
    pub attribute: String,
    pub aggregate: Aggregate,
}

impl Measure {
    pub fn new(aggregate: Aggregate, attribute: &str) -> Self {
        Self {
            attribute: attribute.strip_prefix('@').unwrap_or(attribute).to_string(),
            aggregate,
        }
    }

    pub fn count() -> Self {
        Self::new(Aggregate::Count, "*")
    }

    fn column(&self) -> String {
        match self.aggregate {
            Aggregate::Count => "count".to_string(),
            agg => format!("{agg}({})", self.attribute),
        }
    }
}

impl FromStr for Measure {
    type Err = SummarizeError;

    /// `count`, `count(*)` or `agg(attribute)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once('(') {
            Some((agg, rest)) => {
                let attr = rest.strip_suffix(')').unwrap_or(rest).trim();
                Ok(Measure::new(agg.trim().parse()?, attr))
            }
            None => Ok(Measure::new(s.parse()?, "*")),
        }
    }
}

fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn aggregate(m: &Measure, g: &ErGraph, rows: &[TermId]) -> String {
    if m.aggregate == Aggregate::Count {
        return rows.len().to_string();
    }
    let values: Vec<&str> = rows.iter().filter_map(|&r| g.attribute(r, &m.attribute)).collect();
    let numbers: Vec<f64> = values
        .iter()
        .filter_map(|v| Scalar::infer(v).as_f64())
        .collect();
    let out = match m.aggregate {
        Aggregate::Count => unreachable!(),
        Aggregate::Sum => (!numbers.is_empty()).then(|| format_number(numbers.iter().sum())),
        Aggregate::Avg => (!numbers.is_empty())
            .then(|| format_number(numbers.iter().sum::<f64>() / numbers.len() as f64)),
        Aggregate::Min => values
            .iter()
            .min_by(|a, b| compare_values(a, b))
            .map(|v| v.to_string()),
        Aggregate::Max => values
            .iter()
            .max_by(|a, b| compare_values(a, b))
            .map(|v| v.to_string()),
    };
    out.unwrap_or_else(|| MISSING.to_string())
}

/// Groups the members of `folder` (every entity when `None`) by the values
/// of `dimensions` and computes `measures` per group. Rows are ordered by
/// dimension values.
pub fn group_summarize(
    g: &ErGraph,
    folder: Option<&FolderNode>,
    dimensions: &[String],
    measures: &[Measure],
) -> Result<BindingTable, SummarizeError> {
    let members: Vec<TermId> = match folder {
        Some(f) => f.members.iter().filter_map(|id| g.lookup(id)).collect(),
        None => g.entities().collect(),
    };
    let mut groups: BTreeMap<Vec<&str>, Vec<TermId>> = BTreeMap::new();
    for &m in &members {
        let key = dimensions
            .iter()
            .map(|d| g.attribute(m, d).unwrap_or(MISSING))
            .collect();
        groups.entry(key).or_default().push(m);
    }
    let mut columns: Vec<String> = dimensions
        .iter()
        .map(|d| d.strip_prefix('@').unwrap_or(d).to_string())
        .collect();
    columns.extend(measures.iter().map(Measure::column));
    let rows = groups
        .into_iter()
        .map(|(key, rows)| {
            key.into_iter()
                .map(str::to_string)
                .chain(measures.iter().map(|m| aggregate(m, g, &rows)))
                .map(NodeId::literal)
                .collect()
        })
        .collect();
    Ok(BindingTable { columns, rows })
}
