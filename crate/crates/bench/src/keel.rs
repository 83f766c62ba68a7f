//! Reader and writer for KEEL `.dat` files.
//!
//! ```text
//! @relation iris0
//! @attribute SepalLength real [4.3, 7.9]
//! @attribute Class {positive, negative}
//! @inputs SepalLength
//! @outputs Class
//! @data
//! 5.1, positive
//! ```
//!
//! Keywords are case-insensitive and `%` starts a comment line. Without
//! `@inputs`/`@outputs` the last attribute is the output and every other one
//! an input. Nominal inputs are one-hot encoded; numeric inputs are kept on
//! their original scale (see [`crate::split::MinMax`] for normalization).

use std::fmt::Write as _;
use std::path::Path;

use ecsdbn_core::matrix::Matrix;
use ecsdbn_core::metrics::{class_counts, imbalance_ratio};
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, BenchError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AttributeKind {
    Real { range: Option<(f64, f64)> },
    Integer { range: Option<(f64, f64)> },
    Nominal(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    /// Number of encoded feature columns.
    pub fn width(&self) -> usize {
        match &self.kind {
            AttributeKind::Nominal(values) => values.len(),
            _ => 1,
        }
    }
}

/// A parsed data set with encoded features.
///
/// Labels are ordered by decreasing class frequency (declaration order breaks
/// ties), so for two-class problems the minority class is label 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub inputs: Vec<Attribute>,
    /// The nominal output attribute as declared.
    pub output: Attribute,
    /// N × d encoded features, unnormalized.
    pub features: Matrix,
    pub labels: Vec<usize>,
    /// Original class strings, indexed by label.
    pub class_names: Vec<String>,
    /// Label with the fewest samples; the positive class for binary metrics.
    pub minority_class: usize,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    /// Input attributes before one-hot encoding.
    pub fn n_attributes(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = class_counts(&self.labels);
        counts.resize(self.n_classes(), 0);
        counts
    }

    pub fn imbalance_ratio(&self) -> Result<f64> {
        Ok(imbalance_ratio(&self.labels)?)
    }

    /// Rows `indices`, same schema and label mapping.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ..self.clone()
        }
    }

    /// Re-expresses `self` (typically a test partition) in the label mapping
    /// of `reference`. Input schemas must agree.
    pub fn aligned_to(&self, reference: &Dataset) -> Result<Dataset> {
        if self.inputs != reference.inputs {
            return Err(BenchError::format(
                0,
                "input attributes differ from the reference data set",
            ));
        }
        let labels = self
            .labels
            .iter()
            .map(|&y| {
                let name = &self.class_names[y];
                reference.class_names.iter().position(|c| c == name).ok_or_else(|| {
                    BenchError::format(0, format!("class {name:?} not present in the reference data set"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            labels,
            class_names: reference.class_names.clone(),
            minority_class: reference.minority_class,
            output: reference.output.clone(),
            ..self.clone()
        })
    }
}

pub fn read_keel(path: &Path) -> Result<Dataset> {
    parse_keel(&read_to_string(path)?)
}

fn keyword(line: &str) -> Option<(String, &str)> {
    let rest = line.strip_prefix('@')?;
    let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
    Some((rest[..end].to_ascii_lowercase(), rest[end..].trim()))
}

fn parse_range(text: &str, line: usize) -> Result<Option<(f64, f64)>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(None);
    }
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| BenchError::format(line, format!("bad range {text:?}")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi] => {
            let lo = parse_number(lo, line)?;
            let hi = parse_number(hi, line)?;
            Ok(Some((lo, hi)))
        }
        _ => Err(BenchError::format(line, format!("bad range {text:?}"))),
    }
}

fn parse_number(text: &str, line: usize) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ if text == "?" || text.eq_ignore_ascii_case("<null>") => {
            Err(BenchError::format(line, "missing values are not supported"))
        }
        _ => Err(BenchError::format(line, format!("not a number: {text:?}"))),
    }
}

fn parse_attribute(rest: &str, line: usize) -> Result<Attribute> {
    let (name, spec) = if let Some(quoted) = rest.strip_prefix('\'') {
        let end = quoted
            .find('\'')
            .ok_or_else(|| BenchError::format(line, "unterminated attribute name"))?;
        (&quoted[..end], quoted[end + 1..].trim())
    } else {
        let end = rest
            .find(|c: char| c.is_whitespace() || c == '{')
            .ok_or_else(|| BenchError::format(line, "attribute without a type"))?;
        (&rest[..end], rest[end..].trim())
    };
    if name.is_empty() {
        return Err(BenchError::format(line, "empty attribute name"));
    }
    let kind = if let Some(values) = spec.strip_prefix('{') {
        let values = values
            .strip_suffix('}')
            .ok_or_else(|| BenchError::format(line, "unterminated nominal value set"))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(String::is_empty) {
            return Err(BenchError::format(line, "empty nominal value"));
        }
        AttributeKind::Nominal(values)
    } else {
        let end = spec.find(|c: char| c.is_whitespace() || c == '[').unwrap_or(spec.len());
        let range = parse_range(&spec[end..], line)?;
        match spec[..end].to_ascii_lowercase().as_str() {
            "real" | "numeric" => AttributeKind::Real { range },
            "integer" => AttributeKind::Integer { range },
            other => return Err(BenchError::format(line, format!("unknown attribute type {other:?}"))),
        }
    };
    Ok(Attribute {
        name: name.to_string(),
        kind,
    })
}

fn name_list(rest: &str) -> Vec<String> {
    rest.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Parses KEEL text into a [`Dataset`].
pub fn parse_keel(text: &str) -> Result<Dataset> {
    let mut relation = String::new();
    let mut attributes: Vec<(Attribute, usize)> = Vec::new();
    let mut inputs: Option<Vec<String>> = None;
    let mut outputs: Option<Vec<String>> = None;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut saw_data = false;

    for (no, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let (kw, rest) = keyword(line).ok_or_else(|| BenchError::format(no, "expected a header keyword"))?;
        match kw.as_str() {
            "relation" => relation = rest.to_string(),
            "attribute" => attributes.push((parse_attribute(rest, no)?, no)),
            "inputs" | "input" => inputs = Some(name_list(rest)),
            "outputs" | "output" => outputs = Some(name_list(rest)),
            "data" => {
                saw_data = true;
                break;
            }
            other => return Err(BenchError::format(no, format!("unknown keyword @{other}"))),
        }
    }
    if !saw_data {
        return Err(BenchError::format(0, "missing @data section"));
    }
    if attributes.len() < 2 {
        return Err(BenchError::format(
            0,
            "need at least one input and one output attribute",
        ));
    }

    let find = |name: &str| {
        attributes
            .iter()
            .position(|(a, _)| a.name == name)
            .ok_or_else(|| BenchError::format(0, format!("unknown attribute {name:?} in @inputs/@outputs")))
    };
    let output_idx = match &outputs {
        Some(names) if names.len() == 1 => find(&names[0])?,
        Some(names) => {
            return Err(BenchError::format(
                0,
                format!("expected exactly one output, found {}", names.len()),
            ));
        }
        None => attributes.len() - 1,
    };
    let input_idx: Vec<usize> = match &inputs {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
        None => (0..attributes.len()).filter(|&i| i != output_idx).collect(),
    };
    if input_idx.is_empty() || input_idx.contains(&output_idx) {
        return Err(BenchError::format(0, "inputs must be non-empty and exclude the output"));
    }
    let (output, output_line) = attributes[output_idx].clone();
    let declared_classes = match &output.kind {
        AttributeKind::Nominal(values) => values.clone(),
        _ => return Err(BenchError::format(output_line, "output attribute must be nominal")),
    };

    let width: usize = input_idx.iter().map(|&i| attributes[i].0.width()).sum();
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (no, line) in lines {
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != attributes.len() {
            return Err(BenchError::format(
                no,
                format!("expected {} values, found {}", attributes.len(), fields.len()),
            ));
        }
        for &i in &input_idx {
            match &attributes[i].0.kind {
                AttributeKind::Nominal(levels) => {
                    let hit = levels.iter().position(|l| l == fields[i]).ok_or_else(|| {
                        BenchError::format(
                            no,
                            format!("unknown value {:?} for {}", fields[i], attributes[i].0.name),
                        )
                    })?;
                    values.extend((0..levels.len()).map(|j| if j == hit { 1.0 } else { 0.0 }));
                }
                _ => values.push(parse_number(fields[i], no)?),
            }
        }
        let class = declared_classes
            .iter()
            .position(|c| c == fields[output_idx])
            .ok_or_else(|| BenchError::format(no, format!("unknown class {:?}", fields[output_idx])))?;
        raw_labels.push(class);
    }
    if raw_labels.is_empty() {
        return Err(BenchError::format(0, "no data rows"));
    }

    // order classes by decreasing count, declaration order on ties
    let mut counts = vec![0usize; declared_classes.len()];
    for &c in &raw_labels {
        counts[c] += 1;
    }
    let mut order: Vec<usize> = (0..declared_classes.len()).filter(|&c| counts[c] > 0).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    if order.len() < 2 {
        return Err(BenchError::format(0, "data must contain at least two classes"));
    }
    let mut remap = vec![usize::MAX; declared_classes.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let min_count = counts[order[order.len() - 1]];
    let minority_class = order.iter().position(|&c| counts[c] == min_count).expect("non-empty");

    Ok(Dataset {
        name: relation,
        inputs: input_idx.iter().map(|&i| attributes[i].0.clone()).collect(),
        output,
        features: Matrix::from_vec(raw_labels.len(), width, values)?,
        labels: raw_labels.iter().map(|&c| remap[c]).collect(),
        class_names: order.iter().map(|&c| declared_classes[c].clone()).collect(),
        minority_class,
    })
}

fn write_attribute(out: &mut String, a: &Attribute) {
    let range = |r: &Option<(f64, f64)>| match r {
        Some((lo, hi)) => format!(" [{lo}, {hi}]"),
        None => String::new(),
    };
    let _ = match &a.kind {
        AttributeKind::Real { range: r } => writeln!(out, "@attribute {} real{}", a.name, range(r)),
        AttributeKind::Integer { range: r } => writeln!(out, "@attribute {} integer{}", a.name, range(r)),
        AttributeKind::Nominal(values) => writeln!(out, "@attribute {} {{{}}}", a.name, values.join(", ")),
    };
}

/// Writes `ds` back to KEEL text. Parsing the result gives back `ds`.
pub fn to_keel_string(ds: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@relation {}", ds.name);
    for a in ds.inputs.iter().chain(std::iter::once(&ds.output)) {
        write_attribute(&mut out, a);
    }
    let names: Vec<&str> = ds.inputs.iter().map(|a| a.name.as_str()).collect();
    let _ = writeln!(out, "@inputs {}", names.join(", "));
    let _ = writeln!(out, "@outputs {}", ds.output.name);
    out.push_str("@data\n");
    for (row, &label) in ds.features.iter_rows().zip(&ds.labels) {
        let mut col = 0;
        for a in &ds.inputs {
            match &a.kind {
                AttributeKind::Nominal(levels) => {
                    let hot = row[col..col + levels.len()].iter().position(|&v| v == 1.0).unwrap_or(0);
                    out.push_str(&levels[hot]);
                    col += levels.len();
                }
                _ => {
                    let _ = write!(out, "{}", row[col]);
                    col += 1;
                }
            }
            out.push_str(", ");
        }
        out.push_str(&ds.class_names[label]);
        out.push('\n');
    }
    out
}

pub fn write_keel(ds: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_keel_string(ds)).map_err(|e| BenchError::io(path, e))
}
