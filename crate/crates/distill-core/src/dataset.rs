//! Labeled datasets with a declared input layout, plus JSON-lines IO.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a single sample's input. `Concat` holds ragged parts that are
/// flattened in order (e.g. a rule-bit prefix followed by a grid).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputLayout {
    Vector(usize),
    Grid(usize, usize),
    Concat(Vec<InputLayout>),
}

impl InputLayout {
    pub fn len(&self) -> usize {
        match self {
            InputLayout::Vector(n) => *n,
            InputLayout::Grid(r, c) => r * c,
            InputLayout::Concat(parts) => parts.iter().map(|p| p.len()).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn describe(&self) -> String {
        match self {
            InputLayout::Vector(n) => format!("vector({n})"),
            InputLayout::Grid(r, c) => format!("grid({r},{c})"),
            InputLayout::Concat(parts) => {
                let inner: Vec<String> = parts.iter().map(|p| p.describe()).collect();
                format!("concat({})", inner.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Class(String),
    Probability(f64, f64),
}

impl Label {
    pub fn class(s: impl Into<String>) -> Self {
        Label::Class(s.into())
    }

    pub fn describe(&self) -> String {
        match self {
            Label::Class(s) => s.clone(),
            Label::Probability(a, b) => format!("({a},{b})"),
        }
    }

    pub fn class_name(&self) -> Option<&str> {
        match self {
            Label::Class(s) => Some(s),
            Label::Probability(..) => None,
        }
    }

    /// Exact key usable for grouping (probability pairs compared bitwise).
    pub fn key(&self) -> String {
        match self {
            Label::Class(s) => format!("c:{s}"),
            Label::Probability(a, b) => format!("p:{}:{}", a.to_bits(), b.to_bits()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelKind {
    Class,
    ProbabilityPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: Vec<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub layout: InputLayout,
    pub label_kind: LabelKind,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(layout: InputLayout, label_kind: LabelKind, samples: Vec<Sample>) -> Self {
        Dataset { layout, label_kind, samples }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::DatasetEmpty);
        }
        let n = self.layout.len();
        for s in &self.samples {
            if s.input.len() != n {
                return Err(Error::InputLayout {
                    expected: self.layout.describe(),
                    got: format!("{} values", s.input.len()),
                });
            }
        }
        Ok(())
    }

    /// Errors if the same input appears under two different labels.
    pub fn check_contradictions(&self) -> Result<()> {
        let mut seen: std::collections::HashMap<Vec<u64>, &Label> = Default::default();
        for s in &self.samples {
            let key: Vec<u64> = s.input.iter().map(|v| v.to_bits()).collect();
            if let Some(prev) = seen.get(&key) {
                if prev.key() != s.label.key() {
                    return Err(Error::Contradiction(prev.describe(), s.label.describe()));
                }
            } else {
                seen.insert(key, &s.label);
            }
        }
        Ok(())
    }

    /// Distinct labels in order of first appearance.
    pub fn label_order(&self) -> Vec<Label> {
        let mut out: Vec<Label> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for s in &self.samples {
            if seen.insert(s.label.key()) {
                out.push(s.label.clone());
            }
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for s in &self.samples {
            let rec = SampleRecord::from_sample(s, &self.layout);
            serde_json::to_writer(&mut f, &rec)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path, label_kind: LabelKind) -> Result<Dataset> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut samples = Vec::new();
        let mut layout: Option<InputLayout> = None;
        for line in f.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleRecord = serde_json::from_str(&line)?;
            let (l, input) = rec.input.into_layout();
            match &layout {
                None => layout = Some(l),
                Some(prev) if *prev != l => {
                    return Err(Error::InputLayout {
                        expected: prev.describe(),
                        got: l.describe(),
                    })
                }
                _ => {}
            }
            samples.push(Sample { input, label: rec.label.into_label()? });
        }
        let layout = layout.ok_or(Error::DatasetEmpty)?;
        let ds = Dataset::new(layout, label_kind, samples);
        ds.validate()?;
        Ok(ds)
    }
}

/// On-disk record: `{"input": [..] or [[..]], "label": ...}`.
///
/// A flat array is a vector; nested rows of equal length are a grid; ragged
/// rows are a concatenation of vector parts.
#[derive(Serialize, Deserialize)]
struct SampleRecord {
    input: InputRecord,
    label: LabelRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InputRecord {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl InputRecord {
    fn into_layout(self) -> (InputLayout, Vec<f64>) {
        match self {
            InputRecord::Flat(v) => (InputLayout::Vector(v.len()), v),
            InputRecord::Nested(rows) => {
                let ragged = rows.windows(2).any(|w| w[0].len() != w[1].len());
                let layout = if ragged {
                    InputLayout::Concat(rows.iter().map(|r| InputLayout::Vector(r.len())).collect())
                } else {
                    InputLayout::Grid(rows.len(), rows.first().map_or(0, |r| r.len()))
                };
                (layout, rows.into_iter().flatten().collect())
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LabelRecord {
    Num(f64),
    Text(String),
    Pair([f64; 2]),
}

impl LabelRecord {
    fn into_label(self) -> Result<Label> {
        Ok(match self {
            LabelRecord::Num(v) => {
                if v.fract() == 0.0 {
                    Label::Class(format!("{}", v as i64))
                } else {
                    Label::Class(format!("{v}"))
                }
            }
            LabelRecord::Text(s) => Label::Class(s),
            LabelRecord::Pair([a, b]) => Label::Probability(a, b),
        })
    }
}

impl SampleRecord {
    fn from_sample(s: &Sample, layout: &InputLayout) -> SampleRecord {
        let input = match layout {
            InputLayout::Vector(_) => InputRecord::Flat(s.input.clone()),
            InputLayout::Grid(r, c) => {
                InputRecord::Nested((0..*r).map(|i| s.input[i * c..(i + 1) * c].to_vec()).collect())
            }
            InputLayout::Concat(parts) => {
                let mut rows = Vec::new();
                let mut off = 0;
                for p in parts {
                    rows.push(s.input[off..off + p.len()].to_vec());
                    off += p.len();
                }
                InputRecord::Nested(rows)
            }
        };
        let label = match &s.label {
            Label::Class(c) => LabelRecord::Text(c.clone()),
            Label::Probability(a, b) => LabelRecord::Pair([*a, *b]),
        };
        SampleRecord { input, label }
    }
}
