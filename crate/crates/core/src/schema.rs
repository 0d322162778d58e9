//! Attribute schema, discretization and the one-hot bit layout.
//!
//! Every predictive attribute owns a contiguous segment of the encoded bit
//! string, one bit per level, laid out in document order. The target
//! attribute is encoded separately as a class index.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hashing::json_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Predictive,
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub levels: Vec<String>,
    pub role: Role,
}

impl Attribute {
    pub fn new(name: &str, levels: &[&str], role: Role) -> Self {
        Attribute {
            name: name.to_string(),
            levels: levels.iter().map(|l| l.to_string()).collect(),
            role,
        }
    }

    pub fn level_index(&self, token: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == token)
    }
}

/// Bit range `[offset, offset + len)` of one predictive attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub offset: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// On-disk form: `{"attributes": [{"name", "levels", "role"}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaDocument {
    pub attributes: Vec<Attribute>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DocumentForm {
    Wrapped(SchemaDocument),
    Bare(Vec<Attribute>),
}

/// Ordered categorical attributes: N predictive attributes plus one target.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
    /// Indices into `attributes` of the predictive attributes, in order.
    predictive: Vec<usize>,
    segments: Vec<Segment>,
    target: usize,
    total_bits: usize,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut names = HashSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute name {:?}", attr.name)));
            }
            if attr.levels.is_empty() {
                return Err(Error::Schema(format!("attribute {:?} has no levels", attr.name)));
            }
            let mut seen = HashSet::new();
            for level in &attr.levels {
                if !seen.insert(level.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate level {level:?} in attribute {:?}",
                        attr.name
                    )));
                }
            }
        }
        let targets: Vec<usize> = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::Target)
            .map(|(i, _)| i)
            .collect();
        let target = match targets.as_slice() {
            [] => return Err(Error::Schema("no target attribute".into())),
            [t] => *t,
            _ => {
                return Err(Error::Schema(format!(
                    "{} target attributes; exactly one is required",
                    targets.len()
                )))
            }
        };

        let predictive: Vec<usize> = (0..attributes.len()).filter(|&i| i != target).collect();
        let mut segments = Vec::with_capacity(predictive.len());
        let mut offset = 0;
        for &i in &predictive {
            let len = attributes[i].levels.len();
            segments.push(Segment { offset, len });
            offset += len;
        }
        Ok(AttributeSchema {
            attributes,
            predictive,
            segments,
            target,
            total_bits: offset,
        })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn predictive_count(&self) -> usize {
        self.predictive.len()
    }

    /// The `p`-th predictive attribute.
    pub fn predictive(&self, p: usize) -> &Attribute {
        &self.attributes[self.predictive[p]]
    }

    pub fn predictive_attributes(&self) -> impl Iterator<Item = &Attribute> + '_ {
        self.predictive.iter().map(|&i| &self.attributes[i])
    }

    pub fn segment(&self, p: usize) -> Segment {
        self.segments[p]
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn predictive_index(&self, name: &str) -> Option<usize> {
        self.predictive
            .iter()
            .position(|&i| self.attributes[i].name == name)
    }

    pub fn target(&self) -> &Attribute {
        &self.attributes[self.target]
    }

    /// Position of the target among all attributes (CSV column order).
    pub fn target_position(&self) -> usize {
        self.target
    }

    pub fn total_predictive_bits(&self) -> usize {
        self.total_bits
    }

    pub fn target_bits(&self) -> usize {
        self.target().levels.len()
    }

    pub fn to_document(&self) -> SchemaDocument {
        SchemaDocument {
            attributes: self.attributes.clone(),
        }
    }

    /// SHA-256 of the canonical JSON document.
    pub fn hash(&self) -> String {
        json_hash(&self.to_document())
    }
}

/// Parses a JSON schema document, either `{"attributes": [...]}` or a bare
/// array of attributes.
pub fn load_schema(document: &str) -> Result<AttributeSchema> {
    let form: DocumentForm =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    let attributes = match form {
        DocumentForm::Wrapped(doc) => doc.attributes,
        DocumentForm::Bare(attrs) => attrs,
    };
    AttributeSchema::new(attributes)
}

pub const GENDER: &str = "Gender";
pub const REASONING: &str = "Reasoning";

pub const LEARNING_SKILLS: [&str; 7] = [
    "Management of dispersants",
    "Management of study time",
    "Summing and taking notes",
    "Preparing for examinations",
    "Organization of information",
    // Extracted rules also call this "Maintaining learning".
    "Continuation of study",
    "Use of computer & Internet",
];

pub const INTERNAL_MOTIVATION: [&str; 4] = ["Challenge", "Desire to work", "Ambition", "Self-reliance"];

pub const EXTERNAL_MOTIVATION: [&str; 4] = [
    "Fear of failure",
    "Social motivations",
    "Awareness of time importance",
    "Competition",
];

pub const CLASSROOM_INTERACTION: [&str; 3] = [
    "Potential of the classroom",
    "Student's positivity",
    "Teacher's positivity",
];

pub const UNITS: [&str; 5] = ["Unit 1", "Unit 2", "Unit 3", "Unit 4", "Unit 5"];

pub const SCALE_LEVELS: [&str; 3] = ["L", "M", "H"];
pub const GRADE_LEVELS: [&str; 4] = ["F", "P", "G", "V.G"];
pub const GENDER_LEVELS: [&str; 2] = ["Ma", "Fe"];

/// All motivation dimensions, internal first.
pub fn motivation_dimensions() -> impl Iterator<Item = &'static str> {
    INTERNAL_MOTIVATION.iter().chain(EXTERNAL_MOTIVATION.iter()).copied()
}

/// The student-model schema: gender, seven learning skills, eight
/// motivation scales, three classroom-interaction scales and five unit
/// grades, predicting the logical-reasoning grade.
pub fn paper_default_schema() -> AttributeSchema {
    let mut attrs = vec![Attribute::new(GENDER, &GENDER_LEVELS, Role::Predictive)];
    for name in LEARNING_SKILLS
        .iter()
        .copied()
        .chain(motivation_dimensions())
        .chain(CLASSROOM_INTERACTION.iter().copied())
    {
        attrs.push(Attribute::new(name, &SCALE_LEVELS, Role::Predictive));
    }
    for name in UNITS {
        attrs.push(Attribute::new(name, &GRADE_LEVELS, Role::Predictive));
    }
    attrs.push(Attribute::new(REASONING, &GRADE_LEVELS, Role::Target));
    AttributeSchema::new(attrs).expect("built-in schema is valid")
}

/// One student: level index per predictive attribute, target class index,
/// and optional raw scores aligned with [`Dataset::raw_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudentRecord {
    pub levels: Vec<usize>,
    pub target: usize,
    pub raw: Vec<f64>,
}

impl StudentRecord {
    /// Builds a record from `(attribute, token)` pairs covering every
    /// attribute of the schema.
    pub fn from_tokens(schema: &AttributeSchema, tokens: &[(&str, &str)]) -> Result<Self> {
        let lookup: BTreeMap<&str, &str> = tokens.iter().copied().collect();
        let resolve = |attr: &Attribute| -> Result<usize> {
            let token = lookup
                .get(attr.name.as_str())
                .ok_or_else(|| Error::Record(format!("missing attribute {:?}", attr.name)))?;
            attr.level_index(token).ok_or_else(|| {
                Error::Record(format!("unknown level {token:?} for attribute {:?}", attr.name))
            })
        };
        let levels = schema
            .predictive_attributes()
            .map(resolve)
            .collect::<Result<Vec<_>>>()?;
        let target = resolve(schema.target())?;
        Ok(StudentRecord {
            levels,
            target,
            raw: Vec::new(),
        })
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        if self.levels.len() != schema.predictive_count() {
            return Err(Error::Dimension {
                expected: schema.predictive_count(),
                actual: self.levels.len(),
            });
        }
        for (p, &level) in self.levels.iter().enumerate() {
            let attr = schema.predictive(p);
            if level >= attr.levels.len() {
                return Err(Error::Record(format!(
                    "level index {level} out of range for attribute {:?}",
                    attr.name
                )));
            }
        }
        if self.target >= schema.target_bits() {
            return Err(Error::Record(format!(
                "target index {} out of range for {:?}",
                self.target,
                schema.target().name
            )));
        }
        Ok(())
    }

    pub fn token<'s>(&self, schema: &'s AttributeSchema, p: usize) -> &'s str {
        &schema.predictive(p).levels[self.levels[p]]
    }

    pub fn target_token<'s>(&self, schema: &'s AttributeSchema) -> &'s str {
        &schema.target().levels[self.target]
    }
}

/// Records plus the names of their raw-score columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub raw_names: Vec<String>,
    pub records: Vec<StudentRecord>,
}

impl Dataset {
    pub fn raw_column(&self, name: &str) -> Option<usize> {
        self.raw_names.iter().position(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A training pattern: one-hot predictive bits and the class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedVector {
    pub bits: BitString,
    pub target_index: usize,
}

pub fn encode_record(record: &StudentRecord, schema: &AttributeSchema) -> Result<EncodedVector> {
    record.validate(schema)?;
    let mut bits = BitString::zeros(schema.total_predictive_bits());
    for (p, &level) in record.levels.iter().enumerate() {
        bits.set(schema.segment(p).offset + level, true);
    }
    Ok(EncodedVector {
        bits,
        target_index: record.target,
    })
}

/// Inverse of [`encode_record`]; fails unless every segment is one-hot.
pub fn decode_vector(vector: &EncodedVector, schema: &AttributeSchema) -> Result<StudentRecord> {
    if vector.bits.len() != schema.total_predictive_bits() {
        return Err(Error::Dimension {
            expected: schema.total_predictive_bits(),
            actual: vector.bits.len(),
        });
    }
    let mut levels = Vec::with_capacity(schema.predictive_count());
    for (p, seg) in schema.segments().iter().enumerate() {
        let set: Vec<usize> = seg
            .range()
            .filter(|&i| vector.bits.get(i))
            .map(|i| i - seg.offset)
            .collect();
        match set.as_slice() {
            [level] => levels.push(*level),
            _ => {
                return Err(Error::Record(format!(
                    "segment for {:?} is not one-hot",
                    schema.predictive(p).name
                )))
            }
        }
    }
    let record = StudentRecord {
        levels,
        target: vector.target_index,
        raw: Vec::new(),
    };
    record.validate(schema)?;
    Ok(record)
}

pub fn encode_dataset(records: &[StudentRecord], schema: &AttributeSchema) -> Result<Vec<EncodedVector>> {
    records.iter().map(|r| encode_record(r, schema)).collect()
}

/// Left-closed bands over a raw score: `cuts[i-1] <= s < cuts[i]` maps to
/// `levels[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub cuts: Vec<f64>,
    pub levels: Vec<String>,
}

impl Bands {
    pub fn new(cuts: Vec<f64>, levels: Vec<String>) -> Result<Self> {
        if levels.len() != cuts.len() + 1 {
            return Err(Error::Config(format!(
                "{} cut points need {} levels, got {}",
                cuts.len(),
                cuts.len() + 1,
                levels.len()
            )));
        }
        if cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("cut points must be finite".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("cut points not strictly increasing: {cuts:?}")));
        }
        Ok(Bands { cuts, levels })
    }

    /// Bands at the empirical quantiles `i / levels.len()` of `sample`.
    pub fn quantiles(sample: &[f64], levels: &[&str]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientData("empty sample for quantile cuts".into()));
        }
        let mut sorted = sample.to_vec();
        if sorted.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("NaN in quantile sample".into()));
        }
        sorted.sort_by(f64::total_cmp);
        let k = levels.len();
        let cuts = (1..k).map(|i| quantile_sorted(&sorted, i as f64 / k as f64)).collect();
        Bands::new(cuts, levels.iter().map(|s| s.to_string()).collect())
    }

    pub fn tertiles(sample: &[f64]) -> Result<Self> {
        Bands::quantiles(sample, &SCALE_LEVELS)
    }

    pub fn grades(cuts: [f64; 3]) -> Self {
        Bands::new(cuts.to_vec(), GRADE_LEVELS.iter().map(|s| s.to_string()).collect())
            .expect("grade bands are valid")
    }

    pub fn level_of(&self, score: f64) -> Result<usize> {
        if score.is_nan() {
            return Err(Error::Domain("NaN score".into()));
        }
        Ok(self.cuts.partition_point(|&c| c <= score))
    }
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per raw dimension, the bands that turn scores into level tokens.
/// Dimension names coincide with attribute names.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscretizationSpec {
    pub dimensions: BTreeMap<String, Bands>,
}

impl DiscretizationSpec {
    pub fn insert(&mut self, dimension: &str, bands: Bands) {
        self.dimensions.insert(dimension.to_string(), bands);
    }

    pub fn discretize(&self, dimension: &str, score: f64) -> Result<&str> {
        let bands = self
            .dimensions
            .get(dimension)
            .ok_or_else(|| Error::Config(format!("no discretization for dimension {dimension:?}")))?;
        let level = bands.level_of(score)?;
        Ok(&bands.levels[level])
    }

    /// Maps each `(dimension, score)` to `(dimension, token)`.
    pub fn discretize_record(&self, raw: &[(&str, f64)]) -> Result<Vec<(String, String)>> {
        raw.iter()
            .map(|&(dim, score)| {
                self.discretize(dim, score)
                    .map(|token| (dim.to_string(), token.to_string()))
            })
            .collect()
    }
}

pub const RAW_PREFIX: &str = "raw:";

/// Parses a cohort CSV.
///
/// The header lists every schema attribute in schema order, optionally
/// followed by `raw:<dimension>` columns holding real-valued scores.
pub fn parse_dataset_csv(text: &str, schema: &AttributeSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(row) => row.map_err(|e| csv_error(1, 0, "", e.to_string()))?,
        None => return Err(csv_error(1, 0, "", "empty file".into())),
    };
    let attrs = schema.attributes();
    if header.len() < attrs.len() {
        return Err(csv_error(
            1,
            header.len() + 1,
            &attrs[header.len()].name,
            "header is missing this attribute".into(),
        ));
    }
    for (i, attr) in attrs.iter().enumerate() {
        if header[i].trim() != attr.name {
            return Err(csv_error(
                1,
                i + 1,
                &attr.name,
                format!("header mismatch: found {:?}", &header[i]),
            ));
        }
    }
    let mut raw_names = Vec::new();
    for (i, name) in header.iter().enumerate().skip(attrs.len()) {
        match name.trim().strip_prefix(RAW_PREFIX) {
            Some(dim) if !dim.is_empty() => raw_names.push(dim.to_string()),
            _ => {
                return Err(csv_error(
                    1,
                    i + 1,
                    name,
                    format!("unexpected column; extra columns must be named {RAW_PREFIX}<dimension>"),
                ))
            }
        }
    }
    let width = attrs.len() + raw_names.len();

    let mut records = Vec::new();
    for (r, row) in rows.enumerate() {
        let line = r + 2;
        let row = row.map_err(|e| csv_error(line, 0, "", e.to_string()))?;
        if row.len() != width {
            return Err(csv_error(
                line,
                row.len().min(width) + 1,
                "",
                format!("ragged row: {} fields, header has {width}", row.len()),
            ));
        }
        let mut levels = Vec::with_capacity(schema.predictive_count());
        let mut target = 0;
        for (c, attr) in attrs.iter().enumerate() {
            let token = row[c].trim();
            let level = attr.level_index(token).ok_or_else(|| {
                csv_error(
                    line,
                    c + 1,
                    &attr.name,
                    format!("unknown level {token:?} (expected one of {})", attr.levels.join(", ")),
                )
            })?;
            if attr.role == Role::Target {
                target = level;
            } else {
                levels.push(level);
            }
        }
        let raw = (attrs.len()..width)
            .map(|c| {
                row[c].trim().parse::<f64>().map_err(|_| {
                    csv_error(line, c + 1, &header[c], format!("not a number: {:?}", &row[c]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        records.push(StudentRecord { levels, target, raw });
    }
    Ok(Dataset { raw_names, records })
}

fn csv_error(line: usize, column: usize, attribute: &str, message: String) -> Error {
    Error::Csv {
        line,
        column,
        attribute: attribute.to_string(),
        message,
    }
}

/// Writes a dataset in the format read by [`parse_dataset_csv`].
pub fn write_dataset_csv(dataset: &Dataset, schema: &AttributeSchema) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = schema
        .attributes()
        .iter()
        .map(|a| a.name.clone())
        .chain(dataset.raw_names.iter().map(|n| format!("{RAW_PREFIX}{n}")))
        .collect();
    writer.write_record(&header).map_err(csv_write_error)?;
    for record in &dataset.records {
        record.validate(schema)?;
        if record.raw.len() != dataset.raw_names.len() {
            return Err(Error::Dimension {
                expected: dataset.raw_names.len(),
                actual: record.raw.len(),
            });
        }
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        let mut p = 0;
        for attr in schema.attributes() {
            if attr.role == Role::Target {
                fields.push(record.target_token(schema).to_string());
            } else {
                fields.push(record.token(schema, p).to_string());
                p += 1;
            }
        }
        fields.extend(record.raw.iter().map(|x| x.to_string()));
        writer.write_record(&fields).map_err(csv_write_error)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_write_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}
