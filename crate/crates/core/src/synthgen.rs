//! Synthetic student cohorts from published summary statistics.
//!
//! Each group (gender) is sampled from a multivariate normal with the given
//! means, standard deviations and correlation matrix. Scores are then
//! discretized into level tokens; the target is either discretized from its
//! own raw dimension or assigned by a planted rule list.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::json_hash;
use crate::linalg;
use crate::schema::{
    AttributeSchema, Bands, Dataset, DiscretizationSpec, Role, StudentRecord, CLASSROOM_INTERACTION,
    GENDER, GENDER_LEVELS, LEARNING_SKILLS, REASONING, UNITS,
};
use crate::seed;

pub use crate::linalg::cholesky_factor;

/// Smallest eigenvalue kept when repairing a correlation matrix.
pub const REPAIR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    /// Token of the group, e.g. a gender level.
    pub label: String,
    pub n: usize,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub dimensions: Vec<String>,
    pub groups: Vec<GroupSpec>,
    pub seed: u64,
    /// Replace a non positive definite correlation matrix by its nearest
    /// positive definite correlation matrix instead of failing.
    #[serde(default = "default_repair")]
    pub repair: bool,
}

fn default_repair() -> bool {
    true
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.dimensions.len();
        if d == 0 {
            return Err(Error::Config("population has no dimensions".into()));
        }
        if self.groups.is_empty() {
            return Err(Error::Config("population has no groups".into()));
        }
        for g in &self.groups {
            let ctx = |msg: String| Error::Config(format!("group {:?}: {msg}", g.label));
            if g.n == 0 {
                return Err(ctx("n must be at least 1".into()));
            }
            if g.means.len() != d || g.sds.len() != d {
                return Err(ctx(format!("expected {d} means and sds")));
            }
            if g.means.iter().any(|m| !m.is_finite()) {
                return Err(ctx("means must be finite".into()));
            }
            if g.sds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(ctx("sds must be finite and non-negative".into()));
            }
            if g.correlation.len() != d || g.correlation.iter().any(|row| row.len() != d) {
                return Err(ctx(format!("correlation must be {d}x{d}")));
            }
            for i in 0..d {
                if g.correlation[i][i] != 1.0 {
                    return Err(ctx(format!("correlation diagonal entry {i} is not 1")));
                }
                for j in 0..i {
                    let r = g.correlation[i][j];
                    if !(-1.0..=1.0).contains(&r) || r != g.correlation[j][i] {
                        return Err(ctx(format!("correlation entry ({i},{j}) invalid or asymmetric")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        json_hash(self)
    }
}

/// Raw scores of one group, `rows[k][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGroup {
    pub label: String,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub dimensions: Vec<String>,
    pub groups: Vec<RawGroup>,
}

impl RawTable {
    pub fn column(&self, dimension: &str) -> Option<Vec<f64>> {
        let d = self.dimensions.iter().position(|n| n == dimension)?;
        Some(self.groups.iter().flat_map(|g| g.rows.iter().map(move |r| r[d])).collect())
    }
}

/// Lower Cholesky factor of the group's correlation matrix, repairing it
/// first when allowed and needed.
fn correlation_factor(group: &GroupSpec, repair: bool) -> Result<DMatrix<f64>> {
    let d = group.correlation.len();
    let matrix = DMatrix::from_fn(d, d, |i, j| group.correlation[i][j]);
    match cholesky_factor(&matrix) {
        Ok(l) => Ok(l),
        Err(e) if repair => {
            log::warn!("group {:?}: {e}; using nearest positive definite correlation", group.label);
            cholesky_factor(&linalg::nearest_correlation(&matrix, REPAIR_FLOOR))
        }
        Err(e) => Err(e),
    }
}

/// The correlation matrix a group is actually sampled from: `L Lᵀ` of the
/// (possibly repaired) factor.
pub fn effective_correlation(group: &GroupSpec, repair: bool) -> Result<Vec<Vec<f64>>> {
    let l = correlation_factor(group, repair)?;
    let r = &l * l.transpose();
    Ok((0..r.nrows()).map(|i| r.row(i).iter().copied().collect()).collect())
}

/// Rows `mean + sd ⊙ (L z)` with `z` standard normal. Group `g` draws from
/// its own stream derived from the spec seed.
pub fn sample_population(spec: &PopulationSpec) -> Result<RawTable> {
    spec.validate()?;
    let d = spec.dimensions.len();
    let mut groups = Vec::with_capacity(spec.groups.len());
    for (g, group) in spec.groups.iter().enumerate() {
        let l = correlation_factor(group, spec.repair)?;
        let mut rng = seed::rng(seed::derive_seed(spec.seed, "synthgen/group", g as u64));
        let mut z = vec![0.0; d];
        let rows = (0..group.n)
            .map(|_| {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                (0..d)
                    .map(|i| {
                        let lz: f64 = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
                        group.means[i] + group.sds[i] * lz
                    })
                    .collect()
            })
            .collect();
        groups.push(RawGroup {
            label: group.label.clone(),
            rows,
        });
    }
    Ok(RawTable {
        dimensions: spec.dimensions.clone(),
        groups,
    })
}

/// Discretizes a raw table into records.
///
/// The attribute named `Gender` (if any) takes the group label; every other
/// attribute, target included, is discretized from the raw dimension of the
/// same name. A target without a raw dimension is left at class 0 for
/// [`plant_rules`] to fill in.
pub fn build_records(
    table: &RawTable,
    discretization: &DiscretizationSpec,
    schema: &AttributeSchema,
) -> Result<Vec<StudentRecord>> {
    let dim_of: BTreeMap<&str, usize> = table
        .dimensions
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let level = |attr: &crate::schema::Attribute, group: &str, row: &[f64]| -> Result<Option<usize>> {
        if attr.name == GENDER {
            return attr
                .level_index(group)
                .map(Some)
                .ok_or_else(|| Error::Config(format!("group label {group:?} is not a level of {GENDER}")));
        }
        let Some(&d) = dim_of.get(attr.name.as_str()) else {
            return Ok(None);
        };
        let token = discretization.discretize(&attr.name, row[d])?;
        attr.level_index(token)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("band token {token:?} is not a level of {:?}", attr.name)))
    };

    let mut records = Vec::new();
    for group in &table.groups {
        for row in &group.rows {
            let mut levels = Vec::with_capacity(schema.predictive_count());
            let mut target = 0;
            for attr in schema.attributes() {
                let value = level(attr, &group.label, row)?;
                match attr.role {
                    Role::Target => target = value.unwrap_or(0),
                    Role::Predictive => levels.push(value.ok_or_else(|| {
                        Error::Config(format!("no raw dimension or group for attribute {:?}", attr.name))
                    })?),
                }
            }
            records.push(StudentRecord {
                levels,
                target,
                raw: row.clone(),
            });
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCondition {
    pub attribute: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRule {
    /// Conjunction of conditions; empty means always.
    pub when: Vec<PlantedCondition>,
    pub then: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRuleSpec {
    pub rules: Vec<PlantedRule>,
    #[serde(default)]
    pub noise: f64,
}

impl PlantedRuleSpec {
    /// `Unit 1 = F → F; Unit 2 = F → F; otherwise P`.
    pub fn units_one_two() -> Self {
        let fail = |unit: &str| PlantedRule {
            when: vec![PlantedCondition {
                attribute: unit.to_string(),
                levels: vec!["F".to_string()],
            }],
            then: "F".to_string(),
        };
        PlantedRuleSpec {
            rules: vec![
                fail(UNITS[0]),
                fail(UNITS[1]),
                PlantedRule {
                    when: vec![],
                    then: "P".to_string(),
                },
            ],
            noise: 0.0,
        }
    }
}

struct CompiledRule {
    when: Vec<(usize, Vec<usize>)>,
    then: usize,
}

fn compile(spec: &PlantedRuleSpec, schema: &AttributeSchema) -> Result<Vec<CompiledRule>> {
    if !(0.0..1.0).contains(&spec.noise) {
        return Err(Error::Config(format!("noise rate {} outside [0, 1)", spec.noise)));
    }
    if spec.rules.last().is_none_or(|r| !r.when.is_empty()) {
        return Err(Error::Config("planted rule list must end with a catch-all rule".into()));
    }
    let target = schema.target();
    spec.rules
        .iter()
        .map(|rule| {
            let when = rule
                .when
                .iter()
                .map(|c| {
                    let p = schema
                        .predictive_index(&c.attribute)
                        .ok_or_else(|| Error::Config(format!("unknown attribute {:?}", c.attribute)))?;
                    let attr = schema.predictive(p);
                    let levels = c
                        .levels
                        .iter()
                        .map(|l| {
                            attr.level_index(l)
                                .ok_or_else(|| Error::Config(format!("unknown level {l:?} of {:?}", attr.name)))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((p, levels))
                })
                .collect::<Result<Vec<_>>>()?;
            let then = target
                .level_index(&rule.then)
                .ok_or_else(|| Error::Config(format!("unknown class {:?}", rule.then)))?;
            Ok(CompiledRule { when, then })
        })
        .collect()
}

/// Labels records by the first matching planted rule, then flips each label
/// to a uniformly chosen other class with probability `spec.noise`.
pub fn label_planted(
    records: &mut [StudentRecord],
    spec: &PlantedRuleSpec,
    schema: &AttributeSchema,
    seed: u64,
) -> Result<usize> {
    let rules = compile(spec, schema)?;
    let classes = schema.target_bits();
    let mut rng = seed::rng(seed::derive_seed(seed, "synthgen/noise", 0));
    let mut flipped = 0;
    for record in records.iter_mut() {
        let rule = rules
            .iter()
            .find(|r| r.when.iter().all(|(p, ls)| ls.contains(&record.levels[*p])))
            .expect("catch-all rule matches");
        record.target = rule.then;
        if classes > 1 && rng.random::<f64>() < spec.noise {
            let other = rng.random_range(0..classes - 1);
            record.target = if other >= rule.then { other + 1 } else { other };
            flipped += 1;
        }
    }
    Ok(flipped)
}

/// Discretizes `table` and assigns targets from the planted rules.
pub fn plant_rules(
    table: &RawTable,
    spec: &PlantedRuleSpec,
    discretization: &DiscretizationSpec,
    schema: &AttributeSchema,
    seed: u64,
) -> Result<Vec<StudentRecord>> {
    let mut records = build_records(table, discretization, schema)?;
    label_planted(&mut records, spec, schema, seed)?;
    Ok(records)
}

/// Grade bands for unit scores, in percent.
pub const UNIT_CUTS: [f64; 3] = [50.0, 65.0, 80.0];
/// Grade bands for the reasoning test score.
pub const REASONING_CUTS: [f64; 3] = [10.0, 13.0, 16.0];

/// Unit and reasoning dimensions get fixed grade bands; every other
/// dimension gets tertiles of the pooled sample.
pub fn default_discretization(table: &RawTable) -> Result<DiscretizationSpec> {
    let mut spec = DiscretizationSpec::default();
    for name in &table.dimensions {
        let bands = if UNITS.contains(&name.as_str()) {
            Bands::grades(UNIT_CUTS)
        } else if name == REASONING {
            Bands::grades(REASONING_CUTS)
        } else {
            Bands::tertiles(&table.column(name).expect("dimension exists"))?
        };
        spec.insert(name, bands);
    }
    Ok(spec)
}

// Published per-gender means and standard errors, male then female.
const LEARNING_STATS: [[f64; 4]; 7] = [
    [25.408, 0.503, 26.271, 0.508],
    [15.163, 0.379, 17.333, 0.383],
    [14.469, 0.306, 16.563, 0.309],
    [10.367, 0.207, 11.292, 0.209],
    [10.980, 0.261, 12.313, 0.264],
    [9.510, 0.265, 10.729, 0.267],
    [12.041, 0.484, 14.750, 0.489],
];
const MOTIVATION_STATS: [[f64; 4]; 8] = [
    [21.306, 0.389, 24.063, 0.393],
    [24.898, 0.533, 25.812, 0.538],
    [13.000, 0.300, 14.542, 0.303],
    [12.735, 0.285, 13.625, 0.287],
    [17.898, 0.421, 18.667, 0.425],
    [21.041, 0.469, 23.750, 0.474],
    [18.449, 0.326, 20.979, 0.330],
    [21.673, 0.507, 22.229, 0.512],
];
const INTERACTION_STATS: [[f64; 4]; 3] = [
    [5.327, 0.246, 4.542, 0.248],
    [22.878, 0.514, 23.563, 0.519],
    [29.959, 0.629, 27.667, 0.636],
];
// Correlations with reasoning, male then female.
const LEARNING_R: [[f64; 2]; 7] = [
    [0.70, 0.64],
    [0.45, 0.40],
    [0.26, 0.35],
    [0.23, 0.24],
    [0.35, 0.39],
    [0.30, 0.45],
    [0.27, 0.31],
];
const MOTIVATION_R: [[f64; 2]; 8] = [
    [0.52, 0.66],
    [0.54, 0.63],
    [0.40, 0.52],
    [0.41, 0.75],
    [0.44, 0.55],
    [0.53, 0.60],
    [0.47, 0.63],
    [0.56, 0.61],
];
/// Cohort sizes the published statistics come from.
pub const PUBLISHED_N: [usize; 2] = [49, 48];
const REASONING_STATS: [[f64; 2]; 2] = [[11.84, 2.86], [13.73, 1.67]];
const UNIT_MEAN: f64 = 66.0;
const UNIT_SD: f64 = 14.0;
const UNIT_R: f64 = 0.5;
/// Loading of reasoning on the common factor used to complete the
/// correlation matrix.
pub const REASONING_LOADING: f64 = 0.9;

/// Dimension order of [`published_population`].
pub fn published_dimensions() -> Vec<String> {
    LEARNING_SKILLS
        .iter()
        .copied()
        .chain(crate::schema::motivation_dimensions())
        .chain(CLASSROOM_INTERACTION.iter().copied())
        .chain(UNITS.iter().copied())
        .chain(std::iter::once(REASONING))
        .map(str::to_string)
        .collect()
}

/// Population matching the published per-gender tables.
///
/// Reported spreads are standard errors and are scaled by the square root
/// of the published group size. Only correlations with reasoning are
/// published; the matrix is completed with a single common factor so those
/// entries are reproduced exactly and the matrix stays positive definite.
/// Interaction scales are uncorrelated with everything, which makes the
/// published partial correlations equal to plain correlations.
pub fn published_population(n_male: usize, n_female: usize, seed: u64) -> PopulationSpec {
    let groups = [n_male, n_female]
        .into_iter()
        .enumerate()
        .map(|(g, n)| {
            let root_n = (PUBLISHED_N[g] as f64).sqrt();
            let mut means = Vec::new();
            let mut sds = Vec::new();
            let mut loadings = Vec::new();
            for (stats, r) in LEARNING_STATS.iter().zip(LEARNING_R).chain(MOTIVATION_STATS.iter().zip(MOTIVATION_R)) {
                means.push(stats[2 * g]);
                sds.push(stats[2 * g + 1] * root_n);
                loadings.push(r[g] / REASONING_LOADING);
            }
            for stats in INTERACTION_STATS {
                means.push(stats[2 * g]);
                sds.push(stats[2 * g + 1] * root_n);
                loadings.push(0.0);
            }
            for _ in UNITS {
                means.push(UNIT_MEAN);
                sds.push(UNIT_SD);
                loadings.push(UNIT_R / REASONING_LOADING);
            }
            means.push(REASONING_STATS[g][0]);
            sds.push(REASONING_STATS[g][1]);
            loadings.push(REASONING_LOADING);

            let d = loadings.len();
            let correlation = (0..d)
                .map(|i| (0..d).map(|j| if i == j { 1.0 } else { loadings[i] * loadings[j] }).collect())
                .collect();
            GroupSpec {
                label: GENDER_LEVELS[g].to_string(),
                n,
                means,
                sds,
                correlation,
            }
        })
        .collect();
    PopulationSpec {
        dimensions: published_dimensions(),
        groups,
        seed,
        repair: true,
    }
}

/// Male/female split of a total cohort size in the published 49:48 ratio.
pub fn split_by_published_ratio(total: usize) -> (usize, usize) {
    let male = ((total * PUBLISHED_N[0]) as f64 / (PUBLISHED_N[0] + PUBLISHED_N[1]) as f64).round() as usize;
    (male, total - male)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMetadata {
    pub seed: u64,
    pub generator: String,
    pub spec_hash: String,
    pub n_per_group: BTreeMap<String, usize>,
    pub planted_rules: Option<PlantedRuleSpec>,
    pub discretization: DiscretizationSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub dataset: Dataset,
    pub metadata: CohortMetadata,
}

/// Samples, discretizes and labels a cohort. Without planted rules the
/// target comes from its own raw dimension.
pub fn generate_cohort(
    spec: &PopulationSpec,
    schema: &AttributeSchema,
    planted: Option<&PlantedRuleSpec>,
) -> Result<Cohort> {
    let table = sample_population(spec)?;
    let discretization = default_discretization(&table)?;
    let records = match planted {
        Some(p) => plant_rules(&table, p, &discretization, schema, spec.seed)?,
        None => {
            if !table.dimensions.contains(&schema.target().name) {
                return Err(Error::Config(format!(
                    "no raw dimension for target {:?} and no planted rules",
                    schema.target().name
                )));
            }
            build_records(&table, &discretization, schema)?
        }
    };
    Ok(Cohort {
        dataset: Dataset {
            raw_names: table.dimensions.clone(),
            records,
        },
        metadata: CohortMetadata {
            seed: spec.seed,
            generator: seed::GENERATOR_ID.to_string(),
            spec_hash: spec.hash(),
            n_per_group: spec.groups.iter().map(|g| (g.label.clone(), g.n)).collect(),
            planted_rules: planted.cloned(),
            discretization,
        },
    })
}
