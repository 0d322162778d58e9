//! The `stats.json` report: gender comparisons and correlations over the
//! raw scores of a cohort.

use rulex_core::psychostats::{
    anova_oneway, cronbach_alpha, levene_w, manova_wilks, mean, p_value_t, partial_r, std_dev, t_test, AnovaRow,
    LeveneResult, ManovaResult, ReliabilityResult, TTestMethod, TTestResult,
};
use rulex_core::schema::{
    motivation_dimensions, AttributeSchema, Dataset, CLASSROOM_INTERACTION, GENDER, LEARNING_SKILLS, REASONING,
};
use rulex_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl GroupSummary {
    fn of(xs: &[f64]) -> Self {
        GroupSummary {
            n: xs.len(),
            mean: mean(xs),
            sd: std_dev(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTTest {
    pub male: GroupSummary,
    pub female: GroupSummary,
    /// Statistic is female minus male.
    pub welch: TTestResult,
    pub pooled: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRow {
    pub dimension: String,
    pub male: GroupSummary,
    pub female: GroupSummary,
    pub anova: AnovaRow,
    pub levene: LeveneResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub block: String,
    pub manova: ManovaResult,
    pub dimensions: Vec<DimensionRow>,
    /// Univariate test on the block total.
    pub total: DimensionRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub df: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialRow {
    pub dimension: String,
    pub male: Correlation,
    pub female: Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialBlock {
    pub block: String,
    pub with: String,
    pub controlling: String,
    pub rows: Vec<PartialRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub config_hash: String,
    pub data_hash: String,
    pub reasoning_t_test: ReasoningTTest,
    pub blocks: Vec<BlockStats>,
    pub partial_correlations: Vec<PartialBlock>,
    pub reliability: Vec<ReliabilityResult>,
}

pub const LEARNING_BLOCK: &str = "Learning skills";
pub const MOTIVATION_BLOCK: &str = "Achievement motivation";
pub const INTERACTION_BLOCK: &str = "Classroom interaction";
const TOTAL: &str = "Total";

fn blocks() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        (LEARNING_BLOCK, LEARNING_SKILLS.to_vec()),
        (MOTIVATION_BLOCK, motivation_dimensions().collect()),
        (INTERACTION_BLOCK, CLASSROOM_INTERACTION.to_vec()),
    ]
}

/// Raw scores split by gender: `groups[g][person][dimension]`.
struct Split<'a> {
    dataset: &'a Dataset,
    members: [Vec<usize>; 2],
}

impl Split<'_> {
    fn column(&self, g: usize, dimension: &str) -> Result<Vec<f64>> {
        let c = self
            .dataset
            .raw_column(dimension)
            .ok_or_else(|| Error::InsufficientData(format!("no raw scores for {dimension:?}")))?;
        Ok(self.members[g].iter().map(|&i| self.dataset.records[i].raw[c]).collect())
    }

    fn total(&self, g: usize, dimensions: &[&str]) -> Result<Vec<f64>> {
        let mut sum = vec![0.0; self.members[g].len()];
        for d in dimensions {
            for (s, x) in sum.iter_mut().zip(self.column(g, d)?) {
                *s += x;
            }
        }
        Ok(sum)
    }

    fn rows(&self, g: usize, dimensions: &[&str]) -> Result<Vec<Vec<f64>>> {
        let cols = dimensions.iter().map(|d| self.column(g, d)).collect::<Result<Vec<_>>>()?;
        Ok((0..self.members[g].len()).map(|k| cols.iter().map(|c| c[k]).collect()).collect())
    }
}

fn dimension_row(name: &str, male: Vec<f64>, female: Vec<f64>) -> Result<DimensionRow> {
    let groups = [male, female];
    Ok(DimensionRow {
        dimension: name.to_string(),
        male: GroupSummary::of(&groups[0]),
        female: GroupSummary::of(&groups[1]),
        anova: anova_oneway(&groups)?,
        levene: levene_w(&groups)?,
    })
}

fn correlation(x: &[f64], y: &[f64], z: &[f64]) -> Result<Correlation> {
    let r = partial_r(x, y, z)?;
    let df = x.len() - 3;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        p_value_t(r * (df as f64 / (1.0 - r * r)).sqrt(), df as f64)?
    };
    Ok(Correlation { r, df, p })
}

pub fn compute_stats(
    dataset: &Dataset,
    schema: &AttributeSchema,
    config_hash: String,
    data_hash: String,
) -> Result<StatsReport> {
    let gender = schema
        .predictive_index(GENDER)
        .ok_or_else(|| Error::Config(format!("schema has no {GENDER} attribute")))?;
    let mut members = [Vec::new(), Vec::new()];
    for (i, r) in dataset.records.iter().enumerate() {
        let g = r.levels[gender];
        if g > 1 {
            return Err(Error::Config(format!("{GENDER} must have two levels")));
        }
        members[g].push(i);
    }
    for (g, m) in members.iter().enumerate() {
        if m.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "{} {GENDER} group has {} records; at least 4 per group are needed",
                schema.predictive(gender).levels[g],
                m.len()
            )));
        }
    }
    let split = Split { dataset, members };

    let (male, female) = (split.column(0, REASONING)?, split.column(1, REASONING)?);
    let reasoning_t_test = ReasoningTTest {
        male: GroupSummary::of(&male),
        female: GroupSummary::of(&female),
        welch: t_test(&male, &female, TTestMethod::Welch)?,
        pooled: t_test(&male, &female, TTestMethod::Pooled)?,
    };

    let mut block_stats = Vec::new();
    let mut reliability = Vec::new();
    for (block, dims) in blocks() {
        let groups = [split.rows(0, &dims)?, split.rows(1, &dims)?];
        let dimensions = dims
            .iter()
            .map(|d| dimension_row(d, split.column(0, d)?, split.column(1, d)?))
            .collect::<Result<Vec<_>>>()?;
        block_stats.push(BlockStats {
            block: block.to_string(),
            manova: manova_wilks(&groups)?,
            dimensions,
            total: dimension_row(TOTAL, split.total(0, &dims)?, split.total(1, &dims)?)?,
        });
        let everyone: Vec<Vec<f64>> = groups.concat();
        reliability.push(ReliabilityResult {
            scale: block.to_string(),
            alpha: cronbach_alpha(&everyone)?,
            items: dims.len(),
            test_retest: None,
        });
    }

    let control = [split.total(0, &CLASSROOM_INTERACTION)?, split.total(1, &CLASSROOM_INTERACTION)?];
    let reasoning = [male, female];
    let mut partial_correlations = Vec::new();
    for (block, dims) in blocks().into_iter().take(2) {
        let mut rows = Vec::new();
        let named: Vec<(String, [Vec<f64>; 2])> = dims
            .iter()
            .map(|d| Ok((d.to_string(), [split.column(0, d)?, split.column(1, d)?])))
            .chain(std::iter::once(Ok((
                TOTAL.to_string(),
                [split.total(0, &dims)?, split.total(1, &dims)?],
            ))))
            .collect::<Result<Vec<_>>>()?;
        for (name, cols) in named {
            rows.push(PartialRow {
                dimension: name,
                male: correlation(&cols[0], &reasoning[0], &control[0])?,
                female: correlation(&cols[1], &reasoning[1], &control[1])?,
            });
        }
        partial_correlations.push(PartialBlock {
            block: block.to_string(),
            with: REASONING.to_string(),
            controlling: format!("{INTERACTION_BLOCK} total"),
            rows,
        });
    }

    Ok(StatsReport {
        config_hash,
        data_hash,
        reasoning_t_test,
        blocks: block_stats,
        partial_correlations,
        reliability,
    })
}
