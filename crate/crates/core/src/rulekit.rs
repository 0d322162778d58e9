//! IF-THEN rules decoded from optimal chromosomes.
//!
//! A rule is an AND of per-attribute terms, each term an OR over levels of
//! one attribute. Rules are refined by backward elimination and collected
//! per class by sequential covering into a first-match [`RuleSet`].

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::evolver::{evolve, EvolutionResult, GaConfig};
use crate::neural::Network;
use crate::schema::{AttributeSchema, StudentRecord};
use crate::seed;

/// `attribute` takes one of `levels`. Indices refer to the schema's
/// predictive attributes and their level lists; levels are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub attribute: usize,
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RuleMetrics {
    /// Records matching the antecedent.
    pub support: usize,
    pub confidence: f64,
    pub coverage: f64,
    /// Set when nothing matches the antecedent; confidence is then 0.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    /// Sorted by attribute, at most one per attribute.
    pub terms: Vec<Term>,
    pub consequent: usize,
    pub metrics: RuleMetrics,
    pub fitness: f64,
    pub chromosome: BitString,
}

impl Rule {
    pub fn attributes<'s>(&self, schema: &'s AttributeSchema) -> Vec<&'s str> {
        self.terms
            .iter()
            .map(|t| schema.predictive(t.attribute).name.as_str())
            .collect()
    }
}

/// Reads a chromosome segment by segment: set bits name the included levels.
/// Segments with no bits or all bits set say nothing and produce no term.
pub fn decode_chromosome(c: &BitString, schema: &AttributeSchema, class_index: usize) -> Result<Rule> {
    if c.len() != schema.total_predictive_bits() {
        return Err(Error::Dimension {
            expected: schema.total_predictive_bits(),
            actual: c.len(),
        });
    }
    if class_index >= schema.target_bits() {
        return Err(Error::Domain(format!("class index {class_index} out of range")));
    }
    let terms = schema
        .segments()
        .iter()
        .enumerate()
        .filter_map(|(p, seg)| {
            let levels: Vec<usize> = (0..seg.len).filter(|&l| c.get(seg.offset + l)).collect();
            (!levels.is_empty() && levels.len() < seg.len).then_some(Term { attribute: p, levels })
        })
        .collect();
    Ok(Rule {
        terms,
        consequent: class_index,
        metrics: RuleMetrics::default(),
        fitness: f64::NAN,
        chromosome: c.clone(),
    })
}

pub fn rule_matches(rule: &Rule, record: &StudentRecord) -> bool {
    rule.terms
        .iter()
        .all(|t| t.levels.binary_search(&record.levels[t.attribute]).is_ok())
}

pub fn evaluate_rule<'a, I>(rule: &Rule, records: I) -> RuleMetrics
where
    I: IntoIterator<Item = &'a StudentRecord>,
{
    let (mut total, mut support, mut correct) = (0usize, 0usize, 0usize);
    for r in records {
        total += 1;
        if rule_matches(rule, r) {
            support += 1;
            if r.target == rule.consequent {
                correct += 1;
            }
        }
    }
    RuleMetrics {
        support,
        confidence: if support > 0 { correct as f64 / support as f64 } else { 0.0 },
        coverage: if total > 0 { support as f64 / total as f64 } else { 0.0 },
        vacuous: support == 0,
    }
}

/// Greedy backward elimination of redundant terms.
///
/// Each round removes the term whose removal leaves the highest confidence,
/// provided confidence drops by at most `epsilon`. Among equally confident
/// candidates the one with the larger support wins, then the earliest
/// attribute. Stops when no term can go.
pub fn refine_rule(rule: &Rule, records: &[StudentRecord], epsilon: f64) -> Rule {
    let mut current = rule.clone();
    current.metrics = evaluate_rule(&current, records);
    while !current.terms.is_empty() {
        let mut best: Option<(usize, RuleMetrics)> = None;
        for i in 0..current.terms.len() {
            let mut candidate = current.clone();
            candidate.terms.remove(i);
            let m = evaluate_rule(&candidate, records);
            if best.is_none_or(|(_, b)| (m.confidence, m.support) > (b.confidence, b.support)) {
                best = Some((i, m));
            }
        }
        let (i, m) = best.expect("at least one term");
        if current.metrics.confidence - m.confidence > epsilon {
            break;
        }
        current.terms.remove(i);
        current.metrics = m;
    }
    current
}

/// Renders `If A = x or A = y and B = z → Then T = c`, or `If true → ...`
/// for an empty antecedent.
pub fn format_rule(rule: &Rule, schema: &AttributeSchema) -> String {
    let antecedent = if rule.terms.is_empty() {
        "true".to_string()
    } else {
        rule.terms
            .iter()
            .map(|t| {
                let attr = schema.predictive(t.attribute);
                t.levels
                    .iter()
                    .map(|&l| format!("{} = {}", attr.name, attr.levels[l]))
                    .collect::<Vec<_>>()
                    .join(" or ")
            })
            .collect::<Vec<_>>()
            .join(" and ")
    };
    let target = schema.target();
    format!(
        "If {antecedent} → Then {} = {}",
        target.name, target.levels[rule.consequent]
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub ga: GaConfig,
    /// Minimum confidence on the working set for a rule to be accepted.
    pub confidence: f64,
    /// Largest confidence loss accepted when dropping a term.
    pub epsilon: f64,
    pub per_class_budget: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            ga: GaConfig::default(),
            confidence: 0.7,
            epsilon: 0.0,
            per_class_budget: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub class: String,
    pub iteration: usize,
    pub ga_seed: u64,
    pub best_fitness: f64,
    pub chromosome: BitString,
    pub decoded: String,
    pub refined: String,
    pub working_confidence: f64,
    pub newly_covered: usize,
    pub outcome: String,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub default: usize,
    pub audit: Vec<AuditEntry>,
}

impl RuleSet {
    /// First matching rule's consequent, else the default class.
    pub fn classify(&self, record: &StudentRecord) -> usize {
        self.rules
            .iter()
            .find(|r| rule_matches(r, record))
            .map_or(self.default, |r| r.consequent)
    }

    pub fn accuracy(&self, records: &[StudentRecord]) -> f64 {
        if records.is_empty() {
            return 0.0;
        }
        let hits = records.iter().filter(|r| self.classify(r) == r.target).count();
        hits as f64 / records.len() as f64
    }
}

/// Sequential covering per class.
///
/// For each class: maximize that class's network output with the GA, decode
/// the best chromosome, refine it against the working set and accept it if
/// its working-set confidence reaches the threshold. Accepted rules remove
/// the records they classify correctly from the working set. A class stops
/// at its budget, when no positives remain, or at the first rejected rule.
/// Rules are ordered by class, then by descending confidence; records no
/// rule matches fall to the majority class.
pub fn extract_ruleset(
    net: &Network,
    records: &[StudentRecord],
    schema: &AttributeSchema,
    config: &ExtractConfig,
    master_seed: u64,
) -> Result<RuleSet> {
    if records.is_empty() {
        return Err(Error::InsufficientData("cannot extract rules from an empty dataset".into()));
    }
    if net.input_size != schema.total_predictive_bits() || net.output_size != schema.target_bits() {
        return Err(Error::Config(format!(
            "network shape {}->{} does not match schema {}->{}",
            net.input_size,
            net.output_size,
            schema.total_predictive_bits(),
            schema.target_bits()
        )));
    }
    for r in records {
        r.validate(schema)?;
    }
    config.ga.validate()?;

    let classes = schema.target_bits();
    let mut counts = vec![0usize; classes];
    for r in records {
        counts[r.target] += 1;
    }
    let default = (0..classes).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });

    let mut rules = Vec::new();
    let mut audit = Vec::new();
    for class in 0..classes {
        let class_name = schema.target().levels[class].clone();
        let mut working: Vec<StudentRecord> = records.to_vec();
        for iteration in 0..config.per_class_budget {
            if !working.iter().any(|r| r.target == class) {
                break;
            }
            let ga_seed = seed::derive_seed(master_seed, &format!("extract/class-{class}"), iteration as u64);
            let ga = GaConfig {
                seed: ga_seed,
                ..config.ga.clone()
            };
            let EvolutionResult {
                best,
                best_fitness,
                history,
                ..
            } = evolve(
                |c| net.class_score(c, class).unwrap_or(f64::NAN),
                schema.total_predictive_bits(),
                &ga,
            )?;
            let mut decoded = decode_chromosome(&best, schema, class)?;
            decoded.fitness = best_fitness;
            let refined = refine_rule(&decoded, &working, config.epsilon);
            let newly_covered = working
                .iter()
                .filter(|r| r.target == class && rule_matches(&refined, r))
                .count();

            let outcome = if refined.terms.is_empty() {
                "stop: empty antecedent, left to the default class"
            } else if newly_covered == 0 {
                "stop: covers no remaining records of the class"
            } else if refined.metrics.confidence < config.confidence {
                "stop: confidence below threshold"
            } else {
                "accepted"
            };
            audit.push(AuditEntry {
                class: class_name.clone(),
                iteration,
                ga_seed,
                best_fitness,
                chromosome: best,
                decoded: format_rule(&decoded, schema),
                refined: format_rule(&refined, schema),
                working_confidence: refined.metrics.confidence,
                newly_covered,
                outcome: outcome.to_string(),
                history,
            });
            if outcome != "accepted" {
                break;
            }
            working.retain(|r| !(r.target == class && rule_matches(&refined, r)));
            let mut accepted = refined;
            accepted.metrics = evaluate_rule(&accepted, records);
            rules.push(accepted);
        }
    }
    rules.sort_by(|a, b| {
        a.consequent
            .cmp(&b.consequent)
            .then(b.metrics.confidence.total_cmp(&a.metrics.confidence))
    });
    Ok(RuleSet { rules, default, audit })
}

/// JSON view of a rule with attribute and level names spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub terms: Vec<TermRecord>,
    pub consequent: String,
    pub support: usize,
    pub confidence: f64,
    pub coverage: f64,
    pub vacuous: bool,
    pub fitness: f64,
    pub chromosome: BitString,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub attribute: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSetRecord {
    pub rules: Vec<RuleRecord>,
    pub default: String,
    pub audit: Vec<AuditEntry>,
}

impl RuleSet {
    pub fn to_record(&self, schema: &AttributeSchema) -> RuleSetRecord {
        let target = schema.target();
        RuleSetRecord {
            rules: self
                .rules
                .iter()
                .map(|r| RuleRecord {
                    terms: r
                        .terms
                        .iter()
                        .map(|t| {
                            let attr = schema.predictive(t.attribute);
                            TermRecord {
                                attribute: attr.name.clone(),
                                levels: t.levels.iter().map(|&l| attr.levels[l].clone()).collect(),
                            }
                        })
                        .collect(),
                    consequent: target.levels[r.consequent].clone(),
                    support: r.metrics.support,
                    confidence: r.metrics.confidence,
                    coverage: r.metrics.coverage,
                    vacuous: r.metrics.vacuous,
                    fitness: r.fitness,
                    chromosome: r.chromosome.clone(),
                    text: format_rule(r, schema),
                })
                .collect(),
            default: target.levels[self.default].clone(),
            audit: self.audit.clone(),
        }
    }

    pub fn from_record(record: &RuleSetRecord, schema: &AttributeSchema) -> Result<Self> {
        let target = schema.target();
        let class_of = |token: &str| {
            target
                .level_index(token)
                .ok_or_else(|| Error::Record(format!("unknown class {token:?}")))
        };
        let rules = record
            .rules
            .iter()
            .map(|r| {
                let mut terms = r
                    .terms
                    .iter()
                    .map(|t| {
                        let p = schema
                            .predictive_index(&t.attribute)
                            .ok_or_else(|| Error::Record(format!("unknown attribute {:?}", t.attribute)))?;
                        let attr = schema.predictive(p);
                        let mut levels = t
                            .levels
                            .iter()
                            .map(|l| {
                                attr.level_index(l)
                                    .ok_or_else(|| Error::Record(format!("unknown level {l:?} of {:?}", attr.name)))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        levels.sort_unstable();
                        Ok(Term { attribute: p, levels })
                    })
                    .collect::<Result<Vec<_>>>()?;
                terms.sort_by_key(|t| t.attribute);
                Ok(Rule {
                    terms,
                    consequent: class_of(&r.consequent)?,
                    metrics: RuleMetrics {
                        support: r.support,
                        confidence: r.confidence,
                        coverage: r.coverage,
                        vacuous: r.vacuous,
                    },
                    fitness: r.fitness,
                    chromosome: r.chromosome.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RuleSet {
            rules,
            default: class_of(&record.default)?,
            audit: record.audit.clone(),
        })
    }
}
