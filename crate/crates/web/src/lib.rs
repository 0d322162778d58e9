//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function takes plain numbers or a JSON string and returns
//! a JSON string; the native `*_report` functions behind them are what the
//! tests exercise.

use rulex_core::neural::{init_network, train, TrainConfig};
use rulex_core::psychostats::{t_test_from_summary, varimax, varimax_criterion, TTestMethod};
use rulex_core::rulekit::{extract_ruleset, format_rule, ExtractConfig};
use rulex_core::schema::{encode_dataset, paper_default_schema};
use rulex_core::seed::derive_seed;
use rulex_core::synthgen::{generate_cohort, published_population, split_by_published_ratio, PlantedRuleSpec};
use rulex_core::{Error, Result};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestReport {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub method: String,
}

pub fn t_test_report(
    mean_1: f64,
    sd_1: f64,
    n_1: usize,
    mean_2: f64,
    sd_2: f64,
    n_2: usize,
    pooled: bool,
) -> Result<TTestReport> {
    let method = if pooled { TTestMethod::Pooled } else { TTestMethod::Welch };
    let r = t_test_from_summary(mean_1, sd_1, n_1, mean_2, sd_2, n_2, method)?;
    Ok(TTestReport {
        t: r.t,
        df: r.df,
        p: r.p,
        method: if pooled { "pooled" } else { "welch" }.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedReport {
    pub records: usize,
    pub epochs: usize,
    pub network_accuracy: f64,
    pub rules: Vec<String>,
    pub rule_accuracy: f64,
    pub default_class: String,
}

/// Generates a cohort labelled by the Unit 1 / Unit 2 rules, trains a
/// network on it and extracts a rule set.
pub fn planted_report(n: usize, noise: f64, seed: u64) -> Result<PlantedReport> {
    let schema = paper_default_schema();
    let (male, female) = split_by_published_ratio(n);
    if male == 0 || female == 0 {
        return Err(Error::Config(format!("cohort size {n} leaves a gender group empty")));
    }
    let planted = PlantedRuleSpec {
        noise,
        ..PlantedRuleSpec::units_one_two()
    };
    let population = published_population(male, female, derive_seed(seed, "generate", 0));
    let cohort = generate_cohort(&population, &schema, Some(&planted))?;
    let records = &cohort.dataset.records;

    let train_config = TrainConfig {
        seed: derive_seed(seed, "train", 0),
        max_epochs: 200,
        ..TrainConfig::default()
    };
    let encoded = encode_dataset(records, &schema)?;
    let outcome = train(init_network(&schema, &train_config)?, &encoded, &train_config)?;
    let network_accuracy = outcome.network.accuracy(&encoded)?;

    let set = extract_ruleset(
        &outcome.network,
        records,
        &schema,
        &ExtractConfig::default(),
        derive_seed(seed, "extract", 0),
    )?;
    let target = schema.target();
    Ok(PlantedReport {
        records: records.len(),
        epochs: outcome.epochs,
        network_accuracy,
        rules: set.rules.iter().map(|r| format_rule(r, &schema)).collect(),
        rule_accuracy: set.accuracy(records),
        default_class: target.levels[set.default].clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarimaxCurve {
    /// Rotation angles in radians over a quarter turn.
    pub angles: Vec<f64>,
    /// Criterion of the row-normalized loadings rotated by each angle.
    pub criterion: Vec<f64>,
    pub best_angle: f64,
    /// Output of the iterative rotation.
    pub rotated: Vec<Vec<f64>>,
    pub rotated_criterion: f64,
}

fn normalized(loadings: &[Vec<f64>]) -> Vec<Vec<f64>> {
    loadings
        .iter()
        .map(|r| {
            let h = r.iter().map(|l| l * l).sum::<f64>().sqrt();
            if h > 0.0 {
                r.iter().map(|l| l / h).collect()
            } else {
                r.clone()
            }
        })
        .collect()
}

/// Varimax criterion as a function of the rotation angle for a two-factor
/// loading matrix.
pub fn varimax_curve_report(loadings: &[Vec<f64>], steps: usize) -> Result<VarimaxCurve> {
    if loadings.len() < 2 || loadings.iter().any(|r| r.len() != 2) {
        return Err(Error::Config("need at least two items with exactly two loadings each".into()));
    }
    if steps < 2 {
        return Err(Error::Config("need at least two angles".into()));
    }
    let base = normalized(loadings);
    let angles: Vec<f64> = (0..steps)
        .map(|k| k as f64 * std::f64::consts::FRAC_PI_2 / steps as f64)
        .collect();
    let criterion: Vec<f64> = angles
        .iter()
        .map(|&a| {
            let (s, c) = a.sin_cos();
            let turned: Vec<Vec<f64>> = base.iter().map(|r| vec![c * r[0] + s * r[1], -s * r[0] + c * r[1]]).collect();
            varimax_criterion(&turned)
        })
        .collect();
    let best = (0..steps).max_by(|&a, &b| criterion[a].total_cmp(&criterion[b])).unwrap_or(0);
    let rotated = varimax(loadings);
    Ok(VarimaxCurve {
        best_angle: angles[best],
        angles,
        criterion,
        rotated_criterion: varimax_criterion(&normalized(&rotated)),
        rotated,
    })
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn t_test(
    mean_1: f64,
    sd_1: f64,
    n_1: u32,
    mean_2: f64,
    sd_2: f64,
    n_2: u32,
    pooled: bool,
) -> std::result::Result<String, JsError> {
    to_js(t_test_report(mean_1, sd_1, n_1 as usize, mean_2, sd_2, n_2 as usize, pooled))
}

#[wasm_bindgen]
pub fn planted_demo(n: u32, noise: f64, seed: u32) -> std::result::Result<String, JsError> {
    to_js(planted_report(n as usize, noise, u64::from(seed)))
}

/// `loadings_json` is an array of `[a, b]` pairs.
#[wasm_bindgen]
pub fn varimax_curve(loadings_json: &str, steps: u32) -> std::result::Result<String, JsError> {
    let loadings: Vec<Vec<f64>> =
        serde_json::from_str(loadings_json).map_err(|e| JsError::new(&format!("loadings: {e}")))?;
    to_js(varimax_curve_report(&loadings, steps as usize))
}
