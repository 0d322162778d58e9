use std::path::Path;

use rulex_core::hashing::sha256_hex;
use rulex_core::neural::{init_network, train, Network, TrainConfig};
use rulex_core::rulekit::{extract_ruleset, format_rule, ExtractConfig, RuleSetRecord};
use rulex_core::schema::{encode_dataset, parse_dataset_csv, write_dataset_csv, AttributeSchema, Dataset};
use rulex_core::synthgen::{generate_cohort, CohortMetadata};
use rulex_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{read_json, read_text, write_json, write_text};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMeta {
    pub config_hash: String,
    pub master_seed: u64,
    #[serde(flatten)]
    pub cohort: CohortMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub config_hash: String,
    pub schema_hash: String,
    pub data_hash: String,
    pub train: TrainConfig,
    pub epochs: usize,
    pub final_mse: f64,
    pub converged: bool,
    pub training_accuracy: f64,
    pub network: Network,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub config_hash: String,
    pub data_hash: String,
    pub epochs: usize,
    pub converged: bool,
    /// Training-set mse after each epoch.
    pub mse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulesetArtifact {
    pub config_hash: String,
    pub schema_hash: String,
    pub data_hash: String,
    pub model_hash: String,
    pub seed: u64,
    pub extract: ExtractConfig,
    pub training_accuracy: f64,
    #[serde(flatten)]
    pub ruleset: RuleSetRecord,
}

/// Dataset at the configured path with the hash of its bytes.
pub fn load_dataset(config: &RunConfig, schema: &AttributeSchema) -> Result<(Dataset, String)> {
    let path = config.dataset_path();
    let text = read_text(&path)?;
    let dataset = parse_dataset_csv(&text, schema).map_err(|e| match e {
        Error::Csv { .. } => Error::Config(format!("{}: {e}", path.display())),
        other => other,
    })?;
    if dataset.is_empty() {
        return Err(Error::InsufficientData(format!("{} has no records", path.display())));
    }
    Ok((dataset, sha256_hex(text.as_bytes())))
}

pub fn cmd_generate(config: &RunConfig) -> Result<String> {
    let schema = config.schema()?;
    let population = config.population()?;
    let planted = config.planted()?;
    let cohort = generate_cohort(&population, &schema, planted.as_ref())?;
    let csv = write_dataset_csv(&cohort.dataset, &schema)?;
    let meta = CohortMeta {
        config_hash: config.hash(),
        master_seed: config.seed,
        cohort: cohort.metadata,
    };
    write_text(&config.out.join(crate::COHORT_CSV), &csv)?;
    write_json(&config.out.join(crate::COHORT_META), &meta)?;
    Ok(format!(
        "wrote {} records to {}",
        cohort.dataset.len(),
        config.out.join(crate::COHORT_CSV).display()
    ))
}

pub fn cmd_train(config: &RunConfig) -> Result<String> {
    let schema = config.schema()?;
    let (dataset, data_hash) = load_dataset(config, &schema)?;
    let train_config = config.train_config();
    let encoded = encode_dataset(&dataset.records, &schema)?;
    let net = init_network(&schema, &train_config)?;
    log::info!(
        "training {}-{}-{} network on {} records",
        net.input_size,
        net.hidden_size,
        net.output_size,
        encoded.len()
    );
    let outcome = train(net, &encoded, &train_config)?;
    let accuracy = outcome.network.accuracy(&encoded)?;
    let config_hash = config.hash();
    let model = ModelArtifact {
        config_hash: config_hash.clone(),
        schema_hash: schema.hash(),
        data_hash: data_hash.clone(),
        train: train_config,
        epochs: outcome.epochs,
        final_mse: outcome.final_mse,
        converged: outcome.converged,
        training_accuracy: accuracy,
        network: outcome.network,
    };
    let log = TrainLog {
        config_hash,
        data_hash,
        epochs: outcome.epochs,
        converged: outcome.converged,
        mse: outcome.history,
    };
    write_json(&config.out.join(crate::MODEL_JSON), &model)?;
    write_json(&config.out.join(crate::TRAIN_LOG), &log)?;
    if !model.converged {
        log::warn!("target mse not reached after {} epochs", model.epochs);
    }
    Ok(format!(
        "trained {} epochs, mse {:.6}, training accuracy {:.3}",
        model.epochs, model.final_mse, accuracy
    ))
}

pub fn cmd_extract(config: &RunConfig) -> Result<String> {
    let schema = config.schema()?;
    let model_path = config.model_path();
    let model_hash = crate::file_hash(&model_path)?;
    let model: ModelArtifact = read_json(&model_path)?;
    if model.schema_hash != schema.hash() {
        return Err(Error::Provenance(format!(
            "model was trained under schema {} but the dataset schema is {}",
            model.schema_hash,
            schema.hash()
        )));
    }
    let (dataset, data_hash) = load_dataset(config, &schema)?;
    if data_hash != model.data_hash {
        log::warn!("extracting on a dataset other than the one the model was trained on");
    }
    let extract = config.extract_config();
    let seed = config.extract_seed();
    let set = extract_ruleset(&model.network, &dataset.records, &schema, &extract, seed)?;
    let accuracy = set.accuracy(&dataset.records);

    let mut text: String = set.rules.iter().map(|r| format_rule(r, &schema) + "\n").collect();
    text.push_str(&format!(
        "If true → Then {} = {}\n",
        schema.target().name,
        schema.target().levels[set.default]
    ));
    let artifact = RulesetArtifact {
        config_hash: config.hash(),
        schema_hash: schema.hash(),
        data_hash,
        model_hash,
        seed,
        extract,
        training_accuracy: accuracy,
        ruleset: set.to_record(&schema),
    };
    write_json(&config.out.join(crate::RULESET_JSON), &artifact)?;
    write_text(&config.out.join(crate::RULES_TXT), &text)?;
    Ok(format!(
        "extracted {} rules (default {}), training accuracy {:.3}",
        set.rules.len(),
        schema.target().levels[set.default],
        accuracy
    ))
}

pub fn cmd_stats(config: &RunConfig) -> Result<String> {
    let schema = config.schema()?;
    let (dataset, data_hash) = load_dataset(config, &schema)?;
    let report = crate::stats::compute_stats(&dataset, &schema, config.hash(), data_hash)?;
    write_json(&config.out.join(crate::STATS_JSON), &report)?;
    let t = &report.reasoning_t_test;
    Ok(format!(
        "reasoning by gender: t = {:.3}, df = {:.1}, p = {:.4}",
        t.welch.t, t.welch.df, t.welch.p
    ))
}

/// Writes `report.txt` for the run directory `dir`.
pub fn cmd_report(dir: &Path) -> Result<String> {
    let text = crate::report::build_report(dir)?;
    let path = dir.join(crate::REPORT_TXT);
    write_text(&path, &text)?;
    Ok(format!("wrote {}", path.display()))
}
