use std::path::{Path, PathBuf};

use rulex_core::evolver::GaConfig;
use rulex_core::neural::TrainConfig;
use rulex_core::rulekit::ExtractConfig;
use rulex_core::schema::{load_schema, paper_default_schema, AttributeSchema};
use rulex_core::seed::derive_seed;
use rulex_core::synthgen::{published_population, split_by_published_ratio, PlantedRuleSpec, PopulationSpec};
use rulex_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const PUBLISHED_SPEC: &str = "published";
pub const PLANTED_UNITS: &str = "units-1-2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    /// `published` or a path to a population spec JSON file.
    pub spec: String,
    /// Total cohort size for `published`, split 49:48 by gender.
    pub n: usize,
    /// `units-1-2` or a path to a planted-rule JSON file.
    pub planted: Option<String>,
    /// Overrides the planted spec's noise rate.
    pub noise: Option<f64>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            spec: PUBLISHED_SPEC.to_string(),
            n: 97,
            planted: None,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Schema document; the built-in student schema when absent.
    pub schema: Option<PathBuf>,
    /// Cohort CSV; `<out>/cohort.csv` when absent.
    pub dataset: Option<PathBuf>,
    /// Model JSON; `<out>/model.json` when absent.
    pub model: Option<PathBuf>,
    pub generate: GenerateConfig,
    pub train: TrainConfig,
    pub extract: ExtractConfig,
    /// Master seed; every stage seed is derived from it.
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: None,
            dataset: None,
            model: None,
            generate: GenerateConfig::default(),
            train: TrainConfig::default(),
            extract: ExtractConfig::default(),
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        crate::read_json(path)
    }

    pub fn schema(&self) -> Result<AttributeSchema> {
        match &self.schema {
            Some(path) => load_schema(&crate::read_text(path)?),
            None => Ok(paper_default_schema()),
        }
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset.clone().unwrap_or_else(|| self.out.join(crate::COHORT_CSV))
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join(crate::MODEL_JSON))
    }

    pub fn generate_seed(&self) -> u64 {
        derive_seed(self.seed, "generate", 0)
    }

    /// Training settings with the derived stage seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, "train", 0),
            ..self.train.clone()
        }
    }

    pub fn extract_seed(&self) -> u64 {
        derive_seed(self.seed, "extract", 0)
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            ga: GaConfig { seed: 0, ..self.extract.ga.clone() },
            ..self.extract.clone()
        }
    }

    /// Hash of the configuration as a stage sees it: output directory and
    /// input paths excluded, derived seeds included.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            schema: None,
            dataset: None,
            model: None,
            out: PathBuf::new(),
            train: self.train_config(),
            extract: self.extract_config(),
            ..self.clone()
        };
        rulex_core::hashing::json_hash(&canonical)
    }

    pub fn population(&self) -> Result<PopulationSpec> {
        let g = &self.generate;
        if g.spec == PUBLISHED_SPEC {
            let (male, female) = split_by_published_ratio(g.n);
            if male == 0 || female == 0 {
                return Err(Error::Config(format!(
                    "cohort size {} leaves a gender group empty; use n >= 2",
                    g.n
                )));
            }
            Ok(published_population(male, female, self.generate_seed()))
        } else {
            let mut spec: PopulationSpec = crate::read_json(Path::new(&g.spec))?;
            spec.seed = self.generate_seed();
            spec.validate()?;
            Ok(spec)
        }
    }

    pub fn planted(&self) -> Result<Option<PlantedRuleSpec>> {
        let Some(name) = &self.generate.planted else {
            return Ok(None);
        };
        let mut spec = if name == PLANTED_UNITS {
            PlantedRuleSpec::units_one_two()
        } else {
            crate::read_json(Path::new(name))?
        };
        if let Some(noise) = self.generate.noise {
            spec.noise = noise;
        }
        Ok(Some(spec))
    }
}
