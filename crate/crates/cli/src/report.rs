//! Plain-text run summary with provenance checks.

use std::fmt::Write as _;
use std::path::Path;

use rulex_core::psychostats::{t_test_from_summary, AnovaRow, TTestMethod};
use rulex_core::{Error, Result};

use crate::commands::{CohortMeta, ModelArtifact, RulesetArtifact, TrainLog};
use crate::stats::StatsReport;
use crate::{file_hash, read_json, read_text};
use crate::{COHORT_CSV, COHORT_META, MODEL_JSON, RULESET_JSON, RULES_TXT, STATS_JSON, TRAIN_LOG};

pub const REQUIRED: [&str; 7] = [COHORT_CSV, COHORT_META, MODEL_JSON, TRAIN_LOG, RULESET_JSON, RULES_TXT, STATS_JSON];

/// Published learning-skill rows: SS between, SS error, printed F, printed η.
pub const PUBLISHED_VARIANCE_ROWS: [(&str, f64, f64, f64, f64); 8] = [
    ("Management of dispersants", 18.05, 1177.3, 1.46, 0.02),
    ("Management of study time", 114.19, 669.36, 16.2, 0.15),
    ("Summing and taking notes", 106.23, 436.02, 23.2, 0.2),
    ("Preparing for examinations", 20.77, 199.30, 9.88, 0.1),
    ("Organization of information", 43.08, 317.29, 12.9, 0.12),
    ("Continuation of study", 36.03, 325.72, 10.5, 0.10),
    ("Use of computer & Internet", 177.97, 1088.9, 15.5, 0.14),
    ("Total", 3102.3, 12041.8, 24.5, 0.21),
];
/// Published (Wilks lambda, eta) pairs for the three measure blocks.
pub const PUBLISHED_WILKS: [(f64, f64); 3] = [(0.68, 0.32), (0.56, 0.44), (0.82, 0.18)];

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Arithmetic checks against published values plus the direction of the
/// cohort's own gender difference.
pub fn published_checks(stats: &StatsReport) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let t = t_test_from_summary(11.84, 2.86, 49, 13.73, 1.67, 48, TTestMethod::Welch)?;
    checks.push(Check {
        name: "reasoning t-test from published summary".into(),
        pass: (t.t - 3.99).abs() <= 0.05 && t.p < 0.01,
        detail: format!("t = {:.3} (target 3.99 ± 0.05), p = {:.5} (< 0.01)", t.t, t.p),
    });

    let mut worst_f: f64 = 0.0;
    let mut worst_eta: f64 = 0.0;
    for (_, ss_h, ss_e, f, eta) in PUBLISHED_VARIANCE_ROWS {
        let row = AnovaRow::from_sums(ss_h, ss_e, 1.0, 95.0)?;
        worst_f = worst_f.max((row.f - f).abs());
        worst_eta = worst_eta.max((row.eta_squared - eta).abs());
    }
    checks.push(Check {
        name: "learning-skill F and eta squared from sums of squares".into(),
        pass: worst_f <= 0.1 && worst_eta <= 0.01,
        detail: format!("max |ΔF| = {worst_f:.3} (≤ 0.1), max |Δη²| = {worst_eta:.4} (≤ 0.01)"),
    });

    let worst = PUBLISHED_WILKS
        .iter()
        .map(|&(lambda, eta)| ((1.0 - lambda) - eta).abs())
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "multivariate eta squared = 1 - lambda on published pairs".into(),
        pass: worst <= 0.005,
        detail: format!("max deviation {worst:.4} (≤ 0.005)"),
    });

    let exact = stats.blocks.iter().all(|b| b.manova.eta_squared == 1.0 - b.manova.wilks_lambda);
    checks.push(Check {
        name: "cohort MANOVA eta squared = 1 - lambda".into(),
        pass: exact,
        detail: stats
            .blocks
            .iter()
            .map(|b| format!("{} Λ = {:.4}", b.block, b.manova.wilks_lambda))
            .collect::<Vec<_>>()
            .join(", "),
    });

    let r = &stats.reasoning_t_test;
    checks.push(Check {
        name: "cohort reasoning: female mean above male mean".into(),
        pass: r.female.mean > r.male.mean,
        detail: format!("female {:.3}, male {:.3}", r.female.mean, r.male.mean),
    });
    Ok(checks)
}

fn provenance(dir: &Path, failures: &mut Vec<String>, out: &mut String) -> Result<()> {
    let cohort_hash = file_hash(&dir.join(COHORT_CSV))?;
    let model_hash = file_hash(&dir.join(MODEL_JSON))?;
    let meta: CohortMeta = read_json(&dir.join(COHORT_META))?;
    let model: ModelArtifact = read_json(&dir.join(MODEL_JSON))?;
    let log: TrainLog = read_json(&dir.join(TRAIN_LOG))?;
    let rules: RulesetArtifact = read_json(&dir.join(RULESET_JSON))?;
    let stats: StatsReport = read_json(&dir.join(STATS_JSON))?;

    for name in REQUIRED {
        writeln!(out, "{name:<18} sha256 {}", file_hash(&dir.join(name))?).unwrap();
    }
    writeln!(out).unwrap();
    for (name, hash) in [
        (COHORT_META, &meta.config_hash),
        (MODEL_JSON, &model.config_hash),
        (TRAIN_LOG, &log.config_hash),
        (RULESET_JSON, &rules.config_hash),
        (STATS_JSON, &stats.config_hash),
    ] {
        writeln!(out, "{name:<18} config {hash}").unwrap();
    }
    writeln!(out).unwrap();
    let links = [
        (MODEL_JSON, "data_hash", &model.data_hash, COHORT_CSV, &cohort_hash),
        (TRAIN_LOG, "data_hash", &log.data_hash, COHORT_CSV, &cohort_hash),
        (RULESET_JSON, "data_hash", &rules.data_hash, COHORT_CSV, &cohort_hash),
        (RULESET_JSON, "model_hash", &rules.model_hash, MODEL_JSON, &model_hash),
        (RULESET_JSON, "schema_hash", &rules.schema_hash, MODEL_JSON, &model.schema_hash),
        (STATS_JSON, "data_hash", &stats.data_hash, COHORT_CSV, &cohort_hash),
    ];
    for (artifact, field, recorded, source, actual) in links {
        let ok = recorded == actual;
        writeln!(out, "{:<4} {artifact}.{field} matches {source}", if ok { "ok" } else { "FAIL" }).unwrap();
        if !ok {
            failures.push(format!("{artifact}.{field} does not match {source}"));
        }
    }
    if log.config_hash != model.config_hash {
        failures.push(format!("{TRAIN_LOG} and {MODEL_JSON} come from different configurations"));
    }
    Ok(())
}

/// Builds the report text for a run directory.
///
/// Fails listing every missing artifact, or listing every broken
/// provenance link (an artifact whose recorded input hash differs from the
/// file present).
pub fn build_report(dir: &Path) -> Result<String> {
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|name| !dir.join(name).is_file())
        .map(|name| name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }

    let mut out = String::new();
    writeln!(out, "edm-rulex run report").unwrap();
    writeln!(out, "\n== Provenance ==").unwrap();
    let mut failures = Vec::new();
    provenance(dir, &mut failures, &mut out)?;
    if !failures.is_empty() {
        return Err(Error::Provenance(failures.join("; ")));
    }

    let meta: CohortMeta = read_json(&dir.join(COHORT_META))?;
    let model: ModelArtifact = read_json(&dir.join(MODEL_JSON))?;
    let rules: RulesetArtifact = read_json(&dir.join(RULESET_JSON))?;
    let stats: StatsReport = read_json(&dir.join(STATS_JSON))?;

    writeln!(out, "\n== Seeds ==").unwrap();
    writeln!(out, "master seed      {}", meta.master_seed).unwrap();
    writeln!(out, "generator        {}", meta.cohort.generator).unwrap();
    writeln!(out, "cohort seed      {}", meta.cohort.seed).unwrap();
    writeln!(out, "training seed    {}", model.train.seed).unwrap();
    writeln!(out, "extraction seed  {}", rules.seed).unwrap();

    writeln!(out, "\n== Cohort ==").unwrap();
    for (group, n) in &meta.cohort.n_per_group {
        writeln!(out, "{group:<6} {n} records").unwrap();
    }
    writeln!(out, "population spec  {}", meta.cohort.spec_hash).unwrap();
    match &meta.cohort.planted_rules {
        Some(p) => writeln!(out, "labels           {} planted rules, noise {}", p.rules.len(), p.noise).unwrap(),
        None => writeln!(out, "labels           discretized from raw scores").unwrap(),
    }

    writeln!(out, "\n== Training ==").unwrap();
    let net = &model.network;
    writeln!(out, "network          {}-{}-{}", net.input_size, net.hidden_size, net.output_size).unwrap();
    writeln!(out, "epochs           {} (converged: {})", model.epochs, model.converged).unwrap();
    writeln!(out, "final mse        {:.6}", model.final_mse).unwrap();
    writeln!(out, "accuracy         {:.4}", model.training_accuracy).unwrap();

    writeln!(out, "\n== Rules ==").unwrap();
    writeln!(out, "{:>3}  {:>7}  {:>10}  rule", "#", "support", "confidence").unwrap();
    for (i, r) in rules.ruleset.rules.iter().enumerate() {
        writeln!(out, "{:>3}  {:>7}  {:>10.4}  {}", i + 1, r.support, r.confidence, r.text).unwrap();
    }
    writeln!(out, "default class    {}", rules.ruleset.default).unwrap();
    writeln!(out, "rule accuracy    {:.4}", rules.training_accuracy).unwrap();

    writeln!(out, "\n== Statistics ==").unwrap();
    let t = &stats.reasoning_t_test;
    writeln!(
        out,
        "Reasoning  male {:.3} ± {:.3} (n {}), female {:.3} ± {:.3} (n {})",
        t.male.mean, t.male.sd, t.male.n, t.female.mean, t.female.sd, t.female.n
    )
    .unwrap();
    writeln!(out, "  Welch t = {:.3}, df = {:.2}, p = {:.5}", t.welch.t, t.welch.df, t.welch.p).unwrap();
    writeln!(out, "  pooled t = {:.3}, df = {:.0}, p = {:.5}", t.pooled.t, t.pooled.df, t.pooled.p).unwrap();
    for b in &stats.blocks {
        let m = &b.manova;
        writeln!(
            out,
            "\n{}: Wilks Λ = {:.4}, F({:.0}, {:.0}) = {:.3}, p = {:.5}, η² = {:.4}",
            b.block, m.wilks_lambda, m.df1, m.df2, m.f, m.p, m.eta_squared
        )
        .unwrap();
        writeln!(
            out,
            "  {:<32} {:>8} {:>8} {:>8} {:>8} {:>6} {:>9}",
            "dimension", "male", "female", "F", "p", "η²", "Levene p"
        )
        .unwrap();
        for d in b.dimensions.iter().chain(std::iter::once(&b.total)) {
            writeln!(
                out,
                "  {:<32} {:>8.3} {:>8.3} {:>8.3} {:>8.5} {:>6.3} {:>9.4}",
                d.dimension, d.male.mean, d.female.mean, d.anova.f, d.anova.p, d.anova.eta_squared, d.levene.p
            )
            .unwrap();
        }
    }
    for block in &stats.partial_correlations {
        writeln!(out, "\n{} with {}, controlling {}", block.block, block.with, block.controlling).unwrap();
        writeln!(out, "  {:<32} {:>7} {:>8} {:>7} {:>8}", "dimension", "r male", "p", "r fem.", "p").unwrap();
        for row in &block.rows {
            writeln!(
                out,
                "  {:<32} {:>7.3} {:>8.5} {:>7.3} {:>8.5}",
                row.dimension, row.male.r, row.male.p, row.female.r, row.female.p
            )
            .unwrap();
        }
    }
    writeln!(out).unwrap();
    for r in &stats.reliability {
        writeln!(out, "Cronbach α {:<24} {:.4} ({} items)", r.scale, r.alpha, r.items).unwrap();
    }

    writeln!(out, "\n== Published-value checks ==").unwrap();
    for c in published_checks(&stats)? {
        writeln!(out, "{}  {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail).unwrap();
    }
    let rules_text = read_text(&dir.join(RULES_TXT))?;
    writeln!(out, "\n== {RULES_TXT} ==").unwrap();
    out.push_str(&rules_text);
    Ok(out)
}
