//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rulex_cli::commands::RulesetArtifact;
use rulex_cli::config::{RunConfig, PLANTED_UNITS};
use rulex_cli::report::{PUBLISHED_VARIANCE_ROWS, PUBLISHED_WILKS};
use rulex_cli::{cmd_extract, cmd_generate, cmd_report, cmd_stats, cmd_train};
use rulex_core::bits::BitString;
use rulex_core::evolver::{evolve, GaConfig};
use rulex_core::neural::{init_network, train, Network, TrainConfig};
use rulex_core::psychostats::{
    anova_oneway, manova_wilks, mean, partial_r, pearson_r, reg_inc_beta, std_dev, t_test_from_summary, varimax,
    AnovaRow, TTestMethod,
};
use rulex_core::schema::{encode_dataset, Attribute, AttributeSchema, Role, StudentRecord};
use rulex_core::seed;
use rulex_core::synthgen::{effective_correlation, published_population, sample_population};
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reasoning_t_test() -> Outcome {
    let t = t_test_from_summary(11.84, 2.86, 49, 13.73, 1.67, 48, TTestMethod::Welch).map_err(|e| e.to_string())?;
    check(
        (t.t - 3.99).abs() <= 0.05 && t.p < 0.01,
        format!("t = {:.4}, df = {:.2}, p = {:.2e}", t.t, t.df, t.p),
    )
}

fn variance_rows() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut bad = Vec::new();
    for (name, ss_h, ss_e, f, eta) in PUBLISHED_VARIANCE_ROWS {
        let row = AnovaRow::from_sums(ss_h, ss_e, 1.0, 95.0).map_err(|e| e.to_string())?;
        let (df, de) = ((row.f - f).abs(), (row.eta_squared - eta).abs());
        worst = (worst.0.max(df), worst.1.max(de));
        if df > 0.1 || de > 0.01 {
            bad.push(name);
        }
    }
    check(
        bad.is_empty(),
        format!("max |ΔF| = {:.3}, max |Δη²| = {:.4}; outside tolerance: {bad:?}", worst.0, worst.1),
    )
}

fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let k = a[r][c] / a[c][c];
            for j in c..n {
                a[r][j] -= k * a[c][j];
            }
        }
    }
    d
}

fn scatter(rows: &[&Vec<f64>], centre: &[f64]) -> Vec<Vec<f64>> {
    let p = centre.len();
    let mut s = vec![vec![0.0; p]; p];
    for r in rows {
        for i in 0..p {
            for j in 0..p {
                s[i][j] += (r[i] - centre[i]) * (r[j] - centre[j]);
            }
        }
    }
    s
}

fn wilks_identity() -> Outcome {
    let published = PUBLISHED_WILKS
        .iter()
        .map(|&(lambda, eta)| ((1.0 - lambda) - eta).abs())
        .fold(0.0, f64::max);
    let mut rng = seed::rng(31);
    let mut worst_oracle: f64 = 0.0;
    let mut exact = true;
    for p in 1..6 {
        for _ in 0..40 {
            let groups: Vec<Vec<Vec<f64>>> = (0..2)
                .map(|g| {
                    let n = rng.random_range(p + 3..40);
                    (0..n)
                        .map(|_| (0..p).map(|_| rng.random_range(0.0..10.0) + g as f64).collect())
                        .collect()
                })
                .collect();
            let m = manova_wilks(&groups).map_err(|e| e.to_string())?;
            exact &= m.eta_squared == 1.0 - m.wilks_lambda;
            let all: Vec<&Vec<f64>> = groups.iter().flatten().collect();
            let centre = |rows: &[&Vec<f64>]| -> Vec<f64> {
                (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect()
            };
            let mut e = vec![vec![0.0; p]; p];
            for g in &groups {
                let rows: Vec<&Vec<f64>> = g.iter().collect();
                let s = scatter(&rows, &centre(&rows));
                for i in 0..p {
                    for j in 0..p {
                        e[i][j] += s[i][j];
                    }
                }
            }
            let t = scatter(&all, &centre(&all));
            worst_oracle = worst_oracle.max((m.wilks_lambda - det(e) / det(t)).abs());
        }
    }
    check(
        published <= 0.005 && exact && worst_oracle < 1e-10,
        format!(
            "published max |1-Λ-η| = {published:.4}; synthetic identity exact: {exact}; |Λ - det ratio| ≤ {worst_oracle:.1e}"
        ),
    )
}

fn twelve_bit_network() -> Result<Network, String> {
    let attrs = ["A", "B", "C", "D"]
        .iter()
        .map(|n| Attribute::new(n, &["x", "y", "z"], Role::Predictive))
        .chain(std::iter::once(Attribute::new("T", &["no", "yes"], Role::Target)))
        .collect();
    let schema = AttributeSchema::new(attrs).map_err(|e| e.to_string())?;
    let mut rng = seed::rng(404);
    let records: Vec<StudentRecord> = (0..200)
        .map(|_| {
            let levels: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
            let target = usize::from(levels[0] == 2 || (levels[1] == 0 && levels[3] != 1));
            StudentRecord { levels, target, raw: vec![] }
        })
        .collect();
    let config = TrainConfig {
        max_epochs: 300,
        hidden_size: Some(5),
        seed: 404,
        ..TrainConfig::default()
    };
    let encoded = encode_dataset(&records, &schema).map_err(|e| e.to_string())?;
    let net = init_network(&schema, &config).map_err(|e| e.to_string())?;
    Ok(train(net, &encoded, &config).map_err(|e| e.to_string())?.network)
}

fn ga_optimality() -> Outcome {
    let net = twelve_bit_network()?;
    let class = 1;
    let score = |c: &BitString| net.class_score(c, class).unwrap();
    let best = (0..1u64 << 12)
        .map(|v| score(&BitString::from_index(v, 12)))
        .fold(f64::NEG_INFINITY, f64::max);
    let start = Instant::now();
    let (mut hits, mut exceeded) = (0, 0);
    for run in 0..100 {
        let config = GaConfig { seed: run, ..GaConfig::default() };
        let result = evolve(score, 12, &config).map_err(|e| e.to_string())?;
        hits += usize::from(result.best_fitness == best);
        exceeded += usize::from(result.best_fitness > best);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        hits >= 95 && exceeded == 0 && secs < 60.0,
        format!("{hits}/100 runs reach the exhaustive maximum {best:.6}, {exceeded} exceed it, {secs:.1} s"),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = seed::rng(55);
    let mut worst: f64 = 0.0;
    for draw in 0..20 {
        let config = TrainConfig {
            init_range: Some(1.0),
            seed: draw,
            ..TrainConfig::default()
        };
        let mut net = Network::random(6, 3, 2, &config).map_err(|e| e.to_string())?;
        let input: Vec<f64> = (0..6).map(|_| f64::from(rng.random_range(0..2u8))).collect();
        let target = if draw % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        let analytic = net.gradient(&input, &target).map_err(|e| e.to_string())?;
        let params = net.parameters();
        let eps = 1e-4;
        for (i, &g) in analytic.iter().enumerate() {
            let mut p = params.clone();
            p[i] += eps;
            net.set_parameters(&p).map_err(|e| e.to_string())?;
            let up = net.loss(&input, &target).map_err(|e| e.to_string())?;
            p[i] -= 2.0 * eps;
            net.set_parameters(&p).map_err(|e| e.to_string())?;
            let down = net.loss(&input, &target).map_err(|e| e.to_string())?;
            net.set_parameters(&params).map_err(|e| e.to_string())?;
            let numeric = (up - down) / (2.0 * eps);
            let scale = g.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max((g - numeric).abs() / scale);
        }
    }
    check(worst <= 1e-5, format!("max relative error {worst:.2e} over 20 draws"))
}

fn planted_recovery() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let mut config = RunConfig {
        seed: 2024,
        out: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    config.generate.n = 2000;
    config.generate.planted = Some(PLANTED_UNITS.to_string());
    cmd_generate(&config).map_err(|e| e.to_string())?;
    cmd_train(&config).map_err(|e| e.to_string())?;
    cmd_extract(&config).map_err(|e| e.to_string())?;
    let text = fs::read_to_string(dir.path().join(rulex_cli::RULESET_JSON)).map_err(|e| e.to_string())?;
    let artifact: RulesetArtifact = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let attributes: std::collections::BTreeSet<&str> = artifact
        .ruleset
        .rules
        .iter()
        .flat_map(|r| r.terms.iter().map(|t| t.attribute.as_str()))
        .collect();
    let only_units = attributes.iter().all(|a| *a == "Unit 1" || *a == "Unit 2");
    check(
        artifact.training_accuracy >= 0.98 && only_units && !artifact.ruleset.rules.is_empty(),
        format!(
            "{} rules, accuracy {:.4}, attributes {attributes:?}",
            artifact.ruleset.rules.len(),
            artifact.training_accuracy
        ),
    )
}

fn residuals(y: &[f64], z: &[f64]) -> Vec<f64> {
    let (my, mz) = (mean(y), mean(z));
    let szz: f64 = z.iter().map(|v| (v - mz).powi(2)).sum();
    let syz: f64 = y.iter().zip(z).map(|(a, b)| (a - my) * (b - mz)).sum();
    y.iter().zip(z).map(|(a, b)| a - my - syz / szz * (b - mz)).collect()
}

fn statistical_oracles() -> Outcome {
    let err = |e: rulex_core::Error| e.to_string();
    let mut rng = seed::rng(77);

    let mut partial: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(5..50);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = z.iter().map(|v| 0.5 * v + rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = z.iter().map(|v| -0.3 * v + rng.random_range(-1.0..1.0)).collect();
        let oracle = pearson_r(&residuals(&x, &z), &residuals(&y, &z)).map_err(err)?;
        partial = partial.max((partial_r(&x, &y, &z).map_err(err)? - oracle).abs());
    }

    let mut univariate: f64 = 0.0;
    for _ in 0..200 {
        let groups: Vec<Vec<f64>> = (0..2)
            .map(|g| (0..rng.random_range(4..30)).map(|_| rng.random_range(0.0..5.0) + g as f64).collect())
            .collect();
        let wrapped: Vec<Vec<Vec<f64>>> = groups.iter().map(|g| g.iter().map(|&v| vec![v]).collect()).collect();
        let (m, a) = (manova_wilks(&wrapped).map_err(err)?, anova_oneway(&groups).map_err(err)?);
        univariate = univariate
            .max((m.f - a.f).abs() / a.f.max(1.0))
            .max((m.p - a.p).abs())
            .max((m.eta_squared - a.eta_squared).abs());
    }

    let mut drift: f64 = 0.0;
    for _ in 0..50 {
        let (items, factors) = (rng.random_range(4..15), rng.random_range(2..4));
        let loadings: Vec<Vec<f64>> = (0..items)
            .map(|_| (0..factors).map(|_| rng.random_range(-0.9..0.9)).collect())
            .collect();
        let rotated = varimax(&loadings);
        for (a, b) in loadings.iter().zip(&rotated) {
            let h = |r: &[f64]| r.iter().map(|l| l * l).sum::<f64>();
            drift = drift.max((h(a) - h(b)).abs());
        }
    }

    let mut beta: f64 = 0.0;
    for k in 0..=100 {
        let x = k as f64 / 100.0;
        beta = beta.max((reg_inc_beta(x, 1.0, 1.0).map_err(err)? - x).abs());
    }

    check(
        partial <= 1e-10 && univariate <= 1e-9 && drift <= 1e-8 && beta <= 1e-12,
        format!(
            "partial r {partial:.1e}, MANOVA(p=1) vs ANOVA {univariate:.1e}, communality drift {drift:.1e}, I_x(1,1) {beta:.1e}"
        ),
    )
}

fn synthetic_fidelity() -> Outcome {
    let spec = published_population(10_000, 10_000, seed::derive_seed(8, "fidelity", 0));
    let table = sample_population(&spec).map_err(|e| e.to_string())?;
    let (mut worst_se, mut worst_r) = (0.0f64, 0.0f64);
    for (group, raw) in spec.groups.iter().zip(&table.groups) {
        let target = effective_correlation(group, spec.repair).map_err(|e| e.to_string())?;
        let n = raw.rows.len() as f64;
        let columns: Vec<Vec<f64>> = (0..spec.dimensions.len())
            .map(|d| raw.rows.iter().map(|r| r[d]).collect())
            .collect();
        for (d, col) in columns.iter().enumerate() {
            let se = group.sds[d] / n.sqrt();
            worst_se = worst_se.max((mean(col) - group.means[d]).abs() / se);
            for e in d + 1..columns.len() {
                if group.sds[d] > 0.0 && group.sds[e] > 0.0 && std_dev(col) > 0.0 {
                    let r = pearson_r(col, &columns[e]).map_err(|e| e.to_string())?;
                    worst_r = worst_r.max((r - target[d][e]).abs());
                }
            }
        }
    }
    check(
        worst_se <= 3.0 && worst_r <= 0.05,
        format!(
            "{} dimensions x 2 groups of 10000: max mean deviation {worst_se:.2} SE, max |Δr| = {worst_r:.4}",
            spec.dimensions.len()
        ),
    )
}

fn pipeline(dir: &Path) -> Result<(), String> {
    let config = RunConfig {
        seed: 99,
        out: dir.to_path_buf(),
        ..RunConfig::default()
    };
    cmd_generate(&config).map_err(|e| e.to_string())?;
    cmd_train(&config).map_err(|e| e.to_string())?;
    cmd_extract(&config).map_err(|e| e.to_string())?;
    cmd_stats(&config).map_err(|e| e.to_string())?;
    cmd_report(dir).map_err(|e| e.to_string())?;
    Ok(())
}

fn determinism() -> Outcome {
    let a = TempDir::new().map_err(|e| e.to_string())?;
    let b = TempDir::new().map_err(|e| e.to_string())?;
    pipeline(a.path())?;
    pipeline(b.path())?;
    let names = [
        rulex_cli::COHORT_CSV,
        rulex_cli::COHORT_META,
        rulex_cli::MODEL_JSON,
        rulex_cli::TRAIN_LOG,
        rulex_cli::RULESET_JSON,
        rulex_cli::RULES_TXT,
        rulex_cli::STATS_JSON,
        rulex_cli::REPORT_TXT,
    ];
    let differing: Vec<&str> = names
        .iter()
        .copied()
        .filter(|name| fs::read(a.path().join(name)).ok() != fs::read(b.path().join(name)).ok())
        .collect();
    check(
        differing.is_empty(),
        format!("{} artifacts compared; differing: {differing:?}", names.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("reasoning t-test from published summary", reasoning_t_test),
        ("published learning-skill variance rows", variance_rows),
        ("Wilks identity", wilks_identity),
        ("GA optimality oracle", ga_optimality),
        ("gradient check", gradient_check),
        ("planted-rule recovery", planted_recovery),
        ("statistical oracles", statistical_oracles),
        ("synthetic fidelity", synthetic_fidelity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{status} {}. {name}: {detail} [{:.1} s]",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
