use rand::Rng;
use rulex_core::bits::BitString;
use rulex_core::evolver::{evolve, GaConfig};
use rulex_core::neural::{init_network, train, Network, TrainConfig};
use rulex_core::rulekit::{extract_ruleset, format_rule, ExtractConfig};
use rulex_core::schema::{
    encode_dataset, paper_default_schema, parse_dataset_csv, write_dataset_csv, Attribute, AttributeSchema, Role,
    StudentRecord,
};
use rulex_core::seed;
use rulex_core::synthgen::{generate_cohort, published_population, split_by_published_ratio, PlantedRuleSpec};

fn twelve_bit_network(seed_value: u64) -> (AttributeSchema, Network) {
    let attrs = ["A", "B", "C", "D"]
        .iter()
        .map(|n| Attribute::new(n, &["x", "y", "z"], Role::Predictive))
        .chain(std::iter::once(Attribute::new("T", &["no", "yes"], Role::Target)))
        .collect();
    let schema = AttributeSchema::new(attrs).unwrap();
    let mut rng = seed::rng(seed_value);
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
        seed: seed_value,
        ..TrainConfig::default()
    };
    let encoded = encode_dataset(&records, &schema).unwrap();
    let net = train(init_network(&schema, &config).unwrap(), &encoded, &config).unwrap().network;
    (schema, net)
}

#[test]
fn ga_finds_exhaustive_maximum() {
    let (_, net) = twelve_bit_network(3);
    for class in 0..2 {
        let best = (0..1u64 << 12)
            .map(|v| net.class_score(&BitString::from_index(v, 12), class).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut hits = 0;
        for run in 0..20 {
            let config = GaConfig { seed: run, ..GaConfig::default() };
            let result = evolve(|c| net.class_score(c, class).unwrap(), 12, &config).unwrap();
            assert!(result.best_fitness <= best);
            if result.best_fitness == best {
                hits += 1;
            }
        }
        assert!(hits >= 19, "class {class}: {hits}/20");
    }
}

#[test]
fn generated_csv_round_trips() {
    let schema = paper_default_schema();
    let (m, f) = split_by_published_ratio(500);
    let cohort = generate_cohort(&published_population(m, f, 21), &schema, None).unwrap();
    let text = write_dataset_csv(&cohort.dataset, &schema).unwrap();
    let parsed = parse_dataset_csv(&text, &schema).unwrap();
    assert_eq!(parsed.len(), 500);
    assert_eq!(parsed, cohort.dataset);
}

#[test]
fn planted_rules_are_recovered() {
    let schema = paper_default_schema();
    let (m, f) = split_by_published_ratio(2000);
    let cohort = generate_cohort(
        &published_population(m, f, 21),
        &schema,
        Some(&PlantedRuleSpec::units_one_two()),
    )
    .unwrap();
    let records = &cohort.dataset.records;
    let train_config = TrainConfig { seed: 21, ..TrainConfig::default() };
    let encoded = encode_dataset(records, &schema).unwrap();
    let outcome = train(init_network(&schema, &train_config).unwrap(), &encoded, &train_config).unwrap();
    let rules = extract_ruleset(&outcome.network, records, &schema, &ExtractConfig::default(), 21).unwrap();

    let texts: Vec<String> = rules.rules.iter().map(|r| format_rule(r, &schema)).collect();
    assert!(rules.accuracy(records) >= 0.98, "{texts:#?}");
    for rule in &rules.rules {
        for name in rule.attributes(&schema) {
            assert!(name == "Unit 1" || name == "Unit 2", "{texts:#?}");
        }
    }
    assert!(texts.iter().any(|t| t == "If Unit 1 = F → Then Reasoning = F"), "{texts:#?}");
}

#[test]
fn single_class_data_gives_default_only_ruleset() {
    let schema = paper_default_schema();
    let (m, f) = split_by_published_ratio(100);
    let mut cohort = generate_cohort(&published_population(m, f, 21), &schema, None).unwrap();
    for r in &mut cohort.dataset.records {
        r.target = 1;
    }
    let config = TrainConfig { max_epochs: 50, seed: 2, ..TrainConfig::default() };
    let encoded = encode_dataset(&cohort.dataset.records, &schema).unwrap();
    let net = train(init_network(&schema, &config).unwrap(), &encoded, &config).unwrap().network;
    let extract = ExtractConfig {
        ga: GaConfig { population: 30, generations: 20, ..GaConfig::default() },
        ..ExtractConfig::default()
    };
    let set = extract_ruleset(&net, &cohort.dataset.records, &schema, &extract, 2).unwrap();
    assert!(set.rules.is_empty());
    assert_eq!(set.default, 1);
    assert_eq!(set.accuracy(&cohort.dataset.records), 1.0);
}

#[test]
fn ruleset_beats_majority_class_on_default_cohort() {
    let schema = paper_default_schema();
    let cohort = generate_cohort(&published_population(49, 48, 7), &schema, None).unwrap();
    let records = &cohort.dataset.records;
    let config = TrainConfig { max_epochs: 2000, seed: 7, ..TrainConfig::default() };
    let encoded = encode_dataset(records, &schema).unwrap();
    let net = train(init_network(&schema, &config).unwrap(), &encoded, &config).unwrap().network;
    let set = extract_ruleset(&net, records, &schema, &ExtractConfig::default(), 7).unwrap();
    let majority = records.iter().filter(|r| r.target == set.default).count() as f64 / records.len() as f64;
    assert!(set.accuracy(records) > majority, "rules {} majority {majority}", set.accuracy(records));

    // Recorded metrics agree with a recount.
    for rule in &set.rules {
        let matching: Vec<&StudentRecord> = records
            .iter()
            .filter(|r| rule.terms.iter().all(|t| t.levels.contains(&r.levels[t.attribute])))
            .collect();
        let correct = matching.iter().filter(|r| r.target == rule.consequent).count();
        assert_eq!(rule.metrics.support, matching.len());
        assert_eq!(rule.metrics.confidence, correct as f64 / matching.len() as f64);
    }
}
