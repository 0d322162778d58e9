//! Generational genetic algorithm over fixed-length bit strings.
//!
//! Tournament selection, single-point crossover, per-bit mutation and
//! elitism, for a fixed number of generations. Randomness for each initial
//! individual and each offspring pair comes from its own substream keyed by
//! (seed, generation, pair index), so the outcome does not depend on the
//! order in which fitness values are computed.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::seed::{self, StageRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 100,
            generations: 200,
            crossover_probability: 0.8,
            mutation_probability: 0.02,
            tournament_size: 3,
            elitism: 2,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config("population must be at least 2".into()));
        }
        if self.elitism >= self.population {
            return Err(Error::Config("elitism must be smaller than the population".into()));
        }
        for (name, p) in [
            ("crossover", self.crossover_probability),
            ("mutation", self.mutation_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} probability must lie in [0, 1]")));
            }
        }
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub best: BitString,
    pub best_fitness: f64,
    /// Best fitness in the population, starting with the initial one.
    pub history: Vec<f64>,
    pub generations: usize,
}

/// Index of the fittest of `k` uniform draws (with replacement); ties go to
/// the lowest index.
pub fn tournament_index(fitnesses: &[f64], k: usize, rng: &mut StageRng) -> usize {
    let mut best = rng.random_range(0..fitnesses.len());
    for _ in 1..k {
        let c = rng.random_range(0..fitnesses.len());
        if fitnesses[c] > fitnesses[best] || (fitnesses[c] == fitnesses[best] && c < best) {
            best = c;
        }
    }
    best
}

pub fn select_tournament<'a>(
    population: &'a [BitString],
    fitnesses: &[f64],
    k: usize,
    rng: &mut StageRng,
) -> &'a BitString {
    &population[tournament_index(fitnesses, k, rng)]
}

/// Swaps the suffixes of `a` and `b` from position `cut` on.
pub fn crossover_point(a: &BitString, b: &BitString, cut: usize) -> Result<(BitString, BitString)> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if cut == 0 || cut >= a.len() {
        return Err(Error::Domain(format!("crossover cut {cut} outside 1..{}", a.len())));
    }
    let mut c1 = a.as_slice()[..cut].to_vec();
    c1.extend_from_slice(&b.as_slice()[cut..]);
    let mut c2 = b.as_slice()[..cut].to_vec();
    c2.extend_from_slice(&a.as_slice()[cut..]);
    Ok((BitString::from_bools(c1), BitString::from_bools(c2)))
}

/// Flips each bit independently with probability `p`.
pub fn mutate_bits(c: &BitString, p: f64, rng: &mut StageRng) -> BitString {
    let mut out = c.clone();
    for i in 0..out.len() {
        if rng.random::<f64>() < p {
            out.flip(i);
        }
    }
    out
}

fn random_bits(len: usize, rng: &mut StageRng) -> BitString {
    BitString::from_bools((0..len).map(|_| rng.random::<bool>()).collect())
}

struct Evaluator<'f, F> {
    fitness: &'f F,
    cache: HashMap<BitString, f64>,
}

impl<F: Fn(&BitString) -> f64> Evaluator<'_, F> {
    fn eval(&mut self, c: &BitString) -> Result<f64> {
        if let Some(&v) = self.cache.get(c) {
            return Ok(v);
        }
        let v = (self.fitness)(c);
        if !v.is_finite() {
            return Err(Error::NonFiniteFitness {
                chromosome: c.to_string(),
                value: v,
            });
        }
        self.cache.insert(c.clone(), v);
        Ok(v)
    }
}

/// Maximizes `fitness` over bit strings of length `bit_length`.
///
/// `fitness` must be pure; values are memoized per chromosome.
pub fn evolve<F>(fitness: F, bit_length: usize, config: &GaConfig) -> Result<EvolutionResult>
where
    F: Fn(&BitString) -> f64,
{
    config.validate()?;
    if bit_length == 0 {
        return Err(Error::Config("chromosomes need at least one bit".into()));
    }
    let mut evaluator = Evaluator {
        fitness: &fitness,
        cache: HashMap::new(),
    };

    let mut population: Vec<BitString> = (0..config.population)
        .map(|i| random_bits(bit_length, &mut seed::rng(seed::derive_seed(config.seed, "ga/init", i as u64))))
        .collect();
    let mut scores = population
        .iter()
        .map(|c| evaluator.eval(c))
        .collect::<Result<Vec<_>>>()?;

    let best_of = |scores: &[f64]| {
        scores
            .iter()
            .enumerate()
            .fold(0, |b, (i, &s)| if s > scores[b] { i } else { b })
    };
    let mut best_idx = best_of(&scores);
    let mut best = population[best_idx].clone();
    let mut best_fitness = scores[best_idx];
    let mut history = vec![best_fitness];

    for generation in 0..config.generations {
        let generation_seed = seed::derive_seed(config.seed, "ga/generation", generation as u64);

        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut next: Vec<BitString> = ranked[..config.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();

        let mut pair = 0u64;
        while next.len() < config.population {
            let mut rng = seed::rng(seed::derive_seed(generation_seed, "pair", pair));
            pair += 1;
            let a = select_tournament(&population, &scores, config.tournament_size, &mut rng);
            let b = select_tournament(&population, &scores, config.tournament_size, &mut rng);
            let (c1, c2) = if bit_length > 1 && rng.random::<f64>() < config.crossover_probability {
                let cut = rng.random_range(1..bit_length);
                crossover_point(a, b, cut)?
            } else {
                (a.clone(), b.clone())
            };
            for child in [c1, c2] {
                if next.len() < config.population {
                    next.push(mutate_bits(&child, config.mutation_probability, &mut rng));
                }
            }
        }

        population = next;
        scores = population
            .iter()
            .map(|c| evaluator.eval(c))
            .collect::<Result<Vec<_>>>()?;
        best_idx = best_of(&scores);
        if scores[best_idx] > best_fitness {
            best_fitness = scores[best_idx];
            best = population[best_idx].clone();
        }
        history.push(scores[best_idx]);
    }

    Ok(EvolutionResult {
        best,
        best_fitness,
        history,
        generations: config.generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn one_max_reaches_all_ones() {
        for s in 0..20 {
            let cfg = GaConfig { seed: s, ..GaConfig::default() };
            let r = evolve(|c| c.count_ones() as f64, 16, &cfg).unwrap();
            assert_eq!(r.best.count_ones(), 16, "seed {s}");
            assert_eq!(r.best_fitness, 16.0);
        }
    }

    #[test]
    fn constant_fitness_is_flat() {
        let cfg = GaConfig { generations: 15, ..GaConfig::default() };
        let r = evolve(|_| 1.0, 8, &cfg).unwrap();
        assert_eq!(r.history.len(), 16);
        assert!(r.history.iter().all(|&v| v == 1.0));
        assert_eq!(r.best.len(), 8);
    }

    #[test]
    fn history_is_monotone_and_deterministic() {
        let f = |c: &BitString| {
            c.iter().enumerate().map(|(i, b)| if b { ((i * 7) % 5) as f64 - 1.5 } else { 0.0 }).sum::<f64>()
        };
        let cfg = GaConfig { seed: 21, generations: 50, ..GaConfig::default() };
        let a = evolve(f, 24, &cfg).unwrap();
        assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(a.best_fitness, *a.history.last().unwrap());
        assert_eq!(a, evolve(f, 24, &cfg).unwrap());
    }

    #[test]
    fn never_exceeds_enumerated_maximum() {
        let f = |c: &BitString| {
            let x = c.iter().fold(0u32, |acc, b| (acc << 1) | u32::from(b)) as f64;
            (x / 97.0).sin() * (x / 13.0).cos()
        };
        let max = (0..1u64 << 10)
            .map(|v| f(&BitString::from_index(v, 10)))
            .fold(f64::NEG_INFINITY, f64::max);
        for s in 0..10 {
            let cfg = GaConfig { seed: s, generations: 40, ..GaConfig::default() };
            let r = evolve(f, 10, &cfg).unwrap();
            assert!(r.best_fitness <= max);
            assert_eq!(r.best_fitness, f(&r.best));
        }
    }

    #[test]
    fn non_finite_fitness_aborts() {
        let err = evolve(|c| if c.get(0) { f64::NAN } else { 0.0 }, 4, &GaConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteFitness { .. }));
    }

    #[test]
    fn config_validation() {
        let bad = [
            GaConfig { population: 1, ..GaConfig::default() },
            GaConfig { elitism: 100, ..GaConfig::default() },
            GaConfig { mutation_probability: 1.5, ..GaConfig::default() },
            GaConfig { tournament_size: 0, ..GaConfig::default() },
        ];
        for cfg in bad {
            assert!(evolve(|_| 0.0, 4, &cfg).is_err());
        }
        assert!(evolve(|_| 0.0, 0, &GaConfig::default()).is_err());
    }

    #[test]
    fn tournament_with_large_k_finds_best() {
        let pop: Vec<BitString> = ["00", "01", "10", "11"].iter().map(|s| bits(s)).collect();
        let fit = [0.1, 0.9, 0.4, 0.2];
        let mut rng = seed::rng(4);
        let hits = (0..10_000)
            .filter(|_| select_tournament(&pop, &fit, 64, &mut rng) == &pop[1])
            .count();
        // Analytic: 1 - (3/4)^64 ~ 1 - 1e-8.
        assert!(hits as f64 / 10_000.0 >= 0.99);
    }

    #[test]
    fn tournament_edge_cases() {
        let mut rng = seed::rng(0);
        let single = [bits("101")];
        assert_eq!(select_tournament(&single, &[3.0], 5, &mut rng), &single[0]);
        let flat = [1.0; 6];
        for _ in 0..200 {
            let mut probe = rng.clone();
            let first = probe.random_range(0..6usize);
            let mut expected = first;
            for _ in 1..3 {
                expected = expected.min(probe.random_range(0..6usize));
            }
            assert_eq!(tournament_index(&flat, 3, &mut rng), expected);
        }
    }

    #[test]
    fn crossover_swaps_suffixes() {
        let (c1, c2) = crossover_point(&bits("1111"), &bits("0000"), 2).unwrap();
        assert_eq!((c1.to_string(), c2.to_string()), ("1100".into(), "0011".into()));
        let a = bits("1010");
        let (d1, d2) = crossover_point(&a, &a, 1).unwrap();
        assert_eq!((&d1, &d2), (&a, &a));
        assert!(crossover_point(&a, &a, 0).is_err());
        assert!(crossover_point(&a, &a, 4).is_err());
        assert!(crossover_point(&a, &bits("10"), 1).is_err());
    }

    #[test]
    fn crossover_conserves_bits_per_position() {
        let mut rng = seed::rng(12);
        for _ in 0..10_000 {
            let len = rng.random_range(2..40);
            let a = random_bits(len, &mut rng);
            let b = random_bits(len, &mut rng);
            let cut = rng.random_range(1..len);
            let (c1, c2) = crossover_point(&a, &b, cut).unwrap();
            for i in 0..len {
                assert_eq!(u8::from(a.get(i)) + u8::from(b.get(i)), u8::from(c1.get(i)) + u8::from(c2.get(i)));
            }
        }
    }

    #[test]
    fn mutation_extremes_and_rate() {
        let mut rng = seed::rng(8);
        let c = random_bits(64, &mut rng);
        assert_eq!(mutate_bits(&c, 0.0, &mut rng), c);
        let flipped = mutate_bits(&c, 1.0, &mut rng);
        assert!((0..64).all(|i| flipped.get(i) != c.get(i)));

        let base = BitString::zeros(1000);
        let total: usize = (0..1000).map(|_| mutate_bits(&base, 0.02, &mut rng).count_ones()).sum();
        let mean = total as f64 / 1000.0;
        assert!((15.0..=25.0).contains(&mean), "{mean}");
    }
}
