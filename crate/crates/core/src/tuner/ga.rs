//! Real-valued genetic algorithm.
//!
//! Operators: tournament selection, uniform crossover, per-gene Gaussian mutation
//! clamped to the box, and elitism. The mutation standard deviation starts at
//! `mutation_scale * (hi - lo)` and is multiplied by `mutation_shrink` after every
//! generation that fails to improve the best cost by `stop_tol`. The run stops after
//! `max_generations` or `stall_generations` consecutive such generations.
//!
//! All random draws come from the master seed in a fixed order; cost evaluations run in
//! parallel but results are collected by index, so the outcome does not depend on the
//! thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub max_generations: usize,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Probability that a child is produced by crossover rather than copied.
    pub crossover_prob: f64,
    /// Best-cost improvement below this counts as a stalled generation.
    pub stop_tol: f64,
    pub stall_generations: usize,
    pub elitism: usize,
    pub tournament_size: usize,
    /// Initial mutation std as a fraction of the gene range.
    pub mutation_scale: f64,
    /// Factor applied to the mutation std after each stalled generation.
    pub mutation_shrink: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            max_generations: 600,
            mutation_rate: 0.167,
            crossover_prob: 0.8,
            stop_tol: 1e-6,
            stall_generations: 25,
            elitism: 2,
            tournament_size: 3,
            mutation_scale: 0.1,
            mutation_shrink: 0.8,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("tuning.ga.{f}");
        if self.population < 2 {
            return Err(Error::config(field("population"), "must be at least 2"));
        }
        if self.elitism >= self.population {
            return Err(Error::config(field("elitism"), "must be smaller than the population"));
        }
        if self.tournament_size == 0 {
            return Err(Error::config(field("tournament_size"), "must be at least 1"));
        }
        for (name, p) in [("mutation_rate", self.mutation_rate), ("crossover_prob", self.crossover_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field(name), format!("must be in [0, 1], got {p}")));
            }
        }
        if !(self.stop_tol.is_finite() && self.stop_tol > 0.0) {
            return Err(Error::config(field("stop_tol"), "must be positive"));
        }
        if !(self.mutation_scale.is_finite() && self.mutation_scale >= 0.0) {
            return Err(Error::config(field("mutation_scale"), "must be >= 0"));
        }
        if !(self.mutation_shrink > 0.0 && self.mutation_shrink <= 1.0) {
            return Err(Error::config(field("mutation_shrink"), "must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Per-gene search box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InputDomain("bounds must be non-empty and of equal length".into()));
        }
        for (i, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InputDomain(format!("gene {i}: invalid bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, genes: &[f64]) -> bool {
        genes.len() == self.dim() && genes.iter().zip(self.lo.iter().zip(&self.hi)).all(|(g, (lo, hi))| lo <= g && g <= hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    /// Best cost of each generation, starting with the initial population.
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
    /// Stopped on the stall rule rather than the generation limit.
    pub stalled: bool,
}

fn sanitize(cost: f64) -> f64 {
    if cost.is_finite() {
        cost
    } else {
        f64::INFINITY
    }
}

fn evaluate<F>(population: &[Vec<f64>], cost: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    population.par_iter().map(|g| sanitize(cost(g))).collect()
}

fn tournament(rng: &mut ChaCha8Rng, costs: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..costs.len());
    for _ in 1..size {
        let c = rng.random_range(0..costs.len());
        if costs[c] < costs[best] || (costs[c] == costs[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Minimises `cost` over `bounds`. Non-finite costs are treated as `+inf`.
pub fn ga_run<F>(cfg: &GaConfig, bounds: &Bounds, cost: F) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    bounds.validate()?;
    let dim = bounds.dim();
    let mut rng = rng::stream(cfg.seed, rng::GA);

    let mut population: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| {
            (0..dim)
                .map(|i| bounds.lo[i] + rng.random::<f64>() * (bounds.hi[i] - bounds.lo[i]))
                .collect()
        })
        .collect();
    let mut costs = evaluate(&population, &cost);
    let mut evaluations = population.len();

    let mut order: Vec<usize> = (0..population.len()).collect();
    let rank = |costs: &[f64], order: &mut Vec<usize>| {
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    };
    rank(&costs, &mut order);
    let mut best = population[order[0]].clone();
    let mut best_cost = costs[order[0]];
    let mut history = vec![best_cost];

    let mut scale = cfg.mutation_scale;
    let mut stall = 0;
    let mut stalled = false;
    let mut generations = 0;

    while generations < cfg.max_generations {
        generations += 1;
        let mut next: Vec<Vec<f64>> = order[..cfg.elitism].iter().map(|&i| population[i].clone()).collect();
        let mut next_costs: Vec<f64> = order[..cfg.elitism].iter().map(|&i| costs[i]).collect();

        let mut children = Vec::with_capacity(cfg.population - cfg.elitism);
        while next.len() + children.len() < cfg.population {
            let a = tournament(&mut rng, &costs, cfg.tournament_size);
            let b = tournament(&mut rng, &costs, cfg.tournament_size);
            let mut child = if rng.random::<f64>() < cfg.crossover_prob {
                (0..dim)
                    .map(|i| if rng.random::<bool>() { population[a][i] } else { population[b][i] })
                    .collect()
            } else {
                population[a].clone()
            };
            for (i, gene) in child.iter_mut().enumerate() {
                if rng.random::<f64>() < cfg.mutation_rate {
                    let n: f64 = rng.sample(StandardNormal);
                    *gene += n * scale * (bounds.hi[i] - bounds.lo[i]);
                }
                *gene = gene.clamp(bounds.lo[i], bounds.hi[i]);
            }
            children.push(child);
        }
        let child_costs = evaluate(&children, &cost);
        evaluations += children.len();
        next.extend(children);
        next_costs.extend(child_costs);
        population = next;
        costs = next_costs;

        rank(&costs, &mut order);
        let gen_best = costs[order[0]];
        history.push(gen_best);
        if gen_best < best_cost - cfg.stop_tol {
            stall = 0;
        } else {
            stall += 1;
            scale *= cfg.mutation_shrink;
        }
        if gen_best < best_cost {
            best_cost = gen_best;
            best = population[order[0]].clone();
        }
        if stall >= cfg.stall_generations {
            stalled = true;
            break;
        }
    }

    Ok(GaResult {
        best,
        best_cost,
        history,
        generations,
        evaluations,
        stalled,
    })
}
