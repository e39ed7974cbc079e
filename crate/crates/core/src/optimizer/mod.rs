//! Bounded population-based minimization: particle swarm (PSO) and
//! differential evolution (DE rand/1/bin).
//!
//! Both work in normalized unit-cube coordinates (linear or logarithmic per
//! dimension), clamp every candidate to the box before it is evaluated, and
//! draw random numbers only on the coordinating thread, so results are
//! reproducible for a given seed even though each population is evaluated
//! in parallel.

mod space;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use space::{Parameter, ParameterSpace, Scale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pso,
    De,
}

fn pso_inertia() -> f64 {
    0.72
}
fn pso_accel() -> f64 {
    1.49
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoSettings {
    #[serde(default = "pso_inertia")]
    pub inertia: f64,
    #[serde(default = "pso_accel")]
    pub cognitive: f64,
    #[serde(default = "pso_accel")]
    pub social: f64,
    /// Velocity limit per dimension, in unit-cube lengths.
    #[serde(default = "pso_vmax")]
    pub v_max: f64,
}

fn pso_vmax() -> f64 {
    0.5
}

impl Default for PsoSettings {
    fn default() -> Self {
        PsoSettings {
            inertia: pso_inertia(),
            cognitive: pso_accel(),
            social: pso_accel(),
            v_max: pso_vmax(),
        }
    }
}

fn de_f() -> f64 {
    0.6
}
fn de_cr() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeSettings {
    /// Differential weight.
    #[serde(default = "de_f")]
    pub f: f64,
    /// Crossover probability.
    #[serde(default = "de_cr")]
    pub cr: f64,
}

impl Default for DeSettings {
    fn default() -> Self {
        DeSettings {
            f: de_f(),
            cr: de_cr(),
        }
    }
}

fn default_stagnation_window() -> usize {
    30
}
fn default_stagnation_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub population: usize,
    pub max_iter: usize,
    /// Random seed; the pipeline fills it from the run seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Stop as soon as the best objective is at or below this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// Stop when the best objective improved by less than
    /// `stagnation_tol` (relative) over this many iterations.
    #[serde(default = "default_stagnation_window")]
    pub stagnation_window: usize,
    #[serde(default = "default_stagnation_tol")]
    pub stagnation_tol: f64,
    #[serde(default)]
    pub pso: PsoSettings,
    #[serde(default)]
    pub de: DeSettings,
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, population: usize, max_iter: usize, seed: u64) -> Self {
        OptimizerConfig {
            algorithm,
            population,
            max_iter,
            seed: Some(seed),
            target: None,
            stagnation_window: default_stagnation_window(),
            stagnation_tol: default_stagnation_tol(),
            pso: PsoSettings::default(),
            de: DeSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid("optimizer", m.to_string()));
        if self.population < 4 {
            return bad("population must be at least 4");
        }
        if self.stagnation_window == 0 || !(self.stagnation_tol >= 0.0) {
            return bad("stagnation window must be positive and tolerance non-negative");
        }
        if let Some(t) = self.target {
            if !t.is_finite() {
                return bad("target must be finite");
            }
        }
        let p = &self.pso;
        if !(0.0..1.0).contains(&p.inertia)
            || !(0.0..=4.0).contains(&p.cognitive)
            || !(0.0..=4.0).contains(&p.social)
            || !(p.v_max > 0.0 && p.v_max <= 1.0)
        {
            return bad("PSO inertia in [0,1), cognitive/social in [0,4], v_max in (0,1]");
        }
        if !(self.de.f > 0.0 && self.de.f <= 2.0) || !(0.0..=1.0).contains(&self.de.cr) {
            return bad("DE F in (0,2], CR in [0,1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    Stagnation,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iter: usize,
    pub best_objective: f64,
    /// Cumulative evaluations.
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    /// Best candidate in parameter (not normalized) coordinates.
    pub best: Vec<f64>,
    pub best_objective: f64,
    pub history: Vec<HistoryEntry>,
    pub evaluations: usize,
    pub stop_reason: StopReason,
}

impl OptimizationResult {
    /// Convergence history as CSV (`iter,best_objective,evals`).
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iter,best_objective,evals\n");
        for h in &self.history {
            s.push_str(&format!("{},{:e},{}\n", h.iter, h.best_objective, h.evals));
        }
        s
    }
}

fn rng_for(config: &OptimizerConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0))
}

fn unit_population(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

/// Initial population, uniform per dimension in linear or log coordinates.
pub fn sample_initial_population(
    space: &ParameterSpace,
    config: &OptimizerConfig,
) -> Vec<Vec<f64>> {
    let mut rng = rng_for(config);
    unit_population(&mut rng, config.population, space.dim())
        .iter()
        .map(|u| space.from_unit(u))
        .collect()
}

struct Tracker<'a> {
    config: &'a OptimizerConfig,
    history: Vec<HistoryEntry>,
    evals: usize,
    best_u: Vec<f64>,
    best_f: f64,
}

impl Tracker<'_> {
    fn offer(&mut self, u: &[f64], f: f64) {
        if f < self.best_f {
            self.best_f = f;
            self.best_u = u.to_vec();
        }
    }

    /// Records the end of iteration `iter`; returns a stop reason if any.
    fn close(&mut self, iter: usize) -> Option<StopReason> {
        self.history.push(HistoryEntry {
            iter,
            best_objective: self.best_f,
            evals: self.evals,
        });
        if let Some(t) = self.config.target {
            if self.best_f <= t {
                return Some(StopReason::Target);
            }
        }
        let w = self.config.stagnation_window;
        if self.history.len() > w {
            let old = self.history[self.history.len() - 1 - w].best_objective;
            if old - self.best_f <= self.config.stagnation_tol * old.abs() {
                return Some(StopReason::Stagnation);
            }
        }
        if iter >= self.config.max_iter {
            return Some(StopReason::MaxIterations);
        }
        None
    }
}

fn evaluate<F>(space: &ParameterSpace, objective: &F, pop: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pop.par_iter()
        .map(|u| {
            let f = objective(&space.from_unit(u));
            if f.is_nan() {
                f64::INFINITY
            } else {
                f
            }
        })
        .collect()
}

/// Minimizes `objective` over `space`.
pub fn optimize<F>(
    space: &ParameterSpace,
    objective: F,
    config: &OptimizerConfig,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if space.dim() == 0 {
        return Err(Error::invalid("parameter space", "no parameters"));
    }
    let mut rng = rng_for(config);
    let dim = space.dim();
    let n = config.population;
    let mut pop = unit_population(&mut rng, n, dim);
    let mut fit = evaluate(space, &objective, &pop);
    let mut tr = Tracker {
        config,
        history: Vec::new(),
        evals: n,
        best_u: pop[0].clone(),
        best_f: f64::INFINITY,
    };
    for (u, f) in pop.iter().zip(&fit) {
        tr.offer(u, *f);
    }
    let mut stop = tr.close(0);

    match config.algorithm {
        Algorithm::Pso => {
            let p = &config.pso;
            let mut vel: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..dim)
                        .map(|_| p.v_max * (2.0 * rng.gen::<f64>() - 1.0) * 0.2)
                        .collect()
                })
                .collect();
            let mut pbest = pop.clone();
            let mut pbest_f = fit.clone();
            let mut iter = 0;
            while stop.is_none() {
                iter += 1;
                let g = tr.best_u.clone();
                for i in 0..n {
                    for j in 0..dim {
                        let r1: f64 = rng.gen();
                        let r2: f64 = rng.gen();
                        let v = p.inertia * vel[i][j]
                            + p.cognitive * r1 * (pbest[i][j] - pop[i][j])
                            + p.social * r2 * (g[j] - pop[i][j]);
                        let v = v.clamp(-p.v_max, p.v_max);
                        let x = pop[i][j] + v;
                        if !(0.0..=1.0).contains(&x) {
                            pop[i][j] = x.clamp(0.0, 1.0);
                            vel[i][j] = 0.0;
                        } else {
                            pop[i][j] = x;
                            vel[i][j] = v;
                        }
                    }
                }
                fit = evaluate(space, &objective, &pop);
                tr.evals += n;
                for i in 0..n {
                    if fit[i] < pbest_f[i] {
                        pbest_f[i] = fit[i];
                        pbest[i] = pop[i].clone();
                    }
                    tr.offer(&pop[i], fit[i]);
                }
                stop = tr.close(iter);
            }
        }
        Algorithm::De => {
            let d = &config.de;
            let mut iter = 0;
            while stop.is_none() {
                iter += 1;
                let trials: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        let mut pick = |excl: &[usize]| loop {
                            let r = rng.gen_range(0..n);
                            if !excl.contains(&r) {
                                return r;
                            }
                        };
                        let r1 = pick(&[i]);
                        let r2 = pick(&[i, r1]);
                        let r3 = pick(&[i, r1, r2]);
                        let jrand = rng.gen_range(0..dim);
                        (0..dim)
                            .map(|j| {
                                let cross = rng.gen::<f64>() < d.cr || j == jrand;
                                if cross {
                                    (pop[r1][j] + d.f * (pop[r2][j] - pop[r3][j])).clamp(0.0, 1.0)
                                } else {
                                    pop[i][j]
                                }
                            })
                            .collect()
                    })
                    .collect();
                let tf = evaluate(space, &objective, &trials);
                tr.evals += n;
                for (i, (t, f)) in trials.into_iter().zip(tf).enumerate() {
                    if f <= fit[i] {
                        tr.offer(&t, f);
                        pop[i] = t;
                        fit[i] = f;
                    }
                }
                stop = tr.close(iter);
            }
        }
    }

    Ok(OptimizationResult {
        best: space.from_unit(&tr.best_u),
        best_objective: tr.best_f,
        evaluations: tr.evals,
        history: tr.history,
        stop_reason: stop.unwrap(),
    })
}
