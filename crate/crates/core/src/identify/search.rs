//! Randomized search for feasible points and non-identifiability
//! witnesses. Every candidate is checked by exact evaluation, so a
//! returned point is a certificate; failure to find one proves nothing.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering};

use num_traits::{One, Zero};
use rand::Rng;

use crate::calculus::ParameterPoint;
use crate::identify::{EffectSpec, ManifestSpec};
use crate::models::CompiledModel;
use crate::poly::Var;
use crate::sample::Sampler;
use crate::{Poly, Rational};

/// Affine chart of the parameter space: in every live block the first
/// active variable is written as one minus the others.
#[derive(Debug, Clone)]
pub(crate) struct Chart {
    dependent: BTreeMap<Var, Poly>,
    /// Free coordinates of each live block.
    blocks: Vec<(Var, Vec<Var>)>,
    block_of: BTreeMap<Var, usize>,
    bounds: BTreeMap<Var, (Rational, Rational)>,
}

impl Chart {
    pub(crate) fn new(model: &CompiledModel) -> Self {
        let mut dependent = BTreeMap::new();
        let mut blocks = Vec::new();
        let mut block_of = BTreeMap::new();
        for b in &model.blocks {
            let active = model.active_vars(b);
            let Some((&d, free)) = active.split_first() else {
                continue;
            };
            let rest: Poly = free.iter().map(|&v| Poly::var(v)).sum();
            dependent.insert(d, Poly::one() - rest);
            for &v in free {
                block_of.insert(v, blocks.len());
            }
            blocks.push((d, free.to_vec()));
        }
        let bounds = model
            .aux
            .iter()
            .map(|a| (a.var, (a.lower.clone(), a.upper.clone())))
            .collect();
        Self {
            dependent,
            blocks,
            block_of,
            bounds,
        }
    }

    pub(crate) fn is_dependent(&self, v: Var) -> bool {
        self.dependent.contains_key(&v)
    }

    pub(crate) fn to_chart(&self, p: &Poly) -> Poly {
        p.substitute(&self.dependent)
    }

    fn coords(&self, point: &ParameterPoint) -> BTreeMap<Var, Rational> {
        point
            .values
            .iter()
            .filter(|(v, _)| !self.is_dependent(**v))
            .map(|(v, x)| (*v, x.clone()))
            .collect()
    }

    fn point(&self, coords: &BTreeMap<Var, Rational>) -> ParameterPoint {
        let mut p = ParameterPoint {
            values: coords.clone(),
        };
        for (&d, f) in &self.dependent {
            let x = f.evaluate(|v| coords.get(&v).cloned()).expect("chart coordinates are complete");
            p.set(d, x);
        }
        p
    }

    /// Whether the coordinate `v` and, for block coordinates, the block's
    /// dependent value are in range.
    fn in_range(&self, coords: &BTreeMap<Var, Rational>, v: Var) -> bool {
        let x = &coords[&v];
        if let Some((lo, hi)) = self.bounds.get(&v) {
            return x >= lo && x <= hi;
        }
        if *x < Rational::zero() || *x > Rational::one() {
            return false;
        }
        match self.block_of.get(&v) {
            Some(&b) => {
                let s: Rational = self.blocks[b].1.iter().map(|w| coords[w].clone()).sum();
                s <= Rational::one()
            }
            None => true,
        }
    }

    fn free_vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.blocks
            .iter()
            .flat_map(|(_, f)| f.iter().copied())
            .chain(self.bounds.keys().copied())
    }
}

/// A polynomial over the model's parameters with its required value, and
/// the chart coordinates in which it is linear.
#[derive(Debug, Clone)]
struct Target {
    poly: Poly,
    value: Rational,
    linear: Vec<Var>,
}

impl Target {
    fn new(chart: &Chart, poly: Poly, value: Rational) -> Self {
        let in_chart = chart.to_chart(&poly);
        let linear = in_chart
            .vars()
            .into_iter()
            .filter(|&v| in_chart.degree_in(v) == 1)
            .collect();
        Self { poly, value, linear }
    }

    fn with_value(&self, value: Rational) -> Self {
        Self { value, ..self.clone() }
    }

    fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.linear.iter().copied()
    }
}

/// Value of a model polynomial at chart coordinates.
fn eval(chart: &Chart, p: &Poly, coords: &BTreeMap<Var, Rational>) -> Rational {
    p.evaluate(|v| match coords.get(&v) {
        Some(x) => Some(x.clone()),
        None => chart.dependent.get(&v).map(|d| d.evaluate(|w| coords.get(&w).cloned()).expect("chart coordinates are complete")),
    })
    .expect("chart coordinates are complete")
}

/// Restores every broken target by solving it for one unlocked
/// coordinate in which it is linear. Each solved coordinate is locked, so
/// the loop ends after at most one pass over the coordinates.
fn repair(
    chart: &Chart,
    targets: &[Target],
    uses: &BTreeMap<Var, usize>,
    coords: &mut BTreeMap<Var, Rational>,
    locked: &mut BTreeSet<Var>,
    sampler: &mut Sampler,
) -> bool {
    let broken_at = |coords: &BTreeMap<Var, Rational>, i: usize| eval(chart, &targets[i].poly, coords) != targets[i].value;
    let mut broken: Vec<usize> = (0..targets.len()).filter(|&i| broken_at(coords, i)).collect();
    while !broken.is_empty() {
        let free = |i: usize| targets[i].vars().filter(|v| !locked.contains(v)).count();
        let i = broken.iter().copied().min_by_key(|&i| free(i)).expect("nonempty");
        let t = &targets[i];
        let at = eval(chart, &t.poly, coords);
        let mut cands = Vec::new();
        for v in t.vars().filter(|v| !locked.contains(v)) {
            let x = coords[&v].clone();
            let mut shifted = coords.clone();
            shifted.insert(v, &x + Rational::one());
            let slope = eval(chart, &t.poly, &shifted) - &at;
            if !slope.is_zero() {
                cands.push((v, &at - &slope * &x, slope));
            }
        }
        if cands.is_empty() {
            return false;
        }
        let fewest = cands.iter().map(|(v, _, _)| uses[v]).min().unwrap_or(0);
        let pool: Vec<_> = cands.into_iter().filter(|(v, _, _)| uses[v] == fewest).collect();
        let (v, offset, slope) = pool[sampler.rng().gen_range(0..pool.len())].clone();
        coords.insert(v, (&targets[i].value - offset) / slope);
        locked.insert(v);
        if !chart.in_range(coords, v) {
            return false;
        }
        broken.retain(|&j| broken_at(coords, j));
    }
    true
}

fn usage(targets: &[Target]) -> BTreeMap<Var, usize> {
    let mut m = BTreeMap::new();
    for t in targets {
        for v in t.vars() {
            *m.entry(v).or_insert(0) += 1;
        }
    }
    m
}

/// Samples a point satisfying every constraint of the model, repairing
/// equalities linearly when possible.
fn sample_valid(model: &CompiledModel, chart: &Chart, eqs: &[Target], sampler: &mut Sampler, interior: bool) -> Option<ParameterPoint> {
    let p = sampler.point(model, interior);
    let mut coords = chart.coords(&p);
    if !repair(chart, eqs, &usage(eqs), &mut coords, &mut BTreeSet::new(), sampler) {
        return None;
    }
    let p = chart.point(&coords);
    p.is_valid(model).then_some(p)
}

fn equality_targets(model: &CompiledModel, chart: &Chart) -> Vec<Target> {
    model
        .equalities
        .iter()
        .filter(|e| !chart.to_chart(e).is_zero())
        .map(|e| Target::new(chart, e.clone(), Rational::zero()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityResult {
    FoundPoint(ParameterPoint),
    NoneFound(usize),
}

/// Looks for a point satisfying all equalities exactly and all
/// inequalities as declared.
pub fn feasible(model: &CompiledModel, trials: usize, seed: u64) -> FeasibilityResult {
    let chart = Chart::new(model);
    let eqs = equality_targets(model, &chart);
    let mut sampler = Sampler::new(seed);
    for t in 0..trials {
        if let Some(p) = sample_valid(model, &chart, &eqs, &mut sampler, t % 2 == 0) {
            return FeasibilityResult::FoundPoint(p);
        }
    }
    FeasibilityResult::NoneFound(trials)
}

/// Valid points for sanity checks; fewer than `n` if sampling struggles.
pub(crate) fn valid_points(model: &CompiledModel, n: usize, seed: u64) -> Vec<ParameterPoint> {
    let chart = Chart::new(model);
    let eqs = equality_targets(model, &chart);
    let mut sampler = Sampler::new(seed);
    let mut out = Vec::new();
    for _ in 0..n * 20 {
        if out.len() == n {
            break;
        }
        if let Some(p) = sample_valid(model, &chart, &eqs, &mut sampler, true) {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessOptions {
    pub trials: usize,
    pub seed: u64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            trials: crate::identify::DEFAULT_TRIALS,
            seed: 0,
        }
    }
}

/// Two valid points that agree on every observable and differ on the
/// effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub first: ParameterPoint,
    pub second: ParameterPoint,
    pub effect_values: (Rational, Rational),
}

/// Exact check of the witness conditions.
pub fn check_witness(model: &CompiledModel, manifest: &ManifestSpec, effect: &EffectSpec, a: &ParameterPoint, b: &ParameterPoint) -> bool {
    let ev = |p: &ParameterPoint, q: &Poly| p.eval(model, q).ok();
    if !a.is_valid(model) || !b.is_valid(model) {
        return false;
    }
    for (_, m) in &manifest.observables {
        if ev(a, m).is_none() || ev(a, m) != ev(b, m) {
            return false;
        }
    }
    for n in &manifest.inequalities {
        let pos = |p: &ParameterPoint| ev(p, n).is_some_and(|x| x > Rational::zero());
        if !pos(a) || !pos(b) {
            return false;
        }
    }
    matches!((ev(a, &effect.poly), ev(b, &effect.poly)), (Some(x), Some(y)) if x != y)
}

pub(crate) fn witness_search_with(
    model: &CompiledModel,
    manifest: &ManifestSpec,
    effect: &EffectSpec,
    opts: &WitnessOptions,
    stop: &dyn Fn(usize) -> bool,
) -> Option<Witness> {
    let chart = Chart::new(model);
    let eqs = equality_targets(model, &chart);
    let mut sampler = Sampler::new(opts.seed);
    let manifest_chart: Vec<Target> = manifest
        .observables
        .iter()
        .map(|(_, m)| Target::new(&chart, m.clone(), Rational::zero()))
        .collect();
    let uses = usage(&manifest_chart.iter().chain(&eqs).cloned().collect::<Vec<_>>());
    let effect_chart = chart.to_chart(&effect.poly);

    let mut support: BTreeSet<Var> = manifest_chart.iter().flat_map(|m| chart.to_chart(&m.poly).vars()).collect();
    support.extend(eqs.iter().flat_map(|t| chart.to_chart(&t.poly).vars()));
    support.extend(manifest.inequalities.iter().flat_map(|n| chart.to_chart(n).vars()));
    let effect_vars = effect_chart.vars();
    // Blocks and auxiliaries the observation never sees but the effect does.
    let hidden_blocks: Vec<usize> = (0..chart.blocks.len())
        .filter(|&b| {
            let f = &chart.blocks[b].1;
            f.iter().all(|v| !support.contains(v)) && f.iter().any(|v| effect_vars.contains(v))
        })
        .collect();
    let hidden_aux: Vec<Var> = chart
        .bounds
        .keys()
        .copied()
        .filter(|v| !support.contains(v) && effect_vars.contains(v))
        .collect();
    let movable: Vec<Var> = chart.free_vars().filter(|v| effect_vars.contains(v)).collect();

    for t in 0..opts.trials {
        if stop(t) {
            return None;
        }
        let Some(base) = sample_valid(model, &chart, &eqs, &mut sampler, true) else {
            continue;
        };
        let base_coords = chart.coords(&base);
        let mut targets: Vec<Target> = manifest_chart
            .iter()
            .map(|m| m.with_value(eval(&chart, &m.poly, &base_coords)))
            .collect();
        targets.extend(eqs.iter().cloned());

        let mut coords = base_coords.clone();
        let mut locked = BTreeSet::new();
        let strategy = if hidden_blocks.is_empty() && hidden_aux.is_empty() { 1 + t % 2 } else { t % 3 };
        match strategy {
            0 => {
                for &b in &hidden_blocks {
                    let (_, free) = &chart.blocks[b];
                    let fresh = sampler.simplex(free.len() + 1, true);
                    for (v, x) in free.iter().zip(&fresh[1..]) {
                        coords.insert(*v, x.clone());
                    }
                }
                for v in &hidden_aux {
                    let (lo, hi) = &chart.bounds[v];
                    coords.insert(*v, sampler.between(lo, hi, true));
                }
            }
            1 => {
                if movable.is_empty() {
                    continue;
                }
                let v = movable[sampler.rng().gen_range(0..movable.len())];
                let x = match chart.bounds.get(&v) {
                    Some((lo, hi)) => sampler.between(lo, hi, true),
                    None => {
                        let two = Rational::from_integer(2.into());
                        &coords[&v] * sampler.between(&Rational::zero(), &two, true)
                    }
                };
                coords.insert(v, x);
                locked.insert(v);
                if !chart.in_range(&coords, v) {
                    continue;
                }
            }
            _ => {
                let fresh = sampler.point(model, true);
                coords = chart.coords(&fresh);
            }
        }
        if !repair(&chart, &targets, &uses, &mut coords, &mut locked, &mut sampler) {
            continue;
        }
        let other = chart.point(&coords);
        if check_witness(model, manifest, effect, &base, &other) {
            let effect_values = (
                base.eval(model, &effect.poly).ok()?,
                other.eval(model, &effect.poly).ok()?,
            );
            return Some(Witness {
                first: base,
                second: other,
                effect_values,
            });
        }
    }
    None
}

/// Searches for two valid points with equal observables and different
/// effect values. Deterministic for a given seed.
pub fn nonid_witness_search(
    model: &CompiledModel,
    manifest: &ManifestSpec,
    effect: &EffectSpec,
    opts: &WitnessOptions,
) -> Option<Witness> {
    witness_search_with(model, manifest, effect, opts, &|_| false)
}

pub(crate) fn cancellable_witness_search(
    model: &CompiledModel,
    manifest: &ManifestSpec,
    effect: &EffectSpec,
    opts: &WitnessOptions,
    cancel: &AtomicBool,
    guard: &AtomicBool,
    guard_trials: usize,
) -> Option<Witness> {
    witness_search_with(model, manifest, effect, opts, &|t| {
        cancel.load(Ordering::Relaxed) || (guard.load(Ordering::Relaxed) && t >= guard_trials)
    })
}
