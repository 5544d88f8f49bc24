//! Observation ideals, identification of causal effects by elimination,
//! and randomized certificates of non-identifiability and feasibility.

mod movie;
mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use serde_json::json;
use thiserror::Error;

use crate::calculus::{manipulate, CalcError, ManipulationSpec, ParameterPoint};
use crate::models::{content_lines, split_top, CompiledModel, ModelError};
use crate::poly::{
    elimination_ideal_with, parse_with, GroebnerOptions, MonomialOrder, PolyError, Var, VarKind, VariableTable,
    DEFAULT_STEP_LIMIT,
};
use crate::{Poly, Rational, RationalIdeal};

pub use movie::{
    movie_effects, movie_manifests, movie_model, reproduce_movie_example, MovieCase, MovieData, MovieReport, MOVIE_DATA,
};
pub use search::{check_witness, feasible, nonid_witness_search, FeasibilityResult, Witness, WitnessOptions};

pub const DEFAULT_TRIALS: usize = 10_000;
/// Witness trials still run after elimination has found a relation.
pub const DEFAULT_GUARD_TRIALS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("name `{0}` is already used")]
    NameCollision(String),
    #[error("internal contradiction: {0}")]
    Contradiction(String),
}

/// Observed polynomial functions `b_y = m_y(π)` of a model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ManifestSpec {
    pub name: String,
    pub observables: Vec<(String, Poly)>,
    /// Observed to be strictly positive.
    pub inequalities: Vec<Poly>,
}

impl ManifestSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn observe(mut self, name: &str, poly: Poly) -> Self {
        self.observables.push((name.to_string(), poly));
        self
    }

    /// Parses `manifest <name>` followed by `obs <b> = <expr>` and
    /// `ineq: <expr> > 0` lines.
    pub fn parse(model: &CompiledModel, text: &str) -> Result<Self, ModelError> {
        let perr = |line, msg: String| ModelError::Parse { line, msg };
        let mut lines = content_lines(text);
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty manifest file".into()))?;
        let name = header
            .strip_prefix("manifest ")
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .ok_or_else(|| perr(hline, "expected `manifest <name>`".into()))?;
        let mut spec = Self::new(name);
        for (line, l) in lines {
            if let Some(rest) = l.strip_prefix("obs ") {
                let (b, expr) = split_top(rest, "=").ok_or_else(|| perr(line, "expected `obs <b> = <expr>`".into()))?;
                let b = b.trim();
                if b.is_empty() || b.contains(char::is_whitespace) {
                    return Err(perr(line, format!("bad observable name `{b}`")));
                }
                if spec.observables.iter().any(|(n, _)| n == b) {
                    return Err(perr(line, format!("duplicate observable `{b}`")));
                }
                let p = model.parse_expr(expr.trim()).map_err(|e| perr(line, e.to_string()))?;
                spec.observables.push((b.to_string(), p));
            } else if let Some(rest) = l.strip_prefix("ineq:") {
                let (lhs, rhs) = split_top(rest, ">").ok_or_else(|| perr(line, "expected `ineq: <expr> > <expr>`".into()))?;
                let a = model.parse_expr(lhs.trim()).map_err(|e| perr(line, e.to_string()))?;
                let b = model.parse_expr(rhs.trim()).map_err(|e| perr(line, e.to_string()))?;
                spec.inequalities.push(a - b);
            } else {
                return Err(perr(line, format!("unexpected line `{l}`")));
            }
        }
        Ok(spec)
    }

    /// Joint observation of several experiments.
    pub fn union(parts: &[ManifestSpec]) -> Result<Self, IdentifyError> {
        let mut out = Self::new(&parts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join("+"));
        for p in parts {
            for (n, m) in &p.observables {
                if out.observables.iter().any(|(o, _)| o == n) {
                    return Err(IdentifyError::NameCollision(n.clone()));
                }
                out.observables.push((n.clone(), m.clone()));
            }
            out.inequalities.extend(p.inequalities.iter().cloned());
        }
        Ok(out)
    }

    pub fn support(&self) -> BTreeSet<Var> {
        self.observables.iter().flat_map(|(_, m)| m.vars()).collect()
    }

    pub fn values_at(&self, model: &CompiledModel, p: &ParameterPoint) -> Result<Vec<Rational>, PolyError> {
        self.observables.iter().map(|(_, m)| p.eval(model, m)).collect()
    }
}

/// A causal effect `ε = e(π̂)` with every `π̂` already written in terms of
/// the primitive probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectSpec {
    pub name: String,
    pub poly: Poly,
}

impl EffectSpec {
    pub fn new(name: &str, poly: Poly) -> Self {
        Self {
            name: name.to_string(),
            poly,
        }
    }

    /// Parses an effect expression. Besides the model's own identifiers,
    /// `pihat(..)` stands for a manipulated primitive probability and
    /// `phat(..)` for an atom of the manipulated model (zero if the
    /// manipulation removed it).
    pub fn parse_expr(
        model: &CompiledModel,
        manipulation: &ManipulationSpec,
        name: &str,
        expr: &str,
    ) -> Result<Self, IdentifyError> {
        let after = manipulate(model, manipulation)?;
        let poly = parse_with(expr, &mut |id, _| {
            if let Some(rest) = id.strip_prefix("pihat(") {
                let v = model
                    .table
                    .get(&format!("pi({rest}"))
                    .ok_or_else(|| PolyError::UnknownIdentifier(id.to_string()))?;
                return Ok(manipulation.pihat(v).partial_eval(&model.pinned));
            }
            if let Some(rest) = id.strip_prefix("phat(") {
                let label = format!("p({rest}");
                if let Some(i) = after.atom_index(&label) {
                    return Ok(after.atoms[i].poly.clone());
                }
                if model.atom_index(&label).is_some() {
                    return Ok(Poly::zero());
                }
                return Err(PolyError::UnknownIdentifier(id.to_string()));
            }
            model.parse_expr(id).map_err(|e| match e {
                ModelError::Poly(p) => p,
                other => PolyError::UnknownIdentifier(other.to_string()),
            })
        })?;
        Ok(Self::new(name, poly))
    }

    /// Parses a file holding one `effect <name> = <expr>` line.
    pub fn parse(model: &CompiledModel, manipulation: &ManipulationSpec, text: &str) -> Result<Self, IdentifyError> {
        let perr = |line, msg: String| IdentifyError::Model(ModelError::Parse { line, msg });
        let mut lines = content_lines(text);
        let (line, l) = lines.next().ok_or_else(|| perr(1, "empty effect file".into()))?;
        let rest = l
            .strip_prefix("effect ")
            .ok_or_else(|| perr(line, "expected `effect <name> = <expr>`".into()))?;
        let (name, expr) = split_top(rest, "=").ok_or_else(|| perr(line, "expected `effect <name> = <expr>`".into()))?;
        if let Some((extra, _)) = lines.next() {
            return Err(perr(extra, "an effect file holds one effect".into()));
        }
        Self::parse_expr(model, manipulation, name.trim(), expr.trim()).map_err(|e| match e {
            IdentifyError::Poly(p) => perr(line, p.to_string()),
            other => other,
        })
    }
}

/// Ideal over parameters, observables and the effect symbol, with the
/// generators kept by role.
#[derive(Debug, Clone)]
pub struct ObservationIdeal {
    pub table: VariableTable,
    pub ideal: RationalIdeal,
    /// Parameters and auxiliaries, in elimination order.
    pub eliminated: Vec<Var>,
    pub observables: Vec<(String, Var)>,
    pub epsilon: Option<Var>,
    pub constraint_generators: Vec<Poly>,
    pub sum_generators: Vec<Poly>,
    pub manifest_generators: Vec<Poly>,
    pub effect_generator: Option<Poly>,
}

impl ObservationIdeal {
    pub fn kept(&self) -> BTreeSet<Var> {
        self.observables.iter().map(|(_, v)| *v).chain(self.epsilon).collect()
    }
}

/// Model equalities, sum-to-one conditions, `b_y - m_y(π)` and `ε - e`,
/// under a lex order ranking parameters above `ε` above observables.
pub fn build_observation_ideal(
    model: &CompiledModel,
    manifest: &ManifestSpec,
    effect: Option<&EffectSpec>,
) -> Result<ObservationIdeal, IdentifyError> {
    let mut table = model.table.clone();
    let mut fresh = |name: &str, kind: VarKind| {
        if table.get(name).is_some() || model.atom_index(name).is_some() {
            return Err(IdentifyError::NameCollision(name.to_string()));
        }
        Ok(table.intern(name, kind))
    };
    let mut observables = Vec::new();
    for (n, _) in &manifest.observables {
        observables.push((n.clone(), fresh(n, VarKind::Manifest)?));
    }
    let epsilon = effect.map(|e| fresh(&e.name, VarKind::Effect)).transpose()?;
    let eliminated = model.parameters();
    let manifest_generators: Vec<Poly> = manifest
        .observables
        .iter()
        .zip(&observables)
        .map(|((_, m), (_, b))| Poly::var(*b) - m)
        .collect();
    let effect_generator = effect.zip(epsilon).map(|(e, v)| Poly::var(v) - &e.poly);
    let constraint_generators = model.equalities.clone();
    let sum_generators = model.sum_to_one();
    let order = MonomialOrder::lex(
        eliminated
            .iter()
            .copied()
            .chain(epsilon)
            .chain(observables.iter().map(|(_, v)| *v)),
    );
    let gens = constraint_generators
        .iter()
        .chain(&sum_generators)
        .chain(&manifest_generators)
        .chain(effect_generator.iter())
        .cloned();
    Ok(ObservationIdeal {
        ideal: RationalIdeal::new(gens, order),
        table,
        eliminated,
        observables,
        epsilon,
        constraint_generators,
        sum_generators,
        manifest_generators,
        effect_generator,
    })
}

/// The construction that projects a point of a simplex onto a face by
/// elimination: variables `t1..tn`, a dummy `l` and `s1..sk` for the face
/// coordinates, in that lex order.
pub fn point_projection_ideal(point: &[Rational], face: &[usize]) -> (VariableTable, RationalIdeal) {
    let mut table = VariableTable::new();
    let t: Vec<Var> = (1..=point.len())
        .map(|i| table.intern(&format!("t{i}"), VarKind::Dummy))
        .collect();
    let l = table.intern("l", VarKind::Dummy);
    let s: Vec<Var> = (1..=face.len())
        .map(|j| table.intern(&format!("s{j}"), VarKind::Dummy))
        .collect();
    let mut gens: Vec<Poly> = t
        .iter()
        .zip(point)
        .map(|(&v, p)| Poly::var(v) - Poly::constant(p.clone()))
        .collect();
    let s_sum: Poly = s.iter().map(|&v| Poly::var(v)).sum::<Poly>() - Poly::one();
    for (&sj, &i) in s.iter().zip(face) {
        gens.push(Poly::var(sj) * Poly::var(l) - Poly::constant(point[i].clone()));
    }
    gens.push(s_sum.clone());
    gens.push(face.iter().map(|&i| Poly::var(t[i])).sum::<Poly>() - Poly::var(l));
    gens.push(s_sum);
    (table, RationalIdeal::new(gens, MonomialOrder::index_lex()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentifyOptions {
    /// S-pair budget for each elimination.
    pub step_limit: usize,
    pub trials: usize,
    pub seed: u64,
    pub guard_trials: usize,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            step_limit: DEFAULT_STEP_LIMIT,
            trials: DEFAULT_TRIALS,
            seed: 0,
            guard_trials: DEFAULT_GUARD_TRIALS,
        }
    }
}

/// `ε = numerator / denominator` in the observables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub numerator: Poly,
    pub denominator: Poly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Identifiable { relation: Poly, solution: Option<Solution> },
    NonIdentifiable(Witness),
    Undetermined(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentificationResult {
    pub query: String,
    pub verdict: Verdict,
    /// Model table extended with the observables and the effect symbol.
    pub table: VariableTable,
    pub epsilon: Var,
    pub observables: Vec<(String, Var)>,
    pub generators_used: usize,
    pub elimination_time: Duration,
    pub witness_time: Duration,
    pub options: IdentifyOptions,
}

impl IdentificationResult {
    pub fn is_identifiable(&self) -> bool {
        matches!(self.verdict, Verdict::Identifiable { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.verdict {
            Verdict::NonIdentifiable(w) => Some(w),
            _ => None,
        }
    }

    pub fn solution(&self) -> Option<&Solution> {
        match &self.verdict {
            Verdict::Identifiable { solution, .. } => solution.as_ref(),
            _ => None,
        }
    }

    pub fn verdict_name(&self) -> &'static str {
        match self.verdict {
            Verdict::Identifiable { .. } => "identifiable",
            Verdict::NonIdentifiable(_) => "non-identifiable",
            Verdict::Undetermined(_) => "undetermined",
        }
    }

    /// `ε = (num)/(den)` when solved.
    pub fn expression(&self) -> Option<String> {
        let s = self.solution()?;
        let name = self.table.name(self.epsilon);
        let num = s.numerator.display(&self.table);
        Some(match s.denominator.constant_value() {
            Some(c) if c.is_one() => format!("{name} = {num}"),
            _ => format!("{name} = ({num})/({})", s.denominator.display(&self.table)),
        })
    }

    /// Value of the solved expression for given observable values.
    pub fn solve_at(&self, observed: &[Rational]) -> Option<Rational> {
        let s = self.solution()?;
        let values: BTreeMap<Var, Rational> =
            self.observables.iter().map(|(_, v)| *v).zip(observed.iter().cloned()).collect();
        let den = s.denominator.evaluate(|v| values.get(&v).cloned()).ok()?;
        if den.is_zero() {
            return None;
        }
        Some(s.numerator.evaluate(|v| values.get(&v).cloned()).ok()? / den)
    }

    pub fn to_json(&self, model: &CompiledModel) -> serde_json::Value {
        let mut out = json!({
            "query": self.query,
            "verdict": self.verdict_name(),
            "budgets": {
                "step_limit": self.options.step_limit,
                "trials": self.options.trials,
                "seed": self.options.seed,
            },
            "timing": {
                "elimination_ms": self.elimination_time.as_millis() as u64,
                "witness_ms": self.witness_time.as_millis() as u64,
            },
        });
        match &self.verdict {
            Verdict::Identifiable { relation, .. } => {
                out["relation"] = json!(relation.display(&self.table).to_string());
                out["generators_used"] = json!(self.generators_used);
                if let Some(e) = self.expression() {
                    out["expression"] = json!(e);
                }
            }
            Verdict::NonIdentifiable(w) => {
                out["witness"] = json!({
                    "first": w.first.named(model),
                    "second": w.second.named(model),
                    "effect": [w.effect_values.0.to_string(), w.effect_values.1.to_string()],
                });
            }
            Verdict::Undetermined(reason) => out["reason"] = json!(reason),
        }
        out
    }
}

enum Elimination {
    Relation {
        relation: Poly,
        solution: Option<Solution>,
        used: usize,
    },
    NoRelation,
    Budget(String),
    Cancelled,
}

/// Chooses a relation of positive degree in `ε`, preferring one that is
/// linear with a coefficient that is nonzero at every check point.
fn pick_relation(elim: &RationalIdeal, eps: Var, checks: &[BTreeMap<Var, Rational>]) -> Option<(Poly, Option<Solution>)> {
    let mut rels: Vec<&Poly> = elim.generators().iter().filter(|g| g.degree_in(eps) >= 1).collect();
    rels.sort_by_key(|g| (g.degree_in(eps), g.len()));
    let first = (*rels.first()?).clone();
    for g in rels.iter().filter(|g| g.degree_in(eps) == 1) {
        let cs = g.coefficients_in(eps);
        let (mut num, mut den) = (-&cs[0], cs[1].clone());
        let nonzero = checks
            .iter()
            .all(|c| den.evaluate(|v| c.get(&v).cloned()).is_ok_and(|x| !x.is_zero()));
        if !nonzero {
            continue;
        }
        if let Some(c) = den.leading().map(|(_, c)| c.clone()) {
            num = num.scale(&(Rational::one() / &c));
            den = den.scale(&(Rational::one() / &c));
        }
        let negative = num.terms().chain(den.terms()).filter(|(_, c)| **c < Rational::zero()).count();
        if 2 * negative > num.len() + den.len() {
            (num, den) = (-num, -den);
        }
        return Some(((*g).clone(), Some(Solution {
            numerator: num,
            denominator: den,
        })));
    }
    Some((first, None))
}

/// Elimination on growing subsets of the generators, in the affine chart
/// that solves every sum-to-one condition. Each subset's elimination
/// ideal lies inside the full one, so a relation found early is valid;
/// generators are added by fewest new parameters until none shares a
/// parameter with the current subset.
fn greedy_elimination(
    obs: &ObservationIdeal,
    chart: &search::Chart,
    checks: &[BTreeMap<Var, Rational>],
    step_limit: usize,
    cancel: &AtomicBool,
) -> Elimination {
    let (Some(eps), Some(effect)) = (obs.epsilon, obs.effect_generator.as_ref()) else {
        return Elimination::NoRelation;
    };
    let keep = obs.kept();
    let pool: Vec<Poly> = obs
        .manifest_generators
        .iter()
        .chain(&obs.constraint_generators)
        .map(|g| chart.to_chart(g))
        .filter(|g| !g.is_zero())
        .collect();
    let params = |g: &Poly| -> BTreeSet<Var> { g.vars().into_iter().filter(|v| !keep.contains(v)).collect() };
    let mut subset = vec![chart.to_chart(effect)];
    let mut seen = params(&subset[0]);
    let mut used = vec![false; pool.len()];
    loop {
        let ideal = RationalIdeal::new(subset.clone(), obs.ideal.order().clone());
        let opts = GroebnerOptions {
            step_limit,
            reduced: true,
            cancel: Some(cancel),
        };
        let (gb, elim) = match elimination_ideal_with(&ideal, &keep, opts) {
            Ok(r) => r,
            Err(PolyError::Cancelled) => return Elimination::Cancelled,
            Err(e) => return Elimination::Budget(e.to_string()),
        };
        if gb.is_unit() {
            return Elimination::Budget("observation ideal is the unit ideal".into());
        }
        if let Some((relation, solution)) = pick_relation(&elim, eps, checks) {
            if solution.is_some() {
                return Elimination::Relation {
                    relation,
                    solution,
                    used: subset.len(),
                };
            }
        }
        let next = (0..pool.len())
            .filter(|&i| !used[i])
            .map(|i| (i, params(&pool[i])))
            .filter(|(_, ps)| !ps.is_disjoint(&seen))
            .min_by_key(|(i, ps)| (ps.difference(&seen).count(), *i));
        match next {
            Some((i, ps)) => {
                used[i] = true;
                seen.extend(ps);
                subset.push(pool[i].clone());
            }
            None => {
                return match pick_relation(&elim, eps, checks) {
                    Some((relation, solution)) => Elimination::Relation {
                        relation,
                        solution,
                        used: subset.len(),
                    },
                    None => Elimination::NoRelation,
                }
            }
        }
    }
}

/// Decides whether `effect` is a function of the observables. Elimination
/// and witness search run concurrently; a witness cancels elimination,
/// and a relation leaves the witness search a short guard budget whose
/// success would signal an internal contradiction.
pub fn identify_effect(
    model: &CompiledModel,
    manifest: &ManifestSpec,
    effect: &EffectSpec,
    opts: &IdentifyOptions,
) -> Result<IdentificationResult, IdentifyError> {
    let obs = build_observation_ideal(model, manifest, Some(effect))?;
    let eps = obs.epsilon.expect("effect symbol");
    let chart = search::Chart::new(model);
    let checks: Vec<BTreeMap<Var, Rational>> = search::valid_points(model, 8, opts.seed ^ 0x9e37_79b9)
        .iter()
        .map(|p| {
            manifest
                .observables
                .iter()
                .zip(&obs.observables)
                .filter_map(|((_, m), (_, b))| p.eval(model, m).ok().map(|x| (*b, x)))
                .collect()
        })
        .collect();
    let cancel_elim = AtomicBool::new(false);
    let guard = AtomicBool::new(false);
    let never = AtomicBool::new(false);
    let wopts = WitnessOptions {
        trials: opts.trials,
        seed: opts.seed,
    };

    let ((elim, elim_time), (witness, witness_time)) = std::thread::scope(|s| {
        let h = s.spawn(|| {
            let t0 = Instant::now();
            let r = greedy_elimination(&obs, &chart, &checks, opts.step_limit, &cancel_elim);
            if matches!(r, Elimination::Relation { .. }) {
                guard.store(true, Ordering::Relaxed);
            }
            (r, t0.elapsed())
        });
        let t0 = Instant::now();
        let w = search::cancellable_witness_search(model, manifest, effect, &wopts, &never, &guard, opts.guard_trials);
        if w.is_some() {
            cancel_elim.store(true, Ordering::Relaxed);
        }
        let wt = t0.elapsed();
        (h.join().expect("elimination thread panicked"), (w, wt))
    });

    let (verdict, used) = match (elim, witness) {
        (Elimination::Relation { relation, .. }, Some(_)) => {
            return Err(IdentifyError::Contradiction(format!(
                "relation {} found, yet a witness exists",
                relation.display(&obs.table)
            )))
        }
        (Elimination::Relation { relation, solution, used }, None) => (Verdict::Identifiable { relation, solution }, used),
        (_, Some(w)) => (Verdict::NonIdentifiable(w), 0),
        (Elimination::NoRelation, None) => (
            Verdict::Undetermined("elimination ideal has no relation in the effect, and no witness was found".into()),
            0,
        ),
        (Elimination::Budget(reason), None) => (Verdict::Undetermined(format!("{reason}; no witness was found")), 0),
        (Elimination::Cancelled, None) => (Verdict::Undetermined("elimination cancelled".into()), 0),
    };
    Ok(IdentificationResult {
        query: format!("{} from {}", effect.name, manifest.name),
        verdict,
        table: obs.table,
        epsilon: eps,
        observables: obs.observables,
        generators_used: used,
        elimination_time: elim_time,
        witness_time,
        options: *opts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::mu_eval;
    use crate::models::{add_constraints, compile_bn, compile_tree, BnSpec, TreeSpec};
    use crate::poly::buchberger_with;
    use crate::rat;
    use crate::sample::Sampler;

    fn pair() -> CompiledModel {
        let mut s = BnSpec::new("pair");
        s.push_var("X", 2, 0);
        s.push_var("Y", 2, 0);
        s.set_parents("Y", &["X"]).unwrap();
        compile_bn(&s).unwrap()
    }

    #[test]
    fn listing_construction() {
        let third = rat(1, 3);
        let (table, ideal) = point_projection_ideal(&[third.clone(), third.clone(), third], &[0, 1]);
        let gb = buchberger_with(&ideal, GroebnerOptions { reduced: false, ..Default::default() }).unwrap();
        let shown: BTreeSet<String> = gb.basis().iter().map(|g| g.display(&table).to_string()).collect();
        let want: BTreeSet<String> = ["t3 - 1/3", "t2 - 1/3", "t1 - 1/3", "s1 + s2 - 1", "l - 2/3", "s2 - 1/2"]
            .into_iter()
            .map(String::from)
            .collect();
        assert_eq!(shown, want);
    }

    #[test]
    fn observation_ideal_vanishes_on_graph() {
        let m = pair();
        let manifest = ManifestSpec::new("all").observe("b00", m.parse_expr("p(0,0)").unwrap()).observe("b01", m.parse_expr("p(0,1)").unwrap());
        let effect = EffectSpec::new("eps", m.parse_expr("pi(Y=0|X=0)").unwrap());
        let obs = build_observation_ideal(&m, &manifest, Some(&effect)).unwrap();
        assert_eq!(obs.ideal.generators().len(), 3 + 2 + 1);
        let mut s = Sampler::new(1);
        for _ in 0..20 {
            let p = s.point(&m, false);
            let mut vals: BTreeMap<Var, Rational> = p.values.clone();
            for ((_, mp), (_, b)) in manifest.observables.iter().zip(&obs.observables) {
                vals.insert(*b, p.eval(&m, mp).unwrap());
            }
            vals.insert(obs.epsilon.unwrap(), p.eval(&m, &effect.poly).unwrap());
            for g in obs.ideal.generators() {
                assert!(g.evaluate(|v| vals.get(&v).cloned()).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn names_must_be_fresh() {
        let m = pair();
        let manifest = ManifestSpec::new("bad").observe("pi(X=0)", Poly::one());
        assert!(matches!(build_observation_ideal(&m, &manifest, None), Err(IdentifyError::NameCollision(_))));
    }

    #[test]
    fn conditional_from_full_joint() {
        let m = pair();
        let mut manifest = ManifestSpec::new("joint");
        for a in &m.atoms {
            manifest = manifest.observe(&a.label.replace("p(", "q").replace([',', ')'], ""), a.poly.clone());
        }
        let effect = EffectSpec::new("eps", m.parse_expr("pi(Y=1|X=1)").unwrap());
        let r = identify_effect(&m, &manifest, &effect, &IdentifyOptions { trials: 50, ..Default::default() }).unwrap();
        assert!(r.is_identifiable(), "{:?}", r.verdict);
        let mut s = Sampler::new(9);
        for _ in 0..30 {
            let p = s.point(&m, true);
            let vals = manifest.values_at(&m, &p).unwrap();
            assert_eq!(r.solve_at(&vals), Some(p.eval(&m, &effect.poly).unwrap()));
        }
        assert!(r.expression().unwrap().starts_with("eps = "));
    }

    #[test]
    fn unobserved_block_gives_witness() {
        let m = pair();
        let manifest = ManifestSpec::new("x").observe("bx", m.parse_expr("pi(X=0)").unwrap());
        let effect = EffectSpec::new("eps", m.parse_expr("pi(Y=0|X=1)").unwrap());
        let r = identify_effect(&m, &manifest, &effect, &IdentifyOptions::default()).unwrap();
        let w = r.witness().expect("witness");
        assert!(check_witness(&m, &manifest, &effect, &w.first, &w.second));
    }

    #[test]
    fn repair_finds_confounded_witness() {
        // Observing only the joint margin of a product leaves the split
        // between two factors free.
        let m = pair();
        let manifest = ManifestSpec::new("cell").observe("b", m.parse_expr("p(1,1)").unwrap());
        let effect = EffectSpec::new("eps", m.parse_expr("pi(X=1)").unwrap());
        let w = nonid_witness_search(&m, &manifest, &effect, &WitnessOptions { trials: 200, seed: 4 }).expect("witness");
        assert!(check_witness(&m, &manifest, &effect, &w.first, &w.second));
        let again = nonid_witness_search(&m, &manifest, &effect, &WitnessOptions { trials: 200, seed: 4 }).unwrap();
        assert_eq!(w, again);
    }

    #[test]
    fn full_observation_has_no_witness() {
        let m = pair();
        let mut manifest = ManifestSpec::new("joint");
        for (i, a) in m.atoms.iter().enumerate() {
            manifest = manifest.observe(&format!("q{i}"), a.poly.clone());
        }
        let effect = EffectSpec::new("eps", m.parse_expr("pi(X=1)*pi(Y=0|X=1)").unwrap());
        assert!(nonid_witness_search(&m, &manifest, &effect, &WitnessOptions { trials: 300, seed: 2 }).is_none());
    }

    #[test]
    fn feasibility() {
        let m = pair();
        assert!(matches!(feasible(&m, 1, 0), FeasibilityResult::FoundPoint(_)));
        let t = compile_tree(&TreeSpec::new(["r", "h", "t"], [("r", "h"), ("r", "t")])).unwrap();
        let a = t.parse_expr("pi(h|r) - 1/2").unwrap();
        let b = t.parse_expr("pi(h|r) - 1/3").unwrap();
        let bad = add_constraints(t.clone(), vec![a.clone(), b], vec![]).unwrap();
        assert_eq!(feasible(&bad, 50, 0), FeasibilityResult::NoneFound(50));
        let good = add_constraints(t, vec![a], vec![]).unwrap();
        match feasible(&good, 5, 0) {
            FeasibilityResult::FoundPoint(p) => {
                assert!(p.is_valid(&good));
                assert!(mu_eval(&good, &p).unwrap().total().is_one());
            }
            other => panic!("{other:?}"),
        }
    }
}
