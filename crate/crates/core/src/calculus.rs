//! Maps on compiled models: the multiplication rule `μ` and its inverse,
//! marginalization and event aggregation, conditioning, and manipulation.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::models::{split_top, CompiledModel, JointIndexOrder, ModelError};
use crate::poly::{buchberger, MonomialOrder, PolyError, Var, VarKind, DEFAULT_STEP_LIMIT};
use crate::sample::Sampler;
use crate::{Poly, Rational, RationalBasis, RationalIdeal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalcError {
    #[error("invalid parameter point: {0}")]
    InvalidPoint(String),
    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),
    #[error("boundary point: circumstance `{0}` has probability zero, so its transitions are not determined")]
    BoundaryPoint(String),
    #[error("marginalization needs a product sample space; aggregate events instead")]
    NotProduct,
    #[error("conditioning event has probability zero")]
    ZeroProbabilityEvent,
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("invalid event: {0}")]
    BadEvent(String),
    #[error("invalid manipulation: {0}")]
    Manipulation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Values of the free coordinates of a model. Pinned variables are read
/// from the model itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParameterPoint {
    pub values: BTreeMap<Var, Rational>,
}

impl ParameterPoint {
    pub fn get(&self, v: Var) -> Option<&Rational> {
        self.values.get(&v)
    }

    pub fn set(&mut self, v: Var, x: Rational) {
        self.values.insert(v, x);
    }

    pub fn value(&self, model: &CompiledModel, v: Var) -> Option<Rational> {
        self.values.get(&v).or_else(|| model.pinned.get(&v)).cloned()
    }

    pub fn eval(&self, model: &CompiledModel, p: &Poly) -> Result<Rational, PolyError> {
        p.evaluate(|v| self.value(model, v))
    }

    /// Checks the simplex and box conditions. Auxiliaries may be absent.
    pub fn validate(&self, model: &CompiledModel) -> Result<(), CalcError> {
        for b in &model.blocks {
            let mut total = Rational::zero();
            for &v in &b.vars {
                let x = self
                    .value(model, v)
                    .ok_or_else(|| CalcError::InvalidPoint(format!("{} is unassigned", model.table.name(v))))?;
                if x < Rational::zero() || x > Rational::one() {
                    return Err(CalcError::InvalidPoint(format!("{} = {x} is outside [0,1]", model.table.name(v))));
                }
                total += x;
            }
            if !total.is_one() {
                return Err(CalcError::InvalidPoint(format!("block `{}` sums to {total}", b.circumstance)));
            }
        }
        for a in &model.aux {
            if let Some(x) = self.get(a.var) {
                if *x < a.lower || *x > a.upper {
                    return Err(CalcError::InvalidPoint(format!(
                        "{} = {x} is outside [{}, {}]",
                        model.table.name(a.var),
                        a.lower,
                        a.upper
                    )));
                }
            }
        }
        Ok(())
    }

    /// Every equality vanishes and every inequality holds exactly.
    pub fn satisfies_constraints(&self, model: &CompiledModel) -> Result<bool, CalcError> {
        for e in &model.equalities {
            if !self.eval(model, e)?.is_zero() {
                return Ok(false);
            }
        }
        for (p, r) in &model.inequalities {
            if !r.holds(&self.eval(model, p)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Validity in the constrained model.
    pub fn is_valid(&self, model: &CompiledModel) -> bool {
        self.validate(model).is_ok()
            && model.aux.iter().all(|a| self.get(a.var).is_some())
            && self.satisfies_constraints(model).unwrap_or(false)
    }

    pub fn named(&self, model: &CompiledModel) -> BTreeMap<String, String> {
        self.values
            .iter()
            .map(|(v, x)| (model.table.name(*v).to_string(), x.to_string()))
            .collect()
    }
}

/// Probabilities of the atoms of a model, in atom order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPoint {
    pub labels: Vec<String>,
    pub probs: Vec<Rational>,
}

impl JointPoint {
    pub fn new(labels: Vec<String>, probs: Vec<Rational>) -> Self {
        assert_eq!(labels.len(), probs.len());
        Self { labels, probs }
    }

    /// Wraps raw probabilities listed in the model's atom order.
    pub fn for_model(model: &CompiledModel, probs: Vec<Rational>) -> Result<Self, CalcError> {
        if probs.len() != model.atoms.len() {
            return Err(CalcError::InvalidJoint(format!(
                "{} entries for {} atoms",
                probs.len(),
                model.atoms.len()
            )));
        }
        let j = Self::new(model.atoms.iter().map(|a| a.label.clone()).collect(), probs);
        j.validate()?;
        Ok(j)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> Rational {
        self.probs.iter().cloned().sum()
    }

    pub fn validate(&self) -> Result<(), CalcError> {
        if let Some(i) = self.probs.iter().position(|p| *p < Rational::zero()) {
            return Err(CalcError::InvalidJoint(format!("{} is negative", self.labels[i])));
        }
        let t = self.total();
        if !t.is_one() {
            return Err(CalcError::InvalidJoint(format!("entries sum to {t}")));
        }
        Ok(())
    }

    /// One `{"chain": .., "prob": "a/b"}` record per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (l, p) in self.labels.iter().zip(&self.probs) {
            out.push_str(&serde_json::json!({ "chain": l, "prob": p.to_string() }).to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self, CalcError> {
        let mut labels = Vec::new();
        let mut probs = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |m: &str| CalcError::InvalidJoint(format!("line {}: {m}", i + 1));
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
            let chain = v["chain"].as_str().ok_or_else(|| bad("missing `chain`"))?;
            let prob = v["prob"].as_str().ok_or_else(|| bad("missing `prob`"))?;
            labels.push(chain.to_string());
            probs.push(crate::poly::parse_rational(prob).ok_or_else(|| bad("`prob` is not a rational"))?);
        }
        Ok(Self::new(labels, probs))
    }

    fn check_for(&self, model: &CompiledModel) -> Result<(), CalcError> {
        if self.labels.len() != model.atoms.len() || self.labels.iter().zip(&model.atoms).any(|(l, a)| *l != a.label) {
            return Err(CalcError::InvalidJoint("entries do not match the model's atoms".into()));
        }
        self.validate()
    }
}

/// Evaluates every atom polynomial at a valid parameter point.
pub fn mu_eval(model: &CompiledModel, point: &ParameterPoint) -> Result<JointPoint, CalcError> {
    point.validate(model)?;
    let probs = model
        .atoms
        .iter()
        .map(|a| point.eval(model, &a.poly))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JointPoint::new(model.atoms.iter().map(|a| a.label.clone()).collect(), probs))
}

/// Recovers the primitive probabilities by the usual conditional
/// probability formulas. Auxiliary parameters are not recovered.
pub fn invert_mu(model: &CompiledModel, joint: &JointPoint) -> Result<ParameterPoint, CalcError> {
    joint.check_for(model)?;
    let mut point = ParameterPoint::default();
    for b in &model.blocks {
        let active = model.active_vars(b);
        if active.is_empty() {
            continue;
        }
        let in_block: BTreeSet<Var> = b.vars.iter().copied().collect();
        let mut den = Rational::zero();
        let mut num: BTreeMap<Var, Rational> = active.iter().map(|&v| (v, Rational::zero())).collect();
        for (a, p) in model.atoms.iter().zip(&joint.probs) {
            let mut hit = false;
            for f in &a.factors {
                if in_block.contains(f) {
                    hit = true;
                    if let Some(n) = num.get_mut(f) {
                        *n += p;
                    }
                }
            }
            if hit {
                den += p;
            }
        }
        if den.is_zero() {
            return Err(CalcError::BoundaryPoint(b.circumstance.clone()));
        }
        for (v, n) in num {
            point.set(v, n / &den);
        }
    }
    let image = mu_eval(model, &point)?;
    if image.probs != joint.probs {
        return Err(CalcError::InvalidJoint("not in the image of the model".into()));
    }
    Ok(point)
}

/// An event: a set of atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventSpec {
    /// BN value constraints `Xi = xi`, by variable index.
    Values(Vec<(usize, u32)>),
    /// Explicit atom labels.
    Atoms(Vec<String>),
    Not(Box<EventSpec>),
}

impl EventSpec {
    /// Parses `X1=0,X3=2`, a whitespace-separated list of atom labels, or
    /// either form prefixed with `not`.
    pub fn parse(model: &CompiledModel, text: &str) -> Result<Self, CalcError> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix("not ") {
            return Ok(EventSpec::Not(Box::new(Self::parse(model, rest)?)));
        }
        if text.is_empty() {
            return Err(CalcError::BadEvent("empty event".into()));
        }
        let first = text.split_whitespace().next().unwrap_or("");
        if model.atom_index(first).is_some() {
            return Ok(EventSpec::Atoms(text.split_whitespace().map(str::to_string).collect()));
        }
        let info = model
            .bn()
            .ok_or_else(|| CalcError::BadEvent(format!("unknown atom `{first}`")))?;
        let mut out = Vec::new();
        for item in text.split(',') {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| CalcError::BadEvent(format!("expected `X=x`, found `{}`", item.trim())))?;
            let i = info
                .spec
                .index_of(name.trim())
                .ok_or_else(|| CalcError::BadEvent(format!("unknown variable `{}`", name.trim())))?;
            let x: u32 = value
                .trim()
                .parse()
                .map_err(|_| CalcError::BadEvent(format!("bad value `{}`", value.trim())))?;
            if !info.spec.variables[i].values().any(|y| y == x) {
                return Err(CalcError::BadEvent(format!("{} has no value {x}", name.trim())));
            }
            out.push((i, x));
        }
        Ok(EventSpec::Values(out))
    }

    fn collect(&self, model: &CompiledModel) -> Result<BTreeSet<usize>, CalcError> {
        Ok(match self {
            EventSpec::Values(cs) => {
                if model.bn().is_none() {
                    return Err(CalcError::BadEvent("value constraints need a BN model".into()));
                }
                model
                    .atoms
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| {
                        let vs = a.values.as_deref().unwrap_or(&[]);
                        cs.iter().all(|&(i, x)| vs.get(i) == Some(&x))
                    })
                    .map(|(k, _)| k)
                    .collect()
            }
            EventSpec::Atoms(ls) => ls
                .iter()
                .map(|l| model.atom_index(l).ok_or_else(|| CalcError::BadEvent(format!("unknown atom `{l}`"))))
                .collect::<Result<_, _>>()?,
            EventSpec::Not(e) => {
                let inner = e.collect(model)?;
                (0..model.atoms.len()).filter(|k| !inner.contains(k)).collect()
            }
        })
    }

    /// Atom indices of the event; empty events are rejected.
    pub fn members(&self, model: &CompiledModel) -> Result<BTreeSet<usize>, CalcError> {
        let m = self.collect(model)?;
        if m.is_empty() {
            return Err(CalcError::BadEvent("event contains no atom".into()));
        }
        Ok(m)
    }

    /// Probability of the event as a polynomial in the parameters.
    pub fn poly(&self, model: &CompiledModel) -> Result<Poly, CalcError> {
        Ok(self.members(model)?.into_iter().map(|k| model.atoms[k].poly.clone()).sum())
    }
}

fn bn_order(model: &CompiledModel) -> Result<&crate::models::BnInfo, CalcError> {
    model.bn().ok_or(CalcError::NotProduct)
}

/// Sums out every variable not in `keep`. Entries follow the odometer
/// order on the kept variables and are labelled `X2=1,X3=2`.
pub fn marginalize(model: &CompiledModel, joint: &JointPoint, keep: &[usize]) -> Result<JointPoint, CalcError> {
    joint.check_for(model)?;
    let info = bn_order(model)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.iter().any(|&i| i >= info.n()) {
        return Err(CalcError::BadEvent("marginal needs a nonempty set of model variables".into()));
    }
    let vars = &info.spec.variables;
    let order = JointIndexOrder::new(
        keep.iter().map(|&i| vars[i].levels).collect(),
        keep.iter().map(|&i| vars[i].base).collect(),
    );
    let mut probs = vec![Rational::zero(); order.len()];
    for (a, p) in model.atoms.iter().zip(&joint.probs) {
        let vs = a.values.as_ref().ok_or(CalcError::NotProduct)?;
        let sub: Vec<u32> = keep.iter().map(|&i| vs[i]).collect();
        let k = order.index_of(&sub).ok_or(CalcError::NotProduct)?;
        probs[k] += p;
    }
    let labels = order
        .iter()
        .map(|xs| {
            keep.iter()
                .zip(xs)
                .map(|(&i, x)| format!("{}={x}", vars[i].name))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    Ok(JointPoint::new(labels, probs))
}

/// Probability of each cell of a partition of the atoms.
pub fn aggregate_events(
    model: &CompiledModel,
    joint: &JointPoint,
    partition: &[EventSpec],
) -> Result<Vec<Rational>, CalcError> {
    joint.check_for(model)?;
    let mut owner: Vec<Option<usize>> = vec![None; model.atoms.len()];
    let mut out = Vec::with_capacity(partition.len());
    for (c, cell) in partition.iter().enumerate() {
        let mut q = Rational::zero();
        for k in cell.members(model)? {
            if let Some(prev) = owner[k] {
                return Err(CalcError::BadPartition(format!(
                    "cells {prev} and {c} both contain {}",
                    model.atoms[k].label
                )));
            }
            owner[k] = Some(c);
            q += &joint.probs[k];
        }
        out.push(q);
    }
    if let Some(k) = owner.iter().position(Option::is_none) {
        return Err(CalcError::BadPartition(format!("{} is in no cell", model.atoms[k].label)));
    }
    Ok(out)
}

/// Projection onto the face of the event, renormalized.
pub fn condition(model: &CompiledModel, joint: &JointPoint, event: &EventSpec) -> Result<JointPoint, CalcError> {
    joint.check_for(model)?;
    let members = event.members(model)?;
    let q: Rational = members.iter().map(|&k| joint.probs[k].clone()).sum();
    if q.is_zero() {
        return Err(CalcError::ZeroProbabilityEvent);
    }
    let probs = (0..joint.len())
        .map(|k| {
            if members.contains(&k) {
                &joint.probs[k] / &q
            } else {
                Rational::zero()
            }
        })
        .collect();
    Ok(JointPoint::new(joint.labels.clone(), probs))
}

/// Replacement of the primitive probabilities on a set of edges by
/// defining polynomials `π̂ = f(π)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ManipulationSpec {
    /// BN do-targets `(variable index, value)`, when the spec has that form.
    pub targets: Vec<(usize, u32)>,
    pub definitions: BTreeMap<Var, Poly>,
}

impl ManipulationSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, v: Var, definition: Poly) {
        self.definitions.insert(v, definition);
    }

    /// `do(Xi = xi)` for each target: `π̂ = 1` on the chosen value and `0`
    /// elsewhere in every block of `Xi`.
    pub fn do_values(model: &CompiledModel, targets: &[(usize, u32)]) -> Result<Self, CalcError> {
        let info = model
            .bn()
            .ok_or_else(|| CalcError::Manipulation("do-interventions on values need a BN model".into()))?;
        let mut spec = Self::new();
        for &(i, x) in targets {
            let var = info
                .spec
                .variables
                .get(i)
                .ok_or_else(|| CalcError::Manipulation(format!("no variable with index {i}")))?;
            if !var.values().any(|y| y == x) {
                return Err(CalcError::Manipulation(format!("{} has no value {x}", var.name)));
            }
            for (&v, &(owner, value)) in &info.var_value {
                if owner == i {
                    spec.set(v, if value == x { Poly::one() } else { Poly::zero() });
                }
            }
            spec.targets.push((i, x));
        }
        Ok(spec)
    }

    /// Parses `X2=2` or `X1=X3=1` into a do-intervention.
    pub fn parse_do(model: &CompiledModel, text: &str) -> Result<Self, CalcError> {
        let info = model
            .bn()
            .ok_or_else(|| CalcError::Manipulation("do-interventions on values need a BN model".into()))?;
        let mut targets = Vec::new();
        for group in text.split(',') {
            let parts: Vec<&str> = group.split('=').map(str::trim).collect();
            let (value, names) = parts
                .split_last()
                .filter(|(_, n)| !n.is_empty())
                .ok_or_else(|| CalcError::Manipulation(format!("expected `X=x`, found `{}`", group.trim())))?;
            let x: u32 = value
                .parse()
                .map_err(|_| CalcError::Manipulation(format!("bad value `{value}`")))?;
            for n in names {
                let i = info
                    .spec
                    .index_of(n)
                    .ok_or_else(|| CalcError::Manipulation(format!("unknown variable `{n}`")))?;
                targets.push((i, x));
            }
        }
        Self::do_values(model, &targets)
    }

    /// Forces the transition `from -> to`: `π̂(to|from) = 1` and its
    /// siblings `0`.
    pub fn force_edge(model: &CompiledModel, from: &str, to: &str) -> Result<Self, CalcError> {
        let hit = model
            .edges
            .iter()
            .find(|(_, (a, b))| a == from && b == to)
            .map(|(v, _)| *v)
            .ok_or_else(|| CalcError::Manipulation(format!("no edge {from} -> {to}")))?;
        let block = model
            .blocks
            .iter()
            .find(|b| b.vars.contains(&hit))
            .ok_or_else(|| CalcError::Manipulation(format!("edge {from} -> {to} has no block")))?;
        let mut spec = Self::new();
        for &v in &block.vars {
            spec.set(v, if v == hit { Poly::one() } else { Poly::zero() });
        }
        Ok(spec)
    }

    /// `π̂` for a variable: its definition, or the variable itself.
    pub fn pihat(&self, v: Var) -> Poly {
        self.definitions.get(&v).cloned().unwrap_or_else(|| Poly::var(v))
    }

    /// Parses a manipulation file:
    ///
    /// ```text
    /// do X2 = 2
    /// force v -> w
    /// edges: pi(a|r) pi(b|r)
    /// set pihat(a|r) = pi(a|r) + pi(b|r)
    /// set pihat(b|r) = 0
    /// ```
    pub fn parse_file(model: &CompiledModel, text: &str) -> Result<Self, CalcError> {
        let perr = |line: usize, msg: String| CalcError::Model(ModelError::Parse { line, msg });
        let mut spec = Self::new();
        let mut declared: Vec<(usize, Var)> = Vec::new();
        for (line, l) in crate::models::content_lines(text) {
            let merge = |spec: &mut Self, other: Self| {
                spec.targets.extend(other.targets);
                spec.definitions.extend(other.definitions);
            };
            if let Some(rest) = l.strip_prefix("do ") {
                let other = Self::parse_do(model, rest).map_err(|e| perr(line, e.to_string()))?;
                merge(&mut spec, other);
            } else if let Some(rest) = l.strip_prefix("force ") {
                let (a, b) = rest
                    .split_once("->")
                    .ok_or_else(|| perr(line, "expected `force <from> -> <to>`".into()))?;
                let other = Self::force_edge(model, a.trim(), b.trim()).map_err(|e| perr(line, e.to_string()))?;
                merge(&mut spec, other);
            } else if let Some(rest) = l.strip_prefix("edges:") {
                for name in rest.split_whitespace() {
                    let name = name.replacen("pihat(", "pi(", 1);
                    let v = model
                        .table
                        .get(&name)
                        .ok_or_else(|| perr(line, format!("unknown edge `{name}`")))?;
                    declared.push((line, v));
                }
            } else if let Some(rest) = l.strip_prefix("set ") {
                let (lhs, rhs) = split_top(rest, "=").ok_or_else(|| perr(line, "expected `set pihat(..) = <expr>`".into()))?;
                let lhs = lhs.trim();
                let name = lhs
                    .strip_prefix("pihat(")
                    .map(|r| format!("pi({r}"))
                    .ok_or_else(|| perr(line, format!("`{lhs}` is not a pihat(..) term")))?;
                let v = model
                    .table
                    .get(&name)
                    .ok_or_else(|| perr(line, format!("unknown edge `{lhs}`")))?;
                let def = model.parse_expr(rhs.trim()).map_err(|e| perr(line, e.to_string()))?;
                spec.set(v, def);
            } else {
                return Err(perr(line, format!("unexpected line `{l}`")));
            }
        }
        if let Some((line, v)) = declared.iter().find(|(_, v)| !spec.definitions.contains_key(v)) {
            return Err(perr(*line, format!("edge {} has no definition", model.table.name(*v))));
        }
        Ok(spec)
    }
}

/// Reduced basis of the sum-to-one conditions of a model.
pub fn sum_to_one_basis(model: &CompiledModel) -> Result<RationalBasis, CalcError> {
    let ideal = RationalIdeal::new(model.sum_to_one(), MonomialOrder::index_lex());
    Ok(buchberger(&ideal, DEFAULT_STEP_LIMIT)?)
}

const CONTRACT_SAMPLES: usize = 16;

fn check_contract(model: &CompiledModel, spec: &ManipulationSpec) -> Result<(), CalcError> {
    for (&v, def) in &spec.definitions {
        let ok = model.blocks.iter().any(|b| b.vars.contains(&v)) && model.table.kind(v) == VarKind::Parameter;
        if !ok {
            return Err(CalcError::Manipulation(format!("{} is not an edge of the model", model.table.name(v))));
        }
        let params: BTreeSet<Var> = model.parameters().into_iter().collect();
        if !def.vars().iter().all(|w| params.contains(w) || model.is_pinned(*w)) {
            return Err(CalcError::Manipulation(format!(
                "definition of {} uses variables outside the model",
                model.table.name(v)
            )));
        }
        if let Some(c) = def.partial_eval(&model.pinned).constant_value() {
            if c < Rational::zero() || c > Rational::one() {
                return Err(CalcError::Manipulation(format!("π̂ for {} is {c}", model.table.name(v))));
            }
        }
    }
    let mut ideal_gens = model.sum_to_one();
    ideal_gens.extend(model.equalities.iter().cloned());
    let gb = crate::poly::buchberger(&RationalIdeal::new(ideal_gens, MonomialOrder::index_lex()), DEFAULT_STEP_LIMIT)?;
    let mut sampler = Sampler::new(0);
    let points: Vec<ParameterPoint> = (0..CONTRACT_SAMPLES).map(|_| sampler.point(model, false)).collect();
    for b in &model.blocks {
        if !b.vars.iter().any(|v| spec.definitions.contains_key(v)) {
            continue;
        }
        let sum: Poly = b.vars.iter().map(|&v| spec.pihat(v)).sum::<Poly>() - Poly::one();
        let sum = sum.partial_eval(&model.pinned);
        let constant = b
            .vars
            .iter()
            .all(|v| spec.definitions.get(v).is_none_or(Poly::is_constant));
        if gb.reduce(&sum).is_zero() {
            if constant {
                continue;
            }
        } else if constant {
            return Err(CalcError::Manipulation(format!(
                "manipulated block `{}` does not sum to one",
                b.circumstance
            )));
        }
        for p in &points {
            if !p.eval(model, &sum)?.is_zero() {
                return Err(CalcError::Manipulation(format!(
                    "manipulated block `{}` does not sum to one",
                    b.circumstance
                )));
            }
            for v in &b.vars {
                if p.eval(model, &spec.pihat(*v))? < Rational::zero() {
                    return Err(CalcError::Manipulation(format!("π̂ for {} can be negative", model.table.name(*v))));
                }
            }
        }
    }
    Ok(())
}

/// Substitutes the definitions into the atoms and removes the atoms that
/// become identically zero. Parameters and constraints are kept, so the
/// manipulated atoms are functions of the same primitive probabilities.
pub fn manipulate(model: &CompiledModel, spec: &ManipulationSpec) -> Result<CompiledModel, CalcError> {
    check_contract(model, spec)?;
    let mut out = model.clone();
    out.atoms = model
        .atoms
        .iter()
        .filter_map(|a| {
            let p = a.poly.substitute(&spec.definitions).partial_eval(&model.pinned);
            (!p.is_zero()).then(|| {
                let mut a = a.clone();
                a.poly = p;
                a
            })
        })
        .collect();
    Ok(out)
}

fn prefix_marginals(model: &CompiledModel, i: usize) -> Result<BTreeMap<Vec<u32>, Poly>, CalcError> {
    let mut out: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
    for a in &model.atoms {
        let vs = a.values.as_ref().ok_or(CalcError::NotProduct)?;
        let e = out.entry(vs[..i].to_vec()).or_insert_with(Poly::zero);
        *e = &*e + &a.poly;
    }
    Ok(out)
}

/// Whether the joint law of the variables preceding the earliest
/// manipulated variable is the same polynomial vector, modulo the
/// sum-to-one conditions, before and after manipulation.
pub fn premanipulation_marginal_check(model: &CompiledModel, spec: &ManipulationSpec) -> Result<bool, CalcError> {
    let info = bn_order(model)?;
    let first = if spec.targets.is_empty() {
        spec.definitions.keys().filter_map(|v| info.var_value.get(v).map(|&(i, _)| i)).min()
    } else {
        spec.targets.iter().map(|&(i, _)| i).min()
    };
    let Some(i) = first else {
        return Ok(true);
    };
    let after = manipulate(model, spec)?;
    let gb = sum_to_one_basis(model)?;
    let before = prefix_marginals(model, i)?;
    let after = prefix_marginals(&after, i)?;
    let keys: BTreeSet<Vec<u32>> = before.keys().chain(after.keys()).cloned().collect();
    let zero = Poly::zero();
    let same = keys.iter().all(|k| {
        let b = before.get(k).unwrap_or(&zero);
        let a = after.get(k).unwrap_or(&zero);
        gb.reduce(&(b - a)).is_zero()
    });
    Ok(same)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{add_constraints, compile_bn, compile_tree, BnSpec, TreeSpec};
    use crate::rat;

    fn binary_pair() -> CompiledModel {
        let mut s = BnSpec::new("pair");
        s.push_var("X1", 2, 0);
        s.push_var("X2", 2, 0);
        s.set_parents("X2", &["X1"]).unwrap();
        compile_bn(&s).unwrap()
    }

    fn point(m: &CompiledModel, assign: &[(&str, Rational)]) -> ParameterPoint {
        let mut p = ParameterPoint::default();
        for (n, x) in assign {
            p.set(m.table.get(n).unwrap(), x.clone());
        }
        p
    }

    fn pair_point(m: &CompiledModel) -> ParameterPoint {
        point(
            m,
            &[
                ("pi(X1=0)", rat(1, 2)),
                ("pi(X1=1)", rat(1, 2)),
                ("pi(X2=0|X1=0)", rat(1, 3)),
                ("pi(X2=1|X1=0)", rat(2, 3)),
                ("pi(X2=0|X1=1)", rat(1, 4)),
                ("pi(X2=1|X1=1)", rat(3, 4)),
            ],
        )
    }

    fn rats(xs: &[(i64, i64)]) -> Vec<Rational> {
        xs.iter().map(|&(a, b)| rat(a, b)).collect()
    }

    #[test]
    fn mu_of_binary_pair() {
        let m = binary_pair();
        let j = mu_eval(&m, &pair_point(&m)).unwrap();
        assert_eq!(j.probs, rats(&[(1, 6), (1, 3), (1, 8), (3, 8)]));
        let back = invert_mu(&m, &j).unwrap();
        assert_eq!(back, pair_point(&m));
    }

    #[test]
    fn deterministic_point_selects_one_chain() {
        let m = binary_pair();
        let p = point(
            &m,
            &[
                ("pi(X1=0)", rat(0, 1)),
                ("pi(X1=1)", rat(1, 1)),
                ("pi(X2=0|X1=0)", rat(1, 1)),
                ("pi(X2=1|X1=0)", rat(0, 1)),
                ("pi(X2=0|X1=1)", rat(0, 1)),
                ("pi(X2=1|X1=1)", rat(1, 1)),
            ],
        );
        assert_eq!(mu_eval(&m, &p).unwrap().probs, rats(&[(0, 1), (0, 1), (0, 1), (1, 1)]));
    }

    #[test]
    fn invalid_points() {
        let m = binary_pair();
        let mut p = pair_point(&m);
        p.set(m.table.get("pi(X1=0)").unwrap(), rat(2, 3));
        assert!(matches!(mu_eval(&m, &p), Err(CalcError::InvalidPoint(_))));
    }

    #[test]
    fn boundary_and_uniform_inversion() {
        let m = binary_pair();
        let j = JointPoint::for_model(&m, rats(&[(0, 1), (0, 1), (1, 2), (1, 2)])).unwrap();
        assert!(matches!(invert_mu(&m, &j), Err(CalcError::BoundaryPoint(_))));
        let j = JointPoint::for_model(&m, vec![rat(1, 4); 4]).unwrap();
        let p = invert_mu(&m, &j).unwrap();
        assert!(p.values.values().all(|x| *x == rat(1, 2)));
    }

    #[test]
    fn marginals_and_partitions() {
        let m = binary_pair();
        let j = mu_eval(&m, &pair_point(&m)).unwrap();
        let q = marginalize(&m, &j, &[0]).unwrap();
        assert_eq!(q.probs, rats(&[(1, 2), (1, 2)]));
        assert_eq!(q.labels, ["X1=0", "X1=1"]);
        assert_eq!(marginalize(&m, &j, &[0, 1]).unwrap().probs, j.probs);

        let cells = [EventSpec::parse(&m, "p(0,0)").unwrap(), EventSpec::parse(&m, "not p(0,0)").unwrap()];
        assert_eq!(aggregate_events(&m, &j, &cells).unwrap(), rats(&[(1, 6), (5, 6)]));
        let overlap = [EventSpec::parse(&m, "X1=0").unwrap(), EventSpec::parse(&m, "X2=0").unwrap()];
        assert!(matches!(aggregate_events(&m, &j, &overlap), Err(CalcError::BadPartition(_))));

        let by_x1 = [EventSpec::parse(&m, "X1=0").unwrap(), EventSpec::parse(&m, "X1=1").unwrap()];
        assert_eq!(aggregate_events(&m, &j, &by_x1).unwrap(), q.probs);
    }

    #[test]
    fn conditioning_is_face_projection() {
        let m = binary_pair();
        let j = mu_eval(&m, &pair_point(&m)).unwrap();
        let c = condition(&m, &j, &EventSpec::parse(&m, "X1=0").unwrap()).unwrap();
        assert_eq!(c.probs, rats(&[(1, 3), (2, 3), (0, 1), (0, 1)]));
        let all = EventSpec::parse(&m, "not p(0,0)").unwrap();
        let both = condition(&m, &c, &all).unwrap();
        let direct = condition(&m, &j, &EventSpec::Atoms(vec!["p(0,1)".into()])).unwrap();
        assert_eq!(both, direct);

        let t = compile_tree(&TreeSpec::new(["r", "a", "b", "c"], [("r", "a"), ("r", "b"), ("r", "c")])).unwrap();
        let j = JointPoint::for_model(&t, vec![rat(1, 3); 3]).unwrap();
        let face = EventSpec::parse(&t, "p(r,a) p(r,b)").unwrap();
        assert_eq!(condition(&t, &j, &face).unwrap().probs, rats(&[(1, 2), (1, 2), (0, 1)]));

        let dead = JointPoint::for_model(&t, rats(&[(0, 1), (0, 1), (1, 1)])).unwrap();
        assert_eq!(condition(&t, &dead, &face), Err(CalcError::ZeroProbabilityEvent));
    }

    #[test]
    fn do_drops_one_factor() {
        let m = binary_pair();
        let spec = ManipulationSpec::parse_do(&m, "X1=1").unwrap();
        let d = manipulate(&m, &spec).unwrap();
        assert_eq!(d.atoms.len(), 2);
        assert!(d.atoms.iter().all(|a| a.poly.degree() == 1));
        assert!(premanipulation_marginal_check(&m, &spec).unwrap());
        let spec = ManipulationSpec::parse_do(&m, "X2=0").unwrap();
        assert!(premanipulation_marginal_check(&m, &spec).unwrap());
    }

    #[test]
    fn corrupted_manipulation_changes_prefix() {
        let m = binary_pair();
        let mut spec = ManipulationSpec::parse_do(&m, "X2=0").unwrap();
        spec.set(m.table.get("pi(X1=0)").unwrap(), Poly::one());
        spec.set(m.table.get("pi(X1=1)").unwrap(), Poly::zero());
        assert!(!premanipulation_marginal_check(&m, &spec).unwrap());
    }

    #[test]
    fn contract_violations() {
        let m = binary_pair();
        let mut spec = ManipulationSpec::new();
        spec.set(m.table.get("pi(X1=0)").unwrap(), Poly::zero());
        assert!(matches!(manipulate(&m, &spec), Err(CalcError::Manipulation(_))));

        // Moving all mass of a block onto one edge is a valid policy.
        let a = m.table.get("pi(X1=0)").unwrap();
        let b = m.table.get("pi(X1=1)").unwrap();
        let mut spec = ManipulationSpec::new();
        spec.set(a, Poly::var(a) + Poly::var(b));
        spec.set(b, Poly::zero());
        let d = manipulate(&m, &spec).unwrap();
        assert_eq!(d.atoms.len(), 2);
    }

    #[test]
    fn forcing_a_depth_one_tree() {
        let t = compile_tree(&TreeSpec::new(["r", "a", "b"], [("r", "a"), ("r", "b")])).unwrap();
        let spec = ManipulationSpec::force_edge(&t, "r", "b").unwrap();
        let d = manipulate(&t, &spec).unwrap();
        assert_eq!(d.atoms.len(), 1);
        assert_eq!(d.atoms[0].poly, Poly::one());
    }

    #[test]
    fn manipulation_file() {
        let t = compile_tree(&TreeSpec::new(["r", "a", "b"], [("r", "a"), ("r", "b")])).unwrap();
        let text = "edges: pihat(a|r) pihat(b|r)\nset pihat(a|r) = 1/2\nset pihat(b|r) = 1/2\n";
        let spec = ManipulationSpec::parse_file(&t, text).unwrap();
        assert_eq!(spec.definitions.len(), 2);
        let bad = "edges: pihat(a|r)\n";
        assert!(ManipulationSpec::parse_file(&t, bad).is_err());
    }

    #[test]
    fn pinned_models_round_trip() {
        let m = binary_pair();
        let eq = m.parse_expr("pi(X2=0|X1=1)").unwrap();
        let m = add_constraints(m, vec![eq], vec![]).unwrap();
        let mut s = Sampler::new(5);
        for _ in 0..20 {
            let p = s.point(&m, true);
            let j = mu_eval(&m, &p).unwrap();
            assert!(j.total().is_one());
            assert_eq!(invert_mu(&m, &j).unwrap(), p);
        }
    }

    #[test]
    fn json_lines_round_trip() {
        let m = binary_pair();
        let j = mu_eval(&m, &pair_point(&m)).unwrap();
        let text = j.to_json_lines();
        assert!(text.starts_with("{\"chain\":\"p(0,0)\",\"prob\":\"1/6\"}"));
        assert_eq!(JointPoint::from_json_lines(&text).unwrap(), j);
    }
}
