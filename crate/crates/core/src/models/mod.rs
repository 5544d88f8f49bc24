//! Compilation of Bayesian networks, probability trees and Hasse diagrams
//! of circumstances into a common polynomial representation.

mod bn;
mod dot;
mod file;
mod poset;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{parse_with, PolyError, Var, VarKind, VariableTable};
use crate::{Poly, Rational};

pub use bn::{compile_bn, BnInfo, BnSpec, BnVariable, JointIndexOrder};
pub use dot::{bn_to_dot, hasse_to_dot, parse_dot};
pub use file::{apply_constraints, parse_constraint_lines, parse_model_file, ConstraintLine, ModelFile, ModelSource};
pub(crate) use file::{content_lines, split_top};
pub use poset::{chains, chains_capped, compile_poset, compile_poset_capped, Chain, HasseDiagram, DEFAULT_CHAIN_CAP};
pub use tree::{compile_tree, TreeSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("parent `{parent}` of `{child}` does not precede it in the variable order")]
    ParentOrder { child: String, parent: String },
    #[error("variable `{name}` has {levels} levels; at least 2 are required")]
    TooFewLevels { name: String, levels: u32 },
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("unknown vertex or variable `{0}`")]
    Unknown(String),
    #[error("tree has several roots: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("no root: every vertex has a predecessor")]
    NoRoot,
    #[error("cycle detected through `{0}`")]
    Cycle(String),
    #[error("vertex `{0}` is not reachable from the root")]
    Unreachable(String),
    #[error("vertex `{0}` has more than one parent")]
    NotATree(String),
    #[error("edge {from} -> {to} is implied transitively; a Hasse diagram lists cover relations only")]
    NotCover { from: String, to: String },
    #[error("circumstance `{0}` has no successor and is not terminal")]
    DeadEnd(String),
    #[error("terminal circumstance `{0}` has successors")]
    TerminalWithSuccessors(String),
    #[error("more than {0} chains")]
    TooManyChains(usize),
    #[error("constraint `{0}` is not a polynomial in model parameters")]
    ForeignVariable(String),
    #[error("constraints are inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Strict or weak sign condition on a polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Positive,
    NonNegative,
}

impl Relation {
    pub fn holds(self, value: &Rational) -> bool {
        match self {
            Relation::Positive => *value > Rational::zero(),
            Relation::NonNegative => *value >= Rational::zero(),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Positive => "> 0",
            Relation::NonNegative => ">= 0",
        })
    }
}

/// Transition probabilities out of one circumstance; a point of a simplex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexBlock {
    /// Human-readable label of the circumstance, e.g. `X4|X2=1,X3=2`.
    pub circumstance: String,
    pub vars: Vec<Var>,
}

/// One atom of the sample space: a chain, root-to-leaf path, or joint
/// value assignment, with its probability polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    /// Identifier usable in expressions, e.g. `p(1,2,1,1)`.
    pub label: String,
    /// Circumstances visited (poset, tree) or `Xi=xi` steps (BN).
    pub path: Vec<String>,
    /// Primitive probabilities along the chain, before any pinning.
    pub factors: Vec<Var>,
    /// Value tuple, for BN atoms.
    pub values: Option<Vec<u32>>,
    /// `p(λ)` after pinning and manipulation.
    pub poly: Poly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxParam {
    pub var: Var,
    pub lower: Rational,
    pub upper: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelKind {
    Bn(BnInfo),
    Tree,
    Poset,
}

/// Parameter space, atoms and constraints of a compiled model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledModel {
    pub name: String,
    pub kind: ModelKind,
    pub table: VariableTable,
    pub blocks: Vec<SimplexBlock>,
    pub atoms: Vec<Atom>,
    pub aux: Vec<AuxParam>,
    /// Variables fixed to 0 or 1 and substituted out of every polynomial.
    pub pinned: BTreeMap<Var, Rational>,
    /// Polynomials constrained to vanish.
    pub equalities: Vec<Poly>,
    pub inequalities: Vec<(Poly, Relation)>,
    /// Cover edges `(from, to)` per transition variable (tree and poset).
    pub edges: BTreeMap<Var, (String, String)>,
    /// Number of primitive probabilities before context equalities were
    /// merged (equals the variable count for trees and posets).
    pub unmerged_parameters: usize,
}

impl CompiledModel {
    pub(crate) fn new(name: &str, kind: ModelKind, table: VariableTable) -> Self {
        Self {
            name: name.to_string(),
            kind,
            table,
            blocks: Vec::new(),
            atoms: Vec::new(),
            aux: Vec::new(),
            pinned: BTreeMap::new(),
            equalities: Vec::new(),
            inequalities: Vec::new(),
            edges: BTreeMap::new(),
            unmerged_parameters: 0,
        }
    }

    pub fn bn(&self) -> Option<&BnInfo> {
        match &self.kind {
            ModelKind::Bn(info) => Some(info),
            _ => None,
        }
    }

    pub fn is_pinned(&self, v: Var) -> bool {
        self.pinned.contains_key(&v)
    }

    /// Block variables that are not pinned.
    pub fn active_vars(&self, block: &SimplexBlock) -> Vec<Var> {
        block.vars.iter().copied().filter(|v| !self.is_pinned(*v)).collect()
    }

    /// Sum-to-one polynomials `Σ π − 1` with pinned values substituted.
    /// Blocks that pinning satisfies completely are omitted.
    pub fn sum_to_one(&self) -> Vec<Poly> {
        self.blocks
            .iter()
            .map(|b| self.block_sum(b))
            .filter(|p| !p.is_zero())
            .collect()
    }

    pub(crate) fn block_sum(&self, b: &SimplexBlock) -> Poly {
        let s: Poly = b.vars.iter().map(|&v| Poly::var(v)).sum();
        (&s - &Poly::one()).partial_eval(&self.pinned)
    }

    /// Free coordinates: unpinned block variables and auxiliary parameters.
    pub fn parameters(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self.blocks.iter().flat_map(|b| self.active_vars(b)).collect();
        out.extend(self.aux.iter().map(|a| a.var));
        out
    }

    /// Dimension of the interior of the parameter space before extra
    /// equality constraints: active variables minus live sum-to-one
    /// conditions, plus auxiliaries.
    pub fn free_dimension(&self) -> usize {
        let vars: usize = self.blocks.iter().map(|b| self.active_vars(b).len()).sum();
        vars - self.sum_to_one().len() + self.aux.len()
    }

    /// Atoms whose polynomial is not identically zero.
    pub fn live_atoms(&self) -> impl Iterator<Item = (usize, &Atom)> + '_ {
        self.atoms.iter().enumerate().filter(|(_, a)| !a.poly.is_zero())
    }

    pub fn atom_index(&self, label: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.label == label)
    }

    pub fn aux_param(&self, v: Var) -> Option<&AuxParam> {
        self.aux.iter().find(|a| a.var == v)
    }

    /// Registers an auxiliary box parameter, defaulting to `[0, 1]`.
    pub fn declare_aux(&mut self, name: &str, bounds: Option<(Rational, Rational)>) -> Result<Var, ModelError> {
        if let Some(v) = self.table.get(name) {
            if self.aux_param(v).is_some() {
                return Ok(v);
            }
            return Err(ModelError::Duplicate(name.to_string()));
        }
        let v = self.table.intern(name, VarKind::Auxiliary);
        let (lower, upper) = bounds.unwrap_or_else(|| (Rational::zero(), Rational::one()));
        self.aux.push(AuxParam { var: v, lower, upper });
        Ok(v)
    }

    /// Parses an expression over the model: variables of the table and
    /// atom labels, which expand to their polynomials.
    pub fn parse_expr(&self, text: &str) -> Result<Poly, ModelError> {
        let p = parse_with(text, &mut |name, _| self.resolve(name))?;
        Ok(p)
    }

    fn resolve(&self, name: &str) -> Result<Poly, PolyError> {
        if let Some(v) = self.table.get(name) {
            return Ok(match self.pinned.get(&v) {
                Some(c) => Poly::constant(c.clone()),
                None => Poly::var(v),
            });
        }
        if let Some(i) = self.atom_index(name) {
            return Ok(self.atoms[i].poly.clone());
        }
        Err(PolyError::UnknownIdentifier(name.to_string()))
    }

    fn check_vars(&self, p: &Poly) -> Result<(), ModelError> {
        let params: BTreeSet<Var> = self.parameters().into_iter().collect();
        if p.vars().iter().all(|v| params.contains(v)) {
            Ok(())
        } else {
            Err(ModelError::ForeignVariable(p.display(&self.table).to_string()))
        }
    }

    /// Re-applies the pinned values to every stored polynomial and derives
    /// new pins from equalities or blocks that force a variable to 0 or 1.
    fn propagate_pins(&mut self) -> Result<(), ModelError> {
        loop {
            let mut fresh: BTreeMap<Var, Rational> = BTreeMap::new();
            let candidates = self
                .equalities
                .iter()
                .cloned()
                .chain(self.blocks.iter().map(|b| self.block_sum(b)))
                .collect::<Vec<_>>();
            for eq in candidates {
                if let Some(c) = eq.constant_value() {
                    if !c.is_zero() {
                        return Err(ModelError::Inconsistent(format!("{c} = 0")));
                    }
                    continue;
                }
                if let Some(vs) = forced_zero(&eq) {
                    if vs.iter().all(|v| self.aux_param(*v).is_none()) {
                        for v in vs {
                            if fresh.insert(v, Rational::zero()).is_some_and(|prev| !prev.is_zero()) {
                                return Err(ModelError::Inconsistent(format!(
                                    "{} pinned to both 0 and 1",
                                    self.table.name(v)
                                )));
                            }
                        }
                        continue;
                    }
                }
                if let Some((v, value)) = single_var_value(&eq) {
                    if self.aux_param(v).is_some() {
                        continue;
                    }
                    if value.is_zero() || value.is_one() {
                        if let Some(prev) = fresh.insert(v, value.clone()) {
                            if prev != value {
                                return Err(ModelError::Inconsistent(format!(
                                    "{} pinned to both {prev} and {value}",
                                    self.table.name(v)
                                )));
                            }
                        }
                    }
                }
            }
            if fresh.is_empty() {
                return Ok(());
            }
            self.pinned.extend(fresh);
            let pinned = self.pinned.clone();
            for a in &mut self.atoms {
                a.poly = a.poly.partial_eval(&pinned);
            }
            self.equalities = self
                .equalities
                .iter()
                .map(|e| e.partial_eval(&pinned))
                .filter(|e| !e.is_zero())
                .collect();
            for (p, _) in &mut self.inequalities {
                *p = p.partial_eval(&pinned);
            }
        }
    }
}

/// Linear form without constant term whose coefficients share a sign:
/// over nonnegative variables it vanishes only if every variable does.
fn forced_zero(p: &Poly) -> Option<Vec<Var>> {
    if p.degree() != 1 || p.vars().len() < 2 || p.constant_value().is_some() {
        return None;
    }
    let mut sign = None;
    for (m, c) in p.terms() {
        if m.is_one() {
            return None;
        }
        let pos = *c > Rational::zero();
        if *sign.get_or_insert(pos) != pos {
            return None;
        }
    }
    Some(p.vars().into_iter().collect())
}

/// `c*v + d` with one variable of degree one: returns `(v, -d/c)`.
fn single_var_value(p: &Poly) -> Option<(Var, Rational)> {
    let vars = p.vars();
    if vars.len() != 1 || p.degree() != 1 {
        return None;
    }
    let v = *vars.iter().next()?;
    let cs = p.coefficients_in(v);
    let d = cs[0].constant_value()?;
    let c = cs[1].constant_value()?;
    Some((v, -d / c))
}

/// Appends constraints to a model, returning the submodel. Equalities that
/// fix a primitive probability to 0 or 1 are substituted into every
/// polynomial and the variable is retired.
pub fn add_constraints(
    mut model: CompiledModel,
    eqs: Vec<Poly>,
    ineqs: Vec<(Poly, Relation)>,
) -> Result<CompiledModel, ModelError> {
    for p in eqs.iter().chain(ineqs.iter().map(|(p, _)| p)) {
        model.check_vars(p)?;
    }
    let pinned = model.pinned.clone();
    model
        .equalities
        .extend(eqs.into_iter().map(|e| e.partial_eval(&pinned)).filter(|e| !e.is_zero()));
    model
        .inequalities
        .extend(ineqs.into_iter().map(|(p, r)| (p.partial_eval(&pinned), r)));
    model.propagate_pins()?;
    for (p, r) in &model.inequalities {
        if let Some(c) = p.constant_value() {
            if !r.holds(&c) {
                return Err(ModelError::Inconsistent(format!("{c} {r}")));
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn coin() -> CompiledModel {
        compile_tree(&TreeSpec::new(["root", "h", "t"], [("root", "h"), ("root", "t")])).unwrap()
    }

    #[test]
    fn empty_constraints_change_nothing() {
        let m = coin();
        assert_eq!(add_constraints(m.clone(), vec![], vec![]).unwrap(), m);
    }

    #[test]
    fn pinning_retires_variables() {
        let m = coin();
        let eq = m.parse_expr("pi(h|root)").unwrap();
        let m = add_constraints(m, vec![eq], vec![]).unwrap();
        assert_eq!(m.pinned.len(), 2);
        assert_eq!(m.pinned[&m.table.get("pi(t|root)").unwrap()], rat(1, 1));
        assert!(m.atoms[0].poly.is_zero());
        assert_eq!(m.atoms[1].poly, Poly::one());
        assert!(m.sum_to_one().is_empty());
    }

    #[test]
    fn pin_to_one_zeroes_the_rest_of_the_block() {
        let m = compile_tree(&TreeSpec::new(["r", "a", "b", "c"], [("r", "a"), ("r", "b"), ("r", "c")])).unwrap();
        let eq = m.parse_expr("pi(a|r) - 1").unwrap();
        let m = add_constraints(m, vec![eq], vec![]).unwrap();
        assert_eq!(m.pinned.len(), 3);
        assert_eq!(m.free_dimension(), 0);
    }

    #[test]
    fn semiparametric_constraint_with_aux() {
        let mut m = coin();
        let r = m.declare_aux("r", None).unwrap();
        let eq = m.parse_expr("pi(h|root) - r*pi(t|root)").unwrap();
        let m = add_constraints(m, vec![eq], vec![]).unwrap();
        assert_eq!(m.equalities.len(), 1);
        assert_eq!(m.aux_param(r).unwrap().upper, rat(1, 1));
        assert!(m.pinned.is_empty());
    }

    #[test]
    fn contradictions_are_detected() {
        let m = coin();
        let a = m.parse_expr("pi(h|root) - 1").unwrap();
        let b = m.parse_expr("pi(t|root) - 1").unwrap();
        assert!(matches!(add_constraints(m, vec![a, b], vec![]), Err(ModelError::Inconsistent(_))));
    }

    #[test]
    fn unknown_variables_are_rejected() {
        let m = coin();
        assert!(m.parse_expr("pi(x|root)").is_err());
        let foreign = Poly::var(Var(40));
        assert!(matches!(
            add_constraints(m, vec![foreign], vec![]),
            Err(ModelError::ForeignVariable(_))
        ));
    }
}
