use std::collections::BTreeMap;

use crate::models::{Atom, CompiledModel, ModelError, ModelKind, SimplexBlock};
use crate::poly::{Var, VarKind, VariableTable};
use crate::Poly;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BnVariable {
    pub name: String,
    pub levels: u32,
    /// Label of the first level; levels are `base..base + levels`.
    pub base: u32,
}

impl BnVariable {
    pub fn values(&self) -> impl Iterator<Item = u32> + Clone {
        self.base..self.base + self.levels
    }
}

/// A regular Bayesian network: variables in causal order, each with a
/// parent set drawn from its predecessors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BnSpec {
    pub name: String,
    pub variables: Vec<BnVariable>,
    pub parents: Vec<Vec<usize>>,
}

impl BnSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Default::default()
        }
    }

    /// Appends a variable with levels `1..=levels`.
    pub fn var(mut self, name: &str, levels: u32) -> Self {
        self.push_var(name, levels, 1);
        self
    }

    pub fn push_var(&mut self, name: &str, levels: u32, base: u32) -> usize {
        self.variables.push(BnVariable {
            name: name.to_string(),
            levels,
            base,
        });
        self.parents.push(Vec::new());
        self.variables.len() - 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Sets the parents of `child`; names must already be declared.
    pub fn with_parents(mut self, child: &str, parents: &[&str]) -> Result<Self, ModelError> {
        self.set_parents(child, parents)?;
        Ok(self)
    }

    pub fn set_parents(&mut self, child: &str, parents: &[&str]) -> Result<(), ModelError> {
        let c = self.index_of(child).ok_or_else(|| ModelError::Unknown(child.to_string()))?;
        let mut ps = Vec::with_capacity(parents.len());
        for p in parents {
            ps.push(self.index_of(p).ok_or_else(|| ModelError::Unknown(p.to_string()))?);
        }
        ps.sort_unstable();
        ps.dedup();
        self.parents[c] = ps;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.levels < 2 {
                return Err(ModelError::TooFewLevels {
                    name: v.name.clone(),
                    levels: v.levels,
                });
            }
            if self.variables[..i].iter().any(|w| w.name == v.name) {
                return Err(ModelError::Duplicate(v.name.clone()));
            }
            if let Some(&p) = self.parents[i].iter().find(|&&p| p >= i) {
                return Err(ModelError::ParentOrder {
                    child: v.name.clone(),
                    parent: self.variables[p].name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn joint_order(&self) -> JointIndexOrder {
        JointIndexOrder {
            levels: self.variables.iter().map(|v| v.levels).collect(),
            bases: self.variables.iter().map(|v| v.base).collect(),
        }
    }
}

/// Odometer enumeration of a product sample space: the last variable
/// changes fastest, matching the usual experimental-design listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointIndexOrder {
    levels: Vec<u32>,
    bases: Vec<u32>,
}

impl JointIndexOrder {
    pub fn new(levels: Vec<u32>, bases: Vec<u32>) -> Self {
        Self { levels, bases }
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|&r| r as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index_of(&self, values: &[u32]) -> Option<usize> {
        if values.len() != self.levels.len() {
            return None;
        }
        let mut idx = 0usize;
        for ((&x, &r), &b) in values.iter().zip(&self.levels).zip(&self.bases) {
            if x < b || x >= b + r {
                return None;
            }
            idx = idx * r as usize + (x - b) as usize;
        }
        Some(idx)
    }

    pub fn values_at(&self, mut index: usize) -> Vec<u32> {
        let mut out = vec![0; self.levels.len()];
        for k in (0..self.levels.len()).rev() {
            let r = self.levels[k] as usize;
            out[k] = self.bases[k] + (index % r) as u32;
            index /= r;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<u32>> + '_ {
        (0..self.len()).map(|i| self.values_at(i))
    }
}

/// BN-specific bookkeeping kept on a compiled model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BnInfo {
    pub spec: BnSpec,
    /// For each simplex block, the index of the BN variable it belongs to.
    pub block_owner: Vec<usize>,
    /// For each primitive probability: owning BN variable and its value.
    pub var_value: BTreeMap<Var, (usize, u32)>,
}

impl BnInfo {
    pub fn n(&self) -> usize {
        self.spec.variables.len()
    }

    pub fn joint_order(&self) -> JointIndexOrder {
        self.spec.joint_order()
    }
}

fn var_name(spec: &BnSpec, i: usize, value: u32, parent_values: &[u32]) -> String {
    let v = &spec.variables[i];
    if spec.parents[i].is_empty() {
        return format!("pi({}={})", v.name, value);
    }
    let ctx: Vec<String> = spec.parents[i]
        .iter()
        .zip(parent_values)
        .map(|(&p, x)| format!("{}={}", spec.variables[p].name, x))
        .collect();
    format!("pi({}={}|{})", v.name, value, ctx.join(","))
}

/// Compiles a regular BN. One conditional probability is created per
/// parent configuration, which identifies all histories that agree on the
/// parents, so each block is labelled by a parent configuration.
pub fn compile_bn(spec: &BnSpec) -> Result<CompiledModel, ModelError> {
    spec.validate()?;
    let n = spec.variables.len();
    let mut table = VariableTable::new();
    let mut blocks = Vec::new();
    let mut block_owner = Vec::new();
    let mut var_value = BTreeMap::new();
    // (variable, parent values, value) -> Var
    let mut lookup: BTreeMap<(usize, Vec<u32>, u32), Var> = BTreeMap::new();

    for i in 0..n {
        let pa_order = JointIndexOrder::new(
            spec.parents[i].iter().map(|&p| spec.variables[p].levels).collect(),
            spec.parents[i].iter().map(|&p| spec.variables[p].base).collect(),
        );
        for pa in pa_order.iter() {
            let mut vars = Vec::new();
            for x in spec.variables[i].values() {
                let v = table.intern(&var_name(spec, i, x, &pa), VarKind::Parameter);
                lookup.insert((i, pa.clone(), x), v);
                var_value.insert(v, (i, x));
                vars.push(v);
            }
            let label = var_name(spec, i, spec.variables[i].base, &pa);
            let circumstance = label
                .trim_start_matches("pi(")
                .trim_end_matches(')')
                .split_once('|')
                .map(|(_, ctx)| format!("{}|{}", spec.variables[i].name, ctx))
                .unwrap_or_else(|| spec.variables[i].name.clone());
            blocks.push(SimplexBlock { circumstance, vars });
            block_owner.push(i);
        }
    }

    let joint = spec.joint_order();
    let mut atoms = Vec::with_capacity(joint.len());
    for x in joint.iter() {
        let factors: Vec<Var> = (0..n)
            .map(|i| {
                let pa: Vec<u32> = spec.parents[i].iter().map(|&p| x[p]).collect();
                lookup[&(i, pa, x[i])]
            })
            .collect();
        let poly: Poly = factors.iter().map(|&v| Poly::var(v)).product();
        let label = format!(
            "p({})",
            x.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
        );
        let path = x
            .iter()
            .zip(&spec.variables)
            .map(|(v, var)| format!("{}={}", var.name, v))
            .collect();
        atoms.push(Atom {
            label,
            path,
            factors,
            values: Some(x),
            poly,
        });
    }

    let mut unmerged = 0usize;
    let mut histories = 1usize;
    for v in &spec.variables {
        unmerged += histories * v.levels as usize;
        histories *= v.levels as usize;
    }

    let info = BnInfo {
        spec: spec.clone(),
        block_owner,
        var_value,
    };
    let mut model = CompiledModel::new(&spec.name, ModelKind::Bn(info), table);
    model.blocks = blocks;
    model.atoms = atoms;
    model.unmerged_parameters = unmerged;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use num_traits::One;

    pub(crate) fn movie() -> BnSpec {
        BnSpec::new("movie")
            .var("X1", 3)
            .var("X2", 2)
            .var("X3", 3)
            .var("X4", 2)
            .with_parents("X3", &["X1", "X2"])
            .unwrap()
            .with_parents("X4", &["X2", "X3"])
            .unwrap()
    }

    #[test]
    fn movie_counts() {
        let m = compile_bn(&movie()).unwrap();
        assert_eq!(m.atoms.len(), 36);
        assert!(m.atoms.iter().all(|a| a.poly.degree() == 4 && a.poly.is_monic_monomial()));
        assert_eq!(m.blocks.len(), 14);
        assert_eq!(m.unmerged_parameters, 63);
        assert_eq!(m.table.len(), 35);
        assert_eq!(m.free_dimension(), 21);
    }

    #[test]
    fn movie_atom_factorization() {
        let m = compile_bn(&movie()).unwrap();
        let a = &m.atoms[m.atom_index("p(2,1,2,1)").unwrap()];
        let want = m.parse_expr("pi(X1=2)*pi(X2=1)*pi(X3=2|X1=2,X2=1)*pi(X4=1|X2=1,X3=2)").unwrap();
        assert_eq!(a.poly, want);
    }

    #[test]
    fn single_binary_variable() {
        let m = compile_bn(&BnSpec::new("coin").var("X", 2)).unwrap();
        assert_eq!(m.blocks.len(), 1);
        assert_eq!(m.atoms.len(), 2);
        let s = m.table.get("pi(X=1)").unwrap();
        let point = |v: Var| Some(if v == s { rat(1, 3) } else { rat(2, 3) });
        let total: crate::Rational = m.atoms.iter().map(|a| a.poly.evaluate(point).unwrap()).sum();
        assert!(total.is_one());
    }

    #[test]
    fn independent_pair_matches_closed_form() {
        let mut spec = BnSpec::new("pair");
        spec.push_var("X1", 2, 0);
        spec.push_var("X2", 2, 0);
        let m = compile_bn(&spec).unwrap();
        let labels: Vec<&str> = m.atoms.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(labels, ["p(0,0)", "p(0,1)", "p(1,0)", "p(1,1)"]);
        let expect = [
            "pi(X1=0)*pi(X2=0)",
            "pi(X1=0)*pi(X2=1)",
            "pi(X1=1)*pi(X2=0)",
            "pi(X1=1)*pi(X2=1)",
        ];
        for (a, e) in m.atoms.iter().zip(expect) {
            assert_eq!(a.poly, m.parse_expr(e).unwrap());
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = BnSpec::new("bad").var("A", 2).var("B", 2);
        s.parents[0] = vec![1];
        assert!(matches!(compile_bn(&s), Err(ModelError::ParentOrder { .. })));
        let s = BnSpec::new("bad").var("A", 1);
        assert!(matches!(compile_bn(&s), Err(ModelError::TooFewLevels { .. })));
    }

    #[test]
    fn odometer_order() {
        let o = JointIndexOrder::new(vec![2, 3], vec![0, 1]);
        assert_eq!(o.values_at(0), [0, 1]);
        assert_eq!(o.values_at(1), [0, 2]);
        assert_eq!(o.values_at(3), [1, 1]);
        for i in 0..o.len() {
            assert_eq!(o.index_of(&o.values_at(i)), Some(i));
        }
        assert_eq!(o.index_of(&[2, 1]), None);
    }
}
