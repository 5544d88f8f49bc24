use std::collections::{BTreeMap, BTreeSet};

use crate::models::{Atom, CompiledModel, ModelError, ModelKind, SimplexBlock};
use crate::poly::{Var, VarKind, VariableTable};
use crate::Poly;

pub const DEFAULT_CHAIN_CAP: usize = 1_000_000;

/// Circumstances with their cover relations. Vertex order is the
/// declaration order and fixes every enumeration order downstream.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HasseDiagram {
    pub name: String,
    pub vertices: Vec<String>,
    pub terminal: BTreeSet<usize>,
    pub edges: Vec<(usize, usize)>,
}

/// A maximal chain of circumstances.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Chain {
    pub vertices: Vec<String>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self) -> String {
        format!("p({})", self.vertices.join(","))
    }
}

impl HasseDiagram {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn vertex(&mut self, id: &str, terminal: bool) -> Result<usize, ModelError> {
        if self.index_of(id).is_some() {
            return Err(ModelError::Duplicate(id.to_string()));
        }
        self.vertices.push(id.to_string());
        let i = self.vertices.len() - 1;
        if terminal {
            self.terminal.insert(i);
        }
        Ok(i)
    }

    pub fn edge(&mut self, from: &str, to: &str) -> Result<(), ModelError> {
        let f = self.index_of(from).ok_or_else(|| ModelError::Unknown(from.to_string()))?;
        let t = self.index_of(to).ok_or_else(|| ModelError::Unknown(to.to_string()))?;
        if self.edges.contains(&(f, t)) {
            return Err(ModelError::Duplicate(format!("{from} -> {to}")));
        }
        self.edges.push((f, t));
        Ok(())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    /// Successor lists sorted by vertex index.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for &(f, t) in &self.edges {
            out[f].push(t);
        }
        for s in &mut out {
            s.sort_unstable();
        }
        out
    }

    /// Checks the diagram and returns its unique minimal element.
    pub fn validate(&self) -> Result<usize, ModelError> {
        let n = self.vertices.len();
        let succ = self.successors();
        let mut indeg = vec![0usize; n];
        for &(_, t) in &self.edges {
            indeg[t] += 1;
        }

        // Kahn's algorithm; leftovers lie on a cycle.
        let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let roots = queue.clone();
        let mut topo = Vec::with_capacity(n);
        let mut deg = indeg.clone();
        while let Some(v) = queue.pop() {
            topo.push(v);
            for &w in &succ[v] {
                deg[w] -= 1;
                if deg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        if topo.len() < n {
            let v = (0..n).find(|&v| deg[v] > 0).unwrap_or(0);
            return Err(ModelError::Cycle(self.vertices[v].clone()));
        }
        let root = match roots.as_slice() {
            [] => return Err(ModelError::NoRoot),
            [r] => *r,
            many => {
                return Err(ModelError::MultipleRoots(
                    many.iter().map(|&v| self.vertices[v].clone()).collect(),
                ))
            }
        };

        for v in 0..n {
            match (self.terminal.contains(&v), succ[v].is_empty()) {
                (true, false) => return Err(ModelError::TerminalWithSuccessors(self.vertices[v].clone())),
                (false, true) => return Err(ModelError::DeadEnd(self.vertices[v].clone())),
                _ => {}
            }
        }

        // An edge u -> w is a shortcut if w is reachable from another
        // successor of u.
        let mut reach: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &v in topo.iter().rev() {
            let mut r = BTreeSet::new();
            for &w in &succ[v] {
                r.insert(w);
                r.extend(reach[w].iter().copied());
            }
            reach[v] = r;
        }
        for &(f, t) in &self.edges {
            if succ[f].iter().any(|&w| w != t && reach[w].contains(&t)) {
                return Err(ModelError::NotCover {
                    from: self.vertices[f].clone(),
                    to: self.vertices[t].clone(),
                });
            }
        }
        Ok(root)
    }
}

fn chain_indices(d: &HasseDiagram, cap: usize) -> Result<Vec<Vec<usize>>, ModelError> {
    let root = d.validate()?;
    let succ = d.successors();
    let mut out = Vec::new();
    // Explicit DFS stack of (vertex, next successor position).
    let mut path = vec![root];
    let mut cursor = vec![0usize];
    while let Some(&v) = path.last() {
        let k = *cursor.last().unwrap();
        if succ[v].is_empty() {
            if out.len() == cap {
                return Err(ModelError::TooManyChains(cap));
            }
            out.push(path.clone());
        }
        if k < succ[v].len() {
            *cursor.last_mut().unwrap() += 1;
            path.push(succ[v][k]);
            cursor.push(0);
        } else {
            path.pop();
            cursor.pop();
        }
    }
    Ok(out)
}

/// All maximal chains in lexicographic order of vertex indices.
pub fn chains(d: &HasseDiagram) -> Result<Vec<Chain>, ModelError> {
    chains_capped(d, DEFAULT_CHAIN_CAP)
}

pub fn chains_capped(d: &HasseDiagram, cap: usize) -> Result<Vec<Chain>, ModelError> {
    Ok(chain_indices(d, cap)?
        .into_iter()
        .map(|c| Chain {
            vertices: c.into_iter().map(|v| d.vertices[v].clone()).collect(),
        })
        .collect())
}

pub fn compile_poset(d: &HasseDiagram) -> Result<CompiledModel, ModelError> {
    compile_poset_capped(d, DEFAULT_CHAIN_CAP)
}

pub fn compile_poset_capped(d: &HasseDiagram, cap: usize) -> Result<CompiledModel, ModelError> {
    let paths = chain_indices(d, cap)?;
    Ok(assemble(&d.name, ModelKind::Poset, &d.vertices, &d.successors(), &paths))
}

/// Builds the model from sorted successor lists and the chains. Blocks
/// follow vertex order, so trees and posets with the same vertices and
/// edges produce the same table.
pub(crate) fn assemble(
    name: &str,
    kind: ModelKind,
    vertices: &[String],
    succ: &[Vec<usize>],
    paths: &[Vec<usize>],
) -> CompiledModel {
    let mut table = VariableTable::new();
    let mut blocks = Vec::new();
    let mut edges = BTreeMap::new();
    let mut var_of: BTreeMap<(usize, usize), Var> = BTreeMap::new();
    for (v, ws) in succ.iter().enumerate() {
        if ws.is_empty() {
            continue;
        }
        let vars = ws
            .iter()
            .map(|&w| {
                let var = table.intern(&format!("pi({}|{})", vertices[w], vertices[v]), VarKind::Parameter);
                var_of.insert((v, w), var);
                edges.insert(var, (vertices[v].clone(), vertices[w].clone()));
                var
            })
            .collect();
        blocks.push(SimplexBlock {
            circumstance: vertices[v].clone(),
            vars,
        });
    }
    let atoms = paths
        .iter()
        .map(|p| {
            let factors: Vec<Var> = p.windows(2).map(|e| var_of[&(e[0], e[1])]).collect();
            let names: Vec<String> = p.iter().map(|&v| vertices[v].clone()).collect();
            Atom {
                label: format!("p({})", names.join(",")),
                path: names,
                poly: factors.iter().map(|&v| Poly::var(v)).product(),
                factors,
                values: None,
            }
        })
        .collect();
    let mut model = CompiledModel::new(name, kind, table);
    model.unmerged_parameters = model.table.len();
    model.blocks = blocks;
    model.atoms = atoms;
    model.edges = edges;
    model
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(vs: &[(&str, bool)], es: &[(&str, &str)]) -> HasseDiagram {
        let mut d = HasseDiagram::new("d");
        for &(v, t) in vs {
            d.vertex(v, t).unwrap();
        }
        for &(a, b) in es {
            d.edge(a, b).unwrap();
        }
        d
    }

    fn diamond() -> HasseDiagram {
        diagram(
            &[("v0", false), ("a", false), ("b", false), ("vt", true)],
            &[("v0", "a"), ("v0", "b"), ("a", "vt"), ("b", "vt")],
        )
    }

    #[test]
    fn single_edge() {
        let d = diagram(&[("v0", false), ("v1", true)], &[("v0", "v1")]);
        let cs = chains(&d).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].vertices, ["v0", "v1"]);
    }

    #[test]
    fn diamond_chains_and_atoms() {
        let d = diamond();
        let cs = chains(&d).unwrap();
        assert_eq!(cs.len(), 2);
        let m = compile_poset(&d).unwrap();
        assert_eq!(m.blocks.len(), 3);
        let expect = ["pi(a|v0)*pi(vt|a)", "pi(b|v0)*pi(vt|b)"];
        for (a, e) in m.atoms.iter().zip(expect) {
            assert_eq!(a.poly, m.parse_expr(e).unwrap());
        }
    }

    #[test]
    fn invalid_diagrams() {
        let mut d = diamond();
        d.edge("v0", "vt").unwrap();
        assert!(matches!(d.validate(), Err(ModelError::NotCover { .. })));

        let d = diagram(&[("a", false), ("b", false)], &[("a", "b"), ("b", "a")]);
        assert!(matches!(d.validate(), Err(ModelError::Cycle(_))));

        let d = diagram(&[("a", false), ("b", false)], &[("a", "b")]);
        assert!(matches!(d.validate(), Err(ModelError::DeadEnd(_))));

        let d = diagram(&[("a", true), ("b", true)], &[("a", "b")]);
        assert!(matches!(d.validate(), Err(ModelError::TerminalWithSuccessors(_))));

        let d = diagram(&[("a", false), ("b", false), ("c", true)], &[("a", "c"), ("b", "c")]);
        assert!(matches!(d.validate(), Err(ModelError::MultipleRoots(_))));
    }

    #[test]
    fn chain_cap() {
        assert!(matches!(chains_capped(&diamond(), 1), Err(ModelError::TooManyChains(1))));
    }

    #[test]
    fn movie_poset() {
        let mut d = HasseDiagram::new("movie");
        d.vertex("start", false).unwrap();
        for x1 in 1..=3 {
            d.vertex(&format!("L{x1}"), false).unwrap();
        }
        for x1 in 1..=3 {
            d.vertex(&format!("W{x1}"), false).unwrap();
            d.vertex(&format!("N{x1}"), false).unwrap();
        }
        for x1 in 1..=3 {
            for x3 in 1..=3 {
                d.vertex(&format!("P{x1}{x3}"), false).unwrap();
            }
        }
        d.vertex("fight", true).unwrap();
        d.vertex("calm", true).unwrap();
        for x1 in 1..=3 {
            d.edge("start", &format!("L{x1}")).unwrap();
            d.edge(&format!("L{x1}"), &format!("W{x1}")).unwrap();
            d.edge(&format!("L{x1}"), &format!("N{x1}")).unwrap();
            d.edge(&format!("N{x1}"), "fight").unwrap();
            d.edge(&format!("N{x1}"), "calm").unwrap();
            for x3 in 1..=3 {
                d.edge(&format!("W{x1}"), &format!("P{x1}{x3}")).unwrap();
                d.edge(&format!("P{x1}{x3}"), "fight").unwrap();
                d.edge(&format!("P{x1}{x3}"), "calm").unwrap();
            }
        }
        let m = compile_poset(&d).unwrap();
        assert_eq!(m.atoms.len(), 24);
        let (watch, not): (Vec<_>, Vec<_>) = m.atoms.iter().partition(|a| a.path[2].starts_with('W'));
        assert_eq!(watch.len(), 18);
        assert!(watch.iter().all(|a| a.poly.degree() == 4));
        assert!(not.iter().all(|a| a.poly.degree() == 3));
    }
}
