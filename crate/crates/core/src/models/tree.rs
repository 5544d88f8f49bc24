use crate::models::poset::assemble;
use crate::models::{CompiledModel, HasseDiagram, ModelError, ModelKind};

/// A rooted probability tree. Vertex order fixes child order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeSpec {
    pub name: String,
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl TreeSpec {
    pub fn new<'a>(
        vertices: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        Self {
            name: "tree".to_string(),
            vertices: vertices.into_iter().map(str::to_string).collect(),
            edges: edges
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    fn index(&self, id: &str) -> Result<usize, ModelError> {
        self.vertices
            .iter()
            .position(|v| v == id)
            .ok_or_else(|| ModelError::Unknown(id.to_string()))
    }

    /// Returns the root and the child lists sorted by vertex index.
    fn structure(&self) -> Result<(usize, Vec<Vec<usize>>), ModelError> {
        let n = self.vertices.len();
        for (i, v) in self.vertices.iter().enumerate() {
            if self.vertices[..i].contains(v) {
                return Err(ModelError::Duplicate(v.clone()));
            }
        }
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (a, b) in &self.edges {
            let (a, b) = (self.index(a)?, self.index(b)?);
            if parent[b].is_some() {
                return Err(ModelError::NotATree(self.vertices[b].clone()));
            }
            parent[b] = Some(a);
            children[a].push(b);
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        let root = match roots.as_slice() {
            [] => return Err(ModelError::NoRoot),
            [r] => *r,
            many => {
                return Err(ModelError::MultipleRoots(
                    many.iter().map(|&v| self.vertices[v].clone()).collect(),
                ))
            }
        };
        // With one root and at most one parent each, anything the root
        // does not reach lies on a cycle.
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            seen[v] = true;
            stack.extend(children[v].iter().copied());
        }
        if let Some(v) = (0..n).find(|&v| !seen[v]) {
            return Err(ModelError::Cycle(self.vertices[v].clone()));
        }
        for c in &mut children {
            c.sort_unstable();
        }
        Ok((root, children))
    }

    pub fn leaves(&self) -> Result<Vec<&str>, ModelError> {
        let (_, children) = self.structure()?;
        Ok((0..self.vertices.len())
            .filter(|&v| children[v].is_empty())
            .map(|v| self.vertices[v].as_str())
            .collect())
    }

    /// The same tree as a Hasse diagram with the leaves terminal.
    pub fn to_hasse(&self) -> Result<HasseDiagram, ModelError> {
        let (_, children) = self.structure()?;
        let mut d = HasseDiagram::new(&self.name);
        for (i, v) in self.vertices.iter().enumerate() {
            d.vertex(v, children[i].is_empty())?;
        }
        for (a, b) in &self.edges {
            d.edge(a, b)?;
        }
        Ok(d)
    }
}

fn paths(children: &[Vec<usize>], v: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    prefix.push(v);
    if children[v].is_empty() {
        out.push(prefix.clone());
    }
    for &c in &children[v] {
        paths(children, c, prefix, out);
    }
    prefix.pop();
}

/// One block per inner vertex and one atom per root-to-leaf path.
pub fn compile_tree(spec: &TreeSpec) -> Result<CompiledModel, ModelError> {
    let (root, children) = spec.structure()?;
    let mut out = Vec::new();
    paths(&children, root, &mut Vec::new(), &mut out);
    Ok(assemble(&spec.name, ModelKind::Tree, &spec.vertices, &children, &out))
}
