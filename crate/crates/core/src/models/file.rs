//! Line-oriented model and constraint files.
//!
//! ```text
//! model bn movie
//! var X1 levels 3
//! var X2 levels 2 base 0
//! parents X3: X1 X2
//!
//! model poset diamond
//! vertex v0
//! vertex vt terminal
//! edge v0 -> vt
//!
//! aux r in [0,1]
//! eq: pi(X3=1|X1=2,X2=1) = r*pi(X3=1|X1=1,X2=1)
//! ineq: pi(X1=1) - pi(X1=2) > 0
//! ```

use crate::models::{
    add_constraints, compile_bn, compile_poset, compile_tree, BnSpec, CompiledModel, HasseDiagram, ModelError,
    Relation, TreeSpec,
};
use crate::poly::parse_rational;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSource {
    Bn(BnSpec),
    Tree(TreeSpec),
    Poset(HasseDiagram),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintLine {
    Aux {
        line: usize,
        name: String,
        bounds: Option<(Rational, Rational)>,
    },
    Eq {
        line: usize,
        lhs: String,
        rhs: String,
    },
    Ineq {
        line: usize,
        lhs: String,
        rhs: String,
        relation: Relation,
    },
}

impl ConstraintLine {
    pub fn line(&self) -> usize {
        match self {
            ConstraintLine::Aux { line, .. } | ConstraintLine::Eq { line, .. } | ConstraintLine::Ineq { line, .. } => {
                *line
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFile {
    pub source: ModelSource,
    pub constraints: Vec<ConstraintLine>,
}

impl ModelFile {
    pub fn compile(&self) -> Result<CompiledModel, ModelError> {
        let model = match &self.source {
            ModelSource::Bn(s) => compile_bn(s)?,
            ModelSource::Tree(t) => compile_tree(t)?,
            ModelSource::Poset(d) => compile_poset(d)?,
        };
        apply_constraints(model, &self.constraints)
    }
}

fn perr(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse { line, msg: msg.into() }
}

/// Strips comments and blank lines, keeping 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Splits at the first occurrence of `pat` outside parentheses.
pub(crate) fn split_top<'a>(s: &'a str, pat: &str) -> Option<(&'a str, &'a str)> {
    let mut depth = 0i32;
    let bytes = s.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth -= 1,
            _ if depth == 0 && s[i..].starts_with(pat) => return Some((&s[..i], &s[i + pat.len()..])),
            _ => {}
        }
    }
    None
}

fn parse_bounds(line: usize, s: &str) -> Result<(Rational, Rational), ModelError> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| perr(line, "bounds must look like [lo,hi]"))?;
    let (lo, hi) = inner.split_once(',').ok_or_else(|| perr(line, "bounds must look like [lo,hi]"))?;
    let lo = parse_rational(lo.trim()).ok_or_else(|| perr(line, format!("bad bound `{}`", lo.trim())))?;
    let hi = parse_rational(hi.trim()).ok_or_else(|| perr(line, format!("bad bound `{}`", hi.trim())))?;
    if lo > hi {
        return Err(perr(line, "empty bounds"));
    }
    Ok((lo, hi))
}

/// Parses one `aux`, `eq:` or `ineq:` line; returns `None` for other
/// keywords.
fn constraint_line(line: usize, l: &str) -> Result<Option<ConstraintLine>, ModelError> {
    if let Some(rest) = l.strip_prefix("aux ") {
        let rest = rest.trim();
        let (name, bounds) = match rest.split_once(" in ") {
            Some((n, b)) => (n.trim(), Some(parse_bounds(line, b)?)),
            None => (rest, None),
        };
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(perr(line, format!("bad auxiliary name `{name}`")));
        }
        return Ok(Some(ConstraintLine::Aux {
            line,
            name: name.to_string(),
            bounds,
        }));
    }
    if let Some(rest) = l.strip_prefix("eq:") {
        let (lhs, rhs) = split_top(rest, "=").ok_or_else(|| perr(line, "equality needs `=`"))?;
        return Ok(Some(ConstraintLine::Eq {
            line,
            lhs: lhs.trim().to_string(),
            rhs: rhs.trim().to_string(),
        }));
    }
    if let Some(rest) = l.strip_prefix("ineq:") {
        let ops = [
            (">=", Relation::NonNegative, false),
            ("<=", Relation::NonNegative, true),
            (">", Relation::Positive, false),
            ("<", Relation::Positive, true),
        ];
        for (op, relation, flip) in ops {
            if let Some((a, b)) = split_top(rest, op) {
                let (lhs, rhs) = if flip { (b, a) } else { (a, b) };
                return Ok(Some(ConstraintLine::Ineq {
                    line,
                    lhs: lhs.trim().to_string(),
                    rhs: rhs.trim().to_string(),
                    relation,
                }));
            }
        }
        return Err(perr(line, "inequality needs one of > >= < <="));
    }
    Ok(None)
}

/// Parses a constraints-only file.
pub fn parse_constraint_lines(text: &str) -> Result<Vec<ConstraintLine>, ModelError> {
    content_lines(text)
        .map(|(line, l)| constraint_line(line, l)?.ok_or_else(|| perr(line, format!("unexpected line `{l}`"))))
        .collect()
}

/// Declares auxiliaries, then parses and appends every constraint.
pub fn apply_constraints(mut model: CompiledModel, lines: &[ConstraintLine]) -> Result<CompiledModel, ModelError> {
    for c in lines {
        if let ConstraintLine::Aux { name, bounds, line } = c {
            model
                .declare_aux(name, bounds.clone())
                .map_err(|e| perr(*line, e.to_string()))?;
        }
    }
    let expr = |model: &CompiledModel, line: usize, a: &str, b: &str| {
        let a = model.parse_expr(a).map_err(|e| perr(line, e.to_string()))?;
        let b = model.parse_expr(b).map_err(|e| perr(line, e.to_string()))?;
        Ok::<_, ModelError>(a - b)
    };
    let mut eqs = Vec::new();
    let mut ineqs = Vec::new();
    for c in lines {
        match c {
            ConstraintLine::Aux { .. } => {}
            ConstraintLine::Eq { line, lhs, rhs } => eqs.push(expr(&model, *line, lhs, rhs)?),
            ConstraintLine::Ineq {
                line,
                lhs,
                rhs,
                relation,
            } => ineqs.push((expr(&model, *line, lhs, rhs)?, *relation)),
        }
    }
    add_constraints(model, eqs, ineqs)
}

pub fn parse_model_file(text: &str) -> Result<ModelFile, ModelError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty model file"))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (kind, name) = match words.as_slice() {
        ["model", kind, name] => (*kind, *name),
        _ => return Err(perr(hline, "expected `model bn|tree|poset <name>`")),
    };
    let mut constraints = Vec::new();
    let mut bn = BnSpec::new(name);
    let mut parent_lines: Vec<(usize, &str)> = Vec::new();
    let mut vertices: Vec<(usize, String, bool)> = Vec::new();
    let mut edges: Vec<(usize, String, String)> = Vec::new();

    for (line, l) in lines {
        if let Some(c) = constraint_line(line, l)? {
            constraints.push(c);
            continue;
        }
        let words: Vec<&str> = l.split_whitespace().collect();
        match (kind, words.as_slice()) {
            ("bn", ["var", v, "levels", k, rest @ ..]) => {
                let k: u32 = k.parse().map_err(|_| perr(line, format!("bad level count `{k}`")))?;
                let base = match rest {
                    [] => 1,
                    ["base", b] => b.parse().map_err(|_| perr(line, format!("bad base `{b}`")))?,
                    _ => return Err(perr(line, "expected `var <name> levels <k> [base <b>]`")),
                };
                if k < 2 {
                    return Err(perr(line, format!("variable `{v}` needs at least 2 levels")));
                }
                if bn.index_of(v).is_some() {
                    return Err(perr(line, format!("duplicate variable `{v}`")));
                }
                bn.push_var(v, k, base);
            }
            ("bn", ["parents", ..]) => parent_lines.push((line, l)),
            ("tree" | "poset", ["vertex", v]) => vertices.push((line, v.to_string(), false)),
            ("tree" | "poset", ["vertex", v, "terminal"]) => vertices.push((line, v.to_string(), true)),
            ("tree" | "poset", ["edge", a, "->", b]) => edges.push((line, a.to_string(), b.to_string())),
            _ => return Err(perr(line, format!("unexpected line `{l}`"))),
        }
    }

    let source = match kind {
        "bn" => {
            for (line, l) in parent_lines {
                let rest = l["parents".len()..].trim();
                let (child, ps) = rest
                    .split_once(':')
                    .ok_or_else(|| perr(line, "expected `parents <name>: <p1> <p2> ...`"))?;
                let ps: Vec<&str> = ps.split_whitespace().collect();
                let child = child.trim();
                bn.set_parents(child, &ps).map_err(|e| perr(line, e.to_string()))?;
                let c = bn.index_of(child).unwrap_or(0);
                if let Some(&p) = bn.parents[c].iter().find(|&&p| p >= c) {
                    let e = ModelError::ParentOrder {
                        child: child.to_string(),
                        parent: bn.variables[p].name.clone(),
                    };
                    return Err(perr(line, e.to_string()));
                }
            }
            bn.validate().map_err(|e| perr(hline, e.to_string()))?;
            ModelSource::Bn(bn)
        }
        "tree" => {
            let mut t = TreeSpec::new([], []).named(name);
            t.vertices = vertices.iter().map(|(_, v, _)| v.clone()).collect();
            t.edges = edges.iter().map(|(_, a, b)| (a.clone(), b.clone())).collect();
            for (line, v, terminal) in &vertices {
                if *terminal && t.edges.iter().any(|(a, _)| a == v) {
                    return Err(perr(*line, ModelError::TerminalWithSuccessors(v.clone()).to_string()));
                }
            }
            ModelSource::Tree(t)
        }
        "poset" => {
            let mut d = HasseDiagram::new(name);
            for (line, v, terminal) in &vertices {
                d.vertex(v, *terminal).map_err(|e| perr(*line, e.to_string()))?;
            }
            for (line, a, b) in &edges {
                d.edge(a, b).map_err(|e| perr(*line, e.to_string()))?;
            }
            ModelSource::Poset(d)
        }
        other => return Err(perr(hline, format!("unknown model kind `{other}`"))),
    };
    Ok(ModelFile { source, constraints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    const DIAMOND: &str = "\
# a diamond
model poset diamond
vertex v0
vertex a
vertex b
vertex vt terminal
edge v0 -> a
edge v0 -> b
edge a -> vt
edge b -> vt
";

    #[test]
    fn poset_file() {
        let m = parse_model_file(DIAMOND).unwrap().compile().unwrap();
        assert_eq!(m.atoms.len(), 2);
    }

    #[test]
    fn bn_file_with_constraints() {
        let text = "\
model bn pair
var A levels 2 base 0
var B levels 3
parents B: A
aux r in [0,1/2]
eq: pi(B=1|A=0) = r*pi(B=2|A=0)
ineq: pi(A=0) < pi(A=1)
";
        let f = parse_model_file(text).unwrap();
        let m = f.compile().unwrap();
        assert_eq!(m.blocks.len(), 3);
        assert_eq!(m.aux[0].upper, rat(1, 2));
        assert_eq!(m.equalities.len(), 1);
        assert_eq!(m.inequalities[0].1, Relation::Positive);
        let expect = m.parse_expr("pi(A=1) - pi(A=0)").unwrap();
        assert_eq!(m.inequalities[0].0, expect);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "model bn x\nvar A levels 2\n\nvar B lvls 2\n";
        assert_eq!(
            parse_model_file(text).unwrap_err(),
            ModelError::Parse {
                line: 4,
                msg: "unexpected line `var B lvls 2`".into()
            }
        );
        let text = "model bn x\nvar A levels 2\neq: pi(A=3) = 0\n";
        assert!(matches!(
            parse_model_file(text).unwrap().compile(),
            Err(ModelError::Parse { line: 3, .. })
        ));
        let text = "model bn x\nvar A levels 2\nvar B levels 2\nparents A: B\n";
        assert!(matches!(parse_model_file(text), Err(ModelError::Parse { line: 4, .. })));
    }

    #[test]
    fn split_respects_parentheses() {
        assert_eq!(split_top("pi(X=1) = 2", "="), Some(("pi(X=1) ", " 2")));
        assert_eq!(split_top("pi(X=1)", "="), None);
    }
}
