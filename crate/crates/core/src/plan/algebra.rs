//! Algebra tree: triple patterns grouped into star blocks joined by chain links.

use std::fmt;

use crate::query::{FilterExpr, PatternTerm, SelectStmt, TriplePattern};

use super::PlanError;

/// Patterns sharing one subject term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarBlock {
    pub subject: PatternTerm,
    pub patterns: Vec<TriplePattern>,
}

impl StarBlock {
    /// Variables bound by the block, subject first.
    pub fn vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for v in self.patterns.iter().flat_map(TriplePattern::vars) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    fn shares_var_with(&self, other: &StarBlock) -> Vec<String> {
        let theirs = other.vars();
        self.vars()
            .into_iter()
            .filter(|v| theirs.contains(v))
            .map(str::to_string)
            .collect()
    }
}

/// Edge of the join tree. An empty `vars` list is a cartesian product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainLink {
    pub left: usize,
    pub right: usize,
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraTree {
    pub projection: Vec<String>,
    pub blocks: Vec<StarBlock>,
    pub links: Vec<ChainLink>,
    pub filter: Option<FilterExpr>,
}

impl AlgebraTree {
    pub fn leaf_count(&self) -> usize {
        self.blocks.iter().map(|b| b.patterns.len()).sum()
    }
}

/// Groups patterns by subject (first-appearance order) and links the
/// groups through shared variables, breadth first from the first block.
pub fn build_algebra(stmt: &SelectStmt, allow_product: bool) -> Result<AlgebraTree, PlanError> {
    let mut blocks: Vec<StarBlock> = Vec::new();
    for p in &stmt.patterns {
        match blocks.iter_mut().find(|b| b.subject == p.subject) {
            Some(b) => b.patterns.push(p.clone()),
            None => blocks.push(StarBlock {
                subject: p.subject.clone(),
                patterns: vec![p.clone()],
            }),
        }
    }

    let n = blocks.len();
    let mut links = Vec::new();
    let mut seen = vec![false; n];
    let mut roots = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        roots.push(root);
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if seen[j] {
                    continue;
                }
                let vars = blocks[i].shares_var_with(&blocks[j]);
                if !vars.is_empty() {
                    seen[j] = true;
                    links.push(ChainLink { left: i, right: j, vars });
                    queue.push_back(j);
                }
            }
        }
    }

    if roots.len() > 1 {
        if !allow_product {
            let groups = roots
                .iter()
                .map(|&r| blocks[r].subject.to_string())
                .collect();
            return Err(PlanError::DisconnectedQuery { groups });
        }
        for pair in roots.windows(2) {
            links.push(ChainLink {
                left: pair[0],
                right: pair[1],
                vars: Vec::new(),
            });
        }
    }

    Ok(AlgebraTree {
        projection: stmt.projection.clone(),
        blocks,
        links,
        filter: stmt.filter.clone(),
    })
}

impl fmt::Display for AlgebraTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PROJECT")?;
        for v in &self.projection {
            write!(f, " ?{v}")?;
        }
        writeln!(f)?;
        if let Some(filter) = &self.filter {
            writeln!(f, "  FILTER ({filter})")?;
        }
        for (i, b) in self.blocks.iter().enumerate() {
            writeln!(f, "  S{} {} [{} patterns]", i + 1, b.subject, b.patterns.len())?;
        }
        for (i, l) in self.links.iter().enumerate() {
            let vars: Vec<String> = l.vars.iter().map(|v| format!("?{v}")).collect();
            let on = if vars.is_empty() { "x".to_string() } else { vars.join(" ") };
            writeln!(f, "  J{} S{} - S{} on {on}", i + 1, l.left + 1, l.right + 1)?;
        }
        Ok(())
    }
}
