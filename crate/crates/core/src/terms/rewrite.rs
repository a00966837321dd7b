//! Elementary transformations of ternary terms and bounded path search.

use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::term::{enumerate_terms, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RuleTag {
    #[serde(rename = "I-expand")]
    Expand,
    #[serde(rename = "I-contract")]
    Contract,
    #[serde(rename = "II-permute")]
    Permute,
    #[serde(rename = "III-assoc-left")]
    AssocLeft,
    #[serde(rename = "III-assoc-right")]
    AssocRight,
    #[serde(rename = "IV-descend")]
    Descend,
}

/// A rule applied at the root of the rewritten subterm.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// `φ ↦ ⟨φ φ ψ⟩` with the given partner `ψ`.
    Expand(Term),
    /// `⟨ψ ψ φ′⟩ ↦ ψ`.
    Contract,
    /// `⟨φ₀ φ₁ φ₂⟩ ↦ ⟨φ_{σ0} φ_{σ1} φ_{σ2}⟩`.
    Permute([usize; 3]),
    /// `⟨⟨φ₁ φ₂ φ₃⟩ φ₂ φ₄⟩ ↦ ⟨φ₁ φ₂ ⟨φ₃ φ₂ φ₄⟩⟩`.
    AssocRight,
    /// `⟨φ₁ φ₂ ⟨φ₃ φ₂ φ₄⟩⟩ ↦ ⟨⟨φ₁ φ₂ φ₃⟩ φ₂ φ₄⟩`.
    AssocLeft,
}

const PERMUTATIONS: [[usize; 3]; 5] = [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

impl Rule {
    pub fn tag(&self) -> RuleTag {
        match self {
            Rule::Expand(_) => RuleTag::Expand,
            Rule::Contract => RuleTag::Contract,
            Rule::Permute(_) => RuleTag::Permute,
            Rule::AssocRight => RuleTag::AssocRight,
            Rule::AssocLeft => RuleTag::AssocLeft,
        }
    }

    /// Result of applying the rule at the root of `t`, if it matches.
    pub fn apply(&self, t: &Term) -> Option<Term> {
        match self {
            Rule::Expand(partner) => Some(Term::node(t.clone(), t.clone(), partner.clone())),
            Rule::Contract => {
                let ch = t.children()?;
                (ch[0] == ch[1]).then(|| ch[0].clone())
            }
            Rule::Permute(p) => {
                let ch = t.children()?;
                Some(Term::node(ch[p[0]].clone(), ch[p[1]].clone(), ch[p[2]].clone()))
            }
            Rule::AssocRight => {
                let [inner, phi2, phi4] = t.children()?;
                let [phi1, mid, phi3] = inner.children()?;
                (mid == phi2).then(|| {
                    Term::node(
                        phi1.clone(),
                        phi2.clone(),
                        Term::node(phi3.clone(), phi2.clone(), phi4.clone()),
                    )
                })
            }
            Rule::AssocLeft => {
                let [phi1, phi2, inner] = t.children()?;
                let [phi3, mid, phi4] = inner.children()?;
                (mid == phi2).then(|| {
                    Term::node(
                        Term::node(phi1.clone(), phi2.clone(), phi3.clone()),
                        phi2.clone(),
                        phi4.clone(),
                    )
                })
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Expand(p) => write!(f, "expand with {p}"),
            Rule::Contract => write!(f, "contract"),
            Rule::Permute(p) => write!(f, "permute ({} {} {})", p[0] + 1, p[1] + 1, p[2] + 1),
            Rule::AssocRight => write!(f, "re-associate right"),
            Rule::AssocLeft => write!(f, "re-associate left"),
        }
    }
}

/// One elementary transformation: `rule` applied to the subterm reached by
/// `depth` first-child links of `source`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RewriteStep {
    pub source: Term,
    pub target: Term,
    pub rule: Rule,
    pub depth: usize,
}

impl RewriteStep {
    /// Rules applied below the root are descents.
    pub fn tag(&self) -> RuleTag {
        if self.depth > 0 {
            RuleTag::Descend
        } else {
            self.rule.tag()
        }
    }

    /// Child indices (0-based) from the root to the rewritten subterm.
    pub fn position(&self) -> Vec<usize> {
        vec![0; self.depth]
    }

    pub fn replay(&self) -> Option<Term> {
        let sub = self.source.first_child_chain(self.depth)?;
        let rewritten = self.rule.apply(sub)?;
        self.source.with_first_child_chain(self.depth, rewritten)
    }

    pub fn is_valid(&self) -> bool {
        self.replay().as_ref() == Some(&self.target)
    }

    /// The step taking `target` back to `source`.
    pub fn reverse(&self) -> RewriteStep {
        let rule = match &self.rule {
            Rule::Expand(_) => Rule::Contract,
            Rule::Contract => {
                let sub = self.source.first_child_chain(self.depth).expect("valid step");
                Rule::Expand(sub.children().expect("contracted node")[2].clone())
            }
            Rule::Permute(p) => {
                let mut inv = [0; 3];
                for (i, &pi) in p.iter().enumerate() {
                    inv[pi] = i;
                }
                Rule::Permute(inv)
            }
            Rule::AssocRight => Rule::AssocLeft,
            Rule::AssocLeft => Rule::AssocRight,
        };
        RewriteStep {
            source: self.target.clone(),
            target: self.source.clone(),
            rule,
            depth: self.depth,
        }
    }
}

impl Serialize for RewriteStep {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RewriteStep", 5)?;
        st.serialize_field("source", &self.source.to_string())?;
        st.serialize_field("target", &self.target.to_string())?;
        st.serialize_field("tag", &self.tag())?;
        st.serialize_field("rule", &self.rule.to_string())?;
        st.serialize_field("position", &self.position())?;
        st.end()
    }
}

/// Generates single-step rewrites over a fixed alphabet, with Type I
/// partners drawn from all terms of complexity at most `partner_bound`.
#[derive(Clone, Debug)]
pub struct Rewriter {
    p: usize,
    partner_bound: usize,
    partners: Vec<Term>,
}

impl Rewriter {
    pub fn new(p: usize, partner_bound: usize) -> Self {
        Rewriter {
            p,
            partner_bound,
            partners: enumerate_terms(p, partner_bound),
        }
    }

    pub fn alphabet(&self) -> usize {
        self.p
    }

    pub fn partner_bound(&self) -> usize {
        self.partner_bound
    }

    fn root_rules<'a>(&'a self, t: &'a Term) -> impl Iterator<Item = (Rule, Term)> + 'a {
        let expansions = self
            .partners
            .iter()
            .map(move |psi| (Rule::Expand(psi.clone()), Term::node(t.clone(), t.clone(), psi.clone())));
        let others = [Rule::Contract, Rule::AssocRight, Rule::AssocLeft]
            .into_iter()
            .chain(PERMUTATIONS.iter().map(|&p| Rule::Permute(p)))
            .filter_map(move |r| {
                let out = r.apply(t)?;
                (out != *t).then_some((r, out))
            });
        expansions.chain(others)
    }

    /// Every single-step rewrite of `t`, at the root and along the
    /// first-child chain.
    pub fn neighbors(&self, t: &Term) -> Vec<RewriteStep> {
        let mut out = Vec::new();
        let mut depth = 0;
        while let Some(sub) = t.first_child_chain(depth) {
            for (rule, rewritten) in self.root_rules(sub) {
                let target = t
                    .with_first_child_chain(depth, rewritten)
                    .expect("chain exists");
                out.push(RewriteStep {
                    source: t.clone(),
                    target,
                    rule,
                    depth,
                });
            }
            depth += 1;
        }
        out
    }
}

pub fn elementary_neighbors(t: &Term, partner_bound: usize, p: usize) -> Vec<RewriteStep> {
    Rewriter::new(p, partner_bound).neighbors(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub complexity_cap: usize,
    pub partner_bound: usize,
    pub max_nodes: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            complexity_cap: 4,
            partner_bound: 1,
            max_nodes: 200_000,
        }
    }
}

/// A bounded search ran out of budget; this is not a proof of inequivalence.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no rewrite path found within bounds after visiting {explored} terms")]
pub struct NotFound {
    pub explored: usize,
}

struct Side {
    index: HashMap<Term, usize>,
    nodes: Vec<Term>,
    /// (parent node, rule, depth) for the step parent → node.
    parent: Vec<Option<(usize, Rule, usize)>>,
    frontier: Vec<usize>,
}

impl Side {
    fn new(root: &Term) -> Self {
        let mut index = HashMap::new();
        index.insert(root.clone(), 0);
        Side {
            index,
            nodes: vec![root.clone()],
            parent: vec![None],
            frontier: vec![0],
        }
    }

    /// Steps from the root to `node`.
    fn chain(&self, mut node: usize) -> Vec<RewriteStep> {
        let mut steps = Vec::new();
        while let Some((from, rule, depth)) = &self.parent[node] {
            steps.push(RewriteStep {
                source: self.nodes[*from].clone(),
                target: self.nodes[node].clone(),
                rule: rule.clone(),
                depth: *depth,
            });
            node = *from;
        }
        steps.reverse();
        steps
    }
}

/// Bidirectional breadth-first search for a chain of elementary
/// transformations from `from` to `to` through terms of bounded complexity.
pub fn rewrite_path(from: &Term, to: &Term, p: usize, limits: SearchLimits) -> Result<Vec<RewriteStep>, NotFound> {
    rewrite_path_with(&Rewriter::new(p, limits.partner_bound), from, to, limits)
}

pub fn rewrite_path_with(
    rewriter: &Rewriter,
    from: &Term,
    to: &Term,
    limits: SearchLimits,
) -> Result<Vec<RewriteStep>, NotFound> {
    if from == to {
        return Ok(Vec::new());
    }
    if from.complexity() > limits.complexity_cap || to.complexity() > limits.complexity_cap {
        return Err(NotFound { explored: 0 });
    }
    let mut sides = [Side::new(from), Side::new(to)];
    loop {
        let explored = sides[0].nodes.len() + sides[1].nodes.len();
        if sides[0].frontier.is_empty() || sides[1].frontier.is_empty() || explored >= limits.max_nodes {
            return Err(NotFound { explored });
        }
        let s = if sides[0].frontier.len() <= sides[1].frontier.len() { 0 } else { 1 };
        let frontier = std::mem::take(&mut sides[s].frontier);
        let mut next = Vec::new();
        for node in frontier {
            let term = sides[s].nodes[node].clone();
            for step in rewriter.neighbors(&term) {
                if step.target.complexity() > limits.complexity_cap || sides[s].index.contains_key(&step.target) {
                    continue;
                }
                let id = sides[s].nodes.len();
                sides[s].index.insert(step.target.clone(), id);
                sides[s].nodes.push(step.target.clone());
                sides[s].parent.push(Some((node, step.rule, step.depth)));
                if let Some(&meet) = sides[1 - s].index.get(&sides[s].nodes[id]) {
                    let (fwd, back, fwd_node, back_node) = if s == 0 {
                        (&sides[0], &sides[1], id, meet)
                    } else {
                        (&sides[0], &sides[1], meet, id)
                    };
                    let mut path = fwd.chain(fwd_node);
                    path.extend(back.chain(back_node).into_iter().rev().map(|st| st.reverse()));
                    return Ok(path);
                }
                next.push(id);
                if sides[0].nodes.len() + sides[1].nodes.len() >= limits.max_nodes {
                    return Err(NotFound {
                        explored: sides[0].nodes.len() + sides[1].nodes.len(),
                    });
                }
            }
        }
        sides[s].frontier = next;
    }
}

/// Connected components of the elementary-transformation graph restricted to
/// all terms of complexity at most `max_complexity`.
#[derive(Clone, Debug)]
pub struct EtClasses {
    pub terms: Vec<Term>,
    pub class_of: Vec<usize>,
    pub class_count: usize,
}

impl EtClasses {
    pub fn compute(rewriter: &Rewriter, max_complexity: usize) -> Self {
        let terms = enumerate_terms(rewriter.alphabet(), max_complexity);
        let index: HashMap<&Term, usize> = terms.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut uf: Vec<usize> = (0..terms.len()).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for (i, t) in terms.iter().enumerate() {
            for step in rewriter.neighbors(t) {
                if let Some(&j) = index.get(&step.target) {
                    let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
                    if ri != rj {
                        uf[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut class_id = HashMap::new();
        let mut class_of = Vec::with_capacity(terms.len());
        for i in 0..terms.len() {
            let r = find(&mut uf, i);
            let next = class_id.len();
            class_of.push(*class_id.entry(r).or_insert(next));
        }
        EtClasses {
            class_count: class_id.len(),
            terms,
            class_of,
        }
    }

    /// First term of each class, in enumeration order.
    pub fn representatives(&self) -> Vec<usize> {
        let mut first = vec![usize::MAX; self.class_count];
        for (i, &c) in self.class_of.iter().enumerate() {
            if first[c] == usize::MAX {
                first[c] = i;
            }
        }
        first
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{canonical_form, parse_term};

    fn t(s: &str, p: usize) -> Term {
        parse_term(s, p).unwrap()
    }

    #[test]
    fn neighbor_examples() {
        let v1 = t("a1", 2);
        let steps = elementary_neighbors(&v1, 0, 2);
        assert!(steps.iter().any(|s| s.target == t("<a1 a1 a2>", 2) && s.tag() == RuleTag::Expand));

        let steps = elementary_neighbors(&t("<a1 a1 a2>", 2), 0, 2);
        assert!(steps.iter().any(|s| s.target == v1 && s.tag() == RuleTag::Contract));

        let src = t("<<a1 a2 a3> a2 a4>", 4);
        let steps = elementary_neighbors(&src, 0, 4);
        assert!(steps
            .iter()
            .any(|s| s.target == t("<a1 a2 <a3 a2 a4>>", 4) && s.tag() == RuleTag::AssocRight));
        // Rewrites of the first child are descents.
        assert!(steps.iter().any(|s| s.tag() == RuleTag::Descend
            && s.target == t("<<a3 a2 a1> a2 a4>", 4)));
    }

    #[test]
    fn steps_replay_and_reverse() {
        let rw = Rewriter::new(3, 1);
        let src = t("<<a1 a2 a3> a2 <a1 a1 a3>>", 3);
        for step in rw.neighbors(&src) {
            assert!(step.is_valid(), "{step:?}");
            let back = step.reverse();
            assert!(back.is_valid(), "{back:?}");
            assert_eq!(canonical_form(&step.source, 3), canonical_form(&step.target, 3));
        }
    }

    #[test]
    fn short_paths() {
        let limits = SearchLimits::default();
        let path = rewrite_path(&t("<a1 a1 a2>", 2), &t("a1", 2), 2, limits).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path[0].tag(), RuleTag::Contract);

        let path = rewrite_path(&t("<a1 a2 a3>", 3), &t("<a3 a2 a1>", 3), 3, limits).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path[0].tag(), RuleTag::Permute);

        let path = rewrite_path(&t("<<a1 a2 a3> a2 a4>", 4), &t("<a1 a2 <a3 a2 a4>>", 4), 4, limits).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path[0].tag(), RuleTag::AssocRight);
    }

    #[test]
    fn paths_chain_correctly() {
        let limits = SearchLimits::default();
        let from = t("<a2 <a1 a1 a3> a1>", 3);
        let to = t("a1", 3);
        let path = rewrite_path(&from, &to, 3, limits).unwrap();
        assert_eq!(path.first().unwrap().source, from);
        assert_eq!(path.last().unwrap().target, to);
        for w in path.windows(2) {
            assert_eq!(w[0].target, w[1].source);
        }
        assert!(path.iter().all(RewriteStep::is_valid));
    }

    #[test]
    fn bounded_miss_is_reported() {
        let limits = SearchLimits {
            complexity_cap: 1,
            partner_bound: 0,
            max_nodes: 50,
        };
        let err = rewrite_path(&t("a1", 2), &t("a2", 2), 2, limits).unwrap_err();
        assert!(err.explored > 0);
    }
}
