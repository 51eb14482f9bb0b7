//! Finitely generated subgroups of a free group as folded core graphs.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::json::to_spaced_string;
use crate::magnus::{sign, Sign};
use crate::words::{ball, Letter, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StallingsError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("InvalidGraph: {0}")]
    InvalidGraph(String),
}

/// Folded core graph of a subgroup, vertices numbered canonically by
/// breadth-first search from the base vertex `0` with letters explored in the
/// order `x1, x1^-1, x2, ...`. Two graphs are equal iff their subgroups are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StallingsGraph {
    rank: u32,
    num_vertices: usize,
    /// `(source, generator index, target)`, sorted.
    edges: Vec<(usize, u32, usize)>,
    /// `trans[v][letter.order_key()]`
    trans: Vec<Vec<Option<usize>>>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            // keep the smaller id so the base (0) stays its own root
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.0[hi] = lo;
        }
    }
}

fn build_trans(
    rank: u32,
    num_vertices: usize,
    edges: &[(usize, u32, usize)],
) -> Result<Vec<Vec<Option<usize>>>, StallingsError> {
    let mut trans = vec![vec![None; 2 * rank as usize]; num_vertices];
    for &(s, i, t) in edges {
        if i == 0 || i > rank || s >= num_vertices || t >= num_vertices {
            return Err(StallingsError::InvalidGraph(format!(
                "edge ({s}, x{i}, {t}) out of range"
            )));
        }
        let fwd = Letter::pos(i).order_key() as usize;
        let back = Letter::neg(i).order_key() as usize;
        if trans[s][fwd].replace(t).is_some() || trans[t][back].replace(s).is_some() {
            return Err(StallingsError::InvalidGraph(format!(
                "graph is not folded at edge ({s}, x{i}, {t})"
            )));
        }
    }
    Ok(trans)
}

impl StallingsGraph {
    /// Folds the bouquet of generator loops into the core graph of the
    /// subgroup they generate.
    pub fn fold(rank: u32, generators: &[Word]) -> Result<Self, StallingsError> {
        if rank == 0 {
            return Err(WordError::ZeroRank.into());
        }
        let mut n = 1usize;
        let mut raw: Vec<(usize, u32, usize)> = Vec::new();
        for g in generators {
            if g.rank() != rank {
                return Err(WordError::RankMismatch {
                    left: rank,
                    right: g.rank(),
                }
                .into());
            }
            let len = g.len();
            let mut cur = 0;
            for (pos, l) in g.letters().iter().enumerate() {
                let next = if pos + 1 == len {
                    0
                } else {
                    n += 1;
                    n - 1
                };
                if l.is_inverse() {
                    raw.push((next, l.index(), cur));
                } else {
                    raw.push((cur, l.index(), next));
                }
                cur = next;
            }
        }

        let mut uf = UnionFind((0..n).collect());
        loop {
            let mut changed = false;
            let mut out: HashMap<(usize, u32), usize> = HashMap::new();
            let mut inc: HashMap<(usize, u32), usize> = HashMap::new();
            for &(s, i, t) in &raw {
                let (s, t) = (uf.find(s), uf.find(t));
                match out.entry((s, i)) {
                    Entry::Occupied(o) => {
                        let t2 = *o.get();
                        if uf.find(t2) != uf.find(t) {
                            uf.union(t2, t);
                            changed = true;
                        }
                    }
                    Entry::Vacant(v) => {
                        v.insert(t);
                    }
                }
                let (s, t) = (uf.find(s), uf.find(t));
                match inc.entry((t, i)) {
                    Entry::Occupied(o) => {
                        let s2 = *o.get();
                        if uf.find(s2) != uf.find(s) {
                            uf.union(s2, s);
                            changed = true;
                        }
                    }
                    Entry::Vacant(v) => {
                        v.insert(s);
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let mut edges: BTreeSet<(usize, u32, usize)> = raw
            .iter()
            .map(|&(s, i, t)| (uf.find(s), i, uf.find(t)))
            .collect();
        let base = uf.find(0);
        debug_assert_eq!(base, 0);

        // trim hanging trees
        loop {
            let mut degree: HashMap<usize, usize> = HashMap::new();
            for &(s, _, t) in &edges {
                *degree.entry(s).or_default() += 1;
                *degree.entry(t).or_default() += 1;
            }
            let leaves: BTreeSet<usize> = degree
                .iter()
                .filter(|&(&v, &d)| v != base && d <= 1)
                .map(|(&v, _)| v)
                .collect();
            if leaves.is_empty() {
                break;
            }
            edges.retain(|(s, _, t)| !leaves.contains(s) && !leaves.contains(t));
        }

        let mut ids: Vec<usize> = edges.iter().flat_map(|&(s, _, t)| [s, t]).collect();
        ids.push(base);
        ids.sort_unstable();
        ids.dedup();
        let index_of: HashMap<usize, usize> =
            ids.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let compact: Vec<(usize, u32, usize)> = edges
            .iter()
            .map(|&(s, i, t)| (index_of[&s], i, index_of[&t]))
            .collect();
        Self::canonical(rank, ids.len(), index_of[&base], &compact)
    }

    /// Renumbers a folded, connected graph by BFS from `base`.
    fn canonical(
        rank: u32,
        num_vertices: usize,
        base: usize,
        edges: &[(usize, u32, usize)],
    ) -> Result<Self, StallingsError> {
        let trans = build_trans(rank, num_vertices, edges)?;
        let mut new_id = vec![usize::MAX; num_vertices];
        new_id[base] = 0;
        let mut next = 1;
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for &target in trans[v].iter().flatten() {
                if new_id[target] == usize::MAX {
                    new_id[target] = next;
                    next += 1;
                    queue.push_back(target);
                }
            }
        }
        if next != num_vertices {
            return Err(StallingsError::InvalidGraph(
                "graph is not connected".into(),
            ));
        }
        let mut edges: Vec<(usize, u32, usize)> = edges
            .iter()
            .map(|&(s, i, t)| (new_id[s], i, new_id[t]))
            .collect();
        edges.sort_unstable();
        let trans = build_trans(rank, num_vertices, &edges)?;
        Ok(StallingsGraph {
            rank,
            num_vertices,
            edges,
            trans,
        })
    }

    pub fn trivial(rank: u32) -> Self {
        StallingsGraph::fold(rank, &[]).expect("rank is positive")
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(usize, u32, usize)] {
        &self.edges
    }

    pub fn is_trivial(&self) -> bool {
        self.edges.is_empty()
    }

    fn check_rank(&self, rank: u32) -> Result<(), WordError> {
        if self.rank == rank {
            Ok(())
        } else {
            Err(WordError::RankMismatch {
                left: self.rank,
                right: rank,
            })
        }
    }

    /// Whether `w` reads a closed path at the base vertex.
    pub fn contains(&self, w: &Word) -> Result<bool, StallingsError> {
        self.check_rank(w.rank())?;
        Ok(self.accepts(w))
    }

    fn accepts(&self, w: &Word) -> bool {
        let mut v = 0;
        for l in w.letters() {
            match self.trans[v][l.order_key() as usize] {
                Some(t) => v = t,
                None => return false,
            }
        }
        v == 0
    }

    /// Free basis read off a BFS spanning tree: one generator per non-tree edge.
    pub fn loop_generators(&self) -> Vec<Word> {
        let mut path: Vec<Option<Word>> = vec![None; self.num_vertices];
        path[0] = Some(Word::identity(self.rank));
        let mut tree: BTreeSet<(usize, u32, usize)> = BTreeSet::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for (key, target) in self.trans[v].iter().enumerate() {
                let Some(t) = *target else { continue };
                if path[t].is_some() {
                    continue;
                }
                let l = Letter::from_order_key(key as u32);
                let step = Word::from_letters(&[l], self.rank).expect("letter within rank");
                path[t] = Some(path[v].as_ref().unwrap() * &step);
                tree.insert(if l.is_inverse() {
                    (t, l.index(), v)
                } else {
                    (v, l.index(), t)
                });
                queue.push_back(t);
            }
        }
        self.edges
            .iter()
            .filter(|e| !tree.contains(e))
            .map(|&(s, i, t)| {
                let step = Word::generator(i, self.rank).expect("label within rank");
                path[s].as_ref().unwrap() * &step * &path[t].as_ref().unwrap().inverse()
            })
            .collect()
    }

    /// Same subgroup. Canonical numbering makes this a structural comparison.
    pub fn equal(&self, other: &StallingsGraph) -> Result<bool, StallingsError> {
        self.check_rank(other.rank)?;
        Ok(self == other)
    }

    /// The graph of `h G h^-1`.
    pub fn conjugate(&self, h: &Word) -> Result<StallingsGraph, StallingsError> {
        self.check_rank(h.rank())?;
        let gens: Vec<Word> = self
            .loop_generators()
            .iter()
            .map(|g| g.conjugate_by(h))
            .collect();
        StallingsGraph::fold(self.rank, &gens)
    }

    /// Shortlex-least `h` of length at most `radius` with `h G1 h^-1 = G2`.
    /// `None` does not certify that the subgroups are not conjugate.
    pub fn conjugacy_witness(
        &self,
        other: &StallingsGraph,
        radius: usize,
    ) -> Result<Option<Word>, StallingsError> {
        self.check_rank(other.rank)?;
        for h in ball(self.rank, radius)? {
            if self.conjugate(&h)? == *other {
                return Ok(Some(h));
            }
        }
        Ok(None)
    }

    /// `P ∩ G` restricted to the ball, shortlex.
    pub fn cone_intersection_ball(&self, radius: usize) -> Result<Vec<Word>, StallingsError> {
        Ok(ball(self.rank, radius)?
            .into_iter()
            .filter(|w| self.accepts(w) && sign(w) == Sign::Positive)
            .collect())
    }

    pub fn to_json(&self) -> String {
        to_spaced_string(&GraphJson {
            rank: self.rank,
            base: 0,
            edges: self
                .edges
                .iter()
                .map(|&(s, i, t)| (s, format!("x{i}"), t))
                .collect(),
        })
    }

    /// Parses the graph schema and checks that it is the canonical folded core
    /// graph of its own loop generators.
    pub fn from_json(text: &str) -> Result<Self, StallingsError> {
        let parsed: GraphJson =
            serde_json::from_str(text).map_err(|e| StallingsError::InvalidGraph(e.to_string()))?;
        if parsed.rank == 0 {
            return Err(WordError::ZeroRank.into());
        }
        if parsed.base != 0 {
            return Err(StallingsError::InvalidGraph("base vertex must be 0".into()));
        }
        let mut edges = Vec::with_capacity(parsed.edges.len());
        let mut num_vertices = 1;
        for (s, label, t) in &parsed.edges {
            let i: u32 = label
                .strip_prefix('x')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| StallingsError::InvalidGraph(format!("bad label {label:?}")))?;
            num_vertices = num_vertices.max(s + 1).max(t + 1);
            edges.push((*s, i, *t));
        }
        edges.sort_unstable();
        let trans = build_trans(parsed.rank, num_vertices, &edges)?;
        let graph = StallingsGraph {
            rank: parsed.rank,
            num_vertices,
            edges,
            trans,
        };
        let refolded = StallingsGraph::fold(graph.rank, &graph.loop_generators())?;
        if refolded != graph {
            return Err(StallingsError::InvalidGraph(
                "not a canonical folded core graph".into(),
            ));
        }
        Ok(graph)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    rank: u32,
    base: usize,
    edges: Vec<(usize, String, usize)>,
}

pub fn fold(rank: u32, generators: &[Word]) -> Result<StallingsGraph, StallingsError> {
    StallingsGraph::fold(rank, generators)
}

pub fn contains(g: &StallingsGraph, w: &Word) -> Result<bool, StallingsError> {
    g.contains(w)
}

pub fn conjugate_subgroup(g: &StallingsGraph, h: &Word) -> Result<StallingsGraph, StallingsError> {
    g.conjugate(h)
}

pub fn conjugacy_witness(
    g1: &StallingsGraph,
    g2: &StallingsGraph,
    radius: usize,
) -> Result<Option<Word>, StallingsError> {
    g1.conjugacy_witness(g2, radius)
}

pub fn cone_intersection_ball(
    g: &StallingsGraph,
    radius: usize,
) -> Result<Vec<Word>, StallingsError> {
    g.cone_intersection_ball(radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn g(gens: &[&str]) -> StallingsGraph {
        let gens: Vec<Word> = gens.iter().map(|s| w(s)).collect();
        StallingsGraph::fold(2, &gens).unwrap()
    }

    #[test]
    fn fold_examples() {
        let a = g(&["x1"]);
        assert_eq!(a.num_vertices(), 1);
        assert_eq!(a.edges(), &[(0, 1, 0)]);
        assert_eq!(g(&["x1 x1", "x1 x1 x1"]), a);
        let t = g(&[]);
        assert_eq!(t.num_vertices(), 1);
        assert!(t.edges().is_empty());
        assert!(t.contains(&Word::identity(2)).unwrap());
        assert!(!t.contains(&w("x1")).unwrap());
    }

    #[test]
    fn fold_trims_hanging_trees() {
        // x2 x1 x2^-1 has core a single loop hanging off a spike at the base
        let c = g(&["x2 x1 x2^-1"]);
        assert_eq!(c.num_vertices(), 2);
        assert!(c.contains(&w("x2 x1 x1 x2^-1")).unwrap());
        assert!(!c.contains(&w("x1")).unwrap());
        // x1 x1^-1-style cancellation inside the generator list
        assert!(g(&["x1 x2", "x2^-1"]).contains(&w("x1")).unwrap());
    }

    #[test]
    fn contains_examples() {
        assert!(g(&["x1"]).contains(&w("x1 x1 x1")).unwrap());
        assert!(!g(&["x1"]).contains(&w("x2")).unwrap());
        assert!(g(&["x1 x2"]).contains(&w("x1 x2 x1 x2")).unwrap());
        assert!(!g(&["x1 x2"]).contains(&w("x2 x1")).unwrap());
        let wrong = Word::parse("x1", 3).unwrap();
        assert!(g(&["x1"]).contains(&wrong).is_err());
    }

    #[test]
    fn equal_examples() {
        assert!(g(&["x1 x1", "x1 x1 x1"]).equal(&g(&["x1"])).unwrap());
        assert!(!g(&["x1"]).equal(&g(&["x2"])).unwrap());
        let h = g(&["x1 x2 x1^-1", "x2 x2"]);
        assert!(h.equal(&h).unwrap());
        // same subgroup, different generating sets
        assert_eq!(g(&["x1", "x2"]), g(&["x1 x2", "x2"]));
    }

    #[test]
    fn conjugate_examples() {
        let a = g(&["x1"]);
        assert_eq!(a.conjugate(&Word::identity(2)).unwrap(), a);
        let c = a.conjugate(&w("x2")).unwrap();
        assert!(c.contains(&w("x2 x1 x2^-1")).unwrap());
        assert!(!c.contains(&w("x1")).unwrap());
        let h = w("x1 x2^-1");
        assert_eq!(a.conjugate(&h).unwrap().conjugate(&h.inverse()).unwrap(), a);
    }

    #[test]
    fn witness_examples() {
        let a = g(&["x1"]);
        assert_eq!(a.conjugacy_witness(&a, 0).unwrap(), Some(Word::identity(2)));
        assert_eq!(
            a.conjugacy_witness(&g(&["x2 x1 x2^-1"]), 2).unwrap(),
            Some(w("x2"))
        );
        assert_eq!(a.conjugacy_witness(&g(&["x2"]), 3).unwrap(), None);
        assert!(matches!(
            a.conjugacy_witness(&a, 9),
            Err(StallingsError::Word(WordError::RadiusTooLarge { .. }))
        ));
    }

    #[test]
    fn cone_intersection_examples() {
        assert!(g(&[]).cone_intersection_ball(3).unwrap().is_empty());
        assert_eq!(
            g(&["x1"]).cone_intersection_ball(2).unwrap(),
            vec![w("x1"), w("x1 x1")]
        );
        assert!(g(&["x1 x2"]).cone_intersection_ball(1).unwrap().is_empty());
        assert_eq!(
            g(&["x1 x2"]).cone_intersection_ball(2).unwrap(),
            vec![w("x1 x2")]
        );
    }

    #[test]
    fn loop_generators_refold_to_same_graph() {
        for gens in [
            vec!["x1 x2 x1^-1", "x2 x2"],
            vec!["x1 x1 x2", "x2 x1^-1", "x1 x2 x1"],
            vec!["x2^-1 x1 x2 x1"],
        ] {
            let a = g(&gens);
            let lg = a.loop_generators();
            assert_eq!(StallingsGraph::fold(2, &lg).unwrap(), a);
            for x in &lg {
                assert!(a.contains(x).unwrap());
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let a = g(&["x2 x1 x2^-1"]);
        let text = a.to_json();
        assert_eq!(
            text,
            r#"{"rank": 2, "base": 0, "edges": [[0, "x2", 1], [1, "x1", 1]]}"#
        );
        assert_eq!(StallingsGraph::from_json(&text).unwrap(), a);
        // unfolded: two x1 edges leaving vertex 0
        let bad = r#"{"rank": 2, "base": 0, "edges": [[0, "x1", 0], [0, "x1", 1], [1, "x2", 0]]}"#;
        assert!(StallingsGraph::from_json(bad).is_err());
        // hanging vertex, not core
        let spike = r#"{"rank": 2, "base": 0, "edges": [[0, "x1", 0], [0, "x2", 1]]}"#;
        assert!(StallingsGraph::from_json(spike).is_err());
    }
}
