//! Decision assignment trees: query one coordinate per internal node, branch
//! on its value, and apply a fixed list of assignments at the leaf.

use serde::{Deserialize, Serialize};

use crate::cells::{Cells, PartialTape, StepStats, Tape};
use crate::error::{Error, Result};
use crate::word::{Domain, Word};

/// Default cap on materialized tree size.
pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DatJson", into = "DatJson")]
pub enum DecisionAssignmentTree {
    Query { coord: usize, children: Vec<DecisionAssignmentTree> },
    Leaf { assignments: Vec<(usize, u32)> },
}

impl DecisionAssignmentTree {
    pub fn leaf(assignments: Vec<(usize, u32)>) -> Self {
        DecisionAssignmentTree::Leaf { assignments }
    }

    pub fn query(coord: usize, children: Vec<DecisionAssignmentTree>) -> Self {
        DecisionAssignmentTree::Query { coord, children }
    }

    /// Checks the structural invariants against `domain`.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let mut on_path = vec![false; domain.width()];
        self.validate_rec(domain, &mut on_path)
    }

    fn validate_rec(&self, domain: &Domain, on_path: &mut [bool]) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(format!("invalid tree: {msg}")));
        match self {
            DecisionAssignmentTree::Leaf { assignments } => {
                for &(c, v) in assignments {
                    if c >= domain.width() {
                        return bad(format!("assignment to coordinate {} beyond width", c + 1));
                    }
                    if v >= domain.radix(c) {
                        return bad(format!("value {v} too large for coordinate {}", c + 1));
                    }
                }
                Ok(())
            }
            DecisionAssignmentTree::Query { coord, children } => {
                let c = *coord;
                if c >= domain.width() {
                    return bad(format!("query of coordinate {} beyond width", c + 1));
                }
                if on_path[c] {
                    return bad(format!("coordinate {} queried twice on one path", c + 1));
                }
                if children.len() != domain.radix(c) as usize {
                    return bad(format!(
                        "coordinate {} has {} children, radix is {}",
                        c + 1,
                        children.len(),
                        domain.radix(c)
                    ));
                }
                on_path[c] = true;
                let res = children.iter().try_for_each(|ch| ch.validate_rec(domain, on_path));
                on_path[c] = false;
                res
            }
        }
    }

    /// Runs the tree on `cells`, reading exactly the coordinates on one
    /// root-to-leaf path.
    pub fn run(&self, cells: &mut dyn Cells) {
        let mut node = self;
        loop {
            match node {
                DecisionAssignmentTree::Query { coord, children } => {
                    let v = cells.read(*coord) as usize;
                    node = &children[v];
                }
                DecisionAssignmentTree::Leaf { assignments } => {
                    for &(c, v) in assignments {
                        cells.write(c, v);
                    }
                    return;
                }
            }
        }
    }

    /// Longest root-to-leaf path, counted in internal nodes.
    pub fn read_complexity(&self) -> usize {
        match self {
            DecisionAssignmentTree::Leaf { .. } => 0,
            DecisionAssignmentTree::Query { children, .. } => {
                1 + children.iter().map(|c| c.read_complexity()).max().unwrap_or(0)
            }
        }
    }

    /// Largest assignment list at any leaf.
    pub fn write_complexity(&self) -> usize {
        match self {
            DecisionAssignmentTree::Leaf { assignments } => assignments.len(),
            DecisionAssignmentTree::Query { children, .. } => {
                children.iter().map(|c| c.write_complexity()).max().unwrap_or(0)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            DecisionAssignmentTree::Leaf { .. } => 1,
            DecisionAssignmentTree::Query { children, .. } => {
                1 + children.iter().map(|c| c.node_count()).sum::<usize>()
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            DecisionAssignmentTree::Leaf { .. } => 1,
            DecisionAssignmentTree::Query { children, .. } => children.iter().map(|c| c.leaf_count()).sum(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("tree serializes")
    }
}

/// Evaluates `tree` on `word`; reads are the length of the path taken and
/// writes the number of assignments at the reached leaf.
pub fn dat_eval(tree: &DecisionAssignmentTree, word: &Word) -> (Word, StepStats) {
    let mut tape = Tape::new(word.digits().to_vec());
    tape.begin();
    tree.run(&mut tape);
    let stats = tape.stats();
    (Word(tape.into_contents()), stats)
}

/// Builds the decision assignment tree of a step function by re-running it
/// on partially known inputs and branching on the first unknown read.
///
/// `step` must be deterministic and may depend only on values it reads.
pub fn materialize<F>(domain: &Domain, step: F, node_limit: usize) -> Result<DecisionAssignmentTree>
where
    F: Fn(&mut dyn Cells),
{
    let mut tape = PartialTape::new(domain.width());
    let mut count = 0usize;
    build(domain, &step, &mut tape, &mut count, node_limit)
}

fn build<F>(
    domain: &Domain,
    step: &F,
    tape: &mut PartialTape,
    count: &mut usize,
    limit: usize,
) -> Result<DecisionAssignmentTree>
where
    F: Fn(&mut dyn Cells),
{
    *count += 1;
    if *count > limit {
        return Err(Error::ResourceBound(format!("decision tree exceeds {limit} nodes")));
    }
    tape.reset();
    step(tape);
    match tape.pending() {
        None => Ok(DecisionAssignmentTree::Leaf { assignments: tape.assignments() }),
        Some(coord) => {
            let mut children = Vec::with_capacity(domain.radix(coord) as usize);
            for v in 0..domain.radix(coord) {
                tape.assume(coord, v);
                children.push(build(domain, step, tape, count, limit)?);
            }
            tape.forget(coord);
            Ok(DecisionAssignmentTree::Query { coord, children })
        }
    }
}

/// JSON shape with 1-based coordinates.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DatJson {
    Query { query: usize, children: Vec<DatJson> },
    Leaf { assign: Vec<(usize, u32)> },
}

impl From<DecisionAssignmentTree> for DatJson {
    fn from(t: DecisionAssignmentTree) -> Self {
        match t {
            DecisionAssignmentTree::Query { coord, children } => DatJson::Query {
                query: coord + 1,
                children: children.into_iter().map(DatJson::from).collect(),
            },
            DecisionAssignmentTree::Leaf { assignments } => DatJson::Leaf {
                assign: assignments.into_iter().map(|(c, v)| (c + 1, v)).collect(),
            },
        }
    }
}

impl TryFrom<DatJson> for DecisionAssignmentTree {
    type Error = String;

    fn try_from(j: DatJson) -> std::result::Result<Self, String> {
        match j {
            DatJson::Query { query, children } => {
                if query == 0 {
                    return Err("coordinates are 1-based".into());
                }
                Ok(DecisionAssignmentTree::Query {
                    coord: query - 1,
                    children: children
                        .into_iter()
                        .map(DecisionAssignmentTree::try_from)
                        .collect::<std::result::Result<_, _>>()?,
                })
            }
            DatJson::Leaf { assign } => {
                if assign.iter().any(|&(c, _)| c == 0) {
                    return Err("coordinates are 1-based".into());
                }
                Ok(DecisionAssignmentTree::Leaf { assignments: assign.into_iter().map(|(c, v)| (c - 1, v)).collect() })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flip() -> DecisionAssignmentTree {
        DecisionAssignmentTree::query(0, vec![DecisionAssignmentTree::leaf(vec![(0, 1)]), DecisionAssignmentTree::leaf(vec![(0, 0)])])
    }

    #[test]
    fn single_bit_flip() {
        let (w, s) = dat_eval(&flip(), &Word(vec![0]));
        assert_eq!(w, Word(vec![1]));
        assert_eq!(s, StepStats { reads: 1, writes: 1 });
    }

    #[test]
    fn empty_leaf_is_identity() {
        let t = DecisionAssignmentTree::leaf(vec![]);
        let (w, s) = dat_eval(&t, &Word(vec![1, 2]));
        assert_eq!(w, Word(vec![1, 2]));
        assert_eq!(s, StepStats::default());
    }

    #[test]
    fn validation_catches_each_invariant() {
        let d = Domain::uniform(2, 2).unwrap();
        assert!(flip().validate(&d).is_ok());
        let short = DecisionAssignmentTree::query(0, vec![DecisionAssignmentTree::leaf(vec![])]);
        assert!(short.validate(&d).is_err());
        let twice = DecisionAssignmentTree::query(0, vec![flip(), flip()]);
        assert!(twice.validate(&d).is_err());
        let big = DecisionAssignmentTree::leaf(vec![(1, 2)]);
        assert!(big.validate(&d).is_err());
    }

    #[test]
    fn json_uses_one_based_coordinates() {
        let j = flip().to_json();
        assert_eq!(j, serde_json::json!({"query": 1, "children": [{"assign": [[1, 1]]}, {"assign": [[1, 0]]}]}));
        let back: DecisionAssignmentTree = serde_json::from_value(j).unwrap();
        assert_eq!(back, flip());
        assert!(serde_json::from_value::<DecisionAssignmentTree>(serde_json::json!({"assign": [[0, 1]]})).is_err());
    }

    #[test]
    fn materialize_binary_increment() {
        // +1 on two bits, least significant bit at coordinate 2.
        let d = Domain::uniform(2, 2).unwrap();
        let tree = materialize(
            &d,
            |c: &mut dyn Cells| {
                let lo = c.read(1);
                if lo == 0 {
                    c.write(1, 1);
                } else {
                    let hi = c.read(0);
                    c.write(1, 0);
                    c.write(0, 1 - hi);
                }
            },
            100,
        )
        .unwrap();
        tree.validate(&d).unwrap();
        assert_eq!(tree.read_complexity(), 2);
        assert_eq!(tree.write_complexity(), 2);
        assert_eq!(tree.leaf_count(), 3);
        assert_eq!(dat_eval(&tree, &Word(vec![0, 1])).0, Word(vec![1, 0]));
        assert!(materialize(&d, |c: &mut dyn Cells| { c.read(0); c.read(1); }, 2).is_err());
    }
}
