//! Nested trees of disjoint closed balls with counted branching.

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dist2, fmt_point, parse_point, Point};
use crate::nested::net::NetGenerator;
use crate::nested::schedule::{radius_b, Schedule, ScheduleMode};
use crate::scalar::{fmt_rational, parse_rational, Rational};
use crate::stage::StageError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("packing failure at level {level}: parent {parent} has {found} candidates, needs {needed}")]
    PackingFailure {
        level: usize,
        parent: usize,
        found: usize,
        needed: usize,
    },
    #[error("level {0} of the schedule has no exact value and cannot be materialized")]
    NotMaterializable(usize),
    #[error("tree would exceed {0} nodes")]
    TooLarge(usize),
    #[error("net generator failed: {0}")]
    Generator(#[from] StageError),
}

pub const MAX_TREE_NODES: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BallNode {
    pub center: Point,
    pub radius: Rational,
    pub level: usize,
    pub children: Vec<BallNode>,
}

impl BallNode {
    fn count_leaves(&self) -> usize {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(BallNode::count_leaves).sum()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallTree {
    pub root: BallNode,
    pub schedule: Schedule,
    /// `b_0 = 1, b_1, .., b_k`.
    pub radii: Vec<Rational>,
    /// Children per node at each parent level `0..k`.
    pub child_counts: Vec<usize>,
    pub c: Rational,
    pub big_c: Rational,
}

/// `ceil(c b^n h^-n)`.
pub fn child_count(c: &Rational, b: &Rational, h: &Rational, n: usize) -> usize {
    let ratio = b / h;
    let v = (0..n).fold(c.clone(), |acc, _| acc * &ratio);
    v.ceil().to_integer().to_usize().unwrap_or(usize::MAX)
}

/// Grows the tree level by level: each parent keeps the first (lexicographic)
/// `ceil(c b_i^n h_{i+1}^-n)` candidates whose closed balls fit inside it.
pub fn build_tree(
    schedule: &Schedule,
    root_center: Point,
    generator: &dyn NetGenerator,
    constants: (Rational, Rational),
) -> Result<BallTree, TreeError> {
    let (c, big_c) = constants;
    let n = schedule.n;
    let mut radii = vec![Rational::one()];
    let mut scales = Vec::new();
    for j in 1..=schedule.len() {
        let h = schedule.h(j).ok_or(TreeError::NotMaterializable(j))?.clone();
        radii.push(
            radius_b(&h, schedule.d)
                .map_err(|_| TreeError::NotMaterializable(j))?
                .value,
        );
        scales.push(h);
    }
    let child_counts: Vec<usize> = (0..schedule.len())
        .map(|i| child_count(&c, &radii[i], &scales[i], n))
        .collect();
    let mut total = 1usize;
    let mut width = 1usize;
    for k in &child_counts {
        width = width.saturating_mul(*k);
        total = total.saturating_add(width);
    }
    if total > MAX_TREE_NODES {
        return Err(TreeError::TooLarge(MAX_TREE_NODES));
    }
    let mut root = BallNode {
        center: root_center,
        radius: Rational::one(),
        level: 0,
        children: Vec::new(),
    };
    let mut frontier: Vec<&mut BallNode> = vec![&mut root];
    for (i, &count) in child_counts.iter().enumerate() {
        let reach = &radii[i] - &radii[i + 1];
        let mut next = Vec::new();
        for (parent_idx, parent) in frontier.into_iter().enumerate() {
            let found = generator.candidates(&scales[i], &parent.center, &reach, count)?;
            if found.len() < count {
                return Err(TreeError::PackingFailure {
                    level: i + 1,
                    parent: parent_idx,
                    found: found.len(),
                    needed: count,
                });
            }
            parent.children = found
                .into_iter()
                .map(|center| BallNode {
                    center,
                    radius: radii[i + 1].clone(),
                    level: i + 1,
                    children: Vec::new(),
                })
                .collect();
            next.extend(parent.children.iter_mut());
        }
        frontier = next;
    }
    Ok(BallTree {
        root,
        schedule: schedule.clone(),
        radii,
        child_counts,
        c,
        big_c,
    })
}

impl BallTree {
    pub fn depth(&self) -> usize {
        self.child_counts.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.count_leaves()
    }

    /// The product of per-level child counts.
    pub fn predicted_leaf_count(&self) -> usize {
        self.child_counts.iter().product()
    }

    pub fn leaf_radius(&self) -> &Rational {
        self.radii.last().expect("root radius present")
    }

    pub fn level_nodes(&self, level: usize) -> Vec<&BallNode> {
        let mut current = vec![&self.root];
        for _ in 0..level {
            current = current.iter().flat_map(|n| n.children.iter()).collect();
        }
        current
    }

    pub fn leaves(&self) -> Vec<&BallNode> {
        self.level_nodes(self.depth())
    }

    pub fn leaf_centers(&self) -> Vec<Point> {
        self.leaves().into_iter().map(|n| n.center.clone()).collect()
    }

    /// Exact check that every child ball lies inside its parent ball.
    pub fn children_contained(&self) -> bool {
        fn ok(node: &BallNode) -> bool {
            node.children.iter().all(|ch| {
                let slack = &node.radius - &ch.radius;
                slack >= Rational::zero() && dist2(&node.center, &ch.center) <= &slack * &slack && ok(ch)
            })
        }
        ok(&self.root)
    }

    /// Exact check that balls on each level are pairwise disjoint.
    pub fn levels_disjoint(&self) -> bool {
        (1..=self.depth()).all(|level| {
            let mut nodes = self.level_nodes(level);
            nodes.sort_by(|a, b| a.center.cmp(&b.center));
            let r = &self.radii[level];
            let gap2 = (r + r) * (r + r);
            // sweep on the first coordinate: only neighbours within 2r matter
            (0..nodes.len()).all(|i| {
                nodes[i + 1..]
                    .iter()
                    .take_while(|m| &m.center[0] - &nodes[i].center[0] <= r + r)
                    .all(|m| dist2(&m.center, &nodes[i].center) > gap2)
            })
        })
    }

    pub fn to_doc(&self) -> TreeDoc {
        TreeDoc {
            n: self.schedule.n,
            d: self.schedule.d,
            mode: self.schedule.mode,
            scales: (1..=self.schedule.len())
                .map(|j| self.schedule.h(j).map(fmt_rational).unwrap_or_default())
                .collect(),
            radii: self.radii.iter().map(fmt_rational).collect(),
            child_counts: self.child_counts.clone(),
            leaf_count: self.leaf_count(),
            c: fmt_rational(&self.c),
            big_c: fmt_rational(&self.big_c),
            root: NodeDoc::from(&self.root),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub center: Vec<String>,
    pub radius: String,
    pub level: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeDoc>,
}

impl From<&BallNode> for NodeDoc {
    fn from(node: &BallNode) -> Self {
        NodeDoc {
            center: fmt_point(&node.center),
            radius: fmt_rational(&node.radius),
            level: node.level,
            children: node.children.iter().map(NodeDoc::from).collect(),
        }
    }
}

impl NodeDoc {
    pub fn to_node(&self) -> Option<BallNode> {
        Some(BallNode {
            center: parse_point(&self.center)?,
            radius: parse_rational(&self.radius)?,
            level: self.level,
            children: self.children.iter().map(NodeDoc::to_node).collect::<Option<_>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub n: usize,
    pub d: u32,
    pub mode: ScheduleMode,
    pub scales: Vec<String>,
    pub radii: Vec<String>,
    pub child_counts: Vec<usize>,
    pub leaf_count: usize,
    pub c: String,
    #[serde(rename = "C")]
    pub big_c: String,
    pub root: NodeDoc,
}
