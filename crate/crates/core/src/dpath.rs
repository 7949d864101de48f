//! Shortest dependency paths between a relation headword and a candidate
//! argument headword.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::DependencyTree;
use crate::error::{Error, Result};

/// The dependency edge by which a path node was reached.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Edge {
    /// First node of a path.
    Start,
    /// Moved from a dependent to its head; carries the dependent's label.
    Up(String),
    /// Moved from a head to one of its dependents; carries that label.
    Down(String),
}

impl Edge {
    /// The same edge traversed in the opposite direction.
    pub fn flipped(&self) -> Edge {
        match self {
            Edge::Start => Edge::Start,
            Edge::Up(l) => Edge::Down(l.clone()),
            Edge::Down(l) => Edge::Up(l.clone()),
        }
    }

    /// Feature string used as the dependency-relation input of a node.
    pub fn feature(&self) -> String {
        self.to_string()
    }
}

const START: &str = "START";

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edge::Start => f.write_str(START),
            Edge::Up(l) => write!(f, "{}↑", l),
            Edge::Down(l) => write!(f, "{}↓", l),
        }
    }
}

impl std::str::FromStr for Edge {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == START {
            Ok(Edge::Start)
        } else if let Some(l) = s.strip_suffix('↑') {
            Ok(Edge::Up(l.to_owned()))
        } else if let Some(l) = s.strip_suffix('↓') {
            Ok(Edge::Down(l.to_owned()))
        } else {
            Err(format!("invalid path edge '{}'", s))
        }
    }
}

impl Serialize for Edge {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A node on a dependency path with its input features.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathNode {
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub pos: String,
    pub ne: String,
    pub edge: Edge,
}

/// Node sequence from the relation headword to the argument headword.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepPath {
    pub rel_index: usize,
    pub arg_index: usize,
    pub nodes: Vec<PathNode>,
}

impl DepPath {
    /// Number of nodes (not edges).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Token indices along the path.
    pub fn indices(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.index).collect()
    }

    /// True when every edge points the same way, i.e. one endpoint is an
    /// ancestor of the other.
    pub fn is_linear(&self) -> bool {
        let mut ups = false;
        let mut downs = false;
        for node in &self.nodes {
            match node.edge {
                Edge::Up(_) => ups = true,
                Edge::Down(_) => downs = true,
                Edge::Start => {}
            }
        }
        !(ups && downs)
    }

    /// The path read from the argument back to the relation.
    pub fn reversed(&self) -> DepPath {
        let n = self.nodes.len();
        let mut nodes = Vec::with_capacity(n);
        for k in (0..n).rev() {
            let mut node = self.nodes[k].clone();
            node.edge = if k + 1 < n {
                self.nodes[k + 1].edge.flipped()
            } else {
                Edge::Start
            };
            nodes.push(node);
        }
        DepPath {
            rel_index: self.arg_index,
            arg_index: self.rel_index,
            nodes,
        }
    }
}

impl fmt::Display for DepPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, node) in self.nodes.iter().enumerate() {
            if k > 0 {
                write!(f, " —{}— ", node.edge)?;
            }
            f.write_str(&node.form)?;
        }
        Ok(())
    }
}

/// The unique tree path from `rel` to `arg`.
pub fn shortest_path(tree: &DependencyTree<'_>, rel: usize, arg: usize) -> Result<DepPath> {
    for index in [rel, arg] {
        if !tree.contains(index) {
            return Err(Error::Argument(format!(
                "token {} is not in sentence {} ({} tokens)",
                index,
                tree.sentence().id,
                tree.len()
            )));
        }
    }

    let mut from_rel = vec![rel];
    let mut from_arg = vec![arg];
    let (mut a, mut b) = (rel, arg);
    while tree.depth(a) > tree.depth(b) {
        a = tree.parent(a).expect("non-root node has a parent");
        from_rel.push(a);
    }
    while tree.depth(b) > tree.depth(a) {
        b = tree.parent(b).expect("non-root node has a parent");
        from_arg.push(b);
    }
    while a != b {
        a = tree.parent(a).expect("non-root node has a parent");
        b = tree.parent(b).expect("non-root node has a parent");
        from_rel.push(a);
        from_arg.push(b);
    }
    // Both lists now end in the lowest common ancestor.
    from_arg.pop();

    let mut nodes = Vec::with_capacity(from_rel.len() + from_arg.len());
    let mut prev: Option<usize> = None;
    for index in from_rel.into_iter().chain(from_arg.into_iter().rev()) {
        let token = tree.token(index);
        let edge = match prev {
            None => Edge::Start,
            Some(p) if tree.parent(p) == Some(index) => Edge::Up(tree.token(p).deprel.clone()),
            Some(_) => Edge::Down(token.deprel.clone()),
        };
        nodes.push(PathNode {
            index,
            form: token.form.clone(),
            lemma: token.lemma.clone(),
            pos: token.pos.clone(),
            ne: token.ne.clone(),
            edge,
        });
        prev = Some(index);
    }

    Ok(DepPath {
        rel_index: rel,
        arg_index: arg,
        nodes,
    })
}

pub fn is_linear(path: &DepPath) -> bool {
    path.is_linear()
}

/// Node count of the path.
pub fn path_length(path: &DepPath) -> usize {
    path.len()
}
