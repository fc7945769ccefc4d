use crate::error::{Error, Result};
use crate::sign::Sign;
use num_complex::Complex64;
use std::fmt;

/// Ordered ternary tree with signed nodes, stored flat in preorder.
///
/// Every node is either a leaf or has exactly three ordered children.
/// The root carries the tree's sign; the children of a sign-ζ node carry
/// signs (ζ, −ζ, ζ) left to right, so all node signs are determined by the
/// root sign and the shape.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SignedTree {
    nodes: Vec<TreeNode>,
}

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct TreeNode {
    pub parent: Option<u32>,
    /// Preorder ids of the three ordered children, `None` for a leaf.
    pub children: Option<[u32; 3]>,
    pub sign: Sign,
}

impl SignedTree {
    /// Single leaf (the trivial tree).
    pub fn trivial(sign: Sign) -> SignedTree {
        SignedTree {
            nodes: vec![TreeNode {
                parent: None,
                children: None,
                sign,
            }],
        }
    }

    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<SignedTree> {
        let t = SignedTree { nodes };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::invalid("tree has no nodes"));
        }
        if self.nodes[0].parent.is_some() {
            return Err(Error::invalid("root must have no parent"));
        }
        let mut seen_children = 0usize;
        for (id, node) in self.nodes.iter().enumerate() {
            if let Some(ch) = node.children {
                seen_children += 3;
                if ch[0] as usize != id + 1 {
                    return Err(Error::invalid("children not in preorder"));
                }
                for (pos, &c) in ch.iter().enumerate() {
                    let c = c as usize;
                    if c >= self.nodes.len() || self.nodes[c].parent != Some(id as u32) {
                        return Err(Error::invalid("child/parent mismatch"));
                    }
                    let want = node.sign.child_signs()[pos];
                    if self.nodes[c].sign != want {
                        return Err(Error::invalid("child sign violates (ζ,−ζ,ζ) rule"));
                    }
                }
            }
        }
        if seen_children + 1 != self.nodes.len() {
            return Err(Error::invalid("node count inconsistent with child lists"));
        }
        Ok(())
    }

    pub fn sign(&self) -> Sign {
        self.nodes[0].sign
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of branching nodes (the tree's order).
    pub fn order(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_some()).count()
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.nodes[id].children.is_none()
    }

    pub fn is_trivial(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn sign_of(&self, id: usize) -> Sign {
        self.nodes[id].sign
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent.map(|p| p as usize)
    }

    pub fn children(&self, id: usize) -> Option<[usize; 3]> {
        self.nodes[id].children.map(|c| c.map(|x| x as usize))
    }

    /// Position (0, 1, 2) of `id` among its parent's children.
    pub fn child_position(&self, id: usize) -> Option<usize> {
        let p = self.parent(id)?;
        self.children(p).unwrap().iter().position(|&c| c == id)
    }

    /// Preorder ids of all leaves.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.is_leaf(i)).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_none()).count()
    }

    pub fn branching_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| !self.is_leaf(i))
            .collect()
    }

    /// True if `anc` lies on the path from the root to `id` (inclusive).
    pub fn is_ancestor_or_self(&self, anc: usize, id: usize) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == anc {
                return true;
            }
            cur = self.parent(c);
        }
        false
    }

    fn subtree_size(&self, id: usize) -> usize {
        match self.children(id) {
            None => 1,
            Some([a, b, c]) => {
                1 + self.subtree_size(a) + self.subtree_size(b) + self.subtree_size(c)
            }
        }
    }

    /// Half-open preorder range [id, end) spanned by the subtree at `id`.
    pub fn subtree_range(&self, id: usize) -> std::ops::Range<usize> {
        id..id + self.subtree_size(id)
    }

    /// Copy of the subtree rooted at `id` as a standalone tree.
    pub fn subtree(&self, id: usize) -> SignedTree {
        let range = self.subtree_range(id);
        let base = range.start as u32;
        let nodes = self.nodes[range]
            .iter()
            .enumerate()
            .map(|(i, n)| TreeNode {
                parent: if i == 0 { None } else { n.parent.map(|p| p - base) },
                children: n.children.map(|c| c.map(|x| x - base)),
                sign: n.sign,
            })
            .collect();
        SignedTree { nodes }
    }

    /// Tree whose root carries `sign` and whose ordered children are the
    /// roots of `subs` (their signs must fit the (ζ, −ζ, ζ) slot pattern).
    pub fn graft(sign: Sign, subs: [&SignedTree; 3]) -> Result<SignedTree> {
        let mut nodes = vec![TreeNode {
            parent: None,
            children: Some([0; 3]),
            sign,
        }];
        let mut child_ids = [0u32; 3];
        for (i, s) in subs.iter().enumerate() {
            let base = nodes.len() as u32;
            child_ids[i] = base;
            for (j, n) in s.nodes.iter().enumerate() {
                nodes.push(TreeNode {
                    parent: if j == 0 { Some(0) } else { n.parent.map(|p| p + base) },
                    children: n.children.map(|c| c.map(|x| x + base)),
                    sign: n.sign,
                });
            }
        }
        nodes[0].children = Some(child_ids);
        SignedTree::from_nodes(nodes)
    }

    /// Replace the subtree at `id` with `repl` (signs must match).
    pub fn replace_subtree(&self, id: usize, repl: &SignedTree) -> Result<SignedTree> {
        if self.sign_of(id) != repl.sign() {
            return Err(Error::invalid("replacement sign mismatch"));
        }
        let range = self.subtree_range(id);
        let old_len = range.end - range.start;
        let new_len = repl.nodes.len();
        let shift = |x: u32| -> u32 {
            if x as usize >= range.end {
                (x as usize + new_len - old_len) as u32
            } else {
                x
            }
        };
        let mut nodes = Vec::with_capacity(self.nodes.len() - old_len + new_len);
        for n in &self.nodes[..range.start] {
            nodes.push(TreeNode {
                parent: n.parent.map(shift),
                children: n.children.map(|c| c.map(shift)),
                sign: n.sign,
            });
        }
        let base = range.start as u32;
        for (i, n) in repl.nodes.iter().enumerate() {
            nodes.push(TreeNode {
                parent: if i == 0 {
                    self.nodes[range.start].parent
                } else {
                    n.parent.map(|p| p + base)
                },
                children: n.children.map(|c| c.map(|x| x + base)),
                sign: n.sign,
            });
        }
        for n in &self.nodes[range.end..] {
            nodes.push(TreeNode {
                parent: n.parent.map(shift),
                children: n.children.map(|c| c.map(shift)),
                sign: n.sign,
            });
        }
        SignedTree::from_nodes(nodes)
    }

    /// Same tree with every node sign flipped (the conjugate tree).
    pub fn conjugate(&self) -> SignedTree {
        SignedTree {
            nodes: self
                .nodes
                .iter()
                .map(|n| TreeNode { sign: -n.sign, ..*n })
                .collect(),
        }
    }

    /// ζ(T) = Π over branching nodes of (i · ζ_node). Always one of ±1, ±i.
    pub fn zeta_product(&self) -> Complex64 {
        let mut quarter_turns: u32 = 0; // exponent of i, mod 4
        for n in &self.nodes {
            if n.children.is_some() {
                quarter_turns += if n.sign == Sign::Plus { 1 } else { 3 };
            }
        }
        match quarter_turns % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Shape-only equality (ignores signs).
    pub fn same_shape(&self, other: &SignedTree) -> bool {
        self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| a.children.is_some() == b.children.is_some())
    }
}

/// Number of ordered ternary trees with `order` branching nodes:
/// binom(3n, n) / (2n + 1).
pub fn tree_census(order: usize) -> u128 {
    let n = order as u128;
    let mut num: u128 = 1;
    for i in 1..=n {
        num = num * (2 * n + i) / i; // binom(2n+i, i) stays integral at each step
    }
    num / (2 * n + 1)
}

/// Unsigned tree shape, used only during enumeration.
#[derive(Clone)]
enum Shape {
    Leaf,
    Branch(Box<[Shape; 3]>),
}

fn shapes(order: usize, cache: &mut Vec<Option<Vec<Shape>>>) -> Vec<Shape> {
    if let Some(Some(v)) = cache.get(order) {
        return v.clone();
    }
    let mut out = Vec::new();
    if order == 0 {
        out.push(Shape::Leaf);
    } else {
        for n1 in 0..order {
            for n2 in 0..order - n1 {
                let n3 = order - 1 - n1 - n2;
                let s1 = shapes(n1, cache);
                let s2 = shapes(n2, cache);
                let s3 = shapes(n3, cache);
                for a in &s1 {
                    for b in &s2 {
                        for c in &s3 {
                            out.push(Shape::Branch(Box::new([
                                a.clone(),
                                b.clone(),
                                c.clone(),
                            ])));
                        }
                    }
                }
            }
        }
    }
    if cache.len() <= order {
        cache.resize(order + 1, None);
    }
    cache[order] = Some(out.clone());
    out
}

fn flatten(shape: &Shape, parent: Option<u32>, sign: Sign, nodes: &mut Vec<TreeNode>) {
    let id = nodes.len() as u32;
    match shape {
        Shape::Leaf => nodes.push(TreeNode {
            parent,
            children: None,
            sign,
        }),
        Shape::Branch(kids) => {
            nodes.push(TreeNode {
                parent,
                children: Some([0; 3]),
                sign,
            });
            let signs = sign.child_signs();
            let mut ch = [0u32; 3];
            for i in 0..3 {
                ch[i] = nodes.len() as u32;
                flatten(&kids[i], Some(id), signs[i], nodes);
            }
            nodes[id as usize].children = Some(ch);
        }
    }
}

/// All tree shapes of the given order, root carrying `sign`, in a fixed
/// deterministic order (child split sizes enumerated lexicographically).
pub fn enumerate_trees(order: usize, sign: Sign, cap: usize) -> Result<Vec<SignedTree>> {
    let total = tree_census(order);
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            produced: usize::try_from(total).unwrap_or(usize::MAX),
            cap,
        });
    }
    let mut cache = Vec::new();
    let out: Vec<SignedTree> = shapes(order, &mut cache)
        .iter()
        .map(|s| {
            let mut nodes = Vec::new();
            flatten(s, None, sign, &mut nodes);
            SignedTree { nodes }
        })
        .collect();
    debug_assert_eq!(out.len() as u128, total);
    Ok(out)
}

impl fmt::Display for SignedTree {
    /// Text form: sign then shape, leaf = `.`, branching = `(a,b,c)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign())?;
        write_shape(self, 0, f)
    }
}

fn write_shape(t: &SignedTree, id: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t.children(id) {
        None => f.write_str("."),
        Some([a, b, c]) => {
            f.write_str("(")?;
            write_shape(t, a, f)?;
            f.write_str(",")?;
            write_shape(t, b, f)?;
            f.write_str(",")?;
            write_shape(t, c, f)?;
            f.write_str(")")
        }
    }
}

impl std::str::FromStr for SignedTree {
    type Err = Error;
    fn from_str(s: &str) -> Result<SignedTree> {
        let s = s.trim();
        let mut chars = s.chars();
        let sign = match chars.next() {
            Some('+') => Sign::Plus,
            Some('-') => Sign::Minus,
            _ => return Err(Error::Parse(format!("tree must start with + or -: {s:?}"))),
        };
        let rest: String = chars.collect();
        let mut pos = 0;
        let mut nodes = Vec::new();
        parse_shape(rest.as_bytes(), &mut pos, None, sign, &mut nodes)?;
        if pos != rest.len() {
            return Err(Error::Parse(format!(
                "trailing characters after tree: {:?}",
                &rest[pos..]
            )));
        }
        SignedTree::from_nodes(nodes)
    }
}

fn parse_shape(
    b: &[u8],
    pos: &mut usize,
    parent: Option<u32>,
    sign: Sign,
    nodes: &mut Vec<TreeNode>,
) -> Result<u32> {
    let id = nodes.len() as u32;
    match b.get(*pos) {
        Some(b'.') => {
            *pos += 1;
            nodes.push(TreeNode {
                parent,
                children: None,
                sign,
            });
            Ok(id)
        }
        Some(b'(') => {
            *pos += 1;
            nodes.push(TreeNode {
                parent,
                children: Some([0; 3]),
                sign,
            });
            let signs = sign.child_signs();
            let mut ch = [0u32; 3];
            for (i, &cs) in signs.iter().enumerate() {
                if i > 0 {
                    if b.get(*pos) != Some(&b',') {
                        return Err(Error::Parse("expected ','".into()));
                    }
                    *pos += 1;
                }
                ch[i] = parse_shape(b, pos, Some(id), cs, nodes)?;
            }
            if b.get(*pos) != Some(&b')') {
                return Err(Error::Parse("expected ')'".into()));
            }
            *pos += 1;
            nodes[id as usize].children = Some(ch);
            Ok(id)
        }
        other => Err(Error::Parse(format!(
            "expected '.' or '(' at byte {}, found {:?}",
            *pos,
            other.map(|&c| c as char)
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_closed_form() {
        assert_eq!(
            (0..6).map(tree_census).collect::<Vec<_>>(),
            vec![1, 1, 3, 12, 55, 273]
        );
    }

    #[test]
    fn enumeration_matches_census_and_invariants() {
        for n in 0..6 {
            let trees = enumerate_trees(n, Sign::Plus, 1_000_000).unwrap();
            assert_eq!(trees.len() as u128, tree_census(n), "order {n}");
            let set: std::collections::HashSet<_> = trees.iter().collect();
            assert_eq!(set.len(), trees.len(), "order {n} has duplicate shapes");
            for t in &trees {
                assert_eq!(t.order(), n);
                assert_eq!(t.leaf_count(), 2 * n + 1);
                assert_eq!(t.node_count(), 3 * n + 1);
                t.validate().unwrap();
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        match enumerate_trees(4, Sign::Plus, 10) {
            Err(Error::CapExceeded { produced, cap }) => {
                assert_eq!(produced, 55);
                assert_eq!(cap, 10);
            }
            other => panic!("expected CapExceeded, got {other:?}"),
        }
    }

    #[test]
    fn signs_follow_alternation_rule() {
        for t in enumerate_trees(3, Sign::Minus, 100).unwrap() {
            for id in t.branching_nodes() {
                let [a, b, c] = t.children(id).unwrap();
                let s = t.sign_of(id);
                assert_eq!(t.sign_of(a), s);
                assert_eq!(t.sign_of(b), -s);
                assert_eq!(t.sign_of(c), s);
            }
        }
    }

    #[test]
    fn conjugate_is_involution_and_flips_zeta() {
        for t in enumerate_trees(3, Sign::Plus, 100).unwrap() {
            let c = t.conjugate();
            assert_eq!(c.conjugate(), t);
            assert_eq!(c.sign(), Sign::Minus);
            let z = t.zeta_product();
            let zc = c.zeta_product();
            assert_eq!(zc, z.conj());
        }
    }

    #[test]
    fn zeta_product_small_cases() {
        assert_eq!(
            SignedTree::trivial(Sign::Plus).zeta_product(),
            Complex64::new(1.0, 0.0)
        );
        let t: SignedTree = "+(.,.,.)".parse().unwrap();
        assert_eq!(t.zeta_product(), Complex64::new(0.0, 1.0));
        let t: SignedTree = "-(.,.,.)".parse().unwrap();
        assert_eq!(t.zeta_product(), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn display_parse_round_trip() {
        for n in 0..5 {
            for t in enumerate_trees(n, Sign::Plus, 1000).unwrap() {
                let s = t.to_string();
                let back: SignedTree = s.parse().unwrap();
                assert_eq!(back, t, "round trip failed for {s}");
            }
        }
    }

    #[test]
    fn subtree_and_replace_are_inverse() {
        let t: SignedTree = "+((.,.,.),(.,(.,.,.),.),.)".parse().unwrap();
        for id in 0..t.node_count() {
            let sub = t.subtree(id);
            assert_eq!(sub.sign(), t.sign_of(id));
            let back = t.replace_subtree(id, &sub).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn replace_subtree_grows_tree() {
        let t: SignedTree = "+(.,.,.)".parse().unwrap();
        let repl: SignedTree = "-(.,.,.)".parse().unwrap();
        let grown = t.replace_subtree(2, &repl).unwrap();
        assert_eq!(grown.order(), 2);
        assert_eq!(grown.to_string(), "+(.,(.,.,.),.)");
        let bad: SignedTree = "+(.,.,.)".parse().unwrap();
        assert!(t.replace_subtree(2, &bad).is_err());
    }

    #[test]
    fn subtree_range_is_contiguous() {
        let t: SignedTree = "+((.,.,.),.,(.,.,.))".parse().unwrap();
        assert_eq!(t.subtree_range(0), 0..t.node_count());
        assert_eq!(t.subtree_range(1), 1..5);
        let last_branch = t.branching_nodes()[2];
        assert_eq!(t.subtree_range(last_branch).len(), 4);
    }
}
