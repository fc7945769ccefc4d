use crate::combinatorics::garden::{enumerate_paired_trees, Garden, Loc};
use crate::combinatorics::layering::Layering;
use crate::error::{Error, Result};
use crate::sign::Sign;

/// Decomposition of a regular couple per the structure theorem: a nontrivial
/// regular couple is exactly one of
///
/// - type 1: a two-generation mini-couple whose three leaf pairs carry
///   further regular couples;
/// - type 2: two chains (one per root) whose lone-leaf pair carries a
///   type-1-or-trivial couple, with each chain-node pair carrying two
///   regular couples on its crosswise-paired children.
///
/// All node references are locations in the ambient garden.
#[derive(Clone, Debug)]
pub enum RegularStructure {
    /// A plain leaf pair.
    Trivial { plus: Loc, minus: Loc },
    Type1 {
        plus_root: Loc,
        minus_root: Loc,
        /// Couples at the (left, middle, right) child blocks of the + root.
        subs: Vec<RegularStructure>,
    },
    Type2 {
        plus_root: Loc,
        minus_root: Loc,
        /// Chains hanging from the + and − roots (either may be empty, not both).
        chains: [ChainStructure; 2],
        /// Couple at the two chains' lone-leaf positions (trivial or type 1).
        lp: Box<RegularStructure>,
    },
}

/// One chain: consecutive branching nodes n_1..n_2m (each the parent of the
/// next), whose non-chain children pair up blockwise across a legal partition
/// of {0..2m-1}; the specified child of n_2m below the chain is `lone_child`.
#[derive(Clone, Debug)]
pub struct ChainStructure {
    pub nodes: Vec<Loc>,
    pub lone_child: Loc,
    /// Legal (non-crossing) pairing of chain-node indices, ordered by first
    /// element; (a, b) always has a < b.
    pub partition: Vec<(usize, usize)>,
    /// Per partition pair: the two couples on the crosswise-paired children,
    /// ordered by the first node's child order.
    pub subs: Vec<[RegularStructure; 2]>,
}

/// Regular paired tree: a single chain from the root down to the lone leaf.
#[derive(Clone, Debug)]
pub enum RegularTreeStructure {
    /// The lone leaf alone (order 0).
    Trivial { lone: Loc },
    Chain(ChainStructure),
}

impl RegularStructure {
    pub fn roots(&self) -> (Loc, Loc) {
        match self {
            RegularStructure::Trivial { plus, minus } => (*plus, *minus),
            RegularStructure::Type1 {
                plus_root,
                minus_root,
                ..
            }
            | RegularStructure::Type2 {
                plus_root,
                minus_root,
                ..
            } => (*plus_root, *minus_root),
        }
    }

    /// Links of branching nodes: type 1 links the two roots, type 2 links
    /// each partition pair of chain nodes; sub-couples contribute
    /// recursively. Every branching node lies in exactly one link.
    pub fn links(&self) -> Vec<(Loc, Loc)> {
        let mut out = Vec::new();
        self.collect_links(&mut out);
        out
    }

    fn collect_links(&self, out: &mut Vec<(Loc, Loc)>) {
        match self {
            RegularStructure::Trivial { .. } => {}
            RegularStructure::Type1 {
                plus_root,
                minus_root,
                subs,
            } => {
                out.push((*plus_root, *minus_root));
                for s in subs {
                    s.collect_links(out);
                }
            }
            RegularStructure::Type2 { chains, lp, .. } => {
                for c in chains {
                    c.collect_links(out);
                }
                lp.collect_links(out);
            }
        }
    }

    /// The distinguished node of each link: the + root for type-1 links, the
    /// smaller-index chain node for chain links.
    pub fn selected_nodes(&self) -> Vec<Loc> {
        let mut out = Vec::new();
        self.collect_selected(&mut out);
        out
    }

    fn collect_selected(&self, out: &mut Vec<Loc>) {
        match self {
            RegularStructure::Trivial { .. } => {}
            RegularStructure::Type1 {
                plus_root, subs, ..
            } => {
                out.push(*plus_root);
                for s in subs {
                    s.collect_selected(out);
                }
            }
            RegularStructure::Type2 { chains, lp, .. } => {
                for c in chains {
                    c.collect_selected(out);
                }
                lp.collect_selected(out);
            }
        }
    }

    /// Dominant couples: every chain partition pairs consecutive indices and
    /// all ingredient couples are dominant.
    pub fn is_dominant(&self) -> bool {
        match self {
            RegularStructure::Trivial { .. } => true,
            RegularStructure::Type1 { subs, .. } => subs.iter().all(|s| s.is_dominant()),
            RegularStructure::Type2 { chains, lp, .. } => {
                chains.iter().all(|c| c.is_dominant()) && lp.is_dominant()
            }
        }
    }

    /// Number of links whose two nodes sit in different layers.
    pub fn incoherency_index(&self, lay: &Layering) -> usize {
        self.links()
            .iter()
            .filter(|(a, b)| lay.of(*a) != lay.of(*b))
            .count()
    }

    pub fn is_coherent(&self, lay: &Layering) -> bool {
        self.incoherency_index(lay) == 0
    }
}

impl ChainStructure {
    fn collect_links(&self, out: &mut Vec<(Loc, Loc)>) {
        for &(a, b) in &self.partition {
            out.push((self.nodes[a], self.nodes[b]));
        }
        for pair in &self.subs {
            for s in pair {
                s.collect_links(out);
            }
        }
    }

    fn collect_selected(&self, out: &mut Vec<Loc>) {
        for &(a, _) in &self.partition {
            out.push(self.nodes[a]);
        }
        for pair in &self.subs {
            for s in pair {
                s.collect_selected(out);
            }
        }
    }

    pub fn is_dominant(&self) -> bool {
        self.partition
            .iter()
            .enumerate()
            .all(|(j, &(a, b))| a == 2 * j && b == 2 * j + 1)
            && self
                .subs
                .iter()
                .all(|pair| pair.iter().all(|s| s.is_dominant()))
    }
}

impl RegularTreeStructure {
    pub fn links(&self) -> Vec<(Loc, Loc)> {
        let mut out = Vec::new();
        if let RegularTreeStructure::Chain(c) = self {
            c.collect_links(&mut out);
        }
        out
    }

    pub fn selected_nodes(&self) -> Vec<Loc> {
        let mut out = Vec::new();
        if let RegularTreeStructure::Chain(c) = self {
            c.collect_selected(&mut out);
        }
        out
    }

    pub fn is_dominant(&self) -> bool {
        match self {
            RegularTreeStructure::Trivial { .. } => true,
            RegularTreeStructure::Chain(c) => c.is_dominant(),
        }
    }

    pub fn incoherency_index(&self, lay: &Layering) -> usize {
        self.links()
            .iter()
            .filter(|(a, b)| lay.of(*a) != lay.of(*b))
            .count()
    }
}

// ----- decomposition ---------------------------------------------------------

/// Structure of a standalone couple, if it is regular.
pub fn decompose_regular_couple(g: &Garden) -> Option<RegularStructure> {
    if !g.is_couple() {
        return None;
    }
    decompose_sub_couple(g, Loc::new(0, 0), Loc::new(1, 0))
}

pub fn is_regular_couple(g: &Garden) -> bool {
    decompose_regular_couple(g).is_some()
}

/// Structure of the embedded sub-couple at (a, b), if regular. Sides may be
/// given in either order; the + side is normalized internally.
pub fn decompose_sub_couple(g: &Garden, a: Loc, b: Loc) -> Option<RegularStructure> {
    let (a, b) = if g.tree(a.tree).sign_of(a.node) == Sign::Plus {
        (a, b)
    } else {
        (b, a)
    };
    if g.tree(a.tree).sign_of(a.node) != Sign::Plus
        || g.tree(b.tree).sign_of(b.node) != Sign::Minus
        || !g.is_embedded_sub_couple(a, b)
    {
        return None;
    }
    let ta = g.tree(a.tree);
    let tb = g.tree(b.tree);
    if ta.is_leaf(a.node) && tb.is_leaf(b.node) {
        return Some(RegularStructure::Trivial { plus: a, minus: b });
    }
    if !ta.is_leaf(a.node) && !tb.is_leaf(b.node) {
        if let Some(rs) = try_type1(g, a, b) {
            return Some(rs);
        }
    }
    try_type2(g, a, b)
}

/// Which child of `b` (if any) receives all outbound pairs from leaves under
/// `c`; `None` in first slot means a structural violation.
fn block_target(g: &Garden, c: Loc, candidates: &[Loc]) -> Option<usize> {
    let tc = g.tree(c.tree);
    let mut target: Option<usize> = None;
    let mut has_outbound = false;
    for node in tc.subtree_range(c.node) {
        let Some(leaf) = g.leaf_index(Loc::new(c.tree, node)) else {
            continue;
        };
        let p = g.partner(leaf);
        if p == leaf {
            return None;
        }
        let ploc = g.leaf_loc(p);
        if ploc.tree == c.tree && tc.subtree_range(c.node).contains(&ploc.node) {
            continue; // internal pair
        }
        has_outbound = true;
        let hit = candidates.iter().position(|&cand| {
            ploc.tree == cand.tree
                && g.tree(cand.tree)
                    .subtree_range(cand.node)
                    .contains(&ploc.node)
        });
        match (hit, target) {
            (Some(j), None) => target = Some(j),
            (Some(j), Some(t)) if j == t => {}
            _ => return None,
        }
    }
    if has_outbound {
        target
    } else {
        None // a closed single subtree is impossible (odd leaf count)
    }
}

fn try_type1(g: &Garden, a: Loc, b: Loc) -> Option<RegularStructure> {
    let ca = g.tree(a.tree).children(a.node)?;
    let cb = g.tree(b.tree).children(b.node)?;
    let ca: Vec<Loc> = ca.iter().map(|&n| Loc::new(a.tree, n)).collect();
    let cb: Vec<Loc> = cb.iter().map(|&n| Loc::new(b.tree, n)).collect();
    let mut sigma = [usize::MAX; 3];
    for i in 0..3 {
        sigma[i] = block_target(g, ca[i], &cb)?;
    }
    // Mini-couple pattern: middle to middle, outer to outer.
    if sigma[1] != 1 || !matches!((sigma[0], sigma[2]), (0, 2) | (2, 0)) {
        return None;
    }
    let mut subs = Vec::with_capacity(3);
    for i in 0..3 {
        if !g.is_embedded_sub_couple(ca[i], cb[sigma[i]]) {
            return None;
        }
        subs.push(decompose_sub_couple(g, ca[i], cb[sigma[i]])?);
    }
    Some(RegularStructure::Type1 {
        plus_root: a,
        minus_root: b,
        subs,
    })
}

fn try_type2(g: &Garden, a: Loc, b: Loc) -> Option<RegularStructure> {
    // Cross-pair leaves on each side determine the lone-leaf positions.
    let ta = g.tree(a.tree);
    let tb = g.tree(b.tree);
    let mut a_cross = Vec::new();
    let mut b_cross = Vec::new();
    for node in ta.subtree_range(a.node) {
        if let Some(leaf) = g.leaf_index(Loc::new(a.tree, node)) {
            let ploc = g.leaf_loc(g.partner(leaf));
            if ploc.tree == b.tree && tb.subtree_range(b.node).contains(&ploc.node) {
                a_cross.push(node);
                b_cross.push(ploc.node);
            }
        }
    }
    if a_cross.is_empty() {
        return None;
    }
    let x_plus = Loc::new(a.tree, lca(ta, a.node, &a_cross));
    let x_minus = Loc::new(b.tree, lca(tb, b.node, &b_cross));
    if ta.sign_of(x_plus.node) != Sign::Plus || tb.sign_of(x_minus.node) != Sign::Minus {
        return None;
    }
    let cp = decompose_chain(g, a, x_plus)?;
    let cm = decompose_chain(g, b, x_minus)?;
    if cp.nodes.is_empty() && cm.nodes.is_empty() {
        return None; // that would be type 1 or trivial
    }
    if !g.is_embedded_sub_couple(x_plus, x_minus) {
        return None;
    }
    let lp = decompose_sub_couple(g, x_plus, x_minus)?;
    if matches!(lp, RegularStructure::Type2 { .. }) {
        return None;
    }
    Some(RegularStructure::Type2 {
        plus_root: a,
        minus_root: b,
        chains: [cp, cm],
        lp: Box::new(lp),
    })
}

/// Smallest-subtree common ancestor of `nodes` within the subtree at `top`.
fn lca(t: &crate::combinatorics::tree::SignedTree, top: usize, nodes: &[usize]) -> usize {
    let (lo, hi) = nodes
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), &n| (lo.min(n), hi.max(n)));
    let mut cur = lo;
    loop {
        let r = t.subtree_range(cur);
        if r.contains(&hi) {
            return cur;
        }
        cur = t.parent(cur).unwrap_or(top);
        if cur == top {
            return top;
        }
    }
}

/// Decompose the path from `top` down to `x` (exclusive) as a chain.
fn decompose_chain(g: &Garden, top: Loc, x: Loc) -> Option<ChainStructure> {
    let t = g.tree(top.tree);
    let mut path = Vec::new();
    if x != top {
        if x.tree != top.tree || !t.is_ancestor_or_self(top.node, x.node) {
            return None;
        }
        let mut cur = t.parent(x.node)?;
        loop {
            path.push(Loc::new(top.tree, cur));
            if cur == top.node {
                break;
            }
            cur = t.parent(cur)?;
        }
        path.reverse();
    }
    let m2 = path.len();
    if m2 % 2 != 0 {
        return None;
    }
    // Non-chain children per chain node, in child order.
    let mut extras: Vec<[Loc; 2]> = Vec::with_capacity(m2);
    for (i, &n) in path.iter().enumerate() {
        let chain_child = if i + 1 < m2 { path[i + 1].node } else { x.node };
        let ch = t.children(n.node)?;
        let mut ex = Vec::new();
        for &c in &ch {
            if c != chain_child {
                ex.push(Loc::new(top.tree, c));
            }
        }
        if ex.len() != 2 {
            return None;
        }
        extras.push([ex[0], ex[1]]);
    }
    // Partner derivation: each extra child's outbound pairs must target a
    // single extra child of a single other chain node.
    let all_extras: Vec<Loc> = extras.iter().flatten().copied().collect();
    let mut node_partner = vec![usize::MAX; m2];
    let mut child_map = vec![[usize::MAX; 2]; m2]; // which extra of the partner
    for i in 0..m2 {
        for (k, &c) in extras[i].iter().enumerate() {
            let flat = block_target(g, c, &all_extras)?;
            let (j, kk) = (flat / 2, flat % 2);
            if j == i {
                return None; // siblings paired
            }
            if node_partner[i] == usize::MAX {
                node_partner[i] = j;
            } else if node_partner[i] != j {
                return None;
            }
            child_map[i][k] = kk;
        }
        if child_map[i][0] == child_map[i][1] {
            return None; // both children of i hit the same child of j
        }
    }
    // Build the pair list and check symmetry + legality.
    let mut partition = Vec::new();
    for i in 0..m2 {
        let j = node_partner[i];
        if j == usize::MAX || node_partner[j] != i {
            return None;
        }
        if i < j {
            partition.push((i, j));
        }
    }
    if partition.len() != m2 / 2 || !is_legal_partition(&partition) {
        return None;
    }
    // Sub-couples per pair, ordered by the first node's child order.
    let mut subs = Vec::with_capacity(partition.len());
    for &(i, j) in &partition {
        let mut pair_subs = Vec::with_capacity(2);
        for k in 0..2 {
            let c = extras[i][k];
            let c2 = extras[j][child_map[i][k]];
            if !g.is_embedded_sub_couple(c, c2) {
                return None;
            }
            pair_subs.push(decompose_sub_couple(g, c, c2)?);
        }
        subs.push([pair_subs.remove(0), pair_subs.remove(0)]);
    }
    Some(ChainStructure {
        nodes: path,
        lone_child: x,
        partition,
        subs,
    })
}

/// No two pairs interleave: forbidden pattern a < c < b < d with pairs
/// (a, b), (c, d). Nesting is allowed.
pub fn is_legal_partition(pairs: &[(usize, usize)]) -> bool {
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        for &(c, d) in &pairs[idx + 1..] {
            let cross = (a < c && c < b && b < d) || (c < a && a < d && d < b);
            if cross {
                return false;
            }
        }
    }
    true
}

/// Structure of a standalone paired tree, if it is a regular tree.
pub fn decompose_regular_tree(g: &Garden) -> Option<RegularTreeStructure> {
    if !g.is_paired_tree() {
        return None;
    }
    let lone = g.lone_leaf_loc()?;
    decompose_sub_paired_tree(g, Loc::new(0, 0), lone)
}

pub fn is_regular_tree(g: &Garden) -> bool {
    decompose_regular_tree(g).is_some()
}

/// Structure of the embedded sub-paired-tree between `n` and `lone`, if it
/// is a regular tree.
pub fn decompose_sub_paired_tree(g: &Garden, n: Loc, lone: Loc) -> Option<RegularTreeStructure> {
    if n == lone {
        return Some(RegularTreeStructure::Trivial { lone });
    }
    if !g.is_embedded_sub_paired_tree(n, lone) {
        return None;
    }
    let c = decompose_chain(g, n, lone)?;
    if c.nodes.is_empty() {
        return None;
    }
    Some(RegularTreeStructure::Chain(c))
}

// ----- coherent layer profiles -------------------------------------------------

fn subtree_all_at(g: &Garden, lay: &Layering, root: Loc, x: u32) -> bool {
    g.tree(root.tree)
        .subtree_range(root.node)
        .all(|n| lay.of(Loc::new(root.tree, n)) == x)
}

fn structure_all_at(g: &Garden, lay: &Layering, s: &RegularStructure, x: u32) -> bool {
    let (p, m) = s.roots();
    subtree_all_at(g, lay, p, x) && subtree_all_at(g, lay, m, x)
}

/// Chain part of the layer profile: layers weakly decrease from at most
/// `q_hi` down to at least `q_lo`, partition pairs share a layer and carry
/// their hanging couples entirely in it.
fn chain_profile_holds(
    g: &Garden,
    lay: &Layering,
    c: &ChainStructure,
    q_hi: u32,
    q_lo: u32,
) -> bool {
    let r: Vec<u32> = c.nodes.iter().map(|&n| lay.of(n)).collect();
    if r.first().map(|&f| f > q_hi).unwrap_or(false)
        || r.windows(2).any(|w| w[0] < w[1])
        || r.last().map(|&l| l < q_lo).unwrap_or(false)
    {
        return false;
    }
    c.partition.iter().zip(&c.subs).all(|(&(a, b), subs)| {
        r[a] == r[b] && subs.iter().all(|s| structure_all_at(g, lay, s, r[a]))
    })
}

/// Layer profile forced on a coherent regular couple embedded in a canonical
/// layered garden, with `q_plus`/`q_minus` the layers just above its two
/// roots: the side with the smaller boundary sits entirely in that layer
/// (lone-pair couple included), while the other side's chain decreases
/// towards it, pairwise-equal with its hanging couples.
pub fn couple_layer_profile_holds(
    s: &RegularStructure,
    g: &Garden,
    lay: &Layering,
    q_plus: u32,
    q_minus: u32,
) -> bool {
    let q_lo = q_plus.min(q_minus);
    match s {
        RegularStructure::Trivial { plus, minus } => {
            lay.of(*plus) == q_lo && lay.of(*minus) == q_lo
        }
        RegularStructure::Type1 { .. } => structure_all_at(g, lay, s, q_lo),
        RegularStructure::Type2 { chains, .. } => {
            let (roots_plus, roots_minus) = s.roots();
            let (hi, lo_root, q_hi) = if q_plus >= q_minus {
                (&chains[0], roots_minus, q_plus)
            } else {
                (&chains[1], roots_plus, q_minus)
            };
            subtree_all_at(g, lay, lo_root, q_lo)
                && subtree_all_at(g, lay, hi.lone_child, q_lo)
                && chain_profile_holds(g, lay, hi, q_hi, q_lo)
        }
    }
}

/// Tree analogue: the single chain decreases from at most `q` (the layer
/// just above the root) down to the lone leaf's layer, pairwise-equal with
/// hanging couples in the pair's layer.
pub fn tree_layer_profile_holds(
    s: &RegularTreeStructure,
    g: &Garden,
    lay: &Layering,
    q: u32,
) -> bool {
    match s {
        RegularTreeStructure::Trivial { .. } => true,
        RegularTreeStructure::Chain(c) => {
            chain_profile_holds(g, lay, c, q, lay.of(c.lone_child))
        }
    }
}

// ----- mini objects and generative enumeration --------------------------------

/// The two order-2 couples of two depth-1 trees with middle leaves paired and
/// outer leaves paired crosswise.
pub fn mini_couples() -> Vec<Garden> {
    vec![
        "[+(.,.,.); -(.,.,.)]{0-3, 1-4, 2-5}".parse().unwrap(),
        "[+(.,.,.); -(.,.,.)]{0-5, 1-4, 2-3}".parse().unwrap(),
    ]
}

pub fn is_mini_couple(g: &Garden) -> bool {
    g.is_couple()
        && g.order() == 2
        && g.tree(0).order() == 1
        && g.tree(1).order() == 1
        && no_siblings_paired(g)
}

fn no_siblings_paired(g: &Garden) -> bool {
    g.pairs().iter().all(|&(x, y)| {
        let (lx, ly) = (g.leaf_loc(x), g.leaf_loc(y));
        lx.tree != ly.tree || g.tree(lx.tree).parent(lx.node) != g.tree(ly.tree).parent(ly.node)
    })
}

/// The six order-2 paired trees with chained branching nodes, the lone leaf
/// under the lower node, and no siblings paired.
pub fn mini_trees(sign: Sign) -> Vec<Garden> {
    enumerate_paired_trees(2, sign, usize::MAX)
        .unwrap()
        .into_iter()
        .filter(is_mini_tree)
        .collect()
}

pub fn is_mini_tree(g: &Garden) -> bool {
    if !g.is_paired_tree() || g.order() != 2 {
        return false;
    }
    let t = g.tree(0);
    let Some(lone) = g.lone_leaf_loc() else {
        return false;
    };
    let Some(n2) = t.parent(lone.node) else {
        return false;
    };
    t.parent(n2) == Some(0) && !t.is_leaf(n2) && no_siblings_paired(g)
}

/// All regular couples of the given (even) order: generated from the trivial
/// couple by repeatedly planting mini-couples at leaf pairs and mini-trees at
/// nodes, de-duplicated.
pub fn enumerate_regular_couples(order: usize, cap: usize) -> Result<Vec<Garden>> {
    if order % 2 != 0 {
        return Ok(Vec::new());
    }
    let mcs = mini_couples();
    let mts_plus = mini_trees(Sign::Plus);
    let mts_minus = mini_trees(Sign::Minus);
    let mut frontier: std::collections::HashSet<Garden> =
        std::iter::once(Garden::trivial_couple()).collect();
    for _ in 0..order / 2 {
        let mut next = std::collections::HashSet::new();
        for g in &frontier {
            for (l, _) in g.pairs() {
                for mc in &mcs {
                    next.insert(g.replace_leaf_pair_with_couple(l, mc)?);
                }
            }
            for (ti, t) in g.trees().iter().enumerate() {
                for node in 0..t.node_count() {
                    let mts = if t.sign_of(node) == Sign::Plus {
                        &mts_plus
                    } else {
                        &mts_minus
                    };
                    for mt in mts {
                        next.insert(g.replace_node_with_paired_tree(Loc::new(ti, node), mt)?);
                    }
                }
            }
            if next.len() > cap {
                return Err(Error::CapExceeded {
                    produced: next.len(),
                    cap,
                });
            }
        }
        frontier = next;
    }
    let mut out: Vec<Garden> = frontier.into_iter().collect();
    out.sort_by_key(|g| g.to_string());
    Ok(out)
}

/// All regular trees of the given order and root sign, as paired trees.
/// (A paired tree is a regular tree iff it forms a regular couple with the
/// trivial tree.)
pub fn enumerate_regular_trees(order: usize, sign: Sign, cap: usize) -> Result<Vec<Garden>> {
    let couples = enumerate_regular_couples(order, cap)?;
    let mut out = Vec::new();
    for q in couples {
        let (own, other) = if sign == Sign::Plus { (0, 1) } else { (1, 0) };
        if !q.tree(other).is_trivial() || q.tree(own).is_trivial() {
            continue;
        }
        // Convert: the leaf paired with the trivial tree becomes the lone leaf.
        let own_leaves = q.tree(own).leaf_count();
        let other_leaf = if own == 0 { own_leaves } else { 0 };
        let offset = if own == 0 { 0 } else { 1 };
        let mut pairing = vec![0u32; own_leaves];
        for i in 0..own_leaves {
            let p = q.partner(i + offset);
            if p == other_leaf {
                pairing[i] = i as u32;
            } else {
                pairing[i] = (p - offset) as u32;
            }
        }
        out.push(Garden::paired_tree(q.tree(own).clone(), pairing)?);
    }
    out.sort_by_key(|g| g.to_string());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::garden::enumerate_couples;

    #[test]
    fn mini_object_censuses() {
        let mcs = mini_couples();
        assert_eq!(mcs.len(), 2);
        for mc in &mcs {
            assert!(is_mini_couple(mc));
        }
        // Independent filter over all order-2 couples.
        let filtered: Vec<Garden> = enumerate_couples(2, 1000)
            .unwrap()
            .into_iter()
            .filter(is_mini_couple)
            .collect();
        assert_eq!(filtered.len(), 2);
        for mc in &mcs {
            assert!(filtered.contains(mc));
        }
        for s in [Sign::Plus, Sign::Minus] {
            let mts = mini_trees(s);
            assert_eq!(mts.len(), 6, "sign {s}");
            for mt in &mts {
                assert!(is_mini_tree(mt));
                assert_eq!(mt.lone_leaf_loc().map(|l| {
                    mt.tree(0).sign_of(l.node)
                }), Some(s));
            }
        }
    }

    #[test]
    fn order_two_regular_couples() {
        let reg = enumerate_regular_couples(2, 1000).unwrap();
        assert_eq!(reg.len(), 14);
        // Decomposition agrees on all 42 order-2 couples.
        for q in enumerate_couples(2, 1000).unwrap() {
            let wanted = reg.contains(&q);
            assert_eq!(
                decompose_regular_couple(&q).is_some(),
                wanted,
                "disagreement on {q}"
            );
        }
        // Mini-couples decompose as type 1 with trivial ingredients.
        for mc in mini_couples() {
            match decompose_regular_couple(&mc).unwrap() {
                RegularStructure::Type1 { subs, .. } => {
                    assert!(subs
                        .iter()
                        .all(|s| matches!(s, RegularStructure::Trivial { .. })));
                }
                other => panic!("mini-couple decomposed as {other:?}"),
            }
        }
        // One-sided couples decompose as type 2 with a trivial lp.
        let one_sided: Vec<_> = reg
            .iter()
            .filter(|q| q.tree(1).is_trivial())
            .collect();
        assert_eq!(one_sided.len(), 6);
        for q in one_sided {
            match decompose_regular_couple(q).unwrap() {
                RegularStructure::Type2 { chains, lp, .. } => {
                    assert_eq!(chains[0].nodes.len(), 2);
                    assert_eq!(chains[1].nodes.len(), 0);
                    assert!(matches!(*lp, RegularStructure::Trivial { .. }));
                }
                other => panic!("one-sided couple decomposed as {other:?}"),
            }
        }
    }

    #[test]
    fn order_four_regular_set_matches_decomposition() {
        let generated: std::collections::HashSet<Garden> =
            enumerate_regular_couples(4, 100_000).unwrap().into_iter().collect();
        let mut by_filter = 0usize;
        for q in enumerate_couples(4, 100_000).unwrap() {
            let is_reg = decompose_regular_couple(&q).is_some();
            assert_eq!(
                is_reg,
                generated.contains(&q),
                "disagreement on {q}"
            );
            by_filter += is_reg as usize;
        }
        assert_eq!(by_filter, generated.len());
        assert!(!generated.is_empty());
    }

    #[test]
    fn links_form_perfect_matching_on_branching_nodes() {
        for order in [2usize, 4] {
            for q in enumerate_regular_couples(order, 100_000).unwrap() {
                let rs = decompose_regular_couple(&q).unwrap();
                let links = rs.links();
                assert_eq!(links.len(), order / 2);
                let mut seen = std::collections::HashSet::new();
                for (x, y) in &links {
                    assert!(seen.insert(*x), "node in two links: {q}");
                    assert!(seen.insert(*y), "node in two links: {q}");
                    assert!(!q.tree(x.tree).is_leaf(x.node));
                    assert!(!q.tree(y.tree).is_leaf(y.node));
                }
                let branching: usize = q.trees().iter().map(|t| t.order()).sum();
                assert_eq!(seen.len(), branching);
                // One selected node per link.
                assert_eq!(rs.selected_nodes().len(), links.len());
            }
        }
    }

    #[test]
    fn dominance_classification() {
        // All order-2 regular couples are dominant (chains have one pair).
        for q in enumerate_regular_couples(2, 1000).unwrap() {
            assert!(decompose_regular_couple(&q).unwrap().is_dominant());
        }
        // At order 4 both classes are nonempty.
        let reg = enumerate_regular_couples(4, 100_000).unwrap();
        let dominant = reg
            .iter()
            .filter(|q| decompose_regular_couple(q).unwrap().is_dominant())
            .count();
        assert!(dominant > 0 && dominant < reg.len());
    }

    #[test]
    fn regular_trees_match_mini_trees_at_order_two() {
        for s in [Sign::Plus, Sign::Minus] {
            let rts = enumerate_regular_trees(2, s, 10_000).unwrap();
            let mut mts = mini_trees(s);
            mts.sort_by_key(|g| g.to_string());
            assert_eq!(rts, mts);
            for rt in &rts {
                assert!(is_regular_tree(rt));
            }
        }
    }

    #[test]
    fn legal_partition_detection() {
        assert!(is_legal_partition(&[(0, 1), (2, 3)]));
        assert!(is_legal_partition(&[(0, 3), (1, 2)]));
        assert!(!is_legal_partition(&[(0, 2), (1, 3)]));
    }

    #[test]
    fn trivial_couple_is_regular() {
        let rs = decompose_regular_couple(&Garden::trivial_couple()).unwrap();
        assert!(matches!(rs, RegularStructure::Trivial { .. }));
        assert!(rs.is_dominant());
        assert!(rs.links().is_empty());
    }

    /// One-sided order-2 regular couple: a two-node chain on the + side,
    /// trivial lone pair onto the trivial − tree.
    fn one_sided_chain_couple() -> Garden {
        "[+((.,.,.),.,.); -.]{0-5, 1-4, 2-3}".parse().unwrap()
    }

    #[test]
    fn layer_profile_on_a_hand_layering() {
        use crate::combinatorics::layering::Layering;
        let g = one_sided_chain_couple();
        let s = decompose_regular_couple(&g).unwrap();
        // Chain nodes and their hanging pairs at layer 1, lone pair at 0.
        let lay = Layering::new(&g, vec![vec![1, 1, 0, 1, 1, 1, 1], vec![0]]).unwrap();
        assert_eq!(s.incoherency_index(&lay), 0);
        assert!(couple_layer_profile_holds(&s, &g, &lay, 1, 0));
        assert!(couple_layer_profile_holds(&s, &g, &lay, 2, 0));
        // The lone pair must sit in the smaller boundary layer.
        assert!(!couple_layer_profile_holds(&s, &g, &lay, 1, 1));
        // Boundaries forcing the + side low are not met by this layering.
        assert!(!couple_layer_profile_holds(&s, &g, &lay, 0, 1));
        // Coherent but off-profile: lone pair raised above the − boundary.
        let lifted = Layering::new(&g, vec![vec![1, 1, 1, 1, 1, 1, 1], vec![1]]).unwrap();
        assert_eq!(s.incoherency_index(&lifted), 0);
        assert!(!couple_layer_profile_holds(&s, &g, &lifted, 1, 0));
        assert!(couple_layer_profile_holds(&s, &g, &lifted, 1, 1));
        // Splitting the chain pair breaks both coherence and the profile.
        let split = Layering::new(&g, vec![vec![1, 0, 0, 0, 0, 0, 0], vec![0]]).unwrap();
        assert!(s.incoherency_index(&split) > 0);
        assert!(!couple_layer_profile_holds(&s, &g, &split, 1, 0));
        // Tree analogue on the + subtree with its lone leaf.
        let ts = decompose_sub_paired_tree(&g, Loc::new(0, 0), Loc::new(0, 2)).unwrap();
        assert!(tree_layer_profile_holds(&ts, &g, &lay, 1));
        assert!(tree_layer_profile_holds(&ts, &g, &lay, 2));
        assert!(!tree_layer_profile_holds(&ts, &g, &split, 1));
    }

    fn embedded_sub_couples(g: &Garden) -> Vec<RegularStructure> {
        let mut locs = Vec::new();
        for (ti, t) in g.trees().iter().enumerate() {
            for n in 0..t.node_count() {
                locs.push(Loc::new(ti, n));
            }
        }
        let mut out = Vec::new();
        for (i, &a) in locs.iter().enumerate() {
            for &b in &locs[i + 1..] {
                if g.tree(a.tree).sign_of(a.node) == g.tree(b.tree).sign_of(b.node) {
                    continue;
                }
                if let Some(s) = decompose_sub_couple(g, a, b) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Coherent regular sub-couples of canonical layered couples follow the
    /// layer profile exactly, and the profile conversely forces coherence.
    #[test]
    fn coherent_embedded_couples_follow_the_layer_profile() {
        use crate::combinatorics::canonical::enumerate_canonical_layerings;
        let mut coherent_seen = 0usize;
        let mut sloped_chains = 0usize;
        let mut incoherent_rejected = 0usize;
        let mut run = |g: &Garden, p: u32| {
            let subs = embedded_sub_couples(g);
            for lay in enumerate_canonical_layerings(g, p).unwrap() {
                for s in &subs {
                    let (rp, rm) = s.roots();
                    let qp = lay.parent_layer(g, rp, p);
                    let qm = lay.parent_layer(g, rm, p);
                    let profile = couple_layer_profile_holds(s, g, &lay, qp, qm);
                    if s.incoherency_index(&lay) == 0 {
                        assert!(profile, "coherent {s:?} off-profile in {g} at {lay}");
                        coherent_seen += 1;
                        if qp != qm {
                            if let RegularStructure::Type2 { chains, .. } = s {
                                let hi = if qp > qm { &chains[0] } else { &chains[1] };
                                if !hi.nodes.is_empty() {
                                    sloped_chains += 1;
                                }
                            }
                        }
                    } else {
                        assert!(!profile, "incoherent {s:?} on-profile in {g} at {lay}");
                        incoherent_rejected += 1;
                    }
                }
            }
        };
        for order in 1..=3usize {
            for g in enumerate_couples(order, 10_000).unwrap() {
                for p in 0..=2u32 {
                    run(&g, p);
                }
            }
        }
        for g in enumerate_couples(4, 100_000)
            .unwrap()
            .iter()
            .step_by(13)
        {
            run(g, 1);
        }
        assert!(coherent_seen > 200, "coherent cases: {coherent_seen}");
        assert!(sloped_chains > 0, "no decreasing-chain case exercised");
        assert!(incoherent_rejected > 0);
    }

    /// Same cross-check for embedded regular paired subtrees: coherence is
    /// equivalent to the chain profile against the boundary layers. Chains
    /// sitting above their lone leaf's layer first appear at order 4.
    #[test]
    fn coherent_embedded_trees_follow_the_chain_profile() {
        use crate::combinatorics::canonical::enumerate_canonical_layerings;
        let mut coherent_seen = 0usize;
        let mut sloped = 0usize;
        let mut run = |g: &Garden, p: u32| {
            let mut subs = Vec::new();
            for (ti, t) in g.trees().iter().enumerate() {
                for n in 0..t.node_count() {
                    for l in t.subtree_range(n) {
                        if !t.is_leaf(l) || n == l {
                            continue;
                        }
                        let (a, b) = (Loc::new(ti, n), Loc::new(ti, l));
                        if let Some(s) = decompose_sub_paired_tree(g, a, b) {
                            subs.push((a, s));
                        }
                    }
                }
            }
            if subs.is_empty() {
                return;
            }
            for lay in enumerate_canonical_layerings(g, p).unwrap() {
                for (root, s) in &subs {
                    let q = lay.parent_layer(g, *root, p);
                    let profile = tree_layer_profile_holds(s, g, &lay, q);
                    if s.incoherency_index(&lay) == 0 {
                        assert!(profile, "coherent tree off-profile in {g}");
                        coherent_seen += 1;
                        if let RegularTreeStructure::Chain(c) = s {
                            if lay.of(c.nodes[0]) > lay.of(c.lone_child) {
                                sloped += 1;
                            }
                        }
                    } else {
                        assert!(!profile, "incoherent tree on-profile in {g}");
                    }
                }
            }
        };
        for order in 1..=3usize {
            for g in enumerate_couples(order, 10_000).unwrap() {
                for p in 0..=2u32 {
                    run(&g, p);
                }
            }
        }
        for g in enumerate_couples(4, 100_000).unwrap().iter().step_by(7) {
            run(g, 1);
        }
        assert!(coherent_seen > 400, "coherent trees: {coherent_seen}");
        assert!(sloped > 30, "sloped chains: {sloped}");
    }
}
