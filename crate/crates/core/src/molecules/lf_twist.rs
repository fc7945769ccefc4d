//! Layered full twist: the unit twist lifted to canonical layered gardens.
//! The garden is split into its prime skeleton and the regular plants grown
//! on it; the skeleton is twisted at a core CL vine; every plant re-grows
//! unchanged with its old layering except the paired tree at the moved node
//! 𝔲₂ and the couple at its closing pair, which are handed in as replacements
//! constrained to keep the lone-leaf layer, the coherent layer profile against
//! the new boundaries, the combined order, and the combined count of
//! top-layer branching nodes. Under those constraints the result is again
//! canonical with the same order and the same per-tree top-layer counts.

use super::build::build_molecule;
use super::twist::{classify_vine, twist_classified, ClassifiedVine, Twist, VineCase, VineClass};
use super::vines::{find_vines, Vine};
use crate::combinatorics::canonical::is_canonical;
use crate::combinatorics::garden::{Garden, Loc};
use crate::combinatorics::layering::{enumerate_layerings, Layering};
use crate::combinatorics::regular::{
    couple_layer_profile_holds, decompose_regular_couple, decompose_regular_tree,
    enumerate_regular_couples, enumerate_regular_trees, tree_layer_profile_holds,
};
use crate::combinatorics::skeleton::{
    skeleton_decompose, skeleton_reconstruct_traced, NodeSource, Skeleton,
};
use crate::combinatorics::tree::SignedTree;
use crate::error::{Error, Result};
use crate::sign::Sign;
use std::collections::HashMap;

/// An eligible position for the layered full twist, with everything the
/// application step needs precomputed: the skeleton and its plants'
/// standalone layerings, the skeleton-level twist, and the constraints the
/// replacement objects must satisfy.
#[derive(Clone, Debug)]
pub struct LayeredTwistSite {
    pub skeleton: Skeleton,
    pub classified: ClassifiedVine,
    /// Skeleton-level twist: the twisted prime garden and its node map.
    pub twist: Twist,
    /// Standalone layerings of the planted trees, parallel to `skeleton.trees`.
    pub plant_layerings: Vec<Layering>,
    /// Standalone layerings of the planted couples, parallel to `skeleton.couples`.
    pub couple_layerings: Vec<Layering>,
    /// Index into `skeleton.trees` of the plant at the moved node.
    pub tree_idx: usize,
    /// Index into `skeleton.couples` of the couple at the closing pair.
    pub couple_idx: usize,
    /// Root sign required of the replacement tree (the moved node's sign
    /// after the twist).
    pub tree_sign: Sign,
    /// Lone-leaf layer required of the replacement tree.
    pub tree_lone_layer: u32,
    /// Layer just above the replacement tree's root, for its profile check.
    pub tree_boundary: u32,
    /// Layers just above the replacement couple's two roots (+ side, − side).
    pub couple_boundaries: (u32, u32),
    /// Combined order the two replacements must reproduce.
    pub order_budget: usize,
    /// Combined top-layer branching count the replacements must reproduce.
    pub top_budget: usize,
    /// Depth of the canonical layering.
    pub depth: u32,
    /// Order of the host garden.
    pub host_order: usize,
    /// Top-layer branching count of each host tree.
    pub host_top_counts: Vec<usize>,
}

pub struct LayeredTwist {
    pub garden: Garden,
    pub layering: Layering,
    pub case_before: VineCase,
    /// Provenance of every node of the result, per tree in preorder:
    /// skeleton nodes, re-grown plants and the two replacements.
    pub provenance: Vec<Vec<NodeSource>>,
}

/// Layer of the plant's lone leaf at skeleton node `l` — the layer of the
/// host node that `l` stands for.
fn pre_layer(sk: &Skeleton, lay: &Layering, l: Loc) -> Result<u32> {
    let (_, orig) = *sk
        .origin
        .get(&l)
        .ok_or_else(|| Error::invalid("skeleton node has no recorded origin"))?;
    let o = orig.ok_or_else(|| Error::invalid("skeleton leaf stands for no host node"))?;
    Ok(lay.of(o))
}

/// Standalone layering of the paired tree planted at `site`, read off the
/// host layering through the skeleton's origin records.
fn plant_layering(
    host: &Garden,
    host_lay: &Layering,
    sk: &Skeleton,
    site: Loc,
    plant: &Garden,
) -> Result<Layering> {
    let (top, orig) = *sk
        .origin
        .get(&site)
        .ok_or_else(|| Error::invalid("skeleton node has no recorded origin"))?;
    let orig = orig.ok_or_else(|| Error::invalid("plant site stands for no host node"))?;
    if plant.is_trivial() {
        return Layering::new(plant, vec![vec![host_lay.of(orig)]]);
    }
    // The plant is the host subtree at `top` with the subtree at `orig`
    // collapsed to the lone leaf; preorder positions after the collapsed
    // range shift down by its length − 1.
    let removed = host.tree(orig.tree).subtree_range(orig.node).len();
    let d = orig.node - top.node;
    let t0 = plant.tree(0);
    let mut vals = vec![0u32; t0.node_count()];
    for (j, v) in vals.iter_mut().enumerate() {
        let hn = if j <= d {
            top.node + j
        } else {
            top.node + j + removed - 1
        };
        *v = host_lay.of(Loc::new(top.tree, hn));
    }
    Layering::new(plant, vec![vals])
}

/// Standalone layering of the couple planted at the pair keyed by
/// `plus_leaf`, read off the host layering.
fn couple_layering(
    host_lay: &Layering,
    sk: &Skeleton,
    plus_leaf: usize,
    q: &Garden,
) -> Result<Layering> {
    let lp = sk.garden.leaf_loc(plus_leaf);
    let lm = sk.garden.leaf_loc(sk.garden.partner(plus_leaf));
    let get_top = |l: Loc| -> Result<Loc> {
        Ok(sk
            .origin
            .get(&l)
            .ok_or_else(|| Error::invalid("pair leaf has no recorded origin"))?
            .0)
    };
    let (tp, tm) = (get_top(lp)?, get_top(lm)?);
    let mut vals = Vec::with_capacity(2);
    for (side, top) in [(0, tp), (1, tm)] {
        let t = q.tree(side);
        let mut v = vec![0u32; t.node_count()];
        for (j, x) in v.iter_mut().enumerate() {
            *x = host_lay.of(Loc::new(top.tree, top.node + j));
        }
        vals.push(v);
    }
    Layering::new(q, vals)
}

fn top_count(g: &Garden, lay: &Layering, depth: u32) -> usize {
    top_counts_per_tree(g, lay, depth).into_iter().sum()
}

/// Branching nodes at the top layer, per tree.
pub fn top_counts_per_tree(g: &Garden, lay: &Layering, depth: u32) -> Vec<usize> {
    g.trees()
        .iter()
        .enumerate()
        .map(|(ti, t)| {
            t.branching_nodes()
                .into_iter()
                .filter(|&n| lay.of(Loc::new(ti, n)) == depth)
                .count()
        })
        .collect()
}

/// Check a single vine of the skeleton's molecule for eligibility and build
/// the site. Each precondition failure is reported with its own message.
pub fn layered_twist_site(
    g: &Garden,
    lay: &Layering,
    depth: u32,
    vine: &Vine,
) -> Result<LayeredTwistSite> {
    if !is_canonical(g, lay, depth) {
        return Err(Error::invalid(
            "host layering is not canonical at the given depth",
        ));
    }
    let sk = skeleton_decompose(g)?;
    let m = build_molecule(&sk.garden, None)?;
    let cv = match classify_vine(&sk.garden, &m, vine)? {
        VineClass::Cn(_) => return Err(Error::invalid("vine is CN, not nested in one tree")),
        VineClass::Cl(cv) => cv,
    };
    if !cv.case.is_core() {
        return Err(Error::invalid("vine is not core (its third child branches)"));
    }

    let l2 = pre_layer(&sk, lay, cv.cl.u2)?;
    if let (Some(u3), Some(u4)) = (cv.u3, cv.u4) {
        let bound = pre_layer(&sk, lay, u3)?.min(pre_layer(&sk, lay, u4)?);
        if l2 > bound {
            return Err(Error::invalid(
                "moved node sits above the rung pair next to it",
            ));
        }
    }

    let plant_layerings: Vec<Layering> = sk
        .trees
        .iter()
        .map(|(l, t)| plant_layering(g, lay, &sk, *l, t))
        .collect::<Result<_>>()?;
    let couple_layerings: Vec<Layering> = sk
        .couples
        .iter()
        .map(|(pl, q)| couple_layering(lay, &sk, *pl, q))
        .collect::<Result<_>>()?;

    let tree_idx = sk
        .trees
        .iter()
        .position(|(l, _)| *l == cv.cl.u2)
        .ok_or_else(|| Error::invalid("no plant recorded at the moved node"))?;
    let ts = decompose_regular_tree(&sk.trees[tree_idx].1)
        .ok_or_else(|| Error::invalid("plant at the moved node is not a regular tree"))?;
    if ts.incoherency_index(&plant_layerings[tree_idx]) != 0 {
        return Err(Error::invalid("plant at the moved node is not coherent"));
    }

    let u0 = cv.u0.expect("core vines close with a leaf pair");
    let s23 = sk.garden.tree(cv.cl.u23.tree).sign_of(cv.cl.u23.node);
    let plus_leaf = if s23 == Sign::Plus {
        sk.garden.leaf_index(cv.cl.u23).unwrap()
    } else {
        sk.garden.leaf_index(u0).unwrap()
    };
    let couple_idx = sk
        .couples
        .iter()
        .position(|(pl, _)| *pl == plus_leaf)
        .ok_or_else(|| Error::invalid("no couple recorded at the closing pair"))?;
    let qs = decompose_regular_couple(&sk.couples[couple_idx].1)
        .ok_or_else(|| Error::invalid("couple at the closing pair is not regular"))?;
    if qs.incoherency_index(&couple_layerings[couple_idx]) != 0 {
        return Err(Error::invalid("couple at the closing pair is not coherent"));
    }

    let tw = twist_classified(&sk.garden, &cv)?;
    let inv: HashMap<Loc, Loc> = tw.node_map.iter().map(|(a, b)| (*b, *a)).collect();
    let g2 = &tw.garden;
    let parent_pre_layer = |l: Loc| -> Result<u32> {
        let nl = tw.node_map[&l];
        let par = g2
            .tree(nl.tree)
            .parent(nl.node)
            .ok_or_else(|| Error::invalid("moved vine node has no parent after the twist"))?;
        pre_layer(&sk, lay, inv[&Loc::new(nl.tree, par)])
    };
    let tree_boundary = parent_pre_layer(cv.cl.u2)?;
    let tree_sign = {
        let nl = tw.node_map[&cv.cl.u2];
        g2.tree(nl.tree).sign_of(nl.node)
    };
    // After the twist the pair's signs flip; read them off the new garden.
    let (b23, b0) = (parent_pre_layer(cv.cl.u23)?, parent_pre_layer(u0)?);
    let n23 = tw.node_map[&cv.cl.u23];
    let couple_boundaries = if g2.tree(n23.tree).sign_of(n23.node) == Sign::Plus {
        (b23, b0)
    } else {
        (b0, b23)
    };

    let t_old = &sk.trees[tree_idx].1;
    let q_old = &sk.couples[couple_idx].1;
    let order_budget = t_old.order() + q_old.order();
    let top_budget = top_count(t_old, &plant_layerings[tree_idx], depth)
        + top_count(q_old, &couple_layerings[couple_idx], depth);

    Ok(LayeredTwistSite {
        host_order: g.order(),
        host_top_counts: top_counts_per_tree(g, lay, depth),
        tree_lone_layer: l2,
        skeleton: sk,
        classified: cv,
        twist: tw,
        plant_layerings,
        couple_layerings,
        tree_idx,
        couple_idx,
        tree_sign,
        tree_boundary,
        couple_boundaries,
        order_budget,
        top_budget,
        depth,
    })
}

/// All eligible sites of a canonical layered garden, in the deterministic
/// order its skeleton's vines are found.
pub fn layered_twist_sites(g: &Garden, lay: &Layering, depth: u32) -> Result<Vec<LayeredTwistSite>> {
    if !is_canonical(g, lay, depth) {
        return Err(Error::invalid(
            "host layering is not canonical at the given depth",
        ));
    }
    let sk = skeleton_decompose(g)?;
    if sk.garden.order() == 0 {
        return Ok(Vec::new());
    }
    let m = build_molecule(&sk.garden, None)?;
    let mut out = Vec::new();
    for v in find_vines(&m) {
        if let Ok(site) = layered_twist_site(g, lay, depth, &v) {
            out.push(site);
        }
    }
    Ok(out)
}

fn check_tree_replacement(site: &LayeredTwistSite, tg: &Garden, tl: &Layering) -> Result<()> {
    if !tg.is_paired_tree() {
        return Err(Error::invalid("replacement tree is not a paired tree"));
    }
    tl.validate(tg)?;
    let ts = decompose_regular_tree(tg)
        .ok_or_else(|| Error::invalid("replacement tree is not regular"))?;
    if tg.tree(0).sign() != site.tree_sign {
        return Err(Error::invalid("replacement tree has the wrong root sign"));
    }
    let lone = tg.lone_leaf_loc().expect("paired trees have a lone leaf");
    if tl.of(lone) != site.tree_lone_layer {
        return Err(Error::invalid(
            "replacement tree's lone leaf is at the wrong layer",
        ));
    }
    if !tree_layer_profile_holds(&ts, tg, tl, site.tree_boundary) {
        return Err(Error::invalid(
            "replacement tree does not follow the coherent layer profile",
        ));
    }
    Ok(())
}

fn check_couple_replacement(site: &LayeredTwistSite, qg: &Garden, ql: &Layering) -> Result<()> {
    if !qg.is_couple() {
        return Err(Error::invalid("replacement couple is not a couple"));
    }
    ql.validate(qg)?;
    let qs = decompose_regular_couple(qg)
        .ok_or_else(|| Error::invalid("replacement couple is not regular"))?;
    if !couple_layer_profile_holds(
        &qs,
        qg,
        ql,
        site.couple_boundaries.0,
        site.couple_boundaries.1,
    ) {
        return Err(Error::invalid(
            "replacement couple does not follow the coherent layer profile",
        ));
    }
    Ok(())
}

/// Perform the layered full twist with the given replacements for the plant
/// at the moved node and the couple at its closing pair.
pub fn apply_layered_twist(
    site: &LayeredTwistSite,
    tree_new: (&Garden, &Layering),
    couple_new: (&Garden, &Layering),
) -> Result<LayeredTwist> {
    let (tg, tl) = tree_new;
    let (qg, ql) = couple_new;
    check_tree_replacement(site, tg, tl)?;
    check_couple_replacement(site, qg, ql)?;
    if tg.order() + qg.order() != site.order_budget {
        return Err(Error::invalid("replacements change the combined order"));
    }
    if top_count(tg, tl, site.depth) + top_count(qg, ql, site.depth) != site.top_budget {
        return Err(Error::invalid(
            "replacements change the combined top-layer branching count",
        ));
    }

    // Re-grow every plant on the twisted skeleton, swapping in the two
    // replacements, and carry each plant's layering to its new position.
    let sk = &site.skeleton;
    let map = &site.twist.node_map;
    let g2 = &site.twist.garden;
    let mut trees2 = Vec::with_capacity(sk.trees.len());
    for (i, (l, t)) in sk.trees.iter().enumerate() {
        let plant = if i == site.tree_idx { tg } else { t };
        trees2.push((map[l], plant.clone()));
    }
    let mut couples2 = Vec::with_capacity(sk.couples.len());
    for (i, (plus, q)) in sk.couples.iter().enumerate() {
        let (couple, plus_new) = if i == site.couple_idx {
            // The closing pair's signs flip under the twist; rekey by the
            // leaf that is + afterwards.
            let lp = map[&sk.garden.leaf_loc(*plus)];
            let lm = map[&sk.garden.leaf_loc(sk.garden.partner(*plus))];
            let plus_loc = if g2.tree(lp.tree).sign_of(lp.node) == Sign::Plus {
                lp
            } else {
                lm
            };
            (qg, plus_loc)
        } else {
            (q, map[&sk.garden.leaf_loc(*plus)])
        };
        let idx = g2
            .leaf_index(plus_new)
            .ok_or_else(|| Error::invalid("pair leaf lost under the twist"))?;
        couples2.push((idx, couple.clone()));
    }
    let sk2 = Skeleton {
        garden: g2.clone(),
        couples: couples2,
        trees: trees2,
        origin: HashMap::new(),
    };
    let rec = skeleton_reconstruct_traced(&sk2)?;

    // Assemble the layering: skeleton nodes take their plant's lone-leaf
    // layer, plant and couple nodes take their own layering's value.
    let tree_info: HashMap<Loc, (Loc, &Layering)> = sk2
        .trees
        .iter()
        .enumerate()
        .map(|(i, (l2, plant))| {
            let layering = if i == site.tree_idx {
                tl
            } else {
                &site.plant_layerings[i]
            };
            (*l2, (plant.lone_leaf_loc().unwrap(), layering))
        })
        .collect();
    let couple_info: Vec<&Layering> = (0..sk2.couples.len())
        .map(|i| {
            if i == site.couple_idx {
                ql
            } else {
                &site.couple_layerings[i]
            }
        })
        .collect();
    let mut vals = Vec::with_capacity(rec.sources.len());
    for srcs in &rec.sources {
        let mut v = Vec::with_capacity(srcs.len());
        for s in srcs {
            let layer = match *s {
                NodeSource::Skeleton(l) => {
                    let (lone, layering) = tree_info
                        .get(&l)
                        .ok_or_else(|| Error::invalid("no plant recorded at a skeleton node"))?;
                    layering.of(*lone)
                }
                NodeSource::Plant { site: l, node } => tree_info
                    .get(&l)
                    .ok_or_else(|| Error::invalid("plant source without a plant"))?
                    .1
                    .of(Loc::new(0, node)),
                NodeSource::Couple { pair, side, node } => {
                    couple_info[pair].of(Loc::new(side, node))
                }
            };
            v.push(layer);
        }
        vals.push(v);
    }
    let layering = Layering::new(&rec.garden, vals)?;

    if !is_canonical(&rec.garden, &layering, site.depth) {
        return Err(Error::invalid("twisted garden lost canonicity"));
    }
    if rec.garden.order() != site.host_order {
        return Err(Error::invalid("twisted garden changed order"));
    }
    if top_counts_per_tree(&rec.garden, &layering, site.depth) != site.host_top_counts {
        return Err(Error::invalid(
            "twisted garden changed the top-layer branching counts",
        ));
    }
    Ok(LayeredTwist {
        garden: rec.garden,
        layering,
        case_before: site.twist.case_before,
        provenance: rec.sources,
    })
}

/// The layered full twist in one call: check the vine's eligibility, then
/// apply it with the given replacement objects. The vine must come from
/// `find_vines` on the molecule of the host's skeleton garden.
pub fn lf_twist(
    g: &Garden,
    lay: &Layering,
    depth: u32,
    vine: &Vine,
    tree_new: (&Garden, &Layering),
    couple_new: (&Garden, &Layering),
) -> Result<LayeredTwist> {
    let site = layered_twist_site(g, lay, depth, vine)?;
    apply_layered_twist(&site, tree_new, couple_new)
}

/// All replacement pairs (tree with layering, couple with layering) the site
/// admits, enumerated deterministically. `cap` bounds both the underlying
/// shape enumerations and the number of returned pairs.
pub fn layered_twist_replacements(
    site: &LayeredTwistSite,
    cap: usize,
) -> Result<Vec<((Garden, Layering), (Garden, Layering))>> {
    let mut out = Vec::new();
    for a in 0..=site.order_budget {
        let trees = if a == 0 {
            vec![Garden::paired_tree(SignedTree::trivial(site.tree_sign), vec![0])?]
        } else {
            enumerate_regular_trees(a, site.tree_sign, cap)?
        };
        let couples = enumerate_regular_couples(site.order_budget - a, cap)?;
        if trees.is_empty() || couples.is_empty() {
            continue;
        }
        let mut t_cands: Vec<(Garden, Layering, usize)> = Vec::new();
        for t in &trees {
            for l in enumerate_layerings(t, site.depth) {
                if check_tree_replacement(site, t, &l).is_ok() {
                    let c = top_count(t, &l, site.depth);
                    t_cands.push((t.clone(), l, c));
                }
            }
        }
        let mut q_cands: Vec<(Garden, Layering, usize)> = Vec::new();
        for q in &couples {
            for l in enumerate_layerings(q, site.depth) {
                if check_couple_replacement(site, q, &l).is_ok() {
                    let c = top_count(q, &l, site.depth);
                    q_cands.push((q.clone(), l, c));
                }
            }
        }
        for (t, lt, ct) in &t_cands {
            for (q, lq, cq) in &q_cands {
                if ct + cq != site.top_budget {
                    continue;
                }
                out.push(((t.clone(), lt.clone()), (q.clone(), lq.clone())));
                if out.len() > cap {
                    return Err(Error::CapExceeded {
                        produced: out.len(),
                        cap,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::canonical::enumerate_canonical_layerings;
    use crate::combinatorics::garden::enumerate_couples;
    use crate::combinatorics::regular::{mini_couples, mini_trees};
    use crate::molecules::vines::VineKind;

    /// Every node's layer in the result must equal the corresponding value of
    /// the plant (or replacement) it came from.
    fn assert_transport(
        site: &LayeredTwistSite,
        tn: &(Garden, Layering),
        qn: &(Garden, Layering),
        out: &LayeredTwist,
    ) {
        let plant_of: HashMap<Loc, usize> = site
            .skeleton
            .trees
            .iter()
            .enumerate()
            .map(|(i, (l, _))| (site.twist.node_map[l], i))
            .collect();
        for (ti, srcs) in out.provenance.iter().enumerate() {
            for (n, s) in srcs.iter().enumerate() {
                let got = out.layering.of(Loc::new(ti, n));
                let want = match *s {
                    NodeSource::Skeleton(l) => {
                        let i = plant_of[&l];
                        if i == site.tree_idx {
                            site.tree_lone_layer
                        } else {
                            let plant = &site.skeleton.trees[i].1;
                            site.plant_layerings[i].of(plant.lone_leaf_loc().unwrap())
                        }
                    }
                    NodeSource::Plant { site: l, node } => {
                        let i = plant_of[&l];
                        if i == site.tree_idx {
                            tn.1.of(Loc::new(0, node))
                        } else {
                            site.plant_layerings[i].of(Loc::new(0, node))
                        }
                    }
                    NodeSource::Couple { pair, side, node } => {
                        if pair == site.couple_idx {
                            qn.1.of(Loc::new(side, node))
                        } else {
                            site.couple_layerings[pair].of(Loc::new(side, node))
                        }
                    }
                };
                assert_eq!(got, want, "layer transport mismatch at {ti}:{n}");
            }
        }
    }

    /// Exercise every site a host offers with all its replacements (up to
    /// `take`), asserting the advertised postconditions; returns the number
    /// applied and how many used a replacement differing from the old plants.
    fn drive_host(g: &Garden, lay: &Layering, depth: u32, take: usize) -> (usize, usize) {
        let mut applied = 0;
        let mut changed = 0;
        for site in layered_twist_sites(g, lay, depth).unwrap() {
            let old_t = &site.skeleton.trees[site.tree_idx].1;
            let old_q = &site.skeleton.couples[site.couple_idx].1;
            for (tn, qn) in layered_twist_replacements(&site, 50_000)
                .unwrap()
                .into_iter()
                .take(take)
            {
                let out = apply_layered_twist(&site, (&tn.0, &tn.1), (&qn.0, &qn.1)).unwrap();
                assert!(is_canonical(&out.garden, &out.layering, depth));
                assert_eq!(out.garden.order(), g.order());
                assert_eq!(
                    top_counts_per_tree(&out.garden, &out.layering, depth),
                    top_counts_per_tree(g, lay, depth)
                );
                assert_transport(&site, &tn, &qn, &out);
                applied += 1;
                if tn.0 != *old_t || qn.0 != *old_q {
                    changed += 1;
                }
            }
        }
        (applied, changed)
    }

    #[test]
    fn small_couples_keep_canonicity_under_the_layered_twist() {
        let mut sites_seen = 0usize;
        let mut applied_total = 0usize;
        for (order, couple_step, lay_take) in [(3usize, 1usize, usize::MAX), (4, 3, 8)] {
            for g in enumerate_couples(order, 100_000)
                .unwrap()
                .into_iter()
                .step_by(couple_step)
            {
                let sk = skeleton_decompose(&g).unwrap();
                if sk.garden.order() == 0 {
                    continue;
                }
                let m = build_molecule(&sk.garden, None).unwrap();
                let has_core = find_vines(&m).iter().any(|v| {
                    matches!(classify_vine(&sk.garden, &m, v),
                        Ok(VineClass::Cl(cv)) if cv.case.is_core())
                });
                if !has_core {
                    continue;
                }
                for lay in enumerate_canonical_layerings(&g, 1)
                    .unwrap()
                    .iter()
                    .take(lay_take)
                {
                    let n = layered_twist_sites(&g, lay, 1).unwrap().len();
                    sites_seen += n;
                    let (applied, _) = drive_host(&g, lay, 1, 4);
                    applied_total += applied;
                }
            }
        }
        assert!(sites_seen > 100, "only {sites_seen} sites");
        // Budget-0 sites admit exactly the trivial replacement pair.
        assert!(applied_total >= sites_seen, "{applied_total} < {sites_seen}");
    }

    #[test]
    fn planted_hosts_move_material_through_the_twist() {
        // Bases: order-3 couples whose skeleton carries a core CL vine (all
        // plants trivial). Hosts: one mini-couple or mini-tree planted
        // somewhere, giving order-5 gardens whose twist sites have either a
        // non-trivial plant to transport or a budget of 2 to respend.
        let mut bases = Vec::new();
        for g in enumerate_couples(3, 100_000).unwrap() {
            let sk = skeleton_decompose(&g).unwrap();
            if sk.garden != g {
                continue;
            }
            let m = build_molecule(&g, None).unwrap();
            if find_vines(&m).iter().any(|v| {
                matches!(classify_vine(&g, &m, v), Ok(VineClass::Cl(cv)) if cv.case.is_core())
            }) {
                bases.push(g);
                if bases.len() == 3 {
                    break;
                }
            }
        }
        assert_eq!(bases.len(), 3);

        let mut hosts = Vec::new();
        for base in &bases {
            for (l, _) in base.pairs() {
                for mc in mini_couples() {
                    hosts.push(base.replace_leaf_pair_with_couple(l, &mc).unwrap());
                }
            }
            for (ti, t) in base.trees().iter().enumerate() {
                for node in 0..t.node_count() {
                    for mt in mini_trees(t.sign_of(node)) {
                        hosts.push(
                            base.replace_node_with_paired_tree(Loc::new(ti, node), &mt)
                                .unwrap(),
                        );
                    }
                }
            }
        }

        let mut budget2_applied = 0usize;
        let mut changed_total = 0usize;
        let mut away_plant_sites = 0usize;
        for g in &hosts {
            for lay in enumerate_canonical_layerings(g, 1)
                .unwrap()
                .iter()
                .step_by(2)
                .take(4)
            {
                for site in layered_twist_sites(g, lay, 1).unwrap() {
                    if site.order_budget == 2 {
                        let (applied, changed) = {
                            let mut a = 0;
                            let mut c = 0;
                            let old_t = &site.skeleton.trees[site.tree_idx].1;
                            let old_q = &site.skeleton.couples[site.couple_idx].1;
                            for (tn, qn) in layered_twist_replacements(&site, 50_000)
                                .unwrap()
                                .into_iter()
                                .take(10)
                            {
                                let out =
                                    apply_layered_twist(&site, (&tn.0, &tn.1), (&qn.0, &qn.1))
                                        .unwrap();
                                assert_transport(&site, &tn, &qn, &out);
                                a += 1;
                                if tn.0 != *old_t || qn.0 != *old_q {
                                    c += 1;
                                }
                            }
                            (a, c)
                        };
                        budget2_applied += applied;
                        changed_total += changed;
                    } else {
                        // The planted object sits away from the vine: it must
                        // ride along unchanged.
                        let away = site
                            .skeleton
                            .trees
                            .iter()
                            .enumerate()
                            .any(|(i, (_, t))| i != site.tree_idx && t.order() > 0)
                            || site
                                .skeleton
                                .couples
                                .iter()
                                .enumerate()
                                .any(|(i, (_, q))| i != site.couple_idx && q.order() > 0);
                        if away {
                            away_plant_sites += 1;
                            let (applied, _) = drive_host(g, lay, 1, 2);
                            assert!(applied > 0);
                        }
                    }
                }
            }
        }
        assert!(budget2_applied > 20, "only {budget2_applied} budget-2 uses");
        assert!(changed_total > 10, "only {changed_total} changed replacements");
        assert!(away_plant_sites > 20, "only {away_plant_sites} away sites");
    }

    #[test]
    fn rung_layer_condition_gates_type_two_vines() {
        let mut eligible = 0usize;
        let mut gated = 0usize;
        let mut applied = 0usize;
        'scan: for g in enumerate_couples(5, 600_000).unwrap().into_iter().step_by(2) {
            let m = build_molecule(&g, None).unwrap();
            let vines: Vec<Vine> = find_vines(&m)
                .into_iter()
                .filter(|v| v.kind == VineKind::II)
                .collect();
            if vines.is_empty() {
                continue;
            }
            let sk = skeleton_decompose(&g).unwrap();
            if sk.garden != g {
                continue; // keep to prime hosts so host vines are skeleton vines
            }
            for lay in enumerate_canonical_layerings(&g, 1)
                .unwrap()
                .iter()
                .take(6)
            {
                for v in &vines {
                    match layered_twist_site(&g, lay, 1, v) {
                        Ok(site) => {
                            eligible += 1;
                            for (tn, qn) in layered_twist_replacements(&site, 10_000)
                                .unwrap()
                                .into_iter()
                                .take(2)
                            {
                                let out =
                                    apply_layered_twist(&site, (&tn.0, &tn.1), (&qn.0, &qn.1))
                                        .unwrap();
                                assert!(is_canonical(&out.garden, &out.layering, 1));
                                assert!(matches!(
                                    out.case_before,
                                    VineCase::IIa | VineCase::IIb | VineCase::IIc | VineCase::IId
                                ));
                                applied += 1;
                            }
                        }
                        Err(e) => {
                            if e.to_string().contains("above the rung pair") {
                                gated += 1;
                            }
                        }
                    }
                }
            }
            if eligible >= 40 && gated >= 5 {
                break 'scan;
            }
        }
        assert!(eligible >= 40, "only {eligible} eligible type-II sites");
        assert!(gated >= 5, "layer condition never gated a vine ({gated})");
        assert!(applied >= 40, "only {applied} type-II twists applied");
    }

    #[test]
    fn ineligible_hosts_and_bad_replacements_are_rejected() {
        // First eligible site among small couples.
        let mut found = None;
        'outer: for g in enumerate_couples(3, 100_000).unwrap() {
            for lay in enumerate_canonical_layerings(&g, 1).unwrap() {
                if let Some(site) = layered_twist_sites(&g, &lay, 1).unwrap().into_iter().next() {
                    found = Some((g, lay, site));
                    break 'outer;
                }
            }
        }
        let (g, _lay, site) = found.expect("no eligible site at order 3");
        assert_eq!(site.order_budget, 0);

        let good_t = Garden::paired_tree(SignedTree::trivial(site.tree_sign), vec![0]).unwrap();
        let good_tl = Layering::uniform(&good_t, site.tree_lone_layer);
        let good_q = Garden::trivial_couple();
        let q_lo = site.couple_boundaries.0.min(site.couple_boundaries.1);
        let good_ql = Layering::uniform(&good_q, q_lo);
        apply_layered_twist(&site, (&good_t, &good_tl), (&good_q, &good_ql)).unwrap();

        // Wrong lone-leaf layer (flip within 0..=1).
        let bad_tl = Layering::uniform(&good_t, 1 - site.tree_lone_layer);
        let err = apply_layered_twist(&site, (&good_t, &bad_tl), (&good_q, &good_ql))
            .unwrap_err()
            .to_string();
        assert!(err.contains("lone leaf"), "{err}");

        // Wrong root sign.
        let flipped = Garden::paired_tree(SignedTree::trivial(-site.tree_sign), vec![0]).unwrap();
        let flipped_l = Layering::uniform(&flipped, site.tree_lone_layer);
        let err = apply_layered_twist(&site, (&flipped, &flipped_l), (&good_q, &good_ql))
            .unwrap_err()
            .to_string();
        assert!(err.contains("root sign"), "{err}");

        // Couple off the forced layer: profile violation.
        let bad_ql = Layering::uniform(&good_q, q_lo + 1);
        let err = apply_layered_twist(&site, (&good_t, &good_tl), (&good_q, &bad_ql))
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("profile") || err.contains("invalid"),
            "{err}"
        );

        // Order budget violation: spend 2 where 0 is available.
        let big = enumerate_regular_couples(2, 1000).unwrap();
        let bq = &big[0];
        let bql = enumerate_layerings(bq, 1)
            .into_iter()
            .find(|l| check_couple_replacement(&site, bq, l).is_ok());
        if let Some(bql) = bql {
            let err = apply_layered_twist(&site, (&good_t, &good_tl), (bq, &bql))
                .unwrap_err()
                .to_string();
            assert!(err.contains("order"), "{err}");
        }

        // Non-canonical host layering is refused outright.
        let too_deep = Layering::uniform(&g, 2);
        assert!(layered_twist_sites(&g, &too_deep, 1).is_err());
    }
}
