//! Signed ternary trees, gardens/couples, layerings and their structure
//! theory: canonical layerings, regular objects, links and coherence.

pub mod canonical;
pub mod decoration;
pub mod garden;
pub mod layering;
pub mod regular;
pub mod skeleton;
pub mod tree;

pub use canonical::{enumerate_canonical_layerings, is_canonical};
pub use decoration::Decoration;
pub use garden::{
    couple_census, enumerate_couples, enumerate_gardens, enumerate_paired_trees, Garden, Loc,
    SurgeryMaps,
};
pub use layering::{enumerate_layerings, Layering};
pub use regular::{
    couple_layer_profile_holds, decompose_regular_couple, decompose_regular_tree,
    enumerate_regular_couples, enumerate_regular_trees, is_regular_couple, is_regular_tree,
    mini_couples, mini_trees, tree_layer_profile_holds, ChainStructure, RegularStructure,
    RegularTreeStructure,
};
pub use skeleton::{is_prime, skeleton_decompose, skeleton_reconstruct, Skeleton};
pub use tree::{enumerate_trees, tree_census, SignedTree, TreeNode};
