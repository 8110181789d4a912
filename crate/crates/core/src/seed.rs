//! Stable seed derivation.
//!
//! A single root seed fans out into independent streams by hashing the root
//! together with a command tag and integer indices. The mixing function is
//! SplitMix64's finalizer, which is fixed forever so that emitted files stay
//! reproducible across releases.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the UTF-8 bytes of a tag.
pub fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3)
    })
}

/// Derives a child seed from `root` and an ordered list of indices.
pub fn derive(root: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(mix(root.wrapping_add(GOLDEN)), |acc, &i| {
            mix(acc ^ mix(i.wrapping_add(GOLDEN)))
        })
}

/// Derives a child seed from `root`, a command tag and indices.
pub fn derive_tagged(root: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut all = Vec::with_capacity(indices.len() + 1);
    all.push(tag_hash(tag));
    all.extend_from_slice(indices);
    derive(root, &all)
}
