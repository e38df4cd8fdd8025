//! Deterministic derivation of child RNG seeds.
//!
//! Every random draw in the crate flows from a single 64-bit root seed.
//! Independent streams (latent qualities, reviews, authorship graph, report
//! policies, replications, ...) get their own child seed derived by mixing
//! the root with a stream tag and an index through SplitMix64. This keeps
//! parallel replications and per-author draws independent of execution
//! order: the seed for stream `(tag, index)` never depends on how many
//! values some other stream consumed.

/// Stream tags for the independent random streams derived from one root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Per-replication root inside an experiment.
    Replication,
    /// Submission counts per author.
    Counts,
    /// Latent paper qualities.
    Theta,
    /// Topic labels.
    Topics,
    /// Coauthorship edges.
    Coauthors,
    /// Review scores.
    Reviews,
    /// Report-policy randomness (one substream per author).
    Policy,
    /// Noise draws in the truthfulness oracle.
    Utility,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Replication => 1,
            Stream::Counts => 2,
            Stream::Theta => 3,
            Stream::Topics => 4,
            Stream::Coauthors => 5,
            Stream::Reviews => 6,
            Stream::Policy => 7,
            Stream::Utility => 8,
        }
    }
}

/// SplitMix64 finalizer: a fast, well-mixed 64-bit permutation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for stream `stream`, element `index`, from `root`.
pub fn child_seed(root: u64, stream: Stream, index: u64) -> u64 {
    // Chain two SplitMix64 applications so that (root, tag, index) triples
    // that differ in any coordinate land in unrelated states.
    let a = splitmix64(root ^ stream.tag().wrapping_mul(0xA076_1D64_78BD_642F));
    splitmix64(a ^ index.wrapping_mul(0xE703_7ED1_A0B4_28DB))
}
