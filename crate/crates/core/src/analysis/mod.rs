//! Edit-distance comparison of token and grammar representations, and the
//! chi-square test relating amplification to classifier outcomes.

mod chisq;
mod levenshtein;
mod pairs;

pub use chisq::{chi_square, ChiSquare, ContingencyTable};
pub use levenshtein::levenshtein;
pub use pairs::{
    all_pair_distances, build_contingency, median, pair_distances, pair_report, read_pairs, tabulate,
    Bucket, Contingency, Cut, EdReport, PairDistances, PairEntry, PairFailure, PairRecord,
    BUCKET_COUNT, BUCKET_WIDTH, DEFAULT_THRESHOLD,
};
