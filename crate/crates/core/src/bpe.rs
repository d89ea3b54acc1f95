use crate::vocab::BaseVocab;

/// Segments `text` with the base vocabulary's ranked merges.
///
/// Starts from one symbol per byte and repeatedly applies the
/// lowest-ranked merge present among adjacent pairs (all of its
/// non-overlapping occurrences, left to right) until no merge applies.
pub fn bpe_segment(text: &[u8], base: &BaseVocab) -> Vec<u32> {
    let mut symbols: Vec<u32> = text.iter().map(|&b| base.byte_id(b)).collect();
    if base.merges().is_empty() {
        return symbols;
    }
    while symbols.len() > 1 {
        let best = symbols
            .windows(2)
            .filter_map(|w| base.merge(w[0], w[1]).map(|(rank, merged)| (rank, w[0], w[1], merged)))
            .min_by_key(|&(rank, ..)| rank);
        let Some((_, left, right, merged)) = best else {
            break;
        };
        let mut out = Vec::with_capacity(symbols.len());
        let mut i = 0;
        while i < symbols.len() {
            if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
                out.push(merged);
                i += 2;
            } else {
                out.push(symbols[i]);
                i += 1;
            }
        }
        symbols = out;
    }
    symbols
}
