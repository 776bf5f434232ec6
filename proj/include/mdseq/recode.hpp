#pragma once

#include <map>
#include <vector>

#include "mdseq/coarse_grain.hpp"

namespace mdseq {

/// Composite (state, length) token alphabet for training sequence models
/// on run-length recoded trajectories. Tokens are enumerated from the
/// training set; composites never seen there map to a reserved unknown id
/// (the last id in the vocabulary).
struct RunLengthVocab {
    int n_states = 0;
    int max_run_length = 0;
    std::vector<RleToken> id_to_token;
    std::map<std::pair<int, int>, int> token_to_id;

    int unknown_id() const { return static_cast<int>(id_to_token.size()); }
    int vocab_size() const { return static_cast<int>(id_to_token.size()) + 1; }
};

RunLengthVocab build_rle_vocab(const std::vector<RleSequence>& training);

/// Token-id stream for a recoded trajectory (unknown composites become the
/// unknown id). dt of the result is the source dt; n_states the vocab size.
Trajectory encode_with_vocab(const RunLengthVocab& vocab, const RleSequence& seq);

/// Expand a generated id stream back to a state trajectory. Unknown ids
/// are rejected (generation suppresses them).
Trajectory decode_with_vocab(const RunLengthVocab& vocab, const Trajectory& ids, double dt_ps);

}  // namespace mdseq
