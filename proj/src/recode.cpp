#include "mdseq/recode.hpp"

#include "mdseq/common.hpp"

namespace mdseq {

RunLengthVocab build_rle_vocab(const std::vector<RleSequence>& training) {
    require(!training.empty(), "build_rle_vocab: no training sequences");
    RunLengthVocab vocab;
    vocab.n_states = training.front().n_states;
    for (const auto& seq : training) {
        require(seq.n_states == vocab.n_states, "build_rle_vocab: mixed state alphabets");
        for (const auto& tok : seq.tokens) {
            vocab.max_run_length = std::max(vocab.max_run_length, tok.length);
            const auto key = std::make_pair(tok.state, tok.length);
            if (!vocab.token_to_id.count(key)) {
                vocab.token_to_id[key] = static_cast<int>(vocab.id_to_token.size());
                vocab.id_to_token.push_back(tok);
            }
        }
    }
    return vocab;
}

Trajectory encode_with_vocab(const RunLengthVocab& vocab, const RleSequence& seq) {
    Trajectory out;
    out.dt_ps = seq.dt_ps;
    out.n_states = vocab.vocab_size();
    out.states.reserve(seq.tokens.size());
    for (const auto& tok : seq.tokens) {
        const auto it = vocab.token_to_id.find({tok.state, tok.length});
        out.states.push_back(it == vocab.token_to_id.end() ? vocab.unknown_id() : it->second);
    }
    return out;
}

Trajectory decode_with_vocab(const RunLengthVocab& vocab, const Trajectory& ids, double dt_ps) {
    RleSequence seq;
    seq.dt_ps = dt_ps;
    seq.n_states = vocab.n_states;
    for (int id : ids.states) {
        require(id >= 0 && id < vocab.vocab_size(), "decode_with_vocab: id out of range");
        require(id != vocab.unknown_id(), "decode_with_vocab: unknown token cannot be expanded");
        seq.tokens.push_back(vocab.id_to_token[id]);
    }
    return run_length_decode(seq);
}

}  // namespace mdseq
