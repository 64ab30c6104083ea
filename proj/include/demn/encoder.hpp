#pragma once
// Input module: multi-embedding token representation and the shared BiLSTM.

#include <cstdint>

#include "demn/dataset.hpp"
#include "demn/params.hpp"
#include "demn/rng.hpp"
#include "demn/tape.hpp"

namespace demn {

/// Per-forward state: the tape, whether dropout is active, and where dropout
/// masks are drawn from.
struct ForwardContext {
    ad::Tape& tape;
    bool training = false;
    Rng* rng = nullptr;
};

/// Inverted-dropout mask: entries are 0 with probability `rate`, otherwise
/// 1/(1−rate).
Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);
/// Applies dropout when ctx.training, identity otherwise.
ad::Var dropout(ForwardContext& ctx, ad::Var x, double rate);

/// Xavier/Glorot uniform init for a fan_in × fan_out matrix.
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct EmbeddingDims {
    std::size_t d_pos = 18;
    std::size_t d_ner = 8;
    std::size_t d_rel = 10;
    data::TagTableSizes tables;
};

struct EmbeddingParams {
    Parameter* word = nullptr;
    Parameter* pos = nullptr;
    Parameter* ner = nullptr;
    Parameter* rel = nullptr;

    /// d_w + d_pos + d_ner + d_rel + tf + exact-match
    std::size_t input_width() const;
};

/// Registers the word table (copied from the vocabulary, frozen rows kept) and
/// the three tag tables. Row 0 of every table is zero and frozen.
EmbeddingParams register_embedding_params(ParamStore& store, const data::Vocab& vocab, const EmbeddingDims& dims,
                                          Rng& rng);

struct LstmParams {
    Parameter* w_x = nullptr;  // d_in × 4h, gate blocks [input, forget, candidate, output]
    Parameter* w_h = nullptr;  // h × 4h
    Parameter* b = nullptr;    // 1 × 4h, forget block initialized to 1
    std::size_t hidden = 0;
};

struct BiLstmParams {
    LstmParams forward;
    LstmParams backward;
    std::size_t output_width() const { return 2 * forward.hidden; }
};

BiLstmParams register_bilstm(ParamStore& store, const std::string& prefix, std::size_t input_width,
                             std::size_t hidden, Rng& rng);

/// |s| × d_in rows of concat(word, pos, ner, rel, tf, em). Dropout applies to
/// the word slice only.
ad::Var embed(ForwardContext& ctx, const data::SequenceFeatures& seq, const EmbeddingParams& params,
              double dropout_rate);

/// One unidirectional pass; row t holds the hidden state after consuming
/// position t (in the pass direction). Zero initial state.
ad::Var lstm_run(ad::Tape& tape, ad::Var x, const LstmParams& params, bool reverse);

/// Row t = concat(forward state after t, backward state after t).
ad::Var bilstm_encode(ad::Tape& tape, ad::Var x, const BiLstmParams& params);

struct EncodedStory {
    ad::Var exposition;  // |e| × 2h, invalid when not requested
    ad::Var climax;      // |c| × 2h
    ad::Var ending1;     // |o₁| × 2h
    ad::Var ending2;     // |o₂| × 2h

    ad::Var ending(int k) const { return k == 1 ? ending1 : ending2; }
};

/// Runs the shared embedding + BiLSTM over each segment.
EncodedStory encode_story(ForwardContext& ctx, const data::FeaturizedStory& story, const EmbeddingParams& embedding,
                          const BiLstmParams& encoder, double dropout_rate, bool with_exposition = true);

}  // namespace demn
