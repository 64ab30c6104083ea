#pragma once
// Climax/option matching: sequence attention, the three comparison features
// and gated multi-turn memory aggregation.

#include <string>
#include <vector>

#include "demn/encoder.hpp"

namespace demn {

enum class MatchFeature { concat, subtract, multiply };

/// Parses "c", "cs", "csm", ... into the canonical c, s, m order.
std::vector<MatchFeature> parse_features(const std::string& spec);
std::string features_string(const std::vector<MatchFeature>& features);

struct MatchParams {
    // Projection pointers are null for features outside the configured subset.
    Parameter* w_concat = nullptr;    // 4h × 2h
    Parameter* b_concat = nullptr;
    Parameter* w_subtract = nullptr;  // 2h × 2h
    Parameter* b_subtract = nullptr;
    Parameter* w_multiply = nullptr;  // 2h × 2h
    Parameter* b_multiply = nullptr;
    Parameter* w_in = nullptr;        // 4h × 2h, projects concat(u, m) into the aggregation BiLSTM
    BiLstmParams aggregator;          // shared across turns
    Parameter* w_gate = nullptr;      // 4h × 2h
    Parameter* b_gate = nullptr;      // 1 × 2h
};

/// `width` is the encoder output width 2h. Only the projections of the
/// selected features are created; the others stay null.
MatchParams register_match_params(ParamStore& store, std::size_t width, const std::vector<MatchFeature>& features,
                                  Rng& rng);

struct Attention {
    ad::Var output;   // m × d
    ad::Var weights;  // m × n, row-stochastic
};

/// x-aware y: β = softmax_rows(x·yᵀ), output = β·y.
Attention attend_with_weights(ad::Var x, ad::Var y);
ad::Var attend(ad::Var x, ad::Var y);

/// Climax content re-expressed per option position: attend(option, climax).
ad::Var option_aware_climax(ad::Var option, ad::Var climax);

/// ReLU projections of concat / difference / product of option and its
/// climax view, returned in c, s, m order filtered by `features`.
std::vector<ad::Var> match_features(ad::Var option, ad::Var option_climax, const MatchParams& params,
                                    const std::vector<MatchFeature>& features);

struct MatchTrace {
    std::vector<ad::Var> hidden;    // hᵗ
    std::vector<ad::Var> memories;  // m⁰ … mᵀ
    std::vector<ad::Var> gates;     // gᵗ
};

/// hᵗ = BiLSTM(W_in·[uᵗ ‖ mᵗ⁻¹]); gᵗ = σ(W_gate·[hᵗ ‖ mᵗ⁻¹] + b_gate);
/// mᵗ = gᵗ⊙hᵗ + (1−gᵗ)⊙mᵗ⁻¹. Returns mᵀ.
ad::Var aggregate_multi_turn(const std::vector<ad::Var>& features, ad::Var m0, const MatchParams& params,
                             MatchTrace* trace = nullptr);

/// Columnwise max ‖ columnwise mean → 1 × 2d.
ad::Var pool_aggregate(ad::Var memory);

}  // namespace demn
