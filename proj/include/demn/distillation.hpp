#pragma once
// Exposition distillation: climax- and option-conditioned re-weighting of the
// exposition, the memory initialization built from it, and its
// self-attention summary vector.

#include "demn/matching.hpp"

namespace demn {

struct DistillOptions {
    bool climax_aware = true;  // keep the (ē − ẽᶜ) factor in s
    bool option_aware = true;  // keep the (ē − ẽᵒ) factor in s
};

struct DistillTrace {
    ad::Var exposition_climax;  // ẽᶜ = attend(ē, c̄)
    ad::Var exposition_option;  // ẽᵒ = attend(ē, ō)
    ad::Var scores;             // s
    ad::Var weights;            // α = softmax_rows(s·sᵀ), |e| × |e|
};

/// ẽ = softmax_rows(s·sᵀ)·ē with s = (ē − ẽᶜ) ⊙ (ē − ẽᵒ). Dropping a factor
/// through `options` removes it from the product; dropping both leaves s = ē.
ad::Var distill_exposition(ad::Var exposition, ad::Var climax, ad::Var option, const DistillOptions& options = {},
                           DistillTrace* trace = nullptr);

/// Option-aware distilled exposition, used as the initial matching memory.
ad::Var deem_init(ad::Var option, ad::Var distilled);

struct DistillParams {
    Parameter* w_self = nullptr;  // 1 × 2h
};

DistillParams register_distill_params(ParamStore& store, std::size_t width, Rng& rng);

/// ê = Σᵢ softmaxᵢ(w_self·ẽᵢ) ẽᵢ → 1 × 2h. Optionally exposes the weights.
ad::Var deeav_vector(ad::Var distilled, const DistillParams& params, ad::Var* weights = nullptr);

}  // namespace demn
