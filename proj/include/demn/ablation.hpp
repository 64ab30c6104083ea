#pragma once

#include <string>
#include <vector>

#include "demn/matching.hpp"

namespace demn {

/// Switches over the exposition pathways and the matching-feature subset.
struct AblationConfig {
    bool deem = true;          // initial memory from the distilled exposition (else zeros)
    bool deeav = true;         // append the exposition summary vector to the scorer input
    bool distillation = true;  // off: raw encoder outputs stand in for the distilled exposition
    bool exp_aware_climax = true;
    bool exp_aware_option = true;
    std::vector<MatchFeature> features = {MatchFeature::concat, MatchFeature::subtract, MatchFeature::multiply};

    /// True when neither exposition pathway is active, so scores cannot depend
    /// on the exposition at all.
    bool exposition_unused() const { return !deem && !deeav; }
    std::size_t turns() const { return features.size(); }
    void validate() const;
};

struct NamedAblation {
    std::string name;
    AblationConfig config;
};

/// The sixteen comparison rows: six exposition-pathway rows (with and without
/// distillation), three distillation-score rows and seven feature subsets.
std::vector<NamedAblation> default_ablations();

}  // namespace demn
