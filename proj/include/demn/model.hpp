#pragma once
// Full story scorer: encoder, matching, distillation and the output layer.

#include <array>
#include <cstdint>
#include <optional>

#include "demn/ablation.hpp"
#include "demn/distillation.hpp"

namespace demn {

struct ModelConfig {
    std::size_t hidden = 96;      // per BiLSTM direction; encoder width is 2·hidden
    std::size_t mlp_hidden = 96;
    EmbeddingDims embedding;
    double dropout_word = 0.4;
    double dropout_memory = 0.41;
    double l2 = 3e-8;
    AblationConfig ablation;
};

struct HeadParams {
    Parameter* w1 = nullptr;  // in × mlp_hidden
    Parameter* b1 = nullptr;
    Parameter* w2 = nullptr;  // mlp_hidden × 1
    Parameter* b2 = nullptr;
    std::size_t input_width() const { return w1->value.rows(); }
};

HeadParams register_head_params(ParamStore& store, std::size_t input_width, std::size_t hidden, Rng& rng);

/// W₂·tanh(W₁·v + b₁) + b₂ with v = pooled, or pooled ‖ summary when a summary
/// vector is given. Throws WidthMismatch when v does not fit the head.
ad::Var score_option(ad::Var pooled, const std::optional<ad::Var>& summary, const HeadParams& params);

struct StoryScores {
    double score1 = 0.0;
    double score2 = 0.0;
    double p1 = 0.5;
    double p2 = 0.5;
};

StoryScores make_scores(double score1, double score2);
/// argmax with ties going to ending 1.
int predict(const StoryScores& scores);
/// −log softmax(score1, score2)[label − 1]
double pair_cross_entropy(double score1, double score2, int label);

/// Intermediate values of one ending's pass, kept when tracing is requested.
struct EndingTrace {
    ad::Var option;
    ad::Var option_climax;
    std::vector<ad::Var> features;
    ad::Var distilled;  // invalid when the exposition is unused
    DistillTrace distill;
    MatchTrace match;
    ad::Var pooled;
    ad::Var summary;  // invalid without the summary vector
    ad::Var score;
};

struct StoryForward {
    ad::Var score1;
    ad::Var score2;
    std::array<EndingTrace, 2> endings;
};

class Model {
public:
    /// Builds parameters for `config` around the vocabulary's embedding table.
    Model(const ModelConfig& config, const data::Vocab& vocab, std::uint64_t seed);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    const ModelConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const EmbeddingParams& embedding() const { return embedding_; }
    const MatchParams& matching() const { return match_; }
    const HeadParams& head() const { return head_; }
    const std::optional<DistillParams>& distill_params() const { return distill_; }
    std::size_t encoder_width() const { return 2 * config_.hidden; }

    /// Encodes once, then scores each ending with the same parameters.
    StoryForward forward(ForwardContext& ctx, const data::FeaturizedStory& story) const;

    /// Evaluation-mode scores (no dropout, no recording).
    StoryScores score(const data::FeaturizedStory& story) const;

    /// Pairwise cross-entropy on a recorded tape → 1×1.
    ad::Var data_loss(ForwardContext& ctx, const data::FeaturizedStory& story) const;

    /// Runs forward+backward, adding weight·∂loss/∂θ into the grad buffers.
    /// Returns the data loss. Dropout is drawn from `rng` when training.
    double accumulate_gradients(const data::FeaturizedStory& story, double weight, bool training, Rng* rng);

    /// l2 · Σθ² over trainable coordinates.
    double l2_penalty() const;
    /// Adds 2·l2·θ to the grad buffers of trainable coordinates.
    void add_l2_gradient();

private:
    ModelConfig config_;
    ParamStore params_;
    EmbeddingParams embedding_;
    BiLstmParams encoder_;
    MatchParams match_;
    std::optional<DistillParams> distill_;
    HeadParams head_;
};

}  // namespace demn
