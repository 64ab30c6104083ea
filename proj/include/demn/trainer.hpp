#pragma once
// Optimization loop: holdout split, Adam, keep-best-on-dev training, evaluation.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "demn/model.hpp"

namespace demn {

struct TrainConfig {
    std::size_t batch_size = 64;
    double lr = 0.008;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t max_epochs = 50;
    std::uint64_t seed = 0;
    ModelConfig model;

    void validate() const;
};

/// Seeded shuffle; the first ⌊n/10⌋ stories form the dev part.
template <typename Story>
std::pair<std::vector<Story>, std::vector<Story>> split_holdout(const std::vector<Story>& stories,
                                                                std::uint64_t seed);

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;

    static AdamState for_params(const ParamStore& params);
};

/// One bias-corrected Adam update from the grad buffers. Frozen rows are left
/// untouched.
void adam_step(ParamStore& params, AdamState& state, const TrainConfig& config);

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;  // mean pairwise cross-entropy over labeled stories
    std::vector<int> predictions;
    std::vector<StoryScores> scores;
};

/// Dropout off; accuracy over stories whose label is 1 or 2.
EvalResult evaluate(const Model& model, const std::vector<data::FeaturizedStory>& stories);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean batch loss including the L2 term
    double train_acc = 0.0;
    double dev_acc = 0.0;
    double dev_loss = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_dev_acc = -1.0;
    double best_dev_loss = 0.0;
};

/// Trains for config.max_epochs, evaluating on `dev` after every epoch and
/// restoring the best-on-dev parameters (accuracy, then loss) before returning. Throws NonFinite
/// naming the parameter when a gradient blows up.
TrainResult train(Model& model, const std::vector<data::FeaturizedStory>& train_part,
                  const std::vector<data::FeaturizedStory>& dev_part, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace demn

#include "demn/trainer_impl.hpp"
