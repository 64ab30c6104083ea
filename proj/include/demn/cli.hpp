#pragma once
// Command-line front end: train, eval, ablate, visualize.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "demn/checkpoint.hpp"

namespace demn::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error or missing input.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Where stories come from: a ROCStories CSV or a generated planted corpus.
struct DataSource {
    std::optional<std::filesystem::path> csv;
    std::size_t synthetic = 0;
    std::size_t synthetic_vocab = 40;
    std::uint64_t synthetic_seed = 1;
};

struct ModelFlags {
    std::size_t hidden = 96;
    std::size_t mlp_hidden = 96;
    std::size_t d_w = 0;  // 0: width of the embedding file, or 50 without one
    std::size_t batch_size = 64;
    double lr = 0.008;
    std::size_t epochs = 50;
    std::uint64_t seed = 1;
    std::string features = "csm";
    bool no_deem = false;
    bool no_deeav = false;
    bool no_distill = false;
    bool no_exp_aware_climax = false;
    bool no_exp_aware_option = false;
    bool no_exp_aware_both = false;
};

struct TrainArgs {
    DataSource data;
    std::optional<std::filesystem::path> test;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> annotations;
    ModelFlags model;
    std::filesystem::path out;
    std::optional<std::filesystem::path> log;  // default: <out>.log.jsonl
};

struct EvalArgs {
    std::filesystem::path checkpoint;
    DataSource data;
    std::optional<std::filesystem::path> annotations;
    std::optional<std::filesystem::path> predictions;
};

struct AblateArgs {
    DataSource data;
    std::optional<std::filesystem::path> test;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> annotations;
    ModelFlags model;
    std::filesystem::path out;
    std::vector<std::string> configs;  // empty: all defaults
};

struct VisualizeArgs {
    std::filesystem::path checkpoint;
    DataSource data;
    std::optional<std::filesystem::path> annotations;
    std::string story_id;
    int ending = 1;
    std::filesystem::path out;
};

TrainConfig make_train_config(const ModelFlags& flags);

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err);
int cmd_visualize(const VisualizeArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv (program name first) and dispatches to a subcommand.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace demn::cli
