#include "demn/model.hpp"

#include <cmath>

#include "demn/error.hpp"

namespace demn {

void AblationConfig::validate() const {
    if (features.empty()) throw Error(ErrorKind::empty_feature_set, "ablation selects no matching features");
}

std::vector<NamedAblation> default_ablations() {
    std::vector<NamedAblation> out;
    auto add = [&](std::string name, auto edit) {
        AblationConfig c;
        edit(c);
        out.push_back({std::move(name), c});
    };
    add("full", [](AblationConfig&) {});
    add("no-deem", [](AblationConfig& c) { c.deem = false; });
    add("no-deeav", [](AblationConfig& c) { c.deeav = false; });
    add("no-distill", [](AblationConfig& c) { c.distillation = false; });
    add("no-distill-no-deem", [](AblationConfig& c) {
        c.distillation = false;
        c.deem = false;
    });
    add("no-distill-no-deeav", [](AblationConfig& c) {
        c.distillation = false;
        c.deeav = false;
    });
    add("no-exp-aware-climax", [](AblationConfig& c) { c.exp_aware_climax = false; });
    add("no-exp-aware-option", [](AblationConfig& c) { c.exp_aware_option = false; });
    add("no-exp-aware-both", [](AblationConfig& c) {
        c.exp_aware_climax = false;
        c.exp_aware_option = false;
    });
    for (const char* f : {"c", "s", "m", "cs", "cm", "sm", "csm"})
        add(std::string("features-") + f, [f](AblationConfig& c) { c.features = parse_features(f); });
    return out;
}

HeadParams register_head_params(ParamStore& store, std::size_t input_width, std::size_t hidden, Rng& rng) {
    HeadParams p;
    p.w1 = &store.add("head.w1", xavier_uniform(input_width, hidden, rng));
    p.b1 = &store.add("head.b1", Tensor(1, hidden));
    p.w2 = &store.add("head.w2", xavier_uniform(hidden, 1, rng));
    p.b2 = &store.add("head.b2", Tensor(1, 1));
    return p;
}

ad::Var score_option(ad::Var pooled, const std::optional<ad::Var>& summary, const HeadParams& params) {
    ad::Tape& tape = *pooled.tape();
    ad::Var v = summary ? ad::concat_cols({pooled, *summary}) : pooled;
    if (v.rows() != 1 || v.cols() != params.input_width())
        throw Error(ErrorKind::width_mismatch, "scorer expects 1x" + std::to_string(params.input_width()) +
                                                   ", got " + v.value().shape_string());
    ad::Var hidden = ad::tanh(ad::add(ad::matmul(v, tape.param(*params.w1)), tape.param(*params.b1)));
    return ad::add(ad::matmul(hidden, tape.param(*params.w2)), tape.param(*params.b2));
}

StoryScores make_scores(double score1, double score2) {
    StoryScores s;
    s.score1 = score1;
    s.score2 = score2;
    const double mx = std::max(score1, score2);
    const double e1 = std::exp(score1 - mx);
    const double e2 = std::exp(score2 - mx);
    s.p1 = e1 / (e1 + e2);
    s.p2 = 1.0 - s.p1;
    return s;
}

int predict(const StoryScores& scores) { return scores.score2 > scores.score1 ? 2 : 1; }

double pair_cross_entropy(double score1, double score2, int label) {
    const double mx = std::max(score1, score2);
    const double lse = mx + std::log(std::exp(score1 - mx) + std::exp(score2 - mx));
    return lse - (label == 1 ? score1 : score2);
}

Model::Model(const ModelConfig& config, const data::Vocab& vocab, std::uint64_t seed) : config_(config) {
    config_.ablation.validate();
    if (config_.hidden == 0 || config_.mlp_hidden == 0)
        throw Error(ErrorKind::invalid_argument, "hidden sizes must be positive");
    Rng rng(seed);
    const std::size_t width = 2 * config_.hidden;
    embedding_ = register_embedding_params(params_, vocab, config_.embedding, rng);
    encoder_ = register_bilstm(params_, "encoder", embedding_.input_width(), config_.hidden, rng);
    match_ = register_match_params(params_, width, config_.ablation.features, rng);
    if (config_.ablation.deeav) distill_ = register_distill_params(params_, width, rng);
    const std::size_t head_in = 2 * width + (config_.ablation.deeav ? width : 0);
    head_ = register_head_params(params_, head_in, config_.mlp_hidden, rng);
}

StoryForward Model::forward(ForwardContext& ctx, const data::FeaturizedStory& story) const {
    const AblationConfig& ab = config_.ablation;
    const bool use_exposition = !ab.exposition_unused();
    EncodedStory enc = encode_story(ctx, story, embedding_, encoder_, config_.dropout_word, use_exposition);

    StoryForward out;
    for (int k = 1; k <= 2; ++k) {
        EndingTrace& tr = out.endings[k - 1];
        tr.option = enc.ending(k);
        tr.option_climax = option_aware_climax(tr.option, enc.climax);
        tr.features = match_features(tr.option, tr.option_climax, match_, ab.features);

        if (use_exposition) {
            tr.distilled = ab.distillation
                               ? distill_exposition(enc.exposition, enc.climax, tr.option,
                                                    {ab.exp_aware_climax, ab.exp_aware_option}, &tr.distill)
                               : enc.exposition;
        }

        ad::Var m0 = ab.deem ? deem_init(tr.option, tr.distilled)
                             : ctx.tape.constant(Tensor::zeros(tr.option.rows(), encoder_width()));
        m0 = dropout(ctx, m0, config_.dropout_memory);

        ad::Var memory = aggregate_multi_turn(tr.features, m0, match_, &tr.match);
        tr.pooled = pool_aggregate(memory);
        std::optional<ad::Var> summary;
        if (ab.deeav) {
            tr.summary = deeav_vector(tr.distilled, *distill_);
            summary = tr.summary;
        }
        tr.score = score_option(tr.pooled, summary, head_);
    }
    out.score1 = out.endings[0].score;
    out.score2 = out.endings[1].score;
    return out;
}

StoryScores Model::score(const data::FeaturizedStory& story) const {
    ad::Tape tape(false);
    ForwardContext ctx{tape, false, nullptr};
    StoryForward f = forward(ctx, story);
    return make_scores(f.score1.value()[0], f.score2.value()[0]);
}

ad::Var Model::data_loss(ForwardContext& ctx, const data::FeaturizedStory& story) const {
    if (story.label != 1 && story.label != 2)
        throw Error(ErrorKind::bad_label, "story " + story.story_id + " has no usable label");
    StoryForward f = forward(ctx, story);
    ad::Var logp = ad::log_softmax_rows(ad::concat_cols({f.score1, f.score2}));
    return ad::scale(ad::pick(logp, 0, static_cast<std::size_t>(story.label - 1)), -1.0);
}

double Model::accumulate_gradients(const data::FeaturizedStory& story, double weight, bool training, Rng* rng) {
    ad::Tape tape(true);
    ForwardContext ctx{tape, training, rng};
    ad::Var loss = data_loss(ctx, story);
    tape.backward(loss, weight);
    return loss.value()[0];
}

double Model::l2_penalty() const { return config_.l2 * params_.squared_norm(); }

void Model::add_l2_gradient() {
    const double c = 2.0 * config_.l2;
    for (auto& p : params_)
        for (std::size_t i = 0; i < p->value.size(); ++i)
            if (!p->coord_frozen(i)) p->grad[i] += c * p->value[i];
}

}  // namespace demn
