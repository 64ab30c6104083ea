#include <cmath>

#include "doctest.h"
#include "demn/error.hpp"
#include "demn/model.hpp"
#include "support.hpp"

using namespace demn;
using testutil::random_tensor;

namespace {

std::size_t bilstm_count(std::size_t in, std::size_t h) { return 2 * (in * 4 * h + h * 4 * h + 4 * h); }

// Parameter count derived from the layer shapes, independent of the registry.
std::size_t count_oracle(const ModelConfig& c, std::size_t vocab_size, std::size_t d_w) {
    const std::size_t h = c.hidden, w = 2 * h, mlp = c.mlp_hidden;
    const auto& e = c.embedding;
    std::size_t n = vocab_size * d_w + e.tables.pos * e.d_pos + e.tables.ner * e.d_ner + e.tables.rel * e.d_rel;
    n += bilstm_count(d_w + e.d_pos + e.d_ner + e.d_rel + 2, h);
    for (MatchFeature f : c.ablation.features) n += (f == MatchFeature::concat ? 2 * w * w : w * w) + w;
    n += 2 * w * w;                      // input projection of the aggregator
    n += bilstm_count(w, h);             // aggregation BiLSTM
    n += 2 * w * w + w;                  // gate
    if (c.ablation.deeav) n += w;        // self-attention vector
    const std::size_t head_in = c.ablation.deeav ? 3 * w : 2 * w;
    n += head_in * mlp + mlp + mlp + 1;  // two-layer scorer
    return n;
}

struct ModelFixture {
    std::vector<data::LabeledStory> stories = data::gen_synthetic(12, 30, 4);
    data::Vocab vocab;
    explicit ModelFixture() {
        stories.push_back(testutil::example_story());
        vocab = testutil::small_vocab(stories);
    }
    data::FeaturizedStory feats(const data::LabeledStory& s) const { return data::featurize(s, vocab); }
};

}  // namespace

TEST_SUITE("head") {

TEST_CASE("scorer arithmetic") {
    Rng rng(1);
    ParamStore store;
    auto head = register_head_params(store, 6, 4, rng);
    CHECK(head.input_width() == 6);

    SUBCASE("zero input and zero parameters score zero") {
        for (auto& p : store) p->value.fill(0.0);
        ad::Tape tape(false);
        CHECK(score_option(tape.constant(Tensor(1, 6)), std::nullopt, head).value()[0] == 0.0);
    }
    SUBCASE("straight-line formula and the tanh bound") {
        for (int rep = 0; rep < 30; ++rep) {
            for (auto& p : store)
                for (double& x : p->value.values()) x = rng.uniform(-2, 2);
            Tensor pooled = random_tensor(1, 4, rng, -3, 3), summary = random_tensor(1, 2, rng, -3, 3);
            ad::Tape tape(false);
            const double got = score_option(tape.constant(pooled), tape.constant(summary), head).value()[0];
            std::vector<double> v(pooled.values().begin(), pooled.values().end());
            v.insert(v.end(), summary.values().begin(), summary.values().end());
            double expect = head.b2->value[0], bound = std::abs(head.b2->value[0]);
            for (std::size_t k = 0; k < 4; ++k) {
                double a = head.b1->value[k];
                for (std::size_t i = 0; i < 6; ++i) a += v[i] * head.w1->value(i, k);
                expect += std::tanh(a) * head.w2->value(k, 0);
                bound += std::abs(head.w2->value(k, 0));
            }
            CHECK(got == doctest::Approx(expect).epsilon(1e-13));
            CHECK(std::abs(got) <= bound);
        }
    }
    SUBCASE("width mismatch") {
        ad::Tape tape(false);
        try {
            score_option(tape.constant(Tensor(1, 4)), std::nullopt, head);
            FAIL("expected WidthMismatch");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::width_mismatch);
        }
    }
}

TEST_CASE("pairwise loss and prediction") {
    CHECK(pair_cross_entropy(0.3, 0.3, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(pair_cross_entropy(-1.7, -1.7, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(pair_cross_entropy(60.0, 0.0, 1) < 1e-25);
    CHECK(pair_cross_entropy(60.0, 0.0, 2) == doctest::Approx(60.0));
    CHECK(predict(make_scores(0.2, 0.7)) == 2);
    CHECK(predict(make_scores(0.5, 0.5)) == 1);
    auto s = make_scores(1000.0, -1000.0);
    CHECK(s.p1 == 1.0);
    CHECK(s.p2 == 0.0);
    CHECK(make_scores(0.0, std::log(3.0)).p2 == doctest::Approx(0.75));
}

TEST_CASE("identical endings score identically") {
    ModelFixture fx;
    Model model(testutil::tiny_config(), fx.vocab, 2);
    auto s = fx.stories.back();
    s.ending1 = s.ending2;
    auto sc = model.score(fx.feats(s));
    CHECK(sc.score1 == sc.score2);
}

TEST_CASE("swapping endings swaps scores") {
    ModelFixture fx;
    Model model(testutil::tiny_config(), fx.vocab, 3);
    for (const auto& s : fx.stories) {
        auto swapped = s;
        std::swap(swapped.ending1, swapped.ending2);
        swapped.label = 3 - s.label;
        auto a = model.score(fx.feats(s));
        auto b = model.score(fx.feats(swapped));
        CHECK(a.score1 == b.score2);
        CHECK(a.score2 == b.score1);
    }
}

TEST_CASE("the option-climax baseline ignores the exposition") {
    ModelFixture fx;
    ModelConfig cfg = testutil::tiny_config();
    cfg.ablation.deem = false;
    cfg.ablation.deeav = false;
    Model base(cfg, fx.vocab, 4);
    Model full(testutil::tiny_config(), fx.vocab, 4);
    for (const auto& s : fx.stories) {
        auto in_story = [&](const std::string& t) {
            for (const auto* seq : {&s.exposition, &s.climax, &s.ending1, &s.ending2})
                if (std::find(seq->begin(), seq->end(), t) != seq->end()) return true;
            return false;
        };
        auto shared = [&](const std::string& t) {
            for (const auto* seq : {&s.climax, &s.ending1, &s.ending2})
                if (std::find(seq->begin(), seq->end(), t) != seq->end()) return true;
            return false;
        };
        std::vector<std::string> fresh;
        for (const auto& t : fx.vocab.tokens)
            if (t != data::kPadToken && t != data::kUnkToken && !in_story(t)) fresh.push_back(t);
        REQUIRE(!fresh.empty());

        // Rewrite every exposition word the climax and endings do not use.
        auto edited = s;
        std::size_t k = 0, changed = 0;
        for (auto& t : edited.exposition)
            if (t != data::kSentenceMarker && !shared(t)) t = fresh[k++ % fresh.size()], ++changed;
        REQUIRE(changed > 0);

        auto a = base.score(fx.feats(s));
        auto b = base.score(fx.feats(edited));
        CHECK(a.score1 == b.score1);
        CHECK(a.score2 == b.score2);

        auto c = full.score(fx.feats(s));
        auto d = full.score(fx.feats(edited));
        CHECK((c.score1 != d.score1 || c.score2 != d.score2));
    }
}

TEST_CASE("memory starts at zero without the exposition memory") {
    ModelFixture fx;
    ModelConfig cfg = testutil::tiny_config();
    cfg.ablation.deem = false;
    Model model(cfg, fx.vocab, 5);
    ad::Tape tape(false);
    ForwardContext ctx{tape, false, nullptr};
    auto f = model.forward(ctx, fx.feats(fx.stories[0]));
    for (const auto& tr : f.endings) {
        REQUIRE(tr.match.memories.size() == 4);
        CHECK(tr.match.memories[0].value() == Tensor(tr.option.rows(), 8));
        CHECK(tr.summary.valid());
    }
}

TEST_CASE("parameter counts follow the layer shapes") {
    ModelFixture fx;
    const std::size_t V = fx.vocab.size(), dw = fx.vocab.dim();
    std::size_t full_count = 0;
    for (const auto& named : default_ablations()) {
        ModelConfig cfg = testutil::tiny_config();
        cfg.ablation = named.config;
        Model m(cfg, fx.vocab, 1);
        CAPTURE(named.name);
        CHECK(m.params().scalar_count() == count_oracle(cfg, V, dw));
        if (named.name == "full") full_count = m.params().scalar_count();
    }
    REQUIRE(full_count > 0);
    auto count_of = [&](const std::string& name) {
        for (const auto& named : default_ablations())
            if (named.name == name) {
                ModelConfig cfg = testutil::tiny_config();
                cfg.ablation = named.config;
                return Model(cfg, fx.vocab, 1).params().scalar_count();
            }
        FAIL("no such ablation");
        return std::size_t{0};
    };
    const std::size_t w = 8, mlp = 5;
    CHECK(count_of("no-deem") == full_count);
    CHECK(full_count - count_of("no-deeav") == w * mlp + w);
    CHECK(count_of("no-distill") == full_count);
    CHECK(count_of("no-exp-aware-both") == full_count);
    CHECK(full_count - count_of("features-cs") == w * w + w);
    CHECK(full_count - count_of("features-sm") == 2 * w * w + w);
    CHECK(full_count - count_of("features-c") == 2 * (w * w + w));
    CHECK(default_ablations().size() == 16);
}

TEST_CASE("ablation validation") {
    AblationConfig a;
    a.features.clear();
    CHECK_THROWS_AS(a.validate(), Error);
    AblationConfig b;
    b.deem = b.deeav = false;
    CHECK(b.exposition_unused());
    CHECK(b.turns() == 3);
}

}
