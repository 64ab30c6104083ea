#include <cmath>

#include "doctest.h"
#include "demn/encoder.hpp"
#include "demn/error.hpp"
#include "support.hpp"

using namespace demn;
using testutil::random_tensor;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One LSTM step written out from the cell equations.
void cell_step(const LstmParams& p, const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c) {
    const std::size_t H = p.hidden;
    std::vector<double> z(4 * H);
    for (std::size_t j = 0; j < 4 * H; ++j) {
        double acc = p.b->value(0, j);
        for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * p.w_x->value(i, j);
        for (std::size_t i = 0; i < H; ++i) acc += h[i] * p.w_h->value(i, j);
        z[j] = acc;
    }
    for (std::size_t j = 0; j < H; ++j) {
        const double in = sigm(z[j]), f = sigm(z[H + j]), g = std::tanh(z[2 * H + j]), o = sigm(z[3 * H + j]);
        c[j] = f * c[j] + in * g;
        h[j] = o * std::tanh(c[j]);
    }
}

Tensor oracle_run(const LstmParams& p, const Tensor& x, bool reverse) {
    const std::size_t n = x.rows(), H = p.hidden;
    Tensor out(n, H);
    std::vector<double> h(H, 0.0), c(H, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t t = reverse ? n - 1 - k : k;
        std::vector<double> xt(x.row(t).begin(), x.row(t).end());
        cell_step(p, xt, h, c);
        for (std::size_t j = 0; j < H; ++j) out(t, j) = h[j];
    }
    return out;
}

struct EncoderFixture {
    data::LabeledStory story = testutil::example_story();
    data::Vocab vocab;
    ParamStore store;
    EmbeddingParams emb;
    BiLstmParams enc;

    explicit EncoderFixture(std::size_t hidden = 5, std::size_t d_w = 6) {
        vocab = testutil::small_vocab({story}, d_w);
        Rng rng(21);
        EmbeddingDims dims;
        dims.d_pos = 3;
        dims.d_ner = 2;
        dims.d_rel = 2;
        emb = register_embedding_params(store, vocab, dims, rng);
        enc = register_bilstm(store, "encoder", emb.input_width(), hidden, rng);
    }
};

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("dropout keeps sixty percent at rate 0.4") {
    Rng rng(2024);
    Tensor mask = dropout_mask(100, 1000, 0.4, rng);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] != 0.0) {
            ++kept;
            CHECK(mask[i] == doctest::Approx(1.0 / 0.6));
        }
    }
    const double frac = static_cast<double>(kept) / static_cast<double>(mask.size());
    CHECK(std::abs(frac - 0.6) < 0.01);
}

TEST_CASE("dropout is the identity outside training") {
    EncoderFixture fx;
    auto feats = data::featurize(fx.story, fx.vocab);
    Rng r1(1), r2(999);
    ad::Tape t1(false), t2(false);
    ForwardContext c1{t1, false, &r1}, c2{t2, false, &r2};
    CHECK(embed(c1, feats.exposition(), fx.emb, 0.4).value() == embed(c2, feats.exposition(), fx.emb, 0.4).value());

    ad::Tape t3(false);
    Rng r3(1);
    ForwardContext c3{t3, true, &r3};
    CHECK(embed(c3, feats.exposition(), fx.emb, 0.4).value() != embed(c1, feats.exposition(), fx.emb, 0.4).value());
}

TEST_CASE("embedding row layout") {
    EncoderFixture fx;
    auto feats = data::featurize(fx.story, fx.vocab);
    ad::Tape tape(false);
    ForwardContext ctx{tape, false, nullptr};
    const auto& seq = feats.ending(2);
    Tensor x = embed(ctx, seq, fx.emb, 0.4).value();
    REQUIRE(x.rows() == seq.length());
    REQUIRE(x.cols() == fx.emb.input_width());
    CHECK(fx.emb.input_width() == 6 + 3 + 2 + 2 + 2);
    for (std::size_t t = 0; t < seq.length(); ++t) {
        for (std::size_t j = 0; j < 6; ++j) CHECK(x(t, j) == fx.vocab.embeddings(seq.token_ids[t], j));
        for (std::size_t j = 6; j < 13; ++j) CHECK(x(t, j) == 0.0);
        CHECK(x(t, 13) == seq.tf[t]);
        CHECK(x(t, 14) == seq.exact_match[t]);
    }
}

TEST_CASE("lstm matches a hand-rolled cell") {
    Rng rng(8);
    ParamStore store;
    auto bi = register_bilstm(store, "l", 4, 3, rng);
    for (auto& p : store)
        for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] += rng.uniform(-0.3, 0.3);
    Tensor x = random_tensor(3, 4, rng);
    ad::Tape tape(false);
    auto xv = tape.constant(x);
    CHECK(testutil::max_abs_diff(lstm_run(tape, xv, bi.forward, false).value(), oracle_run(bi.forward, x, false)) <
          1e-14);
    CHECK(testutil::max_abs_diff(lstm_run(tape, xv, bi.backward, true).value(), oracle_run(bi.backward, x, true)) <
          1e-14);

    Tensor both = bilstm_encode(tape, xv, bi).value();
    Tensor f = oracle_run(bi.forward, x, false), b = oracle_run(bi.backward, x, true);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(both(t, j) == doctest::Approx(f(t, j)).epsilon(1e-13));
            CHECK(both(t, 3 + j) == doctest::Approx(b(t, j)).epsilon(1e-13));
        }
}

TEST_CASE("lstm initialization") {
    Rng rng(8);
    ParamStore store;
    auto bi = register_bilstm(store, "l", 4, 3, rng);
    CHECK(store.find("l.fwd.w_x") != nullptr);
    CHECK(store.find("l.bwd.b") != nullptr);
    CHECK(bi.forward.w_x->value.rows() == 4);
    CHECK(bi.forward.w_x->value.cols() == 12);
    CHECK(bi.forward.w_h->value.rows() == 3);
    for (std::size_t j = 0; j < 12; ++j) CHECK(bi.forward.b->value(0, j) == (j >= 3 && j < 6 ? 1.0 : 0.0));
    const double limit = std::sqrt(6.0 / (4 + 12));
    for (double w : bi.forward.w_x->value.values()) CHECK(std::abs(w) <= limit);
}

TEST_CASE("single-step sequence concatenates both directions") {
    Rng rng(4);
    ParamStore store;
    auto bi = register_bilstm(store, "l", 2, 2, rng);
    Tensor x = random_tensor(1, 2, rng);
    ad::Tape tape(false);
    Tensor out = bilstm_encode(tape, tape.constant(x), bi).value();
    Tensor f = oracle_run(bi.forward, x, false), b = oracle_run(bi.backward, x, false);
    CHECK(out.rows() == 1);
    CHECK(out(0, 0) == doctest::Approx(f(0, 0)).epsilon(1e-14));
    CHECK(out(0, 1) == doctest::Approx(f(0, 1)).epsilon(1e-14));
    CHECK(out(0, 2) == doctest::Approx(b(0, 0)).epsilon(1e-14));
    CHECK(out(0, 3) == doctest::Approx(b(0, 1)).epsilon(1e-14));
}

TEST_CASE("zero input with zero biases stays at zero") {
    Rng rng(4);
    ParamStore store;
    auto bi = register_bilstm(store, "l", 3, 4, rng);
    bi.forward.b->value.fill(0.0);
    bi.backward.b->value.fill(0.0);
    ad::Tape tape(false);
    Tensor out = bilstm_encode(tape, tape.constant(Tensor(5, 3)), bi).value();
    CHECK(out == Tensor(5, 8));
}

TEST_CASE("encoded shapes for the worked example") {
    EncoderFixture fx(96, 50);
    auto feats = data::featurize(fx.story, fx.vocab);
    ad::Tape tape(false);
    ForwardContext ctx{tape, false, nullptr};
    auto enc = encode_story(ctx, feats, fx.emb, fx.enc, 0.4);
    // 22 words and punctuation plus two sentence markers.
    CHECK(enc.exposition.rows() == 24);
    CHECK(enc.exposition.cols() == 192);
    CHECK(enc.climax.rows() == 5);
    CHECK(enc.climax.cols() == 192);
    CHECK(enc.ending1.rows() == 7);
    CHECK(enc.ending2.rows() == 12);
    for (auto v : {enc.exposition, enc.climax, enc.ending1, enc.ending2})
        for (double x : v.value().values()) {
            CHECK(x > -1.0);
            CHECK(x < 1.0);
        }
}

TEST_CASE("endings are encoded independently of their order") {
    EncoderFixture fx;
    auto same = fx.story;
    same.ending2 = same.ending1;
    ad::Tape tape(false);
    ForwardContext ctx{tape, false, nullptr};
    auto enc = encode_story(ctx, data::featurize(same, fx.vocab), fx.emb, fx.enc, 0.4);
    CHECK(enc.ending1.value() == enc.ending2.value());

    auto swapped = fx.story;
    std::swap(swapped.ending1, swapped.ending2);
    auto a = encode_story(ctx, data::featurize(fx.story, fx.vocab), fx.emb, fx.enc, 0.4);
    auto b = encode_story(ctx, data::featurize(swapped, fx.vocab), fx.emb, fx.enc, 0.4);
    CHECK(a.exposition.value() == b.exposition.value());
    CHECK(a.climax.value() == b.climax.value());
    CHECK(a.ending1.value() == b.ending2.value());

    auto no_expo = encode_story(ctx, data::featurize(fx.story, fx.vocab), fx.emb, fx.enc, 0.4, false);
    CHECK_FALSE(no_expo.exposition.valid());
}

TEST_CASE("frozen embedding rows receive no gradient") {
    EncoderFixture fx;
    auto& word = *fx.emb.word;
    const std::size_t tom = fx.vocab.lookup("tom");
    word.frozen_rows[tom] = 1;
    auto feats = data::featurize(fx.story, fx.vocab);
    ad::Tape tape(true);
    ForwardContext ctx{tape, false, nullptr};
    auto enc = encode_story(ctx, feats, fx.emb, fx.enc, 0.0);
    tape.backward(ad::sum(ad::mul(enc.ending2, enc.ending2)));
    double frozen_norm = 0.0, live_norm = 0.0;
    for (std::size_t j = 0; j < word.value.cols(); ++j) {
        frozen_norm += std::abs(word.grad(tom, j)) + std::abs(word.grad(0, j));
        live_norm += std::abs(word.grad(fx.vocab.lookup("hurried"), j));
    }
    CHECK(frozen_norm == 0.0);
    CHECK(live_norm > 0.0);
    // Tag tables: only padding was used, and padding is frozen.
    for (double g : fx.emb.pos->grad.values()) CHECK(g == 0.0);
}

}
