#include "demn/encoder.hpp"

#include <cmath>

#include "demn/error.hpp"

namespace demn {

Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Tensor mask(rows, cols);
    const double keep = 1.0 / (1.0 - rate);
    for (double& m : mask.values()) m = rng.uniform() < rate ? 0.0 : keep;
    return mask;
}

ad::Var dropout(ForwardContext& ctx, ad::Var x, double rate) {
    if (!ctx.training || rate <= 0.0) return x;
    if (ctx.rng == nullptr) throw Error(ErrorKind::invalid_argument, "training forward without a dropout stream");
    return ad::mask_mul(x, dropout_mask(x.rows(), x.cols(), rate, *ctx.rng));
}

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w(fan_in, fan_out);
    for (double& x : w.values()) x = rng.uniform(-limit, limit);
    return w;
}

std::size_t EmbeddingParams::input_width() const {
    return word->value.cols() + pos->value.cols() + ner->value.cols() + rel->value.cols() + 2;
}

namespace {

Parameter& tag_table(ParamStore& store, const std::string& name, std::size_t rows, std::size_t dim, Rng& rng) {
    Tensor t(rows, dim);
    for (std::size_t r = 1; r < rows; ++r)
        for (double& x : t.row(r)) x = rng.uniform(-0.05, 0.05);
    Parameter& p = store.add(name, std::move(t));
    p.frozen_rows.assign(rows, 0);
    p.frozen_rows[0] = 1;
    return p;
}

}  // namespace

EmbeddingParams register_embedding_params(ParamStore& store, const data::Vocab& vocab, const EmbeddingDims& dims,
                                          Rng& rng) {
    EmbeddingParams p;
    p.word = &store.add("embed.word", vocab.embeddings);
    p.word->frozen_rows = vocab.frozen;
    if (p.word->frozen_rows.empty()) p.word->frozen_rows.assign(vocab.size(), 0);
    p.word->frozen_rows[0] = 1;
    p.pos = &tag_table(store, "embed.pos", dims.tables.pos, dims.d_pos, rng);
    p.ner = &tag_table(store, "embed.ner", dims.tables.ner, dims.d_ner, rng);
    p.rel = &tag_table(store, "embed.rel", dims.tables.rel, dims.d_rel, rng);
    return p;
}

BiLstmParams register_bilstm(ParamStore& store, const std::string& prefix, std::size_t input_width,
                             std::size_t hidden, Rng& rng) {
    auto one = [&](const std::string& dir) {
        LstmParams p;
        p.hidden = hidden;
        p.w_x = &store.add(prefix + "." + dir + ".w_x", xavier_uniform(input_width, 4 * hidden, rng));
        p.w_h = &store.add(prefix + "." + dir + ".w_h", xavier_uniform(hidden, 4 * hidden, rng));
        Tensor b(1, 4 * hidden);
        for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
        p.b = &store.add(prefix + "." + dir + ".b", std::move(b));
        return p;
    };
    BiLstmParams out;
    out.forward = one("fwd");
    out.backward = one("bwd");
    return out;
}

ad::Var embed(ForwardContext& ctx, const data::SequenceFeatures& seq, const EmbeddingParams& params,
              double dropout_rate) {
    if (seq.length() == 0) throw Error(ErrorKind::invalid_argument, "cannot embed an empty sequence");
    ad::Tape& tape = ctx.tape;
    const std::size_t n = seq.length();
    ad::Var word = dropout(ctx, ad::gather_rows(tape, *params.word, seq.token_ids), dropout_rate);
    ad::Var pos = ad::gather_rows(tape, *params.pos, seq.pos);
    ad::Var ner = ad::gather_rows(tape, *params.ner, seq.ner);
    ad::Var rel = ad::gather_rows(tape, *params.rel, seq.rel);
    ad::Var tf = tape.constant(Tensor({n, 1}, seq.tf));
    ad::Var em = tape.constant(Tensor({n, 1}, seq.exact_match));
    return ad::concat_cols({word, pos, ner, rel, tf, em});
}

ad::Var lstm_run(ad::Tape& tape, ad::Var x, const LstmParams& params, bool reverse) {
    const std::size_t n = x.rows();
    const std::size_t h = params.hidden;
    if (n == 0) throw Error(ErrorKind::invalid_argument, "lstm over an empty sequence");
    ad::Var w_h = tape.param(*params.w_h);
    ad::Var projected = ad::add_row(ad::matmul(x, tape.param(*params.w_x)), tape.param(*params.b));

    std::vector<ad::Var> outputs(n);
    ad::Var h_prev, c_prev;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t t = reverse ? n - 1 - k : k;
        ad::Var z = ad::slice_rows(projected, t, 1);
        if (h_prev.valid()) z = ad::add(z, ad::matmul(h_prev, w_h));
        ad::Var gates = ad::sigmoid(z);
        ad::Var in_gate = ad::slice_cols(gates, 0, h);
        ad::Var forget_gate = ad::slice_cols(gates, h, h);
        ad::Var out_gate = ad::slice_cols(gates, 3 * h, h);
        ad::Var candidate = ad::tanh(ad::slice_cols(z, 2 * h, h));
        ad::Var c = ad::mul(in_gate, candidate);
        if (c_prev.valid()) c = ad::add(ad::mul(forget_gate, c_prev), c);
        ad::Var hidden = ad::mul(out_gate, ad::tanh(c));
        outputs[t] = hidden;
        h_prev = hidden;
        c_prev = c;
    }
    return ad::concat_rows(outputs);
}

ad::Var bilstm_encode(ad::Tape& tape, ad::Var x, const BiLstmParams& params) {
    ad::Var fwd = lstm_run(tape, x, params.forward, false);
    ad::Var bwd = lstm_run(tape, x, params.backward, true);
    return ad::concat_cols({fwd, bwd});
}

EncodedStory encode_story(ForwardContext& ctx, const data::FeaturizedStory& story, const EmbeddingParams& embedding,
                          const BiLstmParams& encoder, double dropout_rate, bool with_exposition) {
    auto run = [&](const data::SequenceFeatures& seq) {
        return bilstm_encode(ctx.tape, embed(ctx, seq, embedding, dropout_rate), encoder);
    };
    EncodedStory out;
    if (with_exposition) out.exposition = run(story.exposition());
    out.climax = run(story.climax());
    out.ending1 = run(story.ending(1));
    out.ending2 = run(story.ending(2));
    return out;
}

}  // namespace demn
