#include "demn/matching.hpp"

#include "demn/error.hpp"

namespace demn {

std::vector<MatchFeature> parse_features(const std::string& spec) {
    bool c = false, s = false, m = false;
    for (char ch : spec) {
        switch (ch) {
            case 'c': c = true; break;
            case 's': s = true; break;
            case 'm': m = true; break;
            default:
                throw Error(ErrorKind::invalid_argument, "unknown matching feature '" + std::string(1, ch) + "'");
        }
    }
    std::vector<MatchFeature> out;
    if (c) out.push_back(MatchFeature::concat);
    if (s) out.push_back(MatchFeature::subtract);
    if (m) out.push_back(MatchFeature::multiply);
    if (out.empty()) throw Error(ErrorKind::empty_feature_set, "no matching features selected");
    return out;
}

std::string features_string(const std::vector<MatchFeature>& features) {
    std::string s;
    for (MatchFeature f : features) s += f == MatchFeature::concat ? 'c' : f == MatchFeature::subtract ? 's' : 'm';
    return s;
}

MatchParams register_match_params(ParamStore& store, std::size_t width, const std::vector<MatchFeature>& features,
                                  Rng& rng) {
    if (features.empty()) throw Error(ErrorKind::empty_feature_set, "no matching features selected");
    MatchParams p;
    for (MatchFeature f : features) {
        switch (f) {
            case MatchFeature::concat:
                p.w_concat = &store.add("match.w_concat", xavier_uniform(2 * width, width, rng));
                p.b_concat = &store.add("match.b_concat", Tensor(1, width));
                break;
            case MatchFeature::subtract:
                p.w_subtract = &store.add("match.w_subtract", xavier_uniform(width, width, rng));
                p.b_subtract = &store.add("match.b_subtract", Tensor(1, width));
                break;
            case MatchFeature::multiply:
                p.w_multiply = &store.add("match.w_multiply", xavier_uniform(width, width, rng));
                p.b_multiply = &store.add("match.b_multiply", Tensor(1, width));
                break;
        }
    }
    p.w_in = &store.add("match.w_in", xavier_uniform(2 * width, width, rng));
    p.aggregator = register_bilstm(store, "match.aggregator", width, width / 2, rng);
    p.w_gate = &store.add("match.w_gate", xavier_uniform(2 * width, width, rng));
    p.b_gate = &store.add("match.b_gate", Tensor(1, width));
    return p;
}

Attention attend_with_weights(ad::Var x, ad::Var y) {
    if (x.cols() != y.cols())
        throw Error(ErrorKind::dimension_mismatch,
                    "attend: " + x.value().shape_string() + " vs " + y.value().shape_string());
    ad::Var weights = ad::softmax_rows(ad::matmul_nt(x, y));
    return {ad::matmul(weights, y), weights};
}

ad::Var attend(ad::Var x, ad::Var y) { return attend_with_weights(x, y).output; }

ad::Var option_aware_climax(ad::Var option, ad::Var climax) { return attend(option, climax); }

std::vector<ad::Var> match_features(ad::Var option, ad::Var option_climax, const MatchParams& params,
                                    const std::vector<MatchFeature>& features) {
    if (features.empty()) throw Error(ErrorKind::empty_feature_set, "match_features needs at least one feature");
    ad::Tape& tape = *option.tape();
    auto project = [&](ad::Var in, Parameter* w, Parameter* b) {
        if (!w) throw Error(ErrorKind::invalid_argument, "matching feature was not registered");
        return ad::relu(ad::add_row(ad::matmul(in, tape.param(*w)), tape.param(*b)));
    };
    auto has = [&](MatchFeature f) {
        for (MatchFeature g : features)
            if (g == f) return true;
        return false;
    };
    std::vector<ad::Var> out;
    if (has(MatchFeature::concat))
        out.push_back(project(ad::concat_cols({option, option_climax}), params.w_concat, params.b_concat));
    if (has(MatchFeature::subtract))
        out.push_back(project(ad::sub(option, option_climax), params.w_subtract, params.b_subtract));
    if (has(MatchFeature::multiply))
        out.push_back(project(ad::mul(option, option_climax), params.w_multiply, params.b_multiply));
    return out;
}

ad::Var aggregate_multi_turn(const std::vector<ad::Var>& features, ad::Var m0, const MatchParams& params,
                             MatchTrace* trace) {
    if (features.empty()) throw Error(ErrorKind::empty_feature_set, "aggregation needs at least one turn");
    ad::Tape& tape = *m0.tape();
    ad::Var w_in = tape.param(*params.w_in);
    ad::Var w_gate = tape.param(*params.w_gate);
    ad::Var b_gate = tape.param(*params.b_gate);
    ad::Var memory = m0;
    if (trace) trace->memories.push_back(m0);
    for (ad::Var u : features) {
        if (!u.value().same_shape(memory.value()))
            throw Error(ErrorKind::dimension_mismatch,
                        "turn input " + u.value().shape_string() + " vs memory " + memory.value().shape_string());
        ad::Var hidden = bilstm_encode(tape, ad::matmul(ad::concat_cols({u, memory}), w_in), params.aggregator);
        ad::Var gate = ad::sigmoid(ad::add_row(ad::matmul(ad::concat_cols({hidden, memory}), w_gate), b_gate));
        memory = ad::add(ad::mul(gate, hidden), ad::mul(ad::one_minus(gate), memory));
        if (trace) {
            trace->hidden.push_back(hidden);
            trace->gates.push_back(gate);
            trace->memories.push_back(memory);
        }
    }
    return memory;
}

ad::Var pool_aggregate(ad::Var memory) {
    return ad::concat_cols({ad::max_pool_rows(memory), ad::mean_pool_rows(memory)});
}

}  // namespace demn
