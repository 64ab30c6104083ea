#include "demn/trainer.hpp"

#include <cmath>

namespace demn {

void TrainConfig::validate() const {
    auto rate = [](double r, const char* what) {
        if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorKind::invalid_argument, std::string(what) + " must be in [0,1)");
    };
    rate(model.dropout_word, "dropout_word");
    rate(model.dropout_memory, "dropout_memory");
    rate(beta1, "beta1");
    rate(beta2, "beta2");
    if (!(lr >= 0.0)) throw Error(ErrorKind::invalid_argument, "lr must be non-negative");
    if (batch_size == 0) throw Error(ErrorKind::invalid_argument, "batch_size must be positive");
    model.ablation.validate();
}

AdamState AdamState::for_params(const ParamStore& params) {
    AdamState s;
    for (const auto& p : params) {
        s.m.push_back(Tensor::zeros_like(p->value));
        s.v.push_back(Tensor::zeros_like(p->value));
    }
    return s;
}

void adam_step(ParamStore& params, AdamState& state, const TrainConfig& config) {
    if (state.m.size() != params.size()) state = AdamState::for_params(params);
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = params.at(pi);
        Tensor& m = state.m[pi];
        Tensor& v = state.v[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            if (p.coord_frozen(i)) continue;
            const double g = p.grad[i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p.value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    }
}

EvalResult evaluate(const Model& model, const std::vector<data::FeaturizedStory>& stories) {
    EvalResult r;
    std::size_t correct = 0, labeled = 0;
    for (const auto& s : stories) {
        const StoryScores sc = model.score(s);
        const int pred = predict(sc);
        r.scores.push_back(sc);
        r.predictions.push_back(pred);
        if (s.label == 1 || s.label == 2) {
            ++labeled;
            correct += pred == s.label;
            r.loss += pair_cross_entropy(sc.score1, sc.score2, s.label);
        }
    }
    r.accuracy = labeled == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(labeled);
    if (labeled) r.loss /= static_cast<double>(labeled);
    return r;
}

TrainResult train(Model& model, const std::vector<data::FeaturizedStory>& train_part,
                  const std::vector<data::FeaturizedStory>& dev_part, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    if (train_part.empty() || dev_part.empty())
        throw Error(ErrorKind::invalid_argument, "train and dev parts must both be non-empty");

    ParamStore& params = model.params();
    AdamState adam = AdamState::for_params(params);
    Rng rng(config.seed);
    std::vector<std::size_t> order(train_part.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    std::vector<Tensor> best;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        Rng dropout_rng = rng.fork(epoch);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double weight = 1.0 / static_cast<double>(end - start);
            params.zero_grad();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i)
                batch_loss += weight * model.accumulate_gradients(train_part[order[i]], weight, true, &dropout_rng);
            batch_loss += model.l2_penalty();
            model.add_l2_gradient();
            for (const auto& p : params)
                if (!p->grad.all_finite())
                    throw Error(ErrorKind::non_finite,
                                "gradient of " + p->name + " at epoch " + std::to_string(epoch));
            adam_step(params, adam, config);
            loss_sum += batch_loss;
            ++batches;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(batches);
        entry.train_acc = evaluate(model, train_part).accuracy;
        const EvalResult dev = evaluate(model, dev_part);
        entry.dev_acc = dev.accuracy;
        entry.dev_loss = dev.loss;
        result.log.push_back(entry);
        // Ties on accuracy go to the lower dev loss, then to the earlier epoch.
        if (entry.dev_acc > result.best_dev_acc ||
            (entry.dev_acc == result.best_dev_acc && entry.dev_loss < result.best_dev_loss)) {
            result.best_dev_acc = entry.dev_acc;
            result.best_dev_loss = entry.dev_loss;
            result.best_epoch = epoch;
            best = params.snapshot();
        }
        if (on_epoch) on_epoch(entry);
    }
    if (!best.empty()) params.restore(best);
    return result;
}

}  // namespace demn
