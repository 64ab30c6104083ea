#include "demn/params.hpp"

#include "demn/error.hpp"

namespace demn {

std::size_t Parameter::trainable_count() const {
    if (frozen_rows.empty()) return value.size();
    std::size_t n = 0;
    for (std::size_t r = 0; r < frozen_rows.size(); ++r)
        if (!frozen_rows[r]) n += value.cols();
    return n;
}

Parameter& ParamStore::add(std::string name, Tensor value) {
    if (find(name) != nullptr) throw Error(ErrorKind::invalid_argument, "duplicate parameter " + name);
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->grad = Tensor::zeros_like(value);
    p->value = std::move(value);
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

Parameter& ParamStore::get(const std::string& name) {
    if (auto* p = find(name)) return *p;
    throw Error(ErrorKind::invalid_argument, "no parameter named " + name);
}

const Parameter& ParamStore::get(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw Error(ErrorKind::invalid_argument, "no parameter named " + name);
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p->grad.fill(0.0);
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

std::size_t ParamStore::trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->trainable_count();
    return n;
}

double ParamStore::squared_norm() const {
    double s = 0.0;
    for (const auto& p : params_)
        for (std::size_t i = 0; i < p->value.size(); ++i)
            if (!p->coord_frozen(i)) s += p->value[i] * p->value[i];
    return s;
}

std::vector<Tensor> ParamStore::snapshot() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->value);
    return out;
}

void ParamStore::restore(const std::vector<Tensor>& values) {
    if (values.size() != params_.size()) throw Error(ErrorKind::dimension_mismatch, "snapshot size");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i].same_shape(params_[i]->value))
            throw Error(ErrorKind::dimension_mismatch, "snapshot shape for " + params_[i]->name);
        params_[i]->value = values[i];
    }
}

}  // namespace demn
