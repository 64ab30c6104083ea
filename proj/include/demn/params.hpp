#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "demn/tensor.hpp"

namespace demn {

/// A learned tensor with its gradient buffer. Rows listed in frozen_rows are
/// never written by the optimizer and receive no gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    std::vector<std::uint8_t> frozen_rows;  // empty, or one flag per row

    bool row_frozen(std::size_t r) const { return !frozen_rows.empty() && frozen_rows[r] != 0; }
    bool coord_frozen(std::size_t i) const { return !frozen_rows.empty() && frozen_rows[i / value.cols()] != 0; }
    std::size_t trainable_count() const;
};

/// Name-addressable, insertion-ordered parameter collection. Parameter
/// addresses are stable for the store's lifetime.
class ParamStore {
public:
    ParamStore() = default;
    ParamStore(const ParamStore&) = delete;
    ParamStore& operator=(const ParamStore&) = delete;
    ParamStore(ParamStore&&) = default;
    ParamStore& operator=(ParamStore&&) = default;

    Parameter& add(std::string name, Tensor value);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    std::size_t size() const { return params_.size(); }
    Parameter& at(std::size_t i) { return *params_[i]; }
    const Parameter& at(std::size_t i) const { return *params_[i]; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad();
    /// Total number of scalars across all parameters.
    std::size_t scalar_count() const;
    /// Number of scalars the optimizer may change.
    std::size_t trainable_count() const;
    /// Σθ² over trainable coordinates.
    double squared_norm() const;

    std::vector<Tensor> snapshot() const;
    void restore(const std::vector<Tensor>& values);

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace demn
