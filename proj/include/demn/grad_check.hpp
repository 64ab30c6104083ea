#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "demn/params.hpp"

namespace demn {

struct GradCheckOptions {
    double eps = 1e-5;
    /// Coordinates sampled per parameter; smaller tensors are checked in full.
    std::size_t samples_per_tensor = 200;
    double threshold = 1e-4;
    /// Denominator floor; gradients smaller than this are judged on absolute error.
    double floor = 1e-8;
    std::uint64_t seed = 0;
};

struct GradCheckEntry {
    std::string param;
    std::size_t coords = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t coords_checked = 0;
    /// Coordinates where both gradients were below the floor.
    std::size_t coords_below_floor = 0;
    std::vector<GradCheckEntry> per_param;
    bool passed = true;
};

/// |a − n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Compares analytic gradients against central differences
/// (f(θ+eps) − f(θ−eps)) / 2eps. `analytic` must leave d f/dθ in every
/// parameter's grad buffer; `loss` must be a pure function of the parameter
/// values. Frozen coordinates are skipped. Parameters are restored afterwards.
GradCheckReport grad_check(const std::function<double(ParamStore&)>& loss,
                           const std::function<void(ParamStore&)>& analytic, ParamStore& params,
                           const GradCheckOptions& options = {});

/// Same check for f = Σ terms; each term is differenced on its own before summing,
/// so a small term is not lost in the rounding of a large one.
GradCheckReport grad_check(const std::vector<std::function<double(ParamStore&)>>& terms,
                           const std::function<void(ParamStore&)>& analytic, ParamStore& params,
                           const GradCheckOptions& options = {});

}  // namespace demn
