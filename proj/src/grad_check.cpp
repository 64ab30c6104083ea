#include "demn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "demn/rng.hpp"

namespace demn {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const std::function<double(ParamStore&)>& loss,
                           const std::function<void(ParamStore&)>& analytic, ParamStore& params,
                           const GradCheckOptions& options) {
    return grad_check(std::vector<std::function<double(ParamStore&)>>{loss}, analytic, params, options);
}

GradCheckReport grad_check(const std::vector<std::function<double(ParamStore&)>>& terms,
                           const std::function<void(ParamStore&)>& analytic, ParamStore& params,
                           const GradCheckOptions& options) {
    params.zero_grad();
    analytic(params);
    std::vector<Tensor> grads;
    for (const auto& p : params) grads.push_back(p->grad);

    GradCheckReport report;
    Rng rng(options.seed);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = params.at(pi);
        std::vector<std::size_t> coords;
        for (std::size_t i = 0; i < p.value.size(); ++i)
            if (!p.coord_frozen(i)) coords.push_back(i);
        if (coords.size() > options.samples_per_tensor) {
            rng.shuffle(coords.begin(), coords.end());
            coords.resize(options.samples_per_tensor);
            std::sort(coords.begin(), coords.end());
        }
        GradCheckEntry entry{p.name, coords.size(), 0.0};
        for (std::size_t i : coords) {
            const double saved = p.value[i];
            double numeric = 0.0;
            for (const auto& term : terms) {
                p.value[i] = saved + options.eps;
                const double up = term(params);
                p.value[i] = saved - options.eps;
                const double down = term(params);
                numeric += (up - down) / (2.0 * options.eps);
            }
            p.value[i] = saved;
            const double a = grads[pi][i];
            const double err = relative_error(a, numeric, options.floor);
            if (std::abs(a) < options.floor && std::abs(numeric) < options.floor)
                ++report.coords_below_floor;
            entry.max_rel_error = std::max(entry.max_rel_error, err);
            if (report.worst_param.empty() || err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_param = p.name;
                report.worst_index = i;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
        report.coords_checked += coords.size();
        report.per_param.push_back(entry);
    }
    report.passed = report.max_rel_error < options.threshold;
    return report;
}

}  // namespace demn
