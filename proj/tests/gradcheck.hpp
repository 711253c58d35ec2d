#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gsformer/tensor.hpp"

namespace gsf {

struct TensorGradError {
    double analytic_norm = 0.0;
    double numeric_norm = 0.0;
    double diff_norm = 0.0;
    double rel = 0.0;
};

struct GradReport {
    double max_rel = 0.0;
    std::size_t worst = 0;  // index into the parameter list
    std::vector<TensorGradError> tensors;
};

// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||) per tensor, using
// central differences of `loss` with step h.
inline GradReport check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                                  double h = 1e-5) {
    for (auto& p : params) {
        p.set_requires_grad(true);
        p.zero_grad();
    }
    {
        Tape tape;
        TapeScope scope(tape);
        tape.backward(loss());
    }
    GradReport report;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        std::vector<double> analytic(p.size(), 0.0);
        if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
        auto values = p.mutable_values();
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double up = loss().item();
            values[i] = saved - h;
            const double down = loss().item();
            values[i] = saved;
            const double numeric = (up - down) / (2 * h);
            diff += (numeric - analytic[i]) * (numeric - analytic[i]);
            na += analytic[i] * analytic[i];
            nn += numeric * numeric;
        }
        const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
        const double rel = std::sqrt(diff) / denom;
        report.tensors.push_back({std::sqrt(na), std::sqrt(nn), std::sqrt(diff), rel});
        if (rel > report.max_rel) {
            report.max_rel = rel;
            report.worst = k;
        }
    }
    return report;
}

}  // namespace gsf
