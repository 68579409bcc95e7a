#ifndef OWLEYE_NN_GRADCHECK_HPP
#define OWLEYE_NN_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "owleye/nn/layers.hpp"
#include "owleye/nn/tensor.hpp"
#include "owleye/rng.hpp"

namespace owleye::nn {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst;  // "input[i]" or "<param>[i]"
    std::size_t checked = 0;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
/// gradient is ~0 from turning round-off into huge ratios.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central-difference derivative of loss() with respect to *value.
inline double central_difference(const std::function<double()>& loss, double& value, double eps) {
    const double saved = value;
    value = saved + eps;
    const double up = loss();
    value = saved - eps;
    const double down = loss();
    value = saved;
    return (up - down) / (2.0 * eps);
}

/// Compares a layer's analytic input and parameter gradients against
/// central differences of L = sum(r * layer(x)) for a fixed random r.
template <typename Layer>
GradCheckReport finite_diff_check(Layer& layer, Tensor<double> x, double eps = 1e-5, bool training = true,
                                  std::uint64_t seed = 7) {
    Rng rng(seed);
    Tensor<double> probe = layer.forward(x, training);
    Tensor<double> r(probe.shape());
    for (auto& v : r.values()) v = rng.normal();
    (void)layer.backward(r);  // discard: clears the probe cache

    auto loss = [&]() {
        const Tensor<double> y = layer.forward(x, training);
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
        (void)layer.backward(r);
        return s;
    };

    (void)layer.forward(x, training);
    const Tensor<double> dx = layer.backward(r);
    std::vector<Tensor<double>> pgrads;
    for (auto* p : layer.params()) pgrads.push_back(p->grad);

    GradCheckReport rep;
    auto consider = [&](double a, double n, std::string where) {
        const double e = relative_error(a, n);
        ++rep.checked;
        if (e > rep.max_rel_error || rep.worst.empty()) {
            rep.max_rel_error = std::max(rep.max_rel_error, e);
            if (e >= rep.max_rel_error) rep.worst = std::move(where);
        }
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        consider(dx[i], central_difference(loss, x[i], eps), "input[" + std::to_string(i) + "]");
    }
    auto params = layer.params();
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& value = params[p]->value;
        for (std::size_t i = 0; i < value.size(); ++i) {
            consider(pgrads[p][i], central_difference(loss, value[i], eps), params[p]->name + "[" + std::to_string(i) + "]");
        }
    }
    return rep;
}

/// Spot-checks `count` randomly chosen parameters of a whole network
/// against central differences of the mean cross-entropy on (x, labels),
/// with batch norm in training mode.
template <typename Net>
GradCheckReport network_spot_check(Net& net, const Tensor<double>& x, const std::vector<int>& labels, std::size_t count,
                                   std::uint64_t seed = 7, double eps = 1e-6) {
    auto loss = [&]() { return softmax_cross_entropy(net.forward(x, true), labels).loss; };
    const auto sm = softmax_cross_entropy(net.forward(x, true), labels);
    net.backward(sm.grad_logits);
    auto params = net.params();

    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p]->value.size(); ++i) all.emplace_back(p, i);
    }
    Rng rng(seed);
    rng.shuffle(all);
    all.resize(std::min(count, all.size()));

    GradCheckReport rep;
    for (const auto& [p, i] : all) {
        const double analytic = params[p]->grad[i];
        const double numeric = central_difference(loss, params[p]->value[i], eps);
        const double e = relative_error(analytic, numeric);
        ++rep.checked;
        if (e >= rep.max_rel_error) {
            rep.max_rel_error = e;
            rep.worst = params[p]->name + "[" + std::to_string(i) + "]";
        }
    }
    return rep;
}

}  // namespace owleye::nn

#endif
