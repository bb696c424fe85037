// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nextsense/rng.hpp"
#include "nextsense/validation.hpp"

namespace nextsense::validation {

namespace {

struct Sample {
    std::vector<double> x;
    double y = 0.0; // +1 class a, -1 class b
};

// Fisher-Yates with our own generator so the split does not depend on the
// standard library's distribution implementation.
void shuffle(std::vector<std::size_t>& v, RandomSource& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(v[i - 1], v[std::min(j, i - 1)]);
    }
}

double score(const std::vector<double>& w, double b, const std::vector<double>& x)
{
    return std::inner_product(w.begin(), w.end(), x.begin(), b);
}

} // namespace

std::vector<double> magnitude_features(const IQTensor& t)
{
    const IQTensor n = power_normalize(t);
    std::vector<double> f(n.subcarriers(), 0.0);
    for (std::size_t idx = 0; idx < n.snapshots(); ++idx) {
        for (std::size_t s = 0; s < n.symbols(); ++s) {
            for (std::size_t k = 0; k < n.subcarriers(); ++k) {
                f[k] += std::abs(n(k, s, idx));
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(n.symbols() * n.snapshots());
    for (double& v : f) {
        v *= inv;
    }
    return f;
}

ClassifierResult train_eval_classifier(std::span<const IQTensor> class_a, std::span<const IQTensor> class_b,
                                       double train_fraction, const ClassifierConfig& config)
{
    if (class_a.size() < 10 || class_b.size() < 10) {
        throw ValidationError("train_eval_classifier: need at least 10 tensors per class");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("train_eval_classifier: train fraction must be in (0, 1)");
    }
    if (config.iterations == 0 || !(config.lambda > 0.0)) {
        throw ValidationError("train_eval_classifier: iterations and lambda must be positive");
    }
    const std::size_t dim = class_a.front().subcarriers();
    for (auto group : {class_a, class_b}) {
        for (const IQTensor& t : group) {
            if (t.subcarriers() != dim) {
                throw ValidationError("train_eval_classifier: all tensors need the same subcarrier count");
            }
        }
    }

    RandomSource rng(derive_seed(config.seed, "classifier-split"));
    std::vector<Sample> train;
    std::vector<Sample> test;
    auto split = [&](std::span<const IQTensor> group, double label) {
        std::vector<std::size_t> order(group.size());
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(group.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, group.size() - 1);
        for (std::size_t i = 0; i < order.size(); ++i) {
            Sample s{magnitude_features(group[order[i]]), label};
            (i < n_train ? train : test).push_back(std::move(s));
        }
    };
    split(class_a, 1.0);
    split(class_b, -1.0);

    // z-score with training statistics only
    std::vector<double> mean(dim, 0.0);
    std::vector<double> sd(dim, 0.0);
    for (const Sample& s : train) {
        for (std::size_t d = 0; d < dim; ++d) {
            mean[d] += s.x[d];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(train.size());
    }
    for (const Sample& s : train) {
        for (std::size_t d = 0; d < dim; ++d) {
            sd[d] += (s.x[d] - mean[d]) * (s.x[d] - mean[d]);
        }
    }
    for (double& v : sd) {
        v = std::sqrt(v / static_cast<double>(train.size()));
        if (!(v > 0.0)) {
            v = 1.0;
        }
    }
    for (auto* set : {&train, &test}) {
        for (Sample& s : *set) {
            for (std::size_t d = 0; d < dim; ++d) {
                s.x[d] = (s.x[d] - mean[d]) / sd[d];
            }
        }
    }

    // Pegasos: w <- (1 - eta lambda) w + eta y x on margin violations, with
    // eta = 1 / (lambda t). The bias is a regularized weight on a constant
    // feature.
    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    RandomSource pick(derive_seed(config.seed, "classifier-sgd"));
    for (std::size_t t = 1; t <= config.iterations; ++t) {
        const auto i = std::min(static_cast<std::size_t>(pick.uniform() * static_cast<double>(train.size())),
                                train.size() - 1);
        const Sample& s = train[i];
        const double eta = 1.0 / (config.lambda * static_cast<double>(t));
        const bool violated = s.y * score(w, b, s.x) < 1.0;
        const double shrink = 1.0 - eta * config.lambda;
        for (std::size_t d = 0; d < dim; ++d) {
            w[d] = shrink * w[d] + (violated ? eta * s.y * s.x[d] : 0.0);
        }
        b = shrink * b + (violated ? eta * s.y : 0.0);
    }

    std::size_t correct = 0;
    for (const Sample& s : test) {
        const double predicted = score(w, b, s.x) >= 0.0 ? 1.0 : -1.0;
        if (predicted == s.y) {
            ++correct;
        }
    }
    ClassifierResult r;
    r.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    r.train_size = train.size();
    r.test_size = test.size();
    r.weights = std::move(w);
    r.bias = b;
    return r;
}

} // namespace nextsense::validation
