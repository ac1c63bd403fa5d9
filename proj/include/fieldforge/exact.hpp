#pragma once

// Brute-force enumeration of small spelling spaces. Everything in here is
// exact up to floating point and serves as the reference for the Monte Carlo
// estimators and the iterative scaling solver.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "fieldforge/alphabet.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/model.hpp"

namespace fieldforge {

inline constexpr double kEnumerationBudget = 1e7;

/// All strings over `alphabet` of length 0..max_length.
struct EnumerableSpace {
    Alphabet alphabet;
    std::size_t max_length;

    double count_through(std::size_t l) const {
        double total = 0.0, layer = 1.0;
        for (std::size_t i = 0; i <= l; ++i) {
            total += layer;
            layer *= static_cast<double>(alphabet.size());
        }
        return total;
    }

    void check_budget() const {
        if (count_through(max_length) > kEnumerationBudget)
            throw EnumerationRefused("space of " + std::to_string(alphabet.size()) + "-letter strings up to length " +
                                     std::to_string(max_length) + " exceeds the enumeration budget");
    }
};

inline double log_sum_exp(std::span<const double> xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs)
        m = std::max(m, x);
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (double x : xs)
        s += std::exp(x - m);
    return m + std::log(s);
}

// Calls fn(word) for each string of the given length, in lexicographic
// alphabet order.
template <typename Fn>
void for_each_string(const Alphabet& alphabet, std::size_t length, Fn&& fn) {
    std::vector<std::size_t> digits(length, 0);
    std::string word(length, alphabet.size() ? alphabet[0] : 'a');
    while (true) {
        fn(static_cast<const std::string&>(word));
        std::size_t pos = length;
        while (pos > 0) {
            --pos;
            if (++digits[pos] < alphabet.size()) {
                word[pos] = alphabet[digits[pos]];
                break;
            }
            digits[pos] = 0;
            word[pos] = alphabet[0];
            if (pos == 0)
                return;
        }
        if (length == 0)
            return;
    }
}

/// Every configuration of a space together with the feature values of a fixed
/// feature list. Weights and length distributions are supplied per query.
class ExactTable {
public:
    ExactTable(const EnumerableSpace& space, std::vector<FeaturePattern> features)
        : space_(space), features_(std::move(features)) {
        space_.check_budget();
        const std::size_t n = features_.size();
        length_begin_.push_back(0);
        for (std::size_t l = 0; l <= space_.max_length; ++l) {
            for_each_string(space_.alphabet, l, [&](const std::string& w) {
                index_.emplace(w, configs_.size());
                configs_.push_back(w);
                std::uint32_t total = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    auto v = static_cast<std::uint32_t>(match_count(features_[i], w));
                    values_.push_back(v);
                    total += v;
                }
                fsharp_.push_back(total);
                max_fsharp_ = std::max(max_fsharp_, total);
            });
            length_begin_.push_back(configs_.size());
        }
    }

    const EnumerableSpace& space() const noexcept { return space_; }
    const std::vector<FeaturePattern>& features() const noexcept { return features_; }
    std::size_t num_features() const noexcept { return features_.size(); }
    std::size_t size() const noexcept { return configs_.size(); }
    const std::string& config(std::size_t c) const noexcept { return configs_[c]; }
    std::uint32_t value(std::size_t c, std::size_t i) const noexcept { return values_[c * features_.size() + i]; }
    std::uint32_t f_sharp(std::size_t c) const noexcept { return fsharp_[c]; }
    std::uint32_t max_f_sharp() const noexcept { return max_fsharp_; }
    std::size_t length_begin(std::size_t l) const noexcept { return length_begin_[l]; }
    std::size_t length_end(std::size_t l) const noexcept { return length_begin_[l + 1]; }

    std::optional<std::size_t> find(const std::string& w) const {
        auto it = index_.find(w);
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    double score(std::span<const double> weights, std::size_t c) const {
        double s = 0.0;
        for (std::size_t i = 0; i < features_.size(); ++i)
            s += weights[i] * static_cast<double>(value(c, i));
        return s;
    }

    double log_partition(std::span<const double> weights, std::size_t l) const {
        std::vector<double> scores;
        scores.reserve(length_end(l) - length_begin(l));
        for (std::size_t c = length_begin(l); c < length_end(l); ++c)
            scores.push_back(score(weights, c));
        return log_sum_exp(scores);
    }

    // Mixture probabilities p_l(|w|) exp(weights . f(w)) / Z_|w| per configuration.
    std::vector<double> probabilities(std::span<const double> weights, const LengthDistribution& lengths) const {
        std::vector<double> q(size(), 0.0);
        for (std::size_t l = 0; l <= space_.max_length; ++l) {
            double pl = lengths(l);
            if (pl <= 0.0)
                continue;
            double log_z = log_partition(weights, l);
            for (std::size_t c = length_begin(l); c < length_end(l); ++c)
                q[c] = pl * std::exp(score(weights, c) - log_z);
        }
        return q;
    }

    std::vector<double> probabilities(const FieldModel& model) const {
        check_model(model);
        return probabilities(model.weights, model.length_dist);
    }

    std::vector<double> feature_expectations(std::span<const double> q) const {
        std::vector<double> e(features_.size(), 0.0);
        for (std::size_t c = 0; c < size(); ++c)
            for (std::size_t i = 0; i < features_.size(); ++i)
                e[i] += q[c] * static_cast<double>(value(c, i));
        return e;
    }

    double expectation(std::span<const double> q, const FeaturePattern& g) const {
        double e = 0.0;
        for (std::size_t c = 0; c < size(); ++c)
            if (q[c] > 0.0)
                e += q[c] * static_cast<double>(match_count(g, configs_[c]));
        return e;
    }

    // g_k = q(g = k), k = 0..largest value with positive probability.
    std::vector<double> histogram(std::span<const double> q, const FeaturePattern& g) const {
        std::vector<double> h(1, 0.0);
        for (std::size_t c = 0; c < size(); ++c) {
            if (q[c] <= 0.0)
                continue;
            auto k = match_count(g, configs_[c]);
            if (k >= h.size())
                h.resize(k + 1, 0.0);
            h[k] += q[c];
        }
        return h;
    }

    // Iterative scaling polynomial coefficients a[i][m], m = 0..max f#.
    std::vector<std::vector<double>> iis_coefficients(std::span<const double> q,
                                                      std::span<const double> empirical) const {
        std::vector<std::vector<double>> a(features_.size(), std::vector<double>(max_fsharp_ + 1, 0.0));
        for (std::size_t c = 0; c < size(); ++c) {
            auto m = fsharp_[c];
            if (m == 0 || q[c] <= 0.0)
                continue;
            for (std::size_t i = 0; i < features_.size(); ++i)
                a[i][m] += q[c] * static_cast<double>(value(c, i));
        }
        for (std::size_t i = 0; i < features_.size(); ++i)
            a[i][0] = -empirical[i];
        return a;
    }

    void check_model(const FieldModel& model) const {
        if (model.features != features_)
            throw InvariantViolation("model features do not match the enumerated table");
    }

private:
    EnumerableSpace space_;
    std::vector<FeaturePattern> features_;
    std::vector<std::string> configs_;
    std::vector<std::uint32_t> values_;
    std::vector<std::uint32_t> fsharp_;
    std::vector<std::size_t> length_begin_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint32_t max_fsharp_ = 0;
};

/// Z_l by enumerating the strings of one length.
inline double partition(const FieldModel& model, const EnumerableSpace& space, std::size_t l) {
    if (std::pow(static_cast<double>(space.alphabet.size()), static_cast<double>(l)) > kEnumerationBudget)
        throw EnumerationRefused("length " + std::to_string(l) + " exceeds the enumeration budget");
    double z = 0.0;
    for_each_string(space.alphabet, l, [&](const std::string& w) { z += std::exp(log_score(model, w)); });
    return z;
}

inline double expectation(const FieldModel& model, const EnumerableSpace& space, const FeaturePattern& g) {
    ExactTable table(space, model.features);
    auto q = table.probabilities(model);
    return table.expectation(q, g);
}

namespace detail {

// Maps p~ onto table indices; throws when p~ has mass outside the space.
inline std::vector<std::pair<std::size_t, double>> support_in(const ExactTable& table,
                                                              const EmpiricalDistribution& empirical) {
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(empirical.size());
    for (std::size_t i = 0; i < empirical.size(); ++i) {
        auto c = table.find(empirical.word(i));
        if (!c)
            throw AbsoluteContinuityError("training word '" + empirical.word(i) + "' lies outside the space");
        out.emplace_back(*c, empirical.prob(i));
    }
    return out;
}

} // namespace detail

/// D(p~ || q) from precomputed model probabilities.
inline double kl_divergence(const ExactTable& table, const EmpiricalDistribution& empirical, std::span<const double> q) {
    double d = 0.0;
    for (auto [c, p] : detail::support_in(table, empirical)) {
        if (!(q[c] > 0.0))
            throw AbsoluteContinuityError("model assigns zero probability to '" + table.config(c) + "'");
        d += p * std::log(p / q[c]);
    }
    return std::max(d, 0.0);
}

inline double kl_divergence(const EmpiricalDistribution& empirical, const FieldModel& model,
                            const EnumerableSpace& space) {
    ExactTable table(space, model.features);
    return kl_divergence(table, empirical, table.probabilities(model));
}

/// D(p || q) between two distributions over the same table.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    double d = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        if (p[c] <= 0.0)
            continue;
        if (!(q[c] > 0.0))
            throw AbsoluteContinuityError("reference distribution assigns zero probability to a supported point");
        d += p[c] * std::log(p[c] / q[c]);
    }
    return std::max(d, 0.0);
}

/// L(q) = sum p~ log q.
inline double log_likelihood(const ExactTable& table, const EmpiricalDistribution& empirical, std::span<const double> q) {
    double s = 0.0;
    for (auto [c, p] : detail::support_in(table, empirical)) {
        if (!(q[c] > 0.0))
            return -std::numeric_limits<double>::infinity();
        s += p * std::log(q[c]);
    }
    return s;
}

struct OracleOptions {
    double gradient_tolerance = 1e-9;
    int max_iterations = 2000;
};

/// Maximum likelihood weights over the closure of {exp(lambda . f) q0} by a
/// projected damped Newton method with backtracking on the exact objective.
/// Independent of iterative scaling. Weights are bounded below by kWeightFloor.
inline FieldModel ml_oracle(const std::vector<FeaturePattern>& features, const EmpiricalDistribution& empirical,
                            const EnumerableSpace& space, const FieldModel& q0, OracleOptions options = {}) {
    const std::size_t n = features.size();
    std::vector<double> lambda(n, 0.0);
    for (std::size_t j = 0; j < q0.features.size(); ++j) {
        auto it = std::find(features.begin(), features.end(), q0.features[j]);
        if (it == features.end())
            throw InvariantViolation("initial model feature " + q0.features[j].text() + " is not in the feature list");
        lambda[static_cast<std::size_t>(it - features.begin())] = q0.weights[j];
    }

    ExactTable table(space, features);
    const auto support = detail::support_in(table, empirical);
    const auto lengths = empirical.length_marginal();
    if (lengths.max_length() > space.max_length)
        throw AbsoluteContinuityError("training words longer than the space");
    for (std::size_t l = 0; l <= lengths.max_length(); ++l)
        if (lengths(l) > 0.0 && !(q0.length_dist(l) > 0.0))
            throw AbsoluteContinuityError("initial model gives zero probability to length " + std::to_string(l));
    std::vector<double> target(n, 0.0);
    for (auto [c, p] : support)
        for (std::size_t i = 0; i < n; ++i)
            target[i] += p * static_cast<double>(table.value(c, i));
    // A feature p~ never exhibits has its optimum at -infinity: the objective
    // falls monotonically in that weight.
    for (std::size_t i = 0; i < n; ++i)
        if (target[i] == 0.0)
            lambda[i] = kWeightFloor;

    // Objective: -lambda . p~[f] + sum_l p~_l log Z_l(lambda), i.e. D(p~||q) up to a constant.
    auto objective = [&](const std::vector<double>& w) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            v -= w[i] * target[i];
        for (std::size_t l = 0; l <= lengths.max_length(); ++l)
            if (lengths(l) > 0.0)
                v += lengths(l) * table.log_partition(w, l);
        return v;
    };
    auto derivatives = [&](const std::vector<double>& w, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
        grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        hess = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            grad[static_cast<Eigen::Index>(i)] = -target[i];
        Eigen::VectorXd fv(static_cast<Eigen::Index>(n));
        for (std::size_t l = 0; l <= lengths.max_length(); ++l) {
            double pl = lengths(l);
            if (pl <= 0.0)
                continue;
            double log_z = table.log_partition(w, l);
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
            Eigen::MatrixXd second = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (std::size_t c = table.length_begin(l); c < table.length_end(l); ++c) {
                double p = std::exp(table.score(w, c) - log_z);
                for (std::size_t i = 0; i < n; ++i)
                    fv[static_cast<Eigen::Index>(i)] = table.value(c, i);
                mean += p * fv;
                second.noalias() += p * fv * fv.transpose();
            }
            grad += pl * mean;
            hess += pl * (second - mean * mean.transpose());
        }
    };
    auto projected_norm = [&](const std::vector<double>& w, const Eigen::VectorXd& grad) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double gi = grad[static_cast<Eigen::Index>(i)];
            if (w[i] <= kWeightFloor && gi > 0.0)
                continue;
            m = std::max(m, std::abs(gi));
        }
        return m;
    };

    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    double value = objective(lambda);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        derivatives(lambda, grad, hess);
        double gnorm = projected_norm(lambda, grad);
        if (gnorm <= options.gradient_tolerance)
            return FieldModel(features, lambda, q0.length_dist);

        // Newton direction on the free variables.
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < n; ++i)
            if (!(lambda[i] <= kWeightFloor && grad[static_cast<Eigen::Index>(i)] > 0.0))
                free.push_back(i);
        const auto nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd h(nf, nf);
        Eigen::VectorXd g(nf);
        for (Eigen::Index a = 0; a < nf; ++a) {
            g[a] = grad[static_cast<Eigen::Index>(free[a])];
            for (Eigen::Index b = 0; b < nf; ++b)
                h(a, b) = hess(static_cast<Eigen::Index>(free[a]), static_cast<Eigen::Index>(free[b]));
        }
        double ridge = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
        h.diagonal().array() += ridge;
        Eigen::VectorXd step = h.ldlt().solve(-g);
        if (!step.allFinite() || step.dot(g) >= 0.0)
            step = -g;

        auto candidate_at = [&](double t) {
            std::vector<double> w = lambda;
            for (Eigen::Index a = 0; a < nf; ++a)
                w[free[static_cast<std::size_t>(a)]] = std::max(kWeightFloor, lambda[free[static_cast<std::size_t>(a)]] + t * step[a]);
            return w;
        };
        bool accepted = false;
        double t = 1.0;
        for (int k = 0; k < 60; ++k, t *= 0.5) {
            auto w = candidate_at(t);
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                decrease += grad[static_cast<Eigen::Index>(i)] * (w[i] - lambda[i]);
            double v = objective(w);
            if (v <= value + 1e-4 * decrease) {
                lambda = std::move(w);
                value = v;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Near the optimum the objective is flat to rounding; take the
            // full step if it shrinks the gradient.
            auto w = candidate_at(1.0);
            Eigen::VectorXd g2;
            Eigen::MatrixXd h2;
            derivatives(w, g2, h2);
            if (projected_norm(w, g2) < gnorm) {
                lambda = std::move(w);
                value = objective(lambda);
            } else {
                throw ConvergenceError("ml_oracle stalled with gradient norm " + std::to_string(gnorm));
            }
        }
    }
    derivatives(lambda, grad, hess);
    if (projected_norm(lambda, grad) <= options.gradient_tolerance)
        return FieldModel(features, lambda, q0.length_dist);
    throw ConvergenceError("ml_oracle did not converge within the iteration cap");
}

} // namespace fieldforge
