#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fieldforge/alphabet.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/exact.hpp"
#include "fieldforge/gibbs.hpp"
#include "fieldforge/model.hpp"
#include "fieldforge/rng.hpp"

namespace fieldforge {

/// Root gamma = log b of sum_m a[m] b^m = 0 for a[0] <= 0 and a[m] >= 0,
/// or -infinity when the only root is b = 0 (or none exists).
inline double newton_update(std::span<const double> a) {
    if (a.empty())
        throw InvariantViolation("empty coefficient vector");
    if (a[0] > 0.0)
        throw InvariantViolation("constant coefficient must be nonpositive");
    bool any_positive = false;
    for (std::size_t m = 1; m < a.size(); ++m) {
        if (a[m] < 0.0)
            throw InvariantViolation("higher coefficients must be nonnegative");
        any_positive = any_positive || a[m] > 0.0;
    }
    if (!any_positive || a[0] == 0.0)
        return -std::numeric_limits<double>::infinity();

    // phi(gamma) = log sum_{m>=1} a_m e^{m gamma} - log(-a_0): increasing and
    // convex, so Newton from any point lands right of the root and then
    // decreases monotonically onto it.
    const double log_target = std::log(-a[0]);
    auto eval = [&](double gamma) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 1; m < a.size(); ++m)
            if (a[m] > 0.0)
                mx = std::max(mx, std::log(a[m]) + static_cast<double>(m) * gamma);
        double s = 0.0, sm = 0.0;
        for (std::size_t m = 1; m < a.size(); ++m) {
            if (a[m] <= 0.0)
                continue;
            double w = std::exp(std::log(a[m]) + static_cast<double>(m) * gamma - mx);
            s += w;
            sm += w * static_cast<double>(m);
        }
        return std::pair{mx + std::log(s) - log_target, sm / s};
    };

    double lo = -1.0, hi = 1.0;
    while (eval(lo).first > 0.0)
        lo *= 2.0;
    while (eval(hi).first < 0.0)
        hi *= 2.0;
    double gamma = 0.0;
    for (int it = 0; it < 200; ++it) {
        auto [phi, slope] = eval(gamma);
        if (phi == 0.0)
            break;
        if (phi > 0.0)
            hi = std::min(hi, gamma);
        else
            lo = std::max(lo, gamma);
        double next = gamma - phi / slope;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - gamma) <= 1e-15 * std::max(1.0, std::abs(gamma))) {
            gamma = next;
            break;
        }
        gamma = next;
    }
    return gamma;
}

/// sum_m a[m] b^m
inline double polynomial_residual(std::span<const double> a, double beta) {
    double s = 0.0, p = 1.0;
    for (double c : a) {
        s += c * p;
        p *= beta;
    }
    return s;
}

/// Exact-mode bundle: the enumerated space, p~, and p~[f_i] for a feature list.
class ExactProblem {
public:
    ExactProblem(const EnumerableSpace& space, const std::vector<FeaturePattern>& features,
                 const EmpiricalDistribution& empirical)
        : table_(space, features), empirical_(empirical), targets_(empirical.expectations(features)) {
        detail::support_in(table_, empirical_);
    }

    const ExactTable& table() const noexcept { return table_; }
    const EmpiricalDistribution& empirical() const noexcept { return empirical_; }
    const std::vector<double>& targets() const noexcept { return targets_; }

    std::vector<double> probabilities(const FieldModel& model) const { return table_.probabilities(model); }
    double divergence(const FieldModel& model) const { return kl_divergence(table_, empirical_, probabilities(model)); }
    IISCoefficients coefficients(const FieldModel& model) const {
        return table_.iis_coefficients(probabilities(model), targets_);
    }
    double constraint_residual(const FieldModel& model) const {
        auto e = table_.feature_expectations(probabilities(model));
        double r = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            r = std::max(r, std::abs(e[i] - targets_[i]));
        return r;
    }

private:
    ExactTable table_;
    EmpiricalDistribution empirical_;
    std::vector<double> targets_;
};

struct IISState {
    FieldModel model;
    std::size_t iteration = 0;
    std::vector<double> divergence_history; // exact mode
    std::vector<double> gamma_norm_history;  // max_i |gamma_i|, -inf updates excluded
    std::vector<double> gammas;              // last update
};

// An exact-mode divergence increase beyond this is a solver bug.
inline constexpr double kMonotonicitySlack = 1e-10;

/// One simultaneous update lambda_i += gamma_i. All gammas are solved before
/// any weight changes.
inline IISState iis_step(const IISState& state, const IISCoefficients& coeffs, const ExactProblem* exact = nullptr) {
    const std::size_t n = state.model.features.size();
    if (coeffs.size() != n)
        throw InvariantViolation("one coefficient row per feature is required");
    std::vector<double> gammas(n);
    for (std::size_t i = 0; i < n; ++i)
        gammas[i] = newton_update(coeffs[i]);

    IISState next = state;
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isinf(gammas[i])) {
            next.model.weights[i] = kWeightFloor;
        } else {
            next.model.weights[i] = clamp_weight(next.model.weights[i] + gammas[i]);
            norm = std::max(norm, std::abs(gammas[i]));
        }
    }
    next.gammas = std::move(gammas);
    next.gamma_norm_history.push_back(norm);
    ++next.iteration;
    if (exact) {
        if (next.divergence_history.empty())
            next.divergence_history.push_back(exact->divergence(state.model));
        double d = exact->divergence(next.model);
        if (d > next.divergence_history.back() + kMonotonicitySlack)
            throw InvariantViolation("iterative scaling increased the divergence from " +
                                     std::to_string(next.divergence_history.back()) + " to " + std::to_string(d));
        next.divergence_history.push_back(d);
    }
    return next;
}

struct ExactMode {
    EnumerableSpace space;
};

struct MonteCarloMode {
    Alphabet alphabet = Alphabet::printable_ascii();
    std::size_t samples = kDefaultSamples;
    std::size_t burn_in = kDefaultBurnIn;
    std::uint64_t seed = 0;
};

using TrainMode = std::variant<ExactMode, MonteCarloMode>;

inline constexpr double kExactTolerance = 1e-9;
inline constexpr double kMonteCarloTolerance = 1e-3;
inline constexpr std::size_t kDefaultMaxIterations = 500;
// Monte Carlo mode stops after this many consecutive quiet updates. An update
// is quiet when every |gamma_i| is below the tolerance or within
// kNoiseMultiple standard errors of zero, whichever is larger.
inline constexpr int kQuietIterations = 3;
inline constexpr double kNoiseMultiple = 3.0;

struct TrainOptions {
    std::optional<double> tolerance; // mode default when unset
    std::size_t max_iterations = kDefaultMaxIterations;
    // Called after every iteration with the new state and the seconds spent on it.
    std::function<void(const IISState&, double)> on_iteration;
};

struct TrainResult {
    FieldModel model;
    IISState state;
    bool converged = false;
    std::string warning;
};

namespace detail {

inline void check_lengths_match(const FieldModel& model, const EmpiricalDistribution& empirical) {
    auto lengths = empirical.length_marginal();
    for (std::size_t l = 0; l <= std::max(lengths.max_length(), model.length_dist.max_length()); ++l)
        if (std::abs(lengths(l) - model.length_dist(l)) > kDistributionTolerance)
            throw InvariantViolation("model length distribution must equal the empirical length marginal");
}

} // namespace detail

/// Iterative scaling from `model` to the maximum likelihood weights of its
/// feature list.
inline TrainResult train(const FieldModel& model, const EmpiricalDistribution& empirical, const TrainMode& mode,
                         const TrainOptions& options = {}) {
    model.validate();
    detail::check_lengths_match(model, empirical);
    using clock = std::chrono::steady_clock;
    TrainResult result;
    IISState state{model, 0, {}, {}, {}};

    if (const auto* exact = std::get_if<ExactMode>(&mode)) {
        const double tol = options.tolerance.value_or(kExactTolerance);
        ExactProblem problem(exact->space, model.features, empirical);
        double d = problem.divergence(model);
        state.divergence_history.push_back(d);
        if (problem.constraint_residual(model) < tol) {
            result.converged = true;
        }
        while (!result.converged && state.iteration < options.max_iterations) {
            auto t0 = clock::now();
            state = iis_step(state, problem.coefficients(state.model), &problem);
            const auto& h = state.divergence_history;
            double prev = h[h.size() - 2], cur = h.back();
            double rel = (prev - cur) / std::max(prev, std::numeric_limits<double>::min());
            if (options.on_iteration)
                options.on_iteration(state, std::chrono::duration<double>(clock::now() - t0).count());
            if (rel < tol || problem.constraint_residual(state.model) < tol)
                result.converged = true;
        }
    } else {
        const auto& mc = std::get<MonteCarloMode>(mode);
        const double tol = options.tolerance.value_or(kMonteCarloTolerance);
        for (std::size_t i = 0; i < empirical.size(); ++i) {
            const auto& w = empirical.word(i);
            if (!mc.alphabet.contains_all(w))
                throw AbsoluteContinuityError("training word '" + w + "' uses characters outside the alphabet");
        }
        const auto targets = empirical.expectations(model.features);
        int quiet = 0;
        while (state.iteration < options.max_iterations) {
            auto t0 = clock::now();
            auto batch = sample_batch(state.model, mc.alphabet, mc.samples, mc.burn_in,
                                      derive_seed(mc.seed, streams::iis_batch, state.iteration));
            auto coeffs = estimate_iis_coefficients(batch, state.model, targets);
            auto se = update_standard_errors(batch, state.model, coeffs);
            state = iis_step(state, coeffs);
            if (options.on_iteration)
                options.on_iteration(state, std::chrono::duration<double>(clock::now() - t0).count());
            bool small = true;
            for (std::size_t i = 0; i < state.gammas.size(); ++i)
                if (std::isfinite(state.gammas[i]) && std::abs(state.gammas[i]) >= std::max(tol, kNoiseMultiple * se[i]))
                    small = false;
            quiet = small ? quiet + 1 : 0;
            if (quiet >= kQuietIterations) {
                result.converged = true;
                break;
            }
        }
    }
    if (!result.converged)
        result.warning = "iteration cap of " + std::to_string(options.max_iterations) + " reached before convergence";
    result.model = state.model;
    result.state = std::move(state);
    return result;
}

/// A(gamma, q) = 1 + gamma . p~[f] - sum_w q(w) sum_i f(i|w) e^{gamma_i f#(w)}
/// with f(i|w) = f_i(w) / f#(w). Since sum_i f(i|w) = 1 whenever f#(w) > 0,
/// this is gamma . p~[f] - sum_w q(w) sum_i f(i|w) (e^{gamma_i f#(w)} - 1),
/// where configurations with f# = 0 drop out and A(0, q) = 0 exactly.
inline double auxiliary_value(std::span<const double> gamma, const FieldModel& model,
                              const EmpiricalDistribution& empirical, const EnumerableSpace& space) {
    ExactTable table(space, model.features);
    auto q = table.probabilities(model);
    auto targets = empirical.expectations(model.features);
    double a = 0.0;
    for (std::size_t i = 0; i < gamma.size(); ++i)
        if (targets[i] != 0.0)
            a += gamma[i] * targets[i];
    for (std::size_t c = 0; c < table.size(); ++c) {
        const auto fs = table.f_sharp(c);
        if (q[c] <= 0.0 || fs == 0)
            continue;
        double inner = 0.0;
        for (std::size_t i = 0; i < gamma.size(); ++i) {
            auto v = table.value(c, i);
            if (v)
                inner += static_cast<double>(v) / fs * std::expm1(gamma[i] * fs);
        }
        a -= q[c] * inner;
    }
    return a;
}

/// L(gamma o q) - L(q), with gamma o q renormalized per length.
inline double log_likelihood_gain(std::span<const double> gamma, const FieldModel& model,
                                  const EmpiricalDistribution& empirical, const EnumerableSpace& space) {
    ExactTable table(space, model.features);
    FieldModel moved = model;
    for (std::size_t i = 0; i < gamma.size(); ++i)
        moved.weights[i] += gamma[i];
    return log_likelihood(table, empirical, table.probabilities(moved.weights, moved.length_dist)) -
           log_likelihood(table, empirical, table.probabilities(model));
}

} // namespace fieldforge
