#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fieldforge/error.hpp"
#include "fieldforge/pattern.hpp"

namespace fieldforge {

/// A spelling. Its ring has size() + 1 vertices; see match_count.
using Configuration = std::string;

// Weights driven to -infinity are stored as this value.
inline constexpr double kWeightFloor = -50.0;

inline constexpr double kDistributionTolerance = 1e-12;

/// p_l over lengths 0..max_length().
class LengthDistribution {
public:
    LengthDistribution() = default;

    explicit LengthDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty())
            throw InvariantViolation("length distribution is empty");
        double total = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw InvariantViolation("length probabilities must be finite and nonnegative");
            total += p;
        }
        if (std::abs(total - 1.0) > kDistributionTolerance)
            throw InvariantViolation("length distribution must sum to 1");
    }

    // Uniform over lengths lo..hi inclusive.
    static LengthDistribution uniform(std::size_t lo, std::size_t hi) {
        std::vector<double> probs(hi + 1, 0.0);
        for (std::size_t l = lo; l <= hi; ++l)
            probs[l] = 1.0 / static_cast<double>(hi - lo + 1);
        return LengthDistribution(std::move(probs));
    }

    double operator()(std::size_t l) const noexcept { return l < probs_.size() ? probs_[l] : 0.0; }
    std::size_t max_length() const noexcept { return probs_.empty() ? 0 : probs_.size() - 1; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    bool empty() const noexcept { return probs_.empty(); }

    friend bool operator==(const LengthDistribution&, const LengthDistribution&) = default;

private:
    std::vector<double> probs_;
};

/// Features, their weights, and the length distribution. Per length l the
/// spelling distribution is exp(weights . f(w)) / Z_l over strings of length l.
struct FieldModel {
    std::vector<FeaturePattern> features;
    std::vector<double> weights;
    LengthDistribution length_dist;

    FieldModel() = default;
    explicit FieldModel(LengthDistribution lengths) : length_dist(std::move(lengths)) {}
    FieldModel(std::vector<FeaturePattern> f, std::vector<double> w, LengthDistribution lengths)
        : features(std::move(f)), weights(std::move(w)), length_dist(std::move(lengths)) {
        validate();
    }

    std::size_t size() const noexcept { return features.size(); }

    std::optional<std::size_t> index_of(const FeaturePattern& g) const {
        auto it = std::find(features.begin(), features.end(), g);
        if (it == features.end())
            return std::nullopt;
        return static_cast<std::size_t>(it - features.begin());
    }

    void validate() const {
        if (features.size() != weights.size())
            throw InvariantViolation("feature and weight counts differ");
        for (double w : weights)
            if (!std::isfinite(w))
                throw InvariantViolation("model weights must be finite");
        for (std::size_t i = 0; i < features.size(); ++i)
            for (std::size_t j = i + 1; j < features.size(); ++j)
                if (features[i] == features[j])
                    throw InvariantViolation("duplicate feature " + features[i].text());
    }
};

inline std::vector<std::uint32_t> feature_vector(const FieldModel& model, std::string_view config) {
    std::vector<std::uint32_t> values(model.features.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<std::uint32_t>(match_count(model.features[i], config));
    return values;
}

inline std::uint32_t f_sharp(const FieldModel& model, std::string_view config) {
    std::uint32_t total = 0;
    for (const auto& f : model.features)
        total += static_cast<std::uint32_t>(match_count(f, config));
    return total;
}

inline double log_score(const FieldModel& model, std::string_view config) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.features.size(); ++i) {
        auto count = match_count(model.features[i], config);
        if (count)
            s += model.weights[i] * static_cast<double>(count);
    }
    return s;
}

inline double clamp_weight(double w) noexcept { return std::isnan(w) || w < kWeightFloor ? kWeightFloor : w; }

/// The induction of the model by g with weight alpha.
inline FieldModel tilt(const FieldModel& model, const FeaturePattern& g, double alpha) {
    if (!std::isfinite(alpha))
        throw InvariantViolation("tilt weight must be finite");
    FieldModel out = model;
    if (auto i = model.index_of(g))
        out.weights[*i] = clamp_weight(out.weights[*i] + alpha);
    else {
        out.features.push_back(g);
        out.weights.push_back(clamp_weight(alpha));
    }
    return out;
}

/// Normalized counts c(w)/N of a finite training sample.
class EmpiricalDistribution {
public:
    EmpiricalDistribution() = default;

    explicit EmpiricalDistribution(const std::map<std::string, std::uint64_t>& counts) {
        for (const auto& [word, c] : counts) {
            if (c == 0)
                throw DataError("count for '" + word + "' must be positive");
            words_.push_back(word);
            counts_.push_back(c);
            total_ += c;
        }
        if (total_ == 0)
            throw DataError("empirical distribution is empty");
    }

    std::size_t size() const noexcept { return words_.size(); }
    const std::string& word(std::size_t i) const noexcept { return words_[i]; }
    std::uint64_t count(std::size_t i) const noexcept { return counts_[i]; }
    std::uint64_t total() const noexcept { return total_; }
    double prob(std::size_t i) const noexcept {
        return static_cast<double>(counts_[i]) / static_cast<double>(total_);
    }
    const std::vector<std::string>& words() const noexcept { return words_; }

    double prob_of(std::string_view w) const {
        auto it = std::lower_bound(words_.begin(), words_.end(), w);
        if (it == words_.end() || *it != w)
            return 0.0;
        return prob(static_cast<std::size_t>(it - words_.begin()));
    }

    // Exact p~[g]: a finite sum over the training types.
    double expectation(const FeaturePattern& g) const {
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            acc += counts_[i] * match_count(g, words_[i]);
        return static_cast<double>(acc) / static_cast<double>(total_);
    }

    std::vector<double> expectations(std::span<const FeaturePattern> features) const {
        std::vector<double> out;
        out.reserve(features.size());
        for (const auto& f : features)
            out.push_back(expectation(f));
        return out;
    }

    std::size_t max_length() const noexcept {
        std::size_t m = 0;
        for (const auto& w : words_)
            m = std::max(m, w.size());
        return m;
    }

    LengthDistribution length_marginal() const {
        std::vector<std::uint64_t> by_length(max_length() + 1, 0);
        for (std::size_t i = 0; i < words_.size(); ++i)
            by_length[words_[i].size()] += counts_[i];
        std::vector<double> probs(by_length.size());
        for (std::size_t l = 0; l < probs.size(); ++l)
            probs[l] = static_cast<double>(by_length[l]) / static_cast<double>(total_);
        return LengthDistribution(std::move(probs));
    }

    // sum p~ log p~
    double neg_entropy() const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            s += prob(i) * std::log(prob(i));
        return s;
    }

private:
    std::vector<std::string> words_; // sorted (std::map order)
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

} // namespace fieldforge
