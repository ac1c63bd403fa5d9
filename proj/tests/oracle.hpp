#pragma once

// Reference computations for the tests. Everything here is brute force and
// shares no code with the library beyond match_count and the data types.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fieldforge/fieldforge.hpp"

namespace oracle {

using fieldforge::FeaturePattern;

inline std::vector<std::string> strings_up_to(const std::string& alphabet, std::size_t max_length) {
    std::vector<std::string> out{""};
    std::vector<std::string> frontier{""};
    for (std::size_t l = 1; l <= max_length; ++l) {
        std::vector<std::string> next;
        for (const auto& s : frontier)
            for (char c : alphabet)
                next.push_back(s + c);
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

// q(w) = p_l(|w|) exp(lambda . f(w)) / Z_|w| over `strings`.
inline std::vector<double> probabilities(const std::vector<std::string>& strings,
                                         const std::vector<FeaturePattern>& features,
                                         const std::vector<double>& weights, const std::vector<double>& lengths) {
    std::vector<double> score(strings.size());
    std::map<std::size_t, double> z;
    for (std::size_t s = 0; s < strings.size(); ++s) {
        double e = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i)
            e += weights[i] * static_cast<double>(fieldforge::match_count(features[i], strings[s]));
        score[s] = std::exp(e);
        z[strings[s].size()] += score[s];
    }
    std::vector<double> q(strings.size());
    for (std::size_t s = 0; s < strings.size(); ++s) {
        auto l = strings[s].size();
        double pl = l < lengths.size() ? lengths[l] : 0.0;
        q[s] = pl * score[s] / z[l];
    }
    return q;
}

inline std::vector<double> probabilities(const std::vector<std::string>& strings, const fieldforge::FieldModel& m) {
    return probabilities(strings, m.features, m.weights, m.length_dist.probs());
}

inline std::vector<double> empirical_on(const std::vector<std::string>& strings,
                                        const std::map<std::string, std::uint64_t>& counts) {
    double total = 0.0;
    for (const auto& [w, c] : counts)
        total += static_cast<double>(c);
    std::vector<double> p(strings.size(), 0.0);
    for (std::size_t s = 0; s < strings.size(); ++s)
        if (auto it = counts.find(strings[s]); it != counts.end())
            p[s] = static_cast<double>(it->second) / total;
    return p;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
    double d = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s)
        if (p[s] > 0.0)
            d += p[s] * std::log(p[s] / q[s]);
    return d;
}

inline double expectation(const std::vector<std::string>& strings, const std::vector<double>& q,
                          const FeaturePattern& g) {
    double e = 0.0;
    for (std::size_t s = 0; s < strings.size(); ++s)
        e += q[s] * static_cast<double>(fieldforge::match_count(g, strings[s]));
    return e;
}

inline double log_likelihood(const std::vector<double>& p, const std::vector<double>& q) {
    double ll = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s)
        if (p[s] > 0.0)
            ll += p[s] * std::log(q[s]);
    return ll;
}

// Golden-section maximization of a concave function on [lo, hi].
template <class F>
double maximize(F f, double lo, double hi, int iterations = 200) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iterations; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return (a + b) / 2.0;
}

// A small random problem: alphabet of up to 3 characters, strings of length
// 1..max_length, up to 6 features, and a corpus that covers every string so
// the maximum likelihood weights are finite.
struct Instance {
    std::string alphabet;
    std::size_t max_length = 0;
    std::vector<FeaturePattern> features;
    std::map<std::string, std::uint64_t> counts;

    fieldforge::EnumerableSpace space() const { return {fieldforge::Alphabet(alphabet), max_length}; }
    fieldforge::EmpiricalDistribution empirical() const { return fieldforge::EmpiricalDistribution(counts); }
};

inline Instance random_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    Instance inst;
    inst.alphabet = std::string("abc").substr(0, 2 + pick(2));
    inst.max_length = 2 + pick(3);

    std::vector<std::string> pool;
    for (char c : inst.alphabet)
        pool.push_back(std::string(1, c));
    for (char c : inst.alphabet)
        for (char d : inst.alphabet)
            pool.push_back(std::string{c, d});
    for (char c : inst.alphabet) {
        pool.push_back(std::string(1, c) + "<*>");
        pool.push_back("<*>" + std::string(1, c));
    }
    pool.push_back("[a-z]<2>");
    pool.push_back("<1>");
    pool.push_back("<2>");
    const std::size_t n_features = 2 + pick(5);
    std::vector<std::string> chosen;
    while (chosen.size() < n_features) {
        auto t = pool[pick(pool.size())];
        if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
            chosen.push_back(t);
    }
    for (const auto& t : chosen)
        inst.features.push_back(FeaturePattern::parse(t));

    for (const auto& w : strings_up_to(inst.alphabet, inst.max_length))
        if (!w.empty())
            inst.counts[w] = 1 + pick(20);
    return inst;
}

} // namespace oracle
