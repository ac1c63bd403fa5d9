#include <gtest/gtest.h>

#include <cmath>

#include "fieldforge/model.hpp"
#include "oracle.hpp"

using namespace fieldforge;

namespace {

FieldModel model_of(std::vector<std::string> patterns, std::vector<double> weights,
                    LengthDistribution lengths = LengthDistribution::uniform(1, 3)) {
    std::vector<FeaturePattern> f;
    for (const auto& p : patterns)
        f.push_back(FeaturePattern::parse(p));
    return FieldModel(std::move(f), std::move(weights), std::move(lengths));
}

} // namespace

TEST(FeatureVector, EmptyModel) { EXPECT_TRUE(feature_vector(model_of({}, {}), "the").empty()); }

TEST(FeatureVector, DirectCounts) {
    EXPECT_EQ(feature_vector(model_of({"[a-z]", "e"}, {0, 0}), "the"), (std::vector<std::uint32_t>{3, 1}));
    EXPECT_EQ(feature_vector(model_of({"ism<*>", "ian"}, {0, 0}), "Hamiltonianism"),
              (std::vector<std::uint32_t>{1, 1}));
}

TEST(FSharp, TotalCount) {
    EXPECT_EQ(f_sharp(model_of({}, {}), "the"), 0u);
    EXPECT_EQ(f_sharp(model_of({"[a-z]", "e"}, {0, 0}), "the"), 4u);
    EXPECT_EQ(f_sharp(model_of({"[a-z]"}, {0}), "The"), 2u);
}

TEST(LogScore, ZeroWeights) { EXPECT_EQ(log_score(model_of({"[a-z]", "e"}, {0, 0}), "the"), 0.0); }

TEST(LogScore, RepeatedFeature) {
    EXPECT_DOUBLE_EQ(log_score(model_of({"e"}, {std::log(3.47)}), "eee"), 3 * std::log(3.47));
}

TEST(LogScore, SumsActiveWeights) {
    auto m = model_of({"<7+>[A-Z]", "ian", "ism<*>", "q"}, {0.3, 1.1, 2.5, -4.0});
    EXPECT_DOUBLE_EQ(log_score(m, "Hamiltonianism"), 0.3 + 1.1 + 2.5);
}

TEST(Tilt, ZeroIsIdentityInDistribution) {
    auto m = model_of({"a"}, {0.7}, LengthDistribution::uniform(1, 2));
    auto t = tilt(m, FeaturePattern::parse("ab"), 0.0);
    auto strings = oracle::strings_up_to("ab", 2);
    auto q0 = oracle::probabilities(strings, m);
    auto q1 = oracle::probabilities(strings, t);
    for (std::size_t s = 0; s < strings.size(); ++s)
        EXPECT_NEAR(q0[s], q1[s], 1e-15);
}

TEST(Tilt, AddsFeatureToUniform) {
    auto u = model_of({}, {});
    auto t = tilt(u, FeaturePattern::parse("[a-z]"), std::log(6.99));
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t.features[0].text(), "[a-z]");
    EXPECT_DOUBLE_EQ(t.weights[0], std::log(6.99));
}

TEST(Tilt, WeightsAdd) {
    auto m = model_of({"a"}, {0.2});
    auto g = FeaturePattern::parse("b");
    auto twice = tilt(tilt(m, g, 0.4), g, -1.1);
    auto once = tilt(m, g, 0.4 - 1.1);
    EXPECT_EQ(twice.features, once.features);
    EXPECT_NEAR(twice.weights[1], once.weights[1], 1e-15);
    // existing feature: weight is incremented, not duplicated
    auto again = tilt(m, FeaturePattern::parse("a"), 0.5);
    ASSERT_EQ(again.size(), 1u);
    EXPECT_DOUBLE_EQ(again.weights[0], 0.7);
}

TEST(FieldModel, RejectsDuplicatesAndNonFiniteWeights) {
    EXPECT_THROW(model_of({"a", "a"}, {0, 0}), InvariantViolation);
    EXPECT_THROW(model_of({"a"}, {NAN}), InvariantViolation);
    EXPECT_THROW(model_of({"a"}, {}), InvariantViolation);
}

TEST(LengthDistribution, MustSumToOne) {
    EXPECT_THROW(LengthDistribution({0.5, 0.4}), InvariantViolation);
    EXPECT_THROW(LengthDistribution({1.5, -0.5}), InvariantViolation);
    EXPECT_NO_THROW(LengthDistribution({0.25, 0.75}));
}

TEST(Empirical, ProbabilitiesAndLengthMarginal) {
    EmpiricalDistribution p({{"a", 3}, {"bb", 1}});
    EXPECT_DOUBLE_EQ(p.prob_of("a"), 0.75);
    EXPECT_DOUBLE_EQ(p.prob_of("bb"), 0.25);
    EXPECT_DOUBLE_EQ(p.prob_of("c"), 0.0);
    auto l = p.length_marginal();
    EXPECT_DOUBLE_EQ(l(1), 0.75);
    EXPECT_DOUBLE_EQ(l(2), 0.25);
    EXPECT_DOUBLE_EQ(l(0), 0.0);
    EXPECT_DOUBLE_EQ(p.expectation(FeaturePattern::parse("b")), 0.5);
}
