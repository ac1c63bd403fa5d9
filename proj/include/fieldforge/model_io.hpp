#pragma once

// Text model files:
//
//   fieldforge-model v1
//   LEN <l> <p_l>          one per length 0..L_max
//   FEAT <pattern> <lambda> one per feature, in index order
//
// Numbers use 17 significant digits and never depend on the locale.

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fieldforge/error.hpp"
#include "fieldforge/model.hpp"

namespace fieldforge {

inline constexpr std::string_view kModelHeader = "fieldforge-model v1";

inline std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    if (ec != std::errc{})
        throw Error("number formatting failed");
    return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view text, std::size_t line) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ParseError("bad number '" + std::string(text) + "'", line);
    return x;
}

inline void save_model(std::ostream& out, const FieldModel& model) {
    model.validate();
    out << kModelHeader << '\n';
    const auto& probs = model.length_dist.probs();
    for (std::size_t l = 0; l < probs.size(); ++l)
        out << "LEN " << l << ' ' << format_double(probs[l]) << '\n';
    for (std::size_t i = 0; i < model.features.size(); ++i)
        out << "FEAT " << model.features[i].text() << ' ' << format_double(model.weights[i]) << '\n';
}

inline void save_model(const FieldModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write model " + path);
    save_model(out, model);
    out.flush();
    if (!out)
        throw DataError("failed writing model " + path);
}

inline FieldModel load_model(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line))
        throw ParseError("missing header", line_no);
    if (line.rfind("fieldforge-model ", 0) == 0 && line != kModelHeader)
        throw DataError("unsupported model version: " + line);
    if (line != kModelHeader)
        throw ParseError("not a model file", line_no);

    std::vector<double> lengths;
    std::vector<FeaturePattern> features;
    std::vector<double> weights;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v(line);
        auto first = v.find(' ');
        auto last = v.rfind(' ');
        if (first == std::string_view::npos || first == last)
            throw ParseError("malformed record", line_no);
        auto tag = v.substr(0, first);
        auto middle = v.substr(first + 1, last - first - 1);
        auto number = v.substr(last + 1);
        if (tag == "LEN") {
            if (!features.empty())
                throw ParseError("LEN after FEAT", line_no);
            std::size_t l = 0;
            auto [ptr, ec] = std::from_chars(middle.data(), middle.data() + middle.size(), l);
            if (ec != std::errc{} || ptr != middle.data() + middle.size() || l != lengths.size())
                throw ParseError("LEN records must list lengths 0, 1, 2, ... in order", line_no);
            lengths.push_back(parse_double(number, line_no));
        } else if (tag == "FEAT") {
            try {
                features.push_back(FeaturePattern::parse(middle));
            } catch (const ParseError& e) {
                throw ParseError(e.what(), line_no);
            } catch (const InvariantViolation& e) {
                throw InvariantViolation("line " + std::to_string(line_no) + ": " + e.what());
            }
            weights.push_back(parse_double(number, line_no));
        } else {
            throw ParseError("unknown record '" + std::string(tag) + "'", line_no);
        }
    }
    if (lengths.empty())
        throw ParseError("no LEN records", line_no);
    double total = 0.0;
    for (double p : lengths)
        total += p;
    if (std::abs(total - 1.0) > kDistributionTolerance)
        throw ParseError("length probabilities sum to " + format_double(total) + ", file truncated?", line_no);
    return FieldModel(std::move(features), std::move(weights), LengthDistribution(std::move(lengths)));
}

inline FieldModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open model " + path);
    return load_model(in);
}

inline std::string to_model_text(const FieldModel& model) {
    std::ostringstream out;
    save_model(out, model);
    return out.str();
}

} // namespace fieldforge
