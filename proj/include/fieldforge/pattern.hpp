#pragma once

#include <algorithm>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fieldforge/error.hpp"

namespace fieldforge {

inline constexpr char kFirstPrintable = 0x21;
inline constexpr char kLastPrintable = 0x7e;

constexpr bool is_printable(char c) noexcept {
    return c >= kFirstPrintable && c <= kLastPrintable;
}

constexpr bool is_lower(char c) noexcept { return c >= 'a' && c <= 'z'; }
constexpr bool is_upper(char c) noexcept { return c >= 'A' && c <= 'Z'; }
constexpr bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
// Everything printable that is not alphanumeric.
constexpr bool is_punct(char c) noexcept {
    return is_printable(c) && !is_lower(c) && !is_upper(c) && !is_digit(c);
}

enum class SymbolKind : std::uint8_t {
    Literal,
    Lower,
    Upper,
    Digit,
    Punct,
    Length,     // <1> .. <6>
    LengthLong, // <7+>
    Boundary,   // <*>
};

inline constexpr int kMaxExplicitLength = 6;
inline constexpr int kLongLength = 7;

using CharMask = std::bitset<128>;

/// One position of a feature pattern: a literal character, a character class,
/// or a label that can only match the distinguished length vertex of the ring.
class ExtendedSymbol {
public:
    static ExtendedSymbol literal(char c) {
        if (!is_printable(c))
            throw DataError("literal symbol must be printable ASCII");
        return ExtendedSymbol(SymbolKind::Literal, c, 0);
    }
    static ExtendedSymbol lower() { return ExtendedSymbol(SymbolKind::Lower, 0, 0); }
    static ExtendedSymbol upper() { return ExtendedSymbol(SymbolKind::Upper, 0, 0); }
    static ExtendedSymbol digit() { return ExtendedSymbol(SymbolKind::Digit, 0, 0); }
    static ExtendedSymbol punct() { return ExtendedSymbol(SymbolKind::Punct, 0, 0); }
    static ExtendedSymbol length(int l) {
        if (l < 1 || l > kMaxExplicitLength)
            throw DataError("length label must be in 1..6");
        return ExtendedSymbol(SymbolKind::Length, 0, l);
    }
    static ExtendedSymbol long_length() { return ExtendedSymbol(SymbolKind::LengthLong, 0, 0); }
    static ExtendedSymbol boundary() { return ExtendedSymbol(SymbolKind::Boundary, 0, 0); }

    SymbolKind kind() const noexcept { return kind_; }
    char character() const noexcept { return ch_; }
    int length_label() const noexcept { return length_; }

    // True for symbols that live on the length vertex.
    bool on_length_vertex() const noexcept {
        return kind_ == SymbolKind::Length || kind_ == SymbolKind::LengthLong ||
               kind_ == SymbolKind::Boundary;
    }

    bool matches_char(char c) const noexcept {
        switch (kind_) {
        case SymbolKind::Literal: return c == ch_;
        case SymbolKind::Lower: return is_lower(c);
        case SymbolKind::Upper: return is_upper(c);
        case SymbolKind::Digit: return is_digit(c);
        case SymbolKind::Punct: return is_punct(c);
        default: return false;
        }
    }

    bool matches_length(std::size_t string_length) const noexcept {
        switch (kind_) {
        case SymbolKind::Length: return string_length == static_cast<std::size_t>(length_);
        case SymbolKind::LengthLong: return string_length >= static_cast<std::size_t>(kLongLength);
        case SymbolKind::Boundary: return true;
        default: return false;
        }
    }

    CharMask char_mask() const {
        CharMask mask;
        for (int c = kFirstPrintable; c <= kLastPrintable; ++c)
            if (matches_char(static_cast<char>(c)))
                mask.set(static_cast<std::size_t>(c));
        return mask;
    }

    std::string text() const {
        switch (kind_) {
        case SymbolKind::Literal:
            if (ch_ == '[' || ch_ == '<' || ch_ == '\\')
                return std::string{'\\', ch_};
            return std::string(1, ch_);
        case SymbolKind::Lower: return "[a-z]";
        case SymbolKind::Upper: return "[A-Z]";
        case SymbolKind::Digit: return "[0-9]";
        case SymbolKind::Punct: return "[punct]";
        case SymbolKind::Length: return "<" + std::to_string(length_) + ">";
        case SymbolKind::LengthLong: return "<7+>";
        case SymbolKind::Boundary: return "<*>";
        }
        return {};
    }

    friend bool operator==(const ExtendedSymbol&, const ExtendedSymbol&) = default;

private:
    ExtendedSymbol(SymbolKind kind, char ch, int length) : kind_(kind), ch_(ch), length_(length) {}

    SymbolKind kind_;
    char ch_;
    int length_;
};

/// A substring pattern over extended symbols. Its feature value on a spelling
/// is the number of ring positions at which it occurs.
class FeaturePattern {
public:
    explicit FeaturePattern(std::vector<ExtendedSymbol> symbols) : symbols_(std::move(symbols)) {
        if (!valid(symbols_))
            throw InvariantViolation("invalid feature pattern: " + render(symbols_));
        text_ = render(symbols_);
    }

    // Parses the model-file syntax: literals as-is, [a-z] [A-Z] [0-9] [punct],
    // <1>..<6> <7+> <*>, and backslash escapes for '[', '<' and '\'.
    static FeaturePattern parse(std::string_view text) {
        std::vector<ExtendedSymbol> symbols;
        std::size_t i = 0;
        while (i < text.size()) {
            char c = text[i];
            if (c == '\\') {
                if (i + 1 >= text.size())
                    throw ParseError("dangling escape in pattern '" + std::string(text) + "'");
                char e = text[i + 1];
                if (e != '[' && e != '<' && e != '\\')
                    throw ParseError("bad escape in pattern '" + std::string(text) + "'");
                symbols.push_back(ExtendedSymbol::literal(e));
                i += 2;
            } else if (c == '[') {
                auto close = text.find(']', i);
                if (close == std::string_view::npos)
                    throw ParseError("unterminated class in pattern '" + std::string(text) + "'");
                auto body = text.substr(i, close - i + 1);
                if (body == "[a-z]") symbols.push_back(ExtendedSymbol::lower());
                else if (body == "[A-Z]") symbols.push_back(ExtendedSymbol::upper());
                else if (body == "[0-9]") symbols.push_back(ExtendedSymbol::digit());
                else if (body == "[punct]") symbols.push_back(ExtendedSymbol::punct());
                else throw ParseError("unknown class " + std::string(body));
                i = close + 1;
            } else if (c == '<') {
                auto close = text.find('>', i);
                if (close == std::string_view::npos)
                    throw ParseError("unterminated length label in pattern '" + std::string(text) + "'");
                auto body = text.substr(i + 1, close - i - 1);
                if (body == "*") symbols.push_back(ExtendedSymbol::boundary());
                else if (body == "7+") symbols.push_back(ExtendedSymbol::long_length());
                else if (body.size() == 1 && body[0] >= '1' && body[0] <= '6')
                    symbols.push_back(ExtendedSymbol::length(body[0] - '0'));
                else throw ParseError("unknown length label <" + std::string(body) + ">");
                i = close + 1;
            } else {
                if (!is_printable(c))
                    throw ParseError("non-printable character in pattern");
                symbols.push_back(ExtendedSymbol::literal(c));
                ++i;
            }
        }
        if (!valid(symbols))
            throw InvariantViolation("invalid feature pattern: " + std::string(text));
        return FeaturePattern(std::move(symbols));
    }

    static bool valid(const std::vector<ExtendedSymbol>& symbols) {
        if (symbols.empty())
            return false;
        auto labels = std::count_if(symbols.begin(), symbols.end(),
                                    [](const ExtendedSymbol& s) { return s.on_length_vertex(); });
        if (labels > 1)
            return false;
        for (std::size_t i = 1; i + 1 < symbols.size(); ++i)
            if (symbols[i].on_length_vertex())
                return false;
        return true;
    }

    const std::vector<ExtendedSymbol>& symbols() const noexcept { return symbols_; }
    std::size_t size() const noexcept { return symbols_.size(); }
    const std::string& text() const noexcept { return text_; }

    bool starts_with_label() const noexcept { return symbols_.front().on_length_vertex(); }
    bool ends_with_label() const noexcept { return symbols_.back().on_length_vertex(); }
    bool has_label() const noexcept { return starts_with_label() || ends_with_label(); }

    friend bool operator==(const FeaturePattern& a, const FeaturePattern& b) { return a.text_ == b.text_; }
    friend auto operator<=>(const FeaturePattern& a, const FeaturePattern& b) { return a.text_ <=> b.text_; }

private:
    static std::string render(const std::vector<ExtendedSymbol>& symbols) {
        std::string out;
        for (const auto& s : symbols)
            out += s.text();
        return out;
    }

    std::vector<ExtendedSymbol> symbols_;
    std::string text_;
};

/// Concatenation, or nothing when the result would break the pattern grammar.
inline std::optional<FeaturePattern> concatenate(const FeaturePattern& a, const FeaturePattern& b) {
    std::vector<ExtendedSymbol> symbols = a.symbols();
    symbols.insert(symbols.end(), b.symbols().begin(), b.symbols().end());
    if (!FeaturePattern::valid(symbols))
        return std::nullopt;
    return FeaturePattern(std::move(symbols));
}

// Ring layout for a spelling w of length l: vertices 0..l-1 carry w[0..l-1],
// vertex l is the length vertex, and vertex l is adjacent to both 0 and l-1.
// A window can only pass over the length vertex at a pattern's first or last
// symbol, so the three shapes below cover every occurrence.
inline std::size_t match_count(const FeaturePattern& pattern, std::string_view word) {
    const auto& sym = pattern.symbols();
    const std::size_t k = sym.size();
    const std::size_t l = word.size();
    if (k > l + 1)
        return 0;

    if (k == 1 && sym[0].on_length_vertex())
        return sym[0].matches_length(l) ? 1 : 0;

    if (pattern.starts_with_label()) {
        // label, then the first k-1 characters.
        if (!sym[0].matches_length(l))
            return 0;
        for (std::size_t j = 1; j < k; ++j)
            if (!sym[j].matches_char(word[j - 1]))
                return 0;
        return 1;
    }
    if (pattern.ends_with_label()) {
        if (!sym[k - 1].matches_length(l))
            return 0;
        const std::size_t start = l - (k - 1);
        for (std::size_t j = 0; j + 1 < k; ++j)
            if (!sym[j].matches_char(word[start + j]))
                return 0;
        return 1;
    }

    if (k > l)
        return 0;
    std::size_t count = 0;
    for (std::size_t p = 0; p + k <= l; ++p) {
        std::size_t j = 0;
        while (j < k && sym[j].matches_char(word[p + j]))
            ++j;
        if (j == k)
            ++count;
    }
    return count;
}

} // namespace fieldforge
