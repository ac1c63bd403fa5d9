#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>

#include "fieldforge/error.hpp"
#include "fieldforge/pattern.hpp"

namespace fieldforge {

/// The character set a spelling vertex may take. Sorted, unique, printable.
class Alphabet {
public:
    static Alphabet printable_ascii() {
        std::string chars;
        for (int c = kFirstPrintable; c <= kLastPrintable; ++c)
            chars.push_back(static_cast<char>(c));
        return Alphabet(std::move(chars));
    }

    explicit Alphabet(std::string chars) : chars_(std::move(chars)) {
        std::sort(chars_.begin(), chars_.end());
        chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
        if (chars_.empty())
            throw DataError("alphabet is empty");
        index_.fill(-1);
        for (std::size_t i = 0; i < chars_.size(); ++i) {
            if (!is_printable(chars_[i]))
                throw DataError("alphabet characters must be printable ASCII");
            index_[static_cast<unsigned char>(chars_[i])] = static_cast<int>(i);
        }
    }

    std::size_t size() const noexcept { return chars_.size(); }
    char operator[](std::size_t i) const noexcept { return chars_[i]; }
    const std::string& chars() const noexcept { return chars_; }

    // -1 when c is not a member.
    int index_of(char c) const noexcept { return index_[static_cast<unsigned char>(c)]; }
    bool contains(char c) const noexcept { return index_of(c) >= 0; }
    bool contains_all(std::string_view word) const noexcept {
        return std::all_of(word.begin(), word.end(), [this](char c) { return contains(c); });
    }

    friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.chars_ == b.chars_; }

private:
    std::string chars_;
    std::array<int, 256> index_{};
};

} // namespace fieldforge
