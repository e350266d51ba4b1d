#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace planet::data {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnknownId = 1;
inline constexpr std::size_t kDefaultMaxLen = 300;

/// Lower-cases ASCII and splits on runs of non-alphanumeric bytes. Bytes
/// outside ASCII are kept inside tokens so multi-byte UTF-8 letters survive.
std::vector<std::string> split_words(std::string_view text);

class Vocabulary {
public:
    Vocabulary();
    /// Tokens for ids 2.. in id order (ids 0/1 are padding/unknown).
    explicit Vocabulary(const std::vector<std::string>& tokens);

    std::int32_t id(const std::string& token) const;
    const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const noexcept { return tokens_.size(); }
    /// Tokens with ids >= 2, in id order.
    std::vector<std::string> learned_tokens() const;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> ids_;
};

/// Tokens counted at least `min_count` times get ids 2.. by descending
/// frequency, ties broken lexicographically. Empty corpus -> ValidationError.
Vocabulary build_vocab(const std::vector<std::string>& texts, std::size_t min_count = 1);

struct TokenSequence {
    std::vector<std::int32_t> ids;  // exactly max_len entries, padded with 0
    std::size_t valid_len = 0;
};

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len = kDefaultMaxLen);

}  // namespace planet::data
