#include "planet/text.hpp"

#include <algorithm>
#include <map>

#include "planet/errors.hpp"

namespace planet::data {

namespace {

bool is_token_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (unsigned char c : text) {
        if (is_token_byte(c)) {
            cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

Vocabulary::Vocabulary() : tokens_{"<pad>", "<unk>"} {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
    for (const auto& t : tokens) {
        if (ids_.count(t) != 0) throw ValidationError("vocabulary token '" + t + "' listed twice");
        ids_.emplace(t, static_cast<std::int32_t>(tokens_.size()));
        tokens_.push_back(t);
    }
}

std::int32_t Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnknownId : it->second;
}

std::vector<std::string> Vocabulary::learned_tokens() const { return {tokens_.begin() + 2, tokens_.end()}; }

Vocabulary build_vocab(const std::vector<std::string>& texts, std::size_t min_count) {
    if (texts.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
    std::map<std::string, std::size_t> counts;
    for (const auto& t : texts)
        for (auto& w : split_words(t)) ++counts[w];
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [w, c] : counts)
        if (c >= min_count) kept.emplace_back(w, c);
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    tokens.reserve(kept.size());
    for (auto& [w, c] : kept) tokens.push_back(w);
    return Vocabulary(tokens);
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
    TokenSequence seq;
    seq.ids.assign(max_len, kPadId);
    for (const auto& w : split_words(text)) {
        if (seq.valid_len == max_len) break;
        seq.ids[seq.valid_len++] = vocab.id(w);
    }
    return seq;
}

}  // namespace planet::data
