#include "gscap/vocab.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace gscap {

const std::string Vocabulary::kBosToken = "<bos>";
const std::string Vocabulary::kEosToken = "<eos>";
const std::string Vocabulary::kUnkToken = "<unk>";
const std::string Vocabulary::kPadToken = "<pad>";

Vocabulary::Vocabulary() {
    push_token(kBosToken, 0);
    push_token(kEosToken, 0);
    push_token(kUnkToken, 0);
    push_token(kPadToken, 0);
}

void Vocabulary::push_token(const std::string& token, std::uint64_t freq) {
    token_to_index_.emplace(token, index_to_token_.size());
    index_to_token_.push_back(token);
    frequency_[token] = freq;
}

Vocabulary Vocabulary::build(const std::vector<TokenSeq>& corpus, std::size_t max_size,
                             double min_doc_frac) {
    if (corpus.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
    if (max_size < kNumReserved + 1) {
        throw ConfigError("vocabulary max_size must be at least " +
                          std::to_string(kNumReserved + 1) + " to fit the reserved tokens");
    }
    // std::map keeps candidate iteration lexicographic, which settles ties.
    std::map<std::string, std::uint64_t> freq;
    std::map<std::string, std::uint64_t> doc_count;
    for (const TokenSeq& sent : corpus) {
        std::set<std::string> seen;
        for (const std::string& tok : sent) {
            ++freq[tok];
            seen.insert(tok);
        }
        for (const std::string& tok : seen) ++doc_count[tok];
    }
    std::vector<std::pair<std::string, std::uint64_t>> ranked;
    ranked.reserve(freq.size());
    const double n_docs = static_cast<double>(corpus.size());
    for (const auto& [tok, count] : freq) {
        double frac = static_cast<double>(doc_count[tok]) / n_docs;
        if (frac + 1e-12 >= min_doc_frac) ranked.emplace_back(tok, count);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary vocab;
    for (const auto& [tok, count] : ranked) {
        if (vocab.size() >= max_size) break;
        vocab.push_token(tok, count);
    }
    return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.size() < kNumReserved || tokens[kBos] != kBosToken || tokens[kEos] != kEosToken ||
        tokens[kUnk] != kUnkToken || tokens[kPad] != kPadToken) {
        throw ValidationError("token list does not start with the reserved special tokens");
    }
    Vocabulary vocab;
    for (std::size_t i = kNumReserved; i < tokens.size(); ++i) {
        if (vocab.contains(tokens[i])) {
            throw ValidationError("duplicate token '" + tokens[i] + "' in vocabulary list");
        }
        vocab.push_token(tokens[i], 0);
    }
    return vocab;
}

bool Vocabulary::contains(const std::string& token) const {
    return token_to_index_.count(token) > 0;
}

std::size_t Vocabulary::index_of(const std::string& token) const {
    auto it = token_to_index_.find(token);
    return it == token_to_index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_at(std::size_t index) const {
    if (index >= index_to_token_.size()) {
        throw IndexError("vocabulary index " + std::to_string(index) + " out of range (size " +
                         std::to_string(index_to_token_.size()) + ")");
    }
    return index_to_token_[index];
}

std::uint64_t Vocabulary::frequency(const std::string& token) const {
    auto it = frequency_.find(token);
    return it == frequency_.end() ? 0 : it->second;
}

IndexSeq Vocabulary::encode(const TokenSeq& tokens) const {
    IndexSeq out;
    out.reserve(tokens.size() + 2);
    out.push_back(kBos);
    for (const std::string& tok : tokens) out.push_back(index_of(tok));
    out.push_back(kEos);
    return out;
}

IndexSeq Vocabulary::encode_text(const std::string& text) const { return encode(split_tokens(text)); }

TokenSeq Vocabulary::decode(const IndexSeq& indices) const {
    TokenSeq out;
    for (std::size_t idx : indices) {
        if (idx == kBos || idx == kEos || idx == kPad) continue;
        out.push_back(token_at(idx));
    }
    return out;
}

std::string Vocabulary::decode_text(const IndexSeq& indices) const {
    return join_tokens(decode(indices));
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](unsigned char byte) {
        h ^= byte;
        h *= 0x100000001b3ULL;
    };
    for (const std::string& tok : index_to_token_) {
        for (char c : tok) mix(static_cast<unsigned char>(c));
        mix('\n');
    }
    return h;
}

TokenSeq split_tokens(const std::string& text) {
    TokenSeq out;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::string join_tokens(const TokenSeq& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

} // namespace gscap
