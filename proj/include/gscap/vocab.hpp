#ifndef GSCAP_VOCAB_HPP
#define GSCAP_VOCAB_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gscap/error.hpp"

namespace gscap {

using TokenSeq = std::vector<std::string>;
using IndexSeq = std::vector<std::size_t>;

/// Token <-> index bijection with frequency metadata. Indices 0..3 are
/// reserved for the special tokens below; everything else is ranked by corpus
/// frequency (ties broken lexicographically).
class Vocabulary {
public:
    static constexpr std::size_t kBos = 0;
    static constexpr std::size_t kEos = 1;
    static constexpr std::size_t kUnk = 2;
    static constexpr std::size_t kPad = 3;
    static constexpr std::size_t kNumReserved = 4;

    static const std::string kBosToken; // "<bos>"
    static const std::string kEosToken; // "<eos>"
    static const std::string kUnkToken; // "<unk>"
    static const std::string kPadToken; // "<pad>"

    Vocabulary();

    /// Build from a corpus of token sequences. A token is kept when its
    /// frequency rank fits under max_size and it appears in at least
    /// min_doc_frac of the sentences.
    static Vocabulary build(const std::vector<TokenSeq>& corpus, std::size_t max_size,
                            double min_doc_frac = 0.0);

    /// Rebuild from an explicit index -> token list (checkpoint load).
    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

    std::size_t size() const { return index_to_token_.size(); }
    bool contains(const std::string& token) const;
    std::size_t index_of(const std::string& token) const; // kUnk when absent
    const std::string& token_at(std::size_t index) const;
    std::uint64_t frequency(const std::string& token) const;
    const std::vector<std::string>& tokens() const { return index_to_token_; }

    /// Wraps with BOS/EOS, maps out-of-vocabulary tokens to UNK.
    IndexSeq encode(const TokenSeq& tokens) const;
    IndexSeq encode_text(const std::string& text) const;

    /// Drops special tokens, maps indices back to tokens.
    TokenSeq decode(const IndexSeq& indices) const;
    std::string decode_text(const IndexSeq& indices) const;

    /// FNV-1a over the token list; stored in checkpoints to pin the vocab.
    std::uint64_t hash() const;

private:
    std::unordered_map<std::string, std::size_t> token_to_index_;
    std::vector<std::string> index_to_token_;
    std::unordered_map<std::string, std::uint64_t> frequency_;

    void push_token(const std::string& token, std::uint64_t freq);
};

/// Whitespace split.
TokenSeq split_tokens(const std::string& text);
std::string join_tokens(const TokenSeq& tokens);

} // namespace gscap

#endif
