#ifndef GSCAP_TRANSLATOR_HPP
#define GSCAP_TRANSLATOR_HPP

#include <memory>
#include <string>
#include <unordered_map>

#include "gscap/vocab.hpp"

namespace gscap {

enum class TranslateDirection { LtoE, EtoL };

/// Pluggable translation contract for the dual-space evaluation harness.
/// Real machine-translation backends would implement this same interface.
class Translator {
public:
    virtual ~Translator() = default;
    virtual TokenSeq translate(const TokenSeq& tokens, TranslateDirection direction) const = 0;

    /// Tokens that had no translation in the last translate() call are mapped
    /// to the UNK token; implementations count them here.
    virtual std::uint64_t miss_count() const { return 0; }
    virtual void reset_miss_count() {}
};

/// Returns its input untouched.
class IdentityTranslator : public Translator {
public:
    TokenSeq translate(const TokenSeq& tokens, TranslateDirection) const override { return tokens; }
};

/// Token-by-token bijective map loaded from a two-column UTF-8 file
/// (L-token whitespace E-token per line). Misses become "<unk>".
class DictionaryTranslator : public Translator {
public:
    static DictionaryTranslator load(const std::string& path);
    DictionaryTranslator(std::unordered_map<std::string, std::string> l_to_e);

    TokenSeq translate(const TokenSeq& tokens, TranslateDirection direction) const override;
    std::uint64_t miss_count() const override { return misses_; }
    void reset_miss_count() override { misses_ = 0; }

private:
    std::unordered_map<std::string, std::string> l_to_e_;
    std::unordered_map<std::string, std::string> e_to_l_;
    mutable std::uint64_t misses_ = 0;
};

std::unique_ptr<Translator> make_translator(const std::string& dict_path_or_empty);

} // namespace gscap

#endif
