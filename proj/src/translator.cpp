#include "gscap/translator.hpp"

#include <fstream>
#include <sstream>

namespace gscap {

DictionaryTranslator DictionaryTranslator::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dictionary file: " + path);
    std::unordered_map<std::string, std::string> map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string l, e, extra;
        if (!(is >> l >> e) || (is >> extra)) {
            throw ValidationError("dictionary line " + std::to_string(lineno) +
                                  " is not a two-column entry: '" + line + "'");
        }
        map[l] = e;
    }
    return DictionaryTranslator(std::move(map));
}

DictionaryTranslator::DictionaryTranslator(std::unordered_map<std::string, std::string> l_to_e)
    : l_to_e_(std::move(l_to_e)) {
    for (const auto& [l, e] : l_to_e_) e_to_l_[e] = l;
}

TokenSeq DictionaryTranslator::translate(const TokenSeq& tokens,
                                         TranslateDirection direction) const {
    const auto& map = direction == TranslateDirection::LtoE ? l_to_e_ : e_to_l_;
    TokenSeq out;
    out.reserve(tokens.size());
    for (const std::string& tok : tokens) {
        auto it = map.find(tok);
        if (it == map.end()) {
            out.push_back(Vocabulary::kUnkToken);
            ++misses_;
        } else {
            out.push_back(it->second);
        }
    }
    return out;
}

std::unique_ptr<Translator> make_translator(const std::string& dict_path_or_empty) {
    if (dict_path_or_empty.empty()) return std::make_unique<IdentityTranslator>();
    return std::make_unique<DictionaryTranslator>(DictionaryTranslator::load(dict_path_or_empty));
}

} // namespace gscap
