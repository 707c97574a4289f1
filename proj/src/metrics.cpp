#include "gscap/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gscap/error.hpp"

namespace gscap {

using nlohmann::json;

void EvalCorpus::validate() const {
    std::set<std::string> ids;
    for (const EvalItem& item : items) {
        if (!ids.insert(item.image_id).second) {
            throw ValidationError("duplicate image_id '" + item.image_id + "' in evaluation corpus");
        }
        if (item.references.empty()) {
            throw ValidationError("item '" + item.image_id + "' has no references");
        }
        for (const TokenSeq& ref : item.references) {
            if (ref.empty()) {
                throw ValidationError("item '" + item.image_id + "' has an empty reference");
            }
        }
    }
}

TokenSeq normalize_tokens(const TokenSeq& tokens) {
    TokenSeq out;
    for (const std::string& tok : tokens) {
        std::string clean;
        for (char c : tok) {
            unsigned char u = static_cast<unsigned char>(c);
            if (std::ispunct(u)) continue;
            clean += static_cast<char>(std::tolower(u));
        }
        if (!clean.empty()) out.push_back(std::move(clean));
    }
    return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, double>;

NgramCounts count_ngrams(const TokenSeq& tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)] += 1.0;
    }
    return counts;
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace

std::vector<double> bleu(const EvalCorpus& corpus, std::size_t n_max) {
    if (corpus.items.empty()) throw DomainError("BLEU of an empty corpus");
    corpus.validate();
    std::vector<double> matched(n_max, 0.0), total(n_max, 0.0);
    double cand_len = 0.0, ref_len = 0.0;
    for (const EvalItem& item : corpus.items) {
        const std::size_t c = item.candidate.size();
        cand_len += static_cast<double>(c);
        // closest reference length; ties go to the shorter reference
        std::size_t best_ref = item.references.front().size();
        for (const TokenSeq& ref : item.references) {
            const auto diff = [&](std::size_t len) {
                return len > c ? len - c : c - len;
            };
            if (diff(ref.size()) < diff(best_ref) ||
                (diff(ref.size()) == diff(best_ref) && ref.size() < best_ref)) {
                best_ref = ref.size();
            }
        }
        ref_len += static_cast<double>(best_ref);
        for (std::size_t n = 1; n <= n_max; ++n) {
            NgramCounts cand = count_ngrams(item.candidate, n);
            NgramCounts clip;
            for (const TokenSeq& ref : item.references) {
                for (const auto& [gram, cnt] : count_ngrams(ref, n)) {
                    double& cur = clip[gram];
                    cur = std::max(cur, cnt);
                }
            }
            for (const auto& [gram, cnt] : cand) {
                auto it = clip.find(gram);
                if (it != clip.end()) matched[n - 1] += std::min(cnt, it->second);
                total[n - 1] += cnt;
            }
        }
    }
    const double bp = (cand_len > ref_len || cand_len == 0.0)
                          ? 1.0
                          : std::exp(1.0 - ref_len / cand_len);
    std::vector<double> out(n_max, 0.0);
    for (std::size_t k = 1; k <= n_max; ++k) {
        double log_sum = 0.0;
        bool zero = false;
        for (std::size_t n = 1; n <= k; ++n) {
            const double p = total[n - 1] > 0.0 ? matched[n - 1] / total[n - 1] : 0.0;
            if (p <= 0.0) {
                zero = true;
                break;
            }
            log_sum += std::log(p);
        }
        out[k - 1] = zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(k));
    }
    return out;
}

double rouge_l(const EvalCorpus& corpus, double beta) {
    if (corpus.items.empty()) throw DomainError("ROUGE_L of an empty corpus");
    corpus.validate();
    double acc = 0.0;
    for (const EvalItem& item : corpus.items) {
        double best = 0.0;
        for (const TokenSeq& ref : item.references) {
            const double l = static_cast<double>(lcs_length(item.candidate, ref));
            if (l == 0.0 || item.candidate.empty()) continue;
            const double p = l / static_cast<double>(item.candidate.size());
            const double r = l / static_cast<double>(ref.size());
            const double f = (1.0 + beta * beta) * p * r / (r + beta * beta * p);
            best = std::max(best, f);
        }
        acc += best;
    }
    return acc / static_cast<double>(corpus.items.size());
}

double cider_d(const EvalCorpus& corpus, std::size_t n_max, double sigma_len,
               std::vector<double>* per_item, std::vector<std::string>* warnings) {
    if (corpus.items.empty()) throw DomainError("CIDEr-D of an empty corpus");
    corpus.validate();
    if (corpus.items.size() == 1 && warnings) {
        warnings->push_back(
            "CIDEr-D over a single-item corpus: document frequencies make every IDF zero");
    }
    // document frequency: number of items whose reference set contains the n-gram
    std::vector<NgramCounts> df(n_max);
    for (const EvalItem& item : corpus.items) {
        for (std::size_t n = 1; n <= n_max; ++n) {
            std::set<std::vector<std::string>> seen;
            for (const TokenSeq& ref : item.references) {
                for (const auto& [gram, cnt] : count_ngrams(ref, n)) seen.insert(gram);
            }
            for (const auto& gram : seen) df[n - 1][gram] += 1.0;
        }
    }
    const double log_items = std::log(static_cast<double>(corpus.items.size()));

    auto tfidf = [&](const TokenSeq& tokens, std::size_t n) {
        NgramCounts vec = count_ngrams(tokens, n);
        for (auto& [gram, v] : vec) {
            auto it = df[n - 1].find(gram);
            const double d = it == df[n - 1].end() ? 0.0 : it->second;
            v *= log_items - std::log(std::max(1.0, d));
        }
        return vec;
    };
    auto norm = [](const NgramCounts& vec) {
        double sq = 0.0;
        for (const auto& [gram, v] : vec) sq += v * v;
        return std::sqrt(sq);
    };

    double corpus_score = 0.0;
    for (const EvalItem& item : corpus.items) {
        double over_n = 0.0;
        for (std::size_t n = 1; n <= n_max; ++n) {
            NgramCounts hyp = tfidf(item.candidate, n);
            const double hyp_norm = norm(hyp);
            double over_refs = 0.0;
            for (const TokenSeq& ref : item.references) {
                NgramCounts rv = tfidf(ref, n);
                const double ref_norm = norm(rv);
                double dotp = 0.0;
                for (const auto& [gram, v] : rv) {
                    auto it = hyp.find(gram);
                    if (it != hyp.end()) dotp += std::min(it->second, v) * v;
                }
                double sim = 0.0;
                if (hyp_norm > 0.0 && ref_norm > 0.0) sim = dotp / (hyp_norm * ref_norm);
                const double delta =
                    static_cast<double>(item.candidate.size()) - static_cast<double>(ref.size());
                sim *= std::exp(-(delta * delta) / (2.0 * sigma_len * sigma_len));
                over_refs += sim;
            }
            over_n += over_refs / static_cast<double>(item.references.size());
        }
        const double item_score = 10.0 * over_n / static_cast<double>(n_max);
        if (per_item) per_item->push_back(item_score);
        corpus_score += item_score;
    }
    return corpus_score / static_cast<double>(corpus.items.size());
}

EvalReport evaluate(const EvalCorpus& corpus) {
    corpus.validate();
    EvalReport report;
    const std::size_t n_max = 4;
    std::vector<double> bleus = bleu(corpus, n_max);
    for (std::size_t n = 1; n <= n_max; ++n) {
        report.scores["Bleu_" + std::to_string(n)] = bleus[n - 1];
    }
    report.scores["ROUGE_L"] = rouge_l(corpus);
    std::vector<double> cider_items;
    report.scores["CIDEr-D"] = cider_d(corpus, n_max, 6.0, &cider_items, &report.warnings);

    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        const EvalItem& item = corpus.items[i];
        ItemDiagnostics diag;
        diag.image_id = item.image_id;
        diag.cider_d = cider_items[i];
        EvalCorpus solo;
        solo.items.push_back(item);
        // per-item n-gram precisions, unsmoothed
        for (std::size_t n = 1; n <= n_max; ++n) {
            NgramCounts cand = count_ngrams(item.candidate, n);
            NgramCounts clip;
            for (const TokenSeq& ref : item.references) {
                for (const auto& [gram, cnt] : count_ngrams(ref, n)) {
                    double& cur = clip[gram];
                    cur = std::max(cur, cnt);
                }
            }
            double matched = 0.0, total = 0.0;
            for (const auto& [gram, cnt] : cand) {
                auto it = clip.find(gram);
                if (it != clip.end()) matched += std::min(cnt, it->second);
                total += cnt;
            }
            diag.bleu_precisions.push_back(total > 0.0 ? matched / total : 0.0);
        }
        for (const TokenSeq& ref : item.references) {
            diag.lcs_best = std::max(diag.lcs_best, lcs_length(item.candidate, ref));
        }
        diag.rouge_l = rouge_l(solo);
        report.items.push_back(std::move(diag));
    }
    return report;
}

DualSpaceReports evaluate_e1_e2(const std::vector<GeneratedCaption>& generated,
                                const ReferenceMap& refs_l, const ReferenceMap& refs_e,
                                Translator& translator) {
    auto find_refs = [](const ReferenceMap& refs, const std::string& id)
        -> const std::vector<TokenSeq>* {
        for (const auto& [rid, caps] : refs) {
            if (rid == id) return &caps;
        }
        return nullptr;
    };

    translator.reset_miss_count();
    EvalCorpus e1_corpus, e2_corpus;
    std::size_t skipped = 0;
    for (const GeneratedCaption& gen : generated) {
        const std::vector<TokenSeq>* rl = find_refs(refs_l, gen.image_id);
        const std::vector<TokenSeq>* re = find_refs(refs_e, gen.image_id);
        if (!rl || !re) {
            throw ValidationError("generated caption '" + gen.image_id +
                                  "' has no reference entry");
        }
        EvalItem e1_item{gen.image_id, normalize_tokens(gen.tokens), {}};
        for (const TokenSeq& ref : *rl) e1_item.references.push_back(normalize_tokens(ref));
        e1_corpus.items.push_back(std::move(e1_item));

        try {
            TokenSeq translated = translator.translate(gen.tokens, TranslateDirection::LtoE);
            EvalItem e2_item{gen.image_id, normalize_tokens(translated), {}};
            for (const TokenSeq& ref : *re) e2_item.references.push_back(normalize_tokens(ref));
            e2_corpus.items.push_back(std::move(e2_item));
        } catch (const Error&) {
            ++skipped;
        }
    }
    DualSpaceReports out;
    out.e1 = evaluate(e1_corpus);
    out.e2 = evaluate(e2_corpus);
    out.e2.skipped_items = skipped;
    out.e2.translator_misses = translator.miss_count();
    return out;
}

std::string report_to_json(const EvalReport& report) {
    json j;
    j["scores"] = report.scores;
    j["warnings"] = report.warnings;
    j["translator_misses"] = report.translator_misses;
    j["skipped_items"] = report.skipped_items;
    json items = json::array();
    for (const ItemDiagnostics& d : report.items) {
        json ji;
        ji["image_id"] = d.image_id;
        ji["ngram_precisions"] = d.bleu_precisions;
        ji["lcs_best"] = d.lcs_best;
        ji["rouge_l"] = d.rouge_l;
        ji["cider_d"] = d.cider_d;
        items.push_back(std::move(ji));
    }
    j["items"] = std::move(items);
    return j.dump(2);
}

std::string report_table(const std::vector<std::pair<std::string, const EvalReport*>>& rows) {
    static const char* kColumns[] = {"CIDEr-D", "Bleu_4", "Bleu_3", "Bleu_2", "Bleu_1", "ROUGE_L"};
    std::ostringstream os;
    os << std::left;
    os.width(12);
    os << "Run";
    for (const char* col : kColumns) {
        os.width(9);
        os << col;
    }
    os << '\n';
    for (const auto& [name, report] : rows) {
        os.width(12);
        os << name;
        for (const char* col : kColumns) {
            char buf[32];
            auto it = report->scores.find(col);
            std::snprintf(buf, sizeof(buf), "%.4f", it == report->scores.end() ? 0.0 : it->second);
            os.width(9);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

} // namespace gscap
