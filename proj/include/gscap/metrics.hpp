#ifndef GSCAP_METRICS_HPP
#define GSCAP_METRICS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gscap/translator.hpp"
#include "gscap/vocab.hpp"

namespace gscap {

struct EvalItem {
    std::string image_id;
    TokenSeq candidate;
    std::vector<TokenSeq> references;
};

struct EvalCorpus {
    std::vector<EvalItem> items;
    void validate() const; // >=1 nonempty reference per item, unique ids
};

struct ItemDiagnostics {
    std::string image_id;
    std::vector<double> bleu_precisions; // clipped n-gram precision per order
    std::size_t lcs_best = 0;            // best LCS length across references
    double rouge_l = 0.0;
    double cider_d = 0.0;                // per-item consensus (x10 scale)

    bool operator==(const ItemDiagnostics&) const = default;
};

struct EvalReport {
    std::map<std::string, double> scores; // Bleu_1..Bleu_4, ROUGE_L, CIDEr-D
    std::vector<ItemDiagnostics> items;
    std::vector<std::string> warnings;
    std::uint64_t translator_misses = 0;
    std::size_t skipped_items = 0;

    bool operator==(const EvalReport&) const = default;
};

/// Metric tokenization: lowercase, punctuation stripped, whitespace split.
TokenSeq normalize_tokens(const TokenSeq& tokens);

/// Corpus BLEU with per-reference clipping and the standard brevity penalty
/// exp(1 - r/c) applied when c < r. Returns BLEU_1..BLEU_n_max.
std::vector<double> bleu(const EvalCorpus& corpus, std::size_t n_max = 4);

/// Mean over items of the best LCS F-measure across references, with
/// recall-weighted beta.
double rouge_l(const EvalCorpus& corpus, double beta = 1.2);

/// TF-IDF n-gram consensus with clipped candidate counts and a Gaussian
/// length penalty; 10 * mean over orders and items. References define the
/// document-frequency corpus.
double cider_d(const EvalCorpus& corpus, std::size_t n_max = 4, double sigma_len = 6.0,
               std::vector<double>* per_item = nullptr,
               std::vector<std::string>* warnings = nullptr);

/// Full report: all metrics plus per-item diagnostics.
EvalReport evaluate(const EvalCorpus& corpus);

struct GeneratedCaption {
    std::string image_id;
    TokenSeq tokens;
    double log_prob = 0.0;
};

/// Ordered id -> references map (order is kept for deterministic reports).
using ReferenceMap = std::vector<std::pair<std::string, std::vector<TokenSeq>>>;

struct DualSpaceReports {
    EvalReport e1; // generated vs language-L references
    EvalReport e2; // translated generated vs English references
};

/// The dual-space harness: E1 scores the generated captions against the
/// language-L references as-is; E2 pushes the generated captions through the
/// translator and scores them against the English references. Items the
/// translator fails on are skipped and counted.
DualSpaceReports evaluate_e1_e2(const std::vector<GeneratedCaption>& generated,
                                const ReferenceMap& refs_l, const ReferenceMap& refs_e,
                                Translator& translator);

std::string report_to_json(const EvalReport& report);
std::string report_table(const std::vector<std::pair<std::string, const EvalReport*>>& rows);

} // namespace gscap

#endif
