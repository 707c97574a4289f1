#include "gscap/capi.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

#include "gscap/decoding.hpp"
#include "gscap/metrics.hpp"
#include "gscap/training.hpp"

using nlohmann::json;

struct gscap_ctx {
    std::string last_error;
};

namespace {

int fail(gscap_ctx* ctx, int code, const std::string& msg) {
    if (ctx) ctx->last_error = msg;
    return code;
}

// Exceptions map onto the CLI exit-code taxonomy.
int run_guarded(gscap_ctx* ctx, const std::function<int()>& body) {
    try {
        if (ctx) ctx->last_error.clear();
        return body();
    } catch (const gscap::ConfigError& e) {
        return fail(ctx, GSCAP_ERR_CONFIG, e.what());
    } catch (const gscap::NumericError& e) {
        return fail(ctx, GSCAP_ERR_NUMERIC, e.what());
    } catch (const gscap::Error& e) {
        return fail(ctx, GSCAP_ERR_VALIDATION, e.what());
    } catch (const std::exception& e) {
        return fail(ctx, GSCAP_ERR_VALIDATION, e.what());
    }
}

gscap::CellVariant variant_from_int(int v) {
    switch (v) {
        case GSCAP_VARIANT_LSTM: return gscap::CellVariant::Lstm;
        case GSCAP_VARIANT_GST: return gscap::CellVariant::Gst;
        case GSCAP_VARIANT_GSSCN: return gscap::CellVariant::Gsscn;
    }
    throw gscap::ConfigError("unknown variant id " + std::to_string(v));
}

gscap::LossKind loss_from_int(int v) {
    switch (v) {
        case GSCAP_LOSS_CROSS_ENTROPY: return gscap::LossKind::CrossEntropy;
        case GSCAP_LOSS_SQUARED_ERROR: return gscap::LossKind::SquaredError;
    }
    throw gscap::ConfigError("unknown loss id " + std::to_string(v));
}

std::size_t as_size(int64_t v, const char* what) {
    if (v < 0) throw gscap::ConfigError(std::string(what) + " must be nonnegative");
    return static_cast<std::size_t>(v);
}

std::size_t as_positive(int64_t v, const char* what) {
    if (v <= 0) throw gscap::ConfigError(std::string(what) + " must be positive");
    return static_cast<std::size_t>(v);
}

const char* require(const char* s, const char* what) {
    if (!s || !*s) throw gscap::ConfigError(std::string(what) + " path is required");
    return s;
}

} // namespace

extern "C" {

const char* gscap_version(void) { return "0.1.0"; }

gscap_ctx* gscap_ctx_new(void) { return new (std::nothrow) gscap_ctx(); }

void gscap_ctx_free(gscap_ctx* ctx) { delete ctx; }

const char* gscap_last_error(const gscap_ctx* ctx) {
    return ctx ? ctx->last_error.c_str() : "";
}

int gscap_synth(gscap_ctx* ctx, const gscap_synth_opts* opts, const char* out_path) {
    return run_guarded(ctx, [&]() {
        if (!opts) throw gscap::ConfigError("synth options are required");
        gscap::SynthOptions so;
        so.n_items = as_positive(opts->n_items, "n_items");
        so.visual_dim = as_positive(opts->visual_dim, "visual_dim");
        so.semantic_dim = as_positive(opts->semantic_dim, "semantic_dim");
        so.vocab_size = as_positive(opts->vocab_size, "vocab_size");
        so.caption_len = as_positive(opts->caption_len, "caption_len");
        so.seed = opts->seed;
        gscap::Dataset ds = gscap::synth_dataset(so);
        gscap::save_dataset(ds, require(out_path, "output"));
        return GSCAP_OK;
    });
}

int gscap_train(gscap_ctx* ctx, const gscap_train_opts* opts, const char* dataset_path,
                const char* checkpoint_out, const char* loss_csv_out) {
    return run_guarded(ctx, [&]() {
        if (!opts) throw gscap::ConfigError("train options are required");
        gscap::Dataset ds = gscap::load_dataset(require(dataset_path, "dataset"));
        gscap::TrainRun run;
        run.cell.variant = variant_from_int(opts->variant);
        run.cell.hidden_dim = as_positive(opts->hidden_dim, "hidden_dim");
        run.cell.embed_dim = as_positive(opts->embed_dim, "embed_dim");
        run.cell.factor_dim = opts->factor_dim <= 0 ? 0 : static_cast<std::size_t>(opts->factor_dim);
        run.max_vocab = as_positive(opts->max_vocab, "max_vocab");
        run.sigma = opts->sigma;
        run.radius = opts->radius <= 0 ? 0 : static_cast<std::size_t>(opts->radius);
        run.train.loss_kind = loss_from_int(opts->loss_kind);
        run.train.learning_rate = opts->learning_rate;
        run.train.dropout_rate = opts->dropout;
        run.train.epochs = as_positive(opts->epochs, "epochs");
        run.train.batch_size = as_positive(opts->batch_size, "batch_size");
        run.train.grad_clip = opts->grad_clip <= 0.0 ? 0.0 : opts->grad_clip;
        run.train.seed = opts->seed;
        run.train.fine_tune_embedding = opts->fine_tune_embedding != 0;
        if (opts->embeddings_path && *opts->embeddings_path) {
            run.embeddings_path = opts->embeddings_path;
        }
        gscap::TrainResult result = gscap::train(ds, run);
        gscap::save_checkpoint(result.model, require(checkpoint_out, "checkpoint"));
        if (loss_csv_out && *loss_csv_out) gscap::write_loss_csv(result.epoch_loss, loss_csv_out);
        return GSCAP_OK;
    });
}

int gscap_generate(gscap_ctx* ctx, const gscap_generate_opts* opts, const char* checkpoint_path,
                   const char* dataset_path, const char* out_jsonl) {
    return run_guarded(ctx, [&]() {
        if (!opts) throw gscap::ConfigError("generate options are required");
        gscap::DecodeOptions dopts;
        dopts.beam_size = as_positive(opts->beam_size, "beam_size");
        dopts.max_len = as_positive(opts->max_len, "max_len");
        dopts.no_repeat_n = as_size(opts->no_repeat_n, "no_repeat_n");
        gscap::Model model = gscap::load_checkpoint(require(checkpoint_path, "checkpoint"));
        gscap::Dataset ds = gscap::load_dataset(require(dataset_path, "dataset"),
                                                model.params.config.visual_dim,
                                                model.params.config.uses_semantics()
                                                    ? model.params.config.semantic_dim
                                                    : 0);
        std::ofstream out(require(out_jsonl, "output"));
        if (!out) throw gscap::ConfigError(std::string("cannot write output file: ") + out_jsonl);
        for (const gscap::DatasetItem& item : ds.items) {
            gscap::BeamResult res = gscap::beam_decode(model, item.v, item.s, dopts);
            gscap::TokenSeq words;
            for (std::size_t idx : res.best.tokens) words.push_back(model.vocab.token_at(idx));
            json rec;
            rec["image_id"] = item.image_id;
            rec["tokens"] = words;
            rec["text"] = gscap::join_tokens(words);
            rec["log_prob"] = res.best.log_prob;
            out << rec.dump() << '\n';
        }
        return GSCAP_OK;
    });
}

int gscap_evaluate(gscap_ctx* ctx, const gscap_eval_opts* opts, const char* generated_jsonl,
                   const char* dataset_path, const char* report_json_out,
                   const char* report_table_out) {
    return run_guarded(ctx, [&]() {
        if (!opts) throw gscap::ConfigError("evaluate options are required");
        std::ifstream in(require(generated_jsonl, "generated captions"));
        if (!in) {
            throw gscap::ConfigError(std::string("cannot open generated captions: ") +
                                     generated_jsonl);
        }
        std::vector<gscap::GeneratedCaption> generated;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::exception& e) {
                throw gscap::ValidationError("generated captions line " + std::to_string(lineno) +
                                             ": " + e.what());
            }
            gscap::GeneratedCaption gen;
            gen.image_id = rec.at("image_id").get<std::string>();
            if (rec.contains("tokens")) {
                for (const auto& t : rec["tokens"]) gen.tokens.push_back(t.get<std::string>());
            } else if (rec.contains("text")) {
                gen.tokens = gscap::split_tokens(rec["text"].get<std::string>());
            }
            gen.log_prob = rec.value("log_prob", 0.0);
            generated.push_back(std::move(gen));
        }

        auto refs_from = [](const gscap::Dataset& ds) {
            gscap::ReferenceMap refs;
            for (const gscap::DatasetItem& item : ds.items) {
                refs.emplace_back(item.image_id, item.captions);
            }
            return refs;
        };
        gscap::Dataset ds_l = gscap::load_dataset(require(dataset_path, "dataset"));
        gscap::ReferenceMap refs_l = refs_from(ds_l);
        gscap::ReferenceMap refs_e =
            (opts->refs_e_path && *opts->refs_e_path)
                ? refs_from(gscap::load_dataset(opts->refs_e_path))
                : refs_l;

        std::unique_ptr<gscap::Translator> translator =
            gscap::make_translator(opts->dict_path ? opts->dict_path : "");
        gscap::DualSpaceReports reports =
            gscap::evaluate_e1_e2(generated, refs_l, refs_e, *translator);

        if (report_json_out && *report_json_out) {
            std::ofstream jo(report_json_out);
            if (!jo) {
                throw gscap::ConfigError(std::string("cannot write report: ") + report_json_out);
            }
            json combined;
            combined["E1"] = json::parse(gscap::report_to_json(reports.e1));
            combined["E2"] = json::parse(gscap::report_to_json(reports.e2));
            jo << combined.dump(2) << '\n';
        }
        if (report_table_out && *report_table_out) {
            std::ofstream to(report_table_out);
            if (!to) {
                throw gscap::ConfigError(std::string("cannot write table: ") + report_table_out);
            }
            to << gscap::report_table({{"E1", &reports.e1}, {"E2", &reports.e2}});
        }
        return GSCAP_OK;
    });
}

int gscap_gradcheck(gscap_ctx* ctx, const gscap_gradcheck_opts* opts, double* max_rel_err_out,
                    double* frac_within_tol_out) {
    return run_guarded(ctx, [&]() {
        if (!opts) throw gscap::ConfigError("gradcheck options are required");
        gscap::CellConfig cell;
        cell.variant = variant_from_int(opts->variant);
        cell.hidden_dim = as_positive(opts->hidden_dim, "hidden_dim");
        cell.embed_dim = as_positive(opts->embed_dim, "embed_dim");
        cell.semantic_dim = cell.uses_semantics() ? as_positive(opts->semantic_dim, "semantic_dim")
                                                  : as_size(opts->semantic_dim, "semantic_dim");
        cell.factor_dim = cell.variant == gscap::CellVariant::Gsscn
                              ? as_positive(opts->factor_dim, "factor_dim")
                              : as_size(opts->factor_dim, "factor_dim");
        cell.vocab_size = as_positive(opts->vocab_size, "vocab_size");
        cell.visual_dim = as_positive(opts->visual_dim, "visual_dim");
        gscap::TrainConfig cfg;
        cfg.loss_kind = loss_from_int(opts->loss_kind);
        cfg.dropout_rate = opts->dropout;
        cfg.seed = opts->seed;
        cfg.validate();
        const double eps = opts->epsilon > 0.0 ? opts->epsilon : 1e-5;
        gscap::GradCheckReport report = gscap::gradient_check(
            cell, cfg, as_positive(opts->seq_len, "seq_len"), opts->seed, eps);
        if (max_rel_err_out) *max_rel_err_out = report.max_rel_error;
        if (frac_within_tol_out) *frac_within_tol_out = report.frac_within_tol;
        return GSCAP_OK;
    });
}

int gscap_param_count(gscap_ctx* ctx, const gscap_dims* dims, uint64_t counts_out[3]) {
    return run_guarded(ctx, [&]() {
        if (!dims || !counts_out) throw gscap::ConfigError("dims and output array are required");
        gscap::CellConfig base;
        base.hidden_dim = as_positive(dims->hidden_dim, "hidden_dim");
        base.embed_dim = as_positive(dims->embed_dim, "embed_dim");
        base.semantic_dim = as_positive(dims->semantic_dim, "semantic_dim");
        base.factor_dim = dims->factor_dim <= 0 ? base.hidden_dim
                                                : static_cast<std::size_t>(dims->factor_dim);
        base.vocab_size = as_positive(dims->vocab_size, "vocab_size");
        base.visual_dim = as_positive(dims->visual_dim, "visual_dim");
        gscap::CellConfig lstm = base;
        lstm.variant = gscap::CellVariant::Lstm;
        gscap::CellConfig gst = base;
        gst.variant = gscap::CellVariant::Gst;
        gscap::CellConfig gsscn = base;
        gsscn.variant = gscap::CellVariant::Gsscn;
        counts_out[0] = gscap::param_count(lstm);
        counts_out[1] = gscap::param_count(gst);
        counts_out[2] = gscap::param_count(gsscn);
        return GSCAP_OK;
    });
}

} // extern "C"
