// gscap command-line front end. Parses flags and the optional key=value
// config file, then drives the shared-library C API.
#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "gscap/capi.h"

namespace {

struct CtxDeleter {
    void operator()(gscap_ctx* ctx) const { gscap_ctx_free(ctx); }
};
using CtxPtr = std::unique_ptr<gscap_ctx, CtxDeleter>;

int variant_id(const std::string& name) {
    if (name == "lstm") return GSCAP_VARIANT_LSTM;
    if (name == "gst") return GSCAP_VARIANT_GST;
    return GSCAP_VARIANT_GSSCN;
}

int loss_id(const std::string& name) {
    return name == "se" ? GSCAP_LOSS_SQUARED_ERROR : GSCAP_LOSS_CROSS_ENTROPY;
}

int finish(const CtxPtr& ctx, int rc) {
    if (rc != GSCAP_OK) std::fprintf(stderr, "gscap: %s\n", gscap_last_error(ctx.get()));
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Caption-generation toolkit: Gaussian-smoothed semantic features, "
                 "three recurrent cell variants, beam search and caption metrics"};
    app.require_subcommand(1);
    app.fallthrough(); // --seed may follow the subcommand
    app.set_config("--config", "", "Read options from a key=value config file (flags win)");
    app.allow_config_extras(false);

    std::uint64_t seed = 1;
    app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "Write a deterministic synthetic dataset");
    std::int64_t sy_items = 50, sy_vdim = 16, sy_sdim = 12, sy_vocab = 30, sy_caplen = 5;
    std::string sy_out;
    synth->add_option("--items", sy_items, "Number of items")->capture_default_str();
    synth->add_option("--vdim", sy_vdim, "Visual feature dimension")->capture_default_str();
    synth->add_option("--sdim", sy_sdim, "Semantic feature dimension")->capture_default_str();
    synth->add_option("--vocab", sy_vocab, "Word types available to the planted rule")
        ->capture_default_str();
    synth->add_option("--caplen", sy_caplen, "Caption length (planted top-k)")
        ->capture_default_str();
    synth->add_option("--out", sy_out, "Output dataset path (JSON lines)")->required();

    // train
    auto* train = app.add_subcommand("train", "Train a cell variant on a dataset");
    std::string tr_variant = "gst", tr_loss = "xent", tr_dataset, tr_checkpoint, tr_loss_csv,
                tr_embeddings;
    std::int64_t tr_hidden = 64, tr_embed = 32, tr_factor = 0, tr_vocab = 20000, tr_epochs = 50,
                 tr_batch = 32, tr_radius = 0;
    double tr_lr = 0.1, tr_dropout = 0.5, tr_sigma = 1.0, tr_clip = 0.0;
    bool tr_fine_tune = false;
    train->add_option("--variant", tr_variant, "Cell variant")
        ->check(CLI::IsMember({"lstm", "gst", "gsscn"}))
        ->capture_default_str();
    train->add_option("--dataset", tr_dataset, "Training dataset (JSON lines)")->required();
    train->add_option("--checkpoint", tr_checkpoint, "Checkpoint output path")->required();
    train->add_option("--loss-csv", tr_loss_csv, "Per-epoch loss trace output (CSV)");
    train->add_option("--loss", tr_loss, "Loss kind")
        ->check(CLI::IsMember({"xent", "se"}))
        ->capture_default_str();
    train->add_option("--hidden", tr_hidden, "Hidden dimension")->capture_default_str();
    train->add_option("--embed", tr_embed, "Embedding dimension")->capture_default_str();
    train->add_option("--factor", tr_factor, "Factor dimension (gsscn; 0 = hidden)")
        ->capture_default_str();
    train->add_option("--vocab", tr_vocab, "Vocabulary size cap")->capture_default_str();
    train->add_option("--epochs", tr_epochs, "Training epochs")->capture_default_str();
    train->add_option("--batch", tr_batch, "Batch size")->capture_default_str();
    train->add_option("--lr", tr_lr, "Learning rate")->capture_default_str();
    train->add_option("--dropout", tr_dropout, "Dropout rate at the four decoder sites")
        ->capture_default_str();
    train->add_option("--sigma", tr_sigma, "Gaussian smoothing width")->capture_default_str();
    train->add_option("--radius", tr_radius, "Kernel radius (0 = ceil(3*sigma))")
        ->capture_default_str();
    train->add_option("--clip", tr_clip, "Gradient global-norm clip (0 = off)")
        ->capture_default_str();
    train->add_option("--embeddings", tr_embeddings, "Pretrained embedding table (GloVe layout)");
    train->add_flag("--fine-tune-embedding", tr_fine_tune,
                    "Let gradients update the embedding table");

    // generate
    auto* gen = app.add_subcommand("generate", "Decode captions for a dataset");
    std::string ge_checkpoint, ge_dataset, ge_out;
    std::int64_t ge_beam = 5, ge_max_len = 16, ge_no_repeat = 2;
    gen->add_option("--checkpoint", ge_checkpoint, "Trained checkpoint")->required();
    gen->add_option("--dataset", ge_dataset, "Dataset with features")->required();
    gen->add_option("--out", ge_out, "Captions output path (JSON lines)")->required();
    gen->add_option("--beam", ge_beam, "Beam size (1 = greedy)")->capture_default_str();
    gen->add_option("--max-len", ge_max_len, "Maximum caption length")->capture_default_str();
    gen->add_option("--no-repeat", ge_no_repeat, "Blocked repeated n-gram size (0 = off)")
        ->capture_default_str();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score generated captions in both spaces");
    std::string ev_generated, ev_dataset, ev_refs_e, ev_dict, ev_out, ev_table;
    eval->add_option("--generated", ev_generated, "Generated captions (JSON lines)")->required();
    eval->add_option("--dataset", ev_dataset, "Dataset with reference captions")->required();
    eval->add_option("--refs-e", ev_refs_e, "English-reference dataset (default: --dataset)");
    eval->add_option("--dict", ev_dict, "Two-column translation dictionary (default: identity)");
    eval->add_option("--out", ev_out, "Report output path (JSON)")->required();
    eval->add_option("--table", ev_table, "Aligned text table output path");

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck",
                                    "Verify analytic gradients against finite differences");
    std::string gc_variant = "gst", gc_loss = "xent";
    std::int64_t gc_hidden = 4, gc_embed = 3, gc_semantic = 5, gc_factor = 2, gc_vocab = 6,
                 gc_visual = 4, gc_seq = 3;
    double gc_eps = 1e-5, gc_dropout = 0.0, gc_threshold = 1e-3;
    grad->add_option("--variant", gc_variant, "Cell variant")
        ->check(CLI::IsMember({"lstm", "gst", "gsscn"}))
        ->capture_default_str();
    grad->add_option("--loss", gc_loss, "Loss kind")
        ->check(CLI::IsMember({"xent", "se"}))
        ->capture_default_str();
    grad->add_option("--hidden", gc_hidden, "Hidden dimension")->capture_default_str();
    grad->add_option("--embed", gc_embed, "Embedding dimension")->capture_default_str();
    grad->add_option("--sdim", gc_semantic, "Semantic dimension")->capture_default_str();
    grad->add_option("--factor", gc_factor, "Factor dimension")->capture_default_str();
    grad->add_option("--vocab", gc_vocab, "Vocabulary size")->capture_default_str();
    grad->add_option("--vdim", gc_visual, "Visual dimension")->capture_default_str();
    grad->add_option("--seq-len", gc_seq, "Teacher-forced steps")->capture_default_str();
    grad->add_option("--eps", gc_eps, "Finite-difference step")->capture_default_str();
    grad->add_option("--dropout", gc_dropout, "Dropout rate during the check")
        ->capture_default_str();
    grad->add_option("--threshold", gc_threshold, "Maximum tolerated relative error")
        ->capture_default_str();

    // paramcount
    auto* pc = app.add_subcommand("paramcount", "Parameter counts for all three variants");
    std::int64_t pc_hidden = 512, pc_embed = 300, pc_semantic = 999, pc_factor = 0,
                 pc_vocab = 20000, pc_visual = 2048;
    pc->add_option("--hidden", pc_hidden, "Hidden dimension")->capture_default_str();
    pc->add_option("--embed", pc_embed, "Embedding dimension")->capture_default_str();
    pc->add_option("--sdim", pc_semantic, "Semantic dimension")->capture_default_str();
    pc->add_option("--factor", pc_factor, "Factor dimension (0 = hidden)")->capture_default_str();
    pc->add_option("--vocab", pc_vocab, "Vocabulary size")->capture_default_str();
    pc->add_option("--vdim", pc_visual, "Visual dimension")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "gscap: %s\n", e.what());
        return GSCAP_ERR_CONFIG;
    }

    CtxPtr ctx(gscap_ctx_new());
    if (!ctx) {
        std::fprintf(stderr, "gscap: out of memory\n");
        return GSCAP_ERR_CONFIG;
    }

    if (synth->parsed()) {
        gscap_synth_opts opts{sy_items, sy_vdim, sy_sdim, sy_vocab, sy_caplen, seed};
        return finish(ctx, gscap_synth(ctx.get(), &opts, sy_out.c_str()));
    }
    if (train->parsed()) {
        gscap_train_opts opts{};
        opts.variant = variant_id(tr_variant);
        opts.hidden_dim = tr_hidden;
        opts.embed_dim = tr_embed;
        opts.factor_dim = tr_factor;
        opts.max_vocab = tr_vocab;
        opts.sigma = tr_sigma;
        opts.radius = tr_radius;
        opts.loss_kind = loss_id(tr_loss);
        opts.learning_rate = tr_lr;
        opts.dropout = tr_dropout;
        opts.epochs = tr_epochs;
        opts.batch_size = tr_batch;
        opts.grad_clip = tr_clip;
        opts.seed = seed;
        opts.fine_tune_embedding = tr_fine_tune ? 1 : 0;
        opts.embeddings_path = tr_embeddings.empty() ? nullptr : tr_embeddings.c_str();
        return finish(ctx, gscap_train(ctx.get(), &opts, tr_dataset.c_str(),
                                       tr_checkpoint.c_str(),
                                       tr_loss_csv.empty() ? nullptr : tr_loss_csv.c_str()));
    }
    if (gen->parsed()) {
        gscap_generate_opts opts{ge_beam, ge_max_len, ge_no_repeat};
        return finish(ctx, gscap_generate(ctx.get(), &opts, ge_checkpoint.c_str(),
                                          ge_dataset.c_str(), ge_out.c_str()));
    }
    if (eval->parsed()) {
        gscap_eval_opts opts{};
        opts.dict_path = ev_dict.empty() ? nullptr : ev_dict.c_str();
        opts.refs_e_path = ev_refs_e.empty() ? nullptr : ev_refs_e.c_str();
        int rc = gscap_evaluate(ctx.get(), &opts, ev_generated.c_str(), ev_dataset.c_str(),
                                ev_out.c_str(), ev_table.empty() ? nullptr : ev_table.c_str());
        if (rc == GSCAP_OK && !ev_table.empty()) {
            if (FILE* f = std::fopen(ev_table.c_str(), "r")) {
                char buf[4096];
                std::size_t n;
                while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) {
                    std::fwrite(buf, 1, n, stdout);
                }
                std::fclose(f);
            }
        }
        return finish(ctx, rc);
    }
    if (grad->parsed()) {
        gscap_gradcheck_opts opts{};
        opts.variant = variant_id(gc_variant);
        opts.hidden_dim = gc_hidden;
        opts.embed_dim = gc_embed;
        opts.semantic_dim = gc_semantic;
        opts.factor_dim = gc_factor;
        opts.vocab_size = gc_vocab;
        opts.visual_dim = gc_visual;
        opts.seq_len = gc_seq;
        opts.loss_kind = loss_id(gc_loss);
        opts.dropout = gc_dropout;
        opts.epsilon = gc_eps;
        opts.seed = seed;
        double max_err = 0.0, frac = 0.0;
        int rc = gscap_gradcheck(ctx.get(), &opts, &max_err, &frac);
        if (rc != GSCAP_OK) return finish(ctx, rc);
        std::printf("variant %s loss %s: max relative error %.3e, %.2f%% of parameters within 1e-4\n",
                    gc_variant.c_str(), gc_loss.c_str(), max_err, 100.0 * frac);
        if (max_err > gc_threshold || frac < 0.99) {
            std::fprintf(stderr, "gscap: gradient check failed threshold %.3e\n", gc_threshold);
            return GSCAP_ERR_NUMERIC;
        }
        return GSCAP_OK;
    }
    if (pc->parsed()) {
        gscap_dims dims{pc_hidden, pc_embed, pc_semantic, pc_factor, pc_vocab, pc_visual};
        uint64_t counts[3] = {0, 0, 0};
        int rc = gscap_param_count(ctx.get(), &dims, counts);
        if (rc != GSCAP_OK) return finish(ctx, rc);
        std::printf("variant   parameters\n");
        std::printf("lstm      %llu\n", static_cast<unsigned long long>(counts[0]));
        std::printf("gst       %llu\n", static_cast<unsigned long long>(counts[1]));
        std::printf("gsscn     %llu\n", static_cast<unsigned long long>(counts[2]));
        std::printf("gst/gsscn ratio: %.4f\n",
                    static_cast<double>(counts[1]) / static_cast<double>(counts[2]));
        return GSCAP_OK;
    }
    return GSCAP_ERR_CONFIG;
}
