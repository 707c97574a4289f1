#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gscap/training.hpp"

using namespace gscap;

namespace {

CellConfig check_config(CellVariant variant) {
    CellConfig c;
    c.variant = variant;
    c.hidden_dim = 4;
    c.embed_dim = 3;
    c.semantic_dim = variant == CellVariant::Lstm ? 0 : 5;
    c.factor_dim = variant == CellVariant::Gsscn ? 2 : 0;
    c.vocab_size = 6;
    c.visual_dim = 4;
    return c;
}

TrainConfig plain_config(LossKind kind) {
    TrainConfig t;
    t.dropout_rate = 0.0;
    t.loss_kind = kind;
    t.seed = 5;
    return t;
}

std::vector<TrainSample> small_batch(const CellConfig& cell, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainSample> batch;
    for (int n = 0; n < 2; ++n) {
        TrainSample s;
        s.v = Tensor::vector(cell.visual_dim);
        for (auto& v : s.v.data()) v = rng.uniform(-1.0, 1.0);
        if (cell.uses_semantics()) {
            Tensor raw = Tensor::vector(cell.semantic_dim);
            for (auto& v : raw.data()) v = rng.uniform();
            s.smoothed = smooth(raw, 1.0);
        }
        s.tokens = {Vocabulary::kBos, 4 + rng.uniform_index(cell.vocab_size - 4),
                    4 + rng.uniform_index(cell.vocab_size - 4), Vocabulary::kEos};
        batch.push_back(std::move(s));
    }
    return batch;
}

} // namespace

TEST_CASE("loss oracles") {
    Tensor uniform = Tensor::from({0.25, 0.25, 0.25, 0.25});
    Tensor onehot = Tensor::from({0.0, 1.0, 0.0, 0.0});
    // 0.5*(3*(1/4)^2 + (3/4)^2) by hand
    CHECK(loss_value(uniform, onehot, LossKind::SquaredError) ==
          doctest::Approx(0.375).epsilon(1e-15));
    CHECK(loss_value(uniform, onehot, LossKind::CrossEntropy) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(loss_value(onehot, onehot, LossKind::SquaredError) == 0.0);

    Tensor not_onehot = Tensor::from({0.5, 0.5, 0.0, 0.0});
    CHECK_THROWS_AS(loss_value(uniform, not_onehot, LossKind::CrossEntropy), ContractError);
    Tensor two_ones = Tensor::from({1.0, 1.0, 0.0, 0.0});
    CHECK_THROWS_AS(loss_value(uniform, two_ones, LossKind::CrossEntropy), ContractError);
}

TEST_CASE("analytic gradients match finite differences for every variant and loss") {
    for (CellVariant variant : {CellVariant::Lstm, CellVariant::Gst, CellVariant::Gsscn}) {
        for (LossKind kind : {LossKind::CrossEntropy, LossKind::SquaredError}) {
            CAPTURE(static_cast<int>(variant));
            CAPTURE(static_cast<int>(kind));
            GradCheckReport report =
                gradient_check(check_config(variant), plain_config(kind), 3, 12345, 1e-5);
            CHECK(report.n_params > 100);
            CHECK(report.max_rel_error <= 1e-3);
            CHECK(report.frac_within_tol >= 0.99);
        }
    }
}

TEST_CASE("gradient check holds under seeded dropout masks") {
    TrainConfig cfg = plain_config(LossKind::CrossEntropy);
    cfg.dropout_rate = 0.3;
    GradCheckReport report = gradient_check(check_config(CellVariant::Gst), cfg, 3, 99, 1e-5);
    CHECK(report.max_rel_error <= 1e-3);
}

TEST_CASE("stationary squared error gives zero gradients") {
    // V = 1 makes the softmax output exactly the one-hot target
    CellConfig c;
    c.variant = CellVariant::Lstm;
    c.hidden_dim = 3;
    c.embed_dim = 2;
    c.visual_dim = 2;
    c.vocab_size = 1;
    CellParams params = CellParams::init(c, 4);
    TrainSample s;
    s.v = Tensor::from({0.5, -0.5});
    s.tokens = {0, 0, 0};
    TrainConfig cfg = plain_config(LossKind::SquaredError);
    cfg.fine_tune_embedding = true;
    double loss = 0.0;
    CellParams grads = backward(params, {s}, cfg, 1, &loss);
    CHECK(loss == 0.0);
    visit_params(grads, [&](const std::string& name, const Tensor& t) {
        CAPTURE(name);
        for (double v : t.data()) CHECK(v == 0.0);
    });
}

TEST_CASE("gradients are deterministic given the seed") {
    CellConfig cell = check_config(CellVariant::Gsscn);
    CellParams params = CellParams::init(cell, 3);
    auto batch = small_batch(cell, 8);
    TrainConfig cfg = plain_config(LossKind::CrossEntropy);
    cfg.dropout_rate = 0.5;
    CellParams g1 = backward(params, batch, cfg, 42);
    CellParams g2 = backward(params, batch, cfg, 42);
    std::vector<const Tensor*> t1, t2;
    visit_params(g1, [&](const std::string&, const Tensor& t) { t1.push_back(&t); });
    visit_params(g2, [&](const std::string&, const Tensor& t) { t2.push_back(&t); });
    for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i]->data() == t2[i]->data());

    CellParams g3 = backward(params, batch, cfg, 43);
    bool any_diff = false;
    std::vector<const Tensor*> t3;
    visit_params(g3, [&](const std::string&, const Tensor& t) { t3.push_back(&t); });
    for (std::size_t i = 0; i < t1.size(); ++i) {
        if (t1[i]->data() != t3[i]->data()) any_diff = true;
    }
    CHECK(any_diff); // different masks actually bite
}

TEST_CASE("dropout at rate zero ignores the mask seed bit-exactly") {
    CellConfig cell = check_config(CellVariant::Gst);
    CellParams params = CellParams::init(cell, 6);
    auto batch = small_batch(cell, 9);
    TrainConfig cfg = plain_config(LossKind::CrossEntropy);
    CHECK(forward_loss(params, batch, cfg, 1) == forward_loss(params, batch, cfg, 999));
    CellParams g1 = backward(params, batch, cfg, 1);
    CellParams g2 = backward(params, batch, cfg, 999);
    std::vector<const Tensor*> t1, t2;
    visit_params(g1, [&](const std::string&, const Tensor& t) { t1.push_back(&t); });
    visit_params(g2, [&](const std::string&, const Tensor& t) { t2.push_back(&t); });
    for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i]->data() == t2[i]->data());
}

TEST_CASE("frozen embedding table receives no gradient") {
    CellConfig cell = check_config(CellVariant::Lstm);
    CellParams params = CellParams::init(cell, 13);
    auto batch = small_batch(cell, 14);
    TrainConfig cfg = plain_config(LossKind::CrossEntropy);
    cfg.fine_tune_embedding = false;
    CellParams grads = backward(params, batch, cfg, 2);
    for (double v : grads.W_E.data()) CHECK(v == 0.0);
    cfg.fine_tune_embedding = true;
    CellParams tuned = backward(params, batch, cfg, 2);
    double mag = 0.0;
    for (double v : tuned.W_E.data()) mag += std::abs(v);
    CHECK(mag > 0.0);
}

TEST_CASE("sgd_update arithmetic") {
    CellConfig c;
    c.variant = CellVariant::Lstm;
    c.hidden_dim = 1;
    c.embed_dim = 1;
    c.visual_dim = 1;
    c.vocab_size = 1;
    CellParams params = CellParams::zeros(c);
    params.W_hy[0] = 1.0;
    CellParams grads = CellParams::zeros(c);
    grads.W_hy[0] = 2.0;

    CellParams untouched = params;
    sgd_update(untouched, grads, 0.0);
    CHECK(untouched.W_hy[0] == 1.0);

    sgd_update(params, grads, 0.1);
    CHECK(params.W_hy[0] == doctest::Approx(0.8).epsilon(1e-15));

    // two sequential updates equal one update with the summed scaled step
    CellParams a = CellParams::zeros(c);
    a.W_hy[0] = 1.0;
    sgd_update(a, grads, 0.1);
    sgd_update(a, grads, 0.2);
    CellParams b = CellParams::zeros(c);
    b.W_hy[0] = 1.0;
    sgd_update(b, grads, 0.3);
    CHECK(a.W_hy[0] == doctest::Approx(b.W_hy[0]).epsilon(1e-12));
}

TEST_CASE("gradient clipping rescales the global norm") {
    CellConfig c;
    c.variant = CellVariant::Lstm;
    c.hidden_dim = 1;
    c.embed_dim = 1;
    c.visual_dim = 1;
    c.vocab_size = 1;
    CellParams params = CellParams::zeros(c);
    CellParams grads = CellParams::zeros(c);
    grads.W_hy[0] = 3.0;
    grads.W_E[0] = 4.0; // global norm 5
    sgd_update(params, grads, 1.0, 1.0);
    CHECK(params.W_hy[0] == doctest::Approx(-0.6).epsilon(1e-12));
    CHECK(params.W_E[0] == doctest::Approx(-0.8).epsilon(1e-12));
}

TEST_CASE("one small sgd step rarely increases the batch loss") {
    Rng rng(2024);
    int ok = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
        CellVariant variant = trial % 3 == 0   ? CellVariant::Lstm
                              : trial % 3 == 1 ? CellVariant::Gst
                                               : CellVariant::Gsscn;
        CellConfig cell = check_config(variant);
        CellParams params = CellParams::init(cell, rng.next_u64());
        auto batch = small_batch(cell, rng.next_u64());
        TrainConfig cfg = plain_config(LossKind::CrossEntropy);
        double before = 0.0;
        CellParams grads = backward(params, batch, cfg, 7, &before);
        sgd_update(params, grads, 1e-3);
        double after = forward_loss(params, batch, cfg, 7);
        if (after <= before) ++ok;
    }
    CHECK(ok >= trials * 95 / 100);
}

TEST_CASE("non-finite intermediates raise a numeric error naming the gate") {
    CellConfig c;
    c.variant = CellVariant::Lstm;
    c.hidden_dim = 2;
    c.embed_dim = 2;
    c.visual_dim = 2;
    c.vocab_size = 2;
    CellParams p = CellParams::zeros(c);
    p.W_x[kGateF](0, 0) = std::numeric_limits<double>::infinity();
    CellState st;
    st.h = Tensor::vector(2);
    st.c = Tensor::vector(2);
    // inf * 0 = NaN in the forget preactivation
    CHECK_THROWS_WITH_AS(lstm_step(p, Tensor::from({0.0, 1.0}), st),
                         doctest::Contains("gate f"), NumericError);
}

TEST_CASE("train memorizes a single sample") {
    SynthOptions so;
    so.n_items = 1;
    so.visual_dim = 8;
    so.semantic_dim = 10;
    so.vocab_size = 12;
    so.seed = 21;
    Dataset ds = synth_dataset(so);
    TrainRun run;
    run.cell.variant = CellVariant::Lstm;
    run.cell.hidden_dim = 16;
    run.cell.embed_dim = 8;
    run.train.epochs = 200;
    run.train.learning_rate = 1.0;
    run.train.dropout_rate = 0.0;
    run.train.seed = 2;
    run.train.batch_size = 32;
    TrainResult result = train(ds, run);
    CHECK(result.epoch_loss.size() == 200);
    CHECK(result.epoch_loss.back() < 1e-2);
    CHECK(result.epoch_loss.back() < result.epoch_loss.front());
}

TEST_CASE("training is deterministic under a fixed seed, dropout included") {
    SynthOptions so;
    so.n_items = 4;
    so.seed = 31;
    Dataset ds = synth_dataset(so);
    TrainRun run;
    run.cell.variant = CellVariant::Gst;
    run.cell.hidden_dim = 8;
    run.cell.embed_dim = 6;
    run.train.epochs = 5;
    run.train.learning_rate = 0.2;
    run.train.dropout_rate = 0.5;
    run.train.seed = 77;
    TrainResult a = train(ds, run);
    TrainResult b = train(ds, run);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.model.params.W_hy.data() == b.model.params.W_hy.data());
}

TEST_CASE("mini-batched training is deterministic and chunks correctly") {
    SynthOptions so;
    so.n_items = 5;
    so.seed = 61;
    Dataset ds = synth_dataset(so);
    TrainRun run;
    run.cell.variant = CellVariant::Gsscn;
    run.cell.hidden_dim = 8;
    run.cell.embed_dim = 6;
    run.cell.factor_dim = 4;
    run.train.epochs = 4;
    run.train.batch_size = 2; // 3 batches per epoch
    run.train.learning_rate = 0.2;
    run.train.dropout_rate = 0.25;
    run.train.seed = 5;
    TrainResult a = train(ds, run);
    TrainResult b = train(ds, run);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.model.params.W_hy.data() == b.model.params.W_hy.data());
    CHECK(a.epoch_loss.size() == 4);
}

TEST_CASE("empty dataset is a config error") {
    Dataset empty;
    TrainRun run;
    run.cell.variant = CellVariant::Lstm;
    run.cell.hidden_dim = 4;
    run.cell.embed_dim = 4;
    CHECK_THROWS_AS(train(empty, run), ConfigError);
}

TEST_CASE("make_samples smooths once per item and encodes captions") {
    SynthOptions so;
    so.n_items = 3;
    so.seed = 8;
    Dataset ds = synth_dataset(so);
    Model model;
    model.vocab = Vocabulary::build(ds.all_captions(), 100);
    CellConfig cell;
    cell.variant = CellVariant::Gst;
    cell.hidden_dim = 4;
    cell.embed_dim = 4;
    cell.semantic_dim = ds.semantic_dim();
    cell.visual_dim = ds.visual_dim();
    cell.vocab_size = model.vocab.size();
    model.params = CellParams::zeros(cell);
    model.sigma = 1.0;
    auto samples = make_samples(ds, model);
    REQUIRE(samples.size() == 3);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].smoothed.size() == ds.semantic_dim());
        CHECK(samples[i].tokens.front() == Vocabulary::kBos);
        CHECK(samples[i].tokens.back() == Vocabulary::kEos);
        CHECK(samples[i].tokens.size() == ds.items[i].captions[0].size() + 2);
    }
}

TEST_CASE("loss csv format") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "gscap_loss.csv").string();
    write_loss_csv({1.5, 0.25}, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,mean_loss");
    std::getline(in, line);
    CHECK(line == "1,1.5");
    std::getline(in, line);
    CHECK(line == "2,0.25");
    std::remove(path.c_str());
}
