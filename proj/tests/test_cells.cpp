#include <doctest.h>

#include <cmath>

#include "gscap/cells.hpp"

using namespace gscap;

namespace {

CellConfig tiny_lstm() {
    CellConfig c;
    c.variant = CellVariant::Lstm;
    c.hidden_dim = 2;
    c.embed_dim = 1;
    c.visual_dim = 2;
    c.vocab_size = 3;
    return c;
}

} // namespace

TEST_CASE("init_state zero weights give zero state") {
    CellParams p = CellParams::zeros(tiny_lstm());
    Tensor v = Tensor::from({1.0, -2.0});
    CellState st = init_state(p, v);
    CHECK(st.t == 0);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(st.h[i] == 0.0);
        CHECK(st.c[i] == 0.0);
    }
}

TEST_CASE("init_state hand case") {
    CellParams p = CellParams::zeros(tiny_lstm());
    p.W_h0 = Tensor::from_rows({{0.1, 0.2}, {0.3, -0.4}});
    p.b_h0 = Tensor::from({0.05, -0.05});
    p.W_c0 = Tensor::from_rows({{-0.2, 0.1}, {0.0, 0.5}});
    p.b_c0 = Tensor::from({0.0, 0.1});
    CellState st = init_state(p, Tensor::from({1.0, 1.0}));
    // hand-evaluated affine+tanh maps
    CHECK(st.h[0] == doctest::Approx(0.3363755443363322).epsilon(1e-15));
    CHECK(st.h[1] == doctest::Approx(-0.148885033623318).epsilon(1e-15));
    CHECK(st.c[0] == doctest::Approx(-0.09966799462495582).epsilon(1e-15));
    CHECK(st.c[1] == doctest::Approx(0.5370495669980353).epsilon(1e-15));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(st.h[i] > -1.0);
        CHECK(st.h[i] < 1.0);
    }
}

TEST_CASE("lstm_step zero params zero everything") {
    CellParams p = CellParams::zeros(tiny_lstm());
    CellState st;
    st.h = Tensor::vector(2);
    st.c = Tensor::vector(2);
    CellState next = lstm_step(p, Tensor::from({0.3}), st);
    CHECK(next.t == 1);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(next.h[i] == 0.0);
        CHECK(next.c[i] == 0.0);
    }
}

TEST_CASE("scalar lstm hand step") {
    CellConfig c;
    c.variant = CellVariant::Lstm;
    c.hidden_dim = 1;
    c.embed_dim = 1;
    c.visual_dim = 1;
    c.vocab_size = 1;
    CellParams p = CellParams::zeros(c);
    p.W_x[kGateI] = Tensor::from_rows({{0.5}});
    p.W_h[kGateI] = Tensor::from_rows({{-0.3}});
    p.b[kGateI] = Tensor::from({0.1});
    p.W_x[kGateF] = Tensor::from_rows({{-0.2}});
    p.W_h[kGateF] = Tensor::from_rows({{0.4}});
    p.W_x[kGateO] = Tensor::from_rows({{0.3}});
    p.W_h[kGateO] = Tensor::from_rows({{0.2}});
    p.b[kGateO] = Tensor::from({-0.1});
    p.W_x[kGateG] = Tensor::from_rows({{1.0}});
    p.W_h[kGateG] = Tensor::from_rows({{-1.0}});
    p.b[kGateG] = Tensor::from({0.2});
    CellState st;
    st.h = Tensor::from({0.25});
    st.c = Tensor::from({-0.5});
    StepCache cache;
    CellState next = lstm_step(p, Tensor::from({0.7}), st, &cache);
    CHECK(cache.gate[kGateI][0] == doctest::Approx(0.5926665999540697).epsilon(1e-15));
    CHECK(cache.gate[kGateF][0] == doctest::Approx(0.4900013331200346).epsilon(1e-15));
    CHECK(cache.gate[kGateO][0] == doctest::Approx(0.5399148845555657).epsilon(1e-15));
    CHECK(cache.gate[kGateG][0] == doctest::Approx(0.5716699660851172).epsilon(1e-15));
    CHECK(next.c[0] == doctest::Approx(0.09380902853550743).epsilon(1e-15));
    CHECK(next.h[0] == doctest::Approx(0.05050083959914008).epsilon(1e-15));
}

TEST_CASE("gst hand step") {
    CellConfig c;
    c.variant = CellVariant::Gst;
    c.hidden_dim = 2;
    c.embed_dim = 1;
    c.semantic_dim = 2;
    c.visual_dim = 2;
    c.vocab_size = 2;
    CellParams p = CellParams::zeros(c);
    p.W_hm = Tensor::from_rows({{0.5, 0.5}, {1.0, -1.0}});
    p.W_hn = Tensor::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    p.W_x[kGateI] = Tensor::from_rows({{0.5}, {-0.5}});
    p.W_h[kGateI] = Tensor::from_rows({{0.2, 0.1}, {0.0, 0.3}});
    p.b[kGateI] = Tensor::from({0.1, 0.0});
    p.W_x[kGateF] = Tensor::from_rows({{0.3}, {0.3}});
    p.W_h[kGateF] = Tensor::from_rows({{-0.1, 0.2}, {0.2, -0.1}});
    p.b[kGateF] = Tensor::from({0.0, 0.1});
    p.W_x[kGateO] = Tensor::from_rows({{-0.4}, {0.4}});
    p.W_h[kGateO] = Tensor::from_rows({{0.1, 0.0}, {0.0, 0.1}});
    p.b[kGateO] = Tensor::from({0.05, 0.05});
    p.W_x[kGateG] = Tensor::from_rows({{1.0}, {0.5}});
    p.W_h[kGateG] = Tensor::from_rows({{0.3, -0.3}, {-0.3, 0.3}});
    CellState st;
    st.h = Tensor::from({0.3, -0.4});
    st.c = Tensor::from({0.1, -0.1});
    StepCache cache;
    CellState next = gst_step(p, Tensor::from({0.7}), st, Tensor::from({0.6, 0.2}), &cache);
    CHECK(cache.h_rev[0] == doctest::Approx(0.12).epsilon(1e-15));
    CHECK(cache.h_rev[1] == doctest::Approx(-0.16).epsilon(1e-15));
    CHECK(next.c[0] == doctest::Approx(0.4553518673278578).epsilon(1e-14));
    CHECK(next.c[1] == doctest::Approx(0.04576379688761735).epsilon(1e-14));
    CHECK(next.h[0] == doctest::Approx(0.19000300912543883).epsilon(1e-14));
    CHECK(next.h[1] == doctest::Approx(0.026426681703627858).epsilon(1e-14));
}

TEST_CASE("gst with zero smoothed degenerates to zero hidden input") {
    CellConfig c;
    c.variant = CellVariant::Gst;
    c.hidden_dim = 2;
    c.embed_dim = 1;
    c.semantic_dim = 3;
    c.visual_dim = 2;
    c.vocab_size = 2;
    CellParams p = CellParams::init(c, 5);
    CellState st;
    st.h = Tensor::from({0.5, -0.5});
    st.c = Tensor::from({0.2, 0.1});
    Tensor x = Tensor::from({0.3});
    StepCache cache;
    CellState via_gst = gst_step(p, x, st, Tensor::vector(3), &cache);
    CHECK(cache.h_rev[0] == 0.0);
    CHECK(cache.h_rev[1] == 0.0);
    CellState zero_h = st;
    zero_h.h = Tensor::vector(2);
    // plain step on the zeroed hidden state must agree
    CellParams as_lstm = p;
    CellState via_lstm = lstm_step(as_lstm, x, zero_h);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(via_gst.h[i] == doctest::Approx(via_lstm.h[i]).epsilon(1e-15));
        CHECK(via_gst.c[i] == doctest::Approx(via_lstm.c[i]).epsilon(1e-15));
    }
}

TEST_CASE("gsscn hand step") {
    CellConfig c;
    c.variant = CellVariant::Gsscn;
    c.hidden_dim = 2;
    c.embed_dim = 1;
    c.semantic_dim = 2;
    c.factor_dim = 2;
    c.visual_dim = 2;
    c.vocab_size = 2;
    CellParams p = CellParams::zeros(c);
    const Tensor Wx = Tensor::from_rows({{0.4, 0.2}, {0.1, 0.3}});
    const Tensor Wh = Tensor::from_rows({{0.2, -0.1}, {0.0, 0.4}});
    const Tensor half_eye = Tensor::from_rows({{0.5, 0.0}, {0.0, 0.5}});
    const Tensor eye = Tensor::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    const Tensor flip = Tensor::from_rows({{1.0}, {-1.0}});
    const double biases[kNumGates] = {0.05, 0.0, -0.05, 0.1};
    for (std::size_t g = 0; g < kNumGates; ++g) {
        p.W_x[g] = Wx;
        p.W_h[g] = Wh;
        p.b[g].fill(biases[g]);
        p.W_xm[g] = half_eye;
        p.W_xn[g] = flip;
        p.W_hm_g[g] = eye;
        p.W_hn_g[g] = eye;
    }
    CellState st;
    st.h = Tensor::from({0.3, -0.4});
    st.c = Tensor::from({0.1, -0.1});
    CellState next = gsscn_step(p, Tensor::from({0.7}), st, Tensor::from({0.6, 0.2}));
    CHECK(next.c[0] == doctest::Approx(0.16686605551090525).epsilon(1e-14));
    CHECK(next.c[1] == doctest::Approx(-0.014946855871471668).epsilon(1e-14));
    CHECK(next.h[0] == doctest::Approx(0.08531162603611951).epsilon(1e-14));
    CHECK(next.h[1] == doctest::Approx(-0.007166655277758086).epsilon(1e-14));
}

TEST_CASE("gsscn with zero smoothed leaves only biases") {
    CellConfig c;
    c.variant = CellVariant::Gsscn;
    c.hidden_dim = 2;
    c.embed_dim = 2;
    c.semantic_dim = 3;
    c.factor_dim = 2;
    c.visual_dim = 2;
    c.vocab_size = 2;
    CellParams p = CellParams::init(c, 11);
    for (std::size_t g = 0; g < kNumGates; ++g) p.b[g] = Tensor::from({0.2, -0.1});
    CellState st;
    st.h = Tensor::from({0.4, 0.6});
    st.c = Tensor::from({0.3, -0.2});
    StepCache cache;
    CellState next = gsscn_step(p, Tensor::from({1.0, -1.0}), st, Tensor::vector(3), &cache);
    // gates reduce to nonlinearity(bias)
    Tensor want_i = sigmoid(p.b[kGateI]);
    Tensor want_g = tanh_elem(p.b[kGateG]);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(cache.gate[kGateI][i] == doctest::Approx(want_i[i]).epsilon(1e-15));
        CHECK(cache.gate[kGateG][i] == doctest::Approx(want_g[i]).epsilon(1e-15));
    }
}

TEST_CASE("gsscn reduction to lstm") {
    // f = d = m, selecting factor matrices, ones in the smoothed vector
    const std::size_t d = 3, s = 4;
    CellConfig lc;
    lc.variant = CellVariant::Lstm;
    lc.hidden_dim = d;
    lc.embed_dim = d;
    lc.visual_dim = 2;
    lc.vocab_size = 3;
    CellParams lstm = CellParams::init(lc, 21);

    CellConfig gc = lc;
    gc.variant = CellVariant::Gsscn;
    gc.semantic_dim = s;
    gc.factor_dim = d;
    CellParams gsscn = CellParams::zeros(gc);
    for (std::size_t g = 0; g < kNumGates; ++g) {
        gsscn.W_x[g] = lstm.W_x[g];
        gsscn.W_h[g] = lstm.W_h[g];
        gsscn.b[g] = lstm.b[g];
        for (std::size_t r = 0; r < d; ++r) {
            gsscn.W_xm[g](r, 0) = 1.0; // row . ones == 1 exactly
            gsscn.W_hm_g[g](r, 0) = 1.0;
            gsscn.W_xn[g](r, r) = 1.0;
            gsscn.W_hn_g[g](r, r) = 1.0;
        }
    }
    Tensor ones = Tensor::vector(s);
    ones.fill(1.0);

    Rng rng(33);
    CellState st;
    st.h = Tensor::vector(d);
    st.c = Tensor::vector(d);
    for (auto& v : st.h.data()) v = rng.uniform(-0.9, 0.9);
    for (auto& v : st.c.data()) v = rng.uniform(-0.9, 0.9);
    Tensor x = Tensor::vector(d);
    for (auto& v : x.data()) v = rng.uniform(-1.0, 1.0);

    CellState a = lstm_step(lstm, x, st);
    CellState b = gsscn_step(gsscn, x, st, ones);
    for (std::size_t i = 0; i < d; ++i) {
        CHECK(std::abs(a.h[i] - b.h[i]) <= 1e-12);
        CHECK(std::abs(a.c[i] - b.c[i]) <= 1e-12);
    }
}

TEST_CASE("gst reduction to lstm") {
    const std::size_t d = 3, s = 5;
    CellConfig lc;
    lc.variant = CellVariant::Lstm;
    lc.hidden_dim = d;
    lc.embed_dim = 2;
    lc.visual_dim = 2;
    lc.vocab_size = 3;
    CellParams lstm = CellParams::init(lc, 8);

    CellConfig gc = lc;
    gc.variant = CellVariant::Gst;
    gc.semantic_dim = s;
    CellParams gst = CellParams::zeros(gc);
    for (std::size_t g = 0; g < kNumGates; ++g) {
        gst.W_x[g] = lstm.W_x[g];
        gst.W_h[g] = lstm.W_h[g];
        gst.b[g] = lstm.b[g];
    }
    for (std::size_t r = 0; r < d; ++r) {
        gst.W_hm(r, 0) = 1.0; // (W_hm . ones) == 1 exactly
        gst.W_hn(r, r) = 1.0;
    }
    Tensor ones = Tensor::vector(s);
    ones.fill(1.0);

    Rng rng(13);
    CellState st;
    st.h = Tensor::vector(d);
    st.c = Tensor::vector(d);
    for (auto& v : st.h.data()) v = rng.uniform(-0.9, 0.9);
    for (auto& v : st.c.data()) v = rng.uniform(-0.9, 0.9);
    Tensor x = Tensor::from({0.4, -0.7});

    CellState a = lstm_step(lstm, x, st);
    CellState b = gst_step(gst, x, st, ones);
    for (std::size_t i = 0; i < d; ++i) {
        CHECK(std::abs(a.h[i] - b.h[i]) <= 1e-12);
        CHECK(std::abs(a.c[i] - b.c[i]) <= 1e-12);
    }
}

TEST_CASE("hidden state stays bounded over long rollouts") {
    CellConfig c;
    c.variant = CellVariant::Gst;
    c.hidden_dim = 6;
    c.embed_dim = 4;
    c.semantic_dim = 5;
    c.visual_dim = 3;
    c.vocab_size = 4;
    CellParams p = CellParams::init(c, 77);
    Rng rng(78);
    Tensor sm = Tensor::vector(5);
    for (auto& v : sm.data()) v = rng.uniform();
    Tensor v = Tensor::vector(3);
    for (auto& x : v.data()) x = rng.uniform(-2.0, 2.0);
    CellState st = init_state(p, v);
    for (int t = 0; t < 100; ++t) {
        Tensor x = Tensor::vector(4);
        for (auto& e : x.data()) e = rng.uniform(-5.0, 5.0);
        st = gst_step(p, x, st, sm);
        for (std::size_t i = 0; i < st.h.size(); ++i) {
            CHECK(std::abs(st.h[i]) < 1.0);
            CHECK(std::isfinite(st.c[i]));
        }
    }
    CHECK(st.t == 100);
}

TEST_CASE("steps are deterministic") {
    CellConfig c;
    c.variant = CellVariant::Gsscn;
    c.hidden_dim = 4;
    c.embed_dim = 3;
    c.semantic_dim = 5;
    c.factor_dim = 2;
    c.visual_dim = 3;
    c.vocab_size = 5;
    CellParams p = CellParams::init(c, 99);
    Rng rng(100);
    Tensor sm = Tensor::vector(5);
    for (auto& v : sm.data()) v = rng.uniform();
    Tensor v = Tensor::vector(3);
    for (auto& x : v.data()) x = rng.uniform(-1.0, 1.0);
    Tensor x = Tensor::vector(3);
    for (auto& e : x.data()) e = rng.uniform(-1.0, 1.0);
    CellState a = gsscn_step(p, x, init_state(p, v), sm);
    CellState b = gsscn_step(p, x, init_state(p, v), sm);
    CHECK(a.h.data() == b.h.data());
    CHECK(a.c.data() == b.c.data());
}

TEST_CASE("project_logits and embed") {
    CellConfig c = tiny_lstm();
    CellParams p = CellParams::zeros(c);
    Tensor h = Tensor::from({0.5, -0.5});
    Tensor logits = project_logits(p, h);
    REQUIRE(logits.size() == 3);
    Tensor probs = softmax(logits);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(probs[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }

    // V=2, d=1 hand values
    CellConfig c2;
    c2.variant = CellVariant::Lstm;
    c2.hidden_dim = 1;
    c2.embed_dim = 1;
    c2.visual_dim = 1;
    c2.vocab_size = 2;
    CellParams p2 = CellParams::zeros(c2);
    p2.W_hy = Tensor::from_rows({{2.0}, {-3.0}});
    Tensor l2 = project_logits(p2, Tensor::from({0.5}));
    CHECK(l2[0] == 1.0);
    CHECK(l2[1] == -1.5);

    // one-hot embedding rows
    CellConfig c3 = tiny_lstm();
    c3.embed_dim = 3;
    CellParams p3 = CellParams::zeros(c3);
    for (std::size_t i = 0; i < 3; ++i) p3.W_E(i, i) = 1.0;
    Tensor row = embed(p3, 1);
    CHECK(row[0] == 0.0);
    CHECK(row[1] == 1.0);
    CHECK(row[2] == 0.0);
    CHECK_THROWS_AS(embed(p3, 3), IndexError);
}

TEST_CASE("param_count formulas") {
    CellConfig c;
    c.variant = CellVariant::Lstm;
    c.hidden_dim = 1;
    c.embed_dim = 1;
    c.visual_dim = 1;
    c.vocab_size = 1;
    // 4*(1+1)+4 gate weights and biases, 1 (W_hy), 1 (W_E), 2*(1+1) init MLPs
    CHECK(param_count(c) == 18);

    CellConfig gst = c;
    gst.variant = CellVariant::Gst;
    gst.semantic_dim = 7;
    CHECK(param_count(gst) == 18 + 7 + 1);

    // gst minus its extras equals the lstm count at matched dims
    CHECK(param_count(gst) - (gst.hidden_dim * gst.semantic_dim + gst.hidden_dim * gst.hidden_dim) ==
          param_count(c));
}

TEST_CASE("param_count matches a runtime enumeration") {
    Rng rng(55);
    for (int trial = 0; trial < 30; ++trial) {
        CellConfig c;
        const std::size_t pick = rng.uniform_index(3);
        c.variant = pick == 0 ? CellVariant::Lstm : pick == 1 ? CellVariant::Gst : CellVariant::Gsscn;
        c.hidden_dim = 1 + rng.uniform_index(6);
        c.embed_dim = 1 + rng.uniform_index(6);
        c.visual_dim = 1 + rng.uniform_index(6);
        c.vocab_size = 1 + rng.uniform_index(8);
        c.semantic_dim = c.uses_semantics() ? 1 + rng.uniform_index(7) : 0;
        c.factor_dim = c.variant == CellVariant::Gsscn ? 1 + rng.uniform_index(5) : 0;
        CellParams p = CellParams::zeros(c);
        std::uint64_t counted = 0;
        visit_params(p, [&](const std::string&, const Tensor& t) { counted += t.size(); });
        CHECK(counted == param_count(c));
    }
}

TEST_CASE("gst has fewer parameters than gsscn at the default factor dim") {
    Rng rng(66);
    for (int trial = 0; trial < 50; ++trial) {
        CellConfig gst;
        gst.variant = CellVariant::Gst;
        gst.hidden_dim = 1 + rng.uniform_index(64);
        gst.embed_dim = 1 + rng.uniform_index(64);
        gst.visual_dim = 1 + rng.uniform_index(64);
        gst.vocab_size = 1 + rng.uniform_index(512);
        gst.semantic_dim = 1 + rng.uniform_index(128);
        CellConfig gsscn = gst;
        gsscn.variant = CellVariant::Gsscn;
        gsscn.factor_dim = gsscn.hidden_dim; // default factor dim
        CHECK(param_count(gst) < param_count(gsscn));
    }
}

TEST_CASE("full-scale counts at factor dim = hidden dim") {
    CellConfig base;
    base.hidden_dim = 512;
    base.embed_dim = 300;
    base.semantic_dim = 999;
    base.visual_dim = 2048;
    base.vocab_size = 20000;
    CellConfig lstm = base;
    lstm.variant = CellVariant::Lstm;
    CellConfig gst = base;
    gst.variant = CellVariant::Gst;
    CellConfig gsscn = base;
    gsscn.variant = CellVariant::Gsscn;
    gsscn.factor_dim = 512;
    CHECK(param_count(lstm) == 20003200ULL);
    CHECK(param_count(gst) == 20776832ULL);
    CHECK(param_count(gsscn) == 26192256ULL);
    const double ratio = static_cast<double>(param_count(gst)) / static_cast<double>(param_count(gsscn));
    // about 20% fewer weights
    CHECK(ratio == doctest::Approx(0.7932433158869553).epsilon(1e-12));
}

TEST_CASE("semantic variants demand smoothed features") {
    CellConfig c;
    c.variant = CellVariant::Gst;
    c.hidden_dim = 2;
    c.embed_dim = 1;
    c.semantic_dim = 3;
    c.visual_dim = 2;
    c.vocab_size = 2;
    CellParams p = CellParams::init(c, 1);
    CellState st;
    st.h = Tensor::vector(2);
    st.c = Tensor::vector(2);
    Tensor x = Tensor::from({0.5});
    CHECK_THROWS_AS(cell_step(p, x, st, nullptr), ContractError);
    CHECK_THROWS_AS(gst_step(p, x, st, Tensor::vector(5)), ContractError); // wrong dim
    c.variant = CellVariant::Gsscn;
    c.factor_dim = 2;
    CellParams q = CellParams::init(c, 2);
    CHECK_THROWS_AS(cell_step(q, x, st, nullptr), ContractError);
}

TEST_CASE("config validation") {
    CellConfig c;
    c.variant = CellVariant::Gst;
    c.hidden_dim = 2;
    c.embed_dim = 2;
    c.visual_dim = 2;
    c.vocab_size = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError); // missing semantic dim
    c.semantic_dim = 3;
    CHECK_NOTHROW(c.validate());
    c.variant = CellVariant::Gsscn;
    CHECK_THROWS_AS(c.validate(), ConfigError); // missing factor dim
    c.factor_dim = 2;
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS_AS(variant_from_name("bilstm"), ConfigError);
}
