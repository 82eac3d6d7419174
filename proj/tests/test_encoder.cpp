#include "logtwin/encoder.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <vector>

using namespace logtwin;

namespace {

Matrix random_interval(int l, int d, Rng& rng) {
    Matrix x(l, d);
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    }
    return x;
}

/// Step-by-step scalar recurrence, no matrix algebra shared with the
/// implementation.
std::vector<double> scalar_lstm_oracle(const LSTMParams& p, const Matrix& x) {
    const int H = p.hidden();
    const int d = p.input();
    std::vector<double> h(static_cast<std::size_t>(H), 0.0);
    std::vector<double> c(static_cast<std::size_t>(H), 0.0);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        std::vector<double> h_new(static_cast<std::size_t>(H));
        std::vector<double> c_new(static_cast<std::size_t>(H));
        for (int u = 0; u < H; ++u) {
            double ai = p.b[u], af = p.b[H + u], ag = p.b[2 * H + u], ao = p.b[3 * H + u];
            for (int j = 0; j < d; ++j) {
                ai += p.w_x(u, j) * x(t, j);
                af += p.w_x(H + u, j) * x(t, j);
                ag += p.w_x(2 * H + u, j) * x(t, j);
                ao += p.w_x(3 * H + u, j) * x(t, j);
            }
            for (int k = 0; k < H; ++k) {
                ai += p.w_h(u, k) * h[static_cast<std::size_t>(k)];
                af += p.w_h(H + u, k) * h[static_cast<std::size_t>(k)];
                ag += p.w_h(2 * H + u, k) * h[static_cast<std::size_t>(k)];
                ao += p.w_h(3 * H + u, k) * h[static_cast<std::size_t>(k)];
            }
            const double gi = sig(ai), gf = sig(af), gg = std::tanh(ag), go = sig(ao);
            c_new[static_cast<std::size_t>(u)] = gf * c[static_cast<std::size_t>(u)] + gi * gg;
            h_new[static_cast<std::size_t>(u)] =
                go * std::tanh(c_new[static_cast<std::size_t>(u)]);
        }
        h = std::move(h_new);
        c = std::move(c_new);
    }
    return h;
}

double max_rel_error(const double* analytic, const double* numeric, std::size_t n) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("lstm_forward: zero parameters give a zero final state") {
    const LSTMParams p = LSTMParams::zeros(5, 3);
    Rng rng(1);
    const Matrix x = random_interval(12, 3, rng);
    const Matrix h = lstm_forward(p, to_steps({x}));
    CHECK(h.rows() == 1);
    CHECK(h.cols() == 5);
    CHECK(h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lstm_forward: hidden size 64 yields a 64-vector") {
    Rng rng(2);
    const LSTMParams p = LSTMParams::init(64, 4, rng);
    const Matrix x = random_interval(20, 4, rng);
    EncoderParams enc;
    enc.lstm = p;
    enc.projector = MLPParams::zeros(64, 8, 8);
    CHECK(encode(enc, x).size() == 64);
}

TEST_CASE("lstm_forward: tiny model matches the scalar recurrence oracle to 1e-12") {
    Rng rng(3);
    const LSTMParams p = LSTMParams::init(3, 2, rng);
    const Matrix x = random_interval(4, 2, rng);
    const Matrix h = lstm_forward(p, to_steps({x}));
    const std::vector<double> expected = scalar_lstm_oracle(p, x);
    for (int u = 0; u < 3; ++u) {
        CHECK(h(0, u) == doctest::Approx(expected[static_cast<std::size_t>(u)]).epsilon(1e-12));
    }
}

TEST_CASE("lstm_forward: non-finite input raises a numeric error") {
    Rng rng(4);
    const LSTMParams p = LSTMParams::init(3, 2, rng);
    Matrix x = random_interval(4, 2, rng);
    x(2, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS((void)lstm_forward(p, to_steps({x})), NumericError);
}

TEST_CASE("lstm_forward: activations finite for |x| <= 10") {
    Rng rng(5);
    const LSTMParams p = LSTMParams::init(8, 4, rng);
    Matrix x = random_interval(30, 4, rng);
    x = (10.0 * x.array().tanh()).matrix();  // push toward the +-10 envelope
    x(0, 0) = 10.0;
    x(1, 1) = -10.0;
    const Matrix h = lstm_forward(p, to_steps({x, x, x}));
    CHECK(h.allFinite());
}

TEST_CASE("mlp_forward: zero head maps everything to zero") {
    const MLPParams p = MLPParams::zeros(4, 6, 3);
    const Vector v = Vector::Constant(4, 2.5);
    CHECK(mlp_forward(p, v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp_forward: 1x1x1 pass-through for positive input") {
    MLPParams p = MLPParams::zeros(1, 1, 1);
    p.w1(0, 0) = 1.0;
    p.w2(0, 0) = 1.0;
    Vector v(1);
    v[0] = 2.0;
    CHECK(mlp_forward(p, v)[0] == doctest::Approx(2.0));
}

TEST_CASE("mlp_forward: BYOL head maps a 64-vector to 256") {
    Rng rng(6);
    const EncoderDims dims = EncoderDims::defaults(Method::Byol);
    CHECK(dims.proj_hidden == 4096);
    CHECK(dims.proj_out == 256);
    const MLPParams p = MLPParams::init(64, dims.proj_hidden, dims.proj_out, rng);
    Rng data_rng(7);
    Vector v(64);
    for (int i = 0; i < 64; ++i) v[i] = data_rng.normal();
    CHECK(mlp_forward(p, v).size() == 256);
}

TEST_CASE("mlp_forward: shape mismatch is an error") {
    const MLPParams p = MLPParams::zeros(4, 6, 3);
    const Matrix bad = Matrix::Zero(2, 5);
    CHECK_THROWS_AS((void)mlp_forward(p, bad, nullptr), ValidationError);
}

TEST_CASE("backward: zero upstream gradient gives zero parameter gradients") {
    Rng rng(8);
    EncoderParams p = init_encoder({2, 4, 6, 5, 6, 5}, Method::Byol, rng);
    std::vector<Matrix> batch = {random_interval(7, 2, rng), random_interval(7, 2, rng)};
    ForwardCache cache;
    const Matrix out = encoder_forward(p, batch, &cache, true);
    const EncoderParams grads = encoder_backward(p, cache, Matrix::Zero(out.rows(), out.cols()));
    EncoderParams mutable_grads = grads;
    for (const TensorView& v : tensor_views(mutable_grads)) {
        CHECK(Eigen::Map<const Vector>(v.data, static_cast<Eigen::Index>(v.size))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
}

TEST_CASE("backward: analytic gradients match central differences on a tiny model") {
    // loss = sum of head outputs over a 2-item batch
    Rng rng(9);
    const EncoderDims dims{2, 3, 5, 4, 5, 4};
    EncoderParams p = init_encoder(dims, Method::Byol, rng);
    std::vector<Matrix> batch = {random_interval(6, 2, rng), random_interval(6, 2, rng)};

    ForwardCache cache;
    const Matrix out = encoder_forward(p, batch, &cache, true);
    const Matrix dout = Matrix::Ones(out.rows(), out.cols());
    EncoderParams analytic = encoder_backward(p, cache, dout);

    auto loss_at = [&]() {
        return encoder_forward(p, batch, nullptr, true).sum();
    };

    const double step = 1e-5;
    std::vector<TensorView> param_views = tensor_views(p);
    std::vector<TensorView> grad_views = tensor_views(analytic);
    for (std::size_t k = 0; k < param_views.size(); ++k) {
        std::vector<double> numeric(param_views[k].size);
        for (std::size_t i = 0; i < param_views[k].size; ++i) {
            const double saved = param_views[k].data[i];
            param_views[k].data[i] = saved + step;
            const double up = loss_at();
            param_views[k].data[i] = saved - step;
            const double down = loss_at();
            param_views[k].data[i] = saved;
            numeric[i] = (up - down) / (2.0 * step);
        }
        const double err = max_rel_error(grad_views[k].data, numeric.data(),
                                         param_views[k].size);
        INFO("tensor ", param_views[k].name);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("encode: deterministic pure function, zero params give zero output") {
    Rng rng(10);
    EncoderParams p = init_encoder({4, 8, 6, 6, 6, 6}, Method::BarlowTwins, rng);
    const Matrix x = random_interval(15, 4, rng);
    CHECK(encode(p, x) == encode(p, x));

    EncoderParams zeros = zeros_like(p);
    CHECK(encode(zeros, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoint: bit-exact round trip with and without predictor") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "logtwin_ckpt_test";
    fs::create_directories(dir);

    for (Method method : {Method::Byol, Method::BarlowTwins}) {
        Rng rng(method == Method::Byol ? 11u : 12u);
        EncoderParams p = init_encoder({4, 6, 8, 7, 8, 5}, method, rng);
        const std::string path = (dir / "test.ckpt").string();
        save_checkpoint(path, p, "{\"purpose\":\"test\"}");

        std::string meta;
        EncoderParams loaded = load_checkpoint(path, &meta);
        CHECK(meta == "{\"purpose\":\"test\"}");
        CHECK(loaded.lstm.w_x == p.lstm.w_x);
        CHECK(loaded.lstm.w_h == p.lstm.w_h);
        CHECK(loaded.lstm.b == p.lstm.b);
        CHECK(loaded.projector.w1 == p.projector.w1);
        CHECK(loaded.projector.b2 == p.projector.b2);
        CHECK(loaded.predictor.has_value() == p.predictor.has_value());
        if (p.predictor) {
            CHECK(loaded.predictor->w1 == p.predictor->w1);
            CHECK(loaded.predictor->w2 == p.predictor->w2);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("checkpoint: loading a non-checkpoint fails cleanly") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "logtwin_not_a_ckpt.bin";
    {
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        std::fputs("garbage", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS((void)load_checkpoint(path.string()), ValidationError);
    fs::remove(path);
}
