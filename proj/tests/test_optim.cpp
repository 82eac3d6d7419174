#include "logtwin/optim.hpp"

#include <doctest.h>

#include <cmath>

using namespace logtwin;

namespace {

TensorView view_of(Vector& v, const std::string& name, bool bias) {
    return {name, v.data(), static_cast<std::size_t>(v.size()), bias};
}

}  // namespace

TEST_CASE("cosine_lr: schedule spot values") {
    CHECK(cosine_lr(0, 0.1, 10) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(cosine_lr(5, 0.1, 10) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(cosine_lr(10, 0.1, 10) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    // the formula keeps being evaluated past t_max and rises again
    CHECK(cosine_lr(20, 0.1, 10) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS((void)cosine_lr(-1, 0.1, 10), ValidationError);
    CHECK_THROWS_AS((void)cosine_lr(0, 0.1, 0), ValidationError);
}

TEST_CASE("lars_step: zero gradient with zero decay leaves parameters unchanged") {
    Vector w(3);
    w << 1.0, -2.0, 3.0;
    Vector g = Vector::Zero(3);
    const Vector w_before = w;
    std::vector<TensorView> params = {view_of(w, "w", false)};
    const std::vector<TensorView> grads = {view_of(g, "w", false)};
    LARSConfig cfg;
    cfg.weight_decay = 0.0;
    LARSState state;
    lars_step(params, grads, cfg, state, 0.1);
    CHECK(w == w_before);
}

TEST_CASE("lars_step: unit norms give an update of magnitude trust * lr") {
    Vector w(1);
    w << 1.0;
    Vector g(1);
    g << 1.0;
    std::vector<TensorView> params = {view_of(w, "w", false)};
    const std::vector<TensorView> grads = {view_of(g, "w", false)};
    LARSConfig cfg;
    cfg.trust_coefficient = 1e-3;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    LARSState state;
    lars_step(params, grads, cfg, state, 0.1);
    CHECK(std::abs(1.0 - w[0]) == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("lars_step: excluded bias takes a plain momentum-SGD step") {
    Rng rng(1);
    Vector b(8), g(8);
    for (int i = 0; i < 8; ++i) {
        b[i] = rng.normal();
        g[i] = rng.normal();
    }
    Vector b_oracle = b;
    Vector buf_oracle = Vector::Zero(8);

    std::vector<TensorView> params = {view_of(b, "b", true)};
    Vector g_copy = g;
    const std::vector<TensorView> grads = {view_of(g_copy, "b", true)};
    LARSConfig cfg;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    LARSState state;

    for (int step = 0; step < 5; ++step) {
        lars_step(params, grads, cfg, state, 0.05);
        // independent momentum-SGD oracle
        buf_oracle = 0.9 * buf_oracle + 0.05 * g;
        b_oracle -= buf_oracle;
        CHECK((b - b_oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("lars_step: exclusion forced on all tensors reduces to momentum-SGD") {
    Rng rng(2);
    Vector w(16), g(16);
    for (int i = 0; i < 16; ++i) {
        w[i] = rng.normal();
        g[i] = 0.1 * rng.normal();
    }
    Vector w_sgd = w;
    Vector buf = Vector::Zero(16);

    std::vector<TensorView> params = {view_of(w, "w", true)};  // marked bias -> excluded
    LARSConfig cfg;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    cfg.exclude_bias_from_adaptation = true;
    LARSState state;
    for (int step = 0; step < 10; ++step) {
        Vector g_step = g * (1.0 + 0.1 * step);
        std::vector<TensorView> grads = {view_of(g_step, "w", true)};
        lars_step(params, grads, cfg, state, 0.02);
        buf = 0.9 * buf + 0.02 * g_step;
        w_sgd -= buf;
        CHECK((w - w_sgd).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("lars_step: weight decay feeds the adapted gradient") {
    Vector w(2);
    w << 3.0, 4.0;  // norm 5
    Vector g = Vector::Zero(2);
    std::vector<TensorView> params = {view_of(w, "w", false)};
    const std::vector<TensorView> grads = {view_of(g, "w", false)};
    LARSConfig cfg;
    cfg.trust_coefficient = 1.0;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.1;
    LARSState state;
    lars_step(params, grads, cfg, state, 1.0);
    // g_eff = 0.1*w, rho = |w|/|g_eff| = 10, update = rho*lr*g_eff = w
    CHECK(w.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lars_step: shape mismatch is an error") {
    Vector w(3), g(2);
    w.setOnes();
    g.setOnes();
    std::vector<TensorView> params = {view_of(w, "w", false)};
    const std::vector<TensorView> grads = {view_of(g, "w", false)};
    LARSConfig cfg;
    LARSState state;
    CHECK_THROWS_AS(lars_step(params, grads, cfg, state, 0.1), ValidationError);
}

TEST_CASE("ema_update: single step, copy at m=0, fixed point") {
    Vector teacher(1), student(1);
    teacher << 0.0;
    student << 1.0;
    std::vector<TensorView> t = {view_of(teacher, "t", false)};
    const std::vector<TensorView> s = {view_of(student, "t", false)};
    ema_update(t, s, 0.99);
    CHECK(teacher[0] == doctest::Approx(0.01).epsilon(1e-15));

    teacher << 0.37;
    ema_update(t, s, 0.0);
    CHECK(teacher[0] == 1.0);

    teacher << 1.0;
    ema_update(t, s, 0.73);
    CHECK(teacher[0] == 1.0);
}

TEST_CASE("ema_update: exact contraction toward the student") {
    Rng rng(3);
    Vector teacher(32), student(32);
    for (int i = 0; i < 32; ++i) {
        teacher[i] = rng.normal();
        student[i] = rng.normal();
    }
    const double before = (teacher - student).norm();
    std::vector<TensorView> t = {view_of(teacher, "t", false)};
    const std::vector<TensorView> s = {view_of(student, "t", false)};
    const double m = 0.99;
    ema_update(t, s, m);
    const double after = (teacher - student).norm();
    CHECK(after == doctest::Approx(m * before).epsilon(1e-12));
}

TEST_CASE("config validation ranges") {
    LARSConfig lars;
    lars.base_lr = 0.0;
    CHECK_THROWS_AS(lars.validate(), ValidationError);
    EMAConfig ema;
    ema.momentum = 1.0;
    CHECK_THROWS_AS(ema.validate(), ValidationError);
}
