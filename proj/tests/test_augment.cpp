#include "logtwin/augment.hpp"

#include <doctest.h>

#include <cmath>

using namespace logtwin;

namespace {

Matrix ramp_interval(int l, int d) {
    Matrix x(l, d);
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < d; ++j) {
            x(i, j) = static_cast<double>(i) + 100.0 * static_cast<double>(j);
        }
    }
    return x;
}

}  // namespace

TEST_CASE("jitter: sigma 0 is the identity") {
    AugmentSpec spec;
    spec.kind = AugmentKind::Jitter;
    spec.jitter_sigma = 0.0;
    Rng rng(1);
    const Matrix x = ramp_interval(100, 4);
    CHECK(jitter(x, spec, rng) == x);
}

TEST_CASE("jitter: fixed sigma 0.03 noise std within 2% over 1e5 draws") {
    AugmentSpec spec;
    spec.kind = AugmentKind::Jitter;
    spec.jitter_sigma = 0.03;
    Rng rng(5);
    Matrix cell(1, 1);
    cell.setZero();
    double sq = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const double noise = jitter(cell, spec, rng)(0, 0);
        sq += noise * noise;
    }
    const double std_hat = std::sqrt(sq / n);
    CHECK(std_hat == doctest::Approx(0.03).epsilon(0.02));
}

TEST_CASE("jitter: per-feature std scales the noise per column") {
    // column 0 has std 2.0, column 1 has std 0.5
    const int l = 1000;
    Matrix x(l, 2);
    for (int i = 0; i < l; ++i) {
        x(i, 0) = (i % 2 == 0) ? 2.0 : -2.0;
        x(i, 1) = (i % 2 == 0) ? 0.5 : -0.5;
    }
    AugmentSpec spec;
    spec.kind = AugmentKind::Jitter;
    spec.sigma_mode = SigmaMode::PerFeatureStd;
    Rng rng(9);
    double sq0 = 0.0, sq1 = 0.0;
    const int reps = 120;
    for (int r = 0; r < reps; ++r) {
        const Matrix noisy = jitter(x, spec, rng) - x;
        sq0 += noisy.col(0).squaredNorm();
        sq1 += noisy.col(1).squaredNorm();
    }
    CHECK(std::sqrt(sq0 / (l * reps)) == doctest::Approx(2.0).epsilon(0.02));
    CHECK(std::sqrt(sq1 / (l * reps)) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("jitter: negative sigma is a config error") {
    AugmentSpec spec;
    spec.kind = AugmentKind::Jitter;
    spec.jitter_sigma = -0.1;
    Rng rng(1);
    const Matrix x = ramp_interval(10, 2);
    CHECK_THROWS_AS((void)jitter(x, spec, rng), ValidationError);
    CHECK_THROWS_AS(spec.validate(10), ValidationError);
}

TEST_CASE("jitter: per-batch sigma must be supplied") {
    AugmentSpec spec;
    spec.kind = AugmentKind::Jitter;
    spec.sigma_mode = SigmaMode::PerBatchStd;
    Rng rng(1);
    const Matrix x = ramp_interval(10, 2);
    CHECK_THROWS_AS((void)jitter(x, spec, rng), ValidationError);
    const Vector sigma = Vector::Zero(2);
    CHECK(jitter(x, spec, rng, &sigma) == x);
}

TEST_CASE("window_slice: w = l is the identity") {
    const Matrix x = ramp_interval(100, 4);
    Rng rng(3);
    CHECK(window_slice(x, 100, rng) == x);
}

TEST_CASE("window_slice: constant columns stay constant") {
    Matrix x = Matrix::Constant(50, 3, 7.25);
    for (int w : {2, 13, 25, 49}) {
        for (int s = 0; s + w <= 50; s += 7) {
            const Matrix out = window_slice_at(x, w, s);
            CHECK(out.rows() == 50);
            CHECK((out.array() - 7.25).abs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("window_slice: ramp crop matches the closed-form interpolation oracle") {
    const int l = 100;
    Matrix x(l, 1);
    for (int i = 0; i < l; ++i) x(i, 0) = static_cast<double>(i);
    const Matrix out = window_slice_at(x, 50, 0);
    // crop of [0..49] resampled to 100 points: out[i] = i * 49/99
    for (int i = 0; i < l; ++i) {
        CHECK(out(i, 0) == doctest::Approx(static_cast<double>(i) * 49.0 / 99.0).epsilon(1e-12));
    }
    const Matrix shifted = window_slice_at(x, 50, 25);
    for (int i = 0; i < l; ++i) {
        CHECK(shifted(i, 0) ==
              doctest::Approx(25.0 + static_cast<double>(i) * 49.0 / 99.0).epsilon(1e-12));
    }
}

TEST_CASE("window_slice: output bounded by the sliced rows per column") {
    Rng data_rng(17);
    Matrix x(60, 3);
    for (int i = 0; i < 60; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = data_rng.normal();
    }
    for (int w : {2, 11, 30, 59}) {
        for (int s : {0, (60 - w) / 2, 60 - w}) {
            const Matrix out = window_slice_at(x, w, s);
            for (int j = 0; j < 3; ++j) {
                const double lo = x.col(j).segment(s, w).minCoeff();
                const double hi = x.col(j).segment(s, w).maxCoeff();
                CHECK(out.col(j).minCoeff() >= lo - 1e-12);
                CHECK(out.col(j).maxCoeff() <= hi + 1e-12);
            }
        }
    }
}

TEST_CASE("window_slice: bounds are config errors") {
    const Matrix x = ramp_interval(50, 2);
    Rng rng(1);
    CHECK_THROWS_AS((void)window_slice(x, 1, rng), ValidationError);
    CHECK_THROWS_AS((void)window_slice(x, 51, rng), ValidationError);
}

TEST_CASE("make_view_pair: Barlow Twins with w = l returns the input twice") {
    const Matrix x = ramp_interval(100, 4);
    ViewPairSpec spec = ViewPairSpec::defaults(Method::BarlowTwins);
    spec.first.window_size = 100;
    spec.second.window_size = 100;
    Rng rng(2);
    const auto [a, b] = make_view_pair(x, Method::BarlowTwins, spec, rng);
    CHECK(a == x);
    CHECK(b == x);
}

TEST_CASE("make_view_pair: fixed seed fixes both views bit-exactly") {
    const Matrix x = ramp_interval(100, 4);
    const ViewPairSpec spec = ViewPairSpec::defaults(Method::BarlowTwins);
    Rng rng1(77);
    Rng rng2(77);
    const auto [a1, b1] = make_view_pair(x, Method::BarlowTwins, spec, rng1);
    const auto [a2, b2] = make_view_pair(x, Method::BarlowTwins, spec, rng2);
    CHECK(a1 == a2);
    CHECK(b1 == b2);
}

TEST_CASE("make_view_pair: BYOL defaults pair an 85-slice with batch-std jitter") {
    const ViewPairSpec spec = ViewPairSpec::defaults(Method::Byol);
    CHECK(spec.first.kind == AugmentKind::WindowSlice);
    CHECK(spec.first.window_size == 85);
    CHECK(spec.second.kind == AugmentKind::Jitter);
    CHECK(spec.second.sigma_mode == SigmaMode::PerBatchStd);

    const Matrix x = ramp_interval(100, 4);
    Rng rng(4);
    const Vector sigma = Vector::Constant(4, 0.5);
    const auto [a, b] = make_view_pair(x, Method::Byol, spec, rng, &sigma);
    CHECK(a.rows() == 100);
    CHECK(b.rows() == 100);
    // the jitter view deviates from x with noise scale ~0.5 per cell
    const double rms = std::sqrt((b - x).array().square().mean());
    CHECK(rms == doctest::Approx(0.5).epsilon(0.15));
    // slice view of a ramp starts where the crop starts
    CHECK(a(0, 0) >= 0.0);
    CHECK(a(0, 0) <= 15.0);
}

TEST_CASE("augment: shape preserved for every kind") {
    const Matrix x = ramp_interval(100, 4);
    Rng rng(6);
    AugmentSpec slice;
    slice.kind = AugmentKind::WindowSlice;
    for (int w = 25; w <= 90; w += 5) {
        slice.window_size = w;
        slice.validate(100);
        const Matrix out = window_slice(x, w, rng);
        CHECK(out.rows() == 100);
        CHECK(out.cols() == 4);
    }
    const Vector sigma = batch_feature_std({x});
    CHECK(sigma.size() == 4);
}
