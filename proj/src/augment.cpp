#include "logtwin/augment.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace logtwin {

void AugmentSpec::validate(int interval_length) const {
    if (kind == AugmentKind::Jitter) {
        if (sigma_mode == SigmaMode::Fixed && jitter_sigma < 0.0) {
            throw ValidationError("jitter sigma must be >= 0, got " +
                                  std::to_string(jitter_sigma));
        }
    } else {
        if (window_size < 2 || window_size > interval_length) {
            throw ValidationError("window_size must be in [2, " +
                                  std::to_string(interval_length) + "], got " +
                                  std::to_string(window_size));
        }
    }
}

namespace {

Vector per_feature_std(const Matrix& x) {
    Vector sigma(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        sigma[j] = std::sqrt((x.col(j).array() - mean).square().mean());
    }
    return sigma;
}

}  // namespace

Vector batch_feature_std(const std::vector<Matrix>& batch) {
    if (batch.empty()) throw ValidationError("batch_feature_std: empty batch");
    const Eigen::Index d = batch.front().cols();
    Vector sum = Vector::Zero(d);
    std::size_t n = 0;
    for (const Matrix& x : batch) {
        sum += x.colwise().sum().transpose();
        n += static_cast<std::size_t>(x.rows());
    }
    const Vector mean = sum / static_cast<double>(n);
    Vector sq = Vector::Zero(d);
    for (const Matrix& x : batch) {
        sq += (x.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    }
    return (sq / static_cast<double>(n)).array().sqrt();
}

Matrix jitter(const Matrix& x, const AugmentSpec& spec, Rng& rng, const Vector* batch_sigma) {
    Vector sigma;
    switch (spec.sigma_mode) {
        case SigmaMode::Fixed:
            if (spec.jitter_sigma < 0.0) {
                throw ValidationError("jitter sigma must be >= 0, got " +
                                      std::to_string(spec.jitter_sigma));
            }
            sigma = Vector::Constant(x.cols(), spec.jitter_sigma);
            break;
        case SigmaMode::PerFeatureStd:
            sigma = per_feature_std(x);
            break;
        case SigmaMode::PerBatchStd:
            if (batch_sigma == nullptr) {
                throw ValidationError("jitter: PerBatchStd requires a caller-supplied sigma");
            }
            if (batch_sigma->size() != x.cols()) {
                throw ValidationError("jitter: batch sigma length mismatch");
            }
            sigma = *batch_sigma;
            break;
    }
    Matrix out = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            out(i, j) += sigma[j] * rng.normal();
        }
    }
    return out;
}

Matrix window_slice_at(const Matrix& x, int w, int s) {
    const int l = static_cast<int>(x.rows());
    if (l < 2) throw ValidationError("window_slice: interval must have >= 2 rows");
    if (w < 2 || w > l) {
        throw ValidationError("window_slice: w must be in [2, " + std::to_string(l) + "], got " +
                              std::to_string(w));
    }
    if (s < 0 || s + w > l) {
        throw ValidationError("window_slice: start out of range");
    }
    if (w == l) return x;

    Matrix out(l, x.cols());
    const double scale = static_cast<double>(w - 1) / static_cast<double>(l - 1);
    for (int i = 0; i < l; ++i) {
        const double p = static_cast<double>(s) + static_cast<double>(i) * scale;
        int lo = static_cast<int>(std::floor(p));
        if (lo >= s + w - 1) lo = s + w - 2;  // clamp the final sample onto the last segment
        const double frac = p - static_cast<double>(lo);
        out.row(i) = (1.0 - frac) * x.row(lo) + frac * x.row(lo + 1);
    }
    return out;
}

Matrix window_slice(const Matrix& x, int w, Rng& rng) {
    const int l = static_cast<int>(x.rows());
    if (w < 2 || w > l) {
        throw ValidationError("window_slice: w must be in [2, " + std::to_string(l) + "], got " +
                              std::to_string(w));
    }
    const int s = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(l - w + 1)));
    return window_slice_at(x, w, s);
}

ViewPairSpec ViewPairSpec::defaults(Method method) {
    ViewPairSpec spec;
    if (method == Method::Byol) {
        spec.first.kind = AugmentKind::WindowSlice;
        spec.first.window_size = 85;
        spec.second.kind = AugmentKind::Jitter;
        spec.second.sigma_mode = SigmaMode::PerBatchStd;
    } else {
        spec.first.kind = AugmentKind::WindowSlice;
        spec.first.window_size = 50;
        spec.second = spec.first;
    }
    return spec;
}

namespace {

Matrix apply_augment(const Matrix& x, const AugmentSpec& spec, Rng& rng,
                     const Vector* batch_sigma) {
    if (spec.kind == AugmentKind::Jitter) {
        return jitter(x, spec, rng, batch_sigma);
    }
    return window_slice(x, spec.window_size, rng);
}

}  // namespace

std::pair<Matrix, Matrix> make_view_pair(const Matrix& x, Method method, const ViewPairSpec& spec,
                                         Rng& rng, const Vector* batch_sigma) {
    (void)method;
    Matrix a = apply_augment(x, spec.first, rng, batch_sigma);
    Matrix b = apply_augment(x, spec.second, rng, batch_sigma);
    return {std::move(a), std::move(b)};
}

}  // namespace logtwin
