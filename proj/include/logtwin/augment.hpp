#pragma once

#include "logtwin/common.hpp"

#include <utility>
#include <vector>

namespace logtwin {

enum class Method { Byol, BarlowTwins };

enum class AugmentKind { Jitter, WindowSlice };

/// How the jitter noise scale is chosen.
enum class SigmaMode {
    Fixed,          // sigma = jitter_sigma (default 0.03)
    PerFeatureStd,  // sigma_j = std of column j of the interval
    PerBatchStd,    // sigma_j = std of column j over the whole batch
};

struct AugmentSpec {
    AugmentKind kind = AugmentKind::WindowSlice;
    SigmaMode sigma_mode = SigmaMode::Fixed;
    double jitter_sigma = 0.03;
    int window_size = 50;

    void validate(int interval_length) const;
};

/// Adds independent Gaussian noise per cell. For PerBatchStd the caller
/// supplies the per-feature batch std in `batch_sigma`.
Matrix jitter(const Matrix& x, const AugmentSpec& spec, Rng& rng,
              const Vector* batch_sigma = nullptr);

/// Random crop of w consecutive rows, linearly resampled back to l rows.
Matrix window_slice(const Matrix& x, int w, Rng& rng);

/// Deterministic core of window_slice: crop starts at row s.
Matrix window_slice_at(const Matrix& x, int w, int s);

/// Augmentation pair per method. BYOL pairs one slice view with one
/// batch-std jitter view; Barlow Twins draws two independent slices.
struct ViewPairSpec {
    AugmentSpec first;
    AugmentSpec second;

    static ViewPairSpec defaults(Method method);
};

std::pair<Matrix, Matrix> make_view_pair(const Matrix& x, Method method,
                                         const ViewPairSpec& spec, Rng& rng,
                                         const Vector* batch_sigma = nullptr);

/// Per-feature population std over a batch of intervals, the sigma source
/// for PerBatchStd jitter.
Vector batch_feature_std(const std::vector<Matrix>& batch);

}  // namespace logtwin
