#pragma once

#include "logtwin/augment.hpp"
#include "logtwin/common.hpp"
#include "logtwin/encoder.hpp"
#include "logtwin/ingest.hpp"
#include "logtwin/optim.hpp"

#include <optional>
#include <vector>

namespace logtwin {

struct BTConfig {
    double lambda = 5e-3;
    int batch_size = 2048;
    double eps_std = 1e-9;

    void validate() const;
};

struct BYOLConfig {
    int batch_size = 64;
    EMAConfig ema;

    void validate() const;
};

/// Normalized-MSE loss: mean over rows of |q/|q| - z/|z||^2. z is treated
/// as a constant (teacher output); the gradient flows to q only.
double byol_loss(const Matrix& q, const Matrix& z, Matrix* dq = nullptr);

/// Loss and student-parameter gradients for the symmetric BYOL objective:
/// byol(pred(proj(enc_s(A))), proj(enc_t(B))) + the A/B swap. Teacher
/// outputs are gradient-blocked; teacher gradients are identically zero.
double byol_symmetric_loss(const EncoderParams& student, const EncoderParams& teacher,
                           const std::vector<Matrix>& views_a, const std::vector<Matrix>& views_b,
                           EncoderParams* student_grads = nullptr);

/// Batch-standardizes each column of Za and Zb (population std, guarded by
/// eps_std) and returns C = Za_hat^T Zb_hat / N.
Matrix cross_correlation(const Matrix& za, const Matrix& zb, double eps_std);

/// L_BT = sum_i (1 - C_ii)^2 + lambda * sum_{i != j} C_ij^2.
double barlow_twins_loss(const Matrix& c, double lambda);

/// Same loss evaluated from raw head outputs, with gradients through the
/// standardization and the cross-correlation.
double barlow_twins_loss_grad(const Matrix& za, const Matrix& zb, double lambda, double eps_std,
                              Matrix* dza, Matrix* dzb);

struct TrainConfig {
    Method method = Method::BarlowTwins;
    EncoderDims dims;           // defaults filled from method when hidden == 0
    ViewPairSpec views;         // defaults filled from method
    LARSConfig lars;
    EMAConfig ema;              // BYOL teacher momentum
    BTConfig bt;
    int batch_size = 0;         // 0 = method default (BYOL 64, BT 2048)
    int max_epochs = 100;
    int patience = 10;
    int cosine_t_max = 10;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
    double gradient_scale = 1.0;  // debug knob; negative values invert updates
    int interval_length = 100;

    static TrainConfig defaults(Method method);
    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    EncoderParams params;  // best-validation student
    std::vector<EpochStats> history;
    int best_epoch = 0;
    std::vector<std::string> train_wells;
    std::vector<std::string> val_wells;
};

/// Full training loop: well-level train/val split, per-epoch cosine lr,
/// LARS updates (plus per-step EMA for BYOL), early stopping on the
/// validation loss with the configured patience, best-epoch restore.
TrainResult train(const std::vector<Interval>& dataset, const TrainConfig& cfg);

}  // namespace logtwin
