#pragma once

#include "logtwin/common.hpp"
#include "logtwin/encoder.hpp"

#include <vector>

namespace logtwin {

struct LARSConfig {
    double base_lr = 0.1;
    double trust_coefficient = 1e-3;
    double momentum = 0.9;
    double weight_decay = 1e-6;
    bool exclude_bias_from_adaptation = true;

    void validate() const;
};

struct EMAConfig {
    double momentum = 0.99;

    void validate() const;
};

/// eta(t) = eta0/2 * (1 + cos(pi * t / t_max)); evaluated for every t,
/// so values rise again past t_max like the standard recurrence.
double cosine_lr(int epoch, double eta0, int t_max);

/// Per-tensor momentum buffers, aligned with the tensor view order.
struct LARSState {
    std::vector<Vector> buffers;
};

/// One LARS update over aligned parameter/gradient views. Per tensor:
/// g <- grad + wd*w; local ratio rho = trust*|w|/|g| when both norms are
/// positive, else 1; biases skip adaptation when excluded; buffer <-
/// momentum*buffer + rho*lr*g; w <- w - buffer.
void lars_step(std::vector<TensorView>& params, const std::vector<TensorView>& grads,
               const LARSConfig& cfg, LARSState& state, double global_lr);

/// teacher <- m*teacher + (1-m)*student, every tensor.
void ema_update(std::vector<TensorView>& teacher, const std::vector<TensorView>& student,
                double m);
void ema_update(EncoderParams& teacher, const EncoderParams& student, double m);

}  // namespace logtwin
