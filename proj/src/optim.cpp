#include "logtwin/optim.hpp"

#include <cmath>
#include <string>

namespace logtwin {

void LARSConfig::validate() const {
    if (base_lr <= 0.0) throw ValidationError("optim.base_lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("optim.momentum must be in [0, 1)");
    if (trust_coefficient <= 0.0) throw ValidationError("optim.trust_coefficient must be > 0");
    if (weight_decay < 0.0) throw ValidationError("optim.weight_decay must be >= 0");
}

void EMAConfig::validate() const {
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ValidationError("optim.ema_momentum must be in [0, 1)");
    }
}

double cosine_lr(int epoch, double eta0, int t_max) {
    if (epoch < 0) throw ValidationError("cosine_lr: epoch must be >= 0");
    if (t_max < 1) throw ValidationError("cosine_lr: t_max must be >= 1");
    return 0.5 * eta0 * (1.0 + std::cos(M_PI * static_cast<double>(epoch) /
                                        static_cast<double>(t_max)));
}

void lars_step(std::vector<TensorView>& params, const std::vector<TensorView>& grads,
               const LARSConfig& cfg, LARSState& state, double global_lr) {
    if (params.size() != grads.size()) {
        throw ValidationError("lars_step: parameter/gradient tensor count mismatch");
    }
    if (state.buffers.empty()) {
        state.buffers.resize(params.size());
        for (std::size_t k = 0; k < params.size(); ++k) {
            state.buffers[k] = Vector::Zero(static_cast<Eigen::Index>(params[k].size));
        }
    }
    if (state.buffers.size() != params.size()) {
        throw ValidationError("lars_step: state/parameter tensor count mismatch");
    }

    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size != grads[k].size) {
            throw ValidationError("lars_step: shape mismatch for tensor " + params[k].name);
        }
        const Eigen::Index n = static_cast<Eigen::Index>(params[k].size);
        Eigen::Map<Vector> w(params[k].data, n);
        Eigen::Map<const Vector> dw(grads[k].data, n);

        Vector g = dw + cfg.weight_decay * w;

        double rho = 1.0;
        const bool adapt = !(cfg.exclude_bias_from_adaptation && params[k].is_bias);
        if (adapt) {
            const double w_norm = w.norm();
            const double g_norm = g.norm();
            if (w_norm > 0.0 && g_norm > 0.0) {
                rho = cfg.trust_coefficient * w_norm / g_norm;
            }
        }

        Vector& buf = state.buffers[k];
        buf = cfg.momentum * buf + rho * global_lr * g;
        w -= buf;
    }
}

void ema_update(std::vector<TensorView>& teacher, const std::vector<TensorView>& student,
                double m) {
    if (teacher.size() != student.size()) {
        throw ValidationError("ema_update: tensor count mismatch");
    }
    for (std::size_t k = 0; k < teacher.size(); ++k) {
        if (teacher[k].size != student[k].size) {
            throw ValidationError("ema_update: shape mismatch for tensor " + teacher[k].name);
        }
        const Eigen::Index n = static_cast<Eigen::Index>(teacher[k].size);
        Eigen::Map<Vector> t(teacher[k].data, n);
        Eigen::Map<const Vector> s(student[k].data, n);
        t = m * t + (1.0 - m) * s;
    }
}

void ema_update(EncoderParams& teacher, const EncoderParams& student, double m) {
    std::vector<TensorView> t_views = tensor_views(teacher);
    // Views into the student are read-only here.
    std::vector<TensorView> s_views = tensor_views(const_cast<EncoderParams&>(student));
    // The teacher tracks only tensors it owns (no predictor).
    if (student.predictor && !teacher.predictor) {
        s_views.resize(t_views.size());
    }
    ema_update(t_views, s_views, m);
}

}  // namespace logtwin
