#pragma once

#include "logtwin/common.hpp"
#include "logtwin/augment.hpp"

#include <optional>
#include <string>
#include <vector>

namespace logtwin {

/// Single-layer unidirectional LSTM. Gate order in the stacked 4H
/// dimension is input, forget, cell, output.
struct LSTMParams {
    Matrix w_x;  // 4H x d
    Matrix w_h;  // 4H x H
    Vector b;    // 4H

    int hidden() const { return static_cast<int>(w_h.cols()); }
    int input() const { return static_cast<int>(w_x.cols()); }

    static LSTMParams zeros(int hidden, int input);
    static LSTMParams init(int hidden, int input, Rng& rng);
};

/// Two affine layers with a ReLU between them.
struct MLPParams {
    Matrix w1;  // hidden x in
    Vector b1;  // hidden
    Matrix w2;  // out x hidden
    Vector b2;  // out

    int in_dim() const { return static_cast<int>(w1.cols()); }
    int out_dim() const { return static_cast<int>(w2.rows()); }

    static MLPParams zeros(int in, int hidden, int out);
    static MLPParams init(int in, int hidden, int out, Rng& rng);
};

/// Trainable state of one branch. The predictor exists only on the BYOL
/// student.
struct EncoderParams {
    LSTMParams lstm;
    MLPParams projector;
    std::optional<MLPParams> predictor;
};

struct EncoderDims {
    int input = 4;
    int hidden = 64;
    int proj_hidden = 2048;
    int proj_out = 2048;
    int pred_hidden = 2048;  // BYOL only
    int pred_out = 256;      // BYOL only

    static EncoderDims defaults(Method method);
};

/// Seeded student parameters; BYOL students carry a predictor.
EncoderParams init_encoder(const EncoderDims& dims, Method method, Rng& rng);

/// Mutable flat view over one parameter tensor, for optimizers and IO.
struct TensorView {
    std::string name;
    double* data;
    std::size_t size;
    bool is_bias;
};

std::vector<TensorView> tensor_views(LSTMParams& p, const std::string& prefix);
std::vector<TensorView> tensor_views(MLPParams& p, const std::string& prefix);
std::vector<TensorView> tensor_views(EncoderParams& p);

// ---- forward / backward -------------------------------------------------

/// Per-step activations cached for backpropagation through time.
/// Every entry is N x H (or N x d for x); index t runs over time steps.
struct LSTMCache {
    std::vector<Matrix> x, i, f, g, o, c, tanh_c, h_prev;
};

/// Converts a batch of l x d intervals into l step matrices of shape N x d.
std::vector<Matrix> to_steps(const std::vector<Matrix>& batch);

/// Runs the recurrence over all steps from zero initial state; returns the
/// final hidden state (N x H). Cache may be null for inference.
Matrix lstm_forward(const LSTMParams& p, const std::vector<Matrix>& steps,
                    LSTMCache* cache = nullptr);

/// Gradients of all LSTM parameters given dLoss/dh_final.
LSTMParams lstm_backward(const LSTMParams& p, const LSTMCache& cache, const Matrix& dh_final);

struct MLPCache {
    Matrix input;  // N x in
    Matrix z1;     // N x hidden, pre-activation
};

Matrix mlp_forward(const MLPParams& p, const Matrix& in, MLPCache* cache = nullptr);
Vector mlp_forward(const MLPParams& p, const Vector& in);

/// Gradients of the head parameters; optionally also dLoss/dinput.
MLPParams mlp_backward(const MLPParams& p, const MLPCache& cache, const Matrix& dout,
                       Matrix* dinput = nullptr);

/// Full branch forward: LSTM -> projector (-> predictor when present and
/// requested). Returns the head output, N x out.
struct ForwardCache {
    LSTMCache lstm;
    MLPCache proj;
    MLPCache pred;
    Matrix h_final;
    bool used_predictor = false;
};

Matrix encoder_forward(const EncoderParams& p, const std::vector<Matrix>& batch,
                       ForwardCache* cache, bool use_predictor);

/// Backward through the same path; gradient container mirrors the
/// parameter container shape-for-shape.
EncoderParams encoder_backward(const EncoderParams& p, const ForwardCache& cache,
                               const Matrix& dout);

EncoderParams zeros_like(const EncoderParams& p);

/// The embedding: final LSTM hidden state, heads not applied.
Vector encode(const EncoderParams& p, const Matrix& interval);
Matrix encode_batch(const EncoderParams& p, const std::vector<Matrix>& batch);

// ---- checkpoint IO -------------------------------------------------------

/// Versioned binary container: magic, version, JSON meta, then every
/// tensor as (name, rows, cols, little-endian f64 data). Round-trips
/// bit-exactly.
void save_checkpoint(const std::string& path, const EncoderParams& params,
                     const std::string& meta_json);
EncoderParams load_checkpoint(const std::string& path, std::string* meta_json = nullptr);

}  // namespace logtwin
