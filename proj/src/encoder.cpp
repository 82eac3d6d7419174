#include "logtwin/encoder.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace logtwin {

namespace {

double uniform_pm(Rng& rng, double bound) { return (2.0 * rng.uniform() - 1.0) * bound; }

void fill_uniform(Matrix& m, Rng& rng, double bound) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            m(i, j) = uniform_pm(rng, bound);
        }
    }
}

void fill_uniform(Vector& v, Rng& rng, double bound) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform_pm(rng, bound);
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

LSTMParams LSTMParams::zeros(int hidden, int input) {
    LSTMParams p;
    p.w_x = Matrix::Zero(4 * hidden, input);
    p.w_h = Matrix::Zero(4 * hidden, hidden);
    p.b = Vector::Zero(4 * hidden);
    return p;
}

LSTMParams LSTMParams::init(int hidden, int input, Rng& rng) {
    LSTMParams p = zeros(hidden, input);
    fill_uniform(p.w_x, rng, 1.0 / std::sqrt(static_cast<double>(input)));
    fill_uniform(p.w_h, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
    fill_uniform(p.b, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
    return p;
}

MLPParams MLPParams::zeros(int in, int hidden, int out) {
    MLPParams p;
    p.w1 = Matrix::Zero(hidden, in);
    p.b1 = Vector::Zero(hidden);
    p.w2 = Matrix::Zero(out, hidden);
    p.b2 = Vector::Zero(out);
    return p;
}

MLPParams MLPParams::init(int in, int hidden, int out, Rng& rng) {
    MLPParams p = zeros(in, hidden, out);
    fill_uniform(p.w1, rng, 1.0 / std::sqrt(static_cast<double>(in)));
    fill_uniform(p.b1, rng, 1.0 / std::sqrt(static_cast<double>(in)));
    fill_uniform(p.w2, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
    fill_uniform(p.b2, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
    return p;
}

EncoderDims EncoderDims::defaults(Method method) {
    EncoderDims dims;
    if (method == Method::Byol) {
        dims.proj_hidden = 4096;
        dims.proj_out = 256;
        dims.pred_hidden = 4096;
        dims.pred_out = 256;
    } else {
        dims.proj_hidden = 2048;
        dims.proj_out = 2048;
    }
    return dims;
}

EncoderParams init_encoder(const EncoderDims& dims, Method method, Rng& rng) {
    EncoderParams p;
    p.lstm = LSTMParams::init(dims.hidden, dims.input, rng);
    p.projector = MLPParams::init(dims.hidden, dims.proj_hidden, dims.proj_out, rng);
    if (method == Method::Byol) {
        p.predictor = MLPParams::init(dims.proj_out, dims.pred_hidden, dims.pred_out, rng);
    }
    return p;
}

std::vector<TensorView> tensor_views(LSTMParams& p, const std::string& prefix) {
    return {
        {prefix + ".w_x", p.w_x.data(), static_cast<std::size_t>(p.w_x.size()), false},
        {prefix + ".w_h", p.w_h.data(), static_cast<std::size_t>(p.w_h.size()), false},
        {prefix + ".b", p.b.data(), static_cast<std::size_t>(p.b.size()), true},
    };
}

std::vector<TensorView> tensor_views(MLPParams& p, const std::string& prefix) {
    return {
        {prefix + ".w1", p.w1.data(), static_cast<std::size_t>(p.w1.size()), false},
        {prefix + ".b1", p.b1.data(), static_cast<std::size_t>(p.b1.size()), true},
        {prefix + ".w2", p.w2.data(), static_cast<std::size_t>(p.w2.size()), false},
        {prefix + ".b2", p.b2.data(), static_cast<std::size_t>(p.b2.size()), true},
    };
}

std::vector<TensorView> tensor_views(EncoderParams& p) {
    std::vector<TensorView> views = tensor_views(p.lstm, "lstm");
    for (TensorView& v : tensor_views(p.projector, "projector")) views.push_back(v);
    if (p.predictor) {
        for (TensorView& v : tensor_views(*p.predictor, "predictor")) views.push_back(v);
    }
    return views;
}

std::vector<Matrix> to_steps(const std::vector<Matrix>& batch) {
    if (batch.empty()) throw ValidationError("to_steps: empty batch");
    const Eigen::Index l = batch.front().rows();
    const Eigen::Index d = batch.front().cols();
    for (const Matrix& x : batch) {
        if (x.rows() != l || x.cols() != d) {
            throw ValidationError("to_steps: ragged batch shapes");
        }
    }
    const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
    std::vector<Matrix> steps(static_cast<std::size_t>(l));
    for (Eigen::Index t = 0; t < l; ++t) {
        Matrix step(n, d);
        for (Eigen::Index b = 0; b < n; ++b) {
            step.row(b) = batch[static_cast<std::size_t>(b)].row(t);
        }
        steps[static_cast<std::size_t>(t)] = std::move(step);
    }
    return steps;
}

Matrix lstm_forward(const LSTMParams& p, const std::vector<Matrix>& steps, LSTMCache* cache) {
    if (steps.empty()) throw ValidationError("lstm_forward: no time steps");
    const int H = p.hidden();
    const Eigen::Index n = steps.front().rows();
    if (steps.front().cols() != p.input()) {
        throw ValidationError("lstm_forward: input width does not match w_x");
    }

    Matrix h = Matrix::Zero(n, H);
    Matrix c = Matrix::Zero(n, H);
    if (cache) {
        const std::size_t l = steps.size();
        cache->x.resize(l);
        cache->i.resize(l);
        cache->f.resize(l);
        cache->g.resize(l);
        cache->o.resize(l);
        cache->c.resize(l);
        cache->tanh_c.resize(l);
        cache->h_prev.resize(l);
    }

    for (std::size_t t = 0; t < steps.size(); ++t) {
        const Matrix& x = steps[t];
        if (!x.allFinite()) {
            throw NumericError("lstm_forward: non-finite input at step " + std::to_string(t));
        }
        // a: N x 4H pre-activations, gate blocks [i f g o]
        Matrix a = x * p.w_x.transpose() + h * p.w_h.transpose();
        a.rowwise() += p.b.transpose();

        Matrix gi(n, H), gf(n, H), gg(n, H), go(n, H);
        for (Eigen::Index col = 0; col < H; ++col) {
            for (Eigen::Index row = 0; row < n; ++row) {
                gi(row, col) = sigmoid(a(row, col));
                gf(row, col) = sigmoid(a(row, H + col));
                gg(row, col) = std::tanh(a(row, 2 * H + col));
                go(row, col) = sigmoid(a(row, 3 * H + col));
            }
        }
        Matrix c_new = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
        Matrix tanh_c = c_new.array().tanh().matrix();
        Matrix h_new = go.cwiseProduct(tanh_c);

        if (cache) {
            cache->x[t] = x;
            cache->i[t] = gi;
            cache->f[t] = gf;
            cache->g[t] = gg;
            cache->o[t] = go;
            cache->c[t] = c_new;
            cache->tanh_c[t] = tanh_c;
            cache->h_prev[t] = h;
        }
        c = std::move(c_new);
        h = std::move(h_new);
    }
    return h;
}

LSTMParams lstm_backward(const LSTMParams& p, const LSTMCache& cache, const Matrix& dh_final) {
    const int H = p.hidden();
    const std::size_t l = cache.x.size();
    if (l == 0) throw ValidationError("lstm_backward: empty cache");
    if (dh_final.rows() != cache.x.front().rows() || dh_final.cols() != H) {
        throw ValidationError("lstm_backward: upstream gradient shape mismatch");
    }
    const Eigen::Index n = dh_final.rows();

    LSTMParams grads = LSTMParams::zeros(H, p.input());
    Matrix dh = dh_final;
    Matrix dc = Matrix::Zero(n, H);
    Matrix da(n, 4 * H);

    for (std::size_t t = l; t-- > 0;) {
        const Matrix& gi = cache.i[t];
        const Matrix& gf = cache.f[t];
        const Matrix& gg = cache.g[t];
        const Matrix& go = cache.o[t];
        const Matrix& tanh_c = cache.tanh_c[t];
        Matrix c_prev = Matrix::Zero(n, H);
        if (t > 0) c_prev = cache.c[t - 1];

        Matrix d_o = dh.cwiseProduct(tanh_c);
        dc += dh.cwiseProduct(go).cwiseProduct(
            (1.0 - tanh_c.array().square()).matrix());

        Matrix d_i = dc.cwiseProduct(gg);
        Matrix d_f = dc.cwiseProduct(c_prev);
        Matrix d_g = dc.cwiseProduct(gi);

        da.block(0, 0, n, H) = d_i.cwiseProduct(gi).cwiseProduct((1.0 - gi.array()).matrix());
        da.block(0, H, n, H) = d_f.cwiseProduct(gf).cwiseProduct((1.0 - gf.array()).matrix());
        da.block(0, 2 * H, n, H) = d_g.cwiseProduct((1.0 - gg.array().square()).matrix());
        da.block(0, 3 * H, n, H) = d_o.cwiseProduct(go).cwiseProduct((1.0 - go.array()).matrix());

        grads.w_x.noalias() += da.transpose() * cache.x[t];
        grads.w_h.noalias() += da.transpose() * cache.h_prev[t];
        grads.b += da.colwise().sum().transpose();

        dh.noalias() = da * p.w_h;
        dc = dc.cwiseProduct(gf);
    }
    return grads;
}

Matrix mlp_forward(const MLPParams& p, const Matrix& in, MLPCache* cache) {
    if (in.cols() != p.in_dim()) {
        throw ValidationError("mlp_forward: input width " + std::to_string(in.cols()) +
                              " does not match head in-dim " + std::to_string(p.in_dim()));
    }
    Matrix z1 = in * p.w1.transpose();
    z1.rowwise() += p.b1.transpose();
    Matrix a1 = z1.cwiseMax(0.0);
    Matrix out = a1 * p.w2.transpose();
    out.rowwise() += p.b2.transpose();
    if (cache) {
        cache->input = in;
        cache->z1 = std::move(z1);
    }
    return out;
}

Vector mlp_forward(const MLPParams& p, const Vector& in) {
    Matrix row = in.transpose();
    return mlp_forward(p, row, nullptr).row(0).transpose();
}

MLPParams mlp_backward(const MLPParams& p, const MLPCache& cache, const Matrix& dout,
                       Matrix* dinput) {
    if (dout.rows() != cache.input.rows() || dout.cols() != p.out_dim()) {
        throw ValidationError("mlp_backward: upstream gradient shape mismatch");
    }
    MLPParams grads = MLPParams::zeros(p.in_dim(), static_cast<int>(p.w1.rows()), p.out_dim());
    const Matrix a1 = cache.z1.cwiseMax(0.0);
    grads.w2.noalias() = dout.transpose() * a1;
    grads.b2 = dout.colwise().sum().transpose();
    Matrix da1 = dout * p.w2;
    Matrix dz1 = (cache.z1.array() > 0.0).select(da1.array(), 0.0).matrix();
    grads.w1.noalias() = dz1.transpose() * cache.input;
    grads.b1 = dz1.colwise().sum().transpose();
    if (dinput) {
        *dinput = dz1 * p.w1;
    }
    return grads;
}

Matrix encoder_forward(const EncoderParams& p, const std::vector<Matrix>& batch,
                       ForwardCache* cache, bool use_predictor) {
    if (use_predictor && !p.predictor) {
        throw ValidationError("encoder_forward: predictor requested but absent");
    }
    const std::vector<Matrix> steps = to_steps(batch);
    Matrix h = lstm_forward(p.lstm, steps, cache ? &cache->lstm : nullptr);
    if (cache) cache->h_final = h;
    Matrix z = mlp_forward(p.projector, h, cache ? &cache->proj : nullptr);
    if (!use_predictor) {
        if (cache) cache->used_predictor = false;
        return z;
    }
    if (cache) cache->used_predictor = true;
    return mlp_forward(*p.predictor, z, cache ? &cache->pred : nullptr);
}

EncoderParams zeros_like(const EncoderParams& p) {
    EncoderParams z;
    z.lstm = LSTMParams::zeros(p.lstm.hidden(), p.lstm.input());
    z.projector = MLPParams::zeros(p.projector.in_dim(),
                                   static_cast<int>(p.projector.w1.rows()), p.projector.out_dim());
    if (p.predictor) {
        z.predictor = MLPParams::zeros(p.predictor->in_dim(),
                                       static_cast<int>(p.predictor->w1.rows()),
                                       p.predictor->out_dim());
    }
    return z;
}

EncoderParams encoder_backward(const EncoderParams& p, const ForwardCache& cache,
                               const Matrix& dout) {
    EncoderParams grads = zeros_like(p);
    Matrix dz;
    if (cache.used_predictor) {
        if (!p.predictor) throw ValidationError("encoder_backward: cache/parameter mismatch");
        *grads.predictor = mlp_backward(*p.predictor, cache.pred, dout, &dz);
    } else {
        dz = dout;
    }
    Matrix dh;
    grads.projector = mlp_backward(p.projector, cache.proj, dz, &dh);
    grads.lstm = lstm_backward(p.lstm, cache.lstm, dh);
    return grads;
}

Vector encode(const EncoderParams& p, const Matrix& interval) {
    std::vector<Matrix> batch{interval};
    return lstm_forward(p.lstm, to_steps(batch), nullptr).row(0).transpose();
}

Matrix encode_batch(const EncoderParams& p, const std::vector<Matrix>& batch) {
    return lstm_forward(p.lstm, to_steps(batch), nullptr);
}

// ---- checkpoint IO -------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'L', 'T', 'W', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<std::uint64_t>(m.rows()));
    write_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index idx = 0; idx < m.size(); ++idx) {
        std::uint64_t bits;
        const double v = m.data()[idx];  // column-major storage order
        std::memcpy(&bits, &v, 8);
        write_u64(out, bits);
    }
}

Matrix read_tensor(std::istream& in, std::string* name) {
    const std::uint32_t name_len = read_u32(in);
    name->resize(name_len);
    in.read(name->data(), name_len);
    const std::uint64_t rows = read_u64(in);
    const std::uint64_t cols = read_u64(in);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index idx = 0; idx < m.size(); ++idx) {
        const std::uint64_t bits = read_u64(in);
        double v;
        std::memcpy(&v, &bits, 8);
        m.data()[idx] = v;
    }
    if (!in) throw ValidationError("checkpoint: truncated tensor " + *name);
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderParams& params,
                     const std::string& meta_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(meta_json.size()));
    out.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));

    std::vector<std::pair<std::string, Matrix>> tensors;
    tensors.emplace_back("lstm.w_x", params.lstm.w_x);
    tensors.emplace_back("lstm.w_h", params.lstm.w_h);
    tensors.emplace_back("lstm.b", params.lstm.b);
    tensors.emplace_back("projector.w1", params.projector.w1);
    tensors.emplace_back("projector.b1", params.projector.b1);
    tensors.emplace_back("projector.w2", params.projector.w2);
    tensors.emplace_back("projector.b2", params.projector.b2);
    if (params.predictor) {
        tensors.emplace_back("predictor.w1", params.predictor->w1);
        tensors.emplace_back("predictor.b1", params.predictor->b1);
        tensors.emplace_back("predictor.w2", params.predictor->w2);
        tensors.emplace_back("predictor.b2", params.predictor->b2);
    }
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, m] : tensors) write_tensor(out, name, m);
    if (!out) throw ValidationError("checkpoint write failed: " + path);
}

EncoderParams load_checkpoint(const std::string& path, std::string* meta_json) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw ValidationError("not a checkpoint file: " + path);
    }
    const std::uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t meta_len = read_u32(in);
    std::string meta(meta_len, '\0');
    in.read(meta.data(), meta_len);
    if (meta_json) *meta_json = meta;

    const std::uint32_t count = read_u32(in);
    std::vector<std::pair<std::string, Matrix>> tensors;
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name;
        Matrix m = read_tensor(in, &name);
        tensors.emplace_back(std::move(name), std::move(m));
    }
    auto take = [&](const std::string& name) -> Matrix {
        for (auto& [n, m] : tensors) {
            if (n == name) return m;
        }
        throw ValidationError("checkpoint missing tensor " + name + ": " + path);
    };
    auto has = [&](const std::string& name) {
        for (auto& [n, m] : tensors) {
            if (n == name) return true;
        }
        return false;
    };

    EncoderParams p;
    p.lstm.w_x = take("lstm.w_x");
    p.lstm.w_h = take("lstm.w_h");
    p.lstm.b = take("lstm.b");
    p.projector.w1 = take("projector.w1");
    p.projector.b1 = take("projector.b1");
    p.projector.w2 = take("projector.w2");
    p.projector.b2 = take("projector.b2");
    if (has("predictor.w1")) {
        MLPParams pred;
        pred.w1 = take("predictor.w1");
        pred.b1 = take("predictor.b1");
        pred.w2 = take("predictor.w2");
        pred.b2 = take("predictor.b2");
        p.predictor = std::move(pred);
    }
    return p;
}

}  // namespace logtwin
