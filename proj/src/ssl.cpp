#include "logtwin/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

namespace logtwin {

void BTConfig::validate() const {
    if (lambda <= 0.0) throw ValidationError("ssl.lambda must be > 0");
    if (batch_size < 2) throw ValidationError("Barlow Twins batch_size must be >= 2");
    if (eps_std <= 0.0) throw ValidationError("ssl.eps_std must be > 0");
}

void BYOLConfig::validate() const {
    if (batch_size < 1) throw ValidationError("BYOL batch_size must be >= 1");
    ema.validate();
}

double byol_loss(const Matrix& q, const Matrix& z, Matrix* dq) {
    if (q.rows() != z.rows() || q.cols() != z.cols()) {
        throw ValidationError("byol_loss: q and z must have the same shape");
    }
    const Eigen::Index n = q.rows();
    if (n == 0) throw ValidationError("byol_loss: empty batch");
    if (dq) *dq = Matrix::Zero(q.rows(), q.cols());

    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double qn = q.row(i).norm();
        const double zn = z.row(i).norm();
        if (qn == 0.0 || zn == 0.0) {
            throw NumericError("byol_loss: zero-norm row " + std::to_string(i));
        }
        const Vector qbar = q.row(i).transpose() / qn;
        const Vector zbar = z.row(i).transpose() / zn;
        const double cos = qbar.dot(zbar);
        total += 2.0 - 2.0 * cos;
        if (dq) {
            // d/dq of -2*cos(q, zbar); zbar carries no gradient.
            dq->row(i) = (-2.0 / qn) * (zbar - cos * qbar).transpose();
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    if (dq) *dq *= inv_n;
    return total * inv_n;
}

namespace {

void accumulate(MLPParams& acc, const MLPParams& g) {
    acc.w1 += g.w1;
    acc.b1 += g.b1;
    acc.w2 += g.w2;
    acc.b2 += g.b2;
}

void accumulate(EncoderParams& acc, const EncoderParams& g) {
    acc.lstm.w_x += g.lstm.w_x;
    acc.lstm.w_h += g.lstm.w_h;
    acc.lstm.b += g.lstm.b;
    accumulate(acc.projector, g.projector);
    if (acc.predictor && g.predictor) accumulate(*acc.predictor, *g.predictor);
}

void scale(EncoderParams& g, double alpha) {
    for (TensorView& v : tensor_views(g)) {
        Eigen::Map<Vector>(v.data, static_cast<Eigen::Index>(v.size)) *= alpha;
    }
}

}  // namespace

double byol_symmetric_loss(const EncoderParams& student, const EncoderParams& teacher,
                           const std::vector<Matrix>& views_a, const std::vector<Matrix>& views_b,
                           EncoderParams* student_grads) {
    if (!student.predictor) {
        throw ValidationError("byol_symmetric_loss: student must have a predictor");
    }
    if (teacher.predictor) {
        throw ValidationError("byol_symmetric_loss: teacher must not have a predictor");
    }

    // Teacher outputs are constants: no caches, no gradients.
    const Matrix z_b = mlp_forward(teacher.projector, encode_batch(teacher, views_b), nullptr);
    const Matrix z_a = mlp_forward(teacher.projector, encode_batch(teacher, views_a), nullptr);

    ForwardCache cache_a, cache_b;
    const Matrix q_a = encoder_forward(student, views_a, student_grads ? &cache_a : nullptr, true);
    const Matrix q_b = encoder_forward(student, views_b, student_grads ? &cache_b : nullptr, true);

    Matrix dq_a, dq_b;
    const double loss_ab = byol_loss(q_a, z_b, student_grads ? &dq_a : nullptr);
    const double loss_ba = byol_loss(q_b, z_a, student_grads ? &dq_b : nullptr);

    if (student_grads) {
        *student_grads = encoder_backward(student, cache_a, dq_a);
        accumulate(*student_grads, encoder_backward(student, cache_b, dq_b));
    }
    return loss_ab + loss_ba;
}

namespace {

struct Standardized {
    Matrix z;       // N x k standardized values
    Matrix u;       // N x k centered values
    Vector stddev;  // per-column population std
};

Standardized standardize(const Matrix& x, double eps_std) {
    Standardized s;
    const Eigen::Index n = x.rows();
    s.u = x.rowwise() - x.colwise().mean();
    s.stddev = (s.u.array().square().colwise().sum() / static_cast<double>(n))
                   .sqrt()
                   .matrix()
                   .transpose();
    s.z = s.u.array().rowwise() / (s.stddev.transpose().array() + eps_std);
    return s;
}

/// Backward through z = u / (s + eps) with u = x - mean(x), s = pop-std(x),
/// all per column. Exact derivative of the guarded forward expression.
Matrix standardize_backward(const Standardized& s, const Matrix& g, double eps_std) {
    const Eigen::Index n = s.z.rows();
    Matrix dx(s.z.rows(), s.z.cols());
    for (Eigen::Index j = 0; j < s.z.cols(); ++j) {
        const double sd = s.stddev[j];
        const double denom = sd + eps_std;
        const double g_mean = g.col(j).mean();
        const double gu_sum = g.col(j).dot(s.u.col(j));
        const double s_guard = std::max(sd, 1e-300);
        dx.col(j) = (g.col(j).array() - g_mean) / denom -
                    s.u.col(j).array() * (gu_sum / (static_cast<double>(n) * s_guard * denom * denom));
    }
    return dx;
}

}  // namespace

Matrix cross_correlation(const Matrix& za, const Matrix& zb, double eps_std) {
    if (za.rows() != zb.rows() || za.cols() != zb.cols()) {
        throw ValidationError("cross_correlation: Za and Zb must have the same shape");
    }
    if (za.rows() < 2) {
        throw ValidationError("cross_correlation: batch must have at least 2 rows");
    }
    const Standardized a = standardize(za, eps_std);
    const Standardized b = standardize(zb, eps_std);
    return (a.z.transpose() * b.z) / static_cast<double>(za.rows());
}

double barlow_twins_loss(const Matrix& c, double lambda) {
    if (c.rows() != c.cols()) throw ValidationError("barlow_twins_loss: C must be square");
    double on_diag = 0.0;
    double off_diag = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
            if (i == j) {
                const double d = 1.0 - c(i, i);
                on_diag += d * d;
            } else {
                off_diag += c(i, j) * c(i, j);
            }
        }
    }
    return on_diag + lambda * off_diag;
}

double barlow_twins_loss_grad(const Matrix& za, const Matrix& zb, double lambda, double eps_std,
                              Matrix* dza, Matrix* dzb) {
    if (za.rows() != zb.rows() || za.cols() != zb.cols()) {
        throw ValidationError("barlow_twins_loss_grad: Za and Zb must have the same shape");
    }
    if (za.rows() < 2) {
        throw ValidationError("barlow_twins_loss_grad: batch must have at least 2 rows");
    }
    const double n = static_cast<double>(za.rows());
    const Standardized a = standardize(za, eps_std);
    const Standardized b = standardize(zb, eps_std);
    const Matrix c = (a.z.transpose() * b.z) / n;
    const double loss = barlow_twins_loss(c, lambda);

    if (dza || dzb) {
        // dL/dC: -2(1 - C_ii) on the diagonal, 2*lambda*C_ij off it.
        Matrix dc = 2.0 * lambda * c;
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            dc(i, i) = -2.0 * (1.0 - c(i, i));
        }
        if (dza) {
            const Matrix dza_hat = (b.z * dc.transpose()) / n;
            *dza = standardize_backward(a, dza_hat, eps_std);
        }
        if (dzb) {
            const Matrix dzb_hat = (a.z * dc) / n;
            *dzb = standardize_backward(b, dzb_hat, eps_std);
        }
    }
    return loss;
}

// ---- training loop -------------------------------------------------------

TrainConfig TrainConfig::defaults(Method m) {
    TrainConfig cfg;
    cfg.method = m;
    cfg.dims = EncoderDims::defaults(m);
    cfg.views = ViewPairSpec::defaults(m);
    cfg.batch_size = (m == Method::Byol) ? 64 : 2048;
    return cfg;
}

void TrainConfig::validate() const {
    lars.validate();
    ema.validate();
    if (method == Method::BarlowTwins && bt.lambda <= 0.0) {
        throw ValidationError("ssl.lambda must be > 0");
    }
    if (bt.eps_std <= 0.0) throw ValidationError("ssl.eps_std must be > 0");
    if (max_epochs < 1) throw ValidationError("ssl.max_epochs must be >= 1");
    if (patience < 1) throw ValidationError("ssl.patience must be >= 1");
    if (cosine_t_max < 1) throw ValidationError("optim.cosine_t_max must be >= 1");
    if (val_fraction <= 0.0 || val_fraction >= 1.0) {
        throw ValidationError("ssl.val_fraction must be in (0, 1)");
    }
    if (batch_size < 0) throw ValidationError("ssl.batch_size must be >= 0");
    if (interval_length < 2) throw ValidationError("data.interval_length must be >= 2");
    views.first.validate(interval_length);
    views.second.validate(interval_length);
}

namespace {

// Stream tags for deterministic sub-streams.
constexpr std::uint64_t kTagInit = 1;
constexpr std::uint64_t kTagSplit = 2;
constexpr std::uint64_t kTagShuffle = 3;
constexpr std::uint64_t kTagAugment = 4;
constexpr std::uint64_t kTagVal = 5;

template <typename T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(items[i - 1], items[j]);
    }
}

struct Batch {
    std::vector<std::size_t> items;  // indices into the dataset
};

std::vector<Batch> chunk_batches(const std::vector<std::size_t>& idx, std::size_t batch_size,
                                 bool fold_single_tail) {
    std::vector<Batch> batches;
    for (std::size_t pos = 0; pos < idx.size(); pos += batch_size) {
        Batch b;
        const std::size_t end = std::min(pos + batch_size, idx.size());
        b.items.assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                       idx.begin() + static_cast<std::ptrdiff_t>(end));
        batches.push_back(std::move(b));
    }
    if (batches.size() >= 2 && batches.back().items.size() < 2) {
        if (fold_single_tail) {
            Batch tail = std::move(batches.back());
            batches.pop_back();
            batches.back().items.insert(batches.back().items.end(), tail.items.begin(),
                                        tail.items.end());
        } else {
            batches.pop_back();
        }
    }
    return batches;
}

struct BatchViews {
    std::vector<Matrix> a, b;
};

BatchViews make_batch_views(const std::vector<Interval>& dataset, const Batch& batch,
                            const TrainConfig& cfg, std::uint64_t stream_tag, int epoch) {
    std::vector<Matrix> raw;
    raw.reserve(batch.items.size());
    for (std::size_t item : batch.items) raw.push_back(dataset[item].values);
    const Vector sigma = batch_feature_std(raw);

    BatchViews views;
    views.a.reserve(raw.size());
    views.b.reserve(raw.size());
    for (std::size_t k = 0; k < batch.items.size(); ++k) {
        Rng rng = Rng::derive(cfg.seed, {stream_tag, static_cast<std::uint64_t>(epoch),
                                         static_cast<std::uint64_t>(batch.items[k])});
        auto [va, vb] = make_view_pair(raw[k], cfg.method, cfg.views, rng, &sigma);
        views.a.push_back(std::move(va));
        views.b.push_back(std::move(vb));
    }
    return views;
}

double batch_loss(const EncoderParams& student, const EncoderParams* teacher,
                  const BatchViews& views, const TrainConfig& cfg, EncoderParams* grads) {
    if (cfg.method == Method::Byol) {
        return byol_symmetric_loss(student, *teacher, views.a, views.b, grads);
    }
    ForwardCache cache_a, cache_b;
    const Matrix za = encoder_forward(student, views.a, grads ? &cache_a : nullptr, false);
    const Matrix zb = encoder_forward(student, views.b, grads ? &cache_b : nullptr, false);
    Matrix dza, dzb;
    const double loss = barlow_twins_loss_grad(za, zb, cfg.bt.lambda, cfg.bt.eps_std,
                                               grads ? &dza : nullptr, grads ? &dzb : nullptr);
    if (grads) {
        *grads = encoder_backward(student, cache_a, dza);
        accumulate(*grads, encoder_backward(student, cache_b, dzb));
    }
    return loss;
}

}  // namespace

TrainResult train(const std::vector<Interval>& dataset, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw ValidationError("train: empty dataset");
    const int l = static_cast<int>(dataset.front().values.rows());
    for (const Interval& iv : dataset) {
        if (iv.values.rows() != l || iv.values.cols() != cfg.dims.input) {
            throw ValidationError("train: inconsistent interval shapes");
        }
    }
    cfg.views.first.validate(l);
    cfg.views.second.validate(l);

    // Train/val split by well: no well contributes intervals to both.
    std::vector<std::string> wells;
    std::unordered_map<std::string, std::size_t> well_pos;
    for (const Interval& iv : dataset) {
        if (well_pos.emplace(iv.well_id, wells.size()).second) wells.push_back(iv.well_id);
    }
    if (wells.size() < 2) {
        throw ValidationError("train: need at least 2 wells for a well-level train/val split");
    }
    std::vector<std::string> shuffled = wells;
    {
        Rng rng = Rng::derive(cfg.seed, {kTagSplit});
        seeded_shuffle(shuffled, rng);
    }
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(cfg.val_fraction * static_cast<double>(wells.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, wells.size() - 1);
    std::vector<std::string> val_wells(shuffled.begin(),
                                       shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::string> train_wells(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val),
                                         shuffled.end());
    std::sort(val_wells.begin(), val_wells.end());
    std::sort(train_wells.begin(), train_wells.end());
    auto in_val = [&](const std::string& w) {
        return std::binary_search(val_wells.begin(), val_wells.end(), w);
    };

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (in_val(dataset[i].well_id) ? val_idx : train_idx).push_back(i);
    }
    if (train_idx.size() < 2) {
        throw ValidationError("train: training split has fewer than 2 intervals");
    }
    if (val_idx.empty()) {
        throw ValidationError("train: validation split is empty");
    }

    const std::size_t batch_size = cfg.batch_size > 0
                                       ? static_cast<std::size_t>(cfg.batch_size)
                                       : (cfg.method == Method::Byol ? 64u : 2048u);

    EncoderParams student;
    {
        Rng rng = Rng::derive(cfg.seed, {kTagInit});
        student = init_encoder(cfg.dims, cfg.method, rng);
    }
    EncoderParams teacher;
    if (cfg.method == Method::Byol) {
        teacher.lstm = student.lstm;
        teacher.projector = student.projector;
    }

    LARSState lars_state;
    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    int epochs_without_improvement = 0;

    // Validation batches and streams are fixed across epochs so the early
    // stopping signal is comparable epoch to epoch.
    const std::vector<Batch> val_batches = chunk_batches(val_idx, batch_size, true);
    if (cfg.method == Method::BarlowTwins && val_batches.size() == 1 &&
        val_batches.front().items.size() < 2) {
        throw ValidationError("train: Barlow Twins validation needs at least 2 intervals");
    }

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double lr = cosine_lr(epoch - 1, cfg.lars.base_lr, cfg.cosine_t_max);

        std::vector<std::size_t> order = train_idx;
        {
            Rng rng = Rng::derive(cfg.seed, {kTagShuffle, static_cast<std::uint64_t>(epoch)});
            seeded_shuffle(order, rng);
        }
        const std::vector<Batch> batches = chunk_batches(order, batch_size, false);
        if (batches.empty()) {
            throw ValidationError("train: no usable training batch");
        }

        double train_loss_sum = 0.0;
        std::size_t train_count = 0;
        for (const Batch& batch : batches) {
            const BatchViews views = make_batch_views(dataset, batch, cfg, kTagAugment, epoch);
            EncoderParams grads;
            const double loss = batch_loss(student, &teacher, views, cfg, &grads);
            if (!std::isfinite(loss)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
            }
            if (cfg.gradient_scale != 1.0) scale(grads, cfg.gradient_scale);

            std::vector<TensorView> param_views = tensor_views(student);
            std::vector<TensorView> grad_views = tensor_views(grads);
            lars_step(param_views, grad_views, cfg.lars, lars_state, lr);
            if (cfg.method == Method::Byol) {
                ema_update(teacher, student, cfg.ema.momentum);
            }
            train_loss_sum += loss * static_cast<double>(batch.items.size());
            train_count += batch.items.size();
        }
        const double train_loss = train_loss_sum / static_cast<double>(train_count);

        double val_loss_sum = 0.0;
        std::size_t val_count = 0;
        for (const Batch& batch : val_batches) {
            const BatchViews views = make_batch_views(dataset, batch, cfg, kTagVal, 0);
            const double loss = batch_loss(student, &teacher, views, cfg, nullptr);
            val_loss_sum += loss * static_cast<double>(batch.items.size());
            val_count += batch.items.size();
        }
        const double val_loss = val_loss_sum / static_cast<double>(val_count);

        result.history.push_back({epoch, train_loss, val_loss, lr});

        if (val_loss < best_val) {
            best_val = val_loss;
            result.best_epoch = epoch;
            result.params = student;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement >= cfg.patience) break;
        }
    }

    result.train_wells = train_wells;
    result.val_wells = val_wells;
    return result;
}

}  // namespace logtwin
