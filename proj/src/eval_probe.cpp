#include "logtwin/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>

namespace logtwin {

PairDataset build_pair_dataset(const EmbeddingMatrix& embeddings, int n_pairs, Rng& rng) {
    embeddings.validate();
    if (n_pairs < 2) throw ValidationError("build_pair_dataset: n_pairs must be >= 2");

    std::vector<std::string> wells;
    std::unordered_map<std::string, std::vector<Eigen::Index>> rows_by_well;
    for (std::size_t i = 0; i < embeddings.provenance.size(); ++i) {
        const std::string& w = embeddings.provenance[i].well_id;
        auto it = rows_by_well.find(w);
        if (it == rows_by_well.end()) {
            wells.push_back(w);
            it = rows_by_well.emplace(w, std::vector<Eigen::Index>{}).first;
        }
        it->second.push_back(static_cast<Eigen::Index>(i));
    }
    std::vector<std::string> eligible;  // wells that can host a positive pair
    for (const std::string& w : wells) {
        if (rows_by_well[w].size() >= 2) eligible.push_back(w);
    }
    if (eligible.size() < 2) {
        throw ValidationError("build_pair_dataset: need at least 2 wells with 2+ intervals");
    }

    const Eigen::Index dim = embeddings.vectors.cols();
    const int n_pos = n_pairs / 2;
    const int n_neg = n_pairs - n_pos;

    PairDataset out;
    out.features.resize(n_pairs, 3 * dim);
    out.labels.resize(static_cast<std::size_t>(n_pairs));

    auto emit = [&](int row, Eigen::Index r1, Eigen::Index r2, int label) {
        out.features.block(row, 0, 1, dim) = embeddings.vectors.row(r1);
        out.features.block(row, dim, 1, dim) = embeddings.vectors.row(r2);
        out.features.block(row, 2 * dim, 1, dim) =
            (embeddings.vectors.row(r1) - embeddings.vectors.row(r2)).cwiseAbs();
        out.labels[static_cast<std::size_t>(row)] = label;
    };

    for (int p = 0; p < n_pos; ++p) {
        const std::string& w = eligible[rng.uniform_index(eligible.size())];
        const std::vector<Eigen::Index>& rows = rows_by_well[w];
        const std::size_t i = rng.uniform_index(rows.size());
        std::size_t j = rng.uniform_index(rows.size() - 1);
        if (j >= i) ++j;
        emit(p, rows[i], rows[j], 1);
    }
    for (int p = 0; p < n_neg; ++p) {
        const std::size_t wa = rng.uniform_index(wells.size());
        std::size_t wb = rng.uniform_index(wells.size() - 1);
        if (wb >= wa) ++wb;
        const std::vector<Eigen::Index>& ra = rows_by_well[wells[wa]];
        const std::vector<Eigen::Index>& rb = rows_by_well[wells[wb]];
        emit(n_pos + p, ra[rng.uniform_index(ra.size())], rb[rng.uniform_index(rb.size())], 0);
    }
    return out;
}

namespace {

void seeded_shuffle_sizes(std::vector<std::size_t>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(items[i - 1], items[j]);
    }
}

/// Column-wise standardization fit on the training block; zero-variance
/// columns collapse to zero.
struct Scaler {
    Vector mean;
    Vector inv_std;

    static Scaler fit(const Matrix& x) {
        Scaler s;
        s.mean = x.colwise().mean().transpose();
        Vector var = ((x.rowwise() - s.mean.transpose()).array().square().colwise().sum() /
                      static_cast<double>(x.rows()))
                         .matrix()
                         .transpose();
        s.inv_std.resize(var.size());
        for (Eigen::Index j = 0; j < var.size(); ++j) {
            const double sd = std::sqrt(var[j]);
            s.inv_std[j] = sd > 0.0 ? 1.0 / sd : 0.0;
        }
        return s;
    }

    Matrix apply(const Matrix& x) const {
        return (x.rowwise() - mean.transpose()).array().rowwise() *
               inv_std.transpose().array();
    }
};

Matrix one_hot(const std::vector<int>& y, int n_classes) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(y.size()), n_classes);
    for (std::size_t i = 0; i < y.size(); ++i) {
        out(static_cast<Eigen::Index>(i), y[i]) = 1.0;
    }
    return out;
}

/// Row-wise softmax, numerically shifted.
Matrix softmax(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
        p.row(i) = e / e.sum();
    }
    return p;
}

std::vector<int> argmax_rows(const Matrix& scores) {
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        int best = 0;
        for (Eigen::Index j = 1; j < scores.cols(); ++j) {
            if (scores(i, j) > scores(i, best)) best = static_cast<int>(j);
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

double uniform_pm(Rng& rng, double bound) { return (2.0 * rng.uniform() - 1.0) * bound; }

Matrix init_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double bound) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform_pm(rng, bound);
    }
    return m;
}

std::vector<int> fit_predict_linear(const Matrix& train_x, const std::vector<int>& train_y,
                                    const Matrix& test_x, int n_classes, Rng& rng) {
    (void)rng;  // logistic regression starts from zero weights
    const Eigen::Index n = train_x.rows();
    const Eigen::Index d = train_x.cols();
    Matrix w = Matrix::Zero(n_classes, d);
    Vector b = Vector::Zero(n_classes);
    Matrix w_vel = Matrix::Zero(n_classes, d);
    Vector b_vel = Vector::Zero(n_classes);
    const Matrix y = one_hot(train_y, n_classes);

    const int iterations = 600;
    const double lr = 0.5;
    const double momentum = 0.9;
    for (int it = 0; it < iterations; ++it) {
        Matrix logits = train_x * w.transpose();
        logits.rowwise() += b.transpose();
        const Matrix p = softmax(logits);
        const Matrix diff = (p - y) / static_cast<double>(n);
        const Matrix dw = diff.transpose() * train_x;
        const Vector db = diff.colwise().sum().transpose();
        w_vel = momentum * w_vel - lr * dw;
        b_vel = momentum * b_vel - lr * db;
        w += w_vel;
        b += b_vel;
    }
    Matrix logits = test_x * w.transpose();
    logits.rowwise() += b.transpose();
    return argmax_rows(logits);
}

std::vector<int> fit_predict_fc3(const Matrix& train_x, const std::vector<int>& train_y,
                                 const Matrix& test_x, int n_classes, Rng& rng) {
    const Eigen::Index n = train_x.rows();
    const Eigen::Index d = train_x.cols();
    const int h1 = 128, h2 = 64;

    Matrix w1 = init_matrix(h1, d, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    Vector b1 = Vector::Zero(h1);
    Matrix w2 = init_matrix(h2, h1, rng, 1.0 / std::sqrt(static_cast<double>(h1)));
    Vector b2 = Vector::Zero(h2);
    Matrix w3 = init_matrix(n_classes, h2, rng, 1.0 / std::sqrt(static_cast<double>(h2)));
    Vector b3 = Vector::Zero(n_classes);

    Matrix vw1 = Matrix::Zero(h1, d), vw2 = Matrix::Zero(h2, h1),
           vw3 = Matrix::Zero(n_classes, h2);
    Vector vb1 = Vector::Zero(h1), vb2 = Vector::Zero(h2), vb3 = Vector::Zero(n_classes);

    const Matrix y = one_hot(train_y, n_classes);
    const int iterations = 300;
    const double lr = 0.1;
    const double momentum = 0.9;

    for (int it = 0; it < iterations; ++it) {
        Matrix z1 = train_x * w1.transpose();
        z1.rowwise() += b1.transpose();
        const Matrix a1 = z1.cwiseMax(0.0);
        Matrix z2 = a1 * w2.transpose();
        z2.rowwise() += b2.transpose();
        const Matrix a2 = z2.cwiseMax(0.0);
        Matrix logits = a2 * w3.transpose();
        logits.rowwise() += b3.transpose();

        const Matrix p = softmax(logits);
        const Matrix dlogits = (p - y) / static_cast<double>(n);
        const Matrix dw3 = dlogits.transpose() * a2;
        const Vector db3 = dlogits.colwise().sum().transpose();
        Matrix da2 = dlogits * w3;
        Matrix dz2 = (z2.array() > 0.0).select(da2.array(), 0.0).matrix();
        const Matrix dw2 = dz2.transpose() * a1;
        const Vector db2 = dz2.colwise().sum().transpose();
        Matrix da1 = dz2 * w2;
        Matrix dz1 = (z1.array() > 0.0).select(da1.array(), 0.0).matrix();
        const Matrix dw1 = dz1.transpose() * train_x;
        const Vector db1 = dz1.colwise().sum().transpose();

        vw3 = momentum * vw3 - lr * dw3;
        vb3 = momentum * vb3 - lr * db3;
        vw2 = momentum * vw2 - lr * dw2;
        vb2 = momentum * vb2 - lr * db2;
        vw1 = momentum * vw1 - lr * dw1;
        vb1 = momentum * vb1 - lr * db1;
        w3 += vw3;
        b3 += vb3;
        w2 += vw2;
        b2 += vb2;
        w1 += vw1;
        b1 += vb1;
    }

    Matrix z1 = test_x * w1.transpose();
    z1.rowwise() += b1.transpose();
    const Matrix a1 = z1.cwiseMax(0.0);
    Matrix z2 = a1 * w2.transpose();
    z2.rowwise() += b2.transpose();
    const Matrix a2 = z2.cwiseMax(0.0);
    Matrix logits = a2 * w3.transpose();
    logits.rowwise() += b3.transpose();
    return argmax_rows(logits);
}

}  // namespace

ProbeResult train_probe_split(const Matrix& train_x, const std::vector<int>& train_y,
                              const Matrix& test_x, const std::vector<int>& test_y,
                              ProbeKind kind, std::uint64_t seed) {
    if (train_x.rows() != static_cast<Eigen::Index>(train_y.size()) ||
        test_x.rows() != static_cast<Eigen::Index>(test_y.size())) {
        throw ValidationError("train_probe: feature/label length mismatch");
    }
    if (train_x.rows() == 0 || test_x.rows() == 0) {
        throw ValidationError("train_probe: empty split");
    }

    // Map labels to contiguous class ids; classes come from the train split.
    std::set<int> class_set(train_y.begin(), train_y.end());
    if (class_set.size() < 2) {
        throw ValidationError("train_probe: single-class training data");
    }
    std::vector<int> classes(class_set.begin(), class_set.end());
    std::map<int, int> to_id;
    for (std::size_t c = 0; c < classes.size(); ++c) to_id[classes[c]] = static_cast<int>(c);
    std::vector<int> train_ids(train_y.size());
    for (std::size_t i = 0; i < train_y.size(); ++i) train_ids[i] = to_id[train_y[i]];

    const Scaler scaler = Scaler::fit(train_x);
    const Matrix xt = scaler.apply(train_x);
    const Matrix xv = scaler.apply(test_x);

    Rng rng = Rng::derive(seed, {11});
    std::vector<int> pred_ids =
        kind == ProbeKind::Linear
            ? fit_predict_linear(xt, train_ids, xv, static_cast<int>(classes.size()), rng)
            : fit_predict_fc3(xt, train_ids, xv, static_cast<int>(classes.size()), rng);

    ProbeResult result;
    result.holdout_predictions.resize(pred_ids.size());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred_ids.size(); ++i) {
        const int label = classes[static_cast<std::size_t>(pred_ids[i])];
        result.holdout_predictions[i] = label;
        if (label == test_y[i]) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(test_y.size());
    return result;
}

ProbeResult train_probe(const Matrix& features, const std::vector<int>& labels, ProbeKind kind,
                        std::uint64_t seed, const std::vector<int>* groups,
                        double holdout_fraction) {
    if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
        throw ValidationError("train_probe: feature/label length mismatch");
    }
    if (groups && groups->size() != labels.size()) {
        throw ValidationError("train_probe: group vector length mismatch");
    }
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0) {
        throw ValidationError("train_probe: holdout_fraction must be in (0, 1)");
    }
    const std::size_t n = labels.size();
    if (n < 2) throw ValidationError("train_probe: need at least 2 rows");

    std::vector<bool> is_test(n, false);
    Rng rng = Rng::derive(seed, {13});
    if (groups) {
        std::vector<int> distinct;
        std::map<int, std::size_t> first_seen;
        for (int g : *groups) {
            if (first_seen.emplace(g, distinct.size()).second) distinct.push_back(g);
        }
        if (distinct.size() < 2) {
            throw ValidationError("train_probe: need at least 2 groups for a grouped split");
        }
        std::vector<std::size_t> order(distinct.size());
        std::iota(order.begin(), order.end(), 0);
        seeded_shuffle_sizes(order, rng);
        std::size_t n_test_groups = static_cast<std::size_t>(
            std::llround(holdout_fraction * static_cast<double>(distinct.size())));
        n_test_groups = std::clamp<std::size_t>(n_test_groups, 1, distinct.size() - 1);
        std::set<int> test_groups;
        for (std::size_t k = 0; k < n_test_groups; ++k) test_groups.insert(distinct[order[k]]);
        for (std::size_t i = 0; i < n; ++i) is_test[i] = test_groups.count((*groups)[i]) > 0;
    } else {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        seeded_shuffle_sizes(order, rng);
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(holdout_fraction * static_cast<double>(n)));
        n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
        for (std::size_t k = 0; k < n_test; ++k) is_test[order[k]] = true;
    }

    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? test_rows : train_rows).push_back(i);
    if (train_rows.empty() || test_rows.empty()) {
        throw ValidationError("train_probe: degenerate split");
    }

    Matrix train_x(static_cast<Eigen::Index>(train_rows.size()), features.cols());
    Matrix test_x(static_cast<Eigen::Index>(test_rows.size()), features.cols());
    std::vector<int> train_y(train_rows.size()), test_y(test_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        train_x.row(static_cast<Eigen::Index>(i)) =
            features.row(static_cast<Eigen::Index>(train_rows[i]));
        train_y[i] = labels[train_rows[i]];
    }
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
        test_x.row(static_cast<Eigen::Index>(i)) =
            features.row(static_cast<Eigen::Index>(test_rows[i]));
        test_y[i] = labels[test_rows[i]];
    }

    ProbeResult result = train_probe_split(train_x, train_y, test_x, test_y, kind, seed);
    result.holdout_rows = test_rows;
    return result;
}

double binary_same_well_accuracy(const EmbeddingMatrix& embeddings, int n_pairs,
                                 double holdout_fraction, ProbeKind kind, std::uint64_t seed) {
    embeddings.validate();
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0) {
        throw ValidationError("binary_same_well_accuracy: holdout_fraction must be in (0, 1)");
    }
    std::vector<std::string> wells;
    std::set<std::string> seen;
    for (const EmbeddingRow& row : embeddings.provenance) {
        if (seen.insert(row.well_id).second) wells.push_back(row.well_id);
    }
    if (wells.size() < 4) {
        throw ValidationError("binary_same_well_accuracy: need at least 4 wells");
    }
    Rng rng = Rng::derive(seed, {21});
    for (std::size_t i = wells.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(wells[i - 1], wells[j]);
    }
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(holdout_fraction * static_cast<double>(wells.size())));
    n_test = std::clamp<std::size_t>(n_test, 2, wells.size() - 2);
    const std::set<std::string> test_wells(wells.begin(),
                                           wells.begin() + static_cast<std::ptrdiff_t>(n_test));

    auto subset = [&](bool test_side) {
        EmbeddingMatrix sub;
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < embeddings.provenance.size(); ++i) {
            if ((test_wells.count(embeddings.provenance[i].well_id) > 0) == test_side) {
                rows.push_back(static_cast<Eigen::Index>(i));
            }
        }
        sub.vectors.resize(static_cast<Eigen::Index>(rows.size()), embeddings.vectors.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            sub.vectors.row(static_cast<Eigen::Index>(i)) = embeddings.vectors.row(rows[i]);
            sub.provenance.push_back(embeddings.provenance[static_cast<std::size_t>(rows[i])]);
        }
        return sub;
    };

    const EmbeddingMatrix train_side = subset(false);
    const EmbeddingMatrix test_side = subset(true);
    Rng pair_rng_train = Rng::derive(seed, {22});
    Rng pair_rng_test = Rng::derive(seed, {23});
    const PairDataset train_pairs = build_pair_dataset(train_side, n_pairs, pair_rng_train);
    const PairDataset test_pairs =
        build_pair_dataset(test_side, std::max(n_pairs / 4, 2), pair_rng_test);

    return train_probe_split(train_pairs.features, train_pairs.labels, test_pairs.features,
                             test_pairs.labels, kind, seed)
        .accuracy;
}

}  // namespace logtwin
