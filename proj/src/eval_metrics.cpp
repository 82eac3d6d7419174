#include "logtwin/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace logtwin {

void EmbeddingMatrix::validate() const {
    if (static_cast<std::size_t>(vectors.rows()) != provenance.size()) {
        throw ValidationError("embedding matrix: provenance length mismatch");
    }
    if (!vectors.allFinite()) {
        throw NumericError("embedding matrix: non-finite entries");
    }
}

Partition agglomerative_cluster(const Matrix& points, int k) {
    const Eigen::Index n = points.rows();
    if (k < 1) throw ValidationError("agglomerative_cluster: k must be >= 1");
    if (static_cast<Eigen::Index>(k) > n) {
        throw ValidationError("agglomerative_cluster: k exceeds the number of points");
    }

    // Active clusters keyed by creation index; Ward merge cost tracked as
    // a squared distance with the Lance-Williams update.
    struct Cluster {
        std::size_t size;
        bool alive;
    };
    std::vector<Cluster> clusters(static_cast<std::size_t>(n), {1, true});
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) members[static_cast<std::size_t>(i)] = {i};

    // Dense symmetric matrix of squared merge distances between alive ids.
    Matrix d2(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d2(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (points.row(i) - points.row(j)).squaredNorm();
            d2(i, j) = d;
            d2(j, i) = d;
        }
    }

    std::size_t alive = static_cast<std::size_t>(n);
    while (alive > static_cast<std::size_t>(k)) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index bi = -1, bj = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!clusters[static_cast<std::size_t>(i)].alive) continue;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (!clusters[static_cast<std::size_t>(j)].alive) continue;
                if (d2(i, j) < best) {  // strict: ties keep the lowest (i, j)
                    best = d2(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        const double n_i = static_cast<double>(clusters[static_cast<std::size_t>(bi)].size);
        const double n_j = static_cast<double>(clusters[static_cast<std::size_t>(bj)].size);
        for (Eigen::Index t = 0; t < n; ++t) {
            if (t == bi || t == bj || !clusters[static_cast<std::size_t>(t)].alive) continue;
            const double n_t = static_cast<double>(clusters[static_cast<std::size_t>(t)].size);
            const double updated = ((n_i + n_t) * d2(bi, t) + (n_j + n_t) * d2(bj, t) -
                                    n_t * d2(bi, bj)) /
                                   (n_i + n_j + n_t);
            d2(bi, t) = updated;
            d2(t, bi) = updated;
        }
        clusters[static_cast<std::size_t>(bi)].size += clusters[static_cast<std::size_t>(bj)].size;
        clusters[static_cast<std::size_t>(bj)].alive = false;
        members[static_cast<std::size_t>(bi)].insert(
            members[static_cast<std::size_t>(bi)].end(),
            members[static_cast<std::size_t>(bj)].begin(),
            members[static_cast<std::size_t>(bj)].end());
        members[static_cast<std::size_t>(bj)].clear();
        --alive;
    }

    // Label clusters 0..k-1 in order of their smallest member row.
    Partition assignment(static_cast<std::size_t>(n), -1);
    std::vector<std::pair<Eigen::Index, std::size_t>> order;
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (!clusters[c].alive) continue;
        order.emplace_back(*std::min_element(members[c].begin(), members[c].end()), c);
    }
    std::sort(order.begin(), order.end());
    for (std::size_t label = 0; label < order.size(); ++label) {
        for (Eigen::Index row : members[order[label].second]) {
            assignment[static_cast<std::size_t>(row)] = static_cast<int>(label);
        }
    }
    return assignment;
}

namespace {

/// Contingency counts shared by the partition metrics.
struct Contingency {
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> row_sums;   // per pred cluster
    std::map<int, double> col_sums;   // per truth class
    double n = 0.0;
};

Contingency contingency(const Partition& pred, const Partition& truth) {
    if (pred.size() != truth.size()) {
        throw ValidationError("partition metrics: length mismatch");
    }
    if (pred.empty()) throw ValidationError("partition metrics: empty partitions");
    Contingency c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        c.cells[{pred[i], truth[i]}] += 1.0;
        c.row_sums[pred[i]] += 1.0;
        c.col_sums[truth[i]] += 1.0;
    }
    c.n = static_cast<double>(pred.size());
    return c;
}

double choose2(double m) { return m * (m - 1.0) / 2.0; }

}  // namespace

double ari(const Partition& a, const Partition& b) {
    const Contingency c = contingency(a, b);
    double sum_cells = 0.0;
    for (const auto& [key, count] : c.cells) sum_cells += choose2(count);
    double sum_rows = 0.0;
    for (const auto& [key, count] : c.row_sums) sum_rows += choose2(count);
    double sum_cols = 0.0;
    for (const auto& [key, count] : c.col_sums) sum_cols += choose2(count);
    const double total_pairs = choose2(c.n);
    if (total_pairs == 0.0) return 1.0;  // single point: identical by definition

    const double expected = sum_rows * sum_cols / total_pairs;
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) {
        // Degenerate: both partitions all-singletons or both one cluster.
        return 1.0;
    }
    return (sum_cells - expected) / (maximum - expected);
}

double purity(const Partition& pred, const Partition& truth) {
    const Contingency c = contingency(pred, truth);
    std::map<int, double> best_in_cluster;
    for (const auto& [key, count] : c.cells) {
        double& best = best_in_cluster[key.first];
        best = std::max(best, count);
    }
    double total = 0.0;
    for (const auto& [cluster, best] : best_in_cluster) total += best;
    return total / c.n;
}

double pairwise_f_score(const Partition& pred, const Partition& truth) {
    const Contingency c = contingency(pred, truth);
    double tp = 0.0;
    for (const auto& [key, count] : c.cells) tp += choose2(count);
    double pred_pairs = 0.0;
    for (const auto& [key, count] : c.row_sums) pred_pairs += choose2(count);
    double truth_pairs = 0.0;
    for (const auto& [key, count] : c.col_sums) truth_pairs += choose2(count);
    if (tp == 0.0) return 0.0;
    const double precision = tp / pred_pairs;
    const double recall = tp / truth_pairs;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace logtwin
