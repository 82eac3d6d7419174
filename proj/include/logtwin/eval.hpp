#pragma once

#include "logtwin/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace logtwin {

/// Frozen-encoder outputs with row-aligned provenance.
struct EmbeddingRow {
    std::string well_id;
    double depth_start = 0.0;
    double depth_end = 0.0;
    int well_index = -1;
    int geo_class = -1;
};

struct EmbeddingMatrix {
    Matrix vectors;  // n x embedding-dim
    std::vector<EmbeddingRow> provenance;

    void validate() const;
};

using Partition = std::vector<int>;

/// Bottom-up Ward-linkage clustering on Euclidean distances until k
/// clusters remain. Deterministic: merge ties break toward the lowest
/// pair of cluster creation indices.
Partition agglomerative_cluster(const Matrix& points, int k);

/// Adjusted Rand Index from the contingency table.
double ari(const Partition& a, const Partition& b);

/// Fraction of points in the majority true class of their cluster.
double purity(const Partition& pred, const Partition& truth);

/// Pairwise F-score over co-clustered point pairs; 0 when TP = 0.
double pairwise_f_score(const Partition& pred, const Partition& truth);

/// Balanced same-well / different-well pairs with features
/// [e1 | e2 | |e1 - e2|].
struct PairDataset {
    Matrix features;          // n_pairs x 3*dim
    std::vector<int> labels;  // 1 same well, 0 different
};

PairDataset build_pair_dataset(const EmbeddingMatrix& embeddings, int n_pairs, Rng& rng);

enum class ProbeKind { Linear, FC3 };

struct ProbeResult {
    double accuracy = 0.0;
    std::vector<std::size_t> holdout_rows;
    std::vector<int> holdout_predictions;
};

/// Trains a classifier on fixed features and reports held-out accuracy.
/// Linear is multinomial logistic regression; FC3 stacks three affine
/// layers (hidden 128 and 64) with ReLU and a softmax cross-entropy.
/// When `groups` is given the held-out split is by group (e.g. by well).
ProbeResult train_probe(const Matrix& features, const std::vector<int>& labels, ProbeKind kind,
                        std::uint64_t seed, const std::vector<int>* groups = nullptr,
                        double holdout_fraction = 0.25);

/// Same probes with an explicit train/test split.
ProbeResult train_probe_split(const Matrix& train_x, const std::vector<int>& train_y,
                              const Matrix& test_x, const std::vector<int>& test_y,
                              ProbeKind kind, std::uint64_t seed);

/// The binary same-well task: wells are split into train and held-out
/// sides, balanced pair datasets are built inside each side (no well
/// leaks across), and the probe's held-out accuracy is returned.
double binary_same_well_accuracy(const EmbeddingMatrix& embeddings, int n_pairs,
                                 double holdout_fraction, ProbeKind kind, std::uint64_t seed);

}  // namespace logtwin
