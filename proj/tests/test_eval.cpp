#include "logtwin/eval.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

using namespace logtwin;

namespace {

/// Brute-force pair-counting oracle: walks every unordered point pair.
struct PairCounts {
    double tp = 0, fp = 0, fn = 0, tn = 0;
};

PairCounts count_pairs(const Partition& pred, const Partition& truth) {
    PairCounts c;
    const std::size_t n = pred.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same_pred = pred[i] == pred[j];
            const bool same_truth = truth[i] == truth[j];
            if (same_pred && same_truth) c.tp += 1;
            else if (same_pred) c.fp += 1;
            else if (same_truth) c.fn += 1;
            else c.tn += 1;
        }
    }
    return c;
}

double oracle_rand_index_adjusted(const Partition& pred, const Partition& truth) {
    const PairCounts c = count_pairs(pred, truth);
    const double total = c.tp + c.fp + c.fn + c.tn;
    // expected/max agreement straight from pair counts
    const double sum_pred = c.tp + c.fp;
    const double sum_truth = c.tp + c.fn;
    const double expected = sum_pred * sum_truth / total;
    const double maximum = 0.5 * (sum_pred + sum_truth);
    if (maximum == expected) return 1.0;
    return (c.tp - expected) / (maximum - expected);
}

double oracle_pairwise_f(const Partition& pred, const Partition& truth) {
    const PairCounts c = count_pairs(pred, truth);
    if (c.tp == 0) return 0.0;
    const double precision = c.tp / (c.tp + c.fp);
    const double recall = c.tp / (c.tp + c.fn);
    return 2.0 * precision * recall / (precision + recall);
}

double oracle_purity(const Partition& pred, const Partition& truth) {
    std::map<int, std::map<int, int>> table;
    for (std::size_t i = 0; i < pred.size(); ++i) table[pred[i]][truth[i]] += 1;
    double sum = 0.0;
    for (const auto& [cluster, classes] : table) {
        int best = 0;
        for (const auto& [cls, count] : classes) best = std::max(best, count);
        sum += best;
    }
    return sum / static_cast<double>(pred.size());
}

Partition random_partition(std::size_t n, int k, Rng& rng) {
    Partition p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>(rng.uniform_index(k));
    return p;
}

}  // namespace

TEST_CASE("agglomerative_cluster: degenerate k") {
    Rng rng(1);
    Matrix points(6, 3);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 3; ++j) points(i, j) = rng.normal();
    }
    const Partition singletons = agglomerative_cluster(points, 6);
    std::set<int> distinct(singletons.begin(), singletons.end());
    CHECK(distinct.size() == 6);

    const Partition one = agglomerative_cluster(points, 1);
    CHECK(std::all_of(one.begin(), one.end(), [](int c) { return c == 0; }));

    CHECK_THROWS_AS((void)agglomerative_cluster(points, 7), ValidationError);
}

TEST_CASE("agglomerative_cluster: two well-separated blobs recover the labels") {
    Rng rng(2);
    const int per_blob = 20;
    Matrix points(2 * per_blob, 4);
    Partition truth(2 * per_blob);
    for (int i = 0; i < 2 * per_blob; ++i) {
        const int blob = i < per_blob ? 0 : 1;
        truth[static_cast<std::size_t>(i)] = blob;
        for (int j = 0; j < 4; ++j) {
            points(i, j) = (blob == 0 ? 0.0 : 10.0) + rng.normal();  // 10 sigma apart
        }
    }
    const Partition pred = agglomerative_cluster(points, 2);
    CHECK(ari(pred, truth) == doctest::Approx(1.0));
}

TEST_CASE("ari: spot cases") {
    CHECK(ari({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    CHECK(ari({1, 1, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(1.0));  // relabeled
    CHECK(ari({0, 0, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(0.0));
    const Partition pred = {0, 0, 1, 1, 2};
    const Partition truth = {0, 0, 0, 1, 1};
    CHECK(ari(pred, truth) ==
          doctest::Approx(oracle_rand_index_adjusted(pred, truth)).epsilon(1e-12));
    CHECK_THROWS_AS((void)ari({0, 1}, {0, 1, 2}), ValidationError);
}

TEST_CASE("purity: spot cases") {
    CHECK(purity({0, 1, 0}, {0, 1, 0}) == doctest::Approx(1.0));
    CHECK(purity({0, 0, 0}, {5, 5, 9}) == doctest::Approx(2.0 / 3.0));
    // all-singletons is the documented degenerate optimum
    CHECK(purity({0, 1, 2}, {1, 1, 0}) == doctest::Approx(1.0));
}

TEST_CASE("purity: asymmetric by construction") {
    const Partition a = {0, 0, 0, 1};
    const Partition b = {0, 1, 2, 3};
    CHECK(purity(a, b) != purity(b, a));
    CHECK(purity(b, a) == doctest::Approx(1.0));
}

TEST_CASE("pairwise_f_score: spot cases") {
    CHECK(pairwise_f_score({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    CHECK(pairwise_f_score({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0));
    const Partition pred = {0, 0, 1, 1, 2};
    const Partition truth = {0, 0, 0, 1, 1};
    CHECK(pairwise_f_score(pred, truth) ==
          doctest::Approx(oracle_pairwise_f(pred, truth)).epsilon(1e-12));
}

TEST_CASE("metrics: 200 random partition pairs equal the pair-enumeration oracles") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(29);
        const int ka = 1 + static_cast<int>(rng.uniform_index(5));
        const int kb = 1 + static_cast<int>(rng.uniform_index(5));
        const Partition a = random_partition(n, ka, rng);
        const Partition b = random_partition(n, kb, rng);
        CHECK(ari(a, b) == doctest::Approx(oracle_rand_index_adjusted(a, b)).epsilon(1e-12));
        CHECK(pairwise_f_score(a, b) == doctest::Approx(oracle_pairwise_f(a, b)).epsilon(1e-12));
        CHECK(purity(a, b) == doctest::Approx(oracle_purity(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("metrics: symmetry and relabel invariance") {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 5 + rng.uniform_index(20);
        const Partition a = random_partition(n, 4, rng);
        const Partition b = random_partition(n, 3, rng);
        CHECK(ari(a, b) == doctest::Approx(ari(b, a)).epsilon(1e-12));
        CHECK(pairwise_f_score(a, b) == doctest::Approx(pairwise_f_score(b, a)).epsilon(1e-12));

        // permute labels of either argument
        Partition a_relabel = a;
        for (int& c : a_relabel) c = (c + 7) * 13 % 101;
        CHECK(ari(a_relabel, b) == doctest::Approx(ari(a, b)).epsilon(1e-12));
        CHECK(purity(a_relabel, b) == doctest::Approx(purity(a, b)).epsilon(1e-12));
        CHECK(pairwise_f_score(a_relabel, b) ==
              doctest::Approx(pairwise_f_score(a, b)).epsilon(1e-12));
    }
}

namespace {

EmbeddingMatrix fake_embeddings(int n_wells, int per_well, int dim, Rng& rng) {
    EmbeddingMatrix e;
    e.vectors.resize(n_wells * per_well, dim);
    for (int w = 0; w < n_wells; ++w) {
        for (int k = 0; k < per_well; ++k) {
            const Eigen::Index row = w * per_well + k;
            for (int j = 0; j < dim; ++j) {
                e.vectors(row, j) = static_cast<double>(w) + 0.01 * rng.normal();
            }
            EmbeddingRow p;
            p.well_id = "W" + std::to_string(w);
            p.well_index = w;
            p.geo_class = w % 2;
            p.depth_start = 100.0 * w + k;
            p.depth_end = p.depth_start + 1;
            e.provenance.push_back(p);
        }
    }
    return e;
}

}  // namespace

TEST_CASE("build_pair_dataset: balance and feature layout") {
    Rng data_rng(5);
    const EmbeddingMatrix e = fake_embeddings(5, 6, 8, data_rng);
    Rng rng(6);
    const PairDataset pairs = build_pair_dataset(e, 100, rng);
    REQUIRE(pairs.labels.size() == 100);
    CHECK(pairs.features.rows() == 100);
    CHECK(pairs.features.cols() == 24);
    const int positives = static_cast<int>(
        std::count(pairs.labels.begin(), pairs.labels.end(), 1));
    CHECK(positives == 50);
}

TEST_CASE("build_pair_dataset: identical rows zero the difference block") {
    EmbeddingMatrix e;
    e.vectors = Matrix::Ones(4, 3);
    for (int i = 0; i < 4; ++i) {
        EmbeddingRow p;
        p.well_id = i < 2 ? "A" : "B";
        p.well_index = i < 2 ? 0 : 1;
        e.provenance.push_back(p);
    }
    Rng rng(7);
    const PairDataset pairs = build_pair_dataset(e, 10, rng);
    CHECK(pairs.features.block(0, 6, 10, 3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_pair_dataset: labels verified against a provenance oracle") {
    Rng data_rng(8);
    EmbeddingMatrix e = fake_embeddings(6, 5, 4, data_rng);
    // make every embedding row unique so features identify the source row
    for (Eigen::Index i = 0; i < e.vectors.rows(); ++i) {
        e.vectors(i, 0) = static_cast<double>(i);
    }
    Rng rng(9);
    const PairDataset pairs = build_pair_dataset(e, 1000, rng);
    for (int p = 0; p < 1000; ++p) {
        const int r1 = static_cast<int>(pairs.features(p, 0));
        const int r2 = static_cast<int>(pairs.features(p, 4));
        const bool same = e.provenance[static_cast<std::size_t>(r1)].well_id ==
                          e.provenance[static_cast<std::size_t>(r2)].well_id;
        CHECK(pairs.labels[static_cast<std::size_t>(p)] == (same ? 1 : 0));
        CHECK(r1 != r2);
    }
}

TEST_CASE("build_pair_dataset: needs two wells with two intervals each") {
    EmbeddingMatrix e;
    e.vectors = Matrix::Ones(3, 2);
    for (int i = 0; i < 3; ++i) {
        EmbeddingRow p;
        p.well_id = i < 2 ? "A" : "B";  // B has a single interval
        e.provenance.push_back(p);
    }
    Rng rng(10);
    CHECK_THROWS_AS((void)build_pair_dataset(e, 10, rng), ValidationError);
}

namespace {

struct BlobData {
    Matrix x;
    std::vector<int> y;
};

BlobData blobs(int per_class, int n_classes, int dim, double separation, Rng& rng) {
    BlobData d;
    d.x.resize(per_class * n_classes, dim);
    d.y.resize(static_cast<std::size_t>(per_class * n_classes));
    for (int c = 0; c < n_classes; ++c) {
        for (int i = 0; i < per_class; ++i) {
            const Eigen::Index row = c * per_class + i;
            for (int j = 0; j < dim; ++j) {
                d.x(row, j) = (j % n_classes == c ? separation : 0.0) + rng.normal();
            }
            d.y[static_cast<std::size_t>(row)] = c;
        }
    }
    return d;
}

}  // namespace

TEST_CASE("train_probe: separable blobs reach perfect held-out accuracy") {
    Rng rng(11);
    const BlobData d = blobs(120, 2, 8, 10.0, rng);
    CHECK(train_probe(d.x, d.y, ProbeKind::Linear, 0).accuracy == doctest::Approx(1.0));
    CHECK(train_probe(d.x, d.y, ProbeKind::FC3, 0).accuracy == doctest::Approx(1.0));
}

TEST_CASE("train_probe: shuffled labels sit at chance for 4 balanced classes") {
    Rng rng(12);
    BlobData d = blobs(1000, 4, 8, 6.0, rng);
    // destroy the signal: rotate labels by a seeded shuffle
    for (std::size_t i = d.y.size(); i > 1; --i) {
        std::swap(d.y[i - 1], d.y[rng.uniform_index(i)]);
    }
    const double acc = train_probe(d.x, d.y, ProbeKind::Linear, 1).accuracy;
    CHECK(acc == doctest::Approx(0.25).epsilon(0.2));  // 0.25 +- 0.05
    CHECK(std::abs(acc - 0.25) < 0.05);
}

TEST_CASE("train_probe: constant features predict the majority class") {
    const int n = 200;
    Matrix x = Matrix::Constant(n, 5, 3.14);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = (i % 5 == 0) ? 1 : 0;  // 20/80

    for (ProbeKind kind : {ProbeKind::Linear, ProbeKind::FC3}) {
        const ProbeResult r = train_probe(x, y, kind, 3);
        // majority class of the train rows
        std::map<int, int> train_counts;
        std::set<std::size_t> holdout(r.holdout_rows.begin(), r.holdout_rows.end());
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!holdout.count(i)) train_counts[y[i]] += 1;
        }
        int majority = 0, best = -1;
        for (const auto& [cls, count] : train_counts) {
            if (count > best) {
                best = count;
                majority = cls;
            }
        }
        double expected = 0.0;
        for (std::size_t i : r.holdout_rows) {
            if (y[i] == majority) expected += 1.0;
        }
        expected /= static_cast<double>(r.holdout_rows.size());
        CHECK(r.accuracy == doctest::Approx(expected));
        for (int pred : r.holdout_predictions) CHECK(pred == majority);
    }
}

TEST_CASE("train_probe: single-class training data is an error") {
    Matrix x = Matrix::Random(20, 3);
    std::vector<int> y(20, 7);
    CHECK_THROWS_WITH_AS((void)train_probe(x, y, ProbeKind::Linear, 0),
                         doctest::Contains("single-class"), ValidationError);
}

TEST_CASE("train_probe: grouped split keeps groups intact") {
    Rng rng(13);
    const int n = 120;
    Matrix x(n, 4);
    std::vector<int> y(n), groups(n);
    for (int i = 0; i < n; ++i) {
        groups[static_cast<std::size_t>(i)] = i / 10;  // 12 groups
        y[static_cast<std::size_t>(i)] = (i / 10) % 2;
        for (int j = 0; j < 4; ++j) {
            x(i, j) = (y[static_cast<std::size_t>(i)] == 0 ? -4.0 : 4.0) + rng.normal();
        }
    }
    const ProbeResult r = train_probe(x, y, ProbeKind::Linear, 5, &groups);
    // every held-out group is fully held out
    std::set<int> holdout_groups;
    for (std::size_t i : r.holdout_rows) holdout_groups.insert(groups[i]);
    std::set<std::size_t> holdout(r.holdout_rows.begin(), r.holdout_rows.end());
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        if (holdout_groups.count(groups[i])) CHECK(holdout.count(i) == 1);
    }
    CHECK(r.accuracy == doctest::Approx(1.0));
}
