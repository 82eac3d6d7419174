#include "logtwin/synth.hpp"

#include "logtwin/eval.hpp"
#include "logtwin/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace logtwin;

TEST_CASE("synth: clean config needs no filling and no dropping") {
    SynthConfig cfg;
    cfg.n_wells = 4;
    cfg.samples_per_well = 200;
    cfg.missing_rate = 0.0;
    cfg.sensor_error_rate = 0.0;
    cfg.seed = 1;
    const auto tables = generate(cfg);
    REQUIRE(tables.size() == 4);
    for (const WellLogTable& t : tables) {
        CHECK(t.present.all());
        const WellLogTable filled = fill_missing(t);
        CHECK(filled.features == t.features);
        const WellLogTable kept = drop_sensor_errors(filled);
        CHECK(kept.rows() == t.rows());
    }
}

TEST_CASE("synth: sensor error rate plants a binomial share of violations") {
    SynthConfig cfg;
    cfg.n_wells = 1;
    cfg.samples_per_well = 1000;
    cfg.missing_rate = 0.0;
    cfg.sensor_error_rate = 0.05;
    cfg.seed = 2;
    const auto tables = generate(cfg);
    int violations = 0;
    for (std::size_t i = 0; i < tables[0].rows(); ++i) {
        if (std::abs(tables[0].cali[i] - tables[0].bs[i]) > kCaliBsThreshold) ++violations;
    }
    // binomial(1000, 0.05): mean 50, std ~6.9; 3 sigma window
    CHECK(violations > 50 - 21);
    CHECK(violations < 50 + 21);
}

TEST_CASE("synth: identical seeds give byte-identical CSV output") {
    SynthConfig cfg;
    cfg.n_wells = 3;
    cfg.samples_per_well = 150;
    cfg.seed = 3;
    std::ostringstream a, b;
    write_log_csv(generate(cfg), a);
    write_log_csv(generate(cfg), b);
    CHECK(a.str() == b.str());
    cfg.seed = 4;
    std::ostringstream c;
    write_log_csv(generate(cfg), c);
    CHECK(a.str() != c.str());
}

TEST_CASE("synth: generated tables pass the full preprocessing pipeline") {
    SynthConfig cfg;
    cfg.n_wells = 6;
    cfg.samples_per_well = 300;
    cfg.missing_rate = 0.1;
    cfg.sensor_error_rate = 0.02;
    cfg.seed = 5;
    const auto tables = generate(cfg);
    const auto intervals = preprocess_tables(tables, 100, 100);
    CHECK(!intervals.empty());
    for (const Interval& iv : intervals) {
        CHECK(iv.values.rows() == 100);
        CHECK(iv.values.cols() == kFeatureCount);
        CHECK(iv.values.allFinite());
        CHECK(iv.geo_class >= 0);
        CHECK(iv.geo_class < cfg.n_regimes);
    }
}

TEST_CASE("synth: separation 6 makes per-interval feature means linearly separable") {
    SynthConfig cfg;
    cfg.n_wells = 16;
    cfg.samples_per_well = 500;
    cfg.n_regimes = 4;
    cfg.regime_separation = 6.0;
    cfg.missing_rate = 0.05;
    cfg.sensor_error_rate = 0.02;
    cfg.seed = 6;
    const auto intervals = preprocess_tables(generate(cfg), 100, 100);

    Matrix means(static_cast<Eigen::Index>(intervals.size()), kFeatureCount);
    std::vector<int> labels(intervals.size());
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        means.row(static_cast<Eigen::Index>(i)) = intervals[i].values.colwise().mean();
        labels[i] = intervals[i].geo_class;
    }
    const double acc = train_probe(means, labels, ProbeKind::Linear, 0).accuracy;
    CHECK(acc >= 0.95);
}
