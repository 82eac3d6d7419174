#include "logtwin/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace logtwin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// AR(1) smoothness coefficient; innovation scale keeps stationary std at 1.
constexpr double kArCoefficient = 0.9;

// Per-feature raw scales and baselines, roughly log-like units.
constexpr std::array<double, kFeatureCount> kScale = {0.03, 0.15, 15.0, 10.0};
constexpr std::array<double, kFeatureCount> kBase = {0.05, 2.45, 75.0, 90.0};
// Direction of the regime-mean ladder per feature; unit length overall so
// adjacent regime means sit exactly `regime_separation` apart.
constexpr std::array<double, kFeatureCount> kDirection = {0.5, -0.5, 0.5, -0.5};

constexpr double kBitSize = 8.5;
constexpr double kDepthStep = 0.1524;

}  // namespace

void SynthConfig::validate() const {
    if (n_wells < 1) throw ValidationError("synth.n_wells must be >= 1");
    if (samples_per_well < 4) throw ValidationError("synth.samples_per_well must be >= 4");
    if (n_regimes < 2) throw ValidationError("synth.n_regimes must be >= 2");
    if (regime_separation < 0.0) throw ValidationError("synth.regime_separation must be >= 0");
    if (missing_rate < 0.0 || missing_rate >= 1.0) {
        throw ValidationError("synth.missing_rate must be in [0, 1)");
    }
    if (sensor_error_rate < 0.0 || sensor_error_rate > 1.0) {
        throw ValidationError("synth.sensor_error_rate must be in [0, 1]");
    }
}

std::vector<WellLogTable> generate(const SynthConfig& cfg) {
    cfg.validate();
    const double innovation_std = std::sqrt(1.0 - kArCoefficient * kArCoefficient);
    const int block = std::max(2, cfg.samples_per_well / 4);  // formation block length

    std::vector<WellLogTable> tables;
    tables.reserve(static_cast<std::size_t>(cfg.n_wells));

    for (int w = 0; w < cfg.n_wells; ++w) {
        Rng rng = Rng::derive(cfg.seed, {0xA0, static_cast<std::uint64_t>(w)});
        const int regime = w % cfg.n_regimes;
        const int n = cfg.samples_per_well;

        WellLogTable t;
        char name[16];
        std::snprintf(name, sizeof(name), "W%03d", w);
        t.well_id = name;
        t.depth.resize(static_cast<std::size_t>(n));
        t.features.resize(n, kFeatureCount);
        t.present.resize(n, kFeatureCount);
        t.cali.resize(static_cast<std::size_t>(n));
        t.bs.resize(static_cast<std::size_t>(n));
        t.cali_present.assign(static_cast<std::size_t>(n), true);
        t.bs_present.assign(static_cast<std::size_t>(n), true);
        t.formation.resize(static_cast<std::size_t>(n));
        t.geo_class.assign(static_cast<std::size_t>(n), regime);

        std::array<double, kFeatureCount> ar{};
        for (int j = 0; j < kFeatureCount; ++j) ar[j] = rng.normal();

        const double depth0 = 1000.0 + 50.0 * static_cast<double>(w);
        for (int i = 0; i < n; ++i) {
            t.depth[static_cast<std::size_t>(i)] = depth0 + kDepthStep * static_cast<double>(i);
            for (int j = 0; j < kFeatureCount; ++j) {
                if (i > 0) {
                    ar[j] = kArCoefficient * ar[j] + innovation_std * rng.normal();
                }
                const double mean_sigma =
                    cfg.regime_separation * static_cast<double>(regime) * kDirection[j];
                t.features(i, j) = kBase[j] + kScale[j] * (mean_sigma + ar[j]);
                t.present(i, j) = true;
            }
            t.bs[static_cast<std::size_t>(i)] = kBitSize;
            const bool sensor_error = rng.uniform() < cfg.sensor_error_rate;
            if (sensor_error) {
                const double delta = 0.4 + 0.6 * rng.uniform();
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                t.cali[static_cast<std::size_t>(i)] = kBitSize + sign * delta;
            } else {
                double noise = 0.05 * rng.normal();
                noise = std::clamp(noise, -0.3, 0.3);
                t.cali[static_cast<std::size_t>(i)] = kBitSize + noise;
            }
            t.formation[static_cast<std::size_t>(i)] =
                (i / block) % 2 == 0 ? "FM_A" : "FM_B";
        }

        // Missingness over the four features, never wiping out a column.
        if (cfg.missing_rate > 0.0) {
            for (int j = 0; j < kFeatureCount; ++j) {
                int observed = n;
                for (int i = 0; i < n; ++i) {
                    if (rng.uniform() < cfg.missing_rate && observed > 1) {
                        t.features(i, j) = kNaN;
                        t.present(i, j) = false;
                        --observed;
                    }
                }
            }
        }
        t.validate();
        tables.push_back(std::move(t));
    }
    return tables;
}

}  // namespace logtwin
