#pragma once

#include "logtwin/common.hpp"
#include "logtwin/ingest.hpp"

#include <vector>

namespace logtwin {

/// Seeded synthetic well-log generator with planted regime classes,
/// missing cells, and CALI/BS sensor errors.
struct SynthConfig {
    int n_wells = 40;
    int samples_per_well = 1000;
    int n_regimes = 4;
    double regime_separation = 6.0;  // adjacent-class mean distance, in within-class stds
    double missing_rate = 0.10;
    double sensor_error_rate = 0.02;
    std::uint64_t seed = 0;

    void validate() const;
};

std::vector<WellLogTable> generate(const SynthConfig& cfg);

}  // namespace logtwin
