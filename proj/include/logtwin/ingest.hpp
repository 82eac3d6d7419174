#pragma once

#include "logtwin/common.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace logtwin {

/// The four curves that feed the encoder, in canonical column order.
inline constexpr std::array<const char*, 4> kFeatureNames = {"DRHO", "DENS", "GR", "DTC"};
inline constexpr int kFeatureCount = 4;
inline constexpr int kGrColumn = 2;

/// CALI-BS deltas above this flag a sensor error (strict inequality).
inline constexpr double kCaliBsThreshold = 0.35;

/// Depth-ordered log curves for one well. Missing cells hold NaN and a
/// false entry in `present`.
struct WellLogTable {
    std::string well_id;
    std::vector<double> depth;                       // meters, strictly increasing
    Matrix features;                                 // n x 4, columns per kFeatureNames
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> present;  // n x 4
    std::vector<double> cali;                        // inches, NaN when absent
    std::vector<double> bs;                          // inches, NaN when absent
    std::vector<bool> cali_present;
    std::vector<bool> bs_present;
    std::vector<std::string> formation;              // "" when absent
    std::vector<int> geo_class;                      // -1 when absent

    std::size_t rows() const { return depth.size(); }

    /// Checks depth ordering and column-length consistency.
    void validate() const;
};

/// One encoder input: l consecutive depth steps of the 4 features.
struct Interval {
    Matrix values;          // l x 4, no missing entries
    std::string well_id;
    double depth_start = 0.0;
    double depth_end = 0.0;
    int well_index = -1;    // position of the well in the source collection
    int geo_class = -1;     // majority class over the window, -1 if unlabeled
};

/// Parses the log CSV (columns WELL, DEPT, DRHO, DENS, GR, DTC, optional
/// CALI, BS, FORMATION, GEO_CLASS) into one table per well, rows sorted
/// by depth. Empty cells become missing.
std::vector<WellLogTable> parse_log_csv(const std::string& path);
std::vector<WellLogTable> parse_log_csv(std::istream& in, const std::string& origin);

/// Writes tables back to the same CSV schema at full precision, so that
/// finite values round-trip bit-exactly.
void write_log_csv(const std::vector<WellLogTable>& tables, const std::string& path);
void write_log_csv(const std::vector<WellLogTable>& tables, std::ostream& out);

/// Forward fill per feature; cells before the first observation take the
/// nearest following value. A feature with no observations at all in a
/// well is an error. CALI/BS are left untouched.
WellLogTable fill_missing(const WellLogTable& table);

/// Drops rows where |CALI - BS| > 0.35. Rows lacking CALI or BS are kept.
WellLogTable drop_sensor_errors(const WellLogTable& table);

/// GR is z-scored per (well, formation) group; DRHO/DENS/DTC are z-scored
/// with dataset-wide statistics. Population std throughout.
std::vector<WellLogTable> normalize(const std::vector<WellLogTable>& tables);

/// Sliding windows of l rows starting at offsets 0, stride, 2*stride, ...
/// Wells shorter than l yield no intervals. geo_class is the majority
/// label over the window (ties to the lowest class index).
std::vector<Interval> extract_intervals(const WellLogTable& table, int l, int stride,
                                        int well_index = -1);
std::vector<Interval> extract_intervals(const std::vector<WellLogTable>& tables, int l,
                                        int stride);

}  // namespace logtwin
