#include "logtwin/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace logtwin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_double_cell(const std::string& raw, const std::string& origin, std::size_t line_no,
                         const std::string& column) {
    std::string s = trim(raw);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ValidationError(origin + ": line " + std::to_string(line_no) +
                              ": unparsable numeric cell '" + raw + "' in column " + column);
    }
    return value;
}

long parse_int_cell(const std::string& raw, const std::string& origin, std::size_t line_no,
                    const std::string& column) {
    std::string s = trim(raw);
    long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ValidationError(origin + ": line " + std::to_string(line_no) +
                              ": unparsable integer cell '" + raw + "' in column " + column);
    }
    return value;
}

void format_double(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

// Raw row as read from file, before grouping by well.
struct RawRow {
    double depth;
    std::array<double, kFeatureCount> feat;
    std::array<bool, kFeatureCount> feat_present;
    double cali, bs;
    bool cali_present, bs_present;
    std::string formation;
    int geo_class;
};

}  // namespace

void WellLogTable::validate() const {
    const std::size_t n = rows();
    if (features.rows() != static_cast<Eigen::Index>(n) || features.cols() != kFeatureCount ||
        present.rows() != static_cast<Eigen::Index>(n) || present.cols() != kFeatureCount ||
        cali.size() != n || bs.size() != n || cali_present.size() != n ||
        bs_present.size() != n || formation.size() != n || geo_class.size() != n) {
        throw ValidationError("well " + well_id + ": inconsistent column lengths");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(depth[i] > depth[i - 1])) {
            throw ValidationError("well " + well_id + ": depth not strictly increasing at row " +
                                  std::to_string(i));
        }
    }
}

std::vector<WellLogTable> parse_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open log CSV: " + path);
    }
    return parse_log_csv(in, path);
}

std::vector<WellLogTable> parse_log_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(origin + ": empty file, header row required");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line);
    std::unordered_map<std::string, int> col_index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        col_index[trim(header[i])] = static_cast<int>(i);
    }
    auto find_col = [&](const std::string& name) -> int {
        auto it = col_index.find(name);
        return it == col_index.end() ? -1 : it->second;
    };

    const int c_well = find_col("WELL");
    const int c_dept = find_col("DEPT");
    std::array<int, kFeatureCount> c_feat{};
    for (int j = 0; j < kFeatureCount; ++j) c_feat[j] = find_col(kFeatureNames[j]);

    for (const auto& [name, col] : std::initializer_list<std::pair<const char*, int>>{
             {"WELL", c_well}, {"DEPT", c_dept}, {"DRHO", c_feat[0]},
             {"DENS", c_feat[1]}, {"GR", c_feat[2]}, {"DTC", c_feat[3]}}) {
        if (col < 0) {
            throw ValidationError(origin + ": missing mandatory column " + name);
        }
    }
    const int c_cali = find_col("CALI");
    const int c_bs = find_col("BS");
    const int c_formation = find_col("FORMATION");
    const int c_geo = find_col("GEO_CLASS");

    // Wells keep first-appearance order so a write/parse round trip is stable.
    std::vector<std::string> well_order;
    std::unordered_map<std::string, std::vector<RawRow>> rows_by_well;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ValidationError(origin + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " cells, got " +
                                  std::to_string(cells.size()));
        }
        auto cell = [&](int col) -> std::string {
            return col >= 0 ? trim(cells[static_cast<std::size_t>(col)]) : std::string();
        };

        const std::string well = cell(c_well);
        if (well.empty()) {
            throw ValidationError(origin + ": line " + std::to_string(line_no) +
                                  ": empty WELL cell");
        }
        RawRow row{};
        row.depth = parse_double_cell(cells[static_cast<std::size_t>(c_dept)], origin, line_no,
                                      "DEPT");

        for (int j = 0; j < kFeatureCount; ++j) {
            const std::string raw = cell(c_feat[j]);
            if (raw.empty()) {
                row.feat[j] = kNaN;
                row.feat_present[j] = false;
            } else {
                row.feat[j] = parse_double_cell(raw, origin, line_no, kFeatureNames[j]);
                row.feat_present[j] = true;
            }
        }
        auto optional_double = [&](int col, double& value, bool& present_flag,
                                   const char* name) {
            const std::string raw = cell(col);
            if (col < 0 || raw.empty()) {
                value = kNaN;
                present_flag = false;
            } else {
                value = parse_double_cell(raw, origin, line_no, name);
                present_flag = true;
            }
        };
        optional_double(c_cali, row.cali, row.cali_present, "CALI");
        optional_double(c_bs, row.bs, row.bs_present, "BS");
        row.formation = cell(c_formation);
        const std::string geo_raw = cell(c_geo);
        row.geo_class =
            geo_raw.empty() ? -1
                            : static_cast<int>(parse_int_cell(geo_raw, origin, line_no,
                                                              "GEO_CLASS"));

        auto it = rows_by_well.find(well);
        if (it == rows_by_well.end()) {
            well_order.push_back(well);
            it = rows_by_well.emplace(well, std::vector<RawRow>{}).first;
        }
        it->second.push_back(std::move(row));
    }

    std::vector<WellLogTable> tables;
    tables.reserve(well_order.size());
    for (const std::string& well : well_order) {
        auto& raw_rows = rows_by_well[well];
        std::stable_sort(raw_rows.begin(), raw_rows.end(),
                         [](const RawRow& a, const RawRow& b) { return a.depth < b.depth; });
        for (std::size_t i = 1; i < raw_rows.size(); ++i) {
            if (raw_rows[i].depth == raw_rows[i - 1].depth) {
                throw ValidationError(origin + ": duplicate (WELL, DEPT) = (" + well + ", " +
                                      std::to_string(raw_rows[i].depth) + ")");
            }
        }
        const std::size_t n = raw_rows.size();
        WellLogTable t;
        t.well_id = well;
        t.depth.resize(n);
        t.features.resize(static_cast<Eigen::Index>(n), kFeatureCount);
        t.present.resize(static_cast<Eigen::Index>(n), kFeatureCount);
        t.cali.resize(n);
        t.bs.resize(n);
        t.cali_present.resize(n);
        t.bs_present.resize(n);
        t.formation.resize(n);
        t.geo_class.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const RawRow& r = raw_rows[i];
            t.depth[i] = r.depth;
            for (int j = 0; j < kFeatureCount; ++j) {
                t.features(static_cast<Eigen::Index>(i), j) = r.feat[j];
                t.present(static_cast<Eigen::Index>(i), j) = r.feat_present[j];
            }
            t.cali[i] = r.cali;
            t.bs[i] = r.bs;
            t.cali_present[i] = r.cali_present;
            t.bs_present[i] = r.bs_present;
            t.formation[i] = r.formation;
            t.geo_class[i] = r.geo_class;
        }
        t.validate();
        tables.push_back(std::move(t));
    }
    return tables;
}

void write_log_csv(const std::vector<WellLogTable>& tables, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open for writing: " + path);
    }
    write_log_csv(tables, out);
}

void write_log_csv(const std::vector<WellLogTable>& tables, std::ostream& out) {
    out << "WELL,DEPT,DRHO,DENS,GR,DTC,CALI,BS,FORMATION,GEO_CLASS\n";
    for (const WellLogTable& t : tables) {
        for (std::size_t i = 0; i < t.rows(); ++i) {
            out << t.well_id << ',';
            format_double(out, t.depth[i]);
            for (int j = 0; j < kFeatureCount; ++j) {
                out << ',';
                if (t.present(static_cast<Eigen::Index>(i), j)) {
                    format_double(out, t.features(static_cast<Eigen::Index>(i), j));
                }
            }
            out << ',';
            if (t.cali_present[i]) format_double(out, t.cali[i]);
            out << ',';
            if (t.bs_present[i]) format_double(out, t.bs[i]);
            out << ',' << t.formation[i] << ',';
            if (t.geo_class[i] >= 0) out << t.geo_class[i];
            out << '\n';
        }
    }
}

WellLogTable fill_missing(const WellLogTable& table) {
    table.validate();
    WellLogTable t = table;
    const Eigen::Index n = static_cast<Eigen::Index>(t.rows());
    for (int j = 0; j < kFeatureCount; ++j) {
        bool any = false;
        for (Eigen::Index i = 0; i < n; ++i) any |= t.present(i, j);
        if (!any && n > 0) {
            throw ValidationError("well " + t.well_id + ": feature " + kFeatureNames[j] +
                                  " has no observed values; cannot fill");
        }
        // Forward fill, then backward-fill the leading gap.
        double last = kNaN;
        bool have_last = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (t.present(i, j)) {
                last = t.features(i, j);
                have_last = true;
            } else if (have_last) {
                t.features(i, j) = last;
                t.present(i, j) = true;
            }
        }
        Eigen::Index first_obs = 0;
        while (first_obs < n && !t.present(first_obs, j)) ++first_obs;
        for (Eigen::Index i = 0; i < first_obs; ++i) {
            t.features(i, j) = t.features(first_obs, j);
            t.present(i, j) = true;
        }
    }
    return t;
}

WellLogTable drop_sensor_errors(const WellLogTable& table) {
    table.validate();
    std::vector<std::size_t> keep;
    keep.reserve(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i) {
        const bool flagged = table.cali_present[i] && table.bs_present[i] &&
                             std::abs(table.cali[i] - table.bs[i]) > kCaliBsThreshold;
        if (!flagged) keep.push_back(i);
    }
    WellLogTable t;
    t.well_id = table.well_id;
    const std::size_t m = keep.size();
    t.depth.resize(m);
    t.features.resize(static_cast<Eigen::Index>(m), kFeatureCount);
    t.present.resize(static_cast<Eigen::Index>(m), kFeatureCount);
    t.cali.resize(m);
    t.bs.resize(m);
    t.cali_present.resize(m);
    t.bs_present.resize(m);
    t.formation.resize(m);
    t.geo_class.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = keep[k];
        t.depth[k] = table.depth[i];
        t.features.row(static_cast<Eigen::Index>(k)) =
            table.features.row(static_cast<Eigen::Index>(i));
        t.present.row(static_cast<Eigen::Index>(k)) =
            table.present.row(static_cast<Eigen::Index>(i));
        t.cali[k] = table.cali[i];
        t.bs[k] = table.bs[i];
        t.cali_present[k] = table.cali_present[i];
        t.bs_present[k] = table.bs_present[i];
        t.formation[k] = table.formation[i];
        t.geo_class[k] = table.geo_class[i];
    }
    return t;
}

std::vector<WellLogTable> normalize(const std::vector<WellLogTable>& tables) {
    for (const WellLogTable& t : tables) {
        t.validate();
        if (!t.present.all()) {
            throw ValidationError("well " + t.well_id +
                                  ": missing values present; run fill_missing first");
        }
    }

    std::vector<WellLogTable> out = tables;

    // Global z-score for every feature except GR.
    for (int j = 0; j < kFeatureCount; ++j) {
        if (j == kGrColumn) continue;
        double sum = 0.0;
        std::size_t n = 0;
        for (const WellLogTable& t : out) {
            sum += t.features.col(j).sum();
            n += t.rows();
        }
        if (n == 0) {
            throw ValidationError("normalize: dataset has no rows");
        }
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (const WellLogTable& t : out) {
            sq += (t.features.col(j).array() - mean).square().sum();
        }
        const double std_dev = std::sqrt(sq / static_cast<double>(n));
        if (std_dev == 0.0) {
            throw ValidationError(std::string("normalize: feature ") + kFeatureNames[j] +
                                  " is constant over the dataset");
        }
        for (WellLogTable& t : out) {
            t.features.col(j) = (t.features.col(j).array() - mean) / std_dev;
        }
    }

    // GR per (well, formation) group.
    for (WellLogTable& t : out) {
        std::map<std::string, std::vector<Eigen::Index>> groups;
        for (std::size_t i = 0; i < t.rows(); ++i) {
            groups[t.formation[i]].push_back(static_cast<Eigen::Index>(i));
        }
        for (const auto& [formation, idx] : groups) {
            if (idx.size() < 2) {
                throw ValidationError("normalize: GR group (well " + t.well_id + ", formation '" +
                                      formation + "') has fewer than 2 rows");
            }
            double sum = 0.0;
            for (Eigen::Index i : idx) sum += t.features(i, kGrColumn);
            const double mean = sum / static_cast<double>(idx.size());
            double sq = 0.0;
            for (Eigen::Index i : idx) {
                const double d = t.features(i, kGrColumn) - mean;
                sq += d * d;
            }
            const double std_dev = std::sqrt(sq / static_cast<double>(idx.size()));
            if (std_dev == 0.0) {
                throw ValidationError("normalize: GR group (well " + t.well_id + ", formation '" +
                                      formation + "') has zero variance");
            }
            for (Eigen::Index i : idx) {
                t.features(i, kGrColumn) = (t.features(i, kGrColumn) - mean) / std_dev;
            }
        }
    }
    return out;
}

std::vector<Interval> extract_intervals(const WellLogTable& table, int l, int stride,
                                        int well_index) {
    if (l < 2) throw ValidationError("extract_intervals: l must be >= 2");
    if (stride < 1) throw ValidationError("extract_intervals: stride must be >= 1");
    table.validate();
    if (!table.present.all()) {
        throw ValidationError("well " + table.well_id +
                              ": missing values present; preprocessing incomplete");
    }
    std::vector<Interval> intervals;
    const std::size_t n = table.rows();
    if (n < static_cast<std::size_t>(l)) return intervals;
    for (std::size_t start = 0; start + static_cast<std::size_t>(l) <= n;
         start += static_cast<std::size_t>(stride)) {
        Interval iv;
        iv.values = table.features.middleRows(static_cast<Eigen::Index>(start), l);
        iv.well_id = table.well_id;
        iv.depth_start = table.depth[start];
        iv.depth_end = table.depth[start + static_cast<std::size_t>(l) - 1];
        iv.well_index = well_index;

        std::map<int, int> counts;
        for (std::size_t i = start; i < start + static_cast<std::size_t>(l); ++i) {
            if (table.geo_class[i] >= 0) ++counts[table.geo_class[i]];
        }
        int best_class = -1;
        int best_count = 0;
        for (const auto& [cls, count] : counts) {
            if (count > best_count) {  // map order breaks ties toward the lowest class
                best_count = count;
                best_class = cls;
            }
        }
        iv.geo_class = best_class;
        intervals.push_back(std::move(iv));
    }
    return intervals;
}

std::vector<Interval> extract_intervals(const std::vector<WellLogTable>& tables, int l,
                                        int stride) {
    std::vector<Interval> all;
    for (std::size_t w = 0; w < tables.size(); ++w) {
        std::vector<Interval> ivs = extract_intervals(tables[w], l, stride, static_cast<int>(w));
        all.insert(all.end(), std::make_move_iterator(ivs.begin()),
                   std::make_move_iterator(ivs.end()));
    }
    return all;
}

}  // namespace logtwin
