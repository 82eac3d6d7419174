#include "logtwin/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace logtwin {

using nlohmann::json;

namespace {

void format_double(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ValidationError(where + ": bad number '" + s + "'");
    }
    return v;
}

long parse_long(const std::string& s, const std::string& where) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ValidationError(where + ": bad integer '" + s + "'");
    }
    return v;
}

std::vector<std::string> split_line(const std::string& line) {
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

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("missing input file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    return out;
}

}  // namespace

void write_intervals_csv(const std::vector<Interval>& intervals, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "INTERVAL,WELL,WELL_INDEX,GEO_CLASS,DEPTH_START,DEPTH_END,STEP,DRHO,DENS,GR,DTC\n";
    for (std::size_t id = 0; id < intervals.size(); ++id) {
        const Interval& iv = intervals[id];
        for (Eigen::Index t = 0; t < iv.values.rows(); ++t) {
            out << id << ',' << iv.well_id << ',' << iv.well_index << ',' << iv.geo_class << ',';
            format_double(out, iv.depth_start);
            out << ',';
            format_double(out, iv.depth_end);
            out << ',' << t;
            for (Eigen::Index j = 0; j < iv.values.cols(); ++j) {
                out << ',';
                format_double(out, iv.values(t, j));
            }
            out << '\n';
        }
    }
}

std::vector<Interval> read_intervals_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty intervals file");

    std::vector<Interval> intervals;
    std::vector<std::vector<std::array<double, kFeatureCount>>> rows_per_interval;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != 7 + kFeatureCount) {
            throw ValidationError(path + ": line " + std::to_string(line_no) +
                                  ": wrong cell count");
        }
        const std::string where = path + ": line " + std::to_string(line_no);
        const std::size_t id = static_cast<std::size_t>(parse_long(cells[0], where));
        if (id == intervals.size()) {
            Interval iv;
            iv.well_id = cells[1];
            iv.well_index = static_cast<int>(parse_long(cells[2], where));
            iv.geo_class = static_cast<int>(parse_long(cells[3], where));
            iv.depth_start = parse_double(cells[4], where);
            iv.depth_end = parse_double(cells[5], where);
            intervals.push_back(std::move(iv));
            rows_per_interval.emplace_back();
        } else if (id > intervals.size()) {
            throw ValidationError(where + ": interval ids must be consecutive");
        }
        const long step = parse_long(cells[6], where);
        if (step != static_cast<long>(rows_per_interval[id].size())) {
            throw ValidationError(where + ": steps must be consecutive within an interval");
        }
        std::array<double, kFeatureCount> row{};
        for (int j = 0; j < kFeatureCount; ++j) {
            row[static_cast<std::size_t>(j)] =
                parse_double(cells[static_cast<std::size_t>(7 + j)], where);
        }
        rows_per_interval[id].push_back(row);
    }
    if (intervals.empty()) throw ValidationError(path + ": no intervals");

    const std::size_t l = rows_per_interval.front().size();
    for (std::size_t id = 0; id < intervals.size(); ++id) {
        const auto& rows = rows_per_interval[id];
        if (rows.size() != l) {
            throw ValidationError(path + ": interval " + std::to_string(id) +
                                  " has inconsistent length");
        }
        Matrix values(static_cast<Eigen::Index>(l), kFeatureCount);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            for (int j = 0; j < kFeatureCount; ++j) {
                values(static_cast<Eigen::Index>(t), j) = rows[t][static_cast<std::size_t>(j)];
            }
        }
        intervals[id].values = std::move(values);
    }
    return intervals;
}

void write_embeddings_csv(const EmbeddingMatrix& embeddings, const std::string& path) {
    embeddings.validate();
    std::ofstream out = open_output(path);
    out << "ID,WELL,WELL_INDEX,GEO_CLASS,DEPTH_START,DEPTH_END";
    for (Eigen::Index j = 0; j < embeddings.vectors.cols(); ++j) out << ",E" << j;
    out << '\n';
    for (Eigen::Index i = 0; i < embeddings.vectors.rows(); ++i) {
        const EmbeddingRow& p = embeddings.provenance[static_cast<std::size_t>(i)];
        out << i << ',' << p.well_id << ',' << p.well_index << ',' << p.geo_class << ',';
        format_double(out, p.depth_start);
        out << ',';
        format_double(out, p.depth_end);
        for (Eigen::Index j = 0; j < embeddings.vectors.cols(); ++j) {
            out << ',';
            format_double(out, embeddings.vectors(i, j));
        }
        out << '\n';
    }
}

EmbeddingMatrix read_embeddings_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty embeddings file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_line(line);
    if (header.size() < 7 || header[0] != "ID") {
        throw ValidationError(path + ": not an embeddings file");
    }
    const std::size_t dim = header.size() - 6;

    std::vector<EmbeddingRow> provenance;
    std::vector<std::vector<double>> vectors;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        const std::string where = path + ": line " + std::to_string(line_no);
        if (cells.size() != header.size()) throw ValidationError(where + ": wrong cell count");
        EmbeddingRow row;
        row.well_id = cells[1];
        row.well_index = static_cast<int>(parse_long(cells[2], where));
        row.geo_class = static_cast<int>(parse_long(cells[3], where));
        row.depth_start = parse_double(cells[4], where);
        row.depth_end = parse_double(cells[5], where);
        std::vector<double> vec(dim);
        for (std::size_t j = 0; j < dim; ++j) vec[j] = parse_double(cells[6 + j], where);
        provenance.push_back(std::move(row));
        vectors.push_back(std::move(vec));
    }
    if (vectors.empty()) throw ValidationError(path + ": no embeddings");

    EmbeddingMatrix out;
    out.vectors.resize(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            out.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                vectors[i][j];
        }
    }
    out.provenance = std::move(provenance);
    out.validate();
    return out;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "epoch,train_loss,val_loss,lr\n";
    for (const EpochStats& e : history) {
        out << e.epoch << ',';
        format_double(out, e.train_loss);
        out << ',';
        format_double(out, e.val_loss);
        out << ',';
        format_double(out, e.lr);
        out << '\n';
    }
}

std::vector<Interval> preprocess_tables(const std::vector<WellLogTable>& tables, int l,
                                        int stride) {
    std::vector<WellLogTable> cleaned;
    cleaned.reserve(tables.size());
    for (const WellLogTable& t : tables) {
        cleaned.push_back(drop_sensor_errors(fill_missing(t)));
    }
    return extract_intervals(normalize(cleaned), l, stride);
}

void run_synth(const RunConfig& cfg, const std::string& out_csv) {
    write_log_csv(generate(cfg.synth_config()), out_csv);
}

void run_preprocess(const RunConfig& cfg, const std::string& in_csv,
                    const std::string& out_intervals) {
    const std::vector<WellLogTable> tables = parse_log_csv(in_csv);
    const std::vector<Interval> intervals =
        preprocess_tables(tables, cfg.interval_length, cfg.stride);
    if (intervals.empty()) {
        throw ValidationError("preprocess: no intervals produced (wells shorter than l?)");
    }
    write_intervals_csv(intervals, out_intervals);
}

namespace {

json checkpoint_meta(const RunConfig& cfg, const TrainResult& result) {
    const TrainConfig tc = cfg.to_train_config();
    json meta;
    meta["method"] = cfg.method_name;
    meta["hidden"] = tc.dims.hidden;
    meta["input"] = tc.dims.input;
    meta["seed"] = cfg.seed;
    meta["best_epoch"] = result.best_epoch;
    meta["epochs_run"] = result.history.size();
    meta["val_wells"] = result.val_wells;
    return meta;
}

}  // namespace

TrainResult run_train(const RunConfig& cfg, const std::string& intervals_csv,
                      const std::string& checkpoint_path, const std::string& history_path) {
    const std::vector<Interval> intervals = read_intervals_csv(intervals_csv);
    TrainConfig tc = cfg.to_train_config();
    tc.interval_length = static_cast<int>(intervals.front().values.rows());
    TrainResult result = train(intervals, tc);
    save_checkpoint(checkpoint_path, result.params, checkpoint_meta(cfg, result).dump());
    write_history_csv(result.history, history_path);
    return result;
}

EmbeddingMatrix embed_intervals(const EncoderParams& params,
                                const std::vector<Interval>& intervals) {
    if (intervals.empty()) throw ValidationError("embed: no intervals");
    EmbeddingMatrix out;
    const int hidden = params.lstm.hidden();
    out.vectors.resize(static_cast<Eigen::Index>(intervals.size()), hidden);
    out.provenance.resize(intervals.size());

    constexpr std::size_t kChunk = 256;
    for (std::size_t pos = 0; pos < intervals.size(); pos += kChunk) {
        const std::size_t end = std::min(pos + kChunk, intervals.size());
        std::vector<Matrix> batch;
        batch.reserve(end - pos);
        for (std::size_t i = pos; i < end; ++i) batch.push_back(intervals[i].values);
        const Matrix h = encode_batch(params, batch);
        for (std::size_t i = pos; i < end; ++i) {
            out.vectors.row(static_cast<Eigen::Index>(i)) =
                h.row(static_cast<Eigen::Index>(i - pos));
            const Interval& iv = intervals[i];
            out.provenance[i] = {iv.well_id, iv.depth_start, iv.depth_end, iv.well_index,
                                 iv.geo_class};
        }
    }
    return out;
}

void run_embed(const RunConfig& cfg, const std::string& checkpoint_path,
               const std::string& intervals_csv, const std::string& out_csv) {
    (void)cfg;
    const EncoderParams params = load_checkpoint(checkpoint_path);
    const std::vector<Interval> intervals = read_intervals_csv(intervals_csv);
    write_embeddings_csv(embed_intervals(params, intervals), out_csv);
}

namespace {

struct MetricsWriter {
    std::ofstream out;

    explicit MetricsWriter(const std::string& path) : out(open_output(path)) {
        out << "task,probe,metric,value,seed\n";
    }

    void row(const std::string& task, const std::string& probe, const std::string& metric,
             double value, std::uint64_t seed) {
        out << task << ',' << probe << ',' << metric << ',';
        format_double(out, value);
        out << ',' << seed << '\n';
    }
};

ProbeKind parse_probe(const std::string& name) {
    return name == "linear" ? ProbeKind::Linear : ProbeKind::FC3;
}

}  // namespace

void run_eval_cluster(const RunConfig& cfg, const std::string& embeddings_csv,
                      const std::string& metrics_csv, const std::string& assignments_csv) {
    const EmbeddingMatrix embeddings = read_embeddings_csv(embeddings_csv);

    std::vector<std::size_t> labeled_rows;
    std::set<int> classes;
    for (std::size_t i = 0; i < embeddings.provenance.size(); ++i) {
        if (embeddings.provenance[i].geo_class >= 0) {
            labeled_rows.push_back(i);
            classes.insert(embeddings.provenance[i].geo_class);
        }
    }
    if (labeled_rows.empty()) {
        throw ValidationError("eval-cluster: no ground-truth classes in the embeddings file");
    }
    const int k = cfg.n_clusters > 0 ? cfg.n_clusters : static_cast<int>(classes.size());

    const Partition pred = agglomerative_cluster(embeddings.vectors, k);

    Partition pred_labeled, truth_labeled;
    for (std::size_t i : labeled_rows) {
        pred_labeled.push_back(pred[i]);
        truth_labeled.push_back(embeddings.provenance[i].geo_class);
    }

    MetricsWriter metrics(metrics_csv);
    metrics.row("cluster", "agglomerative", "ari", ari(pred_labeled, truth_labeled), cfg.seed);
    metrics.row("cluster", "agglomerative", "purity", purity(pred_labeled, truth_labeled),
                cfg.seed);
    metrics.row("cluster", "agglomerative", "f_score",
                pairwise_f_score(pred_labeled, truth_labeled), cfg.seed);

    std::ofstream assignments = open_output(assignments_csv);
    assignments << "id,cluster,truth\n";
    for (std::size_t i = 0; i < pred.size(); ++i) {
        assignments << i << ',' << pred[i] << ',' << embeddings.provenance[i].geo_class << '\n';
    }
}

void run_eval_probe(const RunConfig& cfg, const std::string& embeddings_csv,
                    const std::string& metrics_csv) {
    const EmbeddingMatrix embeddings = read_embeddings_csv(embeddings_csv);
    MetricsWriter metrics(metrics_csv);

    for (const std::string& task : cfg.tasks) {
        for (const std::string& probe_name : cfg.probes) {
            const ProbeKind kind = parse_probe(probe_name);
            for (std::uint64_t seed : cfg.eval_seeds) {
                double accuracy = 0.0;
                if (task == "binary") {
                    accuracy = binary_same_well_accuracy(embeddings, cfg.n_pairs,
                                                         cfg.holdout_fraction, kind, seed);
                } else {
                    std::vector<int> labels(embeddings.provenance.size());
                    std::vector<int> groups(embeddings.provenance.size());
                    for (std::size_t i = 0; i < embeddings.provenance.size(); ++i) {
                        const EmbeddingRow& row = embeddings.provenance[i];
                        labels[i] = task == "geo" ? row.geo_class : row.well_index;
                        groups[i] = row.well_index;
                    }
                    if (task == "geo") {
                        for (int label : labels) {
                            if (label < 0) {
                                throw ValidationError(
                                    "eval-probe: geo task needs GEO_CLASS labels on every row");
                            }
                        }
                    }
                    // Predicting the well id forbids a well-level holdout.
                    const std::vector<int>* group_ptr = task == "geo" ? &groups : nullptr;
                    accuracy = train_probe(embeddings.vectors, labels, kind, seed, group_ptr,
                                           cfg.holdout_fraction)
                                   .accuracy;
                }
                metrics.row(task, probe_name, "accuracy", accuracy, seed);
            }
        }
    }
}

}  // namespace logtwin
