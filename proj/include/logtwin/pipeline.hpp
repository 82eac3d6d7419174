#pragma once

#include "logtwin/config.hpp"
#include "logtwin/eval.hpp"
#include "logtwin/ingest.hpp"
#include "logtwin/ssl.hpp"

#include <string>
#include <vector>

namespace logtwin {

// Long-format interval CSV: one row per depth step, grouped by interval id.
void write_intervals_csv(const std::vector<Interval>& intervals, const std::string& path);
std::vector<Interval> read_intervals_csv(const std::string& path);

// Embedding CSV: one row per interval with provenance and the vector.
void write_embeddings_csv(const EmbeddingMatrix& embeddings, const std::string& path);
EmbeddingMatrix read_embeddings_csv(const std::string& path);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

/// Table preprocessing exactly in the paper's order: fill missing values,
/// drop sensor-error rows, normalize, then window into intervals.
std::vector<Interval> preprocess_tables(const std::vector<WellLogTable>& tables, int l,
                                        int stride);

// Pipeline stages behind the CLI subcommands. Every function is a pure
// function of (config, input files) up to the artifacts it writes.
void run_synth(const RunConfig& cfg, const std::string& out_csv);
void run_preprocess(const RunConfig& cfg, const std::string& in_csv,
                    const std::string& out_intervals);
TrainResult run_train(const RunConfig& cfg, const std::string& intervals_csv,
                      const std::string& checkpoint_path, const std::string& history_path);
void run_embed(const RunConfig& cfg, const std::string& checkpoint_path,
               const std::string& intervals_csv, const std::string& out_csv);
void run_eval_cluster(const RunConfig& cfg, const std::string& embeddings_csv,
                      const std::string& metrics_csv, const std::string& assignments_csv);
void run_eval_probe(const RunConfig& cfg, const std::string& embeddings_csv,
                    const std::string& metrics_csv);

EmbeddingMatrix embed_intervals(const EncoderParams& params,
                                const std::vector<Interval>& intervals);

}  // namespace logtwin
