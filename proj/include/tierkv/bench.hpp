#pragma once

#include "tierkv/index.hpp"
#include "tierkv/retriever.hpp"
#include "tierkv/streamer.hpp"
#include "tierkv/workload.hpp"

#include <memory>
#include <string>
#include <vector>

namespace tierkv {

// Sweep configuration. One cell = (seed, context, granularity, budget); the
// index is built once per (seed, context, granularity) and reused across
// budgets.
struct RunConfig {
    WorkloadSpec workload;  // n_tokens/seed overridden per cell
    ChunkPolicy policy = ChunkPolicy::defaults();
    IndexConfig index;
    Budgets budgets;
    std::vector<size_t> context_sweep = {8192, 16384, 32768, 65536};
    std::vector<uint64_t> budget_sweep = {256, 512, 1024, 2048};
    std::vector<double> granularity_sweep = {1, 2, 4, 8};
    std::vector<uint64_t> seeds = {1};
    size_t audit_queries = 32;  // soundness audit sample per build
    // recorded for deployments that keep some layers dense; the single-head
    // engine itself takes no action on it
    uint32_t dense_leading_layers = 2;

    void validate() const;
};

struct BenchCell {
    uint64_t seed = 0;
    size_t context = 0;
    double granularity = 0.0;
    uint64_t budget = 0;
    size_t chunks = 0, clusters = 0, units = 0;
    double mean_recall = 0.0;
    double mean_scanned = 0.0;
    double mean_active = 0.0;
    size_t centroid_updates = 0;
    size_t assignment_dots = 0;
    double memory_ratio = 0.0;
    size_t index_bytes = 0, kv_bytes = 0;
    size_t audit_violations = 0;
};

struct BenchReport {
    RunConfig config;
    std::vector<BenchCell> cells;
    // per-query rows: (cell index, query index, recall, scanned, active)
    struct QueryRow {
        size_t cell = 0, query = 0;
        double recall = 0.0;
        size_t scanned = 0, active = 0;
    };
    std::vector<QueryRow> query_rows;

    size_t total_violations() const;
};

BenchReport run_bench(const RunConfig& cfg);

// summary.json, cells.csv, queries.csv under out_dir; byte-stable across
// reruns of the same config
void write_reports(const BenchReport& report, const std::string& out_dir);

std::string report_summary_json(const BenchReport& report);
std::string report_cells_csv(const BenchReport& report);
std::string report_queries_csv(const BenchReport& report);

struct StreamRunConfig {
    WorkloadSpec workload;           // prefill stream
    size_t decode_steps = 1000;
    size_t stationary_blob = 0;      // queries/tokens drawn near this blob
    Budgets budgets;
    IndexConfig index;
    StreamerConfig streamer;
    uint64_t decode_seed = 7;
};

struct StreamStepRow {
    size_t step = 0;
    size_t active = 0;
    size_t scanned = 0;
    double jaccard = 0.0;
    double window_hit = 0.0;
    bool grafted = false;
    size_t graft_comps = 0;
};

struct StreamReport {
    std::vector<StreamStepRow> rows;
    size_t grafts = 0;
    size_t max_graft_comps = 0;
    double mean_jaccard = 0.0;
    double mean_window_hit = 0.0;
    size_t final_tokens = 0;
    size_t final_chunks = 0;
    size_t clusters = 0, units = 0;
};

// Builds the prefill index, then decodes with stationary queries, grafting
// dynamic chunks as they fill. Returns the per-step trace. `state_out`, when
// given, receives the final stream state for post-run audits.
StreamReport run_stream(const StreamRunConfig& cfg,
                        std::unique_ptr<StreamState>* state_out = nullptr);

std::string stream_jsonl(const StreamReport& report);

}  // namespace tierkv
