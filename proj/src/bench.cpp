#include "tierkv/bench.hpp"

#include "tierkv/chunker.hpp"
#include "tierkv/evaluator.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

namespace tierkv {

using nlohmann::ordered_json;

void RunConfig::validate() const {
    workload.validate();
    policy.validate();
    index.validate();
    budgets.validate();
    if (context_sweep.empty() || budget_sweep.empty() || granularity_sweep.empty() ||
        seeds.empty())
        throw std::invalid_argument("bench sweep lists must be non-empty");
}

size_t BenchReport::total_violations() const {
    size_t v = 0;
    for (const auto& c : cells) v += c.audit_violations;
    return v;
}

namespace {

std::string fmt_double(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

std::vector<float> audit_query_sample(const Workload& w, size_t count, size_t d) {
    const size_t have = w.queries.size() / d;
    const size_t take = std::min(count, have);
    return {w.queries.begin(),
            w.queries.begin() + static_cast<ptrdiff_t>(take * d)};
}

}  // namespace

BenchReport run_bench(const RunConfig& cfg) {
    cfg.validate();
    BenchReport report;
    report.config = cfg;

    for (uint64_t seed : cfg.seeds) {
        for (size_t context : cfg.context_sweep) {
            WorkloadSpec spec = cfg.workload;
            spec.seed = seed;
            spec.n_tokens = context;
            Workload w = gen_clustered_workload(spec);
            auto spans = segment(w.tokens.texts(), cfg.policy);

            for (double granularity : cfg.granularity_sweep) {
                IndexConfig icfg = cfg.index;
                icfg.avg_chunks_per_cluster = granularity;
                icfg.seed = seed;
                HierarchicalIndex index = build_index(w.tokens, spans, icfg);
                MemoryFootprint mem = index_memory_bytes(index);

                std::vector<float> audit_q =
                    audit_query_sample(w, cfg.audit_queries, spec.d);
                const size_t violations = eval::audit_ub_soundness(
                    index, audit_q, audit_q.size() / spec.d);

                for (uint64_t budget : cfg.budget_sweep) {
                    Budgets budgets = cfg.budgets;
                    budgets.mode = SelectionMode::token_budget;
                    budgets.token_budget = budget;

                    BenchCell cell;
                    cell.seed = seed;
                    cell.context = context;
                    cell.granularity = granularity;
                    cell.budget = budget;
                    cell.chunks = index.chunk_count();
                    cell.clusters = index.cluster_count();
                    cell.units = index.unit_count();
                    cell.centroid_updates = index.build_stats.centroid_updates;
                    cell.assignment_dots = index.build_stats.assignment_dots;
                    cell.memory_ratio = mem.ratio;
                    cell.index_bytes = mem.index_bytes;
                    cell.kv_bytes = mem.kv_bytes;
                    cell.audit_violations = violations;

                    const size_t cell_id = report.cells.size();
                    const size_t nq = spec.query_count;
                    double recall_sum = 0, scanned_sum = 0, active_sum = 0;
                    for (size_t qi = 0; qi < nq; ++qi) {
                        std::span<const float> q(w.queries.data() + qi * spec.d,
                                                 spec.d);
                        RetrievalResult r = retrieve(index, q, budgets);
                        auto oracle = eval::oracle_topk_tokens(q, w.tokens, budget);
                        const double recall =
                            eval::recall_rate(r.active_token_ids, oracle);
                        recall_sum += recall;
                        scanned_sum += static_cast<double>(r.scanned_centroids);
                        active_sum += static_cast<double>(r.active_token_ids.size());
                        report.query_rows.push_back(
                            {cell_id, qi, recall, r.scanned_centroids,
                             r.active_token_ids.size()});
                    }
                    const auto dn = static_cast<double>(nq);
                    cell.mean_recall = recall_sum / dn;
                    cell.mean_scanned = scanned_sum / dn;
                    cell.mean_active = active_sum / dn;
                    report.cells.push_back(cell);
                }
            }
        }
    }
    return report;
}

namespace {

ordered_json config_json(const RunConfig& cfg) {
    ordered_json j;
    j["workload"] = {{"kind", cfg.workload.kind == WorkloadKind::clustered_synthetic
                                  ? "clustered_synthetic"
                                  : "text_corpus"},
                     {"d", cfg.workload.d},
                     {"n_blobs", cfg.workload.n_blobs},
                     {"blob_concentration", cfg.workload.blob_concentration},
                     {"query_count", cfg.workload.query_count},
                     {"query_locality", cfg.workload.query_locality}};
    j["policy"] = {{"min_len", cfg.policy.min_len}, {"max_len", cfg.policy.max_len}};
    j["index"] = {{"max_coarse_units", cfg.index.max_coarse_units},
                  {"kmeans_iters", cfg.index.kmeans_iters},
                  {"pooling", cfg.index.pooling == Pooling::mean ? "mean" : "max"},
                  {"elem_bytes", cfg.index.elem_bytes}};
    j["budgets"] = {{"unit_topk", cfg.budgets.unit_topk},
                    {"sink_size", cfg.budgets.sink_size}};
    j["context_sweep"] = cfg.context_sweep;
    j["budget_sweep"] = cfg.budget_sweep;
    j["granularity_sweep"] = cfg.granularity_sweep;
    j["seeds"] = cfg.seeds;
    j["audit_queries"] = cfg.audit_queries;
    j["dense_leading_layers"] = cfg.dense_leading_layers;
    return j;
}

}  // namespace

std::string report_summary_json(const BenchReport& report) {
    ordered_json j;
    j["config"] = config_json(report.config);
    auto& cells = j["cells"] = ordered_json::array();
    for (const auto& c : report.cells) {
        cells.push_back({{"seed", c.seed},
                         {"context", c.context},
                         {"granularity", c.granularity},
                         {"budget", c.budget},
                         {"chunks", c.chunks},
                         {"clusters", c.clusters},
                         {"units", c.units},
                         {"mean_recall", c.mean_recall},
                         {"mean_scanned", c.mean_scanned},
                         {"mean_active", c.mean_active},
                         {"centroid_updates", c.centroid_updates},
                         {"assignment_dots", c.assignment_dots},
                         {"memory_ratio", c.memory_ratio},
                         {"index_bytes", c.index_bytes},
                         {"kv_bytes", c.kv_bytes},
                         {"audit_violations", c.audit_violations}});
    }
    j["total_violations"] = report.total_violations();
    return j.dump(2) + "\n";
}

std::string report_cells_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "seed,context,granularity,budget,chunks,clusters,units,mean_recall,"
           "mean_scanned,mean_active,centroid_updates,assignment_dots,"
           "memory_ratio,index_bytes,kv_bytes,audit_violations\n";
    for (const auto& c : report.cells) {
        out << c.seed << ',' << c.context << ',' << fmt_double(c.granularity) << ','
            << c.budget << ',' << c.chunks << ',' << c.clusters << ',' << c.units
            << ',' << fmt_double(c.mean_recall) << ',' << fmt_double(c.mean_scanned)
            << ',' << fmt_double(c.mean_active) << ',' << c.centroid_updates << ','
            << c.assignment_dots << ',' << fmt_double(c.memory_ratio) << ','
            << c.index_bytes << ',' << c.kv_bytes << ',' << c.audit_violations
            << '\n';
    }
    return out.str();
}

std::string report_queries_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "cell,query,recall,scanned,active\n";
    for (const auto& r : report.query_rows)
        out << r.cell << ',' << r.query << ',' << fmt_double(r.recall) << ','
            << r.scanned << ',' << r.active << '\n';
    return out.str();
}

void write_reports(const BenchReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write report " + name);
        out << content;
    };
    write("summary.json", report_summary_json(report));
    write("cells.csv", report_cells_csv(report));
    write("queries.csv", report_queries_csv(report));
}

StreamReport run_stream(const StreamRunConfig& cfg,
                        std::unique_ptr<StreamState>* state_out) {
    Workload w = gen_clustered_workload(cfg.workload);
    auto spans = segment(w.tokens.texts(), cfg.streamer.policy);
    IndexConfig icfg = cfg.index;
    icfg.seed = cfg.workload.seed;
    HierarchicalIndex index = build_index(w.tokens, spans, icfg);

    auto state = std::make_unique<StreamState>(std::move(w.tokens), std::move(index),
                                               cfg.streamer);

    const size_t d = cfg.workload.d;
    const size_t blob = cfg.stationary_blob % cfg.workload.n_blobs;
    const float* center = w.blob_centers.data() + blob * d;
    Rng rng(cfg.decode_seed);

    StreamReport report;
    size_t next_marker = 12;
    for (size_t step = 0; step < cfg.decode_steps; ++step) {
        // stationary query and a same-blob token for this step
        VecF q(d);
        double n2 = 0.0;
        const double sigma = 1.0 / cfg.workload.blob_concentration;
        const double noise = sigma / std::sqrt(static_cast<double>(d));
        for (size_t j = 0; j < d; ++j) {
            const double x = center[j] + noise * rng.next_gaussian();
            q[j] = static_cast<float>(x);
            n2 += x * x;
        }
        const double mag = std::sqrt(static_cast<double>(d) / n2);
        for (size_t j = 0; j < d; ++j) q[j] = static_cast<float>(q[j] * mag);

        TokenRecord tok;
        tok.id = static_cast<uint32_t>(state->store().size());
        if (step + 1 == next_marker) {
            tok.text = "\n";
            next_marker += 12;
        }
        tok.key.resize(d);
        double kn2 = 0.0;
        for (size_t j = 0; j < d; ++j) {
            const double x = center[j] + noise * rng.next_gaussian();
            tok.key[j] = static_cast<float>(x);
            kn2 += x * x;
        }
        const double kinv = 1.0 / std::sqrt(kn2);
        for (size_t j = 0; j < d; ++j)
            tok.key[j] = static_cast<float>(tok.key[j] * kinv);
        tok.value.resize(d);
        for (size_t j = 0; j < d; ++j)
            tok.value[j] = static_cast<float>(rng.next_gaussian());

        DecodeOutcome out = state->decode_step(q, tok, cfg.budgets);

        StreamStepRow row;
        row.step = step;
        row.active = out.retrieval.active_token_ids.size();
        row.scanned = out.retrieval.scanned_centroids;
        row.jaccard = out.jaccard;
        row.window_hit = out.window_hit;
        if (out.graft) {
            row.grafted = true;
            row.graft_comps = out.graft->distance_comps;
            ++report.grafts;
            report.max_graft_comps =
                std::max(report.max_graft_comps, out.graft->distance_comps);
        }
        report.rows.push_back(row);
    }

    double js = 0, wh = 0;
    for (const auto& r : report.rows) {
        js += r.jaccard;
        wh += r.window_hit;
    }
    const auto steps = static_cast<double>(report.rows.size());
    report.mean_jaccard = steps > 0 ? js / steps : 0.0;
    report.mean_window_hit = steps > 0 ? wh / steps : 0.0;
    report.final_tokens = state->store().size();
    report.final_chunks = state->index().chunk_count();
    report.clusters = state->index().cluster_count();
    report.units = state->index().unit_count();

    if (state_out) *state_out = std::move(state);
    return report;
}

std::string stream_jsonl(const StreamReport& report) {
    std::ostringstream out;
    for (const auto& r : report.rows) {
        ordered_json j{{"step", r.step},
                       {"active_count", r.active},
                       {"scanned_centroids", r.scanned},
                       {"jaccard", r.jaccard},
                       {"window_hit", r.window_hit}};
        if (r.grafted) j["graft_comps"] = r.graft_comps;
        out << j.dump() << "\n";
    }
    ordered_json summary{{"summary", true},
                         {"steps", report.rows.size()},
                         {"grafts", report.grafts},
                         {"max_graft_comps", report.max_graft_comps},
                         {"mean_jaccard", report.mean_jaccard},
                         {"mean_window_hit", report.mean_window_hit},
                         {"final_tokens", report.final_tokens},
                         {"final_chunks", report.final_chunks},
                         {"clusters", report.clusters},
                         {"units", report.units}};
    out << summary.dump() << "\n";
    return out.str();
}

}  // namespace tierkv
