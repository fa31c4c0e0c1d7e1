// tierkv command line: chunk | build | query | stream | bench | export
//
// Global flags: --seed, --config <json>, --out. Environment overrides:
// TIERKV_SEED, TIERKV_OUT. Exit codes: 0 ok, 1 usage/runtime error,
// 2 invariant audit failure.

#include "tierkv/bench.hpp"
#include "tierkv/chunker.hpp"
#include "tierkv/evaluator.hpp"
#include "tierkv/index.hpp"
#include "tierkv/retriever.hpp"
#include "tierkv/serialize.hpp"
#include "tierkv/streamer.hpp"
#include "tierkv/workload.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct GlobalOpts {
    uint64_t seed = 1;
    std::string config_path;
    std::string out;
    json config;  // parsed --config contents
};

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    in >> j;
    return j;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

void emit(const GlobalOpts& g, const std::string& content) {
    if (g.out.empty()) {
        std::cout << content;
    } else {
        write_text(g.out, content);
    }
}

tierkv::WorkloadSpec workload_from_json(const json& j, uint64_t seed) {
    tierkv::WorkloadSpec spec;
    spec.seed = seed;
    if (j.contains("kind") && j["kind"] == "text_corpus")
        spec.kind = tierkv::WorkloadKind::text_corpus;
    spec.n_tokens = j.value("n_tokens", spec.n_tokens);
    spec.d = j.value("d", spec.d);
    spec.n_blobs = j.value("n_blobs", spec.n_blobs);
    spec.blob_concentration = j.value("blob_concentration", spec.blob_concentration);
    spec.query_count = j.value("query_count", spec.query_count);
    spec.query_locality = j.value("query_locality", spec.query_locality);
    spec.corpus_path = j.value("path", spec.corpus_path);
    spec.seed = j.value("seed", spec.seed);
    return spec;
}

tierkv::ChunkPolicy policy_from_json(const json& j) {
    tierkv::ChunkPolicy p = tierkv::ChunkPolicy::defaults();
    p.min_len = j.value("min_len", p.min_len);
    p.max_len = j.value("max_len", p.max_len);
    return p;
}

tierkv::IndexConfig index_from_json(const json& j, uint64_t seed) {
    tierkv::IndexConfig c;
    c.seed = seed;
    c.avg_chunks_per_cluster = j.value("avg_chunks_per_cluster", c.avg_chunks_per_cluster);
    c.max_coarse_units = j.value("max_coarse_units", c.max_coarse_units);
    c.kmeans_iters = j.value("kmeans_iters", c.kmeans_iters);
    c.elem_bytes = j.value("elem_bytes", c.elem_bytes);
    if (j.value("pooling", "mean") == std::string("max"))
        c.pooling = tierkv::Pooling::max;
    return c;
}

tierkv::Budgets budgets_from_json(const json& j) {
    tierkv::Budgets b;
    b.unit_topk = j.value("unit_topk", b.unit_topk);
    b.cluster_topk = j.value("cluster_topk", b.cluster_topk);
    b.token_budget = j.value("token_budget", b.token_budget);
    b.sink_size = j.value("sink_size", b.sink_size);
    if (j.value("mode", "token_budget") == std::string("fixed_cluster_count"))
        b.mode = tierkv::SelectionMode::fixed_cluster_count;
    return b;
}

json section(const GlobalOpts& g, const char* name) {
    if (g.config.contains(name)) return g.config[name];
    return json::object();
}

// tokens + spans for `build`/`stream` style inputs
struct LoadedStream {
    tierkv::TokenStore tokens;
    std::vector<tierkv::ChunkSpan> spans;
};

LoadedStream load_stream(const GlobalOpts& g, const std::string& workload_path,
                         const std::string& tokens_path,
                         const tierkv::ChunkPolicy& policy) {
    LoadedStream ls;
    if (!tokens_path.empty()) {
        ls.tokens = tierkv::load_tokens_json(tokens_path);
    } else if (!workload_path.empty()) {
        auto spec = workload_from_json(load_json(workload_path), g.seed);
        if (spec.kind == tierkv::WorkloadKind::text_corpus) {
            ls.tokens = tierkv::ingest_text(spec.corpus_path, spec.seed, spec.d);
        } else {
            ls.tokens = std::move(tierkv::gen_clustered_workload(spec).tokens);
        }
    } else {
        throw CLI::ValidationError("build", "one of --workload/--tokens is required");
    }
    ls.spans = tierkv::segment(ls.tokens.texts(), policy);
    return ls;
}

int cmd_chunk(const GlobalOpts& g, const std::string& input,
              const tierkv::ChunkPolicy& policy) {
    tierkv::TokenStore tokens = tierkv::ingest_text(input, g.seed);
    auto spans = tierkv::segment(tokens.texts(), policy);
    ordered_json arr = ordered_json::array();
    for (const auto& s : spans) {
        std::string preview;
        for (uint32_t t = s.start; t < s.end && preview.size() < 40; ++t)
            preview += tokens.text(t);
        if (preview.size() > 40) preview.resize(40);
        ordered_json row{{"start", s.start},
                         {"end", s.end},
                         {"boundary_kind", tierkv::to_string(s.kind)},
                         {"preview_text", preview}};
        if (s.kind == tierkv::BoundaryKind::natural) row["level"] = s.level;
        arr.push_back(std::move(row));
    }
    emit(g, arr.dump(2) + "\n");
    return 0;
}

int cmd_build(const GlobalOpts& g, const std::string& workload_path,
              const std::string& tokens_path, const std::string& index_out) {
    auto policy = policy_from_json(section(g, "policy"));
    auto icfg = index_from_json(section(g, "index"), g.seed);
    LoadedStream ls = load_stream(g, workload_path, tokens_path, policy);
    tierkv::HierarchicalIndex index = tierkv::build_index(ls.tokens, ls.spans, icfg);
    tierkv::MemoryFootprint mem = tierkv::index_memory_bytes(index);

    double mean_rf = 0, mean_rc = 0;
    for (const auto& c : index.fine) mean_rf += c.radius;
    for (const auto& u : index.coarse) mean_rc += u.radius;
    mean_rf /= static_cast<double>(index.fine.size());
    mean_rc /= static_cast<double>(index.coarse.size());

    if (!index_out.empty()) tierkv::save_index(index_out, index);

    ordered_json stats{{"M", index.chunk_count()},
                       {"L", index.cluster_count()},
                       {"P", index.unit_count()},
                       {"mean_radius_fine", mean_rf},
                       {"mean_radius_coarse", mean_rc},
                       {"index_bytes", mem.index_bytes},
                       {"kv_bytes", mem.kv_bytes},
                       {"ratio", mem.ratio},
                       {"rep_key_bytes", mem.rep_key_bytes}};
    emit(g, stats.dump(2) + "\n");
    return 0;
}

int cmd_query(const GlobalOpts& g, const std::string& index_path,
              const std::string& query_path, tierkv::Budgets budgets) {
    tierkv::IndexFile f = tierkv::load_index(index_path);
    auto queries = tierkv::load_queries_json(query_path);
    ordered_json results = ordered_json::array();
    for (const auto& q : queries) {
        tierkv::RetrievalResult r = tierkv::retrieve(f.index, q, budgets);
        results.push_back({{"selected_clusters", r.selected_clusters},
                           {"active_count", r.active_token_ids.size()},
                           {"scanned_centroids", r.scanned_centroids},
                           {"output_vector", r.output}});
    }
    emit(g, (results.size() == 1 ? results[0].dump(2) : results.dump(2)) + "\n");
    return 0;
}

int cmd_stream(const GlobalOpts& g, const std::string& workload_path,
               size_t steps, size_t blob) {
    tierkv::StreamRunConfig cfg;
    cfg.workload = workload_from_json(
        workload_path.empty() ? section(g, "workload") : load_json(workload_path),
        g.seed);
    cfg.budgets = budgets_from_json(section(g, "budgets"));
    cfg.index = index_from_json(section(g, "index"), g.seed);
    cfg.streamer.policy = policy_from_json(section(g, "policy"));
    const json sj = section(g, "stream");
    cfg.decode_steps = steps ? steps : sj.value("decode_steps", size_t{1000});
    cfg.stationary_blob = blob != SIZE_MAX ? blob : sj.value("stationary_blob", size_t{0});
    cfg.streamer.structure_aware = sj.value("structure_aware", true);
    if (sj.value("graft_search", "scoped") == std::string("full"))
        cfg.streamer.graft_search = tierkv::GraftSearch::full;
    cfg.decode_seed = g.seed + 0x5eed;

    tierkv::StreamReport report = tierkv::run_stream(cfg);
    emit(g, tierkv::stream_jsonl(report));
    return 0;
}

int cmd_bench(const GlobalOpts& g) {
    tierkv::RunConfig cfg;
    cfg.workload = workload_from_json(section(g, "workload"), g.seed);
    cfg.policy = policy_from_json(section(g, "policy"));
    cfg.index = index_from_json(section(g, "index"), g.seed);
    cfg.budgets = budgets_from_json(section(g, "budgets"));
    const json bj = section(g, "bench");
    if (bj.contains("context_sweep"))
        cfg.context_sweep = bj["context_sweep"].get<std::vector<size_t>>();
    if (bj.contains("budget_sweep"))
        cfg.budget_sweep = bj["budget_sweep"].get<std::vector<uint64_t>>();
    if (bj.contains("granularity_sweep"))
        cfg.granularity_sweep = bj["granularity_sweep"].get<std::vector<double>>();
    if (bj.contains("seeds")) cfg.seeds = bj["seeds"].get<std::vector<uint64_t>>();
    else cfg.seeds = {g.seed};
    cfg.audit_queries = bj.value("audit_queries", cfg.audit_queries);
    cfg.dense_leading_layers = bj.value("dense_leading_layers", cfg.dense_leading_layers);

    tierkv::BenchReport report = tierkv::run_bench(cfg);
    const std::string out_dir = g.out.empty() ? "reports" : g.out;
    tierkv::write_reports(report, out_dir);
    std::cerr << "wrote " << out_dir << "/{summary.json,cells.csv,queries.csv}, "
              << report.cells.size() << " cells\n";
    if (report.total_violations() > 0) {
        std::cerr << "invariant audit failed: " << report.total_violations()
                  << " upper-bound violations\n";
        return 2;
    }
    return 0;
}

int cmd_export(const GlobalOpts& g, const std::string& index_path) {
    tierkv::IndexFile f = tierkv::load_index(index_path);
    std::ostringstream out;
    out << "chunk_id,cluster_id,unit_id";
    for (size_t j = 0; j < f.index.dim; ++j) out << ",rep_" << j;
    out << "\n";
    for (size_t c = 0; c < f.index.chunks.size(); ++c) {
        const uint32_t cluster = f.index.cluster_of_chunk[c];
        out << c << ',' << cluster << ',' << f.index.fine[cluster].parent_unit;
        for (float x : f.index.chunks[c].rep_key) out << ',' << x;
        out << "\n";
    }
    emit(g, out.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical KV cache retrieval engine"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "global seed")->envname("TIERKV_SEED");
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--out", g.out, "output file or directory")->envname("TIERKV_OUT");

    auto* chunk = app.add_subcommand("chunk", "segment a UTF-8 text file");
    std::string chunk_input;
    uint32_t min_len = 8, max_len = 16;
    chunk->add_option("--input", chunk_input, "text file")->required();
    chunk->add_option("--min", min_len, "min chunk length");
    chunk->add_option("--max", max_len, "max chunk length");

    auto* build = app.add_subcommand("build", "build an index, print stats");
    std::string build_workload, build_tokens, index_out;
    build->add_option("--workload", build_workload, "workload spec JSON");
    build->add_option("--tokens", build_tokens, "token file JSON");
    build->add_option("--index-out", index_out, "save index here");

    auto* query = app.add_subcommand("query", "retrieve against a saved index");
    std::string query_index, query_file;
    uint64_t q_budget = 1024;
    uint32_t q_unit_topk = 8, q_sink = 16, q_cluster_topk = 0;
    query->add_option("--index", query_index, "index file")->required();
    query->add_option("--queries", query_file, "query vector JSON")->required();
    query->add_option("--budget", q_budget, "token budget");
    query->add_option("--cluster-topk", q_cluster_topk,
                      "fixed cluster count instead of a token budget");
    query->add_option("--unit-topk", q_unit_topk, "coarse units kept");
    query->add_option("--sink", q_sink, "attention sink size");

    auto* stream = app.add_subcommand("stream", "prefill then decode with grafting");
    std::string stream_workload;
    size_t stream_steps = 0, stream_blob = SIZE_MAX;
    stream->add_option("--workload", stream_workload, "workload spec JSON");
    stream->add_option("--steps", stream_steps, "decode steps");
    stream->add_option("--blob", stream_blob, "stationary blob id");

    auto* bench = app.add_subcommand("bench", "run the sweep, write reports");

    auto* exp = app.add_subcommand("export", "CSV of chunk representatives");
    std::string export_index;
    exp->add_option("--index", export_index, "index file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!g.config_path.empty()) g.config = load_json(g.config_path);
        if (chunk->parsed()) {
            auto policy = policy_from_json(section(g, "policy"));
            policy.min_len = min_len;
            policy.max_len = max_len;
            return cmd_chunk(g, chunk_input, policy);
        }
        if (build->parsed()) return cmd_build(g, build_workload, build_tokens, index_out);
        if (query->parsed()) {
            tierkv::Budgets b = budgets_from_json(section(g, "budgets"));
            b.unit_topk = q_unit_topk;
            b.sink_size = q_sink;
            if (q_cluster_topk > 0) {
                b.mode = tierkv::SelectionMode::fixed_cluster_count;
                b.cluster_topk = q_cluster_topk;
            } else {
                b.mode = tierkv::SelectionMode::token_budget;
                b.token_budget = q_budget;
            }
            return cmd_query(g, query_index, query_file, b);
        }
        if (stream->parsed()) return cmd_stream(g, stream_workload, stream_steps, stream_blob);
        if (bench->parsed()) return cmd_bench(g);
        if (exp->parsed()) return cmd_export(g, export_index);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
