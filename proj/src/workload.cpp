#include "tierkv/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace tierkv {

void WorkloadSpec::validate() const {
    if (n_tokens < 1) throw std::invalid_argument("n_tokens must be >= 1");
    if (d < 2) throw std::invalid_argument("d must be >= 2");
    if (n_blobs < 1) throw std::invalid_argument("n_blobs must be >= 1");
    if (blob_concentration <= 0.0)
        throw std::invalid_argument("blob_concentration must be positive");
    if (query_locality < 0.0 || query_locality > 1.0)
        throw std::invalid_argument("query_locality must be in [0, 1]");
}

uint64_t Rng::next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double Rng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = next_unit();
    while (u1 <= 1e-300) u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

size_t Rng::next_index(size_t n) {
    return static_cast<size_t>(next_u64() % n);
}

namespace {

VecF unit_gaussian(Rng& rng, size_t d) {
    VecF v(d);
    double n2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
        v[j] = static_cast<float>(rng.next_gaussian());
        n2 += static_cast<double>(v[j]) * v[j];
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (size_t j = 0; j < d; ++j) v[j] = static_cast<float>(v[j] * inv);
    return v;
}

VecF blob_sample(Rng& rng, const float* center, size_t d, double concentration) {
    const double sigma = 1.0 / concentration;
    const double scale = sigma / std::sqrt(static_cast<double>(d));
    VecF v(d);
    double n2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
        const double x = center[j] + scale * rng.next_gaussian();
        v[j] = static_cast<float>(x);
        n2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (size_t j = 0; j < d; ++j) v[j] = static_cast<float>(v[j] * inv);
    return v;
}

// queries are raw (not unit); sqrt(d) magnitude keeps softmax peaked without
// saturating it
VecF query_from(Rng& rng, const float* center, size_t d, double concentration) {
    VecF v = blob_sample(rng, center, d, concentration);
    const double mag = std::sqrt(static_cast<double>(d));
    for (size_t j = 0; j < d; ++j) v[j] = static_cast<float>(v[j] * mag);
    return v;
}

// spacing mix averaging ~12: mostly in-window gaps, short gaps that merge
// into their successor, long gaps that force max-length splits
size_t next_marker_gap(Rng& rng) {
    const double u = rng.next_unit();
    if (u < 0.15) return 3 + rng.next_index(5);    // 3..7
    if (u < 0.85) return 8 + rng.next_index(9);    // 8..16
    return 17 + rng.next_index(8);                 // 17..24
}

uint64_t fnv1a(const std::string& s, uint64_t seed) {
    uint64_t h = 1469598103934665603ull ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

Workload gen_clustered_workload(const WorkloadSpec& spec) {
    spec.validate();
    Workload w;
    w.tokens = TokenStore(spec.d);
    Rng rng(spec.seed);

    w.blob_centers.resize(spec.n_blobs * spec.d);
    for (size_t b = 0; b < spec.n_blobs; ++b) {
        VecF c = unit_gaussian(rng, spec.d);
        std::copy(c.begin(), c.end(), w.blob_centers.begin() + b * spec.d);
    }

    size_t next_marker = next_marker_gap(rng);
    // tokens arrive in contiguous same-blob runs, mirroring the local
    // coherence of real streams that chunking depends on
    size_t blob = rng.next_index(spec.n_blobs);
    size_t run_left = 12 + rng.next_index(25);
    w.token_blob.resize(spec.n_tokens);
    for (size_t i = 0; i < spec.n_tokens; ++i) {
        if (run_left == 0) {
            blob = rng.next_index(spec.n_blobs);
            run_left = 12 + rng.next_index(25);
        }
        --run_left;
        w.token_blob[i] = static_cast<uint32_t>(blob);
        TokenRecord t;
        t.id = static_cast<uint32_t>(i);
        if (i + 1 == next_marker) {
            t.text = "\n";  // planted level-2 boundary
            next_marker += next_marker_gap(rng);
        }
        t.key = blob_sample(rng, w.blob_centers.data() + blob * spec.d, spec.d,
                            spec.blob_concentration);
        t.value.resize(spec.d);
        for (size_t j = 0; j < spec.d; ++j)
            t.value[j] = static_cast<float>(rng.next_gaussian());
        w.tokens.append(t);
    }

    w.queries.resize(spec.query_count * spec.d);
    w.query_blob.resize(spec.query_count);
    for (size_t qi = 0; qi < spec.query_count; ++qi) {
        VecF q;
        if (rng.next_unit() < spec.query_locality) {
            const size_t blob = rng.next_index(spec.n_blobs);
            w.query_blob[qi] = static_cast<uint32_t>(blob);
            q = query_from(rng, w.blob_centers.data() + blob * spec.d, spec.d,
                           spec.blob_concentration);
        } else {
            w.query_blob[qi] = static_cast<uint32_t>(spec.n_blobs);
            VecF dir = unit_gaussian(rng, spec.d);
            q.resize(spec.d);
            const double mag = std::sqrt(static_cast<double>(spec.d));
            for (size_t j = 0; j < spec.d; ++j)
                q[j] = static_cast<float>(dir[j] * mag);
        }
        std::copy(q.begin(), q.end(), w.queries.begin() + qi * spec.d);
    }
    return w;
}

std::vector<float> gen_local_queries(const WorkloadSpec& spec, size_t blob,
                                     size_t count, uint64_t seed) {
    spec.validate();
    if (blob >= spec.n_blobs) throw std::invalid_argument("blob index out of range");
    // re-derive the same centers the workload generator produced
    Rng center_rng(spec.seed);
    std::vector<float> centers(spec.n_blobs * spec.d);
    for (size_t b = 0; b < spec.n_blobs; ++b) {
        VecF c = unit_gaussian(center_rng, spec.d);
        std::copy(c.begin(), c.end(), centers.begin() + b * spec.d);
    }
    Rng rng(seed);
    std::vector<float> queries(count * spec.d);
    for (size_t i = 0; i < count; ++i) {
        VecF q = query_from(rng, centers.data() + blob * spec.d, spec.d,
                            spec.blob_concentration);
        std::copy(q.begin(), q.end(), queries.begin() + i * spec.d);
    }
    return queries;
}

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// minimal UTF-8 well-formedness check
bool valid_utf8(const std::string& s) {
    size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        size_t len;
        if (c < 0x80) len = 1;
        else if ((c & 0xE0) == 0xC0) len = 2;
        else if ((c & 0xF0) == 0xE0) len = 3;
        else if ((c & 0xF8) == 0xF0) len = 4;
        else return false;
        if (i + len > s.size()) return false;
        for (size_t k = 1; k < len; ++k)
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
        i += len;
    }
    return true;
}

}  // namespace

TokenStore ingest_text_content(const std::string& content, uint64_t seed, size_t d) {
    if (content.empty()) throw std::invalid_argument("ingest_text: empty input");
    if (!valid_utf8(content)) throw std::invalid_argument("ingest_text: invalid UTF-8");

    // token = run of non-whitespace plus its trailing whitespace run; a
    // leading whitespace run becomes its own token
    std::vector<std::string> texts;
    std::vector<uint32_t> paragraph;
    uint32_t para = 0;
    size_t i = 0;
    while (i < content.size()) {
        size_t start = i;
        while (i < content.size() && !is_ws(content[i])) ++i;
        size_t ws_start = i;
        while (i < content.size() && is_ws(content[i])) ++i;
        texts.push_back(content.substr(start, i - start));
        paragraph.push_back(para);
        const auto newlines =
            std::count(content.begin() + ws_start, content.begin() + i, '\n');
        if (newlines >= 2) ++para;  // blank line: next paragraph
    }

    TokenStore store(d);
    std::vector<VecF> para_bias;
    for (uint32_t p = 0; p <= para; ++p) {
        Rng bias_rng(fnv1a("paragraph", seed) + p);
        para_bias.push_back(unit_gaussian(bias_rng, d));
    }
    Rng value_rng(fnv1a("values", seed));
    for (size_t t = 0; t < texts.size(); ++t) {
        Rng key_rng(fnv1a(texts[t], seed));
        VecF u = unit_gaussian(key_rng, d);
        const VecF& bias = para_bias[paragraph[t]];
        TokenRecord rec;
        rec.id = static_cast<uint32_t>(t);
        rec.text = texts[t];
        rec.key.resize(d);
        double n2 = 0.0;
        for (size_t j = 0; j < d; ++j) {
            const double x = u[j] + 2.0 * bias[j];
            rec.key[j] = static_cast<float>(x);
            n2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (size_t j = 0; j < d; ++j)
            rec.key[j] = static_cast<float>(rec.key[j] * inv);
        rec.value.resize(d);
        for (size_t j = 0; j < d; ++j)
            rec.value[j] = static_cast<float>(value_rng.next_gaussian());
        store.append(rec);
    }
    return store;
}

TokenStore ingest_text(const std::string& path, uint64_t seed, size_t d) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("ingest_text: cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ingest_text_content(ss.str(), seed, d);
}

}  // namespace tierkv
