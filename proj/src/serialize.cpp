#include "tierkv/serialize.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

namespace tierkv {

namespace {

constexpr uint32_t kMagic = 0x58494b54;  // "TKIX"
constexpr uint32_t kVersion = 1;

class Writer {
public:
    void u32(uint32_t v) { raw(&v, sizeof v); }
    void u64(uint64_t v) { raw(&v, sizeof v); }
    void f32(float v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void f32s(const std::vector<float>& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(float));
    }
    void u32s(const std::vector<uint32_t>& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(uint32_t));
    }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    const std::vector<std::byte>& bytes() const { return buf_; }

private:
    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const std::byte*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<std::byte> buf_;
};

class Reader {
public:
    explicit Reader(std::vector<std::byte> buf) : buf_(std::move(buf)) {}
    uint32_t u32() { return get<uint32_t>(); }
    uint64_t u64() { return get<uint64_t>(); }
    float f32() { return get<float>(); }
    double f64() { return get<double>(); }
    std::vector<float> f32s() {
        auto n = u64();
        std::vector<float> v(n);
        raw(v.data(), n * sizeof(float));
        return v;
    }
    std::vector<uint32_t> u32s() {
        auto n = u64();
        std::vector<uint32_t> v(n);
        raw(v.data(), n * sizeof(uint32_t));
        return v;
    }
    std::string str() {
        auto n = u64();
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

private:
    template <typename T>
    T get() {
        T v;
        raw(&v, sizeof v);
        return v;
    }
    void raw(void* p, size_t n) {
        if (pos_ + n > buf_.size()) throw std::runtime_error("index file truncated");
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::vector<std::byte> buf_;
    size_t pos_ = 0;
};

}  // namespace

std::vector<std::byte> index_to_bytes(const HierarchicalIndex& index) {
    Writer w;
    w.u32(kMagic);
    w.u32(kVersion);
    w.u64(index.dim);

    w.u64(index.chunks.size());
    for (const Chunk& c : index.chunks) {
        w.u32(c.span.start);
        w.u32(c.span.end);
        w.u32(static_cast<uint32_t>(c.span.kind));
        w.u32(static_cast<uint32_t>(c.span.level));
        w.f32s(c.rep_key);
    }
    w.u64(index.fine.size());
    for (const FineCluster& fc : index.fine) {
        w.f32s(fc.centroid);
        w.f64(fc.radius);
        w.u32s(fc.members);
        w.u64(fc.token_count);
        w.u32(fc.parent_unit);
    }
    w.u64(index.coarse.size());
    for (const CoarseUnit& cu : index.coarse) {
        w.f32s(cu.centroid);
        w.f64(cu.radius);
        w.u32s(cu.members);
    }
    w.u32s(index.cluster_of_chunk);

    w.f64(index.config.avg_chunks_per_cluster);
    w.u32(index.config.max_coarse_units);
    w.u32(index.config.kmeans_iters);
    w.u32(static_cast<uint32_t>(index.config.pooling));
    w.u64(index.config.seed);
    w.u32(index.config.elem_bytes);
    return w.bytes();
}

void save_index(const std::string& path, const HierarchicalIndex& index) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    auto body = index_to_bytes(index);
    out.write(reinterpret_cast<const char*>(body.data()),
              static_cast<std::streamsize>(body.size()));

    // token store appended so the file is query-ready
    Writer w;
    const TokenStore& s = *index.store;
    w.u64(s.size());
    for (size_t i = 0; i < s.size(); ++i) w.str(s.text(i));
    std::vector<float> keys(s.keys_flat().begin(), s.keys_flat().end());
    std::vector<float> values(s.values_flat().begin(), s.values_flat().end());
    w.f32s(keys);
    w.f32s(values);
    out.write(reinterpret_cast<const char*>(w.bytes().data()),
              static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

IndexFile load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<std::byte> buf;
    {
        std::ostringstream ss;
        ss << in.rdbuf();
        const std::string& s = ss.str();
        buf.resize(s.size());
        std::memcpy(buf.data(), s.data(), s.size());
    }
    Reader r(std::move(buf));
    if (r.u32() != kMagic) throw std::runtime_error("not an index file: " + path);
    if (r.u32() != kVersion) throw std::runtime_error("unsupported index version");

    IndexFile f;
    HierarchicalIndex& index = f.index;
    index.dim = r.u64();

    const auto m = r.u64();
    index.chunks.resize(m);
    for (auto& c : index.chunks) {
        c.span.start = r.u32();
        c.span.end = r.u32();
        c.span.kind = static_cast<BoundaryKind>(r.u32());
        c.span.level = static_cast<int>(r.u32());
        c.rep_key = r.f32s();
    }
    const auto l = r.u64();
    index.fine.resize(l);
    for (auto& fc : index.fine) {
        fc.centroid = r.f32s();
        fc.radius = r.f64();
        fc.members = r.u32s();
        fc.token_count = r.u64();
        fc.parent_unit = r.u32();
    }
    const auto p = r.u64();
    index.coarse.resize(p);
    for (auto& cu : index.coarse) {
        cu.centroid = r.f32s();
        cu.radius = r.f64();
        cu.members = r.u32s();
    }
    index.cluster_of_chunk = r.u32s();

    index.config.avg_chunks_per_cluster = r.f64();
    index.config.max_coarse_units = r.u32();
    index.config.kmeans_iters = r.u32();
    index.config.pooling = static_cast<Pooling>(r.u32());
    index.config.seed = r.u64();
    index.config.elem_bytes = r.u32();

    const auto n = r.u64();
    std::vector<std::string> texts(n);
    for (auto& t : texts) t = r.str();
    auto keys = r.f32s();
    auto values = r.f32s();
    if (keys.size() != n * index.dim || values.size() != n * index.dim)
        throw std::runtime_error("index file: token store size mismatch");
    f.store = TokenStore(index.dim);
    for (size_t i = 0; i < n; ++i) {
        TokenRecord rec;
        rec.id = static_cast<uint32_t>(i);
        rec.text = std::move(texts[i]);
        rec.key.assign(keys.begin() + i * index.dim, keys.begin() + (i + 1) * index.dim);
        rec.value.assign(values.begin() + i * index.dim,
                         values.begin() + (i + 1) * index.dim);
        f.store.append(rec);
    }
    f.index.store = &f.store;
    return f;
}

TokenStore load_tokens_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    const size_t d = j.at("d").get<size_t>();
    TokenStore store(d);
    uint32_t id = 0;
    for (const auto& t : j.at("tokens")) {
        TokenRecord rec;
        rec.id = id++;
        rec.text = t.value("text", std::string());
        rec.key = t.at("key").get<VecF>();
        rec.value = t.at("value").get<VecF>();
        store.append(rec);
    }
    if (store.empty()) throw std::runtime_error("token file has no tokens");
    return store;
}

void save_tokens_json(const std::string& path, const TokenStore& store) {
    nlohmann::ordered_json j;
    j["d"] = store.dim();
    auto& arr = j["tokens"] = nlohmann::ordered_json::array();
    for (size_t i = 0; i < store.size(); ++i) {
        nlohmann::ordered_json t;
        t["text"] = store.text(i);
        t["key"] = VecF(store.key(i), store.key(i) + store.dim());
        t["value"] = VecF(store.value(i), store.value(i) + store.dim());
        arr.push_back(std::move(t));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::vector<std::vector<float>> load_queries_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    std::vector<std::vector<float>> queries;
    for (const auto& q : j.at("queries")) queries.push_back(q.get<std::vector<float>>());
    if (queries.empty()) throw std::runtime_error("query file has no queries");
    return queries;
}

}  // namespace tierkv
