#include <cstring>
#include <fstream>
#include <limits>

#include "adahi/hash.hpp"
#include "adahi/kernels.hpp"
#include "adahi/quantizer.hpp"
#include "adahi/rng.hpp"

namespace adahi {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'C', 'B'};
constexpr uint32_t kVersion = 1;

struct ByteSink {
    std::vector<char> bytes;

    template <typename T>
    void put(const T& v) {
        const char* p = reinterpret_cast<const char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void put_doubles(const std::vector<double>& v) {
        const char* p = reinterpret_cast<const char*>(v.data());
        bytes.insert(bytes.end(), p, p + v.size() * sizeof(double));
    }
};

struct ByteSource {
    const char* p;
    const char* end;

    template <typename T>
    T get() {
        if (p + sizeof(T) > end) throw ProtocolError("codebook file truncated");
        T v;
        std::memcpy(&v, p, sizeof(T));
        p += sizeof(T);
        return v;
    }
    void get_doubles(std::vector<double>& v, std::size_t count) {
        if (p + count * sizeof(double) > end) {
            throw ProtocolError("codebook file truncated");
        }
        v.resize(count);
        std::memcpy(v.data(), p, count * sizeof(double));
        p += count * sizeof(double);
    }
};

}  // namespace

CodebookSet CodebookSet::build(const QuantizerConfig& cfg, uint64_t seed) {
    if (cfg.num_stages < 1) throw ConfigError("quantizer: num_stages must be >= 1");
    if (cfg.entries < 2) throw ConfigError("quantizer: entries must be >= 2");
    if (cfg.scale <= 0.0) throw ConfigError("quantizer: scale must be positive");
    if (cfg.decay <= 0.0 || cfg.decay >= 1.0) {
        throw ConfigError("quantizer: decay must be in (0,1)");
    }
    const std::size_t d = cfg.action_dim;
    const std::size_t D = cfg.latent_dim == 0 ? d : cfg.latent_dim;
    if (d == 0 || D < d) throw ConfigError("quantizer: need action_dim >= 1 and latent_dim >= action_dim");

    CodebookSet cb;
    cb.seed_ = seed;
    cb.entries_ = cfg.entries;
    cb.latent_dim_ = D;

    RngStream rng(seed);
    RngStream entry_rng = rng.substream(1);
    double stage_scale = cfg.scale;
    for (std::size_t l = 0; l < cfg.num_stages; ++l) {
        std::vector<double> stage(cfg.entries * D, 0.0);
        for (std::size_t k = 0; k < cfg.entries; ++k) {
            if (k == 0 && cfg.include_zero_entry) continue;
            for (std::size_t j = 0; j < D; ++j) {
                stage[k * D + j] = entry_rng.normal() * stage_scale / std::sqrt(double(D));
            }
        }
        cb.stages_.push_back(std::move(stage));
        stage_scale *= cfg.decay;
    }

    // Decoder: diagonally dominated random map, full row rank. Retries with
    // a perturbed stream in the (unlikely) singular case.
    for (uint64_t attempt = 0;; ++attempt) {
        RngStream wrng = rng.substream(100 + attempt);
        cb.decoder_w_ = Mat(d, D);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < D; ++j) {
                cb.decoder_w_(i, j) = 0.2 * wrng.normal() / std::sqrt(double(D));
            }
            cb.decoder_w_(i, i) += 1.0;
        }
        cb.decoder_c_ = Vec(d, 0.0);
        try {
            cb.finish_construction();
            break;
        } catch (const ContractError&) {
            if (attempt > 8) throw ConfigError("quantizer: failed to build full-rank decoder");
        }
    }
    return cb;
}

CodebookSet CodebookSet::from_parts(std::vector<std::vector<double>> stages,
                                    std::size_t entries, std::size_t latent_dim,
                                    Mat decoder_w, Vec decoder_c, uint64_t seed) {
    if (stages.empty()) throw ConfigError("quantizer: need at least one stage");
    for (const auto& s : stages) {
        if (s.size() != entries * latent_dim) {
            throw ConfigError("quantizer: stage size mismatch");
        }
    }
    if (decoder_w.cols != latent_dim || decoder_w.rows != decoder_c.size()) {
        throw ConfigError("quantizer: decoder shape mismatch");
    }
    CodebookSet cb;
    cb.stages_ = std::move(stages);
    cb.entries_ = entries;
    cb.latent_dim_ = latent_dim;
    cb.decoder_w_ = std::move(decoder_w);
    cb.decoder_c_ = std::move(decoder_c);
    cb.seed_ = seed;
    cb.finish_construction();
    return cb;
}

void CodebookSet::finish_construction() {
    const std::size_t d = decoder_w_.rows;
    const std::size_t D = latent_dim_;
    // Gram matrix W W^T.
    Mat gram(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            gram(i, j) = kernels::dot(decoder_w_.a.data() + i * D,
                                      decoder_w_.a.data() + j * D, D);
        }
    }
    lift_ = Mat(D, d);
    for (std::size_t j = 0; j < d; ++j) {
        Vec e(d, 0.0);
        e[j] = 1.0;
        Vec g = solve(gram, std::move(e));      // column j of (W W^T)^-1
        Vec col = matvec_t(decoder_w_, g);      // W^T g, length D
        for (std::size_t i = 0; i < D; ++i) lift_(i, j) = col[i];
    }

    ByteSink sink;
    sink.put(uint64_t(stages_.size()));
    sink.put(uint64_t(entries_));
    sink.put(uint64_t(D));
    sink.put(uint64_t(d));
    sink.put(seed_);
    for (const auto& s : stages_) sink.put_doubles(s);
    sink.put_doubles(decoder_w_.a);
    sink.put_doubles(decoder_c_);
    checksum_ = fnv1a(sink.bytes.data(), sink.bytes.size());
}

std::span<const double> CodebookSet::entry(std::size_t stage, std::size_t k) const {
    if (stage >= stages_.size() || k >= entries_) {
        throw ContractError("codebook entry out of range");
    }
    return {stages_[stage].data() + k * latent_dim_, latent_dim_};
}

void CodebookSet::validate_tuple(const CodeTuple& t) const {
    if (t.indices.size() != stages_.size()) {
        throw ContractError("code tuple length mismatch");
    }
    for (uint32_t idx : t.indices) {
        if (idx >= entries_) throw ContractError("code index out of range");
    }
}

Vec CodebookSet::latent_sum(const CodeTuple& t) const {
    validate_tuple(t);
    Vec sum(latent_dim_, 0.0);
    for (std::size_t l = 0; l < stages_.size(); ++l) {
        kernels::axpy(1.0, entry(l, t.indices[l]).data(), sum.data(), latent_dim_);
    }
    return sum;
}

Vec CodebookSet::decode(const CodeTuple& t) const {
    Vec latent = latent_sum(t);
    Vec a = matvec(decoder_w_, latent);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += decoder_c_[i];
    return a;
}

Vec CodebookSet::lift(std::span<const double> action) const {
    if (action.size() != decoder_w_.rows) {
        throw ContractError("lift: action dimension mismatch");
    }
    Vec centered = sub(action, decoder_c_);
    return matvec(lift_, centered);
}

uint32_t CodebookSet::nearest(std::size_t stage, std::span<const double> residual) const {
    if (residual.size() != latent_dim_) {
        throw ContractError("nearest: residual dimension mismatch");
    }
    std::vector<double> dist(entries_);
    kernels::l2sq_batch(residual.data(), stages_[stage].data(), entries_,
                        latent_dim_, dist.data());
    uint32_t best = 0;
    for (uint32_t k = 1; k < entries_; ++k) {
        if (dist[k] < dist[best]) best = k;  // ties keep the lowest index
    }
    return best;
}

CodeTuple CodebookSet::encode_latent(std::span<const double> latent) const {
    Vec r(latent.begin(), latent.end());
    CodeTuple t;
    t.indices.reserve(stages_.size());
    for (std::size_t l = 0; l < stages_.size(); ++l) {
        uint32_t idx = nearest(l, r);
        kernels::axpy(-1.0, entry(l, idx).data(), r.data(), latent_dim_);
        t.indices.push_back(idx);
    }
    return t;
}

CodeTuple CodebookSet::encode_residual(std::span<const double> action) const {
    return encode_latent(lift(action));
}

void CodebookSet::save(const std::filesystem::path& path) const {
    ByteSink sink;
    sink.bytes.insert(sink.bytes.end(), kMagic, kMagic + 4);
    sink.put(kVersion);
    sink.put(uint64_t(stages_.size()));
    sink.put(uint64_t(entries_));
    sink.put(uint64_t(latent_dim_));
    sink.put(uint64_t(decoder_w_.rows));
    sink.put(seed_);
    for (const auto& s : stages_) sink.put_doubles(s);
    sink.put_doubles(decoder_w_.a);
    sink.put_doubles(decoder_c_);
    sink.put(checksum_);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open codebook file for writing: " + path.string());
    out.write(sink.bytes.data(), std::streamsize(sink.bytes.size()));
}

CodebookSet CodebookSet::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open codebook file: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    ByteSource src{bytes.data(), bytes.data() + bytes.size()};
    char magic[4];
    for (auto& c : magic) c = src.get<char>();
    if (std::memcmp(magic, kMagic, 4) != 0) throw ProtocolError("bad codebook magic");
    if (src.get<uint32_t>() != kVersion) throw ProtocolError("unsupported codebook version");

    CodebookSet cb;
    uint64_t n = src.get<uint64_t>();
    cb.entries_ = src.get<uint64_t>();
    cb.latent_dim_ = src.get<uint64_t>();
    uint64_t d = src.get<uint64_t>();
    cb.seed_ = src.get<uint64_t>();
    for (uint64_t l = 0; l < n; ++l) {
        std::vector<double> s;
        src.get_doubles(s, cb.entries_ * cb.latent_dim_);
        cb.stages_.push_back(std::move(s));
    }
    cb.decoder_w_ = Mat(d, cb.latent_dim_);
    src.get_doubles(cb.decoder_w_.a, d * cb.latent_dim_);
    src.get_doubles(cb.decoder_c_, d);
    uint64_t stored = src.get<uint64_t>();
    cb.finish_construction();
    if (stored != cb.checksum_) throw ProtocolError("codebook checksum mismatch");
    return cb;
}

}  // namespace adahi
