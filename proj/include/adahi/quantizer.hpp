#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adahi/linalg.hpp"

namespace adahi {

// Ordered indices, one per codebook stage (0-based).
struct CodeTuple {
    std::vector<uint32_t> indices;

    bool operator==(const CodeTuple&) const = default;
};

struct QuantizerConfig {
    std::size_t num_stages = 2;     // n
    std::size_t entries = 16;       // K per stage
    std::size_t latent_dim = 0;     // D; defaults to action_dim when 0
    std::size_t action_dim = 2;     // d
    double scale = 1.0;             // stage-1 entry norm scale
    double decay = 0.5;             // geometric decay of stage norms
    bool include_zero_entry = true; // entry 0 of every stage is the zero vector
};

// The residual-quantized latent action space: n stages of K entries of
// dimension D, plus the affine decoder action = W * (sum of entries) + c.
// Immutable after construction.
class CodebookSet {
  public:
    static CodebookSet build(const QuantizerConfig& cfg, uint64_t seed);

    // Test/fixture constructor from explicit parts. stages[l] holds K*D
    // doubles row-major.
    static CodebookSet from_parts(std::vector<std::vector<double>> stages,
                                  std::size_t entries, std::size_t latent_dim,
                                  Mat decoder_w, Vec decoder_c, uint64_t seed = 0);

    std::size_t num_stages() const { return stages_.size(); }
    std::size_t entries_per_stage() const { return entries_; }
    std::size_t latent_dim() const { return latent_dim_; }
    std::size_t action_dim() const { return decoder_w_.rows; }

    std::span<const double> entry(std::size_t stage, std::size_t k) const;
    const std::vector<double>& stage_entries(std::size_t stage) const {
        return stages_[stage];
    }

    // W * (sum of selected entries) + c
    Vec decode(const CodeTuple& t) const;
    // Sum of selected entries in latent space (no decoder applied).
    Vec latent_sum(const CodeTuple& t) const;

    // Pseudo-inverse lift of an action into latent space: W+ * (a - c).
    Vec lift(std::span<const double> action) const;

    // Greedy residual quantization of an action (lift first).
    CodeTuple encode_residual(std::span<const double> action) const;
    // Same, starting from a latent-space target.
    CodeTuple encode_latent(std::span<const double> latent) const;

    // Nearest entry in one stage to a latent residual, ties to lowest index.
    uint32_t nearest(std::size_t stage, std::span<const double> residual) const;

    void validate_tuple(const CodeTuple& t) const;

    uint64_t checksum() const { return checksum_; }
    uint64_t seed() const { return seed_; }
    const Mat& decoder_w() const { return decoder_w_; }
    const Vec& decoder_c() const { return decoder_c_; }

    void save(const std::filesystem::path& path) const;
    static CodebookSet load(const std::filesystem::path& path);

  private:
    CodebookSet() = default;
    void finish_construction();  // computes lift matrix + checksum

    std::vector<std::vector<double>> stages_;  // per stage: K*D row-major
    std::size_t entries_ = 0;
    std::size_t latent_dim_ = 0;
    Mat decoder_w_;   // d x D
    Vec decoder_c_;   // d
    Mat lift_;        // D x d, W^T (W W^T)^-1
    uint64_t seed_ = 0;
    uint64_t checksum_ = 0;
};

}  // namespace adahi
