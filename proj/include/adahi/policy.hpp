#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adahi/quantizer.hpp"
#include "adahi/rng.hpp"

namespace adahi {

struct Observation {
    Vec state;
    Vec goal;
    int64_t step = 0;
};

// Per-codebook probability rows, n x K row-major.
struct CategoricalBundle {
    std::size_t n = 0;
    std::size_t K = 0;
    std::vector<double> p;

    std::span<const double> row(std::size_t l) const { return {p.data() + l * K, K}; }
    std::span<double> row(std::size_t l) { return {p.data() + l * K, K}; }

    // Checks shape, non-negativity and row sums within tol.
    void validate(double tol = 1e-9) const;
};

struct LogitMatrix {
    std::size_t n = 0;
    std::size_t K = 0;
    std::vector<double> z;

    std::span<const double> row(std::size_t l) const { return {z.data() + l * K, K}; }
};

struct PolicyHeadConfig {
    double gain = 0.5;
    double temperature = 0.5;
    double gain_noise = 0.0;
    double offset_scale = 0.1;
    std::string role = "target";  // draft | target
};

// Distance-based code predictor standing in for a learned policy backbone.
// The ideal action is a perturbed linear feedback on (goal - state); stage
// logits are negated squared distances of codebook entries to the residual
// recursion, scaled by temperature.
class PolicyHead {
  public:
    PolicyHead(PolicyHeadConfig cfg, std::size_t action_dim, uint64_t perturb_seed);

    Vec ideal_action(const Observation& o) const;
    LogitMatrix logits(const Observation& o, const CodebookSet& cb) const;
    Vec offset(const Observation& o, const CodebookSet& cb) const;

    const PolicyHeadConfig& config() const { return cfg_; }
    std::size_t action_dim() const { return gain_map_.rows; }

  private:
    PolicyHeadConfig cfg_;
    Mat gain_map_;  // gain * I + gain_noise * E, fixed at construction
};

CategoricalBundle normalize(const LogitMatrix& logits);

CodeTuple sample_codes(const CategoricalBundle& b, RngStream& rng);

struct ActResult {
    Vec action;      // decoded + offset
    Vec decoded;     // decoded without the offset head
    CodeTuple codes;
    CategoricalBundle bundle;
};

ActResult act(const PolicyHead& head, const Observation& o, const CodebookSet& cb,
              RngStream& rng);

}  // namespace adahi
