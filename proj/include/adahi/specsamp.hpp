#pragma once

#include <span>
#include <vector>

#include "adahi/policy.hpp"
#include "adahi/rng.hpp"

namespace adahi {

struct VerifyOutcome {
    CodeTuple final;
    std::vector<bool> accepted_mask;
    bool primary_rejected = false;
};

// Residual distribution used to resample a rejected draft index. The
// standard residual is max(p - q, 0) renormalized; literal = true flips the
// operands (kept selectable for comparison runs, see --paper-literal-adjust).
std::vector<double> adjust(std::span<const double> q, std::span<const double> p,
                           bool literal = false);

// Accept draft_idx with probability min(1, p/q); on rejection resample from
// adjust(q, p). Returns (final index, accepted flag).
std::pair<uint32_t, bool> verify_one(std::span<const double> q,
                                     std::span<const double> p, uint32_t draft_idx,
                                     RngStream& rng, bool literal = false);

// Applies verify_one per codebook with independent rng substreams.
VerifyOutcome verify_tuple(const CategoricalBundle& qb, const CategoricalBundle& pb,
                           const CodeTuple& draft, RngStream& rng,
                           bool literal = false);

// 1 - sum_k min(p_k, q_k): closed-form rejection probability of a draft
// index sampled from q and verified against p. Diagnostics and tests only.
double expected_rejection(std::span<const double> q, std::span<const double> p);

}  // namespace adahi
