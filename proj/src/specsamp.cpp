#include <algorithm>
#include <cmath>

#include "adahi/specsamp.hpp"

namespace adahi {

std::vector<double> adjust(std::span<const double> q, std::span<const double> p,
                           bool literal) {
    if (q.size() != p.size()) throw ContractError("adjust: shape mismatch");
    std::vector<double> out(q.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        double r = literal ? q[k] - p[k] : p[k] - q[k];
        out[k] = std::max(r, 0.0);
        sum += out[k];
    }
    if (sum <= 0.0) throw ContractError("adjust: all-zero residual (p == q)");
    for (auto& v : out) v /= sum;
    return out;
}

std::pair<uint32_t, bool> verify_one(std::span<const double> q,
                                     std::span<const double> p, uint32_t draft_idx,
                                     RngStream& rng, bool literal) {
    if (q.size() != p.size()) throw ContractError("verify_one: shape mismatch");
    if (draft_idx >= q.size()) throw ContractError("verify_one: draft index out of range");
    if (q[draft_idx] <= 0.0) {
        throw ContractError("verify_one: draft index has zero draft probability");
    }
    double ratio = std::min(1.0, p[draft_idx] / q[draft_idx]);
    double u = rng.uniform();
    if (u <= ratio) return {draft_idx, true};

    std::vector<double> resid = adjust(q, p, literal);
    double v = rng.uniform();
    double cum = 0.0;
    uint32_t chosen = uint32_t(resid.size() - 1);
    for (std::size_t k = 0; k < resid.size(); ++k) {
        cum += resid[k];
        if (v < cum) {
            chosen = uint32_t(k);
            break;
        }
    }
    return {chosen, false};
}

VerifyOutcome verify_tuple(const CategoricalBundle& qb, const CategoricalBundle& pb,
                           const CodeTuple& draft, RngStream& rng, bool literal) {
    if (qb.n != pb.n || qb.K != pb.K) throw ContractError("verify_tuple: bundle shape mismatch");
    if (draft.indices.size() != qb.n) throw ContractError("verify_tuple: draft length mismatch");

    VerifyOutcome out;
    out.final.indices.resize(qb.n);
    out.accepted_mask.resize(qb.n);
    for (std::size_t l = 0; l < qb.n; ++l) {
        RngStream sub = rng.substream(l);
        auto [idx, accepted] = verify_one(qb.row(l), pb.row(l), draft.indices[l], sub, literal);
        out.final.indices[l] = idx;
        out.accepted_mask[l] = accepted;
    }
    out.primary_rejected = !out.accepted_mask[0];
    return out;
}

double expected_rejection(std::span<const double> q, std::span<const double> p) {
    if (q.size() != p.size()) throw ContractError("expected_rejection: shape mismatch");
    double overlap = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) overlap += std::min(p[k], q[k]);
    return std::clamp(1.0 - overlap, 0.0, 1.0);
}

}  // namespace adahi
