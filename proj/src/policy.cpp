#include <cmath>

#include "adahi/kernels.hpp"
#include "adahi/policy.hpp"

namespace adahi {

void CategoricalBundle::validate(double tol) const {
    if (p.size() != n * K || n == 0 || K == 0) {
        throw ContractError("bundle shape mismatch");
    }
    for (std::size_t l = 0; l < n; ++l) {
        double sum = 0.0;
        for (double v : row(l)) {
            if (!(v >= 0.0)) throw ContractError("bundle has negative or NaN mass");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) {
            throw ContractError("bundle row " + std::to_string(l) + " sums to " +
                                std::to_string(sum));
        }
    }
}

PolicyHead::PolicyHead(PolicyHeadConfig cfg, std::size_t action_dim,
                       uint64_t perturb_seed)
    : cfg_(std::move(cfg)) {
    if (cfg_.temperature <= 0.0) throw ConfigError("policy: temperature must be positive");
    RngStream rng(perturb_seed);
    gain_map_ = Mat(action_dim, action_dim);
    for (std::size_t i = 0; i < action_dim; ++i) {
        for (std::size_t j = 0; j < action_dim; ++j) {
            gain_map_(i, j) = cfg_.gain_noise * rng.normal() / std::sqrt(double(action_dim));
        }
        gain_map_(i, i) += cfg_.gain;
    }
}

Vec PolicyHead::ideal_action(const Observation& o) const {
    if (o.state.size() != gain_map_.cols || o.goal.size() != o.state.size()) {
        throw ContractError("policy: observation dimension mismatch");
    }
    Vec err = sub(o.goal, o.state);
    return matvec(gain_map_, err);
}

LogitMatrix PolicyHead::logits(const Observation& o, const CodebookSet& cb) const {
    if (cb.action_dim() != gain_map_.rows) {
        throw ContractError("policy: codebook action dimension mismatch");
    }
    Vec ideal = ideal_action(o);
    Vec r = cb.lift(ideal);

    const std::size_t n = cb.num_stages();
    const std::size_t K = cb.entries_per_stage();
    LogitMatrix out{n, K, std::vector<double>(n * K)};
    std::vector<double> dist(K);
    for (std::size_t l = 0; l < n; ++l) {
        kernels::l2sq_batch(r.data(), cb.stage_entries(l).data(), K,
                            cb.latent_dim(), dist.data());
        uint32_t best = 0;
        for (uint32_t k = 0; k < K; ++k) {
            out.z[l * K + k] = -dist[k] / cfg_.temperature;
            if (dist[k] < dist[best]) best = k;
        }
        kernels::axpy(-1.0, cb.entry(l, best).data(), r.data(), cb.latent_dim());
    }
    return out;
}

Vec PolicyHead::offset(const Observation& o, const CodebookSet& cb) const {
    Vec ideal = ideal_action(o);
    CodeTuple t = cb.encode_residual(ideal);
    Vec resid = sub(ideal, cb.decode(t));
    Vec v = scaled(resid, cfg_.offset_scale);
    double nrm = norm2(v);
    if (nrm > cfg_.offset_scale && nrm > 0.0) {
        v = scaled(v, cfg_.offset_scale / nrm);
    }
    return v;
}

CategoricalBundle normalize(const LogitMatrix& logits) {
    for (double z : logits.z) {
        if (!std::isfinite(z)) throw ContractError("normalize: non-finite logit");
    }
    CategoricalBundle b{logits.n, logits.K, logits.z};
    for (std::size_t l = 0; l < b.n; ++l) {
        kernels::softmax_inplace(b.row(l).data(), b.K);
    }
    return b;
}

CodeTuple sample_codes(const CategoricalBundle& b, RngStream& rng) {
    b.validate();
    CodeTuple t;
    t.indices.reserve(b.n);
    for (std::size_t l = 0; l < b.n; ++l) {
        double u = rng.uniform();
        auto row = b.row(l);
        double cum = 0.0;
        uint32_t chosen = uint32_t(b.K - 1);
        for (std::size_t k = 0; k < b.K; ++k) {
            cum += row[k];
            if (u < cum) {
                chosen = uint32_t(k);
                break;
            }
        }
        t.indices.push_back(chosen);
    }
    return t;
}

ActResult act(const PolicyHead& head, const Observation& o, const CodebookSet& cb,
              RngStream& rng) {
    ActResult res;
    res.bundle = normalize(head.logits(o, cb));
    res.codes = sample_codes(res.bundle, rng);
    res.decoded = cb.decode(res.codes);
    res.action = add(res.decoded, head.offset(o, cb));
    return res;
}

}  // namespace adahi
