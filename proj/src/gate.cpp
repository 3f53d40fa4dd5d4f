#include <algorithm>
#include <cmath>

#include "adahi/gate.hpp"

namespace adahi {

double RejectionModel::predict(double delta) const {
    double v;
    if (form == Form::logarithmic) {
        if (kappa <= 0.0) throw ConfigError("rejection model: kappa must be positive");
        v = m * std::log1p(kappa * delta) + b;
    } else {
        v = m * delta + b;
    }
    return std::clamp(v, 0.0, 1.0);
}

DeviationGate::DeviationGate(std::size_t action_dim, double alpha, double sigma,
                             double threshold, RejectionModel model)
    : ema_(action_dim, 0.0),
      alpha_(alpha),
      sigma_(sigma),
      threshold_(threshold),
      model_(model) {
    if (alpha <= 0.0 || alpha > 1.0) throw ConfigError("gate: alpha must be in (0,1]");
    if (sigma <= 0.0) throw ConfigError("gate: sigma must be positive");
    if (threshold < 0.0) throw ConfigError("gate: threshold must be non-negative");
}

void DeviationGate::observe_executed(std::span<const double> prev_action) {
    if (prev_action.size() != ema_.size()) {
        throw ContractError("gate: action dimension mismatch");
    }
    if (!initialized_) {
        ema_.assign(prev_action.begin(), prev_action.end());
        initialized_ = true;
        return;
    }
    for (std::size_t i = 0; i < ema_.size(); ++i) {
        ema_[i] = (1.0 - alpha_) * ema_[i] + alpha_ * prev_action[i];
    }
}

double DeviationGate::deviation(std::span<const double> a) const {
    if (!initialized_) throw ContractError("gate: deviation before first action");
    if (a.size() != ema_.size()) throw ContractError("gate: action dimension mismatch");
    return norm2(sub(a, ema_)) / sigma_;
}

}  // namespace adahi
