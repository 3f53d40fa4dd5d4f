#pragma once

#include <limits>
#include <span>

#include "adahi/linalg.hpp"

namespace adahi {

struct RejectionModel {
    enum class Form { linear, logarithmic };

    Form form = Form::linear;
    double m = 0.0;
    double b = 0.0;
    double kappa = 1.0;  // logarithmic form only

    // Predicted primary-codebook rejection probability, clamped to [0,1].
    double predict(double delta) const;
};

// Episode-local deviation gate: EMA of executed actions, normalized
// deviation, and the transmit decision against the calibrated threshold.
class DeviationGate {
  public:
    DeviationGate(std::size_t action_dim, double alpha, double sigma,
                  double threshold, RejectionModel model);

    // Feeds the previously executed action into the EMA. The first call
    // initializes the EMA with the action verbatim.
    void observe_executed(std::span<const double> prev_action);

    // ||a - ema||_2 / sigma. Requires at least one observed action.
    double deviation(std::span<const double> a) const;

    // Strict comparison: transmit iff delta > threshold.
    bool should_transmit(double delta) const { return delta > threshold_; }

    bool initialized() const { return initialized_; }
    double alpha() const { return alpha_; }
    double sigma() const { return sigma_; }
    double threshold() const { return threshold_; }
    const Vec& ema() const { return ema_; }
    const RejectionModel& model() const { return model_; }

    static constexpr double never_transmit_threshold() {
        return std::numeric_limits<double>::infinity();
    }

  private:
    Vec ema_;
    double alpha_;
    double sigma_;
    double threshold_;
    bool initialized_ = false;
    RejectionModel model_;
};

}  // namespace adahi
