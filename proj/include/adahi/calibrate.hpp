#pragma once

#include <filesystem>
#include <vector>

#include "adahi/env.hpp"
#include "adahi/gate.hpp"
#include "adahi/policy.hpp"
#include "adahi/specsamp.hpp"

namespace adahi {

struct CalibrationSample {
    double delta_net = 0.0;
    bool primary_rejected = false;
    double delta_normalized = 0.0;
};

struct CalibrationCorpus {
    std::vector<CalibrationSample> samples;
    double sigma = 0.0;
};

struct BinPoint {
    double mean_delta = 0.0;
    double rejection_rate = 0.0;
    std::size_t size = 0;
};

struct FitResult {
    RejectionModel linear;
    RejectionModel logarithmic;
    double corr_linear = 0.0;
    double corr_log = 0.0;
};

struct CalibrationArtifact {
    double sigma = 0.0;
    double alpha = 0.0;
    RejectionModel model;
    double corr_linear = 0.0;
    double corr_log = 0.0;
    double delta_th = 0.0;
    double tau_star = 0.0;
    double target_tr = 0.0;
    std::size_t bin_count = 0;
    std::vector<BinPoint> bins;
    uint64_t config_hash = 0;
    uint64_t seed = 0;

    void save(const std::filesystem::path& path) const;
    static CalibrationArtifact load(const std::filesystem::path& path);
};

// Population standard deviation (divide by N).
double compute_sigma(const std::vector<double>& raw_net_deviations);

// Sorts by normalized delta and splits into contiguous equal-count bins
// (sizes differ by at most 1; ties resolve by stable sample order).
std::vector<BinPoint> bin_equal_count(const CalibrationCorpus& corpus,
                                      std::size_t n_bins);

// OLS linear fit plus logarithmic fit with kappa found by grid search over
// 64 log-spaced values in [0.01, 100]. Correlations are Pearson r between
// fitted and empirical bin rates.
FitResult fit_models(const std::vector<BinPoint>& bins);

// Deviation threshold achieving predicted rejection tau under the model.
double invert_threshold(const RejectionModel& model, double tau);

// Empirical (1 - target_tr) lower-interpolation quantile of the model's
// predicted rejection probabilities over the corpus.
double tau_for_tr(const CalibrationCorpus& corpus, const RejectionModel& model,
                  double target_tr);

struct ShadowCorpusConfig {
    std::size_t min_actions = 50000;
    double alpha = 0.6;
    bool literal_adjust = false;
};

// Runs draft-only shadow episodes, verifying the primary draft index against
// the target head at every step without affecting execution.
CalibrationCorpus build_corpus(const EnvSpec& env, const PolicyHead& draft,
                               const PolicyHead& target, const CodebookSet& cb,
                               const ShadowCorpusConfig& cfg, uint64_t seed);

struct CalibratePipelineConfig {
    std::size_t n_bins = 20;
    double target_tr = 0.6;
    uint64_t config_hash = 0;
};

// Full offline pipeline: corpus -> sigma -> bins -> model fits -> form
// selection by higher |correlation| -> tau* -> delta_th.
CalibrationArtifact calibrate_pipeline(const CalibrationCorpus& corpus,
                                       double alpha,
                                       const CalibratePipelineConfig& cfg,
                                       uint64_t seed);

}  // namespace adahi
