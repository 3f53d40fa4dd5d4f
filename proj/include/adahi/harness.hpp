#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adahi/calibrate.hpp"
#include "adahi/env.hpp"
#include "adahi/gate.hpp"
#include "adahi/proto.hpp"

namespace adahi {

enum class Mode { draft_only, target_only, hybrid, random, adahi };

Mode mode_from_string(const std::string& s);
std::string mode_to_string(Mode m);

struct StepRow {
    int64_t step = 0;
    double delta = 0.0;  // NaN when undefined (t = 0, target_only)
    bool transmitted = false;
    std::optional<bool> primary_rejected;      // transmitted steps only
    std::optional<bool> shadow_would_reject;   // shadow-verified skips only
    bool fallback = false;
    int64_t latency_micros = 0;
    bool success = false;
    Vec action;
    Vec expert_action;
};

struct EpisodeRecord {
    std::vector<StepRow> rows;
    bool success = false;
    std::size_t steps_used = 0;
    Mode mode = Mode::draft_only;
    uint64_t seed = 0;
};

struct ComputeModel {
    double draft_ms = 2.0;   // per-step device compute in the latency model
    double server_ms = 4.0;  // target compute when invoked
};

struct RunOptions {
    Mode mode = Mode::adahi;
    std::size_t episodes = 200;
    uint64_t seed = 1;
    bool shadow = false;
    double random_tr = 0.6;           // transmit probability in random mode
    bool modeled_latency = false;     // deterministic injected-delay latency
    InjectedDelayConfig delay;
    ComputeModel compute;
    bool literal_adjust = false;
};

struct GateParams {
    double alpha = 0.6;
    double sigma = 1.0;
    double threshold = DeviationGate::never_transmit_threshold();
    RejectionModel model;

    static GateParams from_artifact(const CalibrationArtifact& art);
};

struct RunContext {
    const EnvSpec* env = nullptr;
    const PolicyHead* draft = nullptr;
    const PolicyHead* target = nullptr;
    const CodebookSet* cb = nullptr;
    GateParams gate;
    VerifyClient* client = nullptr;  // null: direct in-process serve_verify
};

EpisodeRecord run_episode(const RunContext& ctx, const RunOptions& opt,
                          uint64_t episode_index);
std::vector<EpisodeRecord> run_episodes(const RunContext& ctx, const RunOptions& opt);

struct RunReport {
    Mode mode = Mode::adahi;
    std::size_t episodes = 0;
    std::size_t total_steps = 0;
    double task_success_rate = 0.0;
    double mse = 0.0;  // per-component squared error of executed vs expert
    double tr = 0.0;
    std::optional<double> tsr;
    double mean_per_action_latency_ms = 0.0;
    double throughput_mean = 0.0;   // per-episode actions/s, averaged
    double throughput_p2_5 = 0.0;   // 2.5th percentile of per-episode throughput
    std::size_t fallback_count = 0;
    uint64_t config_hash = 0;
};

RunReport compute_metrics(const std::vector<EpisodeRecord>& records,
                          uint64_t config_hash = 0);

// Fraction of shadow-verified skipped steps whose primary draft index would
// have been accepted. Absent when no such steps exist.
std::optional<double> shadow_tsr(const std::vector<EpisodeRecord>& records);

// Per-episode throughput values (actions per second), sorted ascending.
std::vector<double> throughput_samples(const std::vector<EpisodeRecord>& records);

// Step-log CSV (documented header; vector fields are ';'-separated).
void write_step_log(const std::filesystem::path& path,
                    const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_step_log(const std::filesystem::path& path);

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<RunReport>& reports);
void write_throughput_cdf_csv(const std::filesystem::path& path,
                              const std::vector<EpisodeRecord>& records);

}  // namespace adahi
