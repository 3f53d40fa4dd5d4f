#pragma once

#include <filesystem>
#include <string>

#include "adahi/calibrate.hpp"
#include "adahi/harness.hpp"

namespace adahi {

// Run configuration file (JSON). Every key has a default; see README for
// the documented schema.
struct AppConfig {
    // env
    std::string env_fixture = "reach-2d";

    // quantizer; scale <= 0 means auto (matched to the fixture's action range)
    QuantizerConfig quantizer;
    uint64_t quantizer_seed = 7;

    // policy knobs per role
    PolicyHeadConfig draft;
    PolicyHeadConfig target;

    // gate
    double alpha = 0.6;
    std::string artifact_path;  // calibration artifact, consumed by run/sweep

    // calibration
    ShadowCorpusConfig calibration;
    std::size_t n_bins = 20;
    double target_tr = 0.85;

    // proto
    std::string endpoint_host = "127.0.0.1";
    int endpoint_port = 8077;
    double timeout_ms = 1000.0;
    int retries = 2;
    std::size_t max_payload_bytes = 1 << 20;
    InjectedDelayConfig injected_delay;
    std::string transport = "inprocess";  // inprocess | http

    // run
    RunOptions run;

    uint64_t config_hash = 0;  // FNV-1a of the canonical config dump

    static AppConfig defaults();
    static AppConfig load(const std::filesystem::path& path);

    EnvSpec make_env() const;
    CodebookSet make_codebooks() const;
    PolicyHead make_draft(std::size_t action_dim) const;
    PolicyHead make_target(std::size_t action_dim) const;
    ClientConfig make_client_config() const;
};

}  // namespace adahi
