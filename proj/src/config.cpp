#include <fstream>

#include <nlohmann/json.hpp>

#include "adahi/config.hpp"
#include "adahi/hash.hpp"

namespace adahi {

using json = nlohmann::json;

namespace {

PolicyHeadConfig default_draft() {
    PolicyHeadConfig c;
    c.role = "draft";
    c.gain = 0.5;
    c.temperature = 0.3;
    c.gain_noise = 0.3;
    c.offset_scale = 0.1;
    return c;
}

PolicyHeadConfig default_target() {
    PolicyHeadConfig c;
    c.role = "target";
    c.gain = 0.5;
    c.temperature = 0.2;
    c.gain_noise = 0.0;
    c.offset_scale = 0.1;
    return c;
}

void read_head(const json& j, PolicyHeadConfig& c) {
    c.gain = j.value("gain", c.gain);
    c.temperature = j.value("temperature", c.temperature);
    c.gain_noise = j.value("gain_noise", c.gain_noise);
    c.offset_scale = j.value("offset_scale", c.offset_scale);
}

}  // namespace

AppConfig AppConfig::defaults() {
    AppConfig c;
    c.draft = default_draft();
    c.target = default_target();
    c.quantizer.num_stages = 2;
    c.quantizer.entries = 16;
    c.quantizer.scale = 0.0;  // auto
    return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }

    AppConfig c = defaults();
    if (j.contains("env")) {
        c.env_fixture = j["env"].value("fixture", c.env_fixture);
    }
    if (j.contains("quantizer")) {
        const auto& q = j["quantizer"];
        c.quantizer.num_stages = q.value("num_stages", c.quantizer.num_stages);
        c.quantizer.entries = q.value("entries", c.quantizer.entries);
        c.quantizer.scale = q.value("scale", c.quantizer.scale);
        c.quantizer.decay = q.value("decay", c.quantizer.decay);
        c.quantizer_seed = q.value("seed", c.quantizer_seed);
    }
    if (j.contains("policy")) {
        if (j["policy"].contains("draft")) read_head(j["policy"]["draft"], c.draft);
        if (j["policy"].contains("target")) read_head(j["policy"]["target"], c.target);
    }
    if (j.contains("gate")) {
        c.alpha = j["gate"].value("alpha", c.alpha);
        c.artifact_path = j["gate"].value("artifact", c.artifact_path);
    }
    if (j.contains("calibration")) {
        const auto& cal = j["calibration"];
        c.calibration.min_actions = cal.value("min_actions", c.calibration.min_actions);
        c.n_bins = cal.value("n_bins", c.n_bins);
        c.target_tr = cal.value("target_tr", c.target_tr);
    }
    if (j.contains("proto")) {
        const auto& p = j["proto"];
        c.endpoint_host = p.value("host", c.endpoint_host);
        c.endpoint_port = p.value("port", c.endpoint_port);
        c.timeout_ms = p.value("timeout_ms", c.timeout_ms);
        c.retries = p.value("retries", c.retries);
        c.max_payload_bytes = p.value("max_payload_bytes", c.max_payload_bytes);
        c.transport = p.value("transport", c.transport);
        if (p.contains("injected_delay")) {
            const auto& d = p["injected_delay"];
            c.injected_delay.enabled = d.value("enabled", c.injected_delay.enabled);
            c.injected_delay.mean_ms = d.value("mean_ms", c.injected_delay.mean_ms);
            c.injected_delay.jitter_ms = d.value("jitter_ms", c.injected_delay.jitter_ms);
        }
    }
    if (j.contains("run")) {
        const auto& r = j["run"];
        if (r.contains("mode")) c.run.mode = mode_from_string(r["mode"].get<std::string>());
        c.run.episodes = r.value("episodes", c.run.episodes);
        c.run.seed = r.value("seed", c.run.seed);
        c.run.shadow = r.value("shadow", c.run.shadow);
        c.run.random_tr = r.value("random_tr", c.run.random_tr);
        c.run.modeled_latency = r.value("modeled_latency", c.run.modeled_latency);
        c.run.literal_adjust = r.value("paper_literal_adjust", c.run.literal_adjust);
        if (r.contains("compute")) {
            c.run.compute.draft_ms = r["compute"].value("draft_ms", c.run.compute.draft_ms);
            c.run.compute.server_ms = r["compute"].value("server_ms", c.run.compute.server_ms);
        }
    }
    c.run.delay = c.injected_delay;
    c.config_hash = fnv1a(j.dump());
    return c;
}

EnvSpec AppConfig::make_env() const {
    EnvSpec env = make_env_fixture(env_fixture);
    return env;
}

CodebookSet AppConfig::make_codebooks() const {
    QuantizerConfig q = quantizer;
    EnvSpec env = make_env();
    q.action_dim = env.action_dim;
    q.latent_dim = 0;  // latent dim tracks action dim
    if (q.scale <= 0.0) {
        // Auto scale: the codebook has to span the fixture's largest ideal
        // action, which grows with the joint goal distance.
        q.scale = env_fixture == "swarm-2d" ? 1.6 : 1.0;
    }
    return CodebookSet::build(q, quantizer_seed);
}

PolicyHead AppConfig::make_draft(std::size_t action_dim) const {
    return PolicyHead(draft, action_dim, fnv1a("draft") ^ quantizer_seed);
}

PolicyHead AppConfig::make_target(std::size_t action_dim) const {
    return PolicyHead(target, action_dim, fnv1a("target") ^ quantizer_seed);
}

ClientConfig AppConfig::make_client_config() const {
    ClientConfig cc;
    cc.host = endpoint_host;
    cc.port = endpoint_port;
    cc.timeout_ms = timeout_ms;
    cc.retries = retries;
    cc.max_payload_bytes = max_payload_bytes;
    cc.injected_delay = injected_delay;
    return cc;
}

}  // namespace adahi
