#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "adahi/harness.hpp"

namespace adahi {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_vec(const Vec& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ';';
        out += fmt(v[i]);
    }
    return out;
}

Vec parse_vec(const std::string& s) {
    Vec v;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
        if (!tok.empty()) v.push_back(std::stod(tok));
    }
    return v;
}

double sample_rtt_ms(const InjectedDelayConfig& delay, RngStream& rng) {
    double d = delay.mean_ms + delay.jitter_ms * rng.normal();
    return d > 0.0 ? d : 0.0;
}

}  // namespace

Mode mode_from_string(const std::string& s) {
    if (s == "draft_only") return Mode::draft_only;
    if (s == "target_only") return Mode::target_only;
    if (s == "hybrid") return Mode::hybrid;
    if (s == "random") return Mode::random;
    if (s == "adahi") return Mode::adahi;
    throw ConfigError("unknown mode: " + s +
                      " (expected draft_only|target_only|hybrid|random|adahi)");
}

std::string mode_to_string(Mode m) {
    switch (m) {
        case Mode::draft_only: return "draft_only";
        case Mode::target_only: return "target_only";
        case Mode::hybrid: return "hybrid";
        case Mode::random: return "random";
        case Mode::adahi: return "adahi";
    }
    return "?";
}

GateParams GateParams::from_artifact(const CalibrationArtifact& art) {
    GateParams g;
    g.alpha = art.alpha;
    g.sigma = art.sigma;
    g.threshold = art.delta_th;
    g.model = art.model;
    return g;
}

EpisodeRecord run_episode(const RunContext& ctx, const RunOptions& opt,
                          uint64_t episode_index) {
    const EnvSpec& env = *ctx.env;
    const CodebookSet& cb = *ctx.cb;

    RngStream ep = RngStream(opt.seed).substream(episode_index);
    Observation o = reset(env, ep.substream(0).seed());
    RngStream draft_rng = ep.substream(1);
    RngStream shadow_rng = ep.substream(2);
    RngStream env_rng = ep.substream(3);
    RngStream target_rng = ep.substream(4);
    RngStream coin_rng = ep.substream(5);
    RngStream token_rng = ep.substream(6);
    RngStream delay_rng = ep.substream(7);

    DeviationGate gate(env.action_dim, ctx.gate.alpha, ctx.gate.sigma,
                       ctx.gate.threshold, ctx.gate.model);

    EpisodeRecord rec;
    rec.mode = opt.mode;
    rec.seed = ep.seed();

    const std::string checksum = checksum_hex(cb);

    for (std::size_t t = 0; t < env.horizon; ++t) {
        StepRow row;
        row.step = int64_t(t);
        auto wall0 = std::chrono::steady_clock::now();
        double modeled_ms = 0.0;

        Vec executed;
        std::optional<ActResult> draft_act;
        if (opt.mode != Mode::target_only) {
            draft_act = act(*ctx.draft, o, cb, draft_rng);
            row.delta = gate.initialized() ? gate.deviation(draft_act->decoded) : kNan;
            modeled_ms += opt.compute.draft_ms;
        } else {
            row.delta = kNan;
        }

        bool transmit = false;
        switch (opt.mode) {
            case Mode::draft_only:
            case Mode::target_only: transmit = false; break;
            case Mode::hybrid: transmit = true; break;
            case Mode::random: transmit = coin_rng.bernoulli(opt.random_tr); break;
            case Mode::adahi:
                transmit = gate.initialized() && gate.should_transmit(row.delta);
                break;
        }
        row.transmitted = transmit;

        if (opt.mode == Mode::target_only) {
            ActResult ta = act(*ctx.target, o, cb, target_rng);
            executed = std::move(ta.action);
            modeled_ms += opt.compute.server_ms;
        } else if (transmit) {
            VerifyRequest req;
            req.episode_id = int64_t(episode_index);
            req.step = int64_t(t);
            req.state = o.state;
            req.goal = o.goal;
            req.q_bundle = draft_act->bundle;
            req.draft_indices = draft_act->codes;
            req.codebook_checksum = checksum;
            req.rng_token = token_rng.substream(t).seed();

            VerifyReply reply;
            bool failed = false;
            try {
                if (ctx.client != nullptr) {
                    reply = ctx.client->verify(req, nullptr);
                } else {
                    reply = serve_verify(req, *ctx.target, cb, opt.literal_adjust);
                }
                if (reply.status != VerifyReply::Status::ok) failed = true;
            } catch (const TransportError&) {
                failed = true;
            }
            if (failed) {
                row.fallback = true;
                executed = draft_act->decoded;
            } else {
                row.primary_rejected = !reply.accepted_mask[0];
                executed = add(cb.decode(reply.final_indices),
                               ctx.draft->offset(o, cb));
                modeled_ms += sample_rtt_ms(opt.delay, delay_rng) + opt.compute.server_ms;
            }
        } else {
            executed = draft_act->decoded;
            if (opt.shadow) {
                CategoricalBundle pb = normalize(ctx.target->logits(o, cb));
                RngStream sub = shadow_rng.substream(t);
                auto [idx, accepted] =
                    verify_one(draft_act->bundle.row(0), pb.row(0),
                               draft_act->codes.indices[0], sub, opt.literal_adjust);
                (void)idx;
                row.shadow_would_reject = !accepted;
            }
        }

        gate.observe_executed(executed);
        StepResult sr = step(env, o, executed, env_rng);

        if (opt.modeled_latency) {
            row.latency_micros = int64_t(std::llround(modeled_ms * 1000.0));
        } else {
            auto wall1 = std::chrono::steady_clock::now();
            row.latency_micros =
                std::chrono::duration_cast<std::chrono::microseconds>(wall1 - wall0)
                    .count();
        }
        row.success = sr.success;
        row.action = executed;
        row.expert_action = std::move(sr.expert_action);
        rec.rows.push_back(std::move(row));

        if (sr.success) {
            rec.success = true;
            break;
        }
        o.state = std::move(sr.next_state);
        o.step = int64_t(t) + 1;
    }
    rec.steps_used = rec.rows.size();
    return rec;
}

std::vector<EpisodeRecord> run_episodes(const RunContext& ctx, const RunOptions& opt) {
    std::vector<EpisodeRecord> out;
    out.reserve(opt.episodes);
    for (std::size_t e = 0; e < opt.episodes; ++e) {
        out.push_back(run_episode(ctx, opt, e));
    }
    return out;
}

std::optional<double> shadow_tsr(const std::vector<EpisodeRecord>& records) {
    // The first step of every episode is executed locally by construction and
    // the gate is undefined there, so skip quality is only measured for steps
    // with an actual transmit decision (t >= 1) in every mode.
    std::size_t skips = 0, accepted = 0;
    for (const auto& rec : records) {
        for (const auto& row : rec.rows) {
            if (row.step == 0) continue;
            if (!row.transmitted && row.shadow_would_reject.has_value()) {
                ++skips;
                if (!*row.shadow_would_reject) ++accepted;
            }
        }
    }
    if (skips == 0) return std::nullopt;
    return double(accepted) / double(skips);
}

std::vector<double> throughput_samples(const std::vector<EpisodeRecord>& records) {
    std::vector<double> out;
    for (const auto& rec : records) {
        int64_t total = 0;
        for (const auto& row : rec.rows) total += row.latency_micros;
        if (total > 0 && !rec.rows.empty()) {
            out.push_back(double(rec.rows.size()) / (double(total) * 1e-6));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

RunReport compute_metrics(const std::vector<EpisodeRecord>& records,
                          uint64_t config_hash) {
    if (records.empty()) throw ContractError("compute_metrics: no episodes");
    RunReport r;
    r.mode = records.front().mode;
    r.episodes = records.size();
    r.config_hash = config_hash;

    std::size_t successes = 0, transmitted = 0, steps = 0;
    double sq_err = 0.0;
    std::size_t err_terms = 0;
    int64_t total_latency = 0;
    for (const auto& rec : records) {
        successes += rec.success ? 1 : 0;
        for (const auto& row : rec.rows) {
            ++steps;
            transmitted += row.transmitted ? 1 : 0;
            r.fallback_count += row.fallback ? 1 : 0;
            total_latency += row.latency_micros;
            for (std::size_t i = 0; i < row.action.size(); ++i) {
                double d = row.action[i] - row.expert_action[i];
                sq_err += d * d;
                ++err_terms;
            }
        }
    }
    r.total_steps = steps;
    r.task_success_rate = double(successes) / double(records.size());
    r.mse = err_terms > 0 ? sq_err / double(err_terms) : 0.0;
    r.tr = steps > 0 ? double(transmitted) / double(steps) : 0.0;
    r.tsr = shadow_tsr(records);
    r.mean_per_action_latency_ms = steps > 0 ? double(total_latency) / 1000.0 / double(steps) : 0.0;

    std::vector<double> tp = throughput_samples(records);
    if (!tp.empty()) {
        double sum = 0.0;
        for (double v : tp) sum += v;
        r.throughput_mean = sum / double(tp.size());
        std::size_t idx = std::size_t(std::floor(0.025 * double(tp.size() - 1)));
        r.throughput_p2_5 = tp[idx];
    }
    return r;
}

void write_step_log(const std::filesystem::path& path,
                    const std::vector<EpisodeRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write step log: " + path.string());
    out << "episode,step,mode,seed,delta,transmitted,primary_rejected,"
           "shadow_would_reject,fallback,latency_micros,success,action,expert_action\n";
    for (std::size_t e = 0; e < records.size(); ++e) {
        const auto& rec = records[e];
        for (const auto& row : rec.rows) {
            out << e << ',' << row.step << ',' << mode_to_string(rec.mode) << ','
                << rec.seed << ',' << (std::isnan(row.delta) ? "" : fmt(row.delta))
                << ',' << (row.transmitted ? 1 : 0) << ','
                << (row.primary_rejected ? (*row.primary_rejected ? "1" : "0") : "")
                << ','
                << (row.shadow_would_reject ? (*row.shadow_would_reject ? "1" : "0") : "")
                << ',' << (row.fallback ? 1 : 0) << ',' << row.latency_micros << ','
                << (row.success ? 1 : 0) << ',' << join_vec(row.action) << ','
                << join_vec(row.expert_action) << "\n";
        }
    }
}

std::vector<EpisodeRecord> read_step_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open step log: " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<EpisodeRecord> records;
    int64_t current_episode = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f[13];
        for (int i = 0; i < 13; ++i) std::getline(ss, f[i], ',');
        int64_t episode = std::stoll(f[0]);
        if (episode != current_episode) {
            records.emplace_back();
            records.back().mode = mode_from_string(f[2]);
            records.back().seed = std::stoull(f[3]);
            current_episode = episode;
        }
        StepRow row;
        row.step = std::stoll(f[1]);
        row.delta = f[4].empty() ? kNan : std::stod(f[4]);
        row.transmitted = f[5] == "1";
        if (!f[6].empty()) row.primary_rejected = f[6] == "1";
        if (!f[7].empty()) row.shadow_would_reject = f[7] == "1";
        row.fallback = f[8] == "1";
        row.latency_micros = std::stoll(f[9]);
        row.success = f[10] == "1";
        row.action = parse_vec(f[11]);
        row.expert_action = parse_vec(f[12]);
        records.back().rows.push_back(std::move(row));
    }
    for (auto& rec : records) {
        rec.steps_used = rec.rows.size();
        for (const auto& row : rec.rows) {
            if (row.success) rec.success = true;
        }
    }
    return records;
}

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<RunReport>& reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write report: " + path.string());
    out << "mode,episodes,total_steps,task_success_rate,mse,tr,tsr,"
           "mean_per_action_latency_ms,throughput_mean,throughput_p2_5,"
           "fallback_count,config_hash\n";
    for (const auto& r : reports) {
        out << mode_to_string(r.mode) << ',' << r.episodes << ',' << r.total_steps
            << ',' << fmt(r.task_success_rate) << ',' << fmt(r.mse) << ','
            << fmt(r.tr) << ',' << (r.tsr ? fmt(*r.tsr) : std::string("")) << ','
            << fmt(r.mean_per_action_latency_ms) << ',' << fmt(r.throughput_mean)
            << ',' << fmt(r.throughput_p2_5) << ',' << r.fallback_count << ','
            << r.config_hash << "\n";
    }
}

void write_throughput_cdf_csv(const std::filesystem::path& path,
                              const std::vector<EpisodeRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write cdf csv: " + path.string());
    out << "throughput_per_s,cdf\n";
    std::vector<double> tp = throughput_samples(records);
    for (std::size_t i = 0; i < tp.size(); ++i) {
        out << fmt(tp[i]) << ',' << fmt(double(i + 1) / double(tp.size())) << "\n";
    }
}

}  // namespace adahi
