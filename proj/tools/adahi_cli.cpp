#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "adahi/config.hpp"

namespace fs = std::filesystem;
using namespace adahi;

namespace {

struct GlobalArgs {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = ".";
};

AppConfig load_config(const GlobalArgs& g) {
    AppConfig cfg = g.config_path.empty() ? AppConfig::defaults()
                                          : AppConfig::load(g.config_path);
    if (g.seed_set) cfg.run.seed = g.seed;
    return cfg;
}

void print_report(const RunReport& r) {
    std::cout << "mode=" << mode_to_string(r.mode) << " episodes=" << r.episodes
              << " steps=" << r.total_steps << " success=" << r.task_success_rate
              << " mse=" << r.mse << " tr=" << r.tr << " tsr="
              << (r.tsr ? std::to_string(*r.tsr) : std::string("n/a"))
              << " latency_ms=" << r.mean_per_action_latency_ms
              << " throughput=" << r.throughput_mean
              << " throughput_p2.5=" << r.throughput_p2_5
              << " fallbacks=" << r.fallback_count << "\n";
}

GateParams gate_params_for(const AppConfig& cfg, Mode mode) {
    GateParams gate;
    gate.alpha = cfg.alpha;
    if (mode == Mode::adahi) {
        if (cfg.artifact_path.empty()) {
            throw ConfigError(
                "adahi mode needs a calibration artifact; run `adahi calibrate` "
                "first and set gate.artifact in the config (or --artifact)");
        }
        gate = GateParams::from_artifact(CalibrationArtifact::load(cfg.artifact_path));
    } else if (!cfg.artifact_path.empty() && fs::exists(cfg.artifact_path)) {
        // Use the calibrated sigma for delta logging when available.
        auto art = CalibrationArtifact::load(cfg.artifact_path);
        gate.sigma = art.sigma;
        gate.alpha = art.alpha;
        gate.model = art.model;
    }
    return gate;
}

int cmd_calibrate(const GlobalArgs& g, const std::string& artifact_out,
                  const std::string& codebooks_out, bool literal) {
    AppConfig cfg = load_config(g);
    EnvSpec env = cfg.make_env();
    CodebookSet cb = cfg.make_codebooks();
    PolicyHead draft = cfg.make_draft(env.action_dim);
    PolicyHead target = cfg.make_target(env.action_dim);

    ShadowCorpusConfig scc = cfg.calibration;
    scc.alpha = cfg.alpha;
    scc.literal_adjust = literal || cfg.run.literal_adjust;
    CalibrationCorpus corpus = build_corpus(env, draft, target, cb, scc, cfg.run.seed);

    CalibratePipelineConfig pcc;
    pcc.n_bins = cfg.n_bins;
    pcc.target_tr = cfg.target_tr;
    pcc.config_hash = cfg.config_hash;
    CalibrationArtifact art = calibrate_pipeline(corpus, cfg.alpha, pcc, cfg.run.seed);

    fs::path out = artifact_out.empty() ? fs::path(g.out_dir) / "calibration.txt"
                                        : fs::path(artifact_out);
    fs::create_directories(out.parent_path().empty() ? "." : out.parent_path());
    art.save(out);
    if (!codebooks_out.empty()) cb.save(codebooks_out);

    std::cout << "calibrated on " << corpus.samples.size() << " actions: sigma="
              << art.sigma << " form="
              << (art.model.form == RejectionModel::Form::logarithmic ? "logarithmic"
                                                                      : "linear")
              << " m=" << art.model.m << " b=" << art.model.b
              << " kappa=" << art.model.kappa << " corr_linear=" << art.corr_linear
              << " corr_log=" << art.corr_log << " tau_star=" << art.tau_star
              << " delta_th=" << art.delta_th << "\n";
    std::cout << "artifact written to " << out.string() << "\n";
    return 0;
}

int cmd_serve(const GlobalArgs& g, const std::string& host, int port, bool literal) {
    AppConfig cfg = load_config(g);
    EnvSpec env = cfg.make_env();
    CodebookSet cb = cfg.make_codebooks();
    PolicyHead target = cfg.make_target(env.action_dim);
    VerifyServer server(target, cb, literal || cfg.run.literal_adjust,
                        cfg.max_payload_bytes);
    std::string h = host.empty() ? cfg.endpoint_host : host;
    int p = port > 0 ? port : cfg.endpoint_port;
    std::cout << "serving /verify on " << h << ":" << p
              << " (codebook " << checksum_hex(cb) << ")\n";
    server.run(h, p);
    return 0;
}

int cmd_run(const GlobalArgs& g, const std::string& mode_str, int episodes,
            double tr, bool shadow, const std::string& artifact, bool literal) {
    AppConfig cfg = load_config(g);
    if (!artifact.empty()) cfg.artifact_path = artifact;
    if (!mode_str.empty()) cfg.run.mode = mode_from_string(mode_str);
    if (episodes > 0) cfg.run.episodes = std::size_t(episodes);
    if (tr >= 0.0) cfg.run.random_tr = tr;
    if (shadow) cfg.run.shadow = true;
    if (literal) cfg.run.literal_adjust = true;

    EnvSpec env = cfg.make_env();
    CodebookSet cb = cfg.make_codebooks();
    PolicyHead draft = cfg.make_draft(env.action_dim);
    PolicyHead target = cfg.make_target(env.action_dim);

    RunContext ctx;
    ctx.env = &env;
    ctx.draft = &draft;
    ctx.target = &target;
    ctx.cb = &cb;
    ctx.gate = gate_params_for(cfg, cfg.run.mode);

    std::unique_ptr<VerifyClient> client;
    if (cfg.transport == "http") {
        client = std::make_unique<HttpVerifyClient>(cfg.make_client_config());
        ctx.client = client.get();
    }

    auto records = run_episodes(ctx, cfg.run);
    RunReport report = compute_metrics(records, cfg.config_hash);

    fs::create_directories(g.out_dir);
    std::string mode = mode_to_string(cfg.run.mode);
    write_step_log(fs::path(g.out_dir) / ("steps_" + mode + ".csv"), records);
    write_report_csv(fs::path(g.out_dir) / ("report_" + mode + ".csv"), {report});
    write_throughput_cdf_csv(fs::path(g.out_dir) / ("cdf_" + mode + ".csv"), records);
    print_report(report);
    return 0;
}

int cmd_report(const GlobalArgs& g, const std::vector<std::string>& inputs) {
    if (inputs.empty()) throw ConfigError("report: need at least one step-log CSV");
    std::vector<RunReport> reports;
    fs::create_directories(g.out_dir);
    for (const auto& in : inputs) {
        auto records = read_step_log(in);
        RunReport r = compute_metrics(records);
        reports.push_back(r);
        fs::path cdf = fs::path(g.out_dir) /
                       ("cdf_" + fs::path(in).stem().string() + ".csv");
        write_throughput_cdf_csv(cdf, records);
        print_report(r);
    }
    write_report_csv(fs::path(g.out_dir) / "report.csv", reports);
    return 0;
}

int cmd_sweep(const GlobalArgs& g, const std::string& tr_list, int episodes) {
    AppConfig cfg = load_config(g);
    if (episodes > 0) cfg.run.episodes = std::size_t(episodes);
    cfg.run.shadow = true;

    EnvSpec env = cfg.make_env();
    CodebookSet cb = cfg.make_codebooks();
    PolicyHead draft = cfg.make_draft(env.action_dim);
    PolicyHead target = cfg.make_target(env.action_dim);

    ShadowCorpusConfig scc = cfg.calibration;
    scc.alpha = cfg.alpha;
    scc.literal_adjust = cfg.run.literal_adjust;
    CalibrationCorpus corpus = build_corpus(env, draft, target, cb, scc, cfg.run.seed);

    std::vector<double> trs;
    {
        std::istringstream ss(tr_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) trs.push_back(std::stod(tok));
        }
    }
    if (trs.empty()) throw ConfigError("sweep: --tr needs a comma-separated list");

    std::vector<RunReport> reports;
    fs::create_directories(g.out_dir);
    for (double tr : trs) {
        CalibratePipelineConfig pcc;
        pcc.n_bins = cfg.n_bins;
        pcc.target_tr = tr;
        pcc.config_hash = cfg.config_hash;
        CalibrationArtifact art = calibrate_pipeline(corpus, cfg.alpha, pcc, cfg.run.seed);

        RunContext ctx;
        ctx.env = &env;
        ctx.draft = &draft;
        ctx.target = &target;
        ctx.cb = &cb;
        ctx.gate = GateParams::from_artifact(art);

        RunOptions opt = cfg.run;
        opt.mode = Mode::adahi;
        auto records = run_episodes(ctx, opt);
        RunReport r = compute_metrics(records, cfg.config_hash);
        std::cout << "target_tr=" << tr << " ";
        print_report(r);
        reports.push_back(r);
    }
    write_report_csv(fs::path(g.out_dir) / "sweep.csv", reports);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Action-deviation-gated hybrid inference harness"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "Run config JSON file")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", g.seed, "Override run seed");
    app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();

    std::string artifact_out, codebooks_out, mode_str, host, artifact_in;
    std::vector<std::string> report_inputs;
    std::string tr_list = "1.0,0.8,0.6,0.4";
    int port = 0, episodes = 0;
    double tr = -1.0;
    bool shadow = false, literal = false;

    auto* c_cal = app.add_subcommand("calibrate", "Build corpus and calibration artifact");
    c_cal->add_option("--artifact", artifact_out, "Artifact output path");
    c_cal->add_option("--codebooks", codebooks_out, "Also save codebook fixture here");
    c_cal->add_flag("--paper-literal-adjust", literal, "Use the literal printed residual");

    auto* c_srv = app.add_subcommand("serve", "Start the verification server");
    c_srv->add_option("--host", host, "Bind host");
    c_srv->add_option("--port", port, "Bind port");
    c_srv->add_flag("--paper-literal-adjust", literal, "Use the literal printed residual");

    auto* c_run = app.add_subcommand("run", "Run episodes in a given mode");
    c_run->add_option("--mode", mode_str, "draft_only|target_only|hybrid|random|adahi");
    c_run->add_option("--episodes", episodes, "Episode count");
    c_run->add_option("--tr", tr, "Transmit probability for random mode");
    c_run->add_option("--artifact", artifact_in, "Calibration artifact path");
    c_run->add_flag("--shadow", shadow, "Shadow-verify skipped steps (for TSR)");
    c_run->add_flag("--paper-literal-adjust", literal, "Use the literal printed residual");

    auto* c_rep = app.add_subcommand("report", "Aggregate step-log CSVs into a report");
    c_rep->add_option("--in", report_inputs, "Step-log CSV paths")->required();

    auto* c_swp = app.add_subcommand("sweep", "TR ablation: calibrate + run per target TR");
    c_swp->add_option("--tr", tr_list, "Comma-separated target transmission rates")
        ->capture_default_str();
    c_swp->add_option("--episodes", episodes, "Episode count per TR");

    CLI11_PARSE(app, argc, argv);
    g.seed_set = seed_opt->count() > 0;

    try {
        if (c_cal->parsed()) return cmd_calibrate(g, artifact_out, codebooks_out, literal);
        if (c_srv->parsed()) return cmd_serve(g, host, port, literal);
        if (c_run->parsed())
            return cmd_run(g, mode_str, episodes, tr, shadow, artifact_in, literal);
        if (c_rep->parsed()) return cmd_report(g, report_inputs);
        if (c_swp->parsed()) return cmd_sweep(g, tr_list, episodes);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return 1;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return 1;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
