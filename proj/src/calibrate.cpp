#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "adahi/calibrate.hpp"

namespace adahi {

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// OLS of y on x; returns (slope, intercept, rss).
std::tuple<double, double, double> ols(const std::vector<double>& x,
                                       const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx <= 0.0) throw CalibrationError("fit: degenerate bins (no delta spread)");
    double m = sxy / sxx;
    double b = my - m * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (m * x[i] + b);
        rss += r * r;
    }
    return {m, b, rss};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double compute_sigma(const std::vector<double>& raw) {
    if (raw.size() < 2) throw CalibrationError("sigma: need at least 2 samples");
    double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / double(raw.size());
    double acc = 0.0;
    for (double v : raw) acc += (v - mean) * (v - mean);
    double sigma = std::sqrt(acc / double(raw.size()));
    if (sigma <= 0.0) throw CalibrationError("sigma: degenerate (all deviations equal)");
    return sigma;
}

std::vector<BinPoint> bin_equal_count(const CalibrationCorpus& corpus,
                                      std::size_t n_bins) {
    if (n_bins < 2) throw CalibrationError("binning: need at least 2 bins");
    const std::size_t N = corpus.samples.size();
    if (N < n_bins) throw CalibrationError("binning: corpus smaller than bin count");

    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return corpus.samples[a].delta_normalized < corpus.samples[b].delta_normalized;
    });

    std::vector<BinPoint> bins;
    bins.reserve(n_bins);
    std::size_t offset = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        std::size_t size = N / n_bins + (b < N % n_bins ? 1 : 0);
        BinPoint bp;
        bp.size = size;
        std::size_t rejected = 0;
        for (std::size_t i = offset; i < offset + size; ++i) {
            const auto& s = corpus.samples[order[i]];
            bp.mean_delta += s.delta_normalized;
            rejected += s.primary_rejected ? 1 : 0;
        }
        bp.mean_delta /= double(size);
        bp.rejection_rate = double(rejected) / double(size);
        bins.push_back(bp);
        offset += size;
    }
    return bins;
}

FitResult fit_models(const std::vector<BinPoint>& bins) {
    if (bins.size() < 3) throw CalibrationError("fit: need at least 3 bins");
    std::vector<double> delta, rate;
    for (const auto& b : bins) {
        delta.push_back(b.mean_delta);
        rate.push_back(b.rejection_rate);
    }

    FitResult fit;
    auto [lm, lb, lrss] = ols(delta, rate);
    fit.linear = {RejectionModel::Form::linear, lm, lb, 1.0};

    double best_rss = std::numeric_limits<double>::infinity();
    const int grid = 64;
    const double lo = std::log(0.01), hi = std::log(100.0);
    std::vector<double> x(delta.size());
    for (int g = 0; g < grid; ++g) {
        double kappa = std::exp(lo + (hi - lo) * double(g) / double(grid - 1));
        for (std::size_t i = 0; i < delta.size(); ++i) x[i] = std::log1p(kappa * delta[i]);
        auto [m, b, rss] = ols(x, rate);
        if (rss < best_rss) {
            best_rss = rss;
            fit.logarithmic = {RejectionModel::Form::logarithmic, m, b, kappa};
        }
    }

    std::vector<double> pred(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) pred[i] = fit.linear.predict(delta[i]);
    fit.corr_linear = pearson(pred, rate);
    for (std::size_t i = 0; i < delta.size(); ++i) pred[i] = fit.logarithmic.predict(delta[i]);
    fit.corr_log = pearson(pred, rate);
    return fit;
}

double invert_threshold(const RejectionModel& model, double tau) {
    if (model.m <= 0.0) throw CalibrationError("invert: non-positive slope");
    if (tau < model.b) throw CalibrationError("invert: tau below intercept");
    if (model.form == RejectionModel::Form::logarithmic) {
        return std::expm1((tau - model.b) / model.m) / model.kappa;
    }
    return (tau - model.b) / model.m;
}

double tau_for_tr(const CalibrationCorpus& corpus, const RejectionModel& model,
                  double target_tr) {
    if (corpus.samples.empty()) throw CalibrationError("tau_for_tr: empty corpus");
    if (target_tr <= 0.0 || target_tr >= 1.0) {
        throw ConfigError("tau_for_tr: target_tr must be in (0,1)");
    }
    std::vector<double> preds;
    preds.reserve(corpus.samples.size());
    for (const auto& s : corpus.samples) preds.push_back(model.predict(s.delta_normalized));
    std::sort(preds.begin(), preds.end());
    // Lower-interpolation sample quantile at (1 - TR).
    double q = 1.0 - target_tr;
    std::size_t idx = std::size_t(std::floor(q * double(preds.size() - 1)));
    return preds[idx];
}

CalibrationCorpus build_corpus(const EnvSpec& env, const PolicyHead& draft,
                               const PolicyHead& target, const CodebookSet& cb,
                               const ShadowCorpusConfig& cfg, uint64_t seed) {
    CalibrationCorpus corpus;
    RngStream root(seed);

    uint64_t episode = 0;
    while (corpus.samples.size() < cfg.min_actions) {
        RngStream ep = root.substream(episode);
        Observation o = reset(env, ep.substream(0).seed());
        RngStream draft_rng = ep.substream(1);
        RngStream shadow_rng = ep.substream(2);
        RngStream env_rng = ep.substream(3);

        Vec ema;
        for (std::size_t t = 0; t < env.horizon; ++t) {
            ActResult draft_act = act(draft, o, cb, draft_rng);
            const Vec& executed = draft_act.decoded;  // local path, no offset

            if (t > 0) {
                CalibrationSample s;
                s.delta_net = norm2(sub(executed, ema));
                CategoricalBundle pb = normalize(target.logits(o, cb));
                RngStream sub_rng = shadow_rng.substream(t);
                auto [idx, accepted] =
                    verify_one(draft_act.bundle.row(0), pb.row(0),
                               draft_act.codes.indices[0], sub_rng, cfg.literal_adjust);
                (void)idx;
                s.primary_rejected = !accepted;
                corpus.samples.push_back(s);
            }

            if (ema.empty()) {
                ema = executed;
            } else {
                for (std::size_t i = 0; i < ema.size(); ++i) {
                    ema[i] = (1.0 - cfg.alpha) * ema[i] + cfg.alpha * executed[i];
                }
            }

            StepResult sr = step(env, o, executed, env_rng);
            if (sr.success) break;
            o.state = std::move(sr.next_state);
            o.step = int64_t(t) + 1;
        }
        ++episode;
    }

    std::vector<double> raw;
    raw.reserve(corpus.samples.size());
    for (const auto& s : corpus.samples) raw.push_back(s.delta_net);
    corpus.sigma = compute_sigma(raw);
    for (auto& s : corpus.samples) s.delta_normalized = s.delta_net / corpus.sigma;
    return corpus;
}

CalibrationArtifact calibrate_pipeline(const CalibrationCorpus& corpus, double alpha,
                                       const CalibratePipelineConfig& cfg,
                                       uint64_t seed) {
    CalibrationArtifact art;
    art.sigma = corpus.sigma;
    art.alpha = alpha;
    art.bin_count = cfg.n_bins;
    art.bins = bin_equal_count(corpus, cfg.n_bins);
    FitResult fit = fit_models(art.bins);
    art.corr_linear = fit.corr_linear;
    art.corr_log = fit.corr_log;
    art.model = std::abs(fit.corr_log) > std::abs(fit.corr_linear) ? fit.logarithmic
                                                                   : fit.linear;
    art.target_tr = cfg.target_tr;
    art.tau_star = tau_for_tr(corpus, art.model, cfg.target_tr);
    art.delta_th = invert_threshold(art.model, art.tau_star);
    art.config_hash = cfg.config_hash;
    art.seed = seed;
    return art;
}

void CalibrationArtifact::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write calibration artifact: " + path.string());
    out << "adahi-calibration v1\n";
    out << "sigma=" << fmt(sigma) << "\n";
    out << "alpha=" << fmt(alpha) << "\n";
    out << "form=" << (model.form == RejectionModel::Form::logarithmic ? "logarithmic" : "linear") << "\n";
    out << "m=" << fmt(model.m) << "\n";
    out << "b=" << fmt(model.b) << "\n";
    out << "kappa=" << fmt(model.kappa) << "\n";
    out << "delta_th=" << fmt(delta_th) << "\n";
    out << "tau_star=" << fmt(tau_star) << "\n";
    out << "target_tr=" << fmt(target_tr) << "\n";
    out << "corr_linear=" << fmt(corr_linear) << "\n";
    out << "corr_log=" << fmt(corr_log) << "\n";
    out << "bin_count=" << bin_count << "\n";
    out << "config_hash=" << config_hash << "\n";
    out << "seed=" << seed << "\n";
    out << "bins:\n";
    out << "mean_delta,rejection_rate,bin_size\n";
    for (const auto& b : bins) {
        out << fmt(b.mean_delta) << "," << fmt(b.rejection_rate) << "," << b.size << "\n";
    }
}

CalibrationArtifact CalibrationArtifact::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open calibration artifact: " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "adahi-calibration v1") {
        throw ConfigError("unrecognized calibration artifact header");
    }
    CalibrationArtifact art;
    bool in_bins = false;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "bins:") {
            in_bins = true;
            continue;
        }
        if (in_bins) {
            if (!header_skipped) {
                header_skipped = true;
                continue;
            }
            std::istringstream ss(line);
            std::string f1, f2, f3;
            std::getline(ss, f1, ',');
            std::getline(ss, f2, ',');
            std::getline(ss, f3, ',');
            art.bins.push_back({std::stod(f1), std::stod(f2), std::stoul(f3)});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed artifact line: " + line);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        if (key == "sigma") art.sigma = std::stod(val);
        else if (key == "alpha") art.alpha = std::stod(val);
        else if (key == "form") {
            art.model.form = val == "logarithmic" ? RejectionModel::Form::logarithmic
                                                  : RejectionModel::Form::linear;
        } else if (key == "m") art.model.m = std::stod(val);
        else if (key == "b") art.model.b = std::stod(val);
        else if (key == "kappa") art.model.kappa = std::stod(val);
        else if (key == "delta_th") art.delta_th = std::stod(val);
        else if (key == "tau_star") art.tau_star = std::stod(val);
        else if (key == "target_tr") art.target_tr = std::stod(val);
        else if (key == "corr_linear") art.corr_linear = std::stod(val);
        else if (key == "corr_log") art.corr_log = std::stod(val);
        else if (key == "bin_count") art.bin_count = std::stoul(val);
        else if (key == "config_hash") art.config_hash = std::stoull(val);
        else if (key == "seed") art.seed = std::stoull(val);
        // Unknown keys are ignored for forward compatibility.
    }
    return art;
}

}  // namespace adahi
