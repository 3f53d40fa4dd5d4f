#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "adahi/errors.hpp"
#include "adahi/harness.hpp"

using namespace adahi;

namespace {

struct Fixture {
    EnvSpec env;
    CodebookSet cb;
    PolicyHead draft;
    PolicyHead target;

    static Fixture make() {
        EnvSpec env = make_env_fixture("reach-2d");
        QuantizerConfig qc;
        qc.action_dim = env.action_dim;
        PolicyHeadConfig dc;
        dc.temperature = 0.3;
        dc.gain_noise = 0.3;
        dc.role = "draft";
        PolicyHeadConfig tc;
        tc.temperature = 0.2;
        return Fixture{env, CodebookSet::build(qc, 7),
                       PolicyHead(dc, env.action_dim, 11),
                       PolicyHead(tc, env.action_dim, 12)};
    }

    RunContext ctx(double threshold = DeviationGate::never_transmit_threshold()) {
        RunContext c;
        c.env = &env;
        c.draft = &draft;
        c.target = &target;
        c.cb = &cb;
        c.gate.threshold = threshold;
        return c;
    }
};

RunOptions opts(Mode mode, std::size_t episodes = 20) {
    RunOptions o;
    o.mode = mode;
    o.episodes = episodes;
    o.seed = 1;
    return o;
}

}  // namespace

TEST_CASE("mode names round trip") {
    for (Mode m : {Mode::draft_only, Mode::target_only, Mode::hybrid, Mode::random,
                   Mode::adahi}) {
        CHECK(mode_from_string(mode_to_string(m)) == m);
    }
    CHECK_THROWS_AS(mode_from_string("turbo"), ConfigError);
}

TEST_CASE("gate params come straight from the artifact") {
    CalibrationArtifact art;
    art.alpha = 0.45;
    art.sigma = 0.31;
    art.delta_th = 0.89;
    art.model = {RejectionModel::Form::logarithmic, 0.214, 0.160, 4.383};
    auto g = GateParams::from_artifact(art);
    CHECK(g.alpha == 0.45);
    CHECK(g.sigma == 0.31);
    CHECK(g.threshold == 0.89);
    CHECK(g.model.form == RejectionModel::Form::logarithmic);
    CHECK(g.model.kappa == 4.383);
}

TEST_CASE("transmission accounting per mode") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx();

    auto hybrid = run_episodes(ctx, opts(Mode::hybrid));
    auto hr = compute_metrics(hybrid);
    CHECK(hr.tr == 1.0);
    for (const auto& rec : hybrid) {
        for (const auto& row : rec.rows) CHECK(row.transmitted);
    }

    auto draft = compute_metrics(run_episodes(ctx, opts(Mode::draft_only)));
    CHECK(draft.tr == 0.0);
    auto target = compute_metrics(run_episodes(ctx, opts(Mode::target_only)));
    CHECK(target.tr == 0.0);

    auto ro = opts(Mode::random, 60);
    ro.random_tr = 0.5;
    auto rnd = compute_metrics(run_episodes(ctx, ro));
    CHECK(std::abs(rnd.tr - 0.5) < 0.06);
}

TEST_CASE("metrics agree with an independent pass over the records") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx();
    auto o = opts(Mode::hybrid, 15);
    o.modeled_latency = true;
    o.delay.mean_ms = 10.0;
    o.delay.jitter_ms = 0.0;
    auto records = run_episodes(ctx, o);
    auto r = compute_metrics(records, 1234);

    std::size_t successes = 0, steps = 0, transmitted = 0;
    double sq = 0.0;
    std::size_t terms = 0;
    int64_t lat = 0;
    for (const auto& rec : records) {
        successes += rec.success ? 1 : 0;
        for (const auto& row : rec.rows) {
            ++steps;
            transmitted += row.transmitted ? 1 : 0;
            lat += row.latency_micros;
            for (std::size_t i = 0; i < row.action.size(); ++i) {
                double d = row.action[i] - row.expert_action[i];
                sq += d * d;
                ++terms;
            }
        }
    }
    CHECK(r.episodes == records.size());
    CHECK(r.total_steps == steps);
    CHECK(r.task_success_rate ==
          doctest::Approx(double(successes) / records.size()).epsilon(1e-12));
    CHECK(r.mse == doctest::Approx(sq / double(terms)).epsilon(1e-12));
    CHECK(r.tr == doctest::Approx(double(transmitted) / double(steps)).epsilon(1e-12));
    CHECK(r.mean_per_action_latency_ms ==
          doctest::Approx(double(lat) / 1000.0 / double(steps)).epsilon(1e-12));
    CHECK(r.config_hash == 1234);
    CHECK(r.fallback_count == 0);
}

TEST_CASE("modeled latency is the documented closed form") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx();
    auto o = opts(Mode::hybrid, 5);
    o.modeled_latency = true;
    o.delay.mean_ms = 10.0;
    o.delay.jitter_ms = 0.0;
    // Every hybrid step: draft 2 ms + rtt 10 ms + server 4 ms.
    for (const auto& rec : run_episodes(ctx, o)) {
        for (const auto& row : rec.rows) CHECK(row.latency_micros == 16000);
    }

    o.mode = Mode::draft_only;
    for (const auto& rec : run_episodes(ctx, o)) {
        for (const auto& row : rec.rows) CHECK(row.latency_micros == 2000);
    }

    o.mode = Mode::target_only;
    for (const auto& rec : run_episodes(ctx, o)) {
        for (const auto& row : rec.rows) CHECK(row.latency_micros == 4000);
    }
}

TEST_CASE("an infinite threshold reduces adahi to draft_only") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx(DeviationGate::never_transmit_threshold());
    auto a = run_episodes(ctx, opts(Mode::adahi, 25));
    auto d = run_episodes(ctx, opts(Mode::draft_only, 25));
    REQUIRE(a.size() == d.size());
    for (std::size_t e = 0; e < a.size(); ++e) {
        CHECK(a[e].success == d[e].success);
        REQUIRE(a[e].rows.size() == d[e].rows.size());
        for (std::size_t t = 0; t < a[e].rows.size(); ++t) {
            CHECK(!a[e].rows[t].transmitted);
            CHECK(a[e].rows[t].action == d[e].rows[t].action);
        }
    }
}

TEST_CASE("a zero threshold transmits like hybrid from the second step on") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx(0.0);
    auto a = run_episodes(ctx, opts(Mode::adahi, 25));
    for (const auto& rec : a) {
        for (const auto& row : rec.rows) {
            if (row.step == 0) {
                // The gate has no EMA yet; the first step always runs locally.
                CHECK(!row.transmitted);
            } else {
                CHECK(row.transmitted);
            }
        }
    }
}

TEST_CASE("runs are deterministic in the seed") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx(0.6);
    auto o = opts(Mode::adahi, 10);
    o.shadow = true;
    auto a = run_episodes(ctx, o);
    auto b = run_episodes(ctx, o);
    REQUIRE(a.size() == b.size());
    for (std::size_t e = 0; e < a.size(); ++e) {
        REQUIRE(a[e].rows.size() == b[e].rows.size());
        CHECK(a[e].seed == b[e].seed);
        for (std::size_t t = 0; t < a[e].rows.size(); ++t) {
            const auto& x = a[e].rows[t];
            const auto& y = b[e].rows[t];
            CHECK(x.action == y.action);
            CHECK(x.transmitted == y.transmitted);
            CHECK(x.primary_rejected == y.primary_rejected);
            CHECK(x.shadow_would_reject == y.shadow_would_reject);
        }
    }

    auto o2 = o;
    o2.seed = 2;
    auto c = run_episodes(ctx, o2);
    bool any_diff = false;
    for (std::size_t e = 0; e < c.size() && !any_diff; ++e) {
        any_diff = c[e].rows.size() != a[e].rows.size() ||
                   c[e].rows[0].action != a[e].rows[0].action;
    }
    CHECK(any_diff);
}

TEST_CASE("shadow TSR counts only decided skips") {
    // Hand-built records: step 0 is always excluded, transmitted steps and
    // steps without shadow labels are ignored.
    EpisodeRecord rec;
    EpisodeRecord none;
    EpisodeRecord* dest = &rec;
    auto push = [&](int64_t step, bool transmitted, std::optional<bool> shadow) {
        StepRow row;
        row.step = step;
        row.transmitted = transmitted;
        row.shadow_would_reject = shadow;
        dest->rows.push_back(row);
    };
    push(0, false, true);    // excluded: first step
    push(1, false, false);   // counted, accepted
    push(2, false, true);    // counted, rejected
    push(3, true, std::nullopt);
    push(4, false, false);   // counted, accepted
    auto tsr = shadow_tsr({rec});
    REQUIRE(tsr.has_value());
    CHECK(*tsr == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    dest = &none;
    push(0, false, std::nullopt);
    push(1, true, std::nullopt);
    CHECK(!shadow_tsr({none}).has_value());
}

TEST_CASE("shadow labels appear on skipped steps of a shadowed run") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx(0.6);
    auto o = opts(Mode::adahi, 20);
    o.shadow = true;
    auto records = run_episodes(ctx, o);
    std::size_t labeled = 0;
    for (const auto& rec : records) {
        for (const auto& row : rec.rows) {
            if (row.transmitted) {
                CHECK(!row.shadow_would_reject.has_value());
                CHECK(row.primary_rejected.has_value());
            } else {
                CHECK(row.shadow_would_reject.has_value());
                ++labeled;
            }
        }
    }
    CHECK(labeled > 0);
    CHECK(shadow_tsr(records).has_value());
}

TEST_CASE("step log round trips through CSV") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx(0.6);
    auto o = opts(Mode::adahi, 8);
    o.shadow = true;
    o.modeled_latency = true;
    auto records = run_episodes(ctx, o);

    auto path = std::filesystem::temp_directory_path() / "adahi_steplog_test.csv";
    write_step_log(path, records);
    auto loaded = read_step_log(path);
    std::filesystem::remove(path);

    REQUIRE(loaded.size() == records.size());
    for (std::size_t e = 0; e < records.size(); ++e) {
        CHECK(loaded[e].mode == records[e].mode);
        CHECK(loaded[e].seed == records[e].seed);
        CHECK(loaded[e].success == records[e].success);
        REQUIRE(loaded[e].rows.size() == records[e].rows.size());
        for (std::size_t t = 0; t < records[e].rows.size(); ++t) {
            const auto& x = records[e].rows[t];
            const auto& y = loaded[e].rows[t];
            CHECK(y.step == x.step);
            CHECK((std::isnan(y.delta) == std::isnan(x.delta)));
            if (!std::isnan(x.delta)) CHECK(y.delta == x.delta);
            CHECK(y.transmitted == x.transmitted);
            CHECK(y.primary_rejected == x.primary_rejected);
            CHECK(y.shadow_would_reject == x.shadow_would_reject);
            CHECK(y.fallback == x.fallback);
            CHECK(y.latency_micros == x.latency_micros);
            CHECK(y.success == x.success);
            CHECK(y.action == x.action);
            CHECK(y.expert_action == x.expert_action);
        }
    }
}

TEST_CASE("throughput samples are sorted and reports serialize") {
    auto fix = Fixture::make();
    auto ctx = fix.ctx();
    auto o = opts(Mode::hybrid, 10);
    o.modeled_latency = true;
    o.delay.jitter_ms = 0.3;
    auto records = run_episodes(ctx, o);
    auto tp = throughput_samples(records);
    REQUIRE(!tp.empty());
    for (std::size_t i = 1; i < tp.size(); ++i) CHECK(tp[i] >= tp[i - 1]);

    auto report = compute_metrics(records);
    CHECK(report.throughput_p2_5 <= report.throughput_mean);

    auto dir = std::filesystem::temp_directory_path();
    write_report_csv(dir / "adahi_report_test.csv", {report});
    write_throughput_cdf_csv(dir / "adahi_cdf_test.csv", records);
    CHECK(std::filesystem::file_size(dir / "adahi_report_test.csv") > 0);
    CHECK(std::filesystem::file_size(dir / "adahi_cdf_test.csv") > 0);
    std::filesystem::remove(dir / "adahi_report_test.csv");
    std::filesystem::remove(dir / "adahi_cdf_test.csv");

    CHECK_THROWS_AS(compute_metrics({}), ContractError);
}
