#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "adahi/errors.hpp"
#include "adahi/proto.hpp"
#include "adahi/quantizer.hpp"

using namespace adahi;

namespace {

std::string read_file(const std::string& name) {
    std::ifstream in(std::string(ADAHI_TEST_DATA_DIR) + "/" + name, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

VerifyRequest golden_request() {
    VerifyRequest r;
    r.episode_id = 7;
    r.step = 3;
    r.state = {0.5, -1.25};
    r.goal = {1.0, 0.0};
    r.q_bundle = CategoricalBundle{1, 2, {0.25, 0.75}};
    r.draft_indices = CodeTuple{{1}};
    r.codebook_checksum = "00000000deadbeef";
    r.rng_token = 42;
    return r;
}

CodebookSet small_codebooks() {
    QuantizerConfig cfg;
    cfg.action_dim = 2;
    return CodebookSet::build(cfg, 7);
}

PolicyHead small_target(std::size_t dim = 2) {
    PolicyHeadConfig cfg;
    cfg.temperature = 0.2;
    return PolicyHead(cfg, dim, 3);
}

VerifyRequest live_request(const PolicyHead& target, const CodebookSet& cb) {
    Observation o;
    o.state = {0.1, -0.3};
    o.goal = {1.0, 0.5};
    o.step = 2;
    CategoricalBundle qb = normalize(target.logits(o, cb));
    VerifyRequest r;
    r.episode_id = 1;
    r.step = o.step;
    r.state = o.state;
    r.goal = o.goal;
    r.q_bundle = qb;
    r.draft_indices = CodeTuple{{0, 0}};
    r.codebook_checksum = checksum_hex(cb);
    r.rng_token = 777;
    return r;
}

}  // namespace

TEST_CASE("request and reply serialization matches the golden bytes") {
    CHECK(encode_request(golden_request()) == read_file("verify_request.json"));

    VerifyReply rep;
    rep.final_indices = CodeTuple{{1, 0}};
    rep.accepted_mask = {true, false};
    rep.server_compute_micros = 128;
    CHECK(encode_reply(rep) == read_file("verify_reply.json"));
}

TEST_CASE("golden bytes decode back to the original request") {
    auto r = decode_request(read_file("verify_request.json"));
    CHECK(r.protocol_version == 1);
    CHECK(r.episode_id == 7);
    CHECK(r.step == 3);
    CHECK(r.state == Vec{0.5, -1.25});
    CHECK(r.goal == Vec{1.0, 0.0});
    CHECK(r.q_bundle.n == 1);
    CHECK(r.q_bundle.K == 2);
    CHECK(r.q_bundle.p == std::vector<double>{0.25, 0.75});
    CHECK(r.draft_indices.indices == std::vector<uint32_t>{1});
    CHECK(r.codebook_checksum == "00000000deadbeef");
    REQUIRE(r.rng_token.has_value());
    CHECK(*r.rng_token == 42);

    auto rep = decode_reply(read_file("verify_reply.json"));
    CHECK(rep.final_indices.indices == std::vector<uint32_t>{1, 0});
    CHECK(rep.accepted_mask == std::vector<bool>{true, false});
    CHECK(rep.server_compute_micros == 128);
    CHECK(rep.status == VerifyReply::Status::ok);
}

TEST_CASE("encode/decode round trip preserves values to 1e-12") {
    auto cb = small_codebooks();
    auto target = small_target();
    VerifyRequest r = live_request(target, cb);
    VerifyRequest d = decode_request(encode_request(r));
    CHECK(d.episode_id == r.episode_id);
    CHECK(d.step == r.step);
    for (std::size_t i = 0; i < r.state.size(); ++i)
        CHECK(std::abs(d.state[i] - r.state[i]) < 1e-12);
    for (std::size_t i = 0; i < r.q_bundle.p.size(); ++i)
        CHECK(std::abs(d.q_bundle.p[i] - r.q_bundle.p[i]) < 1e-12);
    CHECK(d.draft_indices == r.draft_indices);
    CHECK(d.codebook_checksum == r.codebook_checksum);
    CHECK(d.rng_token == r.rng_token);
}

TEST_CASE("decoder rejects malformed requests with specific errors") {
    std::string good = encode_request(golden_request());

    CHECK_THROWS_AS(decode_request("not json"), ProtocolError);
    CHECK_THROWS_AS(decode_request("[1,2,3]"), ProtocolError);
    CHECK_THROWS_AS(decode_request(good, 10), ProtocolError);  // oversize

    // A row that sums to 0.98 names the offending row.
    std::string bad_sum = good;
    auto pos = bad_sum.find("[[0.25,0.75]]");
    REQUIRE(pos != std::string::npos);
    bad_sum.replace(pos, 13, "[[0.5,0.5],[0.49,0.49]]");
    pos = bad_sum.find("\"draft_indices\":[1]");
    REQUIRE(pos != std::string::npos);
    bad_sum.replace(pos, 19, "\"draft_indices\":[1,0]");
    try {
        decode_request(bad_sum);
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }

    // Draft index out of range for K = 2.
    std::string bad_idx = good;
    pos = bad_idx.find("\"draft_indices\":[1]");
    bad_idx.replace(pos, 19, "\"draft_indices\":[2]");
    CHECK_THROWS_AS(decode_request(bad_idx), ProtocolError);

    // Unknown protocol version.
    std::string bad_ver = good;
    pos = bad_ver.find("\"protocol_version\":1");
    bad_ver.replace(pos, 20, "\"protocol_version\":9");
    CHECK_THROWS_AS(decode_request(bad_ver), ProtocolError);

    // Negative probability.
    std::string bad_p = good;
    pos = bad_p.find("[[0.25,0.75]]");
    bad_p.replace(pos, 13, "[[-0.25,1.25]]");
    CHECK_THROWS_AS(decode_request(bad_p), ProtocolError);

    // Missing field.
    std::string no_state = good;
    pos = no_state.find("\"state\":[0.5,-1.25],");
    no_state.erase(pos, 20);
    CHECK_THROWS_AS(decode_request(no_state), ProtocolError);
}

TEST_CASE("serve_verify happy path, checksum mismatch and malformed input") {
    auto cb = small_codebooks();
    auto target = small_target();
    VerifyRequest r = live_request(target, cb);

    auto rep = serve_verify(r, target, cb);
    CHECK(rep.status == VerifyReply::Status::ok);
    CHECK(rep.final_indices.indices.size() == 2);
    CHECK(rep.accepted_mask.size() == 2);
    CHECK(rep.server_compute_micros >= 0);

    // A stale checksum is reported without touching the request body.
    VerifyRequest stale = r;
    stale.codebook_checksum = "ffffffffffffffff";
    auto mism = serve_verify(stale, target, cb);
    CHECK(mism.status == VerifyReply::Status::checksum_mismatch);
    CHECK(!mism.error.empty());

    // An in-range decode with an invalid tuple shape is malformed.
    VerifyRequest bad = r;
    bad.draft_indices = CodeTuple{{0}};
    auto mal = serve_verify(bad, target, cb);
    CHECK(mal.status == VerifyReply::Status::malformed);
    CHECK(!mal.error.empty());
}

TEST_CASE("rng_token replay makes serve_verify byte-reproducible") {
    auto cb = small_codebooks();
    auto target = small_target();
    VerifyRequest r = live_request(target, cb);
    auto a = serve_verify(r, target, cb);
    auto b = serve_verify(r, target, cb);
    CHECK(a.final_indices == b.final_indices);
    CHECK(a.accepted_mask == b.accepted_mask);

    // Drop the timing field, which legitimately varies between calls.
    a.server_compute_micros = 0;
    b.server_compute_micros = 0;
    CHECK(encode_reply(a) == encode_reply(b));
}

TEST_CASE("in-process and HTTP transports agree on every request") {
    auto cb = small_codebooks();
    auto target = small_target();

    VerifyServer server(target, cb);
    server.start("127.0.0.1", 0);
    ClientConfig ccfg;
    ccfg.port = server.port();
    HttpVerifyClient http(ccfg);
    InProcessVerifyClient local(target, cb);

    for (int i = 0; i < 25; ++i) {
        VerifyRequest r = live_request(target, cb);
        r.episode_id = i;
        r.rng_token = uint64_t(1000 + i);
        double rtt = -1.0;
        auto via_http = http.verify(r, &rtt);
        auto via_local = local.verify(r, nullptr);
        CHECK(via_http.status == VerifyReply::Status::ok);
        CHECK(via_http.final_indices == via_local.final_indices);
        CHECK(via_http.accepted_mask == via_local.accepted_mask);
        CHECK(rtt >= 0.0);
    }
    server.stop();
}

TEST_CASE("injected delay shows up in the measured round trip") {
    auto cb = small_codebooks();
    auto target = small_target();
    VerifyServer server(target, cb);
    server.start("127.0.0.1", 0);

    ClientConfig ccfg;
    ccfg.port = server.port();
    ccfg.injected_delay.enabled = true;
    ccfg.injected_delay.mean_ms = 12.0;
    ccfg.injected_delay.jitter_ms = 0.0;
    HttpVerifyClient http(ccfg);

    VerifyRequest r = live_request(target, cb);
    double rtt = 0.0;
    auto rep = http.verify(r, &rtt);
    CHECK(rep.status == VerifyReply::Status::ok);
    CHECK(rtt >= 12.0);
    server.stop();
}

TEST_CASE("an unreachable server raises TransportError after the retries") {
    auto cb = small_codebooks();
    auto target = small_target();
    ClientConfig ccfg;
    ccfg.port = 1;  // nothing listens here
    ccfg.timeout_ms = 200.0;
    ccfg.retries = 1;
    HttpVerifyClient http(ccfg);
    VerifyRequest r = live_request(target, cb);
    try {
        http.verify(r, nullptr);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        // retries = 1 means two attempts total.
        CHECK(std::string(e.what()).find("2 attempts") != std::string::npos);
    }
}

TEST_CASE("oversize outbound payloads are rejected client-side") {
    auto cb = small_codebooks();
    auto target = small_target();
    ClientConfig ccfg;
    ccfg.max_payload_bytes = 16;
    HttpVerifyClient http(ccfg);
    VerifyRequest r = live_request(target, cb);
    CHECK_THROWS_AS(http.verify(r, nullptr), ProtocolError);
}
