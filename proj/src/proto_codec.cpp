#include <chrono>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "adahi/proto.hpp"

namespace adahi {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kRowSumTolerance = 1e-6;

void require(bool cond, const std::string& msg) {
    if (!cond) throw ProtocolError(msg);
}

ordered_json vec_to_json(const Vec& v) {
    ordered_json arr = ordered_json::array();
    for (double x : v) {
        if (!std::isfinite(x)) throw ProtocolError("non-finite float in payload");
        arr.push_back(x);
    }
    return arr;
}

Vec json_to_vec(const ordered_json& arr, const std::string& field) {
    require(arr.is_array(), field + " must be an array");
    Vec v;
    v.reserve(arr.size());
    for (const auto& x : arr) {
        require(x.is_number(), field + " must contain numbers");
        double d = x.get<double>();
        require(std::isfinite(d), field + " contains a non-finite value");
        v.push_back(d);
    }
    return v;
}

std::string status_name(VerifyReply::Status s) {
    switch (s) {
        case VerifyReply::Status::ok: return "ok";
        case VerifyReply::Status::checksum_mismatch: return "checksum_mismatch";
        default: return "malformed";
    }
}

VerifyReply::Status status_from(const std::string& s) {
    if (s == "ok") return VerifyReply::Status::ok;
    if (s == "checksum_mismatch") return VerifyReply::Status::checksum_mismatch;
    if (s == "malformed") return VerifyReply::Status::malformed;
    throw ProtocolError("unknown reply status: " + s);
}

}  // namespace

std::string checksum_hex(const CodebookSet& cb) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(cb.checksum()));
    return buf;
}

std::string encode_request(const VerifyRequest& r) {
    ordered_json j;
    j["protocol_version"] = r.protocol_version;
    j["episode_id"] = r.episode_id;
    j["step"] = r.step;
    j["state"] = vec_to_json(r.state);
    j["goal"] = vec_to_json(r.goal);
    ordered_json rows = ordered_json::array();
    for (std::size_t l = 0; l < r.q_bundle.n; ++l) {
        auto row = r.q_bundle.row(l);
        rows.push_back(vec_to_json(Vec(row.begin(), row.end())));
    }
    j["q_bundle"] = rows;
    j["draft_indices"] = r.draft_indices.indices;
    j["codebook_checksum"] = r.codebook_checksum;
    if (r.rng_token) j["rng_token"] = *r.rng_token;
    return j.dump();
}

VerifyRequest decode_request(std::string_view bytes, std::size_t max_bytes) {
    require(bytes.size() <= max_bytes, "payload exceeds max size");
    ordered_json j;
    try {
        j = ordered_json::parse(bytes);
    } catch (const ordered_json::parse_error& e) {
        throw ProtocolError(std::string("invalid JSON: ") + e.what());
    }
    require(j.is_object(), "request must be a JSON object");
    require(j.contains("protocol_version") && j["protocol_version"].is_number_integer(),
            "missing protocol_version");
    VerifyRequest r;
    r.protocol_version = j["protocol_version"].get<int>();
    require(r.protocol_version == kProtocolVersion,
            "unsupported protocol_version " + std::to_string(r.protocol_version));
    require(j.contains("episode_id"), "missing episode_id");
    require(j.contains("step"), "missing step");
    r.episode_id = j["episode_id"].get<int64_t>();
    r.step = j["step"].get<int64_t>();
    require(j.contains("state"), "missing state");
    require(j.contains("goal"), "missing goal");
    r.state = json_to_vec(j["state"], "state");
    r.goal = json_to_vec(j["goal"], "goal");

    require(j.contains("q_bundle") && j["q_bundle"].is_array() && !j["q_bundle"].empty(),
            "missing q_bundle");
    const auto& rows = j["q_bundle"];
    std::size_t n = rows.size();
    std::size_t K = 0;
    for (std::size_t l = 0; l < n; ++l) {
        Vec row = json_to_vec(rows[l], "q_bundle row " + std::to_string(l));
        if (l == 0) {
            K = row.size();
            require(K >= 2, "q_bundle rows must have at least 2 entries");
            r.q_bundle.n = n;
            r.q_bundle.K = K;
            r.q_bundle.p.reserve(n * K);
        }
        require(row.size() == K, "ragged q_bundle rows");
        double sum = 0.0;
        for (double v : row) {
            require(v >= 0.0, "negative probability in q_bundle row " + std::to_string(l));
            sum += v;
        }
        require(std::abs(sum - 1.0) <= kRowSumTolerance,
                "q_bundle row " + std::to_string(l) + " sums to " + std::to_string(sum));
        r.q_bundle.p.insert(r.q_bundle.p.end(), row.begin(), row.end());
    }

    require(j.contains("draft_indices") && j["draft_indices"].is_array(),
            "missing draft_indices");
    require(j["draft_indices"].size() == n, "draft_indices length mismatch");
    for (const auto& x : j["draft_indices"]) {
        require(x.is_number_unsigned() || (x.is_number_integer() && x.get<int64_t>() >= 0),
                "draft index must be a non-negative integer");
        uint64_t idx = x.get<uint64_t>();
        require(idx < K, "draft index " + std::to_string(idx) + " out of range (K=" +
                             std::to_string(K) + ")");
        r.draft_indices.indices.push_back(uint32_t(idx));
    }

    require(j.contains("codebook_checksum") && j["codebook_checksum"].is_string(),
            "missing codebook_checksum");
    r.codebook_checksum = j["codebook_checksum"].get<std::string>();
    if (j.contains("rng_token")) r.rng_token = j["rng_token"].get<uint64_t>();
    return r;
}

std::string encode_reply(const VerifyReply& r) {
    ordered_json j;
    j["final_indices"] = r.final_indices.indices;
    ordered_json mask = ordered_json::array();
    for (bool b : r.accepted_mask) mask.push_back(b);
    j["accepted_mask"] = mask;
    j["server_compute_micros"] = r.server_compute_micros;
    j["status"] = status_name(r.status);
    if (!r.error.empty()) j["error"] = r.error;
    return j.dump();
}

VerifyReply decode_reply(std::string_view bytes) {
    ordered_json j;
    try {
        j = ordered_json::parse(bytes);
    } catch (const ordered_json::parse_error& e) {
        throw ProtocolError(std::string("invalid reply JSON: ") + e.what());
    }
    VerifyReply r;
    require(j.contains("status") && j["status"].is_string(), "missing reply status");
    r.status = status_from(j["status"].get<std::string>());
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    require(j.contains("final_indices") && j["final_indices"].is_array(),
            "missing final_indices");
    for (const auto& x : j["final_indices"]) {
        r.final_indices.indices.push_back(x.get<uint32_t>());
    }
    require(j.contains("accepted_mask") && j["accepted_mask"].is_array(),
            "missing accepted_mask");
    for (const auto& x : j["accepted_mask"]) r.accepted_mask.push_back(x.get<bool>());
    r.server_compute_micros = j.value("server_compute_micros", int64_t(0));
    return r;
}

VerifyReply serve_verify(const VerifyRequest& req, const PolicyHead& target,
                         const CodebookSet& cb, bool literal_adjust) {
    VerifyReply reply;
    if (req.codebook_checksum != checksum_hex(cb)) {
        reply.status = VerifyReply::Status::checksum_mismatch;
        reply.error = "codebook checksum mismatch";
        return reply;
    }
    auto t0 = std::chrono::steady_clock::now();
    try {
        req.q_bundle.validate(kRowSumTolerance);
        cb.validate_tuple(req.draft_indices);
        Observation o{req.state, req.goal, req.step};
        CategoricalBundle pb = normalize(target.logits(o, cb));
        uint64_t token = req.rng_token ? *req.rng_token : std::random_device{}();
        RngStream rng(token);
        VerifyOutcome out = verify_tuple(req.q_bundle, pb, req.draft_indices, rng,
                                         literal_adjust);
        reply.final_indices = std::move(out.final);
        reply.accepted_mask = std::move(out.accepted_mask);
    } catch (const std::exception& e) {
        reply = VerifyReply{};
        reply.status = VerifyReply::Status::malformed;
        reply.error = e.what();
        return reply;
    }
    auto t1 = std::chrono::steady_clock::now();
    reply.server_compute_micros =
        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
    return reply;
}

VerifyReply InProcessVerifyClient::verify(const VerifyRequest& req, double* rtt_ms) {
    // Round-trips through the codec so the in-process path exercises the
    // same canonical serialization as HTTP.
    VerifyRequest decoded = decode_request(encode_request(req));
    VerifyReply reply = serve_verify(decoded, target_, cb_, literal_);
    if (rtt_ms != nullptr) *rtt_ms = 0.0;
    return reply;
}

}  // namespace adahi
