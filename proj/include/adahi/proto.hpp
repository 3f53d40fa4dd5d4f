#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "adahi/policy.hpp"
#include "adahi/specsamp.hpp"

namespace adahi {

constexpr int kProtocolVersion = 1;

struct VerifyRequest {
    int protocol_version = kProtocolVersion;
    int64_t episode_id = 0;
    int64_t step = 0;
    Vec state;
    Vec goal;
    CategoricalBundle q_bundle;
    CodeTuple draft_indices;
    std::string codebook_checksum;  // lowercase hex
    std::optional<uint64_t> rng_token;
};

struct VerifyReply {
    enum class Status { ok, checksum_mismatch, malformed };

    CodeTuple final_indices;
    std::vector<bool> accepted_mask;
    int64_t server_compute_micros = 0;
    Status status = Status::ok;
    std::string error;  // set for non-ok statuses
};

std::string checksum_hex(const CodebookSet& cb);

// Canonical JSON: UTF-8, fixed key order, shortest round-trip decimals.
std::string encode_request(const VerifyRequest& r);
VerifyRequest decode_request(std::string_view bytes,
                             std::size_t max_bytes = 1 << 20);
std::string encode_reply(const VerifyReply& r);
VerifyReply decode_reply(std::string_view bytes);

// Runs the target policy and per-codebook speculative sampling for one
// request. Stateless given (request, loaded artifacts).
VerifyReply serve_verify(const VerifyRequest& req, const PolicyHead& target,
                         const CodebookSet& cb, bool literal_adjust = false);

struct InjectedDelayConfig {
    bool enabled = false;
    double mean_ms = 12.054;
    double jitter_ms = 0.302;
};

struct ClientConfig {
    std::string host = "127.0.0.1";
    int port = 8077;
    double timeout_ms = 1000.0;
    int retries = 2;
    std::size_t max_payload_bytes = 1 << 20;
    InjectedDelayConfig injected_delay;  // real sleep added to each round trip
    uint64_t delay_seed = 1;
};

// Abstract verification transport so the harness can run over HTTP or fully
// in-process.
class VerifyClient {
  public:
    virtual ~VerifyClient() = default;
    // Returns the reply; rtt_ms (when non-null) receives the measured
    // wall-clock round trip. Throws TransportError after exhausting retries.
    virtual VerifyReply verify(const VerifyRequest& req, double* rtt_ms) = 0;
};

class HttpVerifyClient : public VerifyClient {
  public:
    explicit HttpVerifyClient(ClientConfig cfg);
    ~HttpVerifyClient() override;
    VerifyReply verify(const VerifyRequest& req, double* rtt_ms) override;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class InProcessVerifyClient : public VerifyClient {
  public:
    InProcessVerifyClient(const PolicyHead& target, const CodebookSet& cb,
                          bool literal_adjust = false)
        : target_(target), cb_(cb), literal_(literal_adjust) {}
    VerifyReply verify(const VerifyRequest& req, double* rtt_ms) override;

  private:
    const PolicyHead& target_;
    const CodebookSet& cb_;
    bool literal_;
};

// HTTP server hosting POST /verify and GET /health on a background thread.
class VerifyServer {
  public:
    VerifyServer(const PolicyHead& target, const CodebookSet& cb,
                 bool literal_adjust = false,
                 std::size_t max_payload_bytes = 1 << 20);
    ~VerifyServer();

    // Binds to the given port (0 picks a free one) and returns once the
    // server accepts connections.
    void start(const std::string& host, int port);
    void stop();
    int port() const { return port_; }

    // Blocking serve for the CLI `serve` subcommand.
    void run(const std::string& host, int port);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace adahi
