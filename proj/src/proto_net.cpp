#include <chrono>
#include <thread>

#include <httplib.h>

#include "adahi/proto.hpp"

namespace adahi {

namespace {

std::string health_body(const CodebookSet& cb) {
    return std::string("{\"protocol_version\":") + std::to_string(kProtocolVersion) +
           ",\"codebook_checksum\":\"" + checksum_hex(cb) + "\"}";
}

}  // namespace

struct VerifyServer::Impl {
    httplib::Server server;
    const PolicyHead& target;
    const CodebookSet& cb;
    bool literal;
    std::size_t max_payload;

    Impl(const PolicyHead& t, const CodebookSet& c, bool lit, std::size_t maxp)
        : target(t), cb(c), literal(lit), max_payload(maxp) {
        server.set_payload_max_length(max_payload);
        server.Post("/verify", [this](const httplib::Request& req, httplib::Response& res) {
            VerifyReply reply;
            try {
                VerifyRequest vr = decode_request(req.body, this->max_payload);
                reply = serve_verify(vr, target, cb, literal);
            } catch (const std::exception& e) {
                reply.status = VerifyReply::Status::malformed;
                reply.error = e.what();
            }
            res.set_content(encode_reply(reply), "application/json");
        });
        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(health_body(cb), "application/json");
        });
    }
};

VerifyServer::VerifyServer(const PolicyHead& target, const CodebookSet& cb,
                           bool literal_adjust, std::size_t max_payload_bytes)
    : impl_(std::make_unique<Impl>(target, cb, literal_adjust, max_payload_bytes)) {}

VerifyServer::~VerifyServer() { stop(); }

void VerifyServer::start(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
    } else {
        if (!impl_->server.bind_to_port(host, port)) {
            throw TransportError(TransportError::Kind::connection,
                                 "cannot bind to " + host + ":" + std::to_string(port));
        }
        port_ = port;
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void VerifyServer::stop() {
    if (thread_.joinable()) {
        impl_->server.stop();
        thread_.join();
    }
}

void VerifyServer::run(const std::string& host, int port) {
    port_ = port;
    if (!impl_->server.listen(host, port)) {
        throw TransportError(TransportError::Kind::connection,
                             "cannot listen on " + host + ":" + std::to_string(port));
    }
}

struct HttpVerifyClient::Impl {
    ClientConfig cfg;
    httplib::Client client;
    RngStream delay_rng;

    explicit Impl(ClientConfig c)
        : cfg(std::move(c)), client(cfg.host, cfg.port), delay_rng(cfg.delay_seed) {
        auto timeout = std::chrono::milliseconds(int64_t(cfg.timeout_ms));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        client.set_keep_alive(true);
    }

    double sample_delay_ms() {
        double d = cfg.injected_delay.mean_ms +
                   cfg.injected_delay.jitter_ms * delay_rng.normal();
        return d > 0.0 ? d : 0.0;
    }
};

HttpVerifyClient::HttpVerifyClient(ClientConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(cfg))) {}

HttpVerifyClient::~HttpVerifyClient() = default;

VerifyReply HttpVerifyClient::verify(const VerifyRequest& req, double* rtt_ms) {
    std::string body = encode_request(req);
    if (body.size() > impl_->cfg.max_payload_bytes) {
        throw ProtocolError("request payload exceeds max size");
    }
    const int attempts = impl_->cfg.retries + 1;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        auto t0 = std::chrono::steady_clock::now();
        if (impl_->cfg.injected_delay.enabled) {
            std::this_thread::sleep_for(
                std::chrono::duration<double, std::milli>(impl_->sample_delay_ms()));
        }
        auto res = impl_->client.Post("/verify", body, "application/json");
        auto t1 = std::chrono::steady_clock::now();
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            throw TransportError(TransportError::Kind::http_status,
                                 "server returned HTTP " + std::to_string(res->status));
        }
        if (rtt_ms != nullptr) {
            *rtt_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        return decode_reply(res->body);
    }
    throw TransportError(TransportError::Kind::timeout,
                         "verify failed after " + std::to_string(attempts) +
                             " attempts: " + last_error);
}

}  // namespace adahi
