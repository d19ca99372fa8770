#pragma once

#include "forensic/session.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace forensic {

struct ApiResponse {
    int status = 200;
    std::string body; // JSON
};

// Routes one request under /api to the session service. Never throws.
ApiResponse handle_api_request(SessionService& service, std::string_view method, std::string_view path,
                               std::string_view body);

// The ranking payload served by GET .../recommendation.
std::string recommendation_payload(const std::string& session_id, const Recommendation& rec, const Catalog& catalog);

// HTTP front end over handle_api_request; optionally serves static files from `static_dir`.
class ApiServer {
public:
    explicit ApiServer(SessionService& service, const std::string& static_dir = {});
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Returns the bound port (an ephemeral one when `port` is 0). Throws on failure.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace forensic
