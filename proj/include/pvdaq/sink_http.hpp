#pragma once

// HTTP binding of the sink client, kept out of sink.hpp so the heavy header
// is only compiled where a live endpoint is actually configured.

#include <httplib.h>

#include <string>
#include <vector>

#include "pvdaq/sink.hpp"

namespace pvdaq {

// POSTs line-protocol batches to an InfluxDB-compatible /api/v2/write
// endpoint. Connection failures and non-2xx responses leave the batch queued.
class HttpSinkClient final : public SinkClient {
 public:
  HttpSinkClient(std::string endpoint, std::string org, std::string bucket,
                 std::string token)
      : endpoint_(std::move(endpoint)),
        org_(std::move(org)),
        bucket_(std::move(bucket)),
        token_(std::move(token)) {}

  bool deliver(const std::vector<std::string>& lines) override {
    httplib::Client client(endpoint_);
    client.set_connection_timeout(2, 0);
    client.set_write_timeout(5, 0);
    std::string body;
    for (const auto& l : lines) {
      body += l;
      body += '\n';
    }
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Token " + token_);
    const std::string path =
        "/api/v2/write?org=" + org_ + "&bucket=" + bucket_ + "&precision=s";
    auto res = client.Post(path, headers, body, "text/plain; charset=utf-8");
    return res && res->status >= 200 && res->status < 300;
  }

 private:
  std::string endpoint_;
  std::string org_;
  std::string bucket_;
  std::string token_;
};

}  // namespace pvdaq
