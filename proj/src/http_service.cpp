#include "secvm/http_service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "secvm/error.hpp"

namespace secvm {

void register_routes(httplib::Server& http, Server& server) {
  http.Get("/descriptor", [&server](const httplib::Request&, httplib::Response& res) {
    res.set_content(descriptor_to_json(server.descriptor()).dump(), "application/json");
  });
  http.Get("/digest", [&server](const httplib::Request&, httplib::Response& res) {
    res.set_content(digest_hex(server.digest()), "text/plain");
  });
  http.Post("/package", [&server](const httplib::Request& req, httplib::Response& res) {
    const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
    const std::span<const std::uint8_t> bytes(data, req.body.size());
    IngestResult r;
    try {
      if (bytes.size() == kUpdatePackageWireSize)
        r = server.ingest_update(decode_package(bytes));
      else if (bytes.size() == kTestPackageWireSize)
        r = server.ingest_test(decode_test_package(bytes));
      else
        throw DecodeError("package body of " + std::to_string(bytes.size()) + " bytes");
    } catch (const DecodeError& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
      return;
    }
    if (r == IngestResult::Rejected) {
      res.status = 400;
      res.set_content("rejected", "text/plain");
    } else {
      res.set_content(r == IngestResult::Accepted ? "accepted" : "stale", "text/plain");
    }
  });
}

namespace {

httplib::Result checked(httplib::Result res, const char* what) {
  if (!res) throw ProtocolError(std::string(what) + ": " + httplib::to_string(res.error()));
  return res;
}

}  // namespace

ExperimentDescriptor http_fetch_descriptor(const std::string& host, int port) {
  httplib::Client cli(host, port);
  auto res = checked(cli.Get("/descriptor"), "GET /descriptor");
  if (res->status != 200) throw ProtocolError("GET /descriptor: status " + std::to_string(res->status));
  try {
    return descriptor_from_json(nlohmann::json::parse(res->body));
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("GET /descriptor: bad JSON: ") + e.what());
  }
}

Digest http_fetch_digest(const std::string& host, int port) {
  httplib::Client cli(host, port);
  auto res = checked(cli.Get("/digest"), "GET /digest");
  if (res->status != 200) throw ProtocolError("GET /digest: status " + std::to_string(res->status));
  return parse_digest_hex(res->body);
}

IngestResult http_post_package(const std::string& host, int port, std::span<const std::uint8_t> bytes) {
  httplib::Client cli(host, port);
  const std::string body(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  auto res = checked(cli.Post("/package", body, "application/octet-stream"), "POST /package");
  if (res->status == 200) return res->body == "accepted" ? IngestResult::Accepted : IngestResult::Stale;
  if (res->status == 400) return IngestResult::Rejected;
  throw ProtocolError("POST /package: status " + std::to_string(res->status));
}

}  // namespace secvm
