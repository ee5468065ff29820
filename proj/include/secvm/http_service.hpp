#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "secvm/protocol.hpp"
#include "secvm/server.hpp"

namespace httplib {
class Server;
}

namespace secvm {

// HTTP front for a Server:
//   GET  /descriptor  current ExperimentDescriptor as JSON
//   GET  /digest      hex SHA-256 of the current descriptor
//   POST /package     raw wire bytes; 13 = update package, 10 = test package
// POST answers 200 "accepted"/"stale", 400 "rejected" or a decode message.
void register_routes(httplib::Server& http, Server& server);

// Client side of the same routes. Throws ProtocolError on transport failure
// or an unexpected status.
ExperimentDescriptor http_fetch_descriptor(const std::string& host, int port);
Digest http_fetch_digest(const std::string& host, int port);
IngestResult http_post_package(const std::string& host, int port, std::span<const std::uint8_t> bytes);

}  // namespace secvm
