/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <mosden/core/error.hpp>
#include <mosden/core/wire.hpp>

#include <httplib.h>

#include <atomic>
#include <memory>
#include <string>

namespace mosden::api {

/// NotFound 404, Conflict 409, InvalidQuery/InvalidDescriptor 400,
/// PluginFailure 424, PeerUnreachable 502, BufferOverflow 507, Shutdown 503.
int http_status(ErrorKind kind);

/// Error bodies carry the kind by name so clients recover it exactly.
void write_error(httplib::Response& res, const EngineError& e);
void write_json(httplib::Response& res, const wire::Json& body, int status = 200);

/// Rebuilds the EngineError a peer reported, or PeerUnreachable when the
/// request never completed.
[[noreturn]] void raise_from(const httplib::Result& result, const std::string& peer);

/// Listening sockets get SO_REUSEADDR only, so a port that is already
/// taken fails to bind instead of being shared.
void exclusive_bind(httplib::Server& server);

/// Parses "host:port". Throws InvalidQuery.
std::pair<std::string, int> split_address(const std::string& address);

/// An HTTP client to one peer that counts the TCP connections it opens.
/// With keep-alive on, successive requests share one connection.
class PeerClient {
  public:
    explicit PeerClient(const std::string& address, bool keep_alive = true, int read_timeout_ms = 5000,
                        int connect_timeout_ms = 2000);

    httplib::Result get(const std::string& path);
    httplib::Result post(const std::string& path, const wire::Json& body);
    httplib::Result del(const std::string& path);

    /// GET/POST that throw on transport or HTTP errors and return the JSON body
    /// (null for 204).
    wire::Json get_json(const std::string& path);
    wire::Json post_json(const std::string& path, const wire::Json& body);

    std::uint64_t connections_opened() const { return connections_->load(); }
    const std::string& address() const { return address_; }

  private:
    std::string address_;
    std::shared_ptr<std::atomic<std::uint64_t>> connections_;
    std::unique_ptr<httplib::Client> client_;
};

}// namespace mosden::api
