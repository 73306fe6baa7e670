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

#include <mosden/api/http.hpp>

namespace mosden::api {

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Conflict: return 409;
        case ErrorKind::InvalidDescriptor:
        case ErrorKind::InvalidQuery: return 400;
        case ErrorKind::PluginFailure: return 424;
        case ErrorKind::PeerUnreachable: return 502;
        case ErrorKind::BufferOverflow: return 507;
        case ErrorKind::Shutdown: return 503;
    }
    return 500;
}

void write_json(httplib::Response& res, const wire::Json& body, int status) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void write_error(httplib::Response& res, const EngineError& e) {
    write_json(res, {{"error", std::string(to_string(e.kind()))}, {"detail", e.detail()}}, http_status(e.kind()));
}

void raise_from(const httplib::Result& result, const std::string& peer) {
    if (!result) {
        raise(ErrorKind::PeerUnreachable, peer + ": " + httplib::to_string(result.error()));
    }
    try {
        const auto body = wire::Json::parse(result->body);
        if (body.contains("error") && body.at("error").is_string()) {
            if (auto kind = parse_error_kind(body.at("error").get<std::string>())) {
                raise(*kind, body.value("detail", std::string{}));
            }
        }
    } catch (const wire::Json::exception&) {
    }
    raise(ErrorKind::PeerUnreachable, peer + " answered HTTP " + std::to_string(result->status));
}

void exclusive_bind(httplib::Server& server) {
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
}

std::pair<std::string, int> split_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
        raise(ErrorKind::InvalidQuery, "address must be host:port, got '" + address + "'");
    }
    try {
        const int port = std::stoi(address.substr(colon + 1));
        if (port <= 0 || port > 65535) {
            throw std::out_of_range("port");
        }
        return {address.substr(0, colon), port};
    } catch (const std::exception&) {
        raise(ErrorKind::InvalidQuery, "invalid port in address '" + address + "'");
    }
}

PeerClient::PeerClient(const std::string& address, bool keep_alive, int read_timeout_ms, int connect_timeout_ms)
    : address_(address), connections_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
    const auto [host, port] = split_address(address);
    client_ = std::make_unique<httplib::Client>(host, port);
    client_->set_keep_alive(keep_alive);
    client_->set_tcp_nodelay(true);
    client_->set_connection_timeout(connect_timeout_ms / 1000, (connect_timeout_ms % 1000) * 1000);
    client_->set_read_timeout(read_timeout_ms / 1000, (read_timeout_ms % 1000) * 1000);
    client_->set_write_timeout(5, 0);
    // Invoked once for every socket the client creates.
    client_->set_socket_options([counter = connections_](socket_t sock) {
        counter->fetch_add(1);
        httplib::default_socket_options(sock);
    });
}

httplib::Result PeerClient::get(const std::string& path) { return client_->Get(path); }

httplib::Result PeerClient::post(const std::string& path, const wire::Json& body) {
    return client_->Post(path, body.dump(), "application/json");
}

httplib::Result PeerClient::del(const std::string& path) { return client_->Delete(path); }

namespace {
wire::Json body_of(const httplib::Result& r, const std::string& peer) {
    if (!r || r->status >= 300) {
        raise_from(r, peer);
    }
    if (r->status == 204 || r->body.empty()) {
        return nullptr;
    }
    return wire::parse(r->body, ErrorKind::PeerUnreachable);
}
}// namespace

wire::Json PeerClient::get_json(const std::string& path) { return body_of(get(path), address_); }

wire::Json PeerClient::post_json(const std::string& path, const wire::Json& body) {
    return body_of(post(path, body), address_);
}

}// namespace mosden::api
