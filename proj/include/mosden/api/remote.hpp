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

#include <mosden/api/http.hpp>
#include <mosden/sharing/service_manager.hpp>

#include <atomic>
#include <optional>
#include <string>

namespace mosden::api {

/// Newest element of `sensor` on a peer, or nullopt if it has none yet.
/// Throws PeerUnreachable or NotFound.
std::optional<StreamElement> remote_pull(const std::string& peer, const SensorName& sensor);

/// Same, over an existing (possibly held) session.
std::optional<StreamElement> remote_pull(PeerClient& session, const SensorName& sensor);

/// Push deliveries over HTTP: every delivery opens a new connection to the
/// subscriber's callback address and POSTs /v1/push/{subscription_id}.
class HttpPushTransport final : public sharing::PushTransport {
  public:
    explicit HttpPushTransport(int timeout_ms = 2000) : timeout_ms_(timeout_ms) {}

    bool deliver(const sharing::Subscription& sub, std::span<const StreamElement> elements) override;

    std::uint64_t connections_opened() const { return connections_.load(); }

  private:
    int timeout_ms_;
    std::atomic<std::uint64_t> connections_{0};
};

}// namespace mosden::api
