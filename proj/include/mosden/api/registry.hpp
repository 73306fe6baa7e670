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

#include <mosden/core/types.hpp>
#include <mosden/core/wire.hpp>
#include <mosden/sharing/query.hpp>

#include <httplib.h>

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mosden::api {

inline constexpr std::int64_t kDefaultTtlSeconds = 30;
inline constexpr std::int64_t kDefaultRefreshSeconds = 10;

struct NodeRegistration {
    NodeId node_id;
    std::string address;// host:port
    std::string group_tag;
    std::vector<sharing::SensorInfo> sensors;
    TimestampMs registered_at = 0;
    std::int64_t ttl_s = kDefaultTtlSeconds;

    friend bool operator==(const NodeRegistration&, const NodeRegistration&) = default;
};

wire::Json to_json(const sharing::SensorInfo& s);
sharing::SensorInfo sensor_info_from_json(const wire::Json& j);
wire::Json to_json(const NodeRegistration& r);
NodeRegistration registration_from_json(const wire::Json& j);

/// The discovery service nodes register with. A registration stays visible
/// until registered_at + ttl (by the registry's clock) or deregistration;
/// registering again replaces it and restarts the ttl.
class Registry {
  public:
    void register_node(NodeRegistration registration);
    /// Throws NotFound.
    void deregister(const NodeId& node);
    /// Live registrations, optionally restricted to one group tag, sorted by node id.
    std::vector<NodeRegistration> lookup(const std::optional<std::string>& tag = std::nullopt) const;

    /// Mounts POST /v1/registry/register, GET /v1/registry/nodes?tag=,
    /// DELETE /v1/registry/nodes/{id}.
    void mount(httplib::Server& server);

  private:
    mutable std::mutex mutex_;
    std::map<NodeId, NodeRegistration> nodes_;
};

/// Client side of the registry protocol. Throw PeerUnreachable when the
/// registry cannot be reached.
void register_node(const std::string& registry_address, const NodeRegistration& registration);
void deregister_node(const std::string& registry_address, const NodeId& node);
std::vector<NodeRegistration> lookup(const std::string& registry_address,
                                     const std::optional<std::string>& tag = std::nullopt);

}// namespace mosden::api
