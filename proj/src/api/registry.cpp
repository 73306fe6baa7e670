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
#include <mosden/api/registry.hpp>

#include <spdlog/spdlog.h>

namespace mosden::api {

wire::Json to_json(const sharing::SensorInfo& s) {
    return {{"name", s.name.str()},
            {"output", wire::to_json(s.output)},
            {"plugin_id", s.plugin_id},
            {"sampling_interval_ms", s.sampling_interval_ms}};
}

sharing::SensorInfo sensor_info_from_json(const wire::Json& j) {
    if (!j.is_object() || !j.contains("name") || !j.at("name").is_string() || !j.contains("output")) {
        raise(ErrorKind::InvalidQuery, "sensor entry needs 'name' and 'output'");
    }
    sharing::SensorInfo s;
    s.name = SensorName(j.at("name").get<std::string>());
    try {
        s.output = wire::fields_from_json(j.at("output"));
    } catch (const EngineError& e) {
        raise(ErrorKind::InvalidQuery, e.detail());
    }
    s.plugin_id = j.value("plugin_id", std::string{});
    s.sampling_interval_ms = j.value("sampling_interval_ms", std::int64_t{0});
    return s;
}

wire::Json to_json(const NodeRegistration& r) {
    wire::Json sensors = wire::Json::array();
    for (const auto& s : r.sensors) {
        sensors.push_back(to_json(s));
    }
    return {{"node_id", r.node_id.str()}, {"address", r.address},     {"group_tag", r.group_tag},
            {"sensors", std::move(sensors)}, {"registered_at", r.registered_at}, {"ttl_s", r.ttl_s}};
}

NodeRegistration registration_from_json(const wire::Json& j) {
    if (!j.is_object() || !j.contains("node_id") || !j.at("node_id").is_string() || !j.contains("address") ||
        !j.at("address").is_string()) {
        raise(ErrorKind::InvalidQuery, "registration needs string 'node_id' and 'address'");
    }
    NodeRegistration r;
    r.node_id = NodeId(j.at("node_id").get<std::string>());
    r.address = j.at("address").get<std::string>();
    split_address(r.address);
    r.group_tag = j.value("group_tag", std::string{});
    if (j.contains("sensors")) {
        if (!j.at("sensors").is_array()) {
            raise(ErrorKind::InvalidQuery, "'sensors' must be an array");
        }
        for (const auto& s : j.at("sensors")) {
            r.sensors.push_back(sensor_info_from_json(s));
        }
    }
    r.registered_at = j.value("registered_at", TimestampMs{0});
    r.ttl_s = j.value("ttl_s", kDefaultTtlSeconds);
    if (r.ttl_s < 1) {
        raise(ErrorKind::InvalidQuery, "'ttl_s' must be >= 1");
    }
    return r;
}

void Registry::register_node(NodeRegistration registration) {
    registration.registered_at = now_ms();
    std::lock_guard lock(mutex_);
    auto id = registration.node_id;
    nodes_.insert_or_assign(std::move(id), std::move(registration));
}

void Registry::deregister(const NodeId& node) {
    std::lock_guard lock(mutex_);
    if (nodes_.erase(node) == 0) {
        raise(ErrorKind::NotFound, "node '" + node.str() + "' is not registered");
    }
}

std::vector<NodeRegistration> Registry::lookup(const std::optional<std::string>& tag) const {
    const auto now = now_ms();
    std::lock_guard lock(mutex_);
    std::vector<NodeRegistration> out;
    for (const auto& [_, r] : nodes_) {
        if (now >= r.registered_at + r.ttl_s * 1000) {
            continue;
        }
        if (tag && r.group_tag != *tag) {
            continue;
        }
        out.push_back(r);
    }
    return out;
}

void Registry::mount(httplib::Server& server) {
    server.Post("/v1/registry/register", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            auto r = registration_from_json(wire::parse(req.body, ErrorKind::InvalidQuery));
            spdlog::debug("registry: {} at {} with {} sensors", r.node_id.str(), r.address, r.sensors.size());
            register_node(r);
            write_json(res, {{"registered", r.node_id.str()}});
        } catch (const EngineError& e) {
            write_error(res, e);
        }
    });
    server.Get("/v1/registry/nodes", [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> tag;
        if (req.has_param("tag") && !req.get_param_value("tag").empty()) {
            tag = req.get_param_value("tag");
        }
        wire::Json nodes = wire::Json::array();
        for (const auto& r : lookup(tag)) {
            nodes.push_back(to_json(r));
        }
        write_json(res, {{"nodes", std::move(nodes)}});
    });
    server.Delete(R"(/v1/registry/nodes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            deregister(NodeId(req.matches[1].str()));
            res.status = 204;
        } catch (const EngineError& e) {
            write_error(res, e);
        }
    });
}

void register_node(const std::string& registry_address, const NodeRegistration& registration) {
    PeerClient client(registry_address, false);
    client.post_json("/v1/registry/register", to_json(registration));
}

void deregister_node(const std::string& registry_address, const NodeId& node) {
    PeerClient client(registry_address, false);
    auto r = client.del("/v1/registry/nodes/" + node.str());
    if (!r || r->status >= 300) {
        raise_from(r, registry_address);
    }
}

std::vector<NodeRegistration> lookup(const std::string& registry_address, const std::optional<std::string>& tag) {
    PeerClient client(registry_address, false);
    const std::string path = tag ? "/v1/registry/nodes?tag=" + httplib::detail::encode_query_param(*tag)
                                 : std::string("/v1/registry/nodes");
    const auto body = client.get_json(path);
    std::vector<NodeRegistration> out;
    for (const auto& n : body.at("nodes")) {
        out.push_back(registration_from_json(n));
    }
    return out;
}

}// namespace mosden::api
