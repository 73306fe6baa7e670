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

#include <mosden/harness/scenario.hpp>

#include <fstream>
#include <sstream>

namespace mosden::harness {

std::string_view to_string(Topology t) {
    return t == Topology::ServerIsConstrainedRole ? "constrained" : "workstation";
}

Topology parse_topology(std::string_view text) {
    if (text == "workstation" || text == "ServerIsWorkstationRole") {
        return Topology::ServerIsWorkstationRole;
    }
    if (text == "constrained" || text == "ServerIsConstrainedRole") {
        return Topology::ServerIsConstrainedRole;
    }
    raise(ErrorKind::InvalidQuery, "unknown topology '" + std::string(text) + "'");
}

ServerLimits default_limits(Topology t) {
    if (t == Topology::ServerIsConstrainedRole) {
        return {4, 4, 4};
    }
    return {};
}

void validate(const ScenarioConfig& c) {
    auto fail = [&](const std::string& what) { raise(ErrorKind::InvalidQuery, "scenario " + c.name + ": " + what); };
    if (c.name.empty()) {
        fail("name must not be empty");
    }
    if (c.clients == 0 || c.sensors_per_client == 0) {
        fail("needs at least one client and one sensor per client");
    }
    if (c.requests > c.clients * c.sensors_per_client) {
        fail(std::to_string(c.requests) + " requests exceed the " + std::to_string(c.clients * c.sensors_per_client) +
             " client sensors");
    }
    if (c.sampling_interval_ms < 10) {
        fail("sampling_interval_ms must be >= 10");
    }
    if (c.duration_s < 1) {
        fail("duration_s must be >= 1");
    }
    if (c.resource_sample_ms < 100) {
        fail("resource_sample_ms must be >= 100");
    }
    if (c.history_size == 0) {
        fail("history_size must be >= 1");
    }
    if (c.server.workers == 0 || c.server.puller_workers == 0) {
        fail("server workers and puller_workers must be >= 1");
    }
}

wire::Json to_json(const ScenarioConfig& c) {
    return {{"format_version", kScenarioFormatVersion},
            {"name", c.name},
            {"topology", std::string(to_string(c.topology))},
            {"clients", c.clients},
            {"sensors_per_client", c.sensors_per_client},
            {"sampling_interval_ms", c.sampling_interval_ms},
            {"mode", std::string(sharing::to_string(c.mode))},
            {"requests", c.requests},
            {"duration_s", c.duration_s},
            {"resource_sample_ms", c.resource_sample_ms},
            {"seed", c.seed},
            {"history_size", c.history_size},
            {"server",
             {{"workers", c.server.workers},
              {"max_queued", c.server.max_queued},
              {"puller_workers", c.server.puller_workers}}},
            {"storage_probe", c.storage_probe}};
}

ScenarioConfig scenario_from_json(const wire::Json& j) {
    if (!j.is_object()) {
        raise(ErrorKind::InvalidQuery, "scenario must be an object");
    }
    if (j.value("format_version", kScenarioFormatVersion) != kScenarioFormatVersion) {
        raise(ErrorKind::InvalidQuery, "unsupported scenario format_version");
    }
    ScenarioConfig c;
    try {
        c.name = j.value("name", c.name);
        c.topology = parse_topology(j.value("topology", std::string("workstation")));
        c.server = default_limits(c.topology);
        c.clients = j.value("clients", c.clients);
        c.sensors_per_client = j.value("sensors_per_client", c.sensors_per_client);
        c.sampling_interval_ms = j.value("sampling_interval_ms", c.sampling_interval_ms);
        c.mode = sharing::parse_mode(j.value("mode", std::string("restful")));
        c.requests = j.value("requests", c.requests);
        c.duration_s = j.value("duration_s", c.duration_s);
        c.resource_sample_ms = j.value("resource_sample_ms", c.resource_sample_ms);
        c.seed = j.value("seed", c.seed);
        c.history_size = j.value("history_size", c.history_size);
        c.storage_probe = j.value("storage_probe", c.storage_probe);
        if (j.contains("server")) {
            const auto& s = j.at("server");
            c.server.workers = s.value("workers", c.server.workers);
            c.server.max_queued = s.value("max_queued", c.server.max_queued);
            c.server.puller_workers = s.value("puller_workers", c.server.puller_workers);
        }
    } catch (const wire::Json::exception& e) {
        raise(ErrorKind::InvalidQuery, std::string("scenario: ") + e.what());
    }
    validate(c);
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        raise(ErrorKind::NotFound, "cannot read scenario " + file.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    return scenario_from_json(wire::parse(text.str(), ErrorKind::InvalidQuery));
}

const std::vector<ScenarioConfig>& bundled_scenarios() {
    static const std::vector<ScenarioConfig> all = [] {
        std::vector<ScenarioConfig> out;
        for (const auto topology : {Topology::ServerIsWorkstationRole, Topology::ServerIsConstrainedRole}) {
            for (const auto mode : {sharing::Mode::Restful, sharing::Mode::Push}) {
                for (const std::size_t n : {30, 60, 90}) {
                    ScenarioConfig c;
                    c.topology = topology;
                    c.server = default_limits(topology);
                    c.mode = mode;
                    c.requests = n;
                    c.name = std::string(topology == Topology::ServerIsWorkstationRole ? "setup1-" : "setup2-") +
                             std::string(sharing::to_string(mode)) + "-" + std::to_string(n);
                    out.push_back(c);
                }
            }
        }
        ScenarioConfig storage;
        storage.name = "storage-linearity";
        storage.clients = 1;
        storage.requests = 0;
        storage.sampling_interval_ms = 200;
        storage.history_size = 150;
        storage.duration_s = 60;
        storage.resource_sample_ms = 2000;
        storage.storage_probe = true;
        out.push_back(storage);
        return out;
    }();
    return all;
}

std::optional<ScenarioConfig> find_bundled(std::string_view name) {
    for (const auto& c : bundled_scenarios()) {
        if (c.name == name) {
            return c;
        }
    }
    return std::nullopt;
}

}// namespace mosden::harness
