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

#include <mosden/core/wire.hpp>
#include <mosden/sharing/service_manager.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mosden::harness {

inline constexpr int kScenarioFormatVersion = 1;

enum class Topology { ServerIsWorkstationRole, ServerIsConstrainedRole };

std::string_view to_string(Topology t);
/// Accepts "workstation" / "constrained" (and the full enum names).
Topology parse_topology(std::string_view text);

/// Listener and puller limits of the server process. The constrained role
/// caps both, which is how a low-end device is emulated on one host.
struct ServerLimits {
    std::size_t workers = 128;
    std::size_t max_queued = 0;
    std::size_t puller_workers = 16;

    friend bool operator==(const ServerLimits&, const ServerLimits&) = default;
};

ServerLimits default_limits(Topology t);

struct ScenarioConfig {
    std::string name = "scenario";
    Topology topology = Topology::ServerIsWorkstationRole;
    std::size_t clients = 3;
    std::size_t sensors_per_client = 30;
    std::int64_t sampling_interval_ms = 1000;
    sharing::Mode mode = sharing::Mode::Restful;
    std::size_t requests = 90;
    std::int64_t duration_s = 180;
    std::int64_t resource_sample_ms = 1000;
    std::uint64_t seed = 1;
    std::size_t history_size = 100;
    ServerLimits server;
    /// Sample the clients' storage footprint with every resource sample.
    bool storage_probe = false;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws InvalidQuery (e.g. more requests than client sensors).
void validate(const ScenarioConfig& c);

wire::Json to_json(const ScenarioConfig& c);
/// Missing server limits default from the topology. Throws InvalidQuery.
ScenarioConfig scenario_from_json(const wire::Json& j);
ScenarioConfig load_scenario(const std::filesystem::path& file);

/// setup1-{restful,push}-{30,60,90}, setup2-..., storage-linearity.
const std::vector<ScenarioConfig>& bundled_scenarios();
std::optional<ScenarioConfig> find_bundled(std::string_view name);

}// namespace mosden::harness
