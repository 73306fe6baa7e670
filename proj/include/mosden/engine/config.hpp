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
#include <mosden/engine/processor.hpp>
#include <mosden/plugin/descriptor.hpp>

#include <filesystem>
#include <vector>

namespace mosden::engine {

inline constexpr int kVirtualSensorFormatVersion = 1;

struct VirtualSensorConfig {
    SensorName name;
    std::string plugin_id;
    std::int64_t sampling_interval_ms = 1000;
    Chain processors;
    std::size_t history_size = 100;
    Fields output;// empty until resolved against the plugin

    friend bool operator==(const VirtualSensorConfig&, const VirtualSensorConfig&) = default;
};

bool is_valid_sensor_name(std::string_view name);

VirtualSensorConfig config_from_json(const wire::Json& j);
VirtualSensorConfig parse_config(std::string_view text);
VirtualSensorConfig load_config(const std::filesystem::path& file);
wire::Json to_json(const VirtualSensorConfig& c);

/// Checks the config against its plugin and fills in `output` when it was
/// left empty. Throws InvalidDescriptor on any mismatch.
VirtualSensorConfig resolve(VirtualSensorConfig config, const plugin::PluginDescriptor& plugin);

struct ConfigIssue {
    std::filesystem::path file;
    EngineError error;
};

struct ConfigScan {
    std::vector<VirtualSensorConfig> configs;
    std::vector<ConfigIssue> issues;
};

/// Loads every `*.vsensor` file in a directory, sorted by file name.
ConfigScan scan_configs(const std::filesystem::path& directory);

}// namespace mosden::engine
