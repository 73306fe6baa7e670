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
#include <mosden/core/types.hpp>
#include <mosden/core/wire.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace mosden::plugin {

inline constexpr int kDescriptorFormatVersion = 1;

struct BuiltinSource {
    std::string name;
    wire::Json parameters = wire::Json::object();

    friend bool operator==(const BuiltinSource&, const BuiltinSource&) = default;
};

struct ExternalSource {
    std::string endpoint;// host:port

    friend bool operator==(const ExternalSource&, const ExternalSource&) = default;
};

struct PluginDescriptor {
    std::string plugin_id;
    std::string display_name;
    Fields output;
    std::int64_t min_sampling_interval_ms = 1;
    std::variant<BuiltinSource, ExternalSource> source;

    friend bool operator==(const PluginDescriptor&, const PluginDescriptor&) = default;
};

/// Parses and validates one descriptor document. Diagnostics name the
/// offending field. Throws InvalidDescriptor.
PluginDescriptor parse_descriptor(std::string_view text);
PluginDescriptor descriptor_from_json(const wire::Json& j);
wire::Json to_json(const PluginDescriptor& d);

PluginDescriptor load_descriptor(const std::filesystem::path& file);

struct ScanIssue {
    std::filesystem::path file;
    EngineError error;
};

struct ScanResult {
    std::vector<PluginDescriptor> descriptors;
    std::vector<ScanIssue> issues;
};

/// Reads every `*.plugin` file in `directory` (sorted by file name). Malformed
/// files and duplicate plugin ids are reported in `issues`, not thrown.
/// Throws NotFound if the directory does not exist.
ScanResult scan_plugins(const std::filesystem::path& directory);

}// namespace mosden::plugin
