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

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace mosden::cli {

/// Effective node settings. Sources are merged flags > env > file > defaults.
struct NodeConfig {
    std::string node_id = "node";
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string plugins_dir;
    std::string vsensors_dir;
    std::string data_dir;
    std::string registry;
    std::string group_tag;
    std::string log_level = "info";
    std::size_t workers = 64;
    std::size_t max_queued = 0;
    std::size_t puller_workers = 4;

    friend bool operator==(const NodeConfig&, const NodeConfig&) = default;
};

/// Raw key -> text settings from one source.
using Settings = std::map<std::string, std::string>;

/// Keys accepted in every source, e.g. "plugins_dir". The flag is
/// --plugins-dir and the variable MOSDEN_PLUGINS_DIR.
const std::vector<std::string>& config_keys();
std::string flag_name(const std::string& key);
std::string env_name(const std::string& key);

/// MOSDEN_* variables, read through `getenv`.
Settings env_settings(const std::function<const char*(const char*)>& getenv);

/// A JSON object of the same keys. Throws NotFound, InvalidQuery.
Settings file_settings(const std::filesystem::path& file);

/// Throws InvalidQuery for unknown keys or unparsable values.
NodeConfig resolve(const Settings& flags, const Settings& env, const Settings& file);

wire::Json to_json(const NodeConfig& c);

}// namespace mosden::cli
