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

#include <mosden/engine/config.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mosden::engine {

namespace {
[[noreturn]] void bad(const std::string& what) { raise(ErrorKind::InvalidDescriptor, what); }
}// namespace

bool is_valid_sensor_name(std::string_view name) {
    if (name.empty() || name.size() > 128 || name == "." || name == "..") {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
               c == '.';
    });
}

VirtualSensorConfig config_from_json(const wire::Json& j) {
    if (!j.is_object()) {
        bad("virtual sensor config must be a JSON object");
    }
    if (!j.contains("format_version") || !j.at("format_version").is_number_integer() ||
        j.at("format_version").get<int>() != kVirtualSensorFormatVersion) {
        bad("field 'format_version' must be " + std::to_string(kVirtualSensorFormatVersion));
    }
    VirtualSensorConfig c;
    if (!j.contains("name") || !j.at("name").is_string() || !is_valid_sensor_name(j.at("name").get<std::string>())) {
        bad("field 'name' must match [A-Za-z0-9_.-]+");
    }
    c.name = SensorName(j.at("name").get<std::string>());
    if (!j.contains("plugin_id") || !j.at("plugin_id").is_string() || j.at("plugin_id").get<std::string>().empty()) {
        bad("field 'plugin_id' must be a non-empty string");
    }
    c.plugin_id = j.at("plugin_id").get<std::string>();
    if (!j.contains("sampling_interval_ms") || !j.at("sampling_interval_ms").is_number_integer() ||
        j.at("sampling_interval_ms").get<std::int64_t>() < 1) {
        bad("field 'sampling_interval_ms' must be an integer >= 1");
    }
    c.sampling_interval_ms = j.at("sampling_interval_ms").get<std::int64_t>();
    if (j.contains("history_size")) {
        const auto& h = j.at("history_size");
        if (!h.is_number_integer() || h.get<std::int64_t>() < 1) {
            bad("field 'history_size' must be an integer >= 1");
        }
        c.history_size = h.get<std::size_t>();
    }
    if (j.contains("processors")) {
        const auto& procs = j.at("processors");
        if (!procs.is_array()) {
            bad("field 'processors' must be an array");
        }
        for (const auto& p : procs) {
            c.processors.push_back(processor_from_json(p));
        }
    }
    if (j.contains("output")) {
        c.output = wire::fields_from_json(j.at("output"));
    }
    return c;
}

VirtualSensorConfig parse_config(std::string_view text) {
    return config_from_json(wire::parse(text, ErrorKind::InvalidDescriptor));
}

VirtualSensorConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        raise(ErrorKind::NotFound, "cannot read " + file.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

wire::Json to_json(const VirtualSensorConfig& c) {
    wire::Json procs = wire::Json::array();
    for (const auto& p : c.processors) {
        procs.push_back(to_json(p));
    }
    wire::Json j{{"format_version", kVirtualSensorFormatVersion},
                 {"name", c.name.str()},
                 {"plugin_id", c.plugin_id},
                 {"sampling_interval_ms", c.sampling_interval_ms},
                 {"history_size", c.history_size},
                 {"processors", std::move(procs)}};
    if (!c.output.empty()) {
        j["output"] = wire::to_json(c.output);
    }
    return j;
}

VirtualSensorConfig resolve(VirtualSensorConfig config, const plugin::PluginDescriptor& plugin) {
    if (config.plugin_id != plugin.plugin_id) {
        bad("config refers to plugin '" + config.plugin_id + "', not '" + plugin.plugin_id + "'");
    }
    if (config.sampling_interval_ms < plugin.min_sampling_interval_ms) {
        bad("field 'sampling_interval_ms' (" + std::to_string(config.sampling_interval_ms) +
            ") is below the plugin minimum of " + std::to_string(plugin.min_sampling_interval_ms));
    }
    auto derived = chain_output(config.processors, plugin.output);
    if (config.output.empty()) {
        config.output = std::move(derived);
    } else if (config.output != derived) {
        bad("field 'output' does not match the output of the processor chain");
    }
    return config;
}

ConfigScan scan_configs(const std::filesystem::path& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) {
        raise(ErrorKind::NotFound, "virtual sensor directory " + directory.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".vsensor") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    ConfigScan scan;
    std::set<SensorName> names;
    for (const auto& f : files) {
        try {
            auto c = load_config(f);
            if (!names.insert(c.name).second) {
                raise(ErrorKind::Conflict, "duplicate virtual sensor name '" + c.name.str() + "'");
            }
            scan.configs.push_back(std::move(c));
        } catch (const EngineError& e) {
            scan.issues.push_back({f, e});
        }
    }
    return scan;
}

}// namespace mosden::engine
