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

#include <mosden/cli/config.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace mosden::cli {

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {"node_id",   "host",     "port",      "plugins_dir",
                                                  "vsensors_dir", "data_dir", "registry",  "group_tag",
                                                  "log_level", "workers",  "max_queued", "puller_workers"};
    return keys;
}

std::string flag_name(const std::string& key) {
    std::string f = "--" + key;
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
}

std::string env_name(const std::string& key) {
    std::string e = "MOSDEN_" + key;
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::toupper(c); });
    return e;
}

Settings env_settings(const std::function<const char*(const char*)>& getenv) {
    Settings out;
    for (const auto& key : config_keys()) {
        if (const char* v = getenv(env_name(key).c_str())) {
            out[key] = v;
        }
    }
    return out;
}

Settings file_settings(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        raise(ErrorKind::NotFound, "cannot read config file " + file.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    const auto j = wire::parse(text.str(), ErrorKind::InvalidQuery);
    if (!j.is_object()) {
        raise(ErrorKind::InvalidQuery, file.string() + ": config must be an object");
    }
    Settings out;
    for (const auto& [key, value] : j.items()) {
        out[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return out;
}

namespace {

std::size_t parse_count(const std::string& key, const std::string& text, long long min, long long max) {
    try {
        std::size_t used = 0;
        const auto v = std::stoll(text, &used);
        if (used == text.size() && v >= min && v <= max) {
            return static_cast<std::size_t>(v);
        }
    } catch (const std::exception&) {
    }
    raise(ErrorKind::InvalidQuery, "'" + key + "' must be an integer in [" + std::to_string(min) + ", " +
                                       std::to_string(max) + "], got '" + text + "'");
}

void apply(NodeConfig& c, const Settings& s) {
    const auto& keys = config_keys();
    for (const auto& [key, value] : s) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            raise(ErrorKind::InvalidQuery, "unknown setting '" + key + "'");
        }
        if (key == "node_id") {
            if (value.empty()) {
                raise(ErrorKind::InvalidQuery, "'node_id' must not be empty");
            }
            c.node_id = value;
        } else if (key == "host") {
            c.host = value;
        } else if (key == "port") {
            c.port = static_cast<int>(parse_count(key, value, 0, 65535));
        } else if (key == "plugins_dir") {
            c.plugins_dir = value;
        } else if (key == "vsensors_dir") {
            c.vsensors_dir = value;
        } else if (key == "data_dir") {
            c.data_dir = value;
        } else if (key == "registry") {
            c.registry = value;
        } else if (key == "group_tag") {
            c.group_tag = value;
        } else if (key == "log_level") {
            static const std::vector<std::string> levels = {"trace", "debug", "info", "warn", "error", "off"};
            if (std::find(levels.begin(), levels.end(), value) == levels.end()) {
                raise(ErrorKind::InvalidQuery, "'log_level' must be one of trace|debug|info|warn|error|off");
            }
            c.log_level = value;
        } else if (key == "workers") {
            c.workers = parse_count(key, value, 1, 4096);
        } else if (key == "max_queued") {
            c.max_queued = parse_count(key, value, 0, 1'000'000);
        } else if (key == "puller_workers") {
            c.puller_workers = parse_count(key, value, 1, 1024);
        }
    }
}

}// namespace

NodeConfig resolve(const Settings& flags, const Settings& env, const Settings& file) {
    NodeConfig c;
    apply(c, file);
    apply(c, env);
    apply(c, flags);
    return c;
}

wire::Json to_json(const NodeConfig& c) {
    return {{"node_id", c.node_id},   {"host", c.host},         {"port", c.port},
            {"plugins_dir", c.plugins_dir}, {"vsensors_dir", c.vsensors_dir}, {"data_dir", c.data_dir},
            {"registry", c.registry}, {"group_tag", c.group_tag}, {"log_level", c.log_level},
            {"workers", c.workers},   {"max_queued", c.max_queued}, {"puller_workers", c.puller_workers}};
}

}// namespace mosden::cli
