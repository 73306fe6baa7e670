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

#include <mosden/plugin/builtin.hpp>
#include <mosden/plugin/descriptor.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mosden::plugin {

namespace {

[[noreturn]] void bad(const std::string& what) { raise(ErrorKind::InvalidDescriptor, what); }

const wire::Json& require(const wire::Json& j, const char* key) {
    if (!j.contains(key)) {
        bad(std::string("missing required field '") + key + "'");
    }
    return j.at(key);
}

std::string require_string(const wire::Json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_string() || v.get<std::string>().empty()) {
        bad(std::string("field '") + key + "' must be a non-empty string");
    }
    return v.get<std::string>();
}

}// namespace

PluginDescriptor descriptor_from_json(const wire::Json& j) {
    if (!j.is_object()) {
        bad("descriptor must be a JSON object");
    }
    const auto& version = require(j, "format_version");
    if (!version.is_number_integer() || version.get<int>() != kDescriptorFormatVersion) {
        bad("field 'format_version' must be " + std::to_string(kDescriptorFormatVersion));
    }

    PluginDescriptor d;
    d.plugin_id = require_string(j, "plugin_id");
    d.display_name = j.contains("display_name") && j.at("display_name").is_string()
                         ? j.at("display_name").get<std::string>()
                         : d.plugin_id;
    d.output = wire::fields_from_json(require(j, "output"));

    const auto& interval = require(j, "min_sampling_interval_ms");
    if (!interval.is_number_integer() || interval.get<std::int64_t>() < 1) {
        bad("field 'min_sampling_interval_ms' must be an integer >= 1");
    }
    d.min_sampling_interval_ms = interval.get<std::int64_t>();

    const auto& source = require(j, "source");
    if (!source.is_object()) {
        bad("field 'source' must be an object");
    }
    const auto type = require_string(source, "type");
    if (type == "builtin") {
        BuiltinSource b;
        b.name = require_string(source, "name");
        if (source.contains("parameters")) {
            if (!source.at("parameters").is_object()) {
                bad("field 'source.parameters' must be an object");
            }
            b.parameters = source.at("parameters");
        }
        if (auto arity = builtin_arity(b.name); arity && *arity != d.output.size()) {
            bad("field 'output' declares " + std::to_string(d.output.size()) + " fields but builtin '" + b.name +
                "' produces " + std::to_string(*arity));
        }
        d.source = std::move(b);
    } else if (type == "external") {
        const auto endpoint = require_string(source, "endpoint");
        if (endpoint.find(':') == std::string::npos) {
            bad("field 'source.endpoint' must be host:port");
        }
        d.source = ExternalSource{endpoint};
    } else {
        bad("field 'source.type' must be 'builtin' or 'external'");
    }
    return d;
}

PluginDescriptor parse_descriptor(std::string_view text) {
    return descriptor_from_json(wire::parse(text, ErrorKind::InvalidDescriptor));
}

wire::Json to_json(const PluginDescriptor& d) {
    wire::Json source;
    if (const auto* b = std::get_if<BuiltinSource>(&d.source)) {
        source = {{"type", "builtin"}, {"name", b->name}, {"parameters", b->parameters}};
    } else {
        source = {{"type", "external"}, {"endpoint", std::get<ExternalSource>(d.source).endpoint}};
    }
    return wire::Json{{"format_version", kDescriptorFormatVersion},
                      {"plugin_id", d.plugin_id},
                      {"display_name", d.display_name},
                      {"output", wire::to_json(d.output)},
                      {"min_sampling_interval_ms", d.min_sampling_interval_ms},
                      {"source", source}};
}

PluginDescriptor load_descriptor(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        raise(ErrorKind::NotFound, "cannot read " + file.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_descriptor(buf.str());
}

ScanResult scan_plugins(const std::filesystem::path& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) {
        raise(ErrorKind::NotFound, "plugin directory " + directory.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".plugin") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    ScanResult result;
    std::set<std::string> ids;
    for (const auto& file : files) {
        try {
            auto d = load_descriptor(file);
            if (!ids.insert(d.plugin_id).second) {
                bad("duplicate plugin_id '" + d.plugin_id + "'");
            }
            result.descriptors.push_back(std::move(d));
        } catch (const EngineError& e) {
            result.issues.push_back({file, e});
        }
    }
    return result;
}

}// namespace mosden::plugin
