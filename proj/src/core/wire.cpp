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

#include <mosden/core/error.hpp>
#include <mosden/core/wire.hpp>

#include <cmath>

namespace mosden::wire {

Json to_json(const StreamElement& element) {
    Json values = Json::array();
    for (const auto& v : element.values) {
        if (const auto* d = std::get_if<double>(&v)) {
            if (!std::isfinite(*d)) {
                raise(ErrorKind::InvalidQuery, "non-finite value cannot be encoded");
            }
            values.push_back(*d);
        } else {
            values.push_back(std::get<std::string>(v));
        }
    }
    return Json{{"ts", element.timestamp}, {"values", std::move(values)}};
}

StreamElement element_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("ts") || !j.contains("values")) {
        raise(ErrorKind::InvalidQuery, "element must be an object with 'ts' and 'values'");
    }
    const auto& ts = j.at("ts");
    const auto& values = j.at("values");
    if (!ts.is_number_integer() || !values.is_array()) {
        raise(ErrorKind::InvalidQuery, "element 'ts' must be an integer and 'values' an array");
    }
    StreamElement e;
    e.timestamp = ts.get<TimestampMs>();
    e.values.reserve(values.size());
    for (const auto& v : values) {
        if (v.is_number()) {
            e.values.emplace_back(v.get<double>());
        } else if (v.is_string()) {
            e.values.emplace_back(v.get<std::string>());
        } else {
            raise(ErrorKind::InvalidQuery, "element values must be numbers or strings");
        }
    }
    return e;
}

std::string encode(const StreamElement& element) { return to_json(element).dump(); }

StreamElement decode(std::string_view text) { return element_from_json(parse(text, ErrorKind::InvalidQuery)); }

Json to_json(const FieldSpec& field) {
    return Json{{"name", field.name}, {"kind", std::string(to_string(field.kind))}, {"unit", field.unit}};
}

FieldSpec field_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("name") || !j.at("name").is_string()) {
        raise(ErrorKind::InvalidDescriptor, "output: each field needs a string 'name'");
    }
    FieldSpec f;
    f.name = j.at("name").get<std::string>();
    if (j.contains("kind")) {
        if (!j.at("kind").is_string()) {
            raise(ErrorKind::InvalidDescriptor, "output." + f.name + ".kind must be a string");
        }
        f.kind = parse_field_kind(j.at("kind").get<std::string>());
    }
    if (j.contains("unit")) {
        if (!j.at("unit").is_string()) {
            raise(ErrorKind::InvalidDescriptor, "output." + f.name + ".unit must be a string");
        }
        f.unit = j.at("unit").get<std::string>();
    }
    return f;
}

Json to_json(const Fields& fields) {
    Json out = Json::array();
    for (const auto& f : fields) {
        out.push_back(to_json(f));
    }
    return out;
}

Fields fields_from_json(const Json& j) {
    if (!j.is_array()) {
        raise(ErrorKind::InvalidDescriptor, "output must be an array of fields");
    }
    Fields out;
    for (const auto& f : j) {
        out.push_back(field_from_json(f));
    }
    validate_fields(out);
    return out;
}

Json to_json(const std::vector<StreamElement>& elements) {
    Json out = Json::array();
    for (const auto& e : elements) {
        out.push_back(to_json(e));
    }
    return out;
}

std::vector<StreamElement> elements_from_json(const Json& j) {
    if (!j.is_array()) {
        raise(ErrorKind::InvalidQuery, "expected an array of elements");
    }
    std::vector<StreamElement> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        out.push_back(element_from_json(e));
    }
    return out;
}

Json parse(std::string_view text, ErrorKind kind_on_error) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        raise(kind_on_error, std::string("malformed JSON: ") + e.what());
    }
}

}// namespace mosden::wire
