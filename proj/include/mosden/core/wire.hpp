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

#include <json.hpp>

#include <string>
#include <string_view>

namespace mosden::wire {

using Json = nlohmann::json;

// Canonical element encoding: {"ts": <int ms>, "values": [<number|string>...]}.
// Field names travel separately with the sensor's published structure.
Json to_json(const StreamElement& element);
StreamElement element_from_json(const Json& j);

std::string encode(const StreamElement& element);
StreamElement decode(std::string_view text);

Json to_json(const FieldSpec& field);
FieldSpec field_from_json(const Json& j);
Json to_json(const Fields& fields);
Fields fields_from_json(const Json& j);

Json to_json(const std::vector<StreamElement>& elements);
std::vector<StreamElement> elements_from_json(const Json& j);

/// Parses JSON text, mapping syntax errors to EngineError(kind).
Json parse(std::string_view text, ErrorKind kind_on_error);

}// namespace mosden::wire
