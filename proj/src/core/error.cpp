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

#include <array>
#include <utility>

namespace mosden {

namespace {
constexpr std::array<std::pair<ErrorKind, std::string_view>, 8> kNames{{
    {ErrorKind::NotFound, "NotFound"},
    {ErrorKind::Conflict, "Conflict"},
    {ErrorKind::InvalidDescriptor, "InvalidDescriptor"},
    {ErrorKind::InvalidQuery, "InvalidQuery"},
    {ErrorKind::PluginFailure, "PluginFailure"},
    {ErrorKind::PeerUnreachable, "PeerUnreachable"},
    {ErrorKind::BufferOverflow, "BufferOverflow"},
    {ErrorKind::Shutdown, "Shutdown"},
}};
}// namespace

std::string_view to_string(ErrorKind kind) {
    for (const auto& [k, name] : kNames) {
        if (k == kind) {
            return name;
        }
    }
    return "Unknown";
}

std::optional<ErrorKind> parse_error_kind(std::string_view text) {
    for (const auto& [k, name] : kNames) {
        if (name == text) {
            return k;
        }
    }
    return std::nullopt;
}

EngineError::EngineError(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

void raise(ErrorKind kind, const std::string& detail) { throw EngineError(kind, detail); }

}// namespace mosden
