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
#include <mosden/core/types.hpp>

#include <cmath>
#include <set>

namespace mosden {

std::string_view to_string(FieldKind kind) { return kind == FieldKind::Numeric ? "numeric" : "text"; }

FieldKind parse_field_kind(std::string_view text) {
    if (text == "numeric") {
        return FieldKind::Numeric;
    }
    if (text == "text") {
        return FieldKind::Text;
    }
    raise(ErrorKind::InvalidDescriptor, "field kind must be 'numeric' or 'text', got '" + std::string(text) + "'");
}

bool is_valid_field_name(std::string_view name) {
    if (name.empty() || name.front() < 'a' || name.front() > 'z') {
        return false;
    }
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) {
            return false;
        }
    }
    return true;
}

void validate_fields(std::span<const FieldSpec> fields) {
    if (fields.empty()) {
        raise(ErrorKind::InvalidDescriptor, "output: at least one field is required");
    }
    std::set<std::string_view> seen;
    for (const auto& f : fields) {
        if (!is_valid_field_name(f.name)) {
            raise(ErrorKind::InvalidDescriptor, "output: invalid field name '" + f.name + "'");
        }
        if (!seen.insert(f.name).second) {
            raise(ErrorKind::InvalidDescriptor, "output: duplicate field name '" + f.name + "'");
        }
    }
}

bool conforms(const StreamElement& element, std::span<const FieldSpec> fields) {
    if (element.values.size() != fields.size()) {
        return false;
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& v = element.values[i];
        if (fields[i].kind == FieldKind::Numeric) {
            const auto* d = std::get_if<double>(&v);
            if (d == nullptr || !std::isfinite(*d)) {
                return false;
            }
        } else if (!std::holds_alternative<std::string>(v)) {
            return false;
        }
    }
    return true;
}

double numeric(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) {
        return *d;
    }
    raise(ErrorKind::InvalidQuery, "expected a numeric value");
}

}// namespace mosden
