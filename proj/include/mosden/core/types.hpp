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

#include <mosden/core/clock.hpp>

#include <compare>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mosden {

enum class FieldKind { Numeric, Text };

std::string_view to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view text);

struct FieldSpec {
    std::string name;
    FieldKind kind = FieldKind::Numeric;
    std::string unit;

    friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

using Fields = std::vector<FieldSpec>;

/// Throws InvalidDescriptor unless the list is non-empty with unique names
/// matching [a-z][a-z0-9_]*.
void validate_fields(std::span<const FieldSpec> fields);
bool is_valid_field_name(std::string_view name);

using Value = std::variant<double, std::string>;

struct StreamElement {
    TimestampMs timestamp = 0;
    std::vector<Value> values;

    friend bool operator==(const StreamElement&, const StreamElement&) = default;
};

/// Arity, per-position kind and finiteness check against an output structure.
bool conforms(const StreamElement& element, std::span<const FieldSpec> fields);
double numeric(const Value& v);

/// Opaque string identifier; the tag keeps sensor names and node ids apart.
template<class Tag>
class Identifier {
  public:
    Identifier() = default;
    explicit Identifier(std::string value) : value_(std::move(value)) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    static Identifier parse(std::string_view text) { return Identifier(std::string(text)); }
    std::string format() const { return value_; }

    friend auto operator<=>(const Identifier&, const Identifier&) = default;

  private:
    std::string value_;
};

struct NodeIdTag {};
struct SensorNameTag {};
struct SubscriptionIdTag {};
struct RequestIdTag {};

using NodeId = Identifier<NodeIdTag>;
using SensorName = Identifier<SensorNameTag>;
using SubscriptionId = Identifier<SubscriptionIdTag>;
using RequestId = Identifier<RequestIdTag>;

}// namespace mosden

template<class Tag>
struct std::hash<mosden::Identifier<Tag>> {
    std::size_t operator()(const mosden::Identifier<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
