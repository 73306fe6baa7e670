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

#include <mosden/core/types.hpp>
#include <mosden/core/wire.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mosden::plugin {

/// Something that can produce one record of raw values at a given instant.
class SampleSource {
  public:
    virtual ~SampleSource() = default;
    virtual std::vector<Value> read(TimestampMs at) = 0;
};

/// Names of the simulated sensors shipped with the engine.
const std::vector<std::string>& builtin_names();

/// Number of values a builtin produces, or nullopt for an unknown name.
std::optional<std::size_t> builtin_arity(std::string_view name);

/// Default output structure of a builtin (names and units).
Fields builtin_output(std::string_view name);

/// Constructs a builtin generator. Stochastic builtins draw from a
/// std::mt19937_64 seeded by the `seed` parameter (default 0).
/// Throws PluginFailure for an unknown name or a bad parameter.
std::unique_ptr<SampleSource> make_builtin(std::string_view name, const wire::Json& parameters);

}// namespace mosden::plugin
