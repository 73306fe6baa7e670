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

#include <mosden/plugin/builtin.hpp>
#include <mosden/plugin/descriptor.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace mosden::plugin {

enum class HandleState { Discovered, Active, Failed, Removed };

std::string_view to_string(HandleState state);

inline constexpr int kDefaultFailureThreshold = 5;

/// A live connection to one sensor source. Owned by a single sampling loop;
/// not safe for concurrent sample() calls.
class PluginHandle {
  public:
    PluginHandle(PluginDescriptor descriptor, std::unique_ptr<SampleSource> source,
                 int failure_threshold = kDefaultFailureThreshold);

    const PluginDescriptor& descriptor() const noexcept { return descriptor_; }
    HandleState state() const noexcept { return state_; }
    const std::optional<EngineError>& last_error() const noexcept { return last_error_; }
    int consecutive_failures() const noexcept { return consecutive_failures_; }

    /// Reads one record stamped `at`. Throws PluginFailure if the source fails
    /// or returns values that do not match the declared output; after
    /// `failure_threshold` consecutive failures the handle becomes Failed.
    StreamElement sample(TimestampMs at);

    void close();

  private:
    PluginDescriptor descriptor_;
    std::unique_ptr<SampleSource> source_;
    HandleState state_ = HandleState::Active;
    int failure_threshold_;
    int consecutive_failures_ = 0;
    std::optional<EngineError> last_error_;
};

/// Opens a descriptor's source. External sources are probed once with
/// GET /sample. Throws PluginFailure.
PluginHandle open_plugin(const PluginDescriptor& descriptor, int failure_threshold = kDefaultFailureThreshold);

/// A node's set of known descriptors, refreshed by rescanning its plugin
/// directory. Safe for concurrent lookup.
class PluginCatalog {
  public:
    PluginCatalog() = default;
    explicit PluginCatalog(std::filesystem::path directory);

    /// Rescans the directory; newly added files appear, removed files
    /// disappear. Open handles are unaffected.
    std::vector<ScanIssue> rescan();

    void add(PluginDescriptor descriptor);
    std::optional<PluginDescriptor> find(const std::string& plugin_id) const;
    std::vector<PluginDescriptor> all() const;

  private:
    std::filesystem::path directory_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, PluginDescriptor> descriptors_;
    std::map<std::string, PluginDescriptor> manual_;
};

}// namespace mosden::plugin
