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

#include <mosden/engine/config.hpp>
#include <mosden/plugin/plugin.hpp>
#include <mosden/storage/history_store.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace mosden::engine {

enum class Lifecycle { Instantiated, Running, Updating, Removed };

std::string_view to_string(Lifecycle l);

struct SensorCounters {
    std::uint64_t samples = 0;
    std::uint64_t processor_drops = 0;
    std::uint64_t plugin_failures = 0;
    std::uint64_t stored = 0;
};

struct VirtualSensorState {
    VirtualSensorConfig config;
    Lifecycle lifecycle = Lifecycle::Instantiated;
    std::optional<StreamElement> last_element;
    SensorCounters counters;
    std::uint64_t generation = 0;
};

/// Virtual-sensor lifecycle manager. Each running sensor owns one sampling
/// thread that fires at start + k*interval (missed ticks are skipped) and
/// pushes plugin -> processors -> storage. Lifecycle calls on one sensor are
/// serialized; distinct sensors run concurrently.
class VirtualSensorManager {
  public:
    using AppendListener = std::function<void(const SensorName&, const StreamElement&)>;

    VirtualSensorManager(plugin::PluginCatalog& catalog, storage::HistoryStore& store);
    ~VirtualSensorManager();

    VirtualSensorManager(const VirtualSensorManager&) = delete;
    VirtualSensorManager& operator=(const VirtualSensorManager&) = delete;

    /// Called from sampling threads after each stored element.
    void set_append_listener(AppendListener listener);

    /// Throws Conflict (name in use), PluginFailure (unknown or unopenable
    /// plugin), InvalidDescriptor (config does not fit the plugin).
    VirtualSensorState instantiate(VirtualSensorConfig config);

    /// Stop-then-start under the new config. History survives when the
    /// output structure is unchanged. Throws NotFound, InvalidDescriptor.
    VirtualSensorState update(const SensorName& name, VirtualSensorConfig config);

    /// Stops sampling; the storage table stays queryable. Throws NotFound.
    void remove(const SensorName& name);

    VirtualSensorState state(const SensorName& name) const;
    std::vector<VirtualSensorState> list(bool include_removed = false) const;
    bool is_active(const SensorName& name) const;

    void stop_all();

  private:
    struct Sensor;

    std::shared_ptr<Sensor> find(const SensorName& name) const;
    VirtualSensorState start(const std::shared_ptr<Sensor>& sensor, VirtualSensorConfig config);
    void stop(Sensor& sensor);
    void run_loop(std::shared_ptr<Sensor> sensor, std::uint64_t generation);

    plugin::PluginCatalog& catalog_;
    storage::HistoryStore& store_;
    AppendListener listener_;
    mutable std::mutex mutex_;
    std::map<SensorName, std::shared_ptr<Sensor>> sensors_;
};

}// namespace mosden::engine
