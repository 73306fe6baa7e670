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

#include <mosden/engine/manager.hpp>

#include <spdlog/spdlog.h>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <thread>

namespace mosden::engine {

std::string_view to_string(Lifecycle l) {
    switch (l) {
        case Lifecycle::Instantiated: return "Instantiated";
        case Lifecycle::Running: return "Running";
        case Lifecycle::Updating: return "Updating";
        case Lifecycle::Removed: return "Removed";
    }
    return "Unknown";
}

struct VirtualSensorManager::Sensor {
    std::mutex lifecycle_mutex;

    mutable std::mutex state_mutex;
    std::condition_variable cv;
    bool stop_requested = false;
    VirtualSensorState state;
    Fields plugin_output;

    std::thread thread;
    std::optional<plugin::PluginHandle> handle;
};

VirtualSensorManager::VirtualSensorManager(plugin::PluginCatalog& catalog, storage::HistoryStore& store)
    : catalog_(catalog), store_(store) {}

VirtualSensorManager::~VirtualSensorManager() { stop_all(); }

void VirtualSensorManager::set_append_listener(AppendListener listener) { listener_ = std::move(listener); }

std::shared_ptr<VirtualSensorManager::Sensor> VirtualSensorManager::find(const SensorName& name) const {
    std::lock_guard lock(mutex_);
    auto it = sensors_.find(name);
    if (it == sensors_.end()) {
        raise(ErrorKind::NotFound, "no virtual sensor named '" + name.str() + "'");
    }
    return it->second;
}

VirtualSensorState VirtualSensorManager::instantiate(VirtualSensorConfig config) {
    if (!is_valid_sensor_name(config.name.str())) {
        raise(ErrorKind::InvalidDescriptor, "invalid virtual sensor name '" + config.name.str() + "'");
    }
    auto sensor = std::make_shared<Sensor>();
    {
        std::lock_guard lock(mutex_);
        auto it = sensors_.find(config.name);
        if (it != sensors_.end()) {
            std::lock_guard state_lock(it->second->state_mutex);
            if (it->second->state.lifecycle != Lifecycle::Removed) {
                raise(ErrorKind::Conflict, "virtual sensor '" + config.name.str() + "' already exists");
            }
        }
        sensors_[config.name] = sensor;
    }
    std::lock_guard lifecycle(sensor->lifecycle_mutex);
    try {
        return start(sensor, std::move(config));
    } catch (...) {
        std::lock_guard lock(mutex_);
        auto it = sensors_.find(sensor->state.config.name);
        if (it != sensors_.end() && it->second == sensor) {
            sensors_.erase(it);
        }
        throw;
    }
}

VirtualSensorState VirtualSensorManager::start(const std::shared_ptr<Sensor>& sensor, VirtualSensorConfig config) {
    const auto descriptor = catalog_.find(config.plugin_id);
    if (!descriptor) {
        {
            std::lock_guard lock(sensor->state_mutex);
            sensor->state.config = config;
        }
        raise(ErrorKind::PluginFailure, "unknown plugin '" + config.plugin_id + "'");
    }
    {
        std::lock_guard lock(sensor->state_mutex);
        sensor->state.config = config;
    }
    config = resolve(std::move(config), *descriptor);
    auto handle = plugin::open_plugin(*descriptor);

    const bool same_structure = store_.has_table(config.name) && store_.output(config.name) == config.output;
    store_.ensure_table(config.name, config.output, config.history_size);

    std::uint64_t generation = 0;
    {
        std::lock_guard lock(sensor->state_mutex);
        if (!same_structure) {
            sensor->state.counters = {};
            sensor->state.last_element.reset();
        }
        sensor->state.config = std::move(config);
        sensor->state.lifecycle = Lifecycle::Running;
        generation = ++sensor->state.generation;
        sensor->stop_requested = false;
        sensor->plugin_output = descriptor->output;
    }
    sensor->handle.emplace(std::move(handle));
    sensor->thread = std::thread([this, sensor, generation] { run_loop(sensor, generation); });
    return state(sensor->state.config.name);
}

void VirtualSensorManager::stop(Sensor& sensor) {
    {
        std::lock_guard lock(sensor.state_mutex);
        sensor.stop_requested = true;
        ++sensor.state.generation;
    }
    sensor.cv.notify_all();
    if (sensor.thread.joinable()) {
        sensor.thread.join();
    }
    if (sensor.handle) {
        sensor.handle->close();
        sensor.handle.reset();
    }
}

VirtualSensorState VirtualSensorManager::update(const SensorName& name, VirtualSensorConfig config) {
    auto sensor = find(name);
    std::lock_guard lifecycle(sensor->lifecycle_mutex);
    VirtualSensorConfig previous;
    {
        std::lock_guard lock(sensor->state_mutex);
        if (sensor->state.lifecycle == Lifecycle::Removed) {
            raise(ErrorKind::NotFound, "virtual sensor '" + name.str() + "' was removed");
        }
        previous = sensor->state.config;
    }
    if (config.name != name) {
        raise(ErrorKind::InvalidDescriptor, "update cannot rename '" + name.str() + "' to '" + config.name.str() + "'");
    }
    // Validate before touching the running loop.
    const auto descriptor = catalog_.find(config.plugin_id);
    if (!descriptor) {
        raise(ErrorKind::InvalidDescriptor, "unknown plugin '" + config.plugin_id + "'");
    }
    config = resolve(std::move(config), *descriptor);

    {
        std::lock_guard lock(sensor->state_mutex);
        sensor->state.lifecycle = Lifecycle::Updating;
    }
    stop(*sensor);
    try {
        return start(sensor, std::move(config));
    } catch (const EngineError& e) {
        spdlog::error("update of '{}' failed ({}), restoring previous config", name.str(), e.what());
        start(sensor, std::move(previous));
        throw;
    }
}

void VirtualSensorManager::remove(const SensorName& name) {
    auto sensor = find(name);
    std::lock_guard lifecycle(sensor->lifecycle_mutex);
    {
        std::lock_guard lock(sensor->state_mutex);
        if (sensor->state.lifecycle == Lifecycle::Removed) {
            raise(ErrorKind::NotFound, "virtual sensor '" + name.str() + "' was already removed");
        }
    }
    stop(*sensor);
    std::lock_guard lock(sensor->state_mutex);
    sensor->state.lifecycle = Lifecycle::Removed;
}

VirtualSensorState VirtualSensorManager::state(const SensorName& name) const {
    auto sensor = find(name);
    std::lock_guard lock(sensor->state_mutex);
    return sensor->state;
}

std::vector<VirtualSensorState> VirtualSensorManager::list(bool include_removed) const {
    std::vector<std::shared_ptr<Sensor>> all;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, s] : sensors_) {
            all.push_back(s);
        }
    }
    std::vector<VirtualSensorState> out;
    for (const auto& s : all) {
        std::lock_guard lock(s->state_mutex);
        if (include_removed || s->state.lifecycle != Lifecycle::Removed) {
            out.push_back(s->state);
        }
    }
    return out;
}

bool VirtualSensorManager::is_active(const SensorName& name) const {
    std::shared_ptr<Sensor> s;
    {
        std::lock_guard lock(mutex_);
        auto it = sensors_.find(name);
        if (it == sensors_.end()) {
            return false;
        }
        s = it->second;
    }
    std::lock_guard lock(s->state_mutex);
    return s->state.lifecycle != Lifecycle::Removed;
}

void VirtualSensorManager::stop_all() {
    std::vector<std::shared_ptr<Sensor>> all;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, s] : sensors_) {
            all.push_back(s);
        }
    }
    for (const auto& s : all) {
        std::lock_guard lifecycle(s->lifecycle_mutex);
        stop(*s);
        std::lock_guard lock(s->state_mutex);
        s->state.lifecycle = Lifecycle::Removed;
    }
}

void VirtualSensorManager::run_loop(std::shared_ptr<Sensor> sensor, std::uint64_t generation) {
    using clock = std::chrono::steady_clock;
    VirtualSensorConfig config;
    Fields input;
    {
        std::lock_guard lock(sensor->state_mutex);
        config = sensor->state.config;
        input = sensor->plugin_output;
    }
    const auto interval = std::chrono::milliseconds(config.sampling_interval_ms);
    const std::size_t need = required_window(config.processors);
    const std::size_t max_w = max_window(config.processors);
    std::deque<StreamElement> window;

    const auto start = clock::now();
    std::int64_t tick = 0;
    for (;;) {
        {
            std::unique_lock lock(sensor->state_mutex);
            if (sensor->cv.wait_until(lock, start + tick * interval, [&] { return sensor->stop_requested; })) {
                return;
            }
        }

        std::optional<StreamElement> raw;
        try {
            raw = sensor->handle->sample(now_ms());
        } catch (const EngineError& e) {
            std::lock_guard lock(sensor->state_mutex);
            ++sensor->state.counters.plugin_failures;
            spdlog::debug("sensor {} sample failed: {}", config.name.str(), e.detail());
        }

        if (raw) {
            window.push_back(std::move(*raw));
            while (window.size() > need) {
                window.pop_front();
            }
            std::optional<StreamElement> out;
            bool counted_drop = false;
            if (window.size() >= max_w) {
                const std::vector<StreamElement> w(window.begin(), window.end());
                out = process(config.processors, input, w);
                counted_drop = !out && window.size() == need;
            }
            bool stored = false;
            if (out) {
                std::lock_guard lock(sensor->state_mutex);
                // A stale generation must never write after stop/update.
                if (sensor->state.generation != generation) {
                    return;
                }
                try {
                    store_.append(config.name, *out);
                    stored = true;
                } catch (const EngineError& e) {
                    spdlog::warn("sensor {} store failed: {}", config.name.str(), e.detail());
                }
            }
            {
                std::lock_guard lock(sensor->state_mutex);
                ++sensor->state.counters.samples;
                if (counted_drop) {
                    ++sensor->state.counters.processor_drops;
                }
                if (stored) {
                    ++sensor->state.counters.stored;
                    sensor->state.last_element = *out;
                }
            }
            if (stored && listener_) {
                listener_(config.name, *out);
            }
        }

        const auto elapsed = clock::now() - start;
        const auto due = elapsed / interval + 1;
        tick = std::max<std::int64_t>(tick + 1, due);
    }
}

}// namespace mosden::engine
