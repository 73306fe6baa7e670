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

#include <mosden/sharing/query.hpp>

#include <algorithm>

namespace mosden::sharing {

QueryManager::QueryManager(const engine::VirtualSensorManager& sensors, const storage::HistoryStore& store)
    : sensors_(sensors), store_(store) {}

std::vector<SensorInfo> QueryManager::sensor_list() const {
    std::vector<SensorInfo> out;
    for (const auto& s : sensors_.list()) {
        out.push_back({s.config.name, s.config.output, s.config.plugin_id, s.config.sampling_interval_ms});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

QueryResult QueryManager::resolve(const QueryRequest& q) const {
    QueryResult result;
    if (std::holds_alternative<SensorList>(q.kind)) {
        result.sensors = sensor_list();
        return result;
    }
    // Removed sensors keep their table, so late queries still resolve.
    if (!store_.has_table(q.sensor)) {
        raise(ErrorKind::NotFound, "no sensor named '" + q.sensor.str() + "'");
    }
    if (std::holds_alternative<Latest>(q.kind)) {
        if (auto e = store_.latest(q.sensor)) {
            result.elements.push_back(std::move(*e));
        }
        return result;
    }
    const auto& r = std::get<Range>(q.kind);
    result.elements = store_.range(q.sensor, r.from, r.to);
    return result;
}

}// namespace mosden::sharing
