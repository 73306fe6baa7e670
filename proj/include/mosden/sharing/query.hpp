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

#include <mosden/engine/manager.hpp>
#include <mosden/storage/history_store.hpp>

#include <optional>
#include <variant>
#include <vector>

namespace mosden::sharing {

struct Latest {};
struct Range {
    TimestampMs from = 0;
    TimestampMs to = 0;
};
struct SensorList {};

struct QueryRequest {
    RequestId id;
    SensorName sensor;// ignored for SensorList
    std::variant<Latest, Range, SensorList> kind;
    NodeId origin;
};

struct SensorInfo {
    SensorName name;
    Fields output;
    std::string plugin_id;
    std::int64_t sampling_interval_ms = 0;

    friend bool operator==(const SensorInfo&, const SensorInfo&) = default;
};

struct QueryResult {
    std::vector<StreamElement> elements;// Latest: zero or one element
    std::vector<SensorInfo> sensors;
};

/// Answers data requests from other nodes, users or applications.
/// Read-only against storage; safe to call concurrently.
class QueryManager {
  public:
    QueryManager(const engine::VirtualSensorManager& sensors, const storage::HistoryStore& store);

    /// Throws NotFound (no such sensor or table), InvalidQuery (from > to).
    QueryResult resolve(const QueryRequest& q) const;

    std::vector<SensorInfo> sensor_list() const;

  private:
    const engine::VirtualSensorManager& sensors_;
    const storage::HistoryStore& store_;
};

}// namespace mosden::sharing
