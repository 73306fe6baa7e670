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

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <vector>

namespace mosden::storage {

inline constexpr std::size_t kDefaultHistorySize = 100;

class Journal;

/// Bounded per-sensor history. Each table is a ring of at most
/// `history_size` elements in timestamp order; appending at capacity evicts
/// the oldest. With a data directory, every append is also written to an
/// on-disk journal and tables are recovered on construction.
///
/// One writer per table, any number of concurrent readers.
class HistoryStore {
  public:
    /// Empty `data_dir` keeps everything in memory.
    explicit HistoryStore(std::filesystem::path data_dir = {});
    ~HistoryStore();

    HistoryStore(const HistoryStore&) = delete;
    HistoryStore& operator=(const HistoryStore&) = delete;

    /// Creates the table, or keeps an existing (possibly recovered) one when
    /// its structure matches; a different structure clears it. A smaller
    /// history size trims the oldest elements.
    void ensure_table(const SensorName& sensor, const Fields& output, std::size_t history_size);
    void clear_table(const SensorName& sensor);
    void drop_table(const SensorName& sensor);
    bool has_table(const SensorName& sensor) const;
    std::vector<SensorName> tables() const;

    Fields output(const SensorName& sensor) const;
    std::size_t history_size(const SensorName& sensor) const;
    std::size_t size(const SensorName& sensor) const;

    /// Throws NotFound for an unknown table, InvalidQuery when the element
    /// does not conform to the table structure or goes back in time.
    void append(const SensorName& sensor, const StreamElement& element);

    std::optional<StreamElement> latest(const SensorName& sensor) const;

    /// Retained elements with from_ts <= t <= to_ts, oldest first.
    std::vector<StreamElement> range(const SensorName& sensor, TimestampMs from_ts, TimestampMs to_ts) const;

    /// Retained elements with t > after_ts, oldest first.
    std::vector<StreamElement> since(const SensorName& sensor, TimestampMs after_ts) const;

    /// Total appends since the table was created or last cleared.
    std::uint64_t appended(const SensorName& sensor) const;

    /// Bytes attributable to retained records: a fixed per-table overhead
    /// plus the journal size of every retained record.
    std::uint64_t footprint(const SensorName& sensor) const;
    std::uint64_t footprint() const;

    /// Bytes actually on disk for the table's journal (0 in memory mode).
    std::uint64_t disk_bytes(const SensorName& sensor) const;

  private:
    struct Table;

    std::shared_ptr<Table> table(const SensorName& sensor) const;
    void recover();

    std::filesystem::path data_dir_;
    mutable std::shared_mutex mutex_;
    std::map<SensorName, std::shared_ptr<Table>> tables_;
};

}// namespace mosden::storage
