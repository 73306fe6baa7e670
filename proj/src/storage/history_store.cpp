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
#include <mosden/core/wire.hpp>
#include <mosden/storage/history_store.hpp>
#include <mosden/storage/journal.hpp>

#include <spdlog/spdlog.h>

#include <fstream>
#include <mutex>
#include <sstream>

namespace mosden::storage {

namespace fs = std::filesystem;

namespace {

void check_table_name(const SensorName& sensor) {
    const auto& s = sensor.str();
    bool ok = !s.empty() && s != "." && s != "..";
    for (char c : s) {
        ok = ok && ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.');
    }
    if (!ok) {
        raise(ErrorKind::InvalidQuery, "invalid sensor name '" + s + "'");
    }
}

}// namespace

struct HistoryStore::Table {
    struct Entry {
        StreamElement element;
        std::size_t bytes;
    };

    mutable std::shared_mutex mutex;
    Fields output;
    std::size_t history_size = kDefaultHistorySize;
    std::deque<Entry> ring;
    std::uint64_t live_bytes = 0;
    std::uint64_t appended = 0;
    std::unique_ptr<Journal> journal;

    void trim() {
        while (ring.size() > history_size) {
            live_bytes -= ring.front().bytes;
            ring.pop_front();
        }
        if (journal) {
            journal->release_before(appended - ring.size());
        }
    }

    void clear() {
        ring.clear();
        live_bytes = 0;
        appended = 0;
        if (journal) {
            journal->reset(history_size);
            journal->write_meta(output, history_size);
        }
    }
};

HistoryStore::HistoryStore(fs::path data_dir) : data_dir_(std::move(data_dir)) {
    if (!data_dir_.empty()) {
        fs::create_directories(data_dir_);
        recover();
    }
}

HistoryStore::~HistoryStore() = default;

void HistoryStore::recover() {
    for (const auto& entry : fs::directory_iterator(data_dir_)) {
        if (!entry.is_directory() || !fs::exists(entry.path() / "meta.json")) {
            continue;
        }
        try {
            std::ifstream in(entry.path() / "meta.json");
            std::stringstream buf;
            buf << in.rdbuf();
            const auto meta = wire::parse(buf.str(), ErrorKind::InvalidDescriptor);
            auto t = std::make_shared<Table>();
            t->output = wire::fields_from_json(meta.at("output"));
            t->history_size = meta.at("history_size").get<std::size_t>();
            t->journal = std::make_unique<Journal>(entry.path(), t->history_size);
            for (auto& e : t->journal->recover()) {
                if (!conforms(e, t->output) || (!t->ring.empty() && e.timestamp < t->ring.back().element.timestamp)) {
                    continue;
                }
                const auto bytes = record_bytes(e);
                t->ring.push_back({std::move(e), bytes});
                t->live_bytes += bytes;
                ++t->appended;
                if (t->ring.size() > t->history_size) {
                    t->live_bytes -= t->ring.front().bytes;
                    t->ring.pop_front();
                }
            }
            t->trim();
            const SensorName name(entry.path().filename().string());
            spdlog::debug("recovered table {} with {} elements", name.str(), t->ring.size());
            tables_.emplace(name, std::move(t));
        } catch (const std::exception& e) {
            spdlog::warn("skipping unreadable table at {}: {}", entry.path().string(), e.what());
        }
    }
}

std::shared_ptr<HistoryStore::Table> HistoryStore::table(const SensorName& sensor) const {
    std::shared_lock lock(mutex_);
    auto it = tables_.find(sensor);
    if (it == tables_.end()) {
        raise(ErrorKind::NotFound, "no storage table for sensor '" + sensor.str() + "'");
    }
    return it->second;
}

void HistoryStore::ensure_table(const SensorName& sensor, const Fields& output, std::size_t history_size) {
    check_table_name(sensor);
    validate_fields(output);
    if (history_size < 1) {
        raise(ErrorKind::InvalidDescriptor, "history_size must be >= 1");
    }
    std::unique_lock lock(mutex_);
    auto& slot = tables_[sensor];
    if (!slot) {
        slot = std::make_shared<Table>();
        slot->output = output;
        slot->history_size = history_size;
        if (!data_dir_.empty()) {
            slot->journal = std::make_unique<Journal>(data_dir_ / sensor.str(), history_size);
            slot->journal->recover();
            slot->journal->reset(history_size);
            slot->journal->write_meta(output, history_size);
        }
        return;
    }
    std::unique_lock table_lock(slot->mutex);
    if (slot->output != output) {
        slot->output = output;
        slot->history_size = history_size;
        slot->clear();
        return;
    }
    if (slot->history_size != history_size) {
        slot->history_size = history_size;
        slot->trim();
        if (slot->journal) {
            slot->journal->write_meta(output, history_size);
        }
    }
}

void HistoryStore::clear_table(const SensorName& sensor) {
    auto t = table(sensor);
    std::unique_lock lock(t->mutex);
    t->clear();
}

void HistoryStore::drop_table(const SensorName& sensor) {
    std::shared_ptr<Table> t;
    {
        std::unique_lock lock(mutex_);
        auto it = tables_.find(sensor);
        if (it == tables_.end()) {
            raise(ErrorKind::NotFound, "no storage table for sensor '" + sensor.str() + "'");
        }
        t = std::move(it->second);
        tables_.erase(it);
    }
    std::unique_lock lock(t->mutex);
    if (t->journal) {
        t->journal->remove_all();
        std::error_code ec;
        fs::remove_all(data_dir_ / sensor.str(), ec);
    }
}

bool HistoryStore::has_table(const SensorName& sensor) const {
    std::shared_lock lock(mutex_);
    return tables_.contains(sensor);
}

std::vector<SensorName> HistoryStore::tables() const {
    std::shared_lock lock(mutex_);
    std::vector<SensorName> out;
    for (const auto& [name, _] : tables_) {
        out.push_back(name);
    }
    return out;
}

Fields HistoryStore::output(const SensorName& sensor) const {
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    return t->output;
}

std::size_t HistoryStore::history_size(const SensorName& sensor) const {
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    return t->history_size;
}

std::size_t HistoryStore::size(const SensorName& sensor) const {
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    return t->ring.size();
}

void HistoryStore::append(const SensorName& sensor, const StreamElement& element) {
    auto t = table(sensor);
    std::unique_lock lock(t->mutex);
    if (!conforms(element, t->output)) {
        raise(ErrorKind::InvalidQuery, "element does not match the structure of sensor '" + sensor.str() + "'");
    }
    if (!t->ring.empty() && element.timestamp < t->ring.back().element.timestamp) {
        raise(ErrorKind::InvalidQuery, "element timestamp goes back in time for sensor '" + sensor.str() + "'");
    }
    if (t->journal) {
        t->journal->append(element);
    }
    const auto bytes = record_bytes(element);
    t->ring.push_back({element, bytes});
    t->live_bytes += bytes;
    ++t->appended;
    t->trim();
}

std::optional<StreamElement> HistoryStore::latest(const SensorName& sensor) const {
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    if (t->ring.empty()) {
        return std::nullopt;
    }
    return t->ring.back().element;
}

std::vector<StreamElement> HistoryStore::range(const SensorName& sensor, TimestampMs from_ts,
                                               TimestampMs to_ts) const {
    if (from_ts > to_ts) {
        raise(ErrorKind::InvalidQuery, "range: from > to");
    }
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    std::vector<StreamElement> out;
    for (const auto& e : t->ring) {
        if (e.element.timestamp >= from_ts && e.element.timestamp <= to_ts) {
            out.push_back(e.element);
        }
    }
    return out;
}

std::vector<StreamElement> HistoryStore::since(const SensorName& sensor, TimestampMs after_ts) const {
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    std::vector<StreamElement> out;
    // Newest elements sit at the back; walk back to the first one after the cursor.
    auto it = t->ring.end();
    while (it != t->ring.begin() && std::prev(it)->element.timestamp > after_ts) {
        --it;
    }
    for (; it != t->ring.end(); ++it) {
        out.push_back(it->element);
    }
    return out;
}

std::uint64_t HistoryStore::appended(const SensorName& sensor) const {
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    return t->appended;
}

std::uint64_t HistoryStore::footprint(const SensorName& sensor) const {
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    return kSegmentHeaderBytes + t->live_bytes;
}

std::uint64_t HistoryStore::footprint() const {
    std::uint64_t total = 0;
    for (const auto& name : tables()) {
        try {
            total += footprint(name);
        } catch (const EngineError&) {
            // dropped concurrently
        }
    }
    return total;
}

std::uint64_t HistoryStore::disk_bytes(const SensorName& sensor) const {
    auto t = table(sensor);
    std::shared_lock lock(t->mutex);
    return t->journal ? t->journal->disk_bytes() : 0;
}

}// namespace mosden::storage
