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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace mosden::sharing {

enum class Mode { Restful, Push };
enum class SubscriptionState { Active, Disconnected, Cancelled };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view text);
std::string_view to_string(SubscriptionState s);

inline constexpr std::size_t kDefaultBufferCapacity = 1000;
inline constexpr std::int64_t kDefaultHeartbeatMs = 30'000;

struct BackoffPolicy {
    std::int64_t initial_ms = 1000;
    std::int64_t cap_ms = 32'000;
    double jitter = 0.2;// +/- fraction of the nominal delay

    /// Nominal delay before reconnection attempt `attempt` (1-based).
    std::int64_t nominal(int attempt) const;
};

struct SubscriptionCounters {
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t reconnects = 0;
    std::uint64_t attempts = 0;
    std::uint64_t failed_attempts = 0;
};

struct Subscription {
    SubscriptionId id;
    std::string peer;// push callback host:port, or the pulling peer's address
    SensorName sensor;
    Mode mode = Mode::Restful;
    std::int64_t delivery_interval_ms = 1000;
    SubscriptionState state = SubscriptionState::Active;
    std::size_t pending = 0;
    std::size_t buffer_capacity = kDefaultBufferCapacity;
    TimestampMs cursor = 0;// newest timestamp taken from storage
    SubscriptionCounters counters;
    std::size_t connections = 0;// distinct inbound sessions (restful)
};

struct DeliveryOutcome {
    enum class Status { Delivered, Buffered, Idle, Cancelled };
    Status status = Status::Idle;
    std::size_t delivered = 0;
    std::size_t buffered = 0;
    std::size_t dropped = 0;// during this tick
};

/// One push delivery: the subscription and the elements, oldest first.
/// Implementations open a fresh connection per call.
class PushTransport {
  public:
    virtual ~PushTransport() = default;
    virtual bool deliver(const Subscription& sub, std::span<const StreamElement> elements) = 0;
};

struct PullResult {
    std::vector<StreamElement> elements;
    bool heartbeat = false;
};

struct ServiceOptions {
    std::size_t buffer_capacity = kDefaultBufferCapacity;
    BackoffPolicy backoff;
    /// Run a delivery thread per push subscription. Tests drive
    /// deliver_tick() by hand instead.
    bool run_push_loops = true;
    /// Prefix of issued subscription ids, e.g. the node id, so ids stay
    /// unique across nodes.
    std::string id_prefix = "sub";
};

/// Registers subscriptions from peers and delivers data to them: restful
/// subscribers pull over a held session, push subscribers receive each
/// delivery on a new connection. Push deliveries that fail are buffered
/// (oldest dropped on overflow) and retried with exponential backoff.
class ServiceManager {
  public:
    ServiceManager(const engine::VirtualSensorManager& sensors, const storage::HistoryStore& store,
                   std::shared_ptr<PushTransport> transport, ServiceOptions options = {});
    ~ServiceManager();

    ServiceManager(const ServiceManager&) = delete;
    ServiceManager& operator=(const ServiceManager&) = delete;

    /// Throws NotFound (unknown sensor), Conflict (same peer+sensor+mode live).
    Subscription subscribe(const std::string& peer, const SensorName& sensor, Mode mode,
                           std::int64_t delivery_interval_ms);

    /// Throws NotFound for unknown or already-cancelled subscriptions.
    void cancel(const SubscriptionId& id);

    Subscription get(const SubscriptionId& id) const;
    std::vector<Subscription> list() const;

    /// One push delivery cycle at time `at` (ms): take new elements from
    /// storage into the pending buffer, then send the whole buffer if the
    /// peer may be tried. Never throws for delivery failures.
    DeliveryOutcome deliver_tick(const SubscriptionId& id, TimestampMs at);

    /// Restful long-poll: returns elements newer than max(cursor, after) as
    /// soon as any exist, or an empty heartbeat after `wait_ms`.
    /// `session` identifies the inbound connection for connection counting.
    PullResult pull(const SubscriptionId& id, std::optional<TimestampMs> after, std::int64_t wait_ms,
                    const std::string& session);

    /// Wakes pending long-polls; wired to the engine's append listener.
    void notify_append(const SensorName& sensor);

    void shutdown();

  private:
    struct Entry;

    std::shared_ptr<Entry> find(const SubscriptionId& id) const;
    DeliveryOutcome tick_locked(Entry& e, TimestampMs at, std::unique_lock<std::mutex>& lock);
    void push_loop(std::shared_ptr<Entry> e);

    const engine::VirtualSensorManager& sensors_;
    const storage::HistoryStore& store_;
    std::shared_ptr<PushTransport> transport_;
    ServiceOptions options_;

    mutable std::mutex mutex_;
    std::map<SubscriptionId, std::shared_ptr<Entry>> subs_;
    std::uint64_t next_id_ = 1;

    std::mutex data_mutex_;
    std::condition_variable data_cv_;
    std::uint64_t data_version_ = 0;
    bool shutting_down_ = false;
};

}// namespace mosden::sharing
