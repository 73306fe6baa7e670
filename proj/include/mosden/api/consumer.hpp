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

#include <mosden/api/http.hpp>
#include <mosden/api/registry.hpp>
#include <mosden/sharing/service_manager.hpp>

#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace mosden::api {

/// A server's standing interest in remote sensors: `requests` subscriptions
/// spread round-robin over the registered nodes (sorted by node id).
struct WorkloadSpec {
    std::size_t requests = 1;
    sharing::Mode mode = sharing::Mode::Restful;
    std::int64_t interval_ms = 1000;
    std::optional<std::string> tag;
    std::int64_t pull_wait_ms = 1000;
};

wire::Json to_json(const WorkloadSpec& w);
WorkloadSpec workload_from_json(const wire::Json& j);

/// One request = one subscription to one remote virtual sensor.
struct RemoteRequest {
    std::size_t index = 0;
    RequestId id;
    NodeId node;
    std::string address;
    SensorName sensor;
    SubscriptionId subscription;
    sharing::Mode mode = sharing::Mode::Restful;
    std::uint64_t round_trips = 0;
    std::uint64_t elements = 0;
    std::uint64_t failures = 0;
    std::uint64_t reconnects = 0;
    std::uint64_t connections = 0;// opened by us (restful) or seen inbound (push)
    TimestampMs last_ts = 0;
};

/// A completed data round trip, stamped with host-monotonic microseconds.
struct RoundTripEvent {
    std::uint64_t seq = 0;
    std::size_t request = 0;
    std::int64_t issue_us = 0;
    std::int64_t response_us = 0;
    std::size_t elements = 0;
    TimestampMs newest_ts = 0;
};

wire::Json to_json(const RemoteRequest& r);
RemoteRequest remote_request_from_json(const wire::Json& j);
wire::Json to_json(const RoundTripEvent& e);
RoundTripEvent round_trip_from_json(const wire::Json& j);

struct ConsumerOptions {
    NodeId node_id;
    std::string self_address;
    std::string registry;
    std::size_t puller_workers = 4;
};

/// Server-side role: discovers client sensors through the registry,
/// subscribes to them, and records every round trip. Restful requests are
/// pulled by a bounded worker pool, each request over its own held session;
/// push requests arrive at POST /v1/push/{subscription}.
class Consumer {
  public:
    explicit Consumer(ConsumerOptions options);
    ~Consumer();

    Consumer(const Consumer&) = delete;
    Consumer& operator=(const Consumer&) = delete;

    /// Throws InvalidQuery when fewer sensors are registered than requested,
    /// Conflict if a workload is already running, PeerUnreachable.
    std::vector<RemoteRequest> start(const WorkloadSpec& spec);

    /// Stops pulling and cancels the remote subscriptions.
    void stop();

    /// Records an inbound push delivery. `session` identifies the connection.
    /// Throws NotFound for an unknown subscription, InvalidQuery.
    void on_push(const std::string& subscription, const wire::Json& body, const std::string& session);

    std::vector<RoundTripEvent> events(std::uint64_t since = 0) const;
    std::vector<RemoteRequest> requests() const;

  private:
    struct Slot;

    void puller();

    ConsumerOptions options_;
    WorkloadSpec spec_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    bool running_ = false;
    std::vector<std::unique_ptr<Slot>> slots_;
    std::vector<std::pair<TimestampMs, std::size_t>> due_;// min-heap on time
    std::vector<RoundTripEvent> events_;
    std::vector<std::thread> workers_;
};

}// namespace mosden::api
