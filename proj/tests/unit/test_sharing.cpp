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
#include <mosden/sharing/service_manager.hpp>

#include <doctest.h>
#include <test_util.hpp>

#include <atomic>
#include <functional>
#include <limits>
#include <random>
#include <thread>

using namespace mosden;
using namespace mosden::sharing;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const EngineError& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::Shutdown;
}

// Records every push batch; `reachable` simulates the peer going away.
class FakeTransport final : public PushTransport {
  public:
    bool deliver(const Subscription&, std::span<const StreamElement> elements) override {
        std::lock_guard lock(mutex);
        ++calls;
        if (!reachable) {
            return false;
        }
        batches.emplace_back(elements.begin(), elements.end());
        return true;
    }

    std::vector<TimestampMs> delivered_stamps() {
        std::lock_guard lock(mutex);
        std::vector<TimestampMs> out;
        for (const auto& b : batches) {
            for (const auto& e : b) {
                out.push_back(e.timestamp);
            }
        }
        return out;
    }

    std::mutex mutex;
    std::atomic<bool> reachable{true};
    int calls = 0;
    std::vector<std::vector<StreamElement>> batches;
};

/// A node's data plane with sensors that sample once and then sit idle, so
/// tests append elements by hand.
struct Fixture {
    explicit Fixture(std::size_t sensors = 1, ServiceOptions options = manual()) {
        plugin::PluginDescriptor d;
        d.plugin_id = "c";
        d.display_name = "c";
        d.output = plugin::builtin_output("constant");
        d.source = plugin::BuiltinSource{"constant", wire::Json::object()};
        catalog.add(d);
        for (std::size_t i = 0; i < sensors; ++i) {
            engine::VirtualSensorConfig c;
            c.name = SensorName("s" + std::to_string(i));
            c.plugin_id = "c";
            c.sampling_interval_ms = 1'000'000'000;
            c.history_size = 100'000;
            manager.instantiate(c);
            REQUIRE(test::eventually([&] { return store.size(c.name) == 1; }));
        }
        next = store.latest(SensorName("s0"))->timestamp;
        services = std::make_unique<ServiceManager>(manager, store, transport, options);
    }

    static ServiceOptions manual() {
        ServiceOptions o;
        o.run_push_loops = false;
        o.backoff.jitter = 0.0;
        return o;
    }

    TimestampMs append(const SensorName& s = SensorName("s0")) {
        ++next;
        store.append(s, {next, {static_cast<double>(next % 1000)}});
        services->notify_append(s);
        return next;
    }

    plugin::PluginCatalog catalog;
    storage::HistoryStore store;
    engine::VirtualSensorManager manager{catalog, store};
    std::shared_ptr<FakeTransport> transport = std::make_shared<FakeTransport>();
    std::unique_ptr<ServiceManager> services;
    TimestampMs next = 0;
};

const SensorName kS0("s0");

}// namespace

TEST_CASE("queries resolve latest, range and the sensor list") {
    Fixture f(8);
    QueryManager q(f.manager, f.store);
    const auto t1 = f.append();
    const auto t2 = f.append();
    auto latest = q.resolve({RequestId("r1"), kS0, Latest{}, NodeId("peer")});
    REQUIRE(latest.elements.size() == 1);
    CHECK(latest.elements[0].timestamp == t2);

    auto range = q.resolve({RequestId("r2"), kS0, Range{t1, t2}, NodeId("peer")});
    CHECK(range.elements.size() == 2);
    CHECK(q.resolve({RequestId("r3"), {}, SensorList{}, NodeId("peer")}).sensors.size() == 8);
    CHECK(kind_of([&] { q.resolve({RequestId("r4"), kS0, Range{t2, t1}, NodeId("peer")}); }) ==
          ErrorKind::InvalidQuery);
    CHECK(kind_of([&] { q.resolve({RequestId("r5"), SensorName("nope"), Latest{}, NodeId("peer")}); }) ==
          ErrorKind::NotFound);

    // Late queries after removal still answer from retained history.
    f.manager.remove(kS0);
    CHECK(q.resolve({RequestId("r6"), kS0, Latest{}, NodeId("peer")}).elements.size() == 1);
    CHECK(q.sensor_list().size() == 7);
}

TEST_CASE("subscribe validates sensor, duplicates and callback") {
    Fixture f;
    auto a = f.services->subscribe("peer:1", kS0, Mode::Restful, 1000);
    CHECK(a.state == SubscriptionState::Active);
    CHECK(a.id.str().rfind("sub-", 0) == 0);
    CHECK(kind_of([&] { f.services->subscribe("peer:1", kS0, Mode::Restful, 1000); }) == ErrorKind::Conflict);
    CHECK_NOTHROW(f.services->subscribe("peer:1", kS0, Mode::Push, 1000));
    CHECK_NOTHROW(f.services->subscribe("peer:2", kS0, Mode::Restful, 1000));
    CHECK(kind_of([&] { f.services->subscribe("peer:1", SensorName("nope"), Mode::Push, 1000); }) ==
          ErrorKind::NotFound);
    CHECK(kind_of([&] { f.services->subscribe("", kS0, Mode::Push, 1000); }) == ErrorKind::InvalidQuery);
    CHECK(kind_of([&] { f.services->subscribe("peer:3", kS0, Mode::Push, 0); }) == ErrorKind::InvalidQuery);

    // Cancelling frees the peer+sensor+mode slot.
    f.services->cancel(a.id);
    CHECK_NOTHROW(f.services->subscribe("peer:1", kS0, Mode::Restful, 1000));
    CHECK(f.services->list().size() == 4);
}

TEST_CASE("a reachable peer gets each new element") {
    Fixture f;
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Push, 1000);
    CHECK(f.services->deliver_tick(sub.id, 0).status == DeliveryOutcome::Status::Idle);
    const auto t = f.append();
    const auto out = f.services->deliver_tick(sub.id, 1000);
    CHECK(out.status == DeliveryOutcome::Status::Delivered);
    CHECK(out.delivered == 1);
    CHECK(f.transport->delivered_stamps() == std::vector<TimestampMs>{t});
}

TEST_CASE("an unreachable peer buffers with oldest-drop, then receives in order") {
    ServiceOptions o = Fixture::manual();
    o.buffer_capacity = 5;
    Fixture f(1, o);
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Push, 1000);
    f.transport->reachable = false;
    std::vector<TimestampMs> appended;
    std::size_t dropped = 0;
    DeliveryOutcome out;
    for (int k = 0; k < 7; ++k) {
        appended.push_back(f.append());
        out = f.services->deliver_tick(sub.id, k * 1000);
        CHECK(out.status == DeliveryOutcome::Status::Buffered);
        dropped += out.dropped;
    }
    CHECK(out.buffered == 5);
    CHECK(dropped == 2);
    auto s = f.services->get(sub.id);
    CHECK(s.state == SubscriptionState::Disconnected);
    CHECK(s.counters.dropped == 2);
    CHECK(s.pending == 5);

    f.transport->reachable = true;
    out = f.services->deliver_tick(sub.id, 1'000'000);
    CHECK(out.status == DeliveryOutcome::Status::Delivered);
    CHECK(out.delivered == 5);
    // The two oldest are gone; the rest arrive oldest first.
    CHECK(f.transport->delivered_stamps() == std::vector<TimestampMs>(appended.begin() + 2, appended.end()));
    s = f.services->get(sub.id);
    CHECK(s.state == SubscriptionState::Active);
    CHECK(s.counters.reconnects == 1);
    CHECK(s.pending == 0);
}

TEST_CASE("retries follow exponential backoff") {
    BackoffPolicy p;
    CHECK(p.nominal(1) == 1000);
    CHECK(p.nominal(2) == 2000);
    CHECK(p.nominal(3) == 4000);
    CHECK(p.nominal(6) == 32'000);
    CHECK(p.nominal(20) == 32'000);

    Fixture f;
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Push, 100);
    f.transport->reachable = false;
    f.append();
    f.services->deliver_tick(sub.id, 0);// fails, next try at 1000
    CHECK(f.transport->calls == 1);
    f.services->deliver_tick(sub.id, 999);
    CHECK(f.transport->calls == 1);
    f.services->deliver_tick(sub.id, 1000);// fails, next try at 3000
    CHECK(f.transport->calls == 2);
    f.services->deliver_tick(sub.id, 2999);
    CHECK(f.transport->calls == 2);
    f.services->deliver_tick(sub.id, 3000);
    CHECK(f.transport->calls == 3);
}

TEST_CASE("jittered retry delays stay within the jitter band") {
    ServiceOptions o = Fixture::manual();
    o.backoff.jitter = 0.2;
    Fixture f(1, o);
    for (int i = 0; i < 20; ++i) {
        auto sub = f.services->subscribe("peer:" + std::to_string(i), kS0, Mode::Push, 100);
        f.transport->reachable = false;
        f.append();
        const int before = f.transport->calls;
        f.services->deliver_tick(sub.id, 0);
        f.services->deliver_tick(sub.id, 799);
        CHECK(f.transport->calls == before + 1);
        f.services->deliver_tick(sub.id, 1200);
        CHECK(f.transport->calls == before + 2);
        f.services->cancel(sub.id);
    }
}

TEST_CASE("cancel stops delivery and discards the buffer") {
    Fixture f;
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Push, 1000);
    f.transport->reachable = false;
    f.append();
    f.append();
    f.services->deliver_tick(sub.id, 0);
    CHECK(f.services->get(sub.id).pending == 2);
    f.services->cancel(sub.id);
    const auto s = f.services->get(sub.id);
    CHECK(s.state == SubscriptionState::Cancelled);
    CHECK(s.pending == 0);

    f.transport->reachable = true;
    const int calls = f.transport->calls;
    f.append();
    CHECK(f.services->deliver_tick(sub.id, 1'000'000).status == DeliveryOutcome::Status::Cancelled);
    CHECK(f.transport->calls == calls);
    CHECK(kind_of([&] { f.services->cancel(sub.id); }) == ErrorKind::NotFound);
    CHECK(kind_of([&] { f.services->cancel(SubscriptionId("sub-99")); }) == ErrorKind::NotFound);
}

TEST_CASE("restful pulls long-poll and heartbeat") {
    Fixture f;
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Restful, 1000);

    const auto t0 = std::chrono::steady_clock::now();
    auto r = f.services->pull(sub.id, std::nullopt, 100, "s1");
    CHECK(r.heartbeat);
    CHECK(r.elements.empty());
    CHECK(std::chrono::steady_clock::now() - t0 >= std::chrono::milliseconds(100));

    const auto a = f.append();
    const auto b = f.append();
    r = f.services->pull(sub.id, std::nullopt, 5000, "s1");
    CHECK_FALSE(r.heartbeat);
    REQUIRE(r.elements.size() == 2);
    CHECK(r.elements[0].timestamp == a);
    CHECK(r.elements[1].timestamp == b);

    // A waiting pull wakes as soon as data arrives.
    TimestampMs c = 0;
    std::thread writer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        c = f.append();
    });
    const auto t1 = std::chrono::steady_clock::now();
    r = f.services->pull(sub.id, std::nullopt, 10'000, "s1");
    writer.join();
    CHECK(std::chrono::steady_clock::now() - t1 < std::chrono::milliseconds(5000));
    REQUIRE(r.elements.size() == 1);
    CHECK(r.elements[0].timestamp == c);

    // The client-side cursor skips what it already has.
    f.append();
    const auto e = f.append();
    r = f.services->pull(sub.id, e - 1, 0, "s1");
    REQUIRE(r.elements.size() == 1);
    CHECK(r.elements[0].timestamp == e);

    CHECK(f.services->get(sub.id).connections == 1);
    f.services->pull(sub.id, std::nullopt, 0, "s2");
    CHECK(f.services->get(sub.id).connections == 2);

    auto push = f.services->subscribe("peer:1", kS0, Mode::Push, 1000);
    CHECK(kind_of([&] { f.services->pull(push.id, std::nullopt, 0, "s1"); }) == ErrorKind::InvalidQuery);
    f.services->cancel(sub.id);
    CHECK(kind_of([&] { f.services->pull(sub.id, std::nullopt, 0, "s1"); }) == ErrorKind::NotFound);
}

TEST_CASE("cancel wakes a waiting pull") {
    Fixture f;
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Restful, 1000);
    std::atomic<int> kind{-1};
    std::thread puller([&] {
        try {
            f.services->pull(sub.id, std::nullopt, 30'000, "s");
        } catch (const EngineError& e) {
            kind = static_cast<int>(e.kind());
        }
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    f.services->cancel(sub.id);
    puller.join();
    CHECK(kind == static_cast<int>(ErrorKind::NotFound));
}

TEST_CASE("conservation and ordering under random disconnections") {
    ServiceOptions o = Fixture::manual();
    o.buffer_capacity = 20;
    o.backoff.initial_ms = 10;
    o.backoff.cap_ms = 80;
    Fixture f(1, o);
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Push, 10);
    std::mt19937_64 rng(2024);
    std::uint64_t produced = 0;
    TimestampMs at = 0;
    for (int step = 0; step < 5000; ++step) {
        const auto roll = rng() % 10;
        if (roll < 5) {
            f.append();
            ++produced;
        } else if (roll < 9) {
            at += 10;
            f.services->deliver_tick(sub.id, at);
        } else {
            f.transport->reachable = !f.transport->reachable;
        }
        const auto s = f.services->get(sub.id);
        const auto not_yet_due = f.store.since(kS0, s.cursor).size();
        REQUIRE(produced == s.counters.delivered + s.pending + s.counters.dropped + not_yet_due);
    }
    const auto stamps = f.transport->delivered_stamps();
    for (std::size_t i = 1; i < stamps.size(); ++i) {
        REQUIRE(stamps[i - 1] < stamps[i]);
    }
    CHECK(f.services->get(sub.id).counters.dropped > 0);
}

TEST_CASE("no drops when delivery keeps pace and the peer stays up") {
    Fixture f;
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Push, 1000);
    for (int k = 0; k < 2000; ++k) {
        f.append();
        f.services->deliver_tick(sub.id, k * 1000);
    }
    const auto s = f.services->get(sub.id);
    CHECK(s.counters.dropped == 0);
    CHECK(s.counters.delivered == 2000);
    CHECK(static_cast<int>(s.counters.attempts) == f.transport->calls);
}

TEST_CASE("background push loops deliver in order without duplicates") {
    ServiceOptions o;
    o.backoff.initial_ms = 50;
    o.backoff.cap_ms = 100;
    Fixture f(1, o);
    auto sub = f.services->subscribe("peer:1", kS0, Mode::Push, 20);
    std::thread writer([&] {
        for (int i = 0; i < 100; ++i) {
            f.append();
            if (i == 30) {
                f.transport->reachable = false;
            }
            if (i == 60) {
                f.transport->reachable = true;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
    });
    writer.join();
    REQUIRE(test::eventually([&] { return f.transport->delivered_stamps().size() == 100; }));
    const auto stamps = f.transport->delivered_stamps();
    for (std::size_t i = 1; i < stamps.size(); ++i) {
        CHECK(stamps[i - 1] < stamps[i]);
    }
    f.services->shutdown();
}
