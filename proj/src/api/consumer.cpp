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

#include <mosden/api/consumer.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <deque>
#include <functional>
#include <map>

namespace mosden::api {

struct Consumer::Slot {
    RemoteRequest request;
    std::unique_ptr<PeerClient> session;
    std::set<std::string> push_sessions;
};

wire::Json to_json(const WorkloadSpec& w) {
    wire::Json j{{"requests", w.requests},
                 {"mode", std::string(sharing::to_string(w.mode))},
                 {"interval_ms", w.interval_ms},
                 {"pull_wait_ms", w.pull_wait_ms}};
    if (w.tag) {
        j["tag"] = *w.tag;
    }
    return j;
}

WorkloadSpec workload_from_json(const wire::Json& j) {
    if (!j.is_object()) {
        raise(ErrorKind::InvalidQuery, "workload must be an object");
    }
    WorkloadSpec w;
    try {
        w.requests = j.value("requests", std::size_t{1});
        w.mode = sharing::parse_mode(j.value("mode", std::string("restful")));
        w.interval_ms = j.value("interval_ms", std::int64_t{1000});
        w.pull_wait_ms = j.value("pull_wait_ms", w.pull_wait_ms);
        if (j.contains("tag") && j.at("tag").is_string()) {
            w.tag = j.at("tag").get<std::string>();
        }
    } catch (const wire::Json::exception& e) {
        raise(ErrorKind::InvalidQuery, std::string("workload: ") + e.what());
    }
    if (w.requests == 0 || w.interval_ms < 1 || w.pull_wait_ms < 0) {
        raise(ErrorKind::InvalidQuery, "workload needs requests >= 1, interval_ms >= 1, pull_wait_ms >= 0");
    }
    return w;
}

wire::Json to_json(const RemoteRequest& r) {
    return {{"index", r.index},
            {"id", r.id.str()},
            {"node", r.node.str()},
            {"address", r.address},
            {"sensor", r.sensor.str()},
            {"subscription", r.subscription.str()},
            {"mode", std::string(sharing::to_string(r.mode))},
            {"round_trips", r.round_trips},
            {"elements", r.elements},
            {"failures", r.failures},
            {"reconnects", r.reconnects},
            {"connections", r.connections},
            {"last_ts", r.last_ts}};
}

RemoteRequest remote_request_from_json(const wire::Json& j) {
    RemoteRequest r;
    r.index = j.at("index").get<std::size_t>();
    r.id = RequestId(j.at("id").get<std::string>());
    r.node = NodeId(j.at("node").get<std::string>());
    r.address = j.at("address").get<std::string>();
    r.sensor = SensorName(j.at("sensor").get<std::string>());
    r.subscription = SubscriptionId(j.at("subscription").get<std::string>());
    r.mode = sharing::parse_mode(j.at("mode").get<std::string>());
    r.round_trips = j.at("round_trips").get<std::uint64_t>();
    r.elements = j.at("elements").get<std::uint64_t>();
    r.failures = j.at("failures").get<std::uint64_t>();
    r.reconnects = j.at("reconnects").get<std::uint64_t>();
    r.connections = j.at("connections").get<std::uint64_t>();
    r.last_ts = j.at("last_ts").get<TimestampMs>();
    return r;
}

wire::Json to_json(const RoundTripEvent& e) {
    return {{"seq", e.seq},           {"request", e.request},   {"issue_us", e.issue_us},
            {"response_us", e.response_us}, {"elements", e.elements}, {"newest_ts", e.newest_ts}};
}

RoundTripEvent round_trip_from_json(const wire::Json& j) {
    RoundTripEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.request = j.at("request").get<std::size_t>();
    e.issue_us = j.at("issue_us").get<std::int64_t>();
    e.response_us = j.at("response_us").get<std::int64_t>();
    e.elements = j.at("elements").get<std::size_t>();
    e.newest_ts = j.at("newest_ts").get<TimestampMs>();
    return e;
}

Consumer::Consumer(ConsumerOptions options) : options_(std::move(options)) {
    options_.puller_workers = std::max<std::size_t>(1, options_.puller_workers);
}

Consumer::~Consumer() { stop(); }

namespace {
constexpr auto kDueOrder = std::greater<std::pair<TimestampMs, std::size_t>>{};

TimestampMs next_tick(TimestampMs now, std::int64_t interval) { return (now / interval + 1) * interval; }
}// namespace

std::vector<RemoteRequest> Consumer::start(const WorkloadSpec& spec) {
    {
        std::lock_guard lock(mutex_);
        if (running_) {
            raise(ErrorKind::Conflict, "a workload is already running");
        }
    }
    if (options_.registry.empty()) {
        raise(ErrorKind::InvalidQuery, "no registry configured");
    }

    // Round-robin over nodes (by id), each node's sensors taken in name order.
    auto nodes = lookup(options_.registry, spec.tag);
    std::erase_if(nodes, [&](const NodeRegistration& n) { return n.node_id == options_.node_id; });
    std::vector<std::deque<sharing::SensorInfo>> queues;
    std::size_t available = 0;
    for (auto& n : nodes) {
        std::sort(n.sensors.begin(), n.sensors.end(),
                  [](const auto& a, const auto& b) { return a.name < b.name; });
        queues.emplace_back(n.sensors.begin(), n.sensors.end());
        available += n.sensors.size();
    }
    if (available < spec.requests) {
        raise(ErrorKind::InvalidQuery, "workload wants " + std::to_string(spec.requests) + " sensors but only " +
                                           std::to_string(available) + " are registered");
    }

    std::vector<std::unique_ptr<Slot>> slots;
    std::size_t node = 0;
    while (slots.size() < spec.requests) {
        if (!queues[node].empty()) {
            auto slot = std::make_unique<Slot>();
            auto& r = slot->request;
            r.index = slots.size();
            r.id = RequestId(options_.node_id.str() + "-req-" + std::to_string(r.index));
            r.node = nodes[node].node_id;
            r.address = nodes[node].address;
            r.sensor = queues[node].front().name;
            r.mode = spec.mode;
            queues[node].pop_front();
            slots.push_back(std::move(slot));
        }
        node = (node + 1) % nodes.size();
    }

    std::vector<std::unique_ptr<Slot>> subscribed;
    auto unwind = [&] {
        for (auto& s : subscribed) {
            try {
                PeerClient(s->request.address, false).del("/v1/subscriptions/" + s->request.subscription.str());
            } catch (const std::exception&) {
            }
        }
    };
    try {
        for (auto& slot : slots) {
            auto& r = slot->request;
            PeerClient client(r.address, false);
            const auto body = client.post_json("/v1/subscriptions",
                                               {{"sensor", r.sensor.str()},
                                                {"mode", std::string(sharing::to_string(spec.mode))},
                                                {"interval_ms", spec.interval_ms},
                                                {"callback", options_.self_address}});
            r.subscription = SubscriptionId(body.at("id").get<std::string>());
            if (spec.mode == sharing::Mode::Restful) {
                slot->session = std::make_unique<PeerClient>(r.address, true,
                                                             static_cast<int>(spec.pull_wait_ms) + 5000);
            }
            subscribed.push_back(std::move(slot));
        }
    } catch (...) {
        unwind();
        throw;
    }

    std::lock_guard lock(mutex_);
    spec_ = spec;
    slots_ = std::move(subscribed);
    events_.clear();
    due_.clear();
    running_ = true;
    std::vector<RemoteRequest> out;
    for (const auto& s : slots_) {
        out.push_back(s->request);
    }
    if (spec.mode == sharing::Mode::Restful) {
        const auto first = next_tick(now_ms(), spec.interval_ms);
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            due_.emplace_back(first, i);
        }
        std::make_heap(due_.begin(), due_.end(), kDueOrder);
        for (std::size_t w = 0; w < options_.puller_workers; ++w) {
            workers_.emplace_back([this] { puller(); });
        }
    }
    spdlog::info("consumer: {} {} requests over {} nodes", out.size(), sharing::to_string(spec.mode), nodes.size());
    return out;
}

void Consumer::puller() {
    for (;;) {
        std::size_t index = 0;
        {
            std::unique_lock lock(mutex_);
            for (;;) {
                if (!running_) {
                    return;
                }
                if (!due_.empty()) {
                    const auto wait = due_.front().first - now_ms();
                    if (wait <= 0) {
                        break;
                    }
                    cv_.wait_for(lock, std::chrono::milliseconds(wait));
                } else {
                    cv_.wait(lock);
                }
            }
            std::pop_heap(due_.begin(), due_.end(), kDueOrder);
            index = due_.back().second;
            due_.pop_back();
        }

        Slot& slot = *slots_[index];
        const auto& r = slot.request;
        std::string path = "/v1/subscriptions/" + r.subscription.str() +
                           "/stream?wait_ms=" + std::to_string(spec_.pull_wait_ms);
        TimestampMs after = 0;
        {
            std::lock_guard lock(mutex_);
            after = r.last_ts;
        }
        if (after > 0) {
            path += "&after=" + std::to_string(after);
        }
        const auto before = slot.session->connections_opened();
        const auto issue_us = monotonic_us();
        auto result = slot.session->get(path);
        const auto response_us = monotonic_us();

        std::vector<StreamElement> elements;
        bool failed = !result || result->status != 200;
        if (!failed) {
            try {
                elements = wire::elements_from_json(wire::Json::parse(result->body).at("elements"));
            } catch (const std::exception& e) {
                spdlog::warn("consumer: bad stream body from {}: {}", r.address, e.what());
                failed = true;
            }
        }

        std::lock_guard lock(mutex_);
        auto& req = slot.request;
        const auto opened = slot.session->connections_opened();
        req.connections = opened;
        if (opened > before && before > 0) {
            ++req.reconnects;
        }
        if (failed) {
            ++req.failures;
        } else if (!elements.empty()) {
            ++req.round_trips;
            req.elements += elements.size();
            req.last_ts = elements.back().timestamp;
            events_.push_back({events_.size() + 1, index, issue_us, response_us, elements.size(), req.last_ts});
        }
        if (running_) {
            due_.emplace_back(next_tick(now_ms(), spec_.interval_ms), index);
            std::push_heap(due_.begin(), due_.end(), kDueOrder);
            cv_.notify_one();
        }
    }
}

void Consumer::on_push(const std::string& subscription, const wire::Json& body, const std::string& session) {
    const auto response_us = monotonic_us();
    std::vector<StreamElement> elements;
    std::int64_t issue_us = 0;
    try {
        elements = wire::elements_from_json(body.at("elements"));
        issue_us = body.at("issued_us").get<std::int64_t>();
    } catch (const std::exception& e) {
        raise(ErrorKind::InvalidQuery, std::string("push body: ") + e.what());
    }
    std::lock_guard lock(mutex_);
    for (auto& slot : slots_) {
        auto& r = slot->request;
        if (r.subscription.str() != subscription) {
            continue;
        }
        slot->push_sessions.insert(session);
        r.connections = slot->push_sessions.size();
        if (!elements.empty()) {
            ++r.round_trips;
            r.elements += elements.size();
            r.last_ts = std::max(r.last_ts, elements.back().timestamp);
            events_.push_back({events_.size() + 1, r.index, issue_us, response_us, elements.size(), r.last_ts});
        }
        return;
    }
    raise(ErrorKind::NotFound, "no request holds subscription '" + subscription + "'");
}

void Consumer::stop() {
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mutex_);
        if (!running_) {
            return;
        }
        running_ = false;
        workers.swap(workers_);
    }
    cv_.notify_all();
    for (auto& w : workers) {
        w.join();
    }
    std::vector<std::pair<std::string, std::string>> subs;
    {
        std::lock_guard lock(mutex_);
        for (const auto& s : slots_) {
            subs.emplace_back(s->request.address, s->request.subscription.str());
        }
    }
    // Cancel in parallel: a producer may take a while to wind down a push loop.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> cancellers;
    for (std::size_t t = 0; t < std::min<std::size_t>(8, subs.size()); ++t) {
        cancellers.emplace_back([&] {
            for (auto i = next++; i < subs.size(); i = next++) {
                const auto& [address, id] = subs[i];
                try {
                    PeerClient(address, false).del("/v1/subscriptions/" + id);
                } catch (const std::exception& e) {
                    spdlog::debug("consumer: cancel {} at {}: {}", id, address, e.what());
                }
            }
        });
    }
    for (auto& c : cancellers) {
        c.join();
    }
}

std::vector<RoundTripEvent> Consumer::events(std::uint64_t since) const {
    std::lock_guard lock(mutex_);
    if (since >= events_.size()) {
        return {};
    }
    return {events_.begin() + static_cast<std::ptrdiff_t>(since), events_.end()};
}

std::vector<RemoteRequest> Consumer::requests() const {
    std::lock_guard lock(mutex_);
    std::vector<RemoteRequest> out;
    for (const auto& s : slots_) {
        out.push_back(s->request);
    }
    return out;
}

}// namespace mosden::api
