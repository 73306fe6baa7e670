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

#include <mosden/sharing/service_manager.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>

namespace mosden::sharing {

std::string_view to_string(Mode m) { return m == Mode::Restful ? "restful" : "push"; }

Mode parse_mode(std::string_view text) {
    if (text == "restful" || text == "pull") {
        return Mode::Restful;
    }
    if (text == "push") {
        return Mode::Push;
    }
    raise(ErrorKind::InvalidQuery, "mode must be 'restful' or 'push', got '" + std::string(text) + "'");
}

std::string_view to_string(SubscriptionState s) {
    switch (s) {
        case SubscriptionState::Active: return "Active";
        case SubscriptionState::Disconnected: return "Disconnected";
        case SubscriptionState::Cancelled: return "Cancelled";
    }
    return "Unknown";
}

std::int64_t BackoffPolicy::nominal(int attempt) const {
    std::int64_t delay = initial_ms;
    for (int i = 1; i < attempt && delay < cap_ms; ++i) {
        delay *= 2;
    }
    return std::min(delay, cap_ms);
}

struct ServiceManager::Entry {
    std::mutex tick_mutex;// serializes delivery cycles

    std::mutex mutex;
    std::condition_variable cv;
    Subscription sub;
    std::deque<StreamElement> buffer;
    TimestampMs next_retry = 0;
    int failures_in_row = 0;
    std::mt19937_64 rng;
    std::set<std::string> sessions;
    bool stop = false;
    std::thread thread;
};

ServiceManager::ServiceManager(const engine::VirtualSensorManager& sensors, const storage::HistoryStore& store,
                               std::shared_ptr<PushTransport> transport, ServiceOptions options)
    : sensors_(sensors), store_(store), transport_(std::move(transport)), options_(options) {}

ServiceManager::~ServiceManager() { shutdown(); }

std::shared_ptr<ServiceManager::Entry> ServiceManager::find(const SubscriptionId& id) const {
    std::lock_guard lock(mutex_);
    auto it = subs_.find(id);
    if (it == subs_.end()) {
        raise(ErrorKind::NotFound, "no subscription '" + id.str() + "'");
    }
    return it->second;
}

Subscription ServiceManager::subscribe(const std::string& peer, const SensorName& sensor, Mode mode,
                                       std::int64_t delivery_interval_ms) {
    if (!sensors_.is_active(sensor) || !store_.has_table(sensor)) {
        raise(ErrorKind::NotFound, "no sensor named '" + sensor.str() + "'");
    }
    if (delivery_interval_ms < 1) {
        raise(ErrorKind::InvalidQuery, "delivery interval must be >= 1 ms");
    }
    if (mode == Mode::Push && peer.empty()) {
        raise(ErrorKind::InvalidQuery, "push subscriptions need a callback address");
    }
    {
        std::lock_guard lock(data_mutex_);
        if (shutting_down_) {
            raise(ErrorKind::Shutdown, "service manager is shutting down");
        }
    }
    auto e = std::make_shared<Entry>();
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, other] : subs_) {
            std::lock_guard other_lock(other->mutex);
            const auto& s = other->sub;
            if (s.state != SubscriptionState::Cancelled && s.peer == peer && s.sensor == sensor && s.mode == mode) {
                raise(ErrorKind::Conflict, "peer " + peer + " already has a " + std::string(to_string(mode)) +
                                               " subscription to '" + sensor.str() + "'");
            }
        }
        e->sub.id = SubscriptionId(options_.id_prefix + "-" + std::to_string(next_id_++));
        e->sub.peer = peer;
        e->sub.sensor = sensor;
        e->sub.mode = mode;
        e->sub.delivery_interval_ms = delivery_interval_ms;
        e->sub.buffer_capacity = options_.buffer_capacity;
        const auto latest = store_.latest(sensor);
        e->sub.cursor = latest ? latest->timestamp : 0;
        e->rng.seed(std::hash<std::string>{}(e->sub.id.str()));
        subs_.emplace(e->sub.id, e);
    }
    if (mode == Mode::Push && options_.run_push_loops) {
        e->thread = std::thread([this, e] { push_loop(e); });
    }
    std::lock_guard lock(e->mutex);
    return e->sub;
}

void ServiceManager::cancel(const SubscriptionId& id) {
    auto e = find(id);
    {
        std::lock_guard lock(e->mutex);
        if (e->sub.state == SubscriptionState::Cancelled) {
            raise(ErrorKind::NotFound, "subscription '" + id.str() + "' is already cancelled");
        }
        e->sub.state = SubscriptionState::Cancelled;
        e->buffer.clear();
        e->sub.pending = 0;
        e->stop = true;
    }
    e->cv.notify_all();
    {
        std::lock_guard lock(data_mutex_);
        ++data_version_;
    }
    data_cv_.notify_all();
    if (e->thread.joinable() && e->thread.get_id() != std::this_thread::get_id()) {
        e->thread.join();
    }
}

Subscription ServiceManager::get(const SubscriptionId& id) const {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    auto s = e->sub;
    s.connections = e->sessions.size();
    return s;
}

std::vector<Subscription> ServiceManager::list() const {
    std::vector<std::shared_ptr<Entry>> all;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, e] : subs_) {
            all.push_back(e);
        }
    }
    std::vector<Subscription> out;
    for (const auto& e : all) {
        std::lock_guard lock(e->mutex);
        out.push_back(e->sub);
        out.back().connections = e->sessions.size();
    }
    return out;
}

DeliveryOutcome ServiceManager::deliver_tick(const SubscriptionId& id, TimestampMs at) {
    auto e = find(id);
    std::lock_guard tick(e->tick_mutex);
    std::unique_lock lock(e->mutex);
    return tick_locked(*e, at, lock);
}

DeliveryOutcome ServiceManager::tick_locked(Entry& e, TimestampMs at, std::unique_lock<std::mutex>& lock) {
    DeliveryOutcome out;
    if (e.sub.state == SubscriptionState::Cancelled) {
        out.status = DeliveryOutcome::Status::Cancelled;
        return out;
    }

    std::vector<StreamElement> fresh;
    try {
        fresh = store_.since(e.sub.sensor, e.sub.cursor);
    } catch (const EngineError& err) {
        spdlog::warn("subscription {}: {}", e.sub.id.str(), err.what());
    }
    for (auto& el : fresh) {
        e.sub.cursor = el.timestamp;
        e.buffer.push_back(std::move(el));
        if (e.buffer.size() > e.sub.buffer_capacity) {
            e.buffer.pop_front();
            ++e.sub.counters.dropped;
            ++out.dropped;
        }
    }
    e.sub.pending = e.buffer.size();

    if (e.buffer.empty()) {
        out.status = DeliveryOutcome::Status::Idle;
        return out;
    }
    if (e.sub.state == SubscriptionState::Disconnected && at < e.next_retry) {
        out.status = DeliveryOutcome::Status::Buffered;
        out.buffered = e.buffer.size();
        return out;
    }

    const std::vector<StreamElement> batch(e.buffer.begin(), e.buffer.end());
    const Subscription snapshot = e.sub;
    ++e.sub.counters.attempts;
    lock.unlock();
    bool ok = false;
    try {
        ok = transport_ && transport_->deliver(snapshot, batch);
    } catch (const std::exception& err) {
        spdlog::debug("subscription {} push failed: {}", snapshot.id.str(), err.what());
    }
    lock.lock();

    if (e.sub.state == SubscriptionState::Cancelled) {
        out.status = DeliveryOutcome::Status::Cancelled;
        return out;
    }
    if (ok) {
        // Only this tick appends to the buffer, so the batch is its prefix.
        e.buffer.erase(e.buffer.begin(), e.buffer.begin() + static_cast<std::ptrdiff_t>(batch.size()));
        e.sub.pending = e.buffer.size();
        e.sub.counters.delivered += batch.size();
        if (e.sub.state == SubscriptionState::Disconnected) {
            ++e.sub.counters.reconnects;
        }
        e.sub.state = SubscriptionState::Active;
        e.failures_in_row = 0;
        out.status = DeliveryOutcome::Status::Delivered;
        out.delivered = batch.size();
        return out;
    }

    ++e.sub.counters.failed_attempts;
    ++e.failures_in_row;
    e.sub.state = SubscriptionState::Disconnected;
    const auto nominal = options_.backoff.nominal(e.failures_in_row);
    std::uniform_real_distribution<double> jitter(-options_.backoff.jitter, options_.backoff.jitter);
    e.next_retry = at + static_cast<std::int64_t>(static_cast<double>(nominal) * (1.0 + jitter(e.rng)));
    out.status = DeliveryOutcome::Status::Buffered;
    out.buffered = e.buffer.size();
    return out;
}

void ServiceManager::push_loop(std::shared_ptr<Entry> e) {
    using namespace std::chrono;
    for (;;) {
        TimestampMs wake_at = 0;
        {
            std::lock_guard lock(e->mutex);
            if (e->stop) {
                return;
            }
            const auto interval = e->sub.delivery_interval_ms;
            const auto now = now_ms();
            // Deliveries fire on the interval grid of the shared clock.
            wake_at = (now / interval + 1) * interval;
            if (e->sub.state == SubscriptionState::Disconnected && !e->buffer.empty() && e->next_retry > now) {
                wake_at = std::min(wake_at, e->next_retry);
            }
        }
        {
            std::unique_lock lock(e->mutex);
            const auto wait = milliseconds(std::max<TimestampMs>(0, wake_at - now_ms()));
            if (e->cv.wait_for(lock, wait, [&] { return e->stop; })) {
                return;
            }
        }
        std::lock_guard tick(e->tick_mutex);
        std::unique_lock lock(e->mutex);
        tick_locked(*e, now_ms(), lock);
    }
}

PullResult ServiceManager::pull(const SubscriptionId& id, std::optional<TimestampMs> after, std::int64_t wait_ms,
                                const std::string& session) {
    auto e = find(id);
    SensorName sensor;
    {
        std::lock_guard lock(e->mutex);
        if (e->sub.state == SubscriptionState::Cancelled) {
            raise(ErrorKind::NotFound, "subscription '" + id.str() + "' is cancelled");
        }
        if (e->sub.mode != Mode::Restful) {
            raise(ErrorKind::InvalidQuery, "subscription '" + id.str() + "' is push-mode");
        }
        e->sessions.insert(session);
        if (after && *after > e->sub.cursor) {
            e->sub.cursor = *after;
        }
        sensor = e->sub.sensor;
    }

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(std::max<std::int64_t>(0, wait_ms));
    for (;;) {
        std::uint64_t version = 0;
        {
            std::lock_guard lock(data_mutex_);
            version = data_version_;
        }
        TimestampMs cursor = 0;
        {
            std::lock_guard lock(e->mutex);
            if (e->sub.state == SubscriptionState::Cancelled) {
                raise(ErrorKind::NotFound, "subscription '" + id.str() + "' is cancelled");
            }
            cursor = e->sub.cursor;
        }
        auto fresh = store_.since(sensor, cursor);
        if (!fresh.empty()) {
            std::lock_guard lock(e->mutex);
            // A concurrent pull may have advanced the cursor meanwhile.
            std::erase_if(fresh, [&](const StreamElement& el) { return el.timestamp <= e->sub.cursor; });
            if (!fresh.empty()) {
                e->sub.cursor = fresh.back().timestamp;
                e->sub.counters.delivered += fresh.size();
                return {std::move(fresh), false};
            }
        }
        std::unique_lock lock(data_mutex_);
        if (shutting_down_) {
            raise(ErrorKind::Shutdown, "node is shutting down");
        }
        if (!data_cv_.wait_until(lock, deadline, [&] { return data_version_ != version || shutting_down_; })) {
            return {{}, true};
        }
    }
}

void ServiceManager::notify_append(const SensorName&) {
    {
        std::lock_guard lock(data_mutex_);
        ++data_version_;
    }
    data_cv_.notify_all();
}

void ServiceManager::shutdown() {
    {
        std::lock_guard lock(data_mutex_);
        if (shutting_down_) {
            return;
        }
        shutting_down_ = true;
    }
    data_cv_.notify_all();
    std::vector<std::shared_ptr<Entry>> all;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, e] : subs_) {
            all.push_back(e);
        }
    }
    for (const auto& e : all) {
        {
            std::lock_guard lock(e->mutex);
            e->stop = true;
        }
        e->cv.notify_all();
        if (e->thread.joinable()) {
            e->thread.join();
        }
    }
}

}// namespace mosden::sharing
