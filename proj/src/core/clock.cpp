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

#include <mosden/core/clock.hpp>

#include <chrono>
#include <time.h>

namespace mosden {

namespace {
std::int64_t steady_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

const SystemClock& system_clock_instance() {
    static const SystemClock instance;
    return instance;
}

std::atomic<const Clock*> g_clock{nullptr};
}// namespace

SystemClock::SystemClock()
    : epoch_anchor_ms_(std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count()),
      steady_anchor_ms_(steady_ms()) {}

TimestampMs SystemClock::now_ms() const { return epoch_anchor_ms_ + (steady_ms() - steady_anchor_ms_); }

void set_clock(const Clock* c) { g_clock.store(c); }

const Clock& clock() {
    const Clock* c = g_clock.load();
    return c ? *c : system_clock_instance();
}

TimestampMs now_ms() { return clock().now_ms(); }

std::int64_t monotonic_us() {
    timespec ts{};
    ::clock_gettime(CLOCK_MONOTONIC, &ts);
    return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000 + ts.tv_nsec / 1000;
}

}// namespace mosden
