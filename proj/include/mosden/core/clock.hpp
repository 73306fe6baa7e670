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

#include <atomic>
#include <cstdint>

namespace mosden {

using TimestampMs = std::int64_t;

class Clock {
  public:
    virtual ~Clock() = default;
    /// Milliseconds since the Unix epoch. Never goes backwards within a process.
    virtual TimestampMs now_ms() const = 0;
};

/// Epoch time anchored once at construction and advanced by the steady clock,
/// so wall-clock adjustments never produce a negative interval.
class SystemClock final : public Clock {
  public:
    SystemClock();
    TimestampMs now_ms() const override;

  private:
    std::int64_t epoch_anchor_ms_;
    std::int64_t steady_anchor_ms_;
};

class FakeClock final : public Clock {
  public:
    explicit FakeClock(TimestampMs start = 0) : now_(start) {}
    TimestampMs now_ms() const override { return now_.load(); }
    void set(TimestampMs t) { now_.store(t); }
    void advance(TimestampMs delta) { now_.fetch_add(delta); }

  private:
    std::atomic<TimestampMs> now_;
};

/// Process-wide clock used by now_ms(). Tests swap in a FakeClock; pass
/// nullptr to restore the system clock.
void set_clock(const Clock* clock);
const Clock& clock();
TimestampMs now_ms();

/// Host-wide monotonic microseconds (CLOCK_MONOTONIC). Comparable across
/// processes on the same host; used for round-trip stamps.
std::int64_t monotonic_us();

}// namespace mosden
