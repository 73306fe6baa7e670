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
#include <mosden/storage/history_store.hpp>
#include <mosden/storage/journal.hpp>

#include <doctest.h>
#include <test_util.hpp>

#include <algorithm>
#include <atomic>
#include <functional>
#include <limits>
#include <fstream>
#include <random>
#include <thread>

using namespace mosden;
using namespace mosden::storage;

namespace {

const Fields kOne{{"value", FieldKind::Numeric, ""}};
const Fields kThree{{"x", FieldKind::Numeric, ""}, {"y", FieldKind::Numeric, ""}, {"z", FieldKind::Numeric, ""}};
const SensorName kS("s");

StreamElement el(TimestampMs t, double v) { return {t, {v}}; }

std::vector<TimestampMs> stamps(const std::vector<StreamElement>& es) {
    std::vector<TimestampMs> out;
    for (const auto& e : es) {
        out.push_back(e.timestamp);
    }
    return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const EngineError& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::Shutdown;
}

std::pair<double, double> slope_r2(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double cov = sxy - sx * sy / n;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    return {cov / vx, vy == 0 ? 1.0 : cov * cov / (vx * vy)};
}

}// namespace

TEST_CASE("appending at capacity evicts the oldest") {
    HistoryStore store;
    store.ensure_table(kS, kOne, 3);
    for (int t = 1; t <= 4; ++t) {
        store.append(kS, el(t, t));
    }
    CHECK(stamps(store.range(kS, 0, 100)) == std::vector<TimestampMs>{2, 3, 4});
    CHECK(store.size(kS) == 3);
    CHECK(store.appended(kS) == 4);
}

TEST_CASE("history size one keeps exactly the latest") {
    HistoryStore store;
    store.ensure_table(kS, kOne, 1);
    for (int t = 1; t <= 50; ++t) {
        store.append(kS, el(t, t * 2.0));
        REQUIRE(store.size(kS) == 1);
        CHECK(store.latest(kS)->timestamp == t);
    }
}

TEST_CASE("append validates structure, order and table") {
    HistoryStore store;
    store.ensure_table(kS, kOne, 3);
    CHECK(kind_of([&] { store.append(kS, {1, {1.0, 2.0}}); }) == ErrorKind::InvalidQuery);
    CHECK(kind_of([&] { store.append(kS, {1, {std::string("a")}}); }) == ErrorKind::InvalidQuery);
    store.append(kS, el(10, 1));
    CHECK(kind_of([&] { store.append(kS, el(9, 1)); }) == ErrorKind::InvalidQuery);
    CHECK_NOTHROW(store.append(kS, el(10, 2)));
    CHECK(kind_of([&] { store.append(SensorName("other"), el(1, 1)); }) == ErrorKind::NotFound);
    CHECK(kind_of([&] { store.latest(SensorName("other")); }) == ErrorKind::NotFound);
}

TEST_CASE("latest and range") {
    HistoryStore store;
    store.ensure_table(kS, kOne, 3);
    CHECK_FALSE(store.latest(kS).has_value());
    for (int t = 1; t <= 5; ++t) {
        store.append(kS, el(t, t));
    }
    CHECK(store.latest(kS)->timestamp == 5);
    // retained 3..5
    CHECK(stamps(store.range(kS, 1, 10)) == std::vector<TimestampMs>{3, 4, 5});
    CHECK(store.range(kS, 6, 7).empty());
    CHECK(stamps(store.range(kS, 4, 4)) == std::vector<TimestampMs>{4});
    CHECK(kind_of([&] { store.range(kS, 5, 4); }) == ErrorKind::InvalidQuery);
    CHECK(stamps(store.since(kS, 3)) == std::vector<TimestampMs>{4, 5});
}

TEST_CASE("randomized operations match the last-min(n,H) model") {
    for (std::size_t h : {std::size_t{1}, std::size_t{3}, std::size_t{100}}) {
        CAPTURE(h);
        HistoryStore store;
        store.ensure_table(kS, kOne, h);
        std::vector<StreamElement> journal;// every append, oracle side
        std::mt19937_64 rng(h * 7919);
        TimestampMs t = 0;
        for (int op = 0; op < 10'000; ++op) {
            const auto roll = rng() % 10;
            if (roll < 6) {
                t += static_cast<TimestampMs>(rng() % 3);// repeats allowed
                const StreamElement e = el(t, static_cast<double>(rng() % 1000));
                store.append(kS, e);
                journal.push_back(e);
            } else if (roll < 8) {
                TimestampMs a = static_cast<TimestampMs>(rng() % static_cast<std::uint64_t>(t + 2));
                TimestampMs b = static_cast<TimestampMs>(rng() % static_cast<std::uint64_t>(t + 2));
                if (a > b) {
                    std::swap(a, b);
                }
                const std::size_t keep = std::min(journal.size(), h);
                std::vector<StreamElement> expect;
                for (std::size_t i = journal.size() - keep; i < journal.size(); ++i) {
                    if (journal[i].timestamp >= a && journal[i].timestamp <= b) {
                        expect.push_back(journal[i]);
                    }
                }
                REQUIRE(store.range(kS, a, b) == expect);
            } else if (roll < 9) {
                const auto got = store.latest(kS);
                if (journal.empty()) {
                    REQUIRE_FALSE(got.has_value());
                } else {
                    REQUIRE(got == journal.back());
                }
            } else {
                const std::size_t keep = std::min(journal.size(), h);
                const std::vector<StreamElement> expect(journal.end() - static_cast<std::ptrdiff_t>(keep),
                                                        journal.end());
                const auto all = store.range(kS, std::numeric_limits<TimestampMs>::min(),
                                             std::numeric_limits<TimestampMs>::max());
                REQUIRE(all == expect);
                REQUIRE(store.size(kS) == keep);
            }
        }
        CHECK(store.appended(kS) == journal.size());
    }
}

TEST_CASE("eviction order equals append order") {
    HistoryStore store;
    store.ensure_table(kS, kOne, 4);
    std::vector<TimestampMs> evicted;
    std::vector<TimestampMs> before;
    for (int t = 1; t <= 40; ++t) {
        before = stamps(store.range(kS, 0, 1000));
        store.append(kS, el(t, 0));
        const auto after = stamps(store.range(kS, 0, 1000));
        for (auto ts : before) {
            if (std::find(after.begin(), after.end(), ts) == after.end()) {
                evicted.push_back(ts);
            }
        }
    }
    REQUIRE(evicted.size() == 36);
    for (std::size_t i = 0; i < evicted.size(); ++i) {
        CHECK(evicted[i] == static_cast<TimestampMs>(i + 1));
    }
}

TEST_CASE("footprint is linear in record count and plateaus at capacity") {
    HistoryStore empty;
    CHECK(empty.footprint() == 0);

    HistoryStore store;
    store.ensure_table(kS, kThree, 50);
    const auto overhead = store.footprint(kS);
    CHECK(overhead == kSegmentHeaderBytes);

    const StreamElement rec{1'700'000'000'000, {0.25, -1.5, 9.75}};
    const auto per = record_bytes(rec);
    std::vector<double> ks, bytes;
    for (int k = 1; k <= 50; ++k) {
        store.append(kS, rec);
        CHECK(store.footprint(kS) == overhead + k * per);
        ks.push_back(k);
        bytes.push_back(static_cast<double>(store.footprint(kS)));
    }
    const auto [slope, r2] = slope_r2(ks, bytes);
    CHECK(slope == doctest::Approx(static_cast<double>(per)));
    CHECK(r2 > 0.999);

    const auto full = store.footprint(kS);
    for (int k = 0; k < 30; ++k) {
        store.append(kS, rec);
        CHECK(store.footprint(kS) == full);
    }
    CHECK(store.footprint() == full);
    CHECK(kind_of([&] { store.footprint(SensorName("nope")); }) == ErrorKind::NotFound);
}

TEST_CASE("journal recovers retained records across restarts") {
    test::TempDir dir;
    {
        HistoryStore store(dir.path());
        store.ensure_table(kS, kOne, 5);
        for (int t = 1; t <= 12; ++t) {
            store.append(kS, el(t, t * 1.5));
        }
        CHECK(store.disk_bytes(kS) > 0);
    }
    HistoryStore again(dir.path());
    REQUIRE(again.has_table(kS));
    CHECK(stamps(again.range(kS, 0, 100)) == std::vector<TimestampMs>{8, 9, 10, 11, 12});
    CHECK(again.latest(kS)->values == std::vector<Value>{18.0});
    again.ensure_table(kS, kOne, 5);
    CHECK(again.size(kS) == 5);
    again.append(kS, el(13, 0));
    CHECK(again.latest(kS)->timestamp == 13);
}

TEST_CASE("journal segments rotate so disk use stays bounded") {
    test::TempDir dir;
    HistoryStore store(dir.path());
    store.ensure_table(kS, kOne, 10);
    std::uint64_t peak = 0;
    for (int t = 1; t <= 500; ++t) {
        store.append(kS, el(t, 1.0));
        peak = std::max(peak, store.disk_bytes(kS));
    }
    // At most the live segment plus one full one behind it.
    CHECK(peak <= 2 * kSegmentHeaderBytes + 21 * record_bytes(el(500, 1.0)));
}

TEST_CASE("a torn tail is discarded on recovery") {
    test::TempDir dir;
    {
        HistoryStore store(dir.path());
        store.ensure_table(kS, kOne, 100);
        for (int t = 1; t <= 5; ++t) {
            store.append(kS, el(t, t));
        }
    }
    std::filesystem::path segment;
    for (const auto& e : std::filesystem::directory_iterator(dir / "s")) {
        if (e.path().extension() == ".journal") {
            segment = e.path();
        }
    }
    REQUIRE_FALSE(segment.empty());
    const auto good_size = std::filesystem::file_size(segment);
    {
        std::ofstream out(segment, std::ios::binary | std::ios::app);
        const char partial[] = {40, 0, 0, 0, '{', '"', 't'};
        out.write(partial, sizeof partial);
    }
    HistoryStore again(dir.path());
    CHECK(stamps(again.range(kS, 0, 100)) == std::vector<TimestampMs>{1, 2, 3, 4, 5});
    CHECK(std::filesystem::file_size(segment) == good_size);
}

TEST_CASE("structure changes clear a table, smaller history trims") {
    HistoryStore store;
    store.ensure_table(kS, kOne, 10);
    for (int t = 1; t <= 8; ++t) {
        store.append(kS, el(t, t));
    }
    store.ensure_table(kS, kOne, 4);
    CHECK(stamps(store.range(kS, 0, 100)) == std::vector<TimestampMs>{5, 6, 7, 8});
    store.ensure_table(kS, kThree, 4);
    CHECK(store.size(kS) == 0);
    store.drop_table(kS);
    CHECK_FALSE(store.has_table(kS));
}

TEST_CASE("a concurrent reader always sees fully formed elements") {
    HistoryStore store;
    store.ensure_table(kS, kThree, 16);
    std::atomic<bool> done{false};
    std::atomic<long> checked{0};
    std::atomic<long> malformed{0};
    std::thread reader([&] {
        while (!done) {
            if (auto e = store.latest(kS)) {
                // Writer stores (t, t, -t) so every field pins the others.
                const double t = static_cast<double>(e->timestamp);
                const bool ok = e->values.size() == 3 && std::get<double>(e->values[0]) == t &&
                                std::get<double>(e->values[1]) == t && std::get<double>(e->values[2]) == -t;
                malformed += ok ? 0 : 1;
                ++checked;
            }
            const auto r = store.range(kS, 0, std::numeric_limits<TimestampMs>::max());
            bool ordered = r.size() <= 16;
            for (std::size_t i = 1; i < r.size(); ++i) {
                ordered = ordered && r[i - 1].timestamp <= r[i].timestamp;
            }
            malformed += ordered ? 0 : 1;
        }
    });
    for (int t = 1; t <= 50'000; ++t) {
        const double v = t;
        store.append(kS, {t, {v, v, -v}});
    }
    done = true;
    reader.join();
    CHECK(checked > 0);
    CHECK(malformed == 0);
}
