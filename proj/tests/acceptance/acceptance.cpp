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

#include <mosden/api/http.hpp>
#include <mosden/api/node.hpp>
#include <mosden/engine/processor.hpp>
#include <mosden/harness/report.hpp>
#include <mosden/harness/runner.hpp>
#include <mosden/storage/history_store.hpp>

#include <CLI11.hpp>
#include <httplib.h>
#include <recount.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <thread>

using namespace mosden;
using namespace mosden::harness;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Context {
    fs::path out;
    std::map<std::string, RunResult> runs;

    const RunResult& run(const ScenarioConfig& c) {
        auto it = runs.find(c.name);
        if (it == runs.end()) {
            std::cerr << "running " << c.name << " (" << c.duration_s << " s)" << std::endl;
            RunOptions o;
            o.executable = MOSDEN_BINARY;
            o.output_dir = out / c.name;
            it = runs.emplace(c.name, run_scenario(c, o)).first;
        }
        return it->second;
    }
};

ScenarioConfig bundled(const std::string& name) {
    auto s = find_bundled(name);
    if (!s) {
        raise(ErrorKind::NotFound, "no bundled scenario " + name);
    }
    return *s;
}

std::vector<double> shares_of(const MetricsReport& r) {
    std::vector<double> out;
    for (const auto& [id, share] : round_trip_share(r)) {
        out.push_back(share);
    }
    return out;
}

std::size_t starved(const MetricsReport& r) {
    return static_cast<std::size_t>(
        std::count_if(r.requests.begin(), r.requests.end(), [](const auto& q) { return q.round_trips == 0; }));
}

/// Compares a report with the independent recount of its event log.
std::optional<std::string> recount_mismatch(const RunResult& run) {
    const auto oracle = test::recount_file(run.dir / "events.jsonl");
    const auto& r = run.report;
    if (total_round_trips(r) != oracle.total || r.round_trips.size() != oracle.total) {
        return fmt::format("total {} vs recount {}", total_round_trips(r), oracle.total);
    }
    if (r.requests.size() != oracle.order.size()) {
        return "request count differs";
    }
    for (std::size_t i = 0; i < r.requests.size(); ++i) {
        if (r.requests[i].id != oracle.order[i] || r.requests[i].round_trips != oracle.trips.at(oracle.order[i])) {
            return "S_i differs for " + r.requests[i].id;
        }
    }
    if (oracle.total == 0) {
        return std::nullopt;
    }
    if (std::abs(time_per_request(r) - oracle.time_per_request()) > 1e-9) {
        return fmt::format("time per request {} vs {}", time_per_request(r), oracle.time_per_request());
    }
    const auto shares = round_trip_share(r);
    for (const auto& [id, share] : shares) {
        if (std::abs(share - oracle.share(id)) > 1e-9) {
            return "share differs for " + id;
        }
    }
    return std::nullopt;
}

Verdict throughput(Context& ctx) {
    const auto& r = ctx.run(bundled("setup2-restful-90")).report;
    const double server = data_points_per_minute(r);
    bool pass = !r.failed && server >= 0.9 * 5400.0;
    std::string detail = fmt::format("server {:.0f}/min (need >= 4860)", server);
    const auto by_node = data_points_per_minute_by_node(r);
    pass = pass && by_node.size() == r.scenario.clients;
    for (const auto& [node, rate] : by_node) {
        pass = pass && rate >= 0.9 * 1800.0;
        detail += fmt::format(", {} {:.0f}/min", node, rate);
    }
    return {pass, detail + " (clients need >= 1620)"};
}

Verdict mode_contrast(Context& ctx) {
    const auto& restful = ctx.run(bundled("setup2-restful-90")).report;
    const auto& push = ctx.run(bundled("setup2-push-90")).report;
    const auto rows = compare(restful, push);
    write_csv(rows, ctx.out / "comparison.csv");
    const auto a = latency_stats(restful);
    const auto b = latency_stats(push);
    return {a.count > 0 && b.count > 0 && a.mean_ms < b.mean_ms,
            fmt::format("restful mean {:.2f} ms, push mean {:.2f} ms, push/restful {:.2f}x (comparison.csv)",
                        a.mean_ms, b.mean_ms, a.mean_ms > 0 ? b.mean_ms / a.mean_ms : 0.0)};
}

Verdict real_world_latency(Context& ctx) {
    auto c = bundled("setup2-restful-30");
    c.name = "real-world-restful-30";
    c.sensors_per_client = 10;
    c.duration_s = 60;
    const auto& r = ctx.run(c).report;
    const auto lat = latency_stats(r);
    const auto none = starved(r);
    return {!r.failed && lat.count > 0 && lat.median_ms < 1000.0 && none == 0,
            fmt::format("median {:.2f} ms (interval 1000 ms), p95 {:.2f} ms, starved {}; reference band 400-1500 ms",
                        lat.median_ms, lat.p95_ms, none)};
}

Verdict fairness(Context& ctx) {
    const auto& restful = ctx.run(bundled("setup2-restful-90")).report;
    const auto& push = ctx.run(bundled("setup2-push-90")).report;
    const double a = coefficient_of_variation(shares_of(restful));
    const double b = coefficient_of_variation(shares_of(push));
    const auto none = starved(restful);
    return {a < b && none == 0, fmt::format("share CV restful {:.4f} < push {:.4f}, restful starved {}", a, b, none)};
}

Verdict recount(Context& ctx) {
    std::mt19937_64 rng(20240601);
    for (int i = 0; i < 20; ++i) {
        ScenarioConfig c;
        c.name = fmt::format("mini-{:02}", i);
        c.topology = rng() % 2 ? Topology::ServerIsConstrainedRole : Topology::ServerIsWorkstationRole;
        c.server = default_limits(c.topology);
        c.clients = 1 + rng() % 3;
        c.sensors_per_client = 1 + rng() % 6;
        c.requests = 1 + rng() % (c.clients * c.sensors_per_client);
        c.mode = rng() % 2 ? sharing::Mode::Push : sharing::Mode::Restful;
        c.sampling_interval_ms = 200 + static_cast<std::int64_t>(rng() % 5) * 200;
        c.duration_s = 3 + static_cast<std::int64_t>(rng() % 6);
        c.seed = rng() % 1000;
        ctx.run(c);
    }
    std::size_t checked = 0, mini = 0;
    std::uint64_t trips = 0;
    for (const auto& [name, run] : ctx.runs) {
        if (run.report.requests.empty()) {
            continue;
        }
        if (auto why = recount_mismatch(run)) {
            return {false, name + ": " + *why};
        }
        ++checked;
        mini += name.rfind("mini-", 0) == 0 ? 1 : 0;
        trips += total_round_trips(run.report);
    }
    return {mini >= 20, fmt::format("{} runs ({} randomized) match the recount, {} round trips", checked, mini, trips)};
}

Verdict storage_linearity(Context& ctx) {
    const auto scenario = bundled("storage-linearity");
    const auto& r = ctx.run(scenario).report;
    const auto capacity = static_cast<std::uint64_t>(scenario.clients * scenario.sensors_per_client) *
                          scenario.history_size;
    std::vector<double> x, y, plateau;
    for (const auto& f : r.footprints) {
        if (f.records > capacity) {
            return {false, fmt::format("{} records exceed capacity {}", f.records, capacity)};
        }
        if (f.records == capacity) {
            plateau.push_back(static_cast<double>(f.bytes));
        } else if (f.records > 0) {
            x.push_back(static_cast<double>(f.records));
            y.push_back(static_cast<double>(f.bytes));
        }
    }
    if (x.size() < 10 || plateau.size() < 3) {
        return {false, fmt::format("{} growth points, {} plateau points", x.size(), plateau.size())};
    }
    const auto fit = fit_line(x, y);
    const auto [lo, hi] = std::minmax_element(plateau.begin(), plateau.end());
    const double mid = (*lo + *hi) / 2.0;
    const double spread = (*hi - *lo) / mid;
    return {fit.r2 > 0.999 && spread <= 0.02,
            fmt::format("R2 {:.6f} over {} points, {:.1f} B/record; plateau {} points at {:.0f} B +/- {:.2f}%",
                        fit.r2, x.size(), fit.slope, plateau.size(), mid, 50.0 * spread)};
}

Verdict eviction_oracle(Context&) {
    const auto began = std::chrono::steady_clock::now();
    const SensorName s("s");
    const Fields one{{"value", FieldKind::Numeric, ""}};
    std::size_t queries = 0;
    for (std::size_t h : {std::size_t{1}, std::size_t{3}, std::size_t{100}}) {
        storage::HistoryStore store;
        store.ensure_table(s, one, h);
        std::vector<StreamElement> all;
        std::mt19937_64 rng(h * 104729);
        TimestampMs t = 0;
        for (int op = 0; op < 10'000; ++op) {
            if (rng() % 2 == 0) {
                t += static_cast<TimestampMs>(rng() % 3);
                all.push_back({t, {static_cast<double>(rng() % 1000)}});
                store.append(s, all.back());
                continue;
            }
            ++queries;
            const std::size_t keep = std::min(all.size(), h);
            const std::vector<StreamElement> expect(all.end() - static_cast<std::ptrdiff_t>(keep), all.end());
            const auto got = store.range(s, std::numeric_limits<TimestampMs>::min(),
                                         std::numeric_limits<TimestampMs>::max());
            const auto latest = store.latest(s);
            if (got != expect || store.size(s) != keep ||
                (all.empty() ? latest.has_value() : latest != all.back())) {
                return {false, fmt::format("H={} diverged at operation {}", h, op)};
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - began).count();
    return {secs < 10.0, fmt::format("3 x 10000 operations, {} checks, {:.2f} s", queries, secs)};
}

Verdict connection_counts(Context& ctx) {
    std::string detail;
    bool pass = true;
    for (auto mode : {sharing::Mode::Restful, sharing::Mode::Push}) {
        ScenarioConfig c;
        c.name = fmt::format("connections-{}", sharing::to_string(mode));
        c.clients = 1;
        c.sensors_per_client = 1;
        c.requests = 1;
        c.mode = mode;
        c.duration_s = 60;
        const auto& r = ctx.run(c).report;
        const auto& q = r.requests.at(0);
        if (mode == sharing::Mode::Restful) {
            pass = pass && q.connections >= 1 && q.connections <= 1 + q.reconnects;
        } else {
            pass = pass && q.connections >= 58 && q.connections <= 62;
        }
        detail += fmt::format("{}{} connections {} reconnects {} round trips {}", detail.empty() ? "" : "; ",
                              sharing::to_string(mode), q.connections, q.reconnects, q.round_trips);
    }
    return {pass, detail + " (restful <= 1 + reconnects, push 60 +/- 2)"};
}

/// A push endpoint that can be taken down and brought back on the same port.
class Receiver {
  public:
    explicit Receiver(int port) : port_(port) {}
    ~Receiver() { stop(); }

    void start() {
        server_ = std::make_unique<httplib::Server>();
        api::exclusive_bind(*server_);
        server_->Post(R"(/v1/push/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = wire::Json::parse(req.body);
            std::lock_guard lock(mutex_);
            for (const auto& e : wire::elements_from_json(body.at("elements"))) {
                stamps_.push_back(e.timestamp);
            }
            api::write_json(res, {{"accepted", true}});
        });
        if (port_ == 0) {
            port_ = server_->bind_to_any_port("127.0.0.1");
        } else if (!server_->bind_to_port("127.0.0.1", port_)) {
            raise(ErrorKind::Conflict, "cannot rebind receiver port");
        }
        thread_ = std::thread([this] { server_->listen_after_bind(); });
        server_->wait_until_ready();
    }
    void stop() {
        if (server_) {
            server_->stop();
            thread_.join();
            server_.reset();
        }
    }
    std::string address() const { return "127.0.0.1:" + std::to_string(port_); }
    std::vector<TimestampMs> stamps() {
        std::lock_guard lock(mutex_);
        return stamps_;
    }

  private:
    int port_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::mutex mutex_;
    std::vector<TimestampMs> stamps_;
};

Verdict offline_resilience(Context& ctx) {
    const auto dir = ctx.out / "offline";
    fs::remove_all(dir);
    fs::create_directories(dir / "plugins");
    fs::create_directories(dir / "vsensors");
    std::ofstream(dir / "plugins" / "sine.plugin")
        << R"({"format_version": 1, "plugin_id": "sine", "output": [{"name": "value"}], "min_sampling_interval_ms": 10,
              "source": {"type": "builtin", "name": "sine_wave", "parameters": {"period_ms": 10000}}})";
    std::ofstream(dir / "vsensors" / "v.vsensor")
        << R"({"format_version": 1, "name": "v", "plugin_id": "sine", "sampling_interval_ms": 1000, "history_size": 1000})";

    api::NodeOptions o;
    o.node_id = NodeId("offline-client");
    o.plugins_dir = dir / "plugins";
    o.vsensors_dir = dir / "vsensors";
    o.buffer_capacity = 64;
    api::Node node(o);
    node.start();

    Receiver receiver(0);
    receiver.start();
    const SensorName sensor("v");
    const auto sub = node.services().subscribe(receiver.address(), sensor, sharing::Mode::Push, 1000);
    using namespace std::chrono_literals;
    std::this_thread::sleep_for(10s);
    receiver.stop();
    std::cerr << "receiver down for 30 s" << std::endl;
    std::this_thread::sleep_for(30s);
    const auto during = node.services().get(sub.id);
    receiver.start();

    // The backoff cap bounds how long the first retry after the outage takes.
    const auto deadline = std::chrono::steady_clock::now() + 60s;
    sharing::Subscription after = node.services().get(sub.id);
    while (std::chrono::steady_clock::now() < deadline) {
        after = node.services().get(sub.id);
        if (after.counters.reconnects > 0 && after.pending == 0) {
            break;
        }
        std::this_thread::sleep_for(200ms);
    }
    std::this_thread::sleep_for(2s);// one more regular delivery after the drain
    after = node.services().get(sub.id);
    node.services().cancel(sub.id);
    receiver.stop();
    const auto stamps = receiver.stamps();
    const auto stored = node.store().since(sensor, sub.cursor);
    node.stop();

    if (stamps.empty()) {
        return {false, "nothing delivered"};
    }
    const bool ordered = std::adjacent_find(stamps.begin(), stamps.end(),
                                            [](TimestampMs a, TimestampMs b) { return b <= a; }) == stamps.end();
    const std::set<TimestampMs> unique(stamps.begin(), stamps.end());
    std::vector<TimestampMs> expected;
    for (const auto& e : stored) {
        if (e.timestamp <= stamps.back()) {
            expected.push_back(e.timestamp);
        }
    }
    const bool complete = stamps == expected;
    const bool pass = during.pending >= 28 && after.counters.reconnects >= 1 && after.counters.dropped == 0 &&
                      ordered && unique.size() == stamps.size() && complete;
    return {pass, fmt::format("{} buffered during outage, {} delivered, {} duplicates, in order {}, complete {}, "
                              "dropped {}, reconnects {}",
                              during.pending, stamps.size(), stamps.size() - unique.size(), ordered, complete,
                              after.counters.dropped, after.counters.reconnects)};
}

Verdict decibels(Context&) {
    using engine::level_db;
    double worst_sine = 0.0, worst_scale = 0.0;
    const std::vector<double> ones(64, 1.0);
    const double constant = level_db(ones, 1.0);
    for (std::size_t n : {16u, 64u, 1000u, 4096u}) {
        std::vector<double> sine(n);
        for (std::size_t k = 0; k < n; ++k) {
            sine[k] = std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
        }
        worst_sine = std::max(worst_sine, std::abs(level_db(sine, 1.0) - (-3.0103)));
    }
    std::mt19937_64 rng(97);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), scale(0.01, 100.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> w(1 + rng() % 256);
        for (auto& v : w) {
            v = amp(rng);
        }
        const double c = scale(rng);
        std::vector<double> scaled(w);
        for (auto& v : scaled) {
            v *= c;
        }
        worst_scale = std::max(worst_scale, std::abs(level_db(scaled, 1.0) - level_db(w, 1.0) - 20.0 * std::log10(c)));
    }
    // The processor path agrees with the closed form.
    const Fields amp_field{{"amplitude", FieldKind::Numeric, ""}};
    std::vector<StreamElement> window;
    for (std::size_t k = 0; k < 64; ++k) {
        window.push_back({static_cast<TimestampMs>(k), {std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / 64.0)}});
    }
    const engine::Chain chain{engine::NoiseLevelDb{1.0, 64, "amplitude"}};
    const auto out = engine::process(chain, amp_field, window);
    const double via_chain = out ? std::get<double>(out->values.at(0)) : 0.0;
    const bool pass = std::abs(constant) <= 1e-12 && worst_sine <= 1e-6 && worst_scale <= 1e-9 &&
                      out.has_value() && std::abs(via_chain - (-3.0103)) <= 1e-6;
    return {pass, fmt::format("constant {:.3g} dB, sine max error {:.2e}, scaling max error {:.2e}, chain {:.6f} dB",
                              constant, worst_sine, worst_scale, via_chain)};
}

}// namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks; runs the scenarios and prints one PASS/FAIL line per criterion"};
    std::string out = "acceptance-runs";
    std::vector<int> only;
    app.add_option("--out", out, "directory for run artifacts");
    app.add_option("--only", only, "run only these criteria (1-10)");
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);

    Context ctx;
    ctx.out = fs::absolute(out);
    fs::create_directories(ctx.out);

    const std::vector<std::pair<std::string, std::function<Verdict(Context&)>>> criteria = {
        {"throughput at 90 requests", throughput},
        {"restful faster than push", mode_contrast},
        {"latency under real-world load", real_world_latency},
        {"fair round-trip shares", fairness},
        {"statistics match recount", recount},
        {"storage footprint is linear", storage_linearity},
        {"eviction oracle", eviction_oracle},
        {"connection counts", connection_counts},
        {"offline buffering", offline_resilience},
        {"decibel processor", decibels},
    };
    // The recount covers every run, so it is evaluated last.
    std::vector<std::size_t> order = {0, 1, 2, 3, 5, 6, 7, 8, 9, 4};
    std::vector<std::optional<Verdict>> verdicts(criteria.size());
    for (auto i : order) {
        if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i + 1)) == only.end()) {
            continue;
        }
        std::cerr << "criterion " << i + 1 << ": " << criteria[i].first << std::endl;
        try {
            verdicts[i] = criteria[i].second(ctx);
        } catch (const EngineError& e) {
            verdicts[i] = Verdict{false, std::string(to_string(e.kind())) + ": " + e.detail()};
        } catch (const std::exception& e) {
            verdicts[i] = Verdict{false, e.what()};
        }
    }
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!verdicts[i]) {
            continue;
        }
        all = all && verdicts[i]->pass;
        std::cout << (verdicts[i]->pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << verdicts[i]->detail << std::endl;
    }
    return all ? 0 : 1;
}
