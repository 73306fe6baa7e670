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
#include <mosden/api/registry.hpp>
#include <mosden/core/clock.hpp>
#include <mosden/engine/config.hpp>
#include <mosden/harness/resources.hpp>
#include <mosden/harness/runner.hpp>
#include <mosden/plugin/descriptor.hpp>

#include <spawn.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

extern char** environ;

namespace mosden::harness {

namespace fs = std::filesystem;

ChildProcess::ChildProcess(std::string name, const std::vector<std::string>& argv, const fs::path& log_file)
    : name_(std::move(name)), log_file_(log_file) {
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
    std::vector<char*> args;
    for (const auto& a : argv) {
        args.push_back(const_cast<char*>(a.c_str()));
    }
    args.push_back(nullptr);
    const int rc = posix_spawn(&pid_, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
        raise(ErrorKind::PeerUnreachable, "cannot spawn " + name_ + ": " + std::strerror(rc));
    }
}

ChildProcess::~ChildProcess() {
    if (!exited_) {
        terminate(5);
    }
}

bool ChildProcess::exited() {
    if (exited_) {
        return true;
    }
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == pid_) {
        exited_ = true;
        status_ = status;
    }
    return exited_;
}

int ChildProcess::terminate(int grace_s) {
    if (exited()) {
        return status_;
    }
    kill(pid_, SIGTERM);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(grace_s);
    while (std::chrono::steady_clock::now() < deadline) {
        if (exited()) {
            return status_;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    spdlog::warn("{} ignored SIGTERM for {} s, killing", name_, grace_s);
    kill(pid_, SIGKILL);
    waitpid(pid_, &status_, 0);
    exited_ = true;
    return status_;
}

std::string ChildProcess::log_tail(std::size_t max_bytes) const {
    std::ifstream in(log_file_);
    std::stringstream text;
    text << in.rdbuf();
    auto s = text.str();
    return s.size() > max_bytes ? s.substr(s.size() - max_bytes) : s;
}

namespace {

struct SensorKind {
    const char* name;
    const char* builtin;
    const char* parameters;// JSON without the seed
    bool noise_db;
};

// Simulated stand-ins for the phone sensors of a sensing deployment.
const SensorKind kKinds[] = {
    {"accelerometer", "accelerometer_sim", R"({"noise":0.05})", false},
    {"microphone", "microphone_sim", R"({"amplitude":0.1})", true},
    {"light", "light_sim", R"({})", false},
    {"pressure", "pressure_sim", R"({})", false},
    {"temperature", "random_walk", R"({"start":21.0,"step":0.05})", false},
    {"humidity", "random_walk", R"({"start":45.0,"step":0.2})", false},
    {"orientation", "sine_wave", R"({"amplitude":180.0,"period_ms":20000})", false},
    {"proximity", "gaussian_noise", R"({"mean":5.0,"stddev":1.0})", false},
};

void write_json_file(const fs::path& file, const wire::Json& j) {
    std::ofstream out(file, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) {
        raise(ErrorKind::InvalidQuery, "cannot write " + file.string());
    }
}

std::string wait_ready(ChildProcess& child, const fs::path& ready_file, int timeout_s) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(timeout_s);
    while (std::chrono::steady_clock::now() < deadline) {
        if (fs::exists(ready_file)) {
            std::ifstream in(ready_file);
            std::stringstream text;
            text << in.rdbuf();
            try {
                return wire::Json::parse(text.str()).at("address").get<std::string>();
            } catch (const wire::Json::exception&) {
                // Half-written; the child renames it into place, so retry.
            }
        }
        if (child.exited()) {
            raise(ErrorKind::PeerUnreachable,
                  child.name() + " exited during startup (status " + std::to_string(child.exit_status()) +
                      "):\n" + child.log_tail());
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    raise(ErrorKind::PeerUnreachable, child.name() + " not ready after " + std::to_string(timeout_s) + " s:\n" +
                                          child.log_tail());
}

std::string client_id(std::size_t i) { return fmt::format("client-{}", i + 1); }

}// namespace

void write_client_sensors(const ScenarioConfig& scenario, std::size_t client, const fs::path& plugins_dir,
                          const fs::path& vsensors_dir) {
    fs::create_directories(plugins_dir);
    fs::create_directories(vsensors_dir);
    std::mt19937_64 rng(scenario.seed * 1'000'003ULL + client);
    std::vector<std::size_t> deck;
    for (std::size_t j = 0; j < scenario.sensors_per_client; ++j) {
        deck.push_back(j % std::size(kKinds));
    }
    std::shuffle(deck.begin(), deck.end(), rng);

    for (std::size_t j = 0; j < scenario.sensors_per_client; ++j) {
        const auto& kind = kKinds[deck[j]];
        const auto name = fmt::format("{}_{:02}", kind.name, j);

        plugin::PluginDescriptor d;
        d.plugin_id = name;
        d.display_name = fmt::format("{} #{}", kind.name, j);
        d.output = plugin::builtin_output(kind.builtin);
        d.min_sampling_interval_ms = 10;
        auto params = wire::Json::parse(kind.parameters);
        const auto seed = rng() >> 1;
        if (std::string_view(kind.builtin) != "sine_wave") {
            params["seed"] = seed;
        }
        d.source = plugin::BuiltinSource{kind.builtin, params};
        write_json_file(plugins_dir / (name + ".plugin"), plugin::to_json(d));

        engine::VirtualSensorConfig c;
        c.name = SensorName(name);
        c.plugin_id = name;
        c.sampling_interval_ms = scenario.sampling_interval_ms;
        c.history_size = scenario.history_size;
        if (kind.noise_db) {
            c.processors.push_back(engine::NoiseLevelDb{1.0, 1, "amplitude"});
        }
        write_json_file(vsensors_dir / (name + ".vsensor"), engine::to_json(c));
    }
}

RunResult run_scenario(const ScenarioConfig& scenario, const RunOptions& options) {
    validate(scenario);
    RunResult result;
    result.dir = options.output_dir;
    fs::create_directories(result.dir / "logs");
    const auto exe = options.executable.empty() ? fs::read_symlink("/proc/self/exe") : options.executable;
    auto& log = result.log;
    write_json_file(result.dir / "scenario.json", to_json(scenario));

    std::vector<std::unique_ptr<ChildProcess>> children;
    auto spawn = [&](const std::string& name, std::vector<std::string> args) -> std::string {
        const auto ready = result.dir / (name + ".ready");
        fs::remove(ready);
        args.insert(args.begin(), exe.string());
        args.insert(args.end(), {"--port", "0", "--ready-file", ready.string(), "--log-level", options.log_level});
        children.push_back(std::make_unique<ChildProcess>(name, args, result.dir / "logs" / (name + ".log")));
        const auto address = wait_ready(*children.back(), ready, options.startup_timeout_s);
        log.append({{"type", "process"}, {"name", name}, {"pid", children.back()->pid()}, {"address", address}});
        return address;
    };
    auto stop_all = [&] {
        // Server first, so it stops pulling before its peers disappear.
        for (auto it = children.rbegin(); it != children.rend(); ++it) {
            const int status = (*it)->terminate();
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
                spdlog::warn("{} exited with status {}", (*it)->name(), status);
            }
        }
    };

    std::vector<std::string> client_addresses;
    std::string server;
    std::int64_t start_us = 0;
    try {
        const auto registry = spawn("registry", {"registry", "serve"});
        for (std::size_t i = 0; i < scenario.clients; ++i) {
            const auto id = client_id(i);
            const auto dir = result.dir / id;
            write_client_sensors(scenario, i, dir / "plugins", dir / "vsensors");
            client_addresses.push_back(spawn(
                id, {"node", "serve", "--node-id", id, "--registry", registry, "--group-tag", "clients",
                     "--plugins-dir", (dir / "plugins").string(), "--vsensors-dir", (dir / "vsensors").string(),
                     "--workers", std::to_string(std::max<std::size_t>(64, scenario.sensors_per_client + 16))}));
        }
        server = spawn("server", {"node", "serve", "--node-id", "server", "--registry", registry, "--group-tag",
                                  "servers", "--workers", std::to_string(scenario.server.workers), "--max-queued",
                                  std::to_string(scenario.server.max_queued), "--puller-workers",
                                  std::to_string(scenario.server.puller_workers)});

        // Everything is discovered through the registry, as a real server would.
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(options.startup_timeout_s);
        for (;;) {
            const auto nodes = api::lookup(registry, std::string("clients"));
            const bool complete = nodes.size() == scenario.clients &&
                                  std::all_of(nodes.begin(), nodes.end(), [&](const auto& n) {
                                      return n.sensors.size() == scenario.sensors_per_client;
                                  });
            if (complete) {
                break;
            }
            if (std::chrono::steady_clock::now() > deadline) {
                std::string detail = "clients did not all register their sensors in time";
                for (const auto& c : children) {
                    detail += "\n--- " + c->name() + ":\n" + c->log_tail(600);
                }
                raise(ErrorKind::PeerUnreachable, detail);
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }

        start_us = monotonic_us();
        log.append({{"type", "run_start"}, {"t_us", start_us}, {"scenario", to_json(scenario)}});
        api::PeerClient control(server, false, 120'000);
        std::vector<std::string> request_ids;
        if (scenario.requests > 0) {
            const auto body = control.post_json("/v1/consumer/workload",
                                                {{"requests", scenario.requests},
                                                 {"mode", std::string(sharing::to_string(scenario.mode))},
                                                 {"interval_ms", scenario.sampling_interval_ms},
                                                 {"tag", "clients"}});
            for (const auto& r : body.at("requests")) {
                request_ids.push_back(r.at("id").get<std::string>());
                log.append({{"type", "request"},
                            {"request", r.at("id")},
                            {"node", r.at("node")},
                            {"sensor", r.at("sensor")},
                            {"subscription", r.at("subscription")},
                            {"mode", r.at("mode")}});
            }
        }

        const auto end_at = start_us + scenario.duration_s * 1'000'000;
        auto next_sample = start_us;
        bool died = false;
        while (!died) {
            const auto now = monotonic_us();
            if (now >= end_at) {
                break;
            }
            if (now >= next_sample) {
                const auto t_ms = (now - start_us) / 1000;
                for (const auto& c : children) {
                    if (auto u = sample_process(c->pid())) {
                        log.append({{"type", "resource"},
                                    {"process", c->name()},
                                    {"t_ms", t_ms},
                                    {"cpu_ms", u->cpu_ms},
                                    {"rss_bytes", u->rss_bytes}});
                    } else {
                        log.append({{"type", "sample_gap"}, {"process", c->name()}, {"t_ms", t_ms}});
                    }
                }
                if (scenario.storage_probe) {
                    std::uint64_t records = 0, bytes = 0;
                    for (const auto& address : client_addresses) {
                        const auto m = api::PeerClient(address, false).get_json("/v1/metrics");
                        bytes += m.at("footprint_bytes").get<std::uint64_t>();
                        for (const auto& s : m.at("sensors")) {
                            records += s.value("stored_elements", std::uint64_t{0});
                        }
                    }
                    log.append({{"type", "footprint"}, {"t_ms", t_ms}, {"records", records}, {"bytes", bytes}});
                }
                next_sample += scenario.resource_sample_ms * 1000;
            }
            for (const auto& c : children) {
                if (c->exited()) {
                    log.append({{"type", "failure"},
                                {"detail", c->name() + " died mid-run with status " + std::to_string(c->exit_status())}});
                    died = true;
                }
            }
            const auto sleep_us = std::min(next_sample, end_at) - monotonic_us();
            std::this_thread::sleep_for(std::chrono::microseconds(std::clamp<std::int64_t>(sleep_us, 0, 100'000)));
        }

        std::int64_t end_us = 0;
        if (scenario.requests > 0 && !children.back()->exited()) {
            // The measurement window closes here; teardown traffic is not counted.
            end_us = monotonic_us();
            control.del("/v1/consumer/workload");
            const auto events = control.get_json("/v1/consumer/events").at("events");
            for (const auto& e : events) {
                const auto& id = request_ids.at(e.at("request").get<std::size_t>());
                log.append({{"type", "rt_issue"}, {"request", id}, {"seq", e.at("seq")}, {"t_us", e.at("issue_us")}});
                log.append({{"type", "rt_response"},
                            {"request", id},
                            {"seq", e.at("seq")},
                            {"t_us", e.at("response_us")},
                            {"elements", e.at("elements")}});
            }
            const auto requests = control.get_json("/v1/consumer/requests").at("requests");
            for (const auto& r : requests) {
                log.append({{"type", "connections"},
                            {"request", r.at("id")},
                            {"connections", r.at("connections")},
                            {"reconnects", r.at("reconnects")},
                            {"failures", r.at("failures")}});
            }
        } else {
            end_us = monotonic_us();
        }
        log.append({{"type", "run_end"}, {"t_us", end_us}, {"failed", died}});
    } catch (...) {
        stop_all();
        if (start_us != 0) {
            log.save(result.dir / "events.jsonl");
        }
        throw;
    }
    stop_all();

    log.save(result.dir / "events.jsonl");
    result.report = build_report(log);
    report_csv(result.report, result.dir);
    return result;
}

}// namespace mosden::harness
