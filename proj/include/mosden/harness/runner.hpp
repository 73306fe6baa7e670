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

#include <mosden/harness/report.hpp>
#include <mosden/harness/scenario.hpp>

#include <sys/types.h>

#include <filesystem>
#include <string>
#include <vector>

namespace mosden::harness {

struct RunOptions {
    std::filesystem::path executable;// the mosden binary; empty = this process's binary
    std::filesystem::path output_dir;// created if missing
    std::string log_level = "warn";  // passed to every child
    int startup_timeout_s = 30;
};

struct RunResult {
    std::filesystem::path dir;
    EventLog log;
    MetricsReport report;
};

/// Spawns registry, clients and server as separate processes, drives the
/// workload for duration_s, stops everything and persists events.jsonl plus
/// the CSV report. Throws InvalidQuery for a bad scenario and
/// PeerUnreachable when the topology fails to come up; a child that dies
/// mid-run is recorded and the run marked failed.
RunResult run_scenario(const ScenarioConfig& scenario, const RunOptions& options);

/// Writes the plugin descriptors and virtual-sensor configs of one client.
/// Sensor kinds are dealt from the seeded scenario RNG.
void write_client_sensors(const ScenarioConfig& scenario, std::size_t client,
                          const std::filesystem::path& plugins_dir, const std::filesystem::path& vsensors_dir);

/// A child process of the orchestrator, with stdout/stderr in `log_file`.
class ChildProcess {
  public:
    ChildProcess(std::string name, const std::vector<std::string>& argv, const std::filesystem::path& log_file);
    ~ChildProcess();

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    const std::string& name() const { return name_; }
    pid_t pid() const { return pid_; }
    /// Non-blocking; true once the process has exited (status kept).
    bool exited();
    int exit_status() const { return status_; }
    /// SIGTERM, then SIGKILL after `grace_s`. Returns the exit status.
    int terminate(int grace_s = 15);
    std::string log_tail(std::size_t max_bytes = 2000) const;

  private:
    std::string name_;
    std::filesystem::path log_file_;
    pid_t pid_ = -1;
    bool exited_ = false;
    int status_ = 0;
};

}// namespace mosden::harness
