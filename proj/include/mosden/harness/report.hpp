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

#include <mosden/harness/scenario.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mosden::harness {

/// The raw event log of a run: one JSON object per line, in the order the
/// orchestrator wrote them. Every derived statistic is computed from it.
class EventLog {
  public:
    void append(wire::Json event);
    const std::vector<wire::Json>& events() const { return events_; }

    void save(const std::filesystem::path& file) const;
    static EventLog load(const std::filesystem::path& file);

  private:
    std::vector<wire::Json> events_;
};

struct RoundTrip {
    std::string request;
    std::string sensor;
    std::uint64_t seq = 0;
    std::int64_t issue_us = 0;
    std::int64_t response_us = 0;
    double latency_ms = 0.0;
    std::size_t elements = 0;
};

struct RequestSummary {
    std::string id;
    std::string node;
    std::string sensor;
    std::uint64_t round_trips = 0;// S_i
    std::uint64_t elements = 0;
    std::uint64_t connections = 0;
    std::uint64_t reconnects = 0;
    std::uint64_t failures = 0;
};

struct ResourceSample {
    std::string process;
    std::int64_t t_ms = 0;// since run start
    double cpu_ms = 0.0;  // cumulative user + system time
    std::uint64_t rss_bytes = 0;
};

struct FootprintSample {
    std::int64_t t_ms = 0;
    std::uint64_t records = 0;
    std::uint64_t bytes = 0;
};

struct MetricsReport {
    ScenarioConfig scenario;
    double duration_ms = 0.0;
    std::vector<RequestSummary> requests;// workload order
    std::vector<RoundTrip> round_trips;  // response order
    std::vector<ResourceSample> resources;
    std::vector<FootprintSample> footprints;
    bool failed = false;
    std::vector<std::string> failures;
};

/// Rebuilds the report from a run's raw event log. Throws InvalidQuery for
/// a log without run_start/run_end.
MetricsReport build_report(const EventLog& log);

std::uint64_t total_round_trips(const MetricsReport& r);

/// Duration divided by total completed round trips, in ms.
/// Throws InvalidQuery when no round trip completed.
double time_per_request(const MetricsReport& r);

/// 100 * S_i / sum S, per request in workload order. Throws InvalidQuery
/// when no round trip completed.
std::vector<std::pair<std::string, double>> round_trip_share(const MetricsReport& r);

/// Population standard deviation over mean; 0 for a single value.
double coefficient_of_variation(const std::vector<double>& values);

struct LatencyStats {
    std::size_t count = 0;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
};

LatencyStats latency_stats(const MetricsReport& r);

/// Elements received per minute, overall and per client node.
double data_points_per_minute(const MetricsReport& r);
std::map<std::string, double> data_points_per_minute_by_node(const MetricsReport& r);

/// Ordered key/value pairs written to summary.csv.
std::vector<std::pair<std::string, std::string>> summary(const MetricsReport& r);

/// Writes roundtrips.csv, resources.csv, shares.csv, summary.csv (and
/// footprint.csv when sampled). Rows are in a fixed order, so the same
/// report always produces the same bytes.
void report_csv(const MetricsReport& r, const std::filesystem::path& dir);

/// Restful-versus-push comparison of two runs, written to comparison.csv.
std::vector<std::pair<std::string, std::string>> compare(const MetricsReport& restful, const MetricsReport& push);
void write_csv(const std::vector<std::pair<std::string, std::string>>& rows, const std::filesystem::path& file);

/// Least-squares line through (x, y) and its coefficient of determination.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}// namespace mosden::harness
