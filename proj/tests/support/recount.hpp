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

// Independent recomputation of run statistics straight from events.jsonl.
// Shares no code with the report builder beyond the JSON parser.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace mosden::test {

struct Recount {
    std::vector<std::string> order;// requests in log order
    std::map<std::string, std::uint64_t> trips;
    std::uint64_t total = 0;
    double duration_ms = 0.0;
    double min_latency_ms = 0.0;
    double max_latency_ms = 0.0;
    double mean_latency_ms = 0.0;

    double time_per_request() const { return duration_ms / static_cast<double>(total); }
    double share(const std::string& request) const {
        return 100.0 * static_cast<double>(trips.at(request)) / static_cast<double>(total);
    }
};

inline Recount recount_lines(const std::vector<std::string>& lines) {
    using nlohmann::json;
    std::vector<json> events;
    for (const auto& l : lines) {
        if (!l.empty()) {
            events.push_back(json::parse(l));
        }
    }
    std::int64_t start = 0, end = 0;
    for (const auto& e : events) {
        if (e["type"] == "run_start") {
            start = e["t_us"];
        }
        if (e["type"] == "run_end") {
            end = e["t_us"];
        }
    }
    Recount r;
    r.duration_ms = static_cast<double>(end - start) / 1000.0;
    std::map<std::uint64_t, std::int64_t> issued;
    double sum = 0.0;
    bool first = true;
    for (const auto& e : events) {
        if (e["type"] == "request") {
            r.order.push_back(e["request"]);
            r.trips[e["request"]] = 0;
        } else if (e["type"] == "rt_issue") {
            issued[e["seq"].get<std::uint64_t>()] = e["t_us"];
        } else if (e["type"] == "rt_response" && e["t_us"].get<std::int64_t>() <= end) {
            const auto lat =
                static_cast<double>(e["t_us"].get<std::int64_t>() - issued.at(e["seq"].get<std::uint64_t>())) / 1000.0;
            ++r.trips[e["request"]];
            ++r.total;
            sum += lat;
            if (first || lat < r.min_latency_ms) {
                r.min_latency_ms = lat;
            }
            if (first || lat > r.max_latency_ms) {
                r.max_latency_ms = lat;
            }
            first = false;
        }
    }
    r.mean_latency_ms = r.total ? sum / static_cast<double>(r.total) : 0.0;
    return r;
}

inline Recount recount_file(const std::filesystem::path& events_jsonl) {
    std::ifstream in(events_jsonl);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) {
        lines.push_back(l);
    }
    return recount_lines(lines);
}

}// namespace mosden::test
