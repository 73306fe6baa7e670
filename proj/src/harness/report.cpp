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

#include <mosden/harness/report.hpp>

#include <spdlog/fmt/fmt.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace mosden::harness {

void EventLog::append(wire::Json event) { events_.push_back(std::move(event)); }

void EventLog::save(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::trunc);
    for (const auto& e : events_) {
        out << e.dump() << '\n';
    }
    if (!out) {
        raise(ErrorKind::InvalidQuery, "cannot write " + file.string());
    }
}

EventLog EventLog::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        raise(ErrorKind::NotFound, "cannot read event log " + file.string());
    }
    EventLog log;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) {
            continue;
        }
        try {
            log.append(wire::Json::parse(line));
        } catch (const wire::Json::exception& e) {
            raise(ErrorKind::InvalidQuery, file.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return log;
}

namespace {

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

double percentile(std::vector<double> sorted, double q) {
    if (sorted.empty()) {
        return 0.0;
    }
    // Linear interpolation between closest ranks.
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

}// namespace

MetricsReport build_report(const EventLog& log) {
    MetricsReport r;
    std::optional<std::int64_t> start_us, end_us;
    std::map<std::string, std::size_t> index;
    std::map<std::uint64_t, wire::Json> issues;

    try {
        for (const auto& e : log.events()) {
            const auto type = e.at("type").get<std::string>();
            if (type == "run_start") {
                start_us = e.at("t_us").get<std::int64_t>();
                r.scenario = scenario_from_json(e.at("scenario"));
            } else if (type == "run_end") {
                end_us = e.at("t_us").get<std::int64_t>();
                r.failed = r.failed || e.value("failed", false);
            }
        }
        if (!start_us || !end_us) {
            raise(ErrorKind::InvalidQuery, "event log lacks run_start or run_end");
        }
        for (const auto& e : log.events()) {
            const auto type = e.at("type").get<std::string>();
            if (type == "request") {
                RequestSummary s;
                s.id = e.at("request").get<std::string>();
                s.node = e.at("node").get<std::string>();
                s.sensor = e.at("sensor").get<std::string>();
                index[s.id] = r.requests.size();
                r.requests.push_back(s);
            } else if (type == "rt_issue") {
                issues[e.at("seq").get<std::uint64_t>()] = e;
            } else if (type == "rt_response") {
                const auto seq = e.at("seq").get<std::uint64_t>();
                const auto issue = issues.find(seq);
                if (issue == issues.end()) {
                    raise(ErrorKind::InvalidQuery, "response leg " + std::to_string(seq) + " has no issue leg");
                }
                // Only responses inside the measurement window count.
                if (e.at("t_us").get<std::int64_t>() > *end_us) {
                    continue;
                }
                RoundTrip rt;
                rt.request = e.at("request").get<std::string>();
                rt.seq = seq;
                rt.issue_us = issue->second.at("t_us").get<std::int64_t>();
                rt.response_us = e.at("t_us").get<std::int64_t>();
                rt.latency_ms = static_cast<double>(rt.response_us - rt.issue_us) / 1000.0;
                rt.elements = e.at("elements").get<std::size_t>();
                const auto it = index.find(rt.request);
                if (it == index.end()) {
                    raise(ErrorKind::InvalidQuery, "round trip for unknown request " + rt.request);
                }
                auto& s = r.requests[it->second];
                rt.sensor = s.sensor;
                ++s.round_trips;
                s.elements += rt.elements;
                r.round_trips.push_back(rt);
            } else if (type == "connections") {
                const auto it = index.find(e.at("request").get<std::string>());
                if (it != index.end()) {
                    auto& s = r.requests[it->second];
                    s.connections = e.at("connections").get<std::uint64_t>();
                    s.reconnects = e.at("reconnects").get<std::uint64_t>();
                    s.failures = e.at("failures").get<std::uint64_t>();
                }
            } else if (type == "resource") {
                r.resources.push_back({e.at("process").get<std::string>(), e.at("t_ms").get<std::int64_t>(),
                                       e.at("cpu_ms").get<double>(), e.at("rss_bytes").get<std::uint64_t>()});
            } else if (type == "footprint") {
                r.footprints.push_back({e.at("t_ms").get<std::int64_t>(), e.at("records").get<std::uint64_t>(),
                                        e.at("bytes").get<std::uint64_t>()});
            } else if (type == "failure") {
                r.failed = true;
                r.failures.push_back(e.at("detail").get<std::string>());
            }
        }
    } catch (const wire::Json::exception& e) {
        raise(ErrorKind::InvalidQuery, std::string("malformed event: ") + e.what());
    }
    r.duration_ms = static_cast<double>(*end_us - *start_us) / 1000.0;
    std::stable_sort(r.round_trips.begin(), r.round_trips.end(), [](const RoundTrip& a, const RoundTrip& b) {
        return std::tie(a.response_us, a.seq) < std::tie(b.response_us, b.seq);
    });
    std::stable_sort(r.resources.begin(), r.resources.end(), [](const auto& a, const auto& b) {
        return std::tie(a.process, a.t_ms) < std::tie(b.process, b.t_ms);
    });
    return r;
}

std::uint64_t total_round_trips(const MetricsReport& r) {
    std::uint64_t total = 0;
    for (const auto& s : r.requests) {
        total += s.round_trips;
    }
    return total;
}

double time_per_request(const MetricsReport& r) {
    const auto total = total_round_trips(r);
    if (total == 0) {
        raise(ErrorKind::InvalidQuery, "no round trip completed");
    }
    return r.duration_ms / static_cast<double>(total);
}

std::vector<std::pair<std::string, double>> round_trip_share(const MetricsReport& r) {
    const auto total = total_round_trips(r);
    if (total == 0) {
        raise(ErrorKind::InvalidQuery, "no round trip completed");
    }
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : r.requests) {
        out.emplace_back(s.id, 100.0 * static_cast<double>(s.round_trips) / static_cast<double>(total));
    }
    return out;
}

double coefficient_of_variation(const std::vector<double>& values) {
    if (values.empty()) {
        raise(ErrorKind::InvalidQuery, "no values");
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (mean == 0.0) {
        raise(ErrorKind::InvalidQuery, "mean is zero");
    }
    double ss = 0.0;
    for (const double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / n) / mean;
}

LatencyStats latency_stats(const MetricsReport& r) {
    LatencyStats s;
    std::vector<double> lat;
    for (const auto& rt : r.round_trips) {
        lat.push_back(rt.latency_ms);
    }
    if (lat.empty()) {
        return s;
    }
    std::sort(lat.begin(), lat.end());
    s.count = lat.size();
    s.mean_ms = std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size());
    s.median_ms = percentile(lat, 0.5);
    s.p95_ms = percentile(lat, 0.95);
    s.min_ms = lat.front();
    s.max_ms = lat.back();
    return s;
}

double data_points_per_minute(const MetricsReport& r) {
    if (r.duration_ms <= 0.0) {
        return 0.0;
    }
    std::uint64_t elements = 0;
    for (const auto& s : r.requests) {
        elements += s.elements;
    }
    return static_cast<double>(elements) * 60'000.0 / r.duration_ms;
}

std::map<std::string, double> data_points_per_minute_by_node(const MetricsReport& r) {
    std::map<std::string, double> out;
    if (r.duration_ms <= 0.0) {
        return out;
    }
    for (const auto& s : r.requests) {
        out[s.node] += static_cast<double>(s.elements) * 60'000.0 / r.duration_ms;
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> summary(const MetricsReport& r) {
    std::vector<std::pair<std::string, std::string>> rows;
    auto add = [&](std::string k, std::string v) { rows.emplace_back(std::move(k), std::move(v)); };
    const auto total = total_round_trips(r);
    add("scenario", r.scenario.name);
    add("topology", std::string(to_string(r.scenario.topology)));
    add("mode", std::string(sharing::to_string(r.scenario.mode)));
    add("clients", std::to_string(r.scenario.clients));
    add("sensors_per_client", std::to_string(r.scenario.sensors_per_client));
    add("requests", std::to_string(r.requests.size()));
    // Each round trip is logged as two legs: the data request and its response.
    add("sub_requests", std::to_string(2 * r.requests.size()));
    add("duration_ms", fixed(r.duration_ms));
    add("total_round_trips", std::to_string(total));
    add("time_per_request_ms", total > 0 ? fixed(time_per_request(r)) : "");
    const auto lat = latency_stats(r);
    add("latency_mean_ms", fixed(lat.mean_ms));
    add("latency_median_ms", fixed(lat.median_ms));
    add("latency_p95_ms", fixed(lat.p95_ms));
    add("latency_min_ms", fixed(lat.min_ms));
    add("latency_max_ms", fixed(lat.max_ms));
    std::size_t starved = 0;
    std::uint64_t connections = 0, elements = 0;
    for (const auto& s : r.requests) {
        starved += s.round_trips == 0 ? 1 : 0;
        connections += s.connections;
        elements += s.elements;
    }
    if (total > 0) {
        std::vector<double> shares;
        for (const auto& [_, p] : round_trip_share(r)) {
            shares.push_back(p);
        }
        add("share_cv", fixed(coefficient_of_variation(shares)));
    } else {
        add("share_cv", "");
    }
    add("starved_requests", std::to_string(starved));
    add("data_points", std::to_string(elements));
    add("data_points_per_min", fixed(data_points_per_minute(r)));
    for (const auto& [node, rate] : data_points_per_minute_by_node(r)) {
        add("data_points_per_min." + node, fixed(rate));
    }
    add("connections_total", std::to_string(connections));
    add("round_trip_start", r.scenario.mode == sharing::Mode::Push ? "client sends delivery" : "server sends pull");
    add("cpu_unit", "ms");
    add("failed", r.failed ? "true" : "false");
    return rows;
}

void write_csv(const std::vector<std::pair<std::string, std::string>>& rows, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    out << "key,value\n";
    for (const auto& [k, v] : rows) {
        out << k << ',' << v << '\n';
    }
    if (!out) {
        raise(ErrorKind::InvalidQuery, "cannot write " + file.string());
    }
}

void report_csv(const MetricsReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::trunc);
        if (!out) {
            raise(ErrorKind::InvalidQuery, "cannot write " + (dir / name).string());
        }
        return out;
    };
    {
        auto out = open("roundtrips.csv");
        out << "request,sensor,seq,issue_us,response_us,latency_ms,elements\n";
        for (const auto& rt : r.round_trips) {
            out << rt.request << ',' << rt.sensor << ',' << rt.seq << ',' << rt.issue_us << ',' << rt.response_us
                << ',' << fixed(rt.latency_ms) << ',' << rt.elements << '\n';
        }
    }
    {
        auto out = open("resources.csv");
        out << "process,t_ms,cpu_ms,rss_bytes\n";
        for (const auto& s : r.resources) {
            out << s.process << ',' << s.t_ms << ',' << fixed(s.cpu_ms) << ',' << s.rss_bytes << '\n';
        }
    }
    {
        auto out = open("shares.csv");
        out << "request,node,sensor,round_trips,percent,connections,reconnects\n";
        const auto total = total_round_trips(r);
        for (const auto& s : r.requests) {
            const double pct = total ? 100.0 * static_cast<double>(s.round_trips) / static_cast<double>(total) : 0.0;
            out << s.id << ',' << s.node << ',' << s.sensor << ',' << s.round_trips << ',' << fixed(pct) << ','
                << s.connections << ',' << s.reconnects << '\n';
        }
    }
    if (!r.footprints.empty()) {
        auto out = open("footprint.csv");
        out << "t_ms,records,bytes\n";
        for (const auto& f : r.footprints) {
            out << f.t_ms << ',' << f.records << ',' << f.bytes << '\n';
        }
    }
    write_csv(summary(r), dir / "summary.csv");
}

std::vector<std::pair<std::string, std::string>> compare(const MetricsReport& restful, const MetricsReport& push) {
    const auto a = latency_stats(restful);
    const auto b = latency_stats(push);
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("restful_scenario", restful.scenario.name);
    rows.emplace_back("push_scenario", push.scenario.name);
    rows.emplace_back("restful_latency_mean_ms", fixed(a.mean_ms));
    rows.emplace_back("push_latency_mean_ms", fixed(b.mean_ms));
    rows.emplace_back("push_over_restful_latency", a.mean_ms > 0 ? fixed(b.mean_ms / a.mean_ms) : "");
    auto cv = [](const MetricsReport& r) {
        if (total_round_trips(r) == 0) {
            return std::string();
        }
        std::vector<double> shares;
        for (const auto& [_, p] : round_trip_share(r)) {
            shares.push_back(p);
        }
        return fixed(coefficient_of_variation(shares));
    };
    rows.emplace_back("restful_share_cv", cv(restful));
    rows.emplace_back("push_share_cv", cv(push));
    rows.emplace_back("restful_total_round_trips", std::to_string(total_round_trips(restful)));
    rows.emplace_back("push_total_round_trips", std::to_string(total_round_trips(push)));
    return rows;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        raise(ErrorKind::InvalidQuery, "fit needs at least two paired points");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        raise(ErrorKind::InvalidQuery, "fit needs distinct x values");
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

}// namespace mosden::harness
