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

#include <mosden/harness/resources.hpp>

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

namespace mosden::harness {

std::optional<ProcessUsage> sample_process(pid_t pid) {
    std::ifstream in("/proc/" + std::to_string(pid) + "/stat");
    std::string line;
    if (!in || !std::getline(in, line)) {
        return std::nullopt;
    }
    // The command name may contain spaces; fields resume after the last ')'.
    const auto close = line.rfind(')');
    if (close == std::string::npos) {
        return std::nullopt;
    }
    std::istringstream fields(line.substr(close + 2));
    std::string f;
    // Fields from 3 (state) on: utime is 14, stime 15, rss 24.
    unsigned long long utime = 0, stime = 0;
    long long rss_pages = 0;
    for (int i = 3; i <= 24 && fields >> f; ++i) {
        if (i == 14) {
            utime = std::stoull(f);
        } else if (i == 15) {
            stime = std::stoull(f);
        } else if (i == 24) {
            rss_pages = std::stoll(f);
        }
    }
    if (!fields) {
        return std::nullopt;
    }
    static const double ticks = static_cast<double>(sysconf(_SC_CLK_TCK));
    static const long page = sysconf(_SC_PAGESIZE);
    ProcessUsage u;
    u.cpu_ms = static_cast<double>(utime + stime) * 1000.0 / ticks;
    u.rss_bytes = static_cast<std::uint64_t>(std::max(0LL, rss_pages)) * static_cast<std::uint64_t>(page);
    return u;
}

}// namespace mosden::harness
