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

#include <sys/types.h>

#include <cstdint>
#include <optional>

namespace mosden::harness {

struct ProcessUsage {
    double cpu_ms = 0.0;// cumulative user + system time
    std::uint64_t rss_bytes = 0;
};

/// Reads /proc/<pid>/stat. CPU time is converted from clock ticks to ms.
/// Returns nullopt when the process is gone or unreadable.
std::optional<ProcessUsage> sample_process(pid_t pid);

}// namespace mosden::harness
