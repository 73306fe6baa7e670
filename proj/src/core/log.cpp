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

#include <mosden/core/log.hpp>

#include <spdlog/sinks/stdout_sinks.h>

namespace mosden {

void setup_logging(std::string_view level) {
    spdlog::drop("mosden");
    auto logger = spdlog::stderr_logger_mt("mosden");
    logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e level=%l pid=%P %v");
    auto lvl = spdlog::level::from_str(std::string(level));
    if (lvl == spdlog::level::off && level != "off") {
        lvl = spdlog::level::info;
    }
    logger->set_level(lvl);
    spdlog::set_default_logger(std::move(logger));
}

}// namespace mosden
