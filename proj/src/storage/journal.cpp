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
#include <mosden/core/wire.hpp>
#include <mosden/storage/journal.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace mosden::storage {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic{'M', 'O', 'S', 'J'};

void put_u32(char* out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    }
}

std::uint32_t get_u32(const char* in) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[i])) << (8 * i);
    }
    return v;
}

void write_all(int fd, const char* data, std::size_t n, const fs::path& path) {
    while (n > 0) {
        const auto written = ::write(fd, data, n);
        if (written < 0) {
            if (errno == EINTR) {
                continue;
            }
            raise(ErrorKind::InvalidQuery, "journal write to " + path.string() + " failed: " + std::strerror(errno));
        }
        data += written;
        n -= static_cast<std::size_t>(written);
    }
}

std::string segment_name(std::uint64_t number) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "seg-%08llu.journal", static_cast<unsigned long long>(number));
    return buf;
}

std::optional<std::uint64_t> segment_number(const fs::path& p) {
    const auto name = p.filename().string();
    if (name.size() != 20 || !name.starts_with("seg-") || !name.ends_with(".journal")) {
        return std::nullopt;
    }
    try {
        return std::stoull(name.substr(4, 8));
    } catch (...) {
        return std::nullopt;
    }
}

}// namespace

std::size_t record_bytes(const StreamElement& element) { return kRecordPrefixBytes + wire::encode(element).size(); }

Journal::Journal(fs::path directory, std::size_t segment_capacity)
    : directory_(std::move(directory)), segment_capacity_(std::max<std::size_t>(1, segment_capacity)) {
    fs::create_directories(directory_);
}

Journal::~Journal() { close_fd(); }

void Journal::close_fd() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::vector<StreamElement> Journal::recover() {
    close_fd();
    segments_.clear();
    next_index_ = 0;

    std::vector<std::pair<std::uint64_t, fs::path>> found;
    for (const auto& entry : fs::directory_iterator(directory_)) {
        if (auto n = segment_number(entry.path())) {
            found.emplace_back(*n, entry.path());
        }
    }
    std::sort(found.begin(), found.end());

    std::vector<StreamElement> out;
    bool torn = false;
    for (const auto& [number, path] : found) {
        if (torn) {
            fs::remove(path);
            continue;
        }
        std::ifstream in(path, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string data = buf.str();

        std::size_t good = 0;
        std::uint64_t count = 0;
        if (data.size() >= kSegmentHeaderBytes && std::equal(kMagic.begin(), kMagic.end(), data.begin()) &&
            get_u32(data.data() + 4) == kJournalVersion) {
            good = kSegmentHeaderBytes;
            while (good + kRecordPrefixBytes <= data.size()) {
                const auto len = get_u32(data.data() + good);
                if (good + kRecordPrefixBytes + len > data.size()) {
                    break;
                }
                try {
                    out.push_back(wire::decode(std::string_view(data).substr(good + kRecordPrefixBytes, len)));
                } catch (const EngineError&) {
                    break;
                }
                good += kRecordPrefixBytes + len;
                ++count;
            }
        }
        if (good != data.size()) {
            spdlog::warn("journal {} torn at byte {} of {}, discarding tail", path.string(), good, data.size());
            torn = true;
            if (good == 0) {
                fs::remove(path);
                continue;
            }
            fs::resize_file(path, good);
        }
        segments_.push_back({number, next_index_, count, path});
        next_index_ += count;
    }
    return out;
}

void Journal::write_meta(const Fields& output, std::size_t history_size) {
    const wire::Json meta{{"format_version", kJournalVersion},
                          {"output", wire::to_json(output)},
                          {"history_size", history_size}};
    const auto tmp = directory_ / "meta.json.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << meta.dump(2) << '\n';
    }
    fs::rename(tmp, directory_ / "meta.json");
}

void Journal::open_new_segment() {
    close_fd();
    const std::uint64_t number = segments_.empty() ? 1 : segments_.back().number + 1;
    const auto path = directory_ / segment_name(number);
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        raise(ErrorKind::InvalidQuery, "cannot open journal segment " + path.string() + ": " + std::strerror(errno));
    }
    char header[kSegmentHeaderBytes];
    std::copy(kMagic.begin(), kMagic.end(), header);
    put_u32(header + 4, kJournalVersion);
    write_all(fd_, header, sizeof header, path);
    segments_.push_back({number, next_index_, 0, path});
}

void Journal::append(const StreamElement& element) {
    if (segments_.empty() || segments_.back().count >= segment_capacity_) {
        open_new_segment();
    } else if (fd_ < 0) {
        const auto& path = segments_.back().path;
        fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
        if (fd_ < 0) {
            raise(ErrorKind::InvalidQuery, "cannot reopen journal segment " + path.string());
        }
    }
    const auto payload = wire::encode(element);
    std::string record(kRecordPrefixBytes, '\0');
    put_u32(record.data(), static_cast<std::uint32_t>(payload.size()));
    record += payload;
    // One write per record: a crash leaves at most one torn tail.
    write_all(fd_, record.data(), record.size(), segments_.back().path);
    ++segments_.back().count;
    ++next_index_;
}

void Journal::release_before(std::uint64_t first_retained) {
    while (segments_.size() > 1) {
        const auto& s = segments_.front();
        if (s.first_index + s.count > first_retained) {
            break;
        }
        std::error_code ec;
        fs::remove(s.path, ec);
        segments_.pop_front();
    }
}

void Journal::reset(std::size_t segment_capacity) {
    remove_all();
    fs::create_directories(directory_);
    segment_capacity_ = std::max<std::size_t>(1, segment_capacity);
}

void Journal::remove_all() {
    close_fd();
    for (const auto& s : segments_) {
        std::error_code ec;
        fs::remove(s.path, ec);
    }
    segments_.clear();
    next_index_ = 0;
}

std::uint64_t Journal::disk_bytes() const {
    std::uint64_t total = 0;
    for (const auto& s : segments_) {
        std::error_code ec;
        const auto n = fs::file_size(s.path, ec);
        if (!ec) {
            total += n;
        }
    }
    return total;
}

}// namespace mosden::storage
