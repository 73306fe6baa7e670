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

#include <mosden/core/types.hpp>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <vector>

namespace mosden::storage {

// On-disk layout, one directory per sensor:
//
//   <data_dir>/<sensor>/meta.json        {"format_version":1,"output":[...],"history_size":N}
//   <data_dir>/<sensor>/seg-<n>.journal  "MOSJ" + u32le version, then records
//
// A record is a u32le payload length followed by the wire-encoded element.
// A segment holds at most history_size records; a segment is deleted once
// every record in it has been evicted from the ring.

inline constexpr std::uint32_t kJournalVersion = 1;
inline constexpr std::size_t kSegmentHeaderBytes = 8;
inline constexpr std::size_t kRecordPrefixBytes = 4;

std::size_t record_bytes(const StreamElement& element);

class Journal {
  public:
    Journal(std::filesystem::path directory, std::size_t segment_capacity);
    ~Journal();

    Journal(const Journal&) = delete;
    Journal& operator=(const Journal&) = delete;

    /// Reads back every complete record, truncating a torn tail.
    std::vector<StreamElement> recover();

    void write_meta(const Fields& output, std::size_t history_size);
    void append(const StreamElement& element);

    /// Deletes segments whose records all precede `first_retained`, an index
    /// in the sequence of records appended since the journal was reset.
    void release_before(std::uint64_t first_retained);

    /// Removes every segment and starts from an empty journal.
    void reset(std::size_t segment_capacity);
    void remove_all();

    std::uint64_t disk_bytes() const;

  private:
    struct Segment {
        std::uint64_t number;
        std::uint64_t first_index;
        std::uint64_t count;
        std::filesystem::path path;
    };

    void open_new_segment();
    void close_fd();

    std::filesystem::path directory_;
    std::size_t segment_capacity_;
    std::deque<Segment> segments_;
    std::uint64_t next_index_ = 0;
    int fd_ = -1;
};

}// namespace mosden::storage
