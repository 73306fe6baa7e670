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
#include <mosden/core/wire.hpp>

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mosden::engine {

/// Floor for a silent window; keeps the level finite.
inline constexpr double kSilenceFloorDb = -120.0;

struct Identity {
    friend bool operator==(const Identity&, const Identity&) = default;
};

/// Sound level of a window of amplitude samples: 20*log10(rms / reference).
struct NoiseLevelDb {
    double reference = 1.0;
    std::size_t window = 1;
    std::string field;// empty: first numeric field

    friend bool operator==(const NoiseLevelDb&, const NoiseLevelDb&) = default;
};

/// Mean of every numeric field over the window; text fields keep the newest value.
struct MovingAverage {
    std::size_t window = 1;

    friend bool operator==(const MovingAverage&, const MovingAverage&) = default;
};

/// Drops elements whose `field` lies outside [min, max].
struct Threshold {
    std::string field;
    double min = 0.0;
    double max = 0.0;

    friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct Scale {
    std::string field;
    double factor = 1.0;

    friend bool operator==(const Scale&, const Scale&) = default;
};

using ProcessorSpec = std::variant<Identity, NoiseLevelDb, MovingAverage, Threshold, Scale>;
using Chain = std::vector<ProcessorSpec>;

std::size_t window_length(const ProcessorSpec& p);

/// Largest single window in the chain (1 for an empty chain).
std::size_t max_window(std::span<const ProcessorSpec> chain);

/// Raw elements needed for the newest input to survive every stage.
std::size_t required_window(std::span<const ProcessorSpec> chain);

/// Output structure a processor produces from `input`. Throws
/// InvalidDescriptor for bad parameters or unknown field references.
Fields output_of(const ProcessorSpec& p, const Fields& input);
Fields chain_output(std::span<const ProcessorSpec> chain, const Fields& input);

/// Applies one processor to the newest window_length(p) elements of
/// `window`. Returns nullopt when the element is dropped.
std::optional<StreamElement> apply(const ProcessorSpec& p, const Fields& input, std::span<const StreamElement> window);

/// Runs the chain over a window of raw elements (oldest first). Each stage
/// slides its own window over the previous stage's output sequence; the
/// result is the chain's output for the newest raw element, or nullopt if a
/// stage dropped it or had too little history. Throws InvalidQuery when the
/// window is empty, shorter than max_window, or mismatches `input`.
std::optional<StreamElement> process(std::span<const ProcessorSpec> chain, const Fields& input,
                                     std::span<const StreamElement> window);

/// Closed-form level of a set of amplitudes.
double level_db(std::span<const double> amplitudes, double reference);

wire::Json to_json(const ProcessorSpec& p);
ProcessorSpec processor_from_json(const wire::Json& j);

}// namespace mosden::engine
