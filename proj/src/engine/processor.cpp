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
#include <mosden/engine/processor.hpp>

#include <algorithm>
#include <cmath>

namespace mosden::engine {

namespace {

template<class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template<class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t numeric_field_index(const Fields& input, const std::string& field, const char* processor) {
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i].name == field) {
            if (input[i].kind != FieldKind::Numeric) {
                raise(ErrorKind::InvalidDescriptor,
                      std::string(processor) + ": field '" + field + "' is not numeric");
            }
            return i;
        }
    }
    raise(ErrorKind::InvalidDescriptor, std::string(processor) + ": unknown field '" + field + "'");
}

std::size_t noise_field_index(const NoiseLevelDb& p, const Fields& input) {
    if (!p.field.empty()) {
        return numeric_field_index(input, p.field, "noise_level_db");
    }
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i].kind == FieldKind::Numeric) {
            return i;
        }
    }
    raise(ErrorKind::InvalidDescriptor, "noise_level_db: input has no numeric field");
}

double number_param(const wire::Json& j, const char* key, std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        raise(ErrorKind::InvalidDescriptor, std::string("processor field '") + key + "' is required");
    }
    const auto& v = j.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
        raise(ErrorKind::InvalidDescriptor, std::string("processor field '") + key + "' must be a finite number");
    }
    return v.get<double>();
}

std::size_t window_param(const wire::Json& j) {
    if (!j.contains("window")) {
        raise(ErrorKind::InvalidDescriptor, "processor field 'window' is required");
    }
    const auto& v = j.at("window");
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        raise(ErrorKind::InvalidDescriptor, "processor field 'window' must be an integer >= 1");
    }
    return v.get<std::size_t>();
}

std::string string_param(const wire::Json& j, const char* key, bool required) {
    if (!j.contains(key)) {
        if (required) {
            raise(ErrorKind::InvalidDescriptor, std::string("processor field '") + key + "' is required");
        }
        return {};
    }
    if (!j.at(key).is_string()) {
        raise(ErrorKind::InvalidDescriptor, std::string("processor field '") + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
}

}// namespace

std::size_t window_length(const ProcessorSpec& p) {
    return std::visit(overloaded{
                          [](const NoiseLevelDb& n) { return n.window; },
                          [](const MovingAverage& m) { return m.window; },
                          [](const auto&) { return std::size_t{1}; },
                      },
                      p);
}

std::size_t max_window(std::span<const ProcessorSpec> chain) {
    std::size_t w = 1;
    for (const auto& p : chain) {
        w = std::max(w, window_length(p));
    }
    return w;
}

std::size_t required_window(std::span<const ProcessorSpec> chain) {
    std::size_t w = 1;
    for (const auto& p : chain) {
        w += window_length(p) - 1;
    }
    return w;
}

Fields output_of(const ProcessorSpec& p, const Fields& input) {
    return std::visit(
        overloaded{
            [&](const Identity&) { return input; },
            [&](const NoiseLevelDb& n) {
                if (!(n.reference > 0.0) || !std::isfinite(n.reference)) {
                    raise(ErrorKind::InvalidDescriptor, "noise_level_db: reference must be > 0");
                }
                if (n.window < 1) {
                    raise(ErrorKind::InvalidDescriptor, "noise_level_db: window must be >= 1");
                }
                noise_field_index(n, input);
                return Fields{{"level_db", FieldKind::Numeric, "dB"}};
            },
            [&](const MovingAverage& m) {
                if (m.window < 1) {
                    raise(ErrorKind::InvalidDescriptor, "moving_average: window must be >= 1");
                }
                return input;
            },
            [&](const Threshold& t) {
                numeric_field_index(input, t.field, "threshold");
                if (t.min > t.max) {
                    raise(ErrorKind::InvalidDescriptor, "threshold: min > max");
                }
                return input;
            },
            [&](const Scale& s) {
                numeric_field_index(input, s.field, "scale");
                return input;
            },
        },
        p);
}

Fields chain_output(std::span<const ProcessorSpec> chain, const Fields& input) {
    Fields fields = input;
    for (const auto& p : chain) {
        fields = output_of(p, fields);
    }
    return fields;
}

double level_db(std::span<const double> amplitudes, double reference) {
    if (amplitudes.empty()) {
        return kSilenceFloorDb;
    }
    double sum_sq = 0.0;
    for (double a : amplitudes) {
        sum_sq += a * a;
    }
    const double rms = std::sqrt(sum_sq / static_cast<double>(amplitudes.size()));
    if (rms <= 0.0) {
        return kSilenceFloorDb;
    }
    return std::max(kSilenceFloorDb, 20.0 * std::log10(rms / reference));
}

std::optional<StreamElement> apply(const ProcessorSpec& p, const Fields& input, std::span<const StreamElement> window) {
    const std::size_t len = window_length(p);
    if (window.size() < len) {
        return std::nullopt;
    }
    const auto recent = window.subspan(window.size() - len);
    const StreamElement& newest = recent.back();

    return std::visit(
        overloaded{
            [&](const Identity&) -> std::optional<StreamElement> { return newest; },
            [&](const NoiseLevelDb& n) -> std::optional<StreamElement> {
                const auto idx = noise_field_index(n, input);
                std::vector<double> amplitudes;
                amplitudes.reserve(recent.size());
                for (const auto& e : recent) {
                    amplitudes.push_back(numeric(e.values[idx]));
                }
                return StreamElement{newest.timestamp, {level_db(amplitudes, n.reference)}};
            },
            [&](const MovingAverage&) -> std::optional<StreamElement> {
                StreamElement out = newest;
                for (std::size_t i = 0; i < input.size(); ++i) {
                    if (input[i].kind != FieldKind::Numeric) {
                        continue;
                    }
                    double sum = 0.0;
                    for (const auto& e : recent) {
                        sum += numeric(e.values[i]);
                    }
                    out.values[i] = sum / static_cast<double>(recent.size());
                }
                return out;
            },
            [&](const Threshold& t) -> std::optional<StreamElement> {
                const double v = numeric(newest.values[numeric_field_index(input, t.field, "threshold")]);
                if (v < t.min || v > t.max) {
                    return std::nullopt;
                }
                return newest;
            },
            [&](const Scale& s) -> std::optional<StreamElement> {
                StreamElement out = newest;
                const auto idx = numeric_field_index(input, s.field, "scale");
                out.values[idx] = numeric(out.values[idx]) * s.factor;
                return out;
            },
        },
        p);
}

std::optional<StreamElement> process(std::span<const ProcessorSpec> chain, const Fields& input,
                                     std::span<const StreamElement> window) {
    if (window.empty()) {
        raise(ErrorKind::InvalidQuery, "process: empty window");
    }
    if (window.size() < max_window(chain)) {
        raise(ErrorKind::InvalidQuery, "process: window shorter than the largest processor window");
    }
    for (const auto& e : window) {
        if (!conforms(e, input)) {
            raise(ErrorKind::InvalidQuery, "process: element does not match the input structure");
        }
    }

    std::vector<StreamElement> seq(window.begin(), window.end());
    Fields fields = input;
    for (const auto& p : chain) {
        const std::size_t len = window_length(p);
        std::vector<StreamElement> next;
        bool newest_survived = false;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i + 1 < len) {
                continue;
            }
            auto out = apply(p, fields, std::span<const StreamElement>(seq).subspan(i + 1 - len, len));
            newest_survived = out.has_value();
            if (out) {
                next.push_back(std::move(*out));
            }
        }
        if (!newest_survived) {
            return std::nullopt;
        }
        fields = output_of(p, fields);
        seq = std::move(next);
    }
    return seq.back();
}

wire::Json to_json(const ProcessorSpec& p) {
    return std::visit(overloaded{
                          [](const Identity&) { return wire::Json{{"kind", "identity"}}; },
                          [](const NoiseLevelDb& n) {
                              wire::Json j{{"kind", "noise_level_db"}, {"reference", n.reference}, {"window", n.window}};
                              if (!n.field.empty()) {
                                  j["field"] = n.field;
                              }
                              return j;
                          },
                          [](const MovingAverage& m) {
                              return wire::Json{{"kind", "moving_average"}, {"window", m.window}};
                          },
                          [](const Threshold& t) {
                              return wire::Json{{"kind", "threshold"}, {"field", t.field}, {"min", t.min}, {"max", t.max}};
                          },
                          [](const Scale& s) {
                              return wire::Json{{"kind", "scale"}, {"field", s.field}, {"factor", s.factor}};
                          },
                      },
                      p);
}

ProcessorSpec processor_from_json(const wire::Json& j) {
    if (!j.is_object()) {
        raise(ErrorKind::InvalidDescriptor, "processor must be an object");
    }
    const auto kind = string_param(j, "kind", true);
    if (kind == "identity") {
        return Identity{};
    }
    if (kind == "noise_level_db") {
        NoiseLevelDb n{number_param(j, "reference", 1.0), window_param(j), string_param(j, "field", false)};
        if (!(n.reference > 0.0)) {
            raise(ErrorKind::InvalidDescriptor, "processor field 'reference' must be > 0");
        }
        return n;
    }
    if (kind == "moving_average") {
        return MovingAverage{window_param(j)};
    }
    if (kind == "threshold") {
        Threshold t{string_param(j, "field", true), number_param(j, "min"), number_param(j, "max")};
        if (t.min > t.max) {
            raise(ErrorKind::InvalidDescriptor, "processor field 'min' must be <= 'max'");
        }
        return t;
    }
    if (kind == "scale") {
        return Scale{string_param(j, "field", true), number_param(j, "factor")};
    }
    raise(ErrorKind::InvalidDescriptor, "unknown processor kind '" + kind + "'");
}

}// namespace mosden::engine
