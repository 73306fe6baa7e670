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
#include <mosden/plugin/builtin.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace mosden::plugin {

namespace {

class Params {
  public:
    Params(std::string_view builtin, const wire::Json& j, std::initializer_list<const char*> allowed)
        : builtin_(builtin), json_(j) {
        if (!j.is_object()) {
            raise(ErrorKind::PluginFailure, builtin_ + ": parameters must be an object");
        }
        std::set<std::string> known(allowed.begin(), allowed.end());
        for (const auto& [key, _] : j.items()) {
            if (!known.contains(key)) {
                raise(ErrorKind::PluginFailure, builtin_ + ": unknown parameter '" + key + "'");
            }
        }
    }

    double number(const char* key, double fallback) const {
        if (!json_.contains(key)) {
            return fallback;
        }
        const auto& v = json_.at(key);
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            raise(ErrorKind::PluginFailure, builtin_ + ": parameter '" + key + "' must be a finite number");
        }
        return v.get<double>();
    }

    double positive(const char* key, double fallback) const {
        const double v = number(key, fallback);
        if (v <= 0.0) {
            raise(ErrorKind::PluginFailure, builtin_ + ": parameter '" + key + "' must be > 0");
        }
        return v;
    }

    std::uint64_t seed() const {
        if (!json_.contains("seed")) {
            return 0;
        }
        const auto& v = json_.at("seed");
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            raise(ErrorKind::PluginFailure, builtin_ + ": parameter 'seed' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

  private:
    std::string builtin_;
    const wire::Json& json_;
};

double periodic(TimestampMs at, double period_ms) {
    return std::sin(2.0 * std::numbers::pi * static_cast<double>(at) / period_ms);
}

class Constant final : public SampleSource {
  public:
    explicit Constant(double v) : value_(v) {}
    std::vector<Value> read(TimestampMs) override { return {value_}; }

  private:
    double value_;
};

class SineWave final : public SampleSource {
  public:
    SineWave(double amplitude, double period_ms, double offset)
        : amplitude_(amplitude), period_ms_(period_ms), offset_(offset) {}
    std::vector<Value> read(TimestampMs at) override { return {offset_ + amplitude_ * periodic(at, period_ms_)}; }

  private:
    double amplitude_, period_ms_, offset_;
};

class GaussianNoise final : public SampleSource {
  public:
    GaussianNoise(double mean, double stddev, std::uint64_t seed) : rng_(seed), dist_(mean, stddev) {}
    std::vector<Value> read(TimestampMs) override { return {dist_(rng_)}; }

  private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> dist_;
};

class RandomWalk final : public SampleSource {
  public:
    RandomWalk(double start, double step, std::uint64_t seed) : position_(start), rng_(seed), dist_(-step, step) {}
    std::vector<Value> read(TimestampMs) override {
        position_ += dist_(rng_);
        return {position_};
    }

  private:
    double position_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> dist_;
};

// Device lying flat with small hand tremor: gravity on z.
class Accelerometer final : public SampleSource {
  public:
    Accelerometer(double noise, std::uint64_t seed) : rng_(seed), dist_(0.0, noise) {}
    std::vector<Value> read(TimestampMs at) override {
        const double sway = 0.2 * periodic(at, 4000.0);
        return {sway + dist_(rng_), 0.5 * sway + dist_(rng_), 9.80665 + dist_(rng_)};
    }

  private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> dist_;
};

// Peak amplitude of one audio frame, in [amplitude*(1-variation), amplitude*(1+variation)).
class Microphone final : public SampleSource {
  public:
    Microphone(double amplitude, double variation, std::uint64_t seed)
        : amplitude_(amplitude), rng_(seed), dist_(1.0 - variation, 1.0 + variation) {}
    std::vector<Value> read(TimestampMs) override { return {amplitude_ * dist_(rng_)}; }

  private:
    double amplitude_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> dist_;
};

class Light final : public SampleSource {
  public:
    Light(double base, double amplitude, double period_ms, double noise, std::uint64_t seed)
        : base_(base), amplitude_(amplitude), period_ms_(period_ms), rng_(seed), dist_(0.0, noise) {}
    std::vector<Value> read(TimestampMs at) override {
        return {std::max(0.0, base_ + amplitude_ * periodic(at, period_ms_) + dist_(rng_))};
    }

  private:
    double base_, amplitude_, period_ms_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> dist_;
};

class Pressure final : public SampleSource {
  public:
    Pressure(double base, double step, std::uint64_t seed) : base_(base), drift_(0.0), rng_(seed), dist_(-step, step) {}
    std::vector<Value> read(TimestampMs) override {
        // Mean-reverting walk so long runs stay near the base pressure.
        drift_ = 0.99 * drift_ + dist_(rng_);
        return {base_ + drift_};
    }

  private:
    double base_, drift_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> dist_;
};

struct BuiltinInfo {
    const char* name;
    Fields output;
};

const std::vector<BuiltinInfo>& table() {
    static const std::vector<BuiltinInfo> t{
        {"constant", {{"value", FieldKind::Numeric, ""}}},
        {"sine_wave", {{"value", FieldKind::Numeric, ""}}},
        {"gaussian_noise", {{"value", FieldKind::Numeric, ""}}},
        {"random_walk", {{"value", FieldKind::Numeric, ""}}},
        {"accelerometer_sim",
         {{"x", FieldKind::Numeric, "m/s^2"}, {"y", FieldKind::Numeric, "m/s^2"}, {"z", FieldKind::Numeric, "m/s^2"}}},
        {"microphone_sim", {{"amplitude", FieldKind::Numeric, ""}}},
        {"light_sim", {{"illuminance", FieldKind::Numeric, "lx"}}},
        {"pressure_sim", {{"pressure", FieldKind::Numeric, "hPa"}}},
    };
    return t;
}

}// namespace

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& b : table()) {
            out.emplace_back(b.name);
        }
        return out;
    }();
    return names;
}

std::optional<std::size_t> builtin_arity(std::string_view name) {
    for (const auto& b : table()) {
        if (name == b.name) {
            return b.output.size();
        }
    }
    return std::nullopt;
}

Fields builtin_output(std::string_view name) {
    for (const auto& b : table()) {
        if (name == b.name) {
            return b.output;
        }
    }
    raise(ErrorKind::PluginFailure, "unknown builtin plugin '" + std::string(name) + "'");
}

std::unique_ptr<SampleSource> make_builtin(std::string_view name, const wire::Json& parameters) {
    if (name == "constant") {
        Params p(name, parameters, {"value"});
        return std::make_unique<Constant>(p.number("value", 0.0));
    }
    if (name == "sine_wave") {
        Params p(name, parameters, {"amplitude", "period_ms", "offset"});
        return std::make_unique<SineWave>(p.number("amplitude", 1.0), p.positive("period_ms", 60000.0),
                                          p.number("offset", 0.0));
    }
    if (name == "gaussian_noise") {
        Params p(name, parameters, {"mean", "stddev", "seed"});
        return std::make_unique<GaussianNoise>(p.number("mean", 0.0), p.positive("stddev", 1.0), p.seed());
    }
    if (name == "random_walk") {
        Params p(name, parameters, {"start", "step", "seed"});
        return std::make_unique<RandomWalk>(p.number("start", 0.0), p.positive("step", 1.0), p.seed());
    }
    if (name == "accelerometer_sim") {
        Params p(name, parameters, {"noise", "seed"});
        return std::make_unique<Accelerometer>(p.positive("noise", 0.05), p.seed());
    }
    if (name == "microphone_sim") {
        Params p(name, parameters, {"amplitude", "variation", "seed"});
        const double variation = p.number("variation", 0.25);
        if (variation < 0.0 || variation >= 1.0) {
            raise(ErrorKind::PluginFailure, "microphone_sim: parameter 'variation' must be in [0, 1)");
        }
        return std::make_unique<Microphone>(p.positive("amplitude", 0.1), variation, p.seed());
    }
    if (name == "light_sim") {
        Params p(name, parameters, {"base", "amplitude", "period_ms", "noise", "seed"});
        return std::make_unique<Light>(p.number("base", 300.0), p.number("amplitude", 200.0),
                                       p.positive("period_ms", 3'600'000.0), p.positive("noise", 5.0), p.seed());
    }
    if (name == "pressure_sim") {
        Params p(name, parameters, {"base", "step", "seed"});
        return std::make_unique<Pressure>(p.number("base", 1013.25), p.positive("step", 0.05), p.seed());
    }
    raise(ErrorKind::PluginFailure, "unknown builtin plugin '" + std::string(name) + "'");
}

}// namespace mosden::plugin
