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

#include <mosden/plugin/builtin.hpp>
#include <mosden/plugin/descriptor.hpp>
#include <mosden/plugin/plugin.hpp>

#include <doctest.h>
#include <httplib.h>
#include <test_util.hpp>

#include <cmath>
#include <numbers>
#include <thread>

using namespace mosden;
using namespace mosden::plugin;

namespace {

std::string builtin_descriptor(const std::string& id, const std::string& builtin, const std::string& output,
                               const std::string& params = "{}") {
    return R"({"format_version": 1, "plugin_id": ")" + id + R"(", "output": )" + output +
           R"(, "min_sampling_interval_ms": 100, "source": {"type": "builtin", "name": ")" + builtin +
           R"(", "parameters": )" + params + "}}";
}

const std::string kOneField = R"([{"name": "value"}])";

PluginDescriptor builtin(const std::string& name, wire::Json params = wire::Json::object()) {
    PluginDescriptor d;
    d.plugin_id = name;
    d.display_name = name;
    d.output = builtin_output(name);
    d.source = BuiltinSource{name, std::move(params)};
    return d;
}

// A source that fails on demand.
class Flaky final : public SampleSource {
  public:
    explicit Flaky(bool* failing) : failing_(failing) {}
    std::vector<Value> read(TimestampMs) override {
        if (*failing_) {
            raise(ErrorKind::PluginFailure, "sensor offline");
        }
        return {1.0};
    }

  private:
    bool* failing_;
};

}// namespace

TEST_CASE("scan finds every valid descriptor") {
    test::TempDir dir;
    for (const char* id : {"a", "b", "c"}) {
        test::write_file(dir / (std::string(id) + ".plugin"), builtin_descriptor(id, "constant", kOneField));
    }
    test::write_file(dir / "notes.txt", "ignored");
    const auto r = scan_plugins(dir.path());
    REQUIRE(r.descriptors.size() == 3);
    CHECK(r.issues.empty());
    CHECK(r.descriptors[0].plugin_id == "a");
    CHECK(r.descriptors[2].plugin_id == "c");
}

TEST_CASE("scan of an empty directory is empty") {
    test::TempDir dir;
    const auto r = scan_plugins(dir.path());
    CHECK(r.descriptors.empty());
    CHECK(r.issues.empty());
}

TEST_CASE("scan reports malformed files alongside valid ones") {
    test::TempDir dir;
    test::write_file(dir / "a.plugin", builtin_descriptor("a", "constant", kOneField));
    test::write_file(dir / "b.plugin", builtin_descriptor("b", "sine_wave", kOneField));
    test::write_file(dir / "broken.plugin", R"({"format_version": 1, "plugin_id": "x", "output": []})");
    const auto r = scan_plugins(dir.path());
    CHECK(r.descriptors.size() == 2);
    REQUIRE(r.issues.size() == 1);
    CHECK(r.issues[0].file.filename() == "broken.plugin");
    CHECK(r.issues[0].error.kind() == ErrorKind::InvalidDescriptor);
}

TEST_CASE("scan rejects duplicate ids and missing directories") {
    test::TempDir dir;
    test::write_file(dir / "a.plugin", builtin_descriptor("same", "constant", kOneField));
    test::write_file(dir / "b.plugin", builtin_descriptor("same", "constant", kOneField));
    const auto r = scan_plugins(dir.path());
    CHECK(r.descriptors.size() == 1);
    CHECK(r.issues.size() == 1);
    try {
        scan_plugins(dir / "missing");
        FAIL("scanned a missing directory");
    } catch (const EngineError& e) {
        CHECK(e.kind() == ErrorKind::NotFound);
    }
}

TEST_CASE("descriptor diagnostics name the offending field") {
    auto diag = [](const std::string& text) {
        try {
            parse_descriptor(text);
        } catch (const EngineError& e) {
            CHECK(e.kind() == ErrorKind::InvalidDescriptor);
            return e.detail();
        }
        return std::string("accepted");
    };
    CHECK(diag(R"({"format_version": 1})").find("plugin_id") != std::string::npos);
    CHECK(diag(R"({"format_version": 2})").find("format_version") != std::string::npos);
    CHECK(diag(builtin_descriptor("a", "accelerometer_sim", kOneField)).find("output") != std::string::npos);
    const auto zero = R"({"format_version": 1, "plugin_id": "a", "output": [{"name": "value"}],
        "min_sampling_interval_ms": 0, "source": {"type": "builtin", "name": "constant"}})";
    CHECK(diag(zero).find("min_sampling_interval_ms") != std::string::npos);
    CHECK(diag("{").find("accepted") == std::string::npos);
}

TEST_CASE("descriptors round-trip through json") {
    const auto d = parse_descriptor(builtin_descriptor("acc", "accelerometer_sim",
                                                       wire::to_json(builtin_output("accelerometer_sim")).dump(),
                                                       R"({"seed": 3})"));
    CHECK(descriptor_from_json(to_json(d)) == d);
}

TEST_CASE("open accepts builtins and rejects unknown or unreachable sources") {
    auto h = open_plugin(builtin("sine_wave", {{"amplitude", 1.0}}));
    CHECK(h.state() == HandleState::Active);

    auto unknown = builtin("constant");
    unknown.source = BuiltinSource{"xyz", wire::Json::object()};
    try {
        open_plugin(unknown);
        FAIL("opened an unknown builtin");
    } catch (const EngineError& e) {
        CHECK(e.kind() == ErrorKind::PluginFailure);
    }

    // Bind and release a port so nothing listens on it.
    int port = 0;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    auto external = builtin("constant");
    external.source = ExternalSource{"127.0.0.1:" + std::to_string(port)};
    try {
        open_plugin(external);
        FAIL("opened an unreachable endpoint");
    } catch (const EngineError& e) {
        CHECK(e.kind() == ErrorKind::PluginFailure);
    }
}

TEST_CASE("external plugins are sampled over http") {
    httplib::Server server;
    double next = 0.0;
    server.Get("/sample", [&](const httplib::Request&, httplib::Response& res) {
        next += 1.0;
        res.set_content(wire::encode({0, {next}}), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto d = builtin("constant");
    d.source = ExternalSource{"127.0.0.1:" + std::to_string(port)};
    auto h = open_plugin(d);
    const auto e = h.sample(500);
    CHECK(e.timestamp == 500);
    CHECK(std::get<double>(e.values[0]) == 2.0);// the probe consumed 1.0

    server.stop();
    t.join();
}

TEST_CASE("constant and sine builtins match their closed forms") {
    auto c = open_plugin(builtin("constant", {{"value", 5.0}}));
    const auto e = c.sample(1234);
    CHECK(e.timestamp == 1234);
    CHECK(e.values == std::vector<Value>{5.0});

    for (double amplitude : {1.0, 2.5, 40.0}) {
        for (double period : {1000.0, 4000.0, 60000.0}) {
            auto s = open_plugin(builtin("sine_wave", {{"amplitude", amplitude}, {"period_ms", period}}));
            const auto at = static_cast<TimestampMs>(period / 4);
            const double expected = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(at) / period);
            const double got = std::get<double>(s.sample(at).values[0]);
            CHECK(std::abs(got - amplitude) <= 1e-9);
            CHECK(std::abs(got - expected) <= 1e-12);
        }
    }
}

TEST_CASE("accelerometer produces three values") {
    auto h = open_plugin(builtin("accelerometer_sim"));
    const auto e = h.sample(0);
    CHECK(e.values.size() == 3);
    CHECK(h.descriptor().output.size() == 3);
    CHECK(h.descriptor().output[2].name == "z");
}

TEST_CASE("every builtin conforms over 10000 samples") {
    for (const auto& name : builtin_names()) {
        CAPTURE(name);
        wire::Json params = wire::Json::object();
        if (name != "constant" && name != "sine_wave") {
            params["seed"] = 99;
        }
        auto h = open_plugin(builtin(name, params));
        for (TimestampMs t = 0; t < 10'000; ++t) {
            const auto e = h.sample(t * 1000);
            REQUIRE(conforms(e, h.descriptor().output));
        }
    }
}

TEST_CASE("scan, open and sample is deterministic for a seed") {
    test::TempDir dir;
    for (const auto& name : builtin_names()) {
        wire::Json params = wire::Json::object();
        if (name != "constant" && name != "sine_wave") {
            params["seed"] = 12345;
        }
        test::write_file(dir / (name + ".plugin"),
                         builtin_descriptor(name, name, wire::to_json(builtin_output(name)).dump(), params.dump()));
    }
    auto run = [&] {
        std::vector<StreamElement> out;
        for (const auto& d : scan_plugins(dir.path()).descriptors) {
            auto h = open_plugin(d);
            for (TimestampMs t = 0; t < 200; ++t) {
                out.push_back(h.sample(t * 250));
            }
        }
        return out;
    };
    const auto a = run();
    CHECK(a.size() == builtin_names().size() * 200);
    CHECK(a == run());

    auto differ = [](std::uint64_t s1, std::uint64_t s2) {
        auto h1 = open_plugin(builtin("gaussian_noise", {{"seed", s1}}));
        auto h2 = open_plugin(builtin("gaussian_noise", {{"seed", s2}}));
        return h1.sample(0) != h2.sample(0);
    };
    CHECK(differ(1, 2));
    CHECK_FALSE(differ(7, 7));
}

TEST_CASE("a handle fails after five consecutive errors") {
    bool failing = true;
    PluginHandle h(builtin("constant"), std::make_unique<Flaky>(&failing));
    for (int i = 1; i <= 4; ++i) {
        CHECK_THROWS_AS(h.sample(i), EngineError);
        CHECK(h.state() == HandleState::Active);
        CHECK(h.consecutive_failures() == i);
    }
    failing = false;
    CHECK_NOTHROW(h.sample(5));
    CHECK(h.consecutive_failures() == 0);

    failing = true;
    for (int i = 0; i < kDefaultFailureThreshold; ++i) {
        CHECK_THROWS_AS(h.sample(10 + i), EngineError);
    }
    CHECK(h.state() == HandleState::Failed);
    REQUIRE(h.last_error().has_value());
    CHECK(h.last_error()->detail() == "sensor offline");
    failing = false;
    CHECK_THROWS_AS(h.sample(20), EngineError);
}

TEST_CASE("a nonconforming record counts as a failure") {
    auto d = builtin("constant");
    d.output = {{"value", FieldKind::Numeric, ""}, {"extra", FieldKind::Numeric, ""}};
    PluginHandle h(d, make_builtin("constant", wire::Json::object()), 1);
    CHECK_THROWS_AS(h.sample(0), EngineError);
    CHECK(h.state() == HandleState::Failed);
}

TEST_CASE("rescan picks up new files and leaves open handles alone") {
    test::TempDir dir;
    test::write_file(dir / "a.plugin", builtin_descriptor("a", "constant", kOneField, R"({"value": 3})"));
    PluginCatalog catalog(dir.path());
    CHECK(catalog.rescan().empty());
    REQUIRE(catalog.find("a").has_value());
    auto h = open_plugin(*catalog.find("a"));

    test::write_file(dir / "b.plugin", builtin_descriptor("b", "constant", kOneField));
    catalog.rescan();
    CHECK(catalog.all().size() == 2);

    std::filesystem::remove(dir / "a.plugin");
    catalog.rescan();
    CHECK_FALSE(catalog.find("a").has_value());
    CHECK(catalog.find("b").has_value());
    CHECK(h.state() == HandleState::Active);
    CHECK(h.sample(1).values == std::vector<Value>{3.0});

    h.close();
    CHECK(h.state() == HandleState::Removed);
}
