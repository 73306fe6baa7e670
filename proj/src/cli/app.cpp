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

#include <mosden/api/node.hpp>
#include <mosden/cli/app.hpp>
#include <mosden/cli/config.hpp>
#include <mosden/core/log.hpp>
#include <mosden/engine/config.hpp>
#include <mosden/harness/runner.hpp>
#include <mosden/plugin/descriptor.hpp>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>
#include <signal.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace mosden::cli {

namespace fs = std::filesystem;

namespace {

void write_ready_file(const std::string& path, const std::string& address) {
    if (path.empty()) {
        return;
    }
    const auto tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << wire::Json{{"address", address}, {"pid", ::getpid()}}.dump() << '\n';
    }
    fs::rename(tmp, path);
}

/// Blocks SIGINT/SIGTERM in every thread started after this call, so the
/// caller can wait for them with sigwait.
sigset_t block_stop_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

void wait_for_stop(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("received signal {}, shutting down", sig);
}

harness::ScenarioConfig scenario_named(const std::string& name_or_file) {
    if (fs::exists(name_or_file)) {
        return harness::load_scenario(name_or_file);
    }
    if (auto s = harness::find_bundled(name_or_file)) {
        return *s;
    }
    raise(ErrorKind::NotFound, "no scenario file or bundled scenario named '" + name_or_file + "'");
}

void print_rows(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& rows) {
    for (const auto& [k, v] : rows) {
        out << k << ',' << v << '\n';
    }
}

}// namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"mosden: opportunistic sensing node, registry and benchmark harness", "mosden"};
    app.require_subcommand(1);

    // node serve / config show share the node settings.
    Settings flags;
    std::map<std::string, std::string> flag_values;
    std::string config_file, ready_file;
    auto add_node_flags = [&](CLI::App* cmd) {
        for (const auto& key : config_keys()) {
            cmd->add_option(flag_name(key), flag_values[key], "overrides " + env_name(key));
        }
        cmd->add_option("--config", config_file, "JSON file with node settings");
    };
    auto collect_flags = [&](CLI::App* cmd) {
        for (const auto& key : config_keys()) {
            if (cmd->count(flag_name(key)) > 0) {
                flags[key] = flag_values[key];
            }
        }
    };
    auto node_config = [&](CLI::App* cmd) {
        collect_flags(cmd);
        const Settings file = config_file.empty() ? Settings{} : file_settings(config_file);
        return resolve(flags, env_settings([](const char* n) { return std::getenv(n); }), file);
    };

    auto* node = app.add_subcommand("node", "run a sensing node");
    node->require_subcommand(1);
    auto* node_serve = node->add_subcommand("serve", "serve the node API until SIGINT/SIGTERM");
    add_node_flags(node_serve);
    node_serve->add_option("--ready-file", ready_file, "write {address, pid} here once listening");

    auto* registry = app.add_subcommand("registry", "run the discovery registry");
    registry->require_subcommand(1);
    auto* registry_serve = registry->add_subcommand("serve", "serve the registry until SIGINT/SIGTERM");
    std::string registry_host = "127.0.0.1", registry_level = "info";
    int registry_port = 8500;
    registry_serve->add_option("--host", registry_host, "listen address");
    registry_serve->add_option("--port", registry_port, "listen port, 0 picks a free one")->check(CLI::Range(0, 65535));
    registry_serve->add_option("--log-level", registry_level, "trace|debug|info|warn|error|off");
    registry_serve->add_option("--ready-file", ready_file, "write {address, pid} here once listening");

    auto* plugin = app.add_subcommand("plugin", "plugin descriptor tools");
    plugin->require_subcommand(1);
    auto* plugin_validate = plugin->add_subcommand("validate", "check a .plugin descriptor");
    std::string file;
    plugin_validate->add_option("file", file, "descriptor file")->required();

    auto* vsensor = app.add_subcommand("vsensor", "virtual sensor config tools");
    vsensor->require_subcommand(1);
    auto* vsensor_validate = vsensor->add_subcommand("validate", "check a .vsensor config");
    std::string plugins_dir;
    vsensor_validate->add_option("file", file, "virtual sensor file")->required();
    vsensor_validate->add_option("--plugins-dir", plugins_dir, "also check against the plugin it names");

    auto* config = app.add_subcommand("config", "configuration tools");
    config->require_subcommand(1);
    auto* config_show = config->add_subcommand("show", "print the effective node configuration");
    add_node_flags(config_show);

    auto* harness = app.add_subcommand("harness", "client/server load experiments");
    harness->require_subcommand(1);
    auto* harness_run = harness->add_subcommand("run", "run one scenario");
    std::string scenario, out_dir, executable, harness_level = "warn";
    harness_run->add_option("--scenario", scenario, "scenario file or bundled scenario name")->required();
    harness_run->add_option("--out", out_dir, "run directory (default runs/<scenario>)");
    harness_run->add_option("--exe", executable, "mosden binary for child processes (default: this one)");
    harness_run->add_option("--log-level", harness_level, "log level of child processes");
    auto* harness_report = harness->add_subcommand("report", "rebuild the CSV report of a run from its event log");
    std::string run_dir;
    harness_report->add_option("run_dir", run_dir, "run directory")->required();
    auto* harness_list = harness->add_subcommand("list-scenarios", "list bundled scenarios");
    std::string write_dir;
    harness_list->add_option("--write", write_dir, "also write them as <name>.json into this directory");
    auto* harness_compare = harness->add_subcommand("compare", "compare a restful run with a push run");
    std::string restful_dir, push_dir;
    harness_compare->add_option("restful_dir", restful_dir, "restful run directory")->required();
    harness_compare->add_option("push_dir", push_dir, "push run directory")->required();
    harness_compare->add_option("--out", out_dir, "write comparison.csv here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (node_serve->parsed()) {
            const auto c = node_config(node_serve);
            setup_logging(c.log_level);
            api::NodeOptions o;
            o.node_id = NodeId(c.node_id);
            o.host = c.host;
            o.port = c.port;
            o.plugins_dir = c.plugins_dir;
            o.vsensors_dir = c.vsensors_dir;
            o.data_dir = c.data_dir;
            o.registry = c.registry;
            o.group_tag = c.group_tag;
            o.workers = c.workers;
            o.max_queued = c.max_queued;
            o.puller_workers = c.puller_workers;
            const auto signals = block_stop_signals();
            api::Node n(o);
            n.start();
            write_ready_file(ready_file, n.address());
            wait_for_stop(signals);
            n.stop();
            return kExitOk;
        }
        if (registry_serve->parsed()) {
            setup_logging(registry_level);
            const auto signals = block_stop_signals();
            api::RegistryServer r(registry_host, registry_port);
            r.start();
            write_ready_file(ready_file, r.address());
            wait_for_stop(signals);
            r.stop();
            return kExitOk;
        }
        if (plugin_validate->parsed()) {
            const auto d = plugin::load_descriptor(file);
            out << "ok " << d.plugin_id << '\n';
            return kExitOk;
        }
        if (vsensor_validate->parsed()) {
            auto c = engine::load_config(file);
            if (!plugins_dir.empty()) {
                plugin::PluginCatalog catalog(plugins_dir);
                catalog.rescan();
                const auto d = catalog.find(c.plugin_id);
                if (!d) {
                    raise(ErrorKind::NotFound, "plugin '" + c.plugin_id + "' is not in " + plugins_dir);
                }
                c = engine::resolve(std::move(c), *d);
            }
            out << "ok " << c.name.str() << '\n';
            return kExitOk;
        }
        if (config_show->parsed()) {
            out << to_json(node_config(config_show)).dump(2) << '\n';
            return kExitOk;
        }
        if (harness_run->parsed()) {
            setup_logging("info");
            const auto s = scenario_named(scenario);
            harness::RunOptions o;
            o.executable = executable;
            o.output_dir = out_dir.empty() ? fs::path("runs") / s.name : fs::path(out_dir);
            o.log_level = harness_level;
            const auto r = harness::run_scenario(s, o);
            print_rows(out, harness::summary(r.report));
            out << "run directory: " << r.dir.string() << '\n';
            return r.report.failed ? kExitDomainError : kExitOk;
        }
        if (harness_report->parsed()) {
            const auto r = harness::build_report(harness::EventLog::load(fs::path(run_dir) / "events.jsonl"));
            harness::report_csv(r, run_dir);
            print_rows(out, harness::summary(r));
            return kExitOk;
        }
        if (harness_list->parsed()) {
            for (const auto& s : harness::bundled_scenarios()) {
                out << s.name << '\n';
                if (!write_dir.empty()) {
                    fs::create_directories(write_dir);
                    std::ofstream f(fs::path(write_dir) / (s.name + ".json"), std::ios::trunc);
                    f << harness::to_json(s).dump(2) << '\n';
                }
            }
            return kExitOk;
        }
        if (harness_compare->parsed()) {
            const auto a = harness::build_report(harness::EventLog::load(fs::path(restful_dir) / "events.jsonl"));
            const auto b = harness::build_report(harness::EventLog::load(fs::path(push_dir) / "events.jsonl"));
            const auto rows = harness::compare(a, b);
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                harness::write_csv(rows, fs::path(out_dir) / "comparison.csv");
            }
            print_rows(out, rows);
            return kExitOk;
        }
    } catch (const EngineError& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.detail() << '\n';
        return kExitDomainError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomainError;
    }
    err << app.help();
    return kExitUsage;
}

}// namespace mosden::cli
