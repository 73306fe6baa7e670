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

#include <mosden/plugin/plugin.hpp>

#include <httplib.h>

#include <mutex>

namespace mosden::plugin {

std::string_view to_string(HandleState state) {
    switch (state) {
        case HandleState::Discovered: return "Discovered";
        case HandleState::Active: return "Active";
        case HandleState::Failed: return "Failed";
        case HandleState::Removed: return "Removed";
    }
    return "Unknown";
}

namespace {

class ExternalSample final : public SampleSource {
  public:
    explicit ExternalSample(const std::string& endpoint) : client_("http://" + endpoint), endpoint_(endpoint) {
        client_.set_keep_alive(true);
        client_.set_connection_timeout(1, 0);
        client_.set_read_timeout(2, 0);
    }

    std::vector<Value> read(TimestampMs) override {
        auto res = client_.Get("/sample");
        if (!res) {
            raise(ErrorKind::PluginFailure,
                  "external plugin at " + endpoint_ + " unreachable: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            raise(ErrorKind::PluginFailure,
                  "external plugin at " + endpoint_ + " answered HTTP " + std::to_string(res->status));
        }
        try {
            return wire::decode(res->body).values;
        } catch (const EngineError& e) {
            raise(ErrorKind::PluginFailure, "external plugin at " + endpoint_ + ": " + e.detail());
        }
    }

  private:
    httplib::Client client_;
    std::string endpoint_;
};

}// namespace

PluginHandle::PluginHandle(PluginDescriptor descriptor, std::unique_ptr<SampleSource> source, int failure_threshold)
    : descriptor_(std::move(descriptor)), source_(std::move(source)), failure_threshold_(failure_threshold) {}

StreamElement PluginHandle::sample(TimestampMs at) {
    if (state_ != HandleState::Active) {
        raise(ErrorKind::PluginFailure,
              "plugin '" + descriptor_.plugin_id + "' is " + std::string(to_string(state_)));
    }
    try {
        StreamElement e{at, source_->read(at)};
        if (!conforms(e, descriptor_.output)) {
            raise(ErrorKind::PluginFailure,
                  "plugin '" + descriptor_.plugin_id + "' produced a record that does not match its output");
        }
        consecutive_failures_ = 0;
        return e;
    } catch (const EngineError& e) {
        last_error_ = EngineError(ErrorKind::PluginFailure, e.detail());
    } catch (const std::exception& e) {
        last_error_ = EngineError(ErrorKind::PluginFailure, e.what());
    }
    if (++consecutive_failures_ >= failure_threshold_) {
        state_ = HandleState::Failed;
    }
    throw *last_error_;
}

void PluginHandle::close() {
    source_.reset();
    state_ = HandleState::Removed;
}

PluginHandle open_plugin(const PluginDescriptor& descriptor, int failure_threshold) {
    if (const auto* b = std::get_if<BuiltinSource>(&descriptor.source)) {
        return PluginHandle(descriptor, make_builtin(b->name, b->parameters), failure_threshold);
    }
    const auto& endpoint = std::get<ExternalSource>(descriptor.source).endpoint;
    auto source = std::make_unique<ExternalSample>(endpoint);
    // Establish the session up front so a dead endpoint fails at open time.
    StreamElement probe{0, source->read(0)};
    if (!conforms(probe, descriptor.output)) {
        raise(ErrorKind::PluginFailure, "external plugin at " + endpoint + " does not match the declared output");
    }
    return PluginHandle(descriptor, std::move(source), failure_threshold);
}

PluginCatalog::PluginCatalog(std::filesystem::path directory) : directory_(std::move(directory)) {}

std::vector<ScanIssue> PluginCatalog::rescan() {
    if (directory_.empty()) {
        return {};
    }
    auto result = scan_plugins(directory_);
    std::unique_lock lock(mutex_);
    descriptors_.clear();
    for (auto& d : result.descriptors) {
        descriptors_.emplace(d.plugin_id, std::move(d));
    }
    return std::move(result.issues);
}

void PluginCatalog::add(PluginDescriptor descriptor) {
    std::unique_lock lock(mutex_);
    auto id = descriptor.plugin_id;
    manual_.insert_or_assign(std::move(id), std::move(descriptor));
}

std::optional<PluginDescriptor> PluginCatalog::find(const std::string& plugin_id) const {
    std::shared_lock lock(mutex_);
    if (auto it = manual_.find(plugin_id); it != manual_.end()) {
        return it->second;
    }
    if (auto it = descriptors_.find(plugin_id); it != descriptors_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::vector<PluginDescriptor> PluginCatalog::all() const {
    std::shared_lock lock(mutex_);
    std::map<std::string, PluginDescriptor> merged = descriptors_;
    for (const auto& [id, d] : manual_) {
        merged.insert_or_assign(id, d);
    }
    std::vector<PluginDescriptor> out;
    for (auto& [_, d] : merged) {
        out.push_back(std::move(d));
    }
    return out;
}

}// namespace mosden::plugin
