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

#include <mosden/api/consumer.hpp>
#include <mosden/api/registry.hpp>
#include <mosden/api/remote.hpp>
#include <mosden/sharing/query.hpp>
#include <mosden/sharing/service_manager.hpp>

#include <httplib.h>

#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace mosden::api {

struct NodeOptions {
    NodeId node_id{"node"};
    std::string host = "127.0.0.1";
    int port = 0;// 0 picks a free port
    std::filesystem::path plugins_dir;
    std::filesystem::path vsensors_dir;
    std::filesystem::path data_dir;// empty keeps history in memory only
    std::string registry;          // host:port, empty disables registration
    std::string group_tag;
    std::size_t workers = 64;      // listener threads
    std::size_t max_queued = 0;    // accepted connections waiting for a worker; 0 = unbounded
    std::size_t puller_workers = 4;
    int keep_alive_timeout_s = 5;
    std::int64_t ttl_s = kDefaultTtlSeconds;
    std::int64_t refresh_s = kDefaultRefreshSeconds;
    std::size_t buffer_capacity = sharing::kDefaultBufferCapacity;
    sharing::BackoffPolicy backoff;
};

wire::Json to_json(const engine::VirtualSensorState& s);
wire::Json to_json(const sharing::Subscription& s);

/// One running engine instance: plugins, virtual sensors, storage, sharing
/// and the HTTP API, registered with the discovery registry while up.
class Node {
  public:
    explicit Node(NodeOptions options);
    ~Node();

    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    /// Loads plugins and virtual sensors, starts listening and registers.
    /// Configs that fail to load are logged and skipped. Throws Conflict
    /// when the port cannot be bound.
    void start();

    /// Cancels sharing, stops the listener and sampling, deregisters.
    void stop();

    int port() const { return port_; }
    std::string address() const;
    const NodeOptions& options() const { return options_; }

    plugin::PluginCatalog& catalog() { return catalog_; }
    storage::HistoryStore& store() { return store_; }
    engine::VirtualSensorManager& sensors() { return sensors_; }
    sharing::QueryManager& queries() { return queries_; }
    sharing::ServiceManager& services() { return *services_; }
    /// Valid after start().
    Consumer& consumer() { return *consumer_; }

    wire::Json metrics() const;

    /// Registers now with the current sensor list. Throws PeerUnreachable.
    void register_now();

  private:
    void mount();
    void registrar();

    NodeOptions options_;
    plugin::PluginCatalog catalog_;
    storage::HistoryStore store_;
    engine::VirtualSensorManager sensors_;
    sharing::QueryManager queries_;
    std::shared_ptr<HttpPushTransport> transport_;
    std::unique_ptr<sharing::ServiceManager> services_;
    std::unique_ptr<Consumer> consumer_;

    httplib::Server server_;
    int port_ = 0;
    std::thread listener_;
    std::thread registrar_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool running_ = false;
    bool stopped_ = false;
};

/// The registry role on its own listener.
class RegistryServer {
  public:
    explicit RegistryServer(std::string host = "127.0.0.1", int port = 0);
    ~RegistryServer();

    /// Throws Conflict when the port cannot be bound.
    void start();
    void stop();

    int port() const { return port_; }
    std::string address() const { return host_ + ":" + std::to_string(port_); }
    Registry& registry() { return registry_; }

  private:
    std::string host_;
    int port_;
    Registry registry_;
    httplib::Server server_;
    std::thread listener_;
};

}// namespace mosden::api
