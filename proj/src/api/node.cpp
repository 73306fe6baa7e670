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

#include <spdlog/spdlog.h>

namespace mosden::api {

wire::Json to_json(const engine::VirtualSensorState& s) {
    wire::Json j{{"name", s.config.name.str()},
                 {"lifecycle", std::string(engine::to_string(s.lifecycle))},
                 {"config", engine::to_json(s.config)},
                 {"generation", s.generation},
                 {"counters",
                  {{"samples", s.counters.samples},
                   {"processor_drops", s.counters.processor_drops},
                   {"plugin_failures", s.counters.plugin_failures},
                   {"stored", s.counters.stored}}}};
    j["last_element"] = s.last_element ? wire::to_json(*s.last_element) : wire::Json(nullptr);
    return j;
}

wire::Json to_json(const sharing::Subscription& s) {
    return {{"id", s.id.str()},
            {"peer", s.peer},
            {"sensor", s.sensor.str()},
            {"mode", std::string(sharing::to_string(s.mode))},
            {"interval_ms", s.delivery_interval_ms},
            {"state", std::string(sharing::to_string(s.state))},
            {"pending", s.pending},
            {"buffer_capacity", s.buffer_capacity},
            {"cursor", s.cursor},
            {"connections", s.connections},
            {"counters",
             {{"delivered", s.counters.delivered},
              {"dropped", s.counters.dropped},
              {"reconnects", s.counters.reconnects},
              {"attempts", s.counters.attempts},
              {"failed_attempts", s.counters.failed_attempts}}}};
}

namespace {

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

/// Maps EngineErrors raised by a handler to their HTTP status.
Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            h(req, res);
        } catch (const EngineError& e) {
            write_error(res, e);
        }
    };
}

std::int64_t int_param(const httplib::Request& req, const std::string& name, std::int64_t fallback) {
    if (!req.has_param(name)) {
        return fallback;
    }
    const auto text = req.get_param_value(name);
    try {
        std::size_t used = 0;
        const auto v = std::stoll(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(name);
        }
        return v;
    } catch (const std::exception&) {
        raise(ErrorKind::InvalidQuery, "parameter '" + name + "' must be an integer, got '" + text + "'");
    }
}

std::string session_of(const httplib::Request& req) {
    return req.remote_addr + ":" + std::to_string(req.remote_port);
}

}// namespace

Node::Node(NodeOptions options)
    : options_(std::move(options)),
      catalog_(options_.plugins_dir),
      store_(options_.data_dir),
      sensors_(catalog_, store_),
      queries_(sensors_, store_),
      transport_(std::make_shared<HttpPushTransport>()) {
    sharing::ServiceOptions so;
    so.buffer_capacity = options_.buffer_capacity;
    so.backoff = options_.backoff;
    so.id_prefix = options_.node_id.str();
    services_ = std::make_unique<sharing::ServiceManager>(sensors_, store_, transport_, so);
    sensors_.set_append_listener(
        [this](const SensorName& name, const StreamElement&) { services_->notify_append(name); });
}

Node::~Node() { stop(); }

std::string Node::address() const { return options_.host + ":" + std::to_string(port_); }

void Node::start() {
    {
        std::lock_guard lock(mutex_);
        if (running_ || stopped_) {
            raise(ErrorKind::Conflict, "node " + options_.node_id.str() + " was already started");
        }
    }
    if (!options_.plugins_dir.empty()) {
        for (const auto& issue : catalog_.rescan()) {
            spdlog::warn("plugin {}: {}", issue.file.string(), issue.error.what());
        }
    }
    if (!options_.vsensors_dir.empty()) {
        auto scan = engine::scan_configs(options_.vsensors_dir);
        for (const auto& issue : scan.issues) {
            spdlog::warn("virtual sensor {}: {}", issue.file.string(), issue.error.what());
        }
        for (auto& config : scan.configs) {
            const auto name = config.name.str();
            try {
                sensors_.instantiate(std::move(config));
            } catch (const EngineError& e) {
                spdlog::warn("virtual sensor {}: {}", name, e.what());
            }
        }
    }

    server_.new_task_queue = [n = options_.workers, q = options_.max_queued] { return new httplib::ThreadPool(n, q); };
    server_.set_keep_alive_max_count(1'000'000);
    server_.set_keep_alive_timeout(options_.keep_alive_timeout_s);
    server_.set_tcp_nodelay(true);
    exclusive_bind(server_);
    mount();

    if (options_.port == 0) {
        port_ = server_.bind_to_any_port(options_.host);
        if (port_ < 0) {
            port_ = 0;
        }
    } else if (server_.bind_to_port(options_.host, options_.port)) {
        port_ = options_.port;
    }
    if (port_ == 0) {
        sensors_.stop_all();
        raise(ErrorKind::Conflict, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    consumer_ = std::make_unique<Consumer>(
        ConsumerOptions{options_.node_id, address(), options_.registry, options_.puller_workers});

    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    {
        std::lock_guard lock(mutex_);
        running_ = true;
    }
    spdlog::info("node {} listening on {} with {} virtual sensors", options_.node_id.str(), address(),
                 sensors_.list().size());

    if (!options_.registry.empty()) {
        try {
            register_now();
        } catch (const EngineError& e) {
            spdlog::warn("registration with {} failed: {}", options_.registry, e.what());
        }
        registrar_ = std::thread([this] { registrar(); });
    }
}

void Node::register_now() {
    NodeRegistration r;
    r.node_id = options_.node_id;
    r.address = address();
    r.group_tag = options_.group_tag;
    r.sensors = queries_.sensor_list();
    r.ttl_s = options_.ttl_s;
    register_node(options_.registry, r);
}

void Node::registrar() {
    std::unique_lock lock(mutex_);
    while (running_) {
        if (cv_.wait_for(lock, std::chrono::seconds(options_.refresh_s), [&] { return !running_; })) {
            return;
        }
        lock.unlock();
        try {
            register_now();
        } catch (const EngineError& e) {
            spdlog::warn("registration refresh failed: {}", e.what());
        }
        lock.lock();
    }
}

void Node::stop() {
    {
        std::lock_guard lock(mutex_);
        if (!running_) {
            return;
        }
        running_ = false;
        stopped_ = true;
    }
    cv_.notify_all();
    if (registrar_.joinable()) {
        registrar_.join();
    }
    if (consumer_) {
        consumer_->stop();
    }
    services_->shutdown();
    server_.stop();
    if (listener_.joinable()) {
        listener_.join();
    }
    sensors_.stop_all();
    if (!options_.registry.empty()) {
        try {
            deregister_node(options_.registry, options_.node_id);
        } catch (const EngineError& e) {
            spdlog::debug("deregistration: {}", e.what());
        }
    }
    spdlog::info("node {} stopped", options_.node_id.str());
}

wire::Json Node::metrics() const {
    auto& self = const_cast<Node&>(*this);
    wire::Json sensors = wire::Json::array();
    for (const auto& s : self.sensors_.list(true)) {
        wire::Json entry = to_json(s);
        entry.erase("config");
        if (self.store_.has_table(s.config.name)) {
            entry["footprint_bytes"] = self.store_.footprint(s.config.name);
            entry["stored_elements"] = self.store_.size(s.config.name);
        }
        sensors.push_back(std::move(entry));
    }
    wire::Json subs = wire::Json::array();
    for (const auto& s : self.services_->list()) {
        subs.push_back(to_json(s));
    }
    return {{"node_id", options_.node_id.str()},
            {"address", address()},
            {"sensors", std::move(sensors)},
            {"subscriptions", std::move(subs)},
            {"push_connections_opened", transport_->connections_opened()},
            {"footprint_bytes", self.store_.footprint()}};
}

void Node::mount() {
    auto& s = server_;

    s.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
        write_json(res, {{"status", "ok"}, {"node_id", options_.node_id.str()}});
    });

    s.Get("/v1/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
              write_json(res, metrics());
          }));

    // Query API
    s.Get("/v1/sensors", guarded([this](const httplib::Request&, httplib::Response& res) {
              wire::Json list = wire::Json::array();
              for (const auto& info : queries_.sensor_list()) {
                  list.push_back(to_json(info));
              }
              write_json(res, {{"sensors", std::move(list)}});
          }));
    s.Get(R"(/v1/sensors/([^/]+)/latest)", guarded([this](const httplib::Request& req, httplib::Response& res) {
              sharing::QueryRequest q{RequestId("http"), SensorName(req.matches[1].str()), sharing::Latest{}, {}};
              auto r = queries_.resolve(q);
              if (r.elements.empty()) {
                  res.status = 204;
                  return;
              }
              write_json(res, {{"element", wire::to_json(r.elements.front())}});
          }));
    s.Get(R"(/v1/sensors/([^/]+)/range)", guarded([this](const httplib::Request& req, httplib::Response& res) {
              sharing::Range range{int_param(req, "from", 0), int_param(req, "to", INT64_MAX)};
              sharing::QueryRequest q{RequestId("http"), SensorName(req.matches[1].str()), range, {}};
              write_json(res, {{"elements", wire::to_json(queries_.resolve(q).elements)}});
          }));

    // Virtual sensor lifecycle
    s.Get("/v1/vsensors", guarded([this](const httplib::Request& req, httplib::Response& res) {
              wire::Json list = wire::Json::array();
              for (const auto& st : sensors_.list(req.has_param("all"))) {
                  list.push_back(to_json(st));
              }
              write_json(res, {{"vsensors", std::move(list)}});
          }));
    s.Get(R"(/v1/vsensors/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
              write_json(res, to_json(sensors_.state(SensorName(req.matches[1].str()))));
          }));
    s.Post("/v1/vsensors", guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto config = engine::config_from_json(wire::parse(req.body, ErrorKind::InvalidDescriptor));
               write_json(res, to_json(sensors_.instantiate(std::move(config))), 201);
           }));
    s.Put(R"(/v1/vsensors/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
              auto config = engine::config_from_json(wire::parse(req.body, ErrorKind::InvalidDescriptor));
              write_json(res, to_json(sensors_.update(SensorName(req.matches[1].str()), std::move(config))));
          }));
    s.Delete(R"(/v1/vsensors/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 sensors_.remove(SensorName(req.matches[1].str()));
                 res.status = 204;
             }));

    s.Get("/v1/plugins", guarded([this](const httplib::Request&, httplib::Response& res) {
              wire::Json list = wire::Json::array();
              for (const auto& d : catalog_.all()) {
                  list.push_back(plugin::to_json(d));
              }
              write_json(res, {{"plugins", std::move(list)}});
          }));
    s.Post("/v1/plugins/rescan", guarded([this](const httplib::Request&, httplib::Response& res) {
               wire::Json issues = wire::Json::array();
               for (const auto& issue : catalog_.rescan()) {
                   issues.push_back({{"file", issue.file.string()},
                                     {"error", std::string(to_string(issue.error.kind()))},
                                     {"detail", issue.error.detail()}});
               }
               write_json(res, {{"issues", std::move(issues)}});
           }));

    // Sharing: this node as data provider
    s.Post("/v1/subscriptions", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const auto body = wire::parse(req.body, ErrorKind::InvalidQuery);
               if (!body.is_object() || !body.contains("sensor") || !body.at("sensor").is_string()) {
                   raise(ErrorKind::InvalidQuery, "subscription needs a 'sensor'");
               }
               const auto mode = sharing::parse_mode(body.value("mode", std::string("restful")));
               const auto interval = body.value("interval_ms", std::int64_t{1000});
               if (interval < 1) {
                   raise(ErrorKind::InvalidQuery, "'interval_ms' must be >= 1");
               }
               std::string peer = body.value("callback", std::string{});
               if (peer.empty()) {
                   if (mode == sharing::Mode::Push) {
                       raise(ErrorKind::InvalidQuery, "push subscriptions need a 'callback' host:port");
                   }
                   peer = req.remote_addr;
               } else {
                   split_address(peer);
               }
               auto sub = services_->subscribe(peer, SensorName(body.at("sensor").get<std::string>()), mode, interval);
               write_json(res, to_json(sub), 201);
           }));
    s.Get("/v1/subscriptions", guarded([this](const httplib::Request&, httplib::Response& res) {
              wire::Json list = wire::Json::array();
              for (const auto& sub : services_->list()) {
                  list.push_back(to_json(sub));
              }
              write_json(res, {{"subscriptions", std::move(list)}});
          }));
    s.Get(R"(/v1/subscriptions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
              write_json(res, to_json(services_->get(SubscriptionId(req.matches[1].str()))));
          }));
    s.Delete(R"(/v1/subscriptions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 services_->cancel(SubscriptionId(req.matches[1].str()));
                 res.status = 204;
             }));
    s.Get(R"(/v1/subscriptions/([^/]+)/stream)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
              std::optional<TimestampMs> after;
              if (req.has_param("after")) {
                  after = int_param(req, "after", 0);
              }
              const auto wait = std::clamp<std::int64_t>(int_param(req, "wait_ms", sharing::kDefaultHeartbeatMs), 0,
                                                         sharing::kDefaultHeartbeatMs);
              auto r = services_->pull(SubscriptionId(req.matches[1].str()), after, wait, session_of(req));
              write_json(res, {{"elements", wire::to_json(r.elements)}, {"heartbeat", r.heartbeat}});
          }));

    // Sharing: this node as data consumer
    s.Post(R"(/v1/push/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               consumer_->on_push(req.matches[1].str(), wire::parse(req.body, ErrorKind::InvalidQuery),
                                  session_of(req));
               write_json(res, {{"accepted", true}});
           }));
    s.Post("/v1/consumer/workload", guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto spec = workload_from_json(wire::parse(req.body, ErrorKind::InvalidQuery));
               wire::Json list = wire::Json::array();
               for (const auto& r : consumer_->start(spec)) {
                   list.push_back(to_json(r));
               }
               write_json(res, {{"requests", std::move(list)}}, 201);
           }));
    s.Delete("/v1/consumer/workload", guarded([this](const httplib::Request&, httplib::Response& res) {
                 consumer_->stop();
                 res.status = 204;
             }));
    s.Get("/v1/consumer/requests", guarded([this](const httplib::Request&, httplib::Response& res) {
              wire::Json list = wire::Json::array();
              for (const auto& r : consumer_->requests()) {
                  list.push_back(to_json(r));
              }
              write_json(res, {{"requests", std::move(list)}});
          }));
    s.Get("/v1/consumer/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
              wire::Json list = wire::Json::array();
              for (const auto& e : consumer_->events(static_cast<std::uint64_t>(int_param(req, "since", 0)))) {
                  list.push_back(to_json(e));
              }
              write_json(res, {{"events", std::move(list)}});
          }));
    s.Get(R"(/v1/remote/([^/]+)/([^/]+)/latest)",
          guarded([](const httplib::Request& req, httplib::Response& res) {
              auto el = remote_pull(req.matches[1].str(), SensorName(req.matches[2].str()));
              if (!el) {
                  res.status = 204;
                  return;
              }
              write_json(res, {{"element", wire::to_json(*el)}});
          }));
}

RegistryServer::RegistryServer(std::string host, int port) : host_(std::move(host)), port_(port) {}

RegistryServer::~RegistryServer() { stop(); }

void RegistryServer::start() {
    registry_.mount(server_);
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        write_json(res, {{"status", "ok"}, {"role", "registry"}});
    });
    server_.set_keep_alive_timeout(2);
    exclusive_bind(server_);
    if (port_ == 0) {
        port_ = std::max(0, server_.bind_to_any_port(host_));
    } else if (!server_.bind_to_port(host_, port_)) {
        port_ = 0;
    }
    if (port_ == 0) {
        raise(ErrorKind::Conflict, "cannot bind registry on " + host_);
    }
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    spdlog::info("registry listening on {}", address());
}

void RegistryServer::stop() {
    if (listener_.joinable()) {
        server_.stop();
        listener_.join();
    }
}

}// namespace mosden::api
