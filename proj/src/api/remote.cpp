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

#include <mosden/api/remote.hpp>

namespace mosden::api {

std::optional<StreamElement> remote_pull(PeerClient& session, const SensorName& sensor) {
    const auto body = session.get_json("/v1/sensors/" + sensor.str() + "/latest");
    if (body.is_null()) {
        return std::nullopt;
    }
    try {
        return wire::element_from_json(body.at("element"));
    } catch (const std::exception& e) {
        raise(ErrorKind::PeerUnreachable, session.address() + " sent a malformed element: " + e.what());
    }
}

std::optional<StreamElement> remote_pull(const std::string& peer, const SensorName& sensor) {
    PeerClient session(peer, false);
    return remote_pull(session, sensor);
}

bool HttpPushTransport::deliver(const sharing::Subscription& sub, std::span<const StreamElement> elements) {
    const auto issued_us = monotonic_us();
    PeerClient client(sub.peer, false, timeout_ms_, timeout_ms_);
    wire::Json body{{"subscription", sub.id.str()},
                    {"sensor", sub.sensor.str()},
                    {"issued_us", issued_us},
                    {"elements", wire::to_json(std::vector<StreamElement>(elements.begin(), elements.end()))}};
    auto result = client.post("/v1/push/" + sub.id.str(), body);
    connections_.fetch_add(client.connections_opened());
    return result && result->status == 200;
}

}// namespace mosden::api
