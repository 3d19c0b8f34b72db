#include "airrange/netsim.hpp"

#include <cmath>
#include <stdexcept>

namespace airrange {

std::string_view to_string(LinkMode m) { return m == LinkMode::ap ? "ap" : "station"; }

std::string_view to_string(DeliveryStatus s) {
    switch (s) {
        case DeliveryStatus::delivered: return "delivered";
        case DeliveryStatus::link_down: return "link_down";
        case DeliveryStatus::unavailable: return "unavailable";
        case DeliveryStatus::no_route: return "no_route";
        case DeliveryStatus::not_associated: return "not_associated";
    }
    return "no_route";
}

nlohmann::json CaptureRecord::to_json() const {
    nlohmann::json j = {{"sim_time", sim_time}, {"src", src}, {"dst", dst}, {"path", path}};
    j["body"] = body ? nlohmann::json(*body) : nlohmann::json("<opaque>");
    j["opaque"] = opaque();
    return j;
}

Fabric::Fabric(FabricOptions options) : options_(std::move(options)) {}

std::string Fabric::next_address() {
    const std::string prefix =
        options_.mode == LinkMode::ap ? std::string("192.168.50") : options_.lan_prefix;
    return prefix + "." + std::to_string(next_host_++);
}

void Fabric::attach_device(Device& device) {
    device_ = &device;
    if (options_.mode == LinkMode::ap) {
        device_address_ = std::string(kApModeAddress);
    } else {
        device_address_ = options_.lan_prefix + "." + std::to_string(100 + options_.seed % 100);
    }
    LinkState link;
    link.node = kDeviceNode;
    link.address = device_address_;
    link.mode = options_.mode;
    link.protected_mgmt = options_.protected_mgmt;
    link.join_secret_required = options_.join_secret_required;
    link.transport_secure = options_.transport_secure;
    links_[kDeviceNode] = link;
    bus_.create_topic(pressure_topic(device.serial()));
    bus_.register_publisher(device.serial());
}

void Fabric::attach_client(const std::string& node, bool associated) {
    LinkState link;
    link.node = node;
    link.address = next_address();
    link.associated = associated;
    link.mode = options_.mode;
    link.protected_mgmt = options_.protected_mgmt;
    link.join_secret_required = options_.join_secret_required;
    link.transport_secure = options_.transport_secure;
    links_[node] = link;
}

const LinkState& Fabric::link(const std::string& node) const {
    auto it = links_.find(node);
    if (it == links_.end()) throw std::out_of_range("unknown node: " + node);
    return it->second;
}

std::string Fabric::address_of(const std::string& node) const { return link(node).address; }

Delivery Fabric::deliver(const std::string& src_node, const std::string& dst_address, HttpRequest request) {
    auto src = links_.find(src_node);
    if (src == links_.end() || device_ == nullptr) return {DeliveryStatus::no_route, std::nullopt};
    if (!src->second.associated) return {DeliveryStatus::not_associated, std::nullopt};
    const LinkState& dev = links_.at(kDeviceNode);
    if (!src->second.up || !dev.up) return {DeliveryStatus::link_down, std::nullopt};
    if (dst_address != device_address_) return {DeliveryStatus::no_route, std::nullopt};

    request.source = src->second.address;
    request.channel = Channel::network;
    if (!sniffers_.empty()) {
        CaptureRecord rec;
        rec.sim_time = static_cast<double>(now_ms_) / 1000.0;
        rec.src = request.source;
        rec.dst = dst_address;
        rec.path = request.path;
        if (!options_.transport_secure) rec.body = request.body;
        captures_.push_back(std::move(rec));
    }
    auto response = device_->serve(request);
    if (!response) return {DeliveryStatus::unavailable, std::nullopt};
    return {DeliveryStatus::delivered, std::move(response)};
}

Delivery Fabric::deliver_management(HttpRequest request) {
    if (device_ == nullptr) return {DeliveryStatus::no_route, std::nullopt};
    request.channel = Channel::management;
    request.source = "local-maintenance";
    auto response = device_->serve(request);
    if (!response) return {DeliveryStatus::unavailable, std::nullopt};
    return {DeliveryStatus::delivered, std::move(response)};
}

bool Fabric::deauth(const std::string& node, double duration_s) {
    auto it = links_.find(node);
    if (it == links_.end()) return false;
    const double t = static_cast<double>(now_ms_) / 1000.0;
    if (it->second.protected_mgmt) {
        link_events_.push_back({{"sim_time", t}, {"event", "deauth_ignored"}, {"node", node}});
        return false;
    }
    const auto duration_ms = static_cast<std::int64_t>(std::llround(duration_s * 1000.0));
    if (duration_ms <= 0) return false;
    it->second.up = false;
    it->second.down_until_ms = std::max(it->second.down_until_ms, now_ms_ + duration_ms);
    link_events_.push_back(
        {{"sim_time", t}, {"event", "deauth"}, {"node", node}, {"duration_s", duration_s}});
    return true;
}

bool Fabric::join_ap(const std::string& node, const std::string& ssid, const std::string& secret) {
    if (device_ == nullptr || options_.mode != LinkMode::ap) return false;
    auto it = links_.find(node);
    if (it == links_.end()) return false;
    const auto creds = device_->credentials();
    if (ssid != creds.wifi_ssid()) return false;
    const bool ok = device_->accept_wifi_join(secret, it->second.address);
    if (ok) it->second.associated = true;
    return ok;
}

bool Fabric::probe(const std::string& src_node, const std::string& address, int port) const {
    auto src = links_.find(src_node);
    if (src == links_.end() || !src->second.associated || !src->second.up) return false;
    if (device_ == nullptr || address != device_address_) return false;
    const LinkState& dev = links_.at(kDeviceNode);
    return dev.up && device_->online() && port == device_port();
}

std::vector<std::string> Fabric::address_plan(const std::string& node) const {
    const std::string& addr = link(node).address;
    const std::string prefix = addr.substr(0, addr.rfind('.'));
    std::vector<std::string> plan;
    for (int host = 1; host <= 254; ++host) plan.push_back(prefix + "." + std::to_string(host));
    return plan;
}

void Fabric::set_time_ms(std::int64_t now_ms) {
    now_ms_ = now_ms;
    for (auto& [_, link] : links_) {
        if (!link.up && now_ms_ >= link.down_until_ms) link.up = true;
    }
}

void Fabric::attach_sniffer(const std::string& node) {
    if (links_.count(node) != 0) sniffers_.push_back(node);
}

}  // namespace airrange
