#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "airrange/device.hpp"
#include "airrange/http.hpp"
#include "airrange/telemetry_bus.hpp"

namespace airrange {

enum class LinkMode { ap, station };
std::string_view to_string(LinkMode m);

struct LinkState {
    std::string node;
    std::string address;
    bool up = true;
    bool associated = true;
    LinkMode mode = LinkMode::station;
    bool protected_mgmt = false;        // d5
    bool join_secret_required = false;  // d6
    bool transport_secure = false;      // d7
    std::int64_t down_until_ms = 0;
};

struct CaptureRecord {
    double sim_time = 0.0;
    std::string src;
    std::string dst;
    std::string path;
    std::optional<std::string> body;  // nullopt when the link is encrypted

    [[nodiscard]] bool opaque() const { return !body.has_value(); }
    [[nodiscard]] nlohmann::json to_json() const;
};

enum class DeliveryStatus { delivered, link_down, unavailable, no_route, not_associated };
std::string_view to_string(DeliveryStatus s);

struct Delivery {
    DeliveryStatus status = DeliveryStatus::delivered;
    std::optional<HttpResponse> response;

    [[nodiscard]] bool delivered() const { return status == DeliveryStatus::delivered; }
};

struct FabricOptions {
    LinkMode mode = LinkMode::station;
    bool protected_mgmt = false;
    bool join_secret_required = false;
    bool transport_secure = false;
    std::string lan_prefix = "192.168.1";
    std::uint64_t seed = 1;
};

/// Virtual Wi-Fi segment between the controller and its clients. Every byte a
/// client learns passes through deliver() or the telemetry bus.
class Fabric {
public:
    static constexpr const char* kDeviceNode = "device";

    explicit Fabric(FabricOptions options);

    /// Registers the controller. In AP mode it owns 192.168.50.1; in station
    /// mode it takes a DHCP-style address from the LAN prefix.
    void attach_device(Device& device);
    void attach_client(const std::string& node, bool associated = true);

    Delivery deliver(const std::string& src_node, const std::string& dst_address, HttpRequest request);
    /// Local-only maintenance listener (never crosses the wireless link).
    Delivery deliver_management(HttpRequest request);

    /// Timed link-down of a node. No-op (but logged) with management-frame protection.
    bool deauth(const std::string& node, double duration_s);

    bool join_ap(const std::string& node, const std::string& ssid, const std::string& secret);

    /// True when something answers at address:port.
    [[nodiscard]] bool probe(const std::string& src_node, const std::string& address, int port) const;
    [[nodiscard]] std::vector<std::string> address_plan(const std::string& node) const;

    void set_time_ms(std::int64_t now_ms);
    [[nodiscard]] std::int64_t time_ms() const { return now_ms_; }

    void attach_sniffer(const std::string& node);
    [[nodiscard]] const std::vector<CaptureRecord>& captures() const { return captures_; }
    [[nodiscard]] const std::vector<nlohmann::json>& link_events() const { return link_events_; }

    [[nodiscard]] const LinkState& link(const std::string& node) const;
    [[nodiscard]] const std::string& device_address() const { return device_address_; }
    [[nodiscard]] std::string address_of(const std::string& node) const;
    [[nodiscard]] int device_port() const { return options_.transport_secure ? 443 : 80; }

    TelemetryBus& bus() { return bus_; }
    [[nodiscard]] const TelemetryBus& bus() const { return bus_; }

private:
    std::string next_address();

    FabricOptions options_;
    Device* device_ = nullptr;
    std::string device_address_;
    std::map<std::string, LinkState> links_;
    std::vector<std::string> sniffers_;
    std::vector<CaptureRecord> captures_;
    std::vector<nlohmann::json> link_events_;
    std::int64_t now_ms_ = 0;
    int next_host_ = 20;
    TelemetryBus bus_;
};

}  // namespace airrange
