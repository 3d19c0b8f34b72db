#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace airrange {

struct TelemetryMessage {
    std::string topic;
    double sim_time = 0.0;
    double psi = 0.0;
    std::string publisher_id;

    [[nodiscard]] nlohmann::json to_json() const;
};

std::string pressure_topic(const std::string& serial);

enum class PublishStatus { delivered, rejected, unknown_topic };

/// In-process topic bus with MQTT-style topic names. Subscribers cannot tell
/// publishers apart; with authentication on, unregistered publishers are
/// refused at the broker.
class TelemetryBus {
public:
    using SubscriptionId = std::size_t;

    void create_topic(const std::string& topic);
    void register_publisher(const std::string& publisher_id);
    void set_authentication(bool on) { authenticate_ = on; }
    [[nodiscard]] bool authentication() const { return authenticate_; }

    PublishStatus publish(const TelemetryMessage& msg);
    SubscriptionId subscribe(const std::string& topic);  // throws std::out_of_range
    /// Messages delivered to the subscription since the last drain, in publish order.
    std::vector<TelemetryMessage> drain(SubscriptionId id);

    /// Broker-side record of every accepted message (ground truth for evidence).
    [[nodiscard]] const std::vector<TelemetryMessage>& delivered_log() const { return log_; }
    [[nodiscard]] std::size_t rejected_count() const { return rejected_; }

private:
    struct Subscription {
        std::string topic;
        std::deque<TelemetryMessage> queue;
    };

    std::set<std::string> topics_;
    std::set<std::string> publishers_;
    std::vector<Subscription> subscriptions_;
    std::vector<TelemetryMessage> log_;
    std::size_t rejected_ = 0;
    bool authenticate_ = false;
};

}  // namespace airrange
