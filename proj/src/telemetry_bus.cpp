#include "airrange/telemetry_bus.hpp"

#include <stdexcept>

namespace airrange {

nlohmann::json TelemetryMessage::to_json() const {
    return {{"topic", topic}, {"sim_time", sim_time}, {"psi", psi}, {"publisher_id", publisher_id}};
}

std::string pressure_topic(const std::string& serial) { return "compressor/" + serial + "/pressure"; }

void TelemetryBus::create_topic(const std::string& topic) { topics_.insert(topic); }

void TelemetryBus::register_publisher(const std::string& publisher_id) { publishers_.insert(publisher_id); }

PublishStatus TelemetryBus::publish(const TelemetryMessage& msg) {
    if (topics_.count(msg.topic) == 0) return PublishStatus::unknown_topic;
    if (authenticate_ && publishers_.count(msg.publisher_id) == 0) {
        ++rejected_;
        return PublishStatus::rejected;
    }
    log_.push_back(msg);
    for (auto& sub : subscriptions_) {
        if (sub.topic == msg.topic) sub.queue.push_back(msg);
    }
    return PublishStatus::delivered;
}

TelemetryBus::SubscriptionId TelemetryBus::subscribe(const std::string& topic) {
    if (topics_.count(topic) == 0) throw std::out_of_range("no such topic: " + topic);
    subscriptions_.push_back({topic, {}});
    return subscriptions_.size() - 1;
}

std::vector<TelemetryMessage> TelemetryBus::drain(SubscriptionId id) {
    auto& q = subscriptions_.at(id).queue;
    std::vector<TelemetryMessage> out(q.begin(), q.end());
    q.clear();
    return out;
}

}  // namespace airrange
