#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "airrange/range.hpp"

namespace airrange {

class BindError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LiveOptions {
    std::string host = "127.0.0.1";
    int port = 8080;                 // 0 picks a free port
    std::optional<int> mgmt_port;    // local maintenance listener
    double accel = 1.0;              // simulated seconds per wall second
    DefenseProfile profile;
    bool maintenance_mode = false;
    std::uint64_t seed = 1;
    double initial_psi = 100.0;
    bool workcell = true;
};

/// The range driven by the wall clock, with the controller reachable over a
/// real loopback HTTP listener.
class LiveRange {
public:
    explicit LiveRange(LiveOptions options);
    ~LiveRange();

    LiveRange(const LiveRange&) = delete;
    LiveRange& operator=(const LiveRange&) = delete;

    /// Binds the listeners and starts the clock. Throws BindError.
    void start();
    /// Idempotent; joins every thread.
    void stop();

    [[nodiscard]] int port() const { return port_; }
    [[nodiscard]] std::optional<int> mgmt_port() const { return mgmt_port_; }
    [[nodiscard]] double sim_time() const;
    [[nodiscard]] bool running() const { return running_; }
    Device& device() { return range_->device(); }

private:
    struct Servers;

    void clock_loop();

    LiveOptions options_;
    std::unique_ptr<Range> range_;
    std::unique_ptr<Servers> servers_;
    std::thread clock_;
    std::thread listener_;
    std::thread mgmt_listener_;
    std::atomic<bool> running_{false};
    std::atomic<std::int64_t> ticks_{0};
    std::mutex stop_mu_;
    std::mutex sim_mu_;  // guards range_ between the clock and the listeners
    int port_ = 0;
    std::optional<int> mgmt_port_;
};

}  // namespace airrange
