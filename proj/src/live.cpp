#include "airrange/live.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include <httplib.h>

namespace airrange {

struct LiveRange::Servers {
    httplib::Server network;
    httplib::Server management;
};

namespace {

void install_handler(httplib::Server& server, Device& device, std::mutex& mu, Channel channel) {
    server.set_pre_routing_handler([&device, &mu, channel](const httplib::Request& req, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, X-Session, X-Signature, X-Firmware-Version");
        res.set_header("Access-Control-Expose-Headers", "X-Session");
        if (req.method == "OPTIONS") {
            res.status = 204;
            return httplib::Server::HandlerResponse::Handled;
        }
        HttpRequest r;
        if (req.method == "GET") {
            r.method = Method::get;
        } else if (req.method == "POST") {
            r.method = Method::post;
        } else {
            res.status = 405;
            res.set_content(R"({"RESULT":"ERROR","REASON":"method_not_allowed"})", "application/json");
            return httplib::Server::HandlerResponse::Handled;
        }
        r.path = req.path;
        for (const auto& [name, value] : req.headers) {
            std::string lower = name;
            std::transform(lower.begin(), lower.end(), lower.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            r.headers[lower] = value;
        }
        r.body = req.body;
        r.source = req.remote_addr;
        r.channel = channel;

        std::optional<HttpResponse> response;
        {
            std::lock_guard lock(mu);
            response = device.serve(r);
        }
        if (!response) {
            // Rebooting controller: nothing answers.
            res.status = 503;
            res.set_content(R"({"RESULT":"ERROR","REASON":"unavailable"})", "application/json");
            return httplib::Server::HandlerResponse::Handled;
        }
        res.status = response->status;
        for (const auto& [name, value] : response->headers) {
            res.set_header(name, value);
            if (name == "Set-Cookie" && value.rfind("session=", 0) == 0) {
                res.set_header("X-Session", value.substr(8, value.find(';') - 8));
            }
        }
        res.set_content(response->body, response->content_type);
        return httplib::Server::HandlerResponse::Handled;
    });
}

}  // namespace

LiveRange::LiveRange(LiveOptions options) : options_(std::move(options)), servers_(std::make_unique<Servers>()) {
    if (!(options_.accel > 0)) throw std::invalid_argument("accel must be positive");
    Scenario s;
    s.name = "live";
    s.seed = options_.seed;
    s.duration_s = 1e9;
    s.profile = options_.profile;
    s.maintenance_mode = options_.maintenance_mode;
    s.initial_psi = options_.initial_psi;
    s.workcell.enabled = options_.workcell;
    range_ = std::make_unique<Range>(s, Range::Options{false});
    // httplib defaults to SO_REUSEPORT, which would let a second range share
    // the port silently and split the traffic.
    for (httplib::Server* server : {&servers_->network, &servers_->management}) {
        server->set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
    }
    install_handler(servers_->network, range_->device(), sim_mu_, Channel::network);
    install_handler(servers_->management, range_->device(), sim_mu_, Channel::management);
}

LiveRange::~LiveRange() { stop(); }

double LiveRange::sim_time() const {
    return static_cast<double>(ticks_.load()) * range_->scenario().plant.tick;
}

void LiveRange::start() {
    if (running_) return;
    if (options_.port == 0) {
        port_ = servers_->network.bind_to_any_port(options_.host);
        if (port_ < 0) throw BindError("cannot bind " + options_.host);
    } else {
        if (!servers_->network.bind_to_port(options_.host, options_.port)) {
            throw BindError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
        }
        port_ = options_.port;
    }
    if (options_.mgmt_port) {
        // The maintenance listener never leaves the host.
        if (*options_.mgmt_port == 0) {
            int p = servers_->management.bind_to_any_port("127.0.0.1");
            if (p < 0) throw BindError("cannot bind maintenance listener");
            mgmt_port_ = p;
        } else if (!servers_->management.bind_to_port("127.0.0.1", *options_.mgmt_port)) {
            throw BindError("cannot bind maintenance listener on port " + std::to_string(*options_.mgmt_port));
        } else {
            mgmt_port_ = *options_.mgmt_port;
        }
    }
    running_ = true;
    listener_ = std::thread([this] { servers_->network.listen_after_bind(); });
    if (mgmt_port_) mgmt_listener_ = std::thread([this] { servers_->management.listen_after_bind(); });
    // stop() is a no-op on a server that is not yet listening; make sure it is.
    servers_->network.wait_until_ready();
    if (mgmt_port_) servers_->management.wait_until_ready();
    clock_ = std::thread([this] { clock_loop(); });
}

void LiveRange::clock_loop() {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const double ticks_per_wall_second = options_.accel * static_cast<double>(range_->scenario().ticks_per_second());
    while (running_) {
        const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
        const auto target = static_cast<std::int64_t>(elapsed * ticks_per_wall_second);
        while (running_ && ticks_.load() < target) {
            std::lock_guard lock(sim_mu_);
            range_->step();
            ++ticks_;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
}

void LiveRange::stop() {
    std::lock_guard lock(stop_mu_);
    running_ = false;
    servers_->network.stop();
    servers_->management.stop();
    if (clock_.joinable()) clock_.join();
    if (listener_.joinable()) listener_.join();
    if (mgmt_listener_.joinable()) mgmt_listener_.join();
}

}  // namespace airrange
