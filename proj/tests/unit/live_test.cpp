#include <chrono>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "airrange/live.hpp"

using namespace airrange;
using nlohmann::json;

namespace {

LiveOptions loopback(double accel = 1.0) {
    LiveOptions o;
    o.port = 0;
    o.accel = accel;
    return o;
}

}  // namespace

TEST(Live, ServesParametersOverHttp) {
    LiveRange live(loopback());
    live.start();
    ASSERT_GT(live.port(), 0);
    httplib::Client client("127.0.0.1", live.port());
    auto res = client.Get("/parameters");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    auto doc = json::parse(res->body);
    EXPECT_EQ(doc.at("SERIAL"), live.device().serial());
    EXPECT_TRUE(doc.contains("FIRMWARE"));
    EXPECT_TRUE(doc.contains("PRESSURE"));
    live.stop();
}

TEST(Live, AnonymousOffIsRejectedWithApiAuthentication) {
    auto o = loopback();
    o.profile = DefenseProfile::only(Defense::api_authentication);
    LiveRange live(o);
    live.start();
    httplib::Client client("127.0.0.1", live.port());
    auto res = client.Post("/off", "", "application/x-www-form-urlencoded");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 401);
    EXPECT_EQ(json::parse(res->body).at("RESULT"), "DENIED");
}

TEST(Live, AnonymousOffWorksWhenVulnerable) {
    LiveRange live(loopback());
    live.start();
    httplib::Client client("127.0.0.1", live.port());
    auto res = client.Post("/off", "", "application/x-www-form-urlencoded");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body).at("RESULT"), "OK");
}

TEST(Live, LoginExposesSessionHeader) {
    LiveRange live(loopback());
    live.start();
    httplib::Client client("127.0.0.1", live.port());
    auto res = client.Post("/setpass", "user=operator&pass=1111", "application/x-www-form-urlencoded");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    ASSERT_TRUE(res->has_header("X-Session"));
    EXPECT_NE(res->get_header_value("Set-Cookie").find(res->get_header_value("X-Session")), std::string::npos);
}

TEST(Live, CorsPreflight) {
    LiveRange live(loopback());
    live.start();
    httplib::Client client("127.0.0.1", live.port());
    auto res = client.Options("/setparam");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 204);
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST(Live, UnavailableWhileRebooting) {
    LiveRange live(loopback());
    live.start();
    httplib::Client client("127.0.0.1", live.port());
    auto reset = client.Post("/reset", "", "application/x-www-form-urlencoded");
    ASSERT_TRUE(reset);
    EXPECT_EQ(reset->status, 200);
    auto res = client.Get("/parameters");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
}

TEST(Live, ClockFollowsAcceleration) {
    LiveRange live(loopback(20.0));
    const auto t0 = std::chrono::steady_clock::now();
    live.start();
    while (live.sim_time() < 60.0) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_NEAR(wall, 3.0, 0.5);
    live.stop();
    live.stop();
    EXPECT_FALSE(live.running());
}

TEST(Live, PortInUseIsBindError) {
    LiveRange first(loopback());
    first.start();
    auto o = loopback();
    o.port = first.port();
    LiveRange second(o);
    EXPECT_THROW(second.start(), BindError);
}

TEST(Live, RejectsNonPositiveAcceleration) {
    EXPECT_THROW(LiveRange(loopback(0.0)), std::invalid_argument);
}
