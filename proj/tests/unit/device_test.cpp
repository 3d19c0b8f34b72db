#include <gtest/gtest.h>

#include "airrange/device.hpp"
#include "support.hpp"

using namespace airrange;
using namespace airrange::testing;

namespace {

ApiOperation op(bool state_changing, int level, Plane plane) { return {"/x", state_changing, level, plane}; }

Session authed(int level) {
    Session s;
    s.authenticated = true;
    s.user_level = level;
    return s;
}

std::string reason(const std::optional<HttpResponse>& r) { return r->json().value("REASON", ""); }

}  // namespace

TEST(Authorize, VulnerableAllowsAnonymousEverything) {
    for (Plane plane : {Plane::control, Plane::management}) {
        for (int level : {0, 1, 2}) {
            EXPECT_TRUE(authorize(op(true, level, plane), nullptr, false, {}, Channel::network).allowed);
        }
    }
}

TEST(Authorize, ApiAuthenticationNeedsValidToken) {
    auto p = DefenseProfile::only(Defense::api_authentication);
    auto s = authed(0);
    EXPECT_EQ(authorize(op(true, 0, Plane::control), nullptr, false, p, Channel::network).reason,
              DenyReason::no_session);
    EXPECT_EQ(authorize(op(true, 0, Plane::control), &s, false, p, Channel::network).reason,
              DenyReason::no_session);
    EXPECT_TRUE(authorize(op(true, 0, Plane::control), &s, true, p, Channel::network).allowed);
    EXPECT_TRUE(authorize(op(false, 0, Plane::control), nullptr, false, p, Channel::network).allowed);
    Session anon;
    EXPECT_EQ(authorize(op(true, 0, Plane::control), &anon, true, p, Channel::network).reason,
              DenyReason::no_session);
}

TEST(Authorize, ServerAuthorizationComparesLevels) {
    auto p = DefenseProfile::only(Defense::server_authorization);
    auto op1 = authed(1);
    EXPECT_TRUE(authorize(op(true, 1, Plane::control), &op1, true, p, Channel::network).allowed);
    EXPECT_EQ(authorize(op(true, 2, Plane::control), &op1, true, p, Channel::network).reason,
              DenyReason::insufficient_role);
    EXPECT_EQ(authorize(op(true, 1, Plane::control), nullptr, false, p, Channel::network).reason,
              DenyReason::insufficient_role);
}

TEST(Authorize, PlaneSeparation) {
    auto p = DefenseProfile::only(Defense::plane_separation);
    auto cpc = authed(2);
    EXPECT_EQ(authorize(op(true, 0, Plane::management), &cpc, true, p, Channel::network).reason,
              DenyReason::wrong_plane);
    EXPECT_TRUE(authorize(op(true, 0, Plane::management), &cpc, true, p, Channel::management).allowed);
    EXPECT_TRUE(authorize(op(true, 0, Plane::control), nullptr, false, p, Channel::network).allowed);
}

TEST(Authorize, DenyReasonsDistinguishable) {
    EXPECT_EQ(http_status(DenyReason::no_session), 401);
    EXPECT_EQ(http_status(DenyReason::locked), 403);
    for (auto r : {DenyReason::no_session, DenyReason::insufficient_role, DenyReason::wrong_plane,
                   DenyReason::locked, DenyReason::must_change_credential}) {
        EXPECT_EQ(parse_deny_reason(to_string(r)), r);
    }
}

TEST(Endpoints, RegistryAndAliases) {
    EXPECT_EQ(find_endpoint("/getparams")->route, Route::parameters);
    EXPECT_EQ(find_endpoint("/parameter")->route, Route::parameters);
    EXPECT_EQ(find_endpoint("/paramset")->route, Route::set_param);
    EXPECT_EQ(find_endpoint("/nope"), nullptr);
    auto unit = resolve_operation(*find_endpoint("/setparam"), {{"key", "UNIT"}});
    EXPECT_EQ(unit.plane, Plane::control);
    EXPECT_EQ(unit.required_level, 2);
    auto volt = resolve_operation(*find_endpoint("/setparam"), {{"key", "OVERVOLT"}});
    EXPECT_EQ(volt.plane, Plane::management);
    EXPECT_EQ(volt.required_level, 1);
}

TEST(Device, FreshParameters) {
    Device d(device_options());
    auto p = params(d);
    EXPECT_DOUBLE_EQ(p.at("PRESSURE").get<double>(), 100.0);
    EXPECT_EQ(p.at("FIRMWARE"), "2501281017");
    EXPECT_EQ(p.at("USERLEVEL"), 0);
    EXPECT_EQ(p.at("UNIT"), "PSI");
    for (const char* key : {"MOTOR", "TARGETLOW", "TARGETHIGH", "VOLTAGE", "OVERVOLT", "UNDERVOLT", "RUNTIME",
                            "SERIAL"}) {
        EXPECT_TRUE(p.contains(key)) << key;
    }
}

TEST(Device, ParametersShowCalibratedReadingNotTruth) {
    DeviceOptions o = device_options({}, 0.0);
    o.calibration.zero_offset_psi = 943;
    Device d(std::move(o));
    EXPECT_DOUBLE_EQ(params(d).at("PRESSURE").get<double>(), 943.0);
    EXPECT_DOUBLE_EQ(d.plant().true_psi, 0.0);
}

TEST(Device, LoginIsSuccessShapedEitherWay) {
    Device d(device_options());
    auto bad = d.serve(from(HttpRequest::post("/setpass", {{"user", "cpc"}, {"pass", "0000"}})));
    EXPECT_EQ(bad->status, 200);
    EXPECT_EQ(bad->json().at("RESULT"), "OK");
    EXPECT_EQ(d.serve(from(HttpRequest::post("/getparams")))->json().at("USERLEVEL"), 0);

    auto good = d.serve(from(HttpRequest::post("/setpass", {{"user", "cpc"}, {"pass", "4321"}})));
    EXPECT_EQ(good->status, 200);
    EXPECT_EQ(d.serve(from(HttpRequest::post("/getparams")))->json().at("USERLEVEL"), 2);
}

TEST(Device, SessionCookieCarriesLevelAcrossSources) {
    Device d(device_options());
    const std::string token = login(d, "manufacturer", "1234", "10.0.0.5");
    ASSERT_FALSE(token.empty());
    auto r = d.serve(with_session(from(HttpRequest::get("/parameters"), "10.0.0.9"), token));
    EXPECT_EQ(r->json().at("USERLEVEL"), 1);
}

TEST(Device, LockoutAfterFiveFailures) {
    Device d(device_options(DefenseProfile::only(Defense::lockout)));
    for (int i = 0; i < 5; ++i) {
        auto r = d.serve(from(HttpRequest::post("/setpass", {{"user", "cpc"}, {"pass", "000" + std::to_string(i)}})));
        EXPECT_EQ(r->status, 200) << i;
    }
    auto locked = d.serve(from(HttpRequest::post("/setpass", {{"user", "cpc"}, {"pass", "4321"}})));
    EXPECT_EQ(locked->status, 403);
    EXPECT_EQ(reason(locked), "locked");
    // Another source is unaffected.
    EXPECT_FALSE(login(d, "cpc", "4321", "10.0.0.77").empty());
    // The lock lasts 60 s.
    step_seconds(d, 59.9);
    EXPECT_EQ(reason(d.serve(from(HttpRequest::post("/setpass", {{"user", "cpc"}, {"pass", "4321"}})))), "locked");
    step_seconds(d, 0.1);
    auto after = d.serve(from(HttpRequest::post("/setpass", {{"user", "cpc"}, {"pass", "4321"}})));
    EXPECT_EQ(after->status, 200);
}

TEST(Device, NoLockoutWhenVulnerable) {
    Device d(device_options());
    for (int i = 0; i < 50; ++i) {
        auto r = d.serve(from(HttpRequest::post("/setpass", {{"user", "cpc"}, {"pass", "9999"}})));
        ASSERT_EQ(r->status, 200);
    }
}

TEST(Device, AuditOnlyWithD9) {
    Device quiet(device_options());
    login(quiet, "cpc", "0000");
    login(quiet, "cpc", "4321");
    EXPECT_TRUE(quiet.audit_log().empty());

    Device d(device_options(DefenseProfile::only(Defense::audit_log)));
    login(d, "cpc", "0000");
    login(d, "cpc", "4321");
    d.serve(from(HttpRequest::post("/off")));
    auto log = d.audit_log();
    ASSERT_EQ(log.size(), 3u);
    EXPECT_EQ(log[0].kind, AuditKind::login_fail);
    EXPECT_EQ(log[1].kind, AuditKind::login_ok);
    EXPECT_EQ(log[2].kind, AuditKind::param_change);
    EXPECT_EQ(log[2].source, "10.0.0.5");
}

TEST(Device, FirstUseRotationBlocksPrivilegedCallsUntilChanged) {
    Device d(device_options(DefenseProfile::only(Defense::first_use_rotation)));
    auto r = d.serve(from(HttpRequest::post("/setpass", {{"user", "cpc"}, {"pass", "4321"}})));
    EXPECT_EQ(r->json().at("ACTION"), "must_change_credential");
    auto token = session_of(*r);
    auto denied = d.serve(with_session(from(HttpRequest::post("/calibrate", {{"scale", "2"}})), token));
    EXPECT_EQ(denied->status, 403);
    EXPECT_EQ(reason(denied), "must_change_credential");
    // Level-0 operations stay available.
    EXPECT_EQ(d.serve(with_session(from(HttpRequest::post("/off")), token))->status, 200);

    auto changed = d.serve(from(HttpRequest::post("/setcredential", {{"user", "cpc"}, {"pass", "4321"}, {"newpass", "5678"}})));
    EXPECT_EQ(changed->status, 200);
    EXPECT_EQ(d.serve(with_session(from(HttpRequest::post("/calibrate", {{"scale", "2"}})), token))->status, 200);
    EXPECT_FALSE(d.credentials().verify("cpc", "4321"));
}

TEST(Device, SetCredentialUnsupportedOnShippedFirmware) {
    Device d(device_options());
    auto r = d.serve(from(HttpRequest::post("/setcredential", {{"user", "cpc"}, {"pass", "4321"}, {"newpass", "5678"}})));
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(reason(r), "not_supported");
}

TEST(Device, OffHoldsUntilOn) {
    Device d(device_options({}, 85.0));
    d.step(0);
    ASSERT_TRUE(d.plant().motor_on);
    EXPECT_EQ(d.serve(from(HttpRequest::post("/off")))->status, 200);
    EXPECT_FALSE(d.plant().motor_on);
    step_seconds(d, 10);
    EXPECT_FALSE(d.plant().motor_on);
    EXPECT_TRUE(d.stopped_by_command());
    EXPECT_EQ(d.serve(from(HttpRequest::post("/on")))->status, 200);
    d.step(0);
    EXPECT_TRUE(d.plant().motor_on);
}

TEST(Device, SingleResetIsOfflineForExactlyEightSeconds) {
    Device d(device_options());
    ASSERT_EQ(d.serve(from(HttpRequest::post("/reset")))->status, 200);
    int offline_ticks = 0;
    while (!d.online()) {
        EXPECT_FALSE(d.serve(from(HttpRequest::get("/parameters"))));
        EXPECT_FALSE(d.plant().motor_on);
        d.step(0);
        ++offline_ticks;
    }
    EXPECT_EQ(offline_ticks, 80);
    EXPECT_EQ(d.reboot_count(), 1);
}

TEST(Device, ResetClearsSessions) {
    Device d(device_options());
    auto token = login(d, "cpc", "4321");
    ASSERT_GT(d.session_count(), 0u);
    d.serve(from(HttpRequest::post("/reset")));
    step_seconds(d, 8);
    auto r = d.serve(with_session(from(HttpRequest::get("/parameters")), token));
    EXPECT_EQ(r->json().at("USERLEVEL"), 0);
}

TEST(Device, InfeasibleSetpointsStoredWhenVulnerable) {
    Device d(device_options({}, 0.0));
    auto r = d.serve(from(HttpRequest::post("/setpressurerange", {{"low", "200"}, {"high", "210"}})));
    EXPECT_EQ(r->status, 200);
    EXPECT_DOUBLE_EQ(d.config().cut_in_psi, 200);
    step_seconds(d, 30);
    EXPECT_FALSE(d.plant().motor_on);
    EXPECT_DOUBLE_EQ(d.plant().true_psi, 0.0);
}

TEST(Device, RangeRejectedWhenHardened) {
    Device d(device_options(DefenseProfile::only(Defense::server_authorization)));
    auto token = login(d, "manufacturer", "1234");
    auto r = d.serve(with_session(from(HttpRequest::post("/setpressurerange", {{"low", "110"}, {"high", "120"}})), token));
    EXPECT_EQ(reason(r), "range_rejected");
    auto ok = d.serve(with_session(from(HttpRequest::post("/setpressurerange", {{"low", "95"}, {"high", "125"}})), token));
    EXPECT_EQ(ok->status, 200);
    auto bad = d.serve(with_session(from(HttpRequest::post("/setpressurerange", {{"low", "x"}, {"high", "125"}})), token));
    EXPECT_EQ(reason(bad), "invalid_value");
}

TEST(Device, OvervoltTripsOnNextTick) {
    Device d(device_options({}, 85.0));
    d.step(0);
    ASSERT_TRUE(d.plant().motor_on);
    EXPECT_EQ(d.serve(from(HttpRequest::post("/setparam", {{"key", "OVERVOLT"}, {"value", "200"}})))->status, 200);
    EXPECT_DOUBLE_EQ(d.config().over_volt, 200);
    d.step(0);
    EXPECT_TRUE(d.tripped());
    EXPECT_FALSE(d.plant().motor_on);
}

TEST(Device, SetParamKeys) {
    Device d(device_options());
    EXPECT_EQ(d.serve(from(HttpRequest::post("/paramset", {{"key", "UNIT"}, {"value", "BAR"}})))->status, 200);
    EXPECT_DOUBLE_EQ(params(d).at("PRESSURE").get<double>(), 6.895);
    EXPECT_EQ(params(d).at("UNIT"), "BAR");
    EXPECT_DOUBLE_EQ(d.plant().true_psi, 100.0);
    EXPECT_EQ(d.serve(from(HttpRequest::post("/setparam", {{"key", "TARGET"}, {"value", "125"}})))->status, 200);
    EXPECT_DOUBLE_EQ(d.config().cut_out_psi, 125);
    EXPECT_EQ(reason(d.serve(from(HttpRequest::post("/setparam", {{"key", "COLOR"}, {"value", "1"}})))), "unknown_key");
    EXPECT_EQ(reason(d.serve(from(HttpRequest::post("/setparam", {{"key", "UNIT"}, {"value", "kPa"}})))),
              "invalid_value");
}

TEST(Device, CalibrationTakesEffectImmediately) {
    Device d(device_options());
    d.serve(from(HttpRequest::post("/calibrate", {{"scale", "2.0"}})));
    EXPECT_DOUBLE_EQ(params(d).at("PRESSURE").get<double>(), 200.0);
    d.serve(from(HttpRequest::post("/calibratezeropoint", {{"offset", "-50"}})));
    EXPECT_DOUBLE_EQ(params(d).at("PRESSURE").get<double>(), 150.0);
    EXPECT_EQ(reason(d.serve(from(HttpRequest::post("/calibrate", {{"scale", "nan"}})))), "invalid_value");
}

TEST(Device, CalibrationNeedsCpcWithServerAuthorization) {
    Device d(device_options(DefenseProfile::only(Defense::server_authorization)));
    auto manuf = login(d, "manufacturer", "1234");
    auto r = d.serve(with_session(from(HttpRequest::post("/calibratezeropoint", {{"offset", "943"}})), manuf));
    EXPECT_EQ(reason(r), "insufficient_role");
    auto cpc = login(d, "cpc", "4321", "10.0.0.6");
    r = d.serve(with_session(from(HttpRequest::post("/calibratezeropoint", {{"offset", "943"}}), "10.0.0.6"), cpc));
    EXPECT_EQ(r->status, 200);
}

TEST(Device, UnsignedUpdateAcceptedWhenVulnerable) {
    Device d(device_options());
    auto req = HttpRequest::post("/update");
    req.body = "blob";
    req.headers["x-firmware-version"] = "evil-1";
    auto r = d.serve(from(req));
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(d.firmware_version(), "evil-1");
    EXPECT_FALSE(d.online());
}

TEST(Device, SignedFirmwareAndRootOfTrust) {
    Device d(device_options(DefenseProfile::only(Defense::signed_firmware)));
    auto unsigned_req = HttpRequest::post("/update");
    unsigned_req.body = "blob";
    EXPECT_EQ(reason(d.serve(from(unsigned_req))), "bad_signature");
    EXPECT_EQ(d.firmware_version(), "2501281017");

    auto signed_req = unsigned_req;
    signed_req.headers["x-signature"] = to_hex(sign_detached(as_bytes("blob"), vendor_keypair().secret_key));
    signed_req.headers["x-firmware-version"] = "2502010000";
    EXPECT_EQ(d.serve(from(signed_req))->status, 200);
    EXPECT_EQ(d.firmware_version(), "2502010000");

    // Without a root of trust the key itself can be swapped.
    Device swap(device_options(DefenseProfile::only(Defense::signed_firmware)));
    auto attacker = keypair_from_seed("mallory");
    auto k = swap.serve(from(HttpRequest::post("/setupdatekey", {{"key", to_hex(attacker.public_key)}})));
    EXPECT_EQ(k->status, 200);
    EXPECT_EQ(swap.verification_key(), attacker.public_key);

    Device rot(device_options(DefenseProfile::only(Defense::root_of_trust)));
    auto denied = rot.serve(from(HttpRequest::post("/setupdatekey", {{"key", to_hex(attacker.public_key)}})));
    EXPECT_EQ(denied->status, 403);
    EXPECT_EQ(reason(denied), "immutable_key");
    EXPECT_EQ(rot.verification_key(), vendor_keypair().public_key);
}

TEST(Device, ManagementListenerOnlyInMaintenanceMode) {
    DeviceOptions o = device_options(DefenseProfile::only(Defense::plane_separation));
    Device d(std::move(o));
    auto net = d.serve(from(HttpRequest::post("/calibrate", {{"scale", "2"}})));
    EXPECT_EQ(reason(net), "wrong_plane");
    auto mgmt = from(HttpRequest::post("/calibrate", {{"scale", "2"}}), "local");
    mgmt.channel = Channel::management;
    EXPECT_FALSE(d.serve(mgmt));
    d.set_maintenance_mode(true);
    EXPECT_EQ(d.serve(mgmt)->status, 200);
    // Control-plane calls still answer on the network.
    EXPECT_EQ(d.serve(from(HttpRequest::post("/off")))->status, 200);
}

TEST(Device, UnknownPathAndMethod) {
    Device d(device_options());
    EXPECT_EQ(d.serve(from(HttpRequest::get("/admin")))->status, 404);
    EXPECT_EQ(d.serve(from(HttpRequest::get("/off")))->status, 405);
    EXPECT_EQ(d.serve(from(HttpRequest::get("/")))->content_type, "text/html");
}

TEST(Device, ConsoleListsAccountsForScraping) {
    Device d(device_options());
    auto html = d.serve(from(HttpRequest::get("/")))->body;
    EXPECT_NE(html.find("<option value=\"cpc\">"), std::string::npos);
}

TEST(Device, CommissioningRotatesOrProvisions) {
    Device vuln(device_options());
    auto s = vuln.commission(5);
    EXPECT_EQ(s.at("cpc"), "4321");

    Device rot(device_options(DefenseProfile::only(Defense::first_use_rotation)));
    s = rot.commission(5);
    EXPECT_NE(s.at("cpc"), "4321");
    EXPECT_EQ(rot.credentials().verify("cpc", s.at("cpc")), Role::cpc);

    Device hidden(device_options(DefenseProfile::only(Defense::no_hidden_accounts)));
    s = hidden.commission(5);
    EXPECT_EQ(hidden.credentials().verify("cpc", s.at("cpc")), Role::cpc);
}

TEST(Device, WifiJoinAudited) {
    Device d(device_options(DefenseProfile::only(Defense::audit_log)));
    EXPECT_TRUE(d.accept_wifi_join("CATMDR2i", "192.168.50.20"));
    EXPECT_FALSE(d.accept_wifi_join("guess", "192.168.50.20"));
    EXPECT_EQ(d.audit_log().size(), 2u);
}
