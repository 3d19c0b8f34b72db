#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace airrange {

enum class Method { get, post };

/// Which listener a request arrived on. The management channel is a
/// local-only port that is normally disabled.
enum class Channel { network, management };

using FormFields = std::map<std::string, std::string>;

std::string form_encode(const FormFields& fields);
FormFields form_decode(std::string_view body);
std::string url_decode(std::string_view text);

struct HttpRequest {
    Method method = Method::get;
    std::string path;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string body;
    std::string source;  // client address
    Channel channel = Channel::network;

    [[nodiscard]] FormFields form() const { return form_decode(body); }
    [[nodiscard]] std::optional<std::string> header(std::string_view name) const;
    [[nodiscard]] std::optional<std::string> session_token() const;

    static HttpRequest get(std::string path);
    static HttpRequest post(std::string path, const FormFields& fields = {});
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;

    [[nodiscard]] nlohmann::json json() const;  // throws on non-JSON body

    static HttpResponse ok_json(const nlohmann::json& j, int status = 200);
    static HttpResponse html(std::string body);
};

}  // namespace airrange
