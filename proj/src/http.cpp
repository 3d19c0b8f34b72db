#include "airrange/http.hpp"

#include <algorithm>
#include <cctype>

namespace airrange {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string percent_encode(std::string_view text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else if (c == ' ') {
            out.push_back('+');
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0x0f]);
        }
    }
    return out;
}

}  // namespace

std::string url_decode(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '+') {
            out.push_back(' ');
        } else if (c == '%' && i + 2 < text.size() && hex_value(text[i + 1]) >= 0 &&
                   hex_value(text[i + 2]) >= 0) {
            out.push_back(static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2])));
            i += 2;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string form_encode(const FormFields& fields) {
    std::string out;
    for (const auto& [k, v] : fields) {
        if (!out.empty()) out.push_back('&');
        out += percent_encode(k);
        out.push_back('=');
        out += percent_encode(v);
    }
    return out;
}

FormFields form_decode(std::string_view body) {
    FormFields fields;
    std::size_t start = 0;
    while (start < body.size()) {
        auto end = body.find('&', start);
        if (end == std::string_view::npos) end = body.size();
        auto pair = body.substr(start, end - start);
        if (!pair.empty()) {
            auto eq = pair.find('=');
            if (eq == std::string_view::npos) {
                fields[url_decode(pair)] = "";
            } else {
                fields[url_decode(pair.substr(0, eq))] = url_decode(pair.substr(eq + 1));
            }
        }
        start = end + 1;
    }
    return fields;
}

std::optional<std::string> HttpRequest::header(std::string_view name) const {
    auto it = headers.find(lower(name));
    if (it == headers.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> HttpRequest::session_token() const {
    if (auto h = header("x-session")) return *h;
    auto cookie = header("cookie");
    if (!cookie) return std::nullopt;
    std::string_view c = *cookie;
    std::size_t start = 0;
    while (start < c.size()) {
        auto end = c.find(';', start);
        if (end == std::string_view::npos) end = c.size();
        auto part = c.substr(start, end - start);
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        if (part.rfind("session=", 0) == 0) return std::string(part.substr(8));
        start = end + 1;
    }
    return std::nullopt;
}

HttpRequest HttpRequest::get(std::string path) {
    HttpRequest r;
    r.method = Method::get;
    r.path = std::move(path);
    return r;
}

HttpRequest HttpRequest::post(std::string path, const FormFields& fields) {
    HttpRequest r;
    r.method = Method::post;
    r.path = std::move(path);
    r.body = form_encode(fields);
    r.headers["content-type"] = "application/x-www-form-urlencoded";
    return r;
}

nlohmann::json HttpResponse::json() const { return nlohmann::json::parse(body); }

HttpResponse HttpResponse::ok_json(const nlohmann::json& j, int status) {
    HttpResponse r;
    r.status = status;
    r.body = j.dump();
    return r;
}

HttpResponse HttpResponse::html(std::string body) {
    HttpResponse r;
    r.content_type = "text/html";
    r.body = std::move(body);
    return r;
}

}  // namespace airrange
