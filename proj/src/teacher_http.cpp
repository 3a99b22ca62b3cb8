#include <cstdlib>

#include "acc/error.hpp"
#include "acc/verifier.hpp"
#include "json_util.hpp"

#include <httplib.h>

namespace acc {

HttpTeacher::HttpTeacher(HttpTeacherConfig config) : config_(std::move(config)) {
    auto scheme_end = config_.url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "teacher URL must include a scheme: " + config_.url);
    auto path_start = config_.url.find('/', scheme_end + 3);
    scheme_host_port_ = config_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/v1/chat/completions" : config_.url.substr(path_start);
    if (config_.token.empty()) {
        if (const char* env = std::getenv("ACC_TEACHER_TOKEN")) config_.token = env;
    }
}

std::string HttpTeacher::generate(const TeacherRequest& request) {
    httplib::Client client(scheme_host_port_);
    if (!client.is_valid())
        throw Error(ErrorCode::TeacherUnavailable, "unsupported teacher endpoint: " + scheme_host_port_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(config_.timeout);

    nlohmann::json body = {
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.decode.temperature},
        {"max_tokens", request.decode.max_tokens},
    };
    httplib::Headers headers;
    if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);

    auto res = client.Post(path_, headers, detail::dump_line(body), "application/json");
    if (!res)
        throw Error(ErrorCode::TeacherUnavailable, "teacher request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error(ErrorCode::TeacherUnavailable, "teacher returned HTTP " + std::to_string(res->status));
    try {
        auto reply = nlohmann::json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::TeacherUnavailable, std::string("malformed teacher response: ") + e.what());
    }
}

} // namespace acc
