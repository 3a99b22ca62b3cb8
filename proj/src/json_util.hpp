#pragma once

#include <json.hpp>
#include <string>

namespace acc::detail {

/// Single-line dump that never throws on invalid UTF-8 in agent logs.
template <typename Json>
std::string dump_line(const Json& j) {
    return j.dump(-1, ' ', false, nlohmann::detail::error_handler_t::replace);
}

} // namespace acc::detail
