#include "acc/token_counter.hpp"

#include <algorithm>
#include <fstream>

#include "acc/error.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace acc {

std::size_t approximate_token_count(std::string_view text) noexcept {
    std::size_t by_bytes = (text.size() + 3) / 4;
    return std::max(by_bytes, detail::count_words(text));
}

TokenCounter TokenCounter::external(std::unordered_map<std::string, std::size_t> table) {
    TokenCounter counter;
    counter.mode_ = TokenCounterMode::External;
    counter.table_ = std::make_shared<const std::unordered_map<std::string, std::size_t>>(std::move(table));
    return counter;
}

TokenCounter TokenCounter::from_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IOError, "cannot open token-count sidecar: " + path);
    std::unordered_map<std::string, std::size_t> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            auto key = j.at("piece_id").get<std::string>();
            if (auto t = j.find("trajectory_id"); t != j.end() && t->is_string())
                key = t->get<std::string>() + '\x1f' + key;
            table[key] = j.at("token_count").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::FormatError, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return external(std::move(table));
}

std::size_t TokenCounter::count_piece(std::string_view trajectory_id, std::string_view piece_id,
                                      std::string_view content) const {
    if (mode_ == TokenCounterMode::External && table_) {
        std::string scoped;
        scoped.reserve(trajectory_id.size() + 1 + piece_id.size());
        scoped.append(trajectory_id).push_back('\x1f');
        scoped.append(piece_id);
        if (auto it = table_->find(scoped); it != table_->end()) return it->second;
        if (auto it = table_->find(std::string(piece_id)); it != table_->end()) return it->second;
    }
    return approximate_token_count(content);
}

} // namespace acc
