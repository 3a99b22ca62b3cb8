#include "acc/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "acc/error.hpp"
#include "acc/parallel.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace acc {

namespace {

constexpr std::string_view kTerminalPunctuation = ".,!?;:";

std::string strip_terminal_punctuation(std::string s) {
    while (!s.empty() && (kTerminalPunctuation.find(s.back()) != std::string_view::npos || detail::is_space(s.back())))
        s.pop_back();
    return s;
}

} // namespace

std::string normalize_answer(std::string_view text) {
    auto s = strip_terminal_punctuation(detail::collapse_whitespace(detail::to_lower(text)));
    for (std::string_view article : {"a ", "an ", "the "}) {
        if (s.size() > article.size() && s.starts_with(article)) {
            s.erase(0, article.size());
            break;
        }
    }
    return s;
}

namespace {

std::string strip_diff_prefix(std::string_view path) {
    path = detail::trim(path);
    if (auto tab = path.find('\t'); tab != std::string_view::npos) path = path.substr(0, tab);
    if (path.starts_with("a/") || path.starts_with("b/")) path.remove_prefix(2);
    return std::string(path);
}

std::vector<std::string> sql_tokens(std::string_view normalized) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    };
    for (char c : normalized) {
        if (detail::is_space(c) || c == ',' || c == ';' || c == '|' || c == '(' || c == ')')
            flush();
        else
            current.push_back(c);
    }
    flush();
    return tokens;
}

std::optional<double> as_number(const std::string& token) {
    if (token.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool numbers_close(double a, double b) {
    if (a == b) return true;
    return std::fabs(a - b) <= 1e-6 * std::max(std::fabs(a), std::fabs(b));
}

bool verify_sql(std::string_view candidate, std::string_view gold) {
    auto a = sql_tokens(normalize_answer(candidate));
    auto b = sql_tokens(normalize_answer(gold));
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;
        auto x = as_number(a[i]);
        auto y = as_number(b[i]);
        if (!x || !y || !numbers_close(*x, *y)) return false;
    }
    return true;
}

} // namespace

std::vector<PatchLine> parse_patch_lines(std::string_view diff) {
    auto lines = detail::split_lines(diff);
    std::vector<PatchLine> out;
    std::string file;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = lines[i];
        auto trimmed = detail::trim(line);
        if (trimmed == "<patch>" || trimmed == "</patch>") continue;
        if (line.starts_with("diff --git ")) {
            if (auto b = line.rfind(" b/"); b != std::string_view::npos) file = strip_diff_prefix(line.substr(b + 1));
            continue;
        }
        if (line.starts_with("--- ") && i + 1 < lines.size() && lines[i + 1].starts_with("+++ ")) {
            auto old_path = strip_diff_prefix(line.substr(4));
            auto new_path = strip_diff_prefix(lines[i + 1].substr(4));
            file = new_path == "/dev/null" ? old_path : new_path;
            ++i;
            continue;
        }
        if (line.starts_with("@@") || line.starts_with("\\")) continue;
        if (line.empty() || (line[0] != '+' && line[0] != '-')) continue;
        auto text = detail::collapse_whitespace(line.substr(1));
        if (text.empty()) continue;
        out.push_back({file, line[0], std::move(text)});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool verify_answer(std::string_view candidate, std::string_view gold, AgentType type) {
    switch (type) {
    case AgentType::Search: return normalize_answer(candidate) == normalize_answer(gold);
    case AgentType::SQL: return verify_sql(candidate, gold);
    case AgentType::SWE: {
        auto a = parse_patch_lines(candidate);
        auto b = parse_patch_lines(gold);
        if (a.empty() && b.empty()) return normalize_answer(candidate) == normalize_answer(gold);
        return a == b;
    }
    }
    return false;
}

ExtractedAnswer extract_answer(std::string_view output, std::string_view marker) {
    if (!marker.empty()) {
        if (auto pos = output.rfind(marker); pos != std::string_view::npos) {
            return {std::string(detail::trim(output.substr(0, pos))),
                    std::string(detail::trim(output.substr(pos + marker.size())))};
        }
    }
    auto trimmed = detail::trim(output);
    auto nl = trimmed.rfind('\n');
    if (nl == std::string_view::npos) return {"", std::string(trimmed)};
    return {std::string(detail::trim(trimmed.substr(0, nl))), std::string(detail::trim(trimmed.substr(nl + 1)))};
}

// ---------------------------------------------------------------------------

StubTeacher::StubTeacher(std::unordered_map<std::string, Script> per_example, Script fallback)
    : scripts_(std::move(per_example)), fallback_(std::move(fallback)) {}

std::unique_ptr<StubTeacher> StubTeacher::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IOError, "cannot open teacher script: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, "teacher script " + path + ": " + e.what());
    }
    auto to_script = [&](const nlohmann::json& arr) {
        if (!arr.is_array()) throw Error(ErrorCode::FormatError, "teacher script entries must be arrays");
        Script script;
        for (const auto& v : arr) {
            if (v.is_null())
                script.emplace_back(std::nullopt);
            else if (v.is_string())
                script.emplace_back(v.get<std::string>());
            else
                throw Error(ErrorCode::FormatError, "teacher script outputs must be strings or null");
        }
        return script;
    };
    std::unordered_map<std::string, Script> scripts;
    if (auto it = j.find("examples"); it != j.end()) {
        for (const auto& [id, arr] : it->items()) scripts[id] = to_script(arr);
    }
    Script fallback;
    if (auto it = j.find("default"); it != j.end()) fallback = to_script(*it);
    return std::make_unique<StubTeacher>(std::move(scripts), std::move(fallback));
}

std::string StubTeacher::generate(const TeacherRequest& request) {
    std::size_t call = 0;
    {
        std::lock_guard lock(mutex_);
        call = calls_[request.example_id]++;
    }
    auto it = scripts_.find(request.example_id);
    const Script& script = it != scripts_.end() ? it->second : fallback_;
    if (script.empty())
        throw Error(ErrorCode::TeacherUnavailable, "stub teacher has no script for '" + request.example_id + "'");
    const auto& entry = script[std::min(call, script.size() - 1)];
    if (!entry) throw Error(ErrorCode::TeacherUnavailable, "scripted endpoint failure");
    return *entry;
}

std::size_t StubTeacher::calls(const std::string& example_id) const {
    std::lock_guard lock(mutex_);
    auto it = calls_.find(example_id);
    return it == calls_.end() ? 0 : it->second;
}

std::unique_ptr<TeacherClient> make_teacher(const std::string& target) {
    if (target.starts_with("stub:")) return StubTeacher::from_file(target.substr(5));
    HttpTeacherConfig config;
    config.url = target;
    return std::make_unique<HttpTeacher>(std::move(config));
}

// ---------------------------------------------------------------------------

VerificationResult attach_rationale(CompiledExample& example, TeacherClient& teacher, const VerifyOptions& options) {
    if (options.n_candidates == 0) throw Error(ErrorCode::InvalidArgument, "n_candidates must be at least 1");
    VerificationResult result;
    result.example_id = example.example_id;
    result.agent_type = example.agent_type;

    TeacherRequest request{example.example_id, render_prompt(example, AnswerMode::Omit), options.n_candidates,
                           options.decode};

    for (std::size_t c = 0; c < options.n_candidates; ++c) {
        std::optional<std::string> output;
        auto delay = options.backoff;
        for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, options.max_attempts); ++attempt) {
            try {
                output = teacher.generate(request);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::TeacherUnavailable) throw;
                if (attempt + 1 < options.max_attempts && delay.count() > 0) {
                    std::this_thread::sleep_for(delay);
                    delay *= 2;
                }
            }
        }
        if (!output) {
            result.deferred = true;
            return result;
        }
        ++result.candidates_tried;
        auto extracted = extract_answer(*output, options.answer_marker);
        if (verify_answer(extracted.answer, example.answer, example.agent_type)) {
            result.passed = true;
            result.retained_rationale = std::move(extracted.rationale);
            example.rationale = result.retained_rationale;
            return result;
        }
    }
    return result;
}

std::vector<VerificationResult> attach_rationales(std::vector<CompiledExample>& examples, TeacherClient& teacher,
                                                  const VerifyOptions& options, std::size_t in_flight) {
    std::vector<VerificationResult> results(examples.size());
    parallel_for(examples.size(), in_flight,
                 [&](std::size_t i) { results[i] = attach_rationale(examples[i], teacher, options); });
    return results;
}

std::map<AgentType, double> pass_rate_report(const std::vector<VerificationResult>& results) {
    std::map<AgentType, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& r : results) {
        if (r.deferred) continue;
        auto& [passed, total] = tally[r.agent_type];
        passed += r.passed ? 1 : 0;
        ++total;
    }
    std::map<AgentType, double> rates;
    for (const auto& [type, counts] : tally)
        rates[type] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    return rates;
}

} // namespace acc
