#include "acc/trajectory.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "acc/parallel.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace acc {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(AgentType type) noexcept {
    switch (type) {
    case AgentType::Search: return "Search";
    case AgentType::SWE: return "SWE";
    case AgentType::SQL: return "SQL";
    }
    return "Search";
}

std::optional<AgentType> parse_agent_type(std::string_view text) {
    if (detail::iequals(text, "search")) return AgentType::Search;
    if (detail::iequals(text, "swe")) return AgentType::SWE;
    if (detail::iequals(text, "sql")) return AgentType::SQL;
    return std::nullopt;
}

std::string_view to_string(ActionKind kind) noexcept {
    switch (kind) {
    case ActionKind::SearchQuery: return "SearchQuery";
    case ActionKind::VisitDoc: return "VisitDoc";
    case ActionKind::OpenFile: return "OpenFile";
    case ActionKind::ModifyFile: return "ModifyFile";
    case ActionKind::ExecuteSQL: return "ExecuteSQL";
    case ActionKind::Other: return "Other";
    }
    return "Other";
}

std::optional<ActionKind> parse_action_kind(std::string_view text) {
    for (auto kind : {ActionKind::SearchQuery, ActionKind::VisitDoc, ActionKind::OpenFile,
                      ActionKind::ModifyFile, ActionKind::ExecuteSQL, ActionKind::Other}) {
        if (detail::iequals(text, to_string(kind))) return kind;
    }
    return std::nullopt;
}

std::vector<InteractionTurn> history_before(const Trajectory& traj, std::size_t t) {
    if (t < 1 || t > traj.k())
        throw Error(ErrorCode::InvalidArgument, "turn index out of range: " + std::to_string(t));
    return {traj.turns.begin(), traj.turns.begin() + static_cast<std::ptrdiff_t>(t - 1)};
}

Trajectory validate_trajectory(Trajectory raw) {
    if (detail::trim(raw.final_answer).empty())
        throw Error(ErrorCode::MissingFinalAnswer, "trajectory '" + raw.id + "' has no final answer");
    for (std::size_t i = 0; i < raw.turns.size(); ++i) {
        if (raw.turns[i].index != i + 1)
            throw Error(ErrorCode::NonContiguousTurns,
                        "trajectory '" + raw.id + "': expected turn " + std::to_string(i + 1) + ", found " +
                            std::to_string(raw.turns[i].index));
        std::set<std::string_view> seen;
        for (const auto& item : raw.turns[i].observation.items) {
            if (!seen.insert(item.item_id).second)
                throw Error(ErrorCode::DuplicateItemId, "trajectory '" + raw.id + "' turn " +
                                                            std::to_string(i + 1) + ": duplicate item_id '" +
                                                            item.item_id + "'");
        }
    }
    if (raw.env) {
        for (const auto& table : raw.env->tables) {
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                if (table.rows[r].size() != table.header.size())
                    throw Error(ErrorCode::ArityMismatch,
                                "trajectory '" + raw.id + "' table '" + table.name + "' row " + std::to_string(r) +
                                    " has " + std::to_string(table.rows[r].size()) + " values under a " +
                                    std::to_string(table.header.size()) + "-column header");
            }
        }
    }
    return raw;
}

namespace {

[[noreturn]] void schema_error(const std::string& what) { throw Error(ErrorCode::SchemaError, what); }

const json& require(const json& obj, const char* key, const char* context) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) schema_error(std::string("missing required field '") + key + "' in " + context);
    return *it;
}

std::string require_string(const json& obj, const char* key, const char* context) {
    const auto& v = require(obj, key, context);
    if (!v.is_string()) schema_error(std::string("field '") + key + "' in " + context + " must be a string");
    return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) schema_error(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::optional<bool> optional_flag(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_boolean()) schema_error(std::string("flag '") + key + "' must be a boolean");
    return it->get<bool>();
}

const json& require_array(const json& obj, const char* key, const char* context) {
    const auto& v = require(obj, key, context);
    if (!v.is_array()) schema_error(std::string("field '") + key + "' in " + context + " must be an array");
    return v;
}

std::string cell_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "NULL";
    return v.dump();
}

bool mentions_identifier(std::string_view haystack, std::string_view name) {
    if (name.empty()) return false;
    auto lower_hay = detail::to_lower(haystack);
    auto lower_name = detail::to_lower(name);
    auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    for (auto pos = lower_hay.find(lower_name); pos != std::string::npos; pos = lower_hay.find(lower_name, pos + 1)) {
        bool left_ok = pos == 0 || !ident(lower_hay[pos - 1]);
        auto end = pos + lower_name.size();
        bool right_ok = end >= lower_hay.size() || !ident(lower_hay[end]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

struct PendingFlags {
    // (turn position, item position) pairs whose `visited` flag was absent.
    std::vector<std::pair<std::size_t, std::size_t>> items;
    std::vector<std::size_t> files_opened;
    std::vector<std::size_t> files_patched;
    std::vector<std::size_t> tables;
};

void derive_flags(Trajectory& traj, const PendingFlags& pending) {
    auto acted_on = [&](std::string_view target, std::initializer_list<ActionKind> kinds) {
        for (const auto& turn : traj.turns) {
            for (auto kind : kinds)
                if (turn.action.kind == kind && detail::trim(turn.action.payload) == target) return true;
        }
        return false;
    };
    for (auto [t, i] : pending.items) {
        auto& item = traj.turns[t].observation.items[i];
        item.visited = acted_on(item.item_id, {ActionKind::VisitDoc});
    }
    for (auto f : pending.files_opened) {
        auto& file = traj.env->files[f];
        file.opened = acted_on(file.path, {ActionKind::OpenFile, ActionKind::ModifyFile});
    }
    for (auto f : pending.files_patched) {
        auto& file = traj.env->files[f];
        file.in_patch = acted_on(file.path, {ActionKind::ModifyFile});
    }
    for (auto ti : pending.tables) {
        auto& table = traj.env->tables[ti];
        table.queried = false;
        for (const auto& turn : traj.turns) {
            if (turn.action.kind == ActionKind::ExecuteSQL && mentions_identifier(turn.action.payload, table.name)) {
                table.queried = true;
                break;
            }
        }
    }
}

Trajectory from_json(const json& j, const ParseOptions& options) {
    if (!j.is_object()) schema_error("record is not an object");
    Trajectory traj;
    traj.id = require_string(j, "id", "record");

    auto type_text = require_string(j, "agent_type", "record");
    auto type = parse_agent_type(type_text);
    if (!type) schema_error("unknown agent_type '" + type_text + "'");
    if (options.agent_type_hint && *options.agent_type_hint != *type)
        throw Error(ErrorCode::AgentTypeMismatch, "record agent_type " + std::string(to_string(*type)) +
                                                      " conflicts with hint " +
                                                      std::string(to_string(*options.agent_type_hint)));
    traj.agent_type = *type;
    traj.question = require_string(j, "question", "record");

    PendingFlags pending;
    auto flag_or_pending = [&](const json& obj, const char* key, auto&& on_absent) {
        auto flag = optional_flag(obj, key);
        if (flag) return *flag;
        if (!options.derive_missing_flags) schema_error(std::string("missing required flag '") + key + "'");
        on_absent();
        return false;
    };

    if (auto it = j.find("turns"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) schema_error("field 'turns' must be an array");
        for (const auto& jt : *it) {
            if (!jt.is_object()) schema_error("turn is not an object");
            InteractionTurn turn;
            const auto& idx = require(jt, "index", "turn");
            if (!idx.is_number_integer() || idx.get<long long>() < 1) schema_error("turn index must be a positive integer");
            turn.index = idx.get<std::size_t>();
            turn.reasoning = optional_string(jt, "reasoning");
            const auto& ja = require(jt, "action", "turn");
            auto kind_text = require_string(ja, "kind", "action");
            turn.action.kind = parse_action_kind(kind_text).value_or(ActionKind::Other);
            turn.action.payload = optional_string(ja, "payload");
            const auto& jo = require(jt, "observation", "turn");
            if (!jo.is_object()) schema_error("observation is not an object");
            const auto& items = require_array(jo, "items", "observation");
            std::size_t turn_pos = traj.turns.size();
            for (const auto& ji : items) {
                ObsItem item;
                item.item_id = require_string(ji, "item_id", "observation item");
                if (auto t = ji.find("title"); t != ji.end() && !t->is_null()) {
                    if (!t->is_string()) schema_error("field 'title' must be a string");
                    item.title = t->get<std::string>();
                }
                item.content = optional_string(ji, "content");
                std::size_t item_pos = turn.observation.items.size();
                item.visited = flag_or_pending(ji, "visited", [&] { pending.items.emplace_back(turn_pos, item_pos); });
                turn.observation.items.push_back(std::move(item));
            }
            traj.turns.push_back(std::move(turn));
        }
    }

    const auto& jf = require(j, "final", "record");
    if (!jf.is_object()) schema_error("field 'final' must be an object");
    traj.final_reasoning = optional_string(jf, "reasoning");
    auto answer = jf.find("answer");
    if (answer == jf.end() || answer->is_null() || !answer->is_string() || answer->get<std::string>().empty())
        throw Error(ErrorCode::SchemaError, "missing required field 'final.answer'");
    traj.final_answer = answer->get<std::string>();

    if (auto it = j.find("env"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) schema_error("field 'env' must be an object");
        EnvironmentSnapshot env;
        if (auto files = it->find("files"); files != it->end() && !files->is_null()) {
            if (!files->is_array()) schema_error("field 'env.files' must be an array");
            for (const auto& jfile : *files) {
                SnapshotFile file;
                file.path = require_string(jfile, "path", "env file");
                file.content = optional_string(jfile, "content");
                std::size_t pos = env.files.size();
                file.opened = flag_or_pending(jfile, "opened", [&] { pending.files_opened.push_back(pos); });
                file.in_patch = flag_or_pending(jfile, "in_patch", [&] { pending.files_patched.push_back(pos); });
                env.files.push_back(std::move(file));
            }
        }
        if (auto tables = it->find("tables"); tables != it->end() && !tables->is_null()) {
            if (!tables->is_array()) schema_error("field 'env.tables' must be an array");
            for (const auto& jtab : *tables) {
                SnapshotTable table;
                table.name = require_string(jtab, "name", "env table");
                for (const auto& h : require_array(jtab, "header", "env table")) table.header.push_back(cell_text(h));
                if (auto rows = jtab.find("rows"); rows != jtab.end() && !rows->is_null()) {
                    if (!rows->is_array()) schema_error("field 'rows' must be an array");
                    for (const auto& jrow : *rows) {
                        if (!jrow.is_array()) schema_error("table row must be an array");
                        std::vector<std::string> row;
                        for (const auto& v : jrow) row.push_back(cell_text(v));
                        table.rows.push_back(std::move(row));
                    }
                }
                std::size_t pos = env.tables.size();
                table.queried = flag_or_pending(jtab, "queried", [&] { pending.tables.push_back(pos); });
                env.tables.push_back(std::move(table));
            }
        }
        traj.env = std::move(env);
    }

    derive_flags(traj, pending);
    return traj;
}

ordered_json to_json(const Trajectory& traj) {
    ordered_json j;
    j["id"] = traj.id;
    j["agent_type"] = to_string(traj.agent_type);
    j["question"] = traj.question;
    auto turns = ordered_json::array();
    for (const auto& turn : traj.turns) {
        ordered_json jt;
        jt["index"] = turn.index;
        jt["reasoning"] = turn.reasoning;
        jt["action"] = {{"kind", to_string(turn.action.kind)}, {"payload", turn.action.payload}};
        auto items = ordered_json::array();
        for (const auto& item : turn.observation.items) {
            ordered_json ji;
            ji["item_id"] = item.item_id;
            ji["title"] = item.title ? ordered_json(*item.title) : ordered_json(nullptr);
            ji["content"] = item.content;
            ji["visited"] = item.visited;
            items.push_back(std::move(ji));
        }
        jt["observation"] = {{"items", std::move(items)}};
        turns.push_back(std::move(jt));
    }
    j["turns"] = std::move(turns);
    j["final"] = {{"reasoning", traj.final_reasoning}, {"answer", traj.final_answer}};
    if (traj.env) {
        auto files = ordered_json::array();
        for (const auto& f : traj.env->files) {
            ordered_json jf;
            jf["path"] = f.path;
            jf["content"] = f.content;
            jf["opened"] = f.opened;
            jf["in_patch"] = f.in_patch;
            files.push_back(std::move(jf));
        }
        auto tables = ordered_json::array();
        for (const auto& t : traj.env->tables) {
            ordered_json jt;
            jt["name"] = t.name;
            jt["header"] = t.header;
            jt["rows"] = t.rows;
            jt["queried"] = t.queried;
            tables.push_back(std::move(jt));
        }
        j["env"] = {{"files", std::move(files)}, {"tables", std::move(tables)}};
    }
    return j;
}

} // namespace

Trajectory parse_trajectory_record(std::string_view line, const ParseOptions& options) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("malformed record: ") + e.what());
    }
    return from_json(j, options);
}

ParseResult parse_trajectories(std::string_view input, const ParseOptions& options) {
    struct Slot {
        std::size_t line = 0;
        std::string_view text;
        std::optional<Trajectory> traj;
        std::optional<ParseIssue> issue;
    };
    std::vector<Slot> slots;
    std::size_t line_no = 0;
    for (auto line : detail::split_lines(input)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        slots.push_back({line_no, line, std::nullopt, std::nullopt});
    }

    parallel_for(slots.size(), options.jobs, [&](std::size_t i) {
        auto& slot = slots[i];
        try {
            slot.traj = validate_trajectory(parse_trajectory_record(slot.text, options));
        } catch (const Error& e) {
            slot.issue = ParseIssue{slot.line, e.code(), e.what()};
        }
    });

    ParseResult result;
    for (auto& slot : slots) {
        if (slot.issue) {
            if (options.strictness == Strictness::Strict)
                throw Error(slot.issue->code, "line " + std::to_string(slot.line) + ": " + slot.issue->message);
            result.issues.push_back(std::move(*slot.issue));
        } else {
            result.trajectories.push_back(std::move(*slot.traj));
        }
    }
    return result;
}

ParseResult parse_trajectory_file(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IOError, "cannot open trajectory file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trajectories(buf.str(), options);
}

std::string serialize_trajectory(const Trajectory& traj) { return detail::dump_line(to_json(traj)); }

} // namespace acc
