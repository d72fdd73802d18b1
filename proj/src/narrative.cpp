#include "avatar_sync/narrative.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace avatar_sync {

using nlohmann::json;

namespace {

class Linter {
public:
    std::vector<Finding> findings;

    void error(std::string field, std::string reason) {
        findings.push_back({Severity::Error, std::move(field), std::move(reason)});
    }
    void warning(std::string field, std::string reason) {
        findings.push_back({Severity::Warning, std::move(field), std::move(reason)});
    }

    // Returns the member if present and of the expected kind.
    const json* member(const json& obj, const std::string& path, std::string_view name, bool required,
                       bool (json::*is_kind)() const noexcept, std::string_view kind_name) {
        auto it = obj.find(name);
        if (it == obj.end()) {
            if (required) error(path, "required field is missing");
            return nullptr;
        }
        if (!((*it).*is_kind)()) {
            error(path, "expected " + std::string(kind_name));
            return nullptr;
        }
        return &*it;
    }

    bool finite_number(const json& obj, const std::string& path, std::string_view name) {
        const json* v = member(obj, path, name, true, &json::is_number, "number");
        if (v && !std::isfinite(v->get<double>())) {
            error(path, "expected finite number");
            return false;
        }
        return v != nullptr;
    }
};

std::string at(std::string_view base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; }

bool is_lower_ascii_word(const std::string& w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

void lint_pose(Linter& l, const json& pose, const std::string& path) {
    l.finite_number(pose, path + ".x", "x");
    l.finite_number(pose, path + ".y", "y");
    l.finite_number(pose, path + ".rot_deg", "rot_deg");
}

void lint_quiz(Linter& l, const json& quiz) {
    if (quiz.empty()) {
        l.error("quiz", "at least one question is required");
        return;
    }
    for (std::size_t i = 0; i < quiz.size(); ++i) {
        const json& q = quiz[i];
        std::string path = at("quiz", i);
        if (!q.is_object()) {
            l.error(path, "expected object");
            continue;
        }
        const json* text = l.member(q, path + ".question", "question", true, &json::is_string, "string");
        if (text && text->get<std::string>().empty()) l.error(path + ".question", "must not be empty");
        const json* answers =
            l.member(q, path + ".accepted_answers", "accepted_answers", true, &json::is_array, "array");
        if (!answers) continue;
        if (answers->empty()) {
            l.error(path + ".accepted_answers", "at least one accepted answer is required");
            continue;
        }
        std::set<std::string> seen;
        for (std::size_t k = 0; k < answers->size(); ++k) {
            const json& a = (*answers)[k];
            std::string apath = at(path + ".accepted_answers", k);
            if (!a.is_string()) {
                l.error(apath, "expected string");
                continue;
            }
            auto norm = normalize_answer(a.get<std::string>());
            if (norm.empty()) {
                l.error(apath, "answer is blank after normalization");
            } else if (!seen.insert(norm).second) {
                l.warning(apath, "duplicate of an earlier answer after normalization");
            }
        }
    }
}

void lint_words(Linter& l, const json& words) {
    if (words.empty()) {
        l.error("words", "at least one word is required");
        return;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < words.size(); ++i) {
        const json& w = words[i];
        if (!w.is_string() || !is_lower_ascii_word(w.get<std::string>())) {
            l.error(at("words", i), "expected a lowercase word of letters a-z");
            continue;
        }
        if (!seen.insert(w.get<std::string>()).second) l.warning(at("words", i), "duplicate word");
    }
}

void lint_hidden_objects(Linter& l, const json& ho) {
    if (const json* pose = l.member(ho, "hidden_objects.target_pose", "target_pose", true, &json::is_object, "object"))
        lint_pose(l, *pose, "hidden_objects.target_pose");
    if (const json* tol =
            l.member(ho, "hidden_objects.tolerance", "tolerance", false, &json::is_object, "object")) {
        if (l.finite_number(*tol, "hidden_objects.tolerance.distance", "distance") && (*tol)["distance"].get<double>() < 0)
            l.error("hidden_objects.tolerance.distance", "must be non-negative");
        if (l.finite_number(*tol, "hidden_objects.tolerance.degrees", "degrees")) {
            double d = (*tol)["degrees"].get<double>();
            if (d < 0 || d > 180) l.error("hidden_objects.tolerance.degrees", "must be within [0, 180]");
        }
    }
    const json* objects = l.member(ho, "hidden_objects.objects", "objects", true, &json::is_array, "array");
    if (!objects) return;
    if (objects->empty()) {
        l.error("hidden_objects.objects", "at least one object is required");
        return;
    }
    std::set<std::string> ids;
    bool duplicate = false;
    for (std::size_t i = 0; i < objects->size(); ++i) {
        const json& o = (*objects)[i];
        std::string path = at("hidden_objects.objects", i);
        if (!o.is_object()) {
            l.error(path, "expected object");
            continue;
        }
        if (const json* id = l.member(o, path + ".id", "id", true, &json::is_string, "string")) {
            if (id->get<std::string>().empty()) l.error(path + ".id", "must not be empty");
            else if (!ids.insert(id->get<std::string>()).second) duplicate = true;
        }
        l.finite_number(o, path + ".x", "x");
        l.finite_number(o, path + ".y", "y");
    }
    if (duplicate) l.error("hidden_objects.objects", "object ids must be unique");
}

Pose pose_from(const json& j) { return Pose{j.at("x").get<double>(), j.at("y").get<double>(), j.at("rot_deg").get<double>()}; }

json pose_to(const Pose& p) { return json{{"x", p.x}, {"y", p.y}, {"rot_deg", p.rot_deg}}; }

}  // namespace

std::vector<Finding> validate_config(const json& doc) {
    Linter l;
    if (!doc.is_object()) {
        l.error("$", "expected a JSON object");
        return l.findings;
    }
    if (const json* title = l.member(doc, "title", "title", true, &json::is_string, "string"))
        if (title->get<std::string>().empty()) l.error("title", "must not be empty");
    l.member(doc, "intro_text", "intro_text", false, &json::is_string, "string");
    if (const json* steps = l.member(doc, "tutorial_steps", "tutorial_steps", false, &json::is_array, "array"))
        for (std::size_t i = 0; i < steps->size(); ++i)
            if (!(*steps)[i].is_string()) l.error(at("tutorial_steps", i), "expected string");
    if (const json* target =
            l.member(doc, "mission_target", "mission_target", false, &json::is_number_integer, "integer"))
        if (target->get<std::int64_t>() < 1) l.error("mission_target", "must be at least 1");
    if (const json* dances = l.member(doc, "dances", "dances", false, &json::is_array, "array")) {
        if (dances->size() != 4) l.error("dances", "expected exactly 4 display names");
        else
            for (std::size_t i = 0; i < 4; ++i)
                if (!(*dances)[i].is_string() || (*dances)[i].get<std::string>().empty())
                    l.error(at("dances", i), "expected non-empty string");
    }
    if (const json* track = l.member(doc, "chaos_track", "chaos_track", false, &json::is_string, "string"))
        if (track->get<std::string>().empty()) l.error("chaos_track", "must not be empty");
    if (const json* window =
            l.member(doc, "burst_window_ms", "burst_window_ms", false, &json::is_number_integer, "integer"))
        if (window->get<std::int64_t>() < 1) l.error("burst_window_ms", "must be at least 1");
    if (const json* tau = l.member(doc, "chaos_threshold", "chaos_threshold", false, &json::is_number, "number")) {
        double v = tau->get<double>();
        if (!std::isfinite(v) || v <= 0) l.error("chaos_threshold", "must be a positive finite number");
    }
    if (const json* quiz = l.member(doc, "quiz", "quiz", true, &json::is_array, "array")) lint_quiz(l, *quiz);
    if (const json* words = l.member(doc, "words", "words", true, &json::is_array, "array")) lint_words(l, *words);
    if (const json* ho = l.member(doc, "hidden_objects", "hidden_objects", true, &json::is_object, "object"))
        lint_hidden_objects(l, *ho);
    return l.findings;
}

bool has_errors(const std::vector<Finding>& findings) {
    return std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::Error; });
}

NarrativeConfig config_from_json(const json& doc) {
    for (const auto& f : validate_config(doc))
        if (f.severity == Severity::Error) throw ConfigValidationError(f.field, f.reason);

    NarrativeConfig cfg;
    cfg.title = doc.at("title").get<std::string>();
    cfg.intro_text = doc.value("intro_text", std::string{});
    cfg.tutorial_steps = doc.value("tutorial_steps", std::vector<std::string>{});
    cfg.mission_target = doc.value("mission_target", kDefaultMissionTarget);
    if (doc.contains("dances"))
        for (std::size_t i = 0; i < 4; ++i) cfg.dances[i] = doc["dances"][i].get<std::string>();
    cfg.chaos_track = doc.value("chaos_track", cfg.chaos_track);
    cfg.burst_window_ms = doc.value("burst_window_ms", kDefaultBurstWindowMs);
    if (doc.contains("chaos_threshold")) cfg.chaos_threshold = Ratio::from_double(doc["chaos_threshold"].get<double>());
    for (const auto& q : doc.at("quiz"))
        cfg.quiz.push_back({q.at("question").get<std::string>(), q.at("accepted_answers").get<std::vector<std::string>>()});
    cfg.words = doc.at("words").get<std::vector<std::string>>();
    const json& ho = doc.at("hidden_objects");
    cfg.hidden_objects.target_pose = pose_from(ho.at("target_pose"));
    if (ho.contains("tolerance")) {
        cfg.hidden_objects.tolerance.distance = ho["tolerance"].at("distance").get<double>();
        cfg.hidden_objects.tolerance.degrees = ho["tolerance"].at("degrees").get<double>();
    }
    for (const auto& o : ho.at("objects"))
        cfg.hidden_objects.objects.push_back({o.at("id").get<std::string>(), o.at("x").get<double>(), o.at("y").get<double>()});
    return cfg;
}

NarrativeConfig load_config(std::string_view json_text) {
    json doc = json::parse(json_text.begin(), json_text.end(), nullptr, false);
    if (doc.is_discarded()) throw ConfigParseError("narrative config is not valid JSON");
    return config_from_json(doc);
}

NarrativeConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigParseError("cannot open narrative config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return load_config(buf.str());
}

json config_to_json(const NarrativeConfig& cfg) {
    json quiz = json::array();
    for (const auto& q : cfg.quiz) quiz.push_back({{"question", q.question}, {"accepted_answers", q.accepted_answers}});
    json objects = json::array();
    for (const auto& o : cfg.hidden_objects.objects) objects.push_back({{"id", o.id}, {"x", o.x}, {"y", o.y}});
    return json{
        {"title", cfg.title},
        {"intro_text", cfg.intro_text},
        {"tutorial_steps", cfg.tutorial_steps},
        {"mission_target", cfg.mission_target},
        {"dances", cfg.dances},
        {"chaos_track", cfg.chaos_track},
        {"burst_window_ms", cfg.burst_window_ms},
        {"chaos_threshold", cfg.chaos_threshold.to_double()},
        {"quiz", std::move(quiz)},
        {"words", cfg.words},
        {"hidden_objects",
         {{"target_pose", pose_to(cfg.hidden_objects.target_pose)},
          {"tolerance", {{"distance", cfg.hidden_objects.tolerance.distance}, {"degrees", cfg.hidden_objects.tolerance.degrees}}},
          {"objects", std::move(objects)}}},
    };
}

}  // namespace avatar_sync
