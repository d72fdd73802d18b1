#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avatar_sync/types.hpp"

namespace avatar_sync {

struct QuizQuestion {
    std::string question;
    std::vector<std::string> accepted_answers;
    bool operator==(const QuizQuestion&) const = default;
};

struct HiddenObject {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    bool operator==(const HiddenObject&) const = default;
};

struct MarkerTolerance {
    double distance = 10.0;  // scene units
    double degrees = 15.0;
    bool operator==(const MarkerTolerance&) const = default;
};

struct HiddenObjectsLayout {
    Pose target_pose;
    MarkerTolerance tolerance;
    std::vector<HiddenObject> objects;
    bool operator==(const HiddenObjectsLayout&) const = default;
};

inline constexpr std::int64_t kDefaultMissionTarget = 20;
inline constexpr std::int64_t kDefaultBurstWindowMs = 400;

/// The whole story in one JSON document: texts, mission, quiz, word list and
/// the hidden-objects scene. Swapping this file re-skins the experience.
struct NarrativeConfig {
    std::string title;
    std::string intro_text;
    std::vector<std::string> tutorial_steps;
    std::int64_t mission_target = kDefaultMissionTarget;
    // Display names, indexed by Dance.
    std::array<std::string, 4> dances{"Macarena", "Samba", "I Like to Move It", "Twist"};
    std::string chaos_track = "Axel F";
    std::vector<QuizQuestion> quiz;
    std::vector<std::string> words;
    HiddenObjectsLayout hidden_objects;
    std::int64_t burst_window_ms = kDefaultBurstWindowMs;
    Ratio chaos_threshold{1, 1};

    const std::string& dance_name(Dance d) const { return dances[static_cast<std::size_t>(d)]; }

    bool operator==(const NarrativeConfig&) const = default;
};

enum class Severity { Warning, Error };

struct Finding {
    Severity severity = Severity::Error;
    std::string field;
    std::string reason;
    bool operator==(const Finding&) const = default;
};

class ConfigParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigValidationError : public std::runtime_error {
public:
    ConfigValidationError(std::string field, std::string reason)
        : std::runtime_error(field + ": " + reason), field_(std::move(field)), reason_(std::move(reason)) {}
    const std::string& field() const noexcept { return field_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string reason_;
};

/// Lint a parsed document. Findings come out in document order; a config
/// loads iff no finding has Severity::Error.
std::vector<Finding> validate_config(const nlohmann::json& doc);

bool has_errors(const std::vector<Finding>& findings);

NarrativeConfig load_config(std::string_view json_text);
NarrativeConfig load_config_file(const std::filesystem::path& path);
NarrativeConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const NarrativeConfig& cfg);

/// Lowercase, trim, collapse inner whitespace and strip combining marks
/// after canonical decomposition ("Avó " -> "avo").
std::string normalize_answer(std::string_view utf8);

}  // namespace avatar_sync
