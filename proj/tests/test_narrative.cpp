#include <gtest/gtest.h>

#include <fstream>

#include "avatar_sync/narrative.hpp"

using namespace avatar_sync;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
      "title": "t",
      "quiz": [{"question": "q?", "accepted_answers": ["a"]}],
      "words": ["abc"],
      "hidden_objects": {"target_pose": {"x": 0, "y": 0, "rot_deg": 0}, "objects": [{"id": "o", "x": 1, "y": 1}]}
    })");
}

std::vector<std::string> error_fields(const json& doc) {
    std::vector<std::string> out;
    for (const auto& f : validate_config(doc))
        if (f.severity == Severity::Error) out.push_back(f.field);
    return out;
}

}  // namespace

TEST(Narrative, ShippedStoryIsClean) {
    auto cfg = load_config_file(AVATAR_SYNC_SOURCE_DIR "/narrative/story.json");
    std::ifstream in(AVATAR_SYNC_SOURCE_DIR "/narrative/story.json");
    EXPECT_TRUE(validate_config(json::parse(in)).empty());
    EXPECT_EQ(cfg.mission_target, 20);
    EXPECT_EQ(cfg.chaos_track, "Axel F");
    EXPECT_EQ(cfg.dance_name(Dance::MoveIt), "I Like to Move It");
    EXPECT_EQ(cfg.burst_window_ms, 400);
    EXPECT_EQ(cfg.chaos_threshold, (Ratio{1, 1}));
}

TEST(Narrative, MinimalConfigUsesDefaults) {
    auto cfg = config_from_json(minimal());
    EXPECT_EQ(cfg.mission_target, 20);
    EXPECT_EQ(cfg.hidden_objects.tolerance, MarkerTolerance{});
    EXPECT_EQ(config_from_json(config_to_json(cfg)), cfg);
}

TEST(Narrative, FirstFailingFieldIsReported) {
    json doc = minimal();
    doc["mission_target"] = 0;
    doc["words"] = json::array({"Abc"});
    try {
        config_from_json(doc);
        FAIL();
    } catch (const ConfigValidationError& e) {
        EXPECT_EQ(e.field(), "mission_target");
    }
}

TEST(Narrative, EachRuleHasAField) {
    struct Case {
        const char* patch;
        const char* field;
    };
    const Case cases[] = {
        {R"({"title": ""})", "title"},
        {R"({"title": null})", "title"},
        {R"({"dances": ["a", "b", "c"]})", "dances"},
        {R"({"dances": ["a", "", "c", "d"]})", "dances[1]"},
        {R"({"burst_window_ms": 0})", "burst_window_ms"},
        {R"({"chaos_threshold": -1})", "chaos_threshold"},
        {R"({"quiz": []})", "quiz"},
        {R"({"quiz": [{"question": "q", "accepted_answers": []}]})", "quiz[0].accepted_answers"},
        {R"({"quiz": [{"question": "q", "accepted_answers": ["  "]}]})", "quiz[0].accepted_answers[0]"},
        {R"({"words": []})", "words"},
        {R"({"words": ["ok", "não"]})", "words[1]"},
        {R"({"hidden_objects": {"target_pose": {"x": 0, "y": 0, "rot_deg": 0}, "objects": []}})", "hidden_objects.objects"},
        {R"({"hidden_objects": {"target_pose": {"x": 0, "y": 0, "rot_deg": 0}, "objects": [{"id": "a", "x": 0, "y": 0}, {"id": "a", "x": 1, "y": 1}]}})",
         "hidden_objects.objects"},
        {R"({"hidden_objects": {"target_pose": {"x": 0, "y": 0, "rot_deg": null}, "objects": [{"id": "a", "x": 0, "y": 0}]}})",
         "hidden_objects.target_pose.rot_deg"},
        {R"({"hidden_objects": {"target_pose": {"x": 0, "y": 0, "rot_deg": 0}, "tolerance": {"distance": 1, "degrees": 200}, "objects": [{"id": "a", "x": 0, "y": 0}]}})",
         "hidden_objects.tolerance.degrees"},
    };
    for (const auto& c : cases) {
        json doc = minimal();
        doc.merge_patch(json::parse(c.patch));
        auto fields = error_fields(doc);
        ASSERT_FALSE(fields.empty()) << c.patch;
        EXPECT_EQ(fields.front(), c.field) << c.patch;
        EXPECT_THROW(config_from_json(doc), ConfigValidationError);
    }
}

TEST(Narrative, WarningsDoNotBlockLoading) {
    json doc = minimal();
    doc["words"] = json::array({"abc", "abc"});
    doc["quiz"][0]["accepted_answers"] = json::array({"Avó", "avo"});
    auto findings = validate_config(doc);
    ASSERT_EQ(findings.size(), 2u);
    EXPECT_EQ(findings[0].field, "quiz[0].accepted_answers[1]");
    EXPECT_EQ(findings[1].field, "words[1]");
    EXPECT_FALSE(has_errors(findings));
    EXPECT_NO_THROW(config_from_json(doc));
}

TEST(Narrative, ParseErrors) {
    EXPECT_THROW(load_config("{"), ConfigParseError);
    EXPECT_THROW(load_config_file("/nonexistent/story.json"), ConfigParseError);
    EXPECT_THROW(load_config("[]"), ConfigValidationError);
}

TEST(Normalize, FoldsCaseAccentsAndSpace) {
    EXPECT_EQ(normalize_answer("  Avó "), "avo");
    EXPECT_EQ(normalize_answer("São   Tomé"), "sao tome");
    EXPECT_EQ(normalize_answer("ÇÃO"), "cao");
    EXPECT_EQ(normalize_answer("o\tGato"), "o gato");
    EXPECT_EQ(normalize_answer(""), "");
    EXPECT_EQ(normalize_answer("8"), "8");
}
