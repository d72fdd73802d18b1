#include <gtest/gtest.h>

#include "avatar_sync/harness.hpp"

using namespace avatar_sync;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(AVATAR_SYNC_SOURCE_DIR) / "scenarios";

json duo_doc() {
    return json::parse(R"({
      "name": "t",
      "num_bots": 2,
      "mode": "historia_avatar",
      "latency": {"base_ms": 5, "jitter_ms": 100, "seed": 3},
      "bots": [
        {"script": [{"at": 0, "gesture": {"taps": 1}}, {"at": 1000, "gesture": {"taps": 4}}]},
        {"script": [{"at": 500, "gesture": {"swipe": "down"}}, {"at": 1500, "gesture": {"tap_times": [0, 100, 200]}}]}
      ],
      "assertions": {"final_score": 6},
      "transport": "in_process"
    })");
}

std::vector<std::string> stream_of(const ScenarioReport& r, std::size_t bot) { return r.bots.at(bot).stream; }

// Later joiners miss the earlier broadcasts; from their first seq on, every
// bot must have seen the same bytes.
void expect_same_tail(const ScenarioReport& r) {
    const auto& first = r.bots.at(0);
    for (const auto& bot : r.bots) {
        auto skip = static_cast<std::ptrdiff_t>(bot.first_seq - first.first_seq);
        ASSERT_GE(skip, 0);
        std::vector<std::string> tail(first.stream.begin() + skip, first.stream.end());
        EXPECT_EQ(tail, bot.stream) << bot.player_id;
    }
}

}  // namespace

TEST(Scenario, ParseErrorsAreScenarioErrors) {
    const char* bad[] = {
        R"({"num_bots": 1, "bots": [{}]})",
        R"({"name": "x", "num_bots": 0, "bots": []})",
        R"({"name": "x", "num_bots": 2, "bots": [{}, {}, {}]})",
        R"({"name": "x", "num_bots": 1, "bots": [{"script": [{"at": 0}]}]})",
        R"({"name": "x", "num_bots": 1, "bots": [{"script": [{"at": -1, "leave": true}]}]})",
        R"({"name": "x", "num_bots": 1, "bots": [{"script": [{"at": 0, "gesture": {"taps": 0}}]}]})",
        R"({"name": "x", "num_bots": 1, "mode": "nope", "bots": [{}]})",
        R"({"name": "x", "num_bots": 1, "transport": "udp", "bots": [{}]})",
        R"({"name": "x", "num_bots": 1, "config": "/missing/story.json", "bots": [{}]})",
        R"({"name": "x", "num_bots": 9, "bots": []})",
    };
    for (const char* doc : bad) EXPECT_THROW(parse_scenario(json::parse(doc)), ScenarioError) << doc;
    EXPECT_THROW(load_scenario("/missing/scenario.json"), ScenarioError);
}

TEST(Scenario, ScoresAndRoomId) {
    auto sc = parse_scenario(duo_doc());
    EXPECT_EQ(scenario_room_id(sc), "sim-t");
    auto r = run_scenario(sc, {});
    // three dances and one chaos: p1 has 1 prior tap among 2 users, 1/2 < 1
    EXPECT_EQ(r.final_score, 6);
    EXPECT_TRUE(r.passed);
    EXPECT_NO_THROW(r.require_passed());
    for (const auto& [name, ok] : r.invariants) EXPECT_TRUE(ok) << name;
}

TEST(Scenario, FailedAssertionIsNamed) {
    json doc = duo_doc();
    doc["assertions"]["final_score"] = 99;
    auto r = run_scenario(parse_scenario(doc), {});
    EXPECT_FALSE(r.passed);
    try {
        r.require_passed();
        FAIL();
    } catch (const AssertionFailed& e) {
        EXPECT_EQ(e.which(), "final_score");
    }
}

TEST(Scenario, ReportIsReproducible) {
    auto sc = load_scenario(kScenarios / "random_duo.json");
    RunOptions o;
    o.seed = 5;
    o.transport = Transport::InProcess;
    auto a = run_scenario(sc, o), b = run_scenario(sc, o);
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
    EXPECT_EQ(stream_of(a, 0), stream_of(b, 0));
}

TEST(Scenario, TcpMatchesInProcess) {
    for (const char* name : {"duo_avatar", "duo_quiz", "duo_word"}) {
        auto sc = load_scenario(kScenarios / (std::string(name) + ".json"));
        RunOptions tcp, local;
        tcp.transport = Transport::Tcp;
        local.transport = Transport::InProcess;
        auto a = run_scenario(sc, tcp), b = run_scenario(sc, local);
        EXPECT_TRUE(a.passed) << name;
        EXPECT_EQ(stream_of(a, 0), stream_of(b, 0)) << name;
        EXPECT_EQ(stream_of(a, 1), stream_of(b, 1)) << name;
        EXPECT_EQ(a.final_state, b.final_state) << name;
    }
}

TEST(Scenario, DuoAvatarScoresEight) {
    auto r = run_scenario(load_scenario(kScenarios / "duo_avatar.json"), {});
    EXPECT_EQ(r.final_score, 8);
    EXPECT_FALSE(r.mission_complete);
    expect_same_tail(r);
}

TEST(Scenario, SoloMissionCompletesOnce) {
    auto r = run_scenario(load_scenario(kScenarios / "solo_mission.json"), {});
    EXPECT_TRUE(r.passed);
    EXPECT_TRUE(r.mission_complete);
    EXPECT_EQ(r.mission_complete_count, 1);
    EXPECT_EQ(r.final_score, 20);
}

TEST(Scenario, JitterDoesNotChangeTheOutcome) {
    auto sc = load_scenario(kScenarios / "duo_avatar.json");
    RunOptions calm, rough;
    calm.jitter_ms = 0;
    rough.jitter_ms = 250;
    auto a = run_scenario(sc, calm), b = run_scenario(sc, rough);
    EXPECT_EQ(a.final_score, b.final_score);
    expect_same_tail(b);
    EXPECT_EQ(a.bots[0].received, b.bots[0].received);
}

TEST(Scenario, EveryShippedScenarioPasses) {
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json") continue;
        auto r = run_scenario(load_scenario(entry.path()), {});
        EXPECT_TRUE(r.passed) << entry.path() << "\n" << r.to_json().dump(2);
    }
}
