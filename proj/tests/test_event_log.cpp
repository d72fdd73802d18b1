#include <gtest/gtest.h>

#include <fstream>

#include "avatar_sync/event_log.hpp"

using namespace avatar_sync;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path = fs::temp_directory_path() / ("avatar-sync-log-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                                 "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    TempDir() { fs::create_directories(path); }
    ~TempDir() { fs::remove_all(path); }
};

std::shared_ptr<const NarrativeConfig> cfg() { return std::make_shared<const NarrativeConfig>(); }

// Runs a session through the reducer and records it the way the server does.
RoomState record(EventLog& log, int gestures) {
    RoomState s = create_room("room-1", cfg(), 42);
    std::int64_t t = 100;
    auto apply = [&](const std::string& who, Message m) {
        Envelope in{0, "room-1", who, t++, std::move(m)};
        Step step = apply_event(s, in);
        std::vector<Envelope> rec{in};
        for (const auto& e : step.out)
            if (e.seq > 0) rec.push_back(e);
        log.append_batch(rec);
        s = step.state;
    };
    apply("", msg::Join{});
    apply("", msg::Join{});
    apply("p1", msg::SelectMode{GameMode::HistoriaAvatar});
    for (int i = 0; i < gestures; ++i) apply(i % 2 ? "p1" : "p2", msg::Gesture{TapBurst{1 + i % 6}});
    apply("p2", msg::Leave{});
    return s;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(EventLog, RoomIdsAreFileSafe) {
    EXPECT_TRUE(is_valid_room_id("r1"));
    EXPECT_TRUE(is_valid_room_id("sim-duo_avatar.2"));
    EXPECT_FALSE(is_valid_room_id(""));
    EXPECT_FALSE(is_valid_room_id(".hidden"));
    EXPECT_FALSE(is_valid_room_id("a/b"));
    EXPECT_FALSE(is_valid_room_id(std::string(65, 'a')));
    EXPECT_EQ(log_path_for("logs", "r1"), fs::path("logs/r1.jsonl"));
}

TEST(EventLog, ReplayReproducesState) {
    TempDir dir;
    auto path = dir.path / "room-1.jsonl";
    RoomState live;
    {
        EventLog log(path);
        live = record(log, 30);
    }
    auto r = replay_log(path, cfg(), 42);
    EXPECT_EQ(r.final_state, live);
    EXPECT_EQ(room_snapshot(r.final_state).dump(), room_snapshot(live).dump());
    EXPECT_EQ(r.last_seq, live.next_seq - 1);
    EXPECT_FALSE(r.truncated_tail);
    EXPECT_EQ(r.inputs, 34u);

    // broadcasts in the log are seq 1..n with nothing missing
    std::int64_t expect = 1;
    for (const auto& line : read_lines(path)) {
        auto e = decode_message(line);
        if (e.seq > 0) EXPECT_EQ(e.seq, expect++);
    }
}

TEST(EventLog, WrongSeedDiverges) {
    TempDir dir;
    auto path = dir.path / "room-1.jsonl";
    {
        EventLog log(path);
        record(log, 30);
    }
    try {
        // small chaos picks a different dance under another seed
        replay_log(path, cfg(), 43);
        FAIL();
    } catch (const ReplayError& e) {
        EXPECT_EQ(e.kind(), ReplayErrorKind::Divergence);
    }
}

TEST(EventLog, EmptyLogIsInitialState) {
    TempDir dir;
    auto path = dir.path / "empty.jsonl";
    std::ofstream(path).close();
    auto r = replay_log(path, cfg(), 9);
    EXPECT_EQ(r.final_state, create_room("empty", cfg(), 9));
    EXPECT_EQ(r.inputs, 0u);
    EXPECT_THROW(replay_log(dir.path / "missing.jsonl", cfg(), 9), ReplayError);
}

TEST(EventLog, GapIsReported) {
    TempDir dir;
    auto path = dir.path / "room-1.jsonl";
    {
        EventLog log(path);
        record(log, 4);
    }
    auto lines = read_lines(path);
    // drop the first broadcast with seq 3
    for (auto it = lines.begin(); it != lines.end(); ++it)
        if (decode_message(*it).seq == 3) {
            lines.erase(it);
            break;
        }
    try {
        replay_lines(lines, cfg(), 42, "room-1");
        FAIL();
    } catch (const ReplayError& e) {
        EXPECT_EQ(e.kind(), ReplayErrorKind::SeqGap);
        EXPECT_EQ(e.expected(), 3);
        EXPECT_EQ(e.got(), 4);
    }
}

TEST(EventLog, CorruptLineIsDecodeError) {
    std::vector<std::string> lines{R"({"tag":"join","seq":0,"room_id":"r","sender":"","sent_at":0,"display_name":""})",
                                   "{garbage"};
    try {
        replay_lines(lines, cfg(), 1, "r");
        FAIL();
    } catch (const ReplayError& e) {
        EXPECT_EQ(e.kind(), ReplayErrorKind::Decode);
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(EventLog, CrashMidStepLeavesReplayablePrefix) {
    TempDir dir;
    auto path = dir.path / "room-1.jsonl";
    RoomState live;
    {
        EventLog log(path);
        live = record(log, 10);
    }
    auto lines = read_lines(path);
    // Cut after every possible line: each prefix is either complete or has a
    // truncated last step, never an error.
    for (std::size_t n = 0; n <= lines.size(); ++n) {
        std::vector<std::string> prefix(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(n));
        auto r = replay_lines(prefix, cfg(), 42, "room-1");
        std::int64_t recorded = 0;
        for (const auto& l : prefix) recorded = std::max(recorded, decode_message(l).seq);
        EXPECT_EQ(r.last_seq, recorded);
    }
    // Dropping a broadcast from the middle of the log is not a valid crash.
    auto broken = lines;
    broken.erase(broken.begin() + 3);
    EXPECT_THROW(replay_lines(broken, cfg(), 42, "room-1"), ReplayError);
}

TEST(EventLog, AppendFailureRaises) {
    if (!fs::exists("/dev/full")) GTEST_SKIP() << "no /dev/full";
    EventLog log("/dev/full");
    Envelope e{1, "r", "server", 0, msg::ScoreUpdate{1}};
    EXPECT_THROW(log.append(e), LogIoError);
}

TEST(EventLog, UnwritableDirectoryRaises) {
    EXPECT_THROW(EventLog("/dev/null/x.jsonl"), LogIoError);
}
