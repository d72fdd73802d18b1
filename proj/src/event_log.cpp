#include "avatar_sync/event_log.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

namespace avatar_sync {

bool is_valid_room_id(std::string_view id) {
    if (id.empty() || id.size() > 64 || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
               c == '.';
    });
}

std::filesystem::path log_path_for(const std::filesystem::path& dir, std::string_view room_id) {
    if (!is_valid_room_id(room_id)) throw std::invalid_argument("invalid room id '" + std::string(room_id) + "'");
    return dir / (std::string(room_id) + ".jsonl");
}

EventLog::EventLog(std::filesystem::path path, bool sync_to_disk) : path_(std::move(path)), sync_(sync_to_disk) {
    std::error_code ec;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path(), ec);
    file_ = std::fopen(path_.c_str(), "ab");
    if (!file_) throw LogIoError("cannot open " + path_.string() + ": " + std::strerror(errno));
}

EventLog::~EventLog() {
    if (file_) std::fclose(file_);
}

void EventLog::write_line(const Envelope& envelope) {
    std::string line = encode_message(envelope);
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size())
        throw LogIoError("write to " + path_.string() + " failed: " + std::strerror(errno));
}

void EventLog::flush() {
    if (std::fflush(file_) != 0) throw LogIoError("flush of " + path_.string() + " failed: " + std::strerror(errno));
    if (sync_ && ::fdatasync(::fileno(file_)) != 0)
        throw LogIoError("sync of " + path_.string() + " failed: " + std::strerror(errno));
}

void EventLog::append(const Envelope& envelope) {
    write_line(envelope);
    flush();
}

void EventLog::append_batch(std::span<const Envelope> envelopes) {
    for (const auto& e : envelopes) write_line(e);
    flush();
}

std::string_view to_string(ReplayErrorKind k) {
    switch (k) {
        case ReplayErrorKind::SeqGap: return "seq_gap";
        case ReplayErrorKind::Decode: return "decode_error";
        case ReplayErrorKind::Divergence: return "divergence";
        case ReplayErrorKind::Io: return "io_error";
    }
    return "?";
}

namespace {

struct RecordedStep {
    Envelope input;
    std::size_t line = 0;
    std::vector<std::pair<std::size_t, std::string>> broadcasts;  // (line, canonical bytes)
};

}  // namespace

ReplayResult replay_lines(std::span<const std::string> lines, std::shared_ptr<const NarrativeConfig> config,
                          std::uint64_t seed, std::string_view fallback_room_id) {
    std::vector<RecordedStep> steps;
    std::string room_id;
    std::int64_t expected_seq = 1;

    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view raw = lines[i];
        if (raw.empty() || raw == "\r") continue;
        const std::size_t lineno = i + 1;
        Envelope e;
        try {
            e = decode_message(raw);
        } catch (const DecodeError& err) {
            throw ReplayError(ReplayErrorKind::Decode, lineno, "line " + std::to_string(lineno) + ": " + err.what());
        }
        if (room_id.empty()) room_id = e.room_id;
        if (e.room_id != room_id)
            throw ReplayError(ReplayErrorKind::Decode, lineno, "line " + std::to_string(lineno) + " belongs to room '" + e.room_id + "'");

        if (is_client_message(e.payload)) {
            if (e.seq != 0)
                throw ReplayError(ReplayErrorKind::Decode, lineno, "client envelope with a sequence number");
            steps.push_back({std::move(e), lineno, {}});
            continue;
        }
        if (e.seq == 0)
            throw ReplayError(ReplayErrorKind::Decode, lineno, "unsequenced server envelope in log");
        if (e.seq != expected_seq)
            throw ReplayError(ReplayErrorKind::SeqGap, lineno,
                              "sequence gap: expected " + std::to_string(expected_seq) + ", got " + std::to_string(e.seq),
                              expected_seq, e.seq);
        ++expected_seq;
        if (steps.empty())
            throw ReplayError(ReplayErrorKind::Divergence, lineno, "broadcast recorded before any input");
        // Store the canonical form of what was recorded; a non-canonical line
        // is a divergence in its own right.
        steps.back().broadcasts.emplace_back(lineno, std::string(raw) + (raw.back() == '\n' ? "" : "\n"));
    }

    ReplayResult result;
    result.last_seq = expected_seq - 1;
    std::string rid = room_id.empty() ? std::string(fallback_room_id) : room_id;
    RoomState state = create_room(rid, std::move(config), seed);

    for (std::size_t k = 0; k < steps.size(); ++k) {
        const RecordedStep& rec = steps[k];
        Step step = apply_event(state, rec.input);
        state = std::move(step.state);
        ++result.inputs;

        std::vector<std::string> regenerated;
        for (auto& out : step.out) {
            if (out.seq > 0) regenerated.push_back(encode_message(out));
            result.outputs.push_back(std::move(out));
        }

        const bool last = k + 1 == steps.size();
        if (rec.broadcasts.size() > regenerated.size() || (!last && rec.broadcasts.size() != regenerated.size()))
            throw ReplayError(ReplayErrorKind::Divergence, rec.line,
                              "input on line " + std::to_string(rec.line) + " produced " +
                                  std::to_string(regenerated.size()) + " broadcasts, log has " +
                                  std::to_string(rec.broadcasts.size()));
        for (std::size_t j = 0; j < rec.broadcasts.size(); ++j) {
            if (rec.broadcasts[j].second != regenerated[j])
                throw ReplayError(ReplayErrorKind::Divergence, rec.broadcasts[j].first,
                                  "line " + std::to_string(rec.broadcasts[j].first) + " differs from the replayed broadcast");
        }
        if (last && rec.broadcasts.size() < regenerated.size()) result.truncated_tail = true;
    }
    result.final_state = std::move(state);
    return result;
}

ReplayResult replay_log(const std::filesystem::path& log_path, std::shared_ptr<const NarrativeConfig> config,
                        std::uint64_t seed) {
    std::ifstream in(log_path, std::ios::binary);
    if (!in) throw ReplayError(ReplayErrorKind::Io, 0, "cannot open " + log_path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
    return replay_lines(lines, std::move(config), seed, log_path.stem().string());
}

}  // namespace avatar_sync
