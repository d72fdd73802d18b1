#pragma once

// Reference models written independently of the library: plain tables,
// direct arithmetic and history-based recomputation. Tests compare the
// implementation against these.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Short-action table: tap count 1..3 -> dance name, swipe -> Twist.
inline std::string dance_for_taps(int taps) {
    switch (taps) {
        case 1: return "macarena";
        case 2: return "samba";
        case 3: return "move_it";
        default: return "";
    }
}
inline std::string dance_for_swipe() { return "twist"; }

// Direct evaluation of r = taps / users against tau. Chaos when r < tau.
inline bool is_chaos(std::int64_t taps, std::int64_t users, double tau) {
    double r = static_cast<double>(taps) / static_cast<double>(users);
    return r < tau;
}

// Points for an outcome category, by mode.
inline int points(const std::string& mode, const std::string& category) {
    if (mode == "toques") return 0;
    if (category == "dance") return 1;
    if (category == "small_chaos") return 2;
    if (category == "chaos") return 3;
    return -1;
}

// Hangman recomputed from the full guess history each time. A guess is a
// single letter or a whole word; repeated letters are ignored.
struct Hangman {
    std::string status;  // in_progress | won | lost
    int wrong = 0;
    std::string pattern;
};

inline Hangman hangman(const std::string& secret, const std::vector<std::string>& history, int max_wrong = 7) {
    std::set<char> letters;
    int wrong = 0;
    bool word_hit = false;
    for (const auto& g : history) {
        bool won = word_hit || std::all_of(secret.begin(), secret.end(), [&](char c) { return letters.count(c) > 0; });
        if (won || wrong >= max_wrong) break;  // guesses after the end do not count
        if (g.size() == 1) {
            if (letters.count(g[0])) continue;
            letters.insert(g[0]);
            if (secret.find(g[0]) == std::string::npos) ++wrong;
        } else if (g == secret) {
            word_hit = true;
        } else {
            ++wrong;
        }
    }
    Hangman h;
    h.wrong = wrong;
    bool won = word_hit || std::all_of(secret.begin(), secret.end(), [&](char c) { return letters.count(c) > 0; });
    h.status = won ? "won" : (wrong >= max_wrong ? "lost" : "in_progress");
    for (char c : secret) h.pattern.push_back(won || letters.count(c) ? c : '_');
    return h;
}

inline int word_points(const Hangman& h) {
    if (h.status != "won") return 0;
    return h.wrong <= 3 ? 4 : 3;
}

// Score model for a sequence of short actions with joins, leaves and mode
// switches.
struct ScoreModel {
    double tau = 1.0;
    std::int64_t target = 20;
    std::string mode = "toques";
    std::map<std::string, std::int64_t> taps;  // present players -> tap bursts so far
    std::int64_t score = 0;
    int mission_events = 0;

    void join(const std::string& id) { taps[id] = 0; }
    void leave(const std::string& id) { taps.erase(id); }

    // Returns the category and points the server must have produced.
    std::pair<std::string, int> gesture(const std::string& id, std::optional<int> tap_count) {
        std::string category = "dance";
        if (tap_count) {
            if (*tap_count >= 4)
                category = is_chaos(taps[id], static_cast<std::int64_t>(taps.size()), tau) ? "chaos" : "small_chaos";
            ++taps[id];
        }
        int p = mission_events > 0 ? 0 : points(mode, category);
        if (p > 0) {
            score += p;
            if (mission_events == 0 && score >= target) mission_events = 1;
        }
        return {category, p};
    }
};

}  // namespace oracle
