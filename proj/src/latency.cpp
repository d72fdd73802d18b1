#include "avatar_sync/latency.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace avatar_sync {

std::int64_t LatencyInjector::next_delay() {
    if (model_.base_ms < 0 || model_.jitter_ms < 0) throw std::invalid_argument("latency must be non-negative");
    if (model_.jitter_ms == 0) return model_.base_ms;
    return model_.base_ms + static_cast<std::int64_t>(rng_.uniform_index(static_cast<std::size_t>(model_.jitter_ms) + 1));
}

std::int64_t LatencyInjector::schedule(std::size_t connection, std::int64_t send_ms) {
    std::int64_t at = send_ms + next_delay();
    auto [it, inserted] = last_delivery_.try_emplace(connection, at);
    if (!inserted) {
        at = std::max(at, it->second);
        it->second = at;
    }
    return at;
}

std::vector<Delivery> inject_latency(const LatencyModel& model, std::span<const Transmission> stream) {
    LatencyInjector injector(model);
    std::vector<Delivery> out;
    out.reserve(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i)
        out.push_back({i, stream[i].connection, stream[i].send_ms, injector.schedule(stream[i].connection, stream[i].send_ms)});
    std::stable_sort(out.begin(), out.end(), [](const Delivery& a, const Delivery& b) {
        return std::tie(a.deliver_ms, a.connection, a.index) < std::tie(b.deliver_ms, b.connection, b.index);
    });
    return out;
}

}  // namespace avatar_sync
