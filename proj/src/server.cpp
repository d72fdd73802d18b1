#include "avatar_sync/server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "avatar_sync/event_log.hpp"

namespace avatar_sync {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

std::pair<std::string, std::uint16_t> parse_bind_address(const std::string& addr) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon + 1 == addr.size())
        throw std::invalid_argument("bind address must look like host:port");
    std::string host = addr.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    if (host.empty()) host = "0.0.0.0";
    unsigned long port = 0;
    try {
        std::size_t used = 0;
        port = std::stoul(addr.substr(colon + 1), &used);
        if (used != addr.size() - colon - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid port in '" + addr + "'");
    }
    if (port > 65535) throw std::invalid_argument("port out of range in '" + addr + "'");
    return {host, static_cast<std::uint16_t>(port)};
}

namespace {

std::string error_line(std::string_view room_id, std::int64_t now, std::string code, std::string text) {
    return encode_message(
        Envelope{0, std::string(room_id), std::string(kServerSender), now, msg::ErrorReply{std::move(code), std::move(text)}});
}

}  // namespace

class Room;

// Anything holding a socket; stop() closes them all so the workers drain.
class Closeable {
public:
    virtual ~Closeable() = default;
    virtual void close() = 0;
};

// One client link, whatever the transport. Thread-safe entry points.
class Connection : public Closeable, public std::enable_shared_from_this<Connection> {
public:
    virtual void send(std::string line) = 0;
    virtual void close_after_flush() = 0;

    void bind(std::shared_ptr<Room> room, PlayerId player) {
        std::lock_guard lk(mu_);
        room_ = std::move(room);
        player_ = std::move(player);
        join_pending_ = false;
    }
    void unbind() {
        std::lock_guard lk(mu_);
        room_.reset();
        player_.clear();
    }

protected:
    std::mutex mu_;
    std::shared_ptr<Room> room_;
    PlayerId player_;
    bool join_pending_ = false;
    bool leave_sent_ = false;

    friend class Server::Impl;
};

class Room : public std::enable_shared_from_this<Room> {
public:
    Room(Server::Impl& server, asio::io_context& ioc, RoomState state, std::unique_ptr<EventLog> log)
        : server_(server), strand_(asio::make_strand(ioc)), state_(std::move(state)), log_(std::move(log)) {}

    void submit(std::shared_ptr<Connection> from, Envelope in) {
        asio::post(strand_, [self = shared_from_this(), from = std::move(from), in = std::move(in)]() mutable {
            self->apply(std::move(from), std::move(in));
        });
    }

    RoomState snapshot() {
        std::promise<RoomState> p;
        auto f = p.get_future();
        asio::post(strand_, [&] { p.set_value(state_); });
        return f.get();
    }

    RoomState snapshot_unsynchronized() const { return state_; }

    void drop_members() {
        asio::post(strand_, [self = shared_from_this()] { self->members_.clear(); });
    }

    const std::string& id() const { return state_.room_id; }

private:
    void apply(std::shared_ptr<Connection> from, Envelope in);
    void fail(const std::string& why, std::int64_t now);
    bool is_member(const std::shared_ptr<Connection>& c) const {
        for (const auto& [_, m] : members_)
            if (m == c) return true;
        return false;
    }

    Server::Impl& server_;
    asio::strand<asio::io_context::executor_type> strand_;
    RoomState state_;
    std::unique_ptr<EventLog> log_;
    std::map<PlayerId, std::shared_ptr<Connection>> members_;
    bool closed_ = false;
};

class Server::Impl : public std::enable_shared_from_this<Server::Impl> {
public:
    explicit Impl(ServerOptions opts) : opts_(std::move(opts)), acceptor_(ioc_) {
        if (!opts_.config) opts_.config = std::make_shared<const NarrativeConfig>();
        if (!opts_.clock)
            opts_.clock = [] {
                return std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                    .count();
            };
    }

    void start() {
        boost::system::error_code ec;
        auto address = asio::ip::make_address(opts_.host, ec);
        if (ec) throw BindError("invalid bind host '" + opts_.host + "': " + ec.message());
        tcp::endpoint ep(address, opts_.port);
        acceptor_.open(ep.protocol(), ec);
        if (!ec) acceptor_.set_option(asio::socket_base::reuse_address(true), ec);
        if (!ec) acceptor_.bind(ep, ec);
        if (!ec) acceptor_.listen(asio::socket_base::max_listen_connections, ec);
        if (ec) throw BindError("cannot bind " + opts_.host + ":" + std::to_string(opts_.port) + ": " + ec.message());
        port_ = acceptor_.local_endpoint().port();
        work_.emplace(asio::make_work_guard(ioc_));
        do_accept();
        for (std::size_t i = 0; i < std::max<std::size_t>(1, opts_.threads); ++i)
            threads_.emplace_back([this] {
                ioc_.run();
                std::lock_guard lk(stop_mu_);
                ++finished_threads_;
                stop_cv_.notify_all();
            });
    }

    void stop() {
        {
            std::lock_guard lk(stop_mu_);
            if (stopped_) return;
            stopping_ = true;
        }
        asio::post(ioc_, [this] {
            boost::system::error_code ec;
            acceptor_.close(ec);
            if (signals_) signals_->cancel(ec);
        });
        std::vector<std::shared_ptr<Closeable>> open;
        {
            std::lock_guard lk(conn_mu_);
            for (auto& w : connections_)
                if (auto c = w.lock()) open.push_back(std::move(c));
            connections_.clear();
        }
        for (auto& c : open) c->close();
        open.clear();
        {
            std::lock_guard lk(rooms_mu_);
            for (auto& [_, room] : rooms_) room->drop_members();
        }
        work_.reset();
        {
            // Closed sockets abort their pending operations; give the workers
            // a moment to run those handlers before forcing the loop down.
            std::unique_lock lk(stop_mu_);
            if (!stop_cv_.wait_for(lk, std::chrono::seconds(2), [this] { return finished_threads_ == threads_.size(); })) {
                lk.unlock();
                ioc_.stop();
            }
        }
        for (auto& t : threads_)
            if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
        threads_.clear();
        {
            std::lock_guard lk(stop_mu_);
            stopped_ = true;
        }
        stop_cv_.notify_all();
    }

    void wait() {
        std::unique_lock lk(stop_mu_);
        stop_cv_.wait(lk, [this] { return stopped_; });
    }

    void handle_signals() {
        signals_.emplace(ioc_, SIGINT, SIGTERM);
        signals_->async_wait([self = shared_from_this()](const boost::system::error_code& ec, int) {
            if (!ec) std::thread([self] { self->stop(); }).detach();
        });
    }

    std::uint16_t port() const { return port_; }
    bool stopping() const { return stopping_; }
    const ServerOptions& options() const { return opts_; }
    std::int64_t now() const { return opts_.clock(); }

    std::shared_ptr<Room> find_room(const std::string& id) const {
        std::lock_guard lk(rooms_mu_);
        auto it = rooms_.find(id);
        return it == rooms_.end() ? nullptr : it->second;
    }

    std::vector<std::string> room_ids() const {
        std::lock_guard lk(rooms_mu_);
        std::vector<std::string> ids;
        for (const auto& [id, _] : rooms_) ids.push_back(id);
        return ids;
    }

    std::optional<RoomState> room_state(const std::string& id) {
        auto room = find_room(id);
        if (!room) return std::nullopt;
        if (threads_.empty()) return room->snapshot_unsynchronized();
        return room->snapshot();
    }

    std::filesystem::path log_path(const std::string& room_id) const { return log_path_for(opts_.log_dir, room_id); }

    // Opens (or creates) the room. A log left over from an earlier process is
    // moved aside so the new session starts a fresh sequence.
    std::shared_ptr<Room> room_for(const std::string& id) {
        std::lock_guard lk(rooms_mu_);
        if (auto it = rooms_.find(id); it != rooms_.end()) return it->second;
        auto path = log_path(id);
        std::error_code ec;
        if (std::filesystem::is_regular_file(path, ec) && std::filesystem::file_size(path, ec) > 0) {
            for (int n = 1;; ++n) {
                auto aside = path;
                aside += "." + std::to_string(n);
                if (!std::filesystem::exists(aside, ec)) {
                    std::filesystem::rename(path, aside, ec);
                    break;
                }
            }
        }
        auto log = std::make_unique<EventLog>(path, opts_.sync_logs);
        auto room = std::make_shared<Room>(*this, ioc_, create_room(id, opts_.config, opts_.seed), std::move(log));
        rooms_.emplace(id, room);
        return room;
    }

    void track(const std::shared_ptr<Closeable>& c) {
        std::lock_guard lk(conn_mu_);
        for (auto it = connections_.begin(); it != connections_.end();) {
            if (it->expired()) it = connections_.erase(it);
            else ++it;
        }
        connections_.push_back(c);
    }

    // A complete frame from a client. Decoding and addressing happen here;
    // only well-formed client envelopes reach a room.
    void on_frame(const std::shared_ptr<Connection>& conn, std::string_view line) {
        if (stopping_) return;
        std::int64_t now = opts_.clock();
        Envelope in;
        try {
            in = decode_message(line);
        } catch (const DecodeError& e) {
            conn->send(error_line("", now, std::string(to_string(e.kind())), e.what()));
            return;
        }
        if (!is_client_message(in.payload)) {
            conn->send(error_line(in.room_id, now, std::string(to_string(ErrorCode::BadMessage)),
                                  "'" + std::string(tag_of(in.payload)) + "' is a server message"));
            return;
        }
        in.seq = 0;
        in.sent_at = now;

        std::shared_ptr<Room> room;
        {
            std::lock_guard lk(conn->mu_);
            const bool is_join = std::holds_alternative<msg::Join>(in.payload);
            if (conn->room_ || conn->join_pending_) {
                if (is_join) {
                    conn->send(error_line(in.room_id, now, std::string(to_string(ErrorCode::AlreadyJoined)),
                                          "this connection already joined a room"));
                    return;
                }
                if (!conn->room_) {
                    conn->send(error_line(in.room_id, now, std::string(to_string(ErrorCode::NotJoined)),
                                          "join is still pending"));
                    return;
                }
                if (conn->leave_sent_) return;
                room = conn->room_;
                in.room_id = room->id();
                in.sender = conn->player_;
                if (std::holds_alternative<msg::Leave>(in.payload)) conn->leave_sent_ = true;
            } else {
                if (!is_join) {
                    conn->send(error_line(in.room_id, now, std::string(to_string(ErrorCode::NotJoined)),
                                          "send a join message first"));
                    return;
                }
                if (!is_valid_room_id(in.room_id)) {
                    conn->send(error_line("", now, std::string(to_string(ErrorCode::BadMessage)),
                                          "room ids are 1-64 characters of [A-Za-z0-9_.-]"));
                    return;
                }
                in.sender.clear();
                conn->join_pending_ = true;
            }
        }
        if (!room) {
            try {
                room = room_for(in.room_id);
            } catch (const std::exception& e) {
                {
                    std::lock_guard lk(conn->mu_);
                    conn->join_pending_ = false;
                }
                conn->send(error_line(in.room_id, now, std::string(to_string(ErrorCode::RoomClosed)), e.what()));
                return;
            }
        }
        room->submit(conn, std::move(in));
    }

    void on_join_rejected(const std::shared_ptr<Connection>& conn) {
        std::lock_guard lk(conn->mu_);
        conn->join_pending_ = false;
    }

    // The link is gone; a bound player leaves the room.
    void on_closed(const std::shared_ptr<Connection>& conn) {
        std::shared_ptr<Room> room;
        PlayerId player;
        {
            std::lock_guard lk(conn->mu_);
            if (!conn->room_ || conn->leave_sent_) return;
            conn->leave_sent_ = true;
            room = conn->room_;
            player = conn->player_;
        }
        if (stopping_) return;
        room->submit(nullptr, Envelope{0, room->id(), player, opts_.clock(), msg::Leave{}});
    }

    asio::io_context& ioc() { return ioc_; }

private:
    void do_accept();

    ServerOptions opts_;
    asio::io_context ioc_;
    tcp::acceptor acceptor_;
    std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work_;
    std::optional<asio::signal_set> signals_;
    std::vector<std::thread> threads_;
    std::uint16_t port_ = 0;

    mutable std::mutex rooms_mu_;
    std::map<std::string, std::shared_ptr<Room>> rooms_;

    std::mutex conn_mu_;
    std::vector<std::weak_ptr<Closeable>> connections_;

    std::atomic<bool> stopping_{false};
    std::mutex stop_mu_;
    std::condition_variable stop_cv_;
    bool stopped_ = false;
    std::size_t finished_threads_ = 0;
};

// ---------------------------------------------------------------- room

void Room::apply(std::shared_ptr<Connection> from, Envelope in) {
    if (server_.stopping()) return;
    const std::int64_t now = in.sent_at;
    if (closed_) {
        if (from) {
            server_.on_join_rejected(from);
            from->send(error_line(state_.room_id, now, std::string(to_string(ErrorCode::RoomClosed)), "room is closed"));
        }
        return;
    }

    Step step = apply_event(state_, in);

    std::vector<Envelope> record;
    record.reserve(step.out.size() + 1);
    record.push_back(in);
    for (const auto& e : step.out)
        if (e.seq > 0) record.push_back(e);
    try {
        log_->append_batch(record);
    } catch (const LogIoError& e) {
        const bool outsider = from && !is_member(from);
        fail(e.what(), now);
        if (outsider) {
            server_.on_join_rejected(from);
            from->send(error_line(state_.room_id, now, std::string(to_string(ErrorCode::RoomClosed)),
                                  "room closed after a log failure"));
        }
        return;
    }
    state_ = std::move(step.state);

    const bool is_join = std::holds_alternative<msg::Join>(in.payload);
    bool welcomed = false;
    for (const auto& e : step.out) {
        std::string line = encode_message(e);
        if (e.seq == 0) {
            if (const auto* w = std::get_if<msg::Welcome>(&e.payload); w && from) {
                from->bind(shared_from_this(), w->player_id);
                members_[w->player_id] = from;
                welcomed = true;
            }
            if (from) from->send(std::move(line));
            continue;
        }
        for (auto& [_, member] : members_) member->send(line);
        if (const auto* left = std::get_if<msg::PlayerLeft>(&e.payload)) {
            auto it = members_.find(left->player_id);
            if (it != members_.end()) {
                it->second->unbind();
                it->second->close_after_flush();
                members_.erase(it);
            }
        }
    }
    if (is_join && !welcomed && from) server_.on_join_rejected(from);
}

void Room::fail(const std::string& why, std::int64_t now) {
    closed_ = true;
    std::string line = error_line(state_.room_id, now, std::string(to_string(ErrorCode::RoomClosed)),
                                  "room closed after a log failure: " + why);
    for (auto& [_, member] : members_) {
        member->unbind();
        member->send(line);
        member->close_after_flush();
    }
    members_.clear();
}

// ---------------------------------------------------------------- transports

namespace {

// Shared write queue / heartbeat logic over a strand.
template <typename Derived>
class StreamConnection : public Connection {
public:
    StreamConnection(std::shared_ptr<Server::Impl> server, asio::any_io_executor ex)
        : server_(std::move(server)), strand_(ex), heartbeat_(ex), last_activity_(Clock::now()) {}

    void send(std::string line) override {
        asio::post(strand_, [self = self_ptr(), line = std::move(line)]() mutable {
            if (self->closed_) return;
            self->outq_.push_back(std::move(line));
            if (!self->writing_) self->derived().do_write();
        });
    }

    void close() override {
        asio::post(strand_, [self = self_ptr()] { self->shutdown(); });
    }

    void close_after_flush() override {
        asio::post(strand_, [self = self_ptr()] {
            self->close_when_drained_ = true;
            if (!self->writing_ && self->outq_.empty()) self->shutdown();
        });
    }

protected:
    std::shared_ptr<Derived> self_ptr() { return std::static_pointer_cast<Derived>(shared_from_this()); }
    Derived& derived() { return static_cast<Derived&>(*this); }

    void touch() { last_activity_ = Clock::now(); }

    void arm_heartbeat() {
        heartbeat_.expires_after(server_->options().heartbeat_interval);
        heartbeat_.async_wait([self = self_ptr()](const boost::system::error_code& ec) {
            if (ec || self->closed_) return;
            if (Clock::now() - self->last_activity_ >= self->server_->options().idle_timeout) {
                self->shutdown();
                return;
            }
            self->derived().heartbeat();
            self->arm_heartbeat();
        });
    }

    void wrote(const boost::system::error_code& ec) {
        if (ec) {
            shutdown();
            return;
        }
        outq_.pop_front();
        if (!outq_.empty()) derived().do_write();
        else if (close_when_drained_) shutdown();
    }

    void on_line(std::string_view line) {
        touch();
        if (line.empty() || line == "\r") return;  // keepalive
        server_->on_frame(shared_from_this(), line);
    }

    void shutdown() {
        if (closed_) return;
        closed_ = true;
        heartbeat_.cancel();
        derived().close_transport();
        server_->on_closed(shared_from_this());
    }

    std::shared_ptr<Server::Impl> server_;
    asio::any_io_executor strand_;
    asio::steady_timer heartbeat_;
    Clock::time_point last_activity_;
    std::deque<std::string> outq_;
    bool writing_ = false;
    bool closed_ = false;
    bool close_when_drained_ = false;
};

class TcpConnection : public StreamConnection<TcpConnection> {
public:
    TcpConnection(std::shared_ptr<Server::Impl> server, tcp::socket socket)
        : StreamConnection(std::move(server), socket.get_executor()), socket_(std::move(socket)) {}

    void start(std::string initial) {
        asio::dispatch(strand_, [self = self_ptr(), initial = std::move(initial)]() mutable {
            self->pending_ = std::move(initial);
            self->drain_lines();
            self->arm_heartbeat();
            self->do_read();
        });
    }

    void do_write() {
        writing_ = true;
        asio::async_write(socket_, asio::buffer(outq_.front()),
                          asio::bind_executor(strand_, [self = self_ptr()](const boost::system::error_code& ec, std::size_t) {
                              self->writing_ = false;
                              self->wrote(ec);
                          }));
    }

    void heartbeat() {
        // A bare LF is a keepalive frame on the line protocol.
        outq_.push_back("\n");
        if (!writing_) do_write();
    }

    void close_transport() {
        boost::system::error_code ec;
        socket_.shutdown(tcp::socket::shutdown_both, ec);
        socket_.close(ec);
    }

private:
    void do_read() {
        socket_.async_read_some(asio::buffer(chunk_),
                                asio::bind_executor(strand_, [self = self_ptr()](const boost::system::error_code& ec, std::size_t n) {
                                    if (ec) {
                                        self->shutdown();
                                        return;
                                    }
                                    self->pending_.append(self->chunk_.data(), n);
                                    self->drain_lines();
                                    if (!self->closed_) self->do_read();
                                }));
    }

    void drain_lines() {
        std::size_t start = 0;
        for (std::size_t nl; (nl = pending_.find('\n', start)) != std::string::npos; start = nl + 1) {
            on_line(std::string_view(pending_).substr(start, nl - start));
            if (closed_) return;
        }
        pending_.erase(0, start);
        if (pending_.size() > server_->options().max_line_bytes) {
            send(error_line("", server_->now(), std::string(to_string(ErrorCode::BadMessage)), "line too long"));
            close_after_flush();
            pending_.clear();
        }
    }

    tcp::socket socket_;
    std::array<char, 4096> chunk_{};
    std::string pending_;
};

class WsConnection : public StreamConnection<WsConnection> {
public:
    WsConnection(std::shared_ptr<Server::Impl> server, beast::tcp_stream stream)
        : StreamConnection(std::move(server), stream.get_executor()), ws_(std::move(stream)) {}

    void start(http::request<http::string_body> req) {
        asio::dispatch(strand_, [self = self_ptr(), req = std::move(req)]() mutable {
            beast::get_lowest_layer(self->ws_).expires_never();
            self->ws_.control_callback([raw = self.get()](websocket::frame_type, beast::string_view) { raw->touch(); });
            self->ws_.text(true);
            self->ws_.async_accept(req, asio::bind_executor(self->strand_, [self](const boost::system::error_code& ec) {
                                       if (ec) {
                                           self->shutdown();
                                           return;
                                       }
                                       self->arm_heartbeat();
                                       self->do_read();
                                   }));
        });
    }

    void do_write() {
        writing_ = true;
        std::string_view frame = outq_.front();
        while (!frame.empty() && frame.back() == '\n') frame.remove_suffix(1);
        if (frame.empty()) {  // keepalives are pings on this transport
            writing_ = false;
            wrote({});
            return;
        }
        ws_.async_write(asio::buffer(frame.data(), frame.size()),
                        asio::bind_executor(strand_, [self = self_ptr()](const boost::system::error_code& ec, std::size_t) {
                            self->writing_ = false;
                            self->wrote(ec);
                        }));
    }

    void heartbeat() {
        ws_.async_ping({}, asio::bind_executor(strand_, [self = self_ptr()](const boost::system::error_code& ec) {
                           if (ec) self->shutdown();
                       }));
    }

    void close_transport() {
        boost::system::error_code ec;
        beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

private:
    void do_read() {
        ws_.async_read(buffer_, asio::bind_executor(strand_, [self = self_ptr()](const boost::system::error_code& ec, std::size_t) {
                           if (ec) {
                               self->shutdown();
                               return;
                           }
                           std::string data = beast::buffers_to_string(self->buffer_.data());
                           self->buffer_.consume(self->buffer_.size());
                           std::size_t start = 0;
                           while (start <= data.size() && !self->closed_) {
                               auto nl = data.find('\n', start);
                               if (nl == std::string::npos) nl = data.size();
                               self->on_line(std::string_view(data).substr(start, nl - start));
                               start = nl + 1;
                           }
                           if (!self->closed_) self->do_read();
                       }));
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
};

std::string_view mime_type(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".wasm") return "application/wasm";
    if (ext == ".map") return "application/json";
    return "application/octet-stream";
}

// Serves one plain HTTP request: a WebSocket upgrade or a static file.
class HttpSession : public Closeable, public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(std::shared_ptr<Server::Impl> server, tcp::socket socket, beast::flat_buffer initial)
        : server_(std::move(server)), ex_(socket.get_executor()), stream_(std::move(socket)), buffer_(std::move(initial)) {}

    void close() override {
        asio::post(ex_, [self = shared_from_this()] {
            if (self->handed_off_) return;
            boost::system::error_code ec;
            self->stream_.socket().close(ec);
            self->stream_.cancel();
        });
    }

    void start() {
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](const boost::system::error_code& ec, std::size_t) {
            if (ec) return;
            self->handle();
        });
    }

private:
    void handle() {
        if (websocket::is_upgrade(req_)) {
            if (req_.target() != "/ws") return respond(http::status::not_found, "websocket endpoint is /ws", "text/plain");
            handed_off_ = true;
            auto conn = std::make_shared<WsConnection>(server_, std::move(stream_));
            server_->track(conn);
            conn->start(std::move(req_));
            return;
        }
        if (req_.method() != http::verb::get && req_.method() != http::verb::head)
            return respond(http::status::method_not_allowed, "GET only", "text/plain");
        const auto& root = server_->options().web_root;
        if (!root) return respond(http::status::not_found, "no web root configured", "text/plain");

        std::string target(req_.target());
        if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
        if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos)
            return respond(http::status::bad_request, "bad path", "text/plain");
        if (target.back() == '/') target += "index.html";
        std::filesystem::path file = *root / target.substr(1);
        std::ifstream in(file, std::ios::binary);
        if (!in || std::filesystem::is_directory(file))
            return respond(http::status::not_found, "not found", "text/plain");
        std::stringstream body;
        body << in.rdbuf();
        respond(http::status::ok, body.str(), mime_type(file));
    }

    void respond(http::status status, std::string body, std::string_view type) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::server, "avatar-sync");
        res->set(http::field::content_type, std::string(type));
        res->keep_alive(false);
        if (req_.method() != http::verb::head) res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](const boost::system::error_code&, std::size_t) {
            boost::system::error_code ec;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        });
    }

    std::shared_ptr<Server::Impl> server_;
    asio::any_io_executor ex_;
    bool handed_off_ = false;
    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

bool looks_like_http(std::string_view head) {
    for (std::string_view method : {"GET ", "HEAD ", "POST ", "PUT ", "OPTIONS "}) {
        auto n = std::min(head.size(), method.size());
        if (head.substr(0, n) == method.substr(0, n)) return true;
    }
    return false;
}

// Reads the first bytes of a fresh connection and hands it to the right
// transport.
class Sniffer : public Closeable, public std::enable_shared_from_this<Sniffer> {
public:
    Sniffer(std::shared_ptr<Server::Impl> server, tcp::socket socket)
        : server_(std::move(server)), ex_(socket.get_executor()), socket_(std::move(socket)), timer_(ex_) {}

    void close() override {
        asio::post(ex_, [self = shared_from_this()] {
            self->timer_.cancel();
            if (self->done_) return;
            boost::system::error_code ec;
            self->socket_.close(ec);
        });
    }

    void start() {
        timer_.expires_after(server_->options().idle_timeout);
        timer_.async_wait([self = shared_from_this()](const boost::system::error_code& ec) {
            if (!ec && !self->done_) {
                boost::system::error_code ignored;
                self->socket_.close(ignored);
            }
        });
        read_more();
    }

private:
    void read_more() {
        socket_.async_read_some(buffer_.prepare(512), [self = shared_from_this()](const boost::system::error_code& ec, std::size_t n) {
            if (ec) {
                self->timer_.cancel();
                return;
            }
            self->buffer_.commit(n);
            self->decide();
        });
    }

    void decide() {
        auto data = beast::buffers_to_string(buffer_.data());
        // Skip leading keepalive newlines, they carry no signal.
        auto first = data.find_first_not_of("\r\n");
        if (first == std::string::npos) {
            if (data.size() > 512) return;
            return read_more();
        }
        std::string_view head = std::string_view(data).substr(first);
        if (head.size() < 8 && looks_like_http(head) && head.find(' ') == std::string_view::npos) return read_more();
        done_ = true;
        timer_.cancel();
        if (looks_like_http(head) && head.find(' ') != std::string_view::npos) {
            auto session = std::make_shared<HttpSession>(server_, std::move(socket_), std::move(buffer_));
            server_->track(session);
            session->start();
        } else {
            auto conn = std::make_shared<TcpConnection>(server_, std::move(socket_));
            server_->track(conn);
            conn->start(std::move(data));
        }
    }

    std::shared_ptr<Server::Impl> server_;
    asio::any_io_executor ex_;
    tcp::socket socket_;
    asio::steady_timer timer_;
    beast::flat_buffer buffer_;
    bool done_ = false;
};

}  // namespace

void Server::Impl::do_accept() {
    acceptor_.async_accept(asio::make_strand(ioc_), [self = shared_from_this()](const boost::system::error_code& ec, tcp::socket socket) {
        if (ec) {
            if (ec == asio::error::operation_aborted || self->stopping_) return;
        } else if (!self->stopping_) {
            boost::system::error_code ignored;
            socket.set_option(tcp::no_delay(true), ignored);
            auto sniffer = std::make_shared<Sniffer>(self, std::move(socket));
            self->track(sniffer);
            sniffer->start();
        }
        if (!self->stopping_) self->do_accept();
    });
}

// ---------------------------------------------------------------- facade

Server::Server(ServerOptions options) : impl_(std::make_shared<Impl>(std::move(options))) {}
Server::~Server() { impl_->stop(); }
void Server::start() { impl_->start(); }
void Server::stop() { impl_->stop(); }
void Server::wait() { impl_->wait(); }
std::uint16_t Server::port() const { return impl_->port(); }
std::optional<RoomState> Server::room_state(const std::string& room_id) { return impl_->room_state(room_id); }
std::filesystem::path Server::log_path(const std::string& room_id) const { return impl_->log_path(room_id); }
std::vector<std::string> Server::room_ids() const { return impl_->room_ids(); }
void Server::handle_signals() { impl_->handle_signals(); }

}  // namespace avatar_sync
