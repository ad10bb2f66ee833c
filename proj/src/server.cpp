#include "spa/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spa {

using nlohmann::json;

SessionHub::SessionHub(const Scenario& scenario, const ServerOptions& options)
    : scene_(scenario.spec->name), options_(options), world_(scenario.make_world(options.nli)) {
    for (const auto& a : world_->agents())
        if (a.avatar) free_avatars_.push_back(a.id);
    for (const auto& id : free_avatars_) world_->set_avatar_present(id, false);
    const double dt = world_->config().dt;
    if (options.snapshot_hz > 0)
        snapshot_every_ = std::max<std::uint64_t>(1, std::uint64_t(std::llround(1.0 / (options.snapshot_hz * dt))));
    else
        snapshot_every_ = 0;
}

SessionHub::SessionId SessionHub::connect() {
    const SessionId id = next_session_++;
    sessions_[id];
    return id;
}

void SessionHub::disconnect(SessionId id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return;
    if (it->second.avatar) {
        world_->set_avatar_present(*it->second.avatar, false);
        free_avatars_.push_back(*it->second.avatar);
        std::sort(free_avatars_.begin(), free_avatars_.end());
    }
    sessions_.erase(it);
    std::erase_if(pending_, [&](const Command& c) { return c.session == id; });
}

std::optional<std::string> SessionHub::avatar_of(SessionId id) const {
    auto it = sessions_.find(id);
    return it == sessions_.end() ? std::nullopt : it->second.avatar;
}

void SessionHub::send(SessionId id, json message) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return;
    json framed{{"v", kProtocolVersion}};
    framed.update(message);
    it->second.outbox.push_back(framed.dump());
}

void SessionHub::error(SessionId id, const std::string& code, const std::string& detail) {
    send(id, {{"type", "error"}, {"code", code}, {"detail", detail}});
}

void SessionHub::receive(SessionId id, std::string_view frame) {
    namespace pe = protocol_error;
    if (!sessions_.count(id)) return;
    const json msg = json::parse(frame, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) return error(id, pe::kBadJson, "expected a JSON object");
    if (!msg.contains("v") || msg["v"] != kProtocolVersion) return error(id, pe::kBadVersion, "expected \"v\": 1");
    if (!msg.contains("type") || !msg["type"].is_string()) return error(id, pe::kBadField, "missing \"type\"");
    const std::string type = msg["type"];
    if (type == "join") {
        if (msg.contains("scenario") && !msg["scenario"].is_string())
            return error(id, pe::kBadField, "\"scenario\" must be a string");
    } else if (type == "move_to") {
        if (!msg.contains("x") || !msg["x"].is_number() || !msg.contains("y") || !msg["y"].is_number())
            return error(id, pe::kBadField, "\"x\" and \"y\" must be numbers");
    } else if (type == "say") {
        if (!msg.contains("text") || !msg["text"].is_string()) return error(id, pe::kBadField, "\"text\" must be a string");
    } else {
        return error(id, pe::kUnknownType, "unknown message type \"" + type + "\"");
    }
    pending_.push_back({id, msg});
}

void SessionHub::apply(const Command& c) {
    namespace pe = protocol_error;
    auto it = sessions_.find(c.session);
    if (it == sessions_.end()) return;
    Session& s = it->second;
    const std::string type = c.message["type"];
    if (type == "join") {
        if (s.avatar) return error(c.session, pe::kAlreadyJoined, "this session already controls " + *s.avatar);
        if (c.message.contains("scenario") && c.message["scenario"] != scene_)
            return error(c.session, pe::kWrongScenario, "this server runs \"" + scene_ + "\"");
        if (free_avatars_.empty()) return error(c.session, pe::kFull, "no free avatar");
        s.avatar = free_avatars_.front();
        free_avatars_.erase(free_avatars_.begin());
        world_->set_avatar_present(*s.avatar, true);
        const Agent* a = world_->find_agent(*s.avatar);
        send(c.session, {{"type", "welcome"},
                         {"session", c.session},
                         {"avatar_id", *s.avatar},
                         {"name", a->name},
                         {"scenario", scene_},
                         {"tick", world_->tick_index()},
                         {"dt", world_->config().dt},
                         {"static_geometry", world_->static_geometry()}});
        json snap = world_->snapshot();
        snap["type"] = "snapshot";
        send(c.session, snap);
        return;
    }
    if (!s.avatar) return error(c.session, pe::kNotJoined, "send join first");
    if (type == "move_to") {
        const Vec2 target{c.message["x"].get<double>(), c.message["y"].get<double>()};
        if (auto err = world_->avatar_move_to(*s.avatar, target)) error(c.session, pe::kUnreachable, *err);
    } else if (type == "say") {
        if (auto err = world_->avatar_say(*s.avatar, c.message["text"].get<std::string>()))
            error(c.session, pe::kEmptyUtterance, *err);
    }
}

void SessionHub::step() {
    while (!pending_.empty()) {
        const Command c = std::move(pending_.front());
        pending_.pop_front();
        apply(c);
    }
    world_->tick();
    for (auto& [id, s] : sessions_) {
        if (!s.avatar) continue;
        const Agent* a = world_->find_agent(*s.avatar);
        for (const auto& ev : a->inbox) {
            json m{{"type", "utterance"},
                   {"id", ev.id},
                   {"speaker", ev.speaker},
                   {"text", ev.text},
                   {"tick", ev.tick},
                   {"to_you", ev.addressee && *ev.addressee == *s.avatar}};
            if (auto n = world_->names().name_of(ev.speaker)) m["name"] = *n;
            if (ev.addressee) m["addressee"] = *ev.addressee;
            send(id, m);
        }
    }
    if (snapshot_every_ && world_->tick_index() % snapshot_every_ == 0) {
        json snap = world_->snapshot();
        snap["type"] = "snapshot";
        for (auto& [id, s] : sessions_)
            if (s.avatar) send(id, snap);
    }
}

std::vector<std::string> SessionHub::drain(SessionId id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return {};
    std::vector<std::string> out(std::make_move_iterator(it->second.outbox.begin()),
                                 std::make_move_iterator(it->second.outbox.end()));
    it->second.outbox.clear();
    return out;
}

// ---------------------------------------------------------------------------
// Beast front end

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

struct Connection;

}  // namespace

struct Server::Impl {
    net::io_context io{1};
    tcp::acceptor acceptor{io};
    net::steady_timer timer{io};
    SessionHub hub;
    ServerOptions options;
    std::map<SessionHub::SessionId, std::shared_ptr<Connection>> connections;

    Impl(const Scenario& scenario, const ServerOptions& opt) : hub(scenario, opt), options(opt) {}

    void accept();
    void schedule(std::chrono::steady_clock::time_point due);
    void flush(SessionHub::SessionId id);
};

namespace {

struct Connection : std::enable_shared_from_this<Connection> {
    websocket::stream<beast::tcp_stream> ws;
    beast::flat_buffer buffer;
    std::deque<std::string> out;
    bool writing = false;
    bool closed = false;
    SessionHub::SessionId id = 0;
    Server::Impl& server;

    Connection(tcp::socket socket, Server::Impl& s) : ws(std::move(socket)), server(s) {}

    void start() {
        ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->id = self->server.hub.connect();
            self->server.connections[self->id] = self;
            self->read();
        });
    }

    void read() {
        ws.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->close();
            self->server.hub.receive(self->id, beast::buffers_to_string(self->buffer.data()));
            self->buffer.consume(self->buffer.size());
            self->server.flush(self->id);
            self->read();
        });
    }

    void push(std::vector<std::string> frames) {
        if (closed) return;
        for (auto& f : frames) out.push_back(std::move(f));
        if (!writing && !out.empty()) write_next();
    }

    void write_next() {
        writing = true;
        ws.text(true);
        ws.async_write(net::buffer(out.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->out.pop_front();
            if (ec) return self->close();
            if (self->out.empty()) self->writing = false;
            else self->write_next();
        });
    }

    void close() {
        if (closed) return;
        closed = true;
        server.hub.disconnect(id);
        server.connections.erase(id);
    }
};

}  // namespace

void Server::Impl::accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;
        std::make_shared<Connection>(std::move(socket), *this)->start();
        accept();
    });
}

void Server::Impl::flush(SessionHub::SessionId id) {
    auto it = connections.find(id);
    if (it != connections.end()) it->second->push(hub.drain(id));
}

void Server::Impl::schedule(std::chrono::steady_clock::time_point due) {
    auto tick = [this, due](beast::error_code ec) {
        if (ec) return;
        hub.step();
        for (auto& [id, conn] : std::map(connections)) conn->push(hub.drain(id));
        const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(options.speed > 0 ? hub.world().config().dt / options.speed : 0.0));
        // Pace against the schedule rather than the wake-up, so ticks do not drift.
        schedule(options.speed > 0 ? due + period : std::chrono::steady_clock::now());
    };
    timer.expires_at(due);
    timer.async_wait(tick);
}

Server::Server(const Scenario& scenario, const ServerOptions& options)
    : impl_(std::make_unique<Impl>(scenario, options)) {
    try {
        const tcp::endpoint ep(net::ip::make_address(options.host), options.port);
        impl_->acceptor.open(ep.protocol());
        impl_->acceptor.set_option(net::socket_base::reuse_address(true));
        impl_->acceptor.bind(ep);
        impl_->acceptor.listen();
    } catch (const boost::system::system_error& e) {
        throw std::runtime_error("cannot listen on " + options.host + ":" + std::to_string(options.port) + ": " +
                                 e.code().message());
    }
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
    impl_->accept();
    impl_->schedule(std::chrono::steady_clock::now());
    impl_->io.run();
}

void Server::stop() { impl_->io.stop(); }

}  // namespace spa
