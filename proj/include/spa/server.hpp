#pragma once
//
// Live sessions over WebSocket. SessionHub holds the world and every
// session's queues and knows nothing about sockets; Server wraps it in a
// Beast listener. Both run on one thread, so the world is only touched
// between ticks.
//
// Wire format: one JSON object per text frame, always carrying "v": 1 and
// "type". See docs/protocol.md.
//

#include "spa/scenarios.hpp"

#include <json.hpp>

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spa {

inline constexpr int kProtocolVersion = 1;

struct ServerOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    double speed = 1.0;          // simulated seconds per wall second; 0 runs flat out
    double snapshot_hz = 10.0;   // in simulated time
    std::size_t avatar_slots = 4;
    bool nli = true;
};

class SessionHub {
public:
    using SessionId = std::uint64_t;

    /// `scenario` should already carry avatar slots (see with_avatars).
    SessionHub(const Scenario& scenario, const ServerOptions& options);

    SessionId connect();
    void disconnect(SessionId id);

    /// Parses one inbound frame. Malformed input is answered with an error
    /// right away; valid commands wait for the next tick boundary.
    void receive(SessionId id, std::string_view frame);

    /// Applies queued commands in arrival order, then advances one tick and
    /// queues utterance and snapshot messages.
    void step();

    /// Outbound frames for a session, oldest first.
    std::vector<std::string> drain(SessionId id);

    const World& world() const { return *world_; }
    World& world() { return *world_; }
    std::optional<std::string> avatar_of(SessionId id) const;
    std::size_t session_count() const { return sessions_.size(); }

private:
    struct Session {
        std::optional<std::string> avatar;
        std::deque<std::string> outbox;
    };
    struct Command {
        SessionId session;
        nlohmann::json message;
    };

    void send(SessionId id, nlohmann::json message);
    void error(SessionId id, const std::string& code, const std::string& detail);
    void apply(const Command& c);

    std::string scene_;
    ServerOptions options_;
    std::unique_ptr<World> world_;
    std::vector<std::string> free_avatars_;
    std::map<SessionId, Session> sessions_;
    std::deque<Command> pending_;
    SessionId next_session_ = 1;
    std::uint64_t snapshot_every_ = 1;
};

/// Error-code strings used in `error` messages.
namespace protocol_error {
inline constexpr const char* kBadJson = "bad_json";
inline constexpr const char* kBadVersion = "bad_version";
inline constexpr const char* kUnknownType = "unknown_type";
inline constexpr const char* kBadField = "bad_field";
inline constexpr const char* kNotJoined = "not_joined";
inline constexpr const char* kAlreadyJoined = "already_joined";
inline constexpr const char* kFull = "full";
inline constexpr const char* kWrongScenario = "wrong_scenario";
inline constexpr const char* kUnreachable = "unreachable";
inline constexpr const char* kEmptyUtterance = "empty_utterance";
}  // namespace protocol_error

class Server {
public:
    /// Binds immediately; throws std::runtime_error when the port is taken.
    Server(const Scenario& scenario, const ServerOptions& options);
    ~Server();

    unsigned short port() const;
    /// Serves until stop() is called from any thread.
    void run();
    void stop();

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace spa
