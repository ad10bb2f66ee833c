#include "spa/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <set>
#include <thread>

using namespace spa;
using nlohmann::json;

namespace {

std::vector<json> parsed(const std::vector<std::string>& frames) {
    std::vector<json> out;
    for (const auto& f : frames) out.push_back(json::parse(f));
    return out;
}

std::vector<json> of_type(const std::vector<json>& msgs, const std::string& type) {
    std::vector<json> out;
    for (const auto& m : msgs)
        if (m["type"] == type) out.push_back(m);
    return out;
}

std::string error_code(SessionHub& hub, SessionHub::SessionId s) {
    const auto errs = of_type(parsed(hub.drain(s)), "error");
    return errs.empty() ? "" : errs.back()["code"].get<std::string>();
}

ServerOptions flat_out(std::size_t slots = 2) {
    ServerOptions o;
    o.port = 0;
    o.speed = 0;
    o.avatar_slots = slots;
    return o;
}

struct Hub {
    Scenario sc;
    SessionHub hub;
    explicit Hub(Scenario base, std::size_t slots = 2)
        : sc(with_avatars(base, slots)), hub(sc, flat_out(slots)) {}
};

SessionHub::SessionId joined(SessionHub& hub) {
    const auto s = hub.connect();
    hub.receive(s, R"({"v":1,"type":"join"})");
    hub.step();
    return s;
}

std::set<std::string> keys(const json& j) {
    std::set<std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) out.insert(it.key());
    return out;
}

}  // namespace

TEST(Hub, ShapeErrorsAreImmediate) {
    Hub h(build_tradeshow(0));
    const auto s = h.hub.connect();
    namespace pe = protocol_error;
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"not json", pe::kBadJson},
        {"[1,2]", pe::kBadJson},
        {R"({"type":"join"})", pe::kBadVersion},
        {R"({"v":2,"type":"join"})", pe::kBadVersion},
        {R"({"v":1})", pe::kBadField},
        {R"({"v":1,"type":"join","scenario":3})", pe::kBadField},
        {R"({"v":1,"type":"move_to","x":"1","y":2})", pe::kBadField},
        {R"({"v":1,"type":"say"})", pe::kBadField},
        {R"({"v":1,"type":"dance"})", pe::kUnknownType},
    };
    for (const auto& [frame, code] : cases) {
        h.hub.receive(s, frame);
        const auto msgs = parsed(h.hub.drain(s));
        ASSERT_EQ(msgs.size(), 1u) << frame;
        EXPECT_EQ(msgs[0]["v"], 1);
        EXPECT_EQ(msgs[0]["type"], "error");
        EXPECT_EQ(msgs[0]["code"], code) << frame;
    }
}

TEST(Hub, CommandsNeedJoin) {
    Hub h(build_tradeshow(0));
    const auto s = h.hub.connect();
    h.hub.receive(s, R"({"v":1,"type":"say","text":"hello"})");
    EXPECT_TRUE(h.hub.drain(s).empty());
    h.hub.step();
    EXPECT_EQ(error_code(h.hub, s), protocol_error::kNotJoined);
}

TEST(Hub, JoinFillsSlotsInOrder) {
    Hub h(build_tradeshow(0), 2);
    const std::size_t before = h.hub.world().snapshot()["agents"].size();
    const auto a = h.hub.connect();
    h.hub.receive(a, R"({"v":1,"type":"join","scenario":"tradeshow"})");
    h.hub.step();
    const auto msgs = parsed(h.hub.drain(a));
    ASSERT_GE(msgs.size(), 2u);
    EXPECT_EQ(msgs[0]["type"], "welcome");
    EXPECT_EQ(msgs[0]["avatar_id"], "Avatar_1");
    EXPECT_EQ(msgs[1]["type"], "snapshot");
    EXPECT_EQ(h.hub.world().snapshot()["agents"].size(), before + 1);

    h.hub.receive(a, R"({"v":1,"type":"join"})");
    h.hub.step();
    EXPECT_EQ(error_code(h.hub, a), protocol_error::kAlreadyJoined);

    const auto b = h.hub.connect();
    h.hub.receive(b, R"({"v":1,"type":"join","scenario":"museum"})");
    h.hub.step();
    EXPECT_EQ(error_code(h.hub, b), protocol_error::kWrongScenario);
    h.hub.receive(b, R"({"v":1,"type":"join"})");
    h.hub.step();
    EXPECT_EQ(of_type(parsed(h.hub.drain(b)), "welcome").at(0)["avatar_id"], "Avatar_2");

    const auto c = h.hub.connect();
    h.hub.receive(c, R"({"v":1,"type":"join"})");
    h.hub.step();
    EXPECT_EQ(error_code(h.hub, c), protocol_error::kFull);

    h.hub.disconnect(a);
    EXPECT_EQ(h.hub.session_count(), 2u);
    h.hub.receive(c, R"({"v":1,"type":"join"})");
    h.hub.step();
    EXPECT_EQ(of_type(parsed(h.hub.drain(c)), "welcome").at(0)["avatar_id"], "Avatar_1");
}

TEST(Hub, DisconnectDropsPendingAndRemovesAvatar) {
    Hub h(build_tradeshow(0), 1);
    const auto s = joined(h.hub);
    const std::size_t with = h.hub.world().snapshot()["agents"].size();
    h.hub.receive(s, R"({"v":1,"type":"say","text":"hello"})");
    h.hub.disconnect(s);
    h.hub.step();
    EXPECT_EQ(h.hub.world().snapshot()["agents"].size(), with - 1);
    for (const auto& u : h.hub.world().last_utterances()) EXPECT_NE(u.speaker, "Avatar_1");
    EXPECT_TRUE(h.hub.drain(s).empty());
}

TEST(Hub, ApplyTimeErrors) {
    Hub h(build_tradeshow(0), 1);
    const auto s = joined(h.hub);
    h.hub.drain(s);
    h.hub.receive(s, R"({"v":1,"type":"move_to","x":-100,"y":-100})");
    h.hub.step();
    EXPECT_EQ(error_code(h.hub, s), protocol_error::kUnreachable);
    h.hub.receive(s, R"({"v":1,"type":"say","text":"   "})");
    h.hub.step();
    EXPECT_EQ(error_code(h.hub, s), protocol_error::kEmptyUtterance);
}

TEST(Hub, SnapshotsFollowTheRate) {
    Hub h(build_tradeshow(0), 1);
    const auto s = joined(h.hub);
    h.hub.drain(s);
    std::size_t snaps = 0;
    for (int t = 0; t < 30; ++t) {
        h.hub.step();
        snaps += of_type(parsed(h.hub.drain(s)), "snapshot").size();
    }
    // 10 Hz at dt 0.1 is one per tick.
    EXPECT_EQ(snaps, 30u);
}

TEST(Hub, AvatarQuestionIsAnsweredToIt) {
    Hub h(build_tradeshow(0), 1);
    const auto s = joined(h.hub);
    h.hub.drain(s);
    h.hub.receive(s, R"({"v":1,"type":"say","text":"where is the registration desk"})");
    // Bystanders who do not know may say so first; someone who knows answers.
    std::optional<json> answer;
    for (int t = 0; t < 50 && !answer; ++t) {
        h.hub.step();
        for (const auto& m : of_type(parsed(h.hub.drain(s)), "utterance"))
            if (m["to_you"] == true && std::regex_search(m["text"].get<std::string>(), std::regex("booth \\d+")))
                answer = m;
    }
    ASSERT_TRUE(answer);
    EXPECT_EQ((*answer)["addressee"], "Avatar_1");
}

TEST(Hub, AvatarOverhearsAgents) {
    Hub h(build_antipodal_circle(10, 10, 0), 1);
    const auto s = joined(h.hub);
    std::size_t heard = 0;
    for (int t = 0; t < 100; ++t) {
        h.hub.step();
        heard += of_type(parsed(h.hub.drain(s)), "utterance").size();
    }
    EXPECT_GT(heard, 0u);
}

// Every example in the protocol document must be something the hub accepts
// (client side) or has the same fields as what the hub sends (server side).
TEST(Hub, ProtocolDocumentMatches) {
    std::ifstream in(std::string(SPA_SOURCE_DIR) + "/docs/protocol.md");
    ASSERT_TRUE(in);
    std::vector<std::pair<std::string, json>> examples;  // side, message
    std::string line, last_prose, block;
    bool in_block = false;
    while (std::getline(in, line)) {
        if (!in_block && line == "```json") {
            in_block = true;
            block.clear();
        } else if (in_block && line == "```") {
            in_block = false;
            examples.emplace_back(last_prose, json::parse(block));
        } else if (in_block) {
            block += line + "\n";
        } else if (!line.empty()) {
            last_prose = line;
        }
    }
    ASSERT_GE(examples.size(), 7u);

    Hub h(build_tradeshow(0), 1);
    const auto s = h.hub.connect();
    // Utterances are only kept when addressed to us, so optional fields show.
    std::map<std::string, json> seen;
    auto keep = [&](const json& m) {
        if (m["type"] != "utterance" || m["to_you"] == true) seen.emplace(m["type"].get<std::string>(), m);
    };
    auto record = [&] {
        for (const auto& m : parsed(h.hub.drain(s))) keep(m);
    };
    for (const auto& [side, msg] : examples) {
        if (side != "Client sends:") continue;
        h.hub.receive(s, msg.dump());
        h.hub.step();
        for (const auto& m : parsed(h.hub.drain(s))) {
            EXPECT_NE(m["type"], "error") << msg << " -> " << m;
            keep(m);
        }
    }
    for (int t = 0; t < 60 && !seen.count("utterance"); ++t) {
        h.hub.step();
        record();
    }
    const auto t = h.hub.connect();
    h.hub.receive(t, R"({"v":1,"type":"say","text":"x"})");
    h.hub.step();
    for (const auto& m : parsed(h.hub.drain(t))) keep(m);

    std::size_t server_examples = 0;
    for (const auto& [side, msg] : examples) {
        if (side != "Server sends:") continue;
        ++server_examples;
        const std::string type = msg["type"];
        ASSERT_TRUE(seen.count(type)) << type;
        const json& real = seen[type];
        EXPECT_EQ(keys(msg), keys(real)) << type;
        if (type == "welcome") EXPECT_EQ(keys(msg["static_geometry"]), keys(real["static_geometry"]));
        if (type == "snapshot") {
            ASSERT_FALSE(real["agents"].empty());
            EXPECT_EQ(keys(msg["agents"][0]), keys(real["agents"][0]));
        }
        if (type == "error") EXPECT_EQ(msg["code"], protocol_error::kNotJoined);
    }
    EXPECT_EQ(server_examples, 4u);
}

TEST(Server, PortInUseIsReported) {
    Hub h(build_tradeshow(0), 1);
    Server first(h.sc, flat_out(1));
    ServerOptions o = flat_out(1);
    o.port = first.port();
    EXPECT_THROW(Server(h.sc, o), std::runtime_error);
}

TEST(Server, RealSocketJoinAndAsk) {
    namespace net = boost::asio;
    namespace websocket = boost::beast::websocket;
    const Scenario sc = with_avatars(build_tradeshow(0), 1);
    ServerOptions o = flat_out(1);
    o.speed = 50;  // fast but paced, so the client keeps up
    Server server(sc, o);
    std::thread loop([&] { server.run(); });

    net::io_context io;
    net::ip::tcp::resolver resolver(io);
    websocket::stream<net::ip::tcp::socket> ws(io);
    net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(server.port())));
    ws.handshake("127.0.0.1", "/");
    auto read = [&] {
        boost::beast::flat_buffer buf;
        ws.read(buf);
        return json::parse(boost::beast::buffers_to_string(buf.data()));
    };
    ws.write(net::buffer(std::string(R"({"v":1,"type":"join"})")));
    json m = read();
    EXPECT_EQ(m["type"], "welcome");
    EXPECT_EQ(m["avatar_id"], "Avatar_1");
    ws.write(net::buffer(std::string(R"({"v":1,"type":"say","text":"where is the registration desk"})")));
    bool answered = false;
    for (int i = 0; i < 400 && !answered; ++i) {
        m = read();
        answered = m["type"] == "utterance" && m["to_you"] == true;
    }
    EXPECT_TRUE(answered);
    ws.close(websocket::close_code::normal);
    server.stop();
    loop.join();
}
