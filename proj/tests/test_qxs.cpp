#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "q4/model.hpp"
#include "q4/qxs.hpp"
#include "q4/rng.hpp"

#include "helpers.hpp"

using namespace q4;
using namespace q4::qxs;
using nlohmann::json;
using testutil::error_code;

namespace {

QualityCertificate make_cert(Intimacy level) {
    QualityCertificate cert;
    cert.certificate_id = "CERT-1";
    cert.coil_id = "COIL-1";
    cert.order_id = "ORD-1";
    cert.customer_id = "CUST-1";
    cert.intimacy = level;
    cert.verdict = Verdict::Accept;
    cert.generated_at = 1755432100;
    if (level != Intimacy::Basic) {
        CertificateChannel ch;
        ch.stats = {12.5, 10.0, 15.0, 0.75, 0.9};
        if (level == Intimacy::Full) {
            ch.values = std::vector<double>{10.0, 12.0, 15.0};
            ch.pv = std::vector<double>{1.0, 0.75, 0.9};
        }
        cert.channels["p1"] = ch;
        CertificateOutliers outliers;
        outliers.count = 1;
        outliers.fraction = 0.25;
        if (level == Intimacy::Full) {
            outliers.positions = std::vector<std::int64_t>{2};
        }
        cert.outliers = outliers;
    }
    return cert;
}

FeedbackReport make_feedback() {
    FeedbackReport report;
    report.certificate_id = "CERT-1";
    report.coil_id = "COIL-1";
    report.items = {
        {"p1", 0.5, FeedbackKind::LowPlausibility, 0.2},
        {"p1", 1.0, FeedbackKind::OutOfTolerance, 512.5},
        {"combined", 1.0, FeedbackKind::Outlier, 0.8},
    };
    return report;
}

/// Connects to 127.0.0.1:port, writes bytes, half-closes and reads the full
/// reply until the server hangs up.
std::string raw_exchange(std::uint16_t port, const std::string& bytes) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t w = ::send(fd, bytes.data() + sent, bytes.size() - sent, 0);
        REQUIRE(w > 0);
        sent += static_cast<std::size_t>(w);
    }
    ::shutdown(fd, SHUT_WR);
    std::string reply;
    char buf[4096];
    ssize_t r = 0;
    while ((r = ::read(fd, buf, sizeof(buf))) > 0) {
        reply.append(buf, static_cast<std::size_t>(r));
    }
    ::close(fd);
    return reply;
}

}  // namespace

TEST_CASE("frame layout is magic, type, length, payload") {
    const std::string f = frame(MsgType::Cert, "hi");
    REQUIRE(f.size() == kHeaderBytes + 2);
    CHECK(f.substr(0, 4) == "Q4X1");
    CHECK(static_cast<std::uint8_t>(f[4]) == 0x01);
    CHECK(static_cast<std::uint8_t>(f[5]) == 0);
    CHECK(static_cast<std::uint8_t>(f[6]) == 0);
    CHECK(static_cast<std::uint8_t>(f[7]) == 0);
    CHECK(static_cast<std::uint8_t>(f[8]) == 2);
    CHECK(f.substr(9) == "hi");

    std::size_t consumed = 0;
    const WireMessage msg = unframe(f, &consumed);
    CHECK(msg.type == MsgType::Cert);
    CHECK(msg.payload == "hi");
    CHECK(consumed == f.size());
}

TEST_CASE("framing round trips arbitrary payload bytes") {
    SplitMix64 rng(55);
    for (const std::size_t len : {std::size_t{0}, std::size_t{1}, std::size_t{17},
                                  std::size_t{1024}, std::size_t{100000}}) {
        std::string payload(len, '\0');
        for (char& c : payload) c = static_cast<char>(rng.next() & 0xFF);
        const auto type = static_cast<MsgType>(1 + rng.next() % 5);
        const std::string f = frame(type, payload);
        const WireMessage msg = unframe(f);
        CHECK(msg.type == type);
        CHECK(msg.payload == payload);
    }
}

TEST_CASE("consecutive frames parse with the consumed offset") {
    const std::string stream = frame(MsgType::Cert, "one") + frame(MsgType::Error, "two");
    std::size_t consumed = 0;
    const WireMessage first = unframe(stream, &consumed);
    CHECK(first.payload == "one");
    const WireMessage second = unframe(std::string_view(stream).substr(consumed));
    CHECK(second.type == MsgType::Error);
    CHECK(second.payload == "two");
}

TEST_CASE("unframe reports what is wrong") {
    CHECK(error_code([] { unframe("Q4X1"); }) == ErrorCode::FrameTruncated);
    CHECK(error_code([] { unframe("XXXXXXXXXX"); }) == ErrorCode::BadMagic);
    std::string bad_type = frame(MsgType::Cert, "x");
    bad_type[4] = 0x909 & 0xFF;
    CHECK(error_code([&] { unframe(bad_type); }) == ErrorCode::UnknownType);
    std::string huge = frame(MsgType::Cert, "");
    huge[5] = 0x7F;  // declared length beyond the 16 MiB cap
    CHECK(error_code([&] { unframe(huge); }) == ErrorCode::FrameTooLarge);
    const std::string cut = frame(MsgType::Cert, "payload").substr(0, 12);
    CHECK(error_code([&] { unframe(cut); }) == ErrorCode::FrameTruncated);
    CHECK(error_code([] {
              frame(MsgType::Cert, std::string(kMaxPayloadBytes + 1, 'a'));
          }) == ErrorCode::FrameTooLarge);
}

TEST_CASE("certificates round trip at every intimacy level") {
    for (const Intimacy level : {Intimacy::Basic, Intimacy::Standard, Intimacy::Full}) {
        const QualityCertificate cert = make_cert(level);
        const std::string bytes = encode_certificate(cert);
        const QualityCertificate back = decode_certificate(bytes);
        CHECK(back == cert);
        CHECK(encode_certificate(back) == bytes);
    }
}

TEST_CASE("certificate decoding is strict") {
    const std::string standard = encode_certificate(make_cert(Intimacy::Standard));

    json j = json::parse(standard);
    j["surprise"] = 1;
    CHECK(error_code([&] { decode_certificate(j.dump()); }) ==
          ErrorCode::MalformedDocument);

    j = json::parse(standard);
    j.erase("verdict");
    CHECK(error_code([&] { decode_certificate(j.dump()); }) == ErrorCode::MissingField);

    j = json::parse(standard);
    j["schema_version"] = "q4-cert/2";
    CHECK(error_code([&] { decode_certificate(j.dump()); }) ==
          ErrorCode::UnsupportedSchemaVersion);

    j = json::parse(standard);
    j["intimacy"] = "TOTAL";
    CHECK(error_code([&] { decode_certificate(j.dump()); }) ==
          ErrorCode::MalformedDocument);

    j = json::parse(standard);
    j["generated_at"] = "2024-02-30T00:00:00Z";
    CHECK(error_code([&] { decode_certificate(j.dump()); }) ==
          ErrorCode::MalformedDocument);

    // a BASIC document must not carry the detail blocks
    j = json::parse(encode_certificate(make_cert(Intimacy::Basic)));
    j["channels"] = json::object();
    CHECK(error_code([&] { decode_certificate(j.dump()); }) ==
          ErrorCode::MalformedDocument);

    // STANDARD channels must not carry the FULL series
    j = json::parse(standard);
    j["channels"]["p1"]["values"] = json::array({1.0});
    CHECK(error_code([&] { decode_certificate(j.dump()); }) ==
          ErrorCode::MalformedDocument);

    CHECK(error_code([] { decode_certificate("{}"); }) == ErrorCode::MissingField);
    CHECK(error_code([] { decode_certificate("[1,2]"); }) ==
          ErrorCode::MalformedDocument);
}

TEST_CASE("feedback, ack and error codecs round trip") {
    const FeedbackReport report = make_feedback();
    const std::string bytes = encode_feedback(report);
    CHECK(decode_feedback(bytes) == report);
    CHECK(encode_feedback(decode_feedback(bytes)) == bytes);

    json j = json::parse(bytes);
    j["items"][0]["kind"] = "WONKY";
    CHECK(error_code([&] { decode_feedback(j.dump()); }) ==
          ErrorCode::MalformedDocument);
    j = json::parse(bytes);
    j["items"][0].erase("channel");
    CHECK(error_code([&] { decode_feedback(j.dump()); }) == ErrorCode::MissingField);

    const Ack ack{"CERT-1", AckStatus::UnknownOrder};
    CHECK(decode_ack(encode_ack(ack)) == ack);
    CHECK(decode_error(encode_error("stop")) == "stop");
}

TEST_CASE("server acks certificates and writes one audit line per request") {
    ServerConfig config;
    config.known_orders = {"ORD-1"};
    ExchangeServer server(std::move(config));
    server.start();

    const ClientConfig peer{"127.0.0.1", server.port(), 2000};
    const Ack ok = send_certificate(peer, make_cert(Intimacy::Standard));
    CHECK(ok == Ack{"CERT-1", AckStatus::Accepted});

    QualityCertificate unknown = make_cert(Intimacy::Basic);
    unknown.order_id = "ORD-404";
    unknown.certificate_id = "CERT-2";
    const Ack rejected = send_certificate(peer, unknown);
    CHECK(rejected == Ack{"CERT-2", AckStatus::UnknownOrder});

    const auto lines = server.audit_lines();
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].substr(20) == " RECV CERT CERT-1 ACCEPTED");
    CHECK(lines[1].substr(20) == " RECV CERT CERT-2 UNKNOWN_ORDER");

    server.stop();
}

TEST_CASE("an empty order set accepts every order id") {
    ExchangeServer server(ServerConfig{});
    server.start();
    QualityCertificate cert = make_cert(Intimacy::Basic);
    cert.order_id = "ANY-ORDER";
    const Ack ack = send_certificate({"127.0.0.1", server.port(), 2000}, cert);
    CHECK(ack.status == AckStatus::Accepted);
    server.stop();
}

TEST_CASE("feedback reaches the server store") {
    ExchangeServer server(ServerConfig{});
    server.start();
    const FeedbackReport report = make_feedback();
    const Ack ack = send_feedback({"127.0.0.1", server.port(), 2000}, report);
    CHECK(ack == Ack{"CERT-1", AckStatus::Accepted});
    const auto stored = server.received_feedback();
    REQUIRE(stored.size() == 1);
    CHECK(stored[0] == report);
    server.stop();
}

TEST_CASE("garbage bytes earn an error frame and the server lives on") {
    ExchangeServer server(ServerConfig{});
    server.start();

    const std::string reply = raw_exchange(server.port(), "XXXX garbage here");
    REQUIRE(!reply.empty());
    const WireMessage msg = unframe(reply);
    CHECK(msg.type == MsgType::Error);
    CHECK(!decode_error(msg.payload).empty());

    // malformed payload inside a valid frame gets a MALFORMED ack instead
    const std::string reply2 =
        raw_exchange(server.port(), frame(MsgType::Cert, "{not json"));
    const WireMessage msg2 = unframe(reply2);
    CHECK(msg2.type == MsgType::CertAck);
    CHECK(decode_ack(msg2.payload).status == AckStatus::Malformed);

    // an ack is not a request
    const std::string reply3 = raw_exchange(
        server.port(), frame(MsgType::CertAck, encode_ack({"CERT-1", AckStatus::Accepted})));
    CHECK(unframe(reply3).type == MsgType::Error);

    // the server still answers proper requests afterwards
    const Ack ack = send_certificate({"127.0.0.1", server.port(), 2000},
                                     make_cert(Intimacy::Full));
    CHECK(ack.status == AckStatus::Accepted);
    server.stop();
}

TEST_CASE("a connection closed without bytes leaves no audit trace") {
    ExchangeServer server(ServerConfig{});
    server.start();

    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(server.port());
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    ::close(fd);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));

    const Ack ack = send_certificate({"127.0.0.1", server.port(), 2000},
                                     make_cert(Intimacy::Basic));
    CHECK(ack.status == AckStatus::Accepted);
    const auto lines = server.audit_lines();
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].substr(20) == " RECV CERT CERT-1 ACCEPTED");
    server.stop();
}

TEST_CASE("client reports a silent peer as a timeout") {
    const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(lfd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = 0;
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    REQUIRE(::listen(lfd, 1) == 0);
    socklen_t len = sizeof(addr);
    REQUIRE(::getsockname(lfd, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
    const std::uint16_t port = ntohs(addr.sin_port);

    std::thread holder([&] {
        const int c = ::accept(lfd, nullptr, nullptr);
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        if (c >= 0) ::close(c);
    });

    CHECK(error_code([&] {
              send_certificate({"127.0.0.1", port, 200}, make_cert(Intimacy::Basic));
          }) == ErrorCode::Timeout);
    holder.join();
    ::close(lfd);
}

TEST_CASE("connecting to a closed port fails") {
    // grab an ephemeral port and release it again
    const int probe = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(probe >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(::bind(probe, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    socklen_t len = sizeof(addr);
    REQUIRE(::getsockname(probe, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
    const std::uint16_t port = ntohs(addr.sin_port);
    ::close(probe);

    CHECK(error_code([&] {
              send_certificate({"127.0.0.1", port, 500}, make_cert(Intimacy::Basic));
          }) == ErrorCode::ConnectFailed);
}
