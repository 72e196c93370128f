#pragma once

// Certificate/feedback exchange: canonical document codecs, the length-
// prefixed "Q4X1" framing, a concurrent request/response server, and the
// synchronous client calls.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "q4/model.hpp"

namespace q4::qxs {

enum class MsgType : std::uint8_t {
    Cert = 0x01,
    CertAck = 0x02,
    Feedback = 0x03,
    FeedbackAck = 0x04,
    Error = 0x05,
};

const char* to_string(MsgType type);

inline constexpr char kMagic[4] = {'Q', '4', 'X', '1'};
inline constexpr std::size_t kHeaderBytes = 9;  // magic + type + length
inline constexpr std::size_t kMaxPayloadBytes = 16 * 1024 * 1024;

struct WireMessage {
    MsgType type = MsgType::Error;
    std::string payload;
};

/// magic, type byte, 4-byte big-endian payload length, payload.
std::string frame(MsgType type, std::string_view payload);

/// Reads exactly one frame from the head of `bytes`; `consumed` (when given)
/// receives header + payload size. Throws BadMagic / UnknownType /
/// FrameTruncated / FrameTooLarge.
WireMessage unframe(std::string_view bytes, std::size_t* consumed = nullptr);

enum class AckStatus { Accepted, Malformed, UnknownOrder };

const char* to_string(AckStatus status);
AckStatus ack_status_from_string(const std::string& s);

struct Ack {
    std::string certificate_id;
    AckStatus status = AckStatus::Accepted;
    bool operator==(const Ack&) const = default;
};

/// Canonical JSON bytes of a certificate (schema "q4-cert/1"). The payload
/// shape is bound to the intimacy level; decode_certificate enforces it
/// strictly (unexpected fields are malformed, absent ones are missing).
std::string encode_certificate(const QualityCertificate& cert);
QualityCertificate decode_certificate(const std::string& bytes);

std::string encode_feedback(const FeedbackReport& report);
FeedbackReport decode_feedback(const std::string& bytes);

std::string encode_ack(const Ack& ack);
Ack decode_ack(const std::string& bytes);

std::string encode_error(const std::string& reason);
std::string decode_error(const std::string& bytes);

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 0;               // 0 picks an ephemeral port
    std::set<std::string> known_orders;   // empty set accepts every order
    std::string audit_path;               // optional audit log file (append)
    int io_timeout_ms = 10000;            // per-connection read/write budget
};

/// One-request-per-connection exchange peer. Certificates are acked
/// ACCEPTED/MALFORMED/UNKNOWN_ORDER, feedback ACCEPTED/MALFORMED, anything
/// unreadable gets an ERROR frame. Connections are isolated; the only shared
/// state is the append-only audit log.
class ExchangeServer {
public:
    struct Handlers {
        std::function<Ack(const QualityCertificate&)> on_certificate;  // optional
        std::function<Ack(const FeedbackReport&)> on_feedback;         // optional
    };

    /// Binds and listens immediately (throws Error(BindFailed)); call start()
    /// to serve in the background or run() to serve on this thread.
    explicit ExchangeServer(ServerConfig config, Handlers handlers = {});
    ~ExchangeServer();

    ExchangeServer(const ExchangeServer&) = delete;
    ExchangeServer& operator=(const ExchangeServer&) = delete;

    std::uint16_t port() const noexcept { return port_; }

    void start();
    void run();
    void stop();

    std::vector<std::string> audit_lines() const;
    std::vector<FeedbackReport> received_feedback() const;

private:
    void accept_loop();
    void handle_connection(int fd);
    void audit(const std::string& type_name, const std::string& certificate_id,
               const std::string& status);

    ServerConfig config_;
    Handlers handlers_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::thread accept_thread_;
    std::atomic<bool> running_{false};

    mutable std::mutex mutex_;
    std::vector<std::thread> workers_;
    std::vector<std::string> audit_lines_;
    std::vector<FeedbackReport> received_feedback_;
};

struct ClientConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    int timeout_ms = 10000;
};

/// One request, one response, connection closed. Throws ConnectFailed,
/// Timeout, or ProtocolError (which also covers ERROR-frame replies).
Ack send_certificate(const ClientConfig& peer, const QualityCertificate& cert);
Ack send_feedback(const ClientConfig& peer, const FeedbackReport& report);

}  // namespace q4::qxs
