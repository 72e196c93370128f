#include "q4/qxs.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "q4/canon.hpp"

namespace q4::qxs {

using nlohmann::json;

const char* to_string(MsgType type) {
    switch (type) {
        case MsgType::Cert: return "CERT";
        case MsgType::CertAck: return "CERT_ACK";
        case MsgType::Feedback: return "FEEDBACK";
        case MsgType::FeedbackAck: return "FEEDBACK_ACK";
        case MsgType::Error: return "ERROR";
    }
    return "ERROR";
}

const char* to_string(AckStatus status) {
    switch (status) {
        case AckStatus::Accepted: return "ACCEPTED";
        case AckStatus::Malformed: return "MALFORMED";
        case AckStatus::UnknownOrder: return "UNKNOWN_ORDER";
    }
    return "MALFORMED";
}

AckStatus ack_status_from_string(const std::string& s) {
    if (s == "ACCEPTED") return AckStatus::Accepted;
    if (s == "MALFORMED") return AckStatus::Malformed;
    if (s == "UNKNOWN_ORDER") return AckStatus::UnknownOrder;
    throw Error(ErrorCode::MalformedDocument, "unknown ack status '" + s + "'");
}

// ---------------------------------------------------------------------------
// Framing

std::string frame(MsgType type, std::string_view payload) {
    if (payload.size() > kMaxPayloadBytes) {
        throw Error(ErrorCode::FrameTooLarge, "payload exceeds 16 MiB");
    }
    std::string out;
    out.reserve(kHeaderBytes + payload.size());
    out.append(kMagic, sizeof(kMagic));
    out.push_back(static_cast<char>(type));
    const auto len = static_cast<std::uint32_t>(payload.size());
    out.push_back(static_cast<char>(len >> 24 & 0xFF));
    out.push_back(static_cast<char>(len >> 16 & 0xFF));
    out.push_back(static_cast<char>(len >> 8 & 0xFF));
    out.push_back(static_cast<char>(len & 0xFF));
    out.append(payload);
    return out;
}

WireMessage unframe(std::string_view bytes, std::size_t* consumed) {
    if (bytes.size() < kHeaderBytes) {
        throw Error(ErrorCode::FrameTruncated, "incomplete frame header");
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw Error(ErrorCode::BadMagic, "frame does not start with Q4X1");
    }
    const auto type_byte = static_cast<std::uint8_t>(bytes[4]);
    if (type_byte < 0x01 || type_byte > 0x05) {
        throw Error(ErrorCode::UnknownType, "unknown message type byte");
    }
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) {
        len = len << 8 | static_cast<std::uint8_t>(bytes[5 + i]);
    }
    if (len > kMaxPayloadBytes) {
        throw Error(ErrorCode::FrameTooLarge, "frame length exceeds 16 MiB");
    }
    if (bytes.size() < kHeaderBytes + len) {
        throw Error(ErrorCode::FrameTruncated, "stream ends inside the payload");
    }
    if (consumed != nullptr) *consumed = kHeaderBytes + len;
    return {static_cast<MsgType>(type_byte), std::string(bytes.substr(kHeaderBytes, len))};
}

// ---------------------------------------------------------------------------
// Document codecs

namespace {

constexpr const char* kFeedbackSchemaVersion = "q4-feedback/1";

using canon::check_keys;
using canon::get_integer;
using canon::get_number;
using canon::get_number_array;
using canon::get_string;
using canon::malformed;

json parse_document(const std::string& bytes) { return canon::parse_object(bytes); }

}  // namespace

std::string encode_certificate(const QualityCertificate& cert) {
    const bool detailed = cert.intimacy != Intimacy::Basic;
    const bool full = cert.intimacy == Intimacy::Full;
    if (!detailed && (!cert.channels.empty() || cert.outliers.has_value())) {
        throw Error(ErrorCode::InvalidValue, "BASIC certificate must carry no detail blocks");
    }
    if (detailed && !cert.outliers.has_value()) {
        throw Error(ErrorCode::InvalidValue, "detailed certificate lacks the outlier summary");
    }

    json j;
    j["schema_version"] = kCertificateSchemaVersion;
    j["certificate_id"] = cert.certificate_id;
    j["coil_id"] = cert.coil_id;
    j["order_id"] = cert.order_id;
    j["customer_id"] = cert.customer_id;
    j["intimacy"] = to_string(cert.intimacy);
    j["verdict"] = to_string(cert.verdict);
    j["generated_at"] = canon::format_utc(cert.generated_at);

    if (detailed) {
        json channels = json::object();
        for (const auto& [name, ch] : cert.channels) {
            if (full != (ch.values.has_value() && ch.pv.has_value())) {
                throw Error(ErrorCode::InvalidValue,
                            "sample series allowed exactly at FULL intimacy");
            }
            json c;
            c["mean"] = ch.stats.mean;
            c["min"] = ch.stats.min;
            c["max"] = ch.stats.max;
            c["pv_min"] = ch.stats.pv_min;
            c["pv_mean"] = ch.stats.pv_mean;
            if (full) {
                if (ch.values->size() != ch.pv->size()) {
                    throw Error(ErrorCode::InvalidValue, "values/pv length mismatch");
                }
                c["values"] = *ch.values;
                c["pv"] = *ch.pv;
            }
            channels[name] = std::move(c);
        }
        j["channels"] = std::move(channels);

        json outliers;
        outliers["count"] = cert.outliers->count;
        outliers["fraction"] = cert.outliers->fraction;
        if (full != cert.outliers->positions.has_value()) {
            throw Error(ErrorCode::InvalidValue,
                        "outlier positions allowed exactly at FULL intimacy");
        }
        if (full) outliers["positions"] = *cert.outliers->positions;
        j["outlier_summary"] = std::move(outliers);
    }
    return canon::canonical_dump(j);
}

QualityCertificate decode_certificate(const std::string& bytes) {
    const json j = parse_document(bytes);

    if (!j.contains("schema_version")) {
        throw Error(ErrorCode::MissingField, "certificate lacks 'schema_version'");
    }
    const std::string version = get_string(j, "schema_version");
    if (version != kCertificateSchemaVersion) {
        throw Error(ErrorCode::UnsupportedSchemaVersion,
                    "unsupported certificate schema '" + version + "'");
    }
    if (!j.contains("intimacy")) {
        throw Error(ErrorCode::MissingField, "certificate lacks 'intimacy'");
    }

    QualityCertificate cert;
    try {
        cert.intimacy = intimacy_from_string(get_string(j, "intimacy"));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedDocument) throw;
        malformed(e.what());
    }
    const bool detailed = cert.intimacy != Intimacy::Basic;
    const bool full = cert.intimacy == Intimacy::Full;

    std::vector<std::string> keys = {"certificate_id", "coil_id",       "customer_id",
                                     "generated_at",   "intimacy",      "order_id",
                                     "schema_version", "verdict"};
    if (detailed) {
        keys.emplace_back("channels");
        keys.emplace_back("outlier_summary");
    }
    check_keys(j, keys, "certificate");

    cert.certificate_id = get_string(j, "certificate_id");
    cert.coil_id = get_string(j, "coil_id");
    cert.order_id = get_string(j, "order_id");
    cert.customer_id = get_string(j, "customer_id");
    try {
        cert.verdict = verdict_from_string(get_string(j, "verdict"));
        cert.generated_at = canon::parse_utc(get_string(j, "generated_at"));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedDocument) throw;
        malformed(e.what());
    }

    if (!detailed) return cert;

    const json& channels = j.at("channels");
    if (!channels.is_object()) malformed("'channels' must be an object");
    std::vector<std::string> channel_keys = {"max", "mean", "min", "pv_mean", "pv_min"};
    if (full) {
        channel_keys.emplace_back("pv");
        channel_keys.emplace_back("values");
    }
    for (const auto& item : channels.items()) {
        const json& c = item.value();
        if (!c.is_object()) malformed("channel '" + item.key() + "' must be an object");
        check_keys(c, channel_keys, "channel '" + item.key() + "'");

        CertificateChannel ch;
        ch.stats.mean = get_number(c.at("mean"), "mean");
        ch.stats.min = get_number(c.at("min"), "min");
        ch.stats.max = get_number(c.at("max"), "max");
        ch.stats.pv_min = get_number(c.at("pv_min"), "pv_min");
        ch.stats.pv_mean = get_number(c.at("pv_mean"), "pv_mean");
        if (full) {
            ch.values = get_number_array(c.at("values"), "values");
            ch.pv = get_number_array(c.at("pv"), "pv");
            if (ch.values->size() != ch.pv->size()) {
                malformed("channel '" + item.key() + "' values/pv lengths differ");
            }
        }
        cert.channels.emplace(item.key(), std::move(ch));
    }

    const json& summary = j.at("outlier_summary");
    if (!summary.is_object()) malformed("'outlier_summary' must be an object");
    std::vector<std::string> summary_keys = {"count", "fraction"};
    if (full) summary_keys.emplace_back("positions");
    check_keys(summary, summary_keys, "outlier_summary");

    CertificateOutliers outliers;
    outliers.count = get_integer(summary.at("count"), "count");
    outliers.fraction = get_number(summary.at("fraction"), "fraction");
    if (full) {
        const json& positions = summary.at("positions");
        if (!positions.is_array()) malformed("'positions' must be an array");
        std::vector<std::int64_t> idx;
        idx.reserve(positions.size());
        for (const auto& p : positions) idx.push_back(get_integer(p, "positions"));
        outliers.positions = std::move(idx);
    }
    cert.outliers = std::move(outliers);
    return cert;
}

std::string encode_feedback(const FeedbackReport& report) {
    json j;
    j["schema_version"] = kFeedbackSchemaVersion;
    j["certificate_id"] = report.certificate_id;
    j["coil_id"] = report.coil_id;
    json items = json::array();
    for (const auto& item : report.items) {
        json it;
        it["channel"] = item.channel;
        it["position_m"] = item.position_m;
        it["kind"] = to_string(item.kind);
        it["value"] = item.value;
        items.push_back(std::move(it));
    }
    j["items"] = std::move(items);
    return canon::canonical_dump(j);
}

FeedbackReport decode_feedback(const std::string& bytes) {
    const json j = parse_document(bytes);
    if (!j.contains("schema_version")) {
        throw Error(ErrorCode::MissingField, "feedback lacks 'schema_version'");
    }
    const std::string version = get_string(j, "schema_version");
    if (version != kFeedbackSchemaVersion) {
        throw Error(ErrorCode::UnsupportedSchemaVersion,
                    "unsupported feedback schema '" + version + "'");
    }
    check_keys(j, {"certificate_id", "coil_id", "items", "schema_version"}, "feedback");

    FeedbackReport report;
    report.certificate_id = get_string(j, "certificate_id");
    report.coil_id = get_string(j, "coil_id");
    const json& items = j.at("items");
    if (!items.is_array()) malformed("'items' must be an array");
    for (const auto& it : items) {
        if (!it.is_object()) malformed("feedback item must be an object");
        check_keys(it, {"channel", "kind", "position_m", "value"}, "feedback item");
        FeedbackItem item;
        item.channel = get_string(it, "channel");
        item.position_m = get_number(it.at("position_m"), "position_m");
        item.value = get_number(it.at("value"), "value");
        try {
            item.kind = feedback_kind_from_string(get_string(it, "kind"));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::MalformedDocument) throw;
            malformed(e.what());
        }
        report.items.push_back(std::move(item));
    }
    return report;
}

std::string encode_ack(const Ack& ack) {
    json j;
    j["certificate_id"] = ack.certificate_id;
    j["status"] = to_string(ack.status);
    return canon::canonical_dump(j);
}

Ack decode_ack(const std::string& bytes) {
    const json j = parse_document(bytes);
    check_keys(j, {"certificate_id", "status"}, "ack");
    return {get_string(j, "certificate_id"), ack_status_from_string(get_string(j, "status"))};
}

std::string encode_error(const std::string& reason) {
    json j;
    j["reason"] = reason;
    return canon::canonical_dump(j);
}

std::string decode_error(const std::string& bytes) {
    const json j = parse_document(bytes);
    check_keys(j, {"reason"}, "error payload");
    return get_string(j, "reason");
}

// ---------------------------------------------------------------------------
// Sockets

namespace {

struct Fd {
    int fd = -1;
    Fd() = default;
    explicit Fd(int f) : fd(f) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& other) noexcept : fd(other.fd) { other.fd = -1; }
    ~Fd() {
        if (fd != -1) ::close(fd);
    }
    int release() {
        const int f = fd;
        fd = -1;
        return f;
    }
};

void set_io_timeout(int fd, int timeout_ms) {
    timeval tv{};
    tv.tv_sec = timeout_ms / 1000;
    tv.tv_usec = timeout_ms % 1000 * 1000;
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

enum class IoStatus { Ok, Eof, Timeout, Failed };

IoStatus send_all(int fd, std::string_view bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t n =
            ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n > 0) {
            sent += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return IoStatus::Timeout;
        return IoStatus::Failed;
    }
    return IoStatus::Ok;
}

// Reads exactly `want` bytes unless the stream ends or times out first;
// `got` reports how much arrived.
IoStatus recv_exact(int fd, char* buf, std::size_t want, std::size_t& got) {
    got = 0;
    while (got < want) {
        const ssize_t n = ::recv(fd, buf + got, want - got, 0);
        if (n > 0) {
            got += static_cast<std::size_t>(n);
            continue;
        }
        if (n == 0) return IoStatus::Eof;
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) return IoStatus::Timeout;
        return IoStatus::Failed;
    }
    return IoStatus::Ok;
}

struct FrameReadResult {
    bool ok = false;
    bool empty = false;       // peer closed before sending anything
    ErrorCode error{};        // when !ok && !empty
    std::string detail;
    MsgType type = MsgType::Error;
    std::string payload;
};

FrameReadResult read_frame(int fd) {
    FrameReadResult res;
    char header[kHeaderBytes];
    std::size_t got = 0;
    const IoStatus hs = recv_exact(fd, header, sizeof(header), got);
    if (hs != IoStatus::Ok) {
        if (got == 0 && hs == IoStatus::Eof) {
            res.empty = true;
            return res;
        }
        res.error = hs == IoStatus::Timeout ? ErrorCode::Timeout : ErrorCode::FrameTruncated;
        res.detail = hs == IoStatus::Timeout ? "timed out reading the frame header"
                                             : "stream ended inside the frame header";
        return res;
    }
    if (std::memcmp(header, kMagic, sizeof(kMagic)) != 0) {
        res.error = ErrorCode::BadMagic;
        res.detail = "frame does not start with Q4X1";
        return res;
    }
    const auto type_byte = static_cast<std::uint8_t>(header[4]);
    if (type_byte < 0x01 || type_byte > 0x05) {
        res.error = ErrorCode::UnknownType;
        res.detail = "unknown message type byte";
        return res;
    }
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) {
        len = len << 8 | static_cast<std::uint8_t>(header[5 + i]);
    }
    if (len > kMaxPayloadBytes) {
        res.error = ErrorCode::FrameTooLarge;
        res.detail = "frame length exceeds 16 MiB";
        return res;
    }
    std::string payload(len, '\0');
    if (len > 0) {
        const IoStatus ps = recv_exact(fd, payload.data(), len, got);
        if (ps != IoStatus::Ok) {
            res.error =
                ps == IoStatus::Timeout ? ErrorCode::Timeout : ErrorCode::FrameTruncated;
            res.detail = ps == IoStatus::Timeout ? "timed out reading the payload"
                                                 : "stream ended inside the payload";
            return res;
        }
    }
    res.ok = true;
    res.type = static_cast<MsgType>(type_byte);
    res.payload = std::move(payload);
    return res;
}

}  // namespace

// ---------------------------------------------------------------------------
// Server

ExchangeServer::ExchangeServer(ServerConfig config, Handlers handlers)
    : config_(std::move(config)), handlers_(std::move(handlers)) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (fd.fd < 0) {
        throw Error(ErrorCode::BindFailed, std::strerror(errno));
    }
    const int one = 1;
    ::setsockopt(fd.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(config_.port);
    if (::inet_pton(AF_INET, config_.bind_address.c_str(), &addr.sin_addr) != 1) {
        throw Error(ErrorCode::BindFailed, "bad bind address " + config_.bind_address);
    }
    if (::bind(fd.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw Error(ErrorCode::BindFailed, config_.bind_address + ": " + std::strerror(errno));
    }
    if (::listen(fd.fd, 128) != 0) {
        throw Error(ErrorCode::BindFailed, std::strerror(errno));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd.fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    listen_fd_ = fd.release();
    running_ = true;
}

ExchangeServer::~ExchangeServer() { stop(); }

void ExchangeServer::start() {
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void ExchangeServer::run() { accept_loop(); }

void ExchangeServer::stop() {
    if (running_.exchange(false) && listen_fd_ != -1) {
        ::shutdown(listen_fd_, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    while (true) {
        std::vector<std::thread> workers;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            workers.swap(workers_);
        }
        if (workers.empty()) break;
        for (auto& t : workers) t.join();
    }
    if (listen_fd_ != -1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
}

void ExchangeServer::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;  // listener shut down (or unrecoverable)
        }
        if (!running_) {
            ::close(fd);
            break;
        }
        std::lock_guard<std::mutex> lock(mutex_);
        workers_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void ExchangeServer::audit(const std::string& type_name,
                           const std::string& certificate_id, const std::string& status) {
    const std::string line = canon::format_utc(static_cast<std::int64_t>(std::time(nullptr))) +
                             " RECV " + type_name + " " +
                             (certificate_id.empty() ? "-" : certificate_id) + " " + status;
    std::lock_guard<std::mutex> lock(mutex_);
    audit_lines_.push_back(line);
    if (!config_.audit_path.empty()) {
        std::ofstream out(config_.audit_path, std::ios::app);
        out << line << '\n';
    }
}

void ExchangeServer::handle_connection(int raw_fd) {
    Fd fd(raw_fd);
    set_io_timeout(fd.fd, config_.io_timeout_ms);

    const FrameReadResult req = read_frame(fd.fd);
    if (req.empty) {
        return;  // connected and left without a request: nothing to answer
    }
    if (!req.ok) {
        audit("ERROR", "", to_string(req.error));
        send_all(fd.fd, frame(MsgType::Error, encode_error(req.detail)));
        return;
    }

    switch (req.type) {
        case MsgType::Cert: {
            Ack ack;
            try {
                const QualityCertificate cert = decode_certificate(req.payload);
                if (handlers_.on_certificate) {
                    ack = handlers_.on_certificate(cert);
                } else {
                    ack.certificate_id = cert.certificate_id;
                    ack.status = config_.known_orders.empty() ||
                                         config_.known_orders.count(cert.order_id) > 0
                                     ? AckStatus::Accepted
                                     : AckStatus::UnknownOrder;
                }
            } catch (const Error&) {
                ack.status = AckStatus::Malformed;
            }
            audit("CERT", ack.certificate_id, to_string(ack.status));
            send_all(fd.fd, frame(MsgType::CertAck, encode_ack(ack)));
            break;
        }
        case MsgType::Feedback: {
            Ack ack;
            try {
                FeedbackReport report = decode_feedback(req.payload);
                if (handlers_.on_feedback) {
                    ack = handlers_.on_feedback(report);
                } else {
                    ack.certificate_id = report.certificate_id;
                    ack.status = AckStatus::Accepted;
                }
                if (ack.status == AckStatus::Accepted) {
                    std::lock_guard<std::mutex> lock(mutex_);
                    received_feedback_.push_back(std::move(report));
                }
            } catch (const Error&) {
                ack.status = AckStatus::Malformed;
            }
            audit("FEEDBACK", ack.certificate_id, to_string(ack.status));
            send_all(fd.fd, frame(MsgType::FeedbackAck, encode_ack(ack)));
            break;
        }
        default: {
            audit(to_string(req.type), "", "REJECTED");
            send_all(fd.fd, frame(MsgType::Error,
                                  encode_error("unexpected message type for a request")));
            break;
        }
    }
}

std::vector<std::string> ExchangeServer::audit_lines() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return audit_lines_;
}

std::vector<FeedbackReport> ExchangeServer::received_feedback() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return received_feedback_;
}

// ---------------------------------------------------------------------------
// Clients

namespace {

Fd connect_to(const ClientConfig& peer) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (fd.fd < 0) {
        throw Error(ErrorCode::ConnectFailed, std::strerror(errno));
    }

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(peer.port);
    if (::inet_pton(AF_INET, peer.host.c_str(), &addr.sin_addr) != 1) {
        throw Error(ErrorCode::ConnectFailed, "bad peer address " + peer.host);
    }

    const int flags = ::fcntl(fd.fd, F_GETFL, 0);
    ::fcntl(fd.fd, F_SETFL, flags | O_NONBLOCK);
    const int rc = ::connect(fd.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    if (rc != 0) {
        if (errno != EINPROGRESS) {
            throw Error(ErrorCode::ConnectFailed, std::strerror(errno));
        }
        pollfd pf{fd.fd, POLLOUT, 0};
        const int pr = ::poll(&pf, 1, peer.timeout_ms);
        if (pr == 0) {
            throw Error(ErrorCode::Timeout, "connect timed out");
        }
        if (pr < 0) {
            throw Error(ErrorCode::ConnectFailed, std::strerror(errno));
        }
        int soerr = 0;
        socklen_t len = sizeof(soerr);
        ::getsockopt(fd.fd, SOL_SOCKET, SO_ERROR, &soerr, &len);
        if (soerr != 0) {
            throw Error(ErrorCode::ConnectFailed, std::strerror(soerr));
        }
    }
    ::fcntl(fd.fd, F_SETFL, flags);
    set_io_timeout(fd.fd, peer.timeout_ms);
    return fd;
}

Ack exchange(const ClientConfig& peer, MsgType request_type, const std::string& payload,
             MsgType expected_reply) {
    const Fd fd = connect_to(peer);

    const IoStatus ss = send_all(fd.fd, frame(request_type, payload));
    if (ss == IoStatus::Timeout) {
        throw Error(ErrorCode::Timeout, "timed out sending the request");
    }
    if (ss != IoStatus::Ok) {
        throw Error(ErrorCode::ProtocolError, "peer closed during the request");
    }

    const FrameReadResult reply = read_frame(fd.fd);
    if (!reply.ok) {
        if (!reply.empty && reply.error == ErrorCode::Timeout) {
            throw Error(ErrorCode::Timeout, reply.detail);
        }
        throw Error(ErrorCode::ProtocolError,
                    reply.empty ? "peer closed without a response" : reply.detail);
    }
    if (reply.type == MsgType::Error) {
        std::string reason;
        try {
            reason = decode_error(reply.payload);
        } catch (const Error&) {
            reason = "unreadable error payload";
        }
        throw Error(ErrorCode::ProtocolError, "peer reported: " + reason);
    }
    if (reply.type != expected_reply) {
        throw Error(ErrorCode::ProtocolError,
                    std::string("expected ") + to_string(expected_reply) + ", got " +
                        to_string(reply.type));
    }
    try {
        return decode_ack(reply.payload);
    } catch (const Error& e) {
        throw Error(ErrorCode::ProtocolError, std::string("bad ack payload: ") + e.what());
    }
}

}  // namespace

Ack send_certificate(const ClientConfig& peer, const QualityCertificate& cert) {
    return exchange(peer, MsgType::Cert, encode_certificate(cert), MsgType::CertAck);
}

Ack send_feedback(const ClientConfig& peer, const FeedbackReport& report) {
    return exchange(peer, MsgType::Feedback, encode_feedback(report), MsgType::FeedbackAck);
}

}  // namespace q4::qxs
