// q4: command-line frontend for the quality supervision toolkit.
//
// Subcommands: gen (synthetic coil), qgs (coil -> quality record), allocate
// (record + order -> decision, optional feedback), certify (record +
// decision + profile -> certificate), serve (exchange peer), send-cert /
// send-feedback (client calls), report (per-sample CSV).
//
// Exit codes: 0 success, 1 usage error, 2 input/validation error,
// 3 protocol/network error.

#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "q4/canon.hpp"
#include "q4/documents.hpp"
#include "q4/ingest.hpp"
#include "q4/model.hpp"
#include "q4/pipeline.hpp"
#include "q4/qas.hpp"
#include "q4/qxs.hpp"

namespace {

using namespace q4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::InvalidValue, "cannot open '" + path + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::InvalidValue, "cannot open '" + path + "' for writing");
    }
    out << bytes;
    if (!out) {
        throw Error(ErrorCode::InvalidValue, "failed writing '" + path + "'");
    }
}

void emit(const std::string& out_path, const std::string& bytes) {
    if (out_path.empty()) {
        std::cout << bytes;
    } else {
        write_file(out_path, bytes);
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t at = s.find(sep, start);
        if (at == std::string::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, at - start));
        start = at + 1;
    }
}

std::size_t parse_index(const std::string& token, const std::string& what) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidParams, "bad " + what + " '" + token + "'");
    }
}

double parse_real(const std::string& token, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidParams, "bad " + what + " '" + token + "'");
    }
}

qxs::ClientConfig parse_peer(const std::string& to) {
    const std::size_t colon = to.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == to.size()) {
        throw Error(ErrorCode::InvalidValue, "--to must be host:port");
    }
    qxs::ClientConfig peer;
    peer.host = to.substr(0, colon);
    peer.port = static_cast<std::uint16_t>(
        parse_index(to.substr(colon + 1), "port") & 0xFFFF);
    return peer;
}

int run_gen(const std::string& out_path, const std::string& labels_path,
            ingest::SynthParams params, const std::vector<std::string>& spikes,
            const std::vector<std::string>& stucks, const std::vector<std::string>& bursts) {
    for (const auto& s : spikes) {
        const auto parts = split(s, ':');
        if (parts.size() != 3) {
            throw Error(ErrorCode::InvalidParams, "--spike wants channel:index:magnitude");
        }
        params.anomalies.push_back({ingest::AnomalyKind::Spike, parts[0],
                                    parse_index(parts[1], "spike index"), 1,
                                    parse_real(parts[2], "spike magnitude")});
    }
    for (const auto& s : stucks) {
        const auto parts = split(s, ':');
        if (parts.size() != 3) {
            throw Error(ErrorCode::InvalidParams, "--stuck wants channel:start:length");
        }
        params.anomalies.push_back({ingest::AnomalyKind::Stuck, parts[0],
                                    parse_index(parts[1], "stuck start"),
                                    parse_index(parts[2], "stuck length"), 0.0});
    }
    for (const auto& s : bursts) {
        const auto parts = split(s, ':');
        if (parts.size() != 3) {
            throw Error(ErrorCode::InvalidParams, "--burst wants start:length:magnitude");
        }
        params.anomalies.push_back({ingest::AnomalyKind::SurfaceBurst, "p4",
                                    parse_index(parts[0], "burst start"),
                                    parse_index(parts[1], "burst length"),
                                    parse_real(parts[2], "burst magnitude")});
    }

    const ingest::SynthResult result = ingest::synth_coil(params);
    emit(out_path, ingest::write_coil_csv(result.coil));
    if (!labels_path.empty()) {
        write_file(labels_path, ingest::write_labels_csv(result.labels));
    }
    return 0;
}

int run_qgs(const std::string& coil_path, const std::string& config_path,
            const std::string& out_path) {
    const CoilRecord coil = ingest::parse_coil_csv(read_file(coil_path));
    docs::RunConfig config;
    if (!config_path.empty()) {
        config = docs::parse_run_config(read_file(config_path));
    }
    const QualityRecord record = pipeline::qgs_run(coil, config);
    emit(out_path, docs::encode_record(record) + "\n");
    return 0;
}

int run_allocate(const std::string& record_path, const std::string& order_path,
                 const std::string& out_path, const std::string& feedback_path,
                 const std::string& certificate_id) {
    const QualityRecord record = docs::decode_record(read_file(record_path));
    const OrderSpec order = docs::decode_order(read_file(order_path));
    const AllocationDecision decision = qas::allocate(record, order);
    emit(out_path, docs::encode_decision(decision) + "\n");
    if (!feedback_path.empty()) {
        FeedbackReport feedback = qas::build_feedback(record, order);
        feedback.certificate_id = certificate_id;
        write_file(feedback_path, qxs::encode_feedback(feedback) + "\n");
    }
    return 0;
}

int run_certify(const std::string& record_path, const std::string& decision_path,
                const std::string& order_path, const std::string& profile_path,
                const std::string& certificate_id, const std::string& generated_at,
                const std::string& out_path) {
    const QualityRecord record = docs::decode_record(read_file(record_path));
    const AllocationDecision decision = docs::decode_decision(read_file(decision_path));
    const OrderSpec order = docs::decode_order(read_file(order_path));
    const CustomerProfile profile = docs::decode_profile(read_file(profile_path));

    const std::int64_t stamp = generated_at.empty()
                                   ? static_cast<std::int64_t>(std::time(nullptr))
                                   : canon::parse_utc(generated_at);
    const QualityCertificate cert =
        qas::build_certificate(record, decision, profile, order, certificate_id, stamp);
    emit(out_path, qxs::encode_certificate(cert) + "\n");
    return 0;
}

int run_serve(std::uint16_t port, const std::string& orders_csv,
              const std::string& audit_path) {
    qxs::ServerConfig config;
    config.port = port;
    config.audit_path = audit_path;
    if (!orders_csv.empty()) {
        for (const auto& order_id : split(orders_csv, ',')) {
            if (!order_id.empty()) config.known_orders.insert(order_id);
        }
    }
    qxs::ExchangeServer server(std::move(config));
    std::cout << "listening on 127.0.0.1:" << server.port() << std::endl;
    server.run();
    return 0;
}

int run_send_cert(const std::string& to, const std::string& cert_path) {
    const QualityCertificate cert = qxs::decode_certificate(read_file(cert_path));
    const qxs::Ack ack = qxs::send_certificate(parse_peer(to), cert);
    std::cout << qxs::encode_ack(ack) << std::endl;
    return 0;
}

int run_send_feedback(const std::string& to, const std::string& feedback_path) {
    const FeedbackReport report = qxs::decode_feedback(read_file(feedback_path));
    const qxs::Ack ack = qxs::send_feedback(parse_peer(to), report);
    std::cout << qxs::encode_ack(ack) << std::endl;
    return 0;
}

int run_report(const std::string& record_path, const std::string& out_path) {
    const QualityRecord record = docs::decode_record(read_file(record_path));
    emit(out_path, pipeline::write_report_csv(record));
    return 0;
}

int classify(const Error& e) {
    switch (e.code()) {
        case ErrorCode::BadMagic:
        case ErrorCode::UnknownType:
        case ErrorCode::FrameTruncated:
        case ErrorCode::FrameTooLarge:
        case ErrorCode::BindFailed:
        case ErrorCode::ConnectFailed:
        case ErrorCode::ProtocolError:
        case ErrorCode::Timeout:
            return 3;
        default:
            return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transparent product-quality supervision toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic coil with known defects");
    ingest::SynthParams params;
    std::string gen_out;
    std::string gen_labels;
    std::vector<std::string> spikes, stucks, bursts;
    gen->add_option("--seed", params.seed, "generator seed");
    gen->add_option("--samples", params.n_samples, "samples along the coil");
    gen->add_option("--width", params.width_positions, "surface positions across the coil");
    gen->add_option("--step", params.sample_step_m, "sample step in meters");
    gen->add_option("--id", params.coil_id, "coil identifier");
    gen->add_option("-o,--out", gen_out, "coil CSV path (default: standard output)");
    gen->add_option("--labels", gen_labels, "ground-truth label CSV path");
    gen->add_option("--spike", spikes, "channel:index:magnitude (repeatable)");
    gen->add_option("--stuck", stucks, "channel:start:length (repeatable)");
    gen->add_option("--burst", bursts, "start:length:magnitude on p4 (repeatable)");

    // qgs
    auto* qgs = app.add_subcommand("qgs", "assess a coil into a quality record");
    std::string qgs_coil, qgs_config, qgs_out;
    qgs->add_option("--coil", qgs_coil, "coil CSV path")->required();
    qgs->add_option("--config", qgs_config, "run configuration JSON");
    qgs->add_option("-o,--out", qgs_out, "record JSON path (default: standard output)");

    // allocate
    auto* alloc = app.add_subcommand("allocate", "decide whether a record fits an order");
    std::string alloc_record, alloc_order, alloc_out, alloc_feedback, alloc_cert_id;
    alloc->add_option("--record", alloc_record, "quality record JSON")->required();
    alloc->add_option("--order", alloc_order, "order JSON")->required();
    alloc->add_option("-o,--out", alloc_out, "decision JSON path (default: standard output)");
    alloc->add_option("--feedback", alloc_feedback, "also write a feedback report here");
    alloc->add_option("--certificate-id", alloc_cert_id,
                      "certificate id to stamp into the feedback report");

    // certify
    auto* certify = app.add_subcommand("certify", "build an intimacy-filtered certificate");
    std::string cert_record, cert_decision, cert_order, cert_profile, cert_id, cert_time,
        cert_out;
    certify->add_option("--record", cert_record, "quality record JSON")->required();
    certify->add_option("--decision", cert_decision, "allocation decision JSON")->required();
    certify->add_option("--order", cert_order, "order JSON")->required();
    certify->add_option("--profile", cert_profile, "customer profile JSON")->required();
    certify->add_option("--id", cert_id, "certificate id")->required();
    certify->add_option("--generated-at", cert_time,
                        "timestamp YYYY-MM-DDTHH:MM:SSZ (default: now)");
    certify->add_option("-o,--out", cert_out, "certificate path (default: standard output)");

    // serve
    auto* serve = app.add_subcommand("serve", "run the exchange peer");
    std::uint16_t serve_port = 0;
    std::string serve_orders, serve_audit;
    serve->add_option("--port", serve_port, "TCP port (0 picks one and prints it)");
    serve->add_option("--orders", serve_orders, "comma-separated known order ids");
    serve->add_option("--audit", serve_audit, "audit log path");

    // send-cert / send-feedback
    auto* send_cert = app.add_subcommand("send-cert", "send a certificate to a peer");
    std::string sc_to, sc_cert;
    send_cert->add_option("--to", sc_to, "peer host:port")->required();
    send_cert->add_option("--cert", sc_cert, "certificate JSON path")->required();

    auto* send_fb = app.add_subcommand("send-feedback", "send a feedback report to a peer");
    std::string sf_to, sf_feedback;
    send_fb->add_option("--to", sf_to, "peer host:port")->required();
    send_fb->add_option("--feedback", sf_feedback, "feedback JSON path")->required();

    // report
    auto* report = app.add_subcommand("report", "emit a per-sample CSV from a record");
    std::string report_record, report_out;
    report->add_option("--record", report_record, "quality record JSON")->required();
    report->add_option("-o,--out", report_out, "CSV path (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (gen->parsed()) {
            return run_gen(gen_out, gen_labels, std::move(params), spikes, stucks, bursts);
        }
        if (qgs->parsed()) {
            return run_qgs(qgs_coil, qgs_config, qgs_out);
        }
        if (alloc->parsed()) {
            return run_allocate(alloc_record, alloc_order, alloc_out, alloc_feedback,
                                alloc_cert_id);
        }
        if (certify->parsed()) {
            return run_certify(cert_record, cert_decision, cert_order, cert_profile, cert_id,
                               cert_time, cert_out);
        }
        if (serve->parsed()) {
            return run_serve(serve_port, serve_orders, serve_audit);
        }
        if (send_cert->parsed()) {
            return run_send_cert(sc_to, sc_cert);
        }
        if (send_fb->parsed()) {
            return run_send_feedback(sf_to, sf_feedback);
        }
        if (report->parsed()) {
            return run_report(report_record, report_out);
        }
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return classify(e);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
