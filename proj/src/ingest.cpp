#include "q4/ingest.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "q4/numfmt.hpp"
#include "q4/rng.hpp"

namespace q4::ingest {

namespace {

constexpr int kSignificantDigits = 9;

std::string p4_column_name(std::size_t w) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p4_%04zu", w);
    return buf;
}

// Splits on LF, requiring exactly one LF after the last line.
std::vector<std::string_view> split_lines(const std::string& bytes) {
    if (bytes.empty() || bytes.back() != '\n') {
        throw Error(ErrorCode::BadRow, "file must end with exactly one LF");
    }
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (bytes[i] == '\n') {
            lines.emplace_back(bytes.data() + start, i - start);
            start = i + 1;
        }
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_field(std::string_view token, std::size_t line_no) {
    const auto v = parse_double(token);
    if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::BadRow, "line " + std::to_string(line_no) +
                                           ": bad number '" + std::string(token) + "'");
    }
    return *v;
}

}  // namespace

const char* to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::Spike: return "SPIKE";
        case AnomalyKind::Stuck: return "STUCK";
        case AnomalyKind::SurfaceBurst: return "SURFACE_BURST";
    }
    return "SPIKE";
}

AnomalyKind anomaly_kind_from_string(const std::string& s) {
    if (s == "SPIKE") return AnomalyKind::Spike;
    if (s == "STUCK") return AnomalyKind::Stuck;
    if (s == "SURFACE_BURST") return AnomalyKind::SurfaceBurst;
    throw Error(ErrorCode::InvalidParams, "unknown anomaly kind '" + s + "'");
}

void validate(const SynthParams& params) {
    if (params.n_samples < 1) {
        throw Error(ErrorCode::InvalidParams, "n_samples must be >= 1");
    }
    if (params.width_positions < 1) {
        throw Error(ErrorCode::InvalidParams, "width_positions must be >= 1");
    }
    if (!(params.sample_step_m > 0.0) || !std::isfinite(params.sample_step_m)) {
        throw Error(ErrorCode::InvalidParams, "sample_step_m must be positive");
    }
    for (const ChannelParams* ch : {&params.p1, &params.p2, &params.p3, &params.p4}) {
        if (!std::isfinite(ch->base) || !std::isfinite(ch->amplitude) ||
            !(ch->period > 0.0) || !std::isfinite(ch->period) || !(ch->sigma >= 0.0) ||
            !std::isfinite(ch->sigma)) {
            throw Error(ErrorCode::InvalidParams, "channel parameters out of range");
        }
    }
    for (const auto& a : params.anomalies) {
        if (!std::isfinite(a.magnitude_sigma)) {
            throw Error(ErrorCode::InvalidParams, "anomaly magnitude must be finite");
        }
        if (a.length < 1 || a.start >= params.n_samples ||
            a.length > params.n_samples - a.start) {
            throw Error(ErrorCode::InvalidParams, "anomaly range outside the coil");
        }
        switch (a.kind) {
            case AnomalyKind::Spike:
                if (a.length != 1) {
                    throw Error(ErrorCode::InvalidParams, "SPIKE affects exactly one sample");
                }
                [[fallthrough]];
            case AnomalyKind::Stuck:
                if (a.channel != "p1" && a.channel != "p2" && a.channel != "p3") {
                    throw Error(ErrorCode::InvalidParams,
                                to_string(a.kind) + std::string(" requires channel p1/p2/p3"));
                }
                break;
            case AnomalyKind::SurfaceBurst:
                if (a.channel != "p4") {
                    throw Error(ErrorCode::InvalidParams, "SURFACE_BURST requires channel p4");
                }
                break;
        }
    }
}

CoilRecord parse_coil_csv(const std::string& bytes) {
    const auto lines = split_lines(bytes);
    if (lines.size() < 3) {
        throw Error(ErrorCode::BadHeader, "coil file needs a header, columns and >= 1 row");
    }

    static constexpr std::string_view kIdPrefix = "# coil_id=";
    static constexpr std::string_view kStepKey = " sample_step_m=";
    const std::string_view head = lines[0];
    if (!head.starts_with(kIdPrefix)) {
        throw Error(ErrorCode::BadHeader, "first line must start with '# coil_id='");
    }
    const std::size_t step_at = head.rfind(kStepKey);
    if (step_at == std::string_view::npos || step_at < kIdPrefix.size()) {
        throw Error(ErrorCode::BadHeader, "first line must carry sample_step_m");
    }

    CoilRecord coil;
    coil.coil_id = std::string(head.substr(kIdPrefix.size(), step_at - kIdPrefix.size()));
    const auto step = parse_double(head.substr(step_at + kStepKey.size()));
    if (!step) {
        throw Error(ErrorCode::BadHeader, "sample_step_m is not a number");
    }
    coil.sample_step_m = *step;

    const auto columns = split_fields(lines[1]);
    if (columns.size() < 5 || columns[0] != "pos_m" || columns[1] != "p1" ||
        columns[2] != "p2" || columns[3] != "p3") {
        throw Error(ErrorCode::BadHeader, "column header must be pos_m,p1,p2,p3,p4_0000,...");
    }
    const std::size_t width = columns.size() - 4;
    for (std::size_t w = 0; w < width; ++w) {
        if (columns[4 + w] != p4_column_name(w)) {
            throw Error(ErrorCode::BadHeader,
                        "surface column " + std::to_string(w) + " must be named " +
                            p4_column_name(w));
        }
    }

    const std::size_t n = lines.size() - 2;
    coil.positions_m.reserve(n);
    coil.p1.reserve(n);
    coil.p2.reserve(n);
    coil.p3.reserve(n);
    coil.p4.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t line_no = r + 3;
        const auto fields = split_fields(lines[r + 2]);
        if (fields.size() != 4 + width) {
            throw Error(ErrorCode::BadRow, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(4 + width) + " fields, got " +
                                               std::to_string(fields.size()));
        }
        coil.positions_m.push_back(parse_field(fields[0], line_no));
        coil.p1.push_back(parse_field(fields[1], line_no));
        coil.p2.push_back(parse_field(fields[2], line_no));
        coil.p3.push_back(parse_field(fields[3], line_no));
        std::vector<double> row;
        row.reserve(width);
        for (std::size_t w = 0; w < width; ++w) {
            row.push_back(parse_field(fields[4 + w], line_no));
        }
        coil.p4.push_back(std::move(row));
    }
    return require_valid(std::move(coil));
}

std::string write_coil_csv(const CoilRecord& coil) {
    if (coil.coil_id.find('\n') != std::string::npos) {
        throw Error(ErrorCode::InvalidValue, "coil_id must not contain newlines");
    }
    const std::size_t n = coil.samples();
    const std::size_t width = coil.width();

    std::string out;
    out.reserve(n * (width + 4) * 12 + 64);
    out += "# coil_id=";
    out += coil.coil_id;
    out += " sample_step_m=";
    out += format_double(coil.sample_step_m);
    out += "\npos_m,p1,p2,p3";
    for (std::size_t w = 0; w < width; ++w) {
        out += ',';
        out += p4_column_name(w);
    }
    out += '\n';
    for (std::size_t r = 0; r < n; ++r) {
        out += format_double(coil.positions_m[r]);
        out += ',';
        out += format_double(coil.p1[r]);
        out += ',';
        out += format_double(coil.p2[r]);
        out += ',';
        out += format_double(coil.p3[r]);
        for (std::size_t w = 0; w < width; ++w) {
            out += ',';
            out += format_double(coil.p4[r][w]);
        }
        out += '\n';
    }
    return out;
}

FeatureMatrix feature_matrix(const CoilRecord& coil) {
    const std::size_t n = coil.samples();
    FeatureMatrix m;
    m.rows = n;
    m.cols = 4;
    m.data.resize(n * 4);
    for (std::size_t r = 0; r < n; ++r) {
        m.at(r, 0) = coil.p1[r];
        m.at(r, 1) = coil.p2[r];
        m.at(r, 2) = coil.p3[r];
        const auto& row = coil.p4[r];
        m.at(r, 3) = std::accumulate(row.begin(), row.end(), 0.0) /
                     static_cast<double>(row.size());
    }
    return m;
}

SynthResult synth_coil(const SynthParams& params) {
    validate(params);
    const std::size_t n = params.n_samples;
    const std::size_t width = params.width_positions;

    GaussianSource gauss(params.seed);
    auto signal = [&](const ChannelParams& ch, std::size_t j) {
        const double x = ch.base +
                         ch.amplitude * std::sin(2.0 * std::numbers::pi *
                                                 static_cast<double>(j) / ch.period) +
                         ch.sigma * gauss.next();
        return round_significant(x, kSignificantDigits);
    };

    SynthResult out;
    CoilRecord& coil = out.coil;
    coil.coil_id = params.coil_id;
    coil.sample_step_m = params.sample_step_m;
    coil.positions_m.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        coil.positions_m[j] = static_cast<double>(j) * params.sample_step_m;
    }
    coil.p1.resize(n);
    for (std::size_t j = 0; j < n; ++j) coil.p1[j] = signal(params.p1, j);
    coil.p2.resize(n);
    for (std::size_t j = 0; j < n; ++j) coil.p2[j] = signal(params.p2, j);
    coil.p3.resize(n);
    for (std::size_t j = 0; j < n; ++j) coil.p3[j] = signal(params.p3, j);
    coil.p4.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        coil.p4[j].resize(width);
        for (std::size_t w = 0; w < width; ++w) coil.p4[j][w] = signal(params.p4, j);
    }

    // Anomalies draw no randomness, so the clean signal under a given seed is
    // identical with or without them.
    for (const auto& a : params.anomalies) {
        auto* series = a.channel == "p1" ? &coil.p1
                     : a.channel == "p2" ? &coil.p2
                     : a.channel == "p3" ? &coil.p3
                                         : nullptr;
        const double sigma = a.channel == "p1"   ? params.p1.sigma
                             : a.channel == "p2" ? params.p2.sigma
                             : a.channel == "p3" ? params.p3.sigma
                                                 : params.p4.sigma;
        switch (a.kind) {
            case AnomalyKind::Spike:
                (*series)[a.start] += a.magnitude_sigma * sigma;
                out.labels.labels.push_back({a.start, a.kind});
                break;
            case AnomalyKind::Stuck: {
                const double frozen = (*series)[a.start];
                for (std::size_t j = a.start; j < a.start + a.length; ++j) {
                    (*series)[j] = frozen;
                    out.labels.labels.push_back({j, a.kind});
                }
                break;
            }
            case AnomalyKind::SurfaceBurst:
                for (std::size_t j = a.start; j < a.start + a.length; ++j) {
                    for (std::size_t w = 0; w < width; ++w) {
                        coil.p4[j][w] += a.magnitude_sigma * sigma;
                    }
                    out.labels.labels.push_back({j, a.kind});
                }
                break;
        }
    }
    return out;
}

std::string write_labels_csv(const LabelSet& labels) {
    std::string out = "index,kind\n";
    for (const auto& label : labels.labels) {
        out += std::to_string(label.index);
        out += ',';
        out += to_string(label.kind);
        out += '\n';
    }
    return out;
}

LabelSet parse_labels_csv(const std::string& bytes) {
    const auto lines = split_lines(bytes);
    if (lines.empty() || lines[0] != "index,kind") {
        throw Error(ErrorCode::BadHeader, "label file must start with 'index,kind'");
    }
    LabelSet out;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r]);
        if (fields.size() != 2) {
            throw Error(ErrorCode::BadRow, "line " + std::to_string(r + 1) + ": expected 2 fields");
        }
        std::size_t index = 0;
        auto res = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), index);
        if (res.ec != std::errc{} || res.ptr != fields[0].data() + fields[0].size()) {
            throw Error(ErrorCode::BadRow, "line " + std::to_string(r + 1) + ": bad index");
        }
        out.labels.push_back({index, anomaly_kind_from_string(std::string(fields[1]))});
    }
    return out;
}

}  // namespace q4::ingest
