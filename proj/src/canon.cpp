#include "q4/canon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "q4/model.hpp"
#include "q4/numfmt.hpp"

namespace q4::canon {

namespace {

void dump_value(const nlohmann::json& j, std::string& out) {
    switch (j.type()) {
        case nlohmann::json::value_t::null:
            out += "null";
            break;
        case nlohmann::json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case nlohmann::json::value_t::number_integer:
            out += std::to_string(j.get<std::int64_t>());
            break;
        case nlohmann::json::value_t::number_unsigned:
            out += std::to_string(j.get<std::uint64_t>());
            break;
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::InvalidValue, "non-finite number in document");
            }
            out += format_double(v == 0.0 ? 0.0 : v);  // normalize -0
            break;
        }
        case nlohmann::json::value_t::string:
            out += nlohmann::json(j.get<std::string>()).dump();
            break;
        case nlohmann::json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& item : j) {
                if (!first) out += ',';
                first = false;
                dump_value(item, out);
            }
            out += ']';
            break;
        }
        case nlohmann::json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.cbegin(); it != j.cend(); ++it) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(it.key()).dump();
                out += ':';
                dump_value(it.value(), out);
            }
            out += '}';
            break;
        }
        default:
            throw Error(ErrorCode::InvalidValue, "unsupported document value type");
    }
}

// Civil-calendar conversions on the proleptic Gregorian calendar, using the
// standard era decomposition (400-year cycles of 146097 days).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool all_digits(std::string_view s) {
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return !s.empty();
}

unsigned digits(std::string_view s) {
    unsigned v = 0;
    for (char c : s) v = v * 10 + static_cast<unsigned>(c - '0');
    return v;
}

}  // namespace

std::string canonical_dump(const nlohmann::json& j) {
    std::string out;
    dump_value(j, out);
    return out;
}

void malformed(const std::string& detail) {
    throw Error(ErrorCode::MalformedDocument, detail);
}

nlohmann::json parse_object(const std::string& bytes) {
    nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        malformed("document is not a structured object");
    }
    return j;
}

void check_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            malformed("unexpected field '" + item.key() + "' in " + where);
        }
    }
    for (const auto& key : allowed) {
        if (!obj.contains(key)) {
            throw Error(ErrorCode::MissingField, where + " lacks '" + key + "'");
        }
    }
}

std::string get_string(const nlohmann::json& obj, const char* name) {
    if (!obj.contains(name)) {
        throw Error(ErrorCode::MissingField, std::string("missing field '") + name + "'");
    }
    const auto& v = obj.at(name);
    if (!v.is_string()) malformed(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

double get_number(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number()) malformed("'" + where + "' must be a number");
    return v.get<double>();
}

std::int64_t get_integer(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        malformed("'" + where + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

std::vector<double> get_number_array(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array()) malformed("'" + where + "' must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& item : v) out.push_back(get_number(item, where));
    return out;
}

std::string format_utc(std::int64_t epoch_seconds) {
    if (epoch_seconds < 0 || epoch_seconds > 253402300799LL) {  // 9999-12-31T23:59:59Z
        throw Error(ErrorCode::InvalidValue, "timestamp outside 1970..9999");
    }
    const std::int64_t days = epoch_seconds / 86400;
    const auto secs = static_cast<unsigned>(epoch_seconds % 86400);
    std::int64_t y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(days, y, m, d);

    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02u:%02u:%02uZ",
                  static_cast<long long>(y), m, d, secs / 3600, secs / 60 % 60, secs % 60);
    return buf;
}

std::int64_t parse_utc(const std::string& iso) {
    // Shape: YYYY-MM-DDTHH:MM:SSZ (20 chars exactly)
    if (iso.size() != 20 || iso[4] != '-' || iso[7] != '-' || iso[10] != 'T' ||
        iso[13] != ':' || iso[16] != ':' || iso[19] != 'Z') {
        throw Error(ErrorCode::InvalidValue, "timestamp must be YYYY-MM-DDTHH:MM:SSZ");
    }
    const std::string_view s(iso);
    const auto year_s = s.substr(0, 4), mon_s = s.substr(5, 2), day_s = s.substr(8, 2);
    const auto hour_s = s.substr(11, 2), min_s = s.substr(14, 2), sec_s = s.substr(17, 2);
    for (const auto part : {year_s, mon_s, day_s, hour_s, min_s, sec_s}) {
        if (!all_digits(part)) {
            throw Error(ErrorCode::InvalidValue, "timestamp contains non-digits");
        }
    }
    const unsigned year = digits(year_s), mon = digits(mon_s), day = digits(day_s);
    const unsigned hour = digits(hour_s), min = digits(min_s), sec = digits(sec_s);

    if (year < 1970 || mon < 1 || mon > 12 || day < 1 || hour > 23 || min > 59 || sec > 59) {
        throw Error(ErrorCode::InvalidValue, "timestamp field out of range");
    }
    static constexpr unsigned kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
    const unsigned month_days = mon == 2 && leap ? 29 : kDays[mon - 1];
    if (day > month_days) {
        throw Error(ErrorCode::InvalidValue, "timestamp day outside its month");
    }

    return days_from_civil(year, mon, day) * 86400 + hour * 3600 + min * 60 + sec;
}

}  // namespace q4::canon
