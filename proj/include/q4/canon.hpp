#pragma once

// Canonical JSON emission (sorted keys, no insignificant whitespace,
// shortest round-trip numbers) and strict UTC timestamp conversion. Shared
// by certificates, feedback, acks and the run-configuration documents.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace q4::canon {

/// Deterministic, injective serialization: object keys in lexicographic
/// order, no whitespace, doubles as the shortest decimal that parses back to
/// the same value (integral doubles lose the trailing ".0", which re-parses
/// as an integer of equal value — by design, the encoding stays stable).
/// Throws Error(InvalidValue) on non-finite numbers.
std::string canonical_dump(const nlohmann::json& j);

/// Epoch seconds -> "YYYY-MM-DDTHH:MM:SSZ". Supported range 1970..9999.
std::string format_utc(std::int64_t epoch_seconds);

/// Strict inverse of format_utc: exact shape, valid calendar date required.
/// Throws Error(InvalidValue) on anything else.
std::int64_t parse_utc(const std::string& iso);

// Strict-decoding helpers shared by every document schema: unexpected fields
// are malformed, absent required fields are missing, types must match.

[[noreturn]] void malformed(const std::string& detail);

/// Parses bytes and requires a JSON object; Error(MalformedDocument) otherwise.
nlohmann::json parse_object(const std::string& bytes);

/// Requires the object's key set to be a subset of `allowed` and a superset
/// of it (i.e. exactly `allowed`).
void check_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                const std::string& where);

std::string get_string(const nlohmann::json& obj, const char* name);
double get_number(const nlohmann::json& v, const std::string& where);
std::int64_t get_integer(const nlohmann::json& v, const std::string& where);
std::vector<double> get_number_array(const nlohmann::json& v, const std::string& where);

}  // namespace q4::canon
