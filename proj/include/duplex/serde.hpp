#ifndef DUPLEX_SERDE_HPP
#define DUPLEX_SERDE_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "duplex/timebase.hpp"

namespace duplex {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

void to_json(json& j, const Token& t);
void from_json(const json& j, Token& t);

void to_json(json& j, const Frame& f);
void from_json(const json& j, Frame& f);

void to_json(json& j, const TimingConfig& cfg);
void from_json(const json& j, TimingConfig& cfg);

// Rejects objects carrying keys outside `allowed` (strict schemas).
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& context);

// Readers reject files written by a newer schema major.
void check_schema_version(const json& j, const std::string& context);

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace duplex

#endif  // DUPLEX_SERDE_HPP
