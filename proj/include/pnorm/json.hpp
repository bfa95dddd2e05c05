#pragma once

// JSON conversions shared by every serialized type. Finite exponents are
// stored as numbers, the infinite exponent as the string "inf".

#include <json.hpp>
#include "pnorm/gaussian_moments.hpp"

#include <stdexcept>
#include <string>

namespace pnorm {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Raised for schema violations; the message starts with the field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// j[key] converted to T; ConfigError("path.key") when absent or mistyped.
template <typename T>
T required(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(path + "." + key, "missing required field");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(path + "." + key, e.what());
    }
}

template <typename T>
T optional(const Json& j, const char* key, const std::string& path, T fallback) {
    return j.is_object() && j.contains(key) ? required<T>(j, key, path) : fallback;
}

}  // namespace pnorm

namespace nlohmann {

template <>
struct adl_serializer<pnorm::Exponent> {
    static void to_json(json& j, const pnorm::Exponent& e) {
        if (e.is_inf()) {
            j = "inf";
        } else {
            j = e.value();
        }
    }
    static pnorm::Exponent from_json(const json& j) {
        if (j.is_string()) return pnorm::Exponent::parse(j.get<std::string>());
        if (j.is_number()) return pnorm::Exponent(j.get<double>());
        throw std::invalid_argument("exponent must be a number or \"inf\"");
    }
};

}  // namespace nlohmann
