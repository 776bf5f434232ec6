#pragma once

#include <json.hpp>
#include <set>
#include <string>

#include "mdseq/common.hpp"

namespace mdseq {

/// Reject unknown keys so config typos fail loudly, naming the offending
/// key and where it sits.
inline void check_json_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                            const std::string& path) {
    if (!obj.is_object()) return;
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key))
            throw std::runtime_error("unknown config key '" +
                                     (path.empty() ? key : path + "." + key) + "'");
    }
}

template <typename T>
T json_get_or(const nlohmann::json& obj, const std::string& key, const T& fallback) {
    if (obj.contains(key)) return obj.at(key).get<T>();
    return fallback;
}

}  // namespace mdseq
