#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace flat4 {

// Every module error carries a stable code, e.g. "NoClosure", plus optional details.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what, nlohmann::json detail = nlohmann::json::object())
        : std::runtime_error(what), code_(std::move(code)), detail_(std::move(detail)) {}

    const std::string& code() const { return code_; }
    const nlohmann::json& detail() const { return detail_; }

private:
    std::string code_;
    nlohmann::json detail_;
};

}  // namespace flat4
