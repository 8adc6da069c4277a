#pragma once

#include <stdexcept>
#include <string>

namespace lmsf {

// Contract violations are programming/usage errors, reported with context.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& msg) : std::invalid_argument(msg) {}
};

[[noreturn]] inline void contract_fail(const std::string& msg) {
    throw ContractViolation(msg);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) contract_fail(msg);
}

}  // namespace lmsf
