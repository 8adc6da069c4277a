#include "lmsf/profiler.hpp"

namespace lmsf::profiler {

namespace {
thread_local Context* t_active = nullptr;
}

void Context::rejoin() {
    joined_.clear();
    for (std::size_t i = 0; i < stack_.size(); ++i) {
        if (i) joined_ += '.';
        joined_ += stack_[i];
    }
}

void Context::add_macs(std::uint64_t m) { by_scope_[joined_] += m; }

void Context::push_scope(const std::string& name) {
    stack_.push_back(name);
    rejoin();
}

void Context::pop_scope() {
    stack_.pop_back();
    rejoin();
}

std::uint64_t Context::total_macs() const {
    std::uint64_t t = 0;
    for (const auto& [k, v] : by_scope_) t += v;
    return t;
}

Context* active() { return t_active; }

Bind::Bind(Context& ctx) : prev_(t_active) { t_active = &ctx; }
Bind::~Bind() { t_active = prev_; }

Scope::Scope(const std::string& name) {
    if (t_active) {
        t_active->push_scope(name);
        pushed_ = true;
    }
}

Scope::~Scope() {
    if (pushed_) t_active->pop_scope();
}

void add_macs(std::uint64_t m) {
    if (t_active) t_active->add_macs(m);
}

}  // namespace lmsf::profiler
