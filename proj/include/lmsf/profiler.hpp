#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lmsf::profiler {

// Accumulates multiply-accumulate counts per named scope. A context is bound
// to the current thread; conv2d reports into it when one is active. No
// context bound means zero overhead beyond a thread_local read.
class Context {
public:
    void add_macs(std::uint64_t m);
    void push_scope(const std::string& name);
    void pop_scope();

    std::uint64_t total_macs() const;
    const std::map<std::string, std::uint64_t>& macs_by_scope() const { return by_scope_; }

private:
    std::vector<std::string> stack_;
    std::string joined_;
    std::map<std::string, std::uint64_t> by_scope_;
    void rejoin();
};

Context* active();

// Binds a context to this thread for the lifetime of the object.
class Bind {
public:
    explicit Bind(Context& ctx);
    ~Bind();
    Bind(const Bind&) = delete;
    Bind& operator=(const Bind&) = delete;

private:
    Context* prev_;
};

// Pushes a scope name on the active context (no-op without one).
class Scope {
public:
    explicit Scope(const std::string& name);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

private:
    bool pushed_ = false;
};

void add_macs(std::uint64_t m);

}  // namespace lmsf::profiler
