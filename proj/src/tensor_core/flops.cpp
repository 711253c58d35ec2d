#include "gsformer/flops.hpp"

namespace gsf {

namespace {
thread_local FlopCounter* g_counter = nullptr;
thread_local std::string g_scope = "unscoped";
}  // namespace

std::uint64_t FlopCounter::macs(const std::string& scope) const {
    auto it = macs_.find(scope);
    return it == macs_.end() ? 0 : it->second;
}

std::uint64_t FlopCounter::aux(const std::string& scope) const {
    auto it = aux_.find(scope);
    return it == aux_.end() ? 0 : it->second;
}

std::uint64_t FlopCounter::macs_with_prefix(const std::string& prefix) const {
    std::uint64_t total = 0;
    for (const auto& [scope, count] : macs_) {
        if (scope.compare(0, prefix.size(), prefix) == 0) total += count;
    }
    return total;
}

std::uint64_t FlopCounter::total_macs() const {
    std::uint64_t total = 0;
    for (const auto& [scope, count] : macs_) total += count;
    return total;
}

void FlopCounter::merge(const FlopCounter& other) {
    for (const auto& [scope, count] : other.macs_) macs_[scope] += count;
    for (const auto& [scope, count] : other.aux_) aux_[scope] += count;
}

FlopCounter* FlopCounter::active() { return g_counter; }
const std::string& FlopCounter::active_scope() { return g_scope; }

CountingScope::CountingScope(FlopCounter& counter) : previous_(g_counter) { g_counter = &counter; }
CountingScope::~CountingScope() { g_counter = previous_; }

FlopScope::FlopScope(std::string label) : previous_(std::move(g_scope)) { g_scope = std::move(label); }
FlopScope::~FlopScope() { g_scope = std::move(previous_); }

void count_macs(std::uint64_t macs) {
    if (g_counter != nullptr) g_counter->add_macs(g_scope, macs);
}

void count_aux(std::uint64_t ops) {
    if (g_counter != nullptr) g_counter->add_aux(g_scope, ops);
}

}  // namespace gsf
