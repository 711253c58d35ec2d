#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace gsf {

// Multiply-accumulate counts per labeled scope. One MAC = one unit; a dot product of
// length n costs n. Elementwise work is tracked separately in `aux` and never mixed
// into the MAC totals.
class FlopCounter {
public:
    void add_macs(const std::string& scope, std::uint64_t macs) { macs_[scope] += macs; }
    void add_aux(const std::string& scope, std::uint64_t ops) { aux_[scope] += ops; }

    std::uint64_t macs(const std::string& scope) const;
    std::uint64_t aux(const std::string& scope) const;
    // Sum over every scope whose label starts with `prefix`.
    std::uint64_t macs_with_prefix(const std::string& prefix) const;
    std::uint64_t total_macs() const;

    const std::map<std::string, std::uint64_t>& mac_table() const { return macs_; }
    const std::map<std::string, std::uint64_t>& aux_table() const { return aux_; }

    void merge(const FlopCounter& other);
    void reset() {
        macs_.clear();
        aux_.clear();
    }

    // Counter receiving MACs from the kernels on this thread, or nullptr.
    static FlopCounter* active();
    // Label attached to MACs recorded on this thread.
    static const std::string& active_scope();

private:
    std::map<std::string, std::uint64_t> macs_;
    std::map<std::string, std::uint64_t> aux_;

    friend class CountingScope;
    friend class FlopScope;
};

// Routes kernel MAC counts on this thread into `counter` for the guard's lifetime.
class CountingScope {
public:
    explicit CountingScope(FlopCounter& counter);
    ~CountingScope();
    CountingScope(const CountingScope&) = delete;
    CountingScope& operator=(const CountingScope&) = delete;

private:
    FlopCounter* previous_;
};

// Sets the scope label for the guard's lifetime.
class FlopScope {
public:
    explicit FlopScope(std::string label);
    ~FlopScope();
    FlopScope(const FlopScope&) = delete;
    FlopScope& operator=(const FlopScope&) = delete;

private:
    std::string previous_;
};

void count_macs(std::uint64_t macs);
void count_aux(std::uint64_t ops);

}  // namespace gsf
