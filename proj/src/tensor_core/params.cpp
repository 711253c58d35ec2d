#include "gsformer/params.hpp"

#include <algorithm>
#include <cmath>

#include "gsformer/errors.hpp"

namespace gsf {

Tensor ParamStore::add(const std::string& name, Tensor t) {
    auto clash = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
    if (clash != entries_.end()) throw config_error("duplicate parameter name '" + name + "'");
    t.set_requires_grad(true);
    entries_.emplace_back(name, t);
    return t;
}

Tensor ParamStore::uniform(const std::string& name, Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    Tensor t(std::move(shape));
    // Top 53 bits of the engine mapped to [0, 1); independent of the library's distributions.
    for (auto& v : t.mutable_values()) {
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        v = (2.0 * u - 1.0) * bound;
    }
    return add(name, t);
}

Tensor ParamStore::constant(const std::string& name, Shape shape, double value) {
    return add(name, Tensor::full(std::move(shape), value));
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
    if (it == entries_.end()) throw config_error("unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParamStore::count() const {
    std::size_t total = 0;
    for (const auto& [name, t] : entries_) total += t.size();
    return total;
}

void ParamStore::zero_grad() {
    for (auto& [name, t] : entries_) t.zero_grad();
}

void ParamStore::assign(const std::vector<std::pair<std::string, Tensor>>& other) {
    if (other.size() != entries_.size()) {
        throw config_error("parameter count mismatch: expected " + std::to_string(entries_.size()) + " tensors, got " +
                           std::to_string(other.size()));
    }
    for (std::size_t i = 0; i < other.size(); ++i) {
        auto& [name, dst] = entries_[i];
        const auto& [src_name, src] = other[i];
        if (name != src_name || dst.shape() != src.shape()) {
            throw config_error("parameter mismatch at '" + name + "' " + shape_str(dst.shape()) + " vs '" + src_name +
                               "' " + shape_str(src.shape()));
        }
        std::copy(src.values().begin(), src.values().end(), dst.mutable_values().begin());
    }
}

}  // namespace gsf
