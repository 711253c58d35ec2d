#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gsformer/tensor.hpp"

namespace gsf {

// Ordered collection of named trainable tensors.
class ParamStore {
public:
    explicit ParamStore(std::uint64_t seed = 0) : rng_(seed) {}

    // Weight drawn uniformly from [-sqrt(1/fan_in), +sqrt(1/fan_in)].
    Tensor uniform(const std::string& name, Shape shape, std::size_t fan_in);
    Tensor constant(const std::string& name, Shape shape, double value);

    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    const Tensor& get(const std::string& name) const;
    std::size_t count() const;  // total scalar parameters

    void zero_grad();
    // Copies values from `other`, matching names and shapes exactly.
    void assign(const std::vector<std::pair<std::string, Tensor>>& other);

private:
    Tensor add(const std::string& name, Tensor t);

    std::mt19937_64 rng_;
    std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace gsf
