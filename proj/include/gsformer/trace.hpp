#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gsf {

// Dense attention matrix captured during a forward pass.
struct AttentionMap {
    std::string stage;  // "spatial", "encoder" or "decoder"
    std::size_t layer = 0;
    std::size_t head = 0;
    std::size_t set = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
};

// Collects attention maps when passed to a forward function; nullptr disables capture.
struct AttentionTrace {
    std::vector<AttentionMap> maps;
};

}  // namespace gsf
