#include "gsformer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gsformer/errors.hpp"

namespace gsf {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto extent : shape) n *= extent;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
    out << ']';
    return out.str();
}

namespace {
void check_extents(const Shape& shape) {
    for (auto extent : shape) {
        if (extent == 0) throw dimension_error("tensor extents must be positive, got " + shape_str(shape));
    }
}
}  // namespace

Tensor::Tensor(Shape shape, bool requires_grad) : impl_(std::make_shared<TensorImpl>()) {
    check_extents(shape);
    impl_->data.assign(numel(shape), 0.0);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
    check_extents(shape);
    if (numel(shape) != values.size()) {
        throw dimension_error("shape " + shape_str(shape) + " does not match " +
                              std::to_string(values.size()) + " values");
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return Tensor(std::move(shape), requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) throw dimension_error("from_rows needs a non-empty matrix");
    std::vector<double> values;
    const auto cols = rows.front().size();
    for (const auto& row : rows) {
        if (row.size() != cols) throw dimension_error("ragged rows in from_rows");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor({rows.size(), cols}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

double Tensor::item() const {
    if (size() != 1) throw dimension_error("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != rank()) throw dimension_error("index rank mismatch");
    std::size_t offset = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= impl_->shape[axis]) throw dimension_error("index out of range");
        offset = offset * impl_->shape[axis] + i;
        ++axis;
    }
    return impl_->data[offset];
}

bool Tensor::all_finite() const {
    return std::all_of(impl_->data.begin(), impl_->data.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* Tape::current() { return g_active_tape; }

void Tape::record(const Tensor& output, std::vector<Tensor> inputs, BackwardFn fn) {
    output.impl_->requires_grad = true;
    output.impl_->on_tape = true;
    entries_.push_back(Entry{output.impl_, std::move(inputs), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw dimension_error("backward() needs a scalar loss");
    }
    auto it = std::find_if(entries_.rbegin(), entries_.rend(),
                           [&](const Entry& e) { return e.output == loss.impl_; });
    if (it == entries_.rend()) throw dimension_error("backward(): loss was not produced on this tape");

    loss.impl_->ensure_grad()[0] += 1.0;
    for (; it != entries_.rend(); ++it) {
        const auto& grad = it->output->grad;
        if (grad.empty()) continue;
        it->fn(grad);
    }
    // Intermediate gradients are not needed once the pass is complete.
    for (auto& entry : entries_) {
        if (entry.output != loss.impl_) entry.output->grad.clear();
    }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

void backward(const Tensor& loss) {
    auto* tape = Tape::current();
    if (tape == nullptr) throw dimension_error("backward(): no active tape");
    tape->backward(loss);
}

}  // namespace gsf
