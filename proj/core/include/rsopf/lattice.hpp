#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rsopf {

using Complex = std::complex<double>;

/// Dense node-by-element table. Rows are scenario-tree nodes, columns are
/// buses or lines depending on the quantity.
template <class T>
class Lattice {
public:
    Lattice() = default;
    Lattice(std::size_t nodes, std::size_t elements, T fill = T{})
        : nodes_(nodes), elements_(elements), data_(nodes * elements, fill) {}

    std::size_t nodes() const noexcept { return nodes_; }
    std::size_t elements() const noexcept { return elements_; }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t node, std::size_t element) {
        assert(node < nodes_ && element < elements_);
        return data_[node * elements_ + element];
    }
    const T& operator()(std::size_t node, std::size_t element) const {
        assert(node < nodes_ && element < elements_);
        return data_[node * elements_ + element];
    }

    std::span<T> row(std::size_t node) { return {data_.data() + node * elements_, elements_}; }
    std::span<const T> row(std::size_t node) const {
        return {data_.data() + node * elements_, elements_};
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool operator==(const Lattice&) const = default;

private:
    std::size_t nodes_ = 0;
    std::size_t elements_ = 0;
    std::vector<T> data_;
};

/// Componentwise partial order on complex numbers: a <=_C b.
inline bool complex_le(Complex a, Complex b, double slack = 0.0) {
    return a.real() <= b.real() + slack && a.imag() <= b.imag() + slack;
}

}  // namespace rsopf
