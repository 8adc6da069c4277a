#include "lmsf/tensor.hpp"

#include <cmath>

#include "lmsf/contract.hpp"

namespace lmsf {

Tensor::Tensor(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w) {
    require(n >= 1 && c >= 1 && h >= 1 && w >= 1,
            "tensor dims must all be >= 1, got " + shape_str());
    data_.assign(size(), 0.0f);
}

Tensor Tensor::symbolic(int n, int c, int h, int w) {
    require(n >= 1 && c >= 1 && h >= 1 && w >= 1, "symbolic tensor dims must all be >= 1");
    Tensor t;
    t.n_ = n;
    t.c_ = c;
    t.h_ = h;
    t.w_ = w;
    t.symbolic_ = true;
    return t;
}

Tensor Tensor::from_data(int n, int c, int h, int w, std::vector<float> values) {
    Tensor t(n, c, h, w);
    require(values.size() == t.size(),
            "data length " + std::to_string(values.size()) + " does not match shape " +
                t.shape_str());
    t.data_ = std::move(values);
    return t;
}

std::string Tensor::shape_str() const {
    return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" +
           std::to_string(w_);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b),
            "max_abs_diff shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    require(!a.is_symbolic() && !b.is_symbolic(), "max_abs_diff on symbolic tensor");
    double m = 0.0;
    const float* pa = a.data();
    const float* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = std::fabs(static_cast<double>(pa[i]) - static_cast<double>(pb[i]));
        if (d > m) m = d;
    }
    return m;
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = std::fabs(static_cast<double>(a.data()[i]));
        if (d > m) m = d;
    }
    return m;
}

}  // namespace lmsf
