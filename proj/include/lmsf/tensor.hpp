#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lmsf {

// Dense rank-4 feature map, layout N x C x H x W, float32, row-major.
//
// A tensor may be "symbolic": it carries a shape but no payload. Symbolic
// tensors flow through every operation for shape propagation and MAC
// accounting without doing arithmetic; the profiler is built on this.
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w);
    static Tensor symbolic(int n, int c, int h, int w);
    static Tensor from_data(int n, int c, int h, int w, std::vector<float> values);

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    bool is_symbolic() const { return symbolic_; }
    bool empty() const { return n_ == 0; }

    std::size_t size() const {
        return static_cast<std::size_t>(n_) * c_ * h_ * w_;
    }
    std::size_t plane() const { return static_cast<std::size_t>(h_) * w_; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& at(int in, int ic, int iy, int ix) {
        return data_[((static_cast<std::size_t>(in) * c_ + ic) * h_ + iy) * w_ + ix];
    }
    float at(int in, int ic, int iy, int ix) const {
        return data_[((static_cast<std::size_t>(in) * c_ + ic) * h_ + iy) * w_ + ix];
    }

    bool same_shape(const Tensor& o) const {
        return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }
    std::string shape_str() const;

private:
    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    bool symbolic_ = false;
    std::vector<float> data_;
};

// Largest |a-b| over two same-shape tensors.
double max_abs_diff(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& a);

}  // namespace lmsf
