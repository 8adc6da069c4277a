#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lmsf/layers.hpp"
#include "lmsf/tensor.hpp"

namespace lmsf {

// Which parameterization a forward pass uses: the multi-branch training
// structure or the fused single-path inference structure.
enum class Form { train, deploy };

inline const char* form_name(Form f) { return f == Form::train ? "train" : "deploy"; }

// One parallel path of a re-parameterizable convolution: a conv followed by
// per-channel affine normalization, or (identity = true) the norm alone.
struct RepBranch {
    bool identity = false;
    ConvLayer conv;
    AffineNormStats norm;
};

// Parallel branches sharing input/output channels, stride and groups. All
// branches must produce the same output shape; at most one identity branch.
struct BranchSpec {
    std::vector<RepBranch> branches;
    void validate() const;
};

Tensor branch_forward(const Tensor& x, const RepBranch& b);
// Train-form forward: sum of the branch outputs.
Tensor branch_sum_forward(const Tensor& x, const BranchSpec& spec);

// Folds constant normalization statistics into the conv:
//   W'_o = W_o * gamma_o / sqrt(var_o + eps)
//   b'_o = beta_o + (b_o - mean_o) * gamma_o / sqrt(var_o + eps)
ConvLayer fuse_conv_norm(const ConvLayer& conv, const AffineNormStats& st);

// Collapses a branch set into one conv: fold each branch's norm, materialize
// the identity as a centered delta kernel, zero-pad small kernels into the
// largest one's center, then sum weights and biases.
ConvLayer fuse_branches(const BranchSpec& spec);

struct EquivalenceReport {
    double max_abs_diff = 0.0;
    double tol = 0.0;
    int trials = 0;
    bool pass = false;
};

using ForwardFn = std::function<Tensor(const Tensor&)>;

// Runs both callables on `trials` random N(0,1) inputs of the given shape and
// records the worst output disagreement. A failed certificate is a report,
// not an error.
EquivalenceReport certify_equivalence(const ForwardFn& a, const ForwardFn& b, int n, int c, int h,
                                      int w, int trials, double tol, std::uint64_t seed);

}  // namespace lmsf
