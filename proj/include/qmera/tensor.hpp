#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace qmera {

using cplx = std::complex<double>;

/// Dense complex tensor, row-major index order. Immutable after construction
/// by convention: operations return new tensors.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<cplx> data;

    Tensor() = default;
    Tensor(std::vector<int64_t> shp);
    Tensor(std::vector<int64_t> shp, std::vector<cplx> dat);

    int64_t size() const;
    int rank() const { return (int)shape.size(); }

    static Tensor identity(int64_t d);
    Tensor conj() const;
    Tensor transpose(const std::vector<int>& perm) const;
    Tensor reshape(std::vector<int64_t> shp) const;

    double norm() const;  // Frobenius
};

// is_unitary over the bipartition (first n_in legs = in, rest = out), per-entry tol
bool is_unitary(const Tensor& t, int n_in, double tol = 1e-12);

/// Contract a and b over the given (axis_of_a, axis_of_b) pairs.
/// Result indices: free indices of a (in order) followed by free indices of b.
Tensor contract_pair(const Tensor& a, const Tensor& b,
                     const std::vector<std::pair<int, int>>& shared);

/// A tensor in a labeled network: legs carry string labels; a label shared by
/// exactly two tensors is contracted, labels appearing once dangle.
struct LabeledTensor {
    Tensor t;
    std::vector<std::string> labels;  // one per leg
};

struct ContractionStep {
    int a, b;  // tensor ids (initial ids 0..n-1; results get ids n, n+1, ...)
};

struct ContractionPlan {
    std::vector<ContractionStep> steps;
    int64_t peak_intermediate = 0;  // largest intermediate tensor size seen
};

/// Greedy pairwise planner: at each step contract the connected pair whose
/// result tensor is smallest. Disconnected components are contracted
/// separately and joined by outer products at the end.
ContractionPlan plan_greedy(const std::vector<LabeledTensor>& network);

/// Execute a plan; returns the single resulting tensor with its dangling labels.
LabeledTensor execute_plan(const std::vector<LabeledTensor>& network,
                           const ContractionPlan& plan);

/// Convenience: plan + execute.
LabeledTensor contract_network(const std::vector<LabeledTensor>& network);

}  // namespace qmera
