#include "qmera/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace qmera {

Tensor::Tensor(std::vector<int64_t> shp) : shape(std::move(shp)) {
    data.assign(size(), cplx(0, 0));
}

Tensor::Tensor(std::vector<int64_t> shp, std::vector<cplx> dat)
    : shape(std::move(shp)), data(std::move(dat)) {
    if ((int64_t)data.size() != size())
        throw std::invalid_argument("Tensor: data size does not match shape");
}

int64_t Tensor::size() const {
    int64_t n = 1;
    for (auto d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dimension");
        n *= d;
    }
    return n;
}

Tensor Tensor::identity(int64_t d) {
    Tensor t({d, d});
    for (int64_t i = 0; i < d; ++i) t.data[i * d + i] = 1.0;
    return t;
}

Tensor Tensor::conj() const {
    Tensor t(shape);
    for (int64_t i = 0; i < (int64_t)data.size(); ++i) t.data[i] = std::conj(data[i]);
    return t;
}

static std::vector<int64_t> strides_of(const std::vector<int64_t>& shape) {
    std::vector<int64_t> s(shape.size());
    int64_t acc = 1;
    for (int i = (int)shape.size() - 1; i >= 0; --i) {
        s[i] = acc;
        acc *= shape[i];
    }
    return s;
}

Tensor Tensor::transpose(const std::vector<int>& perm) const {
    if ((int)perm.size() != rank())
        throw std::invalid_argument("transpose: bad permutation length");
    std::vector<int64_t> nshape(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) nshape[i] = shape[perm[i]];
    Tensor out(nshape);
    auto istr = strides_of(shape);
    // stride of output axis i in the input flat layout
    std::vector<int64_t> pstr(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) pstr[i] = istr[perm[i]];
    int64_t n = out.size();
    std::vector<int64_t> idx(perm.size(), 0);
    int64_t src = 0;
    for (int64_t k = 0; k < n; ++k) {
        out.data[k] = data[src];
        for (int ax = (int)perm.size() - 1; ax >= 0; --ax) {
            if (++idx[ax] < nshape[ax]) {
                src += pstr[ax];
                break;
            }
            idx[ax] = 0;
            src -= pstr[ax] * (nshape[ax] - 1);
        }
    }
    return out;
}

Tensor Tensor::reshape(std::vector<int64_t> shp) const {
    Tensor t(std::move(shp), data);
    return t;
}

double Tensor::norm() const {
    double s = 0;
    for (auto& z : data) s += std::norm(z);
    return std::sqrt(s);
}

bool is_unitary(const Tensor& t, int n_in, double tol) {
    int64_t din = 1, dout = 1;
    for (int i = 0; i < n_in; ++i) din *= t.shape[i];
    for (int i = n_in; i < t.rank(); ++i) dout *= t.shape[i];
    if (din != dout) return false;
    // U is (in x out); check U^dag U = I over the in legs
    for (int64_t a = 0; a < dout; ++a) {
        for (int64_t b = 0; b < dout; ++b) {
            cplx s = 0;
            for (int64_t i = 0; i < din; ++i)
                s += std::conj(t.data[i * dout + a]) * t.data[i * dout + b];
            cplx want = (a == b) ? cplx(1, 0) : cplx(0, 0);
            if (std::abs(s - want) > tol) return false;
        }
    }
    return true;
}

Tensor contract_pair(const Tensor& a, const Tensor& b,
                     const std::vector<std::pair<int, int>>& shared) {
    std::set<int> ca, cb;
    for (auto& [ia, ib] : shared) {
        if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank())
            throw std::invalid_argument("contract_pair: axis out of range");
        if (a.shape[ia] != b.shape[ib])
            throw std::invalid_argument("contract_pair: dimension mismatch on shared index");
        if (!ca.insert(ia).second || !cb.insert(ib).second)
            throw std::invalid_argument("contract_pair: repeated axis");
    }
    std::vector<int> freeA, freeB;
    for (int i = 0; i < a.rank(); ++i)
        if (!ca.count(i)) freeA.push_back(i);
    for (int i = 0; i < b.rank(); ++i)
        if (!cb.count(i)) freeB.push_back(i);

    // permute a to (freeA, shared_a), b to (shared_b, freeB), then matmul
    std::vector<int> pa = freeA, pb;
    for (auto& [ia, ib] : shared) pa.push_back(ia);
    for (auto& [ia, ib] : shared) pb.push_back(ib);
    for (int i : freeB) pb.push_back(i);
    Tensor ta = a.transpose(pa);
    Tensor tb = b.transpose(pb);

    int64_t M = 1, K = 1, N = 1;
    for (int i : freeA) M *= a.shape[i];
    for (auto& [ia, ib] : shared) K *= a.shape[ia];
    for (int i : freeB) N *= b.shape[i];

    std::vector<int64_t> oshape;
    for (int i : freeA) oshape.push_back(a.shape[i]);
    for (int i : freeB) oshape.push_back(b.shape[i]);
    if (oshape.empty()) oshape.push_back(1);  // scalar kept as shape {1}
    Tensor out(oshape);

    const cplx* A = ta.data.data();
    const cplx* B = tb.data.data();
    cplx* C = out.data.data();
    for (int64_t m = 0; m < M; ++m) {
        for (int64_t k = 0; k < K; ++k) {
            cplx amk = A[m * K + k];
            if (amk == cplx(0, 0)) continue;
            const cplx* brow = B + k * N;
            cplx* crow = C + m * N;
            for (int64_t n = 0; n < N; ++n) crow[n] += amk * brow[n];
        }
    }
    return out;
}

namespace {

struct NodeInfo {
    std::multiset<std::string> labels;
    int64_t size;
    bool alive = true;
};

int64_t result_size(const NodeInfo& a, const NodeInfo& b,
                    const std::map<std::string, int64_t>& dims) {
    // labels shared between a and b are contracted; all others survive
    int64_t s = 1;
    for (auto& l : a.labels)
        if (!b.labels.count(l)) s *= dims.at(l);
    for (auto& l : b.labels)
        if (!a.labels.count(l)) s *= dims.at(l);
    return s;
}

bool connected(const NodeInfo& a, const NodeInfo& b) {
    for (auto& l : a.labels)
        if (b.labels.count(l)) return true;
    return false;
}

}  // namespace

ContractionPlan plan_greedy(const std::vector<LabeledTensor>& network) {
    ContractionPlan plan;
    if (network.empty()) throw std::invalid_argument("plan_greedy: empty network");
    std::map<std::string, int64_t> dims;
    std::map<std::string, int> count;
    for (auto& lt : network) {
        if ((int)lt.labels.size() != lt.t.rank())
            throw std::invalid_argument("plan_greedy: label/leg count mismatch");
        for (size_t i = 0; i < lt.labels.size(); ++i) {
            auto it = dims.find(lt.labels[i]);
            if (it == dims.end())
                dims[lt.labels[i]] = lt.t.shape[i];
            else if (it->second != lt.t.shape[i])
                throw std::invalid_argument("plan_greedy: inconsistent label dimension");
            count[lt.labels[i]]++;
        }
    }
    for (auto& [l, c] : count)
        if (c > 2) throw std::invalid_argument("plan_greedy: label on more than two tensors");

    std::vector<NodeInfo> nodes;
    for (auto& lt : network) {
        NodeInfo n;
        for (auto& l : lt.labels) n.labels.insert(l);
        n.size = lt.t.size();
        nodes.push_back(std::move(n));
    }

    auto merge = [&](int ia, int ib) {
        NodeInfo m;
        for (auto& l : nodes[ia].labels)
            if (!nodes[ib].labels.count(l)) m.labels.insert(l);
        for (auto& l : nodes[ib].labels)
            if (!nodes[ia].labels.count(l)) m.labels.insert(l);
        m.size = result_size(nodes[ia], nodes[ib], dims);
        nodes[ia].alive = false;
        nodes[ib].alive = false;
        nodes.push_back(std::move(m));
        plan.steps.push_back({ia, ib});
        plan.peak_intermediate = std::max(plan.peak_intermediate, nodes.back().size);
        return (int)nodes.size() - 1;
    };

    int alive = (int)network.size();
    while (alive > 1) {
        int64_t best = -1;
        int bi = -1, bj = -1;
        for (int i = 0; i < (int)nodes.size(); ++i) {
            if (!nodes[i].alive) continue;
            for (int j = i + 1; j < (int)nodes.size(); ++j) {
                if (!nodes[j].alive || !connected(nodes[i], nodes[j])) continue;
                int64_t s = result_size(nodes[i], nodes[j], dims);
                if (best < 0 || s < best) {
                    best = s;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi < 0) {
            // disconnected: outer-product the remaining components, smallest first
            std::vector<int> rest;
            for (int i = 0; i < (int)nodes.size(); ++i)
                if (nodes[i].alive) rest.push_back(i);
            std::sort(rest.begin(), rest.end(),
                      [&](int a, int b) { return nodes[a].size < nodes[b].size; });
            int acc = rest[0];
            for (size_t k = 1; k < rest.size(); ++k) acc = merge(acc, rest[k]);
            return plan;
        }
        merge(bi, bj);
        alive--;
    }
    return plan;
}

LabeledTensor execute_plan(const std::vector<LabeledTensor>& network,
                           const ContractionPlan& plan) {
    std::vector<LabeledTensor> pool = network;
    for (auto& st : plan.steps) {
        const LabeledTensor& a = pool[st.a];
        const LabeledTensor& b = pool[st.b];
        std::vector<std::pair<int, int>> shared;
        std::vector<std::string> olabels;
        for (int i = 0; i < (int)a.labels.size(); ++i) {
            auto it = std::find(b.labels.begin(), b.labels.end(), a.labels[i]);
            if (it != b.labels.end())
                shared.push_back({i, (int)(it - b.labels.begin())});
            else
                olabels.push_back(a.labels[i]);
        }
        std::set<int> cb;
        for (auto& [x, y] : shared) cb.insert(y);
        for (int i = 0; i < (int)b.labels.size(); ++i)
            if (!cb.count(i)) olabels.push_back(b.labels[i]);
        LabeledTensor res;
        res.t = contract_pair(a.t, b.t, shared);
        if (olabels.empty()) olabels.push_back("__scalar__");
        res.labels = olabels;
        pool.push_back(std::move(res));
    }
    return pool.back();
}

LabeledTensor contract_network(const std::vector<LabeledTensor>& network) {
    if (network.size() == 1) return network[0];
    return execute_plan(network, plan_greedy(network));
}

}  // namespace qmera
