#include "qmera/mps.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace qmera {

namespace {

using Mat = Eigen::MatrixXcd;

// site tensor grouped as (left*2+spin) x right
Mat left_mat(const Mps& m, int i) {
    const int dl = m.dims[i], dr = m.dims[i + 1];
    Mat a(dl * 2, dr);
    for (int l = 0; l < dl; ++l)
        for (int s = 0; s < 2; ++s)
            for (int r = 0; r < dr; ++r)
                a(l * 2 + s, r) = m.site[i][(size_t)(l * 2 + s) * dr + r];
    return a;
}

// site tensor grouped as left x (spin*right_dim + right)
Mat right_mat(const Mps& m, int i) {
    const int dl = m.dims[i], dr = m.dims[i + 1];
    Mat a(dl, 2 * dr);
    for (int l = 0; l < dl; ++l)
        for (int s = 0; s < 2; ++s)
            for (int r = 0; r < dr; ++r)
                a(l, s * dr + r) = m.site[i][(size_t)(l * 2 + s) * dr + r];
    return a;
}

void set_from_left(Mps& m, int i, const Mat& a) {
    const int dl = (int)a.rows() / 2, dr = (int)a.cols();
    m.dims[i] = dl;
    m.dims[i + 1] = dr;
    m.site[i].assign((size_t)dl * 2 * dr, cplx(0, 0));
    for (int l = 0; l < dl; ++l)
        for (int s = 0; s < 2; ++s)
            for (int r = 0; r < dr; ++r)
                m.site[i][(size_t)(l * 2 + s) * dr + r] = a(l * 2 + s, r);
}

void set_from_right(Mps& m, int i, const Mat& a) {
    const int dl = (int)a.rows(), dr = (int)a.cols() / 2;
    m.dims[i] = dl;
    m.dims[i + 1] = dr;
    m.site[i].assign((size_t)dl * 2 * dr, cplx(0, 0));
    for (int l = 0; l < dl; ++l)
        for (int s = 0; s < 2; ++s)
            for (int r = 0; r < dr; ++r)
                m.site[i][(size_t)(l * 2 + s) * dr + r] = a(l, s * dr + r);
}

void move_center_right(Mps& m) {
    const int i = m.center;
    Mat a = left_mat(m, i);
    Eigen::HouseholderQR<Mat> qr(a);
    const int k = (int)std::min(a.rows(), a.cols());
    Mat q = Mat(qr.householderQ()).leftCols(k);
    Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Mat next = r * right_mat(m, i + 1);
    set_from_left(m, i, q);
    set_from_right(m, i + 1, next);
    m.center = i + 1;
}

void move_center_left(Mps& m) {
    const int i = m.center;
    Mat a = right_mat(m, i);
    Eigen::HouseholderQR<Mat> qr(a.adjoint());
    const int k = (int)std::min(a.rows(), a.cols());
    Mat q = Mat(qr.householderQ()).leftCols(k);          // (2*dr) x k
    Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Mat prev = left_mat(m, i - 1) * r.adjoint();         // absorb into the left site
    set_from_right(m, i, q.adjoint());                   // k x (2*dr), orthonormal rows
    set_from_left(m, i - 1, prev);
    m.center = i - 1;
}

void move_center(Mps& m, int to) {
    while (m.center < to) move_center_right(m);
    while (m.center > to) move_center_left(m);
}

struct ThinSvd {
    Mat u, v;           // thin unitaries; v holds V (not V^dagger)
    Eigen::VectorXd s;  // singular values, descending
};

// Eigen 3.4.0's divide-and-conquer SVD occasionally emits NaNs or garbage in
// the singular vectors of complex matrices (stale workspace in its deflation
// path, dependent on prior heap contents). Sanity-check the factorization and
// redo it with the slower but robust one-sided Jacobi SVD when it is corrupt.
ThinSvd thin_svd(const Mat& mat) {
    Eigen::BDCSVD<Mat> bdc(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    ThinSvd out{bdc.matrixU(), bdc.matrixV(), bdc.singularValues()};
    const double fro = mat.squaredNorm();
    const double s2 = out.s.squaredNorm();
    bool ok = out.s.allFinite() && out.u.allFinite() && out.v.allFinite() &&
              std::abs(s2 - fro) <= 1e-8 * std::max(1.0, fro);
    if (ok) {
        const double resid = (mat - out.u * out.s.asDiagonal() * out.v.adjoint()).squaredNorm();
        ok = resid <= 1e-20 * std::max(1.0, fro);
    }
    if (!ok) {
        Eigen::JacobiSVD<Mat> j(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out = {j.matrixU(), j.matrixV(), j.singularValues()};
    }
    return out;
}

void apply1(Mps& m, int i, const std::array<cplx, 4>& u) {
    const int dl = m.dims[i], dr = m.dims[i + 1];
    for (int l = 0; l < dl; ++l)
        for (int r = 0; r < dr; ++r) {
            cplx v0 = m.site[i][(size_t)(l * 2 + 0) * dr + r];
            cplx v1 = m.site[i][(size_t)(l * 2 + 1) * dr + r];
            m.site[i][(size_t)(l * 2 + 0) * dr + r] = u[0] * v0 + u[1] * v1;
            m.site[i][(size_t)(l * 2 + 1) * dr + r] = u[2] * v0 + u[3] * v1;
        }
}

// two-site gate on (i, i+1); gate basis (s_i << 1) | s_{i+1}
void apply2_adjacent(Mps& m, int i, const Mat4& g, int chi, bool center_right) {
    if (m.center != i && m.center != i + 1)
        throw std::logic_error("apply2_adjacent: orthogonality center misplaced");
    const int dl = m.dims[i], dm = m.dims[i + 1], dr = m.dims[i + 2];
    // theta[l, (s0 s1), r]
    std::vector<cplx> theta((size_t)dl * 4 * dr, cplx(0, 0));
    for (int l = 0; l < dl; ++l)
        for (int s0 = 0; s0 < 2; ++s0)
            for (int mm = 0; mm < dm; ++mm) {
                cplx a = m.site[i][(size_t)(l * 2 + s0) * dm + mm];
                if (a == cplx(0, 0)) continue;
                for (int s1 = 0; s1 < 2; ++s1)
                    for (int r = 0; r < dr; ++r)
                        theta[((size_t)l * 4 + (s0 << 1 | s1)) * dr + r] +=
                            a * m.site[i + 1][(size_t)(mm * 2 + s1) * dr + r];
            }
    Mat mat(dl * 2, 2 * dr);  // rows l*2+s0, cols s1*dr+r
    for (int l = 0; l < dl; ++l)
        for (int t = 0; t < 4; ++t) {
            cplx acc;
            for (int r = 0; r < dr; ++r) {
                acc = cplx(0, 0);
                for (int u = 0; u < 4; ++u)
                    acc += g[t * 4 + u] * theta[((size_t)l * 4 + u) * dr + r];
                mat(l * 2 + (t >> 1), (t & 1) * dr + r) = acc;
            }
        }
    ThinSvd svd = thin_svd(mat);
    const Eigen::VectorXd& sv = svd.s;
    int k = (int)sv.size();
    double total = 0;
    for (int j = 0; j < k; ++j) total += sv(j) * sv(j);
    k = std::min(k, chi);
    while (k > 1 && sv(k - 1) < 1e-14 * sv(0)) k--;
    double kept = 0;
    for (int j = 0; j < k; ++j) kept += sv(j) * sv(j);
    if (total > 0) m.trunc_error += 1.0 - kept / total;
    const double renorm = kept > 0 ? 1.0 / std::sqrt(kept) : 0.0;

    Mat u = svd.u.leftCols(k);
    Mat vh = svd.v.leftCols(k).adjoint();
    Eigen::VectorXd s = sv.head(k) * renorm;
    if (center_right) {
        set_from_left(m, i, u);
        set_from_right(m, i + 1, s.asDiagonal() * vh);
        m.center = i + 1;
    } else {
        set_from_left(m, i, u * s.asDiagonal());
        set_from_right(m, i + 1, vh);
        m.center = i;
    }
}

Mat4 swap_gate() {
    Mat4 s{};
    s[0 * 4 + 0] = s[1 * 4 + 2] = s[2 * 4 + 1] = s[3 * 4 + 3] = 1.0;
    return s;
}

Mat4 gate_matrix(const CircuitOp& op) {
    switch (op.kind) {
        case OpKind::UXX: return uxx_matrix(op.param);
        case OpKind::UYY: return uyy_matrix(op.param);
        case OpKind::UZZ: return uzz_matrix(op.param);
        case OpKind::CX: {
            Mat4 cx{};
            cx[0 * 4 + 0] = cx[1 * 4 + 1] = cx[2 * 4 + 3] = cx[3 * 4 + 2] = 1.0;
            return cx;
        }
        default: throw std::logic_error("gate_matrix: not a two-qubit gate");
    }
}

// conjugate a two-qubit gate by SWAP (exchange the roles of its qubits)
Mat4 swapped(const Mat4& g) {
    auto p = [](int t) { return ((t & 1) << 1) | (t >> 1); };
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i * 4 + j] = g[p(i) * 4 + p(j)];
    return r;
}

}  // namespace

double Mps::norm() const {
    double n2 = 0;
    for (const cplx& v : site[center]) n2 += std::norm(v);
    return std::sqrt(n2);
}

Mps product_zero(int L) {
    if (L < 2) throw std::invalid_argument("product_zero: need L >= 2");
    Mps m;
    m.L = L;
    m.dims.assign(L + 1, 1);
    m.site.resize(L);
    for (int i = 0; i < L; ++i) m.site[i] = {cplx(1, 0), cplx(0, 0)};
    m.center = 0;
    return m;
}

Mps apply_circuit(const Circuit& c, int chi_mps) {
    if (chi_mps < 1) throw std::invalid_argument("apply_circuit: chi_mps must be >= 1");
    for (const auto& op : c.ops)
        if (op.kind == OpKind::MEASZ || op.kind == OpKind::RESET)
            throw std::invalid_argument("apply_circuit: measurement ops not supported");
    Mps m = product_zero(c.num_qubits);
    const double s2 = 1.0 / std::sqrt(2.0);
    const Mat4 sw = swap_gate();
    for (const auto& op : c.ops) {
        if (op.kind == OpKind::RZ) {
            apply1(m, op.q0,
                   {std::exp(cplx(0, -op.param / 2)), 0, 0, std::exp(cplx(0, op.param / 2))});
            continue;
        }
        if (op.kind == OpKind::H) {
            apply1(m, op.q0, {cplx(s2, 0), cplx(s2, 0), cplx(s2, 0), cplx(-s2, 0)});
            continue;
        }
        int a = op.q0, b = op.q1;
        Mat4 g = gate_matrix(op);
        if (a > b) {
            std::swap(a, b);
            g = swapped(g);
        }
        // bring site b down next to a with adjacent swaps, apply, swap back
        move_center(m, b - 1);
        for (int k = b - 1; k > a; --k) apply2_adjacent(m, k, sw, chi_mps, false);
        apply2_adjacent(m, a, g, chi_mps, true);
        for (int k = a + 1; k < b; ++k) apply2_adjacent(m, k, sw, chi_mps, true);
    }
    return m;
}

double entropy_at(Mps& m, int cut) {
    if (cut < 1 || cut > m.L - 1) throw std::invalid_argument("entropy_at: bad cut");
    move_center(m, cut - 1);
    Mat a = left_mat(m, cut - 1);
    const Eigen::VectorXd sv = thin_svd(a).s;
    double total = 0;
    for (int i = 0; i < sv.size(); ++i) total += sv(i) * sv(i);
    double s = 0;
    for (int i = 0; i < sv.size(); ++i) {
        double p = sv(i) * sv(i) / total;
        if (p > 1e-300) s -= p * std::log(p);
    }
    return s;
}

double entropy_half(Mps& m) { return entropy_at(m, m.L / 2); }

std::vector<cplx> to_dense(const Mps& m, int max_L) {
    if (m.L > max_L) throw std::invalid_argument("to_dense: chain too long");
    // amp[config x right-bond], site i occupies bit i of config
    std::vector<cplx> amp(m.dims[0], cplx(1, 0));
    size_t n_cfg = 1;
    for (int i = 0; i < m.L; ++i) {
        const int dl = m.dims[i], dr = m.dims[i + 1];
        std::vector<cplx> next(n_cfg * 2 * dr, cplx(0, 0));
        for (size_t cfg = 0; cfg < n_cfg; ++cfg)
            for (int s = 0; s < 2; ++s) {
                const size_t out_cfg = cfg | ((size_t)s << i);
                for (int l = 0; l < dl; ++l) {
                    cplx v = amp[cfg * dl + l];
                    if (v == cplx(0, 0)) continue;
                    for (int r = 0; r < dr; ++r)
                        next[out_cfg * dr + r] += v * m.site[i][(size_t)(l * 2 + s) * dr + r];
                }
            }
        amp = std::move(next);
        n_cfg *= 2;
    }
    return amp;  // dims[L] == 1
}

}  // namespace qmera
