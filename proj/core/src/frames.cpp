#include "membrane/frames.hpp"

#include <algorithm>
#include <cmath>

namespace membrane {

FrameMatrix frame_matrices(const SpacetimePoint& p) {
    if (!p.timelike()) throw DomainError("frame_matrices: point not inside the light cone");
    const int n = p.dim + 1;
    FrameMatrix fm;
    fm.dim = p.dim;
    fm.phi = SmallMat::identity(n);
    fm.psi = SmallMat::identity(n);
    for (int a = 1; a < n; ++a) {
        fm.phi(a, 0) = p.x[a - 1] / p.t;
        fm.psi(a, 0) = -p.x[a - 1] / p.t;
    }
    return fm;
}

FrameMinkowski frame_minkowski(const SpacetimePoint& p) {
    if (!p.timelike()) throw DomainError("frame_minkowski: point not inside the light cone");
    const int n = p.dim + 1;
    FrameMinkowski fmk;
    fmk.dim = p.dim;
    fmk.upper = SmallMat::zero(n);
    fmk.upper(0, 0) = (p.s * p.s) / (p.t * p.t);
    for (int a = 1; a < n; ++a) {
        fmk.upper(0, a) = p.x[a - 1] / p.t;
        fmk.upper(a, 0) = p.x[a - 1] / p.t;
        fmk.upper(a, a) = -1.0;
    }
    fmk.lower = inverse(fmk.upper);
    return fmk;
}

SmallMat minkowski_frame_conjugation(const SpacetimePoint& p, Signature sig) {
    const FrameMatrix fm = frame_matrices(p);
    SmallMat diag = SmallMat::identity(p.dim + 1);
    if (sig == Signature::MostlyMinus) {
        for (int a = 1; a <= p.dim; ++a) diag(a, a) = -1.0;
    } else {
        diag(0, 0) = -1.0;
    }
    return transpose(fm.psi) * diag * fm.psi;
}

SmallMat tensor_to_frame(const SmallMat& t_upper_cartesian, const SpacetimePoint& p) {
    const FrameMatrix fm = frame_matrices(p);
    return transpose(fm.psi) * t_upper_cartesian * fm.psi;
}

std::array<double, 3> frame_first_derivatives(const CartesianJet& jet, const SpacetimePoint& p) {
    std::array<double, 3> u{};
    u[0] = jet.at(1, 0, 0);
    u[1] = (p.x[0] / p.t) * u[0] + jet.at(0, 1, 0);
    u[2] = (p.x[1] / p.t) * u[0] + jet.at(0, 0, 1);
    return u;
}

void frame_second_derivatives(const CartesianJet& jet, const SpacetimePoint& p, double ff[3][3]) {
    const double t = p.t;
    const double X[2] = {p.x[0] / t, p.x[1] / t};
    const double d0 = jet.at(1, 0, 0);
    const double dtt = jet.at(2, 0, 0);
    const double dta[2] = {jet.at(1, 1, 0), jet.at(1, 0, 1)};
    const double dab[2][2] = {{jet.at(0, 2, 0), jet.at(0, 1, 1)},
                              {jet.at(0, 1, 1), jet.at(0, 0, 2)}};

    ff[0][0] = dtt;
    for (int b = 0; b < 2; ++b) {
        // D_0 D_b picks up the t-derivative of the frame coefficient x^b/t;
        // D_b D_0 applies the frame field to d_t phi with no extra term.
        ff[0][b + 1] = -(X[b] / t) * d0 + X[b] * dtt + dta[b];
        ff[b + 1][0] = X[b] * dtt + dta[b];
    }
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const double delta = (a == b) ? 1.0 : 0.0;
            ff[a + 1][b + 1] = X[a] * X[b] * dtt + X[a] * dta[b] + X[b] * dta[a] + dab[a][b] +
                               (delta / t) * d0 - (X[a] * X[b] / t) * d0;
        }
}

double second_order_frame_decomposition(const SmallMat& t_upper_cartesian, const CartesianJet& jet,
                                        const SpacetimePoint& p) {
    const SmallMat tf = tensor_to_frame(t_upper_cartesian, p);
    double ff[3][3];
    frame_second_derivatives(jet, p, ff);
    const double u0 = jet.at(1, 0, 0);

    double val = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) val += tf(i, j) * ff[i][j];

    double corr = 0.0;
    for (int b = 0; b < 2; ++b) corr += t_upper_cartesian(0, b + 1) * p.x[b] / (p.t * p.t);
    for (int a = 1; a <= 2; ++a) corr -= t_upper_cartesian(a, a) / p.t;
    return val + corr * u0;
}

// ---------------------------------------------------------------------------
// DiffOp
// ---------------------------------------------------------------------------

DiffOp DiffOp::identity() {
    DiffOp op;
    op.terms_.push_back(DiffOpTerm{1.0, 0, 0, 0, 0, 0, 0});
    return op;
}

DiffOp DiffOp::generator(VectorFieldId f) {
    DiffOp op;
    if (f.kind == VectorFieldKind::Translation) {
        DiffOpTerm t{};
        t.c = 1.0;
        if (f.index == 0)
            t.it = 1;
        else if (f.index == 1)
            t.i1 = 1;
        else if (f.index == 2)
            t.i2 = 1;
        else
            throw DomainError("translation index out of range");
        op.terms_.push_back(t);
    } else {
        if (f.index < 1 || f.index > 2) throw DomainError("boost index out of range");
        DiffOpTerm a{}, b{};
        a.c = 1.0;  // x^a d_t
        if (f.index == 1)
            a.p1 = 1;
        else
            a.p2 = 1;
        a.it = 1;
        b.c = 1.0;  // t d_a
        b.pt = 1;
        if (f.index == 1)
            b.i1 = 1;
        else
            b.i2 = 1;
        op.terms_.push_back(a);
        op.terms_.push_back(b);
    }
    return op;
}

DiffOp DiffOp::word(const VectorFieldWord& w) {
    DiffOp op = identity();
    // Leftmost entry applied last: compose left-to-right so that the final
    // operator is w[0] ∘ w[1] ∘ ... ∘ w.back().
    for (const VectorFieldId& id : w) op = op.compose(generator(id));
    return op;
}

namespace {
// d^k/dy^k y^p = p!/(p-k)! y^{p-k}; returns the falling-factorial coefficient.
double falling(int p, int k) {
    if (k > p) return 0.0;
    double f = 1.0;
    for (int i = 0; i < k; ++i) f *= double(p - i);
    return f;
}
long long binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}
}  // namespace

DiffOp DiffOp::compose(const DiffOp& other) const {
    // (c_a m_a D_a) ∘ (c_b m_b D_b) applied to phi:
    // D_a must be Leibniz-expanded over the monomial m_b.
    DiffOp out;
    for (const DiffOpTerm& A : terms_) {
        for (const DiffOpTerm& B : other.terms_) {
            for (int jt = 0; jt <= A.it; ++jt) {
                const double ft = falling(B.pt, jt);
                if (ft == 0.0) continue;
                for (int j1 = 0; j1 <= A.i1; ++j1) {
                    const double f1 = falling(B.p1, j1);
                    if (f1 == 0.0) continue;
                    for (int j2 = 0; j2 <= A.i2; ++j2) {
                        const double f2 = falling(B.p2, j2);
                        if (f2 == 0.0) continue;
                        DiffOpTerm T{};
                        T.c = A.c * B.c * ft * f1 * f2 * double(binom(A.it, jt)) *
                              double(binom(A.i1, j1)) * double(binom(A.i2, j2));
                        T.pt = A.pt + B.pt - jt;
                        T.p1 = A.p1 + B.p1 - j1;
                        T.p2 = A.p2 + B.p2 - j2;
                        T.it = A.it - jt + B.it;
                        T.i1 = A.i1 - j1 + B.i1;
                        T.i2 = A.i2 - j2 + B.i2;
                        out.terms_.push_back(T);
                    }
                }
            }
        }
    }
    out.merge_terms();
    return out;
}

void DiffOp::merge_terms() {
    auto key = [](const DiffOpTerm& t) {
        return ((((long(t.pt) * 8 + t.p1) * 8 + t.p2) * 8 + t.it) * 8 + t.i1) * 8 + t.i2;
    };
    std::sort(terms_.begin(), terms_.end(),
              [&](const DiffOpTerm& a, const DiffOpTerm& b) { return key(a) < key(b); });
    std::vector<DiffOpTerm> merged;
    for (const DiffOpTerm& t : terms_) {
        if (!merged.empty() && key(merged.back()) == key(t))
            merged.back().c += t.c;
        else
            merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const DiffOpTerm& t) { return t.c == 0.0; }),
                 merged.end());
    terms_ = std::move(merged);
}

int DiffOp::max_derivative_order() const {
    int m = 0;
    for (const DiffOpTerm& t : terms_) m = std::max(m, t.it + t.i1 + t.i2);
    return m;
}

double DiffOp::apply(const CartesianJet& jet, const SpacetimePoint& p) const {
    double powt[9], pow1[9], pow2[9];
    powt[0] = pow1[0] = pow2[0] = 1.0;
    for (int k = 1; k < 9; ++k) {
        powt[k] = powt[k - 1] * p.t;
        pow1[k] = pow1[k - 1] * p.x[0];
        pow2[k] = pow2[k - 1] * p.x[1];
    }
    double v = 0.0;
    for (const DiffOpTerm& t : terms_) {
        if (t.it + t.i1 + t.i2 > jet.order)
            throw InsufficientHistoryError("jet order too low for operator evaluation");
        v += t.c * powt[t.pt] * pow1[t.p1] * pow2[t.p2] * jet.at(t.it, t.i1, t.i2);
    }
    return v;
}

double apply_vector_field(const VectorFieldWord& word, const CartesianJet& jet,
                          const SpacetimePoint& p) {
    return DiffOp::word(word).apply(jet, p);
}

std::vector<VectorFieldWord> vector_field_words(int max_len) {
    const std::array<VectorFieldId, 5> gen = {
        VectorFieldId::translation(0), VectorFieldId::translation(1),
        VectorFieldId::translation(2), VectorFieldId::boost(1), VectorFieldId::boost(2)};
    std::vector<VectorFieldWord> out;
    out.push_back({});
    std::vector<VectorFieldWord> prev = {{}};
    for (int len = 1; len <= max_len; ++len) {
        std::vector<VectorFieldWord> cur;
        for (const VectorFieldWord& w : prev)
            for (const VectorFieldId& g : gen) {
                VectorFieldWord nw = w;
                nw.push_back(g);
                cur.push_back(nw);
            }
        for (const VectorFieldWord& w : cur) out.push_back(w);
        prev = std::move(cur);
    }
    return out;
}

}  // namespace membrane
