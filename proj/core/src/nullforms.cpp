#include "membrane/nullforms.hpp"

#include <cmath>

#include "membrane/constants.hpp"

namespace membrane {

DerivativeBundle DerivativeBundle::from_cartesian(const CartesianJet& jet,
                                                  const SpacetimePoint& p) {
    DerivativeBundle b;
    b.cart = jet;
    const auto u = frame_first_derivatives(jet, p);
    b.u[0] = u[0];
    b.u[1] = u[1];
    b.u[2] = u[2];
    frame_second_derivatives(jet, p, b.ff);
    return b;
}

double cubic_flat_cartesian(const CartesianJet& jet) {
    const double d[3] = {jet.at(1, 0, 0), jet.at(0, 1, 0), jet.at(0, 0, 1)};
    const double dd[3][3] = {{jet.at(2, 0, 0), jet.at(1, 1, 0), jet.at(1, 0, 1)},
                             {jet.at(1, 1, 0), jet.at(0, 2, 0), jet.at(0, 1, 1)},
                             {jet.at(1, 0, 1), jet.at(0, 1, 1), jet.at(0, 0, 2)}};
    const double msig[3] = {-1.0, 1.0, 1.0};
    // Q = m^{ab} d_a d_b,  box-part = m^{gd} dd_{gd},  v^g = m^{ga} d_a.
    double q = 0.0, box = 0.0;
    for (int a = 0; a < 3; ++a) {
        q += msig[a] * d[a] * d[a];
        box += msig[a] * dd[a][a];
    }
    double second = 0.0;
    for (int g = 0; g < 3; ++g)
        for (int e = 0; e < 3; ++e) second += (msig[g] * d[g]) * (msig[e] * d[e]) * dd[g][e];
    return q * box - second;
}

double cubic_flat_magnitude(const CartesianJet& jet) {
    const double d[3] = {jet.at(1, 0, 0), jet.at(0, 1, 0), jet.at(0, 0, 1)};
    const double dd[3][3] = {{jet.at(2, 0, 0), jet.at(1, 1, 0), jet.at(1, 0, 1)},
                             {jet.at(1, 1, 0), jet.at(0, 2, 0), jet.at(0, 1, 1)},
                             {jet.at(1, 0, 1), jet.at(0, 1, 1), jet.at(0, 0, 2)}};
    double q = 0.0, box = 0.0;
    for (int a = 0; a < 3; ++a) {
        q += d[a] * d[a];
        box += std::abs(dd[a][a]);
    }
    double second = 0.0;
    for (int g = 0; g < 3; ++g)
        for (int e = 0; e < 3; ++e) second += std::abs(d[g]) * std::abs(d[e]) * std::abs(dd[g][e]);
    return q * box + second;
}

double cubic_flat_frame(const DerivativeBundle& b, const SpacetimePoint& p) {
    const double t = p.t;
    const double X1 = p.x[0] / t, X2 = p.x[1] / t;
    const double U0 = b.u[0], U1 = b.u[1], U2 = b.u[2];
    const double F00 = b.ff[0][0];
    const double F10 = b.ff[1][0], F20 = b.ff[2][0];
    const double F11 = b.ff[1][1], F22 = b.ff[2][2];
    const double F12 = b.ff[1][2];  // = ff[2][1]: spatial frame fields commute
    const double S2 = 1.0 - X1 * X1 - X2 * X2;  // (s/t)^2

    double v = 0.0;
    // Second-order block: every coefficient carries (s/t)^2-type or x/t
    // suppression except the purely good-derivative combinations.
    v += U2 * U2 * (F11 - 2.0 * X1 * F10 - (1.0 - X1 * X1) * F00);
    v += U1 * U2 *
         (-2.0 * F12 + 2.0 * X1 * F20 + 2.0 * X2 * F10 - 2.0 * X1 * X2 * F00);
    v += U1 * U1 * (F22 - 2.0 * X2 * F20 - (1.0 - X2 * X2) * F00);
    v += U0 * U2 *
         (2.0 * X1 * F12 - 2.0 * X2 * F11 + (2.0 - 2.0 * X1 * X1) * F20 + 2.0 * X1 * X2 * F10);
    v += U0 * U1 *
         (-2.0 * X1 * F22 + 2.0 * X2 * F12 + 2.0 * X1 * X2 * F20 + (2.0 - 2.0 * X2 * X2) * F10);
    v += U0 * U0 * (-(1.0 - X1 * X1) * F22 - 2.0 * X1 * X2 * F12 - (1.0 - X2 * X2) * F11);
    // First-order block from the frame-coefficient derivatives.
    v += (U0 / t) * ((-1.0 + X1 * X1) * U2 * U2 - 2.0 * X1 * X2 * U1 * U2 +
                     (-1.0 + X2 * X2) * U1 * U1);
    v += (U0 * U0 / t) * (2.0 * X2 * U2 + 2.0 * X1 * U1);
    v += (U0 * U0 * U0 / t) * 2.0 * S2;
    return v;
}

double double_null_bound(const DerivativeBundle& b, const SpacetimePoint& p) {
    const double t = p.t;
    const double s2t2 = (p.s / t) * (p.s / t);
    const double a0 = std::abs(b.u[0]);
    const double a1 = std::abs(b.u[1]);
    const double a2 = std::abs(b.u[2]);
    const double all = a0 + a1 + a2;
    const double good = a1 + a2;

    double good_second_any = 0.0;  // |ff_{i alpha}|, i spatial
    for (int i = 1; i < 3; ++i)
        for (int al = 0; al < 3; ++al) good_second_any += std::abs(b.ff[i][al]);
    double good_second_spatial = 0.0;  // |ff_{ij}|, both spatial
    for (int i = 1; i < 3; ++i)
        for (int j = 1; j < 3; ++j) good_second_spatial += std::abs(b.ff[i][j]);

    const double g1 = s2t2 * a0 * a0 * a0 / t;
    const double g2 = all * all * good / t;
    const double g3 = all * all * good_second_spatial;
    const double g4 = good * all * good_second_any;
    return null_bound_constant * (g1 + g2 + g3 + g4);
}

CoefficientTensors coefficient_tensors(const MetricSample& ms) {
    CoefficientTensors ct;
    const double msig[3] = {-1.0, 1.0, 1.0};
    const SmallMat& g = ms.g_upper;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d) {
                    const double mab = (a == b) ? msig[a] : 0.0;
                    const double mcd = (c == d) ? msig[c] : 0.0;
                    const double mca = (c == a) ? msig[c] : 0.0;
                    const double mdb = (d == b) ? msig[d] : 0.0;
                    ct.T[a][b][c][d] = mab * mcd - mca * mdb;
                    ct.D4[a][b][c][d] = (g(a, b) * g(c, d) - mab * mcd) -
                                        (g(c, a) * g(d, b) - mca * mdb);
                }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                double v = g(a, b) * ms.contracted[c];
                for (int m = 0; m < 3; ++m)
                    for (int n = 0; n < 3; ++n) v -= g(m, a) * g(n, b) * ms.christoffel[c][m][n];
                ct.D3[a][b][c] = v;
            }
    return ct;
}

double correction_terms(const CoefficientTensors& ct, const DerivativeBundle& b,
                        const SpacetimePoint& p) {
    const double d[3] = {b.cart.at(1, 0, 0), b.cart.at(0, 1, 0), b.cart.at(0, 0, 1)};
    // Effective second-order coefficient E^{gd} = D4^{ab gd} d_a d_b,
    // evaluated through the frame so the degenerate direction is explicit.
    SmallMat E = SmallMat::zero(3);
    for (int g = 0; g < 3; ++g)
        for (int e = 0; e < 3; ++e) {
            double v = 0.0;
            for (int a = 0; a < 3; ++a)
                for (int bb = 0; bb < 3; ++bb) v += ct.D4[a][bb][g][e] * d[a] * d[bb];
            E(g, e) = v;
        }
    double val = second_order_frame_decomposition(E, b.cart, p);
    for (int a = 0; a < 3; ++a)
        for (int bb = 0; bb < 3; ++bb)
            for (int g = 0; g < 3; ++g) val += ct.D3[a][bb][g] * d[a] * d[bb] * d[g];
    return val;
}

double linear_variable_terms(const MetricSample& ms, const DerivativeBundle& b) {
    const double msig[3] = {-1.0, 1.0, 1.0};
    const double d[3] = {b.cart.at(1, 0, 0), b.cart.at(0, 1, 0), b.cart.at(0, 0, 1)};
    const double dd[3][3] = {{b.cart.at(2, 0, 0), b.cart.at(1, 1, 0), b.cart.at(1, 0, 1)},
                             {b.cart.at(1, 1, 0), b.cart.at(0, 2, 0), b.cart.at(0, 1, 1)},
                             {b.cart.at(1, 0, 1), b.cart.at(0, 1, 1), b.cart.at(0, 0, 2)}};
    double v = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double mij = (i == j) ? msig[i] : 0.0;
            v += (ms.g_upper(i, j) - mij) * dd[i][j];
        }
    for (int m = 0; m < 3; ++m) v += ms.contracted[m] * d[m];
    return v;
}

double semilinear_rhs(const MetricSample& ms, const CartesianJet& jet) {
    const double d[3] = {jet.at(1, 0, 0), jet.at(0, 1, 0), jet.at(0, 0, 1)};
    const SmallMat& g = ms.g_upper;
    double v = 0.0;
    for (int m = 0; m < 3; ++m) v += ms.contracted[m] * d[m];
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const double dab = d[a] * d[b];
            if (dab == 0.0) continue;
            for (int m = 0; m < 3; ++m) v += g(a, b) * ms.contracted[m] * dab * d[m];
        }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int m = 0; m < 3; ++m)
                for (int n = 0; n < 3; ++n) {
                    const double gg = g(m, a) * g(n, b);
                    if (gg == 0.0) continue;
                    for (int c = 0; c < 3; ++c)
                        v -= gg * ms.christoffel[c][m][n] * d[a] * d[b] * d[c];
                }
    return v;
}

SmallMat quadratic_coefficients(const MetricSample& ms, const CartesianJet& jet) {
    const double msig[3] = {-1.0, 1.0, 1.0};
    const double d[3] = {jet.at(1, 0, 0), jet.at(0, 1, 0), jet.at(0, 0, 1)};
    const SmallMat& g = ms.g_upper;
    double q = 0.0;  // g^{ab} d_a d_b
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) q += g(a, b) * d[a] * d[b];
    double gd[3] = {};  // (g d)^m
    for (int m = 0; m < 3; ++m)
        for (int a = 0; a < 3; ++a) gd[m] += g(m, a) * d[a];
    SmallMat G = SmallMat::zero(3);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            const double mmn = (m == n) ? msig[m] : 0.0;
            G(m, n) = (g(m, n) - mmn) + q * g(m, n) - gd[m] * gd[n];
        }
    return G;
}

}  // namespace membrane
