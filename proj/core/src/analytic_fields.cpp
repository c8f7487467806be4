#include "membrane/analytic_fields.hpp"

#include <cmath>

namespace membrane {

CartesianJet AnalyticField::jet_to_order(const SpacetimePoint& p, int order) const {
    if (order > 4) throw DomainError("jet_to_order: order > 4 not stored");
    CartesianJet j;
    j.order = order;
    for (int it = 0; it <= order; ++it)
        for (int i1 = 0; i1 + it <= order; ++i1)
            for (int i2 = 0; i2 + i1 + it <= order; ++i2)
                j.at(it, i1, i2) = jet(p.t, p.x[0], p.x[1], it, i1, i2);
    return j;
}

namespace {
// Physicists' Hermite polynomial H_n(z).
double hermite(int n, double z) {
    double h0 = 1.0, h1 = 2.0 * z;
    if (n == 0) return h0;
    if (n == 1) return h1;
    for (int k = 1; k < n; ++k) {
        const double h2 = 2.0 * z * h1 - 2.0 * double(k) * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

// d^n/dy^n exp(-(y/w)^2) = (-1/w)^n H_n(y/w) exp(-(y/w)^2).
double gauss_deriv(double y, double w, int n) {
    const double z = y / w;
    double scale = 1.0;
    for (int k = 0; k < n; ++k) scale *= -1.0 / w;
    return scale * hermite(n, z) * std::exp(-z * z);
}
}  // namespace

GaussianField::GaussianField(double amplitude, std::array<double, 3> center,
                             std::array<double, 3> width)
    : amp_(amplitude), c_(center), w_(width) {}

double GaussianField::jet(double t, double x1, double x2, int it, int i1, int i2) const {
    return amp_ * gauss_deriv(t - c_[0], w_[0], it) * gauss_deriv(x1 - c_[1], w_[1], i1) *
           gauss_deriv(x2 - c_[2], w_[2], i2);
}

TrigField::TrigField(double amplitude, double omega, double k1, double k2, double phase)
    : amp_(amplitude), omega_(omega), k1_(k1), k2_(k2), phase_(phase) {}

double TrigField::jet(double t, double x1, double x2, int it, int i1, int i2) const {
    const int n = it + i1 + i2;
    double f = amp_;
    for (int k = 0; k < it; ++k) f *= omega_;
    for (int k = 0; k < i1; ++k) f *= k1_;
    for (int k = 0; k < i2; ++k) f *= k2_;
    const double arg = omega_ * t + k1_ * x1 + k2_ * x2 + phase_ + 0.5 * M_PI * double(n);
    return f * std::cos(arg);
}

PolynomialField::PolynomialField(std::vector<Monomial> monomials) : mono_(std::move(monomials)) {}

namespace {
double poly_deriv(double y, int p, int k) {
    if (k > p) return 0.0;
    double f = 1.0;
    for (int i = 0; i < k; ++i) f *= double(p - i);
    return f * std::pow(y, p - k);
}
}  // namespace

double PolynomialField::jet(double t, double x1, double x2, int it, int i1, int i2) const {
    double v = 0.0;
    for (const Monomial& m : mono_)
        v += m.c * poly_deriv(t, m.pt, it) * poly_deriv(x1, m.p1, i1) * poly_deriv(x2, m.p2, i2);
    return v;
}

ProductField::ProductField(std::shared_ptr<const AnalyticField> a,
                           std::shared_ptr<const AnalyticField> b)
    : a_(std::move(a)), b_(std::move(b)) {}

namespace {
long long binom_ll(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}
}  // namespace

double ProductField::jet(double t, double x1, double x2, int it, int i1, int i2) const {
    double v = 0.0;
    for (int jt = 0; jt <= it; ++jt)
        for (int j1 = 0; j1 <= i1; ++j1)
            for (int j2 = 0; j2 <= i2; ++j2) {
                const double c = double(binom_ll(it, jt) * binom_ll(i1, j1) * binom_ll(i2, j2));
                v += c * a_->jet(t, x1, x2, jt, j1, j2) *
                     b_->jet(t, x1, x2, it - jt, i1 - j1, i2 - j2);
            }
    return v;
}

std::vector<std::shared_ptr<const AnalyticField>> analytic_field_corpus() {
    std::vector<std::shared_ptr<const AnalyticField>> fields;
    fields.push_back(std::make_shared<GaussianField>(
        0.8, std::array<double, 3>{4.0, 0.0, 0.0}, std::array<double, 3>{2.0, 1.5, 1.5}));
    fields.push_back(std::make_shared<GaussianField>(
        -0.5, std::array<double, 3>{6.0, 1.0, -0.7}, std::array<double, 3>{3.0, 1.0, 2.2}));
    fields.push_back(std::make_shared<ProductField>(
        std::make_shared<TrigField>(1.0, 0.9, -0.6, 0.4, 0.3),
        std::make_shared<GaussianField>(0.7, std::array<double, 3>{5.0, -0.5, 0.5},
                                        std::array<double, 3>{2.5, 2.0, 2.0})));
    fields.push_back(std::make_shared<PolynomialField>(std::vector<PolynomialField::Monomial>{
        {3e-3, 1, 2, 0}, {-2e-3, 0, 1, 2}, {1e-3, 2, 1, 0}, {5e-4, 0, 0, 3}, {-1e-3, 1, 1, 1}}));
    fields.push_back(std::make_shared<TrigField>(0.6, 0.45, 0.8, -0.55, 1.1));
    return fields;
}

}  // namespace membrane
