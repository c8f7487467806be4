#pragma once

#include <array>
#include <memory>

#include "membrane/frames.hpp"

namespace membrane {

// ---------------------------------------------------------------------------
// Smooth scalar fields on (t, x1, x2) with closed-form mixed derivatives.
// These drive tests (frame identities, null-form corpora, slice extraction)
// and manufactured-solution runs, so the jets must be exact, not numerical.
// ---------------------------------------------------------------------------

class AnalyticField {
  public:
    virtual ~AnalyticField() = default;

    // d_t^it d_1^i1 d_2^i2 of the field at (t, x1, x2).
    virtual double jet(double t, double x1, double x2, int it, int i1, int i2) const = 0;

    double value(double t, double x1, double x2) const { return jet(t, x1, x2, 0, 0, 0); }

    CartesianJet jet_to_order(const SpacetimePoint& p, int order) const;
};

// amplitude * exp(-((t-ct)^2/wt^2 + (x1-c1)^2/w1^2 + (x2-c2)^2/w2^2)).
// Derivatives via Hermite polynomials, exact to any order.
class GaussianField final : public AnalyticField {
  public:
    GaussianField(double amplitude, std::array<double, 3> center, std::array<double, 3> width);
    double jet(double t, double x1, double x2, int it, int i1, int i2) const override;

  private:
    double amp_;
    std::array<double, 3> c_, w_;
};

// amplitude * cos(w t + k1 x1 + k2 x2 + phase): each derivative multiplies by
// the matching frequency and shifts the phase by pi/2.
class TrigField final : public AnalyticField {
  public:
    TrigField(double amplitude, double omega, double k1, double k2, double phase);
    double jet(double t, double x1, double x2, int it, int i1, int i2) const override;

  private:
    double amp_, omega_, k1_, k2_, phase_;
};

// Sum of monomials c * t^a x1^b x2^c.
class PolynomialField final : public AnalyticField {
  public:
    struct Monomial {
        double c;
        int pt, p1, p2;
    };
    explicit PolynomialField(std::vector<Monomial> monomials);
    double jet(double t, double x1, double x2, int it, int i1, int i2) const override;

  private:
    std::vector<Monomial> mono_;
};

// Pointwise product with Leibniz-expanded jets (e.g. wave packet = trig * gaussian).
class ProductField final : public AnalyticField {
  public:
    ProductField(std::shared_ptr<const AnalyticField> a, std::shared_ptr<const AnalyticField> b);
    double jet(double t, double x1, double x2, int it, int i1, int i2) const override;

  private:
    std::shared_ptr<const AnalyticField> a_, b_;
};

// A fixed five-field corpus of qualitatively different smooth fields, used by
// null-form cross-validation and calibration corpora.
std::vector<std::shared_ptr<const AnalyticField>> analytic_field_corpus();

}  // namespace membrane
