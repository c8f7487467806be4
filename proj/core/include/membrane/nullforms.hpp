#pragma once

#include "membrane/frames.hpp"
#include "membrane/metrics.hpp"

namespace membrane {

// ---------------------------------------------------------------------------
// The membrane nonlinearity (signature -++).
//
// With Q[phi] = m^{alpha beta} d_alpha phi d_beta phi, the flat cubic
// principal nonlinearity is
//     N[phi] = (m^{ab} m^{gd} - m^{ga} m^{db}) d_a phi d_b phi d_g d_d phi,
// and the evolution equation reads (m + G)^{ab} d_a d_b phi = F with the
// quadratic coefficient correction G and semilinear F induced by a curved
// background g.  This module evaluates N in two independent ways (Cartesian
// contraction vs. the expansion through the semi-hyperboloidal frame), the
// null-structure bound that controls it, and the curved-background
// corrections split off from the flat part.
// ---------------------------------------------------------------------------

struct DerivativeBundle {
    CartesianJet cart;      // Cartesian jets, order >= 2
    double u[3] = {};       // frame first derivatives
    double ff[3][3] = {};   // operator-ordered frame second derivatives

    static DerivativeBundle from_cartesian(const CartesianJet& jet, const SpacetimePoint& p);
};

// Flat cubic via direct Cartesian contraction.
double cubic_flat_cartesian(const CartesianJet& jet);

// Flat cubic via the frame expansion (good-derivative form); algebraically
// identical to cubic_flat_cartesian inside the cone.
double cubic_flat_frame(const DerivativeBundle& b, const SpacetimePoint& p);

// Sum of absolute values of the Cartesian contraction terms: the natural
// scale against which cancellation between the two cubic routes is measured.
double cubic_flat_magnitude(const CartesianJet& jet);

// Null-structure majorant: C * (group1 + ... + group4), where every group is
// built only from (s/t)-weighted, good-derivative, or t^{-1}-suppressed
// factors.  The constant is calibrated against a fixed corpus (see
// constants.hpp) and the calibration is re-checked by the test suite.
double double_null_bound(const DerivativeBundle& b, const SpacetimePoint& p);

// Coefficient tensors of the equation on a background g:
//   T^{ab gd}  = m^{ab} m^{gd} - m^{ga} m^{db}                  (flat cubic)
//   D4^{ab gd} = (g^{ab} g^{gd} - m^{ab} m^{gd})
//                - (g^{ga} g^{db} - m^{ga} m^{db})              (cubic, 2nd order)
//   D3^{ab g}  = g^{ab} Gamma^g - g^{ma} g^{nb} Gamma^g_{mn}    (cubic, 1st order)
// where (ab) contract first derivatives and (gd) the second derivative /
// (g) the remaining first derivative.
struct CoefficientTensors {
    double T[3][3][3][3] = {};
    double D4[3][3][3][3] = {};
    double D3[3][3][3] = {};
};

CoefficientTensors coefficient_tensors(const MetricSample& ms);

// Cubic curved-minus-flat terms: D4^{ab gd} d_a phi d_b phi d_g d_d phi
// (second-order part evaluated through the frame decomposition) plus
// D3^{ab g} d_a phi d_b phi d_g phi.  Vanishes identically on Minkowski.
double correction_terms(const CoefficientTensors& ct, const DerivativeBundle& b,
                        const SpacetimePoint& p);

// Linear variable-coefficient terms: (g - m)^{mn} d_m d_n phi + Gamma^m d_m phi.
double linear_variable_terms(const MetricSample& ms, const DerivativeBundle& b);

// Full semilinear right-hand side F on a background g:
//   F = Gamma^m d_m phi + g^{ab} Gamma^m d_a phi d_b phi d_m phi
//       - g^{ma} g^{nb} Gamma^g_{mn} d_a phi d_b phi d_g phi.
double semilinear_rhs(const MetricSample& ms, const CartesianJet& jet);

// Quadratic coefficient correction G^{mn} (so the equation has principal
// part (m + G_flat_quadratic + (g-m) + D4-contraction)):
//   G^{mn} = (g - m)^{mn} + g^{ab} g^{mn} d_a phi d_b phi
//            - g^{ma} g^{nb} d_a phi d_b phi.
SmallMat quadratic_coefficients(const MetricSample& ms, const CartesianJet& jet);

}  // namespace membrane
