#pragma once

#include <vector>

#include "membrane/common.hpp"

namespace membrane {

// ---------------------------------------------------------------------------
// Semi-hyperboloidal frame.
//
// Inside the cone the frame is
//     D_0 = d_t,         D_a = (x^a/t) d_t + d_a   (a = 1..dim),
// i.e. D = Phi * d with the lower-triangular change-of-frame matrix Phi.
// Psi = Phi^{-1} transforms tensor components the other way.  The spatial
// frame fields D_a are tangent to the hyperboloids H_s ("good" derivatives).
// ---------------------------------------------------------------------------

struct FrameMatrix {
    int dim = 2;
    SmallMat phi;  // frame = phi * coordinate basis
    SmallMat psi;  // psi = phi^{-1}
};

FrameMatrix frame_matrices(const SpacetimePoint& p);

enum class Signature { MostlyPlus, MostlyMinus };

// Components of the flat metric in the semi-hyperboloidal frame, in the
// conventional display
//     upper = [[ s^2/t^2, x^a/t ], [ x^a/t, -delta_ab ]],   lower = upper^{-1}.
// The display equals the Psi-conjugation of diag(+1,-1,..,-1); with the
// mostly-plus diag(-1,+1,..,+1) it acquires an overall minus sign (see
// minkowski_frame_conjugation).
struct FrameMinkowski {
    int dim = 2;
    SmallMat upper;
    SmallMat lower;
};

FrameMinkowski frame_minkowski(const SpacetimePoint& p);

// Psi^T * diag(sig) * Psi; equals +frame_minkowski().upper for MostlyMinus
// and -frame_minkowski().upper for MostlyPlus.
SmallMat minkowski_frame_conjugation(const SpacetimePoint& p, Signature sig);

// Push an upper-index Cartesian 2-tensor to frame components: Psi^T * T * Psi.
SmallMat tensor_to_frame(const SmallMat& t_upper_cartesian, const SpacetimePoint& p);

// ---------------------------------------------------------------------------
// Cartesian jets.
//
// d(it, i1, i2) = d_t^it d_1^i1 d_2^i2 phi, stored to total order <= `order`
// (order <= 4).  The jet is the common currency between analytic fields,
// grid sampling and the differential-operator algebra below.
// ---------------------------------------------------------------------------

struct CartesianJet {
    int order = 3;
    double d[5][5][5] = {};

    double at(int it, int i1, int i2) const { return d[it][i1][i2]; }
    double& at(int it, int i1, int i2) { return d[it][i1][i2]; }
};

// First derivatives in the frame: u[0] = d_t phi, u[a] = D_a phi.
std::array<double, 3> frame_first_derivatives(const CartesianJet& jet, const SpacetimePoint& p);

// Operator-ordered frame second derivatives ff[i][j] = D_i D_j phi (dim = 2).
// These include the derivatives of the frame coefficients, so in general
// ff[0][b] != ff[b][0]; the commutator is [D_0, D_b] = -(x^b/t^2) D_0.
void frame_second_derivatives(const CartesianJet& jet, const SpacetimePoint& p,
                              double ff[3][3]);

// T^{ab} d_a d_b phi re-expressed through frame derivatives:
//   = (Psi^T T Psi)^{ij} D_i D_j phi + (T^{0b} x^b/t^2 - sum_a T^{aa}/t) D_0 phi.
// Returns the contraction evaluated on the jet (equals the Cartesian value).
double second_order_frame_decomposition(const SmallMat& t_upper_cartesian,
                                        const CartesianJet& jet,
                                        const SpacetimePoint& p);

// ---------------------------------------------------------------------------
// Commuting vector fields: translations d_alpha and Lorentz boosts
// L_a = x^a d_t + t d_a.  Composite words act left-to-right, i.e. the
// leftmost entry of the word is applied last.
// ---------------------------------------------------------------------------

enum class VectorFieldKind { Translation, Boost };

struct VectorFieldId {
    VectorFieldKind kind = VectorFieldKind::Translation;
    int index = 0;  // Translation: 0..dim (0 = time); Boost: 1..dim

    static VectorFieldId translation(int alpha) { return {VectorFieldKind::Translation, alpha}; }
    static VectorFieldId boost(int a) { return {VectorFieldKind::Boost, a}; }
};

using VectorFieldWord = std::vector<VectorFieldId>;

// ---------------------------------------------------------------------------
// Linear differential operators with polynomial coefficients,
//     sum_k  c_k  t^{pt} x1^{p1} x2^{p2}  d_t^{it} d_1^{i1} d_2^{i2},
// closed under composition.  This is exactly the algebra generated by
// translations and boosts, and evaluating a composed operator on a Cartesian
// jet gives Z^I phi and its derivatives without nested finite differencing.
// ---------------------------------------------------------------------------

struct DiffOpTerm {
    double c = 0.0;
    int pt = 0, p1 = 0, p2 = 0;  // monomial powers of t, x1, x2
    int it = 0, i1 = 0, i2 = 0;  // derivative orders
};

class DiffOp {
  public:
    static DiffOp identity();
    static DiffOp generator(VectorFieldId f);
    // Composite for a word; word = {Z1, Z2, Z3} builds Z1 ∘ Z2 ∘ Z3
    // (Z3 acts first on the field).
    static DiffOp word(const VectorFieldWord& w);

    // this ∘ other (other acts first).
    DiffOp compose(const DiffOp& other) const;

    int max_derivative_order() const;
    const std::vector<DiffOpTerm>& terms() const { return terms_; }

    // Evaluate on a jet at p; throws InsufficientHistoryError if the jet
    // does not carry enough derivative orders.
    double apply(const CartesianJet& jet, const SpacetimePoint& p) const;

  private:
    std::vector<DiffOpTerm> terms_;
    void merge_terms();
};

// Z^I phi evaluated from a jet.  Convenience wrapper over DiffOp::word.
double apply_vector_field(const VectorFieldWord& word, const CartesianJet& jet,
                          const SpacetimePoint& p);

// All words of length <= max_len over {d_t, d_1, d_2, L_1, L_2} (dim = 2),
// in a fixed deterministic order: by length, then lexicographically in the
// generator order above.
std::vector<VectorFieldWord> vector_field_words(int max_len);

}  // namespace membrane
