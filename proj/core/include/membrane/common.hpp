#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace membrane {

// ---------------------------------------------------------------------------
// Error taxonomy.
//
// ConfigError      : rejected configuration or malformed input file
// DomainError      : a point or argument outside the mathematical domain
// DegeneracyError  : the quasilinear time coefficient left its safe window
// BlowupError      : non-finite field values appeared during evolution
// InsufficientHistoryError : a slice or jet needs more time levels than stored
// IoError          : filesystem / serialization failures
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct DegeneracyError : Error {
    double time = 0.0;
    double min_abs_coefficient = 0.0;
    DegeneracyError(double t, double min_abs)
        : Error("principal time coefficient degenerated: |A| = " +
                std::to_string(min_abs) + " at t = " + std::to_string(t)),
          time(t),
          min_abs_coefficient(min_abs) {}
};

struct BlowupError : Error {
    double last_good_time = 0.0;
    double sup_phi = 0.0;
    double sup_psi = 0.0;
    BlowupError(double t, double sp, double sv)
        : Error("non-finite field values after t = " + std::to_string(t)),
          last_good_time(t),
          sup_phi(sp),
          sup_psi(sv) {}
};

struct InsufficientHistoryError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Spacetime points.
//
// All diagnostics live inside the forward light cone K = { r < t - 1 }.
// A point caches the spatial radius r = |x| and the hyperboloidal time
// s = sqrt(t^2 - r^2) of the hyperboloid H_s through it.
// ---------------------------------------------------------------------------

inline constexpr int max_spatial_dim = 3;

struct SpacetimePoint {
    int dim = 2;
    double t = 0.0;
    std::array<double, max_spatial_dim> x{};
    double r = 0.0;
    double s = 0.0;

    static SpacetimePoint cartesian(double t, double x1, double x2) {
        SpacetimePoint p;
        p.dim = 2;
        p.t = t;
        p.x = {x1, x2, 0.0};
        p.finish();
        return p;
    }

    static SpacetimePoint cartesian3(double t, double x1, double x2, double x3) {
        SpacetimePoint p;
        p.dim = 3;
        p.t = t;
        p.x = {x1, x2, x3};
        p.finish();
        return p;
    }

    // A radial point is placed on the first coordinate axis; by rotational
    // symmetry this loses nothing for profile diagnostics.
    static SpacetimePoint radial(double t, double r, int dim) {
        SpacetimePoint p;
        p.dim = dim;
        p.t = t;
        p.x = {r, 0.0, 0.0};
        p.finish();
        return p;
    }

    bool inside_cone(double margin = 0.0) const { return r < t - 1.0 - margin; }
    bool timelike() const { return t > r; }

  private:
    void finish() {
        double rr = 0.0;
        for (int a = 0; a < dim; ++a) rr += x[a] * x[a];
        r = std::sqrt(rr);
        const double q = t * t - rr;
        if (q <= 0.0)
            throw DomainError("spacetime point is not inside the light cone of the origin (t <= |x|)");
        s = std::sqrt(q);
    }
};

// ---------------------------------------------------------------------------
// Dense (dim+1)x(dim+1) matrices for spacetime tensors, dim <= 3.
// ---------------------------------------------------------------------------

struct SmallMat {
    int n = 3;  // active size: spatial dim + 1
    std::array<std::array<double, max_spatial_dim + 1>, max_spatial_dim + 1> a{};

    double& operator()(int i, int j) { return a[i][j]; }
    double operator()(int i, int j) const { return a[i][j]; }

    static SmallMat zero(int n) {
        SmallMat m;
        m.n = n;
        return m;
    }
    static SmallMat identity(int n) {
        SmallMat m = zero(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    // diag(-1, +1, ..., +1): the flat metric in both index positions.
    static SmallMat minkowski(int n) {
        SmallMat m = identity(n);
        m(0, 0) = -1.0;
        return m;
    }
};

inline SmallMat operator*(const SmallMat& A, const SmallMat& B) {
    SmallMat C = SmallMat::zero(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int k = 0; k < A.n; ++k) {
            const double aik = A(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < A.n; ++j) C(i, j) += aik * B(k, j);
        }
    return C;
}

inline SmallMat operator+(const SmallMat& A, const SmallMat& B) {
    SmallMat C = SmallMat::zero(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) C(i, j) = A(i, j) + B(i, j);
    return C;
}

inline SmallMat operator-(const SmallMat& A, const SmallMat& B) {
    SmallMat C = SmallMat::zero(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) C(i, j) = A(i, j) - B(i, j);
    return C;
}

inline SmallMat operator*(double c, const SmallMat& A) {
    SmallMat C = SmallMat::zero(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) C(i, j) = c * A(i, j);
    return C;
}

inline SmallMat transpose(const SmallMat& A) {
    SmallMat C = SmallMat::zero(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) C(i, j) = A(j, i);
    return C;
}

inline double max_abs_diff(const SmallMat& A, const SmallMat& B) {
    double m = 0.0;
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) m = std::max(m, std::abs(A(i, j) - B(i, j)));
    return m;
}

// Gaussian elimination with partial pivoting; throws DomainError on a
// (numerically) singular matrix.
inline SmallMat inverse(const SmallMat& A) {
    const int n = A.n;
    std::array<std::array<double, 8>, 4> w{};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) w[i][j] = A(i, j);
        for (int j = 0; j < n; ++j) w[i][n + j] = (i == j) ? 1.0 : 0.0;
    }
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(w[r][c]) > std::abs(w[piv][c])) piv = r;
        if (std::abs(w[piv][c]) < 1e-300) throw DomainError("singular matrix in inverse()");
        std::swap(w[piv], w[c]);
        const double inv = 1.0 / w[c][c];
        for (int j = 0; j < 2 * n; ++j) w[c][j] *= inv;
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = w[r][c];
            if (f == 0.0) continue;
            for (int j = 0; j < 2 * n; ++j) w[r][j] -= f * w[c][j];
        }
    }
    SmallMat out = SmallMat::zero(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = w[i][n + j];
    return out;
}

// FNV-1a, used to fingerprint configurations in output bundles/checkpoints.
inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace membrane
