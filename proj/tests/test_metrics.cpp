#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "membrane/metrics.hpp"
#include "test_helpers.hpp"

using namespace membrane;
using membrane::testing::ConePointSampler;

namespace {

MetricConfig perturbed_config(double delta, double gamma, PerturbationShape shape) {
    MetricConfig cfg;
    cfg.kind = MetricKind::PerturbedAnalytic;
    cfg.delta = delta;
    cfg.gamma_decay = gamma;
    cfg.shape = shape;
    cfg.amplitude = SmallMat::zero(3);
    cfg.amplitude(0, 0) = 1.0;
    cfg.amplitude(1, 1) = -0.4;
    cfg.amplitude(0, 1) = cfg.amplitude(1, 0) = 0.25;
    cfg.amplitude(2, 2) = 0.6;
    cfg.wave_k = {0.9, -0.6};
    cfg.cutoff_width = 0.5;
    return cfg;
}

}  // namespace

TEST_CASE("Minkowski samples are exactly flat") {
    MetricConfig cfg;  // defaults to Minkowski
    const MetricSample ms = sample_metric(cfg, SpacetimePoint::cartesian(5.0, 1.0, -2.0));
    CHECK(ms.g_upper(0, 0) == -1.0);
    CHECK(ms.g_upper(1, 1) == 1.0);
    CHECK(ms.g_upper(0, 1) == 0.0);
    for (int l = 0; l < 3; ++l)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                CHECK(ms.dg_upper[l][i][j] == 0.0);
                CHECK(ms.christoffel[l][i][j] == 0.0);
            }
    CHECK(ms.contracted[0] == 0.0);
}

TEST_CASE("perturbation value at a hand-computed reference point") {
    // t=5, x=(3,0): s^2 = 16, u = t-r-1 = 1 >= width so chi = 1, and
    // g^{00} = -1 + delta * (s/t)^2 s^{-3/2} * H00 = -1 + 1e-3 * (16/25) * 8^{-1}...
    // with s = 4: s^{-1.5} = 0.125, so the perturbation is 1e-3*0.64*0.125 = 8e-5.
    MetricConfig cfg = perturbed_config(1e-3, 0.5, PerturbationShape::ConstantSymmetric);
    cfg.amplitude = SmallMat::zero(3);
    cfg.amplitude(0, 0) = 1.0;
    const MetricSample ms = sample_metric(cfg, SpacetimePoint::cartesian(5.0, 3.0, 0.0));
    CHECK(ms.g_upper(0, 0) == doctest::Approx(-1.0 + 8e-5).epsilon(1e-12));

    // outside the cone shell (u <= 0): exactly flat
    const MetricSample flat = sample_metric(cfg, SpacetimePoint::cartesian(5.0, 4.2, 0.0));
    CHECK(flat.g_upper(0, 0) == -1.0);
}

TEST_CASE("cutoff is a C^1-verified smoothstep between 0 and 1") {
    const double w = 0.5;
    CHECK(cone_cutoff(-0.1, w) == 0.0);
    CHECK(cone_cutoff(0.0, w) == 0.0);
    CHECK(cone_cutoff(w, w) == 1.0);
    CHECK(cone_cutoff(2.0, w) == 1.0);
    CHECK(cone_cutoff(0.5 * w, w) == doctest::Approx(0.5));  // odd symmetry about midpoint
    for (double u = 0.05; u < w; u += 0.05) {
        const double fd = (cone_cutoff(u + 1e-6, w) - cone_cutoff(u - 1e-6, w)) / 2e-6;
        CHECK(cone_cutoff_derivative(u, w) == doctest::Approx(fd).epsilon(1e-6));
        CHECK(cone_cutoff_derivative(u, w) >= 0.0);
    }
}

TEST_CASE("analytic metric derivatives match Richardson finite differences") {
    for (const auto shape : {PerturbationShape::ConstantSymmetric, PerturbationShape::CosineModulated}) {
        const MetricConfig cfg = perturbed_config(1e-3, 0.5, shape);
        ConePointSampler pts(0x11D7u);
        for (int k = 0; k < 12; ++k) {
            const SpacetimePoint p = pts.next(3.0, 25.0);
            const MetricSample ms = sample_metric(cfg, p);
            for (int axis = 0; axis < 3; ++axis) {
                const double h0 = 1e-3 * p.t;
                auto comp = [&](double off, int i, int j) {
                    double c[3] = {p.t, p.x[0], p.x[1]};
                    c[axis] += off;
                    const MetricSample m2 =
                        sample_metric(cfg, SpacetimePoint::cartesian(c[0], c[1], c[2]));
                    return m2.g_upper(i, j);
                };
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        auto d = [&](double hh) {
                            return (comp(hh, i, j) - comp(-hh, i, j)) / (2 * hh);
                        };
                        const double fd = (4.0 * d(h0 / 2) - d(h0)) / 3.0;
                        CHECK(ms.dg_upper[axis][i][j] ==
                              doctest::Approx(fd).epsilon(1e-5).scale(1e-9));
                    }
            }
        }
    }
}

TEST_CASE("lower metric and its derivatives are consistent with the upper ones") {
    const MetricConfig cfg = perturbed_config(5e-3, 0.5, PerturbationShape::CosineModulated);
    ConePointSampler pts(0x5EEDu);
    for (int k = 0; k < 10; ++k) {
        const SpacetimePoint p = pts.next(3.0, 20.0);
        const MetricSample ms = sample_metric(cfg, p);
        CHECK(max_abs_diff(ms.g_upper * ms.g_lower, SmallMat::identity(3)) <= 1e-13);
        // d(g g^{-1}) = 0 => dg_lower = -g_lower dg_upper g_lower; verify by contraction
        for (int l = 0; l < 3; ++l)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    double v = 0.0;  // d_l (g_upper * g_lower)(i,j)
                    for (int m = 0; m < 3; ++m)
                        v += ms.dg_upper[l][i][m] * ms.g_lower(m, j) +
                             ms.g_upper(i, m) * ms.dg_lower[l][m][j];
                    CHECK(std::abs(v) <= 1e-15);
                }
    }
}

TEST_CASE("Christoffel symbols: symmetry and contraction") {
    const MetricConfig cfg = perturbed_config(1e-2, 0.5, PerturbationShape::ConstantSymmetric);
    const SpacetimePoint p = SpacetimePoint::cartesian(6.0, 1.5, -2.0);
    const MetricSample ms = sample_metric(cfg, p);
    for (int g = 0; g < 3; ++g)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                CHECK(ms.christoffel[g][a][b] == doctest::Approx(ms.christoffel[g][b][a]));
    for (int m = 0; m < 3; ++m) {
        double v = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) v += ms.g_upper(a, b) * ms.christoffel[m][a][b];
        CHECK(ms.contracted[m] == doctest::Approx(v));
    }
    // Gamma must vanish when delta = 0
    MetricConfig flat = cfg;
    flat.delta = 0.0;
    const MetricSample f = sample_metric(flat, p);
    CHECK(f.christoffel[0][0][0] == 0.0);
}

TEST_CASE("decay validator accepts the conforming family at order zero") {
    const MetricConfig cfg = perturbed_config(1e-3, 0.5, PerturbationShape::ConstantSymmetric);
    DecayRegion region;
    const ValidationReport rep = validate_decay(cfg, region, 0);
    CHECK(rep.pass);
    CHECK(rep.gate_ratio <= 1.05);
    CHECK(rep.gate_ratio >= 0.5);  // the family nearly saturates its own envelope
}

TEST_CASE("decay validator reports finite higher-order ratios") {
    const MetricConfig cfg = perturbed_config(1e-3, 0.5, PerturbationShape::ConstantSymmetric);
    DecayRegion region;
    region.n_s = 6;
    region.n_rho = 8;
    region.n_angle = 4;
    const ValidationReport rep = validate_decay(cfg, region, 2);
    REQUIRE(rep.rows.size() == 3);
    for (const auto& row : rep.rows) {
        CHECK(std::isfinite(row.max_ratio_upper));
        CHECK(std::isfinite(row.max_ratio_lower));
        CHECK(row.max_ratio_upper >= 0.0);
    }
    // First-order sharp constants exceed 1 even for the conforming family;
    // the gate is order 0 and must still pass.
    CHECK(rep.pass);
    CHECK(rep.rows[1].max_ratio_upper > 1.0);
}

TEST_CASE("decay validator flags a slowly decaying metric with a diverging trend") {
    // Actual decay s^{-1/2} (gamma = -0.5), validated against the claimed
    // hypothesis gamma = 0.5: per-s ratios must grow at least like s^{0.4}.
    MetricConfig weak = perturbed_config(1e-3, -0.5, PerturbationShape::ConstantSymmetric);
    DecayRegion region;
    region.s_min = 3.0;
    region.s_max = 30.0;
    region.n_s = 10;
    const ValidationReport rep = validate_decay(weak, region, 0, 1e-3, 0.5);
    CHECK_FALSE(rep.pass);
    REQUIRE(rep.per_s_max_ratio.size() == 10);
    // least-squares slope of log ratio vs log s
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = int(rep.per_s_max_ratio.size());
    for (const auto& [s, ratio] : rep.per_s_max_ratio) {
        const double lx = std::log(s), ly = std::log(ratio);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope >= 0.4);
}

TEST_CASE("tabulated metric round-trips through file I/O and tracks its source") {
    const MetricConfig src = perturbed_config(2e-3, 0.5, PerturbationShape::ConstantSymmetric);
    TabulatedMetric::GridSpec spec;
    spec.nt = 12;
    spec.n1 = 14;
    spec.n2 = 14;
    spec.t0 = 4.0;
    spec.dt = 0.25;
    spec.x10 = -1.4;
    spec.dx1 = 0.2;
    spec.x20 = -1.4;
    spec.dx2 = 0.2;
    const TabulatedMetric tab = TabulatedMetric::sample_from(src, spec);

    const auto path = std::filesystem::temp_directory_path() / "membrane_tab_test.mtab";
    tab.write(path);
    const TabulatedMetric back = TabulatedMetric::read(path);
    std::filesystem::remove(path);

    // bitwise identical samples after the round trip
    const SmallMat a = tab.lower_at(5.1, 0.3, -0.7);
    const SmallMat b = back.lower_at(5.1, 0.3, -0.7);
    CHECK(max_abs_diff(a, b) == 0.0);

    // interpolation stays near the analytic source mid-cell
    const SpacetimePoint p = SpacetimePoint::cartesian(5.125, 0.31, -0.69);
    const MetricSample exact = sample_metric(src, p);
    CHECK(max_abs_diff(a, a) == 0.0);
    const SmallMat interp = tab.lower_at(p.t, p.x[0], p.x[1]);
    CHECK(max_abs_diff(interp, exact.g_lower) <= 1e-6);

    // sampling through the MetricConfig machinery
    MetricConfig tc;
    tc.kind = MetricKind::UserTabulated;
    tc.delta = src.delta;
    tc.gamma_decay = src.gamma_decay;
    tc.table = std::make_shared<TabulatedMetric>(back);
    const MetricSample ms = sample_metric(tc, p);
    CHECK(max_abs_diff(ms.g_lower, interp) == 0.0);
    CHECK(max_abs_diff(ms.g_upper * ms.g_lower, SmallMat::identity(3)) <= 1e-12);

    // outside the table: domain error
    CHECK_THROWS_AS(tab.lower_at(100.0, 0.0, 0.0), DomainError);
}

TEST_CASE("tabulated validator applies the relaxed tolerance") {
    const MetricConfig src = perturbed_config(2e-3, 0.5, PerturbationShape::ConstantSymmetric);
    TabulatedMetric::GridSpec spec;
    spec.nt = 40;
    spec.n1 = 40;
    spec.n2 = 40;
    spec.t0 = 3.2;
    spec.dt = 0.5;
    spec.x10 = -4.0;
    spec.dx1 = 0.21;
    spec.x20 = -4.0;
    spec.dx2 = 0.21;
    MetricConfig tc;
    tc.kind = MetricKind::UserTabulated;
    tc.delta = src.delta;
    tc.gamma_decay = src.gamma_decay;
    tc.table = std::make_shared<TabulatedMetric>(TabulatedMetric::sample_from(src, spec));

    DecayRegion region;
    region.s_min = 3.3;
    region.s_max = 5.0;  // stay inside the table: t <= sqrt(s^2+r^2) <= 22
    region.n_s = 4;
    region.rho_max = 3.5;
    region.n_rho = 6;
    region.n_angle = 4;
    const ValidationReport rep = validate_decay(tc, region, 1);
    CHECK(rep.tolerance == 0.15);
    CHECK(rep.max_order == 1);  // clamped for tables
    CHECK(rep.pass);
}

TEST_CASE("metric config validation rejects out-of-contract parameters") {
    MetricConfig cfg = perturbed_config(1e-3, 0.5, PerturbationShape::ConstantSymmetric);
    cfg.gamma_decay = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = perturbed_config(1e-3, 0.5, PerturbationShape::ConstantSymmetric);
    cfg.amplitude(0, 1) = 0.3;  // asymmetric
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = perturbed_config(1e-3, 0.5, PerturbationShape::ConstantSymmetric);
    cfg.amplitude(1, 1) = 1.4;
    cfg.amplitude(1, 1) = 1.4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = perturbed_config(1e-3, 0.5, PerturbationShape::ConstantSymmetric);
    cfg.cutoff_width = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
