#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "membrane/diagnostics.hpp"
#include "test_helpers.hpp"

using namespace membrane;
using membrane::testing::rel_diff;

namespace {

EnergyRecord record_at(double s, double e_top) {
    EnergyRecord r;
    r.s = s;
    r.energy = {0.5 * e_top, 0.8 * e_top, e_top};
    r.generalized = r.energy;
    r.ratio = {1.0, 1.0, 1.0};
    r.observables.orders = 2;
    r.observables.sup_s_grad = {1.0, 1.0};
    r.observables.sup_t_tangent = {1.0, 1.0};
    r.observables.sup_ts_second = {1.0, 1.0};
    r.observables.sup_time_second = {1.0, 1.0};
    r.sobolev = 1.0;
    r.flat_energy_time = 0.5 * (s * s + 1.0);
    r.flat_energy = e_top;
    return r;
}

RunSeries series_from(const std::vector<double>& s_values,
                      const std::vector<double>& e_values) {
    std::vector<EnergyRecord> recs;
    for (std::size_t k = 0; k < s_values.size(); ++k)
        recs.push_back(record_at(s_values[k], e_values[k]));
    return make_series(std::move(recs), 2, 0, {0.2, 0.05});
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * k / (n - 1));
    return out;
}

template <typename F>
RunSeries series_of(double s0, double s1, int n, F&& energy_of_s) {
    const std::vector<double> s = linspace(s0, s1, n);
    std::vector<double> e;
    for (double v : s) e.push_back(energy_of_s(v));
    return series_from(s, e);
}

}  // namespace

TEST_CASE("power-law fits recover exact exponents") {
    const std::vector<double> s = linspace(3.0, 18.0, 12);

    std::vector<double> inv;
    for (double v : s) inv.push_back(3.0 / v);
    const PowerLawFit hyper = log_log_fit(s, inv);
    CHECK(std::abs(hyper.exponent + 1.0) < 1e-12);
    CHECK(hyper.std_error < 1e-12);
    CHECK(hyper.points == 12);

    std::vector<double> flat(s.size(), 0.37);
    CHECK(std::abs(log_log_fit(s, flat).exponent) < 1e-13);

    std::vector<double> grow;
    for (double v : s) grow.push_back(2.5 * std::pow(v, 0.7));
    CHECK(std::abs(log_log_fit(s, grow).exponent - 0.7) < 1e-12);

    std::vector<double> floored = inv;
    floored[5] = 1e-14;
    const PowerLawFit low = log_log_fit(s, floored);
    CHECK(low.at_floor);
    CHECK(low.exponent == 0.0);

    CHECK_THROWS_AS(log_log_fit({1.0}, {1.0}), ConfigError);
    CHECK_THROWS_AS(log_log_fit({1.0, 2.0}, {1.0}), ConfigError);
    CHECK_THROWS_AS(log_log_fit({0.0, 2.0}, {1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(log_log_fit({2.0, 2.0}, {1.0, 1.0}), ConfigError);
}

TEST_CASE("series construction enforces its invariants") {
    CHECK_THROWS_AS(make_series({}, 2, 0, {}), ConfigError);
    CHECK_THROWS_AS(make_series({record_at(3.0, 1.0)}, 5, 0, {}), ConfigError);
    std::vector<EnergyRecord> bad{record_at(3.0, 1.0), record_at(3.0, 1.0)};
    CHECK_THROWS_AS(make_series(std::move(bad), 2, 0, {}), ConfigError);

    const RunSeries ok = series_from({3.0, 4.0, 5.0}, {1.0, 1.0, 1.0});
    CHECK(ok.records.size() == 3);
    CHECK(ok.m_diag == 2);
}

TEST_CASE("boundedness verdict accepts conforming series and rejects growth") {
    // near-conserved energy with a decaying transient
    const RunSeries good =
        series_of(3.0, 18.0, 14, [](double s) { return 0.42 * (1.0 + 0.05 * std::exp(-s)); });
    const Verdict pass = boundedness_verdict(good, 2);
    CHECK(pass.pass);
    CHECK_FALSE(pass.inconclusive);
    CHECK(pass.claim == "energy-boundedness-order-2");
    CHECK_FALSE(pass.anchor.empty());
    CHECK(pass.statistic <= pass.threshold);
    CHECK(pass.threshold == boundedness_ratio_bound);

    // same series, same verdict, bitwise
    const Verdict again = boundedness_verdict(good, 2);
    CHECK(again.statistic == pass.statistic);
    CHECK(again.notes == pass.notes);

    // injected polynomial growth fails on both the ratio and the tail slope
    const RunSeries grow = series_of(3.0, 18.0, 14, [](double s) { return std::sqrt(s); });
    const Verdict fail = boundedness_verdict(grow, 2);
    CHECK_FALSE(fail.pass);
    CHECK_FALSE(fail.inconclusive);
    CHECK(fail.statistic > fail.threshold);

    // late growth passes the ratio test but trips the slope window
    const RunSeries late = series_of(3.0, 18.0, 14, [](double s) {
        const double u = s / 18.0;
        return 1.0 + 0.08 * u * u * u * u * u * u;
    });
    const Verdict slope = boundedness_verdict(late, 2);
    CHECK(slope.statistic <= slope.threshold);
    CHECK_FALSE(slope.pass);

    // strong decay is flagged too: the claim is near-conservation
    const RunSeries decay = series_of(3.0, 18.0, 14, [](double s) { return std::pow(s, -0.2); });
    CHECK_FALSE(boundedness_verdict(decay, 2).pass);

    // too narrow an s-range is inconclusive, not a failure
    const RunSeries narrow = series_of(3.0, 10.0, 10, [](double) { return 1.0; });
    const Verdict thin = boundedness_verdict(narrow, 2);
    CHECK(thin.inconclusive);
    CHECK_FALSE(thin.pass);

    CHECK_THROWS_AS(boundedness_verdict(good, 3), ConfigError);
}

TEST_CASE("boundedness verdict handles zero and near-zero energies") {
    const RunSeries zero = series_of(3.0, 18.0, 10, [](double) { return 0.0; });
    const Verdict all_zero = boundedness_verdict(zero, 2);
    CHECK(all_zero.pass);
    CHECK(all_zero.statistic == 0.0);

    std::vector<double> e(10, 0.3);
    e[0] = 0.0;
    const RunSeries from_zero = series_from(linspace(3.0, 18.0, 10), e);
    const Verdict grew = boundedness_verdict(from_zero, 2);
    CHECK_FALSE(grew.pass);
    CHECK_FALSE(grew.inconclusive);
    CHECK(std::isinf(grew.statistic));

    // a verdict with a non-finite statistic still serializes to valid JSON
    const nlohmann::json j = nlohmann::json::parse(verdict_json(grew));
    CHECK(j["statistic"].is_null());
    CHECK(j["pass"] == false);
}

TEST_CASE("decay fits recover synthetic exponents and honor the exclusions") {
    std::vector<EnergyRecord> recs;
    const std::vector<double> s = linspace(3.0, 13.0, 11);
    for (double v : s) {
        EnergyRecord r = record_at(v, 1.0);
        r.observables.sup_s_grad[0] = 3.0 / v;
        r.observables.sup_t_tangent[1] = 0.8;
        r.observables.sup_time_second[0] = 2.0 * std::pow(v, -0.15);
        recs.push_back(r);
    }
    // corrupt the head of the series: the first 10% of the s-range is
    // excluded as initial-layer transient, so the fit must not see it
    recs.front().observables.sup_s_grad[0] = 100.0;
    RunSeries series = make_series(std::move(recs), 2, 0, {});

    const DecayFit inv = decay_fit(series, {ObservableKind::GradientSup, 0});
    CHECK_FALSE(inv.inconclusive);
    CHECK(std::abs(inv.exponent + 1.0) < 0.01);
    CHECK(inv.std_error < 0.01);
    CHECK(inv.points == 10);

    const DecayFit flat = decay_fit(series, {ObservableKind::TangentSup, 1});
    CHECK(std::abs(flat.exponent) < 1e-12);

    const DecayFit slow = decay_fit(series, {ObservableKind::TimeSecondSup, 0});
    CHECK(std::abs(slow.exponent + 0.15) < 0.01);

    // short series and floored observables are inconclusive, with a reason
    const RunSeries brief = series_of(3.0, 6.0, 5, [](double) { return 1.0; });
    const DecayFit thin = decay_fit(brief, {ObservableKind::GradientSup, 0});
    CHECK(thin.inconclusive);
    CHECK_FALSE(thin.reason.empty());

    std::vector<EnergyRecord> dead;
    for (double v : linspace(3.0, 13.0, 9)) {
        EnergyRecord r = record_at(v, 1.0);
        r.observables.sup_ts_second[0] = 0.0;
        dead.push_back(r);
    }
    const RunSeries floored = make_series(std::move(dead), 2, 0, {});
    CHECK(decay_fit(floored, {ObservableKind::MixedSecondSup, 0}).inconclusive);

    EnergyRecord low = record_at(3.0, 1.0);
    low.observables.orders = 1;
    CHECK_THROWS_AS(observable_value(low.observables, {ObservableKind::GradientSup, 1}),
                    ConfigError);
    CHECK(observable_value(low.observables, {ObservableKind::TangentSup, 0}) == 1.0);
}

TEST_CASE("equivalence ratio reports the worst deviation and its location") {
    std::vector<EnergyRecord> recs;
    for (double v : linspace(3.0, 9.0, 7)) {
        EnergyRecord r = record_at(v, 1.0);
        r.ratio[2] = 1.0 + 0.02 / v;
        r.ratio[1] = 1.0;
        recs.push_back(r);
    }
    recs[3].ratio[2] = 1.05;  // worst at s = 6
    const RunSeries series = make_series(std::move(recs), 2, 0, {});

    const EquivalenceReport worst = equivalence_ratio(series);
    CHECK(worst.order == 2);
    CHECK(worst.max_deviation == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(worst.s_at_max == doctest::Approx(6.0));

    // the zero field stores ratio 1, so the deviation degenerates to zero
    CHECK(equivalence_ratio(series, 1).max_deviation == 0.0);
    CHECK_THROWS_AS(equivalence_ratio(series, 3), ConfigError);
}

TEST_CASE("foliation comparison contrasts the two energy histories") {
    // hyperboloidal column flat, constant-time column growing like t^0.3
    std::vector<EnergyRecord> recs;
    for (double v : linspace(3.0, 15.0, 13)) {
        EnergyRecord r = record_at(v, 0.7);
        r.flat_energy = 0.7 * std::pow(r.flat_energy_time, 0.3);
        recs.push_back(r);
    }
    const RunSeries series = make_series(std::move(recs), 2, 0, {});
    const FoliationContrast contrast = foliation_comparison(series, 2);
    CHECK_FALSE(contrast.inconclusive);
    CHECK(std::abs(contrast.hyperboloidal_slope) < 1e-12);
    CHECK(std::abs(contrast.constant_time_slope - 0.3) < 1e-12);

    // identical histories produce identical slopes
    std::vector<EnergyRecord> same;
    for (double v : linspace(3.0, 15.0, 13)) {
        EnergyRecord r = record_at(v, 1.0);
        r.energy[2] = std::pow(v, -0.04);
        r.flat_energy_time = v;
        r.flat_energy = r.energy[2];
        same.push_back(r);
    }
    const RunSeries twin = make_series(std::move(same), 2, 0, {});
    const FoliationContrast equal = foliation_comparison(twin, 2);
    CHECK(equal.hyperboloidal_slope == equal.constant_time_slope);

    // repeated stamp times are collapsed rather than rejected
    std::vector<EnergyRecord> stamped;
    for (double v : linspace(3.0, 15.0, 13)) {
        EnergyRecord r = record_at(v, 0.9);
        r.flat_energy_time = std::floor(r.flat_energy_time / 20.0) * 20.0 + 1.0;
        stamped.push_back(r);
    }
    const RunSeries dup = make_series(std::move(stamped), 2, 0, {});
    CHECK_FALSE(foliation_comparison(dup, 2).inconclusive);

    const RunSeries tiny = series_from({3.0, 4.0, 4.5}, {1.0, 1.0, 1.0});
    CHECK(foliation_comparison(tiny, 2).inconclusive);
}

TEST_CASE("resolution sensitivity pairs verdicts of the same claim") {
    const RunSeries fine_series =
        series_of(3.0, 18.0, 14, [](double) { return 1.0; });
    const RunSeries coarse_agree = fine_series;
    const RunSeries coarse_disagree =
        series_of(3.0, 18.0, 14, [](double s) { return std::sqrt(s); });

    const Verdict fine = boundedness_verdict(fine_series, 2);
    CHECK_FALSE(fine.sensitivity_checked);

    const Verdict stable = mark_resolution_sensitivity(fine, boundedness_verdict(coarse_agree, 2));
    CHECK(stable.sensitivity_checked);
    CHECK_FALSE(stable.resolution_sensitive);
    CHECK(stable.pass == fine.pass);

    const Verdict shaky =
        mark_resolution_sensitivity(fine, boundedness_verdict(coarse_disagree, 2));
    CHECK(shaky.sensitivity_checked);
    CHECK(shaky.resolution_sensitive);

    Verdict other = fine;
    other.claim = "energy-boundedness-order-1";
    CHECK_THROWS_AS(mark_resolution_sensitivity(fine, other), ConfigError);
}

TEST_CASE("verdicts serialize to the documented JSON shape") {
    const RunSeries series = series_of(3.0, 18.0, 14, [](double) { return 0.9; });
    Verdict v = boundedness_verdict(series, 0);

    nlohmann::json j = nlohmann::json::parse(verdict_json(v));
    CHECK(j["claim"] == "energy-boundedness-order-0");
    CHECK(j["anchor"].is_string());
    CHECK(j["statistic"].is_number());
    CHECK(j["threshold"] == boundedness_ratio_bound);
    CHECK(j["pass"] == true);
    CHECK(j["inconclusive"] == false);
    CHECK(j["sensitivity"].is_null());

    v = mark_resolution_sensitivity(v, boundedness_verdict(series, 0));
    j = nlohmann::json::parse(verdict_json(v));
    CHECK(j["sensitivity"] == false);

    const std::string bundle =
        verdict_bundle_json({boundedness_verdict(series, 0), boundedness_verdict(series, 1)});
    const nlohmann::json arr = nlohmann::json::parse(bundle);
    CHECK(arr.is_array());
    CHECK(arr.size() == 2);
    CHECK(arr[1]["claim"] == "energy-boundedness-order-1");
}
