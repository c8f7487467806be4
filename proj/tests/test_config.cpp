#include "doctest.h"
#include "membrane/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace membrane;

namespace {

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("serialize -> parse -> serialize is the identity") {
    LabConfig cfg;
    cfg.geometry = GeometryKind::Planar;
    cfg.scenario.mode = EvolutionMode::Full;
    cfg.scenario.epsilon = 0.01;
    cfg.scenario.grid_spacing = 0.46;
    cfg.scenario.cfl = 0.25;
    cfg.scenario.s_max = 15.0;
    cfg.scenario.metric.kind = MetricKind::PerturbedAnalytic;
    cfg.scenario.metric.delta = 1e-3;
    cfg.scenario.metric.gamma_decay = 0.5;
    cfg.scenario.metric.amplitude(0, 1) = 0.3;
    cfg.scenario.metric.amplitude(1, 0) = 0.3;
    cfg.scenario.metric.amplitude(1, 1) = -0.5;
    cfg.scenario.metric.wave_k = {0.7, -0.2};
    cfg.scenario.ds0 = 0.2;

    const std::string text = serialize_config(cfg);
    const LabConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));

    // awkward but exactly representable values survive the round trip
    LabConfig ugly;
    ugly.scenario.epsilon = 0.1 + 0.2;  // deliberately not 0.3
    ugly.scenario.cfl = 1.0 / 3.0;
    ugly.scenario.blowup_threshold = 12345678901234.5;
    const LabConfig ugly_back = parse_config(serialize_config(ugly));
    CHECK(ugly_back.scenario.epsilon == ugly.scenario.epsilon);
    CHECK(ugly_back.scenario.cfl == ugly.scenario.cfl);
    CHECK(ugly_back.scenario.blowup_threshold == ugly.scenario.blowup_threshold);
}

TEST_CASE("parsing accepts comments, blanks, and flexible spacing") {
    const std::string text =
        "# a comment line\n"
        "\n"
        "geometry=radial\n"
        "  spatial_dim = 2   # trailing note\n"
        "mode = linear\n"
        "epsilon = 0.1\n"
        "s_max = 24\n"
        "m_diag = 1\n";
    const LabConfig cfg = parse_config(text);
    CHECK(cfg.geometry == GeometryKind::Radial);
    CHECK(cfg.spatial_dim == 2);
    CHECK(cfg.scenario.mode == EvolutionMode::Linear);
    CHECK(cfg.scenario.epsilon == 0.1);
    CHECK(cfg.scenario.s_max == 24.0);
    CHECK(cfg.scenario.m_diag == 1);
    // untouched keys keep their defaults
    CHECK(cfg.scenario.support_radius == 2.0);
    CHECK(cfg.scenario.metric.kind == MetricKind::Minkowski);

    // symmetric amplitude entries are mirrored from the upper triangle
    const LabConfig amp = parse_config("metric_amplitude_01 = 0.3\nmetric_amplitude_12 = -0.25\n");
    CHECK(amp.scenario.metric.amplitude(0, 1) == 0.3);
    CHECK(amp.scenario.metric.amplitude(1, 0) == 0.3);
    CHECK(amp.scenario.metric.amplitude(1, 2) == -0.25);
    CHECK(amp.scenario.metric.amplitude(2, 1) == -0.25);
}

TEST_CASE("parse errors carry the offending line number") {
    auto text_of = [](const std::string& body) {
        return error_text([&] { (void)parse_config(body); });
    };

    SUBCASE("unknown key") {
        const std::string msg = text_of("epsilon = 0.1\nwavelength = 3\n");
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("wavelength") != std::string::npos);
    }
    SUBCASE("duplicate key names both lines") {
        const std::string msg = text_of("cfl = 0.4\n\ncfl = 0.3\n");
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("line 1") != std::string::npos);
        CHECK(msg.find("duplicate") != std::string::npos);
    }
    SUBCASE("malformed line") {
        const std::string msg = text_of("epsilon 0.1\n");
        CHECK(msg.find("line 1") != std::string::npos);
        CHECK(msg.find("key = value") != std::string::npos);
    }
    SUBCASE("missing key") {
        CHECK(text_of(" = 0.1\n").find("missing key") != std::string::npos);
    }
    SUBCASE("bad enum token") {
        const std::string msg = text_of("mode = galilean\n");
        CHECK(msg.find("line 1") != std::string::npos);
        CHECK(msg.find("galilean") != std::string::npos);
        CHECK(text_of("geometry = spherical\n").find("spherical") != std::string::npos);
        CHECK(text_of("metric = schwarzschild\n").find("schwarzschild") != std::string::npos);
        CHECK(text_of("metric_shape = sawtooth\n").find("sawtooth") != std::string::npos);
        CHECK(text_of("position_shape = plateau\n").find("plateau") != std::string::npos);
    }
    SUBCASE("bad numbers") {
        CHECK(text_of("epsilon = tiny\n").find("expected a number") != std::string::npos);
        CHECK(text_of("epsilon = 0.1x\n").find("trailing characters") != std::string::npos);
        CHECK(text_of("m_diag = two\n").find("expected an integer") != std::string::npos);
        CHECK(text_of("uniform_ds = yes\n").find("true or false") != std::string::npos);
    }
    SUBCASE("unknown amplitude slot") {
        CHECK(text_of("metric_amplitude_30 = 1\n").find("metric_amplitude_30") !=
              std::string::npos);
        // lower-triangle names are not part of the vocabulary
        CHECK(text_of("metric_amplitude_10 = 1\n").find("metric_amplitude_10") !=
              std::string::npos);
    }
}

TEST_CASE("geometry projections check their preconditions") {
    LabConfig planar;
    planar.geometry = GeometryKind::Planar;
    planar.scenario.epsilon = 0.02;
    const ScenarioConfig sc = planar.planar_config();
    CHECK(sc.epsilon == 0.02);
    CHECK_THROWS_AS((void)planar.radial_config(), ConfigError);

    LabConfig radial;
    radial.geometry = GeometryKind::Radial;
    radial.scenario.mode = EvolutionMode::Linear;
    radial.scenario.epsilon = 0.1;
    radial.scenario.support_radius = 3.0;
    radial.scenario.grid_spacing = 0.05;
    radial.scenario.s_max = 24.0;
    radial.scenario.m_diag = 1;
    const RadialConfig rc = radial.radial_config();
    CHECK(rc.mode == EvolutionMode::Linear);
    CHECK(rc.spatial_dim == 2);
    CHECK(rc.epsilon == 0.1);
    CHECK(rc.support_radius == 3.0);
    CHECK(rc.grid_spacing == 0.05);
    CHECK(rc.s_max == 24.0);
    CHECK(rc.m_diag == 1);
    CHECK_THROWS_AS((void)radial.planar_config(), ConfigError);

    // the radial reduction only exists on the flat background
    radial.scenario.metric.kind = MetricKind::PerturbedAnalytic;
    const std::string msg = error_text([&] { (void)radial.radial_config(); });
    CHECK(msg.find("minkowski") != std::string::npos);

    LabConfig planar3;
    planar3.spatial_dim = 3;
    CHECK_THROWS_AS((void)planar3.planar_config(), ConfigError);
}

TEST_CASE("hashes distinguish configs and ignore formatting") {
    LabConfig a;
    LabConfig b;
    CHECK(config_hash(a) == config_hash(b));
    b.scenario.epsilon = 0.02;
    CHECK(config_hash(a) != config_hash(b));

    // hand-written text with different comments hashes like its canonical form
    const LabConfig parsed = parse_config("# scribble\nepsilon =   0.01\n");
    CHECK(config_hash(parsed) == config_hash(a));
}

TEST_CASE("load_config reads files and reports unreadable paths") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "membrane_config_test";
    fs::create_directories(dir);
    const fs::path file = dir / "scenario.cfg";
    {
        std::ofstream out(file);
        out << "geometry = planar\nepsilon = 0.03\nmode = flat-null\n";
    }
    const LabConfig cfg = load_config(file);
    CHECK(cfg.scenario.epsilon == 0.03);
    CHECK(cfg.scenario.mode == EvolutionMode::FlatNullOnly);
    fs::remove_all(dir);

    CHECK_THROWS_AS((void)load_config(dir / "missing.cfg"), IoError);
}
