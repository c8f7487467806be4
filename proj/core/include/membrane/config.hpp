#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "membrane/radial.hpp"
#include "membrane/solver.hpp"

namespace membrane {

// ---------------------------------------------------------------------------
// Scenario files: flat `key = value` text with `#` comments.  The same key
// set describes planar and radial runs; serialization emits every key in a
// fixed order with round-trip-exact numbers, so parse -> serialize -> parse
// is the identity and the serialized form is a stable fingerprint.
// ---------------------------------------------------------------------------

enum class GeometryKind { Planar, Radial };

struct LabConfig {
    GeometryKind geometry = GeometryKind::Planar;
    int spatial_dim = 2;  // radial geometry may use 3
    ScenarioConfig scenario;

    // Projections for the two run geometries; each checks that the config
    // actually describes that geometry and throws ConfigError otherwise.
    ScenarioConfig planar_config() const;
    RadialConfig radial_config() const;
};

// Parses configuration text; unknown keys, duplicate keys, malformed lines,
// and out-of-vocabulary enum tokens are ConfigErrors with the line number.
LabConfig parse_config(const std::string& text);

// Reads and parses a file (IoError when unreadable).
LabConfig load_config(const std::filesystem::path& path);

// Complete fixed-order rendering of every key.
std::string serialize_config(const LabConfig& config);

// Fingerprint of the serialized form; stamped into run bundles.
std::uint64_t config_hash(const LabConfig& config);

}  // namespace membrane
