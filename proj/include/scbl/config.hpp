#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scbl/almost_analytic.hpp"
#include "scbl/expansion.hpp"
#include "scbl/geometry.hpp"
#include "scbl/model.hpp"
#include "scbl/spectral.hpp"
#include "scbl/test_function.hpp"

namespace scbl {

struct EngineConfig {
    TraceMethod method = TraceMethod::dense;
    std::ptrdiff_t dense_cap = 20000;
    int kpm_order = 128;
    int kpm_probes = 32;
    std::uint64_t seed = 20240601;
    Damping damping = Damping::jackson;
    double grid_factor = 48.0;
    bool two_grids = true;
    std::ptrdiff_t eig_column_limit = 2500;
    double series_tolerance = 1e-13;
};

struct SweepConfig {
    std::vector<int> p_list;
    int order = 2;                // j
    double residual_cap = 1e-3;   // relative to |c_0|
    int leading_mesh = 16;        // points per axis for leading_integral
};

struct ModelConfig {
    std::vector<double> x0;       // empty: origin
    double spacing = 0.2;
    double box_halfwidth = 0.0;
    bool richardson = true;
    int f0_mesh = 16;             // x0 grid per axis for model-f0
};

struct KernelConfig {
    std::vector<int> p_list;
    std::vector<double> x0;
    std::vector<std::pair<RealVector, RealVector>> pairs;
    int envelope = 4;             // N
};

struct DecayConfig {
    std::vector<int> p_list;
    std::vector<double> x;
    std::vector<double> x_prime;
    double epsilon = 0.1;
    double threshold = -3.0;
};

struct OperatorConfig {
    int p = 8;
    std::vector<int> grid;        // empty: grid rule
    bool vectors = false;
};

/// Validated configuration. `document` holds the input with every default
/// filled in, so it doubles as the record of what was run.
struct Config {
    nlohmann::json document;
    std::filesystem::path origin;  // directory of the config file

    Geometry geom;
    FieldSpec field;
    PotentialSpec potential;
    std::vector<TermSpec> phi;
    EngineConfig engine;
    HsQuadrature hs;
    int hs_order = 4;  // l
    SweepConfig sweep;
    ModelConfig model;
    KernelConfig kernel;
    DecayConfig decay;
    OperatorConfig op;
    std::vector<int> criteria;  // acceptance selection
    std::string output;
    std::string cache;

    /// Canonical text (sorted keys, fixed number format) of the named
    /// blocks; used in cache keys.
    std::string canonical(const std::vector<std::string>& blocks) const;

    Problem problem() const;
    LabOptions lab_options(int workers) const;
    EngineOptions engine_options(int workers) const;
    KpmOptions kpm_options() const;
    ModelKernelOptions model_kernel_options(int workers) const;
};

Config parse_config(const std::filesystem::path& path);
Config parse_config_text(const std::string& text, const std::filesystem::path& origin = {});

/// Parses a JSON document that is already loaded.
Config parse_config_json(const nlohmann::json& doc, const std::filesystem::path& origin = {});

}  // namespace scbl
