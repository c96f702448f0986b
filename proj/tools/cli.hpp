// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dufay::cli
{

namespace fs = std::filesystem;

inline constexpr int kExitOk      = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage   = 2;

/// Raised while resolving a RunConfig; maps to kExitUsage.
class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct SynthConfig
{
    double              extent_um   = 2560.0;
    double              film_ppu    = 0.5;
    double              scan_ppu    = 0.2;
    int                 size        = 512; ///< 0: cover the film
    int                 patches     = 24;
    double              blur_px     = 0.0;
    double              blur_corner_px = -1.0; ///< negative: same as blur_px
    std::vector<double> affine;                ///< a11 a12 a21 a22 tx ty
    double              displacement_px = 0.0;
    double              noise           = 0.0;
    std::string         scanner         = "identity"; ///< identity | primaries
};

struct RunConfig
{
    std::string           subcommand;
    std::vector<fs::path> inputs;
    fs::path              output;
    std::string           primaries     = "tab2";
    std::string           geometry      = "default";
    std::string           illuminant;            ///< empty: command default
    std::string           white_balance; ///< illuminant, CCT or none; empty: command default
    double                trim          = 0.01;
    std::uint64_t         seed          = 1;
    unsigned              threads       = 0;

    // simulate-reseau
    double render_ppu    = 0.5;
    double render_extent = 1000.0;

    SynthConfig synth;

    // reconstruct
    fs::path render_path;
    fs::path report_path;
    double   pixels_per_um      = 0.0; ///< 0: take it from the sidecar
    bool     compensate         = true;
    bool     normalize_exposure = true;

    // compare
    std::vector<std::string> labels;
    std::string              format = "text"; ///< text | csv
};

int cmd_simulate_reseau( const RunConfig &config );
int cmd_analyze_primaries( const RunConfig &config );
int cmd_synth( const RunConfig &config );
int cmd_reconstruct( const RunConfig &config );
int cmd_compare( const RunConfig &config );

/// Parses arguments (and an optional TOML file given by --config, which
/// flags override) and runs the subcommand. Returns the exit code.
int run( int argc, const char *const *argv );

} // namespace dufay::cli
