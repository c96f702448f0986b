// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <dufay/image.hpp>
#include <dufay/reconstruct.hpp>
#include <dufay/scan_synth.hpp>

namespace dufay::io
{

namespace fs = std::filesystem;

/// Scan acquisition details stored next to the pixels.
struct ScanMetadata
{
    double                 pixels_per_um = 0.0;
    std::uint64_t          seed          = 0;
    synth::DegradationSpec degradation;
    recon::Matrix3         scanner_response = recon::kIdentity3;
};

struct ScanFile
{
    synth::ScanImage scan;
    ScanMetadata     metadata;
};

/// Sidecar path for an image: same stem, `.json` extension.
fs::path sidecar_path( const fs::path &image );

/// Four-page 16-bit TIFF (R, G, B, IR) plus the JSON sidecar.
void     write_scan( const fs::path &tiff, const synth::ScanImage &scan, const ScanMetadata &meta );
/// A missing sidecar leaves the metadata at its defaults.
ScanFile read_scan( const fs::path &tiff );

/// Three-sample 32-bit float TIFF.
void     write_xyz_tiff( const fs::path &path, const XYZImage &img );
XYZImage read_xyz_tiff( const fs::path &path );

/// Values in [0, 1] quantised to 16 bits; the format follows the extension
/// (.png, otherwise TIFF).
void write_rgb16( const fs::path &path, const RGBImage &img );

void   write_png( const fs::path &path, const Image8 &img );
Image8 read_png( const fs::path &path );

/// JSON description plus `<stem>.bin` holding, per element plane, float32
/// values followed by uint8 validity flags.
void               write_ground_truth( const fs::path &json, const synth::GroundTruth &gt );
synth::GroundTruth read_ground_truth( const fs::path &json );

std::string report_to_json( const recon::RunReport &report );
void        write_report( const fs::path &path, const recon::RunReport &report );

/// Whole-file binary write; throws IoError on failure.
void write_text( const fs::path &path, const std::string &text );

} // namespace dufay::io
