#pragma once

#include <tvflow/kmd.hpp>
#include <tvflow/rdmd.hpp>
#include <tvflow/spectral.hpp>
#include <tvflow/tv1d.hpp>
#include <tvflow/types.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace tvflow::io {

// Plain-text tables: one row per line, fields separated by commas and/or
// whitespace, '#' starts a comment.  Parse errors name the file and line.
Image read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Image& m);

// A signal file is a table with a single column (or a single row).
Signal read_signal(const std::filesystem::path& path);
void write_signal(const std::filesystem::path& path, const Signal& s);

// PGM images, P2 and P5, maxval up to 65535; samples rescale to [0, 1] on
// read.  Writing clamps to [0, 1] and quantizes to maxval levels; binary
// unless ascii is set; maxval above 255 stores 16-bit samples.
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Image& img, int maxval = 255,
               bool ascii = false);

// ".pgm" dispatches to read_pgm, anything else to read_matrix.
Image read_image(const std::filesystem::path& path);

// JSON serialization.  Numbers use the shortest representation that parses
// back to the same double, so round-trips are exact.
std::string to_json(const tv1d::PiecewiseFlow& flow);
tv1d::PiecewiseFlow flow_from_json(const std::string& text);
std::string to_json(const spectral::SpectralSet& set);
spectral::SpectralSet spectrum_from_json(const std::string& text);
std::string to_json(const std::vector<rdmd::SegmentModes>& segments);
std::string to_json(const kmd::FitResult& fit);

// Whole-file helpers.  Writes land in a temporary next to the target and
// rename into place, so readers never see a partial file.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace tvflow::io
