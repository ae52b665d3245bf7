#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "dtgv/image.hpp"

namespace dtgv {

using KeyValues = std::map<std::string, std::string>;

/// Reads a grayscale PNG (8 or 16 bit) or a PGM (P2 or P5) and maps the
/// stored integers onto [0, 1] by the format's maximum value.
ImageGrid read_image(const std::filesystem::path& path);

/// Writes by extension (.png or .pgm). Values are clamped to [0, 1] and
/// quantized to 16 bits.
void write_image(const std::filesystem::path& path, const ImageGrid& img);

/// ASCII PGM with an explicit maxval (1..65535). Values are clamped to [0, 1]
/// and rounded to multiples of 1/maxval.
void write_pgm(const std::filesystem::path& path, const ImageGrid& img, unsigned maxval = 65535);

/// Grayscale PNG at 8 or 16 bit.
void write_png(const std::filesystem::path& path, const ImageGrid& img, int bit_depth = 16);

/// Flat "key = value" text; '#' starts a comment.
KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(const std::string& text);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

/// Sidecar path for an image: "<image>.meta".
std::filesystem::path sidecar_path(const std::filesystem::path& image);

/// Pixel values as CSV text, one image row per line.
void write_csv_image(const std::filesystem::path& path, const ImageGrid& img);

}  // namespace dtgv
