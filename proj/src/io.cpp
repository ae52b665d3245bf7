#include "dtgv/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace dtgv {
namespace {

[[noreturn]] void io_error(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorCode::Io, path.string() + ": " + what);
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

unsigned quantize(double v, unsigned maxval) {
  const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  return static_cast<unsigned>(std::lround(c * maxval));
}

// Next whitespace-delimited token of a PNM header, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

ImageGrid read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(path, "cannot open file");
  const std::string magic = pnm_token(in);
  if (magic != "P2" && magic != "P5") io_error(path, "not a PGM file (magic '" + magic + "')");
  std::size_t w = 0, h = 0;
  unsigned long maxval = 0;
  try {
    w = std::stoul(pnm_token(in));
    h = std::stoul(pnm_token(in));
    maxval = std::stoul(pnm_token(in));
  } catch (const std::exception&) {
    io_error(path, "malformed PGM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) io_error(path, "invalid PGM header values");

  ImageGrid img(h, w);
  const double maxv = static_cast<double>(maxval);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      unsigned long v = 0;
      if (magic == "P2") {
        const std::string tok = pnm_token(in);
        if (tok.empty()) io_error(path, "truncated pixel data");
        v = std::stoul(tok);
      } else if (maxval < 256) {
        const int b = in.get();
        if (b == EOF) io_error(path, "truncated pixel data");
        v = static_cast<unsigned long>(b);
      } else {
        const int hi = in.get();
        const int lo = in.get();
        if (lo == EOF) io_error(path, "truncated pixel data");
        v = (static_cast<unsigned long>(hi) << 8) | static_cast<unsigned long>(lo);
      }
      if (v > maxval) io_error(path, "pixel value exceeds maxval");
      img(r, c) = static_cast<double>(v) / maxv;
    }
  }
  return img;
}

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

ImageGrid read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) io_error(path, "cannot open file");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    io_error(path, "not a PNG file");
  }
  PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) io_error(path, "libpng initialization failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) io_error(path, "libpng initialization failed");
  if (setjmp(png_jmpbuf(g.png))) io_error(path, "corrupt PNG data");

  png_init_io(g.png, file.get());
  png_set_sig_bytes(g.png, 8);
  png_read_info(g.png, g.info);
  const png_uint_32 w = png_get_image_width(g.png, g.info);
  const png_uint_32 h = png_get_image_height(g.png, g.info);
  const int color = png_get_color_type(g.png, g.info);
  int depth = png_get_bit_depth(g.png, g.info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(g.png, 1, -1, -1);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(g.png);
  if (depth == 16) png_set_swap(g.png);  // host-order 16-bit samples
  png_read_update_info(g.png, g.info);
  depth = png_get_bit_depth(g.png, g.info);
  if (png_get_channels(g.png, g.info) != 1) io_error(path, "unsupported PNG channel layout");

  const std::size_t rowbytes = png_get_rowbytes(g.png, g.info);
  std::vector<png_byte> buffer(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = buffer.data() + r * rowbytes;
  png_read_image(g.png, rows.data());
  png_read_end(g.png, nullptr);

  ImageGrid img(h, w);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 r = 0; r < h; ++r) {
    for (png_uint_32 c = 0; c < w; ++c) {
      double v;
      if (depth == 16) {
        std::uint16_t s;
        std::memcpy(&s, rows[r] + 2 * c, 2);
        v = s;
      } else {
        v = rows[r][c];
      }
      img(r, c) = v / maxval;
    }
  }
  return img;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ImageGrid read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) io_error(path, "no such file");
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".pnm") return read_pgm(path);
  io_error(path, "unsupported image extension '" + ext + "' (use .png or .pgm)");
}

void write_image(const std::filesystem::path& path, const ImageGrid& img) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(path, img, 16);
  if (ext == ".pgm" || ext == ".pnm") return write_pgm(path, img, 65535);
  io_error(path, "unsupported image extension '" + ext + "' (use .png or .pgm)");
}

void write_pgm(const std::filesystem::path& path, const ImageGrid& img, unsigned maxval) {
  if (maxval == 0 || maxval > 65535) {
    throw Error(ErrorCode::InvalidArgument, "PGM maxval must lie in [1, 65535]");
  }
  std::ofstream out(path);
  if (!out) io_error(path, "cannot open file for writing");
  out << "P2\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      out << quantize(img(r, c), maxval) << (c + 1 == img.width() ? '\n' : ' ');
    }
  }
  if (!out) io_error(path, "write failed");
}

void write_png(const std::filesystem::path& path, const ImageGrid& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw Error(ErrorCode::InvalidArgument, "PNG bit depth must be 8 or 16");
  }
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) io_error(path, "cannot open file for writing");
  PngWriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) io_error(path, "libpng initialization failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) io_error(path, "libpng initialization failed");

  const std::size_t h = img.height();
  const std::size_t w = img.width();
  const std::size_t bytes = static_cast<std::size_t>(bit_depth / 8);
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  std::vector<png_byte> buffer(h * w * bytes);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const unsigned v = quantize(img(r, c), maxval);
      png_byte* px = buffer.data() + (r * w + c) * bytes;
      if (bit_depth == 16) {
        px[0] = static_cast<png_byte>(v >> 8);
        px[1] = static_cast<png_byte>(v & 0xFF);
      } else {
        px[0] = static_cast<png_byte>(v);
      }
    }
  }
  std::vector<png_bytep> rows(h);
  for (std::size_t r = 0; r < h; ++r) rows[r] = buffer.data() + r * w * bytes;

  if (setjmp(png_jmpbuf(g.png))) io_error(path, "PNG encoding failed");
  png_init_io(g.png, file.get());
  png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);
  png_write_image(g.png, rows.data());
  png_write_end(g.png, nullptr);
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) io_error(path, "cannot open file");
  std::ostringstream s;
  s << in.rdbuf();
  try {
    return parse_key_values(s.str());
  } catch (const Error& e) {
    io_error(path, e.what());
  }
}

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
  std::ofstream out(path);
  if (!out) io_error(path, "cannot open file for writing");
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  if (!out) io_error(path, "write failed");
}

std::filesystem::path sidecar_path(const std::filesystem::path& image) {
  return std::filesystem::path(image.string() + ".meta");
}

void write_csv_image(const std::filesystem::path& path, const ImageGrid& img) {
  std::ofstream out(path);
  if (!out) io_error(path, "cannot open file for writing");
  out.precision(17);
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      out << img(r, c) << (c + 1 == img.width() ? '\n' : ',');
    }
  }
}

}  // namespace dtgv
