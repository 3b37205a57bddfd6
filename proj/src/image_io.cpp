#include "cea/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace cea {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

// libpng reports errors by longjmp; everything touched after setjmp lives in
// this caller-owned struct so nothing with a destructor is skipped.
struct PngState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<unsigned char> bytes;
  std::vector<png_bytep> rows;
  char message[256] = {};
};

void png_error_to_state(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof(state->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

bool read_png_impl(PngState& s, std::FILE* file) {
  if (setjmp(png_jmpbuf(s.png))) return false;
  png_init_io(s.png, file);
  png_read_info(s.png, s.info);
  s.width = png_get_image_width(s.png, s.info);
  s.height = png_get_image_height(s.png, s.info);
  s.bit_depth = png_get_bit_depth(s.png, s.info);
  s.color_type = png_get_color_type(s.png, s.info);
  if (s.color_type & PNG_COLOR_MASK_ALPHA) {
    std::snprintf(s.message, sizeof(s.message), "alpha channels are not supported");
    return false;
  }
  if (s.color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(s.png);
    s.bit_depth = 8;
    s.color_type = PNG_COLOR_TYPE_RGB;
  }
  if (s.color_type == PNG_COLOR_TYPE_GRAY && s.bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(s.png);
    s.bit_depth = 8;
  }
  if (png_get_valid(s.png, s.info, PNG_INFO_tRNS)) {
    std::snprintf(s.message, sizeof(s.message), "transparency is not supported");
    return false;
  }
  png_read_update_info(s.png, s.info);
  const std::size_t row_bytes = png_get_rowbytes(s.png, s.info);
  s.bytes.assign(row_bytes * s.height, 0);
  s.rows.resize(s.height);
  for (png_uint_32 y = 0; y < s.height; ++y) s.rows[y] = s.bytes.data() + y * row_bytes;
  png_read_image(s.png, s.rows.data());
  png_read_end(s.png, nullptr);
  return true;
}

bool write_png_impl(PngState& s, std::FILE* file) {
  if (setjmp(png_jmpbuf(s.png))) return false;
  png_init_io(s.png, file);
  png_set_IHDR(s.png, s.info, s.width, s.height, s.bit_depth, s.color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(s.png, s.info);
  png_write_image(s.png, s.rows.data());
  png_write_end(s.png, nullptr);
  return true;
}

ImageTensor load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw ImageIoError("cannot open " + path.string());
  unsigned char signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw ImageIoError(path.string() + " is not a PNG file");
  }
  PngState s;
  s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &s, png_error_to_state,
                                 png_warning_ignore);
  if (s.png == nullptr) throw ImageIoError("png_create_read_struct failed");
  s.info = png_create_info_struct(s.png);
  png_set_sig_bytes(s.png, 8);
  const bool ok = s.info != nullptr && read_png_impl(s, file.get());
  png_destroy_read_struct(&s.png, &s.info, nullptr);
  if (!ok) throw ImageIoError(path.string() + ": " + s.message);

  const int channels = s.color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
  ImageTensor out(static_cast<int>(s.height), static_cast<int>(s.width), channels, SpaceTag::Rgb);
  const std::size_t count = out.size();
  if (s.bit_depth == 16) {
    for (std::size_t n = 0; n < count; ++n) {
      const unsigned v = (static_cast<unsigned>(s.bytes[2 * n]) << 8) | s.bytes[2 * n + 1];
      out[n] = v / 65535.0;
    }
  } else {
    for (std::size_t n = 0; n < count; ++n) out[n] = s.bytes[n] / 255.0;
  }
  return out;
}

void save_png(const ImageTensor& t, const std::filesystem::path& path, int bit_depth,
              const std::vector<unsigned>& samples) {
  PngState s;
  s.width = static_cast<png_uint_32>(t.width());
  s.height = static_cast<png_uint_32>(t.height());
  s.bit_depth = bit_depth;
  s.color_type = t.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  const std::size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
  const std::size_t row_bytes = bytes_per_sample * t.width() * t.channels();
  s.bytes.resize(row_bytes * t.height());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    if (bit_depth == 16) {
      s.bytes[2 * n] = static_cast<unsigned char>(samples[n] >> 8);
      s.bytes[2 * n + 1] = static_cast<unsigned char>(samples[n] & 0xff);
    } else {
      s.bytes[n] = static_cast<unsigned char>(samples[n]);
    }
  }
  s.rows.resize(s.height);
  for (png_uint_32 y = 0; y < s.height; ++y) s.rows[y] = s.bytes.data() + y * row_bytes;

  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw ImageIoError("cannot open " + path.string() + " for writing");
  s.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &s, png_error_to_state,
                                  png_warning_ignore);
  if (s.png == nullptr) throw ImageIoError("png_create_write_struct failed");
  s.info = png_create_info_struct(s.png);
  const bool ok = s.info != nullptr && write_png_impl(s, file.get());
  png_destroy_write_struct(&s.png, &s.info);
  if (!ok) throw ImageIoError(path.string() + ": " + s.message);
}

// Netpbm header token reader; skips whitespace and '#' comments.
bool next_token(std::istream& in, std::string& token) {
  token.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  return !token.empty();
}

ImageTensor load_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  std::string magic, ws, hs, ms;
  if (!next_token(in, magic) || (magic != "P6" && magic != "P5")) {
    throw ImageIoError(path.string() + ": unsupported netpbm variant (need P6 or P5)");
  }
  if (!next_token(in, ws) || !next_token(in, hs) || !next_token(in, ms)) {
    throw ImageIoError(path.string() + ": truncated header");
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(ws);
    height = std::stoi(hs);
    maxval = std::stoi(ms);
  } catch (const std::exception&) {
    throw ImageIoError(path.string() + ": malformed header");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw ImageIoError(path.string() + ": invalid header values");
  }
  const int channels = magic == "P6" ? 3 : 1;
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(count * bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw ImageIoError(path.string() + ": truncated pixel data");
  }
  ImageTensor out(height, width, channels, SpaceTag::Rgb);
  for (std::size_t n = 0; n < count; ++n) {
    unsigned v = raw[n * bytes_per_sample];
    if (bytes_per_sample == 2) v = (v << 8) | raw[2 * n + 1];
    if (v > static_cast<unsigned>(maxval)) throw ImageIoError(path.string() + ": sample > maxval");
    out[n] = static_cast<double>(v) / maxval;
  }
  return out;
}

void save_netpbm(const ImageTensor& t, const std::filesystem::path& path, int bit_depth,
                 const std::vector<unsigned>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot open " + path.string() + " for writing");
  out << (t.channels() == 3 ? "P6" : "P5") << '\n'
      << t.width() << ' ' << t.height() << '\n'
      << (bit_depth == 16 ? 65535 : 255) << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(samples.size() * 2);
  for (unsigned v : samples) {
    if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(v >> 8));
    raw.push_back(static_cast<unsigned char>(v & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw ImageIoError("write failed for " + path.string());
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return load_netpbm(path);
  throw ImageIoError(path.string() + ": unsupported image format '" + ext + "'");
}

void save_image(const ImageTensor& t, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ImageIoError("bit depth must be 8 or 16");
  if (t.channels() != 1 && t.channels() != 3) {
    throw ImageIoError("only 1- or 3-channel images can be saved");
  }
  const double max = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<unsigned> samples(t.size());
  for (std::size_t n = 0; n < t.size(); ++n) {
    const double v = t[n];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ImageIoError("cannot save value " + std::to_string(v) + ": outside [0,1]");
    }
    samples[n] = static_cast<unsigned>(std::lround(v * max));
  }
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    save_png(t, path, bit_depth, samples);
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    save_netpbm(t, path, bit_depth, samples);
  } else {
    throw ImageIoError(path.string() + ": unsupported image format '" + ext + "'");
  }
}

void save_image(const PixelMap& m, const std::filesystem::path& path, int bit_depth) {
  std::vector<double> data(m.values().begin(), m.values().end());
  save_image(ImageTensor(m.height(), m.width(), 1, std::move(data), SpaceTag::Rgb), path,
             bit_depth);
}

}  // namespace cea
