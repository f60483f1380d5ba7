#include "collage/png_io.hpp"

#include <png.h>
#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <memory>

#include "collage/error.hpp"

namespace collage::png {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr file(std::fopen(path.string().c_str(), mode));
  if (!file) {
    fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  }
  return file;
}

struct Reader {
  png_structp png = nullptr;
  png_infop info = nullptr;

  Reader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) fail(ErrorKind::io, "libpng allocation failed");
  }
  ~Reader() { png_destroy_read_struct(&png, &info, nullptr); }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;
};

struct Writer {
  png_structp png = nullptr;
  png_infop info = nullptr;

  Writer() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) fail(ErrorKind::io, "libpng allocation failed");
  }
  ~Writer() { png_destroy_write_struct(&png, &info); }
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;
};

void begin_read(Reader& r, std::FILE* file, const std::filesystem::path& path) {
  if (setjmp(png_jmpbuf(r.png))) {
    fail(ErrorKind::io, "failed to decode PNG '" + path.string() + "'");
  }
  png_init_io(r.png, file);
  png_read_info(r.png, r.info);
}

std::vector<png_bytep> row_pointers(std::uint8_t* data, int height, std::size_t stride) {
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = data + static_cast<std::size_t>(y) * stride;
  return rows;
}

void check_dimensions(png_uint_32 w, png_uint_32 h, const std::filesystem::path& path) {
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) {
    fail(ErrorKind::io, "unreasonable PNG dimensions in '" + path.string() + "'");
  }
}

// Fixed encoder settings so identical pixels always produce identical bytes.
void configure_writer(Writer& w) {
  png_set_compression_level(w.png, 6);
  png_set_filter(w.png, 0, PNG_FILTER_SUB);
}

void ensure_parent_dir(const std::filesystem::path& path) {
  const auto parent = path.parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
}

}  // namespace

ImageRgb8 read_rgb8(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  Reader r;
  begin_read(r, file.get(), path);

  png_set_palette_to_rgb(r.png);
  png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);

  const png_uint_32 w = png_get_image_width(r.png, r.info);
  const png_uint_32 h = png_get_image_height(r.png, r.info);
  check_dimensions(w, h, path);
  if (png_get_channels(r.png, r.info) != 3 || png_get_bit_depth(r.png, r.info) != 8) {
    fail(ErrorKind::io, "unsupported PNG layout in '" + path.string() + "'");
  }

  ImageRgb8 image(static_cast<int>(w), static_cast<int>(h));
  auto rows = row_pointers(reinterpret_cast<std::uint8_t*>(image.data()), image.height(),
                           static_cast<std::size_t>(w) * 3);
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return image;
}

Grid<std::uint8_t> read_gray8(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  Reader r;
  begin_read(r, file.get(), path);

  const int color_type = png_get_color_type(r.png, r.info);
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_PALETTE) {
    fail(ErrorKind::io, "expected single-channel PNG in '" + path.string() + "'");
  }
  if (color_type == PNG_COLOR_TYPE_GRAY) {
    png_set_expand_gray_1_2_4_to_8(r.png);
    png_set_strip_16(r.png);
  } else if (png_get_bit_depth(r.png, r.info) < 8) {
    png_set_packing(r.png);  // widen sub-byte palette indices, keep raw values
  }
  png_read_update_info(r.png, r.info);

  const png_uint_32 w = png_get_image_width(r.png, r.info);
  const png_uint_32 h = png_get_image_height(r.png, r.info);
  check_dimensions(w, h, path);
  if (png_get_channels(r.png, r.info) != 1 || png_get_bit_depth(r.png, r.info) != 8) {
    fail(ErrorKind::io, "unsupported single-channel layout in '" + path.string() + "'");
  }

  Grid<std::uint8_t> grid(static_cast<int>(w), static_cast<int>(h));
  auto rows = row_pointers(grid.data(), grid.height(), w);
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return grid;
}

Grid<std::uint16_t> read_gray16(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  Reader r;
  begin_read(r, file.get(), path);

  if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY) {
    fail(ErrorKind::io, "expected grayscale PNG in '" + path.string() + "'");
  }
  png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_bit_depth(r.png, r.info) == 16) {
    png_set_swap(r.png);  // PNG is big-endian on disk
  }
  png_read_update_info(r.png, r.info);

  const png_uint_32 w = png_get_image_width(r.png, r.info);
  const png_uint_32 h = png_get_image_height(r.png, r.info);
  check_dimensions(w, h, path);
  const int depth = png_get_bit_depth(r.png, r.info);

  Grid<std::uint16_t> grid(static_cast<int>(w), static_cast<int>(h));
  if (depth == 16) {
    auto rows = row_pointers(reinterpret_cast<std::uint8_t*>(grid.data()), grid.height(),
                             static_cast<std::size_t>(w) * 2);
    png_read_image(r.png, rows.data());
  } else {
    Grid<std::uint8_t> narrow(static_cast<int>(w), static_cast<int>(h));
    auto rows = row_pointers(narrow.data(), narrow.height(), w);
    png_read_image(r.png, rows.data());
    auto out = grid.begin();
    for (auto v : narrow) *out++ = static_cast<std::uint16_t>(v) * 257;
  }
  png_read_end(r.png, nullptr);
  return grid;
}

void write_rgb8(const std::filesystem::path& path, const ImageRgb8& image) {
  if (image.empty()) fail(ErrorKind::invalid_input, "refusing to write empty image");
  ensure_parent_dir(path);
  auto file = open_file(path, "wb");
  Writer w;
  if (setjmp(png_jmpbuf(w.png))) {
    fail(ErrorKind::io, "failed to encode PNG '" + path.string() + "'");
  }
  png_init_io(w.png, file.get());
  configure_writer(w);
  png_set_IHDR(w.png, w.info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  auto rows = row_pointers(
      const_cast<std::uint8_t*>(reinterpret_cast<const std::uint8_t*>(image.data())),
      image.height(), static_cast<std::size_t>(image.width()) * 3);
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

void write_gray8(const std::filesystem::path& path, const Grid<std::uint8_t>& grid) {
  if (grid.empty()) fail(ErrorKind::invalid_input, "refusing to write empty image");
  ensure_parent_dir(path);
  auto file = open_file(path, "wb");
  Writer w;
  if (setjmp(png_jmpbuf(w.png))) {
    fail(ErrorKind::io, "failed to encode PNG '" + path.string() + "'");
  }
  png_init_io(w.png, file.get());
  configure_writer(w);
  png_set_IHDR(w.png, w.info, grid.width(), grid.height(), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  auto rows = row_pointers(const_cast<std::uint8_t*>(grid.data()), grid.height(), grid.width());
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

void write_gray16(const std::filesystem::path& path, const Grid<std::uint16_t>& grid) {
  if (grid.empty()) fail(ErrorKind::invalid_input, "refusing to write empty image");
  ensure_parent_dir(path);
  auto file = open_file(path, "wb");
  Writer w;
  if (setjmp(png_jmpbuf(w.png))) {
    fail(ErrorKind::io, "failed to encode PNG '" + path.string() + "'");
  }
  png_init_io(w.png, file.get());
  configure_writer(w);
  png_set_IHDR(w.png, w.info, grid.width(), grid.height(), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  png_set_swap(w.png);
  auto rows = row_pointers(
      const_cast<std::uint8_t*>(reinterpret_cast<const std::uint8_t*>(grid.data())),
      grid.height(), static_cast<std::size_t>(grid.width()) * 2);
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

void write_indexed8(const std::filesystem::path& path, const Grid<std::uint8_t>& grid,
                    const std::vector<Rgb8>& palette) {
  if (grid.empty()) fail(ErrorKind::invalid_input, "refusing to write empty image");
  if (palette.empty() || palette.size() > 256) {
    fail(ErrorKind::invalid_input, "palette must have 1..256 entries");
  }
  for (auto v : grid) {
    if (v >= palette.size()) fail(ErrorKind::invalid_input, "pixel value outside palette");
  }
  ensure_parent_dir(path);
  auto file = open_file(path, "wb");
  Writer w;
  if (setjmp(png_jmpbuf(w.png))) {
    fail(ErrorKind::io, "failed to encode PNG '" + path.string() + "'");
  }
  png_init_io(w.png, file.get());
  configure_writer(w);
  png_set_IHDR(w.png, w.info, grid.width(), grid.height(), 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> colors(palette.size());
  for (std::size_t i = 0; i < palette.size(); ++i) {
    colors[i] = png_color{palette[i].r, palette[i].g, palette[i].b};
  }
  png_set_PLTE(w.png, w.info, colors.data(), static_cast<int>(colors.size()));
  png_write_info(w.png, w.info);
  auto rows = row_pointers(const_cast<std::uint8_t*>(grid.data()), grid.height(), grid.width());
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  std::uint32_t crc = crc32(0u, nullptr, 0);
  std::uint8_t buffer[1 << 16];
  std::size_t got = 0;
  while ((got = std::fread(buffer, 1, sizeof buffer, file.get())) > 0) {
    crc = crc32(crc, buffer, static_cast<uInt>(got));
  }
  if (std::ferror(file.get())) fail(ErrorKind::io, "read failure on '" + path.string() + "'");
  return crc;
}

}  // namespace collage::png
