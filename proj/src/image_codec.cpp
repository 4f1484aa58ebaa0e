#include "sempaste/image_codec.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include <jpeglib.h>

#include "sempaste/errors.hpp"

namespace sempaste {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open file: " + path);
  return f;
}

void png_error_fn(png_structp png, png_const_charp msg) {
  // transfer control back to the caller's setjmp point
  (void)msg;
  longjmp(png_jmpbuf(png), 1);
}

// Decoded interleaved rows -> planes.
Image rows_to_image(const std::vector<std::vector<std::uint8_t>>& rows,
                    int width, int height, int channels) {
  Image im(width, height);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = rows[y].data();
    for (int x = 0; x < width; ++x) {
      im.ch[0](y, x) = row[x * channels + 0];
      im.ch[1](y, x) = row[x * channels + (channels >= 3 ? 1 : 0)];
      im.ch[2](y, x) = row[x * channels + (channels >= 3 ? 2 : 0)];
    }
  }
  return im;
}

Image read_png_rgb(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png decode failed: " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_expand(png);  // palette -> rgb, gray<8 -> 8, tRNS -> alpha
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);

  std::vector<std::vector<std::uint8_t>> rows(
      height, std::vector<std::uint8_t>(png_get_rowbytes(png, info)));
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = rows[y].data();
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return rows_to_image(rows, width, height, channels);
}

PlaneU8 read_png_plane(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png decode failed: " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (png_get_bit_depth(png, info) < 8) png_set_packing(png);
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA || color == PNG_COLOR_TYPE_RGB_ALPHA)
    png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);

  std::vector<std::vector<std::uint8_t>> rows(
      height, std::vector<std::uint8_t>(png_get_rowbytes(png, info)));
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = rows[y].data();
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  PlaneU8 out(height, width);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = rows[y].data();
    for (int x = 0; x < width; ++x) {
      if (channels == 1) {
        out(y, x) = row[x];
      } else {
        std::uint8_t r = row[x * channels], g = row[x * channels + 1],
                     b = row[x * channels + 2];
        if (r != g || g != b)
          throw DataError("label image has non-gray RGB pixels: " + path);
        out(y, x) = r;
      }
    }
  }
  return out;
}

void write_png_impl(const std::string& path, int width, int height,
                    int color_type, int bit_depth,
                    const std::vector<png_bytep>& row_ptrs) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encode failed: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth < 8) png_set_packing(png);
  png_write_image(png, const_cast<png_bytep*>(row_ptrs.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct JpegErrorJmp {
  jpeg_error_mgr pub;
  jmp_buf jmp;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  longjmp(reinterpret_cast<JpegErrorJmp*>(cinfo->err)->jmp, 1);
}

Image read_jpeg(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegErrorJmp jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jmp)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("jpeg decode failed: " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int width = cinfo.output_width;
  const int height = cinfo.output_height;
  Image im(width, height);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 3);
  JSAMPROW rp = row.data();
  for (int y = 0; y < height; ++y) {
    jpeg_read_scanlines(&cinfo, &rp, 1);
    for (int x = 0; x < width; ++x) {
      im.ch[0](y, x) = row[x * 3];
      im.ch[1](y, x) = row[x * 3 + 1];
      im.ch[2](y, x) = row[x * 3 + 2];
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return im;
}

void skip_pnm_space(std::istream& in) {
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::string magic;
  in >> magic;
  bool gray = magic == "P5";
  if (magic != "P6" && magic != "P5")
    throw DataError("unsupported pnm variant in " + path);
  int w, h, maxval;
  skip_pnm_space(in);
  in >> w;
  skip_pnm_space(in);
  in >> h;
  skip_pnm_space(in);
  in >> maxval;
  in.get();  // single whitespace before raster
  if (!in || w <= 0 || h <= 0 || maxval != 255)
    throw DataError("bad pnm header in " + path);
  const int ch = gray ? 1 : 3;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * ch);
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw DataError("truncated pnm raster in " + path);
  Image im(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* p = &buf[(static_cast<std::size_t>(y) * w + x) * ch];
      im.ch[0](y, x) = p[0];
      im.ch[1](y, x) = p[ch >= 3 ? 1 : 0];
      im.ch[2](y, x) = p[ch >= 3 ? 2 : 0];
    }
  return im;
}

enum class Magic { png, jpeg, pnm, unknown };

Magic sniff(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  unsigned char sig[8] = {0};
  in.read(reinterpret_cast<char*>(sig), 8);
  if (in.gcount() >= 8 && sig[0] == 0x89 && sig[1] == 'P' && sig[2] == 'N' &&
      sig[3] == 'G')
    return Magic::png;
  if (in.gcount() >= 2 && sig[0] == 0xFF && sig[1] == 0xD8) return Magic::jpeg;
  if (in.gcount() >= 2 && sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6'))
    return Magic::pnm;
  return Magic::unknown;
}

}  // namespace

Image read_image(const std::string& path) {
  switch (sniff(path)) {
    case Magic::png:
      return read_png_rgb(path);
    case Magic::jpeg:
      return read_jpeg(path);
    case Magic::pnm:
      return read_ppm(path);
    default:
      throw DataError("unrecognized image format: " + path);
  }
}

PlaneU8 read_plane(const std::string& path) {
  switch (sniff(path)) {
    case Magic::png:
      return read_png_plane(path);
    case Magic::pnm: {
      Image im = read_ppm(path);
      if ((im.ch[0] != im.ch[1]).any() || (im.ch[1] != im.ch[2]).any())
        throw DataError("label image has non-gray pixels: " + path);
      return im.ch[0];
    }
    default:
      throw DataError("unsupported label image format: " + path);
  }
}

void write_png(const std::string& path, const Image& image) {
  const int w = image.width(), h = image.height();
  std::vector<std::vector<std::uint8_t>> rows(
      h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * 3));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      rows[y][x * 3 + 0] = image.ch[0](y, x);
      rows[y][x * 3 + 1] = image.ch[1](y, x);
      rows[y][x * 3 + 2] = image.ch[2](y, x);
    }
  std::vector<png_bytep> row_ptrs(h);
  for (int y = 0; y < h; ++y) row_ptrs[y] = rows[y].data();
  write_png_impl(path, w, h, PNG_COLOR_TYPE_RGB, 8, row_ptrs);
}

void write_gray_png(const std::string& path, const PlaneU8& plane) {
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  std::vector<std::vector<std::uint8_t>> rows(h, std::vector<std::uint8_t>(w));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) rows[y][x] = plane(y, x);
  std::vector<png_bytep> row_ptrs(h);
  for (int y = 0; y < h; ++y) row_ptrs[y] = rows[y].data();
  write_png_impl(path, w, h, PNG_COLOR_TYPE_GRAY, 8, row_ptrs);
}

void write_mask_png(const std::string& path, const Mask& mask) {
  const int w = static_cast<int>(mask.cols());
  const int h = static_cast<int>(mask.rows());
  // one byte per pixel in {0,1}; png_set_packing packs to 1 bit on write
  std::vector<std::vector<std::uint8_t>> rows(h, std::vector<std::uint8_t>(w));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) rows[y][x] = mask(y, x) ? 1 : 0;
  std::vector<png_bytep> row_ptrs(h);
  for (int y = 0; y < h; ++y) row_ptrs[y] = rows[y].data();
  write_png_impl(path, w, h, PNG_COLOR_TYPE_GRAY, 1, row_ptrs);
}

void write_ppm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for write: " + path);
  const int w = image.width(), h = image.height();
  out << "P6\n" << w << " " << h << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      row[x * 3 + 0] = image.ch[0](y, x);
      row[x * 3 + 1] = image.ch[1](y, x);
      row[x * 3 + 2] = image.ch[2](y, x);
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace sempaste
