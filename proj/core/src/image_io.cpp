#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dasein/datapipe.hpp"

#if defined(DASEIN_HAVE_PNG)
#include <png.h>
#endif
#if defined(DASEIN_HAVE_JPEG)
#include <csetjmp>

#include <jpeglib.h>
#endif

namespace dasein::data {

namespace {

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// --- netpbm (P2/P3/P5/P6) ---

int pnm_token(std::istream& is) {
  // skips whitespace and '#' comments
  while (is) {
    int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int v = -1;
  is >> v;
  if (!is || v < 0) throw DataError("pnm: malformed header");
  return v;
}

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("pnm: cannot open " + path.string());
  char p = 0, kind = 0;
  is.get(p);
  is.get(kind);
  if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6'))
    throw DataError("pnm: unsupported format in " + path.string());
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';
  const int width = pnm_token(is);
  const int height = pnm_token(is);
  const int maxval = pnm_token(is);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255)
    throw DataError("pnm: unsupported geometry or depth");

  const int channels = color ? 3 : 1;
  Image img(channels, height, width);
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(count);
  if (binary) {
    is.get();  // single whitespace after maxval
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (!is) throw DataError("pnm: truncated pixel data");
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      int v = pnm_token(is);
      if (v > maxval) throw DataError("pnm: sample exceeds maxval");
      raw[i] = static_cast<unsigned char>(v);
    }
  }
  std::size_t i = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) img.at(c, y, x) = raw[i++] / static_cast<double>(maxval);
  return img;
}

std::vector<unsigned char> to_interleaved_bytes(const Image& img) {
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(img.size()));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        raw.push_back(static_cast<unsigned char>(v * 255.0 + 0.5));
      }
  return raw;
}

}  // namespace

void save_image_ppm(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw DataError("ppm: only 1- or 3-channel images");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("ppm: cannot open " + path.string());
  os << (img.channels == 3 ? "P6" : "P5") << "\n"
     << img.width << " " << img.height << "\n255\n";
  auto raw = to_interleaved_bytes(img);
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

#if defined(DASEIN_HAVE_PNG)

namespace {

Image load_png_file(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw DataError("png: cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("png: allocation failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("png: decode error in " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = static_cast<int>(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("png: unsupported channel count");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = raw.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  Image img(channels, height, width);
  std::size_t i = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) img.at(c, y, x) = raw[i++] / 255.0;
  return img;
}

}  // namespace

void save_image_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw DataError("png: only 1- or 3-channel images");
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw DataError("png: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw DataError("png: allocation failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw DataError("png: encode error for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto raw = to_interleaved_bytes(img);
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, raw.data() + static_cast<std::size_t>(y) * img.width * img.channels);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

bool png_support() { return true; }

#else

void save_image_png(const std::filesystem::path&, const Image&) {
  throw DataError("png: built without libpng support");
}
bool png_support() { return false; }

#endif  // DASEIN_HAVE_PNG

#if defined(DASEIN_HAVE_JPEG)

namespace {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

Image load_jpeg_file(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw DataError("jpeg: cannot open " + path.string());

  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    throw DataError("jpeg: decode error in " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);

  const int width = static_cast<int>(cinfo.output_width);
  const int height = static_cast<int>(cinfo.output_height);
  const int channels = cinfo.output_components;
  if (channels != 1 && channels != 3) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    throw DataError("jpeg: unsupported channel count");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = raw.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::fclose(fp);

  Image img(channels, height, width);
  std::size_t i = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) img.at(c, y, x) = raw[i++] / 255.0;
  return img;
}

}  // namespace

void save_image_jpeg(const std::filesystem::path& path, const Image& img, int quality) {
  if (img.channels != 1 && img.channels != 3)
    throw DataError("jpeg: only 1- or 3-channel images");
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw DataError("jpeg: cannot open " + path.string());

  jpeg_compress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::fclose(fp);
    throw DataError("jpeg: encode error for " + path.string());
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, fp);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = img.channels;
  cinfo.in_color_space = img.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, std::clamp(quality, 1, 100), TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  auto raw = to_interleaved_bytes(img);
  while (cinfo.next_scanline < cinfo.image_height) {
    unsigned char* row =
        raw.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width * img.channels;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(fp);
}

bool jpeg_support() { return true; }

#else

void save_image_jpeg(const std::filesystem::path&, const Image&, int) {
  throw DataError("jpeg: built without libjpeg support");
}
bool jpeg_support() { return false; }

#endif  // DASEIN_HAVE_JPEG

bool image_extension_supported(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return true;
  if (png_support() && ext == ".png") return true;
  if (jpeg_support() && (ext == ".jpg" || ext == ".jpeg")) return true;
  return false;
}

Image load_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return load_pnm(path);
#if defined(DASEIN_HAVE_PNG)
  if (ext == ".png") return load_png_file(path);
#endif
#if defined(DASEIN_HAVE_JPEG)
  if (ext == ".jpg" || ext == ".jpeg") return load_jpeg_file(path);
#endif
  throw DataError("image: unsupported format: " + path.string());
}

}  // namespace dasein::data
