#include "stegmod/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>

namespace stegmod {

namespace {

// ---------------------------------------------------------------- PNM (P5/P6)

// Reads the next header token, skipping whitespace and '#' comments.
bool pnm_token(std::span<const std::uint8_t> b, std::size_t& pos, std::string& tok) {
  while (pos < b.size()) {
    if (std::isspace(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  tok.clear();
  while (pos < b.size() && !std::isspace(b[pos])) tok.push_back(static_cast<char>(b[pos++]));
  return !tok.empty();
}

long pnm_int(std::span<const std::uint8_t> b, std::size_t& pos) {
  std::string tok;
  if (!pnm_token(b, pos, tok)) fail("pnm: truncated header");
  for (char c : tok)
    if (!std::isdigit(static_cast<unsigned char>(c))) fail("pnm: bad header field '" + tok + "'");
  return std::stol(tok);
}

PixelGrid decode_pnm(std::span<const std::uint8_t> b, int channels) {
  std::size_t pos = 2;  // past magic
  long w = pnm_int(b, pos);
  long h = pnm_int(b, pos);
  long maxval = pnm_int(b, pos);
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20)) fail("pnm: bad dimensions");
  if (maxval > 255) fail("pnm: 16-bit samples are not supported");
  if (maxval <= 0) fail("pnm: bad maxval");
  if (pos >= b.size() || !std::isspace(b[pos])) fail("pnm: missing header terminator");
  ++pos;
  PixelGrid grid(static_cast<int>(w), static_cast<int>(h), channels);
  std::size_t need = grid.sample_count();
  if (b.size() - pos < need) fail("pnm: truncated pixel data");
  std::memcpy(grid.samples.data(), b.data() + pos, need);
  return grid;
}

void encode_pnm(const PixelGrid& g, bool color, std::vector<std::uint8_t>& out) {
  std::string hdr = std::string(color ? "P6" : "P5") + "\n" + std::to_string(g.width) +
                    " " + std::to_string(g.height) + "\n255\n";
  out.assign(hdr.begin(), hdr.end());
  out.insert(out.end(), g.samples.begin(), g.samples.end());
}

// ----------------------------------------------------------------------- PNG

constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void put_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(static_cast<std::uint8_t>(x >> 24));
  v.push_back(static_cast<std::uint8_t>(x >> 16));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
  v.push_back(static_cast<std::uint8_t>(x));
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

PixelGrid decode_png(std::span<const std::uint8_t> b) {
  if (b.size() < 8 || std::memcmp(b.data(), kPngSig, 8) != 0) fail("png: bad signature");
  std::size_t pos = 8;
  std::uint32_t w = 0, h = 0;
  int channels = 0;
  bool seen_ihdr = false, seen_iend = false;
  std::vector<std::uint8_t> idat;
  while (pos + 12 <= b.size() && !seen_iend) {
    std::uint32_t len = be32(b.data() + pos);
    if (pos + 12 + len > b.size()) fail("png: truncated chunk");
    const std::uint8_t* type = b.data() + pos + 4;
    const std::uint8_t* data = b.data() + pos + 8;
    std::uint32_t crc = be32(data + len);
    std::uint32_t actual = crc32(crc32(0, nullptr, 0), type, len + 4);
    if (crc != actual) fail("png: chunk crc mismatch");
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail("png: bad IHDR");
      w = be32(data);
      h = be32(data + 4);
      int depth = data[8], color = data[9], comp = data[10], filt = data[11], inter = data[12];
      if (depth == 16) fail("png: 16-bit samples are not supported");
      if (depth != 8) fail("png: unsupported bit depth");
      if (color == 3) fail("png: palette images are not supported");
      if (color != 0 && color != 2) fail("png: unsupported color type");
      if (comp != 0 || filt != 0) fail("png: unsupported compression/filter method");
      if (inter != 0) fail("png: interlaced images are not supported");
      channels = (color == 0) ? 1 : 3;
      seen_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_iend = true;
    }
    pos += 12 + len;
  }
  if (!seen_ihdr || !seen_iend) fail("png: missing IHDR or IEND");
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) fail("png: bad dimensions");

  std::size_t stride = static_cast<std::size_t>(w) * channels;
  std::vector<std::uint8_t> raw((stride + 1) * h);
  uLongf raw_len = raw.size();
  int rc = uncompress(raw.data(), &raw_len, idat.data(), idat.size());
  if (rc != Z_OK || raw_len != raw.size()) fail("png: corrupt or truncated pixel data");

  PixelGrid grid(static_cast<int>(w), static_cast<int>(h), channels);
  int bpp = channels;
  std::vector<std::uint8_t> prev(stride, 0);
  for (std::uint32_t r = 0; r < h; ++r) {
    const std::uint8_t* line = raw.data() + r * (stride + 1);
    std::uint8_t filter = line[0];
    std::uint8_t* out = grid.samples.data() + r * stride;
    for (std::size_t i = 0; i < stride; ++i) {
      int x = line[1 + i];
      int a = (i >= static_cast<std::size_t>(bpp)) ? out[i - bpp] : 0;
      int u = prev[i];
      int c = (i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
      switch (filter) {
        case 0: break;
        case 1: x += a; break;
        case 2: x += u; break;
        case 3: x += (a + u) / 2; break;
        case 4: x += paeth(a, u, c); break;
        default: fail("png: bad filter type");
      }
      out[i] = static_cast<std::uint8_t>(x & 0xff);
    }
    std::memcpy(prev.data(), out, stride);
  }
  return grid;
}

void png_chunk(std::vector<std::uint8_t>& out, const char* type,
               std::span<const std::uint8_t> data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  std::uint32_t crc = crc32(crc32(0, nullptr, 0), out.data() + type_at, 4 + data.size());
  put_be32(out, crc);
}

std::vector<std::uint8_t> encode_png(const PixelGrid& g) {
  std::vector<std::uint8_t> out(kPngSig, kPngSig + 8);
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(g.width));
  put_be32(ihdr, static_cast<std::uint32_t>(g.height));
  ihdr.push_back(8);
  ihdr.push_back(g.channels == 1 ? 0 : 2);
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  png_chunk(out, "IHDR", ihdr);

  std::size_t stride = static_cast<std::size_t>(g.width) * g.channels;
  std::vector<std::uint8_t> raw((stride + 1) * g.height);
  for (int r = 0; r < g.height; ++r) {
    raw[r * (stride + 1)] = 0;  // filter: none, keeps the stream lossless and simple
    std::memcpy(raw.data() + r * (stride + 1) + 1, g.samples.data() + r * stride, stride);
  }
  uLongf bound = compressBound(raw.size());
  std::vector<std::uint8_t> comp(bound);
  if (compress2(comp.data(), &bound, raw.data(), raw.size(), 6) != Z_OK)
    fail("png: deflate failed");
  comp.resize(bound);
  png_chunk(out, "IDAT", comp);
  png_chunk(out, "IEND", {});
  return out;
}

// ----------------------------------------------------------------------- BMP

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put_le32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 24) & 0xff);
}
void put_le16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
}

PixelGrid decode_bmp(std::span<const std::uint8_t> b) {
  if (b.size() < 54 || b[0] != 'B' || b[1] != 'M') fail("bmp: bad header");
  std::uint32_t data_off = le32(b.data() + 10);
  std::uint32_t info_size = le32(b.data() + 14);
  if (info_size < 40) fail("bmp: unsupported header version");
  std::int32_t w = static_cast<std::int32_t>(le32(b.data() + 18));
  std::int32_t h = static_cast<std::int32_t>(le32(b.data() + 22));
  bool top_down = h < 0;
  if (top_down) h = -h;
  std::uint16_t planes = le16(b.data() + 26);
  std::uint16_t bpp = le16(b.data() + 28);
  std::uint32_t compression = le32(b.data() + 30);
  if (planes != 1) fail("bmp: bad plane count");
  if (compression != 0) fail("bmp: compressed BMP is not supported");
  if (bpp != 8 && bpp != 24) fail("bmp: only 8-bit and 24-bit are supported");
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20)) fail("bmp: bad dimensions");

  std::vector<std::uint8_t> gray_of(256);
  if (bpp == 8) {
    std::uint32_t colors = le32(b.data() + 46);
    if (colors == 0) colors = 256;
    std::size_t pal_at = 14 + info_size;
    if (pal_at + colors * 4 > b.size()) fail("bmp: truncated palette");
    for (std::uint32_t i = 0; i < colors; ++i) {
      const std::uint8_t* e = b.data() + pal_at + i * 4;  // B,G,R,reserved
      if (e[0] != e[1] || e[1] != e[2])
        fail("bmp: non-grayscale palette is not supported");
      gray_of[i] = e[0];
    }
    for (std::uint32_t i = colors; i < 256; ++i) gray_of[i] = 0;
  }

  int channels = (bpp == 8) ? 1 : 3;
  std::size_t row_bytes = (static_cast<std::size_t>(w) * bpp / 8 + 3) & ~std::size_t(3);
  if (data_off + row_bytes * h > b.size()) fail("bmp: truncated pixel data");
  PixelGrid grid(w, h, channels);
  for (int r = 0; r < h; ++r) {
    int src_row = top_down ? r : (h - 1 - r);
    const std::uint8_t* line = b.data() + data_off + row_bytes * src_row;
    if (bpp == 8) {
      for (int c = 0; c < w; ++c) grid.at(r, c, 0) = gray_of[line[c]];
    } else {
      for (int c = 0; c < w; ++c) {
        grid.at(r, c, 0) = line[c * 3 + 2];
        grid.at(r, c, 1) = line[c * 3 + 1];
        grid.at(r, c, 2) = line[c * 3 + 0];
      }
    }
  }
  return grid;
}

std::vector<std::uint8_t> encode_bmp(const PixelGrid& g) {
  int bpp = g.channels == 1 ? 8 : 24;
  std::size_t row_bytes = (static_cast<std::size_t>(g.width) * bpp / 8 + 3) & ~std::size_t(3);
  std::uint32_t palette_bytes = (bpp == 8) ? 256 * 4 : 0;
  std::uint32_t data_off = 14 + 40 + palette_bytes;
  std::uint32_t file_size = data_off + static_cast<std::uint32_t>(row_bytes * g.height);

  std::vector<std::uint8_t> out;
  out.reserve(file_size);
  out.push_back('B');
  out.push_back('M');
  put_le32(out, file_size);
  put_le32(out, 0);
  put_le32(out, data_off);
  put_le32(out, 40);
  put_le32(out, static_cast<std::uint32_t>(g.width));
  put_le32(out, static_cast<std::uint32_t>(g.height));
  put_le16(out, 1);
  put_le16(out, static_cast<std::uint16_t>(bpp));
  put_le32(out, 0);
  put_le32(out, static_cast<std::uint32_t>(row_bytes * g.height));
  put_le32(out, 2835);
  put_le32(out, 2835);
  put_le32(out, (bpp == 8) ? 256 : 0);
  put_le32(out, 0);
  if (bpp == 8) {
    for (int i = 0; i < 256; ++i) {
      out.push_back(static_cast<std::uint8_t>(i));
      out.push_back(static_cast<std::uint8_t>(i));
      out.push_back(static_cast<std::uint8_t>(i));
      out.push_back(0);
    }
  }
  std::vector<std::uint8_t> line(row_bytes, 0);
  for (int r = g.height - 1; r >= 0; --r) {
    std::fill(line.begin(), line.end(), 0);
    if (bpp == 8) {
      for (int c = 0; c < g.width; ++c) line[c] = g.at(r, c, 0);
    } else {
      for (int c = 0; c < g.width; ++c) {
        line[c * 3 + 0] = g.at(r, c, 2);
        line[c * 3 + 1] = g.at(r, c, 1);
        line[c * 3 + 2] = g.at(r, c, 0);
      }
    }
    out.insert(out.end(), line.begin(), line.end());
  }
  return out;
}

ImageFormat sniff(std::span<const std::uint8_t> b) {
  if (b.size() >= 2 && b[0] == 'P' && b[1] == '5') return ImageFormat::pgm;
  if (b.size() >= 2 && b[0] == 'P' && b[1] == '6') return ImageFormat::ppm;
  if (b.size() >= 8 && std::memcmp(b.data(), kPngSig, 8) == 0) return ImageFormat::png;
  if (b.size() >= 2 && b[0] == 'B' && b[1] == 'M') return ImageFormat::bmp;
  fail("load_image: unrecognized format");
}

}  // namespace

PixelGrid load_image(std::span<const std::uint8_t> bytes,
                     std::optional<ImageFormat> hint) {
  if (bytes.size() < 2) fail("load_image: input too short");
  ImageFormat fmt = hint ? *hint : sniff(bytes);
  switch (fmt) {
    case ImageFormat::pgm:
      if (bytes[0] != 'P' || bytes[1] != '5') fail("pgm: bad magic");
      return decode_pnm(bytes, 1);
    case ImageFormat::ppm:
      if (bytes[0] != 'P' || bytes[1] != '6') fail("ppm: bad magic");
      return decode_pnm(bytes, 3);
    case ImageFormat::png:
      return decode_png(bytes);
    case ImageFormat::bmp:
      return decode_bmp(bytes);
  }
  fail("load_image: bad format");
}

std::vector<std::uint8_t> write_image(const PixelGrid& grid, ImageFormat fmt) {
  if (grid.width <= 0 || grid.height <= 0) fail("write_image: empty grid");
  if (grid.sample_count() !=
      static_cast<std::size_t>(grid.width) * grid.height * grid.channels)
    fail("write_image: sample buffer does not match shape");
  switch (fmt) {
    case ImageFormat::pgm: {
      if (grid.channels != 1) fail("write_image: PGM requires a 1-channel grid");
      std::vector<std::uint8_t> out;
      encode_pnm(grid, false, out);
      return out;
    }
    case ImageFormat::ppm: {
      if (grid.channels != 3) fail("write_image: PPM requires a 3-channel grid");
      std::vector<std::uint8_t> out;
      encode_pnm(grid, true, out);
      return out;
    }
    case ImageFormat::png:
      return encode_png(grid);
    case ImageFormat::bmp:
      return encode_bmp(grid);
  }
  fail("write_image: bad format");
}

std::optional<ImageFormat> format_from_path(const std::string& path) {
  auto dot = path.rfind('.');
  if (dot == std::string::npos) return std::nullopt;
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == "pgm") return ImageFormat::pgm;
  if (ext == "ppm") return ImageFormat::ppm;
  if (ext == "png") return ImageFormat::png;
  if (ext == "bmp") return ImageFormat::bmp;
  return std::nullopt;
}

PixelGrid load_image_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return load_image(bytes);
}

void write_image_file(const PixelGrid& grid, const std::string& path) {
  auto fmt = format_from_path(path);
  if (!fmt) fail("write_image_file: unknown extension on " + path);
  auto bytes = write_image(grid, *fmt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) fail("short write to " + path);
}

}  // namespace stegmod
