#include "graspgen/image_io.hpp"

#include <cstring>
#include <fstream>

#include "graspgen/errors.hpp"

namespace grasp {

void write_pgm16(const std::string& path, int width, int height,
                 const std::uint16_t* data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * 2);
  for (int y = 0; y < height; ++y) {
    const std::uint16_t* src = data + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      row[2 * static_cast<std::size_t>(x)] = static_cast<unsigned char>(src[x] >> 8);
      row[2 * static_cast<std::size_t>(x) + 1] = static_cast<unsigned char>(src[x] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
}

std::vector<std::uint16_t> read_pgm16(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open");
  std::string magic;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || maxval != 65535) throw ParseError(path, 1, "expected 16-bit P5 PGM");
  in.get();  // single whitespace after maxval
  std::vector<std::uint16_t> data(static_cast<std::size_t>(width) *
                                  static_cast<std::size_t>(height));
  std::vector<unsigned char> raw(data.size() * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw ParseError(path, 0, "truncated PGM payload");
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return data;
}

void write_pfm(const std::string& path, int width, int height, const float* data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << "Pf\n" << width << " " << height << "\n-1.0\n";
  for (int y = height - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(data + static_cast<std::size_t>(y) * width),
              static_cast<std::streamsize>(sizeof(float)) * width);
}

std::vector<float> read_pfm(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open");
  std::string magic;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (magic != "Pf" || scale >= 0.0)
    throw ParseError(path, 1, "expected little-endian grayscale PFM");
  in.get();
  std::vector<float> data(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(data.data() + static_cast<std::size_t>(y) * width),
            static_cast<std::streamsize>(sizeof(float)) * width);
    if (!in) throw ParseError(path, 0, "truncated PFM payload");
  }
  return data;
}

}  // namespace grasp
