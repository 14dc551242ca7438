#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace grasp {

// 16-bit binary PGM (P5, maxval 65535, big-endian samples), row 0 at top.
void write_pgm16(const std::string& path, int width, int height,
                 const std::uint16_t* data);
std::vector<std::uint16_t> read_pgm16(const std::string& path, int& width, int& height);

// Grayscale PFM ("Pf", scale -1.0 = little-endian), rows bottom-to-top on
// disk per convention; the in-memory layout here is row 0 at top.
void write_pfm(const std::string& path, int width, int height, const float* data);
std::vector<float> read_pfm(const std::string& path, int& width, int& height);

}  // namespace grasp
