#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowbench/numcore/tensor.hpp"

namespace flowbench::numcore {

// Little-endian primitives shared by every file format in the project.
void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_bytes(std::ostream& out, const std::string& s);  // u32 length + payload

std::uint8_t read_u8(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
std::string read_bytes(std::istream& in);

// Tensor group: u32 count, then per tensor u32 ndim, u64 dims..., f64 payload.
// Round-trips bit-exactly.
void write_tensors(std::ostream& out, const std::vector<const Tensor*>& tensors);
void write_tensors(std::ostream& out, const std::vector<Tensor>& tensors);
std::vector<Tensor> read_tensors(std::istream& in);

// Standalone parameter checkpoint file:
//   magic "FBTENS01", u32 version, tensor group.
void save_param_file(const std::filesystem::path& path,
                     const std::vector<const Tensor*>& tensors);
std::vector<Tensor> load_param_file(const std::filesystem::path& path);

void expect_magic(std::istream& in, const char* magic, const char* what);
void check_version(std::uint32_t got, std::uint32_t want, const char* what);

}  // namespace flowbench::numcore
