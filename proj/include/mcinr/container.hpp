#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcinr/sampling.hpp"
#include "mcinr/types.hpp"

namespace mcinr {

/// On-disk element type. uint1 is bit-packed LSB first, each row (last axis) padded to a whole byte.
enum class DType : std::uint8_t
{
  complex64 = 0,
  complex128 = 1,
  float32 = 2,
  uint1 = 3,
};

std::string_view to_string(DType dtype);

/// In-memory image of an MCIR file:
///   "MCIR" | u16 version | u8 dtype | u8 ndim | u32 dims[ndim] | payload | u32 crc32
/// All integers little-endian; payload row-major; the CRC covers every preceding byte.
struct ArrayContainer
{
  static constexpr std::uint16_t version = 1;

  DType dtype = DType::float32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  std::uint64_t elements() const;
  /// Payload bytes implied by dtype and dims.
  std::uint64_t payload_size() const;
  bool operator==(ArrayContainer const &) const = default;
};

std::vector<std::uint8_t> encode_container(ArrayContainer const &c);
ArrayContainer decode_container(std::span<std::uint8_t const> bytes);

void write_container(std::filesystem::path const &path, ArrayContainer const &c);
ArrayContainer read_container(std::filesystem::path const &path);

/// Throws ErrorCode::dtype_mismatch unless c holds one of the accepted types.
void expect_dtype(ArrayContainer const &c, std::initializer_list<DType> accepted, std::string const &what);

ArrayContainer pack_complex(std::vector<std::uint32_t> dims, std::span<Complex<double> const> values,
                            DType dtype = DType::complex64);
ArrayContainer pack_float32(std::vector<std::uint32_t> dims, std::span<float const> values);
ArrayContainer pack_bits(std::vector<std::uint32_t> dims, std::vector<bool> const &values);

/// complex64 or complex128 widened to double.
std::vector<Complex<double>> unpack_complex(ArrayContainer const &c);
std::vector<float> unpack_float32(ArrayContainer const &c);
std::vector<bool> unpack_bits(ArrayContainer const &c);

// Domain layouts. Volumes of image stacks are (S, N, Vy, Vz); a single stack may also be (N, Vy, Vz).

ArrayContainer to_container(std::vector<ContrastStack<double>> const &volume, DType dtype = DType::complex64);
std::vector<ContrastStack<double>> stacks_from_container(ArrayContainer const &c);

/// Coil maps as (C, Vy, Vz).
ArrayContainer to_container(CoilMaps<double> const &coils, DType dtype = DType::complex64);
CoilMaps<double> coils_from_container(ArrayContainer const &c);

/// Masks as (N, Vy, Vz) bits.
ArrayContainer to_container(MaskSet const &masks);
MaskSet masks_from_container(ArrayContainer const &c);

/// One plane or a stack of planes as (Vy, Vz) / (K, Vy, Vz) bits.
ArrayContainer planes_to_container(std::vector<MaskPlane> const &planes);
std::vector<MaskPlane> planes_from_container(ArrayContainer const &c);

/// Slice-decoupled k-space as (S, C, N, Vy, Vz); a single slice may also be (C, N, Vy, Vz).
ArrayContainer to_container(std::vector<KSpace<double>> const &slices, DType dtype = DType::complex64);
std::vector<KSpace<double>> kspace_from_container(ArrayContainer const &c);

} // namespace mcinr
