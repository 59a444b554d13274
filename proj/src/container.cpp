#include "mcinr/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

namespace mcinr {

namespace {

constexpr std::uint8_t magic[4] = {'M', 'C', 'I', 'R'};

template <class Uint_>
void put(std::vector<std::uint8_t> &out, Uint_ v)
{
  for (std::size_t k = 0; k < sizeof(Uint_); ++k) { out.push_back(static_cast<std::uint8_t>(v >> (8 * k))); }
}

template <class Uint_>
Uint_ get(std::uint8_t const *p)
{
  Uint_ v = 0;
  for (std::size_t k = 0; k < sizeof(Uint_); ++k) { v |= static_cast<Uint_>(static_cast<Uint_>(p[k]) << (8 * k)); }
  return v;
}

std::uint32_t crc32_of(std::uint8_t const *data, std::size_t size)
{
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (size > 0) {
    auto const chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::size_t element_size(DType dtype)
{
  switch (dtype) {
  case DType::complex64: return 8;
  case DType::complex128: return 16;
  case DType::float32: return 4;
  case DType::uint1: return 0;
  }
  return 0;
}

bool known_dtype(std::uint8_t tag) { return tag <= static_cast<std::uint8_t>(DType::uint1); }

std::string dims_string(std::vector<std::uint32_t> const &dims)
{
  std::ostringstream s;
  s << "(";
  for (std::size_t k = 0; k < dims.size(); ++k) { s << (k ? "," : "") << dims[k]; }
  s << ")";
  return s.str();
}

void check_count(std::vector<std::uint32_t> const &dims, std::size_t count)
{
  std::uint64_t n = 1;
  for (auto d : dims) { n *= d; }
  require(n == count, ErrorCode::shape,
          "container dims " + dims_string(dims) + " hold " + std::to_string(n) + " elements, got " +
            std::to_string(count));
}

std::uint32_t dim(Index n)
{
  require(n >= 0 && n <= static_cast<Index>(UINT32_MAX), ErrorCode::shape, "dimension does not fit in u32");
  return static_cast<std::uint32_t>(n);
}

} // namespace

std::string_view to_string(DType dtype)
{
  switch (dtype) {
  case DType::complex64: return "complex64";
  case DType::complex128: return "complex128";
  case DType::float32: return "float32";
  case DType::uint1: return "uint1";
  }
  return "unknown";
}

std::uint64_t ArrayContainer::elements() const
{
  std::uint64_t n = 1;
  for (auto d : dims) { n *= d; }
  return n;
}

std::uint64_t ArrayContainer::payload_size() const
{
  if (dtype != DType::uint1) { return elements() * element_size(dtype); }
  if (dims.empty()) { return 1; }
  std::uint64_t rows = 1;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) { rows *= dims[k]; }
  return rows * ((static_cast<std::uint64_t>(dims.back()) + 7) / 8);
}

std::vector<std::uint8_t> encode_container(ArrayContainer const &c)
{
  require(c.dims.size() <= 255, ErrorCode::validation, "container rank must be <= 255");
  require(c.payload.size() == c.payload_size(), ErrorCode::validation,
          "payload is " + std::to_string(c.payload.size()) + " bytes, dims " + dims_string(c.dims) + " need " +
            std::to_string(c.payload_size()));
  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * c.dims.size() + c.payload.size());
  for (auto b : magic) { out.push_back(b); }
  put<std::uint16_t>(out, ArrayContainer::version);
  out.push_back(static_cast<std::uint8_t>(c.dtype));
  out.push_back(static_cast<std::uint8_t>(c.dims.size()));
  for (auto d : c.dims) { put<std::uint32_t>(out, d); }
  out.insert(out.end(), c.payload.begin(), c.payload.end());
  put<std::uint32_t>(out, crc32_of(out.data(), out.size()));
  return out;
}

ArrayContainer decode_container(std::span<std::uint8_t const> bytes)
{
  require(bytes.size() >= 4, ErrorCode::truncated, "container shorter than its magic");
  require(std::memcmp(bytes.data(), magic, 4) == 0, ErrorCode::bad_magic, "not an MCIR container");
  require(bytes.size() >= 8, ErrorCode::truncated, "container header is truncated");
  auto const ver = get<std::uint16_t>(bytes.data() + 4);
  require(ver == ArrayContainer::version, ErrorCode::unsupported_version,
          "unsupported container version " + std::to_string(ver));
  std::uint8_t const tag = bytes[6];
  std::size_t const ndim = bytes[7];
  std::size_t const header = 8 + 4 * ndim;
  require(bytes.size() >= header, ErrorCode::truncated, "container dims are truncated");

  ArrayContainer c;
  for (std::size_t k = 0; k < ndim; ++k) { c.dims.push_back(get<std::uint32_t>(bytes.data() + 8 + 4 * k)); }
  require(known_dtype(tag), ErrorCode::dtype_mismatch, "unknown dtype tag " + std::to_string(tag));
  c.dtype = static_cast<DType>(tag);

  std::uint64_t const need = c.payload_size();
  require(bytes.size() - header >= 4 && bytes.size() - header - 4 >= need, ErrorCode::truncated,
          "container payload is truncated: dims " + dims_string(c.dims) + " need " + std::to_string(need) +
            " bytes plus CRC");
  require(bytes.size() - header - 4 == need, ErrorCode::validation, "trailing bytes after container CRC");

  std::size_t const body = header + need;
  auto const stored = get<std::uint32_t>(bytes.data() + body);
  require(crc32_of(bytes.data(), body) == stored, ErrorCode::crc, "container CRC mismatch");
  c.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.begin() + static_cast<std::ptrdiff_t>(body));
  return c;
}

void write_container(std::filesystem::path const &path, ArrayContainer const &c)
{
  auto const bytes = encode_container(c);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(f), ErrorCode::io, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(f), ErrorCode::io, "failed writing " + path.string());
}

ArrayContainer read_container(std::filesystem::path const &path)
{
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode_container(bytes);
  } catch (Error const &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void expect_dtype(ArrayContainer const &c, std::initializer_list<DType> accepted, std::string const &what)
{
  for (auto d : accepted) {
    if (c.dtype == d) { return; }
  }
  std::string names;
  for (auto d : accepted) { names += (names.empty() ? "" : "|") + std::string(to_string(d)); }
  throw Error(ErrorCode::dtype_mismatch,
              what + " expects " + names + ", container holds " + std::string(to_string(c.dtype)));
}

ArrayContainer pack_complex(std::vector<std::uint32_t> dims, std::span<Complex<double> const> values, DType dtype)
{
  require(dtype == DType::complex64 || dtype == DType::complex128, ErrorCode::dtype_mismatch,
          "pack_complex needs a complex dtype");
  check_count(dims, values.size());
  ArrayContainer c;
  c.dtype = dtype;
  c.dims = std::move(dims);
  c.payload.reserve(values.size() * element_size(dtype));
  for (auto const &v : values) {
    if (dtype == DType::complex64) {
      put(c.payload, std::bit_cast<std::uint32_t>(static_cast<float>(v.real())));
      put(c.payload, std::bit_cast<std::uint32_t>(static_cast<float>(v.imag())));
    } else {
      put(c.payload, std::bit_cast<std::uint64_t>(v.real()));
      put(c.payload, std::bit_cast<std::uint64_t>(v.imag()));
    }
  }
  return c;
}

ArrayContainer pack_float32(std::vector<std::uint32_t> dims, std::span<float const> values)
{
  check_count(dims, values.size());
  ArrayContainer c;
  c.dtype = DType::float32;
  c.dims = std::move(dims);
  c.payload.reserve(values.size() * 4);
  for (float v : values) { put(c.payload, std::bit_cast<std::uint32_t>(v)); }
  return c;
}

ArrayContainer pack_bits(std::vector<std::uint32_t> dims, std::vector<bool> const &values)
{
  check_count(dims, values.size());
  ArrayContainer c;
  c.dtype = DType::uint1;
  c.dims = std::move(dims);
  c.payload.assign(c.payload_size(), 0);
  std::size_t const row = c.dims.empty() ? 1 : c.dims.back();
  std::size_t const stride = (row + 7) / 8;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k]) { c.payload[(k / row) * stride + (k % row) / 8] |= static_cast<std::uint8_t>(1u << (k % row % 8)); }
  }
  return c;
}

std::vector<Complex<double>> unpack_complex(ArrayContainer const &c)
{
  expect_dtype(c, {DType::complex64, DType::complex128}, "complex array");
  std::vector<Complex<double>> out(c.elements());
  std::uint8_t const *p = c.payload.data();
  for (auto &v : out) {
    if (c.dtype == DType::complex64) {
      v = {std::bit_cast<float>(get<std::uint32_t>(p)), std::bit_cast<float>(get<std::uint32_t>(p + 4))};
      p += 8;
    } else {
      v = {std::bit_cast<double>(get<std::uint64_t>(p)), std::bit_cast<double>(get<std::uint64_t>(p + 8))};
      p += 16;
    }
  }
  return out;
}

std::vector<float> unpack_float32(ArrayContainer const &c)
{
  expect_dtype(c, {DType::float32}, "float array");
  std::vector<float> out(c.elements());
  for (std::size_t k = 0; k < out.size(); ++k) { out[k] = std::bit_cast<float>(get<std::uint32_t>(&c.payload[4 * k])); }
  return out;
}

std::vector<bool> unpack_bits(ArrayContainer const &c)
{
  expect_dtype(c, {DType::uint1}, "bit array");
  std::vector<bool> out(c.elements());
  std::size_t const row = c.dims.empty() ? 1 : c.dims.back();
  std::size_t const stride = (row + 7) / 8;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = (c.payload[(k / row) * stride + (k % row) / 8] >> (k % row % 8)) & 1u;
  }
  return out;
}

namespace {

template <class Plane_>
void append_plane(std::vector<typename Plane_::Scalar> &out, Plane_ const &p)
{
  out.insert(out.end(), p.data(), p.data() + p.size());
}

Plane<double> plane_at(std::vector<Complex<double>> const &v, std::size_t offset, Index ny, Index nz)
{
  Plane<double> p(ny, nz);
  std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(offset), ny * nz, p.data());
  return p;
}

void require_rank(ArrayContainer const &c, std::initializer_list<std::size_t> ranks, std::string const &what)
{
  for (auto r : ranks) {
    if (c.dims.size() == r) { return; }
  }
  throw Error(ErrorCode::shape, what + " container has unexpected dims " + dims_string(c.dims));
}

} // namespace

ArrayContainer to_container(std::vector<ContrastStack<double>> const &volume, DType dtype)
{
  require(!volume.empty(), ErrorCode::shape, "image volume has no slices");
  Grid const g = volume.front().grid();
  Index const N = volume.front().contrasts();
  std::vector<Complex<double>> flat;
  for (auto const &stack : volume) {
    require(stack.contrasts() == N && stack.grid() == g, ErrorCode::shape, "slices of a volume must share shape");
    for (auto const &im : stack.images) { append_plane(flat, im); }
  }
  return pack_complex({dim(static_cast<Index>(volume.size())), dim(N), dim(g.ny), dim(g.nz)}, flat, dtype);
}

std::vector<ContrastStack<double>> stacks_from_container(ArrayContainer const &c)
{
  require_rank(c, {3, 4}, "image volume");
  auto const v = unpack_complex(c);
  std::size_t const r = c.dims.size();
  Index const S = r == 4 ? c.dims[0] : 1;
  Index const N = c.dims[r - 3], ny = c.dims[r - 2], nz = c.dims[r - 1];
  std::vector<ContrastStack<double>> out(static_cast<std::size_t>(S));
  std::size_t offset = 0;
  for (auto &stack : out) {
    for (Index n = 0; n < N; ++n, offset += static_cast<std::size_t>(ny * nz)) {
      stack.images.push_back(plane_at(v, offset, ny, nz));
    }
  }
  return out;
}

ArrayContainer to_container(CoilMaps<double> const &coils, DType dtype)
{
  Grid const g = coils.grid();
  std::vector<Complex<double>> flat;
  for (auto const &m : coils.maps) { append_plane(flat, m); }
  return pack_complex({dim(coils.coils()), dim(g.ny), dim(g.nz)}, flat, dtype);
}

CoilMaps<double> coils_from_container(ArrayContainer const &c)
{
  require_rank(c, {3}, "coil map");
  auto const v = unpack_complex(c);
  CoilMaps<double> out;
  std::size_t const plane = static_cast<std::size_t>(c.dims[1]) * c.dims[2];
  for (std::uint32_t k = 0; k < c.dims[0]; ++k) { out.maps.push_back(plane_at(v, k * plane, c.dims[1], c.dims[2])); }
  return out;
}

ArrayContainer planes_to_container(std::vector<MaskPlane> const &planes)
{
  require(!planes.empty(), ErrorCode::shape, "no mask planes");
  Index const ny = planes.front().rows(), nz = planes.front().cols();
  std::vector<bool> bits;
  for (auto const &p : planes) {
    require(p.rows() == ny && p.cols() == nz, ErrorCode::shape, "mask planes must share shape");
    bits.insert(bits.end(), p.data(), p.data() + p.size());
  }
  return pack_bits({dim(static_cast<Index>(planes.size())), dim(ny), dim(nz)}, bits);
}

std::vector<MaskPlane> planes_from_container(ArrayContainer const &c)
{
  require_rank(c, {2, 3}, "mask");
  auto const bits = unpack_bits(c);
  std::size_t const r = c.dims.size();
  Index const K = r == 3 ? c.dims[0] : 1, ny = c.dims[r - 2], nz = c.dims[r - 1];
  std::vector<MaskPlane> out;
  std::size_t offset = 0;
  for (Index k = 0; k < K; ++k) {
    MaskPlane p(ny, nz);
    for (Index i = 0; i < p.size(); ++i) { p.data()[i] = bits[offset++]; }
    out.push_back(std::move(p));
  }
  return out;
}

ArrayContainer to_container(MaskSet const &masks)
{
  std::vector<MaskPlane> planes;
  for (auto const &m : masks.masks) { planes.push_back(m.bits); }
  return planes_to_container(planes);
}

MaskSet masks_from_container(ArrayContainer const &c)
{
  require_rank(c, {3}, "mask set");
  MaskSet out;
  Index n = 0;
  for (auto &p : planes_from_container(c)) {
    SamplingMask m;
    m.bits = std::move(p);
    m.contrast = n++;
    out.masks.push_back(std::move(m));
  }
  return out;
}

ArrayContainer to_container(std::vector<KSpace<double>> const &slices, DType dtype)
{
  require(!slices.empty(), ErrorCode::shape, "k-space volume has no slices");
  auto const &first = slices.front();
  Grid const g = first.grid();
  std::vector<Complex<double>> flat;
  for (auto const &k : slices) {
    require(k.coils == first.coils && k.contrasts == first.contrasts && k.grid() == g, ErrorCode::shape,
            "k-space slices must share shape");
    for (auto const &p : k.planes) { append_plane(flat, p); }
  }
  return pack_complex({dim(static_cast<Index>(slices.size())), dim(first.coils), dim(first.contrasts), dim(g.ny), dim(g.nz)},
                      flat, dtype);
}

std::vector<KSpace<double>> kspace_from_container(ArrayContainer const &c)
{
  require_rank(c, {4, 5}, "k-space");
  auto const v = unpack_complex(c);
  std::size_t const r = c.dims.size();
  Index const S = r == 5 ? c.dims[0] : 1;
  Index const C = c.dims[r - 4], N = c.dims[r - 3], ny = c.dims[r - 2], nz = c.dims[r - 1];
  std::vector<KSpace<double>> out;
  std::size_t offset = 0;
  for (Index s = 0; s < S; ++s) {
    KSpace<double> k;
    k.coils = C;
    k.contrasts = N;
    for (Index p = 0; p < C * N; ++p, offset += static_cast<std::size_t>(ny * nz)) {
      k.planes.push_back(plane_at(v, offset, ny, nz));
    }
    out.push_back(std::move(k));
  }
  return out;
}

} // namespace mcinr
