#include "mcinr/readout.hpp"

#include "mcinr/fft.hpp"

namespace mcinr {

namespace {

ComplexArray transform_axis0(ComplexArray const &a, bool inverse)
{
  a.validate();
  require(!a.dims.empty(), ErrorCode::shape, "readout transform needs at least one axis");
  ComplexArray out = a;
  Index const n = a.dims.front();
  if (n == 0) { return out; }
  Index const stride = a.elements() / n;
  std::vector<Complex<double>> in, tmp;
  for (Index k = 0; k < stride; ++k) { detail::fft1c_strided<double>(out.data.data() + k, n, stride, inverse, in, tmp); }
  return out;
}

} // namespace

Index ComplexArray::elements() const
{
  Index n = 1;
  for (auto d : dims) { n *= d; }
  return n;
}

void ComplexArray::validate() const
{
  for (auto d : dims) { require(d >= 0, ErrorCode::shape, "negative array dimension"); }
  require(elements() == static_cast<Index>(data.size()), ErrorCode::shape,
          "array holds " + std::to_string(data.size()) + " values, dims need " + std::to_string(elements()));
}

ComplexArray decouple_readout(ComplexArray const &kspace) { return transform_axis0(kspace, true); }

ComplexArray recompose_readout(ComplexArray const &hybrid) { return transform_axis0(hybrid, false); }

std::vector<KSpace<double>> split_slices(ComplexArray const &hybrid)
{
  hybrid.validate();
  require(hybrid.dims.size() == 5, ErrorCode::shape, "slice-decoupled k-space must be (S, C, N, Vy, Vz)");
  Index const S = hybrid.dims[0], C = hybrid.dims[1], N = hybrid.dims[2], ny = hybrid.dims[3], nz = hybrid.dims[4];
  std::vector<KSpace<double>> out;
  auto it = hybrid.data.begin();
  for (Index s = 0; s < S; ++s) {
    KSpace<double> k(C, N, {ny, nz});
    for (auto &p : k.planes) {
      std::copy_n(it, ny * nz, p.data());
      it += ny * nz;
    }
    out.push_back(std::move(k));
  }
  return out;
}

ComplexArray join_slices(std::vector<KSpace<double>> const &slices)
{
  require(!slices.empty(), ErrorCode::shape, "no slices to join");
  auto const &f = slices.front();
  Grid const g = f.grid();
  ComplexArray a;
  a.dims = {static_cast<Index>(slices.size()), f.coils, f.contrasts, g.ny, g.nz};
  for (auto const &k : slices) {
    require(k.coils == f.coils && k.contrasts == f.contrasts && k.grid() == g, ErrorCode::shape,
            "k-space slices must share shape");
    for (auto const &p : k.planes) { a.data.insert(a.data.end(), p.data(), p.data() + p.size()); }
  }
  return a;
}

ComplexArray array_from_container(ArrayContainer const &c)
{
  ComplexArray a;
  for (auto d : c.dims) { a.dims.push_back(static_cast<Index>(d)); }
  a.data = unpack_complex(c);
  return a;
}

ArrayContainer to_container(ComplexArray const &a, DType dtype)
{
  a.validate();
  std::vector<std::uint32_t> dims;
  for (auto d : a.dims) {
    require(d <= static_cast<Index>(UINT32_MAX), ErrorCode::shape, "dimension does not fit in u32");
    dims.push_back(static_cast<std::uint32_t>(d));
  }
  return pack_complex(std::move(dims), a.data, dtype);
}

} // namespace mcinr
