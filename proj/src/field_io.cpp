#include "qslsp/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "qslsp/error.hpp"

namespace qslsp {
namespace {

static_assert(std::endian::native == std::endian::little, "field container assumes a little-endian host");

constexpr char kMagic[8] = {'Q', 'S', 'L', 'S', 'P', 'F', 'L', 'D'};

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("field file: truncated header");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_field_csv(const std::filesystem::path& path, const ScalarField& f) {
  auto out = open_out(path, std::ios::out | std::ios::trunc);
  out.precision(17);
  if (f.is_box()) {
    const BoxGrid& g = f.box();
    out << "index,x1,x2,x3,value\n";
    for (std::size_t i = 0; i < g.n(); ++i)
      for (std::size_t j = 0; j < g.n(); ++j)
        for (std::size_t k = 0; k < g.n(); ++k) {
          const auto x = g.point(i, j, k);
          const std::size_t id = g.index(i, j, k);
          out << id << ',' << x[0] << ',' << x[1] << ',' << x[2] << ',' << f[id] << '\n';
        }
  } else {
    const RadialGrid& g = f.radial();
    out << "index,r,value\n";
    for (std::size_t j = 0; j < g.size(); ++j) out << j << ',' << g.node(j) << ',' << f[j] << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_field_binary(const std::filesystem::path& path, const ScalarField& f) {
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  out.write(kMagic, 8);
  if (f.is_box()) {
    const BoxGrid& g = f.box();
    const bool centred = g.center() == Point3{0.0, 0.0, 0.0};
    put<std::uint32_t>(out, centred ? 2u : 3u);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.n()));
    put<double>(out, g.spacing());
    put<double>(out, g.half_width());
    if (!centred)
      for (double c : g.center()) put<double>(out, c);
  } else {
    const RadialGrid& g = f.radial();
    put<std::uint32_t>(out, 1u);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.size()));
    put<double>(out, g.spacing());
    put<double>(out, g.r_max());
  }
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
  if (!out) throw Error("write failed: " + path.string());
}

ScalarField read_field_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error("field file: bad magic in " + path.string());
  const auto kind = get<std::uint32_t>(in);
  const auto n = get<std::uint32_t>(in);
  get<double>(in);  // spacing is implied by n and the extent
  const double extent = get<double>(in);
  auto make_grid = [&]() -> Grid {
    if (kind == 1) return RadialGrid(extent, n);
    if (kind != 2 && kind != 3) throw Error("field file: unknown grid kind");
    Point3 c{0.0, 0.0, 0.0};
    if (kind == 3)
      for (double& v : c) v = get<double>(in);
    return BoxGrid(extent, n, c);
  };
  Grid grid = make_grid();
  std::vector<double> values(grid_size(grid));
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw Error("field file: truncated data");
  return ScalarField(std::move(grid), std::move(values));
}

}  // namespace qslsp
