#include "paratrunc/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "paratrunc/error.hpp"
#include "paratrunc/orlicz.hpp"

namespace paratrunc {

GridSpec GridSpec::base(int m, int nt, std::array<int, 2> n, double h, double tau) {
  GridSpec g;
  g.m = m;
  g.nt = nt;
  g.n = {n[0], m == 2 ? n[1] : 1};
  g.h = h;
  g.tau = tau;
  g.t0 = (nt - 1) * tau;
  g.t_origin = -g.t0;
  g.domain = {0, nt - 1, {0, 0}, {g.n[0] - 1, g.n[1] - 1}};
  g.validate();
  return g;
}

std::size_t GridSpec::stride(int axis) const {
  switch (axis) {
    case 0: return static_cast<std::size_t>(n[0]) * n[1];
    case 1: return static_cast<std::size_t>(n[1]);
    default: return 1;
  }
}

std::array<int, 3> GridSpec::coords(std::size_t nd) const {
  const int j = static_cast<int>(nd % n[1]);
  nd /= n[1];
  const int i = static_cast<int>(nd % n[0]);
  return {static_cast<int>(nd / n[0]), i, j};
}

bool GridSpec::in_domain(int k, int i, int j) const {
  return k >= domain.t_lo && k <= domain.t_hi && i >= domain.lo[0] && i <= domain.hi[0] &&
         j >= domain.lo[1] && j <= domain.hi[1];
}

bool GridSpec::same_lattice(const GridSpec& o) const {
  return m == o.m && nt == o.nt && n == o.n && h == o.h && tau == o.tau &&
         t_origin == o.t_origin && x_origin == o.x_origin;
}

void GridSpec::validate() const {
  if (m != 1 && m != 2) fail("grid: spatial dimension must be 1 or 2");
  if (nt < 4 || n[0] < 4 || (m == 2 && n[1] < 4)) fail("grid: need at least 4 nodes per axis");
  if (m == 1 && n[1] != 1) fail("grid: m = 1 grids carry a single node on the second axis");
  if (!(h > 0.0) || !(tau > 0.0) || !std::isfinite(h) || !std::isfinite(tau)) {
    fail("grid: steps must be positive and finite");
  }
  if (!(t0 > 0.0)) fail("grid: t0 must be positive");
}

Field::Field(const GridSpec& g, int r, double fill) : grid(g), rank(r) {
  if (r < 1) fail("field: rank must be positive");
  v.assign(g.nodes() * static_cast<std::size_t>(r), fill);
}

double Field::norm_at(std::size_t node) const {
  if (rank == 1) return std::abs(v[node]);
  double s = 0.0;
  for (int c = 0; c < rank; ++c) s += v[node * rank + c] * v[node * rank + c];
  return std::sqrt(s);
}

void Field::check_finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) fail("field: non-finite value");
  }
}

Field gradient(const Field& f) {
  if (f.rank != 1) fail("gradient: scalar field expected");
  const GridSpec& g = f.grid;
  Field out(g, g.m);
  for (int k = 0; k < g.nt; ++k) {
    for (int i = 0; i < g.n[0]; ++i) {
      for (int j = 0; j < g.n[1]; ++j) {
        const std::size_t z = g.node(k, i, j);
        for (int d = 0; d < g.m; ++d) {
          const int idx = d == 0 ? i : j;
          const std::size_t s = g.stride(d + 1);
          out.at(z, d) = idx + 1 < g.n[d] ? (f.v[z + s] - f.v[z]) / g.h : (f.v[z] - f.v[z - s]) / g.h;
        }
      }
    }
  }
  return out;
}

Field divergence(const Field& gf) {
  const GridSpec& g = gf.grid;
  if (gf.rank != g.m) fail("divergence: vector field of rank m expected");
  Field out(g, 1);
  for (int k = 0; k < g.nt; ++k) {
    for (int i = 0; i < g.n[0]; ++i) {
      for (int j = 0; j < g.n[1]; ++j) {
        const std::size_t z = g.node(k, i, j);
        double acc = 0.0;
        for (int d = 0; d < g.m; ++d) {
          const int idx = d == 0 ? i : j;
          const double prev = idx > 0 ? gf.at(z - g.stride(d + 1), d) : 0.0;
          acc += (gf.at(z, d) - prev) / g.h;
        }
        out.v[z] = acc;
      }
    }
  }
  return out;
}

Field dt_backward(const Field& f) {
  const GridSpec& g = f.grid;
  Field out(g, f.rank);
  const std::size_t row = g.stride(0) * f.rank;
  for (std::size_t a = 0; a < f.v.size(); ++a) {
    const double prev = a >= row ? f.v[a - row] : 0.0;
    out.v[a] = (f.v[a] - prev) / g.tau;
  }
  return out;
}

Field magnitude(const Field& f) {
  Field out(f.grid, 1);
  for (std::size_t z = 0; z < f.grid.nodes(); ++z) out.v[z] = f.norm_at(z);
  return out;
}

double weak_time_pairing(const Field& w, const Field& xi) {
  if (w.rank != 1 || xi.rank != 1 || !w.grid.same_lattice(xi.grid)) {
    fail("weak_time_pairing: scalar fields on one grid expected");
  }
  const GridSpec& g = w.grid;
  const std::size_t row = g.stride(0);
  const std::size_t total = g.nodes();
  double acc = 0.0;
  for (std::size_t z = 0; z < total; ++z) {
    const double next = z + row < total ? xi.v[z + row] : 0.0;
    acc += w.v[z] * (next - xi.v[z]);
  }
  return acc * g.cell() / g.tau;
}

double weak_flux_pairing(const Field& gf, const Field& psi) {
  const GridSpec& g = gf.grid;
  if (gf.rank != g.m || psi.rank != 1 || !g.same_lattice(psi.grid)) {
    fail("weak_flux_pairing: flux of rank m and scalar test field on one grid expected");
  }
  double acc = 0.0;
  for (int k = 0; k < g.nt; ++k) {
    for (int i = 0; i < g.n[0]; ++i) {
      for (int j = 0; j < g.n[1]; ++j) {
        const std::size_t z = g.node(k, i, j);
        for (int d = 0; d < g.m; ++d) {
          const int idx = d == 0 ? i : j;
          const double next = idx + 1 < g.n[d] ? psi.v[z + g.stride(d + 1)] : 0.0;
          acc += gf.at(z, d) * (next - psi.v[z]);
        }
      }
    }
  }
  return acc * g.cell() / g.h;
}

double trapezoid_weight(const GridSpec& g, int k, int i, int j) {
  double w = g.cell();
  if (k == 0 || k == g.nt - 1) w *= 0.5;
  if (i == 0 || i == g.n[0] - 1) w *= 0.5;
  if (g.m == 2 && (j == 0 || j == g.n[1] - 1)) w *= 0.5;
  return w;
}

std::vector<double> weighted_mean(const Field& f, const Field& rho) {
  if (rho.rank != 1 || !f.grid.same_lattice(rho.grid)) fail("weighted_mean: scalar weight on the same grid expected");
  const GridSpec& g = f.grid;
  std::vector<double> acc(f.rank, 0.0);
  double mass = 0.0;
  for (int k = 0; k < g.nt; ++k) {
    for (int i = 0; i < g.n[0]; ++i) {
      for (int j = 0; j < g.n[1]; ++j) {
        const std::size_t z = g.node(k, i, j);
        const double r = rho.v[z];
        if (r < 0.0) fail("weighted_mean: negative weight");
        if (r == 0.0) continue;
        const double w = trapezoid_weight(g, k, i, j) * r;
        mass += w;
        for (int c = 0; c < f.rank; ++c) acc[c] += w * f.at(z, c);
      }
    }
  }
  if (!(mass > 0.0)) fail("degenerate weight");
  for (double& a : acc) a /= mass;
  return acc;
}

double modular_integral(const Field& f, const NFunction& phi) {
  const GridSpec& g = f.grid;
  double acc = 0.0;
  for (int k = 0; k < g.nt; ++k) {
    for (int i = 0; i < g.n[0]; ++i) {
      for (int j = 0; j < g.n[1]; ++j) {
        const std::size_t z = g.node(k, i, j);
        acc += trapezoid_weight(g, k, i, j) * phi(f.norm_at(z));
      }
    }
  }
  return acc;
}

Extension extend(const Field& w, const Field& gf, int pad_t, int pad_x) {
  const GridSpec& b = w.grid;
  if (!b.same_lattice(gf.grid)) fail("extend: w and G live on different grids");
  if (w.rank != 1 || gf.rank != b.m) fail("extend: scalar w and rank-m G expected");
  if (pad_t < 1 || pad_x < 1) fail("extend: pads must be positive");
  const int kz = b.nt - 1;  // node at t = 0

  GridSpec e = b;
  e.nt = 2 * kz + 1 + 2 * pad_t;
  e.n[0] = b.n[0] + 2 * pad_x;
  e.n[1] = b.m == 2 ? b.n[1] + 2 * pad_x : 1;
  e.t_origin = b.t_origin - pad_t * b.tau;
  e.x_origin = {b.x_origin[0] - pad_x * b.h, b.m == 2 ? b.x_origin[1] - pad_x * b.h : 0.0};
  e.domain.t_lo = pad_t;
  e.domain.t_hi = pad_t + 2 * kz;
  e.domain.lo = {pad_x, b.m == 2 ? pad_x : 0};
  e.domain.hi = {pad_x + b.n[0] - 1, b.m == 2 ? pad_x + b.n[1] - 1 : 0};

  Extension out{Field(e, 1), Field(e, b.m), pad_t, pad_x};
  const int sx = b.m == 2 ? pad_x : 0;
  auto copy_row = [&](int kb, int ke, double gsign) {
    for (int i = 0; i < b.n[0]; ++i) {
      for (int j = 0; j < b.n[1]; ++j) {
        const std::size_t zb = b.node(kb, i, j);
        const std::size_t ze = e.node(ke, i + pad_x, j + sx);
        if (gsign > 0.0) out.w.v[ze] = w.v[zb];
        for (int d = 0; d < b.m; ++d) out.g.at(ze, d) = gsign * gf.at(zb, d);
      }
    }
  };
  for (int k = 0; k <= kz; ++k) copy_row(k, pad_t + k, 1.0);
  for (int s = 1; s <= kz; ++s) {
    // w even about t = 0; G odd on the staggered lattice so that the backward
    // time difference of w stays equal to div G.
    for (int i = 0; i < b.n[0]; ++i) {
      for (int j = 0; j < b.n[1]; ++j) {
        out.w.v[e.node(pad_t + kz + s, i + pad_x, j + sx)] = w.v[b.node(kz - s, i, j)];
      }
    }
  }
  for (int s = 1; s <= kz + 1; ++s) copy_row(kz - s + 1, pad_t + kz + s, -1.0);
  return out;
}

Field restrict_to(const Field& f, const GridSpec& base, int pad_t, int pad_x) {
  Field out(base, f.rank);
  const int sx = base.m == 2 ? pad_x : 0;
  for (int k = 0; k < base.nt; ++k) {
    for (int i = 0; i < base.n[0]; ++i) {
      for (int j = 0; j < base.n[1]; ++j) {
        const std::size_t zb = base.node(k, i, j);
        const std::size_t ze = f.grid.node(k + pad_t, i + pad_x, j + sx);
        for (int c = 0; c < f.rank; ++c) out.at(zb, c) = f.at(ze, c);
      }
    }
  }
  return out;
}

void validate_boundary(const Field& w, double tol) {
  const GridSpec& g = w.grid;
  double scale = 0.0;
  for (double x : w.v) scale = std::max(scale, std::abs(x));
  const double bound = tol * scale;
  for (int k = 0; k < g.nt; ++k) {
    for (int i = 0; i < g.n[0]; ++i) {
      for (int j = 0; j < g.n[1]; ++j) {
        const bool face = k == 0 || i == 0 || i == g.n[0] - 1 ||
                          (g.m == 2 && (j == 0 || j == g.n[1] - 1));
        if (!face) continue;
        const std::size_t z = g.node(k, i, j);
        for (int c = 0; c < w.rank; ++c) {
          if (std::abs(w.at(z, c)) > bound) {
            std::ostringstream os;
            os << "boundary data must vanish: node (" << k << "," << i << "," << j
               << ") carries " << w.at(z, c);
            fail(os.str());
          }
        }
      }
    }
  }
}

namespace {

static_assert(std::endian::native == std::endian::little, "PTF1 I/O assumes a little-endian host");

template <class T>
void put(std::ostream& os, T x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof x);
}

template <class T>
T get(std::istream& is) {
  T x{};
  is.read(reinterpret_cast<char*>(&x), sizeof x);
  if (!is) throw Error(ErrorCode::io, "PTF1: truncated file");
  return x;
}

}  // namespace

void write_ptf(const Field& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  const GridSpec& g = f.grid;
  os.write("PTF1", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.rank));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.m));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.nt));
  for (int d = 0; d < g.m; ++d) put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n[d]));
  put<double>(os, g.h);
  put<double>(os, g.tau);
  put<double>(os, -g.t_origin);
  os.write(reinterpret_cast<const char*>(f.v.data()),
           static_cast<std::streamsize>(f.v.size() * sizeof(double)));
  if (!os) throw Error(ErrorCode::io, "write failed: " + path);
}

Field read_ptf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "PTF1", 4) != 0) throw Error(ErrorCode::io, path + ": not a PTF1 file");
  const auto rank = get<std::uint32_t>(is);
  const auto m = get<std::uint32_t>(is);
  if (m != 1 && m != 2) fail("PTF1: spatial dimension must be 1 or 2");
  if (rank != 1 && rank != m) fail("PTF1: rank must be 1 or m");
  const auto nt = get<std::uint32_t>(is);
  std::array<int, 2> n{1, 1};
  for (std::uint32_t d = 0; d < m; ++d) n[d] = static_cast<int>(get<std::uint32_t>(is));
  const double h = get<double>(is);
  const double tau = get<double>(is);
  const double t0 = get<double>(is);
  GridSpec g = GridSpec::base(static_cast<int>(m), static_cast<int>(nt), n, h, tau);
  g.t0 = t0;
  g.t_origin = -t0;
  Field f(g, static_cast<int>(rank));
  is.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
  if (!is) throw Error(ErrorCode::io, path + ": truncated payload");
  f.check_finite();
  return f;
}

void write_csv(const Field& f, const std::string& path) {
  if (f.grid.m != 1 || f.rank != 1) fail("CSV export supports scalar m = 1 fields only");
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  os.precision(17);
  for (int k = 0; k < f.grid.nt; ++k) {
    for (int i = 0; i < f.grid.n[0]; ++i) {
      if (i) os << ',';
      os << f.v[f.grid.node(k, i)];
    }
    os << '\n';
  }
}

Field read_csv(const std::string& path, double h, double tau) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(path + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) fail(path + ": ragged CSV");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(path + ": empty CSV");
  GridSpec g = GridSpec::base(1, static_cast<int>(rows.size()), {static_cast<int>(rows.front().size()), 1}, h, tau);
  Field f(g, 1);
  for (int k = 0; k < g.nt; ++k) {
    for (int i = 0; i < g.n[0]; ++i) f.v[g.node(k, i)] = rows[k][i];
  }
  f.check_finite();
  return f;
}

}  // namespace paratrunc
