#include "discrete.hpp"

#include <map>

namespace nsf::detail {

Vec pack_interior(const VectorField& v, const Grid& g) {
  const FaceIndex fi(g);
  Vec x(fi.n);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) x[fi.u(i, j)] = v.u(i, j);
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) x[fi.v(i, j)] = v.v(i, j);
  return x;
}

VectorField unpack_interior(const Vec& x, const Grid& g) {
  const FaceIndex fi(g);
  VectorField v = g.faces();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) v.u(i, j) = x[fi.u(i, j)];
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) v.v(i, j) = x[fi.v(i, j)];
  return v;
}

Vec pack(const ScalarField& s) { return Eigen::Map<const Vec>(s.raw().data(), static_cast<Eigen::Index>(s.size())); }

ScalarField unpack_cells(const Vec& x, const Grid& g) {
  ScalarField s = g.cells();
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = x[static_cast<Eigen::Index>(k)];
  return s;
}

SpMat neumann_laplacian(const Grid& g) {
  const int nx = g.nx(), ny = g.ny();
  const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
  Triplets t;
  t.reserve(5 * g.num_cells());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int c = cell_index(g, i, j);
      double diag = 0.0;
      auto nb = [&](int ii, int jj, double a) {
        if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) return;
        t.emplace_back(c, cell_index(g, ii, jj), a);
        diag -= a;
      };
      nb(i - 1, j, ax);
      nb(i + 1, j, ax);
      nb(i, j - 1, ay);
      nb(i, j + 1, ay);
      t.emplace_back(c, c, diag);
    }
  SpMat m(static_cast<int>(g.num_cells()), static_cast<int>(g.num_cells()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

namespace {

// Sparse linear combination of unknowns.
class Lin {
 public:
  void add(int col, double c) {
    if (col >= 0 && c != 0.0) terms_[col] += c;
  }
  void add(const Lin& o, double c) {
    for (const auto& [k, v] : o.terms_) add(k, c * v);
  }
  const std::map<int, double>& terms() const { return terms_; }

 private:
  std::map<int, double> terms_;
};

}  // namespace

SpMat lame_operator(const Grid& g, double mu, double lambda, double friction) {
  const FaceIndex fi(g);
  const int nx = g.nx(), ny = g.ny();
  const double hx = g.hx(), hy = g.hy();
  const double rx = WallClosure::slip(mu, friction).slip_ratio(hx);
  const double ry = WallClosure::slip(mu, friction).slip_ratio(hy);

  auto sxx = [&](int i, int j) {
    Lin l;
    l.add(fi.u(i + 1, j), (2 * mu + lambda) / hx);
    l.add(fi.u(i, j), -(2 * mu + lambda) / hx);
    l.add(fi.v(i, j + 1), lambda / hy);
    l.add(fi.v(i, j), -lambda / hy);
    return l;
  };
  auto syy = [&](int i, int j) {
    Lin l;
    l.add(fi.v(i, j + 1), (2 * mu + lambda) / hy);
    l.add(fi.v(i, j), -(2 * mu + lambda) / hy);
    l.add(fi.u(i + 1, j), lambda / hx);
    l.add(fi.u(i, j), -lambda / hx);
    return l;
  };
  // mu (du/dy + dv/dx) at node (i,j), slip ghosts at the walls.
  auto sxy = [&](int i, int j) {
    Lin l;
    if (j > 0 && j < ny) {
      l.add(fi.u(i, j), mu / hy);
      l.add(fi.u(i, j - 1), -mu / hy);
    } else if (j == 0) {
      l.add(fi.u(i, 0), mu * (1.0 - ry) / hy);
    } else {
      l.add(fi.u(i, ny - 1), mu * (ry - 1.0) / hy);
    }
    if (i > 0 && i < nx) {
      l.add(fi.v(i, j), mu / hx);
      l.add(fi.v(i - 1, j), -mu / hx);
    } else if (i == 0) {
      l.add(fi.v(0, j), mu * (1.0 - rx) / hx);
    } else {
      l.add(fi.v(nx - 1, j), mu * (rx - 1.0) / hx);
    }
    return l;
  };

  Triplets t;
  t.reserve(static_cast<std::size_t>(fi.n) * 11);
  auto emit = [&t](int row, const Lin& l) {
    for (const auto& [col, c] : l.terms()) t.emplace_back(row, col, c);
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      Lin row;
      row.add(sxx(i, j), -1.0 / hx);
      row.add(sxx(i - 1, j), 1.0 / hx);
      row.add(sxy(i, j + 1), -1.0 / hy);
      row.add(sxy(i, j), 1.0 / hy);
      emit(fi.u(i, j), row);
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      Lin row;
      row.add(sxy(i + 1, j), -1.0 / hx);
      row.add(sxy(i, j), 1.0 / hx);
      row.add(syy(i, j), -1.0 / hy);
      row.add(syy(i, j - 1), 1.0 / hy);
      emit(fi.v(i, j), row);
    }
  SpMat m(fi.n, fi.n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat cell_gradient(const Grid& g) {
  const FaceIndex fi(g);
  Triplets t;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) {
      t.emplace_back(fi.u(i, j), cell_index(g, i, j), 1.0 / g.hx());
      t.emplace_back(fi.u(i, j), cell_index(g, i - 1, j), -1.0 / g.hx());
    }
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      t.emplace_back(fi.v(i, j), cell_index(g, i, j), 1.0 / g.hy());
      t.emplace_back(fi.v(i, j), cell_index(g, i, j - 1), -1.0 / g.hy());
    }
  SpMat m(fi.n, static_cast<int>(g.num_cells()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat face_average(const Grid& g) {
  const FaceIndex fi(g);
  Triplets t;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) {
      t.emplace_back(fi.u(i, j), cell_index(g, i, j), 0.5);
      t.emplace_back(fi.u(i, j), cell_index(g, i - 1, j), 0.5);
    }
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      t.emplace_back(fi.v(i, j), cell_index(g, i, j), 0.5);
      t.emplace_back(fi.v(i, j), cell_index(g, i, j - 1), 0.5);
    }
  SpMat m(fi.n, static_cast<int>(g.num_cells()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace nsf::detail
