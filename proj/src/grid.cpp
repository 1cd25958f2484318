#include "driftlab/grid.hpp"

#include "driftlab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace driftlab {

using nlohmann::json;

GridSpec::GridSpec(double x0, double x1, double s0, double s1, int nx, int ns, Chart c)
    : x_min(x0), x_max(x1), s_min(s0), s_max(s1), n_x(nx), n_s(ns), chart(c) {
  if (!(x0 < x1) || !(s0 < s1)) throw ParameterError("GridSpec: empty rectangle");
  if (nx < 8 || ns < 8) throw ParameterError("GridSpec: n_x and n_s must be at least 8");
}

GroupPoint GridSpec::point(int i, int j) const {
  const double a = std::exp(s(j));
  return chart == Chart::Affine ? GroupPoint{xc(i), a} : GroupPoint{xc(i) * a, a};
}

void GridSpec::chart_coords(const GroupPoint& p, double& c1, double& s_out) const {
  s_out = std::log(p.a);
  c1 = chart == Chart::Affine ? p.x : p.x / p.a;
}

double GridSpec::rho_jacobian(int j) const { return chart == Chart::Affine ? 1.0 : std::exp(s(j)); }

GridSpec GridSpec::refined() const { return {x_min, x_max, s_min, s_max, 2 * n_x - 1, 2 * n_s - 1, chart}; }

bool GridSpec::operator==(const GridSpec& o) const {
  return x_min == o.x_min && x_max == o.x_max && s_min == o.s_min && s_max == o.s_max && n_x == o.n_x &&
         n_s == o.n_s && chart == o.chart;
}

std::string GridSpec::to_json() const {
  json j = {{"x_min", x_min}, {"x_max", x_max}, {"s_min", s_min}, {"s_max", s_max},
            {"n_x", n_x},     {"n_s", n_s},     {"chart", chart == Chart::Affine ? "affine" : "wedge"}};
  return j.dump();
}

GridSpec GridSpec::from_json(const std::string& text) {
  const json j = json::parse(text);
  const Chart c = j.value("chart", std::string("affine")) == "wedge" ? Chart::Wedge : Chart::Affine;
  return {j.at("x_min").get<double>(), j.at("x_max").get<double>(), j.at("s_min").get<double>(),
          j.at("s_max").get<double>(), j.at("n_x").get<int>(),      j.at("n_s").get<int>(),
          c};
}

Eigen::ArrayXXd quadrature_weights(const GridSpec& g, const MeasureTag& m) {
  Eigen::ArrayXXd w(g.n_x, g.n_s);
  const double cell = g.hx() * g.hs();
  for (int j = 0; j < g.n_s; ++j) {
    const double wj = (j == 0 || j == g.n_s - 1) ? 0.5 : 1.0;
    const double dens = m.density(g.s(j)) * g.rho_jacobian(j);
    for (int i = 0; i < g.n_x; ++i) {
      const double wi = (i == 0 || i == g.n_x - 1) ? 0.5 : 1.0;
      w(i, j) = wi * wj * cell * dens;
    }
  }
  return w;
}

Field sample(const std::function<double(const GroupPoint&)>& rule, const GridSpec& g) {
  Field f(g);
  for (int j = 0; j < g.n_s; ++j)
    for (int i = 0; i < g.n_x; ++i) {
      const double v = rule(g.point(i, j));
      if (!std::isfinite(v))
        throw DomainError("sample: rule is not finite at node (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      f.values(i, j) = v;
    }
  return f;
}

CField sample_complex(const std::function<std::complex<double>(const GroupPoint&)>& rule, const GridSpec& g) {
  CField f(g);
  for (int j = 0; j < g.n_s; ++j)
    for (int i = 0; i < g.n_x; ++i) {
      const auto v = rule(g.point(i, j));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw DomainError("sample: rule is not finite at node (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      f.values(i, j) = v;
    }
  return f;
}

template <typename Scalar>
Scalar integrate(const GridFunction<Scalar>& f, const MeasureTag& m) {
  const Eigen::ArrayXXd w = quadrature_weights(f.spec, m);
  return (f.values * w.cast<Scalar>()).sum();
}

template <typename Scalar>
double lp_norm(const GridFunction<Scalar>& f, double p, const MeasureTag& m) {
  if (!(p >= 1.0)) throw ParameterError("lp_norm: p must be >= 1");
  const Eigen::ArrayXXd a = f.values.abs();
  if (std::isinf(p)) return a.maxCoeff();
  const Eigen::ArrayXXd w = quadrature_weights(f.spec, m);
  if (p == 1.0) return (a * w).sum();
  if (p == 2.0) return std::sqrt((a.square() * w).sum());
  return std::pow((a.pow(p) * w).sum(), 1.0 / p);
}

namespace {

// Central differences inside, one-sided second-order stencils on the edges.
template <typename Scalar>
void diff_x(const GridFunction<Scalar>& f, typename GridFunction<Scalar>::Array& out) {
  const int n = f.spec.n_x;
  const double h = f.spec.hx();
  const auto& v = f.values;
  out.resize(n, f.spec.n_s);
  out.row(0) = (-3.0 * v.row(0) + 4.0 * v.row(1) - v.row(2)) / (2.0 * h);
  out.row(n - 1) = (3.0 * v.row(n - 1) - 4.0 * v.row(n - 2) + v.row(n - 3)) / (2.0 * h);
  out.middleRows(1, n - 2) = (v.bottomRows(n - 2) - v.topRows(n - 2)) / (2.0 * h);
}

template <typename Scalar>
void diff_s(const GridFunction<Scalar>& f, typename GridFunction<Scalar>::Array& out) {
  const int n = f.spec.n_s;
  const double h = f.spec.hs();
  const auto& v = f.values;
  out.resize(f.spec.n_x, n);
  out.col(0) = (-3.0 * v.col(0) + 4.0 * v.col(1) - v.col(2)) / (2.0 * h);
  out.col(n - 1) = (3.0 * v.col(n - 1) - 4.0 * v.col(n - 2) + v.col(n - 3)) / (2.0 * h);
  out.middleCols(1, n - 2) = (v.rightCols(n - 2) - v.leftCols(n - 2)) / (2.0 * h);
}

}  // namespace

template <typename Scalar>
GridFunction<Scalar> apply_field(const GridFunction<Scalar>& f, FrameField which) {
  using Array = typename GridFunction<Scalar>::Array;
  const GridSpec& g = f.spec;
  Array d;
  if (g.chart == Chart::Affine) {
    if (which == FrameField::X0) {
      diff_s(f, d);
    } else {
      diff_x(f, d);
      for (int j = 0; j < g.n_s; ++j) d.col(j) *= std::exp(g.s(j));
    }
    return {g, std::move(d)};
  }
  // wedge chart
  diff_x(f, d);
  if (which == FrameField::X1) return {g, std::move(d)};
  Array ds;
  diff_s(f, ds);
  for (int i = 0; i < g.n_x; ++i) ds.row(i) -= g.xc(i) * d.row(i);
  return {g, std::move(ds)};
}

template <typename Scalar>
GridFunction<Scalar> apply_word(const GridFunction<Scalar>& f, const Word& word) {
  if (word.size() > 3) throw ParameterError("apply_word: words longer than 3 are not supported");
  GridFunction<Scalar> out = f;
  for (auto it = word.rbegin(); it != word.rend(); ++it) out = apply_field(out, *it);
  return out;
}

std::vector<Word> words_up_to(int k) {
  std::vector<Word> all{Word{}};
  std::vector<Word> layer{Word{}};
  for (int m = 1; m <= k; ++m) {
    std::vector<Word> next;
    for (const auto& w : layer)
      for (FrameField x : {FrameField::X0, FrameField::X1}) {
        Word v{x};
        v.insert(v.end(), w.begin(), w.end());
        next.push_back(v);
      }
    all.insert(all.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return all;
}

std::string word_name(const Word& w) {
  if (w.empty()) return "()";
  std::string s;
  for (auto x : w) s += x == FrameField::X0 ? "X0" : "X1";
  return s;
}

template <typename Scalar>
GridFunction<Scalar> generator_apply(const GridFunction<Scalar>& f, double gamma, double shift) {
  const GridSpec& g = f.spec;
  if (g.chart != Chart::Affine) throw ParameterError("generator_apply: affine chart only");
  const int nx = g.n_x, ns = g.n_s;
  const double hx2 = g.hx() * g.hx(), hs2 = g.hs() * g.hs();
  const double up = std::exp(-0.5 * gamma * g.hs()) / hs2;   // coupling to j+1
  const double down = std::exp(0.5 * gamma * g.hs()) / hs2;  // coupling to j-1
  GridFunction<Scalar> out(g);
  const auto& v = f.values;
  for (int j = 0; j < ns; ++j) {
    const double ex = std::exp(2.0 * g.s(j)) / hx2;
    for (int i = 0; i < nx; ++i) {
      const Scalar c = v(i, j);
      const Scalar jp = j + 1 < ns ? v(i, j + 1) : Scalar(0);
      const Scalar jm = j > 0 ? v(i, j - 1) : Scalar(0);
      const Scalar ip = i + 1 < nx ? v(i + 1, j) : Scalar(0);
      const Scalar im = i > 0 ? v(i - 1, j) : Scalar(0);
      out.values(i, j) = -(up * (jp - c) - down * (c - jm)) - ex * (ip - 2.0 * c + im) + shift * c;
    }
  }
  return out;
}

template <typename Scalar>
Scalar interpolate(const GridFunction<Scalar>& f, const GroupPoint& p) {
  const GridSpec& g = f.spec;
  double c1, s;
  g.chart_coords(p, c1, s);
  const double u = (c1 - g.x_min) / g.hx();
  const double w = (s - g.s_min) / g.hs();
  if (!(u >= 0.0 && w >= 0.0 && u <= g.n_x - 1 && w <= g.n_s - 1)) return Scalar(0);
  const int i = std::min(static_cast<int>(u), g.n_x - 2);
  const int j = std::min(static_cast<int>(w), g.n_s - 2);
  const double fu = u - i, fw = w - j;
  const auto& v = f.values;
  return (1 - fu) * (1 - fw) * v(i, j) + fu * (1 - fw) * v(i + 1, j) + (1 - fu) * fw * v(i, j + 1) +
         fu * fw * v(i + 1, j + 1);
}

namespace {

bool inside(const GridSpec& g, const GroupPoint& p) {
  double c1, s;
  g.chart_coords(p, c1, s);
  const double tol = 1e-12;
  return c1 >= g.x_min - tol && c1 <= g.x_max + tol && s >= g.s_min - tol && s <= g.s_max + tol;
}

template <typename Map>
Field resample(const Field& f, Map&& preimage, ResampleDiagnostics* diag,
               const std::function<GroupPoint(const GroupPoint&)>& forward) {
  const GridSpec& g = f.spec;
  Field out(g);
  for (int j = 0; j < g.n_s; ++j)
    for (int i = 0; i < g.n_x; ++i) out.values(i, j) = interpolate(f, preimage(g.point(i, j)));
  if (diag) {
    const Eigen::ArrayXXd w = quadrature_weights(g, MeasureTag::Rho());
    double lost = 0.0, total = 0.0;
    for (int j = 0; j < g.n_s; ++j)
      for (int i = 0; i < g.n_x; ++i) {
        const double m = std::abs(f.values(i, j)) * w(i, j);
        total += m;
        if (!inside(g, forward(g.point(i, j)))) lost += m;
      }
    diag->truncation_mass = total > 0.0 ? lost / total : 0.0;
  }
  return out;
}

}  // namespace

Field left_translate(const Field& f, const GroupPoint& y, ResampleDiagnostics* diag) {
  const GroupPoint yi = inverse(y);
  return resample(
      f, [&](const GroupPoint& x) { return multiply(yi, x); }, diag,
      [&](const GroupPoint& q) { return multiply(y, q); });
}

Field reflect(const Field& g, ResampleDiagnostics* diag) {
  return resample(
      g, [](const GroupPoint& x) { return inverse(x); }, diag,
      [](const GroupPoint& q) { return inverse(q); });
}

template <typename Scalar>
double boundary_ratio(const GridFunction<Scalar>& f) {
  const Eigen::ArrayXXd a = f.values.abs();
  const double mx = a.maxCoeff();
  if (mx == 0.0) return 0.0;
  const double b = std::max({a.row(0).maxCoeff(), a.row(a.rows() - 1).maxCoeff(), a.col(0).maxCoeff(),
                             a.col(a.cols() - 1).maxCoeff()});
  return b / mx;
}

ConvolutionResult convolve(const Field& f, const Field& g) {
  const GridSpec& G = f.spec;
  if (!(g.spec == G)) throw ParameterError("convolve: grid mismatch");
  if (G.chart != Chart::Affine) throw ParameterError("convolve: affine chart only");
  if (!f.finite() || !g.finite()) throw DomainError("convolve: non-finite input");

  ConvolutionResult res{Field(G), 0.0, true, {}};
  if (boundary_ratio(g) > 1e-8) {
    res.boundary_decay_ok = false;
    res.warnings.push_back("convolve: second factor does not decay below 1e-8 at the grid boundary");
  }

  const Eigen::ArrayXXd w = quadrature_weights(G, MeasureTag::Rho());
  struct Src {
    double x, s, gw;
  };
  std::vector<Src> src;
  double gmass = 0.0;
  for (int l = 0; l < G.n_s; ++l)
    for (int m = 0; m < G.n_x; ++m)
      if (g.values(m, l) != 0.0) {
        src.push_back({G.xc(m), G.s(l), g.values(m, l) * w(m, l)});
        gmass += std::abs(g.values(m, l)) * w(m, l);
      }

  const double fmax = f.values.abs().maxCoeff();
  const double hx = G.hx(), hs = G.hs();
  double worst_lost = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst_lost)
  for (int j = 0; j < G.n_s; ++j) {
    for (int i = 0; i < G.n_x; ++i) {
      const double xp = G.xc(i), sp = G.s(j);
      double acc = 0.0, lost = 0.0;
      for (const Src& q : src) {
        // p q^{-1} = (x_p - e^{s_p - s_q} x_q, s_p - s_q)
        const double ds = sp - q.s;
        const double xx = xp - std::exp(ds) * q.x;
        const double u = (xx - G.x_min) / hx, v = (ds - G.s_min) / hs;
        if (!(u >= 0.0 && v >= 0.0 && u <= G.n_x - 1 && v <= G.n_s - 1)) {
          lost += std::abs(q.gw);
          continue;
        }
        const int a = std::min(static_cast<int>(u), G.n_x - 2);
        const int b = std::min(static_cast<int>(v), G.n_s - 2);
        const double fu = u - a, fv = v - b;
        const auto& fv_ = f.values;
        const double val = (1 - fu) * (1 - fv) * fv_(a, b) + fu * (1 - fv) * fv_(a + 1, b) +
                           (1 - fu) * fv * fv_(a, b + 1) + fu * fv * fv_(a + 1, b + 1);
        acc += val * q.gw;
      }
      res.field.values(i, j) = acc;
      if (gmass > 0.0 && std::abs(f.values(i, j)) >= 1e-3 * fmax) worst_lost = std::max(worst_lost, lost / gmass);
    }
  }
  res.truncation_mass = worst_lost;
  return res;
}

// ---- serialization ------------------------------------------------------

namespace {

std::string sidecar_path(const std::string& path) { return path + ".json"; }

void write_sidecar(const GridSpec& g, const std::string& path, const std::string& scalar,
                   const std::string& format) {
  json j = json::parse(g.to_json());
  j["scalar"] = scalar;
  j["format"] = format;
  j["layout"] = "row-major over x then s: index = i * n_s + j";
  std::ofstream os(sidecar_path(path));
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + sidecar_path(path));
}

GridSpec read_sidecar(const std::string& path, std::string* scalar) {
  std::ifstream is(sidecar_path(path));
  if (!is) throw std::runtime_error("cannot read " + sidecar_path(path));
  std::stringstream ss;
  ss << is.rdbuf();
  const json j = json::parse(ss.str());
  if (scalar) *scalar = j.value("scalar", std::string("real"));
  return GridSpec::from_json(ss.str());
}

template <typename Scalar>
constexpr const char* scalar_name() {
  if constexpr (std::is_same_v<Scalar, double>)
    return "real";
  else
    return "complex";
}

}  // namespace

template <typename Scalar>
void write_binary(const GridFunction<Scalar>& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  for (int i = 0; i < f.spec.n_x; ++i)
    for (int j = 0; j < f.spec.n_s; ++j) {
      const Scalar v = f.values(i, j);
      os.write(reinterpret_cast<const char*>(&v), sizeof(Scalar));
    }
  if (!os) throw std::runtime_error("cannot write " + path);
  write_sidecar(f.spec, path, scalar_name<Scalar>(), "binary");
}

template <typename Scalar>
GridFunction<Scalar> read_binary(const std::string& path) {
  std::string scalar;
  GridFunction<Scalar> f(read_sidecar(path, &scalar));
  if (scalar != scalar_name<Scalar>()) throw ParameterError("read_binary: scalar type mismatch");
  std::ifstream is(path, std::ios::binary);
  for (int i = 0; i < f.spec.n_x; ++i)
    for (int j = 0; j < f.spec.n_s; ++j) {
      Scalar v;
      is.read(reinterpret_cast<char*>(&v), sizeof(Scalar));
      f.values(i, j) = v;
    }
  if (!is) throw std::runtime_error("short read in " + path);
  return f;
}

void write_csv(const Field& f, const std::string& path) {
  std::ofstream os(path);
  os << "i,j,x,s,value\n";
  char buf[64];
  for (int i = 0; i < f.spec.n_x; ++i)
    for (int j = 0; j < f.spec.n_s; ++j) {
      const auto r = std::to_chars(buf, buf + sizeof buf, f.values(i, j));
      os << i << ',' << j << ',' << f.spec.xc(i) << ',' << f.spec.s(j) << ',' << std::string(buf, r.ptr) << '\n';
    }
  if (!os) throw std::runtime_error("cannot write " + path);
  write_sidecar(f.spec, path, "real", "csv");
}

Field read_csv(const std::string& path) {
  Field f(read_sidecar(path, nullptr));
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 5) throw std::runtime_error("read_csv: malformed row in " + path);
    const int i = std::stoi(cols[0]), j = std::stoi(cols[1]);
    double v = 0.0;
    std::from_chars(cols[4].data(), cols[4].data() + cols[4].size(), v);
    f.values(i, j) = v;
  }
  return f;
}

// ---- explicit instantiations -------------------------------------------

#define DRIFTLAB_GRID_INST(S)                                                              \
  template S integrate<S>(const GridFunction<S>&, const MeasureTag&);                      \
  template double lp_norm<S>(const GridFunction<S>&, double, const MeasureTag&);           \
  template GridFunction<S> apply_field<S>(const GridFunction<S>&, FrameField);             \
  template GridFunction<S> apply_word<S>(const GridFunction<S>&, const Word&);             \
  template GridFunction<S> generator_apply<S>(const GridFunction<S>&, double, double);     \
  template S interpolate<S>(const GridFunction<S>&, const GroupPoint&);                    \
  template double boundary_ratio<S>(const GridFunction<S>&);                               \
  template void write_binary<S>(const GridFunction<S>&, const std::string&);               \
  template GridFunction<S> read_binary<S>(const std::string&);

DRIFTLAB_GRID_INST(double)
DRIFTLAB_GRID_INST(std::complex<double>)

}  // namespace driftlab
