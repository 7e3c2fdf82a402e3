#include "qpeuler/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qpeuler/errors.hpp"

namespace qpeuler::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "' for reading");
  return is;
}

void finish(std::ostream& os, const std::string& path) {
  os.flush();
  if (!os) throw ConfigError("write to '" + path + "' failed");
}

double parse_double(const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed " + what + ": '" + tok + "'");
  }
}

long parse_long(const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed " + what + ": '" + tok + "'");
  }
}

std::string expect_line(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("unexpected end of '" + path + "'");
  return line;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_field(std::ostream& os, const QPVectorField& u) {
  const ModeSetPtr& ms = u.mode_set();
  const int n = u.dim();
  // union of supports, ascending
  std::vector<std::int64_t> support;
  for (int j = 0; j < n; ++j) {
    std::vector<std::int64_t> merged;
    std::set_union(support.begin(), support.end(), u[j].ordinals().begin(),
                   u[j].ordinals().end(), std::back_inserter(merged));
    support = std::move(merged);
  }
  for (const std::int64_t o : support) {
    const ModeIndex m = ms->mode(o);
    for (int j = 0; j < ms->M(); ++j) {
      os << m[static_cast<std::size_t>(j)] << ' ';
    }
    for (int k = 0; k < n; ++k) os << g17(ms->lambda_component(o, k)) << ' ';
    for (int k = 0; k < n; ++k) {
      const Complex c = u[k].coeff_at(o);
      os << g17(c.real()) << ' ' << g17(c.imag()) << (k + 1 < n ? " " : "");
    }
    os << '\n';
  }
}

void write_snapshot(const std::string& path, double t, const NormParams& norm,
                    const QPVectorField& u) {
  const ModeSetPtr& ms = u.mode_set();
  std::ofstream os = open_out(path);
  os << "qpeuler snapshot 1\n";
  os << "t " << g17(t) << '\n';
  os << "n " << ms->n() << " M " << ms->M() << " K " << ms->K() << '\n';
  os << "l " << norm.l << " s " << g17(norm.s) << '\n';
  os << "omega\n";
  const Eigen::MatrixXd& omega = ms->omega().matrix();
  for (int r = 0; r < omega.rows(); ++r) {
    for (int c = 0; c < omega.cols(); ++c) {
      os << g17(omega(r, c)) << (c + 1 < omega.cols() ? " " : "");
    }
    os << '\n';
  }
  std::int64_t rows = 0;
  {
    std::ostringstream body;
    write_field(body, u);
    for (const char ch : body.view()) rows += (ch == '\n');
    os << "modes " << rows << '\n' << body.view();
  }
  finish(os, path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream is = open_in(path);
  if (expect_line(is, path) != "qpeuler snapshot 1") {
    throw ConfigError("'" + path + "' is not a snapshot file");
  }
  Snapshot snap;
  {
    const auto toks = split_ws(expect_line(is, path));
    if (toks.size() != 2 || toks[0] != "t") throw ConfigError("bad t line in '" + path + "'");
    snap.t = parse_double(toks[1], "t");
  }
  int n = 0, M = 0, K = 0;
  {
    const auto toks = split_ws(expect_line(is, path));
    if (toks.size() != 6 || toks[0] != "n" || toks[2] != "M" || toks[4] != "K") {
      throw ConfigError("bad dimension line in '" + path + "'");
    }
    n = static_cast<int>(parse_long(toks[1], "n"));
    M = static_cast<int>(parse_long(toks[3], "M"));
    K = static_cast<int>(parse_long(toks[5], "K"));
  }
  {
    const auto toks = split_ws(expect_line(is, path));
    if (toks.size() != 4 || toks[0] != "l" || toks[2] != "s") {
      throw ConfigError("bad norm line in '" + path + "'");
    }
    snap.norm.l = static_cast<int>(parse_long(toks[1], "l"));
    snap.norm.s = parse_double(toks[3], "s");
  }
  if (expect_line(is, path) != "omega") throw ConfigError("bad omega line in '" + path + "'");
  Eigen::MatrixXd omega(M, n);
  for (int r = 0; r < M; ++r) {
    const auto toks = split_ws(expect_line(is, path));
    if (static_cast<int>(toks.size()) != n) {
      throw ConfigError("omega row " + std::to_string(r) + " needs " + std::to_string(n) +
                        " entries in '" + path + "'");
    }
    for (int c = 0; c < n; ++c) omega(r, c) = parse_double(toks[static_cast<std::size_t>(c)], "omega entry");
  }
  std::int64_t rows = 0;
  {
    const auto toks = split_ws(expect_line(is, path));
    if (toks.size() != 2 || toks[0] != "modes") {
      throw ConfigError("bad modes line in '" + path + "'");
    }
    rows = parse_long(toks[1], "mode count");
  }

  const ModeSetPtr ms = ModeSet::build(FrequencyMatrix(std::move(omega)), K);
  std::vector<std::vector<std::int64_t>> idx(static_cast<std::size_t>(n));
  std::vector<std::vector<Complex>> coeffs(static_cast<std::size_t>(n));
  ModeIndex m(static_cast<std::size_t>(M));
  std::int64_t prev = -1;
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto toks = split_ws(expect_line(is, path));
    if (static_cast<int>(toks.size()) != M + 3 * n) {
      throw ConfigError("coefficient row " + std::to_string(r) + " needs " +
                        std::to_string(M + 3 * n) + " columns in '" + path + "'");
    }
    for (int j = 0; j < M; ++j) {
      m[static_cast<std::size_t>(j)] =
          static_cast<std::int32_t>(parse_long(toks[static_cast<std::size_t>(j)], "mode index"));
    }
    const std::int64_t o = ms->ordinal(m);
    if (o < 0) throw ConfigError("row " + std::to_string(r) + " lies outside the box");
    if (o <= prev) throw ConfigError("coefficient rows out of order at row " + std::to_string(r));
    prev = o;
    for (int k = 0; k < n; ++k) {
      const double re = parse_double(toks[static_cast<std::size_t>(M + n + 2 * k)], "coefficient");
      const double im =
          parse_double(toks[static_cast<std::size_t>(M + n + 2 * k + 1)], "coefficient");
      if (re != 0.0 || im != 0.0) {
        idx[static_cast<std::size_t>(k)].push_back(o);
        coeffs[static_cast<std::size_t>(k)].push_back(Complex(re, im));
      }
    }
  }

  std::vector<QPScalar> comps;
  for (int k = 0; k < n; ++k) {
    // re-detect Hermitian symmetry (the dump stores no flag)
    bool real = true;
    const auto& oid = idx[static_cast<std::size_t>(k)];
    const auto& c = coeffs[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < oid.size() && real; ++i) {
      const std::int64_t neg = ms->negated(oid[i]);
      const auto it = std::lower_bound(oid.begin(), oid.end(), neg);
      const Complex mirror =
          (it != oid.end() && *it == neg) ? c[static_cast<std::size_t>(it - oid.begin())]
                                          : Complex(0, 0);
      real = std::abs(c[i] - std::conj(mirror)) <= kRealityTol * std::max(1.0, std::abs(c[i]));
    }
    comps.push_back(QPScalar::from_sorted(ms, oid, c, real));
  }
  snap.u = QPVectorField(std::move(comps));
  return snap;
}

void write_diagnostics_csv(const std::string& path, const Diagnostics& d, int ncomp) {
  std::ofstream os = open_out(path);
  os << "t,E,div_norm,norm_ls";
  for (int k = 1; k <= ncomp; ++k) os << ",p" << k << "_re,p" << k << "_im";
  os << ",flags\n";
  for (const DiagnosticsRow& row : d.rows) {
    os << g17(row.t) << ',' << g17(row.energy) << ',' << g17(row.div_norm) << ','
       << g17(row.norm_ls);
    for (int k = 0; k < ncomp; ++k) {
      const Complex p = k < row.momentum.size() ? row.momentum(k) : Complex(0, 0);
      os << ',' << g17(p.real()) << ',' << g17(p.imag());
    }
    os << ',' << row.flags << '\n';
  }
  finish(os, path);
}

void write_trajectories_csv(const std::string& path, const TrajectoryRun& run) {
  std::ofstream os = open_out(path);
  const int n = run.polylines.empty() || run.polylines.front().empty()
                    ? 0
                    : static_cast<int>(run.polylines.front().front().size());
  os << "t,seed";
  for (int k = 1; k <= n; ++k) os << ",x" << k;
  os << '\n';
  for (std::size_t step = 0; step < run.times.size(); ++step) {
    for (std::size_t s = 0; s < run.polylines.size(); ++s) {
      os << g17(run.times[step]) << ',' << s;
      const Eigen::VectorXd& x = run.polylines[s][step];
      for (int k = 0; k < x.size(); ++k) os << ',' << g17(x(k));
      os << '\n';
    }
  }
  finish(os, path);
}

void export_grid(const std::string& path, const QPVectorField& u, const GridWindow& window,
                 std::int64_t point_budget) {
  const int n = u.dim();
  if (static_cast<int>(window.lo.size()) != n || static_cast<int>(window.hi.size()) != n ||
      static_cast<int>(window.resolution.size()) != n) {
    throw ConfigError("grid window needs lo, hi, resolution of length n = " + std::to_string(n));
  }
  std::int64_t count = 1;
  for (int j = 0; j < n; ++j) {
    const int r = window.resolution[static_cast<std::size_t>(j)];
    if (r < 1) throw ConfigError("grid resolution must be >= 1");
    if (window.hi[static_cast<std::size_t>(j)] < window.lo[static_cast<std::size_t>(j)]) {
      throw ConfigError("grid window has hi < lo on axis " + std::to_string(j + 1));
    }
    count *= r;
    if (count > point_budget) {
      throw ConfigError("grid resolution exceeds the point budget of " +
                        std::to_string(point_budget));
    }
  }

  std::ofstream os = open_out(path);
  os << "qpeuler grid 1\n";
  os << "n " << n << " components " << n << '\n';
  os << "lo";
  for (const double v : window.lo) os << ' ' << g17(v);
  os << "\nhi";
  for (const double v : window.hi) os << ' ' << g17(v);
  os << "\nresolution";
  for (const int r : window.resolution) os << ' ' << r;
  os << "\nvalues " << count << '\n';

  // row-major over the window, last axis fastest
  std::vector<double> x(static_cast<std::size_t>(n));
  std::vector<std::int64_t> digit(static_cast<std::size_t>(n), 0);
  for (std::int64_t p = 0; p < count; ++p) {
    for (int j = 0; j < n; ++j) {
      const int r = window.resolution[static_cast<std::size_t>(j)];
      const double lo = window.lo[static_cast<std::size_t>(j)];
      const double hi = window.hi[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(j)] =
          r == 1 ? lo
                 : lo + (hi - lo) * static_cast<double>(digit[static_cast<std::size_t>(j)]) /
                            static_cast<double>(r - 1);
    }
    const Eigen::VectorXd v = evaluate(u, x);
    for (int k = 0; k < n; ++k) os << g17(v(k)) << (k + 1 < n ? " " : "");
    os << '\n';
    for (int j = n - 1; j >= 0; --j) {
      auto& dj = digit[static_cast<std::size_t>(j)];
      if (++dj < window.resolution[static_cast<std::size_t>(j)]) break;
      dj = 0;
    }
  }
  finish(os, path);
}

void write_torus_samples(const std::string& path, const TorusDiffeo& phi) {
  std::ofstream os = open_out(path);
  const int M = phi.grid().dim();
  os << "qpeuler torus-samples 1\n";
  os << "M " << M << " G " << phi.grid().points_per_dim() << '\n';
  const std::vector<double>& s = phi.displacement_samples();
  const std::int64_t count = phi.grid().node_count();
  for (std::int64_t j = 0; j < count; ++j) {
    for (int mu = 0; mu < M; ++mu) {
      os << g17(s[static_cast<std::size_t>(j) * static_cast<std::size_t>(M) +
                  static_cast<std::size_t>(mu)])
         << (mu + 1 < M ? " " : "");
    }
    os << '\n';
  }
  finish(os, path);
}

}  // namespace qpeuler::io
