#include "floquet/records.hpp"

#include "floquet/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace floquet {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Whitespace-separated tokens with '#' comments stripped.
class Tokens {
 public:
  Tokens(std::istream& in, std::string what) : what_(std::move(what)) {
    for (std::string line; std::getline(in, line);) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream ls(line);
      for (std::string tok; ls >> tok;) toks_.push_back(std::move(tok));
    }
  }

  const std::string& word() {
    if (pos_ >= toks_.size()) fail("unexpected end of file");
    return toks_[pos_++];
  }

  void expect(std::string_view key) {
    const auto& w = word();
    if (w != key) fail("expected '" + std::string(key) + "', found '" + w + "'");
  }

  template <typename T>
  T number() {
    const auto& w = word();
    T v{};
    const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size()) fail("bad number '" + w + "'");
    return v;
  }

  bool done() const { return pos_ >= toks_.size(); }
  bool peek(std::string_view key) const { return pos_ < toks_.size() && toks_[pos_] == key; }

  [[noreturn]] void fail(const std::string& msg) const { throw UsageError(what_ + ": " + msg); }

 private:
  std::string what_;
  std::vector<std::string> toks_;
  std::size_t pos_ = 0;
};

Vec read_vec(Tokens& t, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = t.number<double>();
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

}  // namespace

OrbitRecord make_orbit_record(const PeriodicOrbit& orbit, std::vector<FloquetMode> modes) {
  OrbitRecord r;
  r.system = orbit.system.name();
  r.params = orbit.system.params();
  r.tau = orbit.tau;
  r.anchor = orbit.anchor;
  r.tol = orbit.tol;
  r.multipliers = floquet_multipliers(orbit);
  r.trace_integral = orbit.trace_integral;
  r.modes = std::move(modes);
  return r;
}

PeriodicOrbit rebuild_orbit(const OrbitRecord& record) {
  return orbit_from_anchor(make_system(record.system, record.params), record.anchor, record.tau,
                           record.tol);
}

void write_orbit_record(const OrbitRecord& r, std::ostream& out) {
  const auto dim = r.anchor.size();
  out << "# floquet orbit record\n";
  out << "system " << r.system << '\n';
  out << "params " << (r.params.empty() ? "-" : format_params(r.params)) << '\n';
  out << "dim " << dim << '\n';
  out << "tau " << num(r.tau) << '\n';
  out << "anchor";
  for (Eigen::Index i = 0; i < dim; ++i) out << ' ' << num(r.anchor[i]);
  out << '\n';
  out << "tol " << num(r.tol) << '\n';
  out << "trivial " << num(r.multipliers.trivial) << '\n';
  out << "multipliers " << r.multipliers.nontrivial.size();
  for (double m : r.multipliers.nontrivial) out << ' ' << num(m);
  out << '\n';
  out << "trace_integral " << num(r.trace_integral) << '\n';
  out << "modes " << r.modes.size() << '\n';
  for (std::size_t m = 0; m < r.modes.size(); ++m) {
    const auto& mode = r.modes[m];
    out << "mode " << m + 1 << '\n';
    out << "lambda " << num(mode.lambda()) << '\n';
    out << "eigvec";
    for (Eigen::Index i = 0; i < mode.eigvec().size(); ++i) out << ' ' << num(mode.eigvec()[i]);
    out << '\n';
    out << "grid " << mode.n_grid() << ' ' << mode.periods() << '\n';
    out << "# t log_abs_phi sign direction\n";
    for (std::size_t j = 0; j < mode.size(); ++j) {
      out << num(mode.time(j)) << ' ' << num(mode.log_abs(j)) << ' ' << mode.sign(j);
      const Vec d = mode.direction(j);
      for (Eigen::Index i = 0; i < d.size(); ++i) out << ' ' << num(d[i]);
      out << '\n';
    }
  }
}

void write_orbit_record(const OrbitRecord& record, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_orbit_record(record, out);
}

OrbitRecord read_orbit_record(std::istream& in) {
  Tokens t(in, "orbit record");
  OrbitRecord r;
  t.expect("system");
  r.system = t.word();
  t.expect("params");
  const auto& params = t.word();
  if (params != "-") r.params = parse_params(params);
  t.expect("dim");
  const int dim = t.number<int>();
  if (dim < 2 || dim > kMaxDim) t.fail("unsupported dimension");
  t.expect("tau");
  r.tau = t.number<double>();
  t.expect("anchor");
  r.anchor = read_vec(t, dim);
  t.expect("tol");
  r.tol = t.number<double>();
  t.expect("trivial");
  r.multipliers.trivial = t.number<double>();
  t.expect("multipliers");
  const int nm = t.number<int>();
  if (nm != dim - 1) t.fail("expected " + std::to_string(dim - 1) + " nontrivial multipliers");
  for (int i = 0; i < nm; ++i) r.multipliers.nontrivial.push_back(t.number<double>());
  t.expect("trace_integral");
  r.trace_integral = t.number<double>();
  t.expect("modes");
  const int modes = t.number<int>();
  if (modes < 0 || modes > nm) t.fail("bad mode count");
  for (int m = 0; m < modes; ++m) {
    t.expect("mode");
    if (t.number<int>() != m + 1) t.fail("modes out of order");
    t.expect("lambda");
    const double lambda = t.number<double>();
    t.expect("eigvec");
    Vec eig = read_vec(t, dim);
    t.expect("grid");
    const int n_grid = t.number<int>();
    const int periods = t.number<int>();
    if (n_grid < 2 || periods < 1) t.fail("bad grid");
    const auto points = static_cast<std::size_t>(n_grid) * periods + 1;
    std::vector<double> log_abs(points), dirs(points * static_cast<std::size_t>(dim));
    std::vector<std::int8_t> sign(points);
    for (std::size_t j = 0; j < points; ++j) {
      t.number<double>();  // time, implied by the grid
      log_abs[j] = t.number<double>();
      const int s = t.number<int>();
      if (s != 1 && s != -1) t.fail("sign must be +1 or -1");
      sign[j] = static_cast<std::int8_t>(s);
      for (int i = 0; i < dim; ++i) dirs[j * dim + i] = t.number<double>();
    }
    r.modes.emplace_back(lambda, std::move(eig), r.tau, n_grid, periods, dim, std::move(log_abs),
                         std::move(sign), std::move(dirs));
  }
  if (!t.done()) t.fail("trailing content");
  return r;
}

OrbitRecord read_orbit_record(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_orbit_record(in);
}

void write_crossing_series(const CrossingSeries& s, std::ostream& out) {
  out << "# floquet crossing series\n";
  out << "p " << s.p << '\n';
  out << "coord_dim " << s.coord_dim << '\n';
  out << "discarded_out_of_gate " << s.discarded_out_of_gate << '\n';
  out << "discarded_out_of_order " << s.discarded_out_of_order << '\n';
  out << "crossings " << s.records.size() << '\n';
  out << "# index section time coords\n";
  for (const auto& r : s.records) {
    out << r.index << ' ' << r.section << ' ' << num(r.time);
    for (int j = 0; j < s.coord_dim; ++j) out << ' ' << num(r.coords[static_cast<std::size_t>(j)]);
    out << '\n';
  }
}

void write_crossing_series(const CrossingSeries& series, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_crossing_series(series, out);
}

CrossingSeries read_crossing_series(std::istream& in) {
  Tokens t(in, "crossing series");
  CrossingSeries s;
  t.expect("p");
  s.p = t.number<int>();
  t.expect("coord_dim");
  s.coord_dim = t.number<int>();
  if (s.p < 1 || s.coord_dim < 1 || s.coord_dim > kMaxCoords) t.fail("bad header");
  t.expect("discarded_out_of_gate");
  s.discarded_out_of_gate = t.number<long>();
  t.expect("discarded_out_of_order");
  s.discarded_out_of_order = t.number<long>();
  t.expect("crossings");
  const auto n = t.number<std::size_t>();
  s.records.resize(n);
  for (auto& r : s.records) {
    r.index = t.number<long>();
    r.section = t.number<int>();
    if (r.section < 0 || r.section >= s.p) t.fail("section index out of range");
    r.time = t.number<double>();
    for (int j = 0; j < s.coord_dim; ++j) r.coords[static_cast<std::size_t>(j)] = t.number<double>();
  }
  if (!t.done()) t.fail("trailing content");
  return s;
}

CrossingSeries read_crossing_series(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_crossing_series(in);
}

}  // namespace floquet
