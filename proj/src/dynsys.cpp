#include "floquet/dynsys.hpp"

#include "floquet/errors.hpp"
#include "floquet/kernels.hpp"

#include <charconv>
#include <cmath>
#include <mutex>
#include <sstream>
#include <utility>

namespace floquet {

SystemSpec::SystemSpec(std::string name, int dim, ParamMap params, Field field,
                       Jacobian jacobian, BuiltinKind kind, Symmetry symmetry)
    : name_(std::move(name)),
      dim_(dim),
      params_(std::move(params)),
      field_(std::move(field)),
      jacobian_(std::move(jacobian)),
      kind_(kind),
      symmetry_(std::move(symmetry)) {
  if (dim_ < 1 || dim_ > kMaxDim) {
    throw InvalidParameter("system dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (!field_ || !jacobian_) throw InvalidParameter("system needs a field and a jacobian");
}

double SystemSpec::param(std::string_view key) const {
  auto it = params_.find(key);
  if (it == params_.end()) {
    throw InvalidParameter("system '" + name_ + "' has no parameter '" + std::string(key) + "'");
  }
  return it->second;
}

SystemSpec make_van_der_pol(double epsilon, double a) {
  if (epsilon == 0.0 || !std::isfinite(epsilon) || !std::isfinite(a)) {
    throw InvalidParameter("van der Pol requires finite epsilon != 0");
  }
  const kernels::VdpCoeffs c{epsilon, a};
  auto field = [c](const Vec& s) {
    Vec f(2);
    kernels::vdp_field(s[0], s[1], c, f[0], f[1]);
    return f;
  };
  auto jacobian = [c](const Vec& s) {
    Mat j(2, 2);
    j << (1.0 - s[0] * s[0]) / c.eps, 1.0 / c.eps, -1.0, 0.0;
    return j;
  };
  return SystemSpec("vdp", 2, {{"eps", epsilon}, {"a", a}}, field, jacobian,
                    BuiltinKind::van_der_pol);
}

SystemSpec make_lorenz(double sigma, double r, double b) {
  const kernels::LorenzCoeffs c{sigma, r, b};
  auto field = [c](const Vec& s) {
    Vec f(3);
    kernels::lorenz_field(s[0], s[1], s[2], c, f[0], f[1], f[2]);
    return f;
  };
  auto jacobian = [c](const Vec& s) {
    Mat j(3, 3);
    j << -c.sigma, c.sigma, 0.0,
         c.r - s[2], -1.0, -s[0],
         s[1], s[0], -c.b;
    return j;
  };
  auto mirror = [](const Vec& s) {
    Vec m = s;
    m[0] = -s[0];
    m[1] = -s[1];
    return m;
  };
  return SystemSpec("lorenz", 3, {{"sigma", sigma}, {"r", r}, {"b", b}}, field, jacobian,
                    BuiltinKind::lorenz, mirror);
}

SystemSpec make_radial_oscillator(double omega, double mu) {
  if (omega <= 0.0 || mu <= 0.0) throw InvalidParameter("radial oscillator needs omega, mu > 0");
  auto field = [omega, mu](const Vec& s) {
    const double k = mu * (1.0 - s[0] * s[0] - s[1] * s[1]);
    Vec f(2);
    f << -omega * s[1] + k * s[0], omega * s[0] + k * s[1];
    return f;
  };
  auto jacobian = [omega, mu](const Vec& s) {
    const double x = s[0], y = s[1];
    const double k = mu * (1.0 - x * x - y * y);
    Mat j(2, 2);
    j << k - 2.0 * mu * x * x, -omega - 2.0 * mu * x * y,
         omega - 2.0 * mu * x * y, k - 2.0 * mu * y * y;
    return j;
  };
  return SystemSpec("radial", 2, {{"omega", omega}, {"mu", mu}}, field, jacobian);
}

namespace {

struct Registration {
  ParamMap defaults;
  SystemFactory factory;
};

struct Registry {
  std::mutex mutex;
  std::map<std::string, Registration, std::less<>> entries;

  Registry() {
    entries.emplace("vdp", Registration{{{"eps", 0.1}, {"a", 0.99}}, [](const ParamMap& p) {
                                          return make_van_der_pol(p.at("eps"), p.at("a"));
                                        }});
    entries.emplace("lorenz",
                    Registration{{{"sigma", 10.0}, {"r", 240.0}, {"b", 8.0 / 3.0}},
                                 [](const ParamMap& p) {
                                   return make_lorenz(p.at("sigma"), p.at("r"), p.at("b"));
                                 }});
    entries.emplace("radial", Registration{{{"omega", 1.0}, {"mu", 0.1}}, [](const ParamMap& p) {
                                             return make_radial_oscillator(p.at("omega"),
                                                                           p.at("mu"));
                                           }});
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

SystemSpec make_system(std::string_view name, const ParamMap& params) {
  Registration reg;
  {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto it = r.entries.find(name);
    if (it == r.entries.end()) throw UsageError("unknown system '" + std::string(name) + "'");
    reg = it->second;
  }
  ParamMap merged = reg.defaults;
  for (const auto& [key, value] : params) {
    auto it = merged.find(key);
    if (it == merged.end()) {
      throw UsageError("system '" + std::string(name) + "' has no parameter '" + key + "'");
    }
    it->second = value;
  }
  return reg.factory(merged);
}

void register_system(std::string name, ParamMap defaults, SystemFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.entries.insert_or_assign(std::move(name), Registration{std::move(defaults), std::move(factory)});
}

std::vector<std::string> registered_systems() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, reg] : r.entries) names.push_back(name);
  return names;
}

ParamMap parse_params(std::string_view text) {
  ParamMap out;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("malformed parameter '" + std::string(item) + "' (expected key=value)");
    }
    const auto key = trim(item.substr(0, eq));
    const auto val = trim(item.substr(eq + 1));
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (key.empty() || ec != std::errc{} || ptr != val.data() + val.size()) {
      throw UsageError("malformed parameter '" + std::string(item) + "'");
    }
    out.insert_or_assign(std::string(key), v);
  }
  return out;
}

std::string format_params(const ParamMap& params) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [key, value] : params) {
    if (!first) os << ',';
    os << key << '=' << value;
    first = false;
  }
  return os.str();
}

}  // namespace floquet
