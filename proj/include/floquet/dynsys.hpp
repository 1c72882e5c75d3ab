#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace floquet {

/// Upper bound on state dimension. Benchmarks use 2 and 3; small fixed-capacity
/// storage keeps the hot paths allocation free.
inline constexpr int kMaxDim = 6;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxDim, kMaxDim>;

using ParamMap = std::map<std::string, double, std::less<>>;

/// Systems with a dedicated batched SIMD stepper.
enum class BuiltinKind { custom, van_der_pol, lorenz };

/// An autonomous vector field with its analytic Jacobian. Immutable after
/// construction; evaluators are pure.
class SystemSpec {
 public:
  using Field = std::function<Vec(const Vec&)>;
  using Jacobian = std::function<Mat(const Vec&)>;
  /// Optional involution mapping trajectories onto trajectories.
  using Symmetry = std::function<Vec(const Vec&)>;

  SystemSpec(std::string name, int dim, ParamMap params, Field field, Jacobian jacobian,
             BuiltinKind kind = BuiltinKind::custom, Symmetry symmetry = {});

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  const ParamMap& params() const noexcept { return params_; }
  double param(std::string_view key) const;
  BuiltinKind kind() const noexcept { return kind_; }
  const Symmetry& symmetry() const noexcept { return symmetry_; }

  Vec field(const Vec& x) const { return field_(x); }
  Mat jacobian(const Vec& x) const { return jacobian_(x); }

 private:
  std::string name_;
  int dim_;
  ParamMap params_;
  Field field_;
  Jacobian jacobian_;
  BuiltinKind kind_;
  Symmetry symmetry_;
};

/// eps*x' = y - x^3/3 + x,  y' = a - x.
SystemSpec make_van_der_pol(double epsilon, double a);

/// x' = sigma (y - x), y' = r x - y - x z, z' = -b z + x y.
SystemSpec make_lorenz(double sigma, double r, double b);

/// Planar normal form x' = -omega y + mu x (1 - x^2 - y^2),
/// y' = omega x + mu y (1 - x^2 - y^2). The unit circle is a limit cycle of
/// period 2 pi / omega whose transverse mode contracts uniformly, with
/// multiplier exp(-4 pi mu / omega).
SystemSpec make_radial_oscillator(double omega, double mu);

/// Builds a registered system by name ("vdp", "lorenz", "radial", plus any
/// user registrations). Missing parameters take the registered defaults;
/// unknown parameter names or system names raise UsageError.
SystemSpec make_system(std::string_view name, const ParamMap& params = {});

using SystemFactory = std::function<SystemSpec(const ParamMap&)>;

/// Extension point for custom field/Jacobian pairs. `defaults` lists every
/// accepted parameter name.
void register_system(std::string name, ParamMap defaults, SystemFactory factory);

std::vector<std::string> registered_systems();

/// Parses "k=v,k=v" into a ParamMap. Raises UsageError on malformed input.
ParamMap parse_params(std::string_view text);
std::string format_params(const ParamMap& params);

}  // namespace floquet
