#include "floquet/estimate.hpp"

#include "floquet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace floquet {

namespace {

Vec coords_of(const CrossingRecord& r, int m) {
  Vec v(m);
  for (int j = 0; j < m; ++j) v[j] = r.coords[static_cast<std::size_t>(j)];
  return v;
}

// Slot of the transition into `section`: section 0 closes the cycle.
std::size_t slot(int section, int p) {
  return static_cast<std::size_t>(section == 0 ? p - 1 : section - 1);
}

}  // namespace

ParFit fit_par(const CrossingSeries& series, const FitOptions& options) {
  const int p = series.p;
  const int m = series.coord_dim;
  if (p < 1 || m < 1) throw InvalidParameter("crossing series has no sections");
  const auto np = static_cast<std::size_t>(p);

  struct Acc {
    long n = 0;
    Mat sxx, syx, syy;
  };
  // Per-section means, subtracted before the no-intercept regressions.
  std::vector<Vec> mean(np, Vec::Zero(m));
  if (options.center) {
    std::vector<long> seen(np, 0);
    for (const auto& r : series.records) {
      mean[static_cast<std::size_t>(r.section)] += coords_of(r, m);
      ++seen[static_cast<std::size_t>(r.section)];
    }
    for (std::size_t k = 0; k < np; ++k) {
      if (seen[k] > 0) mean[k] /= static_cast<double>(seen[k]);
    }
  }
  std::vector<Acc> acc(np);
  for (auto& a : acc) {
    a.sxx = Mat::Zero(m, m);
    a.syx = Mat::Zero(m, m);
    a.syy = Mat::Zero(m, m);
  }
  const auto& rec = series.records;
  for (std::size_t i = 1; i < rec.size(); ++i) {
    if (rec[i].index != rec[i - 1].index + 1) continue;
    Acc& a = acc[slot(rec[i].section, p)];
    const Vec x = coords_of(rec[i - 1], m) - mean[static_cast<std::size_t>(rec[i - 1].section)];
    const Vec y = coords_of(rec[i], m) - mean[static_cast<std::size_t>(rec[i].section)];
    ++a.n;
    a.sxx += x * x.transpose();
    a.syx += y * x.transpose();
    a.syy += y * y.transpose();
  }

  ParFit fit;
  fit.p = p;
  fit.coord_dim = m;
  fit.alphas.resize(np);
  fit.counts.resize(np);
  double rss = 0.0;
  long residuals = 0;
  for (std::size_t k = 0; k < np; ++k) {
    Acc& a = acc[k];
    fit.counts[k] = a.n;
    const int into = static_cast<int>((k + 1) % np);
    if (a.n < 2) {
      throw InsufficientData("transition into section " + std::to_string(into) + " has " +
                             std::to_string(a.n) + " observation(s)");
    }
    const Mat& sxx = a.sxx;
    const Mat& syx = a.syx;
    const Mat& syy = a.syy;
    Eigen::LDLT<Mat> ldlt(sxx);
    const double scale = sxx.diagonal().cwiseAbs().maxCoeff();
    const double pivot = ldlt.vectorD().cwiseAbs().minCoeff();
    if (!(scale > 0) || ldlt.info() != Eigen::Success || pivot <= 1e-13 * scale) {
      throw DegenerateData("singular Gram matrix for the transition into section " +
                           std::to_string(into));
    }
    // A = Syx Sxx^-1, solved as Sxx A^T = Syx^T.
    const Mat at = ldlt.solve(Mat(syx.transpose()));
    const Mat alpha = at.transpose();
    fit.alphas[k] = alpha;
    // Residual sum: tr(Syy - A Sxy - Syx A^T + A Sxx A^T) = tr(Syy - A Syx^T).
    rss += (syy - alpha * syx.transpose()).trace();
    residuals += a.n * m;
  }
  fit.sigma2_hat = std::max(0.0, rss / static_cast<double>(residuals));
  return fit;
}

MultiplierEstimate multiplier_estimate(const ParFit& fit) {
  MultiplierEstimate est;
  long total = 0;
  for (long c : fit.counts) total += c;
  est.n_cycles = fit.p > 0 ? total / fit.p : 0;
  const int m = fit.coord_dim;
  if (m == 1) {
    double prod = 1.0;
    for (const Mat& a : fit.alphas) prod *= a(0, 0);
    est.lambda_hat = {prod};
    return est;
  }
  Mat prod = Mat::Identity(m, m);
  for (const Mat& a : fit.alphas) prod = Mat(a * prod);
  if (m == 2) {
    const double tr = prod.trace();
    const double det = prod.determinant();
    const double disc = 0.25 * tr * tr - det;
    if (disc < 0) {
      est.complex_pair = true;
      est.lambda_hat = {0.5 * tr, 0.5 * tr};
      return est;
    }
    // The small root from det / big keeps its relative accuracy.
    const double big = 0.5 * tr + std::copysign(std::sqrt(disc), tr);
    const double small = big != 0.0 ? det / big : 0.0;
    est.lambda_hat = {big, small};
    return est;
  }
  Eigen::EigenSolver<Mat> es(prod, false);
  std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                       es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(),
            [](auto a, auto b) { return std::abs(a) > std::abs(b); });
  for (const auto& e : ev) {
    if (e.imag() != 0.0) est.complex_pair = true;
    est.lambda_hat.push_back(e.real());
  }
  return est;
}

CrossingSeries to_mode_coordinates(const CrossingSeries& series, const SectionSet& sections) {
  if (series.p != sections.p() || series.coord_dim != sections.coord_dim()) {
    throw InvalidParameter("crossing series does not match the section set");
  }
  CrossingSeries out = series;
  if (sections.dim == 2) return out;  // coordinates are already mode amplitudes
  const int m = series.coord_dim;
  std::vector<Mat> maps;
  maps.reserve(sections.sections.size());
  for (const auto& s : sections.sections) {
    // Displacement F c in the section equals W a for mode amplitudes a.
    const Mat& w = s.mode_directions;
    maps.push_back((w.transpose() * w).ldlt().solve(Mat(w.transpose() * s.frame)));
  }
  for (auto& r : out.records) {
    const Vec a = maps[static_cast<std::size_t>(r.section)] * coords_of(r, m);
    for (int j = 0; j < m; ++j) r.coords[static_cast<std::size_t>(j)] = a[j];
  }
  return out;
}

CrossingSeries coordinate_series(const CrossingSeries& series, int component) {
  if (component < 0 || component >= series.coord_dim) {
    throw InvalidParameter("coordinate index out of range");
  }
  CrossingSeries out = series;
  out.coord_dim = 1;
  for (auto& r : out.records) {
    const double v = r.coords[static_cast<std::size_t>(component)];
    r.coords = {};
    r.coords[0] = v;
  }
  return out;
}

MultiplierEstimate estimate_multipliers(const CrossingSeries& series, const SectionSet& sections,
                                        const EstimateOptions& options) {
  if (!options.mode_projection || series.coord_dim == 1) {
    return multiplier_estimate(fit_par(series, options.fit));
  }
  const CrossingSeries modes = to_mode_coordinates(series, sections);
  MultiplierEstimate est;
  for (int j = 0; j < modes.coord_dim; ++j) {
    const auto e = multiplier_estimate(fit_par(coordinate_series(modes, j), options.fit));
    est.lambda_hat.push_back(e.lambda_hat[0]);
    est.n_cycles = e.n_cycles;
  }
  return est;
}

}  // namespace floquet
