#pragma once

// Far-field evaluation: |U|^2 = |A|^2 * |F|^2, normalized by the squared sum
// of pixel amplitudes so a fully co-phased aperture peaks at exactly 1.
//
// Two angle parametrizations appear here. array_factor/element_factor speak
// the polar convention (theta from the z-axis, phi from x in the xy-plane);
// cuts speak the steering convention of the front end (theta_s from
// broadside +y inside the plane phi_s). Both reduce to a unit direction
// (ux, uy, uz), and the lattice kernel only consumes ux and uz.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "opa/common.hpp"
#include "opa/excitation.hpp"

namespace opa {

// ---------------------------------------------------------------------------
// Element patterns.

struct ElementPattern {
  enum class Kind { Isotropic, DipoleZ, DipoleInXZ, Tabulated };

  Kind kind = Kind::DipoleZ;
  double orientation_deg = 0.0;  // DipoleInXZ: dipole axis angle from z, in xz

  // Tabulated: gains on an ascending (theta, phi) polar grid, row-major with
  // theta slow; lookups clamp to the grid edges.
  std::vector<double> theta_grid_deg;
  std::vector<double> phi_grid_deg;
  std::vector<double> gains;

  static ElementPattern isotropic() { return {Kind::Isotropic}; }
  static ElementPattern dipole_z() { return {Kind::DipoleZ}; }
  static ElementPattern dipole_in_xz(double orientation_deg) {
    ElementPattern e{Kind::DipoleInXZ};
    e.orientation_deg = orientation_deg;
    return e;
  }
  static ElementPattern tabulated(std::vector<double> theta_grid_deg,
                                  std::vector<double> phi_grid_deg,
                                  std::vector<double> gains) {
    ElementPattern e{Kind::Tabulated};
    e.theta_grid_deg = std::move(theta_grid_deg);
    e.phi_grid_deg = std::move(phi_grid_deg);
    e.gains = std::move(gains);
    e.validate();
    return e;
  }

  void validate() const {
    if (kind != Kind::Tabulated) return;
    if (theta_grid_deg.size() < 2 || phi_grid_deg.size() < 2)
      throw validation_error("ElementPattern: tabulated grid needs >= 2 nodes per axis");
    if (!std::is_sorted(theta_grid_deg.begin(), theta_grid_deg.end()) ||
        !std::is_sorted(phi_grid_deg.begin(), phi_grid_deg.end()))
      throw validation_error("ElementPattern: tabulated grid axes must ascend");
    if (gains.size() != theta_grid_deg.size() * phi_grid_deg.size())
      throw validation_error("ElementPattern: gain table size mismatch");
    for (double g : gains)
      if (!std::isfinite(g) || g < 0.0)
        throw validation_error("ElementPattern: gains must be finite and >= 0");
  }

  // Dipole functional form in the angle gamma between axis and direction:
  // F = cos(pi/2 * cos(gamma)) / sin(gamma), 0 at the axial nulls.
  static double dipole_form(double cos_gamma) {
    const double s2 = 1.0 - cos_gamma * cos_gamma;
    if (s2 <= 0.0) return 0.0;
    return std::cos(0.5 * pi * cos_gamma) / std::sqrt(s2);
  }

  double gain_direction(double ux, double uy, double uz) const {
    switch (kind) {
      case Kind::Isotropic:
        return 1.0;
      case Kind::DipoleZ:
        return dipole_form(uz);
      case Kind::DipoleInXZ: {
        const double c = sin_deg(orientation_deg) * ux + cos_deg(orientation_deg) * uz;
        return dipole_form(c);
      }
      case Kind::Tabulated: {
        const double theta =
            rad_to_deg(std::acos(std::clamp(uz, -1.0, 1.0)));
        double phi = rad_to_deg(std::atan2(uy, ux));
        if (phi < 0.0) phi += 360.0;
        return bilinear(theta, phi);
      }
    }
    return 1.0;
  }

 private:
  double bilinear(double theta, double phi) const {
    const auto cell = [](const std::vector<double>& axis, double x,
                         std::size_t* i0, double* t) {
      if (x <= axis.front()) { *i0 = 0; *t = 0.0; return; }
      if (x >= axis.back()) { *i0 = axis.size() - 2; *t = 1.0; return; }
      const std::size_t hi =
          std::upper_bound(axis.begin(), axis.end(), x) - axis.begin();
      *i0 = hi - 1;
      *t = (x - axis[*i0]) / (axis[*i0 + 1] - axis[*i0]);
    };
    std::size_t it, ip;
    double tt, tp;
    cell(theta_grid_deg, theta, &it, &tt);
    cell(phi_grid_deg, phi, &ip, &tp);
    const std::size_t w = phi_grid_deg.size();
    const double g00 = gains[it * w + ip], g01 = gains[it * w + ip + 1];
    const double g10 = gains[(it + 1) * w + ip], g11 = gains[(it + 1) * w + ip + 1];
    return (1.0 - tt) * ((1.0 - tp) * g00 + tp * g01) +
           tt * ((1.0 - tp) * g10 + tp * g11);
  }
};

// Polar-convention element gain: theta from z-axis, phi from x.
inline double element_factor(const ElementPattern& pattern, double theta_deg,
                             double phi_deg) {
  const double st = sin_deg(theta_deg);
  return pattern.gain_direction(st * cos_deg(phi_deg), st * sin_deg(phi_deg),
                                cos_deg(theta_deg));
}

// ---------------------------------------------------------------------------
// Array factor.

// Complex excitations in row-major pixel order (p slow, q fast).
inline std::vector<std::complex<double>> complex_excitation(const PixelGrid& grid) {
  std::vector<std::complex<double>> e(grid.amplitude.size());
  for (std::size_t i = 0; i < e.size(); ++i)
    e[i] = grid.amplitude[i] * std::polar(1.0, grid.phase[i]);
  return e;
}

// A(ux, uz) = sum_pq E(p,q) * exp(-i*2*pi*(p*a_x*ux + q*a_z*uz)). Terms are
// materialized in row-major pixel order and reduced with the fixed pairwise
// tree, so the result never depends on scheduling.
inline std::complex<double> array_factor_direction(
    const ArraySpec& spec, const std::vector<std::complex<double>>& excitation,
    double ux, double uz) {
  const int nx = spec.half_extent_x, nz = spec.half_extent_z;
  std::vector<std::complex<double>> fx(2 * nx + 1), fz(2 * nz + 1);
  const double kx = -two_pi * spec.pitch_x * ux;
  const double kz = -two_pi * spec.pitch_z * uz;
  for (int p = -nx; p <= nx; ++p) fx[p + nx] = std::polar(1.0, kx * p);
  for (int q = -nz; q <= nz; ++q) fz[q + nz] = std::polar(1.0, kz * q);
  std::vector<std::complex<double>> terms(excitation.size());
  std::size_t i = 0;
  for (int p = 0; p < 2 * nx + 1; ++p)
    for (int q = 0; q < 2 * nz + 1; ++q, ++i) terms[i] = excitation[i] * fx[p] * fz[q];
  return pairwise_sum(terms);
}

inline std::complex<double> array_factor(const PixelGrid& grid, double theta_deg,
                                         double phi_deg) {
  const auto e = complex_excitation(grid);
  const double st = sin_deg(theta_deg);
  return array_factor_direction(grid.spec, e, st * cos_deg(phi_deg),
                                cos_deg(theta_deg));
}

// ---------------------------------------------------------------------------
// Sampling grids.

// Uniformly spaced angles over [lo, hi]. When lo and the step are exact
// decimals the samples are built on an integer lattice scaled by a power of
// ten, so values like 0.00 or -45.50 are exact and the grid is symmetric
// under negation for symmetric spans.
inline std::vector<double> uniform_angles(double lo_deg, double hi_deg,
                                          double resolution_deg) {
  if (!(resolution_deg > 0.0) || !std::isfinite(resolution_deg))
    throw validation_error("uniform_angles: resolution must be finite and > 0");
  if (!(hi_deg > lo_deg))
    throw validation_error("uniform_angles: span must be nonempty");
  for (int k = 0; k <= 9; ++k) {
    const double scale = std::pow(10.0, k);
    const double l = lo_deg * scale, r = resolution_deg * scale;
    if (std::fabs(l - std::round(l)) < 1e-6 && std::fabs(r - std::round(r)) < 1e-6 &&
        std::round(r) != 0.0) {
      const long long li = static_cast<long long>(std::llround(l));
      const long long ri = static_cast<long long>(std::llround(r));
      const std::size_t n = static_cast<std::size_t>(
          std::floor((hi_deg - lo_deg) / resolution_deg + 1e-9)) + 1;
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<double>(li + static_cast<long long>(i) * ri) / scale;
      return out;
    }
  }
  const std::size_t n = static_cast<std::size_t>(
      std::floor((hi_deg - lo_deg) / resolution_deg + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo_deg + i * resolution_deg;
  return out;
}

// ---------------------------------------------------------------------------
// Cuts.

struct CutSpec {
  double phi_s_deg = 0.0;
  double resolution_deg = 0.01;
  double theta_lo_deg = -90.0;
  double theta_hi_deg = 90.0;

  void validate() const {
    if (!std::isfinite(phi_s_deg) || phi_s_deg < 0.0 || phi_s_deg >= 180.0)
      throw validation_error("CutSpec: phi_s must lie in [0, 180) degrees");
    if (!(resolution_deg > 0.0) || !std::isfinite(resolution_deg))
      throw validation_error("CutSpec: resolution must be finite and > 0");
    if (!(theta_hi_deg > theta_lo_deg) || theta_lo_deg < -90.0 || theta_hi_deg > 90.0)
      throw validation_error("CutSpec: span must be a nonempty subrange of [-90, 90]");
  }
};

struct PatternCut {
  double phi_s_deg = 0.0;
  double resolution_deg = 0.0;
  std::vector<double> theta_deg;   // ascending, uniform
  std::vector<double> intensity;   // normalized |A|^2 |F|^2 / (sum amp)^2
  double normalization = 0.0;      // (sum amp)^2

  std::size_t size() const { return theta_deg.size(); }
};

// One plane cut. The steering-plane direction for cut angle t is
// x = sin(t)*cos(phi_s), y = cos(t), z = sin(t)*sin(phi_s). When the cut
// plane is axis-aligned one lattice exponential is constant across the cut,
// so the grid collapses to a line (column sums for phi_s = 0, row sums for
// phi_s = 90), cutting per-angle cost from O(N^2) to O(N); the general plane
// keeps the full double sum. All paths share the pairwise reduction and are
// checked against the brute-force oracle.
inline PatternCut compute_cut(const PixelGrid& grid, const ElementPattern& element,
                              const CutSpec& cut, unsigned worker_count = 1) {
  cut.validate();
  element.validate();
  const double total = total_amplitude(grid);
  if (!(total > 0.0))
    throw validation_error("compute_cut: total amplitude must be positive");
  const double denom = total * total;

  PatternCut out;
  out.phi_s_deg = cut.phi_s_deg;
  out.resolution_deg = cut.resolution_deg;
  out.theta_deg = uniform_angles(cut.theta_lo_deg, cut.theta_hi_deg, cut.resolution_deg);
  out.intensity.assign(out.theta_deg.size(), 0.0);
  out.normalization = denom;

  const auto excitation = complex_excitation(grid);
  const double cp = cos_deg(cut.phi_s_deg);
  const double sp = sin_deg(cut.phi_s_deg);
  const int nx = grid.spec.half_extent_x, nz = grid.spec.half_extent_z;
  const int sx = grid.spec.size_x(), sz = grid.spec.size_z();

  enum class Path { CollapseQ, CollapseP, Full };
  Path path = sp == 0.0 ? Path::CollapseQ : cp == 0.0 ? Path::CollapseP : Path::Full;

  std::vector<std::complex<double>> line;
  if (path == Path::CollapseQ) {
    line.resize(sx);
    for (int p = 0; p < sx; ++p)
      line[p] = pairwise_sum(excitation.data() + static_cast<std::size_t>(p) * sz,
                             static_cast<std::size_t>(sz));
  } else if (path == Path::CollapseP) {
    line.resize(sz);
    std::vector<std::complex<double>> scratch(sx);
    for (int q = 0; q < sz; ++q) {
      for (int p = 0; p < sx; ++p)
        scratch[p] = excitation[static_cast<std::size_t>(p) * sz + q];
      line[q] = pairwise_sum(scratch);
    }
  }

  parallel_for(out.theta_deg.size(), worker_count, [&](std::size_t i) {
    const double t = out.theta_deg[i];
    const double st = sin_deg(t);
    const double ux = st * cp, uy = cos_deg(t), uz = st * sp;
    std::complex<double> a;
    if (path == Path::CollapseQ) {
      static thread_local std::vector<std::complex<double>> terms;
      terms.resize(line.size());
      const double kx = -two_pi * grid.spec.pitch_x * ux;
      for (int p = -nx; p <= nx; ++p)
        terms[p + nx] = line[p + nx] * std::polar(1.0, kx * p);
      a = pairwise_sum(terms);
    } else if (path == Path::CollapseP) {
      static thread_local std::vector<std::complex<double>> terms;
      terms.resize(line.size());
      const double kz = -two_pi * grid.spec.pitch_z * uz;
      for (int q = -nz; q <= nz; ++q)
        terms[q + nz] = line[q + nz] * std::polar(1.0, kz * q);
      a = pairwise_sum(terms);
    } else {
      a = array_factor_direction(grid.spec, excitation, ux, uz);
    }
    const double f = element.gain_direction(ux, uy, uz);
    out.intensity[i] = (std::norm(a) / denom) * (f * f);
  });
  return out;
}

// ---------------------------------------------------------------------------
// 3D hemisphere.

struct Pattern3D {
  std::vector<double> theta_deg;  // polar angle from z, [0, 180]
  std::vector<double> phi_deg;    // azimuth from x, [0, 180] (y >= 0 hemisphere)
  std::vector<double> intensity;  // row-major, theta slow
  double normalization = 0.0;
  std::optional<SteeringSpec> steering;  // annotation for exporters

  double at(std::size_t it, std::size_t ip) const {
    return intensity[it * phi_deg.size() + ip];
  }
};

// Full forward hemisphere y >= 0 on a uniform polar grid.
inline Pattern3D compute_3d(const PixelGrid& grid, const ElementPattern& element,
                            double theta_resolution_deg, double phi_resolution_deg,
                            unsigned worker_count = 1) {
  element.validate();
  if (!(theta_resolution_deg > 0.0) || !(phi_resolution_deg > 0.0))
    throw validation_error("compute_3d: resolutions must be > 0");
  const double total = total_amplitude(grid);
  if (!(total > 0.0))
    throw validation_error("compute_3d: total amplitude must be positive");
  const double denom = total * total;

  Pattern3D out;
  out.theta_deg = uniform_angles(0.0, 180.0, theta_resolution_deg);
  out.phi_deg = uniform_angles(0.0, 180.0, phi_resolution_deg);
  out.intensity.assign(out.theta_deg.size() * out.phi_deg.size(), 0.0);
  out.normalization = denom;

  const auto excitation = complex_excitation(grid);
  const std::size_t np = out.phi_deg.size();
  parallel_for(out.intensity.size(), worker_count, [&](std::size_t i) {
    const double theta = out.theta_deg[i / np];
    const double phi = out.phi_deg[i % np];
    const double st = sin_deg(theta);
    const double ux = st * cos_deg(phi), uy = st * sin_deg(phi), uz = cos_deg(theta);
    const auto a = array_factor_direction(grid.spec, excitation, ux, uz);
    const double f = element.gain_direction(ux, uy, uz);
    out.intensity[i] = (std::norm(a) / denom) * (f * f);
  });
  return out;
}

}  // namespace opa
