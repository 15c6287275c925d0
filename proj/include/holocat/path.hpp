#pragma once

// Piecewise root trajectories alpha_nu(t) driving the jump operator.

#include <cmath>
#include <vector>

#include "holocat/linalg.hpp"

namespace holocat {

enum class CurveKind { Hold, Line, CircularArc, RadialRamp, PhaseRotation };
enum class RampProfile { Linear, Smoothstep };

/// One piece of a root trajectory. `duration` is a fraction of the total
/// gate time; `sweep` is the turning angle for arcs and rotations.
struct Segment {
  CurveKind kind = CurveKind::Hold;
  cplx start{};
  cplx end{};
  cplx center{};
  double sweep = 0.0;
  double duration = 0.0;
  RampProfile profile = RampProfile::Linear;

  static Segment hold(cplx at, double duration) {
    return {CurveKind::Hold, at, at, {}, 0.0, duration, RampProfile::Linear};
  }
  static Segment line(cplx from, cplx to, double duration,
                      RampProfile p = RampProfile::Linear) {
    return {CurveKind::Line, from, to, {}, 0.0, duration, p};
  }
  static Segment radial(cplx from, cplx to, double duration,
                        RampProfile p = RampProfile::Linear) {
    return {CurveKind::RadialRamp, from, to, {}, 0.0, duration, p};
  }
  static Segment arc(cplx center, cplx from, double sweep, double duration,
                     RampProfile p = RampProfile::Linear) {
    return {CurveKind::CircularArc, from, center + (from - center) * std::polar(1.0, sweep),
            center, sweep, duration, p};
  }
  static Segment rotation(cplx from, double sweep, double duration,
                          RampProfile p = RampProfile::Linear) {
    return {CurveKind::PhaseRotation, from, from * std::polar(1.0, sweep), {}, sweep, duration, p};
  }

  /// Progress through the segment after the ramp profile is applied.
  double warp(double s) const {
    s = std::clamp(s, 0.0, 1.0);
    return profile == RampProfile::Smoothstep ? s * s * (3.0 - 2.0 * s) : s;
  }
  double warp_rate(double s) const {
    s = std::clamp(s, 0.0, 1.0);
    return profile == RampProfile::Smoothstep ? 6.0 * s * (1.0 - s) : 1.0;
  }

  /// Position at local progress s in [0, 1].
  cplx at(double s) const {
    const double w = warp(s);
    switch (kind) {
      case CurveKind::Hold: return start;
      case CurveKind::Line:
      case CurveKind::RadialRamp: return start + (end - start) * w;
      case CurveKind::CircularArc: return center + (start - center) * std::polar(1.0, sweep * w);
      case CurveKind::PhaseRotation: return start * std::polar(1.0, sweep * w);
    }
    return start;
  }

  /// d(position)/ds.
  cplx velocity(double s) const {
    const double w = warp(s);
    const double dw = warp_rate(s);
    switch (kind) {
      case CurveKind::Hold: return {};
      case CurveKind::Line:
      case CurveKind::RadialRamp: return (end - start) * dw;
      case CurveKind::CircularArc:
        return kI * sweep * dw * (start - center) * std::polar(1.0, sweep * w);
      case CurveKind::PhaseRotation: return kI * sweep * dw * start * std::polar(1.0, sweep * w);
    }
    return {};
  }
};

/// Trajectory of a single root over normalized time u in [0, 1].
struct RootTrack {
  std::vector<Segment> segments;

  double total_duration() const {
    double s = 0.0;
    for (const auto& seg : segments) s += seg.duration;
    return s;
  }

  cplx at(double u) const {
    if (segments.empty()) return {};
    double t0 = 0.0;
    for (const auto& seg : segments) {
      if (u <= t0 + seg.duration || &seg == &segments.back()) {
        const double s = seg.duration > 0.0 ? (u - t0) / seg.duration : 1.0;
        return seg.at(s);
      }
      t0 += seg.duration;
    }
    return segments.back().end;
  }

  cplx start() const { return segments.empty() ? cplx{} : segments.front().at(0.0); }
  cplx end() const { return segments.empty() ? cplx{} : segments.back().at(1.0); }

  /// Largest jump between consecutive segment endpoints.
  double max_discontinuity() const {
    double worst = 0.0;
    for (std::size_t k = 1; k < segments.size(); ++k)
      worst = std::max(worst, std::abs(segments[k].at(0.0) - segments[k - 1].at(1.0)));
    return worst;
  }

  /// Integral of Im(conj(z) dz) along the track (Gauss-Legendre per panel).
  double green_integral() const {
    static constexpr double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                                    -0.9061798459386640, 0.9061798459386640};
    static constexpr double w[5] = {0.5688888888888889, 0.4786286704993665,
                                    0.4786286704993665, 0.2369268850561891,
                                    0.2369268850561891};
    constexpr int panels = 64;
    double total = 0.0;
    for (const auto& seg : segments) {
      for (int p = 0; p < panels; ++p) {
        const double a = static_cast<double>(p) / panels;
        const double b = static_cast<double>(p + 1) / panels;
        for (int q = 0; q < 5; ++q) {
          const double s = 0.5 * (a + b) + 0.5 * (b - a) * x[q];
          total += 0.5 * (b - a) * w[q] * std::imag(std::conj(seg.at(s)) * seg.velocity(s));
        }
      }
    }
    return total;
  }
};

/// Time-parametrized roots of the jump operator for one gate.
struct ParameterPath {
  int d = 0;
  double total_T = 1.0;
  std::vector<RootTrack> roots;

  std::vector<cplx> roots_at(double t) const {
    const double u = total_T > 0.0 ? std::clamp(t / total_T, 0.0, 1.0) : 0.0;
    std::vector<cplx> out;
    out.reserve(roots.size());
    for (const auto& r : roots) out.push_back(r.at(u));
    return out;
  }

  std::vector<cplx> start() const { return roots_at(0.0); }
  std::vector<cplx> end() const { return roots_at(total_T); }

  bool closed(double tol = 1e-12) const {
    for (const auto& r : roots)
      if (std::abs(r.end() - r.start()) > tol) return false;
    return true;
  }

  bool continuous(double tol = 1e-12) const {
    for (const auto& r : roots)
      if (r.max_discontinuity() > tol) return false;
    return true;
  }

  /// Largest |alpha_nu(t)| over a dense sampling of the path.
  double max_modulus(int samples = 512) const {
    double m = 0.0;
    for (int k = 0; k <= samples; ++k) {
      for (const auto& r : roots) m = std::max(m, std::abs(r.at(static_cast<double>(k) / samples)));
    }
    return m;
  }

  /// Path with every root held fixed for time T.
  static ParameterPath constant(const std::vector<cplx>& roots, double T) {
    ParameterPath p;
    p.d = static_cast<int>(roots.size());
    p.total_T = T;
    for (const auto& r : roots) p.roots.push_back(RootTrack{{Segment::hold(r, 1.0)}});
    return p;
  }

  void validate() const {
    if (d < 1 || static_cast<int>(roots.size()) != d) throw InvalidSpec("path root count != d");
    if (!(total_T >= 0.0)) throw InvalidSpec("path duration must be nonnegative");
    for (const auto& r : roots) {
      if (r.segments.empty()) throw InvalidSpec("root track without segments");
      if (std::abs(r.total_duration() - 1.0) > 1e-9)
        throw InvalidSpec("segment durations must sum to 1");
    }
    if (!continuous(1e-9)) throw InvalidSpec("root trajectory is discontinuous");
  }
};

}  // namespace holocat
