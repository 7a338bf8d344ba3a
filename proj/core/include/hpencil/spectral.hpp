#pragma once

#include <cstddef>
#include <vector>

#include "hpencil/scattering1d.hpp"

namespace hp {

inline constexpr double kLogFloor = -700.0;

/// min(ln x, 0), with ln 0 replaced by the floor.
double log_minus(double x, double floor = kLogFloor);

struct SpectralSample {
  double lambda = 0.0;
  double t = 0.0;
  double density = 0.0;
  double log_minus = 0.0;
  bool excluded = false;  ///< resonance node, left out of the quadratures
};

/// sigma'(k^2, t) = (k/pi) |J^{-1}(0,k,t) Fhat(k,t)|^2. Throws ResonanceError
/// when J(0,k,t) is numerically singular.
SpectralSample density(const PotentialGrid& q, const SourceVector& f, const Wavenumber& k, double t,
                       const OdeOptions& opt = {});

/// sigma'(k^2, k xi) = (k/pi) |D^{-1}(0,k,xi) Fhat(k,k xi)|^2 (t = k xi is recorded).
SpectralSample density_via_pencil(const PotentialGrid& q, const SourceVector& f,
                                  const Wavenumber& k, double xi, const OdeOptions& opt = {});

/// [c,d] x [-T,T] in the (lambda, t) plane.
struct Rectangle {
  double c = 1.0;
  double d = 4.0;
  double T = 1.0;
};

enum class ScanMode {
  FixedT,        ///< sigma'(lambda, t) on a grid uniform in k and t
  PencilSlanted  ///< sigma'(k^2, k xi) on a grid uniform in k and xi
};

struct ScanOptions {
  int n_lambda = 64;  ///< intervals in k (even, >= 16)
  int n_t = 64;       ///< intervals in t or xi (even, >= 16)
  ScanMode mode = ScanMode::FixedT;
  int threads = 1;
  double floor = kLogFloor;
  OdeOptions ode;
};

struct EntropyReport {
  Rectangle rect;
  int n_lambda = 0;
  int n_t = 0;
  ScanMode mode = ScanMode::FixedT;
  std::vector<double> k_nodes;
  std::vector<double> t_nodes;          ///< t (FixedT) or xi (PencilSlanted)
  std::vector<SpectralSample> samples;  ///< row-major: index = it * k_nodes.size() + ik
  double entropy = 0.0;
  double variation_bound = 0.0;
  std::size_t excluded = 0;

  const SpectralSample& at(std::size_t ik, std::size_t it) const {
    return samples[it * k_nodes.size() + ik];
  }
};

/// Grid evaluation over the rectangle. FixedT: entropy = int int ln^- sigma'
/// dlambda dt with dlambda = 2k dk; PencilSlanted: the same integrand over the
/// image of (k, xi) -> (k^2, k xi), with Jacobian 2k^2. Simpson in both
/// directions, summed serially in a fixed order so the result does not depend
/// on the thread count. Resonance nodes are excluded and counted; more than
/// 1% of them aborts with ResonanceError.
EntropyReport entropy_scan(const PotentialGrid& q, const SourceVector& f, const Rectangle& rect,
                           const ScanOptions& opt);

/// Entropy of an existing scan re-evaluated with a different ln^- floor.
double entropy_with_floor(const EntropyReport& report, double floor);

/// g(k) = ln |D^{-1}(0,k,xi) Fhat(k, k xi)| for Im k > 0.
double subharmonic_g(const PotentialGrid& q, const SourceVector& f, double xi, cplx k,
                     const OdeOptions& opt = {});

struct SubharmonicResult {
  double lhs = 0.0;  ///< circle average of g
  double rhs = 0.0;  ///< g at the center
  bool ok = false;   ///< lhs >= rhs - 1e-4
  cplx center;       ///< center actually used
  double radius = 0.0;
  int points = 0;
};

/// Disc mean-value check of g on |k - k0| = radius with M equispaced points.
/// A disc reaching below Im k = 1e-4 is shifted up. A failed evaluation
/// shrinks the radius by 10% once before giving up.
SubharmonicResult subharmonic_check(const PotentialGrid& q, const SourceVector& f, double xi,
                                    cplx center, double radius, int points = 256,
                                    const OdeOptions& opt = {});

}  // namespace hp
