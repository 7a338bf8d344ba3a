#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hp::quad {

/// Composite Simpson on uniformly spaced samples. Odd interval counts close
/// with the 3/8 rule on the last three intervals; two samples fall back to the
/// trapezoid.
template <class T>
T simpson(std::span<const T> y, double h) {
  const std::size_t n = y.size();
  if (n < 2) {
    return T{} * 0.0;
  }
  if (n == 2) {
    return (y[0] + y[1]) * (0.5 * h);
  }
  const std::size_t intervals = n - 1;
  std::size_t simpson_end = intervals;  // last node covered by the 1-4-1 sweep
  T tail = y[0] * 0.0;
  if (intervals % 2 == 1) {
    if (intervals == 1) {
      return (y[0] + y[1]) * (0.5 * h);
    }
    simpson_end = intervals - 3;
    tail = (y[simpson_end] + y[simpson_end + 1] * 3.0 + y[simpson_end + 2] * 3.0 +
            y[simpson_end + 3]) *
           (3.0 * h / 8.0);
  }
  T acc = y[0] * 0.0;
  if (simpson_end > 0) {
    acc = y[0] + y[simpson_end];
    for (std::size_t i = 1; i < simpson_end; ++i) {
      acc = acc + y[i] * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    acc = acc * (h / 3.0);
  }
  return acc + tail;
}

template <class T>
T simpson(const std::vector<T>& y, double h) {
  return simpson(std::span<const T>(y), h);
}

/// Running integral F_i = int_{x_0}^{x_i} y, fourth-order accurate for
/// smooth y: Simpson over node pairs, with the four-point half-panel rule
/// h(9y0 + 19y1 - 5y2 + y3)/24 on odd nodes so that even and odd nodes carry
/// errors of the same order.
template <class T>
std::vector<T> cumulative(std::span<const T> y, double h) {
  const std::size_t n = y.size();
  std::vector<T> out(n, n ? y[0] * 0.0 : T{});
  if (n < 2) {
    return out;
  }
  if (n == 2) {
    out[1] = (y[0] + y[1]) * (0.5 * h);
    return out;
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (i % 2 == 0) {
      out[i] = out[i - 2] + (y[i - 2] + y[i - 1] * 4.0 + y[i]) * (h / 3.0);
    } else if (n < 4) {
      out[i] = out[i - 1] + (y[i - 1] * 5.0 + y[i] * 8.0 - y[i + 1]) * (h / 12.0);
    } else if (i + 2 < n) {
      out[i] = out[i - 1] + (y[i - 1] * 9.0 + y[i] * 19.0 - y[i + 1] * 5.0 + y[i + 2]) * (h / 24.0);
    } else {
      out[i] = out[i - 1] + (y[i] * 9.0 + y[i - 1] * 19.0 - y[i - 2] * 5.0 + y[i - 3]) * (h / 24.0);
    }
  }
  return out;
}

template <class T>
std::vector<T> cumulative(const std::vector<T>& y, double h) {
  return cumulative(std::span<const T>(y), h);
}

}  // namespace hp::quad
