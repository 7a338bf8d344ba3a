#include "hpencil/potential.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <random>
#include <sstream>
#include <string>

#include "hpencil/errors.hpp"
#include "hpencil/quadrature.hpp"

namespace hp {

namespace {

constexpr double kHermitianTol = 1e-12;

std::size_t node_count(double extent, double step) {
  const double n = extent / step;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
    throw ParameterError("grid extent " + std::to_string(extent) +
                         " is not a multiple of the step " + std::to_string(step));
  }
  return static_cast<std::size_t>(rounded) + 1;
}

Matrix random_hermitian(int dim, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(dim, dim);
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < dim; ++i) {
    m(i, i) = u(gen);
    for (int j = i + 1; j < dim; ++j) {
      const double re = u(gen) * s;
      const double im = u(gen) * s;
      m(i, j) = cplx(re, im);
      m(j, i) = cplx(re, -im);
    }
  }
  return m;
}

}  // namespace

PotentialGrid::PotentialGrid(int dim, double step, std::vector<Matrix> samples,
                             double support_radius)
    : dim_(dim), step_(step), support_(support_radius), samples_(std::move(samples)) {
  if (dim <= 0) {
    throw ParameterError("potential dimension must be positive");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ParameterError("grid step must be positive");
  }
  if (samples_.size() < 2) {
    throw ParameterError("potential grid needs at least two nodes");
  }
  if (!(support_radius > 0.0) || support_radius > extent() * (1 + 1e-12)) {
    throw ParameterError("support radius must lie in (0, r_max]");
  }
  const auto idx = node_index(support_radius);
  if (!idx) {
    throw ParameterError("support radius " + std::to_string(support_radius) +
                         " is not a grid node");
  }
  support_index_ = *idx;
  support_ = node(support_index_);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Matrix& s = samples_[i];
    if (s.rows() != dim || s.cols() != dim) {
      throw InputError("sample has wrong shape", i);
    }
    if (!s.allFinite()) {
      throw InputError("non-finite potential sample", i);
    }
    if (hermitian_defect(s) > kHermitianTol) {
      throw InputError("non-Hermitian potential sample", i);
    }
    if (i > support_index_ && s.cwiseAbs().maxCoeff() != 0.0) {
      throw InputError("potential sample beyond the support radius is nonzero", i);
    }
  }
}

std::optional<std::size_t> PotentialGrid::node_index(double r) const {
  const double x = r / step_;
  const double rounded = std::round(x);
  if (rounded < 0 || std::abs(x - rounded) > 1e-9 ||
      rounded > static_cast<double>(samples_.size() - 1)) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(rounded);
}

void PotentialGrid::at(double r, Matrix& out) const {
  out.resize(dim_, dim_);
  if (r < 0.0 || r > support_ * (1.0 + 1e-14)) {
    out.setZero();
    return;
  }
  const double x = r / step_;
  auto i = static_cast<std::size_t>(std::floor(x));
  if (i >= support_index_) {
    out = samples_[support_index_];
    return;
  }
  const double w = x - static_cast<double>(i);
  out = (1.0 - w) * samples_[i] + w * samples_[i + 1];
}

Matrix PotentialGrid::at(double r) const {
  Matrix out;
  at(r, out);
  return out;
}

PotentialGrid build_potential(const PotentialSpec& spec) {
  using namespace potential_spec;
  if (!(spec.support_radius > 0.0)) {
    throw ParameterError("support radius must be positive");
  }
  const double step = spec.step == 0.0 ? 1e-3 * spec.support_radius : spec.step;
  if (!(step > 0.0)) {
    throw ParameterError("grid step must be positive");
  }
  const double extent = spec.extent == 0.0 ? spec.support_radius : spec.extent;
  if (extent < spec.support_radius) {
    throw ParameterError("grid extent must be at least the support radius");
  }
  const std::size_t n_nodes = node_count(extent, step);
  const std::size_t n_support = node_count(spec.support_radius, step);
  const int dim = spec.dim;
  if (dim <= 0) {
    throw ParameterError("potential dimension must be positive");
  }

  std::vector<Matrix> samples(n_nodes, Matrix::Zero(dim, dim));
  auto r_of = [step](std::size_t i) { return step * static_cast<double>(i); };

  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Zero>) {
        } else if constexpr (std::is_same_v<K, Constant>) {
          if (k.block.rows() != dim || k.block.cols() != dim) {
            throw ParameterError("constant block has wrong shape");
          }
          for (std::size_t i = 0; i < n_support; ++i) samples[i] = k.block;
        } else if constexpr (std::is_same_v<K, ClosedForm>) {
          for (std::size_t i = 0; i < n_support; ++i) {
            samples[i] = k.entries(r_of(i));
            if (samples[i].rows() != dim || samples[i].cols() != dim) {
              throw InputError("closed-form sample has wrong shape", i);
            }
          }
        } else if constexpr (std::is_same_v<K, RandomHermitian>) {
          if (k.cell < 0.0 || !std::isfinite(k.cell)) {
            throw ParameterError("random potential cell length must be >= 0");
          }
          std::mt19937_64 gen(k.seed);
          Matrix draw;
          long long drawn_cell = -1;
          for (std::size_t i = 0; i < n_support; ++i) {
            const double env = k.amplitude * std::pow(1.0 + r_of(i), -k.decay_exponent);
            if (k.cell > 0.0) {
              const auto c = static_cast<long long>(std::floor(r_of(i) / k.cell + 1e-9));
              while (drawn_cell < c) {
                draw = random_hermitian(dim, gen);
                ++drawn_cell;
              }
            } else {
              draw = random_hermitian(dim, gen);
            }
            samples[i] = env * draw;
          }
        } else if constexpr (std::is_same_v<K, Tabulated>) {
          if (k.samples.size() > n_nodes) {
            throw ParameterError("tabulated data extends beyond the grid");
          }
          for (std::size_t i = 0; i < k.samples.size(); ++i) {
            samples[i] = k.samples[i];
          }
          for (std::size_t i = n_support; i < k.samples.size(); ++i) {
            if (k.samples[i].cwiseAbs().maxCoeff() != 0.0) {
              throw InputError("tabulated sample beyond the support radius is nonzero", i);
            }
          }
        }
      },
      spec.kind);

  return PotentialGrid(dim, step, std::move(samples), spec.support_radius);
}

PotentialGrid truncate(const PotentialGrid& q, int n, double R) {
  if (n <= 0 || n > q.dim()) {
    throw ParameterError("truncation size n = " + std::to_string(n) +
                         " outside [1, " + std::to_string(q.dim()) + "]");
  }
  if (!(R > 0.0) || R > q.support_radius() * (1.0 + 1e-12)) {
    throw ParameterError("truncation radius must lie in (0, support_radius]");
  }
  const auto idx = q.node_index(R);
  if (!idx) {
    throw ParameterError("truncation radius is not a grid node");
  }
  std::vector<Matrix> samples(q.size(), Matrix::Zero(n, n));
  for (std::size_t i = 0; i <= *idx; ++i) {
    samples[i] = q.sample(i).topLeftCorner(n, n);
  }
  return PotentialGrid(n, q.step(), std::move(samples), q.node(*idx));
}

PotentialNorms norms(const PotentialGrid& q) {
  const std::size_t n = q.support_index() + 1;
  std::vector<double> sq(n), rsq(n);
  PotentialNorms out;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = op_norm(q.sample(i));
    out.linf = std::max(out.linf, v);
    sq[i] = v * v;
    rsq[i] = q.node(i) * v * v;
  }
  out.l2 = std::max(0.0, quad::simpson(sq, q.step()));
  out.radial_sup_l2_weighted = std::max(0.0, quad::simpson(rsq, q.step()));
  return out;
}

PotentialSpec read_tabulated_csv(std::istream& in, std::optional<double> support_radius) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    bool numeric = true;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw InputError("non-numeric CSV row", line_no);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.size() < 2) {
    throw InputError("tabulated potential needs at least two rows");
  }
  const std::size_t cols = rows.front().size();
  if (cols < 3 || (cols - 1) % 2 != 0) {
    throw InputError("tabulated potential needs r plus (Re, Im) pairs");
  }
  const std::size_t entries = (cols - 1) / 2;
  const int dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(entries))));
  if (static_cast<std::size_t>(dim * dim) != entries) {
    throw InputError("tabulated column count is not 1 + 2 n^2");
  }
  const double step = rows[1][0] - rows[0][0];
  if (std::abs(rows[0][0]) > 1e-12 || !(step > 0.0)) {
    throw InputError("tabulated grid must start at r = 0 with positive spacing");
  }
  potential_spec::Tabulated tab;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != cols) {
      throw InputError("ragged CSV row", i);
    }
    if (std::abs(row[0] - step * static_cast<double>(i)) > 1e-9 * std::max(1.0, row[0])) {
      throw InputError("tabulated grid is not uniform", i);
    }
    Matrix m(dim, dim);
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) {
        const std::size_t c = 1 + 2 * static_cast<std::size_t>(a * dim + b);
        m(a, b) = cplx(row[c], row[c + 1]);
      }
    }
    if (hermitian_defect(m) > kHermitianTol) {
      throw InputError("non-Hermitian tabulated sample", i);
    }
    tab.samples.push_back(std::move(m));
  }
  PotentialSpec spec;
  spec.dim = dim;
  spec.step = step;
  spec.extent = step * static_cast<double>(rows.size() - 1);
  spec.support_radius = support_radius.value_or(spec.extent);
  spec.kind = std::move(tab);
  return spec;
}

}  // namespace hp
