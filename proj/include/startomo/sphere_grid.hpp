#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "startomo/geom.hpp"

namespace startomo {

/// Gauss-Legendre nodes and weights on [-1, 1], ascending, symmetric by
/// construction (x[N-1-k] == -x[k] bit for bit).
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendreRule gauss_legendre_rule(int count);

/// Shared storage behind SphereGrid.
struct SphereGridData {
  int dim = 0;
  int nlat = 0;
  int nlon = 0;
  std::uint64_t seed = 0;
  std::uint64_t id = 0;
  std::vector<Vec> nodes;
  std::vector<double> weights;
  std::vector<double> colatitudes;
  std::vector<std::pair<std::uint64_t, std::size_t>> index;  // sorted by hash
};

/// Quadrature nodes and weights on S^{n-1}. Cheap to copy; copies share the
/// node storage and compare equal by id().
///
/// Two families:
///  - lat-lon (n = 3): Gauss-Legendre in z times a uniform longitude rule.
///    Rows run from the north pole southwards; node (row, col) has index
///    row * nlon + col and its antipode is exactly (nlat-1-row, col+nlon/2).
///  - Monte Carlo (any n >= 2): equal weights n omega_n / N on seeded uniform
///    directions.
class SphereGrid {
 public:
  static SphereGrid lat_lon(int nlat, int nlon);
  static SphereGrid monte_carlo(int n, int count, std::uint64_t seed);

  int dim() const { return data_->dim; }
  std::size_t size() const { return data_->nodes.size(); }
  const Vec& node(std::size_t k) const { return data_->nodes[k]; }
  double weight(std::size_t k) const { return data_->weights[k]; }
  std::span<const Vec> nodes() const { return data_->nodes; }
  std::span<const double> weights() const { return data_->weights; }

  bool is_lat_lon() const { return data_->nlat > 0; }
  int nlat() const { return data_->nlat; }
  int nlon() const { return data_->nlon; }
  /// Row colatitudes, ascending in (0, pi). Only for lat-lon grids.
  std::span<const double> colatitudes() const { return data_->colatitudes; }
  std::uint64_t seed() const { return data_->seed; }

  /// Index of the node with exactly these coordinates, if any.
  std::optional<std::size_t> find_node(const Vec& u) const;
  /// Index of the antipodal node (lat-lon grids only).
  std::size_t antipode(std::size_t k) const;

  /// Sum of weight(k) * values[k].
  double integrate(std::span<const double> values) const;

  std::uint64_t id() const { return data_->id; }
  bool operator==(const SphereGrid& other) const { return id() == other.id(); }

 private:
  using Data = SphereGridData;
  explicit SphereGrid(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

}  // namespace startomo
