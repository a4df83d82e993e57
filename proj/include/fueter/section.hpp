#pragma once

#include <functional>
#include <iosfwd>
#include <memory>

#include <Eigen/Dense>

#include "fueter/domains.hpp"
#include "fueter/targets.hpp"

namespace fueter {

/// A map from a source domain into a target chart, given as callables on ambient source points.
/// `derivative` (optional) returns du(v_a(p)) as columns, target_dim x frame_dim.
struct SourceMap {
  std::function<VectorXd(const VectorXd&)> value;
  std::function<MatrixXd(const VectorXd&)> derivative;
};

enum class DerivativeMode { exact, finite_difference };

struct SampleOptions {
  DerivativeMode mode = DerivativeMode::finite_difference;
  double fd_factor = 1.0;  // centered-difference step = fd_factor * local spacing
};

/// Value and frame derivative of a map at one point.
struct PointJet {
  VectorXd value;
  MatrixXd derivative;
};

/// Grid-sampled map with stored values, frame derivatives and energy density |du|^2.
struct SectionSample {
  std::shared_ptr<const DomainGrid> grid;
  std::shared_ptr<const TargetChart> target;
  SourceMap map;
  SampleOptions options;

  MatrixXd values;       // target_dim x N
  MatrixXd derivative;   // (target_dim * frame_dim) x N, column-major blocks of du(v_a)
  VectorXd energy_density;

  int size() const { return static_cast<int>(values.cols()); }
  MatrixXd derivative_at(int i) const;
  /// Jet at an arbitrary source point, with the sample's derivative mode and step `step`.
  PointJet jet(const VectorXd& p, double step) const;
  /// |du|^2 at an arbitrary source point.
  double density(const VectorXd& p, double step) const;
};

SectionSample sample_section(std::shared_ptr<const DomainGrid> grid, std::shared_ptr<const TargetChart> target,
                             SourceMap map, SampleOptions options = {});

/// Squared target-metric norm sum_a |D(:, a)|_G^2.
double jet_energy(const HKStructured& h, const MatrixXd& d);

/// Maps that are affine in ambient coordinates: y = y0 + A p, with exact derivative.
SourceMap affine_map(const VectorXd& y0, const MatrixXd& a, const DomainGrid& grid);

SourceMap constant_map(const VectorXd& y0, int frame_dim);

/// Fields as CSV: point id, coordinates, density, residual norm (when given).
void write_field_csv(const SectionSample& u, const VectorXd* residual_norm, std::ostream& os);

}  // namespace fueter
