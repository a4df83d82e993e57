#include "fueter/section.hpp"

#include <ostream>

#include "fueter/errors.hpp"

namespace fueter {

MatrixXd SectionSample::derivative_at(int i) const {
  const int d = static_cast<int>(values.rows());
  return Eigen::Map<const MatrixXd>(derivative.col(i).data(), d, grid->frame_dim());
}

PointJet SectionSample::jet(const VectorXd& p, double step) const {
  PointJet j;
  j.value = map.value(p);
  if (options.mode == DerivativeMode::exact) {
    if (!map.derivative) throw InputError("exact derivative mode needs a derivative callback");
    j.derivative = map.derivative(p);
    return j;
  }
  const int fd = grid->frame_dim();
  j.derivative.resize(j.value.size(), fd);
  for (int a = 0; a < fd; ++a)
    j.derivative.col(a) =
        target->difference(map.value(grid->flow(p, a, step)), map.value(grid->flow(p, a, -step))) / (2 * step);
  return j;
}

double SectionSample::density(const VectorXd& p, double step) const {
  const PointJet j = jet(p, step);
  if (j.derivative.isZero(0)) return 0.0;  // no metric needed, e.g. a constant map at a chart singularity
  return jet_energy(target->structure_at(j.value), j.derivative);
}

double jet_energy(const HKStructured& h, const MatrixXd& d) { return (d.transpose() * h.metric * d).trace(); }

SectionSample sample_section(std::shared_ptr<const DomainGrid> grid, std::shared_ptr<const TargetChart> target,
                             SourceMap map, SampleOptions options) {
  if (!grid || !target) throw InputError("sample_section needs a grid and a target");
  if (!map.value) throw InputError("sample_section needs a value callback");
  if (options.mode == DerivativeMode::exact && !map.derivative)
    throw InputError("exact derivative mode needs a derivative callback");
  if (!(options.fd_factor > 0)) throw InputError("fd_factor must be positive");
  SectionSample u;
  u.grid = std::move(grid);
  u.target = std::move(target);
  u.map = std::move(map);
  u.options = options;
  const int n = u.grid->size(), d = u.target->dim, fd = u.grid->frame_dim();
  u.values.resize(d, n);
  u.derivative.resize(d * fd, n);
  u.energy_density.resize(n);
  for (int i = 0; i < n; ++i) {
    const PointJet j = u.jet(u.grid->points.col(i), options.fd_factor * u.grid->spacing(i));
    if (j.value.size() != d) throw InputError("map value has the wrong dimension for the target");
    u.values.col(i) = j.value;
    u.derivative.col(i) = Eigen::Map<const VectorXd>(j.derivative.data(), d * fd);
    u.energy_density(i) = j.derivative.isZero(0) ? 0.0 : jet_energy(u.target->structure_at(j.value), j.derivative);
  }
  return u;
}

SourceMap affine_map(const VectorXd& y0, const MatrixXd& a, const DomainGrid& grid) {
  if (a.cols() != grid.ambient_dim()) throw InputError("affine map has the wrong source dimension");
  SourceMap m;
  m.value = [y0, a](const VectorXd& p) -> VectorXd { return y0 + a * p; };
  if (grid.kind == GridKind::sphere3) {
    m.derivative = [a](const VectorXd& p) -> MatrixXd { return a * frame_of(GridKind::sphere3, p); };
  } else {
    const int fd = grid.frame_dim();
    m.derivative = [a, fd](const VectorXd&) -> MatrixXd { return a.leftCols(fd); };
  }
  return m;
}

SourceMap constant_map(const VectorXd& y0, int frame_dim) {
  SourceMap m;
  m.value = [y0](const VectorXd&) -> VectorXd { return y0; };
  m.derivative = [y0, frame_dim](const VectorXd&) -> MatrixXd { return MatrixXd::Zero(y0.size(), frame_dim); };
  return m;
}

void write_field_csv(const SectionSample& u, const VectorXd* residual_norm, std::ostream& os) {
  const int dim = u.grid->ambient_dim();
  os << "id";
  for (int k = 0; k < dim; ++k) os << ",x" << k;
  os << ",density";
  if (residual_norm) os << ",residual_norm";
  os << "\n";
  os.precision(17);
  for (int i = 0; i < u.size(); ++i) {
    os << i;
    for (int k = 0; k < dim; ++k) os << ',' << u.grid->points(k, i);
    os << ',' << u.energy_density(i);
    if (residual_norm) os << ',' << (*residual_norm)(i);
    os << "\n";
  }
}

}  // namespace fueter
