#include "protoridge/synth.hpp"

#include <cmath>

#include <Eigen/QR>
#include <fmt/format.h>

#include "protoridge/rng.hpp"

namespace protoridge {

namespace {

/// Draws `per_class` samples around each center row; `component_of(y, i)` picks the center
/// for the i-th sample of class y. Samples are assigned train/validation/test in draw order.
template <typename ComponentFn>
SplitBatches draw_splits(const RowMatrix& centers, std::uint32_t classes, std::uint32_t per_class, Rng& rng,
                         ComponentFn component_of, const Vector* offset = nullptr) {
  const auto dim = static_cast<std::uint32_t>(centers.cols());
  const SplitSizes sizes = split_sizes(per_class);
  SplitBatches out{EmbeddingBatch{dim, RowMatrix(sizes.train * classes, dim), {}},
                   EmbeddingBatch{dim, RowMatrix(sizes.validation * classes, dim), {}},
                   EmbeddingBatch{dim, RowMatrix(sizes.test * classes, dim), {}}};
  long rows[3] = {0, 0, 0};
  for (std::uint32_t y = 0; y < classes; ++y) {
    for (std::uint32_t i = 0; i < per_class; ++i) {
      const int which = i < sizes.train ? 0 : (i < sizes.train + sizes.validation ? 1 : 2);
      EmbeddingBatch& b = which == 0 ? out.train : (which == 1 ? out.validation : out.test);
      auto row = b.vectors.row(rows[which]++);
      row = centers.row(component_of(y, i));
      if (offset) row += offset->transpose();
      for (std::uint32_t c = 0; c < dim; ++c) row(c) += rng.normal();
      b.labels.push_back(y);
    }
  }
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvariantError(msg);
}

/// Class y alternates between clusters 2y and 2y+1.
long xor_component(std::uint32_t y, std::uint32_t i) { return static_cast<long>(2 * y + (i % 2)); }

}  // namespace

SplitSizes split_sizes(std::uint32_t per_class) {
  require(per_class >= 3, fmt::format("synth: per_class must be >= 3 (got {})", per_class));
  const std::uint32_t held = std::max<std::uint32_t>(1, per_class / 5);
  return SplitSizes{per_class - 2 * held, held, held};
}

Matrix random_orthonormal(std::uint32_t dim, std::uint32_t k, std::uint64_t seed) {
  require(k <= dim, fmt::format("synth: cannot draw {} orthonormal directions in {} dims", k, dim));
  Rng rng(seed);
  Matrix g(dim, k);
  for (long i = 0; i < g.rows(); ++i) {
    for (long j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, k);
  // Fix column signs so the basis is a deterministic function of g.
  const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (std::uint32_t j = 0; j < k; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

namespace {

RowMatrix xor_centers(std::uint32_t dim, std::uint64_t seed, double separation) {
  require(dim >= 2, "synth xor: need dim >= 2");
  const Matrix basis = random_orthonormal(dim, 2, derive_seed(seed, "xor-plane"));
  const Vector a = basis.col(0);
  const Vector b = basis.col(1);
  const double s = separation / std::sqrt(2.0);
  RowMatrix centers(4, dim);
  centers.row(0) = (s * (a + b)).transpose();   // class 0
  centers.row(1) = (-s * (a + b)).transpose();  // class 0
  centers.row(2) = (s * (a - b)).transpose();   // class 1
  centers.row(3) = (-s * (a - b)).transpose();  // class 1
  return centers;
}

}  // namespace

SyntheticSplits gen_gaussian_mixture(std::uint32_t classes, std::uint32_t dim, std::uint32_t per_class,
                                     double separation, std::uint64_t seed) {
  require(classes >= 2, "synth gaussian: need at least 2 classes");
  require(dim >= 2, "synth gaussian: need dim >= 2");
  require(dim >= classes, fmt::format("synth gaussian: orthonormal centers need H >= C (H={}, C={})", dim, classes));
  const Matrix u = random_orthonormal(dim, classes, derive_seed(seed, "centers"));
  RowMatrix centers = separation * u.transpose();
  Rng rng(derive_seed(seed, "noise"));
  auto splits = draw_splits(centers, classes, per_class, rng, [](std::uint32_t y, std::uint32_t) { return y; });
  return SyntheticSplits{std::move(splits), std::move(centers)};
}

SyntheticSplits gen_xor_mixture(std::uint32_t dim, std::uint32_t per_class, std::uint64_t seed, double separation) {
  RowMatrix centers = xor_centers(dim, seed, separation);
  Rng rng(derive_seed(seed, "noise"));
  auto splits = draw_splits(centers, 2, per_class, rng, xor_component);
  return SyntheticSplits{std::move(splits), std::move(centers)};
}

ProtocolData gen_gaussian_cil(std::uint32_t classes, std::uint32_t tasks, std::uint32_t dim, std::uint32_t per_class,
                              double separation, std::uint64_t seed) {
  require(tasks >= 1 && tasks <= classes, fmt::format("synth cil: cannot deal {} classes into {} tasks", classes, tasks));
  const auto mix = gen_gaussian_mixture(classes, dim, per_class, separation, seed);

  ProtocolData data;
  data.manifest.protocol = Protocol::kClassIncremental;
  data.manifest.total_classes = classes;
  data.manifest.source = fmt::format("synth gaussian per_class={} separation={} seed={}", per_class, separation, seed);
  data.manifest.embedding_dim = dim;
  std::uint32_t next = 0;
  for (std::uint32_t t = 0; t < tasks; ++t) {
    const std::uint32_t take = classes / tasks + (t < classes % tasks ? 1 : 0);
    TaskSpec spec;
    spec.task_id = t + 1;
    for (std::uint32_t k = 0; k < take; ++k) spec.classes.push_back(next++);
    spec.splits.push_back(split_file_names({}, spec.task_id));
    data.tasks.push_back(TaskData{{SplitBatches{mix.splits.train.filter_classes(spec.classes),
                                                mix.splits.validation.filter_classes(spec.classes),
                                                mix.splits.test.filter_classes(spec.classes)}}});
    data.manifest.tasks.push_back(std::move(spec));
  }
  return data;
}

ProtocolData gen_domain_shifted(std::uint32_t classes, std::uint32_t dim, std::uint32_t domains, double shift,
                                std::uint32_t per_class, double separation, std::uint64_t seed) {
  require(classes >= 2 && dim >= classes, "synth domain: need C >= 2 and H >= C");
  require(domains >= 1, "synth domain: need at least one domain");
  require(shift >= 0.0, "synth domain: shift must be non-negative");
  const Matrix u = random_orthonormal(dim, classes, derive_seed(seed, "centers"));
  const RowMatrix centers = separation * u.transpose();

  ProtocolData data;
  data.manifest.protocol = Protocol::kDomainIncremental;
  data.manifest.total_classes = classes;
  data.manifest.source =
      fmt::format("synth domain shift={} per_class={} separation={} seed={}", shift, per_class, separation, seed);
  data.manifest.embedding_dim = dim;
  for (std::uint32_t d = 0; d < domains; ++d) {
    Rng dir_rng(derive_seed(seed, "domain-offset", d));
    Vector offset(dim);
    for (std::uint32_t c = 0; c < dim; ++c) offset(c) = dir_rng.normal();
    offset *= shift / offset.norm();
    Rng rng(derive_seed(seed, "noise", d));
    auto splits = draw_splits(centers, classes, per_class, rng, [](std::uint32_t y, std::uint32_t) { return y; }, &offset);

    TaskSpec spec;
    spec.task_id = d + 1;
    spec.domain = fmt::format("domain{}", d + 1);
    for (std::uint32_t c = 0; c < classes; ++c) spec.classes.push_back(c);
    spec.splits.push_back(split_file_names({}, spec.task_id));
    data.manifest.tasks.push_back(std::move(spec));
    data.tasks.push_back(TaskData{{std::move(splits)}});
  }
  return data;
}

ProtocolData gen_xor_protocol(std::uint32_t dim, std::uint32_t per_class, std::uint32_t tasks, std::uint64_t seed,
                              double separation) {
  require(tasks >= 1, "synth xor: need at least one task");
  const RowMatrix centers = xor_centers(dim, seed, separation);
  ProtocolData data;
  data.manifest.protocol = Protocol::kDomainIncremental;
  data.manifest.total_classes = 2;
  data.manifest.source = fmt::format("synth xor per_class={} separation={} seed={}", per_class, separation, seed);
  data.manifest.embedding_dim = dim;
  for (std::uint32_t t = 0; t < tasks; ++t) {
    // Same plane for every task; only the noise stream differs.
    Rng rng(derive_seed(seed, "xor-task", t));
    TaskSpec spec;
    spec.task_id = t + 1;
    spec.domain = fmt::format("xor{}", t + 1);
    spec.classes = {0, 1};
    spec.splits.push_back(split_file_names({}, spec.task_id));
    data.manifest.tasks.push_back(std::move(spec));
    data.tasks.push_back(TaskData{{draw_splits(centers, 2, per_class, rng, xor_component)}});
  }
  return data;
}

}  // namespace protoridge
