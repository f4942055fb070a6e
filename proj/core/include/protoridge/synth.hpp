#pragma once

#include <cstdint>

#include "protoridge/dataset.hpp"
#include "protoridge/types.hpp"

namespace protoridge {

/// Generated splits plus the geometry they were drawn from.
struct SyntheticSplits {
  SplitBatches splits;
  RowMatrix centers;  // one row per mixture component (per class, or per XOR cluster)
};

/// Per-class split sizes: validation = test = max(1, n/5), train = the rest. Needs n >= 3.
struct SplitSizes {
  std::uint32_t train, validation, test;
};
SplitSizes split_sizes(std::uint32_t per_class);

/// Random H x k matrix with orthonormal columns (Householder QR of a Gaussian matrix).
Matrix random_orthonormal(std::uint32_t dim, std::uint32_t k, std::uint64_t seed);

/// Class y ~ N(separation * u_y, I) with orthonormal random directions u_y. Needs C >= 2,
/// H >= 2 and H >= C.
SyntheticSplits gen_gaussian_mixture(std::uint32_t classes, std::uint32_t dim, std::uint32_t per_class,
                                     double separation, std::uint64_t seed);

/// Two-class XOR layout in a random 2-D subspace: class 0 around +-separation*(a+b)/sqrt(2),
/// class 1 around +-separation*(a-b)/sqrt(2) for orthonormal a, b; unit isotropic noise in all
/// H dims. Each class alternates between its two clusters. Needs H >= 2.
SyntheticSplits gen_xor_mixture(std::uint32_t dim, std::uint32_t per_class, std::uint64_t seed,
                                double separation = 4.0);

/// CIL protocol over a Gaussian mixture: classes are dealt to `tasks` tasks in contiguous blocks.
ProtocolData gen_gaussian_cil(std::uint32_t classes, std::uint32_t tasks, std::uint32_t dim, std::uint32_t per_class,
                              double separation, std::uint64_t seed);

/// DIL protocol: the same C class directions in every domain, plus a per-domain offset of norm
/// `shift` along a random unit direction.
ProtocolData gen_domain_shifted(std::uint32_t classes, std::uint32_t dim, std::uint32_t domains, double shift,
                                std::uint32_t per_class, double separation, std::uint64_t seed);

/// DIL protocol whose tasks are independent draws of one XOR layout (no domain shift).
ProtocolData gen_xor_protocol(std::uint32_t dim, std::uint32_t per_class, std::uint32_t tasks, std::uint64_t seed,
                              double separation = 4.0);

}  // namespace protoridge
