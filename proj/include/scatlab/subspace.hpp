#ifndef SCATLAB_SUBSPACE_HPP
#define SCATLAB_SUBSPACE_HPP

#include <optional>

#include "scatlab/common.hpp"
#include "scatlab/forward.hpp"

namespace scatlab {

/// How many leading singular values form the signal subspace.
struct CutoffRule {
  double ratio = 1e-3;             // keep sigma_l / sigma_1 >= ratio
  std::optional<int> fixed_rank;   // overrides ratio when set
};

/// Thin SVD G = U diag(sigma) V^* of one receiver operator.
struct FrequencySubspace {
  CMat U;        // Q x r
  RVec sigma;    // r, descending
  CMat V;        // N x r
  int rank = 0;  // L+, number of retained singular values
};

/// One decomposition per frequency when every transmitter records the same
/// receivers, otherwise one per (k, p) over the recorded rows.
struct SubspaceDecomposition {
  std::vector<FrequencySubspace> blocks;
  KPArray<int> block_of;

  const FrequencySubspace& at(int k, int p) const { return blocks[std::size_t(block_of(k, p))]; }
};

FrequencySubspace decompose(const CMat& op, const CutoffRule& rule = {});
SubspaceDecomposition decompose(const GreensOperators& greens, const CutoffRule& rule = {},
                                Execution exec = Execution::parallel);

struct DominantCurrent {
  KPArray<CVec> coefficients;  // w+ (length L+)
  KPArray<CVec> current;       // W+ = V+ w+ (length N)
};

/// W+ for one data vector; w+_i = (u_i^* E_s) / sigma_i for i < L+.
CVec dominant_current(const FrequencySubspace& s, const CVec& data, CVec* coefficients = nullptr);
DominantCurrent dominant_current(const SubspaceDecomposition& d, const KPArray<CVec>& data);

}  // namespace scatlab

#endif  // SCATLAB_SUBSPACE_HPP
