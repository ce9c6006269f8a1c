#include "scatlab/subspace.hpp"

#include <exception>

namespace scatlab {

FrequencySubspace decompose(const CMat& op, const CutoffRule& rule) {
  Eigen::BDCSVD<CMat> svd(op, Eigen::ComputeThinU | Eigen::ComputeThinV);
  FrequencySubspace s;
  s.U = svd.matrixU();
  s.sigma = svd.singularValues();
  s.V = svd.matrixV();
  const int r = int(s.sigma.size());
  if (rule.fixed_rank) {
    if (*rule.fixed_rank < 1 || *rule.fixed_rank > r)
      throw ConfigError("fixed subspace rank out of range [1, " + std::to_string(r) + "]");
    s.rank = *rule.fixed_rank;
  } else {
    const double top = r > 0 ? s.sigma[0] : 0.0;
    int l = 0;
    while (l < r && top > 0.0 && s.sigma[l] / top >= rule.ratio) ++l;
    s.rank = l;
  }
  if (s.rank == 0) throw NumericalError("receiver operator has no retained singular values");
  for (int i = 0; i < s.rank; ++i)
    if (!(s.sigma[i] > 0.0)) throw NumericalError("zero singular value inside the retained subspace");
  return s;
}

SubspaceDecomposition decompose(const GreensOperators& greens, const CutoffRule& rule, Execution exec) {
  SubspaceDecomposition d;
  const int K = greens.frequencies();
  const int P = greens.transmitters();
  const bool shared = greens.sensors.shared();
  d.block_of = KPArray<int>(K, P);
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p) d.block_of(k, p) = shared ? k : k * P + p;
  const int blocks = shared ? K : K * P;
  d.blocks.resize(std::size_t(blocks));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (int b = 0; b < blocks; ++b) {
    try {
      const int k = shared ? b : b / P;
      const CMat& g = greens.receiver[std::size_t(k)];
      if (shared) {
        d.blocks[std::size_t(b)] = decompose(g, rule);
      } else {
        const std::vector<int> rows = greens.sensors.receivers_of(b % P);
        CMat sub(Eigen::Index(rows.size()), g.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) sub.row(Eigen::Index(i)) = g.row(rows[i]);
        d.blocks[std::size_t(b)] = decompose(sub, rule);
      }
    } catch (...) {
#pragma omp critical(scatlab_decompose_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return d;
}

CVec dominant_current(const FrequencySubspace& s, const CVec& data, CVec* coefficients) {
  if (data.size() != s.U.rows()) throw DomainError("dominant_current: data length does not match receivers");
  const int l = s.rank;
  CVec w = s.U.leftCols(l).adjoint() * data;
  w.array() /= s.sigma.head(l).array().cast<cplx>();
  CVec current = s.V.leftCols(l) * w;
  if (coefficients) *coefficients = std::move(w);
  return current;
}

DominantCurrent dominant_current(const SubspaceDecomposition& d, const KPArray<CVec>& data) {
  const int K = data.frequencies();
  const int P = data.transmitters();
  if (K != d.block_of.frequencies() || P != d.block_of.transmitters())
    throw DomainError("dominant_current: (k, p) layout mismatch");
  DominantCurrent out{KPArray<CVec>(K, P), KPArray<CVec>(K, P)};
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p)
      out.current(k, p) = dominant_current(d.at(k, p), data(k, p), &out.coefficients(k, p));
  return out;
}

}  // namespace scatlab
