#include "hbn/spectrum.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hbn/errors.hpp"

namespace hbn {

namespace {

long binom(long n, long k) {
  if (k < 0 || n < k) return 0;
  long r = 1;
  for (long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct ModePairs {
  std::vector<double> mu;
  std::vector<Eigen::VectorXd> vec;
};

ModePairs solve_mode(const std::shared_ptr<const RadialGrid>& grid, int ell, int k) {
  const LaplaceOperator& op = grid->laplacian(ell);
  const auto& K = op.stiffness();
  const auto& unk = op.unknowns();
  const lapack_int m = lapack_int(unk.size());
  if (k > m) throw RangeError("more eigenpairs requested than unknowns");

  const auto& W = grid->weights();
  const auto& r = grid->radii();
  const std::size_t mm = static_cast<std::size_t>(m);
  std::vector<double> D(mm), sq(mm);
  for (lapack_int i = 0; i < m; ++i) {
    const double q = conformal_factor(r[unk[std::size_t(i)]]);
    D[std::size_t(i)] = W[unk[std::size_t(i)]] * q * q;
    sq[std::size_t(i)] = std::sqrt(D[std::size_t(i)]);
  }
  std::vector<double> d(mm), e(std::size_t(std::max<lapack_int>(m, 1)), 0.0);
  for (lapack_int i = 0; i < m; ++i) {
    d[std::size_t(i)] = K.coeff(i, i) / D[std::size_t(i)];
    if (i + 1 < m) e[std::size_t(i)] = K.coeff(i, i + 1) / (sq[std::size_t(i)] * sq[std::size_t(i + 1)]);
  }

  double tnorm = 0.0;
  for (lapack_int i = 0; i < m; ++i)
    tnorm = std::max(tnorm, std::abs(d[std::size_t(i)]) + std::abs(e[std::size_t(i)]) +
                                (i > 0 ? std::abs(e[std::size_t(i - 1)]) : 0.0));
  lapack_int found = 0;
  std::vector<double> w(mm), z(mm * static_cast<std::size_t>(k));
  std::vector<lapack_int> isuppz(2 * std::size_t(k));
  const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', m, d.data(), e.data(), 0.0, 0.0, 1, k, 0.0,
                                         &found, w.data(), z.data(), m, isuppz.data());
  if (info != 0 || found != k) {
    std::ostringstream os;
    os << "tridiagonal eigensolver failed (mode " << ell << ", info " << info << ", found " << found << ")";
    throw NumericalError(os.str());
  }

  ModePairs out;
  for (lapack_int j = 0; j < k; ++j) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(Eigen::Index(grid->size()));
    for (lapack_int i = 0; i < m; ++i)
      full[Eigen::Index(unk[std::size_t(i)])] = z[std::size_t(j) * std::size_t(m) + std::size_t(i)] / sq[std::size_t(i)];
    // backward-error check on T y = mu y with y = D^{1/2} x; graded meshes make ||T|| >> mu
    const Eigen::VectorXd Kx = op.apply(full);
    double res = 0.0, ynorm = 0.0;
    for (lapack_int i = 0; i < m; ++i) {
      const auto n = Eigen::Index(unk[std::size_t(i)]);
      const double y = sq[std::size_t(i)] * full[n];
      res += std::pow(Kx[n] / sq[std::size_t(i)] - w[std::size_t(j)] * y, 2);
      ynorm += y * y;
    }
    res = std::sqrt(res / ynorm);
    const double tol = std::max(1e-8 * std::abs(w[std::size_t(j)]), 100.0 * double(m) * DBL_EPSILON * tnorm);
    if (!(res <= tol)) {
      std::ostringstream os;
      os << "eigen-residual " << res << " exceeds " << tol << " (mode " << ell << ", k " << j + 1 << ")";
      throw NumericalError(os.str());
    }
    out.mu.push_back(w[std::size_t(j)]);
    out.vec.push_back(std::move(full));
  }
  return out;
}

}  // namespace

long harmonic_dimension(int dimension, int l) {
  return binom(l + dimension - 1, dimension - 1) - binom(l + dimension - 3, dimension - 1);
}

double SpectrumResult::complete_below() const {
  double bound = std::numeric_limits<double>::infinity();
  for (int ell = 0; ell <= l_max; ++ell) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i)
      if (modes[i] == ell) {
        top = std::max(top, lambdas[i]);
        // higher modes start above the first eigenvalue of mode l_max
        if (ell == l_max && radial_index[i] == 1) bound = std::min(bound, lambdas[i]);
      }
    bound = std::min(bound, top);
  }
  return bound;
}

SpectrumResult weighted_eigs(const std::shared_ptr<const RadialGrid>& grid, int l_max, int k_per_mode) {
  if (l_max < 0) throw ConfigError("l_max must be >= 0");
  if (k_per_mode < 1) throw ConfigError("k_per_mode must be >= 1");
  const ModelParams& p = grid->params();
  const double lam0 = p.spectral_shift();

  struct Entry {
    double mu;
    int ell;
    int k;
    Eigen::VectorXd vec;
  };
  std::vector<Entry> all;
  for (int ell = 0; ell <= l_max; ++ell) {
    ModePairs mp = solve_mode(grid, ell, k_per_mode);
    for (int j = 0; j < k_per_mode; ++j) all.push_back(Entry{mp.mu[std::size_t(j)], ell, j + 1, std::move(mp.vec[std::size_t(j)])});
  }
  std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    return a.mu != b.mu ? a.mu < b.mu : a.ell < b.ell;
  });

  SpectrumResult s;
  s.params = p;
  s.l_max = l_max;
  s.k_per_mode = k_per_mode;
  for (auto& en : all) {
    if (!(en.mu > 0.0)) throw NumericalError("non-positive weighted eigenvalue");
    Field f = Field::wrap(grid, std::move(en.vec), en.ell);
    f *= 1.0 / h1_norm(f);
    // sign convention: positive in the sense of the largest-magnitude entry
    Eigen::Index imax = 0;
    f.values().cwiseAbs().maxCoeff(&imax);
    if (f.values()[imax] < 0.0) f *= -1.0;
    const double lam = en.mu + lam0;
    s.lambdas.push_back(lam);
    // lam0 is a multiple of 1/4, so this subtraction is exact and lambda - mu == lam0 bitwise
    s.mus.push_back(lam - lam0);
    s.eigenfields.push_back(std::move(f));
    s.modes.push_back(en.ell);
    s.radial_index.push_back(en.k);
    s.degeneracies.push_back(harmonic_dimension(p.dimension, en.ell));
  }
  return s;
}

double rayleigh_quotient(const Field& v) {
  const double den = integrate(v, Weight::rho2, 2.0);
  if (!(den > 0.0)) throw DomainError("rayleigh_quotient of the zero field");
  return h1_inner(v, v) / den;
}

SpectralPosition spectral_position(double lambda, const SpectrumResult& spec, double rel_tol) {
  const double lam0 = spec.params.spectral_shift();
  if (!(lambda > lam0)) throw DomainError("spectral_position needs lambda > lambda0");
  if (spec.size() == 0 || !(lambda < spec.complete_below() * (1.0 + rel_tol)))
    throw RangeError("spectrum does not bracket lambda; raise l_max or k_per_mode");
  SpectralPosition pos;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double lk = spec.lambdas[i];
    if (std::abs(lambda - lk) <= rel_tol * std::abs(lk)) {
      pos.at_eigenvalue = true;
      pos.multiplicity += spec.degeneracies[i];
    } else if (lk < lambda) {
      pos.n += spec.degeneracies[i];
      ++pos.distinct_below;
    }
  }
  return pos;
}

}  // namespace hbn
