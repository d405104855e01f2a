#pragma once

#include <memory>
#include <vector>

#include "hbn/grid.hpp"

namespace hbn {

struct SpectrumResult {
  ModelParams params;
  std::vector<double> mus;
  std::vector<double> lambdas;
  std::vector<Field> eigenfields;
  std::vector<int> modes;
  std::vector<int> radial_index;   // 1-based position inside its angular mode
  std::vector<long> degeneracies;  // spherical-harmonic dimension of the mode
  int l_max = 0;
  int k_per_mode = 0;

  std::size_t size() const { return mus.size(); }
  // Largest lambda below which every eigenvalue (all modes) is guaranteed to be present.
  double complete_below() const;
};

// Dimension of degree-l spherical harmonics on S^{N-1}.
long harmonic_dimension(int dimension, int l);

SpectrumResult weighted_eigs(const std::shared_ptr<const RadialGrid>& grid, int l_max, int k_per_mode);

// int |grad v|^2 / int rho^2 v^2
double rayleigh_quotient(const Field& v);

struct SpectralPosition {
  long n = 0;                // #{k : lambda_k < lambda}, counted with multiplicity
  int distinct_below = 0;    // number of representative entries below lambda
  bool at_eigenvalue = false;
  long multiplicity = 0;     // total multiplicity of the matched eigenvalue
};

SpectralPosition spectral_position(double lambda, const SpectrumResult& spec, double rel_tol = 1e-8);

}  // namespace hbn
