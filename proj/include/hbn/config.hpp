#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbn/bubbles.hpp"
#include "hbn/flow.hpp"
#include "hbn/grid.hpp"
#include "hbn/spectrum.hpp"

namespace hbn {

// Either a number or a spectral-relative expression:
//   mid(i,j)      midpoint of (lambda_i, lambda_j)
//   frac(i,j,x)   lambda_i + x (lambda_j - lambda_i)
//   scale(k,c)    c * lambda_k
// Index 0 is lambda0 = N(N-2)/4; k >= 1 counts eigenvalues with multiplicity.
struct LambdaSpec {
  std::string text = "mid(0,1)";

  double resolve(const SpectrumResult& spec) const;
  // lambda_k with multiplicity, lambda_0 = N(N-2)/4.
  static double indexed(const SpectrumResult& spec, int k);
};

struct RunConfig {
  ModelParams model;
  int n = 512;
  Grading grading = Grading::uniform;
  double beta = 0.0;
  int l_max = 2;
  int k_per_mode = 4;
  int axisym_m = 128;
  LambdaSpec lambda;
  FlowConfig flow;
  std::string from = "bubble";  // bubble | eigen | random
  std::vector<double> epsilon_list;
  CutoffParams cutoff{0.0, 0.0, CutoffProfile::smooth_bump};  // zeros mean R_e and R_e/2
  int surface_samples = 9;
  int top_k = 0;
  std::string surface_kind = "auto";  // auto | sphere | joined
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  static RunConfig defaults();
  // Throws ConfigError naming the offending field (and line for syntax errors).
  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  nlohmann::json to_json() const;
};

}  // namespace hbn
