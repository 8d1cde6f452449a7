#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "saso/scene.hpp"
#include "saso/spatial.hpp"

// Multi-scale semantic association: per-radius class co-occurrence maps
// gathered from labeled scenes, used to re-score per-point predictions from
// the predicted labels of their neighbors.
namespace saso::msa {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

enum class Normalization { min_max, sum };

struct MsaConfig {
  std::vector<double> scales = {0.2, 0.3, 0.5};   // ball radii, meters
  std::vector<double> weights = {0.5, 0.3, 0.2};  // per-scale alpha
  Normalization normalization = Normalization::min_max;
  bool pooled_counts = false;  // map rows from pooled neighbor counts instead of per-point means
  bool exclude_self = false;

  // Throws Error on mismatched lengths, non-positive radii or negative weights.
  void validate() const;
};

struct AssociationMap {
  double scale = 0;
  Matrix matrix;                 // C x C, row r: mean neighborhood class distribution around class r
  std::vector<double> support;   // contributing points per row
  std::vector<bool> absent;      // row had no support and was set uniform

  int num_classes() const { return static_cast<int>(matrix.rows()); }
};

std::vector<AssociationMap> build_maps(std::span<const Scene> scenes, int num_classes,
                                       const MsaConfig& cfg);

// Row argmax with ties to the lowest index.
std::vector<int> argmax_rows(const Matrix& scores);
Matrix onehot_predictions(const Matrix& p_sem);
Matrix onehot(std::span<const int> labels, int num_classes);

// Row i: mean of o_sem over the ball of radius `scale` around point i.
// An empty neighborhood (only possible with exclude_self) yields a uniform row.
Matrix neighborhood_profile(const GridIndex& index, const Matrix& o_sem, double scale,
                            bool exclude_self = false);

// softmax(1 - normalize(||p_corr - M_r||^2 over rows r)).
RowVector surround_probability(const RowVector& p_corr, const AssociationMap& map,
                               Normalization norm = Normalization::min_max);

struct RefineResult {
  Matrix scores;            // P_sem + sum_k alpha_k * P_surr^k (not normalized)
  std::vector<int> labels;  // row argmax of scores
};

RefineResult refine(const Matrix& p_sem, std::span<const AssociationMap> maps,
                    const MsaConfig& cfg, std::span<const Vec3> points);

std::string maps_to_json(std::span<const AssociationMap> maps, const MsaConfig& cfg);
std::vector<AssociationMap> maps_from_json(const std::string& text, MsaConfig* cfg = nullptr);
void save_maps(const std::filesystem::path& path, std::span<const AssociationMap> maps,
               const MsaConfig& cfg);
std::vector<AssociationMap> load_maps(const std::filesystem::path& path, MsaConfig* cfg = nullptr);

}  // namespace saso::msa
