#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bubbleglare/image.hpp"

namespace bubbleglare {

/// N x D feature matrix, one pixel per row in row-major pixel order.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class KMeansInit { Random, PlusPlus };

struct ClusterParams {
  /// One multiplier per image channel; empty means all ones.
  std::vector<double> channel_weights;
  std::optional<int> k_override;
  int k_min = 2;
  int k_max = 16;
  std::uint64_t seed = 0;
  /// Stop once no centroid moves farther than this (weighted feature units).
  double tol = 1e-3;
  int max_iters = 100;
  /// Denominator of the value-spread rule for K.
  double k_divisor = 266.0;
  KMeansInit init = KMeansInit::Random;

  void validate() const;
  bool operator==(const ClusterParams&) const = default;
};

struct KSelection {
  /// floor((Vmax - Vmin)^2 / k_divisor) before clamping.
  int k_raw = 0;
  /// Cluster count to use; 0 marks a frame without glare.
  int k = 0;
  bool no_glare() const { return k == 0; }
};

/// Chooses K from the spread of the HSV value channel (0..100 scale).
/// K = 0 (no glare) when the raw count is zero and no override is set;
/// otherwise clamp(k_raw, k_min, k_max), or the override. Throws
/// std::invalid_argument on an empty channel.
KSelection select_k(const Grid& value_channel, const ClusterParams& params);

/// Flattens to N x C features, feature[d] = value[d] * weights[d].
FeatureMatrix flatten(const PlanarImage& img, std::span<const double> weights);

struct ClusterModel {
  int k = 0;
  int k_raw = 0;
  /// K x D centroids in weighted feature space.
  FeatureMatrix centroids;
  /// Cluster index per pixel; N x 1 straight out of kmeans(), image-shaped
  /// from cluster_image().
  LabelGrid labels;
  int iterations_run = 0;
  bool converged = false;
  /// K x D mean of each channel over the cluster's pixels, unweighted.
  FeatureMatrix per_channel_cluster_means;
  /// Objective after every assignment step.
  std::vector<double> objective_history;
  std::vector<std::string> channel_names;
  std::vector<ValueRange> channel_ranges;

  bool no_glare() const { return k == 0; }
  double objective() const { return objective_history.empty() ? 0.0 : objective_history.back(); }
  Eigen::VectorXi cluster_sizes() const;
};

/// Squared Euclidean cost of `labels` under `centroids`.
double kmeans_objective(const Eigen::Ref<const FeatureMatrix>& features, const Eigen::Ref<const Eigen::VectorXi>& labels,
                        const Eigen::Ref<const FeatureMatrix>& centroids);

/// Index of the nearest centroid; ties go to the lowest index.
int nearest_centroid(const Eigen::Ref<const Eigen::RowVectorXd>& point, const Eigen::Ref<const FeatureMatrix>& centroids,
                     double* squared_distance = nullptr);

/// Lloyd's algorithm from K distinct randomly drawn points (or k-means++).
/// An emptied cluster is reseeded at the point farthest from its old
/// centroid; clusters still empty at the end are dropped. Deterministic for
/// a fixed seed. Throws std::invalid_argument when k is out of [1, N] or a
/// feature is not finite.
ClusterModel kmeans(const Eigen::Ref<const FeatureMatrix>& features, int k, const ClusterParams& params);

/// select_k on `value_channel`, then kmeans over the weighted features of
/// `img`. Fills per-channel means in original units and reshapes labels to
/// the image. A no-glare frame yields a model with k = 0 and every label 0.
ClusterModel cluster_image(const PlanarImage& img, const Grid& value_channel, const ClusterParams& params);

}  // namespace bubbleglare
