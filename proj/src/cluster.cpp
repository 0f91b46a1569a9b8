#include "bubbleglare/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace bubbleglare {

void ClusterParams::validate() const {
  for (double w : channel_weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("channel weights must be finite and >= 0");
  if (k_min < 1) throw std::invalid_argument("k_min must be >= 1");
  if (k_max < k_min) throw std::invalid_argument("k_max must be >= k_min");
  if (k_override && *k_override < 1) throw std::invalid_argument("k override must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(k_divisor > 0.0)) throw std::invalid_argument("k divisor must be positive");
}

KSelection select_k(const Grid& value_channel, const ClusterParams& params) {
  if (value_channel.size() == 0) throw std::invalid_argument("select_k needs a non-empty value channel");
  const double spread = value_channel.maxCoeff() - value_channel.minCoeff();
  KSelection sel;
  sel.k_raw = static_cast<int>(std::floor(spread * spread / params.k_divisor));
  if (params.k_override)
    sel.k = *params.k_override;
  else if (sel.k_raw == 0)
    sel.k = 0;
  else
    sel.k = std::clamp(sel.k_raw, params.k_min, params.k_max);
  return sel;
}

FeatureMatrix flatten(const PlanarImage& img, std::span<const double> weights) {
  if (weights.size() != img.channel_count())
    throw std::invalid_argument("expected " + std::to_string(img.channel_count()) + " channel weights, got " +
                                std::to_string(weights.size()));
  const Index n = img.pixel_count();
  FeatureMatrix f(n, static_cast<Index>(img.channel_count()));
  for (std::size_t d = 0; d < img.channel_count(); ++d)
    f.col(static_cast<Index>(d)) = img.channel(d).data.reshaped<Eigen::RowMajor>().matrix() * weights[d];
  return f;
}

Eigen::VectorXi ClusterModel::cluster_sizes() const {
  Eigen::VectorXi sizes = Eigen::VectorXi::Zero(k);
  if (k == 0) return sizes;
  for (Index i = 0; i < labels.size(); ++i) ++sizes[labels.data()[i]];
  return sizes;
}

double kmeans_objective(const Eigen::Ref<const FeatureMatrix>& features, const Eigen::Ref<const Eigen::VectorXi>& labels,
                        const Eigen::Ref<const FeatureMatrix>& centroids) {
  double total = 0.0;
  for (Index i = 0; i < features.rows(); ++i) total += (features.row(i) - centroids.row(labels[i])).squaredNorm();
  return total;
}

int nearest_centroid(const Eigen::Ref<const Eigen::RowVectorXd>& point, const Eigen::Ref<const FeatureMatrix>& centroids,
                     double* squared_distance) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centroids.rows(); ++c) {
    const double d = (point - centroids.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (squared_distance) *squared_distance = best_d;
  return best;
}

namespace {

// Assigns every point to its nearest centroid and returns the objective.
double assign(const Eigen::Ref<const FeatureMatrix>& x, const FeatureMatrix& centroids, Eigen::VectorXi& labels) {
  const Index n = x.rows();
  const Index dim = x.cols();
  const Index k = centroids.rows();
  const double* cdata = centroids.data();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double* p = x.data() + i * x.outerStride();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < k; ++c) {
      const double* q = cdata + c * dim;
      double d = 0.0;
      for (Index j = 0; j < dim; ++j) {
        const double t = p[j] - q[j];
        d += t * t;
      }
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[i] = best;
    total += best_d;
  }
  return total;
}

// Cluster means in point order; empty clusters get a zero row and size 0.
FeatureMatrix cluster_means(const Eigen::Ref<const FeatureMatrix>& x, const Eigen::VectorXi& labels, Index k,
                            Eigen::VectorXi& sizes) {
  FeatureMatrix sums = FeatureMatrix::Zero(k, x.cols());
  sizes = Eigen::VectorXi::Zero(k);
  for (Index i = 0; i < x.rows(); ++i) {
    sums.row(labels[i]) += x.row(i);
    ++sizes[labels[i]];
  }
  for (Index c = 0; c < k; ++c)
    if (sizes[c] > 0) sums.row(c) /= static_cast<double>(sizes[c]);
  return sums;
}

FeatureMatrix init_random(const Eigen::Ref<const FeatureMatrix>& x, int k, std::mt19937_64& rng) {
  const Index n = x.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  FeatureMatrix c(k, x.cols());
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
    c.row(i) = x.row(order[i]);
  }
  return c;
}

FeatureMatrix init_plus_plus(const Eigen::Ref<const FeatureMatrix>& x, int k, std::mt19937_64& rng) {
  const Index n = x.rows();
  FeatureMatrix c(k, x.cols());
  std::uniform_int_distribution<Index> first(0, n - 1);
  c.row(0) = x.row(first(rng));
  Eigen::VectorXd d2(n);
  for (Index i = 0; i < n; ++i) d2[i] = (x.row(i) - c.row(0)).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 1; j < k; ++j) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total > 0.0) {
      double target = unit(rng) * total;
      for (chosen = 0; chosen < n - 1; ++chosen) {
        target -= d2[chosen];
        if (target < 0.0) break;
      }
    } else {
      chosen = first(rng);
    }
    c.row(j) = x.row(chosen);
    for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (x.row(i) - c.row(j)).squaredNorm());
  }
  return c;
}

}  // namespace

ClusterModel kmeans(const Eigen::Ref<const FeatureMatrix>& features, int k, const ClusterParams& params) {
  params.validate();
  const Index n = features.rows();
  if (k < 1 || k > n)
    throw std::invalid_argument("k = " + std::to_string(k) + " is outside [1, " + std::to_string(n) + "]");
  if (!features.allFinite()) throw std::invalid_argument("kmeans features must be finite");

  std::mt19937_64 rng(params.seed);
  FeatureMatrix centroids =
      params.init == KMeansInit::PlusPlus ? init_plus_plus(features, k, rng) : init_random(features, k, rng);

  ClusterModel model;
  Eigen::VectorXi labels(n);
  Eigen::VectorXi previous;
  Eigen::VectorXi sizes;
  model.objective_history.push_back(assign(features, centroids, labels));

  for (int it = 1; it <= params.max_iters; ++it) {
    FeatureMatrix next = cluster_means(features, labels, k, sizes);
    std::vector<Index> reseeded;
    for (Index c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        if (std::find(reseeded.begin(), reseeded.end(), i) != reseeded.end()) continue;
        const double d = (features.row(i) - centroids.row(c)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far >= 0) {
        next.row(c) = features.row(far);
        reseeded.push_back(far);
      }
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    previous = labels;
    model.objective_history.push_back(assign(features, centroids, labels));
    model.iterations_run = it;
    const bool stable = (labels.array() == previous.array()).all();
    if (reseeded.empty() && (shift < params.tol || stable)) {
      model.converged = true;
      break;
    }
  }

  // Drop clusters that are still empty, keeping label order.
  cluster_means(features, labels, k, sizes);
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int kept = 0;
  for (Index c = 0; c < k; ++c)
    if (sizes[c] > 0) remap[c] = kept++;
  if (kept < k) {
    FeatureMatrix compact(kept, centroids.cols());
    for (Index c = 0; c < k; ++c)
      if (remap[c] >= 0) compact.row(remap[c]) = centroids.row(c);
    centroids = std::move(compact);
    for (Index i = 0; i < n; ++i) labels[i] = remap[labels[i]];
  }

  model.k = kept;
  model.centroids = std::move(centroids);
  model.per_channel_cluster_means = cluster_means(features, labels, kept, sizes);
  model.labels = labels.array();
  return model;
}

ClusterModel cluster_image(const PlanarImage& img, const Grid& value_channel, const ClusterParams& params) {
  params.validate();
  if (value_channel.rows() != img.height() || value_channel.cols() != img.width())
    throw std::invalid_argument("value channel shape does not match the image");
  const KSelection sel = select_k(value_channel, params);

  std::vector<std::string> names;
  std::vector<ValueRange> ranges;
  for (const auto& ch : img.channels()) {
    names.push_back(ch.name);
    ranges.push_back(ch.range);
  }

  if (sel.no_glare()) {
    ClusterModel model;
    model.k_raw = sel.k_raw;
    model.labels = LabelGrid::Zero(img.height(), img.width());
    model.converged = true;
    model.channel_names = std::move(names);
    model.channel_ranges = std::move(ranges);
    return model;
  }

  std::vector<double> weights = params.channel_weights;
  if (weights.empty()) weights.assign(img.channel_count(), 1.0);
  const FeatureMatrix features = flatten(img, weights);
  const int k = static_cast<int>(std::min<Index>(sel.k, features.rows()));
  ClusterModel model = kmeans(features, k, params);
  model.k_raw = sel.k_raw;
  model.channel_names = std::move(names);
  model.channel_ranges = std::move(ranges);

  const Eigen::VectorXi flat = model.labels.reshaped();
  model.labels = flat.reshaped<Eigen::RowMajor>(img.height(), img.width()).array();

  FeatureMatrix means = FeatureMatrix::Zero(model.k, static_cast<Index>(img.channel_count()));
  Eigen::VectorXi sizes = Eigen::VectorXi::Zero(model.k);
  for (Index r = 0; r < img.height(); ++r)
    for (Index c = 0; c < img.width(); ++c) {
      const int l = model.labels(r, c);
      ++sizes[l];
      for (std::size_t d = 0; d < img.channel_count(); ++d)
        means(l, static_cast<Index>(d)) += img.channel(d).data(r, c);
    }
  for (Index l = 0; l < model.k; ++l) means.row(l) /= static_cast<double>(sizes[l]);
  model.per_channel_cluster_means = std::move(means);
  return model;
}

}  // namespace bubbleglare
