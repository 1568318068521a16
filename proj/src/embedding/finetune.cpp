#include "mindface/embedding/finetune.hpp"

#include "mindface/errors.hpp"

#include <algorithm>
#include <numeric>

namespace mindface::embedding {

double triplet_batch_loss_grad(EmbeddingNet& net, std::span<const Triplet> batch, double margin) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  const int in = net.config().input_dim;
  Matrix xa(n, in), xp(n, in), xn(n, in);
  for (Eigen::Index i = 0; i < n; ++i) {
    xa.row(i) = batch[i].anchor.transpose();
    xp.row(i) = batch[i].positive.transpose();
    xn.row(i) = batch[i].negative.transpose();
  }
  EmbeddingCache ca, cp, cn;
  const Matrix ea = net.forward(xa, ca);
  const Matrix ep = net.forward(xp, cp);
  const Matrix en = net.forward(xn, cn);
  Matrix da = Matrix::Zero(n, ea.cols());
  Matrix dp = Matrix::Zero(n, ea.cols());
  Matrix dn = Matrix::Zero(n, ea.cols());
  double total = 0.0;
  const double scale = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double raw = (ea.row(i) - ep.row(i)).squaredNorm() - (ea.row(i) - en.row(i)).squaredNorm() + margin;
    if (raw <= 0.0) continue;
    total += raw;
    // d/da = 2(a-p) - 2(a-n) = 2(n-p)
    da.row(i) = 2.0 * scale * (en.row(i) - ep.row(i));
    dp.row(i) = -2.0 * scale * (ea.row(i) - ep.row(i));
    dn.row(i) = 2.0 * scale * (ea.row(i) - en.row(i));
  }
  net.backward(da, ca, nullptr);
  net.backward(dp, cp, nullptr);
  net.backward(dn, cn, nullptr);
  return total * scale;
}

FinetuneResult finetune(const EmbeddingNet& net, const std::vector<Triplet>& triplets,
                        const FinetuneConfig& cfg) {
  if (triplets.empty()) throw InvalidArgument("finetune: empty triplet set");
  if (cfg.batch < 1 || cfg.epochs < 0) throw ConfigError("finetune: invalid batch/epochs");
  FinetuneResult result;
  result.net = net;
  result.initial_loss = mean_triplet_loss(net, triplets, cfg.margin);
  result.final_loss = result.initial_loss;

  EmbeddingNet work = net;
  nn::Adam adam(cfg.adam);
  Rng rng = make_rng(cfg.seed);
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Triplet> batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(triplets[order[i]]);
      const nn::ParamRefs params = work.params();
      nn::zero_grads(params);
      triplet_batch_loss_grad(work, batch, cfg.margin);
      adam.step(params);
    }
    const double loss = mean_triplet_loss(work, triplets, cfg.margin);
    result.epoch_losses.push_back(loss);
    if (loss < result.final_loss) {
      result.final_loss = loss;
      result.net = work;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace mindface::embedding
