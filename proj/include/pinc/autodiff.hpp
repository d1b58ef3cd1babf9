#pragma once

#include <functional>
#include <string>
#include <utility>

#include "pinc/dual.hpp"
#include "pinc/losses.hpp"
#include "pinc/model.hpp"
#include "pinc/tape.hpp"

namespace pinc {

/// Reusable buffers for gradient evaluation (one per thread).
struct GradWorkspace {
    Tape tape;
    std::vector<Var> theta;
    std::vector<double> adjoint;
};

/// A scalar loss split into independent shards, each a pure function of the
/// parameters. loss = sum of shard sums / sum of shard term counts; shards
/// are taped one at a time and accumulated in index order, so the result is
/// deterministic and the tape stays small.
struct ShardedLoss {
    std::string name;
    std::size_t shards = 0;
    std::function<std::pair<Var, std::size_t>(std::size_t, const ParamView<Var>&)> eval;
};

/// Exact reverse-mode gradient of the loss with respect to every parameter.
/// Throws NumericError naming the loss on non-finite values or gradients.
std::pair<double, GradientVector> loss_gradient(const ModelParams& params,
                                                const ShardedLoss& loss, GradWorkspace& ws);

/// The five training losses as sharded evaluators over a batch.
ShardedLoss make_sharded_loss(LossKind kind, const ModelParams& params, const Batch& batch,
                              int n_pred);

/// Convenience: value and gradient of one loss over a batch.
std::pair<double, GradientVector> loss_value_and_grad(LossKind kind,
                                                      const ModelParams& params,
                                                      const Batch& batch, int n_pred,
                                                      GradWorkspace& ws);

} // namespace pinc
