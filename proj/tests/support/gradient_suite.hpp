#pragma once

#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "vads/model/cwgan.hpp"
#include "vads/model/vdkl.hpp"
#include "vads/model/vosu.hpp"

namespace vads::check {

struct GradCase {
  std::string loss;
  GradCheckResult result;
};

/// Finite-difference checks of every training loss on float64 networks of
/// hidden width 16 and a batch of 10.
inline std::vector<GradCase> run_gradient_suite(std::uint64_t seed = 11) {
  using model::Index;
  const Index d_v = 6, d_a = 4, d_l = 5, n_classes = 5, hidden = 16;
  const std::vector<int> labels = {0, 0, 1, 1, 2, 2, 3, 3, 0, 1};
  const Index n = static_cast<Index>(labels.size());

  Rng rng(seed);
  Rng data_rng = rng.derive("data");
  const Matrix<double> x = nn::normal_matrix<double>(data_rng, n, d_v);
  const Matrix<double> table = nn::uniform_matrix<double>(data_rng, n_classes, d_a);
  const Matrix<double> eps = nn::normal_matrix<double>(data_rng, n, d_a);

  Rng init = rng.derive("init");
  Rng scr = rng.derive("scramble");
  model::Vdkl<double> vdkl({d_v, d_a, d_l, d_a, hidden}, 0.9, 0.15, PriorForm::learned, init);
  scramble(vdkl.params(), scr, 0.5);
  model::Vosu<double> vosu({d_v, d_a, hidden}, init, model::SumInit::random);
  scramble(vosu.vsp_params(), scr, 0.5);
  scramble(vosu.sum_params(), scr, 0.5);
  model::Gan<double> gan({d_v, d_a, hidden, hidden, nn::Activation::relu}, init, init);
  scramble(gan.generator_params(), scr, 0.5);
  scramble(gan.critic_params(), scr, 0.5);
  model::FrozenClassifier<double> classifier{nn::normal_matrix<double>(scr, d_v, 4, 0.5),
                                             nn::normal_matrix<double>(scr, 1, 4, 0.5)};

  Rng pos_rng = rng.derive("positives");
  const auto positives = model::pick_positives(labels, pos_rng);

  std::vector<GradCase> out;
  out.push_back({"L_con", gradcheck(
                              [&] {
                                return model::contrastive_loss(vdkl.latent(nn::constant(x)), std::span<const int>(labels),
                                                               0.15, std::span<const Index>(positives));
                              },
                              {{"vdkl", &vdkl.params()}})});
  out.push_back({"L_kl", gradcheck(
                             [&] {
                               const auto enc = vdkl.encode_with_noise(nn::constant(x), eps);
                               return model::kl_loss(enc.mu, enc.log_var);
                             },
                             {{"vdkl", &vdkl.params()}})});
  out.push_back({"L_ce", gradcheck([&] { return vosu.stage1_loss(nn::constant(x), labels, table); },
                                   {{"vsp", &vosu.vsp_params()}, {"sum", &vosu.sum_params()}})});
  out.push_back({"L_sc", gradcheck([&] { return model::consistency_loss(vosu, vosu.apply_sum(nn::constant(table))); },
                                   {{"sum", &vosu.sum_params()}})});

  Matrix<double> cond(n, d_a);
  for (Index i = 0; i < n; ++i) cond.row(i) = table.row(labels[static_cast<std::size_t>(i)]);
  const Matrix<double> fake = nn::normal_matrix<double>(data_rng, n, d_v);
  const Matrix<double> u = nn::uniform_matrix<double>(data_rng, n, 1);
  out.push_back({"critic (with gradient penalty)",
                 gradcheck([&] { return model::critic_loss_with(gan, x, fake, cond, 10.0, u).total; },
                           {{"critic", &gan.critic_params()}})});
  out.push_back({"gradient penalty",
                 gradcheck([&] { return model::gradient_penalty(gan, model::interpolate(x, fake, u), nn::constant(cond)); },
                           {{"critic", &gan.critic_params()}})});

  ExperimentConfig config;
  model::StepModels<double> models{&gan, &vdkl, &vosu, &classifier};
  model::StepBatch<double> batch;
  batch.features = x;
  batch.labels = labels;
  batch.cls_targets = {0, 0, 1, 1, 2, 2, 3, 3, 0, 1};
  batch.table = table;
  const Rng encode_base = rng.derive("encode");
  const Rng noise_base = rng.derive("noise");
  out.push_back({"L_total", gradcheck(
                                [&] {
                                  Rng e = encode_base;
                                  Rng z = noise_base;
                                  return model::generator_loss(models, batch, config, e, z).total;
                                },
                                {{"generator", &gan.generator_params()},
                                 {"vdkl", &vdkl.params()},
                                 {"sum", &vosu.sum_params()}})});
  return out;
}

}  // namespace vads::check
